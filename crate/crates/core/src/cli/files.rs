//! JSON input files: parameters, initial-data grids and states.

use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::model::{AffineParams, AtomicMeasure, LinearDrift, MatrixAtom, MatrixAtomicMeasure, ScalarAtom};
use crate::symcore::{svec_len, CSymMatrix, Mat, SymMatrix};

pub const PARAM_FILE_VERSION: u32 = 1;

/// Malformed or inconsistent input, qualified by the offending field.
#[derive(Debug, thiserror::Error)]
#[error("{file}: {path}: {message}")]
pub struct InputError {
    pub file: String,
    pub path: String,
    pub message: String,
}

impl InputError {
    fn new(file: &str, path: impl Into<String>, message: impl Into<String>) -> Self {
        InputError { file: file.to_string(), path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DriftSpec {
    Lyapunov { beta: Vec<Vec<f64>> },
    General { matrix: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MAtomSpec {
    pub xi: SymMatrix,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MuAtomSpec {
    pub xi: SymMatrix,
    pub weight_matrix: SymMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atoms<T> {
    pub atoms: Vec<T>,
}

impl<T> Default for Atoms<T> {
    fn default() -> Self {
        Atoms { atoms: Vec::new() }
    }
}

/// On-disk parameter set. Field order here is the canonical key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub version: u32,
    pub d: usize,
    pub alpha: SymMatrix,
    pub b: SymMatrix,
    pub drift: DriftSpec,
    #[serde(default)]
    pub c: f64,
    pub gamma: Option<SymMatrix>,
    #[serde(default)]
    pub m: Atoms<MAtomSpec>,
    #[serde(default)]
    pub mu: Atoms<MuAtomSpec>,
}

fn check_dim(file: &str, path: &str, got: usize, d: usize) -> Result<(), InputError> {
    if got != d {
        return Err(InputError::new(file, path, format!("expected a {d}x{d} matrix, got {got}x{got}")));
    }
    Ok(())
}

fn square(file: &str, path: &str, rows: &[Vec<f64>], n: usize) -> Result<Mat, InputError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(InputError::new(file, path, format!("expected a {n}x{n} matrix")));
    }
    Mat::from_rows(rows).map_err(|e| InputError::new(file, path, e.to_string()))
}

impl ParamFile {
    /// Shape checks only. Admissibility is the job of `validate`.
    pub fn to_params(&self, file: &str) -> Result<AffineParams, InputError> {
        if self.version != PARAM_FILE_VERSION {
            return Err(InputError::new(file, "version", format!("unsupported version {}, expected {PARAM_FILE_VERSION}", self.version)));
        }
        let d = self.d;
        if d < 2 {
            return Err(InputError::new(file, "d", format!("dimension must be at least 2, got {d}")));
        }
        check_dim(file, "alpha", self.alpha.dim(), d)?;
        check_dim(file, "b", self.b.dim(), d)?;
        let gamma = self.gamma.clone().unwrap_or_else(|| SymMatrix::zeros(d));
        check_dim(file, "gamma", gamma.dim(), d)?;
        let drift = match &self.drift {
            DriftSpec::Lyapunov { beta } => LinearDrift::lyapunov(square(file, "drift.beta", beta, d)?),
            DriftSpec::General { matrix } => LinearDrift::general(square(file, "drift.matrix", matrix, svec_len(d))?),
        };
        let mut m = Vec::new();
        for (k, a) in self.m.atoms.iter().enumerate() {
            check_dim(file, &format!("m.atoms[{k}].xi"), a.xi.dim(), d)?;
            if !a.weight.is_finite() {
                return Err(InputError::new(file, format!("m.atoms[{k}].weight"), "must be finite"));
            }
            m.push(ScalarAtom { xi: a.xi.clone(), weight: a.weight });
        }
        let mut mu = Vec::new();
        for (k, a) in self.mu.atoms.iter().enumerate() {
            check_dim(file, &format!("mu.atoms[{k}].xi"), a.xi.dim(), d)?;
            check_dim(file, &format!("mu.atoms[{k}].weightMatrix"), a.weight_matrix.dim(), d)?;
            mu.push(MatrixAtom { xi: a.xi.clone(), weight_matrix: a.weight_matrix.clone() });
        }
        for (name, x) in [("alpha", &self.alpha), ("b", &self.b), ("gamma", &gamma)] {
            if !x.is_finite() {
                return Err(InputError::new(file, name, "entries must be finite"));
            }
        }
        if !self.c.is_finite() {
            return Err(InputError::new(file, "c", "must be finite"));
        }
        Ok(AffineParams {
            d,
            alpha: self.alpha.clone(),
            b: self.b.clone(),
            drift,
            c: self.c,
            gamma,
            m: AtomicMeasure::new(m),
            mu: MatrixAtomicMeasure::new(mu),
        })
    }

    pub fn from_params(p: &AffineParams) -> Self {
        ParamFile {
            version: PARAM_FILE_VERSION,
            d: p.d,
            alpha: p.alpha.clone(),
            b: p.b.clone(),
            drift: match &p.drift {
                LinearDrift::Lyapunov { beta } => DriftSpec::Lyapunov { beta: beta.to_rows() },
                LinearDrift::General { matrix } => DriftSpec::General { matrix: matrix.to_rows() },
            },
            c: p.c,
            gamma: Some(p.gamma.clone()),
            m: Atoms { atoms: p.m.atoms.iter().map(|a| MAtomSpec { xi: a.xi.clone(), weight: a.weight }).collect() },
            mu: Atoms {
                atoms: p.mu.atoms.iter().map(|a| MuAtomSpec { xi: a.xi.clone(), weight_matrix: a.weight_matrix.clone() }).collect(),
            },
        }
    }
}

/// Writes floats with 17 significant digits so that parsing and writing
/// again reproduces the same bytes.
struct Canonical;

impl serde_json::ser::Formatter for Canonical {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Canonical JSON text of a parameter file.
pub fn to_canonical_json(pf: &ParamFile) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Canonical);
    pf.serialize(&mut ser).expect("in-memory serialization");
    let mut s = String::from_utf8(out).expect("JSON is UTF-8");
    s.push('\n');
    s
}

/// Deserializes `text`, reporting the JSON path of the first failure.
pub fn parse_json<T: DeserializeOwned>(file: &str, text: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = match e.path().to_string() {
            p if p == "?" => "(document)".to_string(),
            p => p,
        };
        InputError::new(file, path, e.into_inner().to_string())
    })
}

pub fn read_text(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError::new(&path.display().to_string(), ".", e.to_string()))
}

pub fn parse_params(file: &str, text: &str) -> Result<AffineParams, InputError> {
    parse_json::<ParamFile>(file, text)?.to_params(file)
}

pub fn load_params(path: &Path) -> Result<AffineParams, InputError> {
    parse_params(&path.display().to_string(), &read_text(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UEntry {
    pub re: SymMatrix,
    pub im: Option<SymMatrix>,
}

/// Initial data `u` (complex symmetric, `Re u` PSD) and evaluation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UGrid {
    pub u: Vec<UEntry>,
    #[serde(default)]
    pub times: Vec<f64>,
}

impl UGrid {
    pub fn to_matrices(&self, file: &str, d: usize) -> Result<Vec<CSymMatrix>, InputError> {
        let mut out = Vec::with_capacity(self.u.len());
        for (k, e) in self.u.iter().enumerate() {
            check_dim(file, &format!("u[{k}].re"), e.re.dim(), d)?;
            let im = e.im.clone().unwrap_or_else(|| SymMatrix::zeros(d));
            check_dim(file, &format!("u[{k}].im"), im.dim(), d)?;
            if !e.re.is_finite() || !im.is_finite() {
                return Err(InputError::new(file, format!("u[{k}]"), "entries must be finite"));
            }
            if !e.re.is_psd(crate::symcore::PSD_TOL) {
                return Err(InputError::new(file, format!("u[{k}].re"), "must be positive semidefinite"));
            }
            out.push(CSymMatrix { re: e.re.clone(), im });
        }
        Ok(out)
    }
}

/// Evaluation times must be finite, nonnegative and ascending.
pub fn check_times(file: &str, times: &[f64]) -> Result<(), InputError> {
    for (k, t) in times.iter().enumerate() {
        if !(t.is_finite() && *t >= 0.0) {
            return Err(InputError::new(file, format!("times[{k}]"), format!("must be finite and nonnegative, got {t}")));
        }
        if k > 0 && *t < times[k - 1] {
            return Err(InputError::new(file, format!("times[{k}]"), "times must be ascending"));
        }
    }
    Ok(())
}

pub fn load_ugrid(path: &Path, d: usize) -> Result<(Vec<CSymMatrix>, Vec<f64>), InputError> {
    let file = path.display().to_string();
    let grid: UGrid = parse_json(&file, &read_text(path)?)?;
    check_times(&file, &grid.times)?;
    Ok((grid.to_matrices(&file, d)?, grid.times))
}

/// State `x`: a PSD matrix as nested rows.
pub fn load_state(path: &Path, d: usize) -> Result<SymMatrix, InputError> {
    let file = path.display().to_string();
    let x: SymMatrix = parse_json(&file, &read_text(path)?)?;
    check_dim(&file, ".", x.dim(), d)?;
    if !x.is_finite() || !x.is_psd(crate::symcore::PSD_TOL) {
        return Err(InputError::new(&file, ".", "state must be a finite positive semidefinite matrix"));
    }
    Ok(x)
}
