//! Property tests. Every case draws a seed and builds its data from it, so
//! failures shrink to a single reproducible seed.

mod common;

use common::*;
use proptest::prelude::*;
use psd_affine::cli::files::{parse_params, to_canonical_json, ParamFile};
use psd_affine::closedform::{flow_omega, log_det_tracked, mbajd_psi, MBAJDSpec};
use psd_affine::model::{detruncate, growth_constant, jump_transform_m, jump_transform_mu, truncate, truncation};
use psd_affine::montecarlo::{estimate_transform, step, SimConfig};
use psd_affine::riccati::{generator_exp, solve, transform, SolverConfig};
use psd_affine::symcore::{
    boundary_pairs, lemma_b_form, psd_project, riccati_quadratic_real, sqrt_psd, CSymMatrix, SymMatrix,
};
use rand::Rng;

fn cfg() -> SolverConfig {
    SolverConfig::with_tolerances(1e-11, 1e-13)
}

fn dim(seed: u64) -> usize {
    2 + (seed % 3) as usize
}

fn alpha_of(seed: u64) -> Alpha {
    if seed % 2 == 0 {
        Alpha::Zero
    } else {
        Alpha::Invertible
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = dim(seed);
        let x = random_sym(&mut rng, d, 2.0);
        let p = psd_project(&x).unwrap();
        prop_assert!(psd_project(&p).unwrap().sub(&p).frobenius_norm() <= 1e-12 * (1.0 + p.frobenius_norm()));
        let q = random_psd_rank(&mut rng, d, d - 1, 1.0);
        prop_assert!(psd_project(&q).unwrap().sub(&q).frobenius_norm() <= 1e-12 * (1.0 + q.frobenius_norm()));
    }

    #[test]
    fn sqrt_squares_back(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = dim(seed);
        let rank = rng.random_range(0..=d);
        let x = random_psd_rank(&mut rng, d, rank, 3.0);
        let r = sqrt_psd(&x).unwrap();
        prop_assert!(r.is_psd(1e-12));
        let back = SymMatrix::symmetrize(&r.as_mat().matmul(r.as_mat()));
        prop_assert!(back.sub(&x).frobenius_norm() <= 1e-10 * (1.0 + x.frobenius_norm()));
    }

    #[test]
    fn spectrum_reconstructs(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let x = random_sym(&mut rng, dim(seed), 1.0);
        let s = x.eigen().unwrap();
        prop_assert!(s.reconstruct().sub(&x).frobenius_norm() <= 1e-12 * (1.0 + x.frobenius_norm()));
    }

    #[test]
    fn boundary_pairs_are_complementary(seed in any::<u64>()) {
        let mut rng = rng(seed);
        for pair in boundary_pairs(dim(seed), 8, &mut rng).unwrap() {
            prop_assert!(pair.complementarity_residual() <= 1e-10, "{}", pair.label);
        }
    }

    #[test]
    fn norm_is_bounded_by_trace(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = 2 + (seed % 5) as usize;
        let rank = rng.random_range(0..=d);
        let xi = random_psd_rank(&mut rng, d, rank, 5.0);
        prop_assert!(xi.frobenius_norm() <= xi.trace() + 1e-12);
    }

    #[test]
    fn trace_forms_are_nonnegative_on_the_tube(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = dim(seed);
        let x = random_tube_u(&mut rng, d, 1.0, 1.0);
        let c = rng.random_range(0.0..3.0);
        prop_assert!(riccati_quadratic_real(&x, &SymMatrix::identity(d).scale(c)).unwrap() >= -1e-12);
        let a: Vec<Vec<num_complex::Complex64>> = (0..3)
            .map(|_| (0..d).map(|_| num_complex::Complex64::new(normal(&mut rng), normal(&mut rng))).collect())
            .collect();
        prop_assert!(lemma_b_form(&x, &a).unwrap().value >= -1e-12);
    }

    #[test]
    fn jump_transforms_are_bounded(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = dim(seed);
        let p = random_params(&mut rng, d, Shape::new(alpha_of(seed)));
        let u = random_tube_u(&mut rng, d, 2.0, 2.0);
        let mass: f64 = p.m.atoms.iter().map(|a| a.weight).sum();
        prop_assert!(jump_transform_m(&p.m, &u).unwrap().norm() <= 2.0 * mass + 1e-12);
        let tr: f64 = p.mu.atoms.iter().map(|a| a.weight_matrix.trace()).sum();
        prop_assert!(cnorm(&jump_transform_mu(&p.mu, &u).unwrap()) <= 2.0 * tr + 1e-12);
    }

    #[test]
    fn truncation_function(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let scale = rng.random_range(0.01..10.0);
        let xi = random_psd_rank(&mut rng, dim(seed), 2, scale);
        let chi = truncation(&xi);
        prop_assert!(chi.frobenius_norm() <= 1.0 + 1e-12);
        if xi.frobenius_norm() <= 1.0 {
            prop_assert_eq!(chi, xi);
        }
    }

    #[test]
    fn truncation_round_trip(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = dim(seed);
        let shape = Shape { mu_both_sides: true, ..Shape::new(alpha_of(seed)) };
        let p = random_params(&mut rng, d, shape);
        let tp = truncate(&p).unwrap();
        let again = truncate(&detruncate(&tp).unwrap()).unwrap();
        let gap = (&again.drift_tilde.to_matrix(d).unwrap() - &tp.drift_tilde.to_matrix(d).unwrap()).frobenius_norm();
        prop_assert!(gap <= 1e-12);
    }

    #[test]
    fn growth_constant_grows_with_jumps_and_killing(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mut p = random_params(&mut rng, dim(seed), Shape::new(alpha_of(seed)));
        let c = growth_constant(&p).unwrap().c;
        for a in &mut p.mu.atoms {
            a.weight_matrix = a.weight_matrix.scale(2.0);
        }
        p.gamma = p.gamma.scale(2.0);
        prop_assert!(growth_constant(&p).unwrap().c >= c);
    }

    #[test]
    fn flow_is_a_semigroup(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let beta = random_mat(&mut rng, 2, 0.5);
        let x = random_sym(&mut rng, 2, 1.0);
        let (t, s) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let lhs = flow_omega(&beta, &x, t + s).unwrap();
        let rhs = flow_omega(&beta, &flow_omega(&beta, &x, s).unwrap(), t).unwrap();
        prop_assert!(lhs.sub(&rhs).frobenius_norm() <= 1e-10 * (1.0 + lhs.frobenius_norm()));
    }

    #[test]
    fn param_files_round_trip(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_params(&mut rng, dim(seed), Shape::new(alpha_of(seed)));
        let text = to_canonical_json(&ParamFile::from_params(&p));
        let back = parse_params("<memory>", &text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(to_canonical_json(&ParamFile::from_params(&back)), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riccati_flow_property(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = 2 + (seed % 2) as usize;
        let p = random_params(&mut rng, d, Shape::new(alpha_of(seed)));
        let u = random_interior_u(&mut rng, d);
        let (t, s) = (rng.random_range(0.05..0.6), rng.random_range(0.05..0.6));
        let first = solve(&p, &u, t, &cfg()).unwrap();
        let whole = solve(&p, &u, t + s, &cfg()).unwrap();
        let second = solve(&p, first.psi_end(), s, &cfg()).unwrap();
        prop_assert!(cdist(whole.psi_end(), second.psi_end()) <= 1e-6 * (1.0 + cnorm(&u)));
        prop_assert!((whole.phi_end() - first.phi_end() - second.phi_end()).norm() <= 1e-6);
        // dense output agrees with a fresh solve
        let (phi_t, psi_t) = whole.eval(t).unwrap();
        prop_assert!(cdist(&psi_t, first.psi_end()) <= 1e-6 * (1.0 + cnorm(&u)));
        prop_assert!((phi_t - first.phi_end()).norm() <= 1e-6);
    }

    #[test]
    fn detruncation_leaves_solutions_unchanged(seed in any::<u64>()) {
        use psd_affine::riccati::{integrate, RiccatiRhs, TruncatedRhs};
        let mut rng = rng(seed);
        let d = 2 + (seed % 2) as usize;
        let shape = Shape { mu_both_sides: true, ..Shape::new(alpha_of(seed)) };
        let tp = truncate(&random_params(&mut rng, d, shape)).unwrap();
        let u = random_interior_u(&mut rng, d);
        let c = SolverConfig::with_tolerances(1e-13, 1e-15);
        let a = integrate(&TruncatedRhs::new(&tp, false), &u, 0.7, &c).unwrap();
        let b = integrate(&RiccatiRhs::new(&detruncate(&tp).unwrap()), &u, 0.7, &c).unwrap();
        prop_assert!(cdist(a.psi_end(), b.psi_end()) <= 1e-9);
        prop_assert!((a.phi_end() - b.phi_end()).norm() <= 1e-9);
    }

    #[test]
    fn gronwall_bound_and_interior(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = 2 + (seed % 2) as usize;
        let p = random_params(&mut rng, d, Shape::new(alpha_of(seed)));
        let u = random_interior_u(&mut rng, d);
        let c = growth_constant(&p).unwrap().c;
        let sol = solve(&p, &u, 2.0, &SolverConfig::default()).unwrap();
        let base = (1.0 + cnorm(&u).powi(2)).sqrt();
        for (t, psi) in sol.times.iter().zip(&sol.psi) {
            prop_assert!(cnorm(psi) <= (c * t).exp() * base * (1.0 + 1e-9));
            prop_assert!(psi.re.min_eigenvalue().unwrap() > 0.0);
        }
    }

    #[test]
    fn conservative_transform_has_modulus_at_most_one(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = 2 + (seed % 2) as usize;
        let p = random_params(&mut rng, d, Shape::conservative(alpha_of(seed)));
        let u = random_tube_u(&mut rng, d, 1.0, 2.0);
        let x = random_psd(&mut rng, d, 2.0);
        let t = rng.random_range(0.1..2.0);
        prop_assert!(transform(&p, &u, &x, t, &cfg()).unwrap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn psi_is_monotone_in_the_cone(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = 2 + (seed % 2) as usize;
        let p = random_params(&mut rng, d, Shape::new(alpha_of(seed)));
        let u2 = random_pd(&mut rng, d, 1.0);
        let rank = rng.random_range(0..=d);
        let u1 = u2.add(&random_psd_rank(&mut rng, d, rank, 1.0));
        let t = rng.random_range(0.1..2.0);
        let a = solve(&p, &CSymMatrix::from_real(u1), t, &cfg()).unwrap();
        let b = solve(&p, &CSymMatrix::from_real(u2), t, &cfg()).unwrap();
        prop_assert!(a.psi_end().re.sub(&b.psi_end().re).min_eigenvalue().unwrap() >= -1e-8);
    }

    #[test]
    fn generator_matches_time_derivative(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = 2 + (seed % 2) as usize;
        let p = random_params(&mut rng, d, Shape::new(alpha_of(seed)));
        let u = random_interior_u(&mut rng, d);
        let x = random_pd(&mut rng, d, 1.0);
        let c = SolverConfig::with_tolerances(1e-13, 1e-15);
        let f0 = transform(&p, &u, &x, 0.0, &c).unwrap();
        let fd = |h: f64| (transform(&p, &u, &x, h, &c).unwrap() - f0) / h;
        // one Richardson step removes the O(h) term, leaving O(h^2)
        let h = 1e-4;
        let estimate = 2.0 * fd(h / 2.0) - fd(h);
        let g = generator_exp(&p, &u, &x).unwrap();
        prop_assert!((estimate - g).norm() <= 1e-4 * (1.0 + g.norm()), "{estimate} vs {g}");
    }

    #[test]
    fn closed_form_determinant_stays_off_zero(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = 2 + (seed % 2) as usize;
        let beta = random_mat(&mut rng, d, 0.5);
        let spec = MBAJDSpec::new(random_pd(&mut rng, d, 1.0), beta, (d as f64 - 1.0) / 2.0 + 0.5, Default::default()).unwrap();
        let u = random_tube_u(&mut rng, d, 1.0, 2.0);
        for t in [0.25, 0.5, 1.0, 2.0] {
            prop_assert!(log_det_tracked(&spec, &u, t).unwrap().is_finite());
            prop_assert!(mbajd_psi(&spec, &u, t).unwrap().is_finite());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn euler_steps_stay_in_the_cone(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = 2 + (seed % 2) as usize;
        let p = random_params(&mut rng, d, Shape::conservative(alpha_of(seed)));
        let mut x = random_psd_rank(&mut rng, d, 1, 0.1);
        for _ in 0..200 {
            x = step(&p, &x, 1.0 / 64.0, &mut rng).unwrap();
            prop_assert!(x.is_psd(0.0) || x.min_eigenvalue().unwrap() >= -1e-14 * (1.0 + x.frobenius_norm()));
        }
    }

    #[test]
    fn monte_carlo_is_deterministic_and_normalized(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let d = 2;
        let p = random_params(&mut rng, d, Shape::conservative(alpha_of(seed)));
        let x = random_pd(&mut rng, d, 1.0);
        let u = random_interior_u(&mut rng, d);
        let cfg = SimConfig { threads: Some(1), ..SimConfig::new(64, 1.0 / 32.0, seed) };
        let a = estimate_transform(&p, &u, &x, 0.5, &cfg).unwrap();
        let b = estimate_transform(&p, &u, &x, 0.5, &SimConfig { threads: Some(2), ..cfg }).unwrap();
        prop_assert_eq!(a.mean.re.to_bits(), b.mean.re.to_bits());
        prop_assert_eq!(a.mean.im.to_bits(), b.mean.im.to_bits());
        prop_assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let one = estimate_transform(&p, &CSymMatrix::zeros(d), &x, 0.5, &cfg).unwrap();
        prop_assert_eq!(one.mean, num_complex::Complex64::new(1.0, 0.0));
        prop_assert_eq!(one.stderr, 0.0);
    }
}
