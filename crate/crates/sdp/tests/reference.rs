//! Solver checks against an independent reference and randomized invariants.

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdp_ipm::{solve_sdp, Relation, SdpProblem, SdpStatus, Sense, SolverOptions};

fn random_symmetric(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

fn random_density(rng: &mut impl Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let f = DMatrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0));
    let w = &f * f.transpose();
    let tr = w.trace();
    w / tr
}

fn lambda_max(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

fn lambda_min(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Optimal value of `max <C,W>` s.t. `tr W = 1`, `W ⪰ 0`, `<A,W> ≤ eps` via
/// the one-dimensional Lagrangian dual `min_{t ≥ 0} λmax(C − tA) + t·eps`.
/// The dual function is convex, so a bracketed golden-section search finds
/// its minimum to high accuracy.
fn dual_reference(c: &DMatrix<f64>, a: &DMatrix<f64>, eps: f64) -> f64 {
    let g = |t: f64| lambda_max(&(c - a * t)) + t * eps;
    let mut hi = 1.0;
    while g(2.0 * hi) <= g(hi) {
        hi *= 2.0;
        assert!(hi < 1e9, "dual did not bracket");
    }
    let (mut lo, mut hi) = (0.0, 2.0 * hi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - ratio * (hi - lo);
        let m2 = lo + ratio * (hi - lo);
        if g(m1) <= g(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    g(0.5 * (lo + hi)).min(g(0.0))
}

#[test]
fn random_single_inequality_matches_dual_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5d9_2024);
    for case in 0..40 {
        let c = random_symmetric(&mut rng, 6);
        let a = random_symmetric(&mut rng, 6);
        let (lo, hi) = (lambda_min(&a), lambda_max(&a));
        let eps = lo + rng.random_range(0.05..0.95) * (hi - lo);
        let relation = if case % 2 == 0 {
            Relation::LessEqual
        } else {
            Relation::GreaterEqual
        };
        let reference = match relation {
            Relation::LessEqual => dual_reference(&c, &a, eps),
            Relation::GreaterEqual => dual_reference(&c, &(-&a), -eps),
        };
        let p = SdpProblem::new(c, Sense::Maximize)
            .unwrap()
            .with_constraint(a, relation, eps)
            .unwrap();
        let s = solve_sdp(&p, &SolverOptions::default());
        assert_eq!(s.status, SdpStatus::Optimal, "case {case}: {:?}", s.detail);
        assert!(
            (s.objective_value - reference).abs() < 1e-5,
            "case {case}: solver {} vs reference {reference}",
            s.objective_value
        );
    }
}

#[test]
fn minimization_matches_negated_maximization() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let c = random_symmetric(&mut rng, 5);
    let a = random_symmetric(&mut rng, 5);
    let eps = 0.5 * (lambda_min(&a) + lambda_max(&a));
    let min = SdpProblem::new(c.clone(), Sense::Minimize)
        .unwrap()
        .with_constraint(a.clone(), Relation::LessEqual, eps)
        .unwrap();
    let max = SdpProblem::new(-c, Sense::Maximize)
        .unwrap()
        .with_constraint(a, Relation::LessEqual, eps)
        .unwrap();
    let opts = SolverOptions::default();
    let s_min = solve_sdp(&min, &opts);
    let s_max = solve_sdp(&max, &opts);
    assert!((s_min.objective_value + s_max.objective_value).abs() < 1e-7);
}

#[test]
fn serialized_problem_solves_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = random_symmetric(&mut rng, 4);
    let a = random_symmetric(&mut rng, 4);
    let eps = 0.5 * (lambda_min(&a) + lambda_max(&a));
    let p = SdpProblem::new(c, Sense::Maximize)
        .unwrap()
        .with_constraint(a, Relation::GreaterEqual, eps)
        .unwrap();
    let q = SdpProblem::from_text(&p.to_text()).unwrap();
    let opts = SolverOptions::default();
    assert_eq!(
        solve_sdp(&p, &opts).objective_value,
        solve_sdp(&q, &opts).objective_value
    );
}

fn feasible_instance(seed: u64, n: usize, k: usize) -> (SdpProblem, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = random_symmetric(&mut rng, n);
    let w_feas = random_density(&mut rng, n, 1 + (seed as usize % n));
    let mut p = SdpProblem::new(c, Sense::Maximize).unwrap();
    for i in 0..k {
        let a = random_symmetric(&mut rng, n);
        let value = a.dot(&w_feas);
        let margin = rng.random_range(0.0..0.3);
        if i % 2 == 0 {
            p.add_constraint(a, Relation::LessEqual, value + margin).unwrap();
        } else {
            p.add_constraint(a, Relation::GreaterEqual, value - margin).unwrap();
        }
    }
    (p, w_feas)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solution_is_feasible_and_dominates(seed in any::<u64>(), n in 2usize..8, k in 0usize..4) {
        let (p, w_feas) = feasible_instance(seed, n, k);
        let s = solve_sdp(&p, &SolverOptions::default());
        prop_assert_eq!(s.status, SdpStatus::Optimal, "{:?}", s.detail);
        prop_assert!((s.w.trace() - 1.0).abs() < 1e-7);
        prop_assert!(lambda_min(&s.w) > -1e-7);
        prop_assert!((&s.w - s.w.transpose()).amax() < 1e-12);
        for con in p.constraints() {
            prop_assert!(con.slack(&s.w) > -1e-6);
        }
        prop_assert!(s.objective_value >= p.evaluate(&w_feas) - 1e-7);
        prop_assert!(s.duality_gap <= 1e-6 * (1.0 + s.objective_value.abs()));
    }

    #[test]
    fn objective_scales_with_cost(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let (p, _) = feasible_instance(seed, 5, 1);
        let opts = SolverOptions::default();
        let base = solve_sdp(&p, &opts);
        let mut scaled = SdpProblem::new(p.objective() * scale, Sense::Maximize).unwrap();
        for con in p.constraints() {
            scaled.add_constraint(con.matrix.clone(), con.relation, con.bound).unwrap();
        }
        let s = solve_sdp(&scaled, &opts);
        prop_assert_eq!(s.status, SdpStatus::Optimal);
        prop_assert!(
            (s.objective_value - scale * base.objective_value).abs()
                < 1e-6 * (1.0 + (scale * base.objective_value).abs())
        );
        let top = |w: &DMatrix<f64>| {
            let e = SymmetricEigen::new(w.clone());
            let i = e.eigenvalues.imax();
            (e.eigenvectors.column(i).into_owned(), e.eigenvalues[i])
        };
        let (u, lu) = top(&base.w);
        let (v, _) = top(&s.w);
        // Only compare directions when the optimum is rank one.
        if lu > 1.0 - 1e-6 {
            let cos = u.dot(&v).abs().min(1.0);
            prop_assert!(cos.acos() < 1e-4);
        }
    }
}
