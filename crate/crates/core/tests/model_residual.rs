//! Substituting the exact solutions back into the equation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfbs_core::model::{example1, example2, ProblemSpec};
use tfbs_core::numerics::gamma_fn;

/// Coefficients of a polynomial in s, lowest degree first.
fn eval(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * s + k)
}

fn deriv(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &k)| i as f64 * k)
        .collect()
}

/// Residual of `D^α u − (a u_ss + b u_s − c u) − f` for
/// `u = (η+1)² g(s)`.
fn residual(p: &ProblemSpec, g: &[f64], s: f64, eta: f64) -> f64 {
    let al = p.coeffs.alpha;
    let time = (eta + 1.0).powi(2);
    let caputo_time = 2.0 * eta.powf(2.0 - al) / gamma_fn(3.0 - al).unwrap()
        + 2.0 * eta.powf(1.0 - al) / gamma_fn(2.0 - al).unwrap();
    let g1 = deriv(g);
    let g2 = deriv(&g1);
    let lhs = caputo_time * eval(g, s);
    let c = &p.coeffs;
    let rhs =
        time * (c.a * eval(&g2, s) + c.b * eval(&g1, s) - c.c * eval(g, s)) + (p.source)(s, eta);
    lhs - rhs
}

fn check(build: fn(f64) -> tfbs_core::Result<ProblemSpec>, g: &[f64], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for alpha in [0.3, 0.5, 0.7, 0.9, 1.0] {
        let p = build(alpha).unwrap();
        for _ in 0..20 {
            let s: f64 = rng.gen_range(0.0..1.0);
            let eta: f64 = rng.gen_range(1e-3..1.0);
            let r = residual(&p, g, s, eta);
            assert!(
                r.abs() < 1e-10,
                "alpha {alpha}: residual {r:e} at ({s}, {eta})"
            );
            let exact = p.exact.as_ref().unwrap();
            assert!((exact(s, eta) - (eta + 1.0).powi(2) * eval(g, s)).abs() < 1e-14);
        }
    }
}

#[test]
fn homogeneous_problem_source_is_consistent() {
    check(example1, &[0.0, 0.0, 1.0, -1.0], 1);
}

#[test]
fn inhomogeneous_problem_source_is_consistent() {
    check(example2, &[1.0, 0.0, 1.0, 1.0], 2);
}

#[test]
fn initial_data_matches_exact_on_grid() {
    for p in [example1(0.5).unwrap(), example2(0.5).unwrap()] {
        let ex = p.exact.as_ref().unwrap();
        for i in 0..=40 {
            let s = i as f64 / 40.0;
            assert_eq!((p.initial)(s), ex(s, 0.0));
        }
    }
}

#[test]
fn documented_values() {
    let p = example1(0.5).unwrap();
    assert_eq!((p.exact.as_ref().unwrap())(0.5, 0.0), 0.125);
    let q = example2(0.5).unwrap();
    assert_eq!((q.exact.as_ref().unwrap())(1.0, 0.0), 3.0);
    assert_eq!((q.exact.as_ref().unwrap())(0.0, 1.0), 4.0);
    assert_eq!((q.right_bc)(0.0), 3.0);
}
