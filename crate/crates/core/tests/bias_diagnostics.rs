use pcqm::model::{asymptotic_bias_pair, delta1, CsrModel, NbdModel};

mod common;
use common::{integrate_tail, rel_err};

const LAMBDA: f64 = 0.05;
const Q: u32 = 4;
const C: f64 = 10.0;

fn residual(ell: u32, u: f64, k: f64) -> f64 {
    let nbd = NbdModel::new(LAMBDA, k, Q, ell).unwrap();
    let csr = CsrModel::new(LAMBDA, Q, ell).unwrap();
    let d1 = delta1(ell, u, LAMBDA, Q, C).unwrap();
    nbd.truncated_moment_upper(u, C).unwrap() - csr.truncated_moment_upper(u, C).unwrap() - d1 / k
}

#[test]
fn delta1_frozen_values() {
    for &((ell, u), expect) in &[((1, 2.0), 125.4648), ((2, 1.0), 5.83317), ((2, -1.0), -0.0384096)] {
        let d1 = delta1(ell, u, LAMBDA, Q, C).unwrap();
        assert!(rel_err(d1, expect) < 1e-5, "({ell},{u}): {d1}");
    }
}

#[test]
fn delta1_matches_quadrature_derivative() {
    // d/dε of E[R^u | R > C] at ε = 1/k = 0 by quadrature, using
    // ∂ ln g/∂ε at ε = 0: x²/2 − ℓx + ℓ(ℓ−1)/2 with x = ar².
    for &(ell, u) in &[(1u32, 2.0), (2, 1.0), (2, -1.0), (3, 1.0)] {
        let a = std::f64::consts::PI * LAMBDA / Q as f64;
        let l = ell as f64;
        let csr = CsrModel::new(LAMBDA, Q, ell).unwrap();
        let dens = |r: f64| {
            let x = a * r * r;
            let score = x * x / 2.0 - l * x + l * (l - 1.0) / 2.0;
            (csr.pdf(r).unwrap(), score)
        };
        let tail = |f: &dyn Fn(f64) -> f64| integrate_tail(f, C, C);
        let p = tail(&|r| dens(r).0);
        let m = tail(&|r| r.powf(u) * dens(r).0);
        let dp = tail(&|r| dens(r).0 * dens(r).1);
        let dm = tail(&|r| r.powf(u) * dens(r).0 * dens(r).1);
        let oracle = dm / p - m * dp / (p * p);
        let d1 = delta1(ell, u, LAMBDA, Q, C).unwrap();
        assert!(rel_err(d1, oracle) < 1e-8, "({ell},{u}): {d1} vs {oracle}");
    }
}

#[test]
fn residual_is_second_order_in_inverse_k() {
    for &(ell, u) in &[(1u32, 2.0), (2, 1.0), (2, -1.0)] {
        let r1 = residual(ell, u, 1e3);
        let r2 = residual(ell, u, 2e3);
        // O(1/k²): the residual quarters, so k·residual halves.
        let ratio = (1e3 * r1) / (2e3 * r2);
        assert!((ratio - 2.0).abs() <= 0.4, "({ell},{u}): k·residual ratio {ratio}");
        let raw = r1 / r2;
        assert!((raw - 4.0).abs() <= 0.8, "({ell},{u}): residual ratio {raw}");
    }
}

#[test]
fn imputation_bias_is_smaller_on_the_subset_grid() {
    let mut cells = 0;
    for ell in [1, 2, 3] {
        for lambda in [0.011, 0.051] {
            for k in [1.5, 2.0, 5.0, 10.0] {
                for c in [5.0, 10.0, 20.0] {
                    for u in [-1.0, 1.0, 2.0] {
                        if !(k > u / 2.0 && k > 1.0) {
                            continue;
                        }
                        let m = NbdModel::new(lambda, k, 4, ell).unwrap();
                        let b = asymptotic_bias_pair(&m, u, c).unwrap();
                        assert!(
                            b.imputation_dominates(),
                            "ell={ell} lambda={lambda} k={k} C={c} u={u}: {b:?}"
                        );
                        cells += 1;
                    }
                }
            }
        }
    }
    assert_eq!(cells, 216);
}

#[test]
fn zeroth_order_has_no_bias() {
    let m = NbdModel::new(0.05, 2.0, 4, 2).unwrap();
    let b = asymptotic_bias_pair(&m, 0.0, 10.0).unwrap();
    assert_eq!((b.poisson_correction, b.nbd_imputation), (0.0, 0.0));
    assert_eq!(delta1(2, 0.0, 0.05, 4, 10.0).unwrap(), 0.0);
    let m = NbdModel::new(0.05, 0.9, 4, 2).unwrap();
    assert!(asymptotic_bias_pair(&m, 1.0, 10.0).is_err());
}
