//! Test-only oracles: tanh-sinh quadrature and a Kolmogorov–Smirnov statistic.
#![allow(dead_code)]

/// ∫₀¹ f(s, 1 − s) ds by tanh-sinh quadrature. The complement is passed
/// separately so integrands can stay accurate near s = 1.
pub fn tanh_sinh<F: Fn(f64, f64) -> f64>(f: F, rel_tol: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let node = |t: f64| {
        let u = half_pi * t.sinh();
        let e = (2.0 * u).exp();
        // s = e/(1+e), 1 − s = 1/(1+e), written to avoid cancellation.
        let (s, c) = if u > 0.0 {
            (1.0 / (1.0 + 1.0 / e), 1.0 / (1.0 + e))
        } else {
            (e / (1.0 + e), 1.0 / (1.0 + e))
        };
        let w = half_pi * t.cosh() / (2.0 * (u.cosh()).powi(2));
        (s, c, w)
    };
    let eval = |t: f64| {
        let (s, c, w) = node(t);
        if s <= 0.0 || c <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let v = f(s, c);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };
    let t_max = 6.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut t = h;
    while t <= t_max {
        sum += eval(t) + eval(-t);
        t += h;
    }
    let mut estimate = sum * h;
    for _ in 0..12 {
        h /= 2.0;
        let mut t = h;
        while t <= t_max {
            sum += eval(t) + eval(-t);
            t += 2.0 * h;
        }
        let next = sum * h;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// ∫ₐᵇ g(x) dx on a finite interval.
pub fn integrate(g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let w = b - a;
    w * tanh_sinh(|s, c| g(if s < 0.5 { a + w * s } else { b - w * c }), 1e-14)
}

/// ∫ₐ^∞ g(x) dx via x = a + L·s/(1 − s), with L the length scale.
pub fn integrate_tail(g: impl Fn(f64) -> f64, a: f64, scale: f64) -> f64 {
    tanh_sinh(|s, c| g(a + scale * s / c) * scale / (c * c), 1e-14)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
