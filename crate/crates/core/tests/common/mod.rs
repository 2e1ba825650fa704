#![allow(dead_code)]

use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite rule over consecutive `edges`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, edges: &[f64], rule: &[(f64, f64)]) -> f64 {
    edges
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            rule.iter().map(|&(x, wt)| wt * f(m + h * x)).sum::<f64>() * h
        })
        .sum()
}

pub fn integrate_c<F: Fn(f64) -> Complex64>(f: F, edges: &[f64], rule: &[(f64, f64)]) -> Complex64 {
    let re = integrate(|x| f(x).re, edges, rule);
    let im = integrate(|x| f(x).im, edges, rule);
    Complex64::new(re, im)
}

pub fn log_edges(lo: f64, hi: f64, panels: usize) -> Vec<f64> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..=panels).map(|i| (l + (h - l) * i as f64 / panels as f64).exp()).collect()
}

pub fn lin_edges(lo: f64, hi: f64, panels: usize) -> Vec<f64> {
    (0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect()
}

/// Kolmogorov-Smirnov statistic `sqrt(n) D_n` of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let c = cdf(x);
        d = d.max((i as f64 + 1.0) / n - c).max(c - i as f64 / n);
    }
    d * n.sqrt()
}

/// 1% critical value of the limiting Kolmogorov distribution.
pub const KS_CRIT_1PCT: f64 = 1.6276;
