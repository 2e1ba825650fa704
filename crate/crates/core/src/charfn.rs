//! Characteristic functions of the gap and pulse duration laws and the
//! closed-form spectral densities built from them.
//!
//! Frequencies are in cycles per unit time; `omega = 2 pi f`. All spectra use
//! the one-sided convention `S(f) = lim (2/T) <|X_T(f)|^2>`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INDETERMINATE_EPS: f64 = 1e-14;

/// `gamma / (gamma - 2 pi i f)`.
pub fn chi_exponential(f: f64, gamma: f64) -> Complex64 {
    let g = Complex64::new(gamma, 0.0);
    g / Complex64::new(gamma, -TAU * f)
}

/// Characteristic function of the detrapping time when rates are uniform on
/// `[gamma_min, gamma_max]`:
/// `1 + [2 pi i f / (gmax - gmin)] ln[(gmax - 2 pi i f) / (gmin - 2 pi i f)]`.
pub fn chi_uniform_rate(f: f64, gamma_min: f64, gamma_max: f64) -> Complex64 {
    if f == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if gamma_min == gamma_max {
        return chi_exponential(f, gamma_max);
    }
    let w = TAU * f;
    // Both arguments sit in the closed lower-right quadrant, so the
    // difference of principal logs never crosses a branch cut.
    let log_ratio = Complex64::new(gamma_max, -w).ln() - Complex64::new(gamma_min, -w).ln();
    Complex64::new(1.0, 0.0) + Complex64::new(0.0, w / (gamma_max - gamma_min)) * log_ratio
}

/// Broad-range approximation `1 - x [pi/2 + i ln x]` with `x = 2 pi f / gmax`,
/// valid for `gmin << 2 pi f << gmax`.
pub fn chi_uniform_rate_approx(f: f64, gamma_max: f64) -> Complex64 {
    if f == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let x = TAU * f / gamma_max;
    Complex64::new(1.0, 0.0) - x * Complex64::new(FRAC_PI_2, x.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CharFn {
    Exponential { rate: f64 },
    UniformRate { gamma_min: f64, gamma_max: f64 },
    UniformRateApprox { gamma_max: f64 },
}

impl CharFn {
    pub fn eval(&self, f: f64) -> Complex64 {
        match *self {
            CharFn::Exponential { rate } => chi_exponential(f, rate),
            CharFn::UniformRate {
                gamma_min,
                gamma_max,
            } => chi_uniform_rate(f, gamma_min, gamma_max),
            CharFn::UniformRateApprox { gamma_max } => chi_uniform_rate_approx(f, gamma_max),
        }
    }

    /// Evaluate on an ascending grid, checking that the phase never jumps by
    /// more than pi between neighbouring points (no branch crossing).
    pub fn eval_grid(&self, freqs: &[f64]) -> Vec<Complex64> {
        let out: Vec<Complex64> = freqs.iter().map(|&f| self.eval(f)).collect();
        for w in out.windows(2) {
            let jump = (w[1] / w[0]).arg().abs();
            debug_assert!(
                !jump.is_finite() || jump < PI,
                "characteristic function phase discontinuity"
            );
        }
        out
    }
}

/// Spectrum of a signal of rectangular pulses of height `a`:
/// `(a^2 nu / (pi^2 f^2)) Re[(1 - chi_theta)(1 - chi_tau) / (1 - chi_theta chi_tau)]`.
pub fn psd_general_pulse(f: f64, a: f64, nu: f64, chi_theta: &CharFn, chi_tau: &CharFn) -> Result<f64> {
    let ct = chi_theta.eval(f);
    let cg = chi_tau.eval(f);
    let one = Complex64::new(1.0, 0.0);
    let den = one - ct * cg;
    if f == 0.0 || den.norm() < INDETERMINATE_EPS {
        return Err(Error::Indeterminate(f));
    }
    let ratio = (one - ct) * (one - cg) / den;
    Ok(a * a * nu / (PI * PI * f * f) * ratio.re)
}

/// Poisson (exponential) trapping:
/// `(4 a^2 nu / gtheta^2) Re[1 / (1 - chi_tau - 2 pi i f / gtheta)]`.
pub fn psd_poisson_pulse(f: f64, a: f64, nu: f64, gamma_theta: f64, chi_tau: &CharFn) -> Result<f64> {
    let cg = chi_tau.eval(f);
    let den = Complex64::new(1.0, 0.0) - cg - Complex64::new(0.0, TAU * f / gamma_theta);
    if f == 0.0 || den.norm() < INDETERMINATE_EPS {
        return Err(Error::Indeterminate(f));
    }
    Ok(4.0 * a * a * nu / (gamma_theta * gamma_theta) * den.inv().re)
}

/// Poisson trapping with the broad-range detrapping law, in closed form.
pub fn psd_full_expression(f: f64, a: f64, nu: f64, gamma_theta: f64, gamma_max: f64) -> f64 {
    let shift = gamma_max / gamma_theta - (TAU * f / gamma_max).ln();
    a * a * nu * gamma_max / (gamma_theta * gamma_theta * f) / (FRAC_PI_2 * FRAC_PI_2 + shift * shift)
}

/// `a^2 nu / (gmax f)`.
pub fn psd_one_over_f(f: f64, a: f64, nu: f64, gamma_max: f64) -> f64 {
    a * a * nu / (gamma_max * f)
}

/// `N a^2 nu / (gmax f)`, `nu` being the per-carrier pulse rate.
pub fn psd_multi_carrier(f: f64, n: usize, a: f64, nu: f64, gamma_max: f64) -> f64 {
    n as f64 * psd_one_over_f(f, a, nu, gamma_max)
}

/// Two-state Markov (exponential gaps and pulses) spectrum
/// `4 a^2 nu / ((gtheta + gtau)^2 + (2 pi f)^2)`.
pub fn psd_lorentzian(f: f64, a: f64, nu: f64, gamma_theta: f64, gamma_tau: f64) -> f64 {
    let g = gamma_theta + gamma_tau;
    let w = TAU * f;
    4.0 * a * a * nu / (g * g + w * w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticPsd {
    Lorentzian {
        a: f64,
        nu: f64,
        gamma_theta: f64,
        gamma_tau: f64,
    },
    GeneralPulse {
        a: f64,
        nu: f64,
        chi_theta: CharFn,
        chi_tau: CharFn,
    },
    PoissonPulse {
        a: f64,
        nu: f64,
        gamma_theta: f64,
        chi_tau: CharFn,
    },
    FullExpression {
        a: f64,
        nu: f64,
        gamma_theta: f64,
        gamma_max: f64,
    },
    OneOverF {
        a: f64,
        nu: f64,
        gamma_max: f64,
    },
    MultiCarrier {
        n: usize,
        a: f64,
        nu: f64,
        gamma_max: f64,
    },
}

impl AnalyticPsd {
    pub fn eval(&self, f: f64) -> Result<f64> {
        match *self {
            AnalyticPsd::Lorentzian {
                a,
                nu,
                gamma_theta,
                gamma_tau,
            } => Ok(psd_lorentzian(f, a, nu, gamma_theta, gamma_tau)),
            AnalyticPsd::GeneralPulse {
                a,
                nu,
                ref chi_theta,
                ref chi_tau,
            } => psd_general_pulse(f, a, nu, chi_theta, chi_tau),
            AnalyticPsd::PoissonPulse {
                a,
                nu,
                gamma_theta,
                ref chi_tau,
            } => psd_poisson_pulse(f, a, nu, gamma_theta, chi_tau),
            AnalyticPsd::FullExpression {
                a,
                nu,
                gamma_theta,
                gamma_max,
            } => Ok(psd_full_expression(f, a, nu, gamma_theta, gamma_max)),
            AnalyticPsd::OneOverF { a, nu, gamma_max } => Ok(psd_one_over_f(f, a, nu, gamma_max)),
            AnalyticPsd::MultiCarrier { n, a, nu, gamma_max } => {
                Ok(psd_multi_carrier(f, n, a, nu, gamma_max))
            }
        }
    }

    /// Frequency band `(gmin / 2pi, gmax / 2pi)` on which the broad-range
    /// approximations hold; `None` for the exact forms.
    pub fn validity_window(&self, gamma_min: f64) -> Option<(f64, f64)> {
        match *self {
            AnalyticPsd::FullExpression { gamma_max, .. }
            | AnalyticPsd::OneOverF { gamma_max, .. }
            | AnalyticPsd::MultiCarrier { gamma_max, .. } => Some((gamma_min / TAU, gamma_max / TAU)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn exponential_values() {
        assert_eq!(chi_exponential(0.0, 3.0), Complex64::new(1.0, 0.0));
        let g = 2.0;
        let c = chi_exponential(g / TAU, g);
        assert!(close(c, Complex64::new(0.5, 0.5), 1e-15));
        assert!(chi_exponential(1e12, 1.0).norm() < 1e-11);
    }

    #[test]
    fn uniform_rate_at_zero_is_one() {
        assert_eq!(chi_uniform_rate(0.0, 1e-3, 10.0), Complex64::new(1.0, 0.0));
        assert_eq!(chi_uniform_rate_approx(0.0, 10.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn uniform_rate_zero_lower_bound_is_finite() {
        for &f in &[1e-6, 1e-2, 1.0, 1e3] {
            let c = chi_uniform_rate(f, 0.0, 1e3);
            assert!(c.re.is_finite() && c.im.is_finite());
            assert!(c.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn approx_imaginary_part_positive_below_gamma_max() {
        for &f in &[1e-3, 1e-1, 10.0, 100.0] {
            assert!(chi_uniform_rate_approx(f, 1e4).im > 0.0);
        }
    }

    #[test]
    fn lorentzian_is_general_pulse_with_exponentials() {
        let (gt, gg, a) = (1.3, 0.4, 2.0);
        let nu = 1.0 / (1.0 / gt + 1.0 / gg);
        let th = CharFn::Exponential { rate: gt };
        let ta = CharFn::Exponential { rate: gg };
        for &f in &[1e-4, 1e-2, 0.3, 10.0] {
            let g = psd_general_pulse(f, a, nu, &th, &ta).unwrap();
            let l = psd_lorentzian(f, a, nu, gt, gg);
            assert!((g / l - 1.0).abs() < 1e-9, "f={f}: {g} {l}");
        }
    }

    #[test]
    fn general_pulse_quadratic_in_amplitude() {
        let th = CharFn::Exponential { rate: 1.0 };
        let ta = CharFn::UniformRate {
            gamma_min: 1e-3,
            gamma_max: 10.0,
        };
        let s1 = psd_general_pulse(0.7, 1.0, 0.5, &th, &ta).unwrap();
        let s3 = psd_general_pulse(0.7, 3.0, 0.5, &th, &ta).unwrap();
        assert!((s3 / s1 - 9.0).abs() < 1e-12);
        let p1 = psd_poisson_pulse(0.7, 1.0, 0.5, 1.0, &ta).unwrap();
        let p3 = psd_poisson_pulse(0.7, 3.0, 0.5, 1.0, &ta).unwrap();
        assert!((p3 / p1 - 9.0).abs() < 1e-12);
        let q1 = psd_full_expression(0.7, 1.0, 0.5, 1.0, 1e4);
        let q3 = psd_full_expression(0.7, 3.0, 0.5, 1.0, 1e4);
        assert!((q3 / q1 - 9.0).abs() < 1e-12);
    }

    #[test]
    fn zero_frequency_is_indeterminate() {
        let th = CharFn::Exponential { rate: 1.0 };
        assert!(matches!(
            psd_general_pulse(0.0, 1.0, 1.0, &th, &th),
            Err(Error::Indeterminate(_))
        ));
        assert!(psd_general_pulse(1e-18, 1.0, 1.0, &th, &th).is_err());
        assert!(psd_poisson_pulse(0.0, 1.0, 1.0, 1.0, &th).is_err());
    }

    #[test]
    fn one_over_f_values() {
        // nu from <theta> = 1 and <tau> for U[1e-4, 1e4]
        let mean_tau = (1e8f64).ln() / (1e4 - 1e-4);
        let nu = 1.0 / (1.0 + mean_tau);
        let s = psd_one_over_f(1e-2, 1.0, nu, 1e4);
        assert!((s - 9.9816e-3).abs() < 1e-6, "{s}");
        assert_eq!(psd_multi_carrier(0.3, 1, 1.0, nu, 1e4), psd_one_over_f(0.3, 1.0, nu, 1e4));
        let s1 = psd_one_over_f(1.0, 1.0, nu, 1e4);
        let s10 = psd_one_over_f(10.0, 1.0, nu, 1e4);
        assert!(((s1 / s10).log10() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn full_expression_ratio() {
        let one = psd_one_over_f(1.0, 1.0, 0.9, 1e4);
        let full = psd_full_expression(1.0, 1.0, 0.9, 1.0, 1e4);
        let r = full / one;
        assert!((0.99..=1.0).contains(&r), "{r}");
        let mut prev = f64::INFINITY;
        for k in 2..9 {
            let gmax = 10f64.powi(k);
            let r = psd_full_expression(1.0, 1.0, 0.9, 1.0, gmax) / psd_one_over_f(1.0, 1.0, 0.9, gmax);
            let dev = (r - 1.0).abs();
            assert!(dev < prev, "gmax={gmax}: {r}");
            prev = dev;
        }
        assert!(prev < 1e-6);
    }
}
