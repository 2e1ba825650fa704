//! Detrapping-rate and detrapping-time laws.
//!
//! Every capture draws a fresh detrapping rate from a [`RateModel`]; the
//! carrier then waits an exponentially distributed time with that rate. With
//! rates uniform on `[gamma_min, gamma_max]` the marginal detrapping time has
//! density
//!
//! ```text
//! p(tau) = [(1 + gmin tau) e^{-gmin tau} - (1 + gmax tau) e^{-gmax tau}] / ((gmax - gmin) tau^2)
//! ```
//!
//! which saturates at `(gmin + gmax) / 2` for short times, falls off as
//! `tau^-2` in between and exponentially beyond `1 / gmin`.
//!
//! The Arrhenius parametrization (Boltzmann-distributed trap depths escaping
//! at `A exp(-E / kT)`) induces exactly such a uniform rate law.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Below this value of `gamma_max * tau` the density is evaluated from its
/// two-term Taylor expansion.
const TAYLOR_THRESHOLD: f64 = 1e-6;

/// Law of the detrapping rate drawn at each capture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateModel {
    /// Rates uniform on `[gamma_min, gamma_max]`. `gamma_min = 0` is allowed
    /// (nonergodic case); `gamma_min = gamma_max` degenerates to a single
    /// exponential rate.
    Uniform { gamma_min: f64, gamma_max: f64 },
    /// Trap depths `E` Boltzmann-distributed on `[e_min, e_max]` with
    /// temperature `kt`, escape rate `prefactor * exp(-E / kt)`.
    Arrhenius {
        prefactor: f64,
        kt: f64,
        e_min: f64,
        e_max: f64,
    },
}

impl RateModel {
    pub fn uniform(gamma_min: f64, gamma_max: f64) -> Result<Self> {
        let m = RateModel::Uniform {
            gamma_min,
            gamma_max,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn arrhenius(prefactor: f64, kt: f64, e_min: f64, e_max: f64) -> Result<Self> {
        let m = RateModel::Arrhenius {
            prefactor,
            kt,
            e_min,
            e_max,
        };
        m.validate()?;
        Ok(m)
    }

    /// Single exponential rate, i.e. the degenerate uniform law.
    pub fn fixed(rate: f64) -> Result<Self> {
        Self::uniform(rate, rate)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RateModel::Uniform {
                gamma_min,
                gamma_max,
            } => {
                ensure(gamma_min.is_finite() && gamma_min >= 0.0, || {
                    format!("gamma_min must be finite and >= 0, got {gamma_min}")
                })?;
                ensure(gamma_max.is_finite() && gamma_max > 0.0, || {
                    format!("gamma_max must be finite and > 0, got {gamma_max}")
                })?;
                ensure(gamma_min <= gamma_max, || {
                    format!("gamma_min ({gamma_min}) exceeds gamma_max ({gamma_max})")
                })
            }
            RateModel::Arrhenius {
                prefactor,
                kt,
                e_min,
                e_max,
            } => {
                ensure(prefactor.is_finite() && prefactor > 0.0, || {
                    format!("prefactor must be > 0, got {prefactor}")
                })?;
                ensure(kt.is_finite() && kt > 0.0, || format!("kT must be > 0, got {kt}"))?;
                ensure(e_min.is_finite() && e_min >= 0.0, || {
                    format!("e_min must be >= 0, got {e_min}")
                })?;
                ensure(e_max.is_finite() && e_max >= e_min, || {
                    format!("e_max ({e_max}) must be >= e_min ({e_min})")
                })?;
                let (lo, _) = self.bounds();
                ensure(lo > 0.0, || {
                    "induced gamma_min underflows to zero; narrow the energy range".to_string()
                })
            }
        }
    }

    /// Rate support `(gamma_min, gamma_max)`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            RateModel::Uniform {
                gamma_min,
                gamma_max,
            } => (gamma_min, gamma_max),
            RateModel::Arrhenius {
                prefactor,
                kt,
                e_min,
                e_max,
            } => (
                prefactor * (-e_max / kt).exp(),
                prefactor * (-e_min / kt).exp(),
            ),
        }
    }

    pub fn gamma_min(&self) -> f64 {
        self.bounds().0
    }

    pub fn gamma_max(&self) -> f64 {
        self.bounds().1
    }

    pub fn is_degenerate(&self) -> bool {
        let (lo, hi) = self.bounds();
        lo == hi
    }
}

/// Poisson trapping with rate `gamma_theta`; free-flight durations are
/// exponential with mean `1 / gamma_theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrappingModel {
    pub gamma_theta: f64,
}

impl TrappingModel {
    pub fn new(gamma_theta: f64) -> Result<Self> {
        let m = TrappingModel { gamma_theta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.gamma_theta.is_finite() && self.gamma_theta > 0.0, || {
            format!("gamma_theta must be finite and > 0, got {}", self.gamma_theta)
        })
    }

    pub fn mean_trapping_time(&self) -> f64 {
        1.0 / self.gamma_theta
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        e / self.gamma_theta
    }
}

/// Draw a detrapping rate.
pub fn sample_rate<R: Rng + ?Sized>(model: &RateModel, rng: &mut R) -> f64 {
    match *model {
        RateModel::Uniform {
            gamma_min,
            gamma_max,
        } => {
            if gamma_min == gamma_max {
                gamma_min
            } else {
                let u: f64 = rng.random();
                gamma_min + u * (gamma_max - gamma_min)
            }
        }
        RateModel::Arrhenius {
            prefactor,
            kt,
            e_min,
            e_max,
        } => {
            // Inverse CDF of the Boltzmann density truncated to [e_min, e_max].
            let u: f64 = rng.random();
            let span = -(-(e_max - e_min) / kt).exp_m1();
            let energy = e_min - kt * (-u * span).ln_1p();
            prefactor * (-energy / kt).exp()
        }
    }
}

/// Draw a detrapping time: a fresh rate, then an exponential wait with that
/// rate. A zero rate (possible when `gamma_min = 0`) yields `f64::INFINITY`;
/// callers clip at their observation horizon.
pub fn sample_detrap_time<R: Rng + ?Sized>(model: &RateModel, rng: &mut R) -> f64 {
    let rate = sample_rate(model, rng);
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// `1 - (1 + x) e^{-x}`, accurate for small `x`.
fn one_minus_poly_exp(x: f64) -> f64 {
    if x < 1e-3 {
        // sum_{n>=2} (-1)^n (n - 1) x^n / n!
        let x2 = x * x;
        x2 * (0.5 - x / 3.0 + x2 / 8.0 - x2 * x / 30.0 + x2 * x2 / 144.0)
    } else {
        -(-x).exp_m1() - x * (-x).exp()
    }
}

/// Density of the detrapping time at `tau`.
pub fn detrap_pdf(tau: f64, model: &RateModel) -> Result<f64> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Domain(format!("tau must be >= 0, got {tau}")));
    }
    if tau.is_infinite() {
        return Ok(0.0);
    }
    let (lo, hi) = model.bounds();
    if lo == hi {
        return Ok(lo * (-lo * tau).exp());
    }
    if hi * tau < TAYLOR_THRESHOLD {
        let first = 0.5 * (hi + lo);
        let second = (hi * hi + hi * lo + lo * lo) / 3.0;
        return Ok(first - second * tau);
    }
    let num = one_minus_poly_exp(hi * tau) - one_minus_poly_exp(lo * tau);
    Ok((num / ((hi - lo) * tau * tau)).max(0.0))
}

/// Survival function `P(tau_sample > tau)`.
pub fn detrap_survival(tau: f64, model: &RateModel) -> Result<f64> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Domain(format!("tau must be >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(1.0);
    }
    let (lo, hi) = model.bounds();
    if lo == hi {
        return Ok((-lo * tau).exp());
    }
    let width = (hi - lo) * tau;
    Ok((-lo * tau).exp() * (-(-width).exp_m1()) / width)
}

pub fn detrap_cdf(tau: f64, model: &RateModel) -> Result<f64> {
    detrap_survival(tau, model).map(|s| 1.0 - s)
}

/// Mean detrapping time `ln(gmax / gmin) / (gmax - gmin)`.
pub fn detrap_mean(model: &RateModel) -> Result<f64> {
    let (lo, hi) = model.bounds();
    if lo <= 0.0 {
        return Err(Error::Nonergodic);
    }
    if lo == hi {
        return Ok(1.0 / lo);
    }
    let width = hi - lo;
    Ok((width / lo).ln_1p() / width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uni(lo: f64, hi: f64) -> RateModel {
        RateModel::uniform(lo, hi).unwrap()
    }

    #[test]
    fn rejects_invalid_models() {
        assert!(RateModel::uniform(-1.0, 1.0).is_err());
        assert!(RateModel::uniform(2.0, 1.0).is_err());
        assert!(RateModel::uniform(0.0, 0.0).is_err());
        assert!(RateModel::arrhenius(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(RateModel::arrhenius(1.0, 1.0, 2.0, 1.0).is_err());
        assert!(TrappingModel::new(0.0).is_err());
        assert!(TrappingModel::new(f64::INFINITY).is_err());
    }

    #[test]
    fn arrhenius_bounds() {
        let m = RateModel::arrhenius(2.0, 0.5, 1.0, 3.0).unwrap();
        let (lo, hi) = m.bounds();
        assert!((lo - 2.0 * (-6.0f64).exp()).abs() < 1e-15);
        assert!((hi - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(hi <= 2.0);
    }

    #[test]
    fn uniform_rates_stay_in_range() {
        let m = uni(0.0, 1e3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let g = sample_rate(&m, &mut rng);
            assert!((0.0..=1e3).contains(&g));
        }
    }

    #[test]
    fn degenerate_arrhenius_is_constant() {
        let m = RateModel::arrhenius(3.0, 0.7, 1.2, 1.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let want = 3.0 * (-1.2f64 / 0.7).exp();
        for _ in 0..100 {
            assert!((sample_rate(&m, &mut rng) - want).abs() <= 1e-15 * want);
        }
    }

    #[test]
    fn zero_rate_gives_infinite_time() {
        // a zero draw from Uniform{0, g} has probability 2^-53, so force it
        let zero = RateModel::Uniform {
            gamma_min: 0.0,
            gamma_max: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(sample_detrap_time(&zero, &mut rng).is_infinite());
    }

    #[test]
    fn pdf_short_time_limit() {
        let m = uni(1e-3, 10.0);
        let p0 = detrap_pdf(0.0, &m).unwrap();
        assert!((p0 - 5.0005).abs() < 1e-12);
        let p = detrap_pdf(1e-9, &m).unwrap();
        assert!((p - 5.0005).abs() < 1e-6);
        // continuity across the Taylor switch
        let below = detrap_pdf(0.99e-7, &m).unwrap();
        let above = detrap_pdf(1.01e-7, &m).unwrap();
        assert!((below - above).abs() < 1e-6);
    }

    #[test]
    fn pdf_on_inverse_square_asymptote() {
        let m = uni(1e-3, 10.0);
        let p = detrap_pdf(1.0, &m).unwrap();
        let asym = 1.0 / (10.0 - 1e-3);
        assert!((p / asym - 1.0).abs() < 0.1, "{p} vs {asym}");
    }

    #[test]
    fn pdf_rejects_negative_tau() {
        assert!(matches!(
            detrap_pdf(-1.0, &uni(1.0, 2.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pdf_degenerate_limit() {
        let g = 2.5;
        let narrow = uni(g * (1.0 - 5e-5), g * (1.0 + 5e-5));
        for &tau in &[1e-3, 0.1, 1.0, 3.0] {
            let exact = g * (-g * tau).exp();
            let p = detrap_pdf(tau, &narrow).unwrap();
            assert!((p / exact - 1.0).abs() < 1e-3, "tau={tau}");
            let d = detrap_pdf(tau, &uni(g, g)).unwrap();
            assert!((d - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_values() {
        let m = detrap_mean(&uni(1e-3, 10.0)).unwrap();
        assert!((m - 0.921_128).abs() < 1e-5, "{m}");
        let m = detrap_mean(&uni(1e-4, 1e4)).unwrap();
        assert!((m / 1.842_068e-3 - 1.0).abs() < 1e-5, "{m}");
        assert_eq!(detrap_mean(&uni(4.0, 4.0)).unwrap(), 0.25);
        assert_eq!(detrap_mean(&uni(0.0, 4.0)), Err(Error::Nonergodic));
    }

    #[test]
    fn survival_is_monotone_and_bounded() {
        let m = uni(0.0, 1e3);
        let mut prev = 1.0;
        for i in 0..200 {
            let tau = 10f64.powf(-6.0 + 0.05 * i as f64);
            let s = detrap_survival(tau, &m).unwrap();
            assert!(s <= prev && s >= 0.0);
            prev = s;
        }
        // heavy tail: survival at tau is 1 / (gmax tau) for gmin = 0
        let s = detrap_survival(1e4, &m).unwrap();
        assert!((s - 1e-7).abs() < 1e-12);
    }
}
