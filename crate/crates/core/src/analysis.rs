//! Finite-observation cutoff predictions, the Hooge parameter, and fitting
//! helpers for measured spectra.

use serde::{Deserialize, Serialize};

use crate::dist::detrap_mean;
use crate::error::{ensure, Error, Result};
use crate::numeric::fit_line;
use crate::sim::SimConfig;
use crate::spectra::SpectrumEstimate;

/// Slope deviation from -1 beyond which a fit window is reported as outside
/// the 1/f regime.
pub const MAX_SLOPE_DEVIATION: f64 = 0.2;

/// Expected smallest of `k` rates drawn uniformly from
/// `[gamma_min, gamma_max]`: `(gmax - gmin) / (k + 1) + gmin`.
pub fn expected_min_rate(gamma_min: f64, gamma_max: f64, k: u64) -> Result<f64> {
    ensure(k >= 1, || "pulse count must be >= 1".into())?;
    ensure(gamma_min <= gamma_max, || "gamma_min exceeds gamma_max".into())?;
    Ok((gamma_max - gamma_min) / (k as f64 + 1.0) + gamma_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffRegime {
    /// Expected minimum over `K = R T / (<theta> + <tau>)` draws.
    ErgodicExact,
    /// Same with `<tau>` expanded for `gmax >> gmin`.
    BroadRange,
    /// `gamma_min` replaced by `1 / T`.
    Nonergodic,
    /// `(1 + gmax <theta>) / T`.
    LongTrapping,
    /// `(R + gmax <theta>) / (R T)`.
    MultiExperiment,
}

impl CutoffRegime {
    pub const ALL: [CutoffRegime; 5] = [
        CutoffRegime::ErgodicExact,
        CutoffRegime::BroadRange,
        CutoffRegime::Nonergodic,
        CutoffRegime::LongTrapping,
        CutoffRegime::MultiExperiment,
    ];

    /// `gamma_min T > 1` selects the ergodic form; otherwise repeated
    /// experiments use the multi-experiment form and single ones the
    /// nonergodic form.
    pub fn auto(config: &SimConfig) -> CutoffRegime {
        let (gmin, _) = config.rate_model.bounds();
        if gmin * config.horizon > 1.0 {
            CutoffRegime::ErgodicExact
        } else if config.realizations > 1 {
            CutoffRegime::MultiExperiment
        } else {
            CutoffRegime::Nonergodic
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffPrediction {
    pub gamma_min_eff: f64,
    pub regime: CutoffRegime,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub mean_theta: f64,
    pub mean_tau: Option<f64>,
    pub horizon: f64,
    pub realizations: usize,
}

pub fn effective_cutoff(config: &SimConfig) -> Result<CutoffPrediction> {
    effective_cutoff_in(config, CutoffRegime::auto(config))
}

/// Effective lowest detrapping rate under a given approximation. The result
/// is floored at `max(gamma_min, 1/T)`.
pub fn effective_cutoff_in(config: &SimConfig, regime: CutoffRegime) -> Result<CutoffPrediction> {
    config.validate()?;
    let (gmin, gmax) = config.rate_model.bounds();
    let theta = config.mean_trapping_time();
    let mean_tau = detrap_mean(&config.rate_model).ok();
    let t = config.horizon;
    let r = config.realizations as f64;
    let rt = r * t;

    let raw = match regime {
        CutoffRegime::ErgodicExact => {
            let tau = mean_tau.ok_or(Error::Nonergodic)?;
            let m = theta + tau;
            (gmax - gmin) * m / (m + rt) + gmin
        }
        CutoffRegime::BroadRange => {
            if gmin <= 0.0 {
                return Err(Error::Nonergodic);
            }
            let l = (gmax / gmin).ln();
            gmax * (gmax * theta + l) / (gmax * (theta + rt) + l) + gmin
        }
        CutoffRegime::Nonergodic => {
            let l = (gmax * t).ln();
            gmax * (gmax * theta + l) / (gmax * (theta + rt) + l) + 1.0 / t
        }
        CutoffRegime::LongTrapping => (1.0 + gmax * theta) / t,
        CutoffRegime::MultiExperiment => (r + gmax * theta) / rt,
    };
    Ok(CutoffPrediction {
        gamma_min_eff: raw.max(gmin).max(1.0 / t),
        regime,
        gamma_min: gmin,
        gamma_max: gmax,
        mean_theta: theta,
        mean_tau,
        horizon: t,
        realizations: config.realizations,
    })
}

/// Every regime that can be evaluated for `config`.
pub fn cutoff_by_regime(config: &SimConfig) -> Vec<CutoffPrediction> {
    CutoffRegime::ALL
        .iter()
        .filter_map(|&r| effective_cutoff_in(config, r).ok())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoogeSource {
    PredictedFromRates,
    FittedFromSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoogeEstimate {
    pub alpha: f64,
    pub source: HoogeSource,
    /// Whether the assumptions behind the estimate hold: `<theta> >> <tau_min>`
    /// for predictions, slope within 0.2 of -1 for fits.
    pub regime_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

/// `alpha_H = gamma_theta / gamma_max`, the long-trapping limit.
pub fn hooge_alpha_predicted(gamma_theta: f64, gamma_max: f64) -> Result<HoogeEstimate> {
    ensure(gamma_theta > 0.0 && gamma_max > 0.0, || "rates must be > 0".into())?;
    let alpha = gamma_theta / gamma_max;
    // <tau_min> = 1/gmax against <theta> = 1/gtheta
    let regime_ok = alpha <= 0.1;
    if !regime_ok {
        log::warn!("alpha_H = {alpha}: trapping times are not long compared with 1/gamma_max");
    }
    Ok(HoogeEstimate {
        alpha,
        source: HoogeSource::PredictedFromRates,
        regime_ok,
        window: None,
        fitted_slope: None,
        slope_deviation: None,
        points: None,
    })
}

/// `alpha_H = 1 / (nu <theta>^2 gamma_max)`, before the long-trapping limit.
pub fn hooge_alpha_full(nu: f64, mean_theta: f64, gamma_max: f64) -> f64 {
    1.0 / (nu * mean_theta * mean_theta * gamma_max)
}

/// `alpha_H = N^2 a^2 nu / (gamma_max I^2)`.
pub fn hooge_alpha_combined(n: usize, a: f64, nu: f64, gamma_max: f64, mean_current: f64) -> f64 {
    let na = n as f64 * a;
    na * na * nu / (gamma_max * mean_current * mean_current)
}

/// Solve Hooge's relation `S = I^2 alpha / (N f)` for `alpha` on the points
/// of `est` inside `window`, with the slope pinned at -1. The free-slope fit
/// is reported alongside as a diagnostic.
pub fn hooge_alpha_fitted(
    est: &SpectrumEstimate,
    mean_current: f64,
    n: usize,
    window: (f64, f64),
) -> Result<HoogeEstimate> {
    ensure(mean_current > 0.0, || "mean current must be > 0".into())?;
    ensure(n >= 1, || "carrier count must be >= 1".into())?;
    let i2 = mean_current * mean_current;
    let pts: Vec<(f64, f64)> = est.window(window.0, window.1).filter(|&(_, s)| s > 0.0).collect();
    if pts.len() < 2 {
        return Err(Error::Empty("fit window holds fewer than two spectrum points"));
    }
    // alpha per point first, so rescaling a (S -> c^2 S, I -> c I) cancels exactly
    let log_alpha: f64 = pts
        .iter()
        .map(|&(f, s)| (n as f64 * f * s / i2).ln())
        .sum::<f64>()
        / pts.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(f, s)| (f.ln(), s.ln())).unzip();
    let slope = fit_line(&lx, &ly).map(|l| l.slope).unwrap_or(f64::NAN);
    let deviation = (slope + 1.0).abs();
    let regime_ok = deviation <= MAX_SLOPE_DEVIATION;
    if !regime_ok {
        log::warn!("fitted slope {slope:.3} in [{}, {}]: not in the 1/f regime", window.0, window.1);
    }
    Ok(HoogeEstimate {
        alpha: log_alpha.exp(),
        source: HoogeSource::FittedFromSpectrum,
        regime_ok,
        window: Some(window),
        fitted_slope: Some(slope),
        slope_deviation: Some(deviation),
        points: Some(pts.len()),
    })
}

/// Amplitude `C` of a `C / f` law fitted to `est` over `window` in log space.
pub fn fit_one_over_f_amplitude(est: &SpectrumEstimate, window: (f64, f64)) -> Result<f64> {
    let logs: Vec<f64> = est
        .window(window.0, window.1)
        .filter(|&(_, s)| s > 0.0)
        .map(|(f, s)| (f * s).ln())
        .collect();
    if logs.is_empty() {
        return Err(Error::Empty("fit window holds no spectrum points"));
    }
    Ok((logs.iter().sum::<f64>() / logs.len() as f64).exp())
}

/// Corner where the low-frequency plateau meets the `C / f` law: the mean
/// power over `plateau` is `P`, the amplitude fitted over `one_over_f` is
/// `C`, and the onset is `C / P`.
pub fn measure_plateau_onset(
    est: &SpectrumEstimate,
    plateau: (f64, f64),
    one_over_f: (f64, f64),
) -> Result<f64> {
    let flat: Vec<f64> = est.window(plateau.0, plateau.1).map(|(_, s)| s).collect();
    if flat.is_empty() {
        return Err(Error::Empty("plateau band holds no spectrum points"));
    }
    let level = flat.iter().sum::<f64>() / flat.len() as f64;
    let amplitude = fit_one_over_f_amplitude(est, one_over_f)?;
    Ok(amplitude / level)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Carrier charge `q`.
    pub charge: f64,
    /// Free drift speed between trappings `v_c`.
    pub drift_speed: f64,
    /// Thermal speed `v_t`.
    pub thermal_speed: f64,
    /// Sample length `L`.
    pub length: f64,
    /// Cross-section area `sigma_M`.
    pub cross_section: f64,
    /// Carrier density `n`.
    pub carrier_density: f64,
    /// Trap density `n_c`.
    pub trap_density: f64,
    /// Capture cross-section `sigma_c`.
    pub capture_cross_section: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.charge,
            self.drift_speed,
            self.thermal_speed,
            self.length,
            self.cross_section,
            self.carrier_density,
            self.trap_density,
            self.capture_cross_section,
        ];
        ensure(all.iter().all(|v| v.is_finite() && *v > 0.0), || {
            "material parameters must be finite and > 0".into()
        })
    }

    /// `N = n L sigma_M`.
    pub fn carrier_count(&self) -> f64 {
        self.carrier_density * self.length * self.cross_section
    }

    /// Check `n L sigma_M` against a configured carrier count.
    pub fn check_carrier_count(&self, n: usize) -> Result<()> {
        let implied = self.carrier_count();
        ensure((implied - n as f64).abs() <= 1e-9 * implied.max(1.0), || {
            format!("n L sigma_M = {implied} disagrees with N = {n}")
        })
    }

    /// Mean current `sigma_M n q v_d` with `v_d = nu <theta> v_c`.
    pub fn mean_current(&self, nu: f64, mean_theta: f64) -> f64 {
        self.cross_section * self.carrier_density * self.charge * nu * mean_theta * self.drift_speed
    }
}

/// `a = q v_c / L`.
pub fn pulse_height_from_material(m: &MaterialParams) -> Result<f64> {
    m.validate()?;
    Ok(m.charge * m.drift_speed / m.length)
}

/// `gamma_theta = sigma_c v_t n_c`.
pub fn trapping_rate_from_material(m: &MaterialParams) -> Result<f64> {
    m.validate()?;
    Ok(m.capture_cross_section * m.thermal_speed * m.trap_density)
}

/// `a = I / (N nu <theta>)`.
pub fn pulse_height_from_current(mean_current: f64, n: f64, nu: f64, mean_theta: f64) -> f64 {
    mean_current / (n * nu * mean_theta)
}
