//! Executes experiment specs and derives their analysis reports.

use std::f64::consts::TAU;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use trapnoise::analysis::{
    cutoff_by_regime, effective_cutoff, hooge_alpha_combined, hooge_alpha_fitted, hooge_alpha_full,
    hooge_alpha_predicted, CutoffPrediction, HoogeEstimate,
};
use trapnoise::charfn::{psd_full_expression, psd_multi_carrier, psd_poisson_pulse, CharFn};
use trapnoise::dist::detrap_pdf;
use trapnoise::ensemble::{run_event_ensemble, run_sampled_ensemble, EnsembleStats};
use trapnoise::exec::with_workers;
use trapnoise::numeric::loglog_slope;
use trapnoise::sim::{binomial_pmf, AmplitudePmf};
use trapnoise::spectra::{logbin_spectrum, natural_log_grid};
use trapnoise::{Estimator, Execution, SimConfig, SpectrumEstimate};

use crate::experiment::{DensityOptions, ExperimentSpec, RunSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
    pub execution: Execution,
}

/// Spectrum and ensemble summary for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub label: String,
    pub spectrum: SpectrumEstimate,
    pub stats: Option<EnsembleStats>,
    pub amplitude_pmf: Option<AmplitudePmf>,
}

/// Frequencies at which event-exact spectra of `sim` are evaluated.
pub fn frequency_grid(spec: &ExperimentSpec, sim: &SimConfig) -> Vec<f64> {
    let t = sim.horizon;
    let f_min = spec.spectrum.f_min.unwrap_or(1.0 / t);
    let f_max = spec.spectrum.f_max.unwrap_or(10.0 * sim.rate_model.gamma_max());
    natural_log_grid(t, f_min, f_max, spec.spectrum.points_per_decade)
}

pub fn run_spectra(spec: &ExperimentSpec, opts: RunOptions) -> Result<Vec<RunOutcome>> {
    spec.validate()?;
    with_workers(opts.workers, || {
        spec.runs
            .iter()
            .map(|run| run_one(spec, run, opts.execution))
            .collect()
    })
}

fn run_one(spec: &ExperimentSpec, run: &RunSpec, exec: Execution) -> Result<RunOutcome> {
    log::info!("run {}: T={} R={} N={}", run.label, run.sim.horizon, run.sim.realizations, run.sim.carriers);
    let ens = match spec.spectrum.estimator {
        Estimator::EventExact => run_event_ensemble(&run.sim, &frequency_grid(spec, &run.sim), exec),
        Estimator::SampledFft => run_sampled_ensemble(&run.sim, exec),
    }
    .with_context(|| format!("run {:?}", run.label))?;
    let mut spectrum = ens.spectrum;
    if let Some(bpd) = spec.spectrum.bins_per_decade {
        spectrum = logbin_spectrum(&spectrum, bpd)?;
    }
    Ok(RunOutcome {
        label: run.label.clone(),
        spectrum,
        stats: Some(ens.stats),
        amplitude_pmf: ens.amplitude_pmf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSummary {
    pub selected: CutoffPrediction,
    pub by_regime: Vec<CutoffPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoogeSummary {
    pub predicted: HoogeEstimate,
    /// `1 / (nu <theta>^2 gamma_max)` with the empirical `nu`.
    pub full: f64,
    /// `N^2 a^2 nu / (gamma_max I^2)`.
    pub combined: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted: Option<HoogeEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub region: String,
    pub f_lo: f64,
    pub f_hi: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSummary {
    /// Maximum-likelihood binomial `p = mean / N`.
    pub p_fit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_predicted: Option<f64>,
    pub mode: usize,
    pub probs: Vec<f64>,
    pub binomial: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAnalysis {
    pub label: String,
    pub config: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<EnsembleStats>,
    /// Pulse rate used for the analytic curves: empirical when available.
    pub nu: f64,
    pub mean_current: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hooge: Option<HoogeSummary>,
    pub slopes: Vec<SlopeFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<AmplitudeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub runs: Vec<RunAnalysis>,
}

/// Externally measured quantities that take precedence over ensemble
/// statistics and configuration-derived values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measured {
    pub nu: Option<f64>,
    pub mean_current: Option<f64>,
}

/// Pulse rate and mean current for a run: overrides first, then ensemble
/// statistics, then the configuration (ergodic configurations only).
fn rates(sim: &SimConfig, stats: Option<&EnsembleStats>, measured: Measured) -> Result<(f64, Option<f64>)> {
    if let Some(s) = stats {
        return Ok((
            measured.nu.unwrap_or(s.nu),
            Some(measured.mean_current.unwrap_or(s.mean_current)),
        ));
    }
    let nu = match measured.nu {
        Some(nu) => nu,
        None => sim
            .mean_pulse_rate()
            .context("nonergodic configuration: the pulse rate must be measured (stats file or --nu)")?,
    };
    let current = measured.mean_current.or_else(|| {
        sim.free_probability()
            .map(|p| sim.amplitude * sim.carriers as f64 * p)
    });
    Ok((nu, current))
}

/// Default Hooge window: a decade above the cutoff to a decade below
/// `gamma_max`, in cycles per unit time.
pub fn default_fit_window(gamma_min_eff: f64, gamma_max: f64) -> Option<(f64, f64)> {
    let lo = 10.0 * gamma_min_eff / TAU;
    let hi = gamma_max / (10.0 * TAU);
    (hi >= 10.0 * lo).then_some((lo, hi))
}

pub fn analyze_run(
    spec: &ExperimentSpec,
    run: &RunSpec,
    outcome: &RunOutcome,
    measured: Measured,
) -> Result<RunAnalysis> {
    let sim = run.sim;
    let (nu, current) = rates(&sim, outcome.stats.as_ref(), measured)?;
    let gmax = sim.rate_model.gamma_max();
    let est = &outcome.spectrum;

    let selected = effective_cutoff(&sim)?;
    let cutoff = spec.analyses.cutoff.then(|| CutoffSummary {
        selected,
        by_regime: cutoff_by_regime(&sim),
    });

    let hooge = if spec.analyses.hooge {
        let window = spec
            .spectrum
            .fit_window
            .or_else(|| default_fit_window(selected.gamma_min_eff, gmax));
        let fit = match (window, current) {
            (None, _) => Err("no decade-wide 1/f window between the cutoff and gamma_max".to_string()),
            (_, None) => Err("mean current unknown".to_string()),
            (Some(w), Some(i)) => hooge_alpha_fitted(est, i, sim.carriers, w).map_err(|e| e.to_string()),
        };
        let theta = sim.mean_trapping_time();
        Some(HoogeSummary {
            predicted: hooge_alpha_predicted(sim.trapping.gamma_theta, gmax)?,
            full: hooge_alpha_full(nu, theta, gmax),
            combined: current.map_or(f64::NAN, |i| hooge_alpha_combined(sim.carriers, sim.amplitude, nu, gmax, i)),
            fit_error: fit.as_ref().err().cloned(),
            fitted: fit.ok(),
        })
    } else {
        None
    };

    let mut slopes = Vec::new();
    let mut push_slope = |region: &str, lo: f64, hi: f64| {
        if let Some(slope) = loglog_slope(&est.freqs, &est.values, lo, hi) {
            slopes.push(SlopeFit {
                region: region.into(),
                f_lo: lo,
                f_hi: hi,
                slope,
            });
        }
    };
    if let Some(&f0) = est.freqs.first() {
        push_slope("lowest_decade", f0, 10.0 * f0);
    }
    if let Some((lo, hi)) = default_fit_window(selected.gamma_min_eff, gmax) {
        push_slope("one_over_f", lo, hi);
    }
    push_slope("above_gamma_max", gmax, 10.0 * gmax);

    let amplitude = match (&outcome.amplitude_pmf, spec.analyses.amplitude_pmf) {
        (Some(pmf), true) => {
            let p = pmf.fit_binomial_p();
            Some(AmplitudeSummary {
                p_fit: p,
                p_predicted: sim.free_probability(),
                mode: pmf.mode(),
                probs: pmf.probs.clone(),
                binomial: binomial_pmf(pmf.carriers(), p)?,
            })
        }
        _ => None,
    };

    Ok(RunAnalysis {
        label: run.label.clone(),
        config: sim,
        stats: outcome.stats,
        nu,
        mean_current: current,
        cutoff,
        hooge,
        slopes,
        amplitude,
    })
}

pub fn analyze(spec: &ExperimentSpec, outcomes: &[RunOutcome], measured: Measured) -> Result<ExperimentReport> {
    let runs = spec
        .runs
        .iter()
        .zip(outcomes)
        .map(|(run, out)| analyze_run(spec, run, out, measured))
        .collect::<Result<_>>()?;
    Ok(ExperimentReport {
        name: spec.name.clone(),
        runs,
    })
}

/// Columns of the analytic comparison table for one run.
pub struct AnalyticCurves {
    pub freqs: Vec<f64>,
    pub one_over_f: Vec<f64>,
    pub full_expression: Vec<f64>,
    pub with_cutoff: Vec<f64>,
}

/// Closed-form spectra at the estimate's frequencies, using the run's
/// measured pulse rate: the `N a^2 nu / (gmax f)` law, the full
/// broad-range expression, and the exact pulse spectrum with the detrapping
/// range truncated at the predicted effective cutoff.
pub fn analytic_curves(analysis: &RunAnalysis, freqs: &[f64]) -> AnalyticCurves {
    let s = analysis.config;
    let (a, n, nu, gt) = (s.amplitude, s.carriers, analysis.nu, s.trapping.gamma_theta);
    let gmax = s.rate_model.gamma_max();
    let gmin_eff = analysis
        .cutoff
        .as_ref()
        .map_or_else(|| s.rate_model.gamma_min(), |c| c.selected.gamma_min_eff)
        .min(gmax);
    let chi = CharFn::UniformRate {
        gamma_min: gmin_eff,
        gamma_max: gmax,
    };
    let nf = n as f64;
    AnalyticCurves {
        freqs: freqs.to_vec(),
        one_over_f: freqs.iter().map(|&f| psd_multi_carrier(f, n, a, nu, gmax)).collect(),
        full_expression: freqs.iter().map(|&f| nf * psd_full_expression(f, a, nu, gt, gmax)).collect(),
        with_cutoff: freqs
            .iter()
            .map(|&f| psd_poisson_pulse(f, a, nu, gt, &chi).map_or(f64::NAN, |v| nf * v))
            .collect(),
    }
}

/// Density table for the fig2-style plot: `tau`, the mixture density and
/// each exponential component weighted by `g dln(g) / (gmax - gmin)`, so
/// that the components sum to a Riemann approximation of the density.
pub fn density_table(d: &DensityOptions) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let (lo, hi) = (d.tau_min.ln(), d.tau_max.ln());
    let taus: Vec<f64> = (0..d.points)
        .map(|i| (lo + (hi - lo) * i as f64 / (d.points - 1) as f64).exp())
        .collect();
    let pdf = taus
        .iter()
        .map(|&t| detrap_pdf(t, &d.rate_model))
        .collect::<trapnoise::Result<Vec<f64>>>()?;
    let (gmin, gmax) = d.rate_model.bounds();
    let rates = &d.component_rates;
    let dln = if rates.len() > 1 {
        (rates[rates.len() - 1] / rates[0]).ln() / (rates.len() - 1) as f64
    } else {
        1.0
    };
    let mut headers = vec!["tau".to_string(), "density".to_string()];
    let mut cols = vec![taus.clone(), pdf];
    for &g in rates {
        let w = if gmax > gmin { g * dln / (gmax - gmin) } else { 1.0 };
        headers.push(format!("component_{}", trapnoise::export::fmt_f64(g)));
        cols.push(taus.iter().map(|&t| w * g * (-g * t).exp()).collect());
    }
    Ok((headers, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::preset;

    #[test]
    fn density_components_approximate_density() {
        let spec = preset("fig2", false).unwrap();
        let (headers, cols) = density_table(spec.density.as_ref().unwrap()).unwrap();
        assert_eq!(headers.len(), 12);
        assert_eq!(cols.len(), 12);
        // between the extreme rates the component sum follows the density
        for i in (0..cols[0].len()).filter(|&i| (0.3..30.0).contains(&cols[0][i])) {
            let sum: f64 = cols[2..].iter().map(|c| c[i]).sum();
            assert!((sum / cols[1][i] - 1.0).abs() < 0.5, "tau={}", cols[0][i]);
        }
    }

    #[test]
    fn small_run_reports() {
        let mut spec = preset("fig4", false).unwrap().scaled(100.0).unwrap();
        spec.runs.truncate(1);
        let out = run_spectra(&spec, RunOptions::default()).unwrap();
        let rep = analyze(&spec, &out, Measured::default()).unwrap();
        let r = &rep.runs[0];
        assert!(r.nu > 0.0 && r.nu < 1.0);
        assert!(r.cutoff.is_some());
        let h = r.hooge.as_ref().unwrap();
        assert_eq!(h.predicted.alpha, 1e-3);
        assert!(!r.slopes.is_empty());
        let curves = analytic_curves(r, &out[0].spectrum.freqs);
        assert_eq!(curves.one_over_f.len(), out[0].spectrum.len());
    }

    #[test]
    fn nonergodic_analysis_needs_measured_rate() {
        let spec = preset("fig4", false).unwrap();
        let fake = RunOutcome {
            label: "x".into(),
            spectrum: SpectrumEstimate {
                freqs: vec![1.0, 2.0],
                values: vec![1.0, 0.5],
                realizations: 1,
                estimator: Estimator::EventExact,
                horizon: 1e4,
                config: None,
            },
            stats: None,
            amplitude_pmf: None,
        };
        assert!(analyze_run(&spec, &spec.runs[0], &fake, Measured::default()).is_err());
        let given = Measured {
            nu: Some(0.9),
            mean_current: Some(0.9),
        };
        assert!(analyze_run(&spec, &spec.runs[0], &fake, given).is_ok());
    }
}
