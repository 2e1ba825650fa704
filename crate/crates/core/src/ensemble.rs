//! Realization ensembles: simulate, estimate, average.
//!
//! Carrier `c` of realization `r` always draws from `stream_rng(seed, r, c)`,
//! and realizations are reduced in index order, so output is independent of
//! the thread count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_rng, Execution};
use crate::sim::{amplitude_pmf, simulate_carrier, superpose, AmplitudePmf, CarrierPath, SimConfig};
use crate::spectra::{average_spectra, periodogram_event_exact_multi, periodogram_fft, SpectrumEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationStats {
    pub pulses: u64,
    /// Mean over carriers of `K / T`.
    pub nu: f64,
    /// Time-averaged current `a * sum(free time) / T`.
    pub mean_current: f64,
    pub free_fraction: f64,
}

impl RealizationStats {
    pub fn of(paths: &[CarrierPath], amplitude: f64) -> Self {
        let horizon = paths.first().map_or(1.0, |p| p.horizon());
        let n = paths.len().max(1) as f64;
        let pulses: u64 = paths.iter().map(|p| p.pulse_count() as u64).sum();
        let free: f64 = paths.iter().map(|p| p.free_time()).sum();
        RealizationStats {
            pulses,
            nu: pulses as f64 / (n * horizon),
            mean_current: amplitude * free / horizon,
            free_fraction: free / (n * horizon),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub realizations: usize,
    pub carriers: usize,
    pub total_pulses: u64,
    /// Empirical pulse rate per carrier, `K / (N R T)`.
    pub nu: f64,
    pub mean_current: f64,
    pub free_fraction: f64,
}

impl EnsembleStats {
    pub fn from_realizations(stats: &[RealizationStats], carriers: usize) -> Self {
        let r = stats.len().max(1) as f64;
        EnsembleStats {
            realizations: stats.len(),
            carriers,
            total_pulses: stats.iter().map(|s| s.pulses).sum(),
            nu: stats.iter().map(|s| s.nu).sum::<f64>() / r,
            mean_current: stats.iter().map(|s| s.mean_current).sum::<f64>() / r,
            free_fraction: stats.iter().map(|s| s.free_fraction).sum::<f64>() / r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub spectrum: SpectrumEstimate,
    pub stats: EnsembleStats,
    pub per_realization: Vec<RealizationStats>,
    /// Pooled occupation-number histogram, sampled runs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_pmf: Option<AmplitudePmf>,
}

/// The `N` carrier paths of realization `r`.
pub fn simulate_realization(config: &SimConfig, r: usize, exec: Execution) -> Result<Vec<CarrierPath>> {
    config.validate()?;
    Ok(simulate_realization_unchecked(config, r, exec))
}

fn simulate_realization_unchecked(config: &SimConfig, r: usize, exec: Execution) -> Vec<CarrierPath> {
    map_indexed(config.carriers, exec, |c| {
        let mut rng = stream_rng(config.seed, r as u32, c as u32);
        simulate_carrier(config, &mut rng)
    })
}

/// All realizations of `config`, held in memory.
pub fn simulate_ensemble(config: &SimConfig, exec: Execution) -> Result<Vec<Vec<CarrierPath>>> {
    config.validate()?;
    check_index_range(config)?;
    Ok(map_indexed(config.realizations, exec, |r| {
        simulate_realization_unchecked(config, r, Execution::Sequential)
    }))
}

fn check_index_range(config: &SimConfig) -> Result<()> {
    if config.realizations > u32::MAX as usize || config.carriers > u32::MAX as usize {
        return Err(Error::InvalidParameter("realization and carrier counts must fit in 32 bits".into()));
    }
    Ok(())
}

/// Event-exact spectrum of `config` on `freqs`, averaged over realizations.
/// Paths are dropped as soon as their realization is reduced.
pub fn run_event_ensemble(config: &SimConfig, freqs: &[f64], exec: Execution) -> Result<EnsembleRun> {
    config.validate()?;
    check_index_range(config)?;
    let per: Vec<Result<(SpectrumEstimate, RealizationStats)>> = map_indexed(config.realizations, exec, |r| {
        let paths = simulate_realization_unchecked(config, r, exec);
        let est = periodogram_event_exact_multi(&paths, config.amplitude, freqs, exec)?;
        Ok((est, RealizationStats::of(&paths, config.amplitude)))
    });
    let (spectra, stats): (Vec<_>, Vec<_>) = per.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(EnsembleRun {
        spectrum: average_spectra(&spectra)?.with_config(*config),
        stats: EnsembleStats::from_realizations(&stats, config.carriers),
        per_realization: stats,
        amplitude_pmf: None,
    })
}

/// FFT spectrum of the sampled superposed current, averaged over
/// realizations. Requires `config.dt`.
pub fn run_sampled_ensemble(config: &SimConfig, exec: Execution) -> Result<EnsembleRun> {
    config.validate()?;
    check_index_range(config)?;
    let dt = config
        .dt
        .ok_or_else(|| Error::InvalidParameter("sampled spectra need a sampling interval dt".into()))?;
    let mut spectra = Vec::with_capacity(config.realizations);
    let mut stats = Vec::with_capacity(config.realizations);
    let mut pooled: Option<Vec<f64>> = None;
    // one realization at a time: sampled signals can be very long
    for r in 0..config.realizations {
        let paths = simulate_realization_unchecked(config, r, exec);
        stats.push(RealizationStats::of(&paths, config.amplitude));
        let signal = superpose(&paths, config.amplitude, dt)?;
        drop(paths);
        let pmf = amplitude_pmf(&signal)?;
        match pooled.as_mut() {
            Some(acc) => acc.iter_mut().zip(&pmf.probs).for_each(|(a, p)| *a += p),
            None => pooled = Some(pmf.probs),
        }
        spectra.push(periodogram_fft(&signal)?);
    }
    let r = config.realizations as f64;
    let probs = pooled.map(|p| p.into_iter().map(|v| v / r).collect());
    Ok(EnsembleRun {
        spectrum: average_spectra(&spectra)?.with_config(*config),
        stats: EnsembleStats::from_realizations(&stats, config.carriers),
        per_realization: stats,
        amplitude_pmf: probs.map(|probs| AmplitudePmf { probs }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{RateModel, TrappingModel};
    use crate::spectra::natural_log_grid;

    fn cfg() -> SimConfig {
        SimConfig {
            rate_model: RateModel::uniform(0.1, 10.0).unwrap(),
            trapping: TrappingModel::new(1.0).unwrap(),
            amplitude: 1.5,
            horizon: 200.0,
            carriers: 3,
            realizations: 4,
            dt: Some(0.05),
            seed: 11,
        }
    }

    #[test]
    fn event_ensemble_matches_manual_average() {
        let c = cfg();
        let freqs = natural_log_grid(c.horizon, 0.01, 2.0, 10);
        let run = run_event_ensemble(&c, &freqs, Execution::Sequential).unwrap();
        let manual: Vec<SpectrumEstimate> = simulate_ensemble(&c, Execution::Sequential)
            .unwrap()
            .iter()
            .map(|p| periodogram_event_exact_multi(p, c.amplitude, &freqs, Execution::Sequential).unwrap())
            .collect();
        let avg = average_spectra(&manual).unwrap();
        assert_eq!(run.spectrum.values, avg.values);
        assert_eq!(run.spectrum.realizations, 4);
        assert_eq!(run.per_realization.len(), 4);
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let c = cfg();
        let freqs = natural_log_grid(c.horizon, 0.01, 5.0, 20);
        let a = run_event_ensemble(&c, &freqs, Execution::Sequential).unwrap();
        let b = crate::exec::with_workers(Some(3), || run_event_ensemble(&c, &freqs, Execution::Parallel)).unwrap();
        assert_eq!(a, b);
        let s1 = run_sampled_ensemble(&c, Execution::Sequential).unwrap();
        let s2 = run_sampled_ensemble(&c, Execution::Parallel).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn stats_are_consistent() {
        let c = cfg();
        let run = run_sampled_ensemble(&c, Execution::Sequential).unwrap();
        let st = run.stats;
        assert_eq!(st.realizations, 4);
        assert!((st.mean_current - c.amplitude * c.carriers as f64 * st.free_fraction).abs() < 1e-9);
        let pmf = run.amplitude_pmf.unwrap();
        assert_eq!(pmf.carriers(), 3);
        assert!((pmf.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // sampled occupancy tracks the continuous free fraction
        assert!((pmf.fit_binomial_p() - st.free_fraction).abs() < 0.01);
    }

    #[test]
    fn sampled_run_requires_dt() {
        let mut c = cfg();
        c.dt = None;
        assert!(run_sampled_ensemble(&c, Execution::Sequential).is_err());
    }
}
