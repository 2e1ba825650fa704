//! Carrier paths: alternating detrapping gaps and free-flight pulses.
//!
//! A carrier starts trapped at `t = 0`. Each capture draws a fresh
//! detrapping rate, the carrier waits out the gap, then drifts freely for an
//! exponential time with rate `gamma_theta` before the next capture. The
//! path is clipped at the horizon `T`. Durations are stored rather than
//! timestamps; timestamps are rebuilt with compensated summation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, Discrete};

use crate::dist::{detrap_mean, sample_detrap_time, RateModel, TrappingModel};
use crate::error::{ensure, Error, Result};
use crate::numeric::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierState {
    Trapped,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Gap,
    Pulse,
}

impl SegmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Gap => "gap",
            SegmentKind::Pulse => "pulse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rate_model: RateModel,
    pub trapping: TrappingModel,
    /// Current contributed by one free carrier.
    pub amplitude: f64,
    /// Observation time `T`.
    pub horizon: f64,
    /// Carriers per realization `N`.
    pub carriers: usize,
    /// Independent realizations `R`.
    pub realizations: usize,
    /// Sampling period for gridded output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.rate_model.validate()?;
        self.trapping.validate()?;
        ensure(self.amplitude.is_finite() && self.amplitude > 0.0, || {
            format!("amplitude must be > 0, got {}", self.amplitude)
        })?;
        ensure(self.horizon.is_finite() && self.horizon > 0.0, || {
            format!("horizon must be > 0, got {}", self.horizon)
        })?;
        ensure(self.carriers >= 1, || "carriers must be >= 1".into())?;
        ensure(self.realizations >= 1, || "realizations must be >= 1".into())?;
        ensure(self.carriers <= u32::MAX as usize, || "too many carriers".into())?;
        ensure(self.realizations <= u32::MAX as usize, || "too many realizations".into())?;
        if let Some(dt) = self.dt {
            ensure(dt.is_finite() && dt > 0.0 && dt <= self.horizon, || {
                format!("dt must be in (0, T], got {dt}")
            })?;
        }
        Ok(())
    }

    pub fn mean_trapping_time(&self) -> f64 {
        self.trapping.mean_trapping_time()
    }

    /// `1 / (<theta> + <tau>)`, or `None` when `<tau>` diverges.
    pub fn mean_pulse_rate(&self) -> Option<f64> {
        detrap_mean(&self.rate_model)
            .ok()
            .map(|tau| 1.0 / (self.mean_trapping_time() + tau))
    }

    /// Probability that a carrier is free, `<theta> / (<theta> + <tau>)`.
    pub fn free_probability(&self) -> Option<f64> {
        detrap_mean(&self.rate_model).ok().map(|tau| {
            let theta = self.mean_trapping_time();
            theta / (theta + tau)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarrierPath {
    start_state: CarrierState,
    durations: Vec<f64>,
    horizon: f64,
}

impl CarrierPath {
    /// Build a path from explicit durations. Segments alternate starting from
    /// `start_state`; the durations must be positive and sum to at most
    /// `horizon`.
    pub fn from_durations(start_state: CarrierState, durations: Vec<f64>, horizon: f64) -> Result<Self> {
        ensure(horizon > 0.0 && horizon.is_finite(), || "horizon must be > 0".into())?;
        ensure(durations.iter().all(|&d| d > 0.0 && d.is_finite()), || {
            "segment durations must be finite and > 0".into()
        })?;
        let mut total = NeumaierSum::new();
        durations.iter().for_each(|&d| total.add(d));
        ensure(total.value() <= horizon * (1.0 + 1e-12), || {
            format!("segments span {} > horizon {horizon}", total.value())
        })?;
        Ok(CarrierPath {
            start_state,
            durations,
            horizon,
        })
    }

    pub fn start_state(&self) -> CarrierState {
        self.start_state
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    fn kind_at(&self, index: usize) -> SegmentKind {
        let first = match self.start_state {
            CarrierState::Trapped => SegmentKind::Gap,
            CarrierState::Free => SegmentKind::Pulse,
        };
        match (first, index % 2) {
            (k, 0) => k,
            (SegmentKind::Gap, _) => SegmentKind::Pulse,
            (SegmentKind::Pulse, _) => SegmentKind::Gap,
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.durations.iter().enumerate().map(|(i, &duration)| Segment {
            kind: self.kind_at(i),
            duration,
        })
    }

    /// Number of pulses `K` (pulses clipped at `T` included).
    pub fn pulse_count(&self) -> usize {
        let n = self.durations.len();
        match self.start_state {
            CarrierState::Trapped => n / 2,
            CarrierState::Free => n.div_ceil(2),
        }
    }

    /// `(start, end)` of each pulse.
    pub fn pulses(&self) -> Pulses<'_> {
        Pulses {
            path: self,
            index: 0,
            clock: NeumaierSum::new(),
        }
    }

    /// Detrapping instants `t_i` (pulse starts).
    pub fn detrap_times(&self) -> Vec<f64> {
        self.pulses().map(|(s, _)| s).collect()
    }

    pub fn gap_durations(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments()
            .filter(|s| s.kind == SegmentKind::Gap)
            .map(|s| s.duration)
    }

    pub fn pulse_durations(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments()
            .filter(|s| s.kind == SegmentKind::Pulse)
            .map(|s| s.duration)
    }

    /// Total time spent free within `[0, T]`.
    pub fn free_time(&self) -> f64 {
        let mut s = NeumaierSum::new();
        self.pulse_durations().for_each(|d| s.add(d));
        s.value()
    }

    pub fn free_fraction(&self) -> f64 {
        self.free_time() / self.horizon
    }
}

pub struct Pulses<'a> {
    path: &'a CarrierPath,
    index: usize,
    clock: NeumaierSum,
}

impl Iterator for Pulses<'_> {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        while self.index < self.path.durations.len() {
            let i = self.index;
            let d = self.path.durations[i];
            let start = self.clock.value();
            self.clock.add(d);
            self.index += 1;
            if self.path.kind_at(i) == SegmentKind::Pulse {
                return Some((start, self.clock.value()));
            }
        }
        None
    }
}

/// Simulate one carrier over `[0, T]`.
pub fn simulate_carrier<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> CarrierPath {
    simulate_path(&config.rate_model, &config.trapping, config.horizon, rng)
}

pub fn simulate_path<R: Rng + ?Sized>(
    rate_model: &RateModel,
    trapping: &TrappingModel,
    horizon: f64,
    rng: &mut R,
) -> CarrierPath {
    let hint = match detrap_mean(rate_model) {
        Ok(tau) => horizon / (tau + trapping.mean_trapping_time()),
        Err(_) => horizon * trapping.gamma_theta,
    };
    let mut durations = Vec::with_capacity((2.0 * hint.min(1e8)) as usize + 2);
    let mut clock = NeumaierSum::new();
    let mut state = CarrierState::Trapped;
    loop {
        let remaining = horizon - clock.value();
        if remaining <= 0.0 {
            break;
        }
        let d = match state {
            CarrierState::Trapped => sample_detrap_time(rate_model, rng),
            CarrierState::Free => trapping.sample(rng),
        };
        if d <= 0.0 {
            continue;
        }
        if d >= remaining {
            durations.push(remaining);
            break;
        }
        durations.push(d);
        clock.add(d);
        state = match state {
            CarrierState::Trapped => CarrierState::Free,
            CarrierState::Free => CarrierState::Trapped,
        };
    }
    CarrierPath {
        start_state: CarrierState::Trapped,
        durations,
        horizon,
    }
}

/// Empirical pulse rate `K / T`.
pub fn empirical_nu(path: &CarrierPath) -> f64 {
    path.pulse_count() as f64 / path.horizon
}

/// Number of grid points `floor(T / dt)`, tolerant of `T / dt` landing a hair
/// below an integer.
pub fn grid_len(horizon: f64, dt: f64) -> usize {
    let ratio = horizon / dt;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
        rounded as usize
    } else {
        ratio.floor() as usize
    }
}

/// Superposition of carriers sampled at `k dt`, stored as free-carrier counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub dt: f64,
    pub counts: Vec<u32>,
    pub carriers: usize,
    pub amplitude: f64,
}

impl SampledSignal {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.counts.len() as f64 * self.dt
    }

    pub fn value(&self, k: usize) -> f64 {
        self.amplitude * self.counts[k] as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.counts.iter().map(move |&c| self.amplitude * c as f64)
    }

    /// Time-averaged current.
    pub fn mean(&self) -> f64 {
        self.amplitude * self.mean_count()
    }

    pub fn mean_count(&self) -> f64 {
        if self.counts.is_empty() {
            return 0.0;
        }
        let total: u64 = self.counts.iter().map(|&c| c as u64).sum();
        total as f64 / self.counts.len() as f64
    }
}

/// Sample the summed current of `paths` at `t = k dt`, `k = 0 .. floor(T/dt)`.
pub fn superpose(paths: &[CarrierPath], amplitude: f64, dt: f64) -> Result<SampledSignal> {
    let first = paths.first().ok_or(Error::Empty("no carrier paths"))?;
    let horizon = first.horizon;
    for p in paths {
        if (p.horizon - horizon).abs() > 1e-12 * horizon {
            return Err(Error::HorizonMismatch(horizon, p.horizon));
        }
    }
    ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be > 0, got {dt}"))?;
    let len = grid_len(horizon, dt);
    // difference array over the sample grid; sample k is free iff start <= k dt < end
    let mut diff = vec![0i64; len + 1];
    for p in paths {
        for (start, end) in p.pulses() {
            let k0 = ((start / dt).ceil() as usize).min(len);
            let k1 = ((end / dt).ceil() as usize).min(len);
            if k0 < k1 {
                diff[k0] += 1;
                diff[k1] -= 1;
            }
        }
    }
    let mut counts = Vec::with_capacity(len);
    let mut level = 0i64;
    for d in &diff[..len] {
        level += d;
        counts.push(level as u32);
    }
    Ok(SampledSignal {
        dt,
        counts,
        carriers: paths.len(),
        amplitude,
    })
}

/// Occupancy histogram of the number of free carriers, `P(n)` for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudePmf {
    pub probs: Vec<f64>,
}

impl AmplitudePmf {
    pub fn carriers(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean_count(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Maximum-likelihood Binomial success probability, `mean / N`.
    pub fn fit_binomial_p(&self) -> f64 {
        self.mean_count() / self.carriers() as f64
    }

    pub fn mode(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(n, _)| n)
            .unwrap_or(0)
    }
}

pub fn amplitude_pmf(signal: &SampledSignal) -> Result<AmplitudePmf> {
    if signal.is_empty() {
        return Err(Error::Empty("sampled signal"));
    }
    let mut hist = vec![0u64; signal.carriers + 1];
    for &c in &signal.counts {
        hist[c as usize] += 1;
    }
    let total = signal.len() as f64;
    Ok(AmplitudePmf {
        probs: hist.into_iter().map(|h| h as f64 / total).collect(),
    })
}

/// Binomial(N, p) probability mass over `0..=N`.
pub fn binomial_pmf(n: usize, p: f64) -> Result<Vec<f64>> {
    let b = Binomial::new(p, n as u64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((0..=n as u64).map(|k| b.pmf(k)).collect())
}

/// Predicted occupancy law: Binomial(N, p_F) with `p_F = <theta>/(<theta>+<tau>)`
/// when `<tau>` exists, otherwise `p_F` estimated from the signal mean.
pub fn binomial_prediction(signal: &SampledSignal, config: &SimConfig) -> Result<(f64, Vec<f64>)> {
    let p = match config.free_probability() {
        Some(p) => p,
        None => {
            if signal.is_empty() {
                return Err(Error::Empty("sampled signal"));
            }
            signal.mean() / (signal.amplitude * signal.carriers as f64)
        }
    };
    Ok((p, binomial_pmf(signal.carriers, p)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;

    fn config(gmin: f64, gmax: f64, gtheta: f64, horizon: f64) -> SimConfig {
        SimConfig {
            rate_model: RateModel::uniform(gmin, gmax).unwrap(),
            trapping: TrappingModel::new(gtheta).unwrap(),
            amplitude: 1.0,
            horizon,
            carriers: 1,
            realizations: 1,
            dt: None,
            seed: 1,
        }
    }

    #[test]
    fn config_validation() {
        let mut c = config(1e-3, 10.0, 1.0, 100.0);
        assert!(c.validate().is_ok());
        c.carriers = 0;
        assert!(c.validate().is_err());
        let mut c = config(1e-3, 10.0, 1.0, 100.0);
        c.dt = Some(0.0);
        assert!(c.validate().is_err());
        c.dt = Some(0.1);
        assert!(c.validate().is_ok());
        c.horizon = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn path_invariants() {
        let c = config(1e-3, 10.0, 1.0, 1e3);
        let mut rng = stream_rng(11, 0, 0);
        let p = simulate_carrier(&c, &mut rng);
        assert_eq!(p.start_state(), CarrierState::Trapped);
        let kinds: Vec<_> = p.segments().map(|s| s.kind).collect();
        for w in kinds.windows(2) {
            assert_ne!(w[0], w[1]);
        }
        assert!(p.durations().iter().all(|&d| d > 0.0));
        let total: f64 = p.durations().iter().sum();
        assert!((total - 1e3).abs() < 1e-9);
        assert_eq!(p.pulse_count(), kinds.iter().filter(|k| **k == SegmentKind::Pulse).count());
        assert_eq!(p.pulses().count(), p.pulse_count());
        let t = p.detrap_times();
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fast_trapping_keeps_carrier_trapped() {
        let c = config(1.0, 10.0, 1e6, 100.0);
        let mut rng = stream_rng(3, 0, 0);
        let p = simulate_carrier(&c, &mut rng);
        assert!(p.free_fraction() < 1e-4);
    }

    #[test]
    fn empirical_nu_arithmetic() {
        let all_gap = CarrierPath::from_durations(CarrierState::Trapped, vec![10.0], 10.0).unwrap();
        assert_eq!(empirical_nu(&all_gap), 0.0);
        let durations = vec![5.0; 2000];
        let p = CarrierPath::from_durations(CarrierState::Trapped, durations, 1e4).unwrap();
        assert_eq!(p.pulse_count(), 1000);
        assert_eq!(empirical_nu(&p), 0.1);
    }

    #[test]
    fn from_durations_rejects_bad_input() {
        assert!(CarrierPath::from_durations(CarrierState::Trapped, vec![1.0, 0.0], 5.0).is_err());
        assert!(CarrierPath::from_durations(CarrierState::Trapped, vec![3.0, 3.0], 5.0).is_err());
    }

    #[test]
    fn superpose_single_rectangle() {
        // gap 1, pulse 2, gap rest
        let p = CarrierPath::from_durations(CarrierState::Trapped, vec![1.0, 2.0, 7.0], 10.0).unwrap();
        let s = superpose(&[p], 2.0, 0.5).unwrap();
        assert_eq!(s.len(), 20);
        let expect: Vec<u32> = (0..20).map(|k| u32::from((2..6).contains(&k))).collect();
        assert_eq!(s.counts, expect);
        assert_eq!(s.value(3), 2.0);
        assert!((s.mean() - 2.0 * 4.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn superpose_all_trapped_is_zero() {
        let p = CarrierPath::from_durations(CarrierState::Trapped, vec![10.0], 10.0).unwrap();
        let s = superpose(&[p.clone(), p], 1.0, 0.1).unwrap();
        assert!(s.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn superpose_rejects_mismatched_horizons() {
        let a = CarrierPath::from_durations(CarrierState::Trapped, vec![10.0], 10.0).unwrap();
        let b = CarrierPath::from_durations(CarrierState::Trapped, vec![5.0], 5.0).unwrap();
        assert!(matches!(superpose(&[a, b], 1.0, 0.1), Err(Error::HorizonMismatch(..))));
        assert!(superpose(&[], 1.0, 0.1).is_err());
    }

    #[test]
    fn grid_len_handles_rounding() {
        assert_eq!(grid_len(67108864.0 * 1e-4, 1e-4), 1 << 26);
        assert_eq!(grid_len(10.0, 3.0), 3);
    }

    #[test]
    fn pmf_point_mass_and_normalization() {
        let s = SampledSignal {
            dt: 1.0,
            counts: vec![3; 17],
            carriers: 3,
            amplitude: 0.5,
        };
        let pmf = amplitude_pmf(&s).unwrap();
        assert_eq!(pmf.probs, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(pmf.mode(), 3);

        let s = SampledSignal {
            dt: 1.0,
            counts: (0..1000).map(|k| (k * 7 % 5) as u32).collect(),
            carriers: 4,
            amplitude: 1.0,
        };
        let pmf = amplitude_pmf(&s).unwrap();
        assert!((pmf.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let empty = SampledSignal {
            dt: 1.0,
            counts: vec![],
            carriers: 4,
            amplitude: 1.0,
        };
        assert!(amplitude_pmf(&empty).is_err());
    }

    #[test]
    fn binomial_prediction_falls_back_to_signal_mean() {
        let c = config(0.0, 1e3, 1.0, 10.0);
        let s = SampledSignal {
            dt: 1.0,
            counts: vec![1, 2, 1, 2],
            carriers: 2,
            amplitude: 3.0,
        };
        let (p, pmf) = binomial_prediction(&s, &c).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let c = config(1.0, 3.0, 1.0, 10.0);
        let (p, _) = binomial_prediction(&s, &c).unwrap();
        let tau = (3.0f64).ln() / 2.0;
        assert!((p - 1.0 / (1.0 + tau)).abs() < 1e-15);
    }
}
