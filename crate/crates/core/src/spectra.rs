//! Periodogram estimation.
//!
//! Two estimators of the one-sided spectrum `S(f) = (2/T) |X_T(f)|^2`:
//!
//! * [`periodogram_event_exact`] evaluates the Fourier integral of the
//!   piecewise-constant current exactly from its switching instants. Each
//!   pulse `[s, e)` contributes `a (e^{-2 pi i f s} - e^{-2 pi i f e}) / (2 pi i f)`.
//!   Cost is `O(events x frequencies)`, so it suits sparse log grids.
//! * [`periodogram_fft`] works on a sampled signal and yields every natural
//!   frequency `k / T` at once.
//!
//! The signal mean is not removed; on natural frequencies it only feeds the
//! excluded zero bin. No window is applied.

use std::f64::consts::TAU;

use num_complex::Complex64;
use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::numeric::ComplexSum;
use crate::sim::{CarrierPath, SampledSignal, SimConfig};

/// Frequencies per work unit of the event-exact sum. Fixed so that results
/// do not depend on the thread count.
const FREQ_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    EventExact,
    SampledFft,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::EventExact => "event_exact",
            Estimator::SampledFft => "sampled_fft",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    /// Number of averaged realizations.
    pub realizations: usize,
    pub estimator: Estimator,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SimConfig>,
}

impl SpectrumEstimate {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn with_config(mut self, config: SimConfig) -> Self {
        self.config = Some(config);
        self
    }

    /// `(f, S)` pairs with `lo <= f <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs
            .iter()
            .zip(&self.values)
            .filter(move |(&f, _)| f >= lo && f <= hi)
            .map(|(&f, &s)| (f, s))
    }
}

fn check_grid(freqs: &[f64]) -> Result<()> {
    ensure(freqs.iter().all(|&f| f > 0.0 && f.is_finite()), || {
        "frequencies must be finite and > 0".into()
    })?;
    ensure(freqs.windows(2).all(|w| w[0] < w[1]), || {
        "frequencies must be strictly increasing".into()
    })
}

/// Natural frequencies `k / T` spaced roughly `points_per_decade` per decade
/// over `[f_min, f_max]`, duplicates removed. `f_min` is raised to `1 / T`.
pub fn natural_log_grid(horizon: f64, f_min: f64, f_max: f64, points_per_decade: usize) -> Vec<f64> {
    let k_lo = (f_min * horizon).ceil().max(1.0);
    let k_hi = (f_max * horizon).floor();
    if k_hi < k_lo || points_per_decade == 0 {
        return Vec::new();
    }
    let decades = (k_hi / k_lo).log10();
    let steps = (decades * points_per_decade as f64).ceil() as usize;
    let mut ks: Vec<u64> = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let k = (k_lo * 10f64.powf(i as f64 / points_per_decade as f64)).round().min(k_hi);
        let k = k as u64;
        if ks.last() != Some(&k) {
            ks.push(k);
        }
    }
    ks.into_iter().map(|k| k as f64 / horizon).collect()
}

/// Runs of `run_len` consecutive natural frequencies starting at log-spaced
/// points, `runs_per_decade` per decade over `[f_min, f_max]`. Consecutive
/// runs let band averages pool many nearly independent periodogram values
/// while the event-exact sum stays cheap.
pub fn natural_run_grid(horizon: f64, f_min: f64, f_max: f64, runs_per_decade: usize, run_len: usize) -> Vec<f64> {
    let starts = natural_log_grid(horizon, f_min, f_max, runs_per_decade);
    let k_hi = (f_max * horizon).floor() as u64;
    let mut ks: Vec<u64> = Vec::new();
    for f in starts {
        let k0 = (f * horizon).round() as u64;
        for k in k0..k0 + run_len as u64 {
            if k > k_hi {
                break;
            }
            if ks.last().is_none_or(|&last| k > last) {
                ks.push(k);
            }
        }
    }
    ks.into_iter().map(|k| k as f64 / horizon).collect()
}

#[inline]
fn cis_neg(cycles: f64) -> Complex64 {
    let frac = cycles - cycles.floor();
    let (s, c) = (TAU * frac).sin_cos();
    Complex64::new(c, -s)
}

/// `sum_pulses (e^{-2 pi i f s} - e^{-2 pi i f e})` for each frequency in a
/// chunk. Frequencies one natural step `1/T` above their predecessor are
/// reached by rotating the previous phasor instead of a fresh `sin_cos`.
fn chunk_sums(paths: &[CarrierPath], freqs: &[f64], step: f64) -> Vec<Complex64> {
    let n = freqs.len();
    let rotate: Vec<bool> = (0..n)
        .map(|j| j > 0 && ((freqs[j] - freqs[j - 1]) - step).abs() <= 1e-9 * step)
        .collect();
    let any_rotate = rotate.iter().any(|&r| r);
    let mut acc = vec![ComplexSum::default(); n];

    let add_event = |t: f64, sign: f64, acc: &mut [ComplexSum]| {
        let base = if any_rotate {
            cis_neg(step * t)
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut prev = Complex64::new(1.0, 0.0);
        for j in 0..n {
            let z = if rotate[j] {
                prev * base
            } else {
                cis_neg(freqs[j] * t)
            };
            acc[j].add(z * sign);
            prev = z;
        }
    };

    for path in paths {
        for (s, e) in path.pulses() {
            add_event(s, 1.0, &mut acc);
            add_event(e, -1.0, &mut acc);
        }
    }
    acc.iter().map(|a| a.value()).collect()
}

/// Fourier sums of the switching events of `paths` (a superposition) on
/// `freqs`, split into fixed-size frequency chunks.
fn event_sums(paths: &[CarrierPath], freqs: &[f64], exec: Execution) -> Vec<Complex64> {
    let horizon = paths[0].horizon();
    let step = 1.0 / horizon;
    let chunks: Vec<&[f64]> = freqs.chunks(FREQ_CHUNK).collect();
    map_indexed(chunks.len(), exec, |i| chunk_sums(paths, chunks[i], step))
        .into_iter()
        .flatten()
        .collect()
}

/// Exact periodogram of one carrier's rectangular-pulse current.
pub fn periodogram_event_exact(path: &CarrierPath, a: f64, freqs: &[f64]) -> Result<SpectrumEstimate> {
    periodogram_event_exact_multi(std::slice::from_ref(path), a, freqs, Execution::Sequential)
}

/// Exact periodogram of the summed current of several carriers sharing `T`.
pub fn periodogram_event_exact_multi(
    paths: &[CarrierPath],
    a: f64,
    freqs: &[f64],
    exec: Execution,
) -> Result<SpectrumEstimate> {
    let first = paths.first().ok_or(Error::Empty("no carrier paths"))?;
    let horizon = first.horizon();
    for p in paths {
        if (p.horizon() - horizon).abs() > 1e-12 * horizon {
            return Err(Error::HorizonMismatch(horizon, p.horizon()));
        }
    }
    check_grid(freqs)?;
    let sums = event_sums(paths, freqs, exec);
    let a2 = a * a;
    let values = freqs
        .iter()
        .zip(&sums)
        .map(|(&f, z)| {
            let w = TAU * f;
            2.0 / horizon * a2 * z.norm_sqr() / (w * w)
        })
        .collect();
    Ok(SpectrumEstimate {
        freqs: freqs.to_vec(),
        values,
        realizations: 1,
        estimator: Estimator::EventExact,
        horizon,
        config: None,
    })
}

/// FFT periodogram on the natural frequencies `k / T`, `k = 1 ..= L/2`,
/// normalized as `(2 dt / L) |DFT_k|^2` to match the event-exact estimator.
pub fn periodogram_fft(signal: &SampledSignal) -> Result<SpectrumEstimate> {
    let len = signal.len();
    if len < 2 {
        return Err(Error::Empty("sampled signal needs at least 2 samples"));
    }
    let mut planner = RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(len);
    let mut input: Vec<f64> = signal.values().collect();
    let mut spectrum = fft.make_output_vec();
    fft.process(&mut input, &mut spectrum)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    drop(input);

    let horizon = signal.horizon();
    let norm = 2.0 * signal.dt / len as f64;
    let half = len / 2;
    let freqs = (1..=half).map(|k| k as f64 / horizon).collect();
    let values = spectrum[1..=half].iter().map(|z| norm * z.norm_sqr()).collect();
    Ok(SpectrumEstimate {
        freqs,
        values,
        realizations: 1,
        estimator: Estimator::SampledFft,
        horizon,
        config: None,
    })
}

/// Realization-weighted pointwise mean; realization counts add up.
pub fn average_spectra(estimates: &[SpectrumEstimate]) -> Result<SpectrumEstimate> {
    let first = estimates.first().ok_or(Error::Empty("no spectra to average"))?;
    let mut sums = vec![0.0; first.len()];
    let mut total = 0usize;
    for e in estimates {
        if e.freqs != first.freqs {
            return Err(Error::GridMismatch);
        }
        let w = e.realizations as f64;
        for (acc, v) in sums.iter_mut().zip(&e.values) {
            *acc += w * v;
        }
        total += e.realizations;
    }
    let values = if estimates.len() == 1 {
        first.values.clone()
    } else {
        sums.into_iter().map(|s| s / total as f64).collect()
    };
    Ok(SpectrumEstimate {
        freqs: first.freqs.clone(),
        values,
        realizations: total,
        estimator: first.estimator,
        horizon: first.horizon,
        config: first.config,
    })
}

/// Average into logarithmic bins: geometric-mean frequency, arithmetic-mean
/// power. Bin edges sit at `10^(i / bins_per_decade)`.
pub fn logbin_spectrum(est: &SpectrumEstimate, bins_per_decade: usize) -> Result<SpectrumEstimate> {
    ensure(bins_per_decade >= 1, || "bins_per_decade must be >= 1".into())?;
    let bpd = bins_per_decade as f64;
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < est.len() {
        let bin = (est.freqs[i].log10() * bpd).floor();
        let mut j = i + 1;
        while j < est.len() && (est.freqs[j].log10() * bpd).floor() == bin {
            j += 1;
        }
        if j - i == 1 {
            freqs.push(est.freqs[i]);
            values.push(est.values[i]);
        } else {
            let n = (j - i) as f64;
            let log_mean = est.freqs[i..j].iter().map(|f| f.ln()).sum::<f64>() / n;
            freqs.push(log_mean.exp());
            values.push(est.values[i..j].iter().sum::<f64>() / n);
        }
        i = j;
    }
    Ok(SpectrumEstimate {
        freqs,
        values,
        realizations: est.realizations,
        estimator: est.estimator,
        horizon: est.horizon,
        config: est.config,
    })
}
