//! Declarative experiment descriptions and the built-in figure presets.

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use trapnoise::{Estimator, RateModel, SimConfig, TrappingModel};

pub const PRESETS: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "fig6"];

/// Detrapping rates of the component exponentials drawn in fig2.
pub const FIG2_COMPONENT_RATES: [f64; 10] =
    [1e-3, 2.78e-3, 7.74e-3, 2.15e-2, 5.99e-2, 1.67e-1, 4.64e-1, 1.29, 3.59, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Detrapping-time density and its exponential components.
    Density,
    /// Monte Carlo spectra.
    Spectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub label: String,
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub estimator: Estimator,
    /// Lowest frequency; defaults to `1 / T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    /// Highest frequency; defaults to `10 gamma_max`. Ignored by the FFT
    /// estimator, which stops at Nyquist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
    pub points_per_decade: usize,
    /// Log-bin the estimate before writing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins_per_decade: Option<usize>,
    /// Window for the Hooge fit; derived from the cutoff and `gamma_max`
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(f64, f64)>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            estimator: Estimator::EventExact,
            f_min: None,
            f_max: None,
            points_per_decade: 20,
            bins_per_decade: None,
            fit_window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analyses {
    pub cutoff: bool,
    pub hooge: bool,
    pub amplitude_pmf: bool,
}

impl Default for Analyses {
    fn default() -> Self {
        Self {
            cutoff: true,
            hooge: true,
            amplitude_pmf: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOptions {
    pub rate_model: RateModel,
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    pub component_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub runs: Vec<RunSpec>,
    #[serde(default)]
    pub spectrum: SpectrumOptions,
    #[serde(default)]
    pub analyses: Analyses,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// Divisor applied to `T` and `R`; 1 reproduces the captions.
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.name.trim().is_empty(), "experiment name is empty");
        ensure!(
            self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'),
            "experiment name {:?} must be alphanumeric, '_' or '-'",
            self.name
        );
        ensure!(self.scale.is_finite() && self.scale >= 1.0, "scale must be >= 1");
        match self.kind {
            ExperimentKind::Density => {
                let d = self.density.as_ref().context("density experiment without density options")?;
                d.rate_model.validate()?;
                ensure!(d.tau_min > 0.0 && d.tau_max > d.tau_min, "need 0 < tau_min < tau_max");
                ensure!(d.points >= 2, "need at least 2 density points");
                ensure!(d.component_rates.iter().all(|&g| g > 0.0), "component rates must be > 0");
            }
            ExperimentKind::Spectrum => {
                ensure!(!self.runs.is_empty(), "spectrum experiment without runs");
                let mut labels = std::collections::HashSet::new();
                for run in &self.runs {
                    ensure!(labels.insert(run.label.as_str()), "duplicate run label {:?}", run.label);
                    run.sim.validate().with_context(|| format!("run {:?}", run.label))?;
                    if self.spectrum.estimator == Estimator::SampledFft {
                        ensure!(run.sim.dt.is_some(), "run {:?}: the FFT estimator needs dt", run.label);
                    }
                }
                ensure!(self.spectrum.points_per_decade >= 1, "points_per_decade must be >= 1");
                if let Some((lo, hi)) = self.spectrum.fit_window {
                    ensure!(lo > 0.0 && hi > lo, "fit window must satisfy 0 < lo < hi");
                }
            }
        }
        Ok(())
    }

    /// Divide `T` and `R` by `factor` (`R` floored at 1). Sampled runs keep
    /// a whole number of samples.
    pub fn scaled(mut self, factor: f64) -> Result<Self> {
        ensure!(factor.is_finite() && factor >= 1.0, "scale must be >= 1");
        for run in &mut self.runs {
            run.sim.horizon /= factor;
            run.sim.realizations = ((run.sim.realizations as f64 / factor).floor() as usize).max(1);
            if let Some(dt) = run.sim.dt {
                let n = (run.sim.horizon / dt).round().max(2.0);
                run.sim.horizon = n * dt;
            }
        }
        self.scale *= factor;
        Ok(self)
    }

    /// Give run `i` the seed `seed + i`.
    pub fn reseeded(mut self, seed: u64) -> Self {
        for (i, run) in self.runs.iter_mut().enumerate() {
            run.sim.seed = seed.wrapping_add(i as u64);
        }
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text).context("parsing experiment spec")?;
        spec.validate()?;
        Ok(spec)
    }
}

fn sim(gmin: f64, gmax: f64, horizon: f64, realizations: usize, seed: u64) -> SimConfig {
    SimConfig {
        rate_model: RateModel::Uniform {
            gamma_min: gmin,
            gamma_max: gmax,
        },
        trapping: TrappingModel { gamma_theta: 1.0 },
        amplitude: 1.0,
        horizon,
        carriers: 1,
        realizations,
        dt: None,
        seed,
    }
}

fn spectrum_spec(name: &str, runs: Vec<RunSpec>, spectrum: SpectrumOptions, analyses: Analyses) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        kind: ExperimentKind::Spectrum,
        runs,
        spectrum,
        analyses,
        density: None,
        output_dir: None,
        scale: 1.0,
    }
}

/// Built-in figure setups with caption parameters. `full` enables runs that
/// are too long for a desk machine (fig4 at `T = 1e8`).
pub fn preset(figure: &str, full: bool) -> Result<ExperimentSpec> {
    let spec = match figure {
        "fig2" => ExperimentSpec {
            name: "fig2".into(),
            kind: ExperimentKind::Density,
            runs: Vec::new(),
            spectrum: SpectrumOptions::default(),
            analyses: Analyses {
                cutoff: false,
                hooge: false,
                amplitude_pmf: false,
            },
            density: Some(DensityOptions {
                rate_model: RateModel::Uniform {
                    gamma_min: 1e-3,
                    gamma_max: 10.0,
                },
                tau_min: 1e-3,
                tau_max: 1e4,
                points: 281,
                component_rates: FIG2_COMPONENT_RATES.to_vec(),
            }),
            output_dir: None,
            scale: 1.0,
        },
        "fig3" => spectrum_spec(
            "fig3",
            vec![RunSpec {
                label: "T1e6".into(),
                sim: sim(1e-4, 1e4, 1e6, 100, 1),
            }],
            SpectrumOptions::default(),
            Analyses::default(),
        ),
        "fig4" => {
            let mut horizons: Vec<f64> = vec![1e4, 1e6];
            if full {
                horizons.push(1e8);
            }
            let runs = horizons
                .iter()
                .enumerate()
                .map(|(i, &t)| RunSpec {
                    label: format!("T1e{}", t.log10().round()),
                    sim: sim(0.0, 1e3, t, 1, 1 + i as u64),
                })
                .collect();
            spectrum_spec("fig4", runs, SpectrumOptions::default(), Analyses::default())
        }
        "fig5" => {
            let runs = [1usize, 1000]
                .iter()
                .enumerate()
                .map(|(i, &r)| RunSpec {
                    label: format!("R{r}"),
                    sim: sim(0.0, 1e3, 1e6, r, 1 + i as u64),
                })
                .collect();
            spectrum_spec("fig5", runs, SpectrumOptions::default(), Analyses::default())
        }
        "fig6" => {
            let mut s = sim(0.0, 1e3, (1u64 << 26) as f64 * 1e-4, 1, 1);
            s.carriers = 1000;
            s.dt = Some(1e-4);
            spectrum_spec(
                "fig6",
                vec![RunSpec {
                    label: "N1000".into(),
                    sim: s,
                }],
                SpectrumOptions {
                    estimator: Estimator::SampledFft,
                    bins_per_decade: Some(20),
                    ..SpectrumOptions::default()
                },
                Analyses {
                    cutoff: true,
                    hooge: true,
                    amplitude_pmf: true,
                },
            )
        }
        other => bail!("unknown preset {other:?}; expected one of {}", PRESETS.join(", ")),
    };
    spec.validate()?;
    Ok(spec)
}
