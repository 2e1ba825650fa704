//! Subcommand implementations, independent of argument parsing.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use trapnoise::ensemble::{simulate_realization, EnsembleStats};
use trapnoise::export::{read_spectrum_csv, write_sampled_binary, write_table_csv, EventCsvWriter};
use trapnoise::sim::{superpose, AmplitudePmf};
use trapnoise::exec::with_workers;

use crate::artifacts::{
    density_plot_script, run_stem, spectrum_plot_script, write_analytic, write_metadata, write_spectra, ArtifactSet,
};
use crate::experiment::{preset, ExperimentKind, ExperimentSpec};
use crate::runner::{analyze, density_table, run_spectra, Measured, RunOptions, RunOutcome};

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub seed: Option<u64>,
    pub scale: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub full: bool,
}

impl Common {
    fn run_options(&self) -> RunOptions {
        RunOptions {
            workers: self.workers,
            ..RunOptions::default()
        }
    }

    fn out_dir(&self, spec: &ExperimentSpec) -> PathBuf {
        self.out
            .clone()
            .or_else(|| spec.output_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("output").join(&spec.name))
    }
}

/// Where an experiment spec comes from.
#[derive(Debug, Clone)]
pub enum Source {
    Preset(String),
    Config(PathBuf),
}

/// Load a spec and apply `--scale` and `--seed`.
pub fn load_spec(source: &Source, common: &Common) -> Result<ExperimentSpec> {
    let mut spec = match source {
        Source::Preset(name) => preset(name, common.full)?,
        Source::Config(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentSpec::from_json(&text).with_context(|| format!("in {}", path.display()))?
        }
    };
    if let Some(factor) = common.scale {
        spec = spec.scaled(factor)?;
    }
    if let Some(seed) = common.seed {
        spec = spec.reseeded(seed);
    }
    spec.validate()?;
    Ok(spec)
}

pub fn dump_preset(figure: &str, common: &Common) -> Result<String> {
    let spec = load_spec(&Source::Preset(figure.into()), common)?;
    Ok(serde_json::to_string_pretty(&spec)? + "\n")
}

/// Ensemble statistics written next to each spectrum so that `analyze` can
/// work from files alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub stats: EnsembleStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_pmf: Option<AmplitudePmf>,
}

fn write_stats(set: &mut ArtifactSet, spec: &ExperimentSpec, outcomes: &[RunOutcome]) -> Result<()> {
    for out in outcomes {
        if let Some(stats) = out.stats {
            let file = StatsFile {
                stats,
                amplitude_pmf: out.amplitude_pmf.clone(),
            };
            set.write_json(&format!("{}_stats.json", run_stem(spec, &out.label)), &file)?;
        }
    }
    Ok(())
}

fn ensure_spectrum(spec: &ExperimentSpec) -> Result<()> {
    ensure!(
        spec.kind == ExperimentKind::Spectrum,
        "{} describes a density curve, not a simulation; use `reproduce`",
        spec.name
    );
    Ok(())
}

/// Monte Carlo spectra: spectrum CSVs, stats, analytic curves, plot script
/// and metadata.
pub fn spectrum(spec: &ExperimentSpec, common: &Common) -> Result<ArtifactSet> {
    ensure_spectrum(spec)?;
    let (started, clock) = (SystemTime::now(), Instant::now());
    let outcomes = run_spectra(spec, common.run_options())?;
    let report = analyze(spec, &outcomes, Measured::default())?;
    let mut set = ArtifactSet::new(common.out_dir(spec))?;
    write_spectra(&mut set, spec, &outcomes)?;
    write_stats(&mut set, spec, &outcomes)?;
    write_analytic(&mut set, spec, &outcomes, &report)?;
    set.write(&format!("{}_plot.gp", spec.name), |w| {
        Ok(std::io::Write::write_all(w, spectrum_plot_script(spec).as_bytes())?)
    })?;
    write_metadata(&mut set, spec, common.full, common.workers, started, clock.elapsed())?;
    Ok(set)
}

/// Full figure reproduction: everything `spectrum` writes plus the report,
/// or the density table for density experiments.
pub fn reproduce(spec: &ExperimentSpec, common: &Common) -> Result<ArtifactSet> {
    let (started, clock) = (SystemTime::now(), Instant::now());
    let mut set = ArtifactSet::new(common.out_dir(spec))?;
    match spec.kind {
        ExperimentKind::Density => {
            let d = spec.density.as_ref().context("missing density options")?;
            let (headers, cols) = density_table(d)?;
            let h: Vec<&str> = headers.iter().map(String::as_str).collect();
            let c: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            set.write(&format!("{}_density.csv", spec.name), |w| Ok(write_table_csv(w, &h, &c)?))?;
            set.write(&format!("{}_plot.gp", spec.name), |w| {
                Ok(std::io::Write::write_all(
                    w,
                    density_plot_script(&spec.name, d.component_rates.len()).as_bytes(),
                )?)
            })?;
        }
        ExperimentKind::Spectrum => {
            let outcomes = run_spectra(spec, common.run_options())?;
            let report = analyze(spec, &outcomes, Measured::default())?;
            write_spectra(&mut set, spec, &outcomes)?;
            write_stats(&mut set, spec, &outcomes)?;
            write_analytic(&mut set, spec, &outcomes, &report)?;
            set.write_json(&format!("{}_report.json", spec.name), &report)?;
            set.write(&format!("{}_plot.gp", spec.name), |w| {
                Ok(std::io::Write::write_all(w, spectrum_plot_script(spec).as_bytes())?)
            })?;
        }
    }
    write_metadata(&mut set, spec, common.full, common.workers, started, clock.elapsed())?;
    Ok(set)
}

/// Analysis report from spectra already on disk in `input`.
pub fn analyze_files(spec: &ExperimentSpec, input: &Path, measured: Measured, common: &Common) -> Result<ArtifactSet> {
    ensure_spectrum(spec)?;
    let mut outcomes = Vec::with_capacity(spec.runs.len());
    for run in &spec.runs {
        let stem = run_stem(spec, &run.label);
        let csv = input.join(format!("{stem}_spectrum.csv"));
        let spectrum = read_spectrum_csv(File::open(&csv).with_context(|| format!("opening {}", csv.display()))?)
            .with_context(|| format!("reading {}", csv.display()))?;
        let stats_path = input.join(format!("{stem}_stats.json"));
        let stats: Option<StatsFile> = if stats_path.exists() {
            let f = BufReader::new(File::open(&stats_path)?);
            Some(serde_json::from_reader(f).with_context(|| format!("reading {}", stats_path.display()))?)
        } else {
            None
        };
        outcomes.push(RunOutcome {
            label: run.label.clone(),
            spectrum,
            stats: stats.as_ref().map(|s| s.stats),
            amplitude_pmf: stats.and_then(|s| s.amplitude_pmf),
        });
    }
    let report = analyze(spec, &outcomes, measured)?;
    let mut set = ArtifactSet::new(common.out.clone().unwrap_or_else(|| input.to_path_buf()))?;
    set.write_json(&format!("{}_report.json", spec.name), &report)?;
    Ok(set)
}

/// Raw paths of the first `max_realizations` realizations as event CSVs and,
/// for sampled runs, the sampled signals in binary form.
pub fn simulate(spec: &ExperimentSpec, common: &Common, max_realizations: Option<usize>) -> Result<ArtifactSet> {
    ensure_spectrum(spec)?;
    let (started, clock) = (SystemTime::now(), Instant::now());
    let mut set = ArtifactSet::new(common.out_dir(spec))?;
    let exec = common.run_options().execution;
    for run in &spec.runs {
        let stem = run_stem(spec, &run.label);
        let count = max_realizations.map_or(run.sim.realizations, |m| m.min(run.sim.realizations));
        if count == 0 {
            bail!("nothing to simulate: realization limit is 0");
        }
        set.write(&format!("{stem}_events.csv"), |w| {
            let mut out = EventCsvWriter::new(w)?;
            for r in 0..count {
                let paths = with_workers(common.workers, || simulate_realization(&run.sim, r, exec))?;
                out.write_realization(r, &paths)?;
            }
            out.finish()?;
            Ok(())
        })?;
        if let Some(dt) = run.sim.dt {
            for r in 0..count {
                let paths = with_workers(common.workers, || simulate_realization(&run.sim, r, exec))?;
                let signal = superpose(&paths, run.sim.amplitude, dt)?;
                set.write(&format!("{stem}_r{r}_signal.bin"), |w| {
                    Ok(write_sampled_binary(w, &signal, run.sim.seed)?)
                })?;
            }
        }
    }
    write_metadata(&mut set, spec, common.full, common.workers, started, clock.elapsed())?;
    Ok(set)
}
