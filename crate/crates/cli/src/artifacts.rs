//! Output files: data CSVs, JSON reports, metadata sidecars and gnuplot
//! scripts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use trapnoise::export::{write_spectrum_csv, write_table_csv};

use crate::experiment::ExperimentSpec;
use crate::runner::{analytic_curves, ExperimentReport, RunOutcome};

/// Collects the paths written for one experiment.
pub struct ArtifactSet {
    dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl ArtifactSet {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Create `name` inside the output directory and hand a buffered
    /// writer to `write`.
    pub fn write<F>(&mut self, name: &str, write: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    fn names(&self) -> Vec<String> {
        self.files
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect()
    }
}

/// File stem for run `label` of `spec`: the experiment name alone when it
/// has a single run.
pub fn run_stem(spec: &ExperimentSpec, label: &str) -> String {
    if spec.runs.len() == 1 {
        spec.name.clone()
    } else {
        format!("{}_{}", spec.name, label)
    }
}

pub fn write_spectra(set: &mut ArtifactSet, spec: &ExperimentSpec, outcomes: &[RunOutcome]) -> Result<()> {
    for out in outcomes {
        let stem = run_stem(spec, &out.label);
        set.write(&format!("{stem}_spectrum.csv"), |w| Ok(write_spectrum_csv(w, &out.spectrum)?))?;
    }
    Ok(())
}

pub fn write_analytic(
    set: &mut ArtifactSet,
    spec: &ExperimentSpec,
    outcomes: &[RunOutcome],
    report: &ExperimentReport,
) -> Result<()> {
    for (out, analysis) in outcomes.iter().zip(&report.runs) {
        let c = analytic_curves(analysis, &out.spectrum.freqs);
        let stem = run_stem(spec, &out.label);
        set.write(&format!("{stem}_analytic.csv"), |w| {
            Ok(write_table_csv(
                w,
                &["frequency", "one_over_f", "full_expression", "with_cutoff"],
                &[&c.freqs, &c.one_over_f, &c.full_expression, &c.with_cutoff],
            )?)
        })?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub seeds: Vec<u64>,
    pub scale: f64,
    pub full: bool,
    pub workers: Option<usize>,
    pub started_unix_s: u64,
    pub wall_time_s: f64,
    pub spec: &'a ExperimentSpec,
    pub artifacts: Vec<String>,
}

/// Write `<name>_meta.json`: everything needed to rerun the experiment.
pub fn write_metadata(
    set: &mut ArtifactSet,
    spec: &ExperimentSpec,
    full: bool,
    workers: Option<usize>,
    started: SystemTime,
    elapsed: Duration,
) -> Result<PathBuf> {
    let meta = Metadata {
        tool: "trapnoise",
        version: env!("CARGO_PKG_VERSION"),
        command: std::env::args().collect(),
        seeds: spec.runs.iter().map(|r| r.sim.seed).collect(),
        scale: spec.scale,
        full,
        workers,
        started_unix_s: started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        wall_time_s: elapsed.as_secs_f64(),
        spec,
        artifacts: set.names(),
    };
    let name = format!("{}_meta.json", spec.name);
    set.write_json(&name, &meta)
}

fn gp_string(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// Gnuplot script plotting every run's spectrum against its analytic
/// curves on log-log axes.
pub fn spectrum_plot_script(spec: &ExperimentSpec) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set logscale xy\nset format xy '10^{%L}'\n");
    s.push_str("set xlabel 'f'\nset ylabel 'S(f)'\n");
    s.push_str(&format!("set terminal pngcairo size 900,650\nset output {}\n", gp_string(&format!("{}.png", spec.name))));
    let mut items = Vec::new();
    for run in &spec.runs {
        let stem = run_stem(spec, &run.label);
        let data = gp_string(&format!("{stem}_spectrum.csv"));
        let model = gp_string(&format!("{stem}_analytic.csv"));
        items.push(format!("{data} using 1:2 with points pt 7 ps 0.4 title {}", gp_string(&run.label)));
        items.push(format!("{model} using 1:2 with lines dt 2 title {}", gp_string(&format!("{} a^2 nu/(gmax f)", run.label))));
        items.push(format!("{model} using 1:4 with lines title {}", gp_string(&format!("{} with cutoff", run.label))));
    }
    s.push_str("plot ");
    s.push_str(&items.join(", \\\n     "));
    s.push('\n');
    s
}

pub fn density_plot_script(name: &str, components: usize) -> String {
    let data = gp_string(&format!("{name}_density.csv"));
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set logscale xy\nset format xy '10^{%L}'\n");
    s.push_str("set xlabel 'tau'\nset ylabel 'p(tau)'\nset yrange [1e-12:*]\n");
    s.push_str(&format!("set terminal pngcairo size 900,650\nset output {}\n", gp_string(&format!("{name}.png"))));
    s.push_str(&format!("plot {data} using 1:2 with lines lw 3, \\\n"));
    s.push_str(&format!("     for [i=3:{}] {data} using 1:i with lines dt 2\n", components + 2));
    s
}
