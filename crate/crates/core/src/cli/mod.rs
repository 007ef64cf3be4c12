//! Command-line front end. The `rfassign` binary is a thin wrapper over
//! [`main_with_args`].
//!
//! Exit codes: 0 on success, 2 for bad input or usage, 1 for internal faults.

mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{parse_layer_file, EngineConfig};

use crate::assigner::AssignerKind;
use crate::distance::{distance, similarity, MetricKind};
use crate::error::{Error, Result};
use crate::geometry::{compute_trf, resnet50_fpn_paths, Gaussian2D};
use crate::ingest::{load_coco, report, write_coco, write_csv};
use crate::pipeline::{run_assigners, sweep_rows, threshold_sweep, SWEEP_CELLS};
use crate::synthetic::{generate, SyntheticSpec};

#[derive(Debug, Parser)]
#[command(name = "rfassign", version, about = "Receptive-field label assignment for tiny objects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AssignerArg {
    Rfassigner,
    Fcos,
    Rfla,
}

impl From<AssignerArg> for AssignerKind {
    fn from(a: AssignerArg) -> Self {
        match a {
            AssignerArg::Rfassigner => AssignerKind::Rfassigner,
            AssignerArg::Fcos => AssignerKind::Fcos,
            AssignerArg::Rfla => AssignerKind::Rfla,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Wd,
    Kld,
    Nwd,
    Gcd,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Wd => MetricKind::Wd,
            MetricArg::Kld => MetricKind::Kld,
            MetricArg::Nwd => MetricKind::Nwd,
            MetricArg::Gcd => MetricKind::Gcd,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the theoretical receptive field of each layer stack.
    ///
    /// Without a file, prints the built-in ResNet-50 FPN levels.
    Trf {
        /// TOML file of `[[level]]` tables with `name` and `layers`.
        layers: Option<PathBuf>,
    },
    /// Run one assigner over a COCO annotation file.
    Assign {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "rfassigner")]
        assigner: AssignerArg,
        /// Output directory for report.csv and report.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run all three assigners plus the band-threshold sweep.
    Compare {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for report.* and sweep.*.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Distance and similarity for Gaussian pairs.
    ///
    /// One pair per line: `mx my vx vy  mx my vx vy`, means then diagonal
    /// variances, GT first. `#` starts a comment.
    Distances {
        #[arg(long, value_enum)]
        metric: MetricArg,
        /// Normalizing constant for wd/nwd similarity.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        pairs: PathBuf,
    },
    /// Write the seeded synthetic fixture as COCO JSON.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        images: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_user_error() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Trf { layers } => cmd_trf(layers.as_deref(), out),
        Command::Assign {
            annotations,
            config,
            assigner,
            out: dir,
            jobs,
        } => cmd_assign(&annotations, config.as_deref(), assigner.into(), &dir, jobs),
        Command::Compare {
            annotations,
            config,
            out: dir,
            jobs,
        } => cmd_compare(&annotations, config.as_deref(), &dir, jobs),
        Command::Distances { metric, c, pairs } => cmd_distances(metric.into(), c, &pairs, out),
        Command::Synth { out: path, images, seed } => {
            let slice = generate(&SyntheticSpec {
                n_images: images,
                seed,
                ..SyntheticSpec::default()
            })?;
            write_coco(&slice, &path)?;
            log::info!("wrote {} GTs to {}", slice.gt_count(), path.display());
            Ok(())
        }
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        Some(p) => EngineConfig::load(p),
        None => Ok(EngineConfig::default()),
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn cmd_trf(path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let levels = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_layer_file(p, &text)?
        }
        None => resnet50_fpn_paths()
            .into_iter()
            .map(|(name, _, layers)| (name, layers))
            .collect(),
    };
    for (name, layers) in levels {
        let trf = compute_trf(&layers)?;
        writeln!(out, "{name}\t{trf}").map_err(stdout_err)?;
    }
    Ok(())
}

fn cmd_assign(
    annotations: &Path,
    config: Option<&Path>,
    kind: AssignerKind,
    dir: &Path,
    jobs: Option<usize>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let slice = load_coco(annotations)?;
    log::info!(
        "{} images, {} GTs; running {kind}",
        slice.images().len(),
        slice.gt_count()
    );
    let runs = run_assigners(&slice, &cfg.fpn_specs, &[(kind, cfg.assigner.clone())], jobs)?;
    let rep = report(&slice, &runs)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir, "report.csv", &rep.to_csv()?)?;
    write_file(dir, "report.json", &rep.to_json()?)
}

fn cmd_compare(annotations: &Path, config: Option<&Path>, dir: &Path, jobs: Option<usize>) -> Result<()> {
    let cfg = load_config(config)?;
    let slice = load_coco(annotations)?;
    let configs: Vec<_> = AssignerKind::ALL
        .iter()
        .map(|&k| (k, cfg.assigner.clone()))
        .collect();
    let runs = run_assigners(&slice, &cfg.fpn_specs, &configs, jobs)?;
    let rep = report(&slice, &runs)?;
    let cells = threshold_sweep(&slice, &cfg.fpn_specs, &cfg.assigner, &SWEEP_CELLS, jobs)?;
    let rows = sweep_rows(&slice, &cells)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir, "report.csv", &rep.to_csv()?)?;
    write_file(dir, "report.json", &rep.to_json()?)?;
    write_file(dir, "sweep.csv", &write_csv(&rows)?)?;
    let json = serde_json::to_string_pretty(&rows).map_err(|e| Error::Internal(e.to_string()))?;
    write_file(dir, "sweep.json", &(json + "\n"))
}

fn parse_pair(path: &Path, line_no: usize, line: &str) -> Result<(Gaussian2D, Gaussian2D)> {
    let load_err = |reason: String| Error::Load {
        path: path.to_path_buf(),
        record: format!("line {line_no}"),
        reason,
    };
    let nums = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| load_err(format!("{t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if nums.len() != 8 {
        return Err(load_err(format!("expected 8 numbers, got {}", nums.len())));
    }
    let gauss = |v: &[f64]| Gaussian2D::new(v[0], v[1], v[2], v[3]).map_err(|e| load_err(e.to_string()));
    Ok((gauss(&nums[..4])?, gauss(&nums[4..])?))
}

fn cmd_distances(metric: MetricKind, c: f64, path: &Path, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if !line.is_empty() {
            pairs.push(parse_pair(path, i + 1, line)?);
        }
    }
    for (a, b) in pairs {
        let d = distance(metric, &a, &b);
        let s = similarity(metric, &a, &b, c)?;
        writeln!(out, "{d:e}\t{s:e}").map_err(stdout_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["rfassign"];
        full.extend_from_slice(args);
        let code = main_with_args(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn default_trf_table() {
        let (code, out, _) = run_args(&["trf"]);
        assert_eq!(code, 0);
        assert_eq!(out, "P3\t107\nP4\t299\nP5\t491\nP6\t555\nP7\t683\n");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_args(&[]).0, 2);
        assert_eq!(run_args(&["distances", "--metric", "emd", "x"]).0, 2);
        assert_eq!(run_args(&["trf", "/nonexistent/layers.toml"]).0, 2);
        assert_eq!(run_args(&["--help"]).0, 0);
    }
}
