//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 runtime error (one-line diagnostic on stderr),
//! 2 usage error. No environment-variable configuration.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::audio::{write_wav, SampleFormat};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::ingest::{
    export_asr_batch, ingest_external_metrics, read_hypotheses, wer_records_from_hypotheses,
};
use crate::pipeline::manifest::{write_fixture_set, Preset};
use crate::pipeline::{
    default_selection, full_grid, run_sweep, Condition, Manifest, SweepOptions,
};
use crate::report::{boxplot_svg, emit_report, grouped_anova, PlotSpec};

#[derive(Parser)]
#[command(
    name = "micfr",
    version,
    about = "Microphone frequency-response emulation sweep over simulated in-car recordings"
)]
struct Cli {
    /// Manifest file describing stimulus, cars, noises, and mic selection.
    #[arg(long, global = true, default_value = "manifest.toml")]
    manifest: PathBuf,

    /// Seed for fixture synthesis.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Worker threads for rendering (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    /// 3 cars x 3 noises, default 113-profile selection.
    Default,
    /// 1 car x 3 noises x 5 profiles; runs in seconds.
    Ci,
}

#[derive(Subcommand)]
enum Command {
    /// Generate fixture WAVs plus a manifest referencing them.
    Synth {
        /// Output directory for fixtures and manifest.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = PresetArg::Default)]
        preset: PresetArg,
    },
    /// Inspect the microphone FR grid.
    Grid {
        /// Print the number of profiles.
        #[arg(long)]
        count: bool,
        /// Print one profile id per line.
        #[arg(long)]
        list: bool,
        /// Write the shipped default 113-profile selection file.
        #[arg(long)]
        emit_selection: Option<PathBuf>,
        /// Include the flat (no-peak) profiles.
        #[arg(long)]
        include_no_peak: bool,
    },
    /// Render one (mic, car, noise) condition to a WAV file.
    Render {
        #[arg(long)]
        mic: String,
        #[arg(long)]
        car: String,
        #[arg(long)]
        noise: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render every condition and write the per-sentence metric dataset.
    Sweep {
        /// Output directory (dataset.csv and optional renders/).
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Also store each rendered condition as a float32 WAV.
        #[arg(long)]
        write_renders: bool,
    },
    /// Export per-sentence WAVs and asr/jobs.csv for an external engine.
    AsrExport {
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Merge ASR hypotheses or an external metric CSV into a dataset.
    Ingest {
        #[arg(long, default_value = "out/dataset.csv")]
        dataset: PathBuf,
        /// External metric CSV (condition_id,sentence_idx,metric,value).
        #[arg(long)]
        external: Option<PathBuf>,
        /// ASR transcript CSV (condition_id,sentence_idx,hypothesis).
        #[arg(long)]
        hypotheses: Option<PathBuf>,
    },
    /// One-way ANOVA of a metric over a dataset grouping.
    Anova {
        #[arg(long, default_value = "out/dataset.csv")]
        dataset: PathBuf,
        #[arg(long)]
        metric: String,
        /// Grouping column (noise, car, hp_fc, lp_fc, peak_fc, peak_q).
        #[arg(long)]
        group: String,
        /// Row filters, column=value; repeatable.
        #[arg(long = "filter")]
        filters: Vec<String>,
        /// Append the result as a CSV row (metric,grouping,filter,p,F,df1,df2).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deterministic SVG boxplot of a metric.
    Plot {
        #[arg(long, default_value = "out/dataset.csv")]
        dataset: PathBuf,
        #[arg(long)]
        metric: String,
        /// Column along the x axis.
        #[arg(long)]
        x: String,
        /// Optional hue column (colored boxes within each x group).
        #[arg(long)]
        hue: Option<String>,
        #[arg(long = "filter")]
        filters: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
    /// Emit the CSV report battery plus an index with the manifest hash.
    Report {
        #[arg(long, default_value = "out/dataset.csv")]
        dataset: PathBuf,
        #[arg(long, default_value = "out/report")]
        out_dir: PathBuf,
    },
}

/// Parse and run. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            // clap renders help to stdout and errors to stderr
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn parse_filters(raw: &[String]) -> Result<Vec<(String, String)>> {
    raw.iter()
        .map(|f| {
            f.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| {
                    Error::Invalid(format!("bad filter {f:?}; expected column=value"))
                })
        })
        .collect()
}

fn manifest_hash(path: &PathBuf) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { out, preset } => {
            let preset = match preset {
                PresetArg::Default => Preset::Default,
                PresetArg::Ci => Preset::Ci,
            };
            let manifest_path = write_fixture_set(preset, cli.seed, &out)?;
            println!("wrote fixtures and {}", manifest_path.display());
            Ok(())
        }
        Command::Grid {
            count,
            list,
            emit_selection,
            include_no_peak,
        } => {
            let grid = full_grid(include_no_peak);
            if let Some(path) = &emit_selection {
                let sel = default_selection();
                let mut text = String::from("# default profile selection\n");
                for p in &sel {
                    text.push_str(&p.id);
                    text.push('\n');
                }
                fs::write(path, text).map_err(|e| Error::io(path, e))?;
                println!("wrote {} profile ids to {}", sel.len(), path.display());
            }
            if list {
                for p in &grid {
                    println!("{}", p.id);
                }
            }
            if count || (!list && emit_selection.is_none()) {
                println!("{}", grid.len());
            }
            Ok(())
        }
        Command::Render {
            mic,
            car,
            noise,
            out,
        } => {
            let manifest = Manifest::load(&cli.manifest)?;
            let inputs = manifest.load_inputs()?;
            let profile = full_grid(true)
                .into_iter()
                .find(|p| p.id == mic)
                .ok_or_else(|| Error::Invalid(format!("unknown mic profile id {mic:?}")))?;
            let cond = Condition {
                mic: profile,
                car_id: car,
                noise_id: noise,
            };
            let rendered = crate::pipeline::render_condition(&cond, &inputs)?;
            write_wav(&out, &rendered, SampleFormat::Float32)?;
            println!("rendered {} -> {}", cond.id(), out.display());
            Ok(())
        }
        Command::Sweep {
            out_dir,
            write_renders,
        } => {
            let manifest = Manifest::load(&cli.manifest)?;
            let inputs = manifest.load_inputs()?;
            fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            let opts = SweepOptions {
                workers: cli.workers,
                write_renders,
                out_dir: out_dir.clone(),
            };
            let dataset = run_sweep(&inputs, &opts)?;
            let n_conditions =
                inputs.profiles.len() * inputs.irs.len() * inputs.noises.len();
            let path = out_dir.join("dataset.csv");
            dataset.write_csv(&path)?;
            println!(
                "rendered {n_conditions} conditions ({} rows) -> {}",
                dataset.records.len(),
                path.display()
            );
            Ok(())
        }
        Command::AsrExport { out_dir } => {
            let manifest = Manifest::load(&cli.manifest)?;
            let inputs = manifest.load_inputs()?;
            let export = export_asr_batch(&inputs, &out_dir)?;
            println!(
                "wrote {} sentence wavs, job list {}",
                export.wav_count,
                export.jobs_path.display()
            );
            Ok(())
        }
        Command::Ingest {
            dataset,
            external,
            hypotheses,
        } => {
            if external.is_none() && hypotheses.is_none() {
                return Err(Error::Invalid(
                    "ingest needs --external and/or --hypotheses".into(),
                ));
            }
            let mut ds = Dataset::read_csv(&dataset)?;
            let mut added = 0usize;
            if let Some(path) = hypotheses {
                let manifest = Manifest::load(&cli.manifest)?;
                let references = manifest.reference_texts()?;
                let transcripts = read_hypotheses(&path)?;
                let rows = wer_records_from_hypotheses(&ds, &transcripts, &references)?;
                added += rows.len();
                ds.records.extend(rows);
            }
            if let Some(path) = external {
                let rows = ingest_external_metrics(&path, &ds)?;
                added += rows.len();
                ds.records.extend(rows);
            }
            ds.write_csv(&dataset)?;
            println!("merged {added} rows into {}", dataset.display());
            Ok(())
        }
        Command::Anova {
            dataset,
            metric,
            group,
            filters,
            out,
        } => {
            let ds = Dataset::read_csv(&dataset)?;
            let filters = parse_filters(&filters)?;
            let (labels, r) = grouped_anova(&ds, &metric, &group, &filters)?.ok_or_else(|| {
                Error::Stats(format!(
                    "grouping {group:?} over metric {metric:?} has too few groups or values"
                ))
            })?;
            let filter_label = filters
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            println!(
                "metric={metric} grouping={group} filter={filter_label} F={} p={} df=({}, {})",
                r.f_stat, r.p_value, r.df_between, r.df_within
            );
            for (label, g) in labels.iter().zip(&r.groups) {
                println!("  group {label}: n={} mean={}", g.n, g.mean);
            }
            if let Some(path) = out {
                let mut text = if path.exists() {
                    fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?
                } else {
                    String::from("metric,grouping,filter,p,F,df1,df2\n")
                };
                text.push_str(&format!(
                    "{metric},{group},{filter_label},{},{},{},{}\n",
                    r.p_value, r.f_stat, r.df_between, r.df_within
                ));
                fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
            Ok(())
        }
        Command::Plot {
            dataset,
            metric,
            x,
            hue,
            filters,
            out,
            title,
        } => {
            let ds = Dataset::read_csv(&dataset)?;
            let spec = PlotSpec {
                metric,
                x,
                hue,
                filters: parse_filters(&filters)?,
                title,
            };
            let svg = boxplot_svg(&ds, &spec)?;
            fs::write(&out, svg).map_err(|e| Error::io(&out, e))?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Report { dataset, out_dir } => {
            let ds = Dataset::read_csv(&dataset)?;
            let hash = manifest_hash(&cli.manifest)?;
            let report = emit_report(&ds, &hash, &out_dir)?;
            println!(
                "wrote {} report files (+index) to {}",
                report.files.len(),
                out_dir.display()
            );
            Ok(())
        }
    }
}
