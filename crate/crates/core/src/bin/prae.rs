use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use prae::abduction::{Arrangement, PosteriorDump, SelectMode};
use prae::domain::{Configuration, RuleSpec};
use prae::generator::PuzzleInstance;
use prae::harness::{self, SolveOptions, SweepOptions};
use prae::perception::NoiseModel;
use prae::render::{render_panel, sample_and_render, RenderOptions};
use prae::selection::{answer_cross_entropy, AnswerReport, AttributeSet};
use prae::{Error, Result};

#[derive(Parser)]
#[command(name = "prae", version, about = "Generate and solve Raven-style matrices by probabilistic abduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write generated instances and a manifest to a directory.
    Generate {
        #[arg(long)]
        config: Configuration,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance file and print the answer report as JSON.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Sample the predicted panel and write it as PGM and SVG to --out.
        #[arg(long)]
        render: bool,
        /// Include per-axis rule posteriors in the output.
        #[arg(long)]
        dump_posterior: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate configurations over a range of seeds and noise levels; writes CSV.
    Sweep {
        /// Comma-separated configuration names, default all.
        #[arg(long, value_delimiter = ',')]
        config: Vec<Configuration>,
        /// Comma-separated noise levels.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Argmax)]
        mode: ModeArg,
        /// Apply rules along columns instead of rows
        #[arg(long)]
        column_mode: bool,
        #[arg(long, value_enum, default_value_t = AttrArg::All)]
        attributes: AttrArg,
        /// Add mean wall time per instance (not reproducible across runs).
        #[arg(long)]
        timing: bool,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the 16 panels of an instance as PGM and SVG.
    Render {
        instance: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        rotation_seed: Option<u64>,
    },
    /// Noiseless end-to-end self-check on generated instances.
    OracleCheck {
        /// Comma-separated configuration names, default all.
        #[arg(long, value_delimiter = ',')]
        config: Vec<Configuration>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Argmax)]
    mode: ModeArg,
    /// Apply rules along columns instead of rows.
    #[arg(long)]
    column_mode: bool,
    #[arg(long, value_enum, default_value_t = AttrArg::All)]
    attributes: AttrArg,
    /// Noise model JSON replacing the symmetric --epsilon model.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Per-slot ε jitter in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Argmax,
    Sample,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttrArg {
    All,
    Executed,
}

fn solve_options(mode: ModeArg, column_mode: bool, attributes: AttrArg) -> SolveOptions {
    SolveOptions {
        mode: match mode {
            ModeArg::Argmax => SelectMode::Argmax,
            ModeArg::Sample => SelectMode::Sample,
        },
        arrangement: if column_mode {
            Arrangement::Columns
        } else {
            Arrangement::Rows
        },
        attributes: match attributes {
            AttrArg::All => AttributeSet::All,
            AttrArg::Executed => AttributeSet::Executed,
        },
        ..SolveOptions::default()
    }
}

impl SolverArgs {
    fn options(&self) -> Result<SolveOptions> {
        let noise = match &self.noise {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Some(NoiseModel::from_json(&text)?)
            }
            None => None,
        };
        Ok(SolveOptions {
            epsilon: self.epsilon,
            seed: self.seed,
            noise,
            jitter: self.jitter,
            ..solve_options(self.mode, self.column_mode, self.attributes)
        })
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    instance: String,
    configuration: Configuration,
    chosen: usize,
    answer_index: usize,
    correct: bool,
    cross_entropy: f64,
    selected_rules: Vec<Vec<String>>,
    report: AnswerReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    posteriors: Option<Vec<PosteriorDump>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rendered: Option<&'a [PathBuf]>,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn all_or(configs: Vec<Configuration>) -> Vec<Configuration> {
    if configs.is_empty() {
        Configuration::ALL.to_vec()
    } else {
        configs
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, count, seed, out } => {
            let manifest = harness::cmd_generate(config, count, seed, &out)?;
            println!("wrote {} instances to {} (sha256 {})", manifest.count, out.display(), manifest.sha256);
        }
        Command::Solve {
            instance,
            solver,
            render,
            dump_posterior,
            out,
        } => {
            let inst = PuzzleInstance::load(&instance)?;
            let options = solver.options()?;
            let sol = harness::solve(&inst, &options)?;
            let mut rendered = Vec::new();
            if render {
                create_dir(&out)?;
                let (_, raster) = sample_and_render(
                    &sol.prediction,
                    inst.config,
                    &inst.domain,
                    options.seed,
                    &RenderOptions::default(),
                )?;
                let stem = instance
                    .file_name()
                    .and_then(|s| s.to_str())
                    .map_or("instance", |s| s.trim_end_matches(".json").trim_end_matches(".rpm"));
                let pgm = out.join(format!("{stem}.answer.pgm"));
                let svg = out.join(format!("{stem}.answer.svg"));
                raster.write_pgm(&pgm)?;
                raster.write_svg(&svg)?;
                rendered = vec![pgm, svg];
            }
            let output = SolveOutput {
                instance: instance.display().to_string(),
                configuration: inst.config,
                chosen: sol.report.chosen,
                answer_index: inst.answer_index,
                correct: sol.report.chosen == inst.answer_index,
                cross_entropy: answer_cross_entropy(&sol.report, inst.answer_index),
                selected_rules: sol
                    .selected
                    .iter()
                    .map(|c| c.iter().map(RuleSpec::to_string).collect())
                    .collect(),
                report: sol.report.rounded(),
                posteriors: dump_posterior.then(|| sol.posterior_dump()),
                rendered: render.then_some(rendered.as_slice()),
            };
            println!("{}", serde_json::to_string_pretty(&output).expect("output serializes"));
        }
        Command::Sweep {
            config,
            epsilon,
            count,
            seed,
            mode,
            column_mode,
            attributes,
            timing,
            out,
        } => {
            let report = harness::sweep(&SweepOptions {
                configs: all_or(config),
                epsilons: epsilon,
                count,
                seed0: seed,
                solve: solve_options(mode, column_mode, attributes),
                timing,
            })?;
            let csv = report.to_csv();
            match out {
                Some(path) => std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?,
                None => print!("{csv}"),
            }
        }
        Command::Render {
            instance,
            out,
            rotation_seed,
        } => {
            let inst = PuzzleInstance::load(&instance)?;
            create_dir(&out)?;
            let options = RenderOptions {
                rotation_seed,
                ..RenderOptions::default()
            };
            let panels = inst.context.iter().map(|p| ("context", p)).chain(inst.candidates.iter().map(|p| ("candidate", p)));
            let mut counts = [0usize; 2];
            for (kind, panel) in panels {
                let k = usize::from(kind == "candidate");
                let raster = render_panel(panel, inst.config, &inst.domain, &options)?;
                let stem = format!("{kind}_{}", counts[k]);
                counts[k] += 1;
                raster.write_pgm(&out.join(format!("{stem}.pgm")))?;
                raster.write_svg(&out.join(format!("{stem}.svg")))?;
            }
            println!("rendered 16 panels to {}", out.display());
        }
        Command::OracleCheck { config, count, seed } => {
            let mut failed = 0;
            for config in all_or(config) {
                let mut passed = 0;
                let mut baseline = 0;
                for s in seed..seed + count as u64 {
                    let check = harness::oracle_check(&prae::generator::generate(config, s)?)?;
                    if check.passed() {
                        passed += 1;
                    } else {
                        eprintln!("{config} seed {s}: {check:?}");
                    }
                    baseline += usize::from(check.baseline_correct);
                }
                failed += count - passed;
                println!(
                    "{config}: {passed}/{count} exact, majority-vote baseline {baseline}/{count}"
                );
            }
            if failed > 0 {
                return Err(Error::Generation(format!("{failed} instances failed the oracle check")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}
