mod audit;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pidkit::deficiency::SolverOptions;
use pidkit::probcore::format::{self, DistFormat};
use pidkit::probcore::{JointDist, ValidateOptions, Var};
use pidkit::{DecompOptions, Error};
use serde_json::Value;
use sha2::{Digest, Sha256};

use report::Report;

const EXIT_AUDIT: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pidkit",
    version,
    about = "Bivariate information decompositions of discrete joint distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unique, shared and synergistic information under one or all measures.
    Decompose {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Measure::All)]
        measure: Measure,
        /// Variable whose information is decomposed.
        #[arg(long, value_enum, default_value_t = Target::S)]
        target: Target,
        #[command(flatten)]
        common: Common,
    },
    /// A weighted deficiency between the two observation channels.
    Deficiency {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Output)]
        kind: Kind,
        #[arg(long, value_enum, default_value_t = Direction::ZCoversY)]
        direction: Direction,
        #[command(flatten)]
        common: Common,
    },
    /// Exact degradation test between the observation channels.
    Blackwell {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Degradation)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Direction::ZCoversY)]
        direction: Direction,
        #[command(flatten)]
        common: Common,
    },
    /// Secret-key-rate bounds with S as Alice, Y as Bob and Z as Eve.
    Skr {
        file: PathBuf,
        /// Random restarts for the intrinsic-information search.
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Audit the invariants of a distribution or of a saved JSON report.
    Check {
        file: PathBuf,
        /// Also compare the solvers against brute-force grid oracles.
        #[arg(long)]
        deep: bool,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Copy)]
struct Common {
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OutFormat::Table)]
    format: OutFormat,
    /// Prune zero-mass symbols instead of rejecting them.
    #[arg(long)]
    drop_null: bool,
    /// Rescale tables whose mass is not one.
    #[arg(long)]
    renormalize: bool,
}

impl Common {
    fn decomp_options(&self) -> DecompOptions {
        DecompOptions {
            solver: SolverOptions {
                tol_objective: self.tol,
                max_iterations: self.max_iter,
                seed: self.seed,
                ..SolverOptions::default()
            },
            drop_null: self.drop_null,
        }
    }

    fn echo(&self) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("tol".into(), self.tol.into());
        m.insert("max_iter".into(), self.max_iter.into());
        m.insert("seed".into(), self.seed.into());
        m.insert("drop_null".into(), self.drop_null.into());
        m.insert("renormalize".into(), self.renormalize.into());
        m
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Measure {
    Broja,
    Output,
    Input,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    #[value(name = "S", alias = "s")]
    S,
    #[value(name = "Y", alias = "y")]
    Y,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Output,
    Input,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    /// `Y` is measured against what can be obtained from `Z`.
    ZCoversY,
    YCoversZ,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Degradation,
    InputDegraded,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Table,
}

/// Input file contents plus their digest.
struct Input {
    path: PathBuf,
    text: String,
    sha256: String,
}

fn read_input(path: &Path) -> Result<Input, Error> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
        _ => Error::Io(format!("{}: {e}", path.display())),
    })?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(Input {
        path: path.to_path_buf(),
        text,
        sha256,
    })
}

fn parse_dist(input: &Input, common: &Common) -> Result<JointDist, Error> {
    let opts = ValidateOptions {
        renormalize: common.renormalize,
        ..ValidateOptions::default()
    };
    match DistFormat::from_path(&input.path) {
        DistFormat::Json => format::parse_json(&input.text, opts),
        DistFormat::Tsv => format::parse_tsv(&input.text, opts),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let (report, fmt) = match cli.command {
        Command::Decompose {
            file,
            measure,
            target,
            common,
        } => {
            let input = read_input(&file)?;
            let joint = parse_dist(&input, &common)?;
            let mut r = Report::new("decompose", &input.sha256, &joint, common.echo());
            r.option("measure", measure.to_possible_value().unwrap().get_name());
            r.option("target", target.to_possible_value().unwrap().get_name());
            let oriented = match target {
                Target::S => joint,
                Target::Y => joint.permute([Var::Y, Var::S, Var::Z])?,
            };
            let opts = common.decomp_options();
            let label = match target {
                Target::S => ["S", "Y"],
                Target::Y => ["Y", "S"],
            };
            if matches!(measure, Measure::Broja | Measure::All) {
                r.broja(&oriented, &opts, label)?;
            }
            if matches!(measure, Measure::Output | Measure::All) {
                r.output(&oriented, &opts, label)?;
            }
            if matches!(measure, Measure::Input | Measure::All) {
                r.input(&oriented, &opts, label)?;
            }
            (r, common.format)
        }
        Command::Deficiency {
            file,
            kind,
            direction,
            common,
        } => {
            let input = read_input(&file)?;
            let joint = parse_dist(&input, &common)?;
            let mut r = Report::new("deficiency", &input.sha256, &joint, common.echo());
            let opts = common.decomp_options();
            match kind {
                Kind::Output => r.output_deficiency(&joint, &opts, direction)?,
                Kind::Input => r.input_deficiency(&joint, &opts, direction)?,
            }
            (r, common.format)
        }
        Command::Blackwell {
            file,
            mode,
            direction,
            common,
        } => {
            let input = read_input(&file)?;
            let joint = parse_dist(&input, &common)?;
            let mut r = Report::new("blackwell", &input.sha256, &joint, common.echo());
            r.blackwell(
                &joint,
                mode == Mode::InputDegraded,
                direction,
                common.drop_null,
            )?;
            (r, common.format)
        }
        Command::Skr {
            file,
            restarts,
            common,
        } => {
            let input = read_input(&file)?;
            let joint = parse_dist(&input, &common)?;
            let mut r = Report::new("skr", &input.sha256, &joint, common.echo());
            r.option("restarts", restarts);
            r.skr(&joint, restarts, &common.decomp_options())?;
            (r, common.format)
        }
        Command::Check {
            file,
            deep,
            restarts,
            common,
        } => {
            let input = read_input(&file)?;
            let saved = serde_json::from_str::<Value>(&input.text)
                .ok()
                .filter(|v| v.get("schema").is_some());
            let r = match saved {
                Some(v) => audit::check_saved(v, &input.sha256, deep)?,
                None => {
                    let joint = parse_dist(&input, &common)?;
                    let mut r = Report::new("check", &input.sha256, &joint, common.echo());
                    r.option("deep", deep);
                    r.option("restarts", restarts);
                    let opts = common.decomp_options();
                    let label = ["S", "Y"];
                    r.broja(&joint, &opts, label)?;
                    r.output(&joint, &opts, label)?;
                    r.input(&joint, &opts, label)?;
                    r.skr(&joint, restarts, &opts)?;
                    audit::attach(&mut r, &joint, deep);
                    r
                }
            };
            (r, common.format)
        }
    };
    let text = match fmt {
        OutFormat::Json => report.to_json() + "\n",
        OutFormat::Table => report.to_table(),
    };
    // A closed pipe (`| head`) is not an error worth reporting.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    let failed = report.failed_invariants();
    if !failed.is_empty() {
        for f in failed {
            eprintln!("audit failure: {f}");
        }
        return Ok(ExitCode::from(EXIT_AUDIT));
    }
    if !report.converged() {
        eprintln!("warning: a solver stopped before meeting its tolerance");
        return Ok(ExitCode::from(EXIT_NOT_CONVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NotConverged { .. } => ExitCode::from(EXIT_NOT_CONVERGED),
                _ => ExitCode::from(EXIT_INPUT),
            }
        }
    }
}
