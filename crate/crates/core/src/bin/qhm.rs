//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 solver
//! inconsistency (including failed experiment checks).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use qhm::experiments::{run_converge, run_equal_glue_demo, run_glue_diverge, ExperimentResult, Family};
use qhm::fixtures::{catalogue_keys, check_fixture, fixture, BALL_POINTS_PER_SHELL};
use qhm::io::{load_measure, load_space, space_to_json};
use qhm::msolver::{ascent_oracle, AscentOptions};
use qhm::{
    classify, energy, energy_bilinear, glue, invariant_measure, kernel_flat_values, m_constant, potential,
    FiniteMetricSpace, GlueSpec, QhmError, SignedMeasure, Tolerances, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "qhm", version, about = "Energy constants and quasihypermetric tests for finite metric spaces")]
#[command(after_help = "Experiment CSV columns:\n  \
    converge:        k,size,n_k,status,m_value,I_mu,flatness,seminorm_step,error,elapsed_ms\n  \
    glue-diverge:    k,shells,n_k,m_x,verdict_z,m_z,predicted,rel_error,error,elapsed_ms\n  \
    equal-glue-demo: deleted,n_z,m_component,verdict_z,m_z,elapsed_ms\n\
CSV files have a header row, UTF-8 encoding and '.' as decimal separator.")]
struct Cli {
    /// Relative eigenvalue threshold of the spectral classification.
    #[arg(long, global = true, env = "QHM_DEFAULT_TOL", default_value_t = qhm::tolerance::DEFAULT_CLASSIFY_TOL)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SpaceArg {
    /// Space JSON file.
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    space: Option<PathBuf>,
    /// Catalogue fixture key (see `qhm fixtures`).
    #[arg(long)]
    fixture: Option<String>,
}

impl SpaceArg {
    fn load(&self) -> Result<FiniteMetricSpace, QhmError> {
        match (&self.space, &self.fixture) {
            (Some(p), _) => load_space(p),
            (None, Some(k)) => Ok(fixture(k)?.space),
            (None, None) => Err(QhmError::InvalidInput("no space given".into())),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral (strict) quasihypermetric classification.
    Classify(SpaceArg),
    /// Decide finiteness of M and compute it with a maximal measure.
    Mconstant {
        #[command(flatten)]
        space: SpaceArg,
        /// Also run the gradient-ascent oracle for this many iterations.
        #[arg(long, default_value_t = 0)]
        oracle_iters: usize,
    },
    /// Solve for a mass-one measure with constant potential.
    Invariant(SpaceArg),
    /// Energy and potential of a measure given inline or as a file.
    Energy {
        #[command(flatten)]
        space: SpaceArg,
        /// Comma-separated weights.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "measure")]
        weights: Option<Vec<f64>>,
        /// Measure JSON file.
        #[arg(long)]
        measure: Option<PathBuf>,
        /// Second measure for the bilinear energy, comma-separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        nu: Option<Vec<f64>>,
    },
    /// Glue two spaces with a constant cross distance and emit the result.
    Glue {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        c: f64,
    },
    /// List catalogue fixtures, run their checks, or emit one as JSON.
    Fixtures {
        /// Emit the space of this fixture.
        #[arg(long)]
        key: Option<String>,
        /// Run classify + mconstant against every expectation.
        #[arg(long)]
        check: bool,
    },
    /// Solve M along a family of growing discretizations.
    Converge {
        #[arg(long)]
        family: String,
        /// Point counts (interval, circle) or shell counts (ball3).
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = BALL_POINTS_PER_SHELL)]
        points_per_shell: usize,
    },
    /// Glue growing ball discretizations to two points at distance 2 with c = 3/2.
    GlueDiverge {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        shells: Vec<usize>,
        #[arg(long, default_value_t = BALL_POINTS_PER_SHELL)]
        points_per_shell: usize,
    },
    /// Two equal regular polygons glued at c = M.
    EqualGlueDemo {
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
}

enum Failure {
    Usage(String),
    Qhm(QhmError),
    Checks(String),
}

impl From<QhmError> for Failure {
    fn from(e: QhmError) -> Self {
        Failure::Qhm(e)
    }
}

type CmdResult = Result<(), Failure>;

fn emit(out: &Option<PathBuf>, text: &str) -> CmdResult {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| QhmError::Io(format!("{}: {e}", p.display())).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: &Option<PathBuf>, v: &impl Serialize) -> CmdResult {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| QhmError::Io(e.to_string()))?;
    s.push('\n');
    emit(out, &s)
}

fn json_only(cli: &Cli) -> CmdResult {
    if cli.format == Format::Csv {
        return Err(Failure::Usage("--format csv applies to experiment subcommands only".into()));
    }
    Ok(())
}

fn emit_experiment<R: Serialize>(cli: &Cli, r: &ExperimentResult<R>) -> CmdResult {
    match cli.format {
        Format::Csv => emit(&cli.out, &r.to_csv()?)?,
        Format::Json => emit_json(&cli.out, r)?,
    }
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks(failed.join("; ")))
    }
}

fn run(cli: &Cli) -> CmdResult {
    let tol = Tolerances::with_classify(cli.tol);
    match &cli.command {
        Command::Classify(arg) => {
            json_only(cli)?;
            let x = arg.load()?;
            let c = classify(&x, tol.classify)?;
            let mut v = json!({ "verdict": c.verdict, "eigenvalues": c.eigenvalues, "margin": c.margin, "tol_used": c.tol_used });
            if let Some(w) = &c.witness {
                v["witness"] = json!(w.weights);
            }
            if c.verdict == Verdict::NonStrict {
                v["kernel_basis"] = json!(c.kernel_basis.iter().map(|b| &b.weights).collect::<Vec<_>>());
                let flats = kernel_flat_values(&x, &c, tol.flatness_for(qhm::diameter(&x)))?;
                v["flat_values"] = json!(flats.iter().map(|f| f.value).collect::<Vec<_>>());
            }
            emit_json(&cli.out, &v)
        }
        Command::Mconstant { space, oracle_iters } => {
            json_only(cli)?;
            let x = space.load()?;
            let d = m_constant(&x, &tol)?;
            let mut v = json!({ "status": d.status, "diagnostics": d.diagnostics });
            if let Some(val) = d.value {
                v["value"] = json!(val);
            }
            if let Some(m) = &d.maximal_measure {
                v["measure"] = json!(m.weights);
            }
            if let Some(r) = d.reason {
                v["reason"] = json!(r);
            }
            if let Some(w) = &d.witness {
                v["witness"] = json!(w.weights);
            }
            if *oracle_iters > 0 {
                let t = ascent_oracle(&x, &AscentOptions::new(*oracle_iters, cli.seed));
                v["diagnostics"]["oracle"] = json!({
                    "best_value": t.best_value,
                    "iterations_run": t.iterations_run,
                    "step": t.step,
                    "diverged": t.diverged,
                });
            }
            emit_json(&cli.out, &v)
        }
        Command::Invariant(arg) => {
            json_only(cli)?;
            let x = arg.load()?;
            emit_json(&cli.out, &invariant_measure(&x, tol.solve)?)
        }
        Command::Energy { space, weights, measure, nu } => {
            json_only(cli)?;
            let x = space.load()?;
            let mu = match (weights, measure) {
                (Some(w), _) => SignedMeasure::on(&x, w.clone())?,
                (None, Some(p)) => {
                    let m = load_measure(p)?;
                    SignedMeasure::on(&x, m.weights)?
                }
                (None, None) => return Err(Failure::Usage("give --weights or --measure".into())),
            };
            let mut v = json!({
                "mass": mu.mass(),
                "energy": energy(&x, &mu)?,
                "potential": potential(&x, &mu)?,
            });
            if let Some(nu) = nu {
                let nu = SignedMeasure::on(&x, nu.clone())?;
                v["bilinear"] = json!(energy_bilinear(&x, &mu, &nu)?);
            }
            emit_json(&cli.out, &v)
        }
        Command::Glue { x, y, c } => {
            json_only(cli)?;
            let z = glue(&GlueSpec::new(load_space(x)?, load_space(y)?, *c))?;
            emit(&cli.out, &space_to_json(&z))
        }
        Command::Fixtures { key, check } => {
            json_only(cli)?;
            if let Some(k) = key {
                let f = fixture(k)?;
                return emit(&cli.out, &space_to_json(&f.space));
            }
            let mut entries = vec![];
            let mut failed = vec![];
            for k in catalogue_keys() {
                let f = fixture(&k)?;
                let mut e = json!({ "key": k, "points": f.space.len(), "expected": f.expected });
                if *check {
                    let c = check_fixture(&f, &tol, 1e-9)?;
                    if !c.passed {
                        failed.push(k.clone());
                    }
                    e["check"] = json!(c);
                }
                entries.push(e);
            }
            emit_json(&cli.out, &Value::Array(entries))?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Checks(format!("fixtures failed: {}", failed.join(", "))))
            }
        }
        Command::Converge { family, sizes, points_per_shell } => {
            let mut fam: Family = family.parse()?;
            if let Family::Ball3 { .. } = fam {
                fam = Family::Ball3 { points_per_shell: *points_per_shell };
            }
            emit_experiment(cli, &run_converge(fam, sizes, cli.seed, &tol)?)
        }
        Command::GlueDiverge { shells, points_per_shell } => {
            emit_experiment(cli, &run_glue_diverge(shells, *points_per_shell, cli.seed, &tol)?)
        }
        Command::EqualGlueDemo { n } => emit_experiment(cli, &run_equal_glue_demo(*n, &tol)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Qhm(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
        Err(Failure::Checks(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(3)
        }
    }
}
