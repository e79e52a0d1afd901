use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sipp::conic::IpmOptions;
use sipp::io::{corpus, generate_random_instance, parse_problem, run_pipeline, IndexSetKind, PipelineOptions, RandomInstanceSpec};
use sipp::io::problem::{render_sipp, ParsedProblem};
use sipp::pmi::{char_poly, feasibility_grid_csv};

/// Exit code for unreadable input and internal errors.
const INPUT_ERROR: u8 = 5;

#[derive(Parser)]
#[command(name = "sipp", version, about = "Semi-infinite polynomial programs by moment relaxations")]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Generate a random instance and print it as a problem file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d2: usize,
        #[arg(long, default_value = "ball")]
        uset: IndexSetKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a matrix inequality problem, optionally writing the
    /// characteristic polynomial grid as CSV.
    Pmi {
        file: PathBuf,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// The bundled problem files.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    List,
    /// Print one file.
    Show { id: String },
    /// Solve all (or the named) entries and compare with the reference values.
    Run {
        ids: Vec<String>,
        /// Write one report per entry into this directory.
        #[arg(long)]
        report_dir: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    kmax: Option<usize>,
    /// Relaxation order cap for master and inner problems.
    #[arg(long)]
    order_cap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, conflicts_with = "no_homogenize")]
    homogenize: bool,
    #[arg(long)]
    no_homogenize: bool,
    #[arg(long)]
    export_sdpa: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Backend tolerance.
    #[arg(long, env = "SIPP_SDP_TOL")]
    sdp_tol: Option<f64>,
    /// Assemble the Schur complement on one thread.
    #[arg(long)]
    sequential: bool,
}

impl RunArgs {
    fn apply(&self, p: &mut ParsedProblem) -> PipelineOptions {
        if let Some(v) = self.eps {
            p.options.eps = v;
        }
        if let Some(v) = self.kmax {
            p.options.max_iter = v;
        }
        if let Some(v) = self.order_cap {
            p.options.master.max_order = v;
            p.options.inner.max_order = v;
        }
        if let Some(v) = self.seed {
            p.options.seed = v;
        }
        let mut ipm = IpmOptions::from_env();
        if let Some(t) = self.sdp_tol {
            ipm.tol = t;
        }
        ipm.parallel = !self.sequential;
        PipelineOptions {
            homogenize: if self.homogenize {
                Some(true)
            } else if self.no_homogenize {
                Some(false)
            } else {
                None
            },
            ipm,
            export_sdpa: self.export_sdpa.clone(),
            report: self.report.clone(),
        }
    }
}

fn read(path: &Path) -> Result<ParsedProblem, String> {
    let src = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_problem(&src).map_err(|e| format!("{}: {e}", path.display()))
}

fn solve(mut parsed: ParsedProblem, run: &RunArgs) -> Result<u8, String> {
    let opts = run.apply(&mut parsed);
    let out = run_pipeline(&parsed, &opts).map_err(|e| e.to_string())?;
    print!("{}", out.table);
    Ok(out.exit_code() as u8)
}

fn corpus_run(ids: &[String], report_dir: Option<&Path>, sequential: bool) -> Result<u8, String> {
    let selected: Vec<&str> = if ids.is_empty() {
        corpus::ENTRIES.iter().map(|(id, _)| *id).collect()
    } else {
        ids.iter().map(String::as_str).collect()
    };
    if let Some(d) = report_dir {
        std::fs::create_dir_all(d).map_err(|e| e.to_string())?;
    }
    let mut mismatches = 0;
    println!("{:<16} {:<14} {:>5} {:>12} {:>12} {:>10} {:>10}  check", "entry", "status", "Iter", "f*", "Obj_2", "|df|", "|dx|");
    for id in selected {
        let parsed = corpus::load(id).map_err(|e| e.to_string())?;
        let mut ipm = IpmOptions::from_env();
        ipm.parallel = !sequential;
        let opts = PipelineOptions {
            ipm,
            report: report_dir.map(|d| d.join(format!("{id}.json"))),
            ..Default::default()
        };
        let out = run_pipeline(&parsed, &opts).map_err(|e| format!("{id}: {e}"))?;
        let r = &out.report;
        let rf = parsed.reference.clone().unwrap_or_default();
        let df = match (rf.f_star, r.f_star) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        };
        let dx = if rf.x_star.is_empty() {
            None
        } else {
            r.x_star
                .iter()
                .map(|x| x.iter().zip(&rf.x_star).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .reduce(f64::min)
        };
        let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let ok = match &rf.status {
            Some(s) => *s == status,
            None => status == "certified" && df.is_none_or(|d| d <= 1e-3) && dx.is_none_or(|d| d <= 5e-3),
        };
        if !ok {
            mismatches += 1;
        }
        let fmt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |v| format!("{v:.p$e}"));
        println!(
            "{id:<16} {:<14} {:>5} {:>12} {:>12} {:>10} {:>10}  {}",
            status.chars().take(14).collect::<String>(),
            r.iterations,
            r.f_star.map_or("-".into(), |v| format!("{v:.4}")),
            fmt(r.obj2, 3),
            fmt(df, 1),
            fmt(dx, 1),
            if ok { "ok" } else { "MISMATCH" }
        );
    }
    Ok(if mismatches == 0 { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Solve { file, run } => solve(read(&file)?, &run),
        Command::Pmi { file, grid, run } => {
            let parsed = read(&file)?;
            let Some(g) = parsed.matrix.clone() else {
                return Err(format!("{}: not a matrix inequality (no `matrix` key)", file.display()));
            };
            if let Some(path) = grid {
                let coeffs = char_poly(&g).map_err(|e| e.to_string())?;
                let spec = parsed.grid.clone().unwrap_or(sipp::io::problem::GridSpec {
                    x1: [-3.0, 3.0],
                    x2: [-3.0, 3.0],
                    steps: 101,
                });
                let csv = feasibility_grid_csv(
                    &coeffs,
                    &parsed.problem.x_set.space,
                    (spec.x1[0], spec.x1[1]),
                    (spec.x2[0], spec.x2[1]),
                    spec.steps,
                )
                .map_err(|e| e.to_string())?;
                std::fs::write(&path, csv).map_err(|e| e.to_string())?;
            }
            solve(parsed, &run)
        }
        Command::Gen { n, p, d1, d2, uset, seed, out } => {
            let inst = generate_random_instance(&RandomInstanceSpec { n, p, d1, d2, index_set: uset, seed })
                .map_err(|e| e.to_string())?;
            let text = render_sipp(&inst.problem).map_err(|e| e.to_string())?;
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| e.to_string())?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Corpus { action } => match action {
            CorpusAction::List => {
                for (id, src) in corpus::ENTRIES {
                    let desc = corpus::load(id).ok().and_then(|p| p.description).unwrap_or_default();
                    let _ = src;
                    println!("{id:<16} {desc}");
                }
                Ok(0)
            }
            CorpusAction::Show { id } => {
                print!("{}", corpus::source(&id).map_err(|e| e.to_string())?);
                Ok(0)
            }
            CorpusAction::Run { ids, report_dir, sequential } => corpus_run(&ids, report_dir.as_deref(), sequential),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}
