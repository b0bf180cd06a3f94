//! `ttexp`: exponentiate TT exponents, run the built-in benchmarks and
//! inspect TT files.
//!
//! Exit codes: 0 success, 1 input error, 2 solver did not converge (the
//! best iterate and the report are still written).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ttexp::als::{scaled_exp_tt, SolveConfig, SolveReport};
use ttexp::benchmarks::{run_benchmark, BenchmarkReport};
use ttexp::config::{parse_benchmark_config, parse_run_config, BenchmarkConfig, BenchmarkName, RunConfig};
use ttexp::galerkin::ExponentTT;
use ttexp::tt::json::{tensor_from_json, tensor_to_json, to_string};
use ttexp::tt::TTTensor;

#[derive(Parser)]
#[command(name = "ttexp", version, about = "Tensor-train exponentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Compute exp(h) for an exponent stored as a TT file.
    Exp {
        /// TT file with the exponent (overrides `input` in the config).
        input: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Destination of the result TT.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed of the random initial guess.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run a named benchmark and print one report row.
    Benchmark {
        /// One of kl_fourier, kl_gaussian, gaussian_density, bayes.
        name: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Destination of the computed TT.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the initial guess and the Monte Carlo samples.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Print order, dimensions, ranks, storage size and norm of a TT file.
    Inspect {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

/// Failure of a command, mapped to an exit code.
enum Failure {
    Input(String),
    NotConverged,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => f.write_str(m),
            Failure::NotConverged => f.write_str("solver did not reach the requested tolerance"),
        }
    }
}

fn input_err(path: &Path, e: impl fmt::Display) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_err(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| input_err(path, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Exp { input, config, out, seed, format } => cmd_exp(input, config, out, seed, format),
        Command::Benchmark { name, config, out, seed, format } => cmd_benchmark(name, config, out, seed, format),
        Command::Inspect { path, format } => cmd_inspect(&path, format),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f @ Failure::Input(_)) => {
            eprintln!("error: {f}");
            ExitCode::from(1)
        }
        Err(f @ Failure::NotConverged) => {
            eprintln!("warning: {f}");
            ExitCode::from(2)
        }
    }
}

fn solve_report_csv(r: &SolveReport) -> String {
    format!(
        "sweeps,res,converged,r_max,tt_dofs,operator_rank,local_fallbacks,time_s\n{},{:.6e},{},{},{},{},{},{:.3}\n",
        r.sweeps,
        r.res,
        r.converged,
        r.ranks.max_rank,
        r.ranks.tt_dofs,
        r.operator_rank,
        r.local_fallbacks,
        r.time_s
    )
}

fn cmd_exp(
    input: Option<PathBuf>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    format: Format,
) -> Result<(), Failure> {
    let cfg = match &config {
        Some(p) => parse_run_config(&read(p)?).map_err(|e| input_err(p, e))?,
        None => RunConfig::default(),
    };
    let mut settings = cfg.solver.clone();
    if seed.is_some() {
        settings.seed = seed;
    }
    let solver = settings
        .apply(&SolveConfig::default())
        .map_err(|e| Failure::Input(e.to_string()))?;
    let input = input
        .or_else(|| cfg.input.as_ref().map(PathBuf::from))
        .ok_or_else(|| Failure::Input("no input TT given (argument or `input` config key)".into()))?;
    let h = tensor_from_json(&read(&input)?).map_err(|e| input_err(&input, e))?;
    let h = if cfg.spatial {
        ExponentTT::with_spatial(h, cfg.y0.clone())
    } else {
        ExponentTT::new(h, cfg.y0.clone())
    }
    .map_err(|e| input_err(&input, e))?;
    let res = scaled_exp_tt(&h, &solver).map_err(|e| Failure::Input(e.to_string()))?;

    if let Some(p) = out.or_else(|| cfg.output.as_ref().map(PathBuf::from)) {
        let text = tensor_to_json(&res.u).map_err(|e| Failure::Input(e.to_string()))?;
        write(&p, &text)?;
    }
    let report = match format {
        Format::Json => to_string(&res.report).map_err(|e| Failure::Input(e.to_string()))? + "\n",
        Format::Csv => solve_report_csv(&res.report),
    };
    match &cfg.report {
        Some(p) => write(Path::new(p), &report)?,
        None => print!("{report}"),
    }
    if res.report.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn parse_name(name: &str) -> Result<BenchmarkName, Failure> {
    BenchmarkName::ALL
        .iter()
        .position(|&n| n == name)
        .map(|i| {
            [
                BenchmarkName::KlFourier,
                BenchmarkName::KlGaussian,
                BenchmarkName::GaussianDensity,
                BenchmarkName::Bayes,
            ][i]
        })
        .ok_or_else(|| {
            Failure::Input(format!(
                "unknown benchmark `{name}`; available: {}",
                BenchmarkName::ALL.join(", ")
            ))
        })
}

fn cmd_benchmark(
    name: Option<String>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    format: Format,
) -> Result<(), Failure> {
    let mut cfg = match (&config, &name) {
        (Some(p), _) => parse_benchmark_config(&read(p)?).map_err(|e| input_err(p, e))?,
        (None, Some(n)) => BenchmarkConfig::new(parse_name(n)?),
        (None, None) => {
            return Err(Failure::Input(format!(
                "no benchmark given; available: {}",
                BenchmarkName::ALL.join(", ")
            )))
        }
    };
    if let Some(n) = &name {
        cfg.benchmark = parse_name(n)?;
    }
    if let Some(s) = seed {
        cfg.seed = Some(s);
        cfg.solver.seed = Some(s);
    }
    cfg.validate().map_err(|e| Failure::Input(e.to_string()))?;
    let (report, u) = run_benchmark(&cfg).map_err(|e| Failure::Input(e.to_string()))?;
    if let Some(p) = out {
        let text = tensor_to_json(&u).map_err(|e| Failure::Input(e.to_string()))?;
        write(&p, &text)?;
    }
    match format {
        Format::Csv => println!("{}\n{}", BenchmarkReport::CSV_HEADER, report.csv_row()),
        Format::Json => println!("{}", to_string(&report).map_err(|e| Failure::Input(e.to_string()))?),
    }
    if report.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

#[derive(serde::Serialize)]
struct Inspection {
    order: usize,
    dims: Vec<usize>,
    ranks: Vec<usize>,
    max_rank: usize,
    tt_dofs: usize,
    norm: f64,
}

fn inspect(t: &TTTensor) -> Inspection {
    let p = t.rank_profile();
    Inspection {
        order: t.order(),
        dims: t.dims(),
        ranks: p.ranks,
        max_rank: p.max_rank,
        tt_dofs: p.tt_dofs,
        norm: t.norm(),
    }
}

fn cmd_inspect(path: &Path, format: Format) -> Result<(), Failure> {
    let t = tensor_from_json(&read(path)?).map_err(|e| input_err(path, e))?;
    let i = inspect(&t);
    match format {
        Format::Json => println!("{}", to_string(&i).map_err(|e| Failure::Input(e.to_string()))?),
        Format::Csv => {
            let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            println!("order,dims,ranks,max_rank,tt_dofs,norm");
            println!(
                "{},{},{},{},{},{:e}",
                i.order,
                join(&i.dims),
                join(&i.ranks),
                i.max_rank,
                i.tt_dofs,
                i.norm
            );
        }
    }
    Ok(())
}
