//! `raresens`: sensitivity indices, UQ bounds and large-deviation data for
//! rare events, written as versioned CSV or JSON.

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use raresens_core::specs::{ChainSpec, ModelSpec};
use raresens_core::verify;

use output::{quote, write_atomic, Format, Table};

/// One parsed list; an alias keeps clap from treating it as repeated values.
type Values = Vec<f64>;

#[derive(Debug, Parser)]
#[command(name = "raresens", version, about = "Sensitivity indices and UQ bounds for rare events")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file, written atomically; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; `uq` defaults to json, everything else to csv.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for randomized checks. The grid computations are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// I±(M) with the Bernstein, Bennett and linearized surrogates.
    Index {
        /// Model spec (JSON).
        #[arg(long)]
        model: PathBuf,
        /// Parameter direction, comma separated; defaults to the first unit vector.
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        direction: Option<Values>,
        /// Rarity levels: `a,b,c` or `start:stop:count`.
        #[arg(long = "M", value_parser = parse_grid, allow_hyphen_values = true)]
        m: Vec<Values>,
        /// Emit `(H(α)+M)/α` and `H'(α)` along this α grid instead.
        #[arg(long, value_parser = parse_grid)]
        alpha_grid: Option<Values>,
        /// Upper bound on the projected score, overriding the model's.
        #[arg(long)]
        b: Option<f64>,
        /// Variance proxy, overriding vᵀFv.
        #[arg(long)]
        sigma2: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bounds on log Q(A) for events with P(A) = e^{−M}.
    Uq {
        /// Nominal model P (finite).
        #[arg(long)]
        model: PathBuf,
        /// Alternative model Q (finite, same atoms).
        #[arg(long)]
        model_q: PathBuf,
        #[arg(long = "M", value_parser = parse_grid)]
        m: Vec<Values>,
        /// Emit the Rényi-indexed bounds at these orders instead.
        #[arg(long, value_parser = parse_grid)]
        alpha_grid: Option<Values>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Rate function, LDP-scale indices and exact finite differences for a chain.
    Markov {
        /// Chain spec (JSON).
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        direction: Option<Values>,
        /// Mean levels: `a,b,c` or `start:stop:count`.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        z_grid: Vec<Values>,
        /// Path length for the finite differences.
        #[arg(long, default_value_t = 500)]
        horizon: usize,
        /// Central-difference step.
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bennett and Bernstein bounds next to the exact index.
    Concentration {
        /// Model spec; optional when `--b` and `--sigma2` are given.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        direction: Option<Values>,
        #[arg(long = "M", value_parser = parse_grid)]
        m: Vec<Values>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        sigma2: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Oracle suite on random small instances; exits nonzero on any violation.
    Verify {
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_list(s: &str) -> Result<Values, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

/// `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
fn parse_grid(s: &str) -> Result<Values, String> {
    let grid = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("`{s}`: expected start:stop:count"));
        };
        let a: f64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
        let b: f64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
        let n: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        parse_list(s)?
    };
    if grid.is_empty() {
        return Err("grid is empty".into());
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err("grid values must be finite".into());
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err("grid must be sorted ascending".into());
    }
    Ok(grid)
}

fn require_grid(name: &str, grid: Vec<f64>) -> Result<Vec<f64>, String> {
    if grid.is_empty() {
        Err(format!("{name} is required"))
    } else {
        Ok(grid)
    }
}

fn load_model(path: &Path) -> Result<ModelSpec, String> {
    ModelSpec::from_path(path).map_err(|e| e.to_string())
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => write_atomic(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish(table: Table, output: &OutputArgs, default: Format) -> Result<ExitCode, String> {
    emit(&table.render(output.format.unwrap_or(default)), output.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Index { model, direction, m, alpha_grid, b, sigma2, output } => {
            let spec = load_model(&model)?;
            let m = require_grid("--M", m.concat())?;
            let table = match alpha_grid {
                Some(alphas) => commands::index_curve(&spec, direction, &m, &alphas),
                None => commands::index(&spec, direction, &m, b, sigma2),
            }
            .map_err(|e| e.to_string())?;
            finish(table, &output, Format::Csv)
        }
        Command::Uq { model, model_q, m, alpha_grid, output } => {
            let (p, q) = (load_model(&model)?, load_model(&model_q)?);
            let m = require_grid("--M", m.concat())?;
            let table = match alpha_grid {
                Some(alphas) => commands::uq_raw(&p, &q, &m, &alphas),
                None => commands::uq(&p, &q, &m),
            }
            .map_err(|e| e.to_string())?;
            finish(table, &output, Format::Json)
        }
        Command::Markov { model, direction, z_grid, horizon, epsilon, output } => {
            let spec = ChainSpec::from_path(&model).map_err(|e| e.to_string())?;
            let zs = require_grid("--z-grid", z_grid.concat())?;
            let table = commands::markov(&spec, direction, &zs, horizon, epsilon).map_err(|e| e.to_string())?;
            finish(table, &output, Format::Csv)
        }
        Command::Concentration { model, direction, m, b, sigma2, output } => {
            let spec = model.as_deref().map(load_model).transpose()?;
            if spec.is_none() && (b.is_none() || sigma2.is_none()) {
                return Err("give --model or both --b and --sigma2".into());
            }
            let m = require_grid("--M", m.concat())?;
            let table = commands::concentration(spec.as_ref(), direction, &m, b, sigma2).map_err(|e| e.to_string())?;
            finish(table, &output, Format::Csv)
        }
        Command::Verify { output } => {
            let report = verify::run(output.seed).map_err(|e| e.to_string())?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
                    s.push('\n');
                    s
                }
                Format::Csv => {
                    let mut s = format!("# raresens verify v1\n# seed,{}\ncheck,passed,cases,detail\n", report.seed);
                    for c in &report.checks {
                        s.push_str(&format!("{},{},{},{}\n", c.name, c.passed, c.cases, quote(&c.detail)));
                    }
                    s
                }
            };
            emit(&text, output.out.as_deref())?;
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
