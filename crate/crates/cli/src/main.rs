//! `scs`: capacity, bounds, enumeration, chain synthesis, encoding and
//! simulation for semiconstrained systems.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use scs::bounds::bounds_row;
use scs::capacity::solve_capacity;
use scs::codec::{self, BitStream, EncodedFile};
use scs::markov::chain_from_measure;
use scs::measures::{apply_f_exact, empirical_k_distribution, matrix_for_words, WindowMode};
use scs::rational::{format_rational, parse_rational, ratio, to_f64, Rational};
use scs::words::{check_enumeration_budget, enumerate_count, Alphabet, ConstraintSpec, Mode, Word};
use scs::Error;

#[derive(Parser)]
#[command(name = "scs", version, about = "Semiconstrained systems toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the capacity program and print the result as JSON.
    Capacity(SpecArgs),
    /// CSV of lower bound, solved capacity and upper bounds for (0,k,p)-RLL.
    Bounds {
        #[arg(long)]
        k: usize,
        /// Single cap.
        #[arg(long, conflicts_with = "p_grid")]
        p: Option<String>,
        /// Caps start:stop:step, endpoints included.
        #[arg(long)]
        p_grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count admissible words of every length up to --n.
    Enumerate {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "strict")]
        mode: Mode,
    },
    /// Write the capacity-achieving Markov chain as a CSV edge list.
    SynthChain {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode the bits of a file into a constrained word.
    Encode {
        input: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        /// Number of input bits; defaults to the whole file.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = "1/10")]
        epsilon: String,
        /// Seed of the padding generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a file written by `encode`.
    Decode {
        input: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo run of encode/decode; per-trial CSV, summary on stderr.
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1/10")]
        epsilon: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the triple distribution of 101001101000 and diff it
    /// against the published table.
    VerifyTable1,
}

/// A spec file, or the (0,k,p)-RLL shorthand `--k K --p P`.
#[derive(Args)]
struct SpecArgs {
    #[arg(long, conflicts_with_all = ["k", "p"])]
    spec: Option<PathBuf>,
    #[arg(long, requires = "p")]
    k: Option<usize>,
    #[arg(long, requires = "k")]
    p: Option<String>,
}

impl SpecArgs {
    fn load(&self) -> anyhow::Result<ConstraintSpec> {
        match (&self.spec, self.k, &self.p) {
            (Some(path), _, _) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(ConstraintSpec::from_json(&text)?)
            }
            (None, Some(k), Some(p)) => Ok(ConstraintSpec::rll(k, parse_rational(p)?)?),
            _ => bail!("give --spec FILE or --k K --p P"),
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            Ok(stdout.flush()?)
        }
    }
}

fn print(text: &str) -> anyhow::Result<()> {
    emit(None, text.as_bytes())
}

/// A reader that closed the pipe early is not a failure.
fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.downcast_ref::<std::io::Error>()
        .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}

fn parse_grid(text: &str) -> anyhow::Result<Vec<Rational>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts[..] else {
        bail!("grid must be start:stop:step, got {text:?}");
    };
    let (start, stop, step) = (parse_rational(start)?, parse_rational(stop)?, parse_rational(step)?);
    if step <= Rational::from_integer(0.into()) {
        bail!("grid step must be positive");
    }
    let mut grid = Vec::new();
    let mut p = start;
    while p <= stop {
        grid.push(p.clone());
        p += &step;
    }
    Ok(grid)
}

const TABLE_ONE: [(&str, (i64, i64)); 8] = [
    ("000", (1, 10)),
    ("001", (1, 10)),
    ("010", (2, 10)),
    ("011", (1, 10)),
    ("100", (2, 10)),
    ("101", (2, 10)),
    ("110", (1, 10)),
    ("111", (0, 1)),
];

fn verify_table1() -> anyhow::Result<String> {
    let alphabet = Alphabet::binary();
    let word = Word::parse("101001101000", &alphabet)?;
    let weights = empirical_k_distribution(&word, &alphabet, 3, WindowMode::Linear)?.weights();
    let mut out = String::from("triple,computed,expected,match\n");
    let mut mismatches = 0;
    for ((triple, (num, den)), got) in TABLE_ONE.iter().zip(&weights) {
        let expected = ratio(*num, *den);
        let ok = *got == expected;
        mismatches += usize::from(!ok);
        out.push_str(&format!("{triple},{},{},{ok}\n", format_rational(got), format_rational(&expected)));
    }
    let words = [Word::parse("1", &alphabet)?, Word::parse("100", &alphabet)?];
    let fmap = apply_f_exact(&matrix_for_words(&words, alphabet)?, &weights)?;
    for (w, (got, expected)) in words.iter().zip(fmap.iter().zip([ratio(5, 10), ratio(2, 10)])) {
        let ok = *got == expected;
        mismatches += usize::from(!ok);
        out.push_str(&format!("f({w}),{},{},{ok}\n", format_rational(got), format_rational(&expected)));
    }
    if mismatches > 0 {
        print(&out)?;
        bail!("{mismatches} entries differ from the table");
    }
    Ok(out)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Capacity(spec) => {
            let result = solve_capacity(&spec.load()?, 1e-9)?;
            print(&format!("{}\n", serde_json::to_string_pretty(&result)?))?;
        }
        Command::Bounds { k, p, p_grid, out } => {
            let caps = match (p, p_grid) {
                (Some(p), None) => vec![parse_rational(&p)?],
                (None, Some(grid)) => parse_grid(&grid)?,
                _ => bail!("give --p or --p-grid"),
            };
            let mut csv = String::from("k,p,lower,solved,upper,refined_upper_gap\n");
            for p in &caps {
                let row = bounds_row(k, to_f64(p))?;
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    row.k,
                    format_rational(p),
                    row.lower,
                    row.solved,
                    row.upper,
                    row.refined_upper_gap
                ));
            }
            emit(out.as_deref(), csv.as_bytes())?;
        }
        Command::Enumerate { spec, n, mode } => {
            let spec = spec.load()?;
            check_enumeration_budget(spec.alphabet(), n)?;
            let mut csv = String::from("n,count\n");
            for len in 1..=n {
                csv.push_str(&format!("{len},{}\n", enumerate_count(&spec, len, mode)?));
            }
            print(&csv)?;
        }
        Command::SynthChain { spec, out } => {
            let result = solve_capacity(&spec.load()?, 1e-9)?;
            let chain = chain_from_measure(&result.optimizer)?;
            emit(out.as_deref(), chain.to_csv().as_bytes())?;
        }
        Command::Encode { input, spec, n, epsilon, seed, out } => {
            let spec = spec.load()?;
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let n = n.unwrap_or(bytes.len() * 8);
            let bits = BitStream::from_bytes(&bytes, n)?;
            let plan = codec::make_plan(&spec, n, &parse_rational(&epsilon)?)?;
            let sent = codec::encode(&bits, &plan, seed)?;
            emit(Some(&out), &EncodedFile::new(&plan, seed, &sent).to_bytes())?;
        }
        Command::Decode { input, spec, out } => {
            let spec = spec.load()?;
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let file = EncodedFile::from_bytes(&bytes)?;
            let plan = file.plan(&spec)?;
            let bits = codec::decode(&file.transmitted(&plan)?, &plan)?;
            emit(Some(&out), &bits.to_bytes())?;
        }
        Command::Simulate { spec, n, epsilon, trials, seed, jobs, out } => {
            let spec = spec.load()?;
            let plan = codec::make_plan(&spec, n, &parse_rational(&epsilon)?)?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
            let report = pool.install(|| codec::simulate_plan(&plan, trials, seed))?;
            emit(out.as_deref(), report.to_csv().as_bytes())?;
            let summary = serde_json::json!({
                "n": report.n,
                "transmit_len": report.transmit_len,
                "rate": report.rate,
                "solved_capacity": report.solved_capacity,
                "trials": report.trials,
                "success_rate": report.success_rate,
                "e1": report.e1,
                "e2": report.e2,
                "e3": report.e3,
                "roundtrip_failures": report.roundtrip_failures,
                "admitted": report.admitted,
                "words": report.words,
            });
            eprintln!("{summary}");
        }
        Command::VerifyTable1 => print(&verify_table1()?)?,
    }
    Ok(())
}

/// Exit status per failure class.
fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_)) => (3, "parse"),
        Some(Error::Infeasible { .. }) => (4, "infeasible"),
        Some(Error::Budget(_)) => (5, "budget"),
        Some(Error::Codec(_) | Error::Event(_)) => (6, "codec"),
        Some(Error::NonConvergence { .. }) => (7, "convergence"),
        _ => (1, "error"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, class) = classify(&err);
            eprintln!("scs: {class}: {}", format!("{err:#}").replace('\n', " "));
            ExitCode::from(code)
        }
    }
}
