use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use phylozdd::bench::{self, BenchConfig, Method, CSV_HEADER};
use phylozdd::bnb::bnb_enumerate;
use phylozdd::datagen::{compression_family, generate, GenConfig};
use phylozdd::feasibility::brute_force_solutions;
use phylozdd::format;
use phylozdd::reductions::matching_to_idbpp;
use phylozdd::zdd_enum::{self, BuildOutcome, PairSchedule, VarOrder};
use phylozdd::{canonical_key, is_laminar, is_sandwiched, Instance, Phylogeny};

#[derive(Parser)]
#[command(
    name = "phylozdd",
    version,
    about = "Enumerate and count perfect phylogenies of incomplete binary character data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random perturbed instance.
    Gen {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the disjoint-window family with 2^(chars*extra) solutions.
    Family {
        #[arg(long)]
        chars: usize,
        #[arg(long)]
        extra: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a bipartite graph into an instance counting its matchings.
    ReduceMatching {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count (and optionally list) the solutions of an instance.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "character-major")]
        order: OrderArg,
        #[arg(long = "pair-order", value_enum, default_value = "lexicographic")]
        pair_order: PairOrderArg,
        #[arg(long = "timeout-ms", default_value_t = 120_000)]
        timeout_ms: u64,
        #[arg(long)]
        enumerate: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Check a solutions file against an instance.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        solutions: PathBuf,
    },
    /// Run a seeded corpus and append CSV records.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Zdd,
    Bnb,
    Brute,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    CharacterMajor,
    ElementMajor,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairOrderArg {
    Lexicographic,
    Deferred,
    DeferredNearest,
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    format::parse_instance(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Default)]
struct SolveReport {
    status: &'static str,
    count: Option<BigUint>,
    lines: Vec<(String, String)>,
}

fn solve(
    inst: &Instance,
    method: MethodArg,
    order: VarOrder,
    pair_order: PairSchedule,
    timeout: Duration,
    want_solutions: bool,
) -> anyhow::Result<(SolveReport, Option<Vec<Phylogeny>>)> {
    let mut report = SolveReport::default();
    let mut solutions = None;
    match method {
        MethodArg::Zdd => match zdd_enum::solve(inst, order, pair_order, Some(timeout))? {
            BuildOutcome::Complete(sol) => {
                report.status = "solved";
                report.count = Some(sol.count());
                let s = &sol.stats;
                report.lines.extend([
                    ("time_ms".into(), s.wall_time.as_millis().to_string()),
                    ("zdd_nodes".into(), s.final_nodes.to_string()),
                    ("zdd_peak_nodes".into(), s.peak_nodes.to_string()),
                    ("pair_steps".into(), s.pair_steps.to_string()),
                ]);
                if want_solutions {
                    solutions = Some(sol.solutions(inst)?);
                }
            }
            BuildOutcome::TimedOut(s) => {
                report.status = "timeout";
                report.lines.extend([
                    ("time_ms".into(), s.wall_time.as_millis().to_string()),
                    ("zdd_peak_nodes".into(), s.peak_nodes.to_string()),
                    ("pair_steps".into(), s.pair_steps.to_string()),
                ]);
            }
        },
        MethodArg::Bnb => {
            let mut found = Vec::new();
            let stats = bnb_enumerate(
                inst,
                |p| {
                    if want_solutions {
                        found.push(p.clone());
                    }
                },
                Some(timeout),
            );
            report.status = if stats.completed { "solved" } else { "timeout" };
            if stats.completed {
                report.count = Some(stats.found.clone());
            }
            report.lines.extend([
                ("time_ms".into(), stats.wall_time.as_millis().to_string()),
                ("bnb_calls".into(), stats.calls.to_string()),
                ("bnb_found".into(), stats.found.to_string()),
            ]);
            if want_solutions {
                solutions = Some(found);
            }
        }
        MethodArg::Brute => {
            let sols = brute_force_solutions(inst, usize::MAX)?;
            report.status = "solved";
            report.count = Some(BigUint::from(sols.len()));
            if want_solutions {
                solutions = Some(sols);
            }
        }
    }
    Ok((report, solutions))
}

fn verify(inst: &Instance, sols: &[Phylogeny]) -> anyhow::Result<()> {
    let mut prev: Option<Vec<u8>> = None;
    for (idx, p) in sols.iter().enumerate() {
        let line = idx + 1;
        if !is_sandwiched(p, inst)? {
            bail!("line {line}: not within the instance bounds");
        }
        if !is_laminar(&p.sets)? {
            bail!("line {line}: sets are not laminar");
        }
        let key = canonical_key(p);
        if let Some(prev) = &prev {
            if prev == &key {
                bail!("line {line}: duplicate solution");
            }
            if prev > &key {
                bail!("line {line}: solutions not sorted");
            }
        }
        prev = Some(key);
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen { m, n, p, seed, out } => {
            let inst = generate(&GenConfig { m, n, p, seed })?;
            write(&out, &format::write_instance(&inst))?;
        }
        Command::Family { chars, extra, out } => {
            if chars == 0 || extra == 0 {
                bail!("--chars and --extra must be at least 1");
            }
            write(&out, &format::write_instance(&compression_family(chars, extra)))?;
        }
        Command::ReduceMatching { graph, out } => {
            let g = format::parse_bigraph(&read(&graph)?).with_context(|| format!("parsing {}", graph.display()))?;
            write(&out, &format::write_instance(&matching_to_idbpp(&g)))?;
        }
        Command::Solve {
            input,
            method,
            order,
            pair_order,
            timeout_ms,
            enumerate,
            stats,
        } => {
            let inst = read_instance(&input)?;
            let order = match order {
                OrderArg::CharacterMajor => VarOrder::CharacterMajor,
                OrderArg::ElementMajor => VarOrder::ElementMajor,
            };
            let pair_order = match pair_order {
                PairOrderArg::Lexicographic => PairSchedule::Lexicographic,
                PairOrderArg::Deferred => PairSchedule::Deferred,
                PairOrderArg::DeferredNearest => PairSchedule::DeferredNearest,
            };
            let (report, solutions) = solve(
                &inst,
                method,
                order,
                pair_order,
                Duration::from_millis(timeout_ms),
                enumerate.is_some(),
            )?;
            match &report.count {
                Some(c) => println!("{c}"),
                None => println!("{}", report.status),
            }
            if let (Some(path), Some(sols)) = (&enumerate, &solutions) {
                write(path, &format::write_solutions(sols))?;
            }
            if let Some(path) = &stats {
                let method = match method {
                    MethodArg::Zdd => Method::Zdd,
                    MethodArg::Bnb => Method::Bnb,
                    MethodArg::Brute => Method::Brute,
                };
                let mut text = format!("method\t{method}\nstatus\t{}\n", report.status);
                if let Some(c) = &report.count {
                    text.push_str(&format!("count\t{c}\n"));
                }
                for (k, v) in &report.lines {
                    text.push_str(&format!("{k}\t{v}\n"));
                }
                write(path, &text)?;
            }
        }
        Command::Verify { input, solutions } => {
            let inst = read_instance(&input)?;
            let sols = format::parse_solutions(&read(&solutions)?, &inst)
                .with_context(|| format!("parsing {}", solutions.display()))?;
            verify(&inst, &sols)?;
            println!("ok {}", sols.len());
        }
        Command::Bench { config, out, jobs } => {
            let cfg: BenchConfig = read(&config)?
                .parse()
                .with_context(|| format!("parsing {}", config.display()))?;
            let records = bench::run_bench(&cfg, jobs)?;
            let fresh = fs::metadata(&out).map(|m| m.len() == 0).unwrap_or(true);
            let mut file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&out)
                .with_context(|| format!("opening {}", out.display()))?;
            if fresh {
                writeln!(file, "{CSV_HEADER}")?;
            }
            for r in &records {
                writeln!(file, "{}", r.csv_row())?;
            }
            print!("{}", bench::summarize(&records));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
