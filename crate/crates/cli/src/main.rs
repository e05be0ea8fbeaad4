use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use penlab::harness::oracle_check::run_oracle_checks;
use penlab::harness::output::{heatmap_file_name, write_heatmap};
use penlab::harness::{
    check_invariants, cor_report, emit_outputs, load_config, parse_procedures, read_cor, read_records,
    record_rows, run_experiment, selection_heatmap, CorEntry, ExperimentConfig, Heatmap, Manifest, Procedure,
};
use penlab::{Family, MaxDimRule};

#[derive(Parser)]
#[command(name = "penlab", version, about = "Penalized histogram model selection: simulations and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write its result files.
    Simulate(SimulateArgs),
    /// Check the exact formulas against brute force and Monte Carlo.
    OracleCheck {
        /// Monte Carlo replications per model.
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the accuracy table of a finished run.
    Table {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Selection frequencies over (D1, D2) for one procedure.
    Heatmap {
        #[arg(long = "in")]
        input: PathBuf,
        /// `oracle`, `iddim` or a procedure such as `L2` or `pen-loo*2`.
        #[arg(long)]
        which: String,
    },
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// TOML experiment file, or a `manifest.json` from an earlier run.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model collection: reg, reg-half, reg-t=<t> or reg-var.
    #[arg(long)]
    collection: Option<Family>,
    /// Maximal dimension: log, log2 or an integer.
    #[arg(long = "maxdim-rule")]
    maxdim_rule: Option<MaxDimRule>,
    /// Comma-separated procedure tokens, e.g. `L2,C,IdDim`.
    #[arg(long, value_delimiter = ',')]
    procedures: Option<Vec<String>>,
    /// Sample sizes to sweep, e.g. `n=100,200,500`.
    #[arg(long)]
    sweep: Option<String>,
}

fn parse_sweep(s: &str) -> Result<Vec<usize>> {
    let list = s.strip_prefix("n=").context("sweep must look like n=<list>")?;
    list.split(',')
        .map(|v| v.trim().parse::<usize>().with_context(|| format!("bad sample size `{v}`")))
        .collect()
}

fn print_cor(entries: &[CorEntry]) {
    let width = entries.iter().map(|e| e.label().len()).max().unwrap_or(9).max(9);
    println!("{:<width$}  {:>8}  {:>8}", "procedure", "C_or", "epsilon");
    for e in entries {
        let eps = e.epsilon.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!("{:<width$}  {:>8.3}  {:>8}", e.label(), e.c_or, eps);
    }
}

/// Runs one configuration into `dir`; returns the accuracy table and the
/// invariant violations.
fn simulate_into(config: &ExperimentConfig, dir: &Path) -> Result<(Vec<CorEntry>, Vec<String>)> {
    let start = Instant::now();
    let records = run_experiment(config)?;
    let rows = record_rows(&records);
    let cor = cor_report(&rows)?;
    let mut heatmaps: Vec<Heatmap> = Vec::new();
    if config.collection.family == Family::TwoRegimeHalf {
        heatmaps.push(selection_heatmap(&rows, "oracle")?);
        if config.procedures.contains(&Procedure::IdDim) {
            heatmaps.push(selection_heatmap(&rows, "iddim")?);
        }
    }
    let manifest = Manifest::new(config.echo(), start.elapsed().as_secs_f64());
    emit_outputs(dir, &rows, &cor, &heatmaps, &manifest)?;
    let violations = check_invariants(&rows, &cor);
    Ok((cor, violations))
}

fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let file = load_config(&args.config)?;
    let mut config = ExperimentConfig::from_file(&file)?;
    if let Some(n) = args.replications {
        if n == 0 {
            bail!("--replications must be >= 1");
        }
        config = config.with_replications(n);
    }
    if let Some(s) = args.seed {
        config = config.with_seed(s);
    }
    if args.threads.is_some() {
        config = config.with_threads(args.threads);
    }
    if let Some(family) = args.collection {
        config.collection.family = family;
    }
    if let Some(rule) = args.maxdim_rule {
        config.collection.max_dim = rule;
    }
    if let Some(tokens) = &args.procedures {
        let procs = parse_procedures(tokens, &config.c_ov_grid)?;
        config = config.with_procedures(procs);
    }
    let out = args.out.or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("penlab-out"));

    let mut violations = Vec::new();
    match args.sweep.as_deref() {
        None => {
            let (cor, bad) = simulate_into(&config, &out)?;
            print_cor(&cor);
            violations.extend(bad);
        }
        Some(spec) => {
            let mut all = Vec::new();
            for n in parse_sweep(spec)? {
                let c = config.clone().with_sample_size(n);
                let (cor, bad) = simulate_into(&c, &out.join(format!("n={n}")))?;
                println!("n = {n}");
                print_cor(&cor);
                violations.extend(bad.into_iter().map(|v| format!("n = {n}: {v}")));
                all.extend(cor.into_iter().map(|e| (n, e)));
            }
            write_sweep(&out.join("sweep.csv"), &all)?;
        }
    }
    println!("results written to {}", out.display());
    if violations.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for v in &violations {
        eprintln!("invariant violated: {v}");
    }
    Ok(ExitCode::from(2))
}

fn write_sweep(path: &Path, entries: &[(usize, CorEntry)]) -> Result<()> {
    let mut text = String::from("n,procedure,C_ov,C_or,epsilon\n");
    for (n, e) in entries {
        let c = e.c_ov.map(|c| c.to_string()).unwrap_or_default();
        let eps = e.epsilon.map(|v| v.to_string()).unwrap_or_default();
        text.push_str(&format!("{n},{},{c},{},{eps}\n", e.procedure, e.c_or));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn oracle_check(reps: usize, seed: u64) -> ExitCode {
    let results = run_oracle_checks(reps, seed);
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<width$}  {}", r.name, r.detail);
    }
    if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn table(input: &Path) -> Result<ExitCode> {
    let cor = read_cor(&input.join("cor.csv"))?;
    print_cor(&cor);
    Ok(ExitCode::SUCCESS)
}

fn heatmap(input: &Path, which: &str) -> Result<ExitCode> {
    let rows = read_records(&input.join("records.csv"))?;
    let h = selection_heatmap(&rows, which)?;
    let path = input.join(heatmap_file_name(&h.which));
    write_heatmap(&path, &h)?;
    let (m1, m2) = h.extent();
    println!("log10 selection frequency of {} over {} replications (rows D1, columns D2)", h.which, h.total);
    if let Some(v) = h.log10_frequency(0, 0) {
        println!("constant model: {v:.2}");
    }
    print!("{:>4}", "");
    for d2 in 1..=m2 {
        print!("{d2:>6}");
    }
    println!();
    for d1 in 1..=m1 {
        print!("{d1:>4}");
        for d2 in 1..=m2 {
            match h.log10_frequency(d1, d2) {
                Some(v) => print!("{v:>6.2}"),
                None => print!("{:>6}", "."),
            }
        }
        println!();
    }
    println!("written to {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::OracleCheck { reps, seed } => Ok(oracle_check(reps, seed)),
        Command::Table { input } => table(&input),
        Command::Heatmap { input, which } => heatmap(&input, &which),
    }
}
