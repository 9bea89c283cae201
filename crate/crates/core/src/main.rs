use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use setgrl_core::harness::config::derive_seed;
use setgrl_core::harness::experiment::{build_store, SPG_FILE};
use setgrl_core::harness::{
    bench_join, evaluate_saved, random_queries, report_space, run_experiment, Dataset,
    ExperimentConfig,
};
use setgrl_core::sampling::sample_all;
use setgrl_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "setgrl",
    version,
    about = "Set-based subgraph learning toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample every node and write the SpG snapshot.
    Sample(Common),
    /// Measure join throughput across thread counts.
    JoinBench(Common),
    /// Report set sizes, duplication and storage.
    SpaceReport(Common),
    /// Split, sample, train and evaluate.
    Train(Common),
    /// Re-evaluate artifacts left by `train` in --out-dir.
    Eval(Common),
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Any config key as `--key value` or `--section.key=value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
    overrides: Vec<String>,
}

fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("unexpected argument `{arg}`")))?;
        match key.split_once('=') {
            Some((k, v)) => out.push((k.replace('-', "_"), v.to_string())),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::Config(format!("missing value for --{key}")))?;
                out.push((key.replace('-', "_"), v.clone()));
            }
        }
    }
    Ok(out)
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        // flags after the first free-form override land in `overrides` too
        let mut overrides = parse_overrides(&self.overrides)?;
        let mut config = self.config.clone();
        if let Some(i) = overrides.iter().position(|(k, _)| k == "config") {
            config = Some(overrides.remove(i).1.into());
        }
        let mut cfg = match &config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply_overrides(&overrides)?;
        if let Some(t) = self.threads {
            cfg.run.threads = t;
        }
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(r) = self.repeats {
            cfg.run.repeats = r;
        }
        if let Some(o) = &self.out_dir {
            cfg.run.out_dir = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit<T: Serialize>(out: &mut impl Write, value: &T) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| Error::Internal(e.to_string()))?;
    writeln!(out, "{line}")?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Sample(c) => {
            let cfg = c.config()?;
            let data = Dataset::load(&cfg.data)?;
            let spg = build_store(
                &cfg,
                &data.graph,
                derive_seed(cfg.run.seed, cfg.sampler.rng_seed, 2),
            )?;
            if let Some(dir) = &cfg.run.out_dir {
                fs::create_dir_all(dir)?;
                let mut w = BufWriter::new(File::create(dir.join(SPG_FILE))?);
                spg.write_snapshot(&mut w)?;
                w.flush()?;
            }
            emit(&mut out, &spg.stats())?;
        }
        Command::JoinBench(c) => {
            let cfg = c.config()?;
            let data = Dataset::load(&cfg.data)?;
            let spg = build_store(
                &cfg,
                &data.graph,
                derive_seed(cfg.run.seed, cfg.sampler.rng_seed, 2),
            )?;
            let queries = random_queries(
                data.graph.node_count(),
                2,
                cfg.run.bench_queries,
                derive_seed(cfg.run.seed, 0, 4),
            )?;
            for row in bench_join(&spg, &queries, &cfg.run.bench_threads, 3)? {
                emit(&mut out, &row)?;
            }
        }
        Command::SpaceReport(c) => {
            let cfg = c.config()?;
            let data = Dataset::load(&cfg.data)?;
            let spec = cfg
                .sampler
                .spec(derive_seed(cfg.run.seed, cfg.sampler.rng_seed, 2));
            let samples = sample_all(&data.graph, &spec, cfg.run.threads)?;
            emit(&mut out, &report_space(&samples, &spec)?)?;
        }
        Command::Train(c) => {
            let cfg = c.config()?;
            let report = run_experiment(&cfg, cfg.run.out_dir.as_deref())?;
            out.write_all(report.to_jsonl()?.as_bytes())?;
        }
        Command::Eval(c) => {
            let cfg = c.config()?;
            let dir = cfg
                .run
                .out_dir
                .clone()
                .ok_or_else(|| Error::Config("eval needs --out-dir".into()))?;
            let report = evaluate_saved(&cfg, &dir)?;
            out.write_all(report.to_jsonl()?.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
