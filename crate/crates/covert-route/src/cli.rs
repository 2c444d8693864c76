//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or validation
//! error (including I/O).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use covert_route_core::routing::{route, RouteError};
use covert_route_core::{CovertBudget, RandomScenario, Regime, RouteResult};

use crate::harness::{self, BaseParams, DrawMode, SweepAxis, SweepSpec};
use crate::scenario_file;
use crate::verify::{self, VerifyConfig};

#[derive(Debug, Parser)]
#[command(name = "covert-route", version, about = "Covert multi-hop route planning in wireless networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random scenario file.
    Gen(GenArgs),
    /// Route one scenario under one or all regimes.
    Snapshot(SnapshotArgs),
    /// Monte Carlo sweep over one parameter, written as CSV.
    Sweep(SweepArgs),
    /// Run the randomized oracle suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Relay count (Alice and Bob are added).
    #[arg(long, default_value_t = 30)]
    nodes: usize,
    #[arg(long, default_value_t = 30)]
    wardens: usize,
    /// Side of the square deployment area.
    #[arg(long, default_value_t = 100.0)]
    dim: f64,
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    node_noise: f64,
    #[arg(long, default_value_t = 1.0)]
    warden_noise: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SnapshotArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// mt-sk, md-sk, mt-ik, md-ik or all.
    #[arg(long, default_value = "all")]
    regime: String,
    /// Blocklength; adds an exact-divergence certificate per plan.
    #[arg(long)]
    n: Option<u64>,
    /// Per-link CSV of every plan.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// delta, n_nodes, n_wardens or alpha.
    #[arg(long)]
    axis: String,
    /// `start:stop:count` (inclusive, evenly spaced) or a comma list.
    #[arg(long)]
    values: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma list of regimes, or all.
    #[arg(long, default_value = "all")]
    regimes: String,
    /// Relay count when not swept.
    #[arg(long, default_value_t = 30)]
    nodes: usize,
    #[arg(long, default_value_t = 30)]
    wardens: usize,
    #[arg(long, default_value_t = 100.0)]
    dim: f64,
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    node_noise: f64,
    #[arg(long, default_value_t = 1.0)]
    warden_noise: f64,
    /// Fresh placement at every axis value instead of nested populations.
    #[arg(long)]
    independent_draws: bool,
    /// Worker threads; 0 uses one per core.
    #[arg(long, env = "COVERT_ROUTE_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Raw CSV path; the summary goes next to it with a `.summary.csv` suffix.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest total node count per case (at most 12).
    #[arg(long, default_value_t = 8)]
    size_cap: usize,
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, hide = true)]
    inject_perturbation: Option<f64>,
}

/// Parses `start:stop:count` or `a,b,c`.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in --values"));
    if let [start, stop, count] = text.split(':').collect::<Vec<_>>()[..] {
        let (start, stop) = (num(start)?, num(stop)?);
        let count: usize = count.trim().parse().with_context(|| format!("bad count {count:?} in --values"))?;
        return Ok(match count {
            0 => bail!("--values count must be >= 1"),
            1 => vec![start],
            _ => (0..count)
                .map(|i| if i + 1 == count { stop } else { start + (stop - start) * i as f64 / (count - 1) as f64 })
                .collect(),
        });
    }
    text.split(',').map(num).collect()
}

/// Parses `all` or a comma list of regime names.
pub fn parse_regimes(text: &str) -> Result<Vec<Regime>> {
    if text.trim() == "all" {
        return Ok(Regime::ALL.to_vec());
    }
    text.split(',').map(|r| r.trim().parse::<Regime>().map_err(|_| anyhow::anyhow!("unknown regime {r:?}"))).collect()
}

fn gen(args: GenArgs) -> Result<ExitCode> {
    let scenario = RandomScenario {
        n_relays: args.nodes,
        n_wardens: args.wardens,
        dimension: args.dim,
        alpha: args.alpha,
        node_noise: args.node_noise,
        warden_noise: args.warden_noise,
    }
    .generate(args.seed)?;
    scenario_file::save(&scenario, &args.out)?;
    println!("{}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn print_plan(r: &RouteResult) {
    let a = &r.plan.allocation;
    println!("[{}]", r.regime);
    println!("path: {}, hops: {}", r.path, r.path.hop_count());
    println!("path cost: {}", harness::fmt_f64(r.path_cost));
    if r.regime.is_throughput() {
        println!("rate: {}/√n", harness::fmt_f64(a.rate_coeff));
    } else {
        println!("delay: {}·√n", harness::fmt_f64(a.delay_coeff));
    }
    println!("link powers (P·√n):");
    for ((tx, rx), p) in r.path.links().zip(&a.power_coeffs) {
        println!("  {tx} -> {rx}: {}", harness::fmt_f64(*p));
    }
}

const SNAPSHOT_HEADER: &str =
    "regime,path,path_cost,rate_coeff,delay_coeff,hop,tx,rx,omega,power_coeff,link_rate_coeff,link_delay_coeff";

fn write_snapshot_rows(w: &mut impl Write, r: &RouteResult) -> std::io::Result<()> {
    let a = &r.plan.allocation;
    let f = harness::fmt_f64;
    for (i, (tx, rx)) in r.path.links().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.regime,
            r.path,
            f(r.path_cost),
            f(a.rate_coeff),
            f(a.delay_coeff),
            i,
            tx,
            rx,
            f(a.omegas[i]),
            f(a.power_coeffs[i]),
            f(a.rate_coeffs[i]),
            f(a.delay_coeffs[i])
        )?;
    }
    Ok(())
}

fn snapshot(args: SnapshotArgs) -> Result<ExitCode> {
    let scenario = scenario_file::load(&args.scenario)?;
    let budget = CovertBudget::new(args.delta)?;
    let regimes = parse_regimes(&args.regime)?;
    if scenario.is_warden_free() {
        println!("warning: scenario has no wardens; covert throughput is unconstrained");
    }
    let mut csv = match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("{}", path.display()))?);
            writeln!(w, "{SNAPSHOT_HEADER}")?;
            Some(w)
        }
        None => None,
    };
    let mut certified = true;
    for (k, regime) in regimes.into_iter().enumerate() {
        if k > 0 {
            println!();
        }
        let r = match route(&scenario, &budget, regime) {
            Ok(r) => r,
            Err(RouteError::Unconstrained { path }) => {
                println!("[{regime}]");
                println!("path: {path}, hops: {}", path.hop_count());
                println!("unconstrained: no warden observes any link");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        print_plan(&r);
        if let Some(n) = args.n {
            let cert = r.plan.certify(&scenario, &budget, n)?;
            let verdict = if cert.passes() { "PASS" } else { "FAIL" };
            certified &= cert.passes();
            println!(
                "certificate (n = {n}): D_exact = {}, bound = {}, δ = {}",
                harness::fmt_f64(cert.exact_kl),
                harness::fmt_f64(cert.bound),
                cert.delta
            );
            println!("D_exact ≤ δ: {verdict}");
        }
        if let Some(w) = csv.as_mut() {
            write_snapshot_rows(w, &r)?;
        }
    }
    if let Some(mut w) = csv {
        w.flush()?;
    }
    Ok(if certified { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let spec = SweepSpec {
        axis: args.axis.parse().map_err(anyhow::Error::msg)?,
        values: parse_values(&args.values)?,
        base: BaseParams {
            n_relays: args.nodes,
            n_wardens: args.wardens,
            dimension: args.dim,
            alpha: args.alpha,
            delta: args.delta,
            node_noise: args.node_noise,
            warden_noise: args.warden_noise,
        },
        trials: args.trials,
        base_seed: args.seed,
        regimes: parse_regimes(&args.regimes)?,
        draw_mode: if args.independent_draws { DrawMode::Independent } else { DrawMode::Nested },
    };
    let result = harness::run_sweep(&spec, args.jobs)?;
    let summary = harness::summary_path(&args.out);
    for (path, raw) in [(&args.out, true), (&summary, false)] {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("{}", path.display()))?);
        if raw {
            harness::write_raw_csv(&result, &mut w)?;
        } else {
            harness::write_summary_csv(&result, &mut w)?;
        }
        w.flush()?;
        println!("{}", path.display());
    }
    if result.failures() > 0 {
        println!("warning: {} trial(s) failed and are excluded from the means", result.failures());
    }
    let warden_free = match spec.axis {
        SweepAxis::NWardens => spec.values.contains(&0.0),
        _ => spec.base.n_wardens == 0,
    };
    if warden_free {
        println!("warning: warden-free scenarios have unconstrained throughput");
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(args: VerifyArgs) -> Result<ExitCode> {
    let cfg = VerifyConfig {
        seed: args.seed,
        size_cap: args.size_cap,
        cases: args.cases,
        perturbation: args.inject_perturbation,
    };
    let reports = verify::run_verification(&cfg)?;
    let mut ok = true;
    for r in &reports {
        for f in &r.failures {
            println!("FAIL {} seed {}: {}", r.name, f.seed, f.detail);
        }
        println!("{}: {}/{} cases passed", r.name, r.cases - r.failures.len(), r.cases);
        ok &= r.passed();
    }
    println!("{} suites, {} cases each: {}", reports.len(), cfg.cases, if ok { "PASS" } else { "FAIL" });
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Parses `args` (program name first) and runs the selected command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Snapshot(a) => snapshot(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify_cmd(a),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
