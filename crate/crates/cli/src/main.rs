use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use kstrip::apmodel::{sample_ap, sample_simple, Configuration};
use kstrip::binprocess::run_bin_process;
use kstrip::coupling::{couple_pair, slowed_strip, DEFAULT_B};
use kstrip::depth::{build_strip_digraph, exact_depth, max_reach_in, reach_set, DepthReport, LayerIndex};
use kstrip::lab::{self, ExperimentSpec, FitModel, PlotKind, PlotOptions};
use kstrip::peeling::{parallel_strip, slow_strip, PeelResult, SlowTrace};
use kstrip::thresholds::{core_constants, core_threshold, supercritical_profile};
use kstrip::{Error, Result};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "kstrip", version, about = "k-stripping of random hypergraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold and critical constants for (r, k).
    Thresholds(ThresholdsArgs),
    /// Sample a configuration from the AP-model.
    Gen(GenArgs),
    /// Strip a configuration down to its k-core.
    Peel(PeelArgs),
    /// Depth bounds of stripped vertices.
    Depth(DepthArgs),
    /// Coupled pair and slowed-down stripping report.
    Couple(CoupleArgs),
    /// Bins-only auxiliary process.
    Binproc(BinprocArgs),
    /// Run a sweep described by a JSON spec.
    Sweep(SweepArgs),
    /// Fit a scaling model to sweep results.
    Fit(FitArgs),
    /// Render a CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct ThresholdsArgs {
    #[arg(long)]
    r: usize,
    #[arg(long)]
    k: usize,
    /// Also report μ(c), α(c), β(c) at this supercritical density.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Number of tuples; defaults to round(c n).
    #[arg(long, conflicts_with = "c")]
    m: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reject until the configuration is simple.
    #[arg(long)]
    simple: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Parallel,
    Slow,
}

#[derive(Args)]
struct PeelArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    k: u32,
    #[arg(long, value_enum, default_value = "parallel")]
    engine: Engine,
    /// SLOW-STRIP trace CSV (implies the slow engine).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Layer sizes CSV with columns `i,size`.
    #[arg(long)]
    layers: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("target").required(true).args(["vertex", "max"])))]
struct DepthArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    vertex: Option<u32>,
    /// Report the vertex with the largest reach set.
    #[arg(long)]
    max: bool,
    /// Brute-force the exact depth (at most 12 bins).
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    layers: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoupleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    c: f64,
    #[arg(long)]
    cprime: f64,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    k: u32,
    #[arg(long = "B", default_value_t = DEFAULT_B)]
    b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BinprocArgs {
    #[arg(long = "N")]
    bins: u64,
    #[arg(long = "D")]
    points: u64,
    #[arg(long)]
    k: u32,
    /// Tuple size, used for θ̂.
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Reference size for the stopping rule; defaults to N.
    #[arg(long)]
    nref: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the runtime_ms column (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// power_in_xi, log_over_sqrt_xi or power_in_n.
    #[arg(long)]
    model: String,
    #[arg(long, default_value = "s_rounds")]
    response: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// layers, Lt, zeta or scaling.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    logx: bool,
    #[arg(long)]
    logy: bool,
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn emit_json(out: Option<&Path>, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn read_config(path: &Path) -> Result<Configuration> {
    Configuration::read_text(BufReader::new(fs::File::open(path)?))
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_trace(path: &Path, trace: &SlowTrace) -> Result<()> {
    let mut s = String::from("t,L,N,D,zeta,theta_psi,theta_emp,round\n");
    for row in &trace.steps {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.t,
            row.light,
            row.heavy_count,
            row.heavy_degree,
            cell(row.zeta),
            cell(row.theta_psi),
            cell(row.theta_emp),
            cell(row.round)
        ));
    }
    fs::write(path, s)?;
    Ok(())
}

fn write_layers(path: &Path, peel: &PeelResult) -> Result<()> {
    let mut s = String::from("i,size\n");
    for (i, size) in peel.layer_sizes.iter().enumerate() {
        s.push_str(&format!("{i},{size}\n"));
    }
    fs::write(path, s)?;
    Ok(())
}

fn thresholds(a: ThresholdsArgs) -> Result<()> {
    let tc = core_constants(a.r, a.k)?;
    let mut v = serde_json::to_value(&tc)?;
    if let Some(c) = a.c {
        v["profile"] = serde_json::to_value(supercritical_profile(c, a.r, a.k)?)?;
    }
    emit_json(None, &v)
}

fn gen(a: GenArgs) -> Result<()> {
    let m = match (a.m, a.c) {
        (Some(m), _) => m,
        (None, Some(c)) if c >= 0.0 => (c * a.n as f64).round() as usize,
        (None, Some(c)) => return Err(Error::Domain(format!("density must be nonnegative, got {c}"))),
        (None, None) => return Err(Error::Schema("one of --m or --c is required".into())),
    };
    let cfg = if a.simple {
        sample_simple(a.n, m, a.r, a.seed)?.config
    } else {
        sample_ap(a.n, m, a.r, a.seed)?
    };
    let mut buf = Vec::new();
    cfg.write_text(&mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn peel(a: PeelArgs) -> Result<()> {
    let cfg = read_config(&a.input)?;
    let slow = matches!(a.engine, Engine::Slow) || a.trace.is_some();
    let (res, trace) = if slow {
        let (r, t) = slow_strip(&cfg, a.k);
        (r, Some(t))
    } else {
        (parallel_strip(&cfg, a.k), None)
    };
    if let (Some(path), Some(t)) = (&a.trace, &trace) {
        write_trace(path, t)?;
    }
    if let Some(path) = &a.layers {
        write_layers(path, &res)?;
    }
    let mut v = json!({
        "engine": if slow { "slow" } else { "parallel" },
        "n": cfg.n(),
        "k": a.k,
        "s": res.s,
        "i_max": res.i_max,
        "layer_sizes": res.layer_sizes,
        "core_vertices": res.core_size(),
        "core_tuples": res.core.live_tuples(),
    });
    if let Some(t) = &trace {
        v["slow_steps"] = json!(t.total_steps);
        v["t_of_round"] = json!(t.t_of_round);
    }
    emit_json(a.out.as_deref(), &v)
}

fn depth(a: DepthArgs) -> Result<()> {
    let cfg = read_config(&a.input)?;
    let dg = build_strip_digraph(&cfg, a.k);
    let (vertex, reach_size) = match a.vertex {
        Some(v) => (v, reach_set(&dg, v)?.len()),
        None => match max_reach_in(&dg) {
            (Some(v), size) => (v, size),
            (None, _) => return Err(Error::Domain("no vertex was stripped".into())),
        },
    };
    let round = dg.peel().layer_of[vertex as usize].ok_or(Error::NotStripped(vertex))? as usize;
    let exact = if a.exact {
        Some(exact_depth(&cfg, a.k, vertex)?)
    } else {
        None
    };
    let layers = if a.layers {
        let index = LayerIndex::from_peel(&cfg, dg.peel().clone());
        Some((&index.reach(vertex)?).into())
    } else {
        None
    };
    let report = DepthReport {
        vertex,
        round,
        reach_size,
        exact_depth: exact,
        layers,
    };
    emit_json(a.out.as_deref(), &serde_json::to_value(report)?)
}

fn couple(a: CoupleArgs) -> Result<()> {
    let pair = couple_pair(a.n, a.c, a.cprime, a.r, a.seed)?;
    let (c_rk, _) = core_threshold(a.r, a.k as usize)?;
    let report = slowed_strip(&pair.h_prime, &pair.h, a.k, a.b, a.cprime - c_rk)?;
    emit_json(a.out.as_deref(), &serde_json::to_value(report)?)
}

fn binproc(a: BinprocArgs) -> Result<()> {
    let trace = run_bin_process(a.bins, a.points, a.k, a.sigma, a.nref.unwrap_or(a.bins), a.r, a.seed)?;
    if let Some(path) = &a.trace {
        let mut s = String::from("t,Nhat,Dhat,zetahat,thetahat\n");
        for row in trace.rows() {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                row.t,
                row.n_hat,
                row.d_hat,
                cell(row.zeta_hat),
                cell(row.theta_hat)
            ));
        }
        fs::write(path, s)?;
    }
    let last = trace.steps.last().unwrap_or(&trace.initial);
    let v = json!({
        "steps": trace.steps.len(),
        "tau_1": trace.tau_1,
        "flagged_steps": trace.flagged.len(),
        "initial": trace.initial,
        "final": last,
    });
    emit_json(a.out.as_deref(), &v)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&a.spec)?;
    let spec: ExperimentSpec =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", a.spec.display())))?;
    let rows = lab::run_sweep(&spec, a.timing)?;
    let mut buf = Vec::new();
    lab::write_sweep_csv(&rows, &mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn fit(a: FitArgs) -> Result<()> {
    let model: FitModel = a.model.parse()?;
    let text = fs::read_to_string(&a.input)?;
    let report = lab::fit_scaling(&text, model, &a.response)?;
    emit_json(a.out.as_deref(), &serde_json::to_value(report)?)
}

fn plot(a: PlotArgs) -> Result<()> {
    let kind: PlotKind = a.kind.parse()?;
    let text = fs::read_to_string(&a.input)?;
    let log_default = kind == PlotKind::Scaling;
    let opts = PlotOptions {
        log_x: a.logx || log_default,
        log_y: a.logy || log_default,
    };
    let svg = lab::emit_plot(&text, kind, opts)?;
    emit(a.out.as_deref(), svg.as_bytes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Thresholds(a) => thresholds(a),
        Command::Gen(a) => gen(a),
        Command::Peel(a) => peel(a),
        Command::Depth(a) => depth(a),
        Command::Couple(a) => couple(a),
        Command::Binproc(a) => binproc(a),
        Command::Sweep(a) => sweep(a),
        Command::Fit(a) => fit(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
