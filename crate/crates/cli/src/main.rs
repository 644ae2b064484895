//! `gossip`: scripted, reproducible runs of the gossip-diffusion tools.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when a computation
//! fails. Files are written through a temporary file and renamed into place,
//! with a `<out>.meta.json` sidecar echoing the resolved configuration.

mod config;

use std::fmt;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, CommandFactory, Parser, Subcommand};
use gossip_core::birthdeath::{rates_meanfield, simulate_bd};
use gossip_core::bounds::{expansive_thresholds, general_thresholds};
use gossip_core::dynamics::{init_config, simulate};
use gossip_core::experiments::{
    default_beta_grid, default_z0_grid, run_sweep_with_threads, GraphFamily, Substrate, SweepAxis, SweepSpec,
    DEFAULT_HORIZON, DEFAULT_REPLICAS,
};
use gossip_core::graph::{
    cheeger_spectral_lower_bound, read_edge_list, write_edge_list, DegreeDistribution, FamilyParams, GammaSource,
    Graph, GraphMetrics,
};
use gossip_core::meanfield::{classify_regime, integrate_ode_checked, DEFAULT_ODE_STEP};
use gossip_core::{Persuasion, SampleOptions, Stride};
use serde_json::{json, Value};

use config::Resolver;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

macro_rules! runtime {
    ($e:expr) => {
        $e.map_err(|e| Failure::Runtime(anyhow::Error::from(e)))
    };
}

/// Prints a report line; a closed pipe (e.g. `| head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "gossip", version, about = "Gossip diffusion with a global persuasion function")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list
    GenGraph(GenGraphArgs),
    /// Degree statistics, spectral radius and bottleneck ratio of a graph
    Metrics(MetricsArgs),
    /// Simulate one trajectory of the adoption process
    Simulate(SimulateArgs),
    /// Critical rate, equilibria and regime of the mean-field dynamics
    Meanfield(MeanfieldArgs),
    /// Analytical thresholds for a general graph or an expansive family
    #[command(alias = "general-thresholds")]
    Thresholds(ThresholdsArgs),
    /// Success-probability sweep over beta or z0
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FamilyName {
    Complete,
    Er,
    Config,
    Ba,
    Torus,
    Meanfield,
}

impl FromStr for FamilyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "complete" => FamilyName::Complete,
            "er" => FamilyName::Er,
            "config" => FamilyName::Config,
            "ba" => FamilyName::Ba,
            "torus" => FamilyName::Torus,
            "meanfield" => FamilyName::Meanfield,
            _ => return Err(format!("unknown family {s:?}; expected complete, er, config, ba, torus or meanfield")),
        })
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyName::Complete => "complete",
            FamilyName::Er => "er",
            FamilyName::Config => "config",
            FamilyName::Ba => "ba",
            FamilyName::Torus => "torus",
            FamilyName::Meanfield => "meanfield",
        })
    }
}

#[derive(Clone, Copy, Debug)]
struct StrideArg(Stride);

impl FromStr for StrideArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(StrideArg(Stride::Auto)),
            "never" => Ok(StrideArg(Stride::Never)),
            _ => match s.parse::<u64>() {
                Ok(k) if k > 0 => Ok(StrideArg(Stride::Every(k))),
                _ => Err(format!("stride must be auto, never or a positive integer, got {s:?}")),
            },
        }
    }
}

impl fmt::Display for StrideArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Stride::Auto => f.write_str("auto"),
            Stride::Never => f.write_str("never"),
            Stride::Every(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Grid)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Args, Clone, Default)]
struct GraphArgs {
    /// Graph family: complete, er, config, ba, torus; simulate and sweep also take meanfield
    #[arg(long)]
    family: Option<FamilyName>,
    /// Read the graph from an edge-list file instead of generating it
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Number of nodes
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability (er)
    #[arg(long)]
    p: Option<f64>,
    /// Edges added per new node (ba)
    #[arg(long)]
    m: Option<usize>,
    /// Degree distribution as d:q,d:q,... (config)
    #[arg(long, value_name = "DIST")]
    degrees: Option<DegreeDistribution>,
    /// Torus dimension
    #[arg(long)]
    k: Option<usize>,
    /// Torus side length
    #[arg(long)]
    side: Option<usize>,
    /// Add a self-loop at every node (complete) [default: false]
    #[arg(long, value_name = "BOOL")]
    self_loops: Option<bool>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct GenGraphArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Seed for random families [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output edge-list file
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// key = value file; explicit flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct MetricsArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Seed for random families [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// key = value file; explicit flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Persuasion function: linear, constant:c, poly:a0,a1,..., table:z:v,... [default: linear]
    #[arg(long)]
    phi: Option<Persuasion>,
    /// Rate parameter
    #[arg(long)]
    beta: Option<f64>,
    /// Initial adopter fraction
    #[arg(long)]
    z0: Option<f64>,
    /// Time horizon [default: 100]
    #[arg(long = "T", value_name = "T")]
    horizon: Option<f64>,
    /// Seed for the graph, initial state and dynamics [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Record every k-th event, or auto / never [default: auto]
    #[arg(long)]
    stride: Option<StrideArg>,
    /// Number of uniform grid intervals recorded on [0, T] [default: 1000]
    #[arg(long)]
    grid_intervals: Option<usize>,
    /// Output trajectory CSV
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// key = value file; explicit flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct MeanfieldArgs {
    /// Persuasion function: linear, constant:c, poly:a0,a1,..., table:z:v,... [default: linear]
    #[arg(long)]
    phi: Option<Persuasion>,
    /// Rate parameter
    #[arg(long)]
    beta: Option<f64>,
    /// Initial value for the deterministic path; prints its value at T
    #[arg(long)]
    z0: Option<f64>,
    /// Horizon of the deterministic path [default: 100]
    #[arg(long = "T", value_name = "T")]
    horizon: Option<f64>,
    /// Integration step [default: 0.001]
    #[arg(long)]
    step: Option<f64>,
    /// Write the deterministic path as CSV (requires --z0)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// key = value file; explicit flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ThresholdsArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Seed for random families [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Persuasion function [default: linear]
    #[arg(long)]
    phi: Option<Persuasion>,
    /// Rate parameter
    #[arg(long)]
    beta: Option<f64>,
    /// Expansive family: lower bound on dbar/Delta
    #[arg(long)]
    a: Option<f64>,
    /// Expansive family: lower bound on dbar/rho
    #[arg(long)]
    e1: Option<f64>,
    /// Expansive family: upper bound on dbar/gamma
    #[arg(long)]
    e2: Option<f64>,
    /// key = value file; explicit flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Fresh graph for every replica [default: true]
    #[arg(long, value_name = "BOOL")]
    regenerate: Option<bool>,
    /// Persuasion function [default: linear]
    #[arg(long)]
    phi: Option<Persuasion>,
    /// Swept parameter: beta or z0
    #[arg(long)]
    axis: Option<SweepAxis>,
    /// Comma-separated grid values [default: built-in grid for the axis]
    #[arg(long)]
    grid: Option<Grid>,
    /// Rate parameter when sweeping z0
    #[arg(long)]
    beta: Option<f64>,
    /// Initial fraction when sweeping beta
    #[arg(long)]
    z0: Option<f64>,
    /// Replicas per grid point [default: 500]
    #[arg(long)]
    replicas: Option<usize>,
    /// Time horizon [default: 100]
    #[arg(long = "T", value_name = "T")]
    horizon: Option<f64>,
    /// Master seed (required)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// key = value file; explicit flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

fn config_keys(subcommand: &str) -> Vec<String> {
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(subcommand).expect("known subcommand");
    sub.get_arguments()
        .filter_map(|a| a.get_long())
        .filter(|l| *l != "config" && *l != "help")
        .map(str::to_string)
        .collect()
}

fn resolver(subcommand: &str, config: Option<&Path>) -> Result<Resolver, Failure> {
    Resolver::new(config, &config_keys(subcommand))
}

enum Source {
    MeanField(usize),
    Family(GraphFamily),
    File(Arc<Graph>),
}

/// `None` when neither `--family` nor `--graph` is set.
fn try_source(r: &mut Resolver, a: &GraphArgs, allow_meanfield: bool) -> Result<Option<Source>, Failure> {
    let graph = r.opt(a.graph.as_ref().map(|p| p.display().to_string()), "graph")?;
    let family = r.opt(a.family, "family")?;
    if let Some(path) = graph {
        if family.is_some() {
            return Err(Failure::usage("--graph and --family are mutually exclusive"));
        }
        let file = std::fs::File::open(&path).map_err(|e| Failure::usage(format!("cannot open {path}: {e}")))?;
        let g = runtime!(read_edge_list(BufReader::new(file)).with_context(|| format!("reading {path}")))?;
        return Ok(Some(Source::File(Arc::new(g))));
    }
    let Some(family) = family else {
        return Ok(None);
    };
    Ok(Some(match family {
        FamilyName::Meanfield if !allow_meanfield => {
            return Err(Failure::usage("family meanfield is not a graph; use complete instead"))
        }
        FamilyName::Meanfield => Source::MeanField(r.req(a.n, "n")?),
        FamilyName::Complete => Source::Family(GraphFamily::Complete {
            n: r.req(a.n, "n")?,
            self_loops: r.or(a.self_loops, "self-loops", false)?,
        }),
        FamilyName::Er => Source::Family(GraphFamily::Er {
            n: r.req(a.n, "n")?,
            p: r.req(a.p, "p")?,
        }),
        FamilyName::Config => Source::Family(GraphFamily::ConfigModel {
            n: r.req(a.n, "n")?,
            degrees: r.req(a.degrees.clone(), "degrees")?,
        }),
        FamilyName::Ba => Source::Family(GraphFamily::Ba {
            n: r.req(a.n, "n")?,
            m: r.req(a.m, "m")?,
        }),
        FamilyName::Torus => Source::Family(GraphFamily::Torus {
            k: r.req(a.k, "k")?,
            n: r.req(a.side, "side")?,
        }),
    }))
}

fn resolve_source(r: &mut Resolver, a: &GraphArgs, allow_meanfield: bool) -> Result<Source, Failure> {
    try_source(r, a, allow_meanfield)?.ok_or_else(|| Failure::usage("one of --family or --graph is required"))
}

fn build_graph(source: Source, seed: u64) -> Result<Arc<Graph>, Failure> {
    match source {
        Source::File(g) => Ok(g),
        Source::Family(f) => Ok(Arc::new(runtime!(f.generate(seed))?)),
        Source::MeanField(_) => unreachable!("meanfield rejected before graph construction"),
    }
}

fn require_out(r: &mut Resolver, out: &Option<PathBuf>) -> Result<PathBuf, Failure> {
    r.req(out.as_ref().map(|p| p.display().to_string()), "out").map(PathBuf::from)
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating file in {}", dir.display()))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_sidecar(out: &Path, command: &str, config: Value, result: Value) -> anyhow::Result<()> {
    let doc = json!({
        "command": command,
        "config": config,
        "result": result,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_atomic(&sidecar_path(out), |w| {
        serde_json::to_writer_pretty(&mut *w, &doc)?;
        writeln!(w)
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn gen_graph(a: GenGraphArgs) -> Result<(), Failure> {
    let mut r = resolver("gen-graph", a.config.as_deref())?;
    let source = resolve_source(&mut r, &a.graph, false)?;
    let seed = r.or(a.seed, "seed", 0)?;
    let out = require_out(&mut r, &a.out)?;
    let g = build_graph(source, seed)?;
    write_atomic(&out, |w| write_edge_list(&g, w))?;
    let summary = json!({
        "n": g.node_count(),
        "arcs": g.arc_count(),
        "self_loops": g.has_self_loops(),
        "avg_degree": g.avg_degree(),
        "max_degree": g.max_degree(),
    });
    write_sidecar(&out, "gen-graph", r.into_json(), summary)?;
    Ok(())
}

fn metrics(a: MetricsArgs) -> Result<(), Failure> {
    let mut r = resolver("metrics", a.config.as_deref())?;
    let source = resolve_source(&mut r, &a.graph, false)?;
    let seed = r.or(a.seed, "seed", 0)?;
    let g = build_graph(source, seed)?;
    let m = GraphMetrics::compute(&g);
    say!("n={}", g.node_count());
    say!("arcs={}", g.arc_count());
    say!("avg_degree={}", m.avg_degree);
    say!("max_degree={}", m.max_degree);
    say!("max_in_degree={}", m.max_in_degree);
    say!("spectral_radius={}", m.spectral.value);
    say!("spectral_converged={}", m.spectral.converged);
    say!("cheeger={}", fmt_opt(m.cheeger.as_ref().map(|c| c.value())));
    if g.is_symmetric() {
        say!("cheeger_lower_bound={}", fmt_opt(cheeger_spectral_lower_bound(&g).ok()));
    }
    match m.check_inequalities() {
        Ok(()) => say!("inequalities=ok"),
        Err(v) => say!("inequalities=violated:{}:{}>{}", v.relation.replace(' ', ""), v.lhs, v.rhs),
    }
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<(), Failure> {
    let mut r = resolver("simulate", a.config.as_deref())?;
    let source = resolve_source(&mut r, &a.graph, true)?;
    let phi = r.or(a.phi, "phi", Persuasion::linear())?;
    let beta = r.req(a.beta, "beta")?;
    let z0 = r.req(a.z0, "z0")?;
    let horizon = r.or(a.horizon, "T", DEFAULT_HORIZON)?;
    let seed = r.or(a.seed, "seed", 0)?;
    let stride = r.or(a.stride, "stride", StrideArg(Stride::Auto))?;
    let grid_intervals = r.or(a.grid_intervals, "grid-intervals", SampleOptions::default().grid_intervals)?;
    let out = require_out(&mut r, &a.out)?;
    let opts = SampleOptions {
        stride: stride.0,
        grid_intervals,
    };
    // same seed layout as a single sweep replica: graph, initial state, dynamics
    let graph_seed = gossip_core::rng::derive_seed(seed, &[u64::MAX]);
    let traj = match source {
        Source::MeanField(n) => {
            let chain = runtime!(rates_meanfield(n, beta, &phi))?;
            let k = ((z0 * n as f64 + 1e-9).floor() as usize).min(n);
            runtime!(simulate_bd(&chain, k as f64 / n as f64, horizon, seed, opts))?
        }
        other => {
            let g = build_graph(other, graph_seed)?;
            let init_seed = gossip_core::rng::derive_seed(seed, &[u64::MAX - 1]);
            let init = runtime!(init_config(g.node_count(), z0, init_seed))?;
            runtime!(simulate(&g, &phi, beta, init, horizon, seed, opts))?
        }
    };
    write_atomic(&out, |w| traj.write_csv(w))?;
    write_sidecar(&out, "simulate", r.into_json(), traj.metadata())?;
    Ok(())
}

fn meanfield_cmd(a: MeanfieldArgs) -> Result<(), Failure> {
    let mut r = resolver("meanfield", a.config.as_deref())?;
    let phi = r.or(a.phi, "phi", Persuasion::linear())?;
    let beta = r.req(a.beta, "beta")?;
    let z0 = r.opt(a.z0, "z0")?;
    let out = r.opt(a.out.as_ref().map(|p| p.display().to_string()), "out")?;
    let report = runtime!(classify_regime(beta, &phi))?;
    say!("beta_star={}", report.beta_star);
    say!("phi0_inv={}", report.phi0_inv);
    say!("z_u={}", fmt_opt(report.z_u));
    say!("z_s={}", fmt_opt(report.z_s));
    say!("regime={}", report.regime);
    say!("tangent={}", report.tangent);
    let Some(z0) = z0 else {
        if out.is_some() {
            return Err(Failure::usage("--out needs --z0"));
        }
        return Ok(());
    };
    let horizon = r.or(a.horizon, "T", DEFAULT_HORIZON)?;
    let step = r.or(a.step, "step", DEFAULT_ODE_STEP)?;
    let path = runtime!(integrate_ode_checked(beta, &phi, z0, horizon, step))?;
    say!("z_T={}", path.final_value());
    if let Some(out) = out {
        let out = PathBuf::from(out);
        write_atomic(&out, |w| {
            writeln!(w, "t,z")?;
            for (t, z) in path.times.iter().zip(&path.values) {
                writeln!(w, "{t},{z}")?;
            }
            Ok(())
        })?;
        let result = json!({
            "beta_star": report.beta_star,
            "z_u": report.z_u,
            "z_s": report.z_s,
            "regime": report.regime.number(),
            "tangent": report.tangent,
            "z_T": path.final_value(),
        });
        write_sidecar(&out, "meanfield", r.into_json(), result)?;
    }
    Ok(())
}

fn thresholds_cmd(a: ThresholdsArgs) -> Result<(), Failure> {
    let mut r = resolver("thresholds", a.config.as_deref())?;
    let beta = r.req(a.beta, "beta")?;
    let phi = r.or(a.phi, "phi", Persuasion::linear())?;
    let fam = (r.opt(a.a, "a")?, r.opt(a.e1, "e1")?, r.opt(a.e2, "e2")?);
    let family = match fam {
        (Some(a), Some(e1), Some(e2)) => Some(FamilyParams { a, e1, e2 }),
        (None, None, None) => None,
        _ => return Err(Failure::usage("--a, --e1 and --e2 go together")),
    };
    let source = try_source(&mut r, &a.graph, false)?;
    if source.is_none() && family.is_none() {
        return Err(Failure::usage("need a graph (--family or --graph) or expansive parameters (--a, --e1, --e2)"));
    }
    if let Some(f) = family {
        if phi.to_string() != "linear" {
            return Err(Failure::usage("expansive-family thresholds are closed-form for phi = linear only"));
        }
        let t = runtime!(expansive_thresholds(f.e1, f.e2, f.a, beta))?;
        say!("expansive_z_u_prime={}", fmt_opt(t.z_u_prime));
        say!("expansive_z_u_dprime={}", fmt_opt(t.z_u_dprime));
        say!("expansive_z_s={}", fmt_opt(t.z_s));
        say!("expansive_regime={}", t.regime);
    }
    if let Some(source) = source {
        let seed = r.or(a.seed, "seed", 0)?;
        let g = build_graph(source, seed)?;
        let mut m = GraphMetrics::compute(&g);
        if let Some(f) = family {
            m = m.with_family(f);
        }
        let t = runtime!(general_thresholds(&m, beta, &phi))?;
        say!("avg_degree={}", m.avg_degree);
        say!("max_in_degree={}", m.max_in_degree);
        say!("spectral_radius={}", m.spectral_radius());
        say!("gamma={}", fmt_opt(m.gamma().map(|(v, _)| v)));
        let source = match t.gamma_source {
            Some(GammaSource::Exact) => "computed",
            Some(GammaSource::Analytic) => "analytic",
            None => "unavailable",
        };
        say!("gamma_source={source}");
        say!("spectral_radius_source=computed");
        say!("z_u_prime={}", fmt_opt(t.z_u_prime));
        say!("z_u_dprime={}", fmt_opt(t.z_u_dprime));
        say!("z_s_general={}", fmt_opt(t.z_s_general));
        say!("z_u_gamma={}", fmt_opt(t.z_u_gamma));
        say!("z_s_gamma={}", fmt_opt(t.z_s_gamma));
        say!("item={}", t.item);
        say!(
            "item2_band_empty={}",
            t.item2_band_empty.map_or("unknown".to_string(), |b| b.to_string())
        );
    }
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> Result<(), Failure> {
    let mut r = resolver("sweep", a.config.as_deref())?;
    let seed = r.req(a.seed, "seed")?;
    let source = resolve_source(&mut r, &a.graph, true)?;
    let regenerate = r.or(a.regenerate, "regenerate", true)?;
    let phi = r.or(a.phi, "phi", Persuasion::linear())?;
    let axis = r.req(a.axis, "axis")?;
    let default_grid = match axis {
        SweepAxis::Beta => default_beta_grid(),
        SweepAxis::Z0 => default_z0_grid(),
    };
    let grid = r.or(a.grid.clone(), "grid", Grid(default_grid))?.0;
    let fixed = match axis {
        SweepAxis::Beta => r.req(a.z0, "z0")?,
        SweepAxis::Z0 => r.req(a.beta, "beta")?,
    };
    let replicas = r.or(a.replicas, "replicas", DEFAULT_REPLICAS)?;
    let horizon = r.or(a.horizon, "T", DEFAULT_HORIZON)?;
    let threads = r.opt(a.threads, "threads")?;
    if threads == Some(0) {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    let out = require_out(&mut r, &a.out)?;
    let substrate = match source {
        Source::MeanField(n) => Substrate::MeanField { n },
        Source::Family(family) => Substrate::Family {
            family,
            regenerate_per_replica: regenerate,
        },
        Source::File(g) => Substrate::Fixed(g),
    };
    let spec = SweepSpec {
        substrate,
        phi,
        axis,
        grid,
        fixed,
        replicas,
        horizon,
        master_seed: seed,
    };
    let threads = threads.unwrap_or_else(rayon_threads);
    let result = runtime!(run_sweep_with_threads(&spec, threads))?;
    write_atomic(&out, |w| result.write_csv(w))?;
    write_sidecar(&out, "sweep", r.into_json(), result.metadata().clone())?;
    Ok(())
}

fn rayon_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenGraph(a) => gen_graph(a),
        Command::Metrics(a) => metrics(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Meanfield(a) => meanfield_cmd(a),
        Command::Thresholds(a) => thresholds_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
