//! `parkroute`: batch front-end for generating instances, solving them,
//! running the benchmark models, analysing complete grids and exporting
//! the MIP as LP text.
//!
//! Exit codes: 0 optimal (or success), 1 usage or I/O error, 2 feasible
//! without proof, 3 infeasible, 4 budget exhausted without a solution.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use parkroute::benchmarks::{self, BenchmarkResult};
use parkroute::gridlab;
use parkroute::heuristic::{heuristic_solve, HeuristicOptions};
use parkroute::instance::{gen_geo_instance, gen_grid_instance, GeoParams};
use parkroute::model::{build_model, export_lp, model_dimensions};
use parkroute::servicesets::{enumerate_catalog, reduce_catalog, SetRules};
use parkroute::{
    check_feasible, solve_exact, Error, ExactOptions, GridParams, Instance, ModelOptions,
    Parallelism, SearchBudget, ServiceSetCatalog, Solution, SolveStatus,
};
use rayon::prelude::*;
use serde_json::json;

const EXIT_ERROR: u8 = 1;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "parkroute", version, about = "Delivery routing with parking search time")]
struct Cli {
    /// Seed for generators; recorded in every output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Wall-clock budget per exact solve, in seconds.
    #[arg(long, global = true, env = "PARKROUTE_BUDGET_SECONDS")]
    budget_seconds: Option<f64>,

    /// Node budget per exact solve.
    #[arg(long, global = true)]
    max_nodes: Option<u64>,

    /// Instances processed concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Use parallel loops inside each solve. Objective values are unchanged;
    /// the chosen solution may differ among ties.
    #[arg(long, global = true)]
    parallel: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Solve instances with the exact solver or the heuristic.
    Solve(SolveArgs),
    /// Run benchmark models and compare them with the optimum.
    Benchmark(BenchmarkArgs),
    /// Parking-time thresholds on complete grids.
    Grid(GridArgs),
    /// Write the MIP of an instance in LP format.
    ExportLp(ExportArgs),
    /// Evaluate and check solution files against an instance.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Random points in the unit square.
    #[arg(long, conflicts_with = "grid")]
    geo: bool,
    /// Complete square grid.
    #[arg(long)]
    grid: bool,
    #[arg(short = 'n', long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    sqrt_n: usize,
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    park_time: f64,
    #[arg(long, default_value_t = 0.0)]
    load: f64,
    /// Driving minutes per unit distance (geo).
    #[arg(long, default_value_t = 10.0)]
    drive_factor: f64,
    /// Walking minutes per unit distance (geo).
    #[arg(long, default_value_t = 30.0)]
    walk_factor: f64,
    #[arg(long, default_value_t = 1.0)]
    block_len: f64,
    #[arg(long, default_value_t = 1.0)]
    drive_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    walk_rate: f64,
    /// Put the grid depot at (0,0) instead of beside the left edge.
    #[arg(long)]
    depot_origin: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ModelFlags {
    /// Structural rules: claim4, corollary1, claim5, corollary3 or all.
    #[arg(long, value_delimiter = ',')]
    vi: Vec<String>,
    /// Drop (spot, set) pairs where the spot is a member of a larger set.
    #[arg(long)]
    reduced: bool,
}

impl ModelFlags {
    fn options(&self) -> anyhow::Result<ModelOptions> {
        let mut o = ModelOptions {
            var_reduction: self.reduced,
            ..Default::default()
        };
        for v in &self.vi {
            match v.as_str() {
                "claim4" => o.vi_claim4 = true,
                "corollary1" => o.vi_corollary1 = true,
                "claim5" => o.vi_claim5 = true,
                "corollary3" => o.vi_corollary3 = true,
                "all" => {
                    o = ModelOptions {
                        var_reduction: self.reduced,
                        ..ModelOptions::all()
                    }
                }
                other => bail!("unknown rule {other:?}"),
            }
        }
        Ok(o)
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "exact")]
    method: Method,
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write `<stem>.solution.json` per instance here instead of stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(required = true)]
    instances: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Comma-separated: npt, mtsp, ms:<alpha>.
    #[arg(long, value_delimiter = ',', default_value = "npt,mtsp,ms:0.6,ms:0.8")]
    models: Vec<String>,
    /// Skip the optimum column.
    #[arg(long)]
    no_optimum: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(required = true)]
    instances: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[arg(long, default_value_t = 4)]
    sqrt_n: usize,
    /// Parking times as `p=start:step:end`.
    #[arg(long, conflicts_with = "p")]
    sweep: Option<String>,
    /// Single parking time.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    block_len: f64,
    #[arg(long, default_value_t = 1.0)]
    drive_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    walk_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    load: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Print variable and row counts as JSON instead of the model.
    #[arg(long)]
    dims: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
    instance: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    instance: PathBuf,
    #[arg(required = true)]
    solutions: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Infeasible(_) | Error::CapacityInfeasible { .. } | Error::InfeasibleSolution(_)) => EXIT_INFEASIBLE,
        _ => EXIT_ERROR,
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Gen(a) => gen(cli, a),
        Command::Solve(a) => solve(cli, a),
        Command::Benchmark(a) => benchmark(cli, a),
        Command::Grid(a) => grid(cli, a),
        Command::ExportLp(a) => export(a),
        Command::Report(a) => report(a),
    }
}

fn budget(cli: &Cli) -> SearchBudget {
    let mut b = SearchBudget::default();
    if let Some(s) = cli.budget_seconds {
        b = b.with_seconds(s);
    }
    if let Some(n) = cli.max_nodes {
        b = b.with_nodes(n);
    }
    b
}

fn parallelism(cli: &Cli) -> Parallelism {
    if cli.parallel {
        Parallelism::Parallel
    } else {
        Parallelism::Sequential
    }
}

/// Runs `f` on every item with at most `jobs` at a time; output order
/// follows input order.
fn for_each_job<T: Sync, R: Send>(jobs: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> anyhow::Result<Vec<R>> {
    if jobs <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => emit(text),
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn load(path: &Path) -> anyhow::Result<Instance> {
    Ok(Instance::load(path)?)
}

fn instance_label(inst: &Instance, path: &Path) -> String {
    inst.name
        .clone()
        .unwrap_or_else(|| path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()))
}

fn catalog(inst: &Instance, reduced: bool) -> anyhow::Result<ServiceSetCatalog> {
    let cat = enumerate_catalog(inst)?;
    Ok(if reduced { reduce_catalog(&cat) } else { cat })
}

fn gen(cli: &Cli, a: &GenArgs) -> anyhow::Result<u8> {
    let inst = if a.grid {
        let gp = GridParams {
            sqrt_n: a.sqrt_n,
            block_len: a.block_len,
            drive_rate: a.drive_rate,
            walk_rate: a.walk_rate,
            park_time: a.park_time,
            load: a.load,
            capacity: a.capacity.unwrap_or(2),
        };
        let mut g = gen_grid_instance(&gp, a.depot_origin)?.instance;
        g.name = Some(format!("grid-s{}-q{}-p{}", gp.sqrt_n, gp.capacity, gp.park_time));
        g
    } else {
        gen_geo_instance(&GeoParams {
            n: a.n,
            seed: cli.seed,
            drive_factor: a.drive_factor,
            walk_factor: a.walk_factor,
            park_time: a.park_time,
            capacity: a.capacity.or(Some(3)),
            load: a.load,
        })?
    };
    let mut text = inst.to_json_string();
    text.push('\n');
    write_out(a.output.as_deref(), &text)?;
    Ok(0)
}

struct Solved {
    label: String,
    doc: serde_json::Value,
    solution: Option<Solution>,
    status: &'static str,
    bound: Option<f64>,
    code: u8,
}

fn solve_one(cli: &Cli, a: &SolveArgs, path: &Path) -> anyhow::Result<Solved> {
    let inst = load(path)?;
    let label = instance_label(&inst, path);
    let options = a.model.options()?;
    let started = Instant::now();
    let solved = match a.method {
        Method::Exact => {
            let cat = catalog(&inst, options.var_reduction)?;
            let r = solve_exact(
                &inst,
                &cat,
                &ExactOptions {
                    budget: budget(cli),
                    parallelism: parallelism(cli),
                    structure: options,
                },
            )?;
            let status = match r.status {
                SolveStatus::Optimal => "optimal",
                SolveStatus::Feasible => "feasible",
                SolveStatus::Timeout => "timeout",
            };
            Solved {
                doc: json!({
                    "instance": label,
                    "seed": cli.seed,
                    "method": "exact",
                    "status": status,
                    "bound": r.bound,
                    "nodes": r.nodes,
                    "solution": r.solution.as_ref().map(Solution::to_json),
                }),
                label,
                solution: r.solution,
                status,
                bound: Some(r.bound),
                code: r.status.exit_code() as u8,
            }
        }
        Method::Heuristic => {
            let opts = HeuristicOptions {
                parallelism: parallelism(cli),
                rules: SetRules {
                    reduced: options.var_reduction,
                },
                ..Default::default()
            };
            let r = heuristic_solve(&inst, &opts)?;
            Solved {
                doc: json!({
                    "instance": label,
                    "seed": cli.seed,
                    "method": "heuristic",
                    "status": "heuristic",
                    "diagnostics": r.diagnostics,
                    "solution": r.solution.to_json(),
                }),
                label,
                solution: Some(r.solution),
                status: "heuristic",
                bound: None,
                code: 0,
            }
        }
    };
    eprintln!("{}: {} in {:.3}s", solved.label, solved.status, started.elapsed().as_secs_f64());
    Ok(solved)
}

fn solve(cli: &Cli, a: &SolveArgs) -> anyhow::Result<u8> {
    let results = for_each_job(cli.jobs, &a.instances, |p| solve_one(cli, a, p))?;
    let mut solved = Vec::with_capacity(results.len());
    let mut code = 0;
    for (path, r) in a.instances.iter().zip(results) {
        match r {
            Ok(s) => {
                code = code.max(s.code);
                solved.push((path, s));
            }
            Err(e) => {
                eprintln!("{}: {e:#}", path.display());
                code = code.max(exit_code_for(&e));
            }
        }
    }
    let rows: Vec<BreakdownRow> = solved
        .iter()
        .filter_map(|(_, s)| {
            s.solution.as_ref().map(|sol| BreakdownRow {
                label: s.label.clone(),
                status: s.status.to_string(),
                solution: sol.clone(),
            })
        })
        .collect();
    eprint!("{}", breakdown_table(&rows));
    match a.format {
        Format::Json => {
            if let Some(dir) = &a.out_dir {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                for (path, s) in &solved {
                    let stem = path.file_stem().map_or_else(|| s.label.clone(), |x| x.to_string_lossy().into_owned());
                    let out = dir.join(format!("{stem}.solution.json"));
                    write_out(Some(&out), &format!("{}\n", serde_json::to_string_pretty(&s.doc)?))?;
                }
            } else {
                let doc = if solved.len() == 1 {
                    solved[0].1.doc.clone()
                } else {
                    serde_json::Value::Array(solved.iter().map(|(_, s)| s.doc.clone()).collect())
                };
                emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
            }
        }
        Format::Csv => {
            let mut out = String::from("instance,method,status,total,park_min,drive_min,walk_min,load_min,stops,sets,bound,seed\n");
            for (_, s) in &solved {
                let method = if a.method == Method::Exact { "exact" } else { "heuristic" };
                match &s.solution {
                    Some(sol) => {
                        let b = &sol.breakdown;
                        writeln!(
                            out,
                            "{},{method},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{}",
                            s.label,
                            s.status,
                            sol.total,
                            b.park_min,
                            b.drive_min,
                            b.walk_min,
                            b.load_min,
                            sol.stops.len(),
                            sol.set_count(),
                            s.bound.map_or_else(String::new, |x| format!("{x:.6}")),
                            cli.seed
                        )?;
                    }
                    None => writeln!(out, "{},{method},{},,,,,,,,{},{}", s.label, s.status, s.bound.map_or_else(String::new, |x| format!("{x:.6}")), cli.seed)?,
                }
            }
            match &a.out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    write_out(Some(&dir.join("solutions.csv")), &out)?;
                }
                None => emit(&out)?,
            }
        }
    }
    Ok(code)
}

struct BreakdownRow {
    label: String,
    status: String,
    solution: Solution,
}

/// Fixed-width table of the time breakdown, one row per solution.
fn breakdown_table(rows: &[BreakdownRow]) -> String {
    if rows.is_empty() {
        return String::new();
    }
    let w = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(8);
    let mut out = format!(
        "{:<w$}  {:<9} {:>12} {:>12} {:>12} {:>12} {:>12} {:>5}\n",
        "instance", "status", "park", "drive", "walk", "load", "total", "stops"
    );
    for r in rows {
        let b = &r.solution.breakdown;
        let _ = writeln!(
            out,
            "{:<w$}  {:<9} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>5}",
            r.label,
            r.status,
            b.park_min,
            b.drive_min,
            b.walk_min,
            b.load_min,
            r.solution.total,
            r.solution.stops.len()
        );
    }
    out
}

enum BenchModel {
    NoParking,
    ModifiedTsp,
    RelaxedMs(f64),
}

fn parse_model(s: &str) -> anyhow::Result<BenchModel> {
    match s.trim() {
        "npt" => Ok(BenchModel::NoParking),
        "mtsp" => Ok(BenchModel::ModifiedTsp),
        m => {
            let alpha = m
                .strip_prefix("ms:")
                .ok_or_else(|| anyhow!("unknown model {m:?}; expected npt, mtsp or ms:<alpha>"))?;
            let alpha: f64 = alpha.parse().with_context(|| format!("bad alpha in {m:?}"))?;
            if !(0.0..=1.0).contains(&alpha) {
                bail!("alpha {alpha} is outside [0, 1]");
            }
            Ok(BenchModel::RelaxedMs(alpha))
        }
    }
}

fn benchmark_rows(cli: &Cli, a: &BenchmarkArgs, models: &[BenchModel], path: &Path) -> anyhow::Result<String> {
    let inst = load(path)?;
    let label = instance_label(&inst, path);
    let cat = enumerate_catalog(&inst)?;
    let b = budget(cli);
    let optimum = if a.no_optimum {
        None
    } else {
        let r = solve_exact(&inst, &cat, &ExactOptions::with_budget(b))?;
        (r.status == SolveStatus::Optimal).then(|| r.value()).flatten()
    };
    let mut out = String::new();
    for m in models {
        let r: BenchmarkResult = match *m {
            BenchModel::NoParking => benchmarks::no_parking_benchmark(&inst, &cat, &b)?,
            BenchModel::ModifiedTsp => benchmarks::modified_tsp(&inst, &cat, &b)?,
            BenchModel::RelaxedMs(alpha) => benchmarks::relaxed_ms(&inst, &cat, alpha, &b)?,
        };
        let br = &r.solution.breakdown;
        let (opt, gap) = match optimum {
            Some(v) => (format!("{v:.6}"), format!("{:.6}", 100.0 * (r.completion - v) / v.max(f64::MIN_POSITIVE))),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{label},{},{},{},{:.6},{:.6},{},{:.6},{:.6},{:.6},{:.6},{opt},{gap},{}",
            r.name,
            serde_json::to_value(r.engine)?.as_str().unwrap_or_default(),
            r.proven,
            r.model_objective,
            r.completion,
            r.stops,
            br.park_min,
            br.drive_min,
            br.walk_min,
            br.load_min,
            cli.seed
        )?;
    }
    Ok(out)
}

fn benchmark(cli: &Cli, a: &BenchmarkArgs) -> anyhow::Result<u8> {
    let models = a.models.iter().map(|s| parse_model(s)).collect::<anyhow::Result<Vec<_>>>()?;
    let results = for_each_job(cli.jobs, &a.instances, |p| benchmark_rows(cli, a, &models, p))?;
    let mut out = String::from(
        "instance,model,engine,proven,objective,completion,stops,park_min,drive_min,walk_min,load_min,optimum,gap_pct,seed\n",
    );
    let mut code = 0;
    for (path, r) in a.instances.iter().zip(results) {
        match r {
            Ok(rows) => out.push_str(&rows),
            Err(e) => {
                eprintln!("{}: {e:#}", path.display());
                code = code.max(exit_code_for(&e));
            }
        }
    }
    write_out(a.output.as_deref(), &out)?;
    Ok(code)
}

/// Parses `p=start:step:end` into an inclusive list.
fn parse_sweep(spec: &str) -> anyhow::Result<Vec<f64>> {
    let body = spec.strip_prefix("p=").unwrap_or(spec);
    let parts: Vec<f64> = body
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad sweep {spec:?}; expected p=start:step:end"))?;
    let [start, step, end] = parts[..] else {
        bail!("bad sweep {spec:?}; expected p=start:step:end");
    };
    if !(step > 0.0) || end < start {
        bail!("sweep needs a positive step and end >= start");
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn grid(cli: &Cli, a: &GridArgs) -> anyhow::Result<u8> {
    let gp = GridParams {
        sqrt_n: a.sqrt_n,
        block_len: a.block_len,
        drive_rate: a.drive_rate,
        walk_rate: a.walk_rate,
        park_time: 0.0,
        load: a.load,
        capacity: a.q,
    };
    let ps = match (&a.sweep, a.p) {
        (Some(s), _) => parse_sweep(s)?,
        (None, Some(p)) => vec![p],
        (None, None) => vec![gridlab::threshold_p(a.q, &gp)?],
    };
    let reports = gridlab::sweep(&gp, &ps, parallelism(cli), &budget(cli))?;
    let csv = gridlab::sweep_csv(&reports);
    let mut out = String::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 {
            writeln!(out, "{line},threshold,seed")?;
        } else {
            writeln!(out, "{line},{:.6},{}", reports[i - 1].threshold, cli.seed)?;
        }
    }
    write_out(a.output.as_deref(), &out)?;
    let worst = reports
        .iter()
        .filter_map(|r| r.oracle_status)
        .map(|s| s.exit_code() as u8)
        .max()
        .unwrap_or(0);
    Ok(worst)
}

fn export(a: &ExportArgs) -> anyhow::Result<u8> {
    let inst = load(&a.instance)?;
    let options = a.model.options()?;
    let cat = catalog(&inst, false)?;
    let text = if a.dims {
        let d = model_dimensions(&inst, &cat, options)?;
        let doc = json!({
            "x": d.x.to_string(),
            "y": d.y.to_string(),
            "v": d.v.to_string(),
            "variables": d.variables().to_string(),
            "rows": d.rows.to_string(),
        });
        format!("{}\n", serde_json::to_string_pretty(&doc)?)
    } else {
        export_lp(&build_model(&inst, &cat, options)?)
    };
    write_out(a.output.as_deref(), &text)?;
    Ok(0)
}

fn read_solution(path: &Path) -> anyhow::Result<Solution> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(inner) = v.get_mut("solution") {
        v = inner.take();
    }
    Ok(Solution::from_json(v)?)
}

fn report(a: &ReportArgs) -> anyhow::Result<u8> {
    let inst = load(&a.instance)?;
    let cat = catalog(&inst, false)?;
    let mut rows = Vec::new();
    let mut code = 0;
    for path in &a.solutions {
        let sol = read_solution(path)?;
        let label = path.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        let violations = check_feasible(&inst, &cat, &sol);
        if !violations.is_empty() {
            for v in &violations {
                eprintln!("{label}: {v}");
            }
            code = EXIT_INFEASIBLE;
            continue;
        }
        let evaluated = sol.recost(&inst)?;
        rows.push(BreakdownRow {
            label,
            status: "feasible".into(),
            solution: evaluated,
        });
    }
    match a.format {
        Format::Csv => {
            let mut out = String::from("solution,total,park_min,drive_min,walk_min,load_min,stops,sets\n");
            for r in &rows {
                let b = &r.solution.breakdown;
                writeln!(
                    out,
                    "{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
                    r.label,
                    r.solution.total,
                    b.park_min,
                    b.drive_min,
                    b.walk_min,
                    b.load_min,
                    r.solution.stops.len(),
                    r.solution.set_count()
                )?;
            }
            emit(&out)?;
        }
        Format::Json => {
            let docs: Vec<_> = rows
                .iter()
                .map(|r| json!({ "solution": r.label, "evaluated": r.solution.to_json() }))
                .collect();
            emit(&format!("{}\n", serde_json::to_string_pretty(&docs)?))?;
        }
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_is_inclusive() {
        let ps = parse_sweep("p=0:0.25:2").unwrap();
        assert_eq!(ps.len(), 9);
        assert!((ps[8] - 2.0).abs() < 1e-12);
        assert!(parse_sweep("p=1:0:2").is_err());
        assert!(parse_sweep("p=1:2").is_err());
    }

    #[test]
    fn model_names() {
        assert!(matches!(parse_model("ms:0.6").unwrap(), BenchModel::RelaxedMs(a) if a == 0.6));
        assert!(parse_model("ms:1.5").is_err());
        assert!(parse_model("tsp").is_err());
    }
}
