//! `hybzono`: reachability runs and set queries from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hybzono::geomio::{metrics_table, polygons_to_json, project_sample_with, DEFAULT_DIRECTIONS};
use hybzono::linalg::Vector;
use hybzono::mld::{build_heated_rooms, build_pwa_two_mode, heated_rooms_initial_set, pwa_initial_set, MldModel, MldSystem};
use hybzono::optq::{LeafPointOracle, SetSolver, SolverConfig};
use hybzono::reach::{reach, ReachOptions, ReachResult};
use hybzono::setrep::HybridZonotope;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "hybzono", version, about = "Hybrid zonotope reachability for MLD systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute reachable sets and write metrics, sets and polygons.
    Run(RunArgs),
    /// Enumerate the nonempty leaves of a set.
    Decompose {
        set: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Support value of a set in a direction.
    Support {
        set: PathBuf,
        /// Comma-separated direction.
        #[arg(long, allow_hyphen_values = true)]
        dir: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Whether a point lies in a set.
    Contains {
        set: PathBuf,
        /// Comma-separated point.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check a model file and report every problem found.
    Validate { model: PathBuf },
}

#[derive(Args)]
struct SolverArgs {
    /// Branch-and-bound node budget per query (overrides HYBZONO_NODE_BUDGET).
    #[arg(long)]
    node_budget: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        match self.node_budget {
            Some(b) => SolverConfig::with_node_budget(b),
            None => SolverConfig::default(),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// `pwa2eq`, `rooms:P` or a model file.
    model: String,
    #[arg(long, default_value_t = 15)]
    steps: usize,
    /// Both reductions (implies tree tracking).
    #[arg(long)]
    reduce: bool,
    #[arg(long)]
    reduce_binaries: bool,
    #[arg(long)]
    reduce_ineqs: bool,
    /// Track the integer-feasible set at every step.
    #[arg(long)]
    track_tree: bool,
    /// Project the final set onto axes `i,j` (repeatable).
    #[arg(long = "project", value_name = "I,J")]
    projections: Vec<String>,
    /// Directions per projected polygon.
    #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
    dirs: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the sampled trajectory check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Simulated trajectories checked against the sets (needs the tree).
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// Worker cap; the solver currently runs on one thread.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn load_model(source: &str) -> Result<MldModel> {
    if source == "pwa2eq" {
        let (system, domains) = build_pwa_two_mode()?;
        return Ok(MldModel { system, domains, initial: Some(pwa_initial_set()) });
    }
    if let Some(p) = source.strip_prefix("rooms:") {
        let p: usize = p.parse().with_context(|| format!("bad room count in {source:?}"))?;
        let (system, domains) = build_heated_rooms(p)?;
        return Ok(MldModel { system, domains, initial: Some(heated_rooms_initial_set(p)?) });
    }
    let text = fs::read_to_string(source).with_context(|| format!("reading model file {source}"))?;
    Ok(MldModel::from_json(&text)?)
}

fn load_set(path: &Path) -> Result<HybridZonotope> {
    let text = fs::read_to_string(path).with_context(|| format!("reading set file {}", path.display()))?;
    Ok(HybridZonotope::from_json(&text)?)
}

fn parse_vector(s: &str) -> Result<Vector> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number {x:?} in {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Vector::from_vec(v))
}

fn parse_axes(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        bail!("projection {s:?} must be two comma-separated axes");
    }
    Ok((parts[0].trim().parse()?, parts[1].trim().parse()?))
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

/// A point of `z` from random factors; needs a set without constraints.
fn sample_unconstrained(z: &HybridZonotope, rng: &mut ChaCha8Rng) -> Result<Vector> {
    if z.n_c() > 0 {
        bail!("sampled checks need initial and input sets without equality constraints");
    }
    let xc = Vector::from_fn(z.n_g(), |_, _| rng.random_range(-1.0..=1.0));
    let xb = Vector::from_fn(z.n_b(), |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    Ok(z.c() + z.gc() * xc + z.gb() * xb)
}

/// Simulates `samples` trajectories and counts those leaving some stored set.
fn trajectory_check(model: &MldModel, r0: &HybridZonotope, res: &ReachResult, samples: usize, seed: u64) -> Result<usize> {
    let trees = res.trees.as_ref().ok_or_else(|| anyhow!("sampled checks need the tree"))?;
    let mut oracles =
        res.sets.iter().zip(trees).map(|(z, t)| LeafPointOracle::new(z, t)).collect::<hybzono::Result<Vec<_>>>()?;
    let sys: &MldSystem = &model.system;
    let last = oracles.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outside = 0;
    for _ in 0..samples {
        let mut x = sample_unconstrained(r0, &mut rng)?;
        for (k, o) in oracles.iter_mut().enumerate() {
            if !o.contains(&x)? {
                outside += 1;
                break;
            }
            if k == last {
                break;
            }
            let u = sample_unconstrained(&model.domains.u, &mut rng)?;
            let ws = sys.feasible_aux(&model.domains.w, &x, &u)?;
            let Some(w) = ws.first() else {
                // No admissible auxiliaries: the state left the modelled domain.
                break;
            };
            x = sys.successor(&x, &u, w);
        }
    }
    Ok(outside)
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    if a.threads == 0 {
        bail!("--threads must be at least 1");
    }
    let model = load_model(&a.model)?;
    let r0 = model.initial.clone().ok_or_else(|| anyhow!("model has no initial set R0"))?;
    let axes = a.projections.iter().map(|s| parse_axes(s)).collect::<Result<Vec<_>>>()?;

    let mut opts = ReachOptions::new(a.steps);
    opts.reduce_inequalities = a.reduce || a.reduce_ineqs;
    opts.reduce_binaries = a.reduce || a.reduce_binaries;
    opts.track_tree = a.track_tree || a.samples > 0;
    opts.solver = a.solver.config();
    let res = reach(&r0, &model.system, &model.domains.u, &model.domains.w, &opts)?;

    fs::create_dir_all(a.out.join("sets")).with_context(|| format!("creating {}", a.out.display()))?;
    let table = metrics_table(&res);
    write(&a.out.join("metrics.csv"), &table.to_csv())?;
    write(&a.out.join("metrics.json"), &table.to_json(false))?;
    write(&a.out.join("result.json"), &res.to_json())?;
    write(&a.out.join("timings.json"), &serde_json::to_string(&json!({ "step_seconds": res.timings }))?)?;
    for (k, z) in res.sets.iter().enumerate() {
        write(&a.out.join("sets").join(format!("R{k}.json")), &z.to_json())?;
    }
    if let Some(trees) = &res.trees {
        fs::create_dir_all(a.out.join("trees"))?;
        for (k, t) in trees.iter().enumerate() {
            write(&a.out.join("trees").join(format!("T{k}.json")), &serde_json::to_string(t)?)?;
        }
    }
    let last = res.final_set();
    let tree = res.trees.as_ref().and_then(|t| t.last());
    for (i, j) in axes {
        let polys = project_sample_with(last, (i, j), a.dirs, tree.is_some(), tree, opts.solver)?;
        write(&a.out.join(format!("polygons_{i}_{j}.json")), &polygons_to_json((i, j), &polys))?;
    }
    if a.samples > 0 {
        let outside = trajectory_check(&model, &r0, &res, a.samples, a.seed)?;
        let report = json!({ "samples": a.samples, "seed": a.seed, "outside": outside });
        write(&a.out.join("checks.json"), &serde_json::to_string(&report)?)?;
        if outside > 0 {
            bail!("{outside} of {} simulated trajectories left the reachable sets", a.samples);
        }
    }
    print!("{}", table.to_csv());
    Ok(())
}

fn cmd_decompose(set: &Path, out: &Path, solver: &SolverArgs) -> Result<()> {
    let z = load_set(set)?;
    let t = SetSolver::with_config(&z, solver.config()).enumerate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write(&out.join("tree.json"), &serde_json::to_string(&t)?)?;
    for (i, leaf) in z.decompose(&t)?.into_iter().enumerate() {
        write(&out.join(format!("leaf{i}.json")), &HybridZonotope::from(leaf).to_json())?;
    }
    println!("{}", json!({ "leaves": t.len() }));
    Ok(())
}

fn cmd_support(set: &Path, dir: &str, solver: &SolverArgs) -> Result<()> {
    let z = load_set(set)?;
    let s = SetSolver::with_config(&z, solver.config()).support(&parse_vector(dir)?)?;
    println!("{}", json!({ "value": s.value, "point": s.point.as_slice() }));
    Ok(())
}

fn cmd_contains(set: &Path, point: &str, solver: &SolverArgs) -> Result<()> {
    let z = load_set(set)?;
    let inside = SetSolver::with_config(&z, solver.config()).contains_point(&parse_vector(point)?)?;
    println!("{}", json!({ "contains": inside }));
    Ok(())
}

/// Prints the validation report; `Ok(false)` when the model is invalid.
fn cmd_validate(model: &Path) -> Result<bool> {
    let text = fs::read_to_string(model).with_context(|| format!("reading model file {}", model.display()))?;
    let (valid, errors) = match MldModel::from_json(&text) {
        Ok(_) => (true, Vec::new()),
        Err(hybzono::Error::Validation(errs)) => (false, errs),
        Err(e) => (false, vec![e.to_string()]),
    };
    println!("{}", json!({ "valid": valid, "errors": errors }));
    Ok(valid)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Decompose { set, out, solver } => cmd_decompose(set, out, solver).map(|_| true),
        Command::Support { set, dir, solver } => cmd_support(set, dir, solver).map(|_| true),
        Command::Contains { set, point, solver } => cmd_contains(set, point, solver).map(|_| true),
        Command::Validate { model } => cmd_validate(model),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let kind = e.downcast_ref::<hybzono::Error>().map(error_kind).unwrap_or("input");
            eprintln!("{}", json!({ "error": kind, "message": format!("{e:#}") }));
            ExitCode::from(2)
        }
    }
}

fn error_kind(e: &hybzono::Error) -> &'static str {
    use hybzono::Error::*;
    match e {
        Dimension(_) => "dimension",
        InvalidArgument(_) => "invalid_argument",
        NonFinite(_) => "non_finite",
        EmptySet => "empty_set",
        BudgetExhausted { .. } => "budget_exhausted",
        NumericalBreakdown(_) => "numerical",
        AmbiguousRank { .. } => "ambiguous_rank",
        Ordering(_) => "ordering",
        Validation(_) => "validation",
        Serialization(_) => "serialization",
    }
}
