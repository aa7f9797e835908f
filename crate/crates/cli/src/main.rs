use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use escherize::distances::{build_ec, EcVariant};
use escherize::goal::{load_goal_with_weights, random_star_polygon, GoalPolygon};
use escherize::render::{layout_tiling, overlay_svg, tiling_svg, EDGE_MATCH_TOL};
use escherize::search::{
    compare_rankings, naive_search, run_search, Manifest, Mode, SearchParams, SearchStats, TopK, TypeStats,
};
use escherize::templates::{count_configurations, enumerate_configurations, IsohedralType};

/// Goals with at least this many points default to incomplete GAD search.
const INCOMPLETE_FROM: usize = 90;

#[derive(Parser)]
#[command(name = "escherize", version, about = "Find isohedral tile shapes close to a goal polygon")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search and write the manifest, overlays and a tiling of the best shape.
    Solve(RunArgs),
    /// Compare the pruned search against the unpruned scan.
    Bench(RunArgs),
    /// Count (or list) the configurations of one type.
    Configs(ConfigsArgs),
    /// Print the GAD edge set of a goal polygon.
    Edges(EdgesArgs),
    /// Re-render the SVG files of a manifest.
    Render(RenderArgs),
}

#[derive(Args)]
struct GoalArgs {
    /// Goal polygon file: a point count, then one "x y" line per point.
    #[arg(long, conflicts_with = "random_n", required_unless_present = "random_n")]
    goal: Option<PathBuf>,
    /// Point and edge weights file ("P idx [w]" / "E idx [w]" lines).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Use a random star-shaped goal with this many points.
    #[arg(long)]
    random_n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GoalArgs {
    fn load(&self) -> Result<GoalPolygon> {
        let goal = match (&self.goal, self.random_n) {
            (Some(path), _) => load_goal_with_weights(path, self.weights.as_deref())
                .with_context(|| format!("cannot load goal {}", path.display()))?,
            (None, Some(n)) => {
                let g = random_star_polygon(n, self.seed)?;
                match &self.weights {
                    Some(path) => {
                        let (pw, ew) = escherize::goal::load_weights(path, n)
                            .with_context(|| format!("cannot load weights {}", path.display()))?;
                        g.with_weights(pw, ew)?
                    }
                    None => g,
                }
            }
            (None, None) => bail!("either --goal or --random-n is required"),
        };
        Ok(goal.normalized())
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    goal: GoalArgs,
    #[arg(long, default_value = "euclidean")]
    mode: Mode,
    /// Chord length factor for the GAD edge set (required for gad modes).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = escherize::search::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = escherize::search::DEFAULT_CAPACITY)]
    topk: usize,
    /// Comma-separated type filter, e.g. "IH1,IH47".
    #[arg(long, value_delimiter = ',')]
    types: Vec<IsohedralType>,
    #[arg(long, conflicts_with = "incomplete")]
    complete: bool,
    #[arg(long)]
    incomplete: bool,
    /// GAD2 also admits chords that cross the goal boundary.
    #[arg(long)]
    gad2_crossing: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads: 0 uses all cores, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Lattice cells on each side of the base cell in the tiling patch.
    #[arg(long, default_value_t = 2)]
    extent: usize,
}

impl RunArgs {
    fn params(&self, n: usize) -> Result<SearchParams> {
        let mut params = SearchParams::default();
        match self.gamma {
            Some(g) => params.gamma = g,
            None if self.mode.is_gad() => bail!("--gamma is required for mode {}", self.mode),
            None => {}
        }
        params.alpha = self.alpha;
        params.topk = self.topk;
        if !self.types.is_empty() {
            params.types = self.types.clone();
        }
        params.complete = if self.complete {
            true
        } else if self.incomplete {
            false
        } else {
            n < INCOMPLETE_FROM || !self.mode.is_gad()
        };
        params.workers = self.workers;
        params.gad2_crossing = self.gad2_crossing;
        params.validate(self.mode)?;
        Ok(params)
    }
}

#[derive(Args)]
struct ConfigsArgs {
    #[arg(long = "type")]
    ty: IsohedralType,
    #[arg(long)]
    n: usize,
    /// Print every point assignment instead of the count.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct EdgesArgs {
    #[command(flatten)]
    goal: GoalArgs,
    #[arg(long, default_value_t = escherize::distances::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value = "gad1")]
    variant: String,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 2)]
    extent: usize,
}

/// Twelve significant digits, trailing zeros trimmed.
fn g12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp).max(0) as usize, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.11e}")
    }
}

fn print_ranking(top: &TopK) {
    println!("{:>4}  {:<5}  {:<24}  {:>4}  {:>20}", "rank", "type", "k", "j", "eval");
    for (r, c) in top.entries().iter().enumerate() {
        let k = c.k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        println!("{:>4}  {:<5}  {:<24}  {:>4}  {:>20}", r + 1, c.ty.name(), k, c.j, g12(c.eval));
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes overlay SVGs for every candidate and the tiling of the first one.
/// Returns the largest shared-edge deviation of the tiling.
fn render_manifest(manifest: &Manifest, out: &Path, extent: usize) -> Result<f64> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let goal = manifest.goal_polygon()?;
    let cands = manifest.candidates()?;
    for (r, c) in cands.iter().enumerate() {
        write(&out.join(format!("overlay_{:02}.svg", r + 1)), &overlay_svg(c, &goal)?)?;
    }
    let Some(best) = cands.first() else {
        return Ok(0.0);
    };
    let layout = layout_tiling(best, extent)?;
    write(&out.join("tiling.svg"), &tiling_svg(&layout))?;
    Ok(layout.edge_mismatch()?.0)
}

fn cmd_solve(args: &RunArgs) -> Result<()> {
    let goal = args.goal.load()?;
    let params = args.params(goal.n())?;
    let (top, stats) = run_search(&goal, args.mode, &params)?;
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let manifest = Manifest::new(args.mode, &params, &stats, &goal, &top);
    manifest.save(&args.out.join("manifest.json"))?;
    let mismatch = render_manifest(&manifest, &args.out, args.extent)?;
    print_ranking(&top);
    println!(
        "cheap_evals {}  full_evals {}  pruned {}  rejected_nonsimple {}  wall_time {} s",
        stats.cheap_evals,
        stats.full_evals,
        stats.pruned,
        stats.rejected_nonsimple,
        g12(stats.wall_time.as_secs_f64())
    );
    if mismatch > EDGE_MATCH_TOL {
        bail!("tiling edges deviate by {} (tolerance {})", g12(mismatch), g12(EDGE_MATCH_TOL));
    }
    Ok(())
}

fn stats_row(label: &str, s: &TypeStats, wall: Option<f64>) {
    println!(
        "  {:<7} {:>10} {:>12} {:>12} {:>12} {:>16}",
        label,
        s.configurations,
        s.cheap_evals,
        s.full_evals,
        s.pruned,
        wall.map(g12).unwrap_or_default()
    );
}

fn totals(s: &SearchStats) -> TypeStats {
    TypeStats {
        configurations: s.per_type.values().map(|t| t.configurations).sum(),
        cheap_evals: s.cheap_evals,
        full_evals: s.full_evals,
        pruned: s.pruned,
    }
}

fn cmd_bench(args: &RunArgs) -> Result<()> {
    let goal = args.goal.load()?;
    let params = args.params(goal.n())?;
    let (fast, fs_) = run_search(&goal, args.mode, &params)?;
    let (slow, ns) = naive_search(&goal, args.mode, &params)?;
    println!("mode {}  n {}  complete {}", args.mode, goal.n(), params.complete);
    for (name, s) in [("pruned", &fs_), ("naive", &ns)] {
        println!("{name}");
        println!(
            "  {:<7} {:>10} {:>12} {:>12} {:>12} {:>16}",
            "type", "configs", "cheap_evals", "full_evals", "pruned", "wall_time_s"
        );
        for (ty, t) in &s.per_type {
            stats_row(ty, t, None);
        }
        stats_row("total", &totals(s), Some(s.wall_time.as_secs_f64()));
    }
    if params.complete || !args.mode.is_gad() {
        if let Err(msg) = compare_rankings(&fast, &slow, 1e-9) {
            bail!("pruned and naive rankings differ: {msg}");
        }
        println!("rankings agree");
    } else {
        let missing = slow
            .entries()
            .iter()
            .filter(|c| !fast.entries().iter().any(|d| d.triplet() == c.triplet()))
            .count();
        println!("incomplete search overlooked {missing} of the top {}", slow.len());
    }
    Ok(())
}

fn cmd_configs(args: &ConfigsArgs) -> Result<()> {
    if args.list {
        for c in enumerate_configurations(args.ty, args.n)? {
            println!("{}", c.k().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
        }
    } else {
        enumerate_configurations(args.ty, args.n)?;
        println!("{}", count_configurations(args.ty, args.n));
    }
    Ok(())
}

fn cmd_edges(args: &EdgesArgs) -> Result<()> {
    let variant = match args.variant.to_ascii_lowercase().as_str() {
        "gad1" => EcVariant::Gad1,
        "gad2" => EcVariant::Gad2,
        "gad2-crossing" => EcVariant::Gad2Crossing,
        other => bail!("unknown edge-set variant {other:?} (expected gad1, gad2 or gad2-crossing)"),
    };
    let goal = args.goal.load()?;
    let ec = build_ec(&goal, args.gamma, variant)?;
    for (&(s, t), &len) in ec.edges().iter().zip(ec.lengths()) {
        println!("{} {} {}", s + 1, t + 1, g12(len));
    }
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> Result<()> {
    let manifest = Manifest::load(&args.manifest)?;
    let mismatch = render_manifest(&manifest, &args.out, args.extent)?;
    if mismatch > EDGE_MATCH_TOL {
        bail!("tiling edges deviate by {} (tolerance {})", g12(mismatch), g12(EDGE_MATCH_TOL));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Configs(a) => cmd_configs(a),
        Command::Edges(a) => cmd_edges(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
