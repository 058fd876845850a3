//! `mmgeo` command-line front end: every verb reads JSON inputs and writes one
//! deterministic JSON report.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mmgeo::alignment::{estimate_dpgh, estimate_dpmgh, estimate_dstar, Budget, DistanceEstimate};
use mmgeo::flat::{flat_bracket, flat_l, flat_lr, FlatProblem};
use mmgeo::hausdorff::local_hausdorff;
use mmgeo::holder::{holder_build, BuildParams, Grid};
use mmgeo::io::{load_indices, load_space, load_weights, to_json};
use mmgeo::measure::{aggregated_content, content, density_profile, doubling_scan, verify_gta, CoverMode, GtaParams};
use mmgeo::tangent::{
    blowup, flatness_scan, generate, separation_experiment, FixtureKind, FixtureParams, ScanParams, SEPARATION_SCALES,
};
use mmgeo::{Error, MeasuredSpace};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Serialize)]
#[command(name = "mmgeo", version, about = "Distances, Hölder surfaces and tangent scans on finite metric measure spaces")]
struct Cli {
    /// Seed for every randomized search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Search budget as a JSON file or inline JSON object.
    #[arg(long, global = true)]
    budget: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verb")]
enum Verb {
    /// Flat distance between two measures on one host.
    Flat(FlatArgs),
    /// Pointed local Hausdorff distance between two index sets.
    Hz(HzArgs),
    /// Pointed Gromov-Hausdorff interval.
    Dpgh(PairArgs),
    /// Pointed measured Gromov-Hausdorff interval.
    Dpmgh(PairArgs),
    /// Flat-coupling distance interval.
    Dstar(PairArgs),
    /// Hausdorff content of an index set.
    Content(ContentArgs),
    /// Ball-mass density ratios at one point.
    Density(DensityArgs),
    /// Doubling ratios over all points.
    Doubling(DoublingArgs),
    /// Good-tangent-approximation verification.
    Gta(GtaArgs),
    /// Hölder surface construction with a certificate.
    HolderBuild(HolderArgs),
    /// Rescaled and windowed blowups at one point.
    Blowup(BlowupArgs),
    /// Flatness scores against fitted tangent models.
    Scan(ScanArgs),
    /// Synthetic fixture generation.
    Generate(GenerateArgs),
    /// Rectifiable-versus-unrectifiable separation experiment.
    Separate(SeparateArgs),
}

#[derive(Args, Serialize)]
struct FlatArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    /// Lipschitz bound; with `--r` gives the fixed-window value.
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args, Serialize)]
struct HzArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
}

#[derive(Args, Serialize)]
struct PairArgs {
    left: PathBuf,
    right: PathBuf,
    /// Also write the best coupling here.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Cover {
    Exact,
    Greedy,
    Aggregated,
}

#[derive(Args, Serialize)]
struct ContentArgs {
    #[arg(long)]
    space: PathBuf,
    /// Target indices; all points when absent.
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Piece diameter cap (exact and greedy modes).
    #[arg(long, default_value_t = f64::INFINITY)]
    delta: f64,
    /// Aggregation mesh (aggregated mode).
    #[arg(long, default_value_t = 0.01)]
    mesh: f64,
    #[arg(long, value_enum, default_value_t = Cover::Greedy)]
    mode: Cover,
}

#[derive(Args, Serialize)]
struct DensityArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    point: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    dim: f64,
}

#[derive(Args, Serialize)]
struct DoublingArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    scales: Vec<f64>,
}

#[derive(Args, Serialize)]
struct GtaArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long = "C")]
    c: PathBuf,
    #[arg(long = "G")]
    g: PathBuf,
    #[arg(long)]
    eta: f64,
    #[arg(long = "K")]
    k: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    r0: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    grid_res: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    scales: Vec<f64>,
}

#[derive(Args, Serialize)]
struct HolderArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long = "C")]
    c: PathBuf,
    #[arg(long = "G")]
    g: PathBuf,
    #[arg(long = "K")]
    k: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    depth: u32,
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Physical side of the parameter cube.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Index whose nearest `C` point anchors the lattice origin; the base when absent.
    #[arg(long)]
    origin: Option<usize>,
    #[arg(long, default_value_t = 3)]
    seed_bits: u32,
    #[arg(long, default_value_t = 1)]
    refine_bits: u32,
    /// Host-by-parameter frame matrix as a JSON file.
    #[arg(long)]
    frame: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BlowupArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    point: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    scales: Vec<f64>,
    #[arg(long, default_value_t = mmgeo::tangent::DEFAULT_WINDOW)]
    window: f64,
    /// Include every blowup space in the report.
    #[arg(long)]
    spaces: bool,
}

#[derive(Args, Serialize)]
struct ScanOpts {
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    chart_degree: Option<usize>,
}

#[derive(Args, Serialize)]
struct ScanArgs {
    #[arg(long)]
    space: PathBuf,
    /// Expected tangent dimension.
    #[arg(long)]
    n: usize,
    /// Probe indices; the base point when absent.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    scales: Vec<f64>,
    #[command(flatten)]
    opts: ScanOpts,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
enum Kind {
    Segment,
    LipschitzGraph,
    LinfPlanePatch,
    FourCornerCantor,
    ScatteredDustCurve,
}

impl From<Kind> for FixtureKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Segment => FixtureKind::Segment,
            Kind::LipschitzGraph => FixtureKind::LipschitzGraph,
            Kind::LinfPlanePatch => FixtureKind::LinfPlanePatch,
            Kind::FourCornerCantor => FixtureKind::FourCornerCantor,
            Kind::ScatteredDustCurve => FixtureKind::ScatteredDustCurve,
        }
    }
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Generator parameters as a JSON file.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SeparateArgs {
    /// Fixture kinds; all five when absent.
    #[arg(long, value_enum, value_delimiter = ',')]
    kinds: Vec<Kind>,
    #[arg(long, value_delimiter = ',')]
    scales: Vec<f64>,
    #[command(flatten)]
    opts: ScanOpts,
}

/// A verb's payload plus the flags the envelope needs.
struct Outcome {
    result: Value,
    inconclusive: bool,
}

impl Outcome {
    fn done(result: impl Serialize) -> Result<Self, Error> {
        Ok(Outcome { result: serde_json::to_value(result)?, inconclusive: false })
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T, Error>) -> Result<T, Error> {
    r.map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn space(path: &Path) -> Result<MeasuredSpace, Error> {
    with_path(path, load_space(&read(path)?))
}

fn indices(path: &Path) -> Result<Vec<usize>, Error> {
    with_path(path, load_indices(&read(path)?))
}

fn weights(path: &Path) -> Result<Vec<f64>, Error> {
    with_path(path, load_weights(&read(path)?))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn budget(arg: &Option<String>, seed: u64) -> Result<Budget, Error> {
    let mut b: Budget = match arg {
        None => Budget::default(),
        Some(s) if s.trim_start().starts_with('{') => {
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("--budget: {e}")))?
        }
        Some(s) => parse_json(Path::new(s))?,
    };
    b.seed = seed;
    Ok(b)
}

fn scan_params(o: &ScanOpts, b: Option<Budget>) -> ScanParams {
    let mut p = ScanParams::default();
    if let Some(w) = o.window {
        p.window = w;
    }
    if let Some(r) = o.resolution {
        p.resolution = r;
    }
    if let Some(d) = o.chart_degree {
        p.chart_degree = d;
    }
    if let Some(b) = b {
        p.budget = b;
    }
    p
}

fn estimate_report(e: &DistanceEstimate, witness: &Option<PathBuf>) -> Result<Outcome, Error> {
    let file = match witness {
        Some(p) => {
            std::fs::write(p, serde_json::to_string_pretty(&e.witness_upper)? + "\n")?;
            Some(p.display().to_string())
        }
        None => None,
    };
    Ok(Outcome {
        result: json!({
            "lower": e.lower,
            "upper": e.upper,
            "method": e.method,
            "eps_star": e.eps_star,
            "witness_eps": e.witness_eps,
            "witness_file": file,
        }),
        inconclusive: e.inconclusive,
    })
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let explicit_budget = cli.budget.is_some();
    match &cli.verb {
        Verb::Flat(a) => {
            let host = space(&a.host)?;
            let (mu, nu) = (weights(&a.mu)?, weights(&a.nu)?);
            let h = &host.space;
            match (a.l, a.r) {
                (Some(l), Some(r)) => {
                    let s = flat_lr(&FlatProblem { host: h, mu: &mu, nu: &nu, l, r })?;
                    Outcome::done(json!({ "value": s.value, "witness": s.witness, "L": l, "r": r }))
                }
                (Some(l), None) => Outcome::done(json!({ "value": flat_l(h, &mu, &nu, l)?, "L": l })),
                (None, Some(_)) => Err(Error::Domain("--r needs --L".into())),
                (None, None) => {
                    let (lo, hi) = flat_bracket(h, &mu, &nu, a.tol)?;
                    let witness = if hi > 0.0 && hi < 0.5 {
                        flat_lr(&FlatProblem { host: h, mu: &mu, nu: &nu, l: 1.0 / hi, r: 1.0 / hi })?.witness
                    } else {
                        vec![0.0; mu.len()]
                    };
                    Outcome::done(json!({ "value": hi, "lower": lo, "witness": witness }))
                }
            }
        }
        Verb::Hz(a) => {
            let host = space(&a.host)?;
            let r = local_hausdorff(&host.space, &indices(&a.left)?, &indices(&a.right)?)?;
            Outcome::done(json!({ "value": r.value, "critical_eps": r.critical_eps }))
        }
        Verb::Dpgh(a) => {
            let e = estimate_dpgh(&space(&a.left)?.space, &space(&a.right)?.space, &budget(&cli.budget, cli.seed)?)?;
            estimate_report(&e, &a.witness)
        }
        Verb::Dpmgh(a) => {
            let e = estimate_dpmgh(&space(&a.left)?, &space(&a.right)?, &budget(&cli.budget, cli.seed)?, &[])?;
            estimate_report(&e, &a.witness)
        }
        Verb::Dstar(a) => {
            let e = estimate_dstar(&space(&a.left)?, &space(&a.right)?, &budget(&cli.budget, cli.seed)?, &[])?;
            estimate_report(&e, &a.witness)
        }
        Verb::Content(a) => {
            let s = space(&a.space)?;
            let target = match &a.target {
                Some(p) => indices(p)?,
                None => (0..s.len()).collect(),
            };
            let est = match a.mode {
                Cover::Exact => content(&s.space, &target, a.s, a.delta, CoverMode::ExactSmall)?,
                Cover::Greedy => content(&s.space, &target, a.s, a.delta, CoverMode::GreedyUpper)?,
                Cover::Aggregated => aggregated_content(&s.space, &target, a.s, a.mesh)?,
            };
            Outcome::done(est)
        }
        Verb::Density(a) => Outcome::done(density_profile(&space(&a.space)?, a.point, &a.scales, a.dim)?),
        Verb::Doubling(a) => Outcome::done(doubling_scan(&space(&a.space)?, &a.scales)?),
        Verb::Gta(a) => {
            let s = space(&a.space)?;
            let p = GtaParams { eta: a.eta, k: a.k, delta: a.delta, r0: a.r0, n: a.n, grid_res: a.grid_res };
            let rep = verify_gta(&s, &indices(&a.c)?, &indices(&a.g)?, &p, &a.scales, &budget(&cli.budget, cli.seed)?)?;
            Outcome::done(rep)
        }
        Verb::HolderBuild(a) => {
            let s = space(&a.space)?;
            let frame = match &a.frame {
                Some(p) => Some(parse_json::<Vec<Vec<f64>>>(p)?),
                None => None,
            };
            let p = BuildParams {
                n: a.n,
                k: a.k,
                gamma: a.gamma,
                eta: a.eta,
                r: a.r,
                origin: a.origin.unwrap_or(s.base()),
                grid: Grid { seed_bits: a.seed_bits, refine_bits: a.refine_bits, depth: a.depth },
                frame,
            };
            let cert = holder_build(&s, &indices(&a.c)?, &indices(&a.g)?, &p)?;
            let mut v = serde_json::to_value(&cert)?;
            v["bad_cube_count"] = json!(cert.bad_cube_count());
            Ok(Outcome { result: v, inconclusive: false })
        }
        Verb::Blowup(a) => {
            let s = space(&a.space)?;
            let seq = blowup(&s, a.point, &a.scales, a.window)?;
            let spaces: Option<Vec<Value>> = a.spaces.then(|| seq.blowups.iter().map(to_json).collect());
            Outcome::done(json!({
                "point": seq.point,
                "window": seq.window,
                "summary": seq.summary(),
                "kept": seq.kept,
                "ties": seq.ties,
                "spaces": spaces,
            }))
        }
        Verb::Scan(a) => {
            let s = space(&a.space)?;
            let points = match &a.points {
                Some(p) => indices(p)?,
                None => vec![s.base()],
            };
            let p = scan_params(&a.opts, explicit_budget.then(|| budget(&cli.budget, cli.seed)).transpose()?);
            let rep = flatness_scan(&s, a.n, &points, &a.scales, &p)?;
            let inconclusive = rep.records.iter().any(|r| r.inconclusive);
            Ok(Outcome { result: serde_json::to_value(rep)?, inconclusive })
        }
        Verb::Generate(a) => {
            let params: FixtureParams = match &a.params {
                Some(p) => parse_json(p)?,
                None => FixtureParams::default(),
            };
            let f = generate(a.kind.into(), &params, cli.seed)?;
            Outcome::done(json!({
                "kind": f.kind,
                "params": f.params,
                "seed": f.seed,
                "n": f.n,
                "rectifiable": f.rectifiable,
                "probes": f.probes,
                "space": to_json(&f.space),
            }))
        }
        Verb::Separate(a) => {
            let kinds: Vec<FixtureKind> =
                if a.kinds.is_empty() { FixtureKind::ALL.to_vec() } else { a.kinds.iter().map(|&k| k.into()).collect() };
            let fixtures = kinds
                .iter()
                .map(|&k| generate(k, &FixtureParams::default(), cli.seed))
                .collect::<Result<Vec<_>, _>>()?;
            let scales = if a.scales.is_empty() { SEPARATION_SCALES.to_vec() } else { a.scales.clone() };
            let p = scan_params(&a.opts, explicit_budget.then(|| budget(&cli.budget, cli.seed)).transpose()?);
            let rep = separation_experiment(&fixtures, &scales, &p)?;
            let inconclusive = rep.fixtures.iter().any(|f| f.inconclusive > 0);
            Ok(Outcome { result: serde_json::to_value(rep)?, inconclusive })
        }
    }
}

/// Exit status for an error: 2 for unreadable input, 3 for a violated certificate.
fn status_of(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Json(_) | Error::Io(_) => 2,
        Error::Certificate(_) | Error::Extension { .. } => 3,
        _ => 1,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::DegenerateScale(_) => "degenerate_scale",
        Error::Solver(_) => "solver",
        Error::NoConstruction(_) => "no_construction",
        Error::IncompleteCandidate(_) => "incomplete_candidate",
        Error::Precondition(_) => "precondition",
        Error::Inapplicable(_) => "inapplicable",
        Error::Extension { .. } => "extension",
        Error::Certificate(_) => "certificate",
        Error::Internal(_) => "internal",
        Error::Parse(_) | Error::Json(_) => "parse",
        Error::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = mmgeo::par::set_threads(n) {
            eprintln!("mmgeo: {e}");
            return ExitCode::from(2);
        }
    }
    let config = serde_json::to_value(&cli).expect("arguments serialize");
    let verb = config["verb"]["verb"].clone();
    let (report, status) = match run(&cli) {
        Ok(o) => (
            json!({
                "tool": "mmgeo",
                "version": env!("CARGO_PKG_VERSION"),
                "verb": verb,
                "config": config,
                "status": "ok",
                "inconclusive": o.inconclusive,
                "result": o.result,
            }),
            0,
        ),
        Err(e) => {
            eprintln!("mmgeo: {e}");
            (
                json!({
                    "tool": "mmgeo",
                    "version": env!("CARGO_PKG_VERSION"),
                    "verb": verb,
                    "config": config,
                    "status": "error",
                    "error": { "kind": error_kind(&e), "message": e.to_string() },
                }),
                status_of(&e),
            )
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("mmgeo: cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(status)
}
