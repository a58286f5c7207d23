mod config;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hitree::builder::{self, BuildOutcome, ClosedSetWitness};
use hitree::dimension::{self, SearchBudget};
use hitree::enumerate::TreeSpace;
use hitree::format::{self, ParsedSet};
use hitree::msf::{self, BackendKind, MsfOptions};
use hitree::online::{self, Learner};
use hitree::pac::{self, ExperimentConfig, Mode, VectorSource};
use hitree::{newick, tree_ops, Constraint, ConstraintSet, Error, OrientedSet, PointSet};

const EXIT_UNSAT: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;

/// Hierarchical trees from triplet constraints.
#[derive(Parser, Debug)]
#[command(name = "hitree", version, about)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "HITREE_SEED", default_value_t = 0)]
    seed: u64,

    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// File of `key=value` lines preloading any flag; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide satisfiability; print a tree or a closed-set witness.
    Check(CheckArgs),
    /// Build a tree with the chosen engine.
    Build(BuildArgs),
    /// Print every triplet constraint of a Newick tree.
    Extract(ExtractArgs),
    /// Search for a contradictory orientation of an unlabeled tuple file.
    Orient(OrientArgs),
    /// Natarajan dimension by exhaustive search.
    Ndim(NdimArgs),
    /// Check the explicit shattered construction.
    Shatter(ShatterArgs),
    /// Build and check the Littlestone tree; optionally play the adversary game.
    Littlestone(LittlestoneArgs),
    /// Mistakes of the halving learner against adversaries.
    Halving(HalvingArgs),
    /// Regret of the weighted forecaster on a noisy stream.
    Regret(RegretArgs),
    /// Learning-curve experiments.
    Pac(PacArgs),
    /// Sample count at the first contradiction of distance labels.
    Threshold(ThresholdArgs),
    /// Time the constructors on random consistent constraints.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Constraint file, `-` for stdin.
    file: PathBuf,
    /// Allow multiway nodes and three-way constraints.
    #[arg(long)]
    nonbinary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Engine {
    Baseline,
    Msf,
    Agnostic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Backend {
    Naive,
    Fast,
}

#[derive(Args, Debug)]
struct BuildArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = Engine::Baseline)]
    engine: Engine,
    #[arg(long, value_enum, default_value_t = Backend::Naive)]
    backend: Backend,
    /// Print the deletion log of the coupled-graph engine to stderr.
    #[arg(long)]
    trace: bool,
    /// Accept k-tuple constraints.
    #[arg(long)]
    ktuple: bool,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Newick file, `-` for stdin.
    file: PathBuf,
}

#[derive(Args, Debug)]
struct OrientArgs {
    file: PathBuf,
    /// Allow three-way labels.
    #[arg(long)]
    three_way: bool,
    /// Search every shape of every tuple instead of the pivot triplets.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = SearchBudget::default().orientations)]
    max_orientations: u64,
}

#[derive(Args, Debug)]
struct NdimArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    nonbinary: bool,
    /// Also print the shattered configuration.
    #[arg(long)]
    witness: bool,
    #[arg(long, default_value_t = SearchBudget::default().dimension_points)]
    max_points: usize,
}

#[derive(Args, Debug)]
struct ShatterArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Print one satisfying tree per subset.
    #[arg(long)]
    witnesses: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LearnerKind {
    Constant,
    Halving,
    Consistent,
}

#[derive(Args, Debug)]
struct LittlestoneArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Check every root-to-leaf path and the rank order.
    #[arg(long)]
    verify: bool,
    /// Play the adversary game against this learner.
    #[arg(long, value_enum)]
    learner: Option<LearnerKind>,
    /// Write the game transcript as CSV.
    #[arg(long, value_name = "FILE")]
    transcript: Option<PathBuf>,
    #[arg(long, default_value_t = online::DEFAULT_DEPTH_BUDGET)]
    max_depth: usize,
}

#[derive(Args, Debug)]
struct HalvingArgs {
    #[arg(long)]
    n: usize,
    /// Random adversarial runs.
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Exact worst case by minimax (small n only).
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args, Debug)]
struct RegretArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    rounds: usize,
    #[arg(long, default_value_t = 0.1)]
    flip: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PacMode {
    Realizable,
    AgnosticVectors,
    AgnosticFile,
    Nonbinary,
}

#[derive(Args, Debug)]
struct PacArgs {
    #[arg(long, value_enum)]
    mode: PacMode,
    /// Point counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Samples per point, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k_ratio: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Vector CSV for agnostic-file mode.
    #[arg(long, value_name = "FILE")]
    vectors: Option<PathBuf>,
    /// Use hierarchical synthetic vectors instead of uniform ones.
    #[arg(long)]
    hierarchical: bool,
    #[arg(long, default_value_t = pac::DEFAULT_DIMENSION)]
    dimension: usize,
    #[arg(long, default_value_t = 4)]
    max_children: usize,
    #[arg(long, default_value_t = pac::TEST_TRIPLETS)]
    test_size: usize,
    /// Per-trial CSV; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Aggregate CSV.
    #[arg(long, value_name = "FILE")]
    aggregate: Option<PathBuf>,
    /// SVG chart.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
    /// Record wall time per trial.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = pac::DEFAULT_DIMENSION)]
    dimension: usize,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    m: usize,
    #[arg(long, value_enum, default_value_t = Engine::Baseline)]
    engine: Engine,
    #[arg(long, value_enum, default_value_t = Backend::Naive)]
    backend: Backend,
}

enum Failure {
    Unsat,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config::config_path(&args) {
        match fs::read_to_string(&path)
            .map_err(Error::from)
            .and_then(|t| config::parse(&t))
        {
            Ok(entries) => args = config::merge(args, &entries),
            Err(e) => {
                eprintln!("error: config {}: {e}", Path::new(&path).display());
                return ExitCode::from(EXIT_INPUT);
            }
        }
    }
    let cli = Cli::parse_from(args);
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Unsat) => ExitCode::from(EXIT_UNSAT),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_budget() {
                EXIT_BUDGET
            } else {
                EXIT_INPUT
            })
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let seed = cli.seed;
    match &cli.command {
        Command::Check(a) => check(a),
        Command::Build(a) => build(a),
        Command::Extract(a) => extract(a),
        Command::Orient(a) => orient(a),
        Command::Ndim(a) => ndim(a),
        Command::Shatter(a) => shatter(a),
        Command::Littlestone(a) => littlestone(a),
        Command::Halving(a) => halving(a, seed),
        Command::Regret(a) => regret(a, seed),
        Command::Pac(a) => pac_cmd(a, seed),
        Command::Threshold(a) => threshold(a, seed),
        Command::Bench(a) => bench(a, seed),
    }
}

fn read_input(path: &Path) -> Result<String, Error> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

fn read_oriented(path: &Path) -> Result<OrientedSet, Error> {
    format::parse_oriented(&read_input(path)?)
}

fn create(path: &Path) -> Result<io::BufWriter<fs::File>, Error> {
    fs::File::create(path)
        .map(io::BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn print_witness(w: &ClosedSetWitness, points: &PointSet) {
    let names: Vec<&str> = w.set.iter().map(|&p| points.name(p)).collect();
    println!("UNSAT");
    println!("witness: {{{}}}", names.join(", "));
    for c in &w.constraints {
        println!("{}", c.render(points));
    }
}

fn check(a: &CheckArgs) -> Outcome {
    let set = read_oriented(&a.file)?;
    let out = if a.nonbinary {
        builder::build_nonbinary_raw(set.n(), &builder::reduce_all(set.constraints())?)?
    } else {
        builder::build(&set)?
    };
    match out {
        BuildOutcome::Tree(t) => {
            debug_assert_eq!(tree_ops::count_violations(&t, set.constraints()), Ok(0));
            println!("SAT");
            println!("{}", newick::write(&t, set.points()));
            Ok(())
        }
        BuildOutcome::Witness(w) => {
            print_witness(&w, set.points());
            Err(Failure::Unsat)
        }
    }
}

fn build(a: &BuildArgs) -> Outcome {
    let set = read_oriented(&a.file)?;
    let has_ktuple = set
        .constraints()
        .iter()
        .any(|c| matches!(c, Constraint::KTuple(_)));
    if has_ktuple && !a.ktuple {
        return Err(Error::Unsupported("k-tuple constraints need --ktuple".into()).into());
    }
    let (tree, witness) = match a.engine {
        Engine::Baseline => match builder::build(&set)? {
            BuildOutcome::Tree(t) => (Some(t), None),
            BuildOutcome::Witness(w) => (None, Some(w)),
        },
        Engine::Msf => {
            let opts = MsfOptions::with_backend(match a.backend {
                Backend::Naive => BackendKind::Naive,
                Backend::Fast => BackendKind::Fast,
            });
            let res = if has_ktuple {
                msf::build_ktuple_via_msf(&set, opts)?
            } else {
                msf::build_via_msf(&set, opts)?
            };
            if a.trace {
                let mut err = io::stderr().lock();
                for d in &res.trace {
                    writeln!(err, "{d}")?;
                }
            }
            match res.outcome {
                BuildOutcome::Tree(t) => (Some(t), None),
                BuildOutcome::Witness(w) => (None, Some(w)),
            }
        }
        Engine::Agnostic => {
            let reduced = builder::reduce_all(set.constraints())?;
            let (t, bad) = builder::build_agnostic_raw(set.n(), &reduced)?;
            eprintln!("violated {bad} of {}", reduced.len());
            println!("{}", newick::write(&t, set.points()));
            return Ok(());
        }
    };
    if let Some(w) = witness {
        print_witness(&w, set.points());
        return Err(Failure::Unsat);
    }
    let tree = tree.expect("tree or witness");
    let bad = tree_ops::count_violations(&tree, set.constraints())?;
    if bad != 0 {
        return Err(Error::Invalid(format!(
            "internal error: built tree violates {bad} constraints"
        ))
        .into());
    }
    println!("{}", newick::write(&tree, set.points()));
    Ok(())
}

fn extract(a: &ExtractArgs) -> Outcome {
    let text = read_input(&a.file)?;
    let mut points = PointSet::new();
    let t = newick::parse(text.trim(), &mut points)?;
    let set = tree_ops::extract_triplets(&t, &points)?;
    print!("{}", format::serialize_oriented(&set));
    Ok(())
}

fn read_unlabeled(path: &Path) -> Result<ConstraintSet, Error> {
    match format::parse_constraints(&read_input(path)?)? {
        ParsedSet::Unlabeled(s) => Ok(s),
        ParsedSet::Oriented(_) => Err(Error::Unsupported("expected unlabeled tuples".into())),
    }
}

fn orient(a: &OrientArgs) -> Outcome {
    let set = read_unlabeled(&a.file)?;
    let budget = SearchBudget {
        orientations: a.max_orientations,
        ..SearchBudget::default()
    };
    let found = if set.k() == 3 && !a.three_way && set.points().len() <= budget.subset_points {
        match dimension::find_critical_set(&set, &budget)? {
            Some(s) => Some(dimension::connect_critical_set(&set, &s, &budget)?),
            None => None,
        }
    } else if set.k() == 3 {
        dimension::exists_contradictory_orientation(&set, a.three_way, &budget)?
    } else if a.full || a.three_way {
        dimension::exists_contradictory_tuple_orientation(&set, a.three_way, &budget)?
    } else {
        match dimension::tuple_threshold_check(&set, &budget)? {
            Some(o) => Some(o),
            None => dimension::exists_contradictory_tuple_orientation(&set, false, &budget)?,
        }
    };
    match found {
        Some(o) => {
            println!("CONTRADICTORY");
            print!("{}", format::serialize_oriented(&o));
            Ok(())
        }
        None => {
            println!("NONE");
            Err(Failure::Unsat)
        }
    }
}

fn ndim(a: &NdimArgs) -> Outcome {
    let budget = SearchBudget {
        dimension_points: a.max_points,
        ..SearchBudget::default()
    };
    let r = dimension::natarajan_dimension(a.n, a.k, a.nonbinary, &budget)?;
    println!("{}", r.dimension);
    if a.witness {
        let pts = PointSet::numbered(a.n, "x");
        for (t, (f1, f2)) in &r.witness {
            let names: Vec<&str> = t.iter().map(|&p| pts.name(p)).collect();
            println!(
                "{}: {} / {}",
                names.join(" "),
                f1.render(&pts),
                f2.render(&pts)
            );
        }
    }
    Ok(())
}

fn shatter(a: &ShatterArgs) -> Outcome {
    let pts = PointSet::numbered(a.n, "x");
    let (set, pairs) = dimension::construct_shattered_set(&pts, a.k)?;
    let budget = SearchBudget::default();
    let ok = dimension::is_n_shattered(&set, &pairs, false, &budget)?;
    println!("tuples={} shattered={ok}", set.len());
    if a.witnesses {
        if let Some(trees) = dimension::shatter_witnesses(&set, &pairs, false, &budget)? {
            for (mask, t) in trees.iter().enumerate() {
                println!(
                    "{mask:0width$b} {}",
                    newick::write(t, &pts),
                    width = set.len()
                );
            }
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Unsat)
    }
}

fn littlestone(a: &LittlestoneArgs) -> Outcome {
    let pts = PointSet::numbered(a.n, "x");
    let l = online::build_littlestone_tree(&pts, a.k, a.max_depth)?;
    let mut line = format!("depth={}", l.depth());
    let mut ok = true;
    if a.verify {
        let shattered = online::verify_shattered(&l)?;
        let ranks = online::rank_order_check(&l);
        let sizes = online::set_sizes_check(&l);
        ok = shattered && ranks && sizes;
        line.push_str(&format!(" shattered={shattered}"));
        if !(ranks && sizes) {
            line.push_str(&format!(" rank_order={ranks} set_sizes={sizes}"));
        }
    }
    println!("{line}");
    if let Some(kind) = a.learner {
        let space;
        let mut learner: Box<dyn Learner> = match kind {
            LearnerKind::Constant => Box::new(online::ConstantLearner),
            LearnerKind::Consistent => Box::new(online::ConsistentTreeLearner::new(l.size())),
            LearnerKind::Halving => {
                space = TreeSpace::new(
                    l.size(),
                    hitree::Arity::Binary,
                    l.size().clamp(hitree::enumerate::DEFAULT_CAP, 9),
                )?;
                Box::new(online::HalvingLearner::new(&space))
            }
        };
        let rounds = online::adversary_game(&l, learner.as_mut())?;
        println!(
            "learner={} mistakes={}",
            learner.name(),
            online::mistakes(&rounds)
        );
        if let Some(path) = &a.transcript {
            online::write_transcript(&rounds, &pts, create(path)?)?;
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Unsat)
    }
}

fn halving(a: &HalvingArgs, seed: u64) -> Outcome {
    let space = TreeSpace::binary(a.n)?;
    let bound = online::halving_bound(a.n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0;
    for _ in 0..a.runs {
        let mut h = online::HalvingLearner::new(&space);
        let rounds = online::adversarial_run(&space, &mut h, &mut rng)?;
        worst = worst.max(online::mistakes(&rounds));
    }
    println!(
        "trees={} bound={bound} runs={} max_mistakes={worst}",
        space.len(),
        a.runs
    );
    if a.exhaustive {
        println!("worst_case={}", online::halving_worst_case(&space)?);
    }
    Ok(())
}

fn regret(a: &RegretArgs, seed: u64) -> Outcome {
    let space = TreeSpace::binary(a.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = tree_ops::random_binary_tree_with(a.n, &mut rng)?;
    let r = online::regret_harness(&space, &target, a.rounds, a.flip, &mut rng)?;
    println!(
        "rounds={} flip={} learner_loss={:.3} best_loss={} regret={:.3}",
        r.rounds, r.flip_rate, r.learner_loss, r.best_loss, r.regret
    );
    Ok(())
}

fn pac_cmd(a: &PacArgs, seed: u64) -> Outcome {
    let mode = match a.mode {
        PacMode::Realizable => Mode::Realizable,
        PacMode::AgnosticVectors => Mode::AgnosticVectors,
        PacMode::AgnosticFile => Mode::AgnosticFile,
        PacMode::Nonbinary => Mode::Nonbinary,
    };
    let given = match (&a.vectors, mode) {
        (Some(path), _) => {
            let (_, v) = pac::read_vectors(read_input(path)?.as_bytes())?;
            Some(v)
        }
        (None, Mode::AgnosticFile) => {
            return Err(Error::Invalid("agnostic-file mode needs --vectors".into()).into())
        }
        _ => None,
    };
    let mut reports = Vec::new();
    for &n in &a.n {
        let mut cfg = ExperimentConfig::new(mode, n, a.k_ratio.clone(), a.trials, seed);
        cfg.dimension = a.dimension;
        cfg.max_children = a.max_children;
        cfg.test_size = a.test_size;
        cfg.timing = a.timing;
        cfg.vectors = match &given {
            Some(v) => VectorSource::Given(v.clone()),
            None if a.hierarchical => VectorSource::Hierarchical,
            None => VectorSource::Uniform,
        };
        reports.push(pac::run(&cfg)?);
    }
    let rows: Vec<_> = reports
        .iter()
        .flat_map(|r| r.trials.iter().cloned())
        .collect();
    match &a.out {
        Some(p) => pac::write_trials_csv(&rows, create(p)?)?,
        None => pac::write_trials_csv(&rows, io::stdout().lock())?,
    }
    if let Some(p) = &a.aggregate {
        let agg: Vec<_> = reports
            .iter()
            .flat_map(|r| r.aggregates.iter().cloned())
            .collect();
        pac::write_aggregate_csv(&agg, create(p)?)?;
    }
    if let Some(p) = &a.svg {
        create(p)?.write_all(pac::report_svg(&reports).as_bytes())?;
    }
    Ok(())
}

fn threshold(a: &ThresholdArgs, seed: u64) -> Outcome {
    let mut w: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(w, "n,trial,count")?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &n in &a.n {
        let mut cfg = ExperimentConfig::new(Mode::AgnosticVectors, n, vec![1.0], a.trials, seed);
        cfg.dimension = a.dimension;
        let r = pac::contradiction_threshold(&cfg)?;
        for (t, c) in r.counts.iter().enumerate() {
            writeln!(
                w,
                "{n},{t},{}",
                c.map(|c| c.to_string()).unwrap_or_default()
            )?;
        }
        eprintln!("n={n} mean={:.2} mean/n={:.3}", r.mean, r.mean / n as f64);
        xs.push(n as f64);
        ys.push(r.mean);
    }
    w.flush()?;
    if xs.len() >= 2 {
        let (slope, _, r2) = pac::linear_fit(&xs, &ys);
        eprintln!("slope={slope:.3} r2={r2:.3}");
    }
    Ok(())
}

fn bench(a: &BenchArgs, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = tree_ops::random_binary_tree_with(a.n, &mut rng)?;
    let cs = (0..a.m)
        .map(|_| pac::sample_labeled_triplet(&truth, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let start = Instant::now();
    let accepted = match a.engine {
        Engine::Baseline => builder::build_binary_raw(a.n, &cs)?.is_tree(),
        Engine::Msf => {
            let opts = MsfOptions {
                backend: match a.backend {
                    Backend::Naive => BackendKind::Naive,
                    Backend::Fast => BackendKind::Fast,
                },
                check_invariants: false,
            };
            msf::build_via_msf_raw(a.n, &cs, opts)?.outcome.is_tree()
        }
        Engine::Agnostic => builder::build_agnostic_raw(a.n, &cs)?.1 == 0,
    };
    println!(
        "engine={:?} n={} m={} accepted={accepted} seconds={:.3}",
        a.engine,
        a.n,
        a.m,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
