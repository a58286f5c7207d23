//! Sampling experiments: learning curves from labeled triplets and the
//! contradiction threshold of distance-labeled data.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::builder;
use crate::constraint::{Constraint, Triplet};
use crate::error::{Error, Result};
use crate::plot::{self, Series};
use crate::points::PointSet;
use crate::tree::HierarchicalTree;
use crate::tree_ops;

pub const TEST_TRIPLETS: usize = 2000;
pub const DEFAULT_DIMENSION: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Realizable,
    AgnosticVectors,
    AgnosticFile,
    Nonbinary,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Realizable => "realizable",
            Mode::AgnosticVectors => "agnostic-vectors",
            Mode::AgnosticFile => "agnostic-file",
            Mode::Nonbinary => "nonbinary",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "realizable" => Ok(Mode::Realizable),
            "agnostic-vectors" | "agnostic" => Ok(Mode::AgnosticVectors),
            "agnostic-file" => Ok(Mode::AgnosticFile),
            "nonbinary" => Ok(Mode::Nonbinary),
            _ => Err(Error::Invalid(format!("unknown mode {s:?}"))),
        }
    }
}

/// How feature vectors are produced in the vector modes.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorSource {
    /// Independent uniform coordinates in `[0, 1)`.
    Uniform,
    /// Leaves of a balanced binary hierarchy with Gaussian offsets shrinking by level.
    Hierarchical,
    /// Rows of a CSV file.
    Given(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: usize,
    /// Training samples per trial are `ceil(k_ratio * n)`.
    pub k_ratios: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub dimension: usize,
    pub vectors: VectorSource,
    /// Largest child count of synthetic multiway trees.
    pub max_children: usize,
    pub test_size: usize,
    /// Records wall time per trial; zero otherwise so output is reproducible.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, n: usize, k_ratios: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            mode,
            n,
            k_ratios,
            trials,
            seed,
            dimension: DEFAULT_DIMENSION,
            vectors: VectorSource::Uniform,
            max_children: 4,
            test_size: TEST_TRIPLETS,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        if self.k_ratios.is_empty() || self.k_ratios.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::Invalid("k ratios must be positive".into()));
        }
        if self.n < 3 {
            return Err(Error::TooFewPoints {
                needed: 3,
                got: self.n,
            });
        }
        if let VectorSource::Given(v) = &self.vectors {
            if v.len() != self.n {
                return Err(Error::Invalid(format!(
                    "{} vectors for n = {}",
                    v.len(),
                    self.n
                )));
            }
        }
        Ok(())
    }

    fn samples(&self, k_ratio: f64) -> usize {
        (k_ratio * self.n as f64).ceil() as usize
    }
}

/// Generator for one trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ trial as u64)
}

pub fn sample_triplet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Triplet {
    let v = rand::seq::index::sample(rng, n, 3);
    Triplet::new(v.index(0), v.index(1), v.index(2)).expect("distinct sample")
}

/// Uniform 3-subset of the leaves, labeled as `t` labels it.
pub fn sample_labeled_triplet<R: Rng + ?Sized>(
    t: &HierarchicalTree,
    rng: &mut R,
) -> Result<Constraint> {
    let pts = t.points();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: pts.len(),
        });
    }
    let v = rand::seq::index::sample(rng, pts.len(), 3);
    tree_ops::classify(
        t,
        Triplet::new(pts[v.index(0)], pts[v.index(1)], pts[v.index(2)])?,
    )
}

/// Test triplets: `size` uniform draws, or every triplet when there are fewer.
pub fn test_triplets<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Vec<Triplet> {
    let total = n * (n - 1) * (n - 2) / 6;
    if total <= size {
        let pts: Vec<usize> = (0..n).collect();
        tree_ops::triplets_of(&pts).collect()
    } else {
        (0..size).map(|_| sample_triplet(n, rng)).collect()
    }
}

/// Labels `(a,b,c)` by the closest pair in Euclidean distance.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceLabeler {
    vectors: Vec<Vec<f64>>,
}

impl DistanceLabeler {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(d) = vectors.first().map(Vec::len) {
            if vectors.iter().any(|v| v.len() != d) {
                return Err(Error::Invalid("vectors of mixed dimension".into()));
            }
        }
        Ok(Self { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    fn dist2(&self, a: usize, b: usize) -> f64 {
        self.vectors[a]
            .iter()
            .zip(&self.vectors[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    }

    /// `[a,b|c]` for the pair at minimum distance; equal distances go to the
    /// lexicographically smallest pair.
    pub fn label(&self, t: Triplet) -> Constraint {
        let [a, b, c] = t.points();
        let cands = [
            (self.dist2(a, b), a, b, c),
            (self.dist2(a, c), a, c, b),
            (self.dist2(b, c), b, c, a),
        ];
        let mut best = cands[0];
        for cand in &cands[1..] {
            if cand.0 < best.0 {
                best = *cand;
            }
        }
        Constraint::split_pair(best.1, best.2, best.3).expect("distinct points")
    }
}

pub fn uniform_vectors<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// Leaves of a balanced binary hierarchy: every node adds a Gaussian offset
/// whose scale halves with each level.
pub fn hierarchical_vectors<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut levels = 0i32;
    while 1usize << levels < n {
        levels += 1;
    }
    let mut frontier = vec![vec![0.0; dim]];
    for level in 0..levels {
        let normal = Normal::new(0.0, 0.5f64.powi(level)).expect("positive scale");
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for v in &frontier {
            for _ in 0..2 {
                next.push(
                    v.iter()
                        .map(|x| x + normal.sample(rng))
                        .collect::<Vec<f64>>(),
                );
            }
        }
        frontier = next;
    }
    frontier.truncate(n);
    frontier
}

/// Reads one vector per row; a non-numeric first column is taken as the point name.
pub fn read_vectors<R: Read>(input: R) -> Result<(PointSet, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut points = PointSet::new();
    let mut vectors = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let mut fields: Vec<&str> = rec.iter().collect();
        let name = match fields.first().map(|f| f.parse::<f64>()) {
            Some(Err(_)) => Some(fields.remove(0).to_string()),
            _ => None,
        };
        let v = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(line, format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if v.is_empty() {
            return Err(Error::parse(line, "row has no numeric columns"));
        }
        if let Some(first) = vectors.first().map(Vec::len) {
            if first != v.len() {
                return Err(Error::parse(
                    line,
                    format!("expected {first} columns, found {}", v.len()),
                ));
            }
        }
        let name = name.unwrap_or_else(|| format!("p{}", vectors.len()));
        points
            .intern(&name)
            .map_err(|e| Error::parse(line, e.to_string()))?;
        if points.len() != vectors.len() + 1 {
            return Err(Error::parse(line, format!("duplicate point name {name:?}")));
        }
        vectors.push(v);
    }
    if vectors.is_empty() {
        return Err(Error::Empty);
    }
    Ok((points, vectors))
}

/// One trial at one sample ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub mode: Mode,
    pub n: usize,
    pub k_ratio: f64,
    pub trial: usize,
    pub error: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub mode: Mode,
    pub n: usize,
    pub k_ratio: f64,
    pub trials: usize,
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
    /// `k_ratio * mean`.
    pub product: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<Aggregate>,
}

impl ErrorReport {
    pub fn aggregate(&self, k_ratio: f64) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.k_ratio == k_ratio)
    }
}

/// Linearly interpolated quantile of sorted values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn aggregate(mode: Mode, n: usize, k_ratios: &[f64], rows: &[TrialResult]) -> Vec<Aggregate> {
    k_ratios
        .iter()
        .map(|&k| {
            let mut errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.k_ratio == k)
                .map(|r| r.error)
                .collect();
            errs.sort_by(f64::total_cmp);
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            Aggregate {
                mode,
                n,
                k_ratio: k,
                trials: errs.len(),
                mean,
                q10: quantile(&errs, 0.1),
                q90: quantile(&errs, 0.9),
                product: k * mean,
            }
        })
        .collect()
}

/// Runs `trial` for every (ratio, trial) pair in parallel and aggregates.
fn run_grid<F>(cfg: &ExperimentConfig, trial: F) -> Result<ErrorReport>
where
    F: Fn(f64, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.k_ratios.len())
        .flat_map(|ki| (0..cfg.trials).map(move |t| (ki, t)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(ki, t)| {
            let start = Instant::now();
            let mut rng = trial_rng(cfg.seed, t);
            let error = trial(cfg.k_ratios[ki], &mut rng)?;
            let seconds = if cfg.timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            Ok((
                ki,
                TrialResult {
                    mode: cfg.mode,
                    n: cfg.n,
                    k_ratio: cfg.k_ratios[ki],
                    trial: t,
                    error,
                    seconds,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|(ki, r)| (*ki, r.trial));
    let rows: Vec<TrialResult> = rows.into_iter().map(|(_, r)| r).collect();
    Ok(ErrorReport {
        aggregates: aggregate(cfg.mode, cfg.n, &cfg.k_ratios, &rows),
        trials: rows,
    })
}

fn misclassified(
    t: &HierarchicalTree,
    truth: impl Fn(Triplet) -> Result<Constraint>,
    tests: &[Triplet],
) -> Result<f64> {
    let mut wrong = 0;
    for &tr in tests {
        if tree_ops::classify(t, tr)? != truth(tr)? {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / tests.len() as f64)
}

/// Random binary ground truth, consistent construction, binarized, scored on fresh triplets.
pub fn run_realizable(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    let n = cfg.n;
    run_grid(cfg, |k, rng| {
        let truth = tree_ops::random_binary_tree_with(n, rng)?;
        let train: Vec<Constraint> = (0..cfg.samples(k))
            .map(|_| sample_labeled_triplet(&truth, rng))
            .collect::<Result<_>>()?;
        let built = builder::build_binary_raw(n, &train)?;
        let tree = built.tree().ok_or_else(|| {
            Error::Invalid("a realizable sample was reported contradictory".into())
        })?;
        let tree = tree_ops::binarize_with(tree, rng);
        let tests = test_triplets(n, cfg.test_size, rng);
        misclassified(&tree, |tr| tree_ops::classify(&truth, tr), &tests)
    })
}

fn vectors_for<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Vec<Vec<f64>> {
    match &cfg.vectors {
        VectorSource::Uniform => uniform_vectors(cfg.n, cfg.dimension, rng),
        VectorSource::Hierarchical => hierarchical_vectors(cfg.n, cfg.dimension, rng),
        VectorSource::Given(v) => v.clone(),
    }
}

/// Distance-labeled triplets, agnostic construction, scored against the labeler.
pub fn run_agnostic(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    let n = cfg.n;
    run_grid(cfg, |k, rng| {
        let labeler = DistanceLabeler::new(vectors_for(cfg, rng))?;
        let train: Vec<Constraint> = (0..cfg.samples(k))
            .map(|_| labeler.label(sample_triplet(n, rng)))
            .collect();
        let (tree, _) = builder::build_agnostic_raw(n, &train)?;
        let tests = test_triplets(n, cfg.test_size, rng);
        misclassified(&tree, |tr| Ok(labeler.label(tr)), &tests)
    })
}

/// Multiway ground truth, labels may be three-way, unconstrained triplets predicted three-way.
pub fn run_nonbinary(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    let n = cfg.n;
    run_grid(cfg, |k, rng| {
        let truth = tree_ops::random_multiway_tree(n, cfg.max_children, rng)?;
        run_nonbinary_trial(&truth, cfg.samples(k), cfg.test_size, rng)
    })
}

/// One non-binary trial against a given ground truth.
pub fn run_nonbinary_trial<R: Rng + ?Sized>(
    truth: &HierarchicalTree,
    samples: usize,
    test_size: usize,
    rng: &mut R,
) -> Result<f64> {
    let n = truth.leaf_count();
    let train: Vec<Constraint> = (0..samples)
        .map(|_| sample_labeled_triplet(truth, rng))
        .collect::<Result<_>>()?;
    let built = builder::build_nonbinary_raw(n, &train)?;
    let tree = built
        .tree()
        .ok_or_else(|| Error::Invalid("a realizable sample was reported contradictory".into()))?;
    let tests = test_triplets(n, test_size, rng);
    misclassified(tree, |tr| tree_ops::classify(truth, tr), &tests)
}

pub fn run(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    match cfg.mode {
        Mode::Realizable => run_realizable(cfg),
        Mode::AgnosticVectors | Mode::AgnosticFile => run_agnostic(cfg),
        Mode::Nonbinary => run_nonbinary(cfg),
    }
}

/// Number of distinct triplets, drawn in random order, after which the labels
/// first become contradictory; `None` when the whole pool stays satisfiable.
pub fn first_contradiction<R, F>(n: usize, label: F, rng: &mut R) -> Result<Option<usize>>
where
    R: Rng + ?Sized,
    F: Fn(Triplet) -> Constraint,
{
    let pool = n * (n - 1) * (n - 2) / 6;
    let mut order: Vec<Triplet> = Vec::new();
    let mut seen = HashSet::new();
    let mut all: Option<Vec<Triplet>> = None;
    let mut draw = |order: &mut Vec<Triplet>, upto: usize, rng: &mut R| {
        if upto * 4 > pool && all.is_none() {
            let pts: Vec<usize> = (0..n).collect();
            let mut rest: Vec<Triplet> = tree_ops::triplets_of(&pts)
                .filter(|t| !seen.contains(t))
                .collect();
            rest.shuffle(rng);
            all = Some(rest);
        }
        while order.len() < upto {
            let t = match &mut all {
                Some(rest) => rest.pop().expect("pool not exhausted"),
                None => loop {
                    let t = sample_triplet(n, rng);
                    if seen.insert(t) {
                        break t;
                    }
                },
            };
            order.push(t);
        }
    };
    let sat = |order: &[Triplet], m: usize| -> Result<bool> {
        let cs: Vec<Constraint> = order[..m].iter().map(|&t| label(t)).collect();
        Ok(builder::build_binary_raw(n, &cs)?.is_tree())
    };
    let mut hi = 1;
    loop {
        let m = hi.min(pool);
        draw(&mut order, m, rng);
        if !sat(&order, m)? {
            break;
        }
        if m == pool {
            return Ok(None);
        }
        hi *= 2;
    }
    let (mut lo, mut hi) = (hi / 2, hi.min(pool));
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if sat(&order, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(hi))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdReport {
    pub n: usize,
    /// Per trial, the sample count at the first contradiction.
    pub counts: Vec<Option<usize>>,
    /// Mean over trials that reached a contradiction.
    pub mean: f64,
}

/// First-contradiction sample counts for distance-labeled vectors.
pub fn contradiction_threshold(cfg: &ExperimentConfig) -> Result<ThresholdReport> {
    cfg.validate()?;
    let counts = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let labeler = DistanceLabeler::new(vectors_for(cfg, &mut rng))?;
            first_contradiction(cfg.n, |tr| labeler.label(tr), &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let hits: Vec<f64> = counts.iter().flatten().map(|&c| c as f64).collect();
    let mean = if hits.is_empty() {
        f64::NAN
    } else {
        hits.iter().sum::<f64>() / hits.len() as f64
    };
    Ok(ThresholdReport {
        n: cfg.n,
        counts,
        mean,
    })
}

/// Least-squares slope, intercept and coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, my - slope * mx, r2)
}

fn io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Per-trial CSV: `mode,n,k_ratio,trial,error,seconds`.
pub fn write_trials_csv<W: Write>(rows: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode", "n", "k_ratio", "trial", "error", "seconds"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.mode.to_string(),
            r.n.to_string(),
            r.k_ratio.to_string(),
            r.trial.to_string(),
            format!("{:.6}", r.error),
            format!("{:.6}", r.seconds),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregate CSV: `mode,n,k_ratio,trials,mean,q10,q90,product`.
pub fn write_aggregate_csv<W: Write>(rows: &[Aggregate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode", "n", "k_ratio", "trials", "mean", "q10", "q90", "product",
    ])
    .map_err(io)?;
    for a in rows {
        w.write_record([
            a.mode.to_string(),
            a.n.to_string(),
            a.k_ratio.to_string(),
            a.trials.to_string(),
            format!("{:.6}", a.mean),
            format!("{:.6}", a.q10),
            format!("{:.6}", a.q90),
            format!("{:.6}", a.product),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Chart of mean error and `k_ratio * mean` against the ratio, one pair of lines per `n`.
pub fn report_svg(reports: &[ErrorReport]) -> String {
    let mut series = Vec::new();
    for r in reports {
        let Some(first) = r.aggregates.first() else {
            continue;
        };
        series.push(Series {
            name: format!("error n={}", first.n),
            points: r.aggregates.iter().map(|a| (a.k_ratio, a.mean)).collect(),
        });
        series.push(Series {
            name: format!("k*error n={}", first.n),
            points: r
                .aggregates
                .iter()
                .map(|a| (a.k_ratio, a.product))
                .collect(),
        });
    }
    let mode = reports
        .iter()
        .find_map(|r| r.aggregates.first().map(|a| a.mode.as_str()))
        .unwrap_or("");
    plot::line_chart(
        &format!("{mode} test error"),
        "samples / n",
        "error",
        &series,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_leaf_tree_always_gives_its_constraint() {
        let t = tree_ops::ladder(&[0, 1, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(
                sample_labeled_triplet(&t, &mut rng).unwrap(),
                Constraint::split_pair(1, 2, 0).unwrap()
            );
        }
    }

    #[test]
    fn subsets_are_uniform() {
        let t = tree_ops::random_binary_tree(4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 60_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            let c = sample_labeled_triplet(&t, &mut rng).unwrap();
            assert!(tree_ops::satisfies(&t, &c).unwrap());
            *counts.entry(c.triplet().unwrap()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        let expect = draws as f64 / 4.0;
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        assert!(chi2 < 16.27, "chi-square {chi2}");
        for &c in counts.values() {
            assert!((c as f64 - expect).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn distance_labels() {
        let l = DistanceLabeler::new(vec![vec![0.0], vec![1.0], vec![10.0]]).unwrap();
        assert_eq!(
            l.label(Triplet::new(0, 1, 2).unwrap()),
            Constraint::split_pair(0, 1, 2).unwrap()
        );
        let h = 3f64.sqrt() / 2.0;
        let eq = DistanceLabeler::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]).unwrap();
        let c = eq.label(Triplet::new(2, 0, 1).unwrap());
        assert!(c.generated_edge().is_some());
    }

    #[test]
    fn equal_distances_pick_first_pair() {
        let l = DistanceLabeler::new(vec![vec![0.0], vec![2.0], vec![1.0]]).unwrap();
        assert_eq!(
            l.label(Triplet::new(0, 1, 2).unwrap()),
            Constraint::split_pair(0, 2, 1).unwrap()
        );
        let sq =
            DistanceLabeler::new(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            sq.label(Triplet::new(0, 1, 2).unwrap()),
            Constraint::split_pair(0, 1, 2).unwrap()
        );
    }

    #[test]
    fn labeler_is_permutation_covariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = uniform_vectors(12, 5, &mut rng);
        let perm: Vec<usize> = (0..12).rev().collect();
        let mut pv = vec![Vec::new(); 12];
        for (i, &p) in perm.iter().enumerate() {
            pv[p] = v[i].clone();
        }
        let a = DistanceLabeler::new(v).unwrap();
        let b = DistanceLabeler::new(pv).unwrap();
        for _ in 0..200 {
            let t = sample_triplet(12, &mut rng);
            let [x, y, z] = t.points();
            let mapped = Triplet::new(perm[x], perm[y], perm[z]).unwrap();
            assert_eq!(a.label(t).map_points(|p| perm[p]).unwrap(), b.label(mapped));
        }
    }

    #[test]
    fn vector_file_parsing() {
        let (pts, v) = read_vectors("a,1,2\nb,3,4\n".as_bytes()).unwrap();
        assert_eq!(pts.labels(), ["a", "b"]);
        assert_eq!(v, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let (pts, v) = read_vectors("1,2\n3,4\n5,6\n".as_bytes()).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(v[2], vec![5.0, 6.0]);
        assert!(matches!(
            read_vectors("1,2\n3\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_vectors("1,x\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(read_vectors("".as_bytes()).is_err());
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert!((quantile(&v, 0.1) - 1.4).abs() < 1e-12);
        assert_eq!(quantile(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn full_information_gives_zero_error() {
        let mut cfg = ExperimentConfig::new(Mode::Realizable, 6, vec![1.0], 3, 1);
        cfg.test_size = 100;
        let truth = tree_ops::random_binary_tree(6, 2).unwrap();
        let all = tree_ops::triplet_constraints(&truth).unwrap();
        let built = builder::build_binary_raw(6, &all).unwrap();
        let tests = test_triplets(6, cfg.test_size, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(tests.len(), 20);
        assert_eq!(
            misclassified(
                built.tree().unwrap(),
                |t| tree_ops::classify(&truth, t),
                &tests
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn realizable_runs_are_reproducible() {
        let cfg = ExperimentConfig::new(Mode::Realizable, 40, vec![1.0, 4.0], 4, 7);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials.len(), 8);
        assert!(a
            .trials
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.error) && r.seconds == 0.0));
        let a1 = a.aggregate(1.0).unwrap().mean;
        let a4 = a.aggregate(4.0).unwrap().mean;
        assert!(a4 < a1);
    }

    #[test]
    fn star_tree_is_learned_exactly() {
        let mut b = crate::tree::TreeBuilder::new();
        let leaves: Vec<_> = (0..20).map(|p| b.leaf(p)).collect();
        let root = b.join(&leaves);
        let star = b.finish_auto(root).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for samples in [0, 10, 40] {
            assert_eq!(
                run_nonbinary_trial(&star, samples, 500, &mut rng).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn realizable_stream_never_contradicts() {
        let truth = tree_ops::random_binary_tree(9, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r =
            first_contradiction(9, |t| tree_ops::classify(&truth, t).unwrap(), &mut rng).unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn first_contradiction_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = uniform_vectors(15, 10, &mut rng);
        let l = DistanceLabeler::new(v).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(11);
        let m = first_contradiction(15, |t| l.label(t), &mut r1)
            .unwrap()
            .unwrap();
        assert!(m >= 3);
        let mut r2 = ChaCha8Rng::seed_from_u64(11);
        let again = first_contradiction(15, |t| l.label(t), &mut r2).unwrap();
        assert_eq!(again, Some(m));
    }

    #[test]
    fn single_triplet_train_reproduced() {
        let l = DistanceLabeler::new(vec![vec![0.0], vec![1.0], vec![5.0]]).unwrap();
        let t = Triplet::new(0, 1, 2).unwrap();
        let (tree, bad) = builder::build_agnostic_raw(3, &[l.label(t)]).unwrap();
        assert_eq!(bad, 0);
        assert_eq!(tree_ops::classify(&tree, t).unwrap(), l.label(t));
    }

    #[test]
    fn csv_outputs() {
        let cfg = ExperimentConfig::new(Mode::AgnosticVectors, 12, vec![2.0], 2, 3);
        let r = run(&cfg).unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&r.trials, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "mode,n,k_ratio,trial,error,seconds"
        );
        assert_eq!(text.lines().count(), 3);
        let mut buf = Vec::new();
        write_aggregate_csv(&r.aggregates, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("mode,n,k_ratio,trials,mean,q10,q90,product"));
        assert!(report_svg(&[r]).contains("<polyline"));
    }

    #[test]
    fn fit_on_a_line() {
        let (s, c, r2) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((s - 2.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
