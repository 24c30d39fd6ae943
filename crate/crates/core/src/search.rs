//! Subset searches over a [`FeatureMatrix`].
//!
//! All searches pop entries from a max-heap ordered by an accuracy upper
//! bound and stop once the best remaining bound falls below the best
//! accuracy already expanded:
//!
//! * [`exact_search`] grows every popped subset by every feature that comes
//!   after its last member in the information-gain ranking, so each subset
//!   is generated at most once and, without pruning, all `2^n - 1` are seen.
//! * [`greedy_search`] starts from the best single features and only pushes
//!   single additions or removals that strictly improve accuracy.
//! * [`hybrid_search`] is the greedy search with additions capped at the
//!   cardinality predicted by a [`CardinalityModel`].
//!
//! The heap key of an entry is `max(θ, θ̄)`: a subset's own accuracy is
//! always achievable from it, so a bound below it is replaced by it. With
//! that key the returned incumbent is always an expanded entry, which is
//! what makes the greedy results locally optimal.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bound::{accuracy_upper_bound, fano_check, BOUND_EPSILON};
use crate::cardinality::{predict_cardinality, CardinalityModel};
use crate::classifier::{CvConfig, CvEvaluator};
use crate::dataset::FeatureMatrix;
use crate::info_theory::{rank_features_with, Discretization, InfoGainCache};
use crate::{Error, FeatureSubset, Result};

/// Largest feature count the brute-force oracle accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Exact,
    Greedy,
    Hybrid,
    Oracle,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Greedy => "greedy",
            Algorithm::Hybrid => "hybrid",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Algorithm::Exact),
            "greedy" => Ok(Algorithm::Greedy),
            "hybrid" => Ok(Algorithm::Hybrid),
            "oracle" => Ok(Algorithm::Oracle),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub cv: CvConfig,
    /// Number of seed singletons for greedy and hybrid; clamped to the
    /// feature count.
    pub seed_size: usize,
    pub prune: bool,
    /// Maximum number of heap pops.
    pub max_expansions: Option<usize>,
    /// Soft wall-clock budget; makes results timing dependent when it fires.
    pub time_budget_ms: Option<u64>,
    /// The threshold is the last popped accuracy and the result is the last
    /// popped subset. Debug only.
    pub literal_updates: bool,
    pub discretization: Discretization,
    /// Which improving neighbours greedy and hybrid push on each pop.
    pub moves: MovePolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MovePolicy {
    /// The best improving addition and the best improving removal.
    #[default]
    Best,
    /// Every improving addition and removal. Exponential on noisy data.
    All,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            cv: CvConfig::default(),
            seed_size: 5,
            prune: true,
            max_expansions: None,
            time_budget_ms: None,
            literal_updates: false,
            discretization: Discretization::default(),
            moves: MovePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub subset: FeatureSubset,
    pub theta: f64,
    /// Clamped accuracy upper bound.
    pub theta_bar: f64,
}

impl SearchEntry {
    /// Heap priority and pruning value.
    pub fn key(&self) -> f64 {
        self.theta.max(self.theta_bar)
    }
}

/// A scored subset with the information gain its bound came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSubset {
    pub subset: FeatureSubset,
    pub theta: f64,
    pub ig_bits: f64,
    pub theta_bar: f64,
}

/// What a search looked at, for post-hoc checks. Not part of the JSON result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchTrace {
    /// Every subset that received both θ and θ̄, in scoring order.
    pub evaluated: Vec<EvaluatedSubset>,
    /// Entries left unexpanded when the bound stopped the search, including
    /// the entry whose pop triggered the stop.
    pub frontier: Vec<SearchEntry>,
    /// Feature order used for canonical expansion (exact search only).
    pub canonical_order: Vec<usize>,
    /// Cardinality cap applied (hybrid only).
    pub cardinality_cap: Option<usize>,
}

impl SearchTrace {
    /// `(violations, pairs)` of Fano's inequality over the scored subsets.
    pub fn fano_violations(&self, n_classes: usize) -> (usize, usize) {
        let bad = self
            .evaluated
            .iter()
            .filter(|e| !fano_check(e.theta, e.ig_bits, n_classes))
            .count();
        (bad, self.evaluated.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub algorithm: Algorithm,
    pub features: Vec<String>,
    pub indices: FeatureSubset,
    pub theta: f64,
    /// Distinct subsets whose accuracy was computed.
    pub evaluations: usize,
    /// Entries discarded by the bound.
    pub prunes: usize,
    /// Heap pops.
    pub expansions: usize,
    pub runtime_ms: f64,
    pub budget_exhausted: bool,
    #[serde(skip)]
    pub trace: SearchTrace,
}

impl SelectionResult {
    pub fn subset(&self) -> &FeatureSubset {
        &self.indices
    }
}

struct Prioritized(SearchEntry);

impl Ord for Prioritized {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        a.key()
            .total_cmp(&b.key())
            .then(a.theta_bar.total_cmp(&b.theta_bar))
            .then(a.theta.total_cmp(&b.theta))
            .then(b.subset.len().cmp(&a.subset.len()))
            .then(b.subset.cmp(&a.subset))
    }
}

impl PartialOrd for Prioritized {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Prioritized {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Prioritized {}

/// Highest θ, then smaller cardinality, then lexicographically smaller.
fn better(a: (&FeatureSubset, f64), b: (&FeatureSubset, f64)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && (a.0.len(), a.0) < (b.0.len(), b.0))
}

#[derive(Default)]
struct Incumbent(Option<(FeatureSubset, f64)>);

impl Incumbent {
    fn offer(&mut self, subset: &FeatureSubset, theta: f64) {
        let replace = match &self.0 {
            None => true,
            Some((s, t)) => better((subset, theta), (s, *t)),
        };
        if replace {
            self.0 = Some((subset.clone(), theta));
        }
    }
}

/// θ and θ̄ for subsets of one matrix, both memoized.
struct Scorer<'a> {
    cv: CvEvaluator<'a>,
    ig: InfoGainCache<'a>,
    n_classes: usize,
    scored: HashSet<FeatureSubset>,
    evaluated: Vec<EvaluatedSubset>,
}

impl<'a> Scorer<'a> {
    fn new(m: &'a FeatureMatrix, cfg: &SearchConfig) -> Result<Self> {
        Ok(Scorer {
            cv: CvEvaluator::new(m, cfg.cv)?,
            ig: InfoGainCache::new(m, cfg.discretization),
            n_classes: m.n_classes(),
            scored: HashSet::new(),
            evaluated: Vec::new(),
        })
    }

    fn theta(&mut self, subset: &FeatureSubset) -> Result<f64> {
        self.cv.accuracy(subset)
    }

    fn entry(&mut self, subset: FeatureSubset) -> Result<SearchEntry> {
        let theta = self.cv.accuracy(&subset)?;
        let ig_bits = self.ig.info_gain(&subset);
        let theta_bar = accuracy_upper_bound(ig_bits, self.n_classes)?.clamped_bound;
        if self.scored.insert(subset.clone()) {
            self.evaluated.push(EvaluatedSubset {
                subset: subset.clone(),
                theta,
                ig_bits,
                theta_bar,
            });
        }
        Ok(SearchEntry {
            subset,
            theta,
            theta_bar,
        })
    }
}

struct Budget {
    start: Instant,
    max_expansions: Option<usize>,
    time_budget_ms: Option<u64>,
}

impl Budget {
    fn new(cfg: &SearchConfig) -> Self {
        Budget {
            start: Instant::now(),
            max_expansions: cfg.max_expansions,
            time_budget_ms: cfg.time_budget_ms,
        }
    }

    fn exhausted(&self, expansions: usize) -> bool {
        self.max_expansions.is_some_and(|max| expansions >= max)
            || self
                .time_budget_ms
                .is_some_and(|ms| self.start.elapsed().as_millis() >= u128::from(ms))
    }

    fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}

/// Shared heap loop bookkeeping.
struct Run {
    heap: BinaryHeap<Prioritized>,
    incumbent: Incumbent,
    theta_min: f64,
    last_popped: Option<SearchEntry>,
    expansions: usize,
    prunes: usize,
    budget_exhausted: bool,
    frontier: Vec<SearchEntry>,
}

enum Step {
    Expand(SearchEntry),
    Stop,
}

impl Run {
    fn new() -> Self {
        Run {
            heap: BinaryHeap::new(),
            incumbent: Incumbent::default(),
            theta_min: 0.0,
            last_popped: None,
            expansions: 0,
            prunes: 0,
            budget_exhausted: false,
            frontier: Vec::new(),
        }
    }

    fn push(&mut self, e: SearchEntry) {
        self.incumbent.offer(&e.subset, e.theta);
        self.heap.push(Prioritized(e));
    }

    fn next(&mut self, cfg: &SearchConfig, budget: &Budget) -> Step {
        if self.heap.is_empty() {
            return Step::Stop;
        }
        if budget.exhausted(self.expansions) {
            self.budget_exhausted = true;
            return Step::Stop;
        }
        let Prioritized(e) = self.heap.pop().expect("non-empty heap");
        self.expansions += 1;
        if cfg.prune && e.key() < self.theta_min - BOUND_EPSILON {
            self.prunes = 1 + self.heap.len();
            self.frontier.push(e.clone());
            let rest = std::mem::take(&mut self.heap).into_sorted_vec();
            self.frontier.extend(rest.into_iter().rev().map(|p| p.0));
            self.last_popped = Some(e);
            return Step::Stop;
        }
        Step::Expand(e)
    }

    fn expanded(&mut self, e: SearchEntry, cfg: &SearchConfig) {
        self.theta_min = if cfg.literal_updates {
            e.theta
        } else {
            self.theta_min.max(e.theta)
        };
        self.last_popped = Some(e);
    }

    fn finish(
        self,
        m: &FeatureMatrix,
        algorithm: Algorithm,
        scorer: Scorer<'_>,
        cfg: &SearchConfig,
        budget: &Budget,
        mut trace: SearchTrace,
    ) -> SelectionResult {
        let (indices, theta) = match (&self.last_popped, cfg.literal_updates) {
            (Some(e), true) => (e.subset.clone(), e.theta),
            _ => self
                .incumbent
                .0
                .expect("searches start from at least one subset"),
        };
        trace.evaluated = scorer.evaluated;
        trace.frontier = self.frontier;
        SelectionResult {
            algorithm,
            features: indices
                .iter()
                .map(|f| m.feature_names()[f].clone())
                .collect(),
            indices,
            theta,
            evaluations: scorer.cv.evaluations(),
            prunes: self.prunes,
            expansions: self.expansions,
            runtime_ms: budget.elapsed_ms(),
            budget_exhausted: self.budget_exhausted,
            trace,
        }
    }
}

fn check_matrix(m: &FeatureMatrix) -> Result<()> {
    if m.n_features() == 0 {
        return Err(Error::InvalidMatrix("matrix has no features".into()));
    }
    Ok(())
}

/// Branch-and-bound over all subsets.
///
/// Features are visited in information-gain rank order; a popped subset is
/// grown with every feature ranked after its lowest-ranked member. The
/// result is the best subset ever scored.
pub fn exact_search(m: &FeatureMatrix, cfg: &SearchConfig) -> Result<SelectionResult> {
    check_matrix(m)?;
    let budget = Budget::new(cfg);
    let mut scorer = Scorer::new(m, cfg)?;
    let order = rank_features_with(m, cfg.discretization).order;
    let mut position = vec![0; m.n_features()];
    for (p, &f) in order.iter().enumerate() {
        position[f] = p;
    }

    let mut run = Run::new();
    for &f in &order {
        let e = scorer.entry(FeatureSubset::singleton(f))?;
        run.push(e);
    }
    while let Step::Expand(e) = run.next(cfg, &budget) {
        let last = e.subset.iter().map(|f| position[f]).max().unwrap_or(0);
        for &f in &order[last + 1..] {
            let child = scorer.entry(e.subset.with(f))?;
            run.push(child);
        }
        run.expanded(e, cfg);
    }
    let trace = SearchTrace {
        canonical_order: order,
        ..SearchTrace::default()
    };
    Ok(run.finish(m, Algorithm::Exact, scorer, cfg, &budget, trace))
}

/// Add/remove local search from the best single features.
pub fn greedy_search(m: &FeatureMatrix, cfg: &SearchConfig) -> Result<SelectionResult> {
    local_search(m, cfg, None, Algorithm::Greedy)
}

/// Greedy search with additions capped at the model's predicted cardinality.
pub fn hybrid_search(
    m: &FeatureMatrix,
    model: &CardinalityModel,
    cfg: &SearchConfig,
) -> Result<SelectionResult> {
    let cap = predict_cardinality(model, m)?;
    hybrid_search_with_cap(m, cap, cfg)
}

/// [`hybrid_search`] with an explicit cap instead of a model prediction.
pub fn hybrid_search_with_cap(
    m: &FeatureMatrix,
    cap: usize,
    cfg: &SearchConfig,
) -> Result<SelectionResult> {
    local_search(m, cfg, Some(cap.max(1)), Algorithm::Hybrid)
}

fn local_search(
    m: &FeatureMatrix,
    cfg: &SearchConfig,
    cap: Option<usize>,
    algorithm: Algorithm,
) -> Result<SelectionResult> {
    check_matrix(m)?;
    if cfg.seed_size == 0 {
        return Err(Error::InvalidSearchConfig(
            "seed size must be positive".into(),
        ));
    }
    let budget = Budget::new(cfg);
    let mut scorer = Scorer::new(m, cfg)?;
    let n = m.n_features();

    let mut singles = (0..n)
        .map(|f| Ok((f, scorer.theta(&FeatureSubset::singleton(f))?)))
        .collect::<Result<Vec<(usize, f64)>>>()?;
    singles.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut run = Run::new();
    let mut visited: HashSet<FeatureSubset> = HashSet::new();
    for &(f, _) in singles.iter().take(cfg.seed_size.min(n)) {
        let s = FeatureSubset::singleton(f);
        visited.insert(s.clone());
        let e = scorer.entry(s)?;
        run.push(e);
    }

    while let Step::Expand(e) = run.next(cfg, &budget) {
        let mut moves: Vec<FeatureSubset> = Vec::new();
        if cap.is_none_or(|c| e.subset.len() < c) {
            moves.extend(
                (0..n)
                    .filter(|&f| !e.subset.contains(f))
                    .map(|f| e.subset.with(f)),
            );
        }
        if e.subset.len() >= 2 {
            moves.extend(e.subset.iter().map(|f| e.subset.without(f)));
        }
        let split = moves
            .iter()
            .take_while(|c| c.len() > e.subset.len())
            .count();
        let (grow, shrink) = moves.split_at(split);
        for group in [grow, shrink] {
            let mut improving = Vec::new();
            for child in group {
                if visited.contains(child) {
                    continue;
                }
                let theta = scorer.theta(child)?;
                if theta > e.theta {
                    improving.push((child, theta));
                }
            }
            if cfg.moves == MovePolicy::Best {
                improving = improving
                    .into_iter()
                    .reduce(|a, b| if better((b.0, b.1), (a.0, a.1)) { b } else { a })
                    .into_iter()
                    .collect();
            }
            for (child, _) in improving {
                visited.insert(child.clone());
                let entry = scorer.entry(child.clone())?;
                run.push(entry);
            }
        }
        run.expanded(e, cfg);
    }
    let trace = SearchTrace {
        cardinality_cap: cap,
        ..SearchTrace::default()
    };
    Ok(run.finish(m, algorithm, scorer, cfg, &budget, trace))
}

/// Scores every non-empty subset; the reference answer for small matrices.
pub fn brute_force_oracle(
    m: &FeatureMatrix,
    max_features: usize,
    cfg: &SearchConfig,
) -> Result<SelectionResult> {
    check_matrix(m)?;
    let n = m.n_features();
    if n > max_features || n >= 64 {
        return Err(Error::TooManyFeatures {
            n_features: n,
            max: max_features.min(63),
        });
    }
    let start = Instant::now();
    let mut cv = CvEvaluator::new(m, cfg.cv)?;
    let mut best = Incumbent::default();
    for mask in 1u64..(1 << n) {
        let s = FeatureSubset::from_mask(mask);
        let theta = cv.accuracy(&s)?;
        best.offer(&s, theta);
    }
    let (indices, theta) = best.0.expect("at least one feature");
    Ok(SelectionResult {
        algorithm: Algorithm::Oracle,
        features: indices
            .iter()
            .map(|f| m.feature_names()[f].clone())
            .collect(),
        indices,
        theta,
        evaluations: cv.evaluations(),
        prunes: 0,
        expansions: 0,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        budget_exhausted: false,
        trace: SearchTrace::default(),
    })
}

/// True when no single removal (to a non-empty set) and no single addition
/// strictly improves accuracy.
pub fn is_local_optimum(m: &FeatureMatrix, subset: &FeatureSubset, cv: &CvConfig) -> Result<bool> {
    is_local_optimum_capped(m, subset, cv, None)
}

/// Like [`is_local_optimum`], but additions are only considered while the
/// subset is smaller than `cap`, matching the hybrid search's move set.
pub fn is_local_optimum_capped(
    m: &FeatureMatrix,
    subset: &FeatureSubset,
    cv: &CvConfig,
    cap: Option<usize>,
) -> Result<bool> {
    subset.validate(m.n_features())?;
    let mut eval = CvEvaluator::new(m, *cv)?;
    local_optimum_with(&mut eval, subset, cap)
}

pub fn local_optimum_with(
    eval: &mut CvEvaluator<'_>,
    subset: &FeatureSubset,
    cap: Option<usize>,
) -> Result<bool> {
    let n = eval.matrix().n_features();
    let theta = eval.accuracy(subset)?;
    if subset.len() >= 2 {
        for f in subset.iter() {
            if eval.accuracy(&subset.without(f))? > theta {
                return Ok(false);
            }
        }
    }
    if cap.is_none_or(|c| subset.len() < c) {
        for f in (0..n).filter(|&f| !subset.contains(f)) {
            if eval.accuracy(&subset.with(f))? > theta {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_generate, SynthSpec};

    fn seed7() -> FeatureMatrix {
        synth_generate(&SynthSpec::default()).unwrap()
    }

    fn one_feature() -> FeatureMatrix {
        let labels: Vec<usize> = (0..20).map(|r| r % 2).collect();
        let rows = labels
            .iter()
            .map(|&y| vec![y as u32 * 2 + (y as u32 % 3)])
            .collect();
        FeatureMatrix::from_dense_labels(vec!["only".into()], rows, labels).unwrap()
    }

    #[test]
    fn single_feature_matrix() {
        let m = one_feature();
        let cfg = SearchConfig::default();
        for r in [
            exact_search(&m, &cfg).unwrap(),
            greedy_search(&m, &cfg).unwrap(),
            hybrid_search_with_cap(&m, 3, &cfg).unwrap(),
            brute_force_oracle(&m, 12, &cfg).unwrap(),
        ] {
            assert_eq!(r.indices, FeatureSubset::singleton(0));
            assert_eq!(r.evaluations, 1);
        }
    }

    #[test]
    fn heap_order_tiebreaks() {
        let e = |s: &[usize], theta: f64, theta_bar: f64| {
            Prioritized(SearchEntry {
                subset: FeatureSubset::new(s.iter().copied()),
                theta,
                theta_bar,
            })
        };
        assert!(e(&[0], 0.5, 0.9) > e(&[1], 0.6, 0.8));
        assert!(e(&[0], 0.6, 0.9) > e(&[1], 0.5, 0.9));
        assert!(e(&[3], 0.5, 0.9) > e(&[0, 1], 0.5, 0.9));
        assert!(e(&[0, 5], 0.5, 0.9) > e(&[1, 2], 0.5, 0.9));
        // A bound below the entry's own accuracy is lifted to it.
        assert!(e(&[0], 0.95, 0.4) > e(&[1], 0.5, 0.9));
    }

    #[test]
    fn unpruned_exact_scores_everything() {
        let m = seed7();
        let cfg = SearchConfig {
            prune: false,
            ..SearchConfig::default()
        };
        let r = exact_search(&m, &cfg).unwrap();
        assert_eq!(r.evaluations, 1023);
        assert_eq!(r.trace.evaluated.len(), 1023);
        assert_eq!(r.expansions, 1023);
        assert_eq!(r.prunes, 0);
    }

    #[test]
    fn budget_returns_incumbent() {
        let m = seed7();
        let cfg = SearchConfig {
            max_expansions: Some(3),
            ..SearchConfig::default()
        };
        let r = exact_search(&m, &cfg).unwrap();
        assert!(r.budget_exhausted);
        assert_eq!(r.expansions, 3);
        let best = r
            .trace
            .evaluated
            .iter()
            .map(|e| e.theta)
            .fold(0.0, f64::max);
        assert_eq!(r.theta, best);
    }

    #[test]
    fn literal_variant_runs() {
        let m = seed7();
        let cfg = SearchConfig {
            literal_updates: true,
            ..SearchConfig::default()
        };
        let r = exact_search(&m, &cfg).unwrap();
        assert!(!r.indices.is_empty());
        let incumbent = exact_search(&m, &SearchConfig::default()).unwrap();
        assert!(incumbent.theta >= r.theta);
    }

    #[test]
    fn oracle_counts_and_cap() {
        let m = seed7();
        let two = m.select_rows(&(0..m.n_rows()).collect::<Vec<_>>()).unwrap();
        let names = two.feature_names()[..2].to_vec();
        let rows = two.rows().iter().map(|r| r[..2].to_vec()).collect();
        let small = FeatureMatrix::new(names, rows, two.labels().to_vec(), 4).unwrap();
        let r = brute_force_oracle(&small, 12, &SearchConfig::default()).unwrap();
        assert_eq!(r.evaluations, 3);
        assert!(matches!(
            brute_force_oracle(&m, 9, &SearchConfig::default()),
            Err(Error::TooManyFeatures {
                n_features: 10,
                max: 9
            })
        ));
    }

    #[test]
    fn zero_seed_size_is_rejected() {
        let cfg = SearchConfig {
            seed_size: 0,
            ..SearchConfig::default()
        };
        assert!(greedy_search(&seed7(), &cfg).is_err());
    }
}
