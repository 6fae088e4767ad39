//! Exhaustive ground truth on small instances.
//!
//! Enumerates every support (up to a cardinality cap), solves each
//! least-squares subproblem with the independent QR route in
//! [`crate::lstsq`], and derives:
//!
//! - the constrained path: for each `k`, all minimizers of `E(S)` subject to
//!   `|S| ≤ k` (ties kept within tolerance);
//! - the exact curve `λ ↦ min_S E(S) + λ|S|`, built by gift-wrapping the
//!   per-cardinality minima (a route deliberately different from the
//!   incremental polygon descent it validates);
//! - the penalized path: the solution set on every open interval between
//!   curve vertices, plus the solution sets at the vertices themselves.
//!
//! The structural checks verify that the penalized solution set is piecewise
//! constant, satisfies the vertex inclusions, and is contained in the
//! constrained path.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dict::{Dictionary, Observation, Support};
use crate::lstsq;

/// Upper bound on the number of enumerated subsets.
const MAX_SUBSETS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    /// The instance is too large to enumerate: `n > 14` needs an explicit
    /// cardinality cap, and the subset count must stay below `2^20`.
    TooLarge { n: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { n } => write!(f, "instance too large to enumerate (n={n})"),
        }
    }
}

/// One enumerated support with its exact least-squares error.
#[derive(Clone, Debug)]
pub struct SubsetRecord {
    pub support: Support,
    pub error: f64,
}

/// The exact curve as a concave polygon: active cardinalities, their minimal
/// errors, a representative support each, and breakpoints
/// `+∞ > λ*_1 > … > λ*_I > 0` in the same layout as
/// [`crate::polygon::ConcavePolygon`].
#[derive(Clone, Debug)]
pub struct ExactCurve {
    pub cards: Vec<usize>,
    pub errors: Vec<f64>,
    pub representatives: Vec<Support>,
    pub breakpoints: Vec<f64>,
}

impl ExactCurve {
    /// `min_S {E(S) + λ|S|}` at `λ ≥ 0`.
    pub fn value_at(&self, lambda: f64) -> f64 {
        self.cards
            .iter()
            .zip(&self.errors)
            .map(|(&c, &e)| e + lambda * c as f64)
            .fold(f64::INFINITY, f64::min)
    }

    /// Interior vertices `λ*_1 > … > λ*_I`.
    pub fn vertices(&self) -> &[f64] {
        &self.breakpoints[1..self.breakpoints.len() - 1]
    }
}

/// An open interval of the penalized path with its solution set.
#[derive(Clone, Debug)]
pub struct PathInterval {
    pub lo: f64,
    /// `+∞` for the first interval.
    pub hi: f64,
    /// Common cardinality of the solutions on this interval.
    pub card: usize,
    pub solutions: Vec<Support>,
}

/// Exact constrained and penalized paths of a small instance.
#[derive(Debug)]
pub struct ExactPaths {
    /// Every enumerated support, grouped in enumeration order.
    pub all: Vec<SubsetRecord>,
    /// `constrained[k]`: all minimizers of `E(S)` s.t. `|S| ≤ k`.
    pub constrained: Vec<Vec<Support>>,
    /// Minimal error at each cardinality bound.
    pub constrained_errors: Vec<f64>,
    pub curve: ExactCurve,
    /// Penalized-path intervals in decreasing λ order.
    pub intervals: Vec<PathInterval>,
    /// Solution sets at the curve vertices `λ*_i`.
    pub breakpoint_sets: Vec<(f64, Vec<Support>)>,
    /// Tie tolerance used throughout: `1e-9·(1 + ‖y‖²)`.
    pub tol: f64,
}

impl ExactPaths {
    /// Solution set `{S : E(S) + λ|S| ≤ min + tol}` by full enumeration.
    pub fn solution_set(&self, lambda: f64) -> Vec<Support> {
        let mut best = f64::INFINITY;
        for rec in &self.all {
            let v = rec.error + lambda * rec.support.len() as f64;
            if v < best {
                best = v;
            }
        }
        let mut out: Vec<Support> = self
            .all
            .iter()
            .filter(|rec| rec.error + lambda * rec.support.len() as f64 <= best + self.tol)
            .map(|rec| rec.support.clone())
            .collect();
        out.sort();
        out
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance to the next lexicographic combination.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Enumerates all supports and builds the exact paths.
///
/// Requires `n ≤ 14` unless `max_card` caps the enumerated cardinality, and
/// at most `2^20` subsets in total.
pub fn exact_paths(
    dict: &Dictionary,
    obs: &Observation,
    max_card: Option<usize>,
) -> Result<ExactPaths, OracleError> {
    let n = dict.cols();
    let kmax = dict
        .rows()
        .min(n)
        .min(max_card.unwrap_or(usize::MAX));
    if n > 14 && max_card.is_none() {
        return Err(OracleError::TooLarge { n });
    }
    let total: usize = (0..=kmax).map(|k| binomial(n, k)).sum();
    if total > MAX_SUBSETS {
        return Err(OracleError::TooLarge { n });
    }
    let tol = 1e-9 * (1.0 + obs.norm_sq());

    let mut all = Vec::with_capacity(total);
    let mut best_err = vec![f64::INFINITY; kmax + 1];
    let mut representative: Vec<Option<Support>> = vec![None; kmax + 1];
    for k in 0..=kmax {
        for_each_combination(n, k, |idx| {
            let cols: Vec<&[f64]> = idx.iter().map(|&i| dict.column(i)).collect();
            let error = lstsq::subset_error(dict.rows(), &cols, obs.values());
            let support = Support::from_indices(idx.to_vec()).expect("combination is sorted");
            if error < best_err[k] {
                best_err[k] = error;
                representative[k] = Some(support.clone());
            }
            all.push(SubsetRecord { support, error });
        });
    }

    // Constrained path: cumulative minima with all ties kept.
    let mut constrained = Vec::with_capacity(kmax + 1);
    let mut constrained_errors = Vec::with_capacity(kmax + 1);
    let mut running = f64::INFINITY;
    for k in 0..=kmax {
        running = running.min(best_err[k]);
        constrained_errors.push(running);
        let mut ties: Vec<Support> = all
            .iter()
            .filter(|r| r.support.len() <= k && r.error <= running + tol)
            .map(|r| r.support.clone())
            .collect();
        ties.sort();
        constrained.push(ties);
    }

    // Exact curve by gift-wrapping the per-cardinality minima: from the
    // current active card, the next active card maximizes the crossing λ;
    // collinear candidates (within 1e-12 relative) merge toward the larger
    // cardinality.
    let mut cards = vec![0usize];
    let mut errors = vec![best_err[0]];
    let mut representatives = vec![representative[0].clone().expect("k=0 always solved")];
    let mut breakpoints = vec![f64::INFINITY];
    let mut cur = 0usize;
    loop {
        let mut next: Option<(usize, f64)> = None;
        for k in cur + 1..=kmax {
            if !(best_err[k] < best_err[cur]) {
                continue;
            }
            let cross = (best_err[cur] - best_err[k]) / (k - cur) as f64;
            if cross <= 0.0 {
                continue;
            }
            let merge_tol = 1e-12 * (1.0 + cross);
            match next {
                None => next = Some((k, cross)),
                Some((_, best_cross)) if cross > best_cross + merge_tol => {
                    next = Some((k, cross));
                }
                Some((_, best_cross)) if cross >= best_cross - merge_tol => {
                    // Degenerate vertex: keep the larger cardinality.
                    next = Some((k, best_cross.max(cross)));
                }
                _ => {}
            }
        }
        let Some((k, cross)) = next else {
            breakpoints.push(0.0);
            break;
        };
        breakpoints.push(cross);
        cards.push(k);
        errors.push(best_err[k]);
        representatives.push(representative[k].clone().expect("active card was solved"));
        cur = k;
    }
    // Merge degenerate vertices: an edge whose interval is shorter than
    // 1e-12 (relative to the vertex scale) is floating-point noise, e.g.
    // two numerically-zero errors at different cardinalities.
    loop {
        let mut dropped = false;
        for j in 1..cards.len() {
            let hi = breakpoints[j];
            let lo = breakpoints[j + 1];
            if hi - lo <= 1e-12 * (1.0 + hi) {
                cards.remove(j);
                errors.remove(j);
                representatives.remove(j);
                breakpoints.clear();
                breakpoints.push(f64::INFINITY);
                for i in 1..cards.len() {
                    let cross =
                        (errors[i - 1] - errors[i]) / (cards[i] - cards[i - 1]) as f64;
                    breakpoints.push(cross);
                }
                breakpoints.push(0.0);
                dropped = true;
                break;
            }
        }
        if !dropped {
            break;
        }
    }
    let curve = ExactCurve {
        cards,
        errors,
        representatives,
        breakpoints,
    };

    let mut paths = ExactPaths {
        all,
        constrained,
        constrained_errors,
        curve,
        intervals: Vec::new(),
        breakpoint_sets: Vec::new(),
        tol,
    };

    // Penalized path: one interval per curve edge, solutions sampled at an
    // interior point; plus the solution sets at the vertices.
    let bps = paths.curve.breakpoints.clone();
    let edge_count = paths.curve.cards.len();
    for j in 0..edge_count {
        let hi = bps[j];
        let lo = bps[j + 1];
        let probe = if hi.is_infinite() {
            if lo > 0.0 {
                lo * 2.0
            } else {
                1.0
            }
        } else {
            0.5 * (lo + hi)
        };
        let solutions = paths.solution_set(probe);
        paths.intervals.push(PathInterval {
            lo,
            hi,
            card: paths.curve.cards[j],
            solutions,
        });
    }
    for &v in paths.curve.vertices() {
        let set = paths.solution_set(v);
        paths.breakpoint_sets.push((v, set));
    }
    Ok(paths)
}

/// Outcome of a structural check: any violation message fails the check.
#[derive(Debug, Default)]
pub struct TheoremReport {
    pub violations: Vec<String>,
    pub checks: usize,
    /// Constrained-path supports that appear in no penalized solution set
    /// (non-supported Pareto points) — reported, never asserted.
    pub strict_pareto_points: usize,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sets_equal(a: &[Support], b: &[Support]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y)
}

fn is_subset(sub: &[Support], sup: &[Support]) -> bool {
    sub.iter().all(|s| sup.binary_search(s).is_ok())
}

/// Piecewise-constancy of the penalized solution set on each open interval,
/// plus the vertex inclusions (interval set contained in both endpoint sets;
/// only the empty support above the first vertex).
pub fn check_theorem1(paths: &ExactPaths) -> TheoremReport {
    let mut report = TheoremReport::default();
    let fractions = [0.15, 0.37, 0.61, 0.85];
    for (i, interval) in paths.intervals.iter().enumerate() {
        // Constancy across the interval.
        let samples: Vec<f64> = if interval.hi.is_infinite() {
            let base = if interval.lo > 0.0 { interval.lo } else { 1.0 };
            vec![base * 1.3, base * 2.0, base * 5.0]
        } else {
            fractions
                .iter()
                .map(|f| interval.lo + (interval.hi - interval.lo) * f)
                .collect()
        };
        for &lambda in &samples {
            report.checks += 1;
            let set = paths.solution_set(lambda);
            if !sets_equal(&set, &interval.solutions) {
                report.violations.push(format!(
                    "interval {i}: solution set changes inside ({}, {}) at λ={lambda}",
                    interval.lo, interval.hi
                ));
            }
        }
    }
    // Vertex inclusions.
    let vertex_set = |lambda: f64| -> Option<&Vec<Support>> {
        paths
            .breakpoint_sets
            .iter()
            .find(|(v, _)| *v == lambda)
            .map(|(_, s)| s)
    };
    let count = paths.intervals.len();
    for (i, interval) in paths.intervals.iter().enumerate() {
        report.checks += 1;
        if i == 0 {
            // Above λ*_1 only the empty support survives.
            if interval.solutions.len() != 1 || !interval.solutions[0].is_empty() {
                report
                    .violations
                    .push(String::from("first interval solution set is not {∅}"));
            }
            if count > 1 {
                if let Some(set) = vertex_set(interval.lo) {
                    if !is_subset(&interval.solutions, set) {
                        report
                            .violations
                            .push(String::from("first interval not within its vertex set"));
                    }
                }
            }
            continue;
        }
        if let Some(set) = vertex_set(interval.hi) {
            if !is_subset(&interval.solutions, set) {
                report.violations.push(format!(
                    "interval {i} not contained in the vertex set at λ={}",
                    interval.hi
                ));
            }
        }
        if i + 1 < count {
            if let Some(set) = vertex_set(interval.lo) {
                if !is_subset(&interval.solutions, set) {
                    report.violations.push(format!(
                        "interval {i} not contained in the vertex set at λ={}",
                        interval.lo
                    ));
                }
            }
        }
    }
    report
}

/// The penalized path is contained in the constrained path, and each open
/// interval's solution set equals a constrained set.
pub fn check_theorem2(paths: &ExactPaths) -> TheoremReport {
    let mut report = TheoremReport::default();
    for (i, interval) in paths.intervals.iter().enumerate() {
        report.checks += 1;
        let k = interval.card;
        if k >= paths.constrained.len() {
            report
                .violations
                .push(format!("interval {i} card {k} beyond the constrained path"));
            continue;
        }
        if !sets_equal(&interval.solutions, &paths.constrained[k]) {
            report.violations.push(format!(
                "interval {i}: penalized set differs from the constrained set at k={k}"
            ));
        }
    }
    // Membership of every penalized solution (including vertex sets) in the
    // constrained set of its own cardinality.
    let mut penalized: Vec<Support> = Vec::new();
    for interval in &paths.intervals {
        penalized.extend(interval.solutions.iter().cloned());
    }
    for (_, set) in &paths.breakpoint_sets {
        penalized.extend(set.iter().cloned());
    }
    penalized.sort();
    penalized.dedup();
    for support in &penalized {
        report.checks += 1;
        let k = support.len();
        if k >= paths.constrained.len() || paths.constrained[k].binary_search(support).is_err() {
            report.violations.push(format!(
                "penalized solution {support} missing from the constrained path"
            ));
        }
    }
    // Strictness statistic: constrained supports never visited by the
    // penalized path.
    let mut constrained_union: Vec<Support> = paths
        .constrained
        .iter()
        .flat_map(|s| s.iter().cloned())
        .collect();
    constrained_union.sort();
    constrained_union.dedup();
    report.strict_pareto_points = constrained_union
        .iter()
        .filter(|s| penalized.binary_search(s).is_err())
        .count();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygon::{ConcavePolygon, LineS};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn identity2() -> (Dictionary, Observation) {
        let dict = Dictionary::from_rows(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let obs = Observation::new(vec![3.0, 4.0]);
        (dict, obs)
    }

    fn random_instance(
        rng: &mut ChaCha12Rng,
        rows: usize,
        cols: usize,
    ) -> (Dictionary, Observation) {
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dict = Dictionary::from_rows(rows, cols, &data).unwrap();
        let y: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        (dict, Observation::new(y))
    }

    fn sup(indices: &[usize]) -> Support {
        Support::from_indices(indices.to_vec()).unwrap()
    }

    #[test]
    fn identity_exact_paths() {
        let (dict, obs) = identity2();
        let paths = exact_paths(&dict, &obs, None).unwrap();
        assert_eq!(paths.constrained[0], vec![Support::empty()]);
        assert_eq!(paths.constrained[1], vec![sup(&[1])]);
        assert_eq!(paths.constrained[2], vec![sup(&[0, 1])]);

        assert_eq!(paths.curve.cards, vec![0, 1, 2]);
        assert_abs_diff_eq!(paths.curve.breakpoints[1], 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(paths.curve.breakpoints[2], 9.0, epsilon = 1e-12);

        assert_eq!(paths.intervals.len(), 3);
        assert_eq!(paths.intervals[0].solutions, vec![Support::empty()]);
        assert_eq!(paths.intervals[1].solutions, vec![sup(&[1])]);
        assert_eq!(paths.intervals[2].solutions, vec![sup(&[0, 1])]);
    }

    #[test]
    fn zero_data_penalized_path_is_empty_support() {
        let (dict, _) = identity2();
        let obs = Observation::new(vec![0.0, 0.0]);
        let paths = exact_paths(&dict, &obs, None).unwrap();
        assert_eq!(paths.curve.cards, vec![0]);
        assert_eq!(paths.intervals.len(), 1);
        // With E ≡ 0 all errors tie at zero, so the tolerance keeps exactly
        // the sparsest solutions; the empty support must be among them and
        // first in sorted order.
        assert!(paths.intervals[0].solutions.contains(&Support::empty()));
        let set = paths.solution_set(0.5);
        assert_eq!(set[0], Support::empty());
    }

    #[test]
    fn aligned_observation_gives_two_intervals() {
        // y is a multiple of the second atom and no other atom can reach it.
        let dict = Dictionary::from_rows(3, 3, &[1.0, 0.0, 0.3, 0.0, 1.0, 0.2, 0.0, 0.0, 1.0])
            .unwrap();
        let obs = Observation::new(vec![0.0, 2.0, 0.0]);
        let paths = exact_paths(&dict, &obs, None).unwrap();
        assert_eq!(paths.intervals.len(), 2);
        assert_eq!(paths.intervals[1].solutions, vec![sup(&[1])]);
        assert!(check_theorem1(&paths).passed());
        assert!(check_theorem2(&paths).passed());
    }

    #[test]
    fn too_large_without_cap() {
        let mut rng = ChaCha12Rng::seed_from_u64(91);
        let (dict, obs) = random_instance(&mut rng, 4, 20);
        assert_eq!(
            exact_paths(&dict, &obs, None).unwrap_err(),
            OracleError::TooLarge { n: 20 }
        );
        // With a cardinality cap the same instance enumerates fine.
        assert!(exact_paths(&dict, &obs, Some(3)).is_ok());
    }

    #[test]
    fn theorems_hold_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(97);
        for _ in 0..20 {
            let (dict, obs) = random_instance(&mut rng, 8, 6);
            let paths = exact_paths(&dict, &obs, None).unwrap();
            let r1 = check_theorem1(&paths);
            assert!(r1.passed(), "theorem-1 violations: {:?}", r1.violations);
            let r2 = check_theorem2(&paths);
            assert!(r2.passed(), "theorem-2 violations: {:?}", r2.violations);
        }
    }

    #[test]
    fn envelope_matches_polygon_fold_of_all_lines() {
        let mut rng = ChaCha12Rng::seed_from_u64(101);
        for _ in 0..10 {
            let (dict, obs) = random_instance(&mut rng, 8, 6);
            let paths = exact_paths(&dict, &obs, None).unwrap();
            let mut poly = ConcavePolygon::singleton(obs.norm_sq());
            for rec in &paths.all {
                if rec.support.is_empty() {
                    continue;
                }
                poly.ccv_descent(LineS::new(rec.support.clone(), rec.error));
            }
            // Same edges.
            let cards: Vec<usize> = poly.edges().iter().map(|e| e.card).collect();
            assert_eq!(cards, paths.curve.cards);
            for (edge, err) in poly.edges().iter().zip(&paths.curve.errors) {
                assert_abs_diff_eq!(edge.error, *err, epsilon = paths.tol);
            }
            // Same breakpoints.
            for (a, b) in poly.breakpoints()[1..]
                .iter()
                .zip(&paths.curve.breakpoints[1..])
            {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-9 * (1.0 + b));
            }
        }
    }

    #[test]
    fn heuristics_dominate_exact_curve() {
        use crate::csbr::{csbr, StoppingRule};
        use crate::l0pd::{l0pd, L0pdConfig};
        let mut rng = ChaCha12Rng::seed_from_u64(103);
        for _ in 0..10 {
            let (dict, obs) = random_instance(&mut rng, 12, 10);
            let paths = exact_paths(&dict, &obs, None).unwrap();
            let cpath = csbr(&dict, &obs, &StoppingRule::default()).unwrap();
            let lres = l0pd(&dict, &obs, &L0pdConfig::for_dictionary(&dict)).unwrap();
            let top = cpath.lambdas[0].max(1.0) * 1.5;
            for s in 1..=200 {
                let lambda = top * s as f64 / 200.0;
                let exact = paths.curve.value_at(lambda);
                let c = cpath.value_at(lambda).unwrap();
                let (l, _) = lres.polygon.evaluate(lambda);
                assert!(c >= exact - 1e-9 * (1.0 + exact));
                assert!(l >= exact - 1e-9 * (1.0 + exact));
            }
        }
    }
}
