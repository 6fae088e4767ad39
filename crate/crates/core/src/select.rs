//! Model-order selection over a path and the support-recovery scoring
//! protocol.
//!
//! Two families of criteria pick a single segment out of a path when the
//! noise variance is unknown:
//!
//! - the information criteria `m·log E(S) + α|S|` with `α = 2` (Akaike),
//!   `log m` (MDL) or `2·log log m` (Hannan–Quinn);
//! - the corrected MDL for short data records,
//!   `log E(S) + log(m)·(|S|+1)/(m−|S|−2)`.
//!
//! Scoring compares an estimated support against the ground truth through
//! the support error `SE = |S*∖S| + |S∖S*|` and the true-positive count
//! `TP = |S*∩S|`. A trial is scored by sweeping a log-spaced λ grid over
//! the path, keeping the grid point with the smallest support error, and
//! separately scoring the MDLc-selected segment over the whole path.

use alloc::vec::Vec;
use core::fmt;

use crate::csbr::initial_breakpoint;
use crate::dict::{Dictionary, Observation, StateError, Support};
use crate::math;
use crate::path::PathResult;

/// Relative threshold below which a segment error counts as exact recovery;
/// log-based criteria are undefined there, so such segments bypass them.
const ZERO_ERROR_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SelectError {
    /// No segment satisfies the criterion's domain constraints.
    NoEligibleSegment,
    /// The λ grid is empty or its anchor is degenerate.
    EmptyGrid,
    State(StateError),
}

impl fmt::Display for SelectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectError::NoEligibleSegment => write!(f, "no eligible segment"),
            SelectError::EmptyGrid => write!(f, "empty or degenerate lambda grid"),
            SelectError::State(e) => write!(f, "{e}"),
        }
    }
}

/// Decreasing, strictly positive, log-spaced λ grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    /// `points` values from `top` spanning `decades` decades downward.
    pub fn log_spaced(top: f64, decades: f64, points: usize) -> Result<Self, SelectError> {
        if points == 0 || !(top > 0.0) {
            return Err(SelectError::EmptyGrid);
        }
        let values = (0..points)
            .map(|i| {
                if points == 1 {
                    top
                } else {
                    top * math::powf(10.0, -decades * i as f64 / (points - 1) as f64)
                }
            })
            .collect();
        Ok(LambdaGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("grid is non-empty")
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }
}

/// Default grid of an instance: 11 points anchored at the instance's first
/// breakpoint `λ_1 = max_i ⟨y,a_i⟩²/‖a_i‖²` and spanning four decades.
pub fn default_grid(dict: &Dictionary, obs: &Observation) -> Result<LambdaGrid, SelectError> {
    let (_, lambda1) = initial_breakpoint(dict, obs).map_err(SelectError::State)?;
    LambdaGrid::log_spaced(lambda1, 4.0, 11)
}

/// Information-criterion penalty weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IcRule {
    Aic,
    Mdl,
    HannanQuinn,
}

impl IcRule {
    pub fn alpha(&self, m: usize) -> f64 {
        match self {
            IcRule::Aic => 2.0,
            IcRule::Mdl => math::ln(m as f64),
            IcRule::HannanQuinn => 2.0 * math::ln(math::ln(m as f64)),
        }
    }
}

/// Smallest-cardinality segment whose error is numerically zero, if any.
fn zero_error_segment(path: &PathResult) -> Option<usize> {
    let scale = ZERO_ERROR_REL * (1.0 + path.errors[0]);
    path.errors
        .iter()
        .enumerate()
        .filter(|(_, e)| **e <= scale)
        .min_by_key(|(j, _)| path.supports[*j].len())
        .map(|(j, _)| j)
}

fn select_by<F: Fn(usize) -> Option<f64>>(
    path: &PathResult,
    criterion: F,
) -> Result<usize, SelectError> {
    if let Some(j) = zero_error_segment(path) {
        return Ok(j);
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for j in 0..path.segment_count() {
        let Some(value) = criterion(j) else { continue };
        let card = path.supports[j].len();
        let better = match &best {
            None => true,
            Some((bv, bc, _)) => value < *bv || (value == *bv && card < *bc),
        };
        if better {
            best = Some((value, card, j));
        }
    }
    best.map(|(_, _, j)| j).ok_or(SelectError::NoEligibleSegment)
}

/// MDL corrected for short data records:
/// `argmin_j log E(S_j) + log(m)·(|S_j|+1)/(m−|S_j|−2)`, ties to the smaller
/// cardinality. Segments with `|S_j| > m−3` are excluded; a segment with
/// numerically zero error short-circuits the criterion and is returned
/// directly (sparsest such segment).
pub fn mdlc_select(path: &PathResult, m: usize) -> Result<usize, SelectError> {
    let log_m = math::ln(m as f64);
    select_by(path, |j| {
        let card = path.supports[j].len();
        let err = path.errors[j];
        if card + 3 > m || err <= 0.0 {
            return None;
        }
        Some(math::ln(err) + log_m * (card + 1) as f64 / (m - card - 2) as f64)
    })
}

/// Information criterion `argmin_j m·log E(S_j) + α|S_j|` for an arbitrary
/// penalty weight `α`; ties to the smaller cardinality.
pub fn ic_select_alpha(path: &PathResult, m: usize, alpha: f64) -> Result<usize, SelectError> {
    select_by(path, |j| {
        let err = path.errors[j];
        if err <= 0.0 {
            return None;
        }
        Some(m as f64 * math::ln(err) + alpha * path.supports[j].len() as f64)
    })
}

/// Information criterion with a named penalty rule.
pub fn ic_select(path: &PathResult, m: usize, rule: IcRule) -> Result<usize, SelectError> {
    ic_select_alpha(path, m, rule.alpha(m))
}

/// Support error and true positives: `(|S*∖S| + |S∖S*|, |S*∩S|)`.
pub fn support_error(s_true: &Support, s_est: &Support) -> (usize, usize) {
    let tp = s_true.intersection_len(s_est);
    let se = (s_true.len() - tp) + (s_est.len() - tp);
    (se, tp)
}

/// Scores of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialScores {
    /// Best support error over the grid.
    pub se: usize,
    /// True positives at the minimizing grid point.
    pub tp: usize,
    /// Cardinality at the minimizing grid point.
    pub order: usize,
    /// Grid index attaining the minimum (ties to the larger λ).
    pub grid_index: usize,
    /// Same three scores for the MDLc-selected segment.
    pub mdlc_se: usize,
    pub mdlc_tp: usize,
    pub mdlc_order: usize,
    /// Grid points outside the path's covered range, skipped with a warning
    /// left to the caller.
    pub skipped_grid_points: usize,
}

/// Scores a path against the true support: sweeps the grid for the smallest
/// support error (ties to the larger λ, i.e. the sparser side) and scores
/// the MDLc pick over all segments.
pub fn score_trial(
    s_true: &Support,
    path: &PathResult,
    grid: &LambdaGrid,
    m: usize,
) -> Result<TrialScores, SelectError> {
    if grid.is_empty() {
        return Err(SelectError::EmptyGrid);
    }
    let mut best: Option<(usize, usize, usize, usize)> = None;
    let mut skipped = 0usize;
    for (gi, &lambda) in grid.values().iter().enumerate() {
        let Ok(support) = path.support_at(lambda) else {
            skipped += 1;
            continue;
        };
        let (se, tp) = support_error(s_true, support);
        if best.is_none() || se < best.unwrap().0 {
            best = Some((se, tp, support.len(), gi));
        }
    }
    let (se, tp, order, grid_index) = best.ok_or(SelectError::NoEligibleSegment)?;
    let mdlc_j = mdlc_select(path, m)?;
    let (mdlc_se, mdlc_tp) = support_error(s_true, &path.supports[mdlc_j]);
    Ok(TrialScores {
        se,
        tp,
        order,
        grid_index,
        mdlc_se,
        mdlc_tp,
        mdlc_order: path.supports[mdlc_j].len(),
        skipped_grid_points: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{Continuity, Producer};
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn sup(indices: &[usize]) -> Support {
        Support::from_indices(indices.to_vec()).unwrap()
    }

    /// Hand-built path with given (lambda, support, error) triples.
    fn path_of(segments: &[(f64, &[usize], f64)]) -> PathResult {
        PathResult {
            producer: Producer::Csbr,
            lambdas: segments.iter().map(|s| s.0).collect(),
            supports: segments.iter().map(|s| sup(s.1)).collect(),
            errors: segments.iter().map(|s| s.2).collect(),
            continuity: vec![Continuity::Continuous; segments.len().saturating_sub(1)],
            clamped_segments: Vec::new(),
        }
    }

    #[test]
    fn support_error_cases() {
        let (se, tp) = support_error(&sup(&[1, 2, 3]), &sup(&[2, 3, 4]));
        assert_eq!((se, tp), (2, 2));
        let (se, tp) = support_error(&sup(&[1, 2, 3]), &sup(&[1, 2, 3]));
        assert_eq!((se, tp), (0, 3));
        let (se, tp) = support_error(&sup(&[1, 2, 3]), &Support::empty());
        assert_eq!((se, tp), (3, 0));
    }

    #[test]
    fn mdlc_two_candidate_example() {
        // m=100, (|S|=1, E=1.0) vs (|S|=2, E=0.5):
        // log(1) + log(100)·2/97 = 0.094952
        // log(0.5) + log(100)·3/96 = −0.549235 → picks |S| = 2.
        let m = 100;
        let c1 = math::ln(1.0) + math::ln(100.0) * 2.0 / 97.0;
        let c2 = math::ln(0.5) + math::ln(100.0) * 3.0 / 96.0;
        assert_abs_diff_eq!(c1, 0.0949522, epsilon = 1e-6);
        assert_abs_diff_eq!(c2, -0.5492352, epsilon = 1e-6);
        let path = path_of(&[(10.0, &[], 4.0), (1.0, &[3], 1.0), (0.0, &[3, 7], 0.5)]);
        assert_eq!(mdlc_select(&path, m).unwrap(), 2);
    }

    #[test]
    fn mdlc_single_segment_and_ineligible() {
        let path = path_of(&[(0.0, &[], 4.0)]);
        assert_eq!(mdlc_select(&path, 100).unwrap(), 0);
        // m too small for any segment: |S|+3 > m everywhere.
        let path = path_of(&[(0.0, &[1, 2], 1.0)]);
        assert_eq!(mdlc_select(&path, 4), Err(SelectError::NoEligibleSegment));
    }

    #[test]
    fn mdlc_zero_error_segment_short_circuits() {
        let path = path_of(&[
            (10.0, &[], 4.0),
            (1.0, &[3], 1e-30),
            (0.0, &[3, 7], 1e-32),
        ]);
        // The sparsest numerically-zero segment wins outright.
        assert_eq!(mdlc_select(&path, 100).unwrap(), 1);
    }

    #[test]
    fn mdlc_invariant_to_segment_order() {
        let a = path_of(&[(10.0, &[], 4.0), (1.0, &[3], 1.0), (0.0, &[3, 7], 0.5)]);
        let b = path_of(&[(10.0, &[3, 7], 0.5), (1.0, &[], 4.0), (0.0, &[3], 1.0)]);
        let ja = mdlc_select(&a, 100).unwrap();
        let jb = mdlc_select(&b, 100).unwrap();
        assert_eq!(a.supports[ja], b.supports[jb]);
    }

    #[test]
    fn ic_two_candidate_example() {
        // m=100, α=log m: 100·log(1)+4.605 vs 100·log(0.5)+9.21 → |S|=2.
        let path = path_of(&[(10.0, &[], 4.0), (1.0, &[3], 1.0), (0.0, &[3, 7], 0.5)]);
        assert_eq!(ic_select(&path, 100, IcRule::Mdl).unwrap(), 2);
    }

    #[test]
    fn ic_alpha_limits() {
        let path = path_of(&[
            (10.0, &[], 4.0),
            (2.0, &[3], 1.0),
            (1.0, &[3, 7], 0.6),
            (0.0, &[1, 3, 7], 0.5),
        ]);
        // Huge penalty: sparsest eligible segment.
        assert_eq!(ic_select_alpha(&path, 100, 1e6).unwrap(), 0);
        // No penalty: lowest-error segment.
        assert_eq!(ic_select_alpha(&path, 100, 0.0).unwrap(), 3);
    }

    #[test]
    fn ic_selected_cardinality_monotone_in_alpha() {
        let path = path_of(&[
            (10.0, &[], 4.0),
            (2.0, &[3], 1.0),
            (1.0, &[3, 7], 0.6),
            (0.0, &[1, 3, 7], 0.5),
        ]);
        let mut last_card = usize::MAX;
        for alpha in [0.0, 1.0, 5.0, 20.0, 100.0, 1e4] {
            let j = ic_select_alpha(&path, 100, alpha).unwrap();
            let card = path.supports[j].len();
            assert!(card <= last_card, "cardinality grew as α grew");
            last_card = card;
        }
    }

    #[test]
    fn grid_examples() {
        let grid = LambdaGrid::log_spaced(16.0, 4.0, 11).unwrap();
        assert_eq!(grid.len(), 11);
        assert_abs_diff_eq!(grid.max(), 16.0);
        assert_abs_diff_eq!(grid.min(), 16.0e-4, epsilon = 1e-12);
        let ratio = grid.values()[1] / grid.values()[0];
        assert_abs_diff_eq!(ratio, math::powf(10.0, -0.4), epsilon = 1e-12);
        assert!(grid.values().windows(2).all(|w| w[0] > w[1]));
        assert!(LambdaGrid::log_spaced(0.0, 4.0, 11).is_err());
    }

    #[test]
    fn default_grid_anchor() {
        let dict = Dictionary::from_rows(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let obs = Observation::new(vec![3.0, 4.0]);
        let grid = default_grid(&dict, &obs).unwrap();
        assert_abs_diff_eq!(grid.max(), 16.0, epsilon = 1e-12);
        assert_eq!(grid.len(), 11);
    }

    #[test]
    fn score_trial_perfect_and_empty_paths() {
        let s_true = sup(&[2, 5]);
        let grid = LambdaGrid::log_spaced(10.0, 4.0, 11).unwrap();
        let perfect = path_of(&[(5.0, &[], 9.0), (0.0, &[2, 5], 0.4)]);
        let scores = score_trial(&s_true, &perfect, &grid, 50).unwrap();
        assert_eq!(scores.se, 0);
        assert_eq!(scores.tp, 2);
        assert_eq!(scores.order, 2);
        assert_eq!(scores.skipped_grid_points, 0);

        let empty_only = path_of(&[(0.0, &[], 9.0)]);
        let scores = score_trial(&s_true, &empty_only, &grid, 50).unwrap();
        assert_eq!(scores.se, 2);
        assert_eq!(scores.tp, 0);
        assert_eq!(scores.order, 0);
    }

    #[test]
    fn score_trial_tie_prefers_larger_lambda() {
        let s_true = sup(&[2]);
        // Both {2,7} (se=1) and {2,8,9} (se=2) appear; the sparser {} (se=1)
        // ties with {2,7} and sits at larger λ, so the tie keeps it.
        let path = path_of(&[(4.0, &[], 9.0), (1.0, &[2, 7], 1.0), (0.0, &[2, 8, 9], 0.1)]);
        let grid = LambdaGrid::log_spaced(8.0, 2.0, 5).unwrap();
        let scores = score_trial(&s_true, &path, &grid, 50).unwrap();
        assert_eq!(scores.se, 1);
        assert_eq!(scores.order, 0, "tie must keep the larger-λ grid point");
    }

    #[test]
    fn score_trial_skips_out_of_range_points() {
        let s_true = sup(&[2]);
        // Path truncated at λ = 1: grid points below are skipped.
        let path = path_of(&[(4.0, &[], 9.0), (1.0, &[2], 0.5)]);
        let grid = LambdaGrid::log_spaced(10.0, 4.0, 11).unwrap();
        let scores = score_trial(&s_true, &path, &grid, 50).unwrap();
        assert!(scores.skipped_grid_points > 0);
        assert_eq!(scores.se, 0);
    }

    #[test]
    fn se_tp_identity() {
        // se = (|S*|−tp) + (order−tp) for every scored support.
        let s_true = sup(&[1, 4, 6]);
        for est in [&[][..], &[1], &[1, 4, 6], &[2, 3], &[1, 2, 3, 4]] {
            let s_est = sup(est);
            let (se, tp) = support_error(&s_true, &s_est);
            assert_eq!(se, (s_true.len() - tp) + (s_est.len() - tp));
        }
    }
}
