//! Regularization path descent over the concave polygon.
//!
//! The solver keeps the concave polygon of a working set of supports over
//! all `λ ≥ 0` at once, starting from the single flat edge of the empty
//! support. Each iteration explores the unexplored edge of lowest
//! cardinality: it rebuilds that support's least-squares state, computes the
//! best insertion `S + {ℓ_add}` and best removal `S − {ℓ_rmv}`, and folds
//! each in turn into the polygon. Two cheap pre-tests skip a fold that
//! provably lies above the polygon: the insertion when
//! `δE_add < λ_{j+1}` and the removal when `δE_rmv > λ_j`, where
//! `(λ_{j+1}, λ_j)` is the explored edge's interval.
//!
//! Termination: every removed edge lies above a polygon that only descends,
//! so no support is ever folded twice, and each iteration explores exactly
//! one edge.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dict::{ActiveSetState, Dictionary, Observation, StateError};
use crate::path::{Continuity, PathResult, Producer};
use crate::polygon::{ConcavePolygon, LineS};

/// Stopping configuration. The default explores until every edge of the
/// polygon has been explored (full path).
#[derive(Clone, Debug)]
pub struct L0pdConfig {
    /// Stop when the lowest-cardinality unexplored edge has upper breakpoint
    /// `λ_j ≤ lambda_stop`. All edges covering `(lambda_stop, ∞)` have then
    /// been explored.
    pub lambda_stop: f64,
    /// Stop when the edge about to be explored reaches this cardinality.
    pub k_stop: Option<usize>,
    /// Stop when the edge about to be explored reaches this error.
    pub eps_stop: Option<f64>,
    /// Safety bound on exploration iterations.
    pub iter_cap: usize,
}

impl L0pdConfig {
    pub fn for_dictionary(dict: &Dictionary) -> Self {
        L0pdConfig {
            lambda_stop: 0.0,
            k_stop: None,
            eps_stop: None,
            iter_cap: 40 * dict.cols() + 400,
        }
    }
}

impl Default for L0pdConfig {
    fn default() -> Self {
        L0pdConfig {
            lambda_stop: 0.0,
            k_stop: None,
            eps_stop: None,
            iter_cap: 1_000_000,
        }
    }
}

pub enum L0pdError {
    /// The iteration cap fired; carries the partial polygon.
    IterCapExceeded { partial: Box<ConcavePolygon> },
    State(StateError),
}

impl fmt::Debug for L0pdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            L0pdError::IterCapExceeded { partial } => {
                write!(f, "IterCapExceeded({} edges)", partial.len())
            }
            L0pdError::State(e) => write!(f, "State({e})"),
        }
    }
}

impl From<StateError> for L0pdError {
    fn from(e: StateError) -> Self {
        L0pdError::State(e)
    }
}

/// Polygon, induced path and the exploration log.
pub struct L0pdResult {
    pub polygon: ConcavePolygon,
    pub path: PathResult,
    /// Cardinalities of the edges in exploration order.
    pub explored_cards: Vec<usize>,
}

/// `ℓ_rmv = argmin_{i∈S} E(S−{i}) − E(S)`, ties to the lowest index.
pub fn ell_rmv(state: &ActiveSetState<'_>) -> Result<usize, StateError> {
    let trials = state.trial_errors();
    state.best_removal(&trials).map(|(_, atom)| atom)
}

/// Converts a fully-built polygon into the shared path representation. All
/// breakpoints of a polygon path are continuous by construction.
pub fn path_from_polygon(polygon: &ConcavePolygon) -> PathResult {
    let lambdas: Vec<f64> = polygon.breakpoints()[1..].to_vec();
    let supports = polygon.edges().iter().map(|e| e.support.clone()).collect();
    let errors = polygon.edges().iter().map(|e| e.error).collect();
    let continuity = vec![Continuity::Continuous; polygon.len().saturating_sub(1)];
    PathResult {
        producer: Producer::L0pd,
        lambdas,
        supports,
        errors,
        continuity,
        clamped_segments: Vec::new(),
    }
}

/// Runs the path-descent solver.
pub fn l0pd(
    dict: &Dictionary,
    obs: &Observation,
    cfg: &L0pdConfig,
) -> Result<L0pdResult, L0pdError> {
    let template = ActiveSetState::empty(dict, obs)?;
    let mut polygon = ConcavePolygon::singleton(obs.norm_sq());
    let mut explored_cards = Vec::new();
    let mut iters = 0usize;

    while let Some(j) = polygon.first_unexplored() {
        let edge = &polygon.edges()[j];
        let lambda_upper = polygon.upper_breakpoint(j);
        let lambda_lower = polygon.lower_breakpoint(j);
        if cfg.lambda_stop > 0.0 && lambda_upper <= cfg.lambda_stop {
            break;
        }
        if cfg.k_stop.is_some_and(|k| edge.card >= k) {
            break;
        }
        if cfg.eps_stop.is_some_and(|e| edge.error <= e) {
            break;
        }
        iters += 1;
        if iters > cfg.iter_cap {
            return Err(L0pdError::IterCapExceeded {
                partial: Box::new(polygon),
            });
        }
        let support = edge.support.clone();
        polygon.mark_explored(j);
        explored_cards.push(support.len());

        // Rebuild the least-squares state; a numerically dependent support is
        // reported by skipping its exploration (the edge keeps its line).
        let mut state = template.clone();
        let mut degenerate = false;
        for &atom in support.indices() {
            if state.insert_atom(atom).is_err() {
                degenerate = true;
                break;
            }
        }
        if degenerate {
            continue;
        }
        let trials = state.trial_errors();

        // Best insertion, folded first.
        let (delta_add, ell_add) = state.best_insertion(&trials);
        if let Some(ell) = ell_add {
            if delta_add < lambda_lower {
                // The insertion line crosses the explored edge below its
                // interval: it lies above the whole polygon.
                debug_assert!({
                    let (lo, hi) = polygon.intersect(trials[ell], support.len() + 1);
                    lo > hi
                });
            } else {
                let s_add = support.with(ell).expect("ell_add not active");
                polygon.ccv_descent(LineS::new(s_add, trials[ell]));
            }
        }

        // Best removal, folded second (for the root edge the candidate is the
        // empty support itself, a guaranteed duplicate).
        if support.is_empty() {
            polygon.ccv_descent(LineS::new(support, obs.norm_sq()));
        } else {
            let (delta_rmv, ell) = state
                .best_removal(&trials)
                .expect("non-empty support has removals");
            if delta_rmv > lambda_upper {
                debug_assert!({
                    let (lo, hi) = polygon.intersect(trials[ell], support.len() - 1);
                    lo > hi
                });
            } else {
                let s_rmv = support.without(ell).expect("ell_rmv active");
                polygon.ccv_descent(LineS::new(s_rmv, trials[ell]));
            }
        }
        debug_assert!(polygon.check_invariants().is_ok());
    }

    let path = path_from_polygon(&polygon);
    Ok(L0pdResult {
        polygon,
        path,
        explored_cards,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::Support;
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

    #[test]
    fn identity_worked_example() {
        let (dict, obs) = identity2();
        let cfg = L0pdConfig::for_dictionary(&dict);
        let out = l0pd(&dict, &obs, &cfg).unwrap();
        let poly = &out.polygon;
        assert_eq!(poly.len(), 3);
        let cards: Vec<usize> = poly.edges().iter().map(|e| e.card).collect();
        assert_eq!(cards, vec![0, 1, 2]);
        assert_abs_diff_eq!(poly.edges()[0].error, 25.0);
        assert_abs_diff_eq!(poly.edges()[1].error, 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(poly.edges()[2].error, 0.0, epsilon = 1e-12);
        assert_eq!(poly.edges()[1].support.indices(), &[1]);
        assert_eq!(poly.edges()[2].support.indices(), &[0, 1]);
        assert!(poly.breakpoints()[0].is_infinite());
        assert_abs_diff_eq!(poly.breakpoints()[1], 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(poly.breakpoints()[2], 9.0, epsilon = 1e-12);
        assert_eq!(poly.breakpoints()[3], 0.0);
        // Everything explored; all path flags continuous.
        assert!(poly.first_unexplored().is_none());
        assert!(out
            .path
            .continuity
            .iter()
            .all(|c| *c == Continuity::Continuous));
        assert_eq!(out.path.lambdas, vec![16.0, 9.0, 0.0]);
    }

    #[test]
    fn zero_data_stays_singleton() {
        let (dict, _) = identity2();
        let obs = Observation::new(vec![0.0, 0.0]);
        let out = l0pd(&dict, &obs, &L0pdConfig::for_dictionary(&dict)).unwrap();
        assert_eq!(out.polygon.len(), 1);
        assert_eq!(out.explored_cards, vec![0]);
        assert_eq!(out.path.lambdas, vec![0.0]);
    }

    #[test]
    fn ell_rmv_examples() {
        let (dict, obs) = identity2();
        let state =
            ActiveSetState::from_support(&dict, &obs, &Support::from_indices(vec![0, 1]).unwrap())
                .unwrap();
        assert_eq!(ell_rmv(&state).unwrap(), 0);
        let single =
            ActiveSetState::from_support(&dict, &obs, &Support::from_indices(vec![1]).unwrap())
                .unwrap();
        assert_eq!(ell_rmv(&single).unwrap(), 1);
        let empty = ActiveSetState::empty(&dict, &obs).unwrap();
        assert_eq!(ell_rmv(&empty).unwrap_err(), StateError::EmptySupport);
    }

    #[test]
    fn ell_rmv_matches_brute_force() {
        use crate::lstsq;
        let mut rng = ChaCha12Rng::seed_from_u64(67);
        for _ in 0..10 {
            let (dict, obs) = random_instance(&mut rng, 9, 7);
            let support = Support::from_indices(vec![1, 3, 6]).unwrap();
            let state = ActiveSetState::from_support(&dict, &obs, &support).unwrap();
            let mut best = f64::INFINITY;
            let mut best_atom = usize::MAX;
            for &atom in support.indices() {
                let sub = support.without(atom).unwrap();
                let cols: Vec<&[f64]> = sub.indices().iter().map(|&i| dict.column(i)).collect();
                let e = lstsq::subset_error(dict.rows(), &cols, obs.values());
                if e < best {
                    best = e;
                    best_atom = atom;
                }
            }
            assert_eq!(ell_rmv(&state).unwrap(), best_atom);
        }
    }

    #[test]
    fn polygon_invariants_on_random_instances() {
        // Also exercises the Lemma-style skip soundness debug assertions
        // inside the solver.
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        for _ in 0..20 {
            let (dict, obs) = random_instance(&mut rng, 12, 10);
            let out = l0pd(&dict, &obs, &L0pdConfig::for_dictionary(&dict)).unwrap();
            assert!(out.polygon.check_invariants().is_ok());
            assert!(out.polygon.first_unexplored().is_none());
            out.path.check_structure().unwrap();
        }
    }

    #[test]
    fn forward_phase_explores_increasing_cards() {
        let (dict, obs) = identity2();
        let out = l0pd(&dict, &obs, &L0pdConfig::for_dictionary(&dict)).unwrap();
        assert_eq!(out.explored_cards, vec![0, 1, 2]);
    }

    #[test]
    fn lambda_stop_leaves_high_lambda_region_explored() {
        let mut rng = ChaCha12Rng::seed_from_u64(73);
        let (dict, obs) = random_instance(&mut rng, 12, 10);
        let full = l0pd(&dict, &obs, &L0pdConfig::for_dictionary(&dict)).unwrap();
        let mid = full.polygon.breakpoints()[full.polygon.len() / 2];
        let cfg = L0pdConfig {
            lambda_stop: mid,
            ..L0pdConfig::for_dictionary(&dict)
        };
        let out = l0pd(&dict, &obs, &cfg).unwrap();
        for (j, edge) in out.polygon.edges().iter().enumerate() {
            if out.polygon.upper_breakpoint(j) > mid {
                assert!(edge.explored, "edge {j} above lambda_stop left unexplored");
            }
        }
        // Unexplored edges all sit at or below the stop threshold.
        for (j, edge) in out.polygon.edges().iter().enumerate() {
            if !edge.explored {
                assert!(out.polygon.upper_breakpoint(j) <= mid);
            }
        }
    }

    #[test]
    fn k_stop_and_eps_stop() {
        let mut rng = ChaCha12Rng::seed_from_u64(79);
        let (dict, obs) = random_instance(&mut rng, 12, 10);
        let cfg = L0pdConfig {
            k_stop: Some(3),
            ..L0pdConfig::for_dictionary(&dict)
        };
        let out = l0pd(&dict, &obs, &cfg).unwrap();
        assert!(out.explored_cards.iter().all(|&c| c < 3));

        let cfg = L0pdConfig {
            eps_stop: Some(obs.norm_sq() * 0.3),
            ..L0pdConfig::for_dictionary(&dict)
        };
        let out = l0pd(&dict, &obs, &cfg).unwrap();
        // Every explored edge still in the polygon had error above the
        // threshold.
        for edge in out.polygon.edges().iter().filter(|e| e.explored) {
            assert!(edge.error > obs.norm_sq() * 0.3 || edge.card == 0);
        }
        assert!(out.polygon.check_invariants().is_ok());
    }

    #[test]
    fn iter_cap_returns_partial_polygon() {
        let mut rng = ChaCha12Rng::seed_from_u64(83);
        let (dict, obs) = random_instance(&mut rng, 12, 10);
        let cfg = L0pdConfig {
            iter_cap: 2,
            ..L0pdConfig::for_dictionary(&dict)
        };
        match l0pd(&dict, &obs, &cfg) {
            Err(L0pdError::IterCapExceeded { partial }) => {
                assert!(partial.check_invariants().is_ok());
            }
            other => panic!("expected IterCapExceeded, got ok={:?}", other.is_ok()),
        }
    }
}
