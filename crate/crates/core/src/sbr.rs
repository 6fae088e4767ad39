//! Single Best Replacement: descent minimization of `Ĵ(S;λ) = E(S) + λ|S|`.
//!
//! Each iteration evaluates all `n` single replacements `S ± {i}` through the
//! shared Cholesky caches, applies the best one if it strictly decreases the
//! cost, and stops otherwise. With `λ = 0` only insertions can be accepted
//! and the iteration reduces to forward orthogonal least squares.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::dict::{ActiveSetState, Dictionary, Observation, StateError, Support};

/// Kind of accepted single replacement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SbrMove {
    Insert,
    Remove,
}

/// One accepted replacement, for optional tracing.
#[derive(Clone, Debug, PartialEq)]
pub struct SbrTraceEntry {
    pub mv: SbrMove,
    pub atom: usize,
    /// Cost `Ĵ(S;λ)` after the move.
    pub j_value: f64,
}

/// Solver knobs. Defaults run uncapped with no trace.
#[derive(Clone, Debug, Default)]
pub struct SbrOptions {
    /// Atom whose removal is excluded from the first iteration only (used by
    /// the continuation solver for the just-added atom).
    pub forbid_first_removal: Option<usize>,
    /// Iteration cap; `None` means unbounded (termination is guaranteed by
    /// strict descent over finitely many supports).
    pub max_iter: Option<usize>,
    /// Cardinality cap; exceeding it aborts with a partial outcome.
    pub max_card: Option<usize>,
    pub record_trace: bool,
}

/// Final state of an SBR run plus the continuation outputs.
pub struct SbrOutcome<'a> {
    pub state: ActiveSetState<'a>,
    /// `δE_add(S) = max_{i∉S} E(S) − E(S+{i})` of the final support.
    pub delta_e_add: f64,
    /// Atom attaining `δE_add`, `None` when no atom can be inserted.
    pub ell_add: Option<usize>,
    /// Number of accepted replacements.
    pub replacements: usize,
    pub trace: Option<Vec<SbrTraceEntry>>,
}

pub enum SbrError<'a> {
    /// An iteration or cardinality cap fired; carries the partial outcome.
    CapExceeded(Box<SbrOutcome<'a>>),
    State(StateError),
}

impl fmt::Debug for SbrError<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SbrError::CapExceeded(o) => write!(
                f,
                "CapExceeded(|S|={}, E={})",
                o.state.cardinality(),
                o.state.error()
            ),
            SbrError::State(e) => write!(f, "State({e})"),
        }
    }
}

impl From<StateError> for SbrError<'_> {
    fn from(e: StateError) -> Self {
        SbrError::State(e)
    }
}

/// `δE_rmv(S) = min_{i∈S} E(S−{i}) − E(S)`.
pub fn delta_e_rmv(state: &ActiveSetState<'_>) -> Result<f64, StateError> {
    let trials = state.trial_errors();
    state.best_removal(&trials).map(|(cost, _)| cost)
}

struct Candidate {
    j_value: f64,
    is_removal: bool,
    atom: usize,
}

/// Runs SBR at a fixed `λ ≥ 0` from `s_init`.
///
/// Ties among equally good replacements go to insertions first, then to the
/// lowest atom index. Acceptance requires a strict decrease beyond an
/// absolute slack of `1e-12·(1 + ‖y‖²)` so the loop terminates under
/// floating point.
pub fn sbr<'a>(
    dict: &'a Dictionary,
    obs: &'a Observation,
    lambda: f64,
    s_init: &Support,
    opts: &SbrOptions,
) -> Result<SbrOutcome<'a>, SbrError<'a>> {
    debug_assert!(lambda >= 0.0);
    let mut state = ActiveSetState::from_support(dict, obs, s_init)?;
    let slack = 1e-12 * (1.0 + obs.norm_sq());
    let n = dict.cols();
    let mut trace = if opts.record_trace { Some(Vec::new()) } else { None };
    let mut replacements = 0usize;
    let mut iter = 0usize;

    let finish = |state: ActiveSetState<'a>,
                  trials: &[f64],
                  replacements: usize,
                  trace: Option<Vec<SbrTraceEntry>>| {
        let (delta_e_add, ell_add) = state.best_insertion(trials);
        SbrOutcome {
            state,
            delta_e_add,
            ell_add,
            replacements,
            trace,
        }
    };

    loop {
        iter += 1;
        let trials = state.trial_errors();
        if let Some(cap) = opts.max_iter {
            if iter > cap {
                return Err(SbrError::CapExceeded(Box::new(finish(
                    state,
                    &trials,
                    replacements,
                    trace,
                ))));
            }
        }
        let p = state.cardinality();
        let j_current = state.error() + lambda * p as f64;

        let mut best: Option<Candidate> = None;
        for atom in 0..n {
            let is_removal = state.is_active(atom);
            if is_removal && iter == 1 && opts.forbid_first_removal == Some(atom) {
                continue;
            }
            if !is_removal && !trials[atom].is_finite() {
                continue;
            }
            let card = if is_removal { p - 1 } else { p + 1 };
            let j_value = trials[atom] + lambda * card as f64;
            let better = match &best {
                None => true,
                Some(b) => {
                    j_value < b.j_value || (j_value == b.j_value && b.is_removal && !is_removal)
                }
            };
            if better {
                best = Some(Candidate {
                    j_value,
                    is_removal,
                    atom,
                });
            }
        }

        let Some(best) = best else {
            return Ok(finish(state, &trials, replacements, trace));
        };
        if best.j_value >= j_current - slack {
            return Ok(finish(state, &trials, replacements, trace));
        }
        if !best.is_removal {
            if let Some(cap) = opts.max_card {
                if p + 1 > cap {
                    return Err(SbrError::CapExceeded(Box::new(finish(
                        state,
                        &trials,
                        replacements,
                        trace,
                    ))));
                }
            }
            state.insert_atom(best.atom)?;
        } else {
            state.remove_atom(best.atom)?;
        }
        replacements += 1;
        if let Some(t) = trace.as_mut() {
            t.push(SbrTraceEntry {
                mv: if best.is_removal {
                    SbrMove::Remove
                } else {
                    SbrMove::Insert
                },
                atom: best.atom,
                j_value: best.j_value,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstsq;
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

    fn dense_error(dict: &Dictionary, obs: &Observation, support: &Support) -> f64 {
        let cols: Vec<&[f64]> = support.indices().iter().map(|&i| dict.column(i)).collect();
        lstsq::subset_error(dict.rows(), &cols, obs.values())
    }

    #[test]
    fn identity_large_lambda_keeps_empty() {
        let (dict, obs) = identity2();
        let out = sbr(&dict, &obs, 20.0, &Support::empty(), &SbrOptions::default()).unwrap();
        assert!(out.state.support().is_empty());
        assert_eq!(out.replacements, 0);
        // Best insertion from the empty set is atom 1 with gain 16.
        assert_abs_diff_eq!(out.delta_e_add, 16.0, epsilon = 1e-12);
        assert_eq!(out.ell_add, Some(1));
    }

    #[test]
    fn identity_moderate_lambda_selects_one_atom() {
        let (dict, obs) = identity2();
        let out = sbr(&dict, &obs, 10.0, &Support::empty(), &SbrOptions::default()).unwrap();
        assert_eq!(out.state.support().indices(), &[1]);
        assert_abs_diff_eq!(out.state.error() + 10.0, 19.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.delta_e_add, 9.0, epsilon = 1e-12);
        assert_eq!(out.ell_add, Some(0));
    }

    #[test]
    fn lambda_zero_is_forward_ols() {
        // With λ = 0 removals never help; the selection must be pure forward.
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let (dict, obs) = random_instance(&mut rng, 8, 6);
        let opts = SbrOptions {
            record_trace: true,
            ..SbrOptions::default()
        };
        let out = sbr(&dict, &obs, 0.0, &Support::empty(), &opts).unwrap();
        let trace = out.trace.unwrap();
        assert!(trace.iter().all(|t| t.mv == SbrMove::Insert));
        // Generic overdetermined instances take every column.
        assert_eq!(out.state.cardinality(), dict.cols());
        let expect = dense_error(&dict, &obs, &out.state.support());
        assert_abs_diff_eq!(
            out.state.error(),
            expect,
            epsilon = 1e-9 * (1.0 + obs.norm_sq())
        );
    }

    #[test]
    fn descent_and_local_optimality() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..20 {
            let (dict, obs) = random_instance(&mut rng, 10, 8);
            let lambda = rng.random_range(0.001..0.5);
            let opts = SbrOptions {
                record_trace: true,
                ..SbrOptions::default()
            };
            let out = sbr(&dict, &obs, lambda, &Support::empty(), &opts).unwrap();
            // Accepted costs strictly decrease.
            let trace = out.trace.unwrap();
            let mut last = obs.norm_sq();
            for entry in &trace {
                assert!(entry.j_value < last);
                last = entry.j_value;
            }
            // Exhaustive re-check of local optimality: λ lies in the
            // [δE_add, δE_rmv] window, via independent dense solves.
            let support = out.state.support();
            let err = dense_error(&dict, &obs, &support);
            let tol = 1e-9 * (1.0 + obs.norm_sq());
            let mut delta_add = 0.0f64;
            let mut delta_rmv = f64::INFINITY;
            for atom in 0..dict.cols() {
                if support.contains(atom) {
                    let e = dense_error(&dict, &obs, &support.without(atom).unwrap());
                    delta_rmv = delta_rmv.min(e - err);
                } else if support.len() < dict.rows() {
                    let e = dense_error(&dict, &obs, &support.with(atom).unwrap());
                    delta_add = delta_add.max(err - e);
                }
            }
            assert!(lambda >= delta_add - tol, "λ={lambda} < δE_add={delta_add}");
            assert!(lambda <= delta_rmv + tol, "λ={lambda} > δE_rmv={delta_rmv}");
            assert_abs_diff_eq!(out.delta_e_add, delta_add, epsilon = tol);
        }
    }

    /// A dictionary engineered so the best descent is: add a, add b, add c,
    /// then remove a. Atom a = (1, 1, δ) is the most correlated with
    /// y = (1, 1, 0) but becomes redundant once b = e1 and c = e2 are in.
    #[test]
    fn backward_step_regression() {
        let d = 0.5;
        let dict = Dictionary::from_rows(
            3,
            3,
            &[
                1.0, 1.0, 0.0, //
                1.0, 0.0, 1.0, //
                d, 0.0, 0.0,
            ],
        )
        .unwrap();
        let obs = Observation::new(vec![1.0, 1.0, 0.0]);
        let opts = SbrOptions {
            record_trace: true,
            ..SbrOptions::default()
        };
        let out = sbr(&dict, &obs, 0.01, &Support::empty(), &opts).unwrap();
        let trace = out.trace.unwrap();
        let moves: Vec<(SbrMove, usize)> = trace.iter().map(|t| (t.mv, t.atom)).collect();
        assert_eq!(
            moves,
            vec![
                (SbrMove::Insert, 0),
                (SbrMove::Insert, 1),
                (SbrMove::Insert, 2),
                (SbrMove::Remove, 0),
            ]
        );
        assert_eq!(out.state.support().indices(), &[1, 2]);
        assert!(trace.iter().any(|t| t.mv == SbrMove::Remove));
    }

    #[test]
    fn forbid_first_removal_excluded_once() {
        let (dict, obs) = identity2();
        let full = Support::from_indices(vec![0, 1]).unwrap();
        // At λ = 9.5, removing atom 0 is the best move from {0,1}.
        let out = sbr(&dict, &obs, 9.5, &full, &SbrOptions::default()).unwrap();
        assert_eq!(out.state.support().indices(), &[1]);
        // With that removal forbidden in the first iteration nothing moves.
        let opts = SbrOptions {
            forbid_first_removal: Some(0),
            ..SbrOptions::default()
        };
        let out = sbr(&dict, &obs, 9.5, &full, &opts).unwrap();
        assert_eq!(out.state.support().indices(), &[0, 1]);
        assert_eq!(out.replacements, 0);
    }

    #[test]
    fn delta_e_rmv_examples() {
        let (dict, obs) = identity2();
        let state =
            ActiveSetState::from_support(&dict, &obs, &Support::from_indices(vec![0, 1]).unwrap())
                .unwrap();
        assert_abs_diff_eq!(delta_e_rmv(&state).unwrap(), 9.0, epsilon = 1e-12);

        let single =
            ActiveSetState::from_support(&dict, &obs, &Support::from_indices(vec![1]).unwrap())
                .unwrap();
        assert_abs_diff_eq!(delta_e_rmv(&single).unwrap(), 16.0, epsilon = 1e-12);

        let empty = ActiveSetState::empty(&dict, &obs).unwrap();
        assert_eq!(delta_e_rmv(&empty).unwrap_err(), StateError::EmptySupport);
    }

    #[test]
    fn delta_e_rmv_matches_dense_removals() {
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let (dict, obs) = random_instance(&mut rng, 9, 7);
        let support = Support::from_indices(vec![0, 2, 5]).unwrap();
        let state = ActiveSetState::from_support(&dict, &obs, &support).unwrap();
        let err = dense_error(&dict, &obs, &support);
        let brute = support
            .indices()
            .iter()
            .map(|&i| dense_error(&dict, &obs, &support.without(i).unwrap()) - err)
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(
            delta_e_rmv(&state).unwrap(),
            brute,
            epsilon = 1e-9 * (1.0 + obs.norm_sq())
        );
    }

    #[test]
    fn iteration_cap_returns_partial() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let (dict, obs) = random_instance(&mut rng, 10, 8);
        let opts = SbrOptions {
            max_iter: Some(1),
            ..SbrOptions::default()
        };
        match sbr(&dict, &obs, 0.0, &Support::empty(), &opts) {
            Err(SbrError::CapExceeded(partial)) => {
                assert_eq!(partial.state.cardinality(), 1);
            }
            other => panic!("expected CapExceeded, got ok={:?}", other.is_ok()),
        }
    }
}
