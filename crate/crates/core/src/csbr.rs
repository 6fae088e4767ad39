//! Continuation SBR: repeated SBR solves at adaptively decreasing λ.
//!
//! The first breakpoint is `λ_1 = max_i ⟨y,a_i⟩²/‖a_i‖²`, attained by the
//! initial atom. Each round solves SBR at the current breakpoint (with the
//! just-added atom's removal forbidden in the first iteration, since both
//! lines meet there), then moves to the next breakpoint `λ_{j+1} = δE_add`
//! of the solution and warm-starts from `S_j + {ℓ_add}`. The scan ends at
//! zero or at an early stopping rule.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dict::{ActiveSetState, Dictionary, Observation, StateError, Support};
use crate::path::{Continuity, PathResult, Producer};
use crate::sbr::{sbr, SbrError, SbrOptions};

/// Early stopping for the continuation scan. The default scans the whole
/// range down to zero.
#[derive(Clone, Debug)]
pub struct StoppingRule {
    /// Stop before solving at breakpoints `λ_j ≤ lambda_stop`.
    pub lambda_stop: f64,
    /// Stop once a solution reaches this cardinality.
    pub k_stop: Option<usize>,
    /// Stop once a solution error drops to this level.
    pub eps_stop: Option<f64>,
    /// Safety cap on the number of segments.
    pub max_segments: Option<usize>,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            lambda_stop: 0.0,
            k_stop: None,
            eps_stop: None,
            max_segments: None,
        }
    }
}

pub enum CsbrError {
    /// `δE_add` exceeded the current breakpoint by more than a floating-point
    /// tie allows: a numerical fault. Carries the partial path.
    NonDecreasingLambda { partial: Box<PathResult> },
    /// The segment cap fired; carries the partial path.
    CapExceeded { partial: Box<PathResult> },
    State(StateError),
}

impl fmt::Debug for CsbrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsbrError::NonDecreasingLambda { partial } => {
                write!(f, "NonDecreasingLambda({} segments)", partial.segment_count())
            }
            CsbrError::CapExceeded { partial } => {
                write!(f, "CapExceeded({} segments)", partial.segment_count())
            }
            CsbrError::State(e) => write!(f, "State({e})"),
        }
    }
}

impl From<StateError> for CsbrError {
    fn from(e: StateError) -> Self {
        CsbrError::State(e)
    }
}

/// First breakpoint and its atom: `(ℓ_add, λ_1)` with
/// `λ_1 = max_i ⟨y,a_i⟩²/‖a_i‖²`, ties to the lowest index.
pub fn initial_breakpoint(dict: &Dictionary, obs: &Observation) -> Result<(usize, f64), StateError> {
    let state = ActiveSetState::empty(dict, obs)?;
    let corr = state.correlations();
    let mut best = f64::NEG_INFINITY;
    let mut best_atom = 0;
    for i in 0..dict.cols() {
        let v = corr[i] * corr[i] / dict.col_norm_sq(i);
        if v > best {
            best = v;
            best_atom = i;
        }
    }
    Ok((best_atom, best.max(0.0)))
}

/// Runs the continuation scan and returns the approximate path.
pub fn csbr(
    dict: &Dictionary,
    obs: &Observation,
    stop: &StoppingRule,
) -> Result<PathResult, CsbrError> {
    let (ell0, lambda1) = initial_breakpoint(dict, obs)?;
    let mut path = PathResult {
        producer: Producer::Csbr,
        lambdas: vec![lambda1],
        supports: vec![Support::empty()],
        errors: vec![obs.norm_sq()],
        continuity: Vec::new(),
        clamped_segments: Vec::new(),
    };
    if lambda1 <= 0.0 {
        // Zero data: the empty support is optimal everywhere.
        path.lambdas[0] = 0.0;
        return Ok(path);
    }

    let slack = 1e-12 * (1.0 + obs.norm_sq());
    let max_segments = stop.max_segments.unwrap_or(8 * dict.cols() + 64);
    let mut s_init = Support::from_indices(vec![ell0]).expect("single atom");
    let mut forbid = Some(ell0);
    let mut lambda_cur = lambda1;

    loop {
        if lambda_cur <= stop.lambda_stop {
            break;
        }
        if path.segment_count() > max_segments {
            return Err(CsbrError::CapExceeded {
                partial: Box::new(path),
            });
        }
        let opts = SbrOptions {
            forbid_first_removal: forbid,
            ..SbrOptions::default()
        };
        let outcome = match sbr(dict, obs, lambda_cur, &s_init, &opts) {
            Ok(o) => o,
            Err(SbrError::State(e)) => return Err(CsbrError::State(e)),
            Err(SbrError::CapExceeded(_)) => unreachable!("sbr runs uncapped here"),
        };
        path.supports.push(outcome.state.support());
        path.errors.push(outcome.state.error());
        path.continuity.push(if outcome.replacements == 0 {
            Continuity::Continuous
        } else {
            Continuity::Jump
        });

        let delta = outcome.delta_e_add;
        let lambda_next = if delta >= lambda_cur {
            if delta <= lambda_cur * (1.0 + 1e-9) + slack {
                // Floating-point tie with the local-optimality bound: clamp
                // to keep breakpoints strictly decreasing.
                path.clamped_segments.push(path.supports.len() - 1);
                lambda_cur * (1.0 - 1e-12)
            } else {
                path.lambdas.push(lambda_cur);
                return Err(CsbrError::NonDecreasingLambda {
                    partial: Box::new(path),
                });
            }
        } else {
            delta
        };
        path.lambdas.push(lambda_next);

        let reached_k = stop
            .k_stop
            .is_some_and(|k| path.supports.last().unwrap().len() >= k);
        let reached_eps = stop
            .eps_stop
            .is_some_and(|e| *path.errors.last().unwrap() <= e);
        if reached_k || reached_eps {
            break;
        }
        let Some(ell) = outcome.ell_add else {
            break;
        };
        let Some(next_init) = path.supports.last().unwrap().with(ell) else {
            break;
        };
        s_init = next_init;
        forbid = Some(ell);
        lambda_cur = lambda_next;
    }
    path.check_structure().ok();
    Ok(path)
}
