//! Approximate regularization paths: decreasing breakpoints and the support
//! active on each segment.

use alloc::vec::Vec;
use core::fmt;

use crate::dict::{ActiveSetState, Dictionary, Observation, StateError, Support};

/// Which solver produced a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Producer {
    Csbr,
    L0pd,
}

/// Kind of breakpoint between consecutive segments.
///
/// A breakpoint is continuous when the handover solve performed no single
/// replacement, so both segment lines meet at the breakpoint. Polygon-descent
/// paths are continuous everywhere by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Continuity {
    Continuous,
    Jump,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathError {
    /// Query λ lies at or below the last computed breakpoint.
    OutOfRange(f64),
    State(StateError),
}

impl fmt::Display for PathError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathError::OutOfRange(l) => write!(f, "lambda {l} below the computed path range"),
            PathError::State(e) => write!(f, "{e}"),
        }
    }
}

/// Solver output: segment `j` carries support `supports[j]` on the interval
/// `(lambdas[j], lambdas[j-1]]`, with segment 0 (always the empty support)
/// covering `(lambdas[0], ∞)`. `lambdas` is strictly decreasing; a full
/// path ends at zero, an early-stopped path at its last breakpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub producer: Producer,
    pub lambdas: Vec<f64>,
    pub supports: Vec<Support>,
    /// Least-squares error per segment.
    pub errors: Vec<f64>,
    /// One flag per interior breakpoint: `continuity[j]` describes the
    /// handover at `lambdas[j]` from segment `j` to segment `j+1`.
    pub continuity: Vec<Continuity>,
    /// Segments whose next breakpoint had to be clamped to keep the
    /// breakpoint sequence strictly decreasing (floating-point ties).
    pub clamped_segments: Vec<usize>,
}

impl PathResult {
    /// Index of the segment active at `λ > 0`.
    ///
    /// Segments are half-open on the left and closed on the right, so a
    /// query exactly at a breakpoint returns the lower (larger-support)
    /// segment. Fails with `OutOfRange` when `λ` is at or below the last
    /// breakpoint of a truncated path (or `λ ≤ 0`).
    pub fn segment_at(&self, lambda: f64) -> Result<usize, PathError> {
        if lambda <= 0.0 {
            return Err(PathError::OutOfRange(lambda));
        }
        for (j, &bp) in self.lambdas.iter().enumerate() {
            if lambda > bp {
                return Ok(j);
            }
        }
        Err(PathError::OutOfRange(lambda))
    }

    /// Support active at `λ`.
    pub fn support_at(&self, lambda: f64) -> Result<&Support, PathError> {
        self.segment_at(lambda).map(|j| &self.supports[j])
    }

    /// Value `Ĵ(S;λ) = E(S) + λ|S|` of the active segment at `λ`.
    ///
    /// Defined on the covered domain `(last breakpoint, ∞)`, and at `λ = 0`
    /// for full paths (where it closes onto the last segment's error).
    pub fn value_at(&self, lambda: f64) -> Result<f64, PathError> {
        if lambda == 0.0 && self.lambdas.last() == Some(&0.0) {
            let j = self.supports.len() - 1;
            return Ok(self.errors[j]);
        }
        let j = self.segment_at(lambda)?;
        Ok(self.errors[j] + lambda * self.supports[j].len() as f64)
    }

    pub fn segment_count(&self) -> usize {
        self.supports.len()
    }

    /// Structural sanity: equal lengths, strictly decreasing non-negative
    /// breakpoints, empty leading support.
    pub fn check_structure(&self) -> Result<(), PathError> {
        debug_assert_eq!(self.lambdas.len(), self.supports.len());
        debug_assert_eq!(self.errors.len(), self.supports.len());
        debug_assert!(self.supports[0].is_empty());
        debug_assert!(self.lambdas.iter().all(|&l| l >= 0.0));
        debug_assert!(self.lambdas.windows(2).all(|w| w[0] > w[1]));
        Ok(())
    }
}

/// Support and least-squares amplitudes of the path solution at `λ`.
pub fn solution_at<'a>(
    dict: &'a Dictionary,
    obs: &'a Observation,
    path: &PathResult,
    lambda: f64,
) -> Result<(Support, Vec<f64>), PathError> {
    let support = path.support_at(lambda)?.clone();
    let state =
        ActiveSetState::from_support(dict, obs, &support).map_err(PathError::State)?;
    let amplitudes = state.amplitudes();
    Ok((support, amplitudes))
}
