//! The concave polygon `λ ↦ min_j {E(S_j) + λ|S_j|}` and its descent update.
//!
//! Every support draws a line whose intercept is its least-squares error and
//! whose slope is its cardinality. The polygon is the pointwise minimum of a
//! working set of such lines over `λ ∈ [0, ∞)`: concave, continuous and
//! piecewise affine, with edges sorted by strictly increasing cardinality as
//! `λ` decreases and breakpoints `λ_0 = +∞ > λ_1 > … > λ_{J+1} = 0`.
//!
//! [`ConcavePolygon::ccv_descent`] folds a candidate line in: if the line
//! passes strictly below the polygon anywhere, it becomes an edge and every
//! edge it dominates over its whole interval is discarded.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dict::Support;

/// Absolute slack used for "lies strictly below" tests, guarding against
/// churn from floating-point ties.
const BELOW_SLACK: f64 = 1e-12;

/// A support together with the line `λ ↦ error + λ·card` it draws.
#[derive(Clone, Debug, PartialEq)]
pub struct LineS {
    pub support: Support,
    /// Intercept: the least-squares error `E(S)`.
    pub error: f64,
    /// Slope: the cardinality `|S|`.
    pub card: usize,
    /// Whether this support's single replacements have been explored.
    pub explored: bool,
}

impl LineS {
    pub fn new(support: Support, error: f64) -> Self {
        let card = support.len();
        LineS {
            support,
            error,
            card,
            explored: false,
        }
    }

    pub fn value_at(&self, lambda: f64) -> f64 {
        self.error + lambda * self.card as f64
    }
}

/// Concave piecewise-affine lower envelope of a working set of lines.
///
/// `breakpoints` has one more entry than `edges`; edge `j` covers the
/// interval `(breakpoints[j+1], breakpoints[j])`, with `breakpoints[0] = +∞`
/// (a sentinel, never used in arithmetic) and the last breakpoint pinned
/// to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcavePolygon {
    edges: Vec<LineS>,
    breakpoints: Vec<f64>,
}

impl ConcavePolygon {
    /// The one-edge polygon of the empty support: a flat line at `‖y‖²`.
    pub fn singleton(err_empty: f64) -> Self {
        debug_assert!(err_empty >= 0.0);
        ConcavePolygon {
            edges: vec![LineS::new(Support::empty(), err_empty)],
            breakpoints: vec![f64::INFINITY, 0.0],
        }
    }

    pub fn edges(&self) -> &[LineS] {
        &self.edges
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Upper breakpoint `λ_j` of edge `j` (`+∞` for the first edge).
    pub fn upper_breakpoint(&self, j: usize) -> f64 {
        self.breakpoints[j]
    }

    /// Lower breakpoint `λ_{j+1}` of edge `j` (`0` for the last edge).
    pub fn lower_breakpoint(&self, j: usize) -> f64 {
        self.breakpoints[j + 1]
    }

    /// Lowest-index (hence lowest-cardinality) unexplored edge, if any.
    pub fn first_unexplored(&self) -> Option<usize> {
        self.edges.iter().position(|e| !e.explored)
    }

    pub fn mark_explored(&mut self, j: usize) {
        self.edges[j].explored = true;
    }

    /// Evaluates the polygon at `λ ≥ 0`: `(min_j value, active edge index)`.
    /// At an interior breakpoint the lower-λ (larger-cardinality) edge is
    /// reported.
    pub fn evaluate(&self, lambda: f64) -> (f64, usize) {
        debug_assert!(lambda >= 0.0);
        let last = self.edges.len() - 1;
        for j in 0..last {
            if lambda > self.breakpoints[j + 1] {
                return (self.edges[j].value_at(lambda), j);
            }
        }
        (self.edges[last].value_at(lambda), last)
    }

    /// Largest interval `(λ_inf, λ_sup)` on which the line
    /// `λ ↦ error + λ·card` lies strictly below the polygon, clipped to
    /// `[0, ∞)`. Returns the `(1, 0)` sentinel (with `λ_inf > λ_sup`) when
    /// the line never goes below.
    pub fn intersect(&self, error: f64, card: usize) -> (f64, f64) {
        const EMPTY: (f64, f64) = (1.0, 0.0);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (j, edge) in self.edges.iter().enumerate() {
            let a = self.breakpoints[j + 1];
            let b = self.breakpoints[j];
            // Region where the new line is below this edge's line.
            let (r_lo, r_hi) = if card == edge.card {
                if error < edge.error - BELOW_SLACK {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    continue;
                }
            } else {
                let cross = (edge.error - error) / (card as f64 - edge.card as f64);
                if card > edge.card {
                    (f64::NEG_INFINITY, cross)
                } else {
                    (cross, f64::INFINITY)
                }
            };
            let seg_lo = r_lo.max(a);
            let seg_hi = r_hi.min(b);
            if seg_lo < seg_hi {
                lo = lo.min(seg_lo);
                hi = hi.max(seg_hi);
            }
        }
        lo = lo.max(0.0);
        if !(lo < hi) {
            return EMPTY;
        }
        // Reject near-tangent intervals: the line must clear the polygon by
        // more than the slack somewhere inside.
        let mid = 0.5 * (lo + hi);
        let (poly_mid, _) = self.evaluate(mid);
        if error + mid * card as f64 >= poly_mid - BELOW_SLACK {
            return EMPTY;
        }
        (lo, hi)
    }

    fn below_at(line: &LineS, edge: &LineS, lambda: f64) -> bool {
        if lambda.is_infinite() {
            // Only the flat empty edge reaches +∞; any line with a larger
            // slope is above it there.
            return line.card < edge.card
                || (line.card == edge.card && line.error < edge.error - BELOW_SLACK);
        }
        line.value_at(lambda) < edge.value_at(lambda) - BELOW_SLACK
    }

    /// Folds a new line into the polygon (concave polygon descent).
    ///
    /// Returns `true` if the line was inserted as a new (unexplored) edge.
    /// A line whose support is already an edge, or that never passes strictly
    /// below the polygon, leaves the polygon untouched and returns `false`.
    pub fn ccv_descent(&mut self, new: LineS) -> bool {
        debug_assert!(new.error >= 0.0 && new.error.is_finite());
        if self.edges.iter().any(|e| e.support == new.support) {
            return false;
        }
        let (lo, hi) = self.intersect(new.error, new.card);
        if !(lo < hi) {
            return false;
        }

        // Drop edges the new line dominates over their entire interval; an
        // affine function is below another on an interval iff it is below at
        // both endpoints.
        let breakpoints = core::mem::take(&mut self.breakpoints);
        let old_edges = core::mem::take(&mut self.edges);
        let mut survivors: Vec<LineS> = Vec::with_capacity(old_edges.len() + 1);
        for (j, edge) in old_edges.into_iter().enumerate() {
            let a = breakpoints[j + 1];
            let b = breakpoints[j];
            if Self::below_at(&new, &edge, a) && Self::below_at(&new, &edge, b) {
                continue;
            }
            survivors.push(edge);
        }
        let mut inserted = new;
        inserted.explored = false;
        survivors.push(inserted);
        survivors.sort_by_key(|e| e.card);

        self.edges = survivors;
        self.rebuild_breakpoints();
        debug_assert!(self.check_invariants().is_ok());
        true
    }

    /// Recomputes breakpoints as pairwise intersections of neighboring edges
    /// and prunes edges whose interval collapses (degenerate vertices from
    /// floating-point ties).
    fn rebuild_breakpoints(&mut self) {
        loop {
            let j_len = self.edges.len();
            self.breakpoints.clear();
            self.breakpoints.push(f64::INFINITY);
            let mut collapsed = None;
            for j in 1..j_len {
                let hi = &self.edges[j - 1];
                let lo = &self.edges[j];
                debug_assert!(lo.card > hi.card);
                let cross = (hi.error - lo.error) / (lo.card as f64 - hi.card as f64);
                let prev = self.breakpoints[j - 1];
                if cross >= prev || cross <= 0.0 {
                    // A collapsed interval: one of the pair never shows on the
                    // envelope. Keep whichever is lower at a probe inside the
                    // contested range.
                    let probe = if cross <= 0.0 {
                        if prev.is_finite() {
                            0.5 * prev
                        } else {
                            1.0
                        }
                    } else if prev.is_finite() {
                        0.5 * (cross + prev)
                    } else {
                        cross + 1.0
                    };
                    let keep_hi = hi.value_at(probe) <= lo.value_at(probe);
                    collapsed = Some(if keep_hi { j } else { j - 1 });
                    break;
                }
                self.breakpoints.push(cross);
            }
            match collapsed {
                Some(j) => {
                    self.edges.remove(j);
                }
                None => {
                    self.breakpoints.push(0.0);
                    return;
                }
            }
        }
    }

    /// Structural invariants: strictly increasing cardinalities, strictly
    /// decreasing breakpoints covering `(0, ∞)`, continuity at every vertex,
    /// and each edge minimal inside its own interval.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.edges.is_empty() {
            return Err(String::from("polygon has no edges"));
        }
        if self.breakpoints.len() != self.edges.len() + 1 {
            return Err(String::from("breakpoint/edge count mismatch"));
        }
        if !self.breakpoints[0].is_infinite() {
            return Err(String::from("first breakpoint must be +inf"));
        }
        if *self.breakpoints.last().unwrap() != 0.0 {
            return Err(String::from("last breakpoint must be 0"));
        }
        if self.edges[0].card != 0 {
            return Err(String::from("first edge must be the empty support"));
        }
        for w in self.edges.windows(2) {
            if w[1].card <= w[0].card {
                return Err(format!(
                    "cardinalities not strictly increasing: {} then {}",
                    w[0].card, w[1].card
                ));
            }
        }
        for j in 1..self.breakpoints.len() - 1 {
            if !(self.breakpoints[j] > self.breakpoints[j + 1]) {
                return Err(format!(
                    "breakpoints not strictly decreasing at {j}: {} then {}",
                    self.breakpoints[j],
                    self.breakpoints[j + 1]
                ));
            }
        }
        // Continuity: adjacent edges agree at their shared vertex.
        for j in 1..self.edges.len() {
            let bp = self.breakpoints[j];
            let a = self.edges[j - 1].value_at(bp);
            let b = self.edges[j].value_at(bp);
            let tol = 1e-9 * (1.0 + a.abs().max(b.abs()));
            if (a - b).abs() > tol {
                return Err(format!("discontinuity at breakpoint {bp}: {a} vs {b}"));
            }
        }
        // Pointwise minimality: inside its interval each edge is the minimum
        // over all edges.
        for j in 0..self.edges.len() {
            let hi = self.breakpoints[j];
            let lo = self.breakpoints[j + 1];
            let probe = if hi.is_infinite() {
                lo + 1.0
            } else {
                0.5 * (lo + hi)
            };
            let own = self.edges[j].value_at(probe);
            for (k, other) in self.edges.iter().enumerate() {
                if k != j && other.value_at(probe) < own - 1e-9 * (1.0 + own.abs()) {
                    return Err(format!(
                        "edge {j} is not minimal at {probe}: edge {k} lies below"
                    ));
                }
            }
        }
        Ok(())
    }
}
