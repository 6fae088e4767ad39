//! Dictionary and exact least-squares machinery over active sets.
//!
//! [`ActiveSetState`] tracks a support `S` together with the Cholesky factor
//! `L` of the active Gram matrix `A_Sᵀ A_S`, the solved vector
//! `u = L⁻¹ A_Sᵀ y` and the cross matrix `W = L⁻¹ A_Sᵀ A`. With these caches:
//!
//! - inserting atom `i` appends one Cholesky row from column `i` of `W`
//!   (no triangular solve), and the error drops by `(c_i − w_iᵀu)² / d_i`
//!   where `d_i = ‖a_i‖² − ‖w_i‖²` is the new pivot;
//! - removing an atom deletes its row and re-triangularizes the trailing
//!   block with Givens rotations in `O(|S|²)`, applying the same rotations
//!   to `W` and `u`;
//! - all `n` single-replacement trial errors `E(S ± {i})` come from the
//!   caches without materializing any new state: insertions via the pivot
//!   formula above, removals via `E(S−{i}) − E(S) = x_i² / (G⁻¹)_{ii}`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Relative pivot threshold below which an atom counts as numerically
/// dependent on the active set.
const PIVOT_REL_TOL: f64 = 1e-10;

/// Errors from dictionary construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DictError {
    /// Column `index` has norm below `1e-12` of the largest column norm.
    ZeroColumn(usize),
    /// Data length does not match the declared shape.
    BadShape { rows: usize, cols: usize, len: usize },
}

impl fmt::Display for DictError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DictError::ZeroColumn(i) => write!(f, "column {i} has (near-)zero norm"),
            DictError::BadShape { rows, cols, len } => {
                write!(f, "matrix data length {len} does not match {rows}x{cols}")
            }
        }
    }
}

/// Errors from active-set operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateError {
    /// Observation length differs from the dictionary row count.
    DimensionMismatch { rows: usize, obs_len: usize },
    /// The atom is already in the support.
    AlreadyActive(usize),
    /// The atom is not in the support.
    NotActive(usize),
    /// The Cholesky pivot for this atom fell below the relative threshold:
    /// the atom is numerically dependent on the active set.
    RankDeficient(usize),
    /// The operation needs a non-empty support.
    EmptySupport,
}

impl fmt::Display for StateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateError::DimensionMismatch { rows, obs_len } => {
                write!(f, "observation length {obs_len} does not match {rows} rows")
            }
            StateError::AlreadyActive(i) => write!(f, "atom {i} is already active"),
            StateError::NotActive(i) => write!(f, "atom {i} is not active"),
            StateError::RankDeficient(i) => write!(f, "atom {i} is numerically dependent"),
            StateError::EmptySupport => write!(f, "operation requires a non-empty support"),
        }
    }
}

/// Immutable dense dictionary with cached column norms and Gram matrix.
#[derive(Clone, Debug)]
pub struct Dictionary {
    /// Column-major storage, `rows × cols`.
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    col_norms_sq: Vec<f64>,
    /// Row-major `cols × cols` Gram matrix `AᵀA`.
    gram: Vec<f64>,
}

impl Dictionary {
    /// Builds a dictionary from row-major dense data.
    ///
    /// Rejects empty shapes and columns whose norm is below `1e-12` of the
    /// largest column norm.
    pub fn from_rows(rows: usize, cols: usize, row_major: &[f64]) -> Result<Self, DictError> {
        if rows == 0 || cols == 0 || row_major.len() != rows * cols {
            return Err(DictError::BadShape {
                rows,
                cols,
                len: row_major.len(),
            });
        }
        let mut data = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                data[c * rows + r] = row_major[r * cols + c];
            }
        }
        Self::from_column_major(rows, cols, data)
    }

    /// Builds a dictionary from column-major dense data (takes ownership).
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, DictError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(DictError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        let col_norms_sq: Vec<f64> = (0..cols)
            .map(|c| math::norm_sq(&data[c * rows..(c + 1) * rows]))
            .collect();
        let max_norm_sq = col_norms_sq.iter().fold(0.0f64, |m, v| m.max(*v));
        for (c, &nsq) in col_norms_sq.iter().enumerate() {
            // norm < 1e-12 * max_norm  ⇔  norm² < 1e-24 * max_norm²
            if nsq <= 1e-24 * max_norm_sq {
                return Err(DictError::ZeroColumn(c));
            }
        }
        let mut gram = vec![0.0; cols * cols];
        for i in 0..cols {
            let ci = &data[i * rows..(i + 1) * rows];
            gram[i * cols + i] = col_norms_sq[i];
            for j in i + 1..cols {
                let g = math::dot(ci, &data[j * rows..(j + 1) * rows]);
                gram[i * cols + j] = g;
                gram[j * cols + i] = g;
            }
        }
        Ok(Dictionary {
            data,
            rows,
            cols,
            col_norms_sq,
            gram,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column `i` as a slice of length `rows`.
    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i * self.rows..(i + 1) * self.rows]
    }

    pub fn col_norms_sq(&self) -> &[f64] {
        &self.col_norms_sq
    }

    pub fn col_norm_sq(&self, i: usize) -> f64 {
        self.col_norms_sq[i]
    }

    /// Row `i` of the Gram matrix `AᵀA`.
    pub fn gram_row(&self, i: usize) -> &[f64] {
        &self.gram[i * self.cols..(i + 1) * self.cols]
    }

    /// `A x` for a dense coefficient vector of length `cols`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (c, &xc) in x.iter().enumerate() {
            if xc != 0.0 {
                for (o, v) in out.iter_mut().zip(self.column(c)) {
                    *o += xc * v;
                }
            }
        }
        out
    }

    /// `Aᵀ v` for a vector of length `rows`.
    pub fn correlate(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        (0..self.cols).map(|c| math::dot(self.column(c), v)).collect()
    }
}

/// Observation vector with cached squared norm.
#[derive(Clone)]
pub struct Observation {
    y: Vec<f64>,
    norm_sq: f64,
}

impl Observation {
    pub fn new(y: Vec<f64>) -> Self {
        let norm_sq = math::norm_sq(&y);
        Observation { y, norm_sq }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Cached `‖y‖²`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }
}

/// A support: strictly increasing atom indices.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Support(Vec<usize>);

impl Support {
    pub fn empty() -> Self {
        Support(Vec::new())
    }

    /// Builds a support from indices in any order; duplicates are rejected.
    pub fn from_indices(mut indices: Vec<usize>) -> Option<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some(Support(indices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.0.binary_search(&atom).is_ok()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// `S + {atom}`; returns `None` if already present.
    pub fn with(&self, atom: usize) -> Option<Self> {
        match self.0.binary_search(&atom) {
            Ok(_) => None,
            Err(pos) => {
                let mut v = self.0.clone();
                v.insert(pos, atom);
                Some(Support(v))
            }
        }
    }

    /// `S − {atom}`; returns `None` if absent.
    pub fn without(&self, atom: usize) -> Option<Self> {
        match self.0.binary_search(&atom) {
            Ok(pos) => {
                let mut v = self.0.clone();
                v.remove(pos);
                Some(Support(v))
            }
            Err(_) => None,
        }
    }

    /// Number of shared atoms with another support.
    pub fn intersection_len(&self, other: &Support) -> usize {
        let mut count = 0;
        let mut it = other.0.iter().peekable();
        for &a in &self.0 {
            while let Some(&&b) = it.peek() {
                if b < a {
                    it.next();
                } else {
                    break;
                }
            }
            if it.peek() == Some(&&a) {
                count += 1;
            }
        }
        count
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Packed lower-triangular factor; row `r` holds `r + 1` entries.
#[derive(Clone, Debug)]
struct LowerTri {
    rows: Vec<Vec<f64>>,
}

impl LowerTri {
    fn new() -> Self {
        LowerTri { rows: Vec::new() }
    }

    fn order(&self) -> usize {
        self.rows.len()
    }

    /// Forward-solves `L z = e_k`, returning `‖z‖²`.
    fn unit_solve_norm_sq(&self, k: usize) -> f64 {
        let p = self.order();
        let mut z = vec![0.0; p];
        z[k] = 1.0 / self.rows[k][k];
        for r in k + 1..p {
            let row = &self.rows[r];
            let mut acc = 0.0;
            for j in k..r {
                acc += row[j] * z[j];
            }
            z[r] = -acc / row[r];
        }
        math::norm_sq(&z[k..])
    }

    /// Back-solves `Lᵀ x = rhs`.
    fn transpose_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let p = self.order();
        debug_assert_eq!(rhs.len(), p);
        let mut x = vec![0.0; p];
        for r in (0..p).rev() {
            let mut acc = rhs[r];
            for k in r + 1..p {
                acc -= self.rows[k][r] * x[k];
            }
            x[r] = acc / self.rows[r][r];
        }
        x
    }
}

/// A support plus the recursive Cholesky state of its least-squares problem.
///
/// Holds references to the dictionary and observation it was built from.
/// Single-owner mutable; cloning is cheap enough for trial bookkeeping.
#[derive(Clone)]
pub struct ActiveSetState<'a> {
    dict: &'a Dictionary,
    obs: &'a Observation,
    /// Active atoms in insertion order.
    active: Vec<usize>,
    chol: LowerTri,
    /// Row-major `p × n` cross matrix `W = L⁻¹ A_Sᵀ A`.
    cross: Vec<f64>,
    /// `u = L⁻¹ A_Sᵀ y`, length `p`.
    proj: Vec<f64>,
    /// Correlations `Aᵀ y`, length `n`.
    corr: Vec<f64>,
    error: f64,
}

impl<'a> ActiveSetState<'a> {
    /// State for the empty support: `E(∅) = ‖y‖²`.
    pub fn empty(dict: &'a Dictionary, obs: &'a Observation) -> Result<Self, StateError> {
        if obs.len() != dict.rows() {
            return Err(StateError::DimensionMismatch {
                rows: dict.rows(),
                obs_len: obs.len(),
            });
        }
        let corr = dict.correlate(obs.values());
        Ok(ActiveSetState {
            dict,
            obs,
            active: Vec::new(),
            chol: LowerTri::new(),
            cross: Vec::new(),
            proj: Vec::new(),
            corr,
            error: obs.norm_sq(),
        })
    }

    /// State for an arbitrary support, built by repeated insertion.
    pub fn from_support(
        dict: &'a Dictionary,
        obs: &'a Observation,
        support: &Support,
    ) -> Result<Self, StateError> {
        let mut state = Self::empty(dict, obs)?;
        for &atom in support.indices() {
            state.insert_atom(atom)?;
        }
        Ok(state)
    }

    pub fn dictionary(&self) -> &'a Dictionary {
        self.dict
    }

    pub fn observation(&self) -> &'a Observation {
        self.obs
    }

    /// `E(S)`, the least-squares error of the current support.
    pub fn error(&self) -> f64 {
        self.error
    }

    pub fn cardinality(&self) -> usize {
        self.active.len()
    }

    pub fn is_active(&self, atom: usize) -> bool {
        self.active.contains(&atom)
    }

    /// Current support (sorted).
    pub fn support(&self) -> Support {
        Support::from_indices(self.active.clone()).expect("active atoms are unique")
    }

    /// Correlations `Aᵀ y` cached at construction.
    pub fn correlations(&self) -> &[f64] {
        &self.corr
    }

    fn pivot_tol(&self, atom: usize) -> f64 {
        let mut trace = self.dict.col_norm_sq(atom);
        for &a in &self.active {
            trace += self.dict.col_norm_sq(a);
        }
        PIVOT_REL_TOL * trace / (self.active.len() + 1) as f64
    }

    /// Pivot `d_i = ‖a_i‖² − ‖w_i‖²` and projection mismatch `c_i − w_iᵀ u`
    /// for an insertion trial of atom `i ∉ S`.
    fn insertion_terms(&self, atom: usize) -> (f64, f64) {
        let p = self.active.len();
        let n = self.dict.cols();
        let mut w_norm_sq = 0.0;
        let mut w_dot_u = 0.0;
        for r in 0..p {
            let w = self.cross[r * n + atom];
            w_norm_sq += w * w;
            w_dot_u += w * self.proj[r];
        }
        let d = self.dict.col_norm_sq(atom) - w_norm_sq;
        let mismatch = self.corr[atom] - w_dot_u;
        (d, mismatch)
    }

    /// Inserts an atom, extending the Cholesky factor by one row.
    ///
    /// Errors with `AlreadyActive` if the atom is in the support and
    /// `RankDeficient` if its pivot falls below the relative threshold
    /// (which also covers `|S| + 1 > min(m, n)`).
    pub fn insert_atom(&mut self, atom: usize) -> Result<(), StateError> {
        let n = self.dict.cols();
        let p = self.active.len();
        if atom >= n {
            return Err(StateError::NotActive(atom));
        }
        if self.active.contains(&atom) {
            return Err(StateError::AlreadyActive(atom));
        }
        if p + 1 > self.dict.rows().min(n) {
            return Err(StateError::RankDeficient(atom));
        }
        let (d, mismatch) = self.insertion_terms(atom);
        if d <= self.pivot_tol(atom) {
            return Err(StateError::RankDeficient(atom));
        }
        let pivot = math::sqrt(d);

        // New Cholesky row [w, pivot] where w is column `atom` of the cross
        // matrix.
        let mut row = Vec::with_capacity(p + 1);
        for r in 0..p {
            row.push(self.cross[r * n + atom]);
        }
        row.push(pivot);

        // New cross row: (gram_row(atom) − wᵀ W) / pivot.
        let gram = self.dict.gram_row(atom);
        let mut new_cross = gram.to_vec();
        for r in 0..p {
            let w = row[r];
            if w != 0.0 {
                let base = &self.cross[r * n..(r + 1) * n];
                for (nc, cv) in new_cross.iter_mut().zip(base) {
                    *nc -= w * cv;
                }
            }
        }
        for v in new_cross.iter_mut() {
            *v /= pivot;
        }

        let u_new = mismatch / pivot;
        self.chol.rows.push(row);
        self.cross.extend_from_slice(&new_cross);
        self.proj.push(u_new);
        self.error = (self.error - u_new * u_new).max(0.0);
        self.active.push(atom);
        Ok(())
    }

    /// Removes an atom, re-triangularizing the trailing Cholesky block with
    /// Givens rotations in `O(|S|²)` and applying the same rotations to the
    /// cached solves.
    pub fn remove_atom(&mut self, atom: usize) -> Result<(), StateError> {
        let p = self.active.len();
        let n = self.dict.cols();
        let Some(k) = self.active.iter().position(|&a| a == atom) else {
            return Err(StateError::NotActive(atom));
        };

        self.active.remove(k);
        self.chol.rows.remove(k);
        // Rows k.. now carry one entry too many (their old column k survives
        // implicitly as column k..); sweep Givens rotations on column pairs
        // (j, j+1) to restore triangularity, mirroring each rotation on the
        // rows of the cross matrix and the projection vector.
        for j in k..p - 1 {
            let a = self.chol.rows[j][j];
            let b = self.chol.rows[j][j + 1];
            let r = math::hypot(a, b);
            debug_assert!(r > 0.0, "removal hit a singular trailing block");
            let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
            // Columns j, j+1 of the factor, rows j.. (rows above have zeros).
            for row in self.chol.rows.iter_mut().skip(j) {
                let x = row[j];
                let y = row[j + 1];
                row[j] = c * x + s * y;
                row[j + 1] = -s * x + c * y;
            }
            self.chol.rows[j][j + 1] = 0.0;
            // Rows j, j+1 of the cross matrix.
            let (top, bottom) = self.cross.split_at_mut((j + 1) * n);
            let row_j = &mut top[j * n..];
            let row_j1 = &mut bottom[..n];
            for (x, y) in row_j.iter_mut().zip(row_j1.iter_mut()) {
                let xv = *x;
                let yv = *y;
                *x = c * xv + s * yv;
                *y = -s * xv + c * yv;
            }
            // Entries j, j+1 of the projection.
            let x = self.proj[j];
            let y = self.proj[j + 1];
            self.proj[j] = c * x + s * y;
            self.proj[j + 1] = -s * x + c * y;
        }
        // Drop the now-spurious trailing column/row/entry.
        for (r, row) in self.chol.rows.iter_mut().enumerate() {
            row.truncate(r + 1);
        }
        let dropped = self.proj.pop().unwrap_or(0.0);
        self.error += dropped * dropped;
        self.cross.truncate((p - 1) * n);
        Ok(())
    }

    /// Least-squares amplitudes on the current support, as a dense vector of
    /// length `n` supported exactly on `S`.
    pub fn amplitudes(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dict.cols()];
        if self.active.is_empty() {
            return x;
        }
        let coeffs = self.chol.transpose_solve(&self.proj);
        for (pos, &atom) in self.active.iter().enumerate() {
            x[atom] = coeffs[pos];
        }
        x
    }

    /// All `n` single-replacement trial errors: `E(S + {i})` for `i ∉ S`
    /// (`+∞` for numerically dependent atoms), `E(S − {i})` for `i ∈ S`.
    ///
    /// The state is not modified and no trial state is materialized.
    pub fn trial_errors(&self) -> Vec<f64> {
        let n = self.dict.cols();
        let p = self.active.len();
        let mut out = vec![0.0; n];

        // Removal trials: E(S−{k}) = E(S) + x_k² / (G⁻¹)_{kk}.
        if p > 0 {
            let coeffs = self.chol.transpose_solve(&self.proj);
            for (pos, &atom) in self.active.iter().enumerate() {
                let gram_inv_diag = self.chol.unit_solve_norm_sq(pos);
                out[atom] = self.error + coeffs[pos] * coeffs[pos] / gram_inv_diag;
            }
        }

        // Insertion trials from the cached cross matrix.
        for atom in 0..n {
            if self.active.contains(&atom) {
                continue;
            }
            let (d, mismatch) = self.insertion_terms(atom);
            out[atom] = if d <= self.pivot_tol(atom) {
                f64::INFINITY
            } else {
                (self.error - mismatch * mismatch / d).max(0.0)
            };
        }
        out
    }

    /// Best insertion: `(δE_add, ℓ_add)` with
    /// `δE_add = max_{i∉S} E(S) − E(S+{i})`, ties to the lowest atom index.
    /// Returns `(0.0, None)` when no atom can be inserted.
    pub fn best_insertion(&self, trials: &[f64]) -> (f64, Option<usize>) {
        let mut best = 0.0f64;
        let mut best_atom = None;
        for atom in 0..self.dict.cols() {
            if self.active.contains(&atom) || !trials[atom].is_finite() {
                continue;
            }
            let gain = self.error - trials[atom];
            debug_assert!(gain >= 0.0);
            if best_atom.is_none() || gain > best {
                best = gain;
                best_atom = Some(atom);
            }
        }
        if best_atom.is_none() {
            (0.0, None)
        } else {
            (best.max(0.0), best_atom)
        }
    }

    /// Best removal: `(δE_rmv, ℓ_rmv)` with
    /// `δE_rmv = min_{i∈S} E(S−{i}) − E(S)`, ties to the lowest atom index.
    pub fn best_removal(&self, trials: &[f64]) -> Result<(f64, usize), StateError> {
        if self.active.is_empty() {
            return Err(StateError::EmptySupport);
        }
        let mut best = f64::INFINITY;
        let mut best_atom = usize::MAX;
        let mut sorted: Vec<usize> = self.active.clone();
        sorted.sort_unstable();
        for atom in sorted {
            let cost = trials[atom] - self.error;
            if cost < best {
                best = cost;
                best_atom = atom;
            }
        }
        Ok((best.max(0.0), best_atom))
    }
}
