//! Synthetic benchmark instances: sparse deconvolution and jump detection.
//!
//! The deconvolution dictionary is a Toeplitz convolution matrix for a
//! Gaussian impulse response of standard deviation `σ`, truncated to a
//! finite window of length `6σ` (integer offsets `−3σ … 3σ−1`, peak 1 at the
//! center). Its width is chosen so every shifted impulse lies fully inside
//! the observation window, which makes the matrix slightly undercomplete:
//! `n = m_base − 6σ`. Undersampling keeps every `Δ`-th row, giving an
//! overcomplete `m_base/Δ × n` matrix.
//!
//! The jump dictionary is the `n × n` lower-triangular all-ones matrix: atom
//! `j` codes for a unit step at position `j`, so a `k`-sparse coefficient
//! vector yields a piecewise-constant signal with `k` pieces.
//!
//! Instances draw `k` support locations uniformly without replacement and
//! i.i.d. standard Gaussian amplitudes; the noise variance is set from the
//! target signal-to-noise ratio `SNR = 10·log10(‖Ax‖²/(m·σ_n²))`. Everything
//! is deterministic in `(scenario seed, trial index)`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dict::{DictError, Dictionary, Observation, Support};
use crate::math;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProblemError {
    /// Window or undersampling parameters do not fit the base length.
    BadDims(String),
    Dict(DictError),
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::BadDims(msg) => write!(f, "bad dimensions: {msg}"),
            ProblemError::Dict(e) => write!(f, "{e}"),
        }
    }
}

impl From<DictError> for ProblemError {
    fn from(e: DictError) -> Self {
        ProblemError::Dict(e)
    }
}

/// Benchmark problem family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Deconvolution,
    Jumps,
}

/// Benchmark configuration: one of the ten presets `A`–`J` or a custom one.
///
/// Derived dimensions: base length `m_base = 300·f`; deconvolution uses
/// `σ = f·σ_def`, `n = m_base − 6σ` and keeps every `Δ`-th row
/// (`m = m_base/Δ`); jump detection uses `m = n = 300·f`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub kind: ProblemKind,
    /// Target SNR in dB; `+∞` means noise-free.
    pub snr_db: f64,
    /// True sparsity.
    pub k: usize,
    /// Size factor.
    pub f: usize,
    /// Undersampling factor.
    pub delta: usize,
    /// Gaussian impulse std at `f = 1` (unused for jumps).
    pub sigma_def: usize,
    /// Base RNG seed; combined with the trial index per draw.
    pub seed: u64,
}

impl Scenario {
    /// One of the ten presets by letter.
    pub fn preset(letter: char) -> Option<Scenario> {
        use ProblemKind::*;
        let inf = f64::INFINITY;
        let (kind, snr_db, k, f, delta, sigma_def) = match letter {
            'A' => (Deconvolution, 25.0, 30, 1, 1, 3),
            'B' => (Deconvolution, 10.0, 10, 1, 1, 8),
            'C' => (Deconvolution, 25.0, 10, 3, 1, 8),
            'D' => (Deconvolution, 25.0, 30, 6, 1, 3),
            'E' => (Jumps, 25.0, 10, 1, 1, 0),
            'F' => (Jumps, 25.0, 30, 1, 1, 0),
            'G' => (Jumps, 10.0, 10, 1, 1, 0),
            'H' => (Deconvolution, inf, 10, 3, 2, 8),
            'I' => (Deconvolution, inf, 30, 3, 2, 8),
            'J' => (Deconvolution, inf, 10, 1, 4, 8),
            _ => return None,
        };
        let mut name = String::new();
        name.push(letter);
        Some(Scenario {
            name,
            kind,
            snr_db,
            k,
            f,
            delta,
            sigma_def,
            seed: 0,
        })
    }

    pub fn base_len(&self) -> usize {
        300 * self.f
    }

    /// Effective Gaussian impulse std `σ = f·σ_def`.
    pub fn sigma(&self) -> usize {
        self.f * self.sigma_def
    }

    /// Derived `(m, n)`.
    pub fn dims(&self) -> (usize, usize) {
        match self.kind {
            ProblemKind::Deconvolution => {
                let base = self.base_len();
                (base / self.delta, base - 6 * self.sigma())
            }
            ProblemKind::Jumps => (self.base_len(), self.base_len()),
        }
    }

    /// Builds the (trial-independent) dictionary of this scenario.
    pub fn dictionary(&self) -> Result<Dictionary, ProblemError> {
        match self.kind {
            ProblemKind::Deconvolution => {
                gaussian_deconv_dictionary(self.base_len(), self.sigma(), self.delta)
            }
            ProblemKind::Jumps => Ok(jump_dictionary(self.base_len())),
        }
    }
}

/// One drawn trial: ground truth and noisy observation.
#[derive(Clone)]
pub struct Instance {
    pub dict: Arc<Dictionary>,
    pub x_star: Vec<f64>,
    pub support_star: Support,
    pub obs: Observation,
    pub sigma_n_sq: f64,
}

/// Toeplitz Gaussian convolution dictionary: `m_base/delta × (m_base − 6σ)`.
pub fn gaussian_deconv_dictionary(
    m_base: usize,
    sigma: usize,
    delta: usize,
) -> Result<Dictionary, ProblemError> {
    let window = 6 * sigma;
    if sigma == 0 || m_base <= window {
        return Err(ProblemError::BadDims(String::from(
            "base length must exceed the 6-sigma window",
        )));
    }
    if delta == 0 || m_base % delta != 0 {
        return Err(ProblemError::BadDims(String::from(
            "undersampling factor must divide the base length",
        )));
    }
    // Impulse response on integer offsets −3σ … 3σ−1, peak 1 at the center.
    let taps: Vec<f64> = (0..window)
        .map(|u| {
            let t = u as f64 - (3 * sigma) as f64;
            math::exp(-t * t / (2.0 * (sigma * sigma) as f64))
        })
        .collect();
    let n = m_base - window;
    let m = m_base / delta;
    let mut data = vec![0.0; m * n];
    for (col, chunk) in data.chunks_mut(m).enumerate() {
        // Pre-decimation row r carries taps[r − col]; keep rows r = i·delta.
        for (i, v) in chunk.iter_mut().enumerate() {
            let row = i * delta;
            if row >= col && row - col < window {
                *v = taps[row - col];
            }
        }
    }
    Ok(Dictionary::from_column_major(m, n, data)?)
}

/// The `n × n` lower-triangular all-ones jump dictionary.
pub fn jump_dictionary(n: usize) -> Dictionary {
    let mut data = vec![0.0; n * n];
    for (col, chunk) in data.chunks_mut(n).enumerate() {
        for v in chunk.iter_mut().skip(col) {
            *v = 1.0;
        }
    }
    Dictionary::from_column_major(n, n, data).expect("jump dictionary has no zero column")
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..].copy_from_slice(b"l0path/instance\0");
    ChaCha12Rng::from_seed(key)
}

/// Draws one instance for a prebuilt dictionary (shared across the trials of
/// one scenario).
pub fn draw_instance_with(
    scenario: &Scenario,
    dict: &Arc<Dictionary>,
    trial: u64,
) -> Instance {
    let n = dict.cols();
    let m = dict.rows();
    let mut rng = trial_rng(scenario.seed, trial);

    let locations = rand::seq::index::sample(&mut rng, n, scenario.k.min(n)).into_vec();
    let support_star = Support::from_indices(locations).expect("sample is without replacement");
    let mut x_star = vec![0.0; n];
    for &i in support_star.indices() {
        x_star[i] = StandardNormal.sample(&mut rng);
    }

    let clean = dict.apply(&x_star);
    let signal_norm_sq = math::norm_sq(&clean);
    let (sigma_n_sq, y) = if scenario.snr_db.is_finite() {
        let sigma_n_sq = signal_norm_sq / (m as f64 * math::powf(10.0, scenario.snr_db / 10.0));
        let sd = math::sqrt(sigma_n_sq);
        let mut y = clean;
        for v in y.iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            *v += sd * g;
        }
        (sigma_n_sq, y)
    } else {
        (0.0, clean)
    };

    Instance {
        dict: Arc::clone(dict),
        x_star,
        support_star,
        obs: Observation::new(y),
        sigma_n_sq,
    }
}

/// Draws one instance, building the scenario dictionary in place.
pub fn draw_instance(scenario: &Scenario, trial: u64) -> Result<Instance, ProblemError> {
    let dict = Arc::new(scenario.dictionary()?);
    Ok(draw_instance_with(scenario, &dict, trial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn preset_dimension_table() {
        let expect = [
            ('A', 300, 282),
            ('B', 300, 252),
            ('C', 900, 756),
            ('D', 1800, 1692),
            ('E', 300, 300),
            ('F', 300, 300),
            ('G', 300, 300),
            ('H', 450, 756),
            ('I', 450, 756),
            ('J', 75, 252),
        ];
        for (letter, m, n) in expect {
            let sc = Scenario::preset(letter).unwrap();
            assert_eq!(sc.dims(), (m, n), "scenario {letter}");
        }
        assert!(Scenario::preset('Z').is_none());
    }

    #[test]
    fn scenario_a_dictionary_shape() {
        let sc = Scenario::preset('A').unwrap();
        let dict = sc.dictionary().unwrap();
        assert_eq!((dict.rows(), dict.cols()), (300, 282));
    }

    #[test]
    fn scenario_h_dictionary_shape() {
        let dict = gaussian_deconv_dictionary(900, 24, 2).unwrap();
        assert_eq!((dict.rows(), dict.cols()), (450, 756));
    }

    #[test]
    fn deconv_interior_columns_are_shifts() {
        let dict = gaussian_deconv_dictionary(60, 2, 1).unwrap();
        // Δ=1: Toeplitz, so all columns share one norm and constant
        // diagonals hold structurally.
        let norms = dict.col_norms_sq();
        for w in norms.windows(2) {
            assert_abs_diff_eq!(w[0], w[1], epsilon = 1e-12);
        }
        for col in 1..dict.cols() {
            for row in 1..dict.rows() {
                assert_eq!(dict.column(col)[row], dict.column(col - 1)[row - 1]);
            }
        }
    }

    #[test]
    fn bad_dims_rejected() {
        assert!(matches!(
            gaussian_deconv_dictionary(12, 2, 1),
            Err(ProblemError::BadDims(_))
        ));
        assert!(matches!(
            gaussian_deconv_dictionary(300, 3, 7),
            Err(ProblemError::BadDims(_))
        ));
    }

    #[test]
    fn jump_dictionary_examples() {
        let dict = jump_dictionary(3);
        assert_eq!(dict.column(0), &[1.0, 1.0, 1.0]);
        assert_eq!(dict.column(1), &[0.0, 1.0, 1.0]);
        assert_eq!(dict.column(2), &[0.0, 0.0, 1.0]);
        assert_eq!(dict.col_norms_sq(), &[3.0, 2.0, 1.0]);
        // x = (2, 0, −1) yields a 2-piece staircase.
        let out = dict.apply(&[2.0, 0.0, -1.0]);
        assert_eq!(out, vec![2.0, 2.0, 1.0]);
    }

    #[test]
    fn draw_is_deterministic() {
        let mut sc = Scenario::preset('E').unwrap();
        sc.seed = 42;
        let a = draw_instance(&sc, 7).unwrap();
        let b = draw_instance(&sc, 7).unwrap();
        assert_eq!(a.x_star, b.x_star);
        assert_eq!(a.obs.values(), b.obs.values());
        assert_eq!(a.support_star, b.support_star);
        let c = draw_instance(&sc, 8).unwrap();
        assert_ne!(a.obs.values(), c.obs.values());
    }

    #[test]
    fn noise_free_draw_is_exact() {
        let mut sc = Scenario::preset('J').unwrap();
        sc.seed = 3;
        let inst = draw_instance(&sc, 0).unwrap();
        assert_eq!(inst.sigma_n_sq, 0.0);
        assert_eq!(inst.support_star.len(), 10);
        let clean = inst.dict.apply(&inst.x_star);
        assert_eq!(inst.obs.values(), clean.as_slice());
    }

    #[test]
    fn scenario_e_draw_shape() {
        let mut sc = Scenario::preset('E').unwrap();
        sc.seed = 1;
        let inst = draw_instance(&sc, 0).unwrap();
        assert_eq!(inst.dict.rows(), 300);
        assert_eq!(inst.dict.cols(), 300);
        assert_eq!(inst.support_star.len(), 10);
        assert!(inst.sigma_n_sq > 0.0);
    }

    #[test]
    fn empirical_snr_matches_target() {
        // Small custom scenario so a thousand draws stay cheap.
        let sc = Scenario {
            name: String::from("snr-check"),
            kind: ProblemKind::Jumps,
            snr_db: 15.0,
            k: 4,
            f: 1,
            delta: 1,
            sigma_def: 0,
            seed: 9,
        };
        let dict = Arc::new(jump_dictionary(64));
        let mut snr_sum = 0.0;
        let trials = 1000;
        for t in 0..trials {
            let inst = draw_instance_with(&sc, &dict, t);
            let clean = dict.apply(&inst.x_star);
            let noise: Vec<f64> = inst
                .obs
                .values()
                .iter()
                .zip(&clean)
                .map(|(y, c)| y - c)
                .collect();
            let signal = crate::math::norm_sq(&clean);
            let noise_power = crate::math::norm_sq(&noise) / dict.rows() as f64;
            let m = dict.rows() as f64;
            snr_sum += 10.0 * libm::log10(signal / (m * noise_power));
        }
        let mean_snr = snr_sum / trials as f64;
        assert!(
            (mean_snr - 15.0).abs() < 0.5,
            "empirical SNR {mean_snr} dB departs from 15 dB"
        );
    }
}
