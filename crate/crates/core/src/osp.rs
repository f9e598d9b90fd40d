//! Oblivious state preparation: `x = D H z` with a Rademacher vector `z`,
//! the normalized Walsh–Hadamard transform `H` and a random sign diagonal `D`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{ensure, Result};
use crate::rng::Stream;

/// Failure probability of the preparation, i.e. the probability that the
/// overlap with a fixed target falls below `1/(2N)`.
pub const DELTA_OSP: f64 = 0.4;

/// In-place normalized Walsh–Hadamard transform. `H` is its own inverse.
pub fn fwht<T>(v: &mut [T]) -> Result<()>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = v.len();
    ensure!(n.is_power_of_two(), Parameter, "Hadamard transform needs a power-of-two length, got {n}");
    let norm = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = 1;
    while h < n {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = (a + b) * norm;
                *y = (a - b) * norm;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// One draw `x = D H z`.
#[derive(Debug, Clone, PartialEq)]
pub struct OspSample {
    pub state: Vec<f64>,
    /// Diagonal of `D`, entries `±1`.
    pub sign_diag: Vec<f64>,
    /// `z`, entries `±1/√N`.
    pub rademacher: Vec<f64>,
    pub seed: u64,
}

impl OspSample {
    pub fn dim(&self) -> usize {
        self.state.len()
    }

    /// `|⟨x|y⟩|` for a target given on the first `y.len()` coordinates
    /// (shorter targets are zero-padded).
    pub fn overlap(&self, y: &[Complex64]) -> f64 {
        overlap(&self.state, y)
    }

    pub fn state_complex(&self) -> Vec<Complex64> {
        self.state.iter().map(|&r| Complex64::new(r, 0.0)).collect()
    }
}

pub(crate) fn overlap(x: &[f64], y: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        acc += yi * *xi;
    }
    acc.norm()
}

fn fill_signs(rng: &mut impl Rng, out: &mut [f64], magnitude: f64) {
    for block in out.chunks_mut(64) {
        let bits: u64 = rng.random();
        for (b, x) in block.iter_mut().enumerate() {
            *x = if bits >> b & 1 == 1 { magnitude } else { -magnitude };
        }
    }
}

fn random_signs(rng: &mut impl Rng, n: usize, magnitude: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    fill_signs(rng, &mut out, magnitude);
    out
}

/// Draws `x = D H z`; deterministic per stream.
pub fn osp_sample(n: usize, stream: Stream) -> Result<OspSample> {
    ensure!(n >= 2 && n.is_power_of_two(), Parameter, "state dimension must be a power of two >= 2, got {n}");
    let mut rng = stream.rng();
    let rademacher = random_signs(&mut rng, n, 1.0 / (n as f64).sqrt());
    let sign_diag = random_signs(&mut rng, n, 1.0);
    let mut state = rademacher.clone();
    fwht(&mut state)?;
    for (s, d) in state.iter_mut().zip(&sign_diag) {
        *s *= d;
    }
    Ok(OspSample { state, sign_diag, rademacher, seed: stream.key() })
}

/// `v = H D y` for a fresh sign diagonal `D`, together with `‖v‖_∞`.
pub fn flatten_check(y: &[Complex64], stream: Stream) -> Result<(Vec<Complex64>, f64)> {
    let mut rng = stream.rng();
    let signs = random_signs(&mut rng, y.len(), 1.0);
    let mut v: Vec<Complex64> = y.iter().zip(&signs).map(|(a, s)| a * s).collect();
    fwht(&mut v)?;
    let maxabs = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok((v, maxabs))
}

/// Source of prepared states for a problem of dimension `N`. States live in
/// the next power of two `N'`, at least 4 (two real amplitudes cannot meet the
/// overlap guarantee for basis targets). Targets are zero-padded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OspSource {
    dim: usize,
}

impl OspSource {
    pub fn for_dimension(n: usize) -> Self {
        Self { dim: n.next_power_of_two().max(4) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Promised overlap `γ = 1/(2N')`.
    pub fn gamma(&self) -> f64 {
        1.0 / (2.0 * self.dim as f64)
    }

    pub fn delta(&self) -> f64 {
        DELTA_OSP
    }

    /// Elementary gates of one preparation.
    pub fn gate_cost(&self) -> f64 {
        self.dim as f64
    }

    pub fn sample(&self, stream: Stream) -> OspSample {
        osp_sample(self.dim, stream).expect("dimension is a power of two")
    }

    /// Writes a fresh state into `buf` (length `dim`), drawing from `rng`
    /// exactly as [`osp_sample`] does.
    pub fn fill_state(&self, rng: &mut impl Rng, buf: &mut [f64]) {
        assert_eq!(buf.len(), self.dim);
        let scale = 1.0 / (self.dim as f64).sqrt();
        fill_signs(rng, buf, scale);
        fwht(buf).expect("dimension is a power of two");
        for block in buf.chunks_mut(64) {
            let bits: u64 = rng.random();
            for (b, x) in block.iter_mut().enumerate() {
                if bits >> b & 1 == 0 {
                    *x = -*x;
                }
            }
        }
    }
}

/// Exact `Pr[|⟨x|y⟩| > threshold]` over all `2^N · 2^N` sign patterns of
/// `(z, D)`. Only practical for `N <= 8`.
pub fn exact_overlap_probability(y: &[Complex64], threshold: f64) -> Result<f64> {
    let n = y.len();
    ensure!(n.is_power_of_two() && n <= 16, Parameter, "exhaustive enumeration needs a power-of-two N <= 16");
    let scale = 1.0 / (n as f64).sqrt();
    let patterns = 1usize << n;
    let mut hits = 0u64;
    let mut hz = vec![0.0; n];
    for zbits in 0..patterns {
        for (i, v) in hz.iter_mut().enumerate() {
            *v = if zbits >> i & 1 == 1 { scale } else { -scale };
        }
        fwht(&mut hz)?;
        let terms: Vec<Complex64> = hz.iter().zip(y).map(|(h, yi)| yi.conj() * *h).collect();
        for dbits in 0..patterns {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, t) in terms.iter().enumerate() {
                if dbits >> i & 1 == 1 {
                    acc += t;
                } else {
                    acc -= t;
                }
            }
            if acc.norm() > threshold {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / (patterns * patterns) as f64)
}
