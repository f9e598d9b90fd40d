//! Constructive side of the black-box lower bound: the two-graph reduction
//! from "does a bit string have exactly `a` ones" to a spectral question
//! about a (non-symmetric) 0/1 adjacency matrix.
//!
//! Node layout for `F = G ∪ G'` (size `4N + 2`):
//! `v = 0`, `s_i = 1 + i`, `t_j = 1 + N + j`, then the same pattern for `G'`
//! shifted by `2N + 1`.

use nalgebra::{Complex, DMatrix};

use crate::error::{ensure, Result};

/// Adjacency matrix of the reduction graph together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundInstance {
    pub n: usize,
    pub a: usize,
    /// Number of ones in the input bit string.
    pub sigma: usize,
    pub adjacency: DMatrix<f64>,
}

impl LowerBoundInstance {
    pub fn size(&self) -> usize {
        4 * self.n + 2
    }

    pub fn utility(&self, primed: bool) -> usize {
        if primed {
            2 * self.n + 1
        } else {
            0
        }
    }

    pub fn source(&self, i: usize, primed: bool) -> usize {
        self.utility(primed) + 1 + i
    }

    pub fn target(&self, j: usize, primed: bool) -> usize {
        self.utility(primed) + 1 + self.n + j
    }

    /// Out-degrees of the sources of `G`.
    pub fn source_degrees(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| {
                let row = self.source(i, false);
                (0..self.n).filter(|&j| self.adjacency[(row, self.target(j, false))] != 0.0).count()
            })
            .collect()
    }
}

/// Builds the reduction graph for a bit string `x` of length `N²`.
pub fn gen_lowerbound_instance(x: &[bool], a: usize) -> Result<LowerBoundInstance> {
    let n = (x.len() as f64).sqrt().round() as usize;
    ensure!(n >= 1 && n * n == x.len(), Parameter, "bit string length {} is not a positive square", x.len());
    ensure!(a <= n * n, Parameter, "a = {a} exceeds N² = {}", n * n);

    let size = 4 * n + 2;
    let mut inst = LowerBoundInstance { n, a, sigma: x.iter().filter(|&&b| b).count(), adjacency: DMatrix::zeros(size, size) };
    let edge = |m: &mut DMatrix<f64>, from: usize, to: usize| m[(from, to)] = 1.0;

    for primed in [false, true] {
        let v = inst.utility(primed);
        for i in 0..n {
            let s = inst.source(i, primed);
            let t = inst.target(i, primed);
            edge(&mut inst.adjacency, v, s);
            edge(&mut inst.adjacency, t, v);
        }
    }
    for i in 0..n {
        for j in 0..n {
            if x[i * n + j] {
                let (s, t) = (inst.source(i, false), inst.target(j, false));
                edge(&mut inst.adjacency, s, t);
            }
        }
    }
    // Round-robin over sources; the target index rotates with each full pass
    // so that every (source, target) pair is used at most once.
    for c in 0..a {
        let i = c % n;
        let j = (c / n + i) % n;
        let (s, t) = (inst.source(i, true), inst.target(j, true));
        edge(&mut inst.adjacency, s, t);
    }
    Ok(inst)
}

/// Outcome of the spectral verification.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundCheck {
    /// Nonzero eigenvalues of `A³` equal `{a,a,a,σ,σ,σ}` (zeros dropped).
    pub spectrum_ok: bool,
    /// What the three equality cases say about `a = σ`.
    pub decided_equal: bool,
    /// Top eigenvalues of `A` (nonzero ones padded with zeros to six).
    pub top6: Vec<Complex<f64>>,
}

fn tolerance(size: usize) -> f64 {
    1e-8 * size as f64
}

/// Eigenvalues of `A` smaller than this in modulus are treated as zero;
/// the nonzero ones are cube roots of positive integers.
const NONZERO_CUTOFF: f64 = 0.5;

/// Spectral analysis of a reduction matrix.
pub fn analyze_lowerbound_spectrum(adjacency: &DMatrix<f64>, a: usize, sigma: usize) -> LowerBoundCheck {
    let size = adjacency.nrows();
    let tol = tolerance(size);

    let cube = adjacency * adjacency * adjacency;
    let mut cube_nonzero: Vec<Complex<f64>> =
        cube.complex_eigenvalues().iter().copied().filter(|z| z.norm() > NONZERO_CUTOFF).collect();
    cube_nonzero.sort_by(|x, y| x.re.total_cmp(&y.re));
    let mut expected: Vec<f64> = [a, a, a, sigma, sigma, sigma].iter().filter(|&&v| v > 0).map(|&v| v as f64).collect();
    expected.sort_by(f64::total_cmp);
    let spectrum_ok = cube_nonzero.len() == expected.len()
        && cube_nonzero.iter().zip(&expected).all(|(z, &e)| (z.re - e).abs() <= tol && z.im.abs() <= tol);

    let mut top: Vec<Complex<f64>> =
        adjacency.complex_eigenvalues().iter().copied().filter(|z| z.norm() > NONZERO_CUTOFF).collect();
    top.resize(top.len().max(6), Complex::new(0.0, 0.0));
    sort_by_real_then_imag(&mut top, tol);
    top.truncate(6);
    let decided_equal = equality_cases(&top, tol);

    LowerBoundCheck { spectrum_ok, decided_equal, top6: top }
}

/// True iff the `A³` spectrum has the `{a,a,a,σ,σ,σ}` structure and the
/// three equality cases on the top eigenvalues of `A` decide `a = σ` correctly.
pub fn verify_lowerbound_spectrum(adjacency: &DMatrix<f64>, a: usize, sigma: usize) -> bool {
    let check = analyze_lowerbound_spectrum(adjacency, a, sigma);
    check.spectrum_ok && check.decided_equal == (a == sigma)
}

/// Descending real part; within a cluster of equal real parts, descending imaginary part.
fn sort_by_real_then_imag(values: &mut [Complex<f64>], tol: f64) {
    values.sort_by(|x, y| y.re.total_cmp(&x.re));
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && (values[start].re - values[end].re).abs() <= tol {
            end += 1;
        }
        values[start..end].sort_by(|x, y| y.im.total_cmp(&x.im));
        start = end;
    }
}

fn equality_cases(top: &[Complex<f64>], tol: f64) -> bool {
    let eq = |i: usize, j: usize| (top[i] - top[j]).norm() <= tol;
    let all_equal = (0..5).all(|i| eq(i, i + 1));
    let four_then_two = eq(0, 1) && eq(1, 2) && eq(2, 3) && !eq(3, 4) && !eq(4, 5);
    let three_pairs = eq(0, 1) && !eq(1, 2) && eq(2, 3) && !eq(3, 4) && eq(4, 5);
    all_equal || four_then_two || three_pairs
}
