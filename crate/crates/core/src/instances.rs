//! Test-instance generators with known spectra.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Result};
use crate::hermitian::{assemble, CMatrix, GapGroundTruth, HermitianMatrix};
use crate::rng::Stream;

/// Floor on every non-planted spacing, so eigenvalues stay distinct.
pub const MIN_SPACING: f64 = 1e-6;

/// A random Hermitian matrix whose `k`-th gap is planted.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub matrix: HermitianMatrix,
    pub eigenvalues: Vec<f64>,
    pub truth: GapGroundTruth,
}

/// `H = Q Λ Q†` with eigenvalues in `[-1/2, 1/2]`, `λ_k − λ_{k+1} = gap`
/// exactly, and every other consecutive spacing strictly smaller.
pub fn gen_planted_gap(n: usize, k: usize, gap: f64, seed: u64) -> Result<PlantedInstance> {
    ensure!(n >= 2, Parameter, "planted instances need N >= 2, got {n}");
    ensure!(k >= 1 && k < n, Parameter, "k must lie in [1, {}], got {k}", n - 1);
    ensure!(gap > 0.0 && gap < 1.0, Parameter, "gap must lie in (0, 1), got {gap}");
    let others = n - 2;
    ensure!(
        gap < 1.0 - others as f64 * MIN_SPACING && gap > MIN_SPACING,
        Parameter,
        "gap {gap} leaves no room for {others} further spacings of at least {MIN_SPACING}"
    );

    let stream = Stream::new(seed);
    let mut rng = stream.fork_named("spacings", 0).rng();
    let mut spacings: Vec<f64> = (0..others).map(|_| gap * rng.random_range(0.05..0.95)).collect();
    let used: f64 = spacings.iter().sum();
    if gap + used > 1.0 {
        let shrink = (1.0 - gap) / used;
        for s in &mut spacings {
            *s = (*s * shrink).max(MIN_SPACING);
        }
    }
    spacings.insert(k - 1, gap);
    let span: f64 = spacings.iter().sum();
    let top = 0.5 - rng.random_range(0.0..=1.0) * (1.0 - span).max(0.0);

    let mut eigenvalues = Vec::with_capacity(n);
    eigenvalues.push(top);
    for s in &spacings {
        let prev = *eigenvalues.last().unwrap();
        eigenvalues.push(prev - s);
    }
    // Guard against rounding pushing the bottom below -1/2.
    let floor = eigenvalues[n - 1];
    if floor < -0.5 {
        let lift = -0.5 - floor;
        eigenvalues.iter_mut().for_each(|v| *v += lift);
    }

    let q = random_unitary(n, stream.fork_named("unitary", 0));
    let matrix = assemble(&q, eigenvalues.iter().copied());
    let truth = GapGroundTruth {
        k,
        lambda_k: eigenvalues[k - 1],
        lambda_k1: eigenvalues[k],
        gap: eigenvalues[k - 1] - eigenvalues[k],
        midpoint: 0.5 * (eigenvalues[k - 1] + eigenvalues[k]),
    };
    Ok(PlantedInstance { matrix, eigenvalues, truth })
}

/// Haar-like unitary: Gram–Schmidt (applied twice) on a complex Gaussian matrix.
pub fn random_unitary(n: usize, stream: Stream) -> CMatrix {
    let mut rng = stream.rng();
    let mut q = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dotc(&q.column(j));
                let ci = q.column(i).clone_owned();
                q.column_mut(j).axpy(-proj, &ci, Complex64::new(1.0, 0.0));
            }
        }
        let norm = q.column(j).norm();
        q.column_mut(j).unscale_mut(norm);
    }
    q
}

/// Random Hermitian matrix with spectral norm exactly `norm`.
pub fn random_hermitian_with_norm(n: usize, norm: f64, stream: Stream) -> HermitianMatrix {
    let mut rng = stream.rng();
    let g = HermitianMatrix::from_upper(n, |i, j| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if i == j { 0.0 } else { rng.sample(StandardNormal) };
        Complex64::new(re, im)
    })
    .expect("gaussian entries are finite");
    let current = g.spectral_norm();
    if current == 0.0 || norm == 0.0 {
        return HermitianMatrix::zeros(n);
    }
    g.scaled(norm / current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::eig_reference;

    #[test]
    fn planted_gap_is_recovered() {
        let inst = gen_planted_gap(4, 2, 0.3, 7).unwrap();
        let d = eig_reference(&inst.matrix).unwrap();
        assert!((d.eigenvalues[1] - d.eigenvalues[2] - 0.3).abs() < 1e-10);
        assert!(d.reconstruction_residual(&inst.matrix) < 1e-10 * 4.0);
    }

    #[test]
    fn single_gap_case() {
        let inst = gen_planted_gap(2, 1, 0.5, 3).unwrap();
        let ev = &inst.eigenvalues;
        assert!((ev[0] - ev[1] - 0.5).abs() < 1e-15);
        assert!(ev[0] <= 0.5 && ev[1] >= -0.5);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = gen_planted_gap(8, 3, 0.2, 99).unwrap();
        let b = gen_planted_gap(8, 3, 0.2, 99).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn planted_gap_is_the_unique_largest_spacing() {
        for seed in 0..100 {
            let n = 3 + (seed as usize % 14);
            let k = 1 + (seed as usize * 7) % (n - 1);
            let inst = gen_planted_gap(n, k, 0.15, seed).unwrap();
            let d = eig_reference(&inst.matrix).unwrap();
            let spacings: Vec<f64> = d.eigenvalues.windows(2).map(|w| w[0] - w[1]).collect();
            let argmax = spacings.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(argmax + 1, k, "seed {seed}");
            assert!(d.eigenvalues[0] <= 0.5 + 1e-12 && d.eigenvalues[n - 1] >= -0.5 - 1e-12);
        }
    }

    #[test]
    fn infeasible_parameters_are_rejected() {
        assert!(gen_planted_gap(4, 0, 0.3, 1).is_err());
        assert!(gen_planted_gap(4, 4, 0.3, 1).is_err());
        assert!(gen_planted_gap(4, 2, 1.0, 1).is_err());
        assert!(gen_planted_gap(4, 2, 0.0, 1).is_err());
    }

    #[test]
    fn random_unitary_is_orthonormal() {
        let q = random_unitary(9, Stream::new(4));
        let err = (q.adjoint() * &q - CMatrix::identity(9, 9)).norm();
        assert!(err < 1e-12);
    }
}
