//! Minimum singular values through ground energies of the Gram encoding.
//!
//! The ground-energy algorithm is emulated at the level of its input/output
//! contract: it can only "see" eigenvectors that the initial state overlaps by
//! at least `γ`, reports the smallest visible eigenvalue to within `±ε`, and
//! fails outright (uniform output) with probability `δ`.

use num_complex::Complex64;
use rand::Rng;

use crate::backend::Backend;
use crate::error::{ensure, Result};
use crate::ledger::{lg, Counter};
use crate::osp::{overlap, OspSource};
use crate::qube::{gram, Qube};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundEnergyContract {
    pub alpha: f64,
    pub gamma: f64,
    pub eps: f64,
    pub delta: f64,
}

impl GroundEnergyContract {
    pub fn new(alpha: f64, gamma: f64, eps: f64, delta: f64) -> Result<Self> {
        ensure!(alpha > 0.0, Parameter, "alpha must be positive, got {alpha}");
        ensure!(gamma > 0.0 && gamma <= 1.0, Parameter, "gamma must lie in (0, 1], got {gamma}");
        ensure!(eps > 0.0, Parameter, "eps must be positive, got {eps}");
        ensure!((0.0..=1.0).contains(&delta), Parameter, "delta must lie in [0, 1], got {delta}");
        Ok(Self { alpha, gamma, eps, delta })
    }

    fn log_terms(&self) -> (f64, f64) {
        let l_alpha = lg(self.alpha / self.eps);
        let l_delta = lg(l_alpha / self.delta.max(f64::MIN_POSITIVE));
        (l_alpha, l_delta)
    }

    /// Queries to the block-encoding per call.
    pub fn encoding_queries(&self) -> f64 {
        let (l_alpha, l_delta) = self.log_terms();
        self.alpha / (self.gamma * self.eps) * l_alpha * lg(1.0 / self.gamma) * l_delta
    }

    /// Queries to the state preparation per call.
    pub fn state_prep_queries(&self) -> f64 {
        let (l_alpha, l_delta) = self.log_terms();
        l_alpha * l_delta / self.gamma
    }
}

fn charge_ground_energy(u: &Qube, c: &GroundEnergyContract, calls: f64) -> Result<()> {
    let q = c.encoding_queries() * calls;
    let ledger = u.ledger();
    ledger.charge(Counter::QueriesUH, u.uh_per_use() * q)?;
    ledger.charge(Counter::ElementaryGates, u.unit_cost() * q)?;
    ledger.charge(Counter::QueriesStatePrep, c.state_prep_queries() * calls)?;
    let qubits = (u.dim().next_power_of_two().trailing_zeros() + u.ancillas()) as f64 + (1.0 / c.gamma).log2().ceil();
    ledger.charge(Counter::MaxQubits, qubits)
}

/// Ascending eigenvalue order of an encoding, computed once per call site.
fn ascending(u: &Qube) -> Vec<usize> {
    let v = u.eigenvalues();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    order
}

fn emulate(u: &Qube, order: &[usize], overlap_with: impl Fn(usize) -> f64, c: &GroundEnergyContract, rng: &mut impl Rng) -> f64 {
    if c.delta > 0.0 && rng.random::<f64>() < c.delta {
        return rng.random_range(0.0..=c.alpha);
    }
    let values = u.eigenvalues();
    let visible = order.iter().copied().find(|&j| overlap_with(j) >= c.gamma);
    let j = visible.unwrap_or_else(|| {
        order
            .iter()
            .copied()
            .map(|j| (j, overlap_with(j)))
            .fold((order[0], f64::NEG_INFINITY), |best, (j, o)| if o > best.1 { (j, o) } else { best })
            .0
    });
    let noise = rng.random_range(-c.eps..=c.eps);
    (c.alpha * values[j] + noise).clamp(0.0, c.alpha)
}

/// One call of the ground-energy contract on the encoded operator, scaled by `α`.
pub fn ground_energy_emulate(u: &Qube, phi0: &[Complex64], contract: &GroundEnergyContract, stream: Stream) -> Result<f64> {
    ensure!(phi0.len() >= u.dim(), Parameter, "initial state has dimension {} < {}", phi0.len(), u.dim());
    charge_ground_energy(u, contract, 1.0)?;
    let basis = u.eigenvectors();
    let order = ascending(u);
    let overlap_with = |j: usize| {
        let col = basis.column(j);
        col.iter().zip(phi0).map(|(v, p)| p.conj() * v).sum::<Complex64>().norm()
    };
    Ok(emulate(u, &order, overlap_with, contract, &mut stream.rng()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEstimate {
    /// `σ̃²`, always in `[0, 1]`.
    pub value: f64,
    pub runs: usize,
    pub per_run_values: Vec<f64>,
}

/// Per-run failure budget handed to the ground-energy contract, chosen so that
/// a run succeeds with probability at least `(1 − δ_GE)(1 − δ_OSP) = 3/4 − δ_OSP/2`.
pub fn per_run_delta(delta_osp: f64) -> f64 {
    1.0 - (0.75 - delta_osp / 2.0) / (1.0 - delta_osp)
}

/// Number of median runs: Hoeffding with per-run success `p ≥ 3/4 − δ_OSP/2`
/// gives `Pr[median fails] ≤ exp(−2r(p − 1/2)²) ≤ δ`. Rounded up to odd.
pub fn median_runs(delta_sigma: f64, delta_osp: f64) -> usize {
    let margin = 1.0 - 2.0 * delta_osp;
    let r = (8.0 * (1.0 / delta_sigma).ln() / (margin * margin)).ceil().max(1.0) as usize;
    r | 1
}

/// Preconditions of [`qsmin`] on the encoding error.
pub fn qsmin_enc_bound(scale: f64, eps_sigma: f64) -> f64 {
    eps_sigma / (4.0 * scale)
}

/// Estimates `σ_min(H)²` to within `eps_sigma` with probability `1 − delta_sigma`.
pub fn qsmin(
    u_h: &Qube,
    eps_sigma: f64,
    delta_sigma: f64,
    osp: &OspSource,
    backend: Backend,
    stream: Stream,
) -> Result<SigmaEstimate> {
    qsmin_runs(u_h, eps_sigma, delta_sigma, osp, backend, stream, None)
}

/// [`qsmin`] with an explicit number of median runs (for boosting studies).
pub fn qsmin_runs(
    u_h: &Qube,
    eps_sigma: f64,
    delta_sigma: f64,
    osp: &OspSource,
    backend: Backend,
    stream: Stream,
    runs: Option<usize>,
) -> Result<SigmaEstimate> {
    ensure!(eps_sigma > 0.0 && eps_sigma <= 0.5, Parameter, "eps_sigma must lie in (0, 1/2], got {eps_sigma}");
    ensure!(delta_sigma > 0.0 && delta_sigma < 1.0, Parameter, "delta_sigma must lie in (0, 1), got {delta_sigma}");
    ensure!(osp.delta() < 0.5, Contract, "state preparation failure {} must be below 1/2", osp.delta());
    ensure!(osp.dim() >= u_h.dim(), Contract, "state preparation dimension {} < {}", osp.dim(), u_h.dim());
    let bound = qsmin_enc_bound(u_h.scale(), eps_sigma);
    ensure!(u_h.err() <= bound * (1.0 + 1e-12), Contract, "encoding error {} exceeds eps_sigma/(4a) = {bound}", u_h.err());

    let g = gram(u_h);
    let contract = GroundEnergyContract::new(g.scale(), osp.gamma(), eps_sigma / 2.0, per_run_delta(osp.delta()))?;
    let r = runs.unwrap_or_else(|| median_runs(delta_sigma, osp.delta())).max(1);

    // The ledger carries the algorithm's cost, independent of the emulation backend.
    charge_ground_energy(&g, &contract, r as f64)?;
    g.ledger().charge(Counter::ElementaryGates, osp.gate_cost() * contract.state_prep_queries() * r as f64)?;

    let order = ascending(&g);
    let per_run_values: Vec<f64> = match backend {
        Backend::Deterministic => vec![g.scale() * g.eigenvalues()[order[0]]],
        Backend::Sampling => {
            let basis = g.eigenvectors();
            let mut rng = stream.rng();
            let mut state = vec![0.0; osp.dim()];
            (0..r)
                .map(|_| {
                    osp.fill_state(&mut rng, &mut state);
                    let overlap_with = |j: usize| overlap(&state, basis.column(j).as_slice());
                    emulate(&g, &order, overlap_with, &contract, &mut rng)
                })
                .collect()
        }
    };
    let mut sorted = per_run_values.iter().map(|v| v.clamp(0.0, 1.0)).collect::<Vec<_>>();
    sorted.sort_by(f64::total_cmp);
    let value = sorted[sorted.len() / 2];
    Ok(SigmaEstimate { value, runs: per_run_values.len(), per_run_values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{eig_reference, HermitianMatrix};
    use crate::instances::gen_planted_gap;
    use crate::qube::{qenc, qshift, EncodingMode};

    fn exact(v: &[f64]) -> Qube {
        qenc(&HermitianMatrix::diag(v).unwrap(), EncodingMode::Exact, 0.0, Stream::new(0)).unwrap()
    }

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn ground_energy_sees_overlapping_minimum() {
        let u = exact(&[0.09, 0.16]);
        let phi = [c(std::f64::consts::FRAC_1_SQRT_2), c(std::f64::consts::FRAC_1_SQRT_2)];
        let contract = GroundEnergyContract::new(1.0, 0.1, 0.01, 0.0).unwrap();
        for i in 0..100 {
            let v = ground_energy_emulate(&u, &phi, &contract, Stream::new(i)).unwrap();
            assert!((0.08..=0.10).contains(&v), "{v}");
        }
    }

    #[test]
    fn orthogonal_start_misses_the_ground_state() {
        let u = exact(&[0.09, 0.16]);
        let contract = GroundEnergyContract::new(1.0, 0.5, 1e-9, 0.0).unwrap();
        let v = ground_energy_emulate(&u, &[c(0.0), c(1.0)], &contract, Stream::new(1)).unwrap();
        assert!((v - 0.16).abs() < 1e-8);
    }

    #[test]
    fn certain_failure_is_uniform() {
        let u = exact(&[0.09, 0.16]);
        let contract = GroundEnergyContract::new(1.0, 0.1, 0.01, 1.0).unwrap();
        let draws: Vec<f64> = (0..2000)
            .map(|i| ground_energy_emulate(&u, &[c(1.0), c(0.0)], &contract, Stream::new(i)).unwrap())
            .collect();
        assert!(draws.iter().all(|v| (0.0..=1.0).contains(v)));
        let below_half = draws.iter().filter(|&&v| v < 0.5).count() as f64 / 2000.0;
        assert!((below_half - 0.5).abs() < 0.05);
    }

    #[test]
    fn contract_validation() {
        assert!(GroundEnergyContract::new(1.0, 0.0, 0.1, 0.1).is_err());
        assert!(GroundEnergyContract::new(1.0, 0.5, 0.0, 0.1).is_err());
        assert!(GroundEnergyContract::new(1.0, 0.5, 0.1, 1.5).is_err());
    }

    #[test]
    fn run_count_formula() {
        assert_eq!(median_runs(0.05, 0.4), ((8.0 * 20f64.ln() / 0.04).ceil() as usize) | 1);
        let d = per_run_delta(0.4);
        assert!(((1.0 - d) * 0.6 - (0.75 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn diagonal_fixture_rate() {
        let u = exact(&[0.5, -0.3]);
        let osp = OspSource::for_dimension(2);
        let hits = (0..200)
            .filter(|&i| {
                let s = qsmin(&u, 0.02, 0.05, &osp, Backend::Sampling, Stream::new(i)).unwrap();
                (0.07..=0.11).contains(&s.value)
            })
            .count();
        assert!(hits as f64 / 200.0 >= 0.95, "{hits}");
    }

    #[test]
    fn zero_singular_value() {
        let u = exact(&[0.4, 0.0, -0.2, 0.1]);
        let osp = OspSource::for_dimension(4);
        for i in 0..50 {
            let s = qsmin(&u, 0.05, 0.05, &osp, Backend::Sampling, Stream::new(i)).unwrap();
            assert!(s.value <= 0.05, "{}", s.value);
        }
    }

    #[test]
    fn output_stays_in_unit_interval() {
        let u = exact(&[1.0, -1.0, 0.9, 0.95]);
        let osp = OspSource::for_dimension(4);
        for i in 0..50 {
            let s = qsmin_runs(&u, 0.5, 0.5, &osp, Backend::Sampling, Stream::new(i), Some(3)).unwrap();
            assert!((0.0..=1.0).contains(&s.value));
            assert_eq!(s.runs, 3);
        }
    }

    #[test]
    fn encoding_precondition_is_enforced() {
        let h = gen_planted_gap(4, 1, 0.3, 1).unwrap().matrix;
        let u = qenc(&h, EncodingMode::Frobenius, 0.1, Stream::new(0)).unwrap();
        let osp = OspSource::for_dimension(4);
        let err = qsmin(&u, 0.02, 0.1, &osp, Backend::Sampling, Stream::new(0)).unwrap_err();
        assert!(matches!(err, crate::error::Error::Contract(_)));
    }

    #[test]
    fn weyl_stability_in_deterministic_mode() {
        for seed in 0..20 {
            let inst = gen_planted_gap(8, 3, 0.2, seed).unwrap();
            let eps_sigma = 0.01;
            let plain = qenc(&inst.matrix, EncodingMode::Frobenius, 0.0, Stream::new(seed)).unwrap();
            let shift = inst.truth.midpoint;
            let bound = qsmin_enc_bound(plain.scale() + shift.abs(), eps_sigma);
            let u = qshift(&qenc(&inst.matrix, EncodingMode::Frobenius, bound, Stream::new(seed)).unwrap(), shift).unwrap();
            let osp = OspSource::for_dimension(8);
            let s = qsmin(&u, eps_sigma, 0.1, &osp, Backend::Deterministic, Stream::new(0)).unwrap();
            let sigma = eig_reference(&inst.matrix).unwrap().sigma_min_shifted(shift);
            let dev = (s.value - sigma * sigma).abs();
            assert!(dev <= 2.0 * u.scale() * u.err() + eps_sigma / 2.0 + 1e-12, "seed {seed}: {dev}");
        }
    }

    #[test]
    fn ledger_is_charged() {
        let u = exact(&[0.5, -0.3]);
        let osp = OspSource::for_dimension(2);
        qsmin(&u, 0.02, 0.05, &osp, Backend::Deterministic, Stream::new(0)).unwrap();
        let l = u.ledger().snapshot();
        assert!(l.queries_uh > 0 && l.queries_state_prep > 0 && l.max_qubits > 0);
    }
}
