//! Trace estimation against the maximally mixed state.

use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};

use crate::backend::Backend;
use crate::error::{ensure, Result};
use crate::hermitian::CMatrix;
use crate::ledger::{lg, Counter};
use crate::qube::Qube;
use crate::rng::Stream;

/// Largest register for the explicit purification.
pub const MAX_PURIFICATION_QUBITS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEstimate {
    pub value: f64,
    pub eps: f64,
    pub delta: f64,
    pub samples_used: u64,
}

/// `tr_2(|ρ⟩⟨ρ|)` for `|ρ⟩ = 2^{-n/2} Σ_i |i⟩|i⟩`, computed from the explicit
/// `2^n × 2^n` coefficient matrix `Ψ` of the state as `Ψ Ψ†`.
pub fn max_entangled_reduced_density(n: u32) -> Result<CMatrix> {
    ensure!(n >= 1, Parameter, "need at least one qubit");
    ensure!(n <= MAX_PURIFICATION_QUBITS, Capacity, "{n} qubits exceed the limit of {MAX_PURIFICATION_QUBITS}");
    let d = 1usize << n;
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    // |ρ⟩ as a flat vector over |i⟩|j⟩, index i·d + j.
    let mut state = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        state[i * d + i] = amp;
    }
    let psi = CMatrix::from_row_slice(d, d, &state);
    Ok(&psi * psi.adjoint())
}

/// Hadamard-test samples needed for `|ξ − tr(A)| ≤ ε_tr` with probability
/// `1 − δ`: half the error budget goes to sampling, half to the encoding.
pub fn trace_sample_count(scale: f64, n: usize, eps_tr: f64, delta: f64) -> u64 {
    let t = eps_tr / (2.0 * scale * n as f64);
    (2.0 * (2.0 / delta).ln() / (t * t)).ceil() as u64
}

/// Estimates `tr(A)` from an encoding of `A`.
pub fn purified_trace(u: &Qube, eps_tr: f64, delta: f64, backend: Backend, stream: Stream) -> Result<TraceEstimate> {
    ensure!(eps_tr > 0.0 && eps_tr < 1.0, Parameter, "eps_tr must lie in (0, 1), got {eps_tr}");
    ensure!(delta > 0.0 && delta < 1.0, Parameter, "delta must lie in (0, 1), got {delta}");
    let n = u.dim();
    let bound = eps_tr / (2.0 * n as f64);
    ensure!(u.err() <= bound, Contract, "encoding error {} exceeds eps_tr/(2N) = {bound}", u.err());

    let a = u.scale();
    let nf = n as f64;
    let uses = a * nf / eps_tr * lg(1.0 / delta);
    let ledger = u.ledger();
    ledger.charge(Counter::QueriesUH, u.uh_per_use() * uses)?;
    ledger.charge(Counter::ElementaryGates, (lg(nf) + u.unit_cost()) * uses)?;
    ledger.charge(Counter::QueriesStatePrep, uses)?;
    ledger.charge(Counter::MaxQubits, (2 * n.next_power_of_two().trailing_zeros() + u.ancillas() + 1) as f64)?;

    let exact = a * u.encoded_trace();
    let (value, samples_used) = match backend {
        Backend::Deterministic => (exact, 1),
        Backend::Sampling => {
            let m = trace_sample_count(a, n, eps_tr, delta);
            let mean = (u.encoded_trace() / nf).clamp(-1.0, 1.0);
            let heads = Binomial::new(m, 0.5 * (1.0 + mean))
                .expect("probability lies in [0, 1]")
                .sample(&mut stream.rng());
            let sample_mean = (2.0 * heads as f64 - m as f64) / m as f64;
            (a * nf * sample_mean, m)
        }
    };
    ledger.charge(Counter::ClassicalSamples, samples_used as f64)?;
    Ok(TraceEstimate { value, eps: eps_tr, delta, samples_used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::HermitianMatrix;
    use crate::instances::random_hermitian_with_norm;
    use crate::qube::{qenc, EncodingMode};

    #[test]
    fn reduced_density_is_maximally_mixed() {
        for n in 1..=4 {
            let rho = max_entangled_reduced_density(n).unwrap();
            let d = 1usize << n;
            let expected = CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0);
            assert!((rho.clone() - expected).norm() <= 1e-12);
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
        }
        assert!(max_entangled_reduced_density(0).is_err());
        assert!(max_entangled_reduced_density(11).is_err());
    }

    #[test]
    fn identity_trace_within_tolerance() {
        let u = qenc(&HermitianMatrix::identity(4), EncodingMode::Exact, 0.0, Stream::new(0)).unwrap();
        let (eps, delta) = (0.25, 0.1);
        let hits = (0..500)
            .filter(|&i| {
                let t = purified_trace(&u, eps, delta, Backend::Sampling, Stream::new(i)).unwrap();
                (t.value - 4.0).abs() <= eps
            })
            .count();
        assert!(hits as f64 / 500.0 >= 1.0 - delta, "{hits}");
    }

    #[test]
    fn zero_matrix_concentrates_at_zero() {
        let u = qenc(&HermitianMatrix::zeros(4), EncodingMode::Exact, 0.0, Stream::new(0)).unwrap();
        for i in 0..50 {
            let t = purified_trace(&u, 0.25, 0.1, Backend::Sampling, Stream::new(i)).unwrap();
            assert!(t.value.abs() <= 0.25);
        }
    }

    #[test]
    fn frobenius_encoded_random_matrix() {
        let h = random_hermitian_with_norm(8, 0.5, Stream::new(3));
        let (eps, delta) = (0.25, 0.1);
        let u = qenc(&h, EncodingMode::Frobenius, eps / 32.0, Stream::new(4)).unwrap();
        let hits = (0..300)
            .filter(|&i| (purified_trace(&u, eps, delta, Backend::Sampling, Stream::new(i)).unwrap().value - h.trace()).abs() <= eps)
            .count();
        assert!(hits as f64 / 300.0 >= 1.0 - delta);
    }

    #[test]
    fn deterministic_backend_is_exact_up_to_encoding_error() {
        let h = random_hermitian_with_norm(8, 0.5, Stream::new(5));
        let u = qenc(&h, EncodingMode::Frobenius, 1e-3, Stream::new(6)).unwrap();
        let t = purified_trace(&u, 0.25, 0.1, Backend::Deterministic, Stream::new(0)).unwrap();
        assert_eq!(t.value, u.scale() * u.encoded_trace());
        assert!((t.value - h.trace()).abs() <= 8.0 * u.err() + 1e-12);
    }

    #[test]
    fn encoding_error_precondition() {
        let h = random_hermitian_with_norm(4, 0.5, Stream::new(5));
        let u = qenc(&h, EncodingMode::Frobenius, 0.1, Stream::new(6)).unwrap();
        assert!(matches!(
            purified_trace(&u, 0.25, 0.1, Backend::Sampling, Stream::new(0)),
            Err(crate::error::Error::Contract(_))
        ));
    }

    #[test]
    fn quantum_charge_is_linear_in_inverse_accuracy() {
        let u = qenc(&HermitianMatrix::identity(8), EncodingMode::Exact, 0.0, Stream::new(0)).unwrap();
        let charge = |eps: f64| {
            let v = u.with_ledger(Default::default());
            purified_trace(&v, eps, 0.1, Backend::Deterministic, Stream::new(0)).unwrap();
            v.ledger().snapshot().queries_uh as f64
        };
        let ratio = charge(0.05) / charge(0.1);
        assert!((1.9..=2.1).contains(&ratio), "{ratio}");
    }

    #[test]
    fn sample_count_matches_hoeffding() {
        // t = ε/(2aN) = 1/32 for a = 1, N = 4, ε = 1/4.
        assert_eq!(trace_sample_count(1.0, 4, 0.25, 0.1), (2.0 * 20f64.ln() * 1024.0).ceil() as u64);
    }
}
