//! Counting negative eigenvalues of a gapped encoding.
//!
//! `z = (N − tr sgn(A))/2`, with `tr sgn(A)` estimated by applying a sign
//! polynomial to the encoding and estimating the trace to within 1/4.

use crate::backend::Backend;
use crate::chebyshev::sign_poly;
use crate::error::{ensure, Result};
use crate::ledger::{lg, Counter, LedgerHandle};
use crate::qube::{apply_qet, Qube, C_SGN};
use crate::rng::Stream;
use crate::trace::purified_trace;

pub const EPS_TR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountResult {
    pub z: usize,
    pub raw_trace: f64,
    pub promise: f64,
    /// Some encoded eigenvalue lies inside the promised gap around zero.
    pub promise_uncertified: bool,
}

/// Largest encoding error admitted by [`qcount`]: `Δ²/(32 a² C_SGN N)`.
pub fn qcount_enc_bound(scale: f64, n: usize, promise: f64) -> f64 {
    promise * promise / (32.0 * scale * scale * C_SGN * n as f64)
}

/// Sign-polynomial gap for promise `Δ` at scale `a`: `Δ/(2a)`, rounded down
/// to a power of `2^{1/8}` so nearby scales share one polynomial.
pub fn sign_gap(scale: f64, promise: f64) -> f64 {
    let target = promise / (2.0 * scale);
    let mut q = (8.0 * target.log2()).floor() / 8.0;
    let mut g = q.exp2();
    while g > target {
        q -= 0.125;
        g = q.exp2();
    }
    g
}

/// Charges the counting cost `(C + b) · a²N/Δ · lg N · lg(1/δ)` to the
/// encoding's ledger.
fn charge(u: &Qube, promise: f64, delta: f64) -> Result<()> {
    let n = u.dim() as f64;
    let a = u.scale();
    let uses = a * a * n / promise * lg(n) * lg(1.0 / delta);
    let ledger = u.ledger();
    ledger.charge(Counter::QueriesUH, u.uh_per_use() * uses)?;
    ledger.charge(Counter::ElementaryGates, (u.unit_cost() + u.ancillas() as f64) * uses)
}

/// Number of eigenvalues of the encoded operator below zero, assuming
/// `σ_min ≥ promise`. Correct with probability `1 − delta`.
pub fn qcount(u: &Qube, promise: f64, delta: f64, backend: Backend, stream: Stream) -> Result<CountResult> {
    let a = u.scale();
    let n = u.dim();
    ensure!(promise > 0.0 && promise <= a, Parameter, "promise must lie in (0, a = {a}], got {promise}");
    ensure!(delta > 0.0 && delta < 1.0, Parameter, "delta must lie in (0, 1), got {delta}");
    let bound = qcount_enc_bound(a, n, promise);
    ensure!(u.err() <= bound * (1.0 + 1e-12), Contract, "encoding error {} exceeds {bound}", u.err());

    let eps_sgn = 1.0 / (8.0 * n as f64);
    let gap = sign_gap(a, promise);
    let p = sign_poly(gap, eps_sgn / 2.0)?;
    let promise_uncertified = u.eigenvalues().iter().any(|v| v.abs() < gap);

    // The trace subroutine's query counts are subsumed by the counting
    // formula; only its sampling effort and width are carried over.
    let sign = apply_qet(u, &p)?.with_ledger(LedgerHandle::new());
    let t = purified_trace(&sign, EPS_TR, delta, backend, stream)?;
    charge(u, promise, delta)?;
    let scratch = sign.ledger().snapshot();
    u.ledger().charge(Counter::ClassicalSamples, scratch.classical_samples as f64)?;
    u.ledger().charge(Counter::MaxQubits, scratch.max_qubits as f64)?;

    let z = (n as f64 / 2.0 - t.value / 2.0).round().clamp(0.0, n as f64) as usize;
    Ok(CountResult { z, raw_trace: t.value, promise, promise_uncertified })
}
