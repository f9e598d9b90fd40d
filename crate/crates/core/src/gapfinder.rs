//! Spectral gap search: a constant-factor gap/midpoint estimate by scanning
//! shrinking grids, then an ε-accurate refinement of the gap edges.
//!
//! Both stages probe a shift `h` the same way: estimate `σ_min(H − hI)²`, and
//! where it is certified large enough, count the eigenvalues below `h`. A probe
//! is "in the gap" when exactly `N − k` eigenvalues lie below it.

use rayon::prelude::*;

use crate::backend::Backend;
use crate::error::{ensure, Error, Result};
use crate::hermitian::{GapGroundTruth, HermitianMatrix};
use crate::ledger::{CostLedger, LedgerHandle};
use crate::osp::OspSource;
use crate::qcount::{qcount, qcount_enc_bound};
use crate::qsmin::{qsmin, qsmin_enc_bound};
use crate::qube::{qenc, qshift, EncodingMode, Qube};
use crate::rng::Stream;

/// Smallest grid width tried when the caller sets none.
pub const DEFAULT_GAP_MIN: f64 = 1.0 / (1u64 << 40) as f64;

/// Upper end of the iteration ceiling `⌈log2(1/Δ_k)⌉ + C_GAP`.
pub const C_GAP: u32 = 2;

/// First grid width exponent: `Δ^j = 2^{-j}` starting at `j = 2`.
pub const FIRST_ITERATION: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapConfig {
    pub backend: Backend,
    pub encoding: EncodingMode,
    pub gap_min: f64,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self { backend: Backend::Sampling, encoding: EncodingMode::Exact, gap_min: DEFAULT_GAP_MIN }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapConstResult {
    pub mu_hat: f64,
    /// `2^{-iterations}`.
    pub gap_hat: f64,
    pub iterations: u32,
    pub ledger: CostLedger,
    /// Sum of the failure budgets of all subroutine calls made.
    pub budget_spent: f64,
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigResult {
    pub lambda_k: f64,
    pub lambda_k1: f64,
    pub mu: f64,
    pub gap: f64,
    pub ledger: CostLedger,
    pub stage_one: GapConstResult,
    pub eps_k: f64,
    /// Grid points probed and how many of them landed in the gap.
    pub probes: usize,
    pub detected: usize,
    pub budget_spent: f64,
}

/// Absolute slack for floating-point comparisons against guarantees.
const SLACK: f64 = 1e-12;

/// The constant-factor guarantees, checked against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapConstChecks {
    pub gap_hat: bool,
    pub mu_hat: bool,
    pub iterations: bool,
}

impl GapConstChecks {
    pub fn all(&self) -> bool {
        self.gap_hat && self.mu_hat && self.iterations
    }
}

/// `⌈log2(1/Δ_k)⌉ + C_GAP`.
pub fn iteration_ceiling(gap: f64) -> u32 {
    (1.0 / gap).log2().ceil().max(0.0) as u32 + C_GAP
}

impl GapConstResult {
    pub fn check(&self, truth: &GapGroundTruth) -> GapConstChecks {
        let d = truth.gap;
        GapConstChecks {
            gap_hat: self.gap_hat >= d / 2.0 - SLACK && self.gap_hat <= 4.0 * d + SLACK,
            mu_hat: (self.mu_hat - truth.midpoint).abs() <= 7.0 / 16.0 * d + SLACK,
            iterations: self.iterations <= iteration_ceiling(d),
        }
    }
}

/// The four ε-accuracy guarantees, checked against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigChecks {
    pub lambda_k: bool,
    pub lambda_k1: bool,
    pub mu: bool,
    pub gap: bool,
}

impl EigChecks {
    pub fn all(&self) -> bool {
        self.lambda_k && self.lambda_k1 && self.mu && self.gap
    }
}

impl EigResult {
    pub fn check(&self, truth: &GapGroundTruth, eps: f64) -> EigChecks {
        let tol = eps * truth.gap / 2.0;
        EigChecks {
            lambda_k: self.lambda_k >= truth.lambda_k - tol - SLACK && self.lambda_k <= truth.lambda_k + SLACK,
            lambda_k1: self.lambda_k1 >= truth.lambda_k1 - SLACK && self.lambda_k1 <= truth.lambda_k1 + tol + SLACK,
            mu: (self.mu - truth.midpoint).abs() <= tol + SLACK,
            gap: (self.gap - truth.gap).abs() <= eps * truth.gap + SLACK,
        }
    }
}

fn check_instance(h: &HermitianMatrix, k: usize, delta: f64) -> Result<()> {
    let n = h.dim();
    ensure!(n >= 2, Parameter, "need N >= 2, got {n}");
    ensure!(k >= 1 && k < n, Parameter, "k must lie in [1, N-1] = [1, {}], got {k}", n - 1);
    ensure!(delta > 0.0 && delta < 0.5, Parameter, "delta must lie in (0, 1/2), got {delta}");
    ensure!(h.is_finite(), Input, "matrix has non-finite entries");
    let norm = h.spectral_norm();
    ensure!(norm <= 0.5 + 1e-12, Parameter, "need ‖H‖ <= 1/2, got {norm}");
    Ok(())
}

/// Scale of a fresh encoding before noise: 1 for exact, `‖H‖_F` otherwise.
fn nominal_scale(h: &HermitianMatrix, mode: EncodingMode) -> f64 {
    match mode {
        EncodingMode::Exact => 1.0,
        EncodingMode::Frobenius => Some(h.frobenius_norm()).filter(|&f| f > 0.0).unwrap_or(1.0),
    }
}

/// Encodes `h` with the largest error admitted at every shift `|s| <= 1/2`:
/// `bound(a + 1/2)`. If noise grows the scale past `a`, the budget is
/// recomputed at the grown scale; shrinking the same noise direction cannot
/// grow it again.
fn encode(h: &HermitianMatrix, cfg: &GapConfig, bound: impl Fn(f64) -> f64, stream: Stream, ledger: &LedgerHandle) -> Result<Qube> {
    let a = nominal_scale(h, cfg.encoding);
    let eps = |scale: f64| if cfg.encoding == EncodingMode::Exact { 0.0 } else { bound(scale + 0.5) };
    let mut u = qenc(h, cfg.encoding, eps(a), stream)?;
    if u.scale() > a {
        u = qenc(h, cfg.encoding, eps(u.scale()), stream)?;
    }
    Ok(u.with_ledger(ledger.clone()))
}

/// Parameters of one grid probe.
struct Probe {
    smin: Qube,
    count: Qube,
    osp: OspSource,
    eps_sigma: f64,
    threshold: f64,
    promise: f64,
    delta_call: f64,
    backend: Backend,
}

struct Outcome {
    /// Count below the shift, or `None` when the σ test failed.
    z: Option<usize>,
    ledger: CostLedger,
    calls: u32,
}

impl Probe {
    fn run(&self, shift: f64, stream: Stream) -> Result<Outcome> {
        let scratch = LedgerHandle::new();
        let us = qshift(&self.smin, shift)?.with_ledger(scratch.clone());
        let s = qsmin(&us, self.eps_sigma, self.delta_call, &self.osp, self.backend, stream.fork_named("qsmin", 0))?;
        if s.value < self.threshold {
            return Ok(Outcome { z: None, ledger: scratch.snapshot(), calls: 1 });
        }
        let uc = qshift(&self.count, shift)?.with_ledger(scratch.clone());
        let c = qcount(&uc, self.promise, self.delta_call, self.backend, stream.fork_named("qcount", 0))?;
        Ok(Outcome { z: Some(c.z), ledger: scratch.snapshot(), calls: 2 })
    }
}

/// Probes in grid order, in parallel chunks; returns outcomes up to and
/// including the first one accepted by `stop`. Ledgers and errors past that
/// point are discarded, so results match a sequential early-exit scan.
fn scan(
    probe: &Probe,
    shifts: &[f64],
    stream: Stream,
    stop: impl Fn(&Outcome) -> bool + Sync,
) -> Result<Vec<(f64, Outcome)>> {
    let chunk = (rayon::current_num_threads() * 4).max(1);
    let mut out = Vec::new();
    for (c, block) in shifts.chunks(chunk).enumerate() {
        let results: Vec<Result<Outcome>> = block
            .par_iter()
            .enumerate()
            .map(|(i, &s)| probe.run(s, stream.fork((c * chunk + i) as u64)))
            .collect();
        for (&s, r) in block.iter().zip(results) {
            let o = r?;
            let done = stop(&o);
            out.push((s, o));
            if done {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

/// Constant-factor estimate of the `k`-th gap `λ_k − λ_{k+1}` and its midpoint.
/// With probability `1 − δ`: `gap_hat ∈ [Δ_k/2, 4Δ_k]` and
/// `|mu_hat − μ_k| ≤ 7Δ_k/16`.
pub fn qgap_const(h: &HermitianMatrix, k: usize, delta: f64, cfg: &GapConfig, stream: Stream) -> Result<GapConstResult> {
    check_instance(h, k, delta)?;
    ensure!(cfg.gap_min > 0.0, Parameter, "gap_min must be positive, got {}", cfg.gap_min);
    let n = h.dim();
    let ledger = LedgerHandle::new();
    let mut budget_spent = 0.0;
    let mut probes = 0;

    let mut j = FIRST_ITERATION;
    loop {
        let width = 0.5f64.powi(j as i32);
        if width < cfg.gap_min || j > 60 {
            return Err(Error::NotFound { gap_min: cfg.gap_min, ledger: ledger.snapshot() });
        }
        let delta_j = delta * width / 2f64.powi(j as i32 + 1);
        let eps_sigma = width * width / 64.0;
        let promise = width / 8.0;
        let it = stream.fork_named("iteration", j as u64);
        let probe = Probe {
            smin: encode(h, cfg, |a| qsmin_enc_bound(a, eps_sigma), it.fork_named("enc-smin", 0), &ledger)?,
            count: encode(h, cfg, |a| qcount_enc_bound(a, n, promise), it.fork_named("enc-count", 0), &ledger)?,
            osp: OspSource::for_dimension(n),
            eps_sigma,
            threshold: width * width / 32.0,
            promise,
            delta_call: delta_j / 2.0,
            backend: cfg.backend,
        };
        let points = 1usize << (j + 1);
        let shifts: Vec<f64> = (0..=points).map(|i| -0.5 + i as f64 * width / 2.0).collect();
        let target = n - k;
        let scanned = scan(&probe, &shifts, it.fork_named("grid", 0), |o| o.z == Some(target))?;
        for (shift, o) in &scanned {
            ledger.merge(&o.ledger);
            budget_spent += o.calls as f64 * probe.delta_call;
            probes += 1;
            if o.z == Some(target) {
                return Ok(GapConstResult {
                    mu_hat: *shift,
                    gap_hat: width,
                    iterations: j,
                    ledger: ledger.snapshot(),
                    budget_spent,
                    probes,
                });
            }
        }
        j += 1;
    }
}

/// Grid half-width in steps of `ε_k/4` for the refinement stage: the points
/// `μ̂ + i ε_k/4`, `|i| ≤ M`, cover `μ̂ ± 2Δ̂`, which contains both gap edges
/// whenever the first stage succeeded.
pub fn refinement_half_width(gap_hat: f64, eps_k: f64) -> usize {
    (8.0 * gap_hat / eps_k).ceil() as usize
}

/// ε-accurate gap edges: with probability `1 − δ`,
/// `lambda_k ∈ [λ_k − εΔ_k/2, λ_k]` and `lambda_k1 ∈ [λ_{k+1}, λ_{k+1} + εΔ_k/2]`.
pub fn qeig(h: &HermitianMatrix, k: usize, delta: f64, eps: f64, cfg: &GapConfig, stream: Stream) -> Result<EigResult> {
    check_instance(h, k, delta)?;
    ensure!(eps > 0.0 && eps < 1.0, Parameter, "eps must lie in (0, 1), got {eps}");
    let n = h.dim();
    let stage_one = qgap_const(h, k, delta / 2.0, cfg, stream.fork_named("stage-one", 0))?;
    let ledger = LedgerHandle::new();
    ledger.merge(&stage_one.ledger);

    let eps_k = eps * stage_one.gap_hat / 4.0;
    let m = refinement_half_width(stage_one.gap_hat, eps_k);
    let total = 2 * m + 1;
    let delta_sigma = delta / (4.0 * total as f64);
    let eps_sigma = 3.0 * eps_k * eps_k / 64.0;
    let promise = eps_k / 8.0;
    let st = stream.fork_named("refine", 0);
    let probe = Probe {
        smin: encode(h, cfg, |a| qsmin_enc_bound(a, eps_sigma), st.fork_named("enc-smin", 0), &ledger)?,
        count: encode(h, cfg, |a| qcount_enc_bound(a, n, promise), st.fork_named("enc-count", 0), &ledger)?,
        osp: OspSource::for_dimension(n),
        eps_sigma,
        threshold: eps_k * eps_k / 32.0,
        promise,
        delta_call: delta_sigma,
        backend: cfg.backend,
    };
    let shifts: Vec<f64> = (0..total)
        .map(|i| stage_one.mu_hat + (i as f64 - m as f64) * eps_k / 4.0)
        .filter(|l| l.abs() <= 0.5)
        .collect();
    let scanned = scan(&probe, &shifts, st.fork_named("grid", 0), |_| false)?;

    let target = n - k;
    let mut budget_spent = stage_one.budget_spent;
    let mut in_gap = Vec::new();
    for (shift, o) in &scanned {
        ledger.merge(&o.ledger);
        budget_spent += o.calls as f64 * delta_sigma;
        if o.z == Some(target) {
            in_gap.push(*shift);
        }
    }
    if in_gap.is_empty() {
        return Err(Error::DetectionFailed { points: scanned.len(), ledger: ledger.snapshot() });
    }
    let lambda_k = in_gap.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lambda_k1 = in_gap.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EigResult {
        lambda_k,
        lambda_k1,
        mu: 0.5 * (lambda_k + lambda_k1),
        gap: lambda_k - lambda_k1,
        ledger: ledger.snapshot(),
        stage_one,
        eps_k,
        probes: scanned.len(),
        detected: in_gap.len(),
        budget_spent,
    })
}
