//! Statistical validation suites behind `gapkit validate`.
//!
//! Each suite runs seeded trials (in parallel, results ordered by trial index)
//! and summarizes them as a CSV table.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::backend::Backend;
use crate::chebyshev::{certify, sign_poly, sign_poly_degree_bound};
use crate::error::{ensure, Result};
use crate::gapfinder::{iteration_ceiling, qeig, qgap_const, GapConfig};
use crate::hermitian::{eig_reference, HermitianMatrix};
use crate::instances::{gen_planted_gap, random_hermitian_with_norm};
use crate::lowerbound::{analyze_lowerbound_spectrum, gen_lowerbound_instance};
use crate::osp::{osp_sample, OspSource};
use crate::qcount::qcount;
use crate::qsmin::qsmin;
use crate::qube::{qenc, qshift, EncodingMode};
use crate::rng::Stream;
use crate::trace::purified_trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Osp,
    Sign,
    Trace,
    Qsmin,
    Qcount,
    Gapconst,
    Qeig,
    Lowerbound,
}

impl Suite {
    pub const ALL: [Suite; 8] =
        [Suite::Osp, Suite::Sign, Suite::Trace, Suite::Qsmin, Suite::Qcount, Suite::Gapconst, Suite::Qeig, Suite::Lowerbound];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Osp => "osp",
            Suite::Sign => "sign",
            Suite::Trace => "trace",
            Suite::Qsmin => "qsmin",
            Suite::Qcount => "qcount",
            Suite::Gapconst => "gapconst",
            Suite::Qeig => "qeig",
            Suite::Lowerbound => "lowerbound",
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            format!("unknown suite `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Suite parameters; unset fields fall back to per-suite defaults.
#[derive(Debug, Clone, Default)]
pub struct SuiteParams {
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub gap: Option<f64>,
    pub k: Option<usize>,
    pub seed: u64,
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

fn rate(hits: usize, trials: usize) -> f64 {
    hits as f64 / trials.max(1) as f64
}

/// Runs `trial(i)` for `i < trials` in parallel, in index order.
fn trials<T: Send>(count: usize, trial: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..count as u64).into_par_iter().map(trial).collect()
}

fn random_unit(n: usize, stream: Stream) -> Vec<Complex64> {
    let mut rng = stream.rng();
    let v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn run_suite(suite: Suite, p: &SuiteParams) -> Result<Table> {
    let root = Stream::new(p.seed).fork_named(suite.name(), 0);
    match suite {
        Suite::Osp => osp_suite(p, root),
        Suite::Sign => sign_suite(p),
        Suite::Trace => trace_suite(p, root),
        Suite::Qsmin => qsmin_suite(p, root),
        Suite::Qcount => qcount_suite(p, root),
        Suite::Gapconst => gapconst_suite(p, root),
        Suite::Qeig => qeig_suite(p, root),
        Suite::Lowerbound => lowerbound_suite(p, root),
    }
}

fn osp_suite(p: &SuiteParams, root: Stream) -> Result<Table> {
    let n = p.n.unwrap_or(64);
    let count = p.trials.unwrap_or(2000);
    let src = OspSource::for_dimension(n);
    let dim = src.dim();
    let threshold = src.gamma();
    let mut targets: Vec<(&str, Vec<Complex64>)> = Vec::new();
    let mut e1 = vec![Complex64::new(0.0, 0.0); dim];
    e1[0] = Complex64::new(1.0, 0.0);
    targets.push(("basis", e1));
    targets.push(("uniform", vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim]));
    targets.push(("random-a", random_unit(dim, root.fork_named("target", 0))));
    targets.push(("random-b", random_unit(dim, root.fork_named("target", 1))));

    let mut t = Table::new(&["target", "n", "trials", "threshold", "success_rate"]);
    for (name, y) in &targets {
        let hits = trials(count, |i| Ok(osp_sample(dim, root.fork(i))?.overlap(y) > threshold))?;
        let hits = hits.iter().filter(|&&h| h).count();
        t.push(vec![name.to_string(), dim.to_string(), count.to_string(), f(threshold), f(rate(hits, count))]);
    }
    Ok(t)
}

fn sign_suite(p: &SuiteParams) -> Result<Table> {
    let delta = p.delta.unwrap_or(0.1);
    let eps = p.eps.unwrap_or(1e-4);
    let poly = sign_poly(delta, eps)?;
    let check = certify(&poly.coeffs, delta);
    let certified = check.sup_err <= eps && check.max_abs <= 1.0 + 1e-10;
    let mut t = Table::new(&["delta_prime", "eps", "degree", "degree_bound", "sup_err", "max_abs", "grid_points", "certified"]);
    t.push(vec![
        f(delta),
        f(eps),
        poly.degree.to_string(),
        sign_poly_degree_bound(delta, eps).to_string(),
        f(check.sup_err),
        f(check.max_abs),
        check.points.to_string(),
        certified.to_string(),
    ]);
    Ok(t)
}

fn trace_suite(p: &SuiteParams, root: Stream) -> Result<Table> {
    let n = p.n.unwrap_or(8);
    let count = p.trials.unwrap_or(500);
    let eps = p.eps.unwrap_or(0.25);
    let delta = p.delta.unwrap_or(0.1);
    let alternating: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.5 } else { -0.25 }).collect();
    let random = random_hermitian_with_norm(n, 1.0, root.fork_named("fixture", 0));
    let fixtures = [
        ("identity", HermitianMatrix::identity(n), EncodingMode::Exact),
        ("alternating", HermitianMatrix::diag(&alternating)?, EncodingMode::Exact),
        ("random-exact", random.clone(), EncodingMode::Exact),
        ("random-frobenius", random, EncodingMode::Frobenius),
    ];
    let mut t = Table::new(&["fixture", "n", "trials", "eps", "delta", "success_rate"]);
    for (name, h, mode) in &fixtures {
        let eps_enc = if *mode == EncodingMode::Exact { 0.0 } else { eps / (2.0 * n as f64) };
        let u = qenc(h, *mode, eps_enc, root.fork_named("enc", 0))?;
        let exact = h.trace();
        let ok = trials(count, |i| {
            let est = purified_trace(&u, eps, delta, p.backend, root.fork(i))?;
            Ok((est.value - exact).abs() <= eps)
        })?;
        let hits = ok.iter().filter(|&&x| x).count();
        t.push(vec![name.to_string(), n.to_string(), count.to_string(), f(eps), f(delta), f(rate(hits, count))]);
    }
    Ok(t)
}

fn qsmin_suite(p: &SuiteParams, root: Stream) -> Result<Table> {
    let n = p.n.unwrap_or(16);
    let count = p.trials.unwrap_or(400);
    let eps = p.eps.unwrap_or(0.02);
    let delta = p.delta.unwrap_or(0.1);
    let gap = p.gap.unwrap_or(0.2);
    let osp = OspSource::for_dimension(n);
    let errors = trials(count, |i| {
        let inst = gen_planted_gap(n, n / 2, gap, root.fork_named("instance", i).key())?;
        let sigma = eig_reference(&inst.matrix)?.sigma_min_shifted(0.0);
        let u = qenc(&inst.matrix, EncodingMode::Exact, 0.0, Stream::new(0))?;
        let s = qsmin(&u, eps, delta, &osp, p.backend, root.fork(i))?;
        Ok((s.value - sigma * sigma).abs())
    })?;
    let hits = errors.iter().filter(|&&e| e <= eps).count();
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
    let mut t = Table::new(&["n", "trials", "eps_sigma", "delta", "success_rate", "median_abs_error"]);
    t.push(vec![n.to_string(), count.to_string(), f(eps), f(delta), f(rate(hits, count)), f(median)]);
    Ok(t)
}

/// Random `H` of norm 1/2 and a shift with `σ_min(H − hI) ≥ promise`.
pub fn certified_shift(n: usize, promise: f64, stream: Stream) -> Result<(HermitianMatrix, f64)> {
    ensure!(promise < 0.25, Parameter, "promise {promise} too large for a norm-1/2 matrix");
    let mut rng = stream.rng();
    for attempt in 0..1000 {
        let h = random_hermitian_with_norm(n, 0.5, stream.fork(attempt + 1));
        let d = eig_reference(&h)?;
        for _ in 0..200 {
            let shift = rng.random_range(-0.45..0.45);
            if d.sigma_min_shifted(shift) >= promise {
                return Ok((h, shift));
            }
        }
    }
    Err(crate::error::Error::Parameter(format!("no shift with promise {promise} found")))
}

fn qcount_suite(p: &SuiteParams, root: Stream) -> Result<Table> {
    let n = p.n.unwrap_or(16);
    let count = p.trials.unwrap_or(300);
    let delta = p.delta.unwrap_or(0.1);
    let promise = p.gap.unwrap_or(0.02);
    let ok = trials(count, |i| {
        let (h, shift) = certified_shift(n, promise, root.fork_named("instance", i))?;
        let oracle = eig_reference(&h)?.count_below(shift);
        let u = qshift(&qenc(&h, EncodingMode::Exact, 0.0, Stream::new(0))?, shift)?;
        let r = qcount(&u, promise, delta, p.backend, root.fork(i))?;
        Ok(r.z == oracle)
    })?;
    let hits = ok.iter().filter(|&&x| x).count();
    let mut t = Table::new(&["n", "trials", "promise", "delta", "backend", "success_rate"]);
    t.push(vec![n.to_string(), count.to_string(), f(promise), f(delta), p.backend.name().into(), f(rate(hits, count))]);
    Ok(t)
}

fn gapconst_suite(p: &SuiteParams, root: Stream) -> Result<Table> {
    let n = p.n.unwrap_or(16);
    let k = p.k.unwrap_or(3);
    let gap = p.gap.unwrap_or(0.2);
    let count = p.trials.unwrap_or(200);
    let delta = p.delta.unwrap_or(0.1);
    let cfg = GapConfig { backend: p.backend, ..GapConfig::default() };
    let results = trials(count, |i| {
        let inst = gen_planted_gap(n, k, gap, root.fork_named("instance", i).key())?;
        let r = qgap_const(&inst.matrix, k, delta, &cfg, root.fork(i))?;
        Ok((r.check(&inst.truth).all(), r.iterations))
    })?;
    let hits = results.iter().filter(|r| r.0).count();
    let max_it = results.iter().map(|r| r.1).max().unwrap_or(0);
    let mut t = Table::new(&["n", "k", "gap", "trials", "delta", "success_rate", "max_iterations", "iteration_ceiling"]);
    t.push(vec![
        n.to_string(),
        k.to_string(),
        f(gap),
        count.to_string(),
        f(delta),
        f(rate(hits, count)),
        max_it.to_string(),
        iteration_ceiling(gap).to_string(),
    ]);
    Ok(t)
}

fn qeig_suite(p: &SuiteParams, root: Stream) -> Result<Table> {
    let n = p.n.unwrap_or(8);
    let k = p.k.unwrap_or(3);
    let gap = p.gap.unwrap_or(0.2);
    let eps = p.eps.unwrap_or(0.1);
    let count = p.trials.unwrap_or(20);
    let delta = p.delta.unwrap_or(0.1);
    let cfg = GapConfig { backend: p.backend, ..GapConfig::default() };
    let checks = trials(count, |i| {
        let inst = gen_planted_gap(n, k, gap, root.fork_named("instance", i).key())?;
        let r = qeig(&inst.matrix, k, delta, eps, &cfg, root.fork(i))?;
        Ok(r.check(&inst.truth, eps))
    })?;
    let count_of = |pred: &dyn Fn(&crate::gapfinder::EigChecks) -> bool| rate(checks.iter().filter(|c| pred(c)).count(), count);
    let mut t = Table::new(&["n", "k", "gap", "eps", "trials", "delta", "lambda_k_rate", "lambda_k1_rate", "mu_rate", "gap_rate", "success_rate"]);
    t.push(vec![
        n.to_string(),
        k.to_string(),
        f(gap),
        f(eps),
        count.to_string(),
        f(delta),
        f(count_of(&|c| c.lambda_k)),
        f(count_of(&|c| c.lambda_k1)),
        f(count_of(&|c| c.mu)),
        f(count_of(&|c| c.gap)),
        f(count_of(&|c| c.all())),
    ]);
    Ok(t)
}

fn lowerbound_suite(p: &SuiteParams, root: Stream) -> Result<Table> {
    let n = p.n.unwrap_or(4);
    let count = p.trials.unwrap_or(50);
    ensure!(n >= 1, Parameter, "n must be positive");
    let rows = trials(count, |i| {
        let mut rng = root.fork(i).rng();
        let density = rng.random_range(0.0..=1.0);
        let x: Vec<bool> = (0..n * n).map(|_| rng.random_bool(density)).collect();
        let sigma = x.iter().filter(|&&b| b).count();
        let a = match rng.random_range(0..3) {
            0 => sigma,
            1 => sigma.saturating_sub(1),
            _ => (sigma + 1).min(n * n),
        };
        let inst = gen_lowerbound_instance(&x, a)?;
        let check = analyze_lowerbound_spectrum(&inst.adjacency, a, sigma);
        Ok(vec![
            i.to_string(),
            n.to_string(),
            a.to_string(),
            sigma.to_string(),
            check.spectrum_ok.to_string(),
            check.decided_equal.to_string(),
            (check.decided_equal == (a == sigma)).to_string(),
        ])
    })?;
    let mut t = Table::new(&["trial", "n", "a", "sigma", "spectrum_ok", "decided_equal", "correct"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}
