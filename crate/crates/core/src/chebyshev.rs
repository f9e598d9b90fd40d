//! Odd Chebyshev approximations of the sign function on a gapped domain.
//!
//! `sign_poly(δ', ε)` interpolates `erf(κx)` with `κ = erfc⁻¹(ε/4)/δ'`,
//! truncates the Chebyshev series once the discarded tail is below `ε/8`,
//! and divides by `1 + tail` so that `|p| ≤ 1` on `[-1, 1]`. The error on
//! `[-1,-δ'] ∪ [δ',1]` is then certified by evaluating `p` on a θ-grid with at
//! least 40 points per oscillation of `T_l`.
//!
//! Observed degrees stay below `K/δ' · ln(2/ε)` with `K = 2` (see
//! [`DEGREE_CONSTANT`]).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::FftPlanner;
use statrs::function::erf::{erf, erfc_inv};

use crate::error::{ensure, Error, Result};
use crate::hermitian::{CMatrix, HermitianMatrix};

/// Largest degree `sign_poly` will produce.
pub const DEGREE_CAP: usize = 200_000;

/// Documented bound `degree ≤ ⌈K/δ' · ln(2/ε)⌉`.
pub const DEGREE_CONSTANT: f64 = 2.0;

/// Minimum θ-grid points per oscillation during certification.
pub const POINTS_PER_OSCILLATION: usize = 40;

/// Real polynomial `Σ c_j T_j(x)`; sign approximations only carry odd terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebPoly {
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub target_gap: f64,
    pub sup_err: f64,
}

impl ChebPoly {
    /// `T_1(x) = x`.
    pub fn identity() -> Self {
        Self { degree: 1, coeffs: vec![0.0, 1.0], target_gap: 1.0, sup_err: 0.0 }
    }

    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(|&c| c == 0.0)
    }

    /// Scalar Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs[1..].iter().rev() {
            let b0 = c + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + x * b1 - b2
    }

    /// Evaluates at many points at once; odd polynomials use the half-length
    /// recurrence `T_{2m+1}(x) = x V_m(2x² − 1)`.
    pub fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        if !self.is_odd() {
            return xs.iter().map(|&x| self.eval(x)).collect();
        }
        // V_m follows the T recurrence with V_0 = 1, V_1 = 2y − 1.
        let odd: Vec<f64> = self.coeffs.iter().skip(1).step_by(2).copied().collect();
        let mut out = Vec::with_capacity(xs.len());
        for block in xs.chunks(LANES) {
            let mut x = [0.0; LANES];
            x[..block.len()].copy_from_slice(block);
            out.extend_from_slice(&odd_block(&odd, &x)[..block.len()]);
        }
        out
    }

    /// Text form: `CHEB <degree> <delta_prime> <sup_err>` then one coefficient per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("CHEB {} {:?} {:?}\n", self.degree, self.target_gap, self.sup_err);
        for c in &self.coeffs {
            let _ = writeln!(out, "{c:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
        let (hl, header) = lines.next().ok_or_else(|| bad(0, "missing CHEB header"))?;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 4 || f[0] != "CHEB" {
            return Err(bad(hl, "expected `CHEB <degree> <delta_prime> <sup_err>`"));
        }
        let degree: usize = f[1].parse().map_err(|_| bad(hl, "bad degree"))?;
        let target_gap: f64 = f[2].parse().map_err(|_| bad(hl, "bad delta_prime"))?;
        let sup_err: f64 = f[3].parse().map_err(|_| bad(hl, "bad sup_err"))?;
        let coeffs = lines
            .map(|(i, l)| l.trim().parse::<f64>().map_err(|_| bad(i, "bad coefficient")))
            .collect::<Result<Vec<_>>>()?;
        if coeffs.len() != degree + 1 {
            return Err(bad(hl, &format!("expected {} coefficients, found {}", degree + 1, coeffs.len())));
        }
        Ok(Self { degree, coeffs, target_gap, sup_err })
    }
}

const LANES: usize = 8;

/// `Σ_m c_m T_{2m+1}(x)` for a fixed-width block of points; the independent
/// lanes keep the recurrence in registers.
fn odd_block(odd: &[f64], x: &[f64; LANES]) -> [f64; LANES] {
    let y2 = x.map(|x| 2.0 * (2.0 * x * x - 1.0));
    let (mut b1, mut b2) = ([0.0; LANES], [0.0; LANES]);
    for &c in odd[1..].iter().rev() {
        for l in 0..LANES {
            let b0 = c + y2[l] * b1[l] - b2[l];
            b2[l] = b1[l];
            b1[l] = b0;
        }
    }
    // Σ_{m≥0} c_m V_m = c_0 + b_1 V_1 − b_2 V_0 with V_1 = 2y − 1.
    std::array::from_fn(|l| x[l] * (odd[0] + b1[l] * (y2[l] - 1.0) - b2[l]))
}

/// Matrix Clenshaw recurrence, `p(A)` for a Hermitian `A`.
pub fn clenshaw_matrix(a: &HermitianMatrix, p: &ChebPoly) -> HermitianMatrix {
    let n = a.dim();
    let m = a.as_matrix();
    let mut b1 = CMatrix::zeros(n, n);
    let mut b2 = CMatrix::zeros(n, n);
    for &c in p.coeffs[1..].iter().rev() {
        let mut b0 = (m * &b1) * Complex64::new(2.0, 0.0) - &b2;
        for i in 0..n {
            b0[(i, i)] += c;
        }
        b2 = std::mem::replace(&mut b1, b0);
    }
    let mut out = m * &b1 - &b2;
    for i in 0..n {
        out[(i, i)] += p.coeffs[0];
    }
    HermitianMatrix::from_hermitian_unchecked(out)
}

/// Chebyshev interpolation coefficients of `f` on `M` first-kind nodes
/// (DCT-II through a length-`2M` FFT). `c_0` is already halved.
fn interpolate(f: impl Fn(f64) -> f64, m: usize) -> Vec<f64> {
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); 2 * m];
    for k in 0..m {
        let theta = std::f64::consts::PI * (k as f64 + 0.5) / m as f64;
        let v = Complex64::new(f(theta.cos()), 0.0);
        buf[k] = v;
        buf[2 * m - 1 - k] = v;
    }
    FftPlanner::new().plan_fft_forward(2 * m).process(&mut buf);
    let mut c: Vec<f64> = (0..m)
        .map(|j| {
            let phase = Complex64::from_polar(1.0, -std::f64::consts::PI * j as f64 / (2.0 * m as f64));
            (phase * buf[j]).re / m as f64
        })
        .collect();
    c[0] *= 0.5;
    c
}

/// `p(cos(π m / G))` for `m = 0..=G` via one inverse FFT of length `2G`.
pub fn eval_on_theta_grid(coeffs: &[f64], g: usize) -> Vec<f64> {
    assert!(coeffs.len() <= 2 * g, "grid too coarse for the degree");
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); 2 * g];
    for (b, &c) in buf.iter_mut().zip(coeffs) {
        b.re = c;
    }
    FftPlanner::new().plan_fft_inverse(2 * g).process(&mut buf);
    buf[..=g].iter().map(|z| z.re).collect()
}

/// Grid statistics used for certification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCheck {
    pub points: usize,
    pub max_abs: f64,
    /// Largest `|p(x) − sgn(x)|` over grid points with `|x| ≥ δ'`.
    pub sup_err: f64,
}

pub fn certify(coeffs: &[f64], delta_prime: f64) -> GridCheck {
    let degree = coeffs.len().saturating_sub(1).max(1);
    let g = (POINTS_PER_OSCILLATION / 2 * degree).next_power_of_two().max(1024);
    let values = eval_on_theta_grid(coeffs, g);
    let mut max_abs = 0.0f64;
    let mut sup_err = 0.0f64;
    for (i, &v) in values.iter().enumerate() {
        let x = (std::f64::consts::PI * i as f64 / g as f64).cos();
        max_abs = max_abs.max(v.abs());
        if x.abs() >= delta_prime {
            sup_err = sup_err.max((v - x.signum()).abs());
        }
    }
    GridCheck { points: g + 1, max_abs, sup_err }
}

fn degree_bound(delta_prime: f64, eps: f64) -> usize {
    (DEGREE_CONSTANT / delta_prime * (2.0 / eps).ln()).ceil() as usize
}

fn build(delta_prime: f64, eps: f64) -> Result<ChebPoly> {
    // Internal budget: smoothing ε/4, truncation ε/8 (applied twice through
    // the renormalization). Tightened if the grid says otherwise.
    let mut budget = eps;
    for _ in 0..4 {
        let kappa = erfc_inv(budget / 4.0) / delta_prime;
        let estimate = (2.0 * kappa * (64.0 / budget).ln().sqrt()).ceil() as usize + 32;
        ensure!(
            estimate <= DEGREE_CAP + DEGREE_CAP / 2,
            Capacity,
            "sign polynomial for delta' = {delta_prime}, eps = {eps} needs degree ~{estimate} > {DEGREE_CAP}"
        );
        let mut m = (2 * estimate + 64).next_power_of_two();
        let coeffs = loop {
            let c = interpolate(|x| erf(kappa * x), m);
            // The last quarter must be at roundoff level, or the nodes alias.
            let tail = c[3 * m / 4..].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if tail < 1e-14 || m >= 1 << 22 {
                break c;
            }
            m *= 2;
        };
        // Smallest odd degree whose discarded tail is below budget/8.
        let mut tail = 0.0;
        let mut degree = coeffs.len() - 1;
        while degree > 1 {
            let next = tail + coeffs[degree].abs();
            if next > budget / 8.0 {
                break;
            }
            tail = next;
            degree -= 1;
        }
        if degree % 2 == 0 {
            degree += 1;
            tail -= coeffs[degree].abs();
        }
        ensure!(
            degree <= DEGREE_CAP,
            Capacity,
            "sign polynomial for delta' = {delta_prime}, eps = {eps} needs degree {degree} > {DEGREE_CAP}"
        );
        let norm = 1.0 + tail.max(0.0);
        let mut kept: Vec<f64> = coeffs[..=degree].iter().map(|c| c / norm).collect();
        for c in kept.iter_mut().step_by(2) {
            *c = 0.0;
        }
        let check = certify(&kept, delta_prime);
        if check.sup_err <= eps && check.max_abs <= 1.0 + 1e-10 {
            return Ok(ChebPoly { degree, coeffs: kept, target_gap: delta_prime, sup_err: check.sup_err });
        }
        budget /= 4.0;
    }
    Err(Error::Capacity(format!("could not certify a sign polynomial for delta' = {delta_prime}, eps = {eps}")))
}

type Key = (u64, u64);

fn cache() -> &'static Mutex<HashMap<Key, Arc<ChebPoly>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<ChebPoly>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Certified odd sign approximation; results are memoized per `(δ', ε)`.
pub fn sign_poly(delta_prime: f64, eps_sgn: f64) -> Result<Arc<ChebPoly>> {
    ensure!(delta_prime > 0.0 && delta_prime < 1.0, Parameter, "delta' must lie in (0, 1), got {delta_prime}");
    ensure!(eps_sgn > 0.0 && eps_sgn < 1.0, Parameter, "eps_sgn must lie in (0, 1), got {eps_sgn}");
    let key = (delta_prime.to_bits(), eps_sgn.to_bits());
    if let Some(p) = cache().lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(p.clone());
    }
    let p = Arc::new(build(delta_prime, eps_sgn)?);
    cache().lock().unwrap_or_else(|e| e.into_inner()).insert(key, p.clone());
    Ok(p)
}

/// Upper bound on the degree that `sign_poly` promises.
pub fn sign_poly_degree_bound(delta_prime: f64, eps_sgn: f64) -> usize {
    degree_bound(delta_prime, eps_sgn)
}
