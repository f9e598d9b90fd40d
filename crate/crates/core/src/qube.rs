//! Emulated block-encodings.
//!
//! A [`Qube`] stands for a unitary whose top-left block is `Ã`, an
//! `(a, b, ε)`-encoding of a nominal matrix `A` (`‖A − aÃ‖ ≤ ε`). Every
//! operation here maps eigenvalues through a scalar function, so a chain of
//! encodings shares the eigenbasis of the first one and only carries a vector
//! of eigenvalues. Dense matrices are built on demand.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::chebyshev::{ChebPoly, DEGREE_CAP};
use crate::error::{ensure, Result};
use crate::hermitian::{assemble, eig_reference, CMatrix, HermitianMatrix};
use crate::instances::random_hermitian_with_norm;
use crate::ledger::{lg, LedgerHandle};
use crate::rng::Stream;

/// Calibration constant of the sign-transformation error bound.
pub const C_SGN: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EncodingMode {
    /// `Ã = A`, `a = 1`, no error. Requires `‖A‖ ≤ 1`.
    #[default]
    Exact,
    /// QRAM-style: `a = ‖A‖_F`, `b = ⌈log₂N⌉ + 1`, `Ã = (A + E)/a` with a
    /// random Hermitian `E` of spectral norm exactly `eps_enc`.
    Frobenius,
}

impl EncodingMode {
    pub fn name(self) -> &'static str {
        match self {
            EncodingMode::Exact => "exact",
            EncodingMode::Frobenius => "frobenius",
        }
    }
}

impl std::str::FromStr for EncodingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(EncodingMode::Exact),
            "frobenius" => Ok(EncodingMode::Frobenius),
            other => Err(format!("unknown encoding `{other}` (expected exact or frobenius)")),
        }
    }
}

enum NominalKind {
    Base(HermitianMatrix),
    Shift(Arc<Nominal>, f64),
    Gram(Arc<Nominal>),
    Sign(Arc<Nominal>),
}

struct Nominal {
    kind: NominalKind,
    cache: OnceLock<HermitianMatrix>,
}

impl Nominal {
    fn new(kind: NominalKind) -> Arc<Self> {
        Arc::new(Self { kind, cache: OnceLock::new() })
    }

    fn matrix(&self) -> &HermitianMatrix {
        self.cache.get_or_init(|| match &self.kind {
            NominalKind::Base(m) => m.clone(),
            NominalKind::Shift(p, h) => p.matrix().shifted(*h),
            NominalKind::Gram(p) => p.matrix().gram(),
            NominalKind::Sign(p) => {
                let d = eig_reference(p.matrix()).expect("nominal matrices are finite");
                assemble(&d.eigenvectors, d.eigenvalues.iter().map(|&v| if v == 0.0 { 0.0 } else { v.signum() }))
            }
        })
    }
}

/// An emulated `(a, b, ε)` block-encoding.
#[derive(Clone)]
pub struct Qube {
    scale: f64,
    ancillas: u32,
    err: f64,
    unit_cost: f64,
    uh_per_use: f64,
    basis: Arc<CMatrix>,
    values: Arc<Vec<f64>>,
    encoded: Arc<OnceLock<HermitianMatrix>>,
    nominal: Arc<Nominal>,
    ledger: LedgerHandle,
}

impl fmt::Debug for Qube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Qube")
            .field("dim", &self.dim())
            .field("scale", &self.scale)
            .field("ancillas", &self.ancillas)
            .field("err", &self.err)
            .field("unit_cost", &self.unit_cost)
            .field("uh_per_use", &self.uh_per_use)
            .finish_non_exhaustive()
    }
}

impl Qube {
    fn derive(&self, values: Vec<f64>, nominal: NominalKind) -> Qube {
        Qube {
            values: Arc::new(values),
            encoded: Arc::new(OnceLock::new()),
            nominal: Nominal::new(nominal),
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `a`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `b`.
    pub fn ancillas(&self) -> u32 {
        self.ancillas
    }

    /// `ε`.
    pub fn err(&self) -> f64 {
        self.err
    }

    /// Elementary gates per use of the encoding, `C(U; ε)`.
    pub fn unit_cost(&self) -> f64 {
        self.unit_cost
    }

    /// Queries to the underlying `U_H` per use.
    pub fn uh_per_use(&self) -> f64 {
        self.uh_per_use
    }

    pub fn ledger(&self) -> &LedgerHandle {
        &self.ledger
    }

    /// Same encoding, charging a different ledger.
    pub fn with_ledger(&self, ledger: LedgerHandle) -> Qube {
        Qube { ledger, ..self.clone() }
    }

    /// Eigenvalues of `Ã`, in the column order of [`Qube::eigenvectors`].
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.basis
    }

    /// `tr(Ã)`.
    pub fn encoded_trace(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `Ã` as a dense matrix.
    pub fn encoded(&self) -> &HermitianMatrix {
        self.encoded.get_or_init(|| assemble(&self.basis, self.values.iter().copied()))
    }

    /// The matrix `A` this encoding stands for.
    pub fn nominal(&self) -> &HermitianMatrix {
        self.nominal.matrix()
    }

    /// Largest `ε_ENC` for which the sign transformation at promise `Δ` has
    /// error at most `eps_sgn`: `eps_sgn Δ² / (C_SGN a²)`.
    pub fn sign_enc_threshold(&self, delta: f64, eps_sgn: f64) -> f64 {
        eps_sgn * delta * delta / (C_SGN * self.scale * self.scale)
    }
}

fn ceil_log2(n: usize) -> u32 {
    n.next_power_of_two().trailing_zeros()
}

/// Builds an encoding of `a` in the given mode.
pub fn qenc(a: &HermitianMatrix, mode: EncodingMode, eps_enc: f64, stream: Stream) -> Result<Qube> {
    ensure!(eps_enc >= 0.0 && eps_enc.is_finite(), Parameter, "eps_enc must be non-negative, got {eps_enc}");
    let n = a.dim();
    let (scale, ancillas, err, unit_cost, decomposition) = match mode {
        EncodingMode::Exact => {
            let d = eig_reference(a)?;
            let norm = d.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            ensure!(norm <= 1.0 + 1e-12, Parameter, "exact encoding needs ‖A‖ <= 1, got {norm}");
            (1.0, 1, 0.0, lg(n as f64), d)
        }
        EncodingMode::Frobenius => {
            let perturbed = if eps_enc > 0.0 {
                a.add(&random_hermitian_with_norm(n, eps_enc, stream.fork_named("qenc-noise", 0)))
            } else {
                a.clone()
            };
            let mut d = eig_reference(&perturbed)?;
            let norm = d.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            // Noise can push ‖A + E‖ past ‖A‖_F; grow the scale so ‖Ã‖ <= 1.
            let mut scale = a.frobenius_norm().max(norm);
            if scale == 0.0 {
                scale = 1.0;
            }
            d.eigenvalues.iter_mut().for_each(|v| *v /= scale);
            let gates = if eps_enc > 0.0 { lg(n as f64 / eps_enc).powi(2) } else { lg(n as f64).powi(2) };
            (scale, ceil_log2(n) + 1, eps_enc, gates, d)
        }
    };
    Ok(Qube {
        scale,
        ancillas,
        err,
        unit_cost,
        uh_per_use: 1.0,
        basis: Arc::new(decomposition.eigenvectors),
        values: Arc::new(decomposition.eigenvalues),
        encoded: Arc::new(OnceLock::new()),
        nominal: Nominal::new(NominalKind::Base(a.clone())),
        ledger: LedgerHandle::new(),
    })
}

/// `(a + |h|, b + 1, ε)`-encoding of `A − hI`.
pub fn qshift(u: &Qube, h: f64) -> Result<Qube> {
    ensure!(h.abs() <= 0.5, Parameter, "shift must lie in [-1/2, 1/2], got {h}");
    let a = u.scale;
    let scale = a + h.abs();
    let values = u.values.iter().map(|&v| (a * v - h) / scale).collect();
    let mut out = u.derive(values, NominalKind::Shift(u.nominal.clone(), h));
    out.scale = scale;
    out.ancillas = u.ancillas + 1;
    out.unit_cost = u.unit_cost + 1.0;
    Ok(out)
}

/// `(a², 2b, 2aε)`-encoding of `A†A`.
pub fn gram(u: &Qube) -> Qube {
    let values = u.values.iter().map(|&v| v * v).collect();
    let mut out = u.derive(values, NominalKind::Gram(u.nominal.clone()));
    out.scale = u.scale * u.scale;
    out.ancillas = 2 * u.ancillas;
    out.err = 2.0 * u.scale * u.err;
    out.unit_cost = 2.0 * u.unit_cost;
    out.uh_per_use = 2.0 * u.uh_per_use;
    out
}

/// `(1, b + 2, ε')`-encoding of `p(Ã)`, standing for `sgn(A)`.
///
/// `ε' = sup_err + C_SGN ε / (8 δ'²)`: the polynomial error plus the
/// perturbation of the sign function, linear in `ε` and equal to
/// `ε_SGN/2` exactly at the admissible threshold `ε_SGN Δ² / (C_SGN a²)`.
pub fn apply_qet(u: &Qube, p: &ChebPoly) -> Result<Qube> {
    ensure!(p.degree <= DEGREE_CAP, Capacity, "polynomial degree {} exceeds {DEGREE_CAP}", p.degree);
    let values = p.eval_many(&u.values);
    let mut out = u.derive(values, NominalKind::Sign(u.nominal.clone()));
    let degree = p.degree as f64;
    out.scale = 1.0;
    out.ancillas = u.ancillas + 2;
    out.err = p.sup_err + C_SGN * u.err / (8.0 * p.target_gap * p.target_gap);
    out.unit_cost = degree * (u.unit_cost + u.ancillas as f64);
    out.uh_per_use = degree * u.uh_per_use;
    Ok(out)
}
