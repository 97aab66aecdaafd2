//! Poles, invariant, transmission and decoupling zeros, and the pole-zero
//! correspondence checks for physically realizable systems.

use crate::kalman::{kalman_decompose, sub, unobservable_subspace, reachable_subspace, KalmanForm, DEFAULT_RANK_TOL};
use crate::linalg::{
    eigenvalues, eigenvalues_r, is_imaginary, match_multisets, negate, orth_complement, qz_pairs,
    smallest_right_singular, singular_values, LinalgError,
};
use crate::matcore::{c, flat_adjoint, max_norm, sym_j, to_complex, vquad, CMat, RMat, C64};
use crate::model::{check_physical_realizability, to_quadrature, transfer_at, PrReport, Rep, StateSpace};
use serde::Serialize;
use thiserror::Error;

pub const SPECTRAL_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("Rosenbrock pencil is singular: smallest singular value {sigma_min:.3e} at every probe point")]
    SingularPencil { sigma_min: f64 },
    #[error("system is not physically realizable (residuals {r1:.3e}, {r2:.3e}); the flat-adjoint identity does not apply")]
    NotPhysicallyRealizable { r1: f64, r2: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Kalman(#[from] crate::kalman::KalmanError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// `M = [[A, B], [C, D]]`, `N = diag(I, 0)`, so `P(s) = M - sN`.
#[derive(Debug, Clone, PartialEq)]
pub struct RosenbrockPencil {
    pub m: CMat,
    pub n: CMat,
}

impl RosenbrockPencil {
    pub fn new(a: &CMat, b: &CMat, cc: &CMat, d: &CMat) -> RosenbrockPencil {
        let k = a.nrows();
        let p = d.nrows();
        let mut m = CMat::zeros(k + p, k + p);
        m.view_mut((0, 0), (k, k)).copy_from(a);
        m.view_mut((0, k), (k, p)).copy_from(b);
        m.view_mut((k, 0), (p, k)).copy_from(cc);
        m.view_mut((k, k), (p, p)).copy_from(d);
        let mut n = CMat::zeros(k + p, k + p);
        n.view_mut((0, 0), (k, k)).fill_with_identity();
        RosenbrockPencil { m, n }
    }

    pub fn of(ss: &StateSpace) -> RosenbrockPencil {
        RosenbrockPencil::new(&ss.a, &ss.b, &ss.c, &ss.d)
    }

    pub fn at(&self, s: C64) -> CMat {
        &self.m - &self.n * s
    }

    /// Smallest singular value of `P(s)` at a few fixed probe points.
    pub fn normal_rank_margin(&self) -> f64 {
        [c(0.37, 0.91), c(-1.3, 0.4), c(2.1, -1.7)]
            .iter()
            .map(|&s| singular_values(&self.at(s)).into_iter().fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    pub fn finite_eigenvalues(&self) -> Result<Vec<C64>, SpectraError> {
        if self.m.nrows() == 0 {
            return Ok(Vec::new());
        }
        let scale = max_norm(&self.m).max(1.0);
        let margin = self.normal_rank_margin();
        if margin < 1e-12 * scale {
            return Err(SpectraError::SingularPencil { sigma_min: margin });
        }
        let pairs = qz_pairs(&self.m, &self.n)?;
        Ok(pairs
            .into_iter()
            .filter(|(_, beta)| beta.norm() >= 1e-10 * scale)
            .map(|(alpha, beta)| alpha / beta)
            .collect())
    }
}

pub fn poles(ss: &StateSpace) -> Vec<C64> {
    eigenvalues(&ss.a)
}

fn pencil_zeros(a: &CMat, b: &CMat, cc: &CMat, d: &CMat) -> Result<Vec<C64>, SpectraError> {
    let zs = RosenbrockPencil::new(a, b, cc, d).finite_eigenvalues()?;
    if zs.len() != a.nrows() && d.clone().try_inverse().is_some() {
        log::warn!("pencil returned {} finite zeros, expected {}", zs.len(), a.nrows());
    }
    Ok(zs)
}

/// Finite generalized eigenvalues of the Rosenbrock pencil.
pub fn invariant_zeros_pencil(ss: &StateSpace) -> Result<Vec<C64>, SpectraError> {
    pencil_zeros(&ss.a, &ss.b, &ss.c, &ss.d)
}

/// `eig(-𝒜^♭)` in the complex representation, `eig(𝕁 A⊤ 𝕁)` in quadrature.
pub fn invariant_zeros_flat(ss: &StateSpace) -> Result<Vec<C64>, SpectraError> {
    let pr = check_physical_realizability(ss, 1e-8 * (1.0 + max_norm(&ss.a)));
    if !pr.passed {
        return Err(SpectraError::NotPhysicallyRealizable { r1: pr.residual_constraint1, r2: pr.residual_constraint2 });
    }
    let m = match ss.rep {
        Rep::Complex => -flat_adjoint(&ss.a).expect("even"),
        Rep::Quadrature => {
            let j = sym_j(ss.n);
            &j * ss.a.transpose() * &j
        }
    };
    Ok(eigenvalues(&m))
}

/// Invariant zeros of the controllable and observable part.
pub fn transmission_zeros_from(kf: &KalmanForm) -> Result<Vec<C64>, SpectraError> {
    let co = kf.co();
    if co.is_empty() {
        return Ok(Vec::new());
    }
    let ins = 0..kf.b.ncols();
    let outs = 0..kf.c.nrows();
    pencil_zeros(
        &to_complex(&sub(&kf.a, co.clone(), co.clone())),
        &to_complex(&sub(&kf.b, co.clone(), ins)),
        &to_complex(&sub(&kf.c, outs, co)),
        &to_complex(&kf.original.d_r()),
    )
}

pub fn transmission_zeros(ss: &StateSpace) -> Result<Vec<C64>, SpectraError> {
    transmission_zeros_from(&kalman_decompose(ss, DEFAULT_RANK_TOL)?)
}

/// Poles of the transfer function: eigenvalues of `A_co`.
pub fn minimal_poles(kf: &KalmanForm) -> Vec<C64> {
    kf.co_eigenvalues()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecouplingZero {
    pub value: C64,
    /// `x` with `(A - s₀I)x = 0`, `Cx = 0` for output zeros; `y` with
    /// `y†(A - s₀I) = 0`, `y†B = 0` for input zeros. The companion `u` or `v` is zero.
    pub witness: Vec<C64>,
    /// Smallest singular value of the rank-test matrix at `value`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecouplingZeros {
    pub input: Vec<DecouplingZero>,
    pub output: Vec<DecouplingZero>,
}

fn stack_rows(top: &CMat, bottom: &CMat) -> CMat {
    let mut out = CMat::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

/// Unobservable eigenvalues (rank loss of `[A - sI; C]`) and uncontrollable
/// eigenvalues (rank loss of `[A - sI, B]`), with witness vectors.
pub fn decoupling_zeros(ss: &StateSpace, rank_tol: f64) -> Result<DecouplingZeros, SpectraError> {
    let q = to_quadrature(ss)?;
    let (a, b, cc) = (q.a_r(), q.b_r(), q.c_r());
    let k = a.nrows();
    let (nn, _) = unobservable_subspace(&a, &cc, rank_tol);
    let (r, _) = reachable_subspace(&a, &b, rank_tol);
    let rp = orth_complement(&r);
    let out_vals = if nn.ncols() == 0 { Vec::new() } else { eigenvalues_r(&(nn.transpose() * &a * &nn)) };
    let in_vals = if rp.ncols() == 0 || r.ncols() == k { Vec::new() } else { eigenvalues_r(&(rp.transpose() * &a * &rp)) };
    let ac = to_complex(&a);
    let back = |x: Vec<C64>| -> Vec<C64> {
        match ss.rep {
            Rep::Quadrature => x,
            Rep::Complex => {
                let v = CMat::from_column_slice(x.len(), 1, &x);
                (vquad(ss.n).adjoint() * v).iter().cloned().collect()
            }
        }
    };
    let output = out_vals
        .into_iter()
        .map(|s0| {
            let t = stack_rows(&(&ac - CMat::identity(k, k) * s0), &to_complex(&cc));
            let (res, x) = smallest_right_singular(&t);
            DecouplingZero { value: s0, witness: back(x), residual: res }
        })
        .collect();
    let input = in_vals
        .into_iter()
        .map(|s0| {
            let t = stack_rows(&(&ac - CMat::identity(k, k) * s0).adjoint(), &to_complex(&b).adjoint());
            let (res, y) = smallest_right_singular(&t);
            DecouplingZero { value: s0, witness: back(y), residual: res }
        })
        .collect();
    Ok(DecouplingZeros { input, output })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub poles: Vec<C64>,
    pub invariant_zeros: Vec<C64>,
    pub invariant_zeros_flat: Option<Vec<C64>>,
    pub transmission_zeros: Vec<C64>,
    pub input_decoupling: Vec<DecouplingZero>,
    pub output_decoupling: Vec<DecouplingZero>,
    /// Largest pairing distance between the two invariant-zero routes.
    pub method_disagreement: Option<f64>,
}

pub fn spectrum_report(ss: &StateSpace, rank_tol: f64) -> Result<SpectrumReport, SpectraError> {
    let kf = kalman_decompose(ss, rank_tol)?;
    let inv = invariant_zeros_pencil(ss)?;
    let flat = invariant_zeros_flat(ss).ok();
    let dz = decoupling_zeros(ss, rank_tol)?;
    Ok(SpectrumReport {
        poles: poles(ss),
        method_disagreement: flat.as_ref().map(|f| match_multisets(&inv, f)),
        invariant_zeros: inv,
        invariant_zeros_flat: flat,
        transmission_zeros: transmission_zeros_from(&kf)?,
        input_decoupling: dz.input,
        output_decoupling: dz.output,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correspondence {
    pub holds: bool,
    pub residual: f64,
}

impl Correspondence {
    fn of(residual: f64, tol: f64) -> Correspondence {
        Correspondence { holds: residual < tol, residual }
    }
}

/// Eigenvalue of `A_cbarobar` with `x†J x` for an eigenvector `x` of its
/// transpose, `J` the commutator form of the cbar-obar coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormSignEntry {
    pub eigenvalue: C64,
    pub form_value: C64,
    pub imaginary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrespondenceReport {
    /// False for systems that fail the realizability test; the checks are still computed.
    pub correspondence_expected: bool,
    pub pr: PrReport,
    /// Output-decoupling zeros equal the negated input-decoupling zeros.
    pub decoupling: Correspondence,
    /// Transmission zeros equal the negated transfer-function poles.
    pub transmission: Correspondence,
    /// Invariant zeros equal the negated eigenvalues of `A`.
    pub invariant: Correspondence,
    /// Informational: nonzero form value is sufficient for an imaginary eigenvalue.
    pub form_sign: Vec<FormSignEntry>,
    pub tol: f64,
}

fn form_sign_entries(kf: &KalmanForm) -> Vec<FormSignEntry> {
    let cb = kf.cbar_obar();
    if cb.is_empty() {
        return Vec::new();
    }
    let j = crate::matcore::sym_j_r(kf.original.n);
    let jz = &kf.transform_inv * j * kf.transform_inv.transpose();
    let jb = to_complex(&sub(&jz, cb.clone(), cb.clone()));
    let acb = to_complex(&sub(&kf.a, cb.clone(), cb).transpose());
    let dim = acb.nrows();
    eigenvalues(&acb)
        .into_iter()
        .map(|lam| {
            let (_, x) = smallest_right_singular(&(&acb - CMat::identity(dim, dim) * lam));
            let xv = CMat::from_column_slice(dim, 1, &x);
            let form = (xv.adjoint() * &jb * &xv)[(0, 0)];
            FormSignEntry { eigenvalue: lam, form_value: form * c(0.0, -1.0), imaginary: is_imaginary(lam) }
        })
        .collect()
}

pub fn verify_correspondences(ss: &StateSpace, tol: f64) -> Result<CorrespondenceReport, SpectraError> {
    let pr = check_physical_realizability(ss, 1e-8 * (1.0 + max_norm(&ss.a)));
    let kf = kalman_decompose(ss, DEFAULT_RANK_TOL)?;
    let dz = decoupling_zeros(ss, DEFAULT_RANK_TOL)?;
    let out: Vec<C64> = dz.output.iter().map(|z| z.value).collect();
    let inp: Vec<C64> = dz.input.iter().map(|z| z.value).collect();
    let tz = transmission_zeros_from(&kf)?;
    let iz = invariant_zeros_pencil(ss)?;
    Ok(CorrespondenceReport {
        correspondence_expected: pr.passed,
        pr,
        decoupling: Correspondence::of(match_multisets(&out, &negate(&inp)), tol),
        transmission: Correspondence::of(match_multisets(&tz, &negate(&minimal_poles(&kf))), tol),
        invariant: Correspondence::of(match_multisets(&iz, &negate(&poles(ss))), tol),
        form_sign: form_sign_entries(&kf),
        tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImaginaryPairing {
    pub holds: bool,
    /// `(pole, nearest transmission zero to its negation, distance)`.
    pub pairs: Vec<(C64, Option<C64>, f64)>,
}

/// Every purely imaginary transfer-function pole has a transmission zero at its negation.
pub fn check_imaginary_axis_pairing(ss: &StateSpace, tol: f64) -> Result<ImaginaryPairing, SpectraError> {
    let kf = kalman_decompose(ss, DEFAULT_RANK_TOL)?;
    let tz = transmission_zeros_from(&kf)?;
    let mut pairs = Vec::new();
    for p in minimal_poles(&kf).into_iter().filter(|p| is_imaginary(*p)) {
        let best = tz
            .iter()
            .map(|z| (*z, (z + p).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal));
        match best {
            Some((z, d)) => pairs.push((p, Some(z), d)),
            None => pairs.push((p, None, f64::INFINITY)),
        }
    }
    let holds = pairs.iter().all(|(_, z, d)| *d < tol && z.map(is_imaginary).unwrap_or(false));
    Ok(ImaginaryPairing { holds, pairs })
}

/// Smallest singular value of `𝔾(s₀)` for each transmission zero that is not a pole.
pub fn transfer_rank_drop(ss: &StateSpace, zeros: &[C64]) -> Vec<(C64, f64)> {
    zeros
        .iter()
        .filter_map(|&z| {
            let g = transfer_at(ss, z).ok()?;
            Some((z, singular_values(&g).into_iter().fold(f64::INFINITY, f64::min)))
        })
        .collect()
}

pub fn real_pencil(a: &RMat, b: &RMat, cc: &RMat, d: &RMat) -> RosenbrockPencil {
    RosenbrockPencil::new(&to_complex(a), &to_complex(b), &to_complex(cc), &to_complex(d))
}
