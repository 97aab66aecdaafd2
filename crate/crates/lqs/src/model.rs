//! State-space realizations built from physical parameters, conversion
//! between the annihilation-creation and quadrature representations,
//! transfer-function evaluation and the structural identity checks.

use crate::linalg::condition_1;
use crate::matcore::{
    self, block_diag, c, doubled_up, doubled_up_residual, flat_adjoint, max_imag, max_norm,
    sharp_adjoint, sym_j, to_complex, to_complex_rect, to_quadrature_rect, CMat, MatError, RMat,
    C64,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for structural invariants of inputs (Hermitian Ω, realness, doubled-up form).
pub const STRUCT_TOL: f64 = 1e-12;

/// Condition number above which `sI - A` is treated as singular.
pub const POLE_COND: f64 = 1e13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("Ω = Δ(Ω₋, Ω₊) is not Hermitian (residual {0:.3e})")]
    NonHermitian(f64),
    #[error("matrix {name} has shape {got:?}, expected {want:?}")]
    Shape { name: String, got: (usize, usize), want: (usize, usize) },
    #[error("matrix {name} is not doubled-up (residual {residual:.3e})")]
    NotDoubledUp { name: String, residual: f64 },
    #[error("matrix {name} is not real (imaginary part {residual:.3e})")]
    NotReal { name: String, residual: f64 },
    #[error("expected a {0:?} representation")]
    WrongRep(Rep),
    #[error("at least one channel is required")]
    NoChannels,
    #[error(transparent)]
    Mat(#[from] MatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Complex,
    Quadrature,
}

/// Physical parameters `(Ω₋, Ω₊, C₋, C₊)` with scattering matrix `S = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlhParams {
    pub n: usize,
    pub m: usize,
    pub omega_minus: CMat,
    pub omega_plus: CMat,
    pub c_minus: CMat,
    pub c_plus: CMat,
}

impl SlhParams {
    pub fn new(
        omega_minus: CMat,
        omega_plus: CMat,
        c_minus: CMat,
        c_plus: CMat,
    ) -> Result<SlhParams, ModelError> {
        let n = omega_minus.nrows();
        let m = c_minus.nrows();
        let p = SlhParams { n, m, omega_minus, omega_plus, c_minus, c_plus };
        p.check_shapes()?;
        Ok(p)
    }

    pub fn check_shapes(&self) -> Result<(), ModelError> {
        if self.m == 0 {
            return Err(ModelError::NoChannels);
        }
        expect_shape("omega_minus", &self.omega_minus, (self.n, self.n))?;
        expect_shape("omega_plus", &self.omega_plus, (self.n, self.n))?;
        expect_shape("c_minus", &self.c_minus, (self.m, self.n))?;
        expect_shape("c_plus", &self.c_plus, (self.m, self.n))?;
        Ok(())
    }

    /// `Ω = Δ(Ω₋, Ω₊)`.
    pub fn omega(&self) -> CMat {
        doubled_up(&self.omega_minus, &self.omega_plus).expect("shapes checked")
    }

    /// Max-norm of `Ω - Ω†`.
    pub fn hermitian_residual(&self) -> f64 {
        let o = self.omega();
        max_norm(&(&o - o.adjoint()))
    }
}

fn expect_shape(name: &str, m: &CMat, want: (usize, usize)) -> Result<(), ModelError> {
    if m.shape() != want {
        return Err(ModelError::Shape { name: name.to_string(), got: m.shape(), want });
    }
    Ok(())
}

/// `(A, B, C, D)` with a representation tag; `A` is `2n x 2n`, `D` is `2m x 2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub rep: Rep,
    pub n: usize,
    pub m: usize,
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub d: CMat,
}

impl StateSpace {
    /// Validates shapes and the structural invariant of the representation.
    pub fn new(rep: Rep, a: CMat, b: CMat, c: CMat, d: CMat) -> Result<StateSpace, ModelError> {
        if a.nrows() % 2 == 1 {
            return Err(MatError::OddDimension(a.nrows()).into());
        }
        if d.nrows() % 2 == 1 || d.nrows() == 0 {
            return Err(if d.nrows() == 0 {
                ModelError::NoChannels
            } else {
                MatError::OddDimension(d.nrows()).into()
            });
        }
        let n = a.nrows() / 2;
        let m = d.nrows() / 2;
        expect_shape("A", &a, (2 * n, 2 * n))?;
        expect_shape("B", &b, (2 * n, 2 * m))?;
        expect_shape("C", &c, (2 * m, 2 * n))?;
        expect_shape("D", &d, (2 * m, 2 * m))?;
        let ss = StateSpace { rep, n, m, a, b, c, d };
        match rep {
            Rep::Quadrature => {
                for (name, mat) in ss.named() {
                    let r = max_imag(mat);
                    if r > STRUCT_TOL {
                        return Err(ModelError::NotReal { name: name.into(), residual: r });
                    }
                }
            }
            Rep::Complex => {
                for (name, mat) in ss.named() {
                    if mat.nrows() == 0 || mat.ncols() == 0 {
                        continue;
                    }
                    let r = doubled_up_residual(mat)?;
                    if r > STRUCT_TOL {
                        return Err(ModelError::NotDoubledUp { name: name.into(), residual: r });
                    }
                }
            }
        }
        Ok(ss)
    }

    pub fn quadrature(a: RMat, b: RMat, c: RMat, d: RMat) -> Result<StateSpace, ModelError> {
        StateSpace::new(Rep::Quadrature, to_complex(&a), to_complex(&b), to_complex(&c), to_complex(&d))
    }

    pub fn named(&self) -> [(&'static str, &CMat); 4] {
        [("A", &self.a), ("B", &self.b), ("C", &self.c), ("D", &self.d)]
    }

    pub fn a_r(&self) -> RMat {
        matcore::real_part(&self.a)
    }
    pub fn b_r(&self) -> RMat {
        matcore::real_part(&self.b)
    }
    pub fn c_r(&self) -> RMat {
        matcore::real_part(&self.c)
    }
    pub fn d_r(&self) -> RMat {
        matcore::real_part(&self.d)
    }

    /// Change of state coordinates `x' = P x` given `P` and `P^{-1}`.
    pub fn transformed(&self, p: &CMat, p_inv: &CMat) -> StateSpace {
        StateSpace {
            rep: self.rep,
            n: self.n,
            m: self.m,
            a: p * &self.a * p_inv,
            b: p * &self.b,
            c: &self.c * p_inv,
            d: self.d.clone(),
        }
    }
}

/// Complex-domain realization: `𝒞 = Δ(C₋, C₊)`, `𝒟 = I`, `ℬ = -𝒞^♭`,
/// `𝒜 = -i J_n Ω - ½ 𝒞^♭ 𝒞`.
pub fn build_complex_ss(p: &SlhParams) -> Result<StateSpace, ModelError> {
    p.check_shapes()?;
    let herm = p.hermitian_residual();
    if herm > STRUCT_TOL {
        return Err(ModelError::NonHermitian(herm));
    }
    let cc = doubled_up(&p.c_minus, &p.c_plus)?;
    let cflat = flat_adjoint(&cc)?;
    let d = CMat::identity(2 * p.m, 2 * p.m);
    let b = -(&cflat * &d);
    let a = matcore::j_k(p.n) * p.omega() * c(0.0, -1.0) - (&cflat * &cc) * c(0.5, 0.0);
    Ok(StateSpace { rep: Rep::Complex, n: p.n, m: p.m, a, b, c: cc, d })
}

/// `Ā = V 𝒜 V†`, `B̄ = V_n ℬ V_m†`, `C̄ = V_m 𝒞 V_n†`, `D̄ = V_m 𝒟 V_m†`, with imaginary residue dropped.
pub fn to_quadrature(ss: &StateSpace) -> Result<StateSpace, ModelError> {
    match ss.rep {
        Rep::Quadrature => Ok(ss.clone()),
        Rep::Complex => {
            let conv = |x: &CMat| -> Result<CMat, ModelError> {
                if x.nrows() == 0 || x.ncols() == 0 {
                    return Ok(x.clone());
                }
                Ok(to_complex(&matcore::real_part(&to_quadrature_rect(x)?)))
            };
            Ok(StateSpace {
                rep: Rep::Quadrature,
                n: ss.n,
                m: ss.m,
                a: conv(&ss.a)?,
                b: conv(&ss.b)?,
                c: conv(&ss.c)?,
                d: conv(&ss.d)?,
            })
        }
    }
}

/// Inverse of [`to_quadrature`].
pub fn to_complex_rep(ss: &StateSpace) -> Result<StateSpace, ModelError> {
    match ss.rep {
        Rep::Complex => Ok(ss.clone()),
        Rep::Quadrature => {
            let conv = |x: &CMat| -> Result<CMat, ModelError> {
                if x.nrows() == 0 || x.ncols() == 0 {
                    return Ok(x.clone());
                }
                Ok(to_complex_rect(x)?)
            };
            Ok(StateSpace {
                rep: Rep::Complex,
                n: ss.n,
                m: ss.m,
                a: conv(&ss.a)?,
                b: conv(&ss.b)?,
                c: conv(&ss.c)?,
                d: conv(&ss.d)?,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrReport {
    pub passed: bool,
    pub residual_constraint1: f64,
    pub residual_constraint2: f64,
    pub tol: f64,
}

/// Quadrature: `A𝕁 + 𝕁A⊤ + B𝕁B⊤ = 0`, `B = 𝕁C⊤𝕁`.
/// Complex: `𝒜 + 𝒜^♭ + ℬℬ^♭ = 0`, `ℬ = -𝒞^♭𝒟`.
pub fn check_physical_realizability(ss: &StateSpace, tol: f64) -> PrReport {
    let (r1, r2) = match ss.rep {
        Rep::Quadrature => {
            let jn = sym_j(ss.n);
            let jm = sym_j(ss.m);
            let r1 = max_norm(&(&ss.a * &jn + &jn * ss.a.transpose() + &ss.b * &jm * ss.b.transpose()));
            let r2 = max_norm(&(&ss.b - &jn * ss.c.transpose() * &jm));
            (r1, r2)
        }
        Rep::Complex => {
            let af = flat_adjoint(&ss.a).expect("even");
            let bf = flat_adjoint(&ss.b).expect("even");
            let cf = flat_adjoint(&ss.c).expect("even");
            let r1 = max_norm(&(&ss.a + af + &ss.b * bf));
            let r2 = max_norm(&(&ss.b + cf * &ss.d));
            (r1, r2)
        }
    };
    PrReport { passed: r1 < tol && r2 < tol, residual_constraint1: r1, residual_constraint2: r2, tol }
}

/// `s` at or near a pole.
#[derive(Debug, Clone, Copy, PartialEq, Error, Serialize)]
#[error("transfer function diverges at s = {re}{im:+}i (condition {condition:.3e})")]
pub struct Divergence {
    pub re: f64,
    pub im: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferValue {
    pub g: CMat,
    pub condition: f64,
}

/// `D + C (sI - A)^{-1} B` through an LU solve.
pub fn transfer_eval(ss: &StateSpace, s: C64) -> Result<TransferValue, Divergence> {
    let k = ss.a.nrows();
    if k == 0 {
        return Ok(TransferValue { g: ss.d.clone(), condition: 1.0 });
    }
    let resolvent = CMat::identity(k, k) * s - &ss.a;
    let cond = condition_1(&resolvent);
    let div = Divergence { re: s.re, im: s.im, condition: cond };
    if !cond.is_finite() || cond > POLE_COND {
        return Err(div);
    }
    let x = resolvent.lu().solve(&ss.b).ok_or(div)?;
    let g = &ss.d + &ss.c * x;
    if !matcore::all_finite(&g) {
        return Err(div);
    }
    Ok(TransferValue { g, condition: cond })
}

pub fn transfer_at(ss: &StateSpace, s: C64) -> Result<CMat, Divergence> {
    transfer_eval(ss, s).map(|t| t.g)
}

/// Transfer function in the quadrature convention whatever the representation.
pub fn quadrature_transfer_at(ss: &StateSpace, s: C64) -> Result<CMat, Divergence> {
    let g = transfer_at(ss, s)?;
    Ok(match ss.rep {
        Rep::Quadrature => g,
        Rep::Complex => to_quadrature_rect(&g).expect("even"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub max_residual: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Max over samples of `‖𝔾(-s*)^♯ 𝔾(s) - I‖` and `‖𝔾(s) 𝔾(-s*)^♯ - I‖` for any
/// evaluator of a `2m x 2m` transfer matrix. Samples at poles are skipped.
pub fn symplectic_residual<F>(g: F, samples: &[C64]) -> IdentityCheck
where
    F: Fn(C64) -> Option<CMat>,
{
    let mut worst = 0.0f64;
    let mut evaluated = 0;
    let mut skipped = 0;
    for &s in samples {
        let (Some(gs), Some(gm)) = (g(s), g(-s.conj())) else {
            skipped += 1;
            continue;
        };
        let Ok(gsh) = sharp_adjoint(&gm) else {
            skipped += 1;
            continue;
        };
        let id = CMat::identity(gs.nrows(), gs.nrows());
        let r = max_norm(&(&gsh * &gs - &id)).max(max_norm(&(&gs * &gsh - &id)));
        worst = worst.max(r);
        evaluated += 1;
    }
    if skipped > 0 {
        log::warn!("symplectic identity: {skipped} sample(s) at poles skipped");
    }
    IdentityCheck { max_residual: worst, evaluated, skipped }
}

pub fn check_symplectic_identity(ss: &StateSpace, samples: &[C64]) -> IdentityCheck {
    symplectic_residual(|s| quadrature_transfer_at(ss, s).ok(), samples)
}

/// Per-channel residuals of the doubly-stochastic identities on the
/// channel-interleaved transfer matrix `T⊤ 𝔾 T`, whose 2x2 blocks act on
/// `(q_j, p_j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublyStochastic {
    pub row_residuals: Vec<f64>,
    pub column_residuals: Vec<f64>,
    pub max_residual: f64,
}

pub fn doubly_stochastic_from(gs: &CMat, gm: &CMat) -> DoublyStochastic {
    let m = gs.nrows() / 2;
    let t = to_complex(&matcore::interleave(m).expect("m >= 1"));
    let gts = t.transpose() * gs * &t;
    let gtm = t.transpose() * gm * &t;
    let blk = |g: &CMat, k: usize, j: usize| g.view((2 * k, 2 * j), (2, 2)).into_owned();
    let sharp2 = |x: &CMat| sharp_adjoint(x).expect("2x2");
    let id = CMat::identity(2, 2);
    let mut rows = Vec::with_capacity(m);
    let mut cols = Vec::with_capacity(m);
    for k in 0..m {
        let mut acc = CMat::zeros(2, 2);
        for j in 0..m {
            acc += blk(&gts, k, j) * sharp2(&blk(&gtm, k, j));
        }
        rows.push(max_norm(&(acc - &id)));
    }
    for j in 0..m {
        let mut acc = CMat::zeros(2, 2);
        for k in 0..m {
            acc += sharp2(&blk(&gtm, k, j)) * blk(&gts, k, j);
        }
        cols.push(max_norm(&(acc - &id)));
    }
    let max_residual = rows.iter().chain(cols.iter()).cloned().fold(0.0, f64::max);
    DoublyStochastic { row_residuals: rows, column_residuals: cols, max_residual }
}

pub fn check_doubly_stochastic(ss: &StateSpace, s: C64) -> Result<DoublyStochastic, Divergence> {
    let gs = quadrature_transfer_at(ss, s)?;
    let gm = quadrature_transfer_at(ss, -s.conj())?;
    Ok(doubly_stochastic_from(&gs, &gm))
}

/// Direct sum of two systems in the same representation, keeping the
/// `(first-half, second-half)` layout of states and channels.
pub fn direct_sum(x: &StateSpace, y: &StateSpace) -> Result<StateSpace, ModelError> {
    if x.rep != y.rep {
        return Err(ModelError::WrongRep(x.rep));
    }
    let quad = |p: &CMat, q: &CMat| -> CMat {
        let (pr, pc) = (p.nrows() / 2, p.ncols() / 2);
        let (qr, qc) = (q.nrows() / 2, q.ncols() / 2);
        let mut out = CMat::zeros(p.nrows() + q.nrows(), p.ncols() + q.ncols());
        for bi in 0..2 {
            for bj in 0..2 {
                let blk = block_diag(&[
                    &p.view((bi * pr, bj * pc), (pr, pc)).into_owned(),
                    &q.view((bi * qr, bj * qc), (qr, qc)).into_owned(),
                ]);
                out.view_mut((bi * (pr + qr), bj * (pc + qc)), (pr + qr, pc + qc)).copy_from(&blk);
            }
        }
        out
    };
    StateSpace::new(x.rep, quad(&x.a, &y.a), quad(&x.b, &y.b), quad(&x.c, &y.c), quad(&x.d, &y.d))
}

/// A system with no modes and `m` identity channels.
pub fn static_identity(rep: Rep, m: usize) -> StateSpace {
    StateSpace {
        rep,
        n: 0,
        m,
        a: CMat::zeros(0, 0),
        b: CMat::zeros(0, 2 * m),
        c: CMat::zeros(2 * m, 0),
        d: CMat::identity(2 * m, 2 * m),
    }
}

/// Convenience for scalar-entry construction of real matrices.
pub fn rmat(rows: usize, cols: usize, v: &[f64]) -> RMat {
    RMat::from_row_slice(rows, cols, v)
}

pub fn cscalar(z: C64) -> CMat {
    CMat::from_element(1, 1, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{random_slh, sample_points};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dpa_slh(kappa: f64, eps: f64) -> SlhParams {
        SlhParams::new(
            cscalar(c(0.0, 0.0)),
            cscalar(c(0.0, eps / 2.0)),
            cscalar(c(kappa.sqrt(), 0.0)),
            cscalar(c(0.0, 0.0)),
        )
        .unwrap()
    }

    #[test]
    fn dpa_complex_model() {
        let (k, e) = (2.0, 1.0);
        let ss = build_complex_ss(&dpa_slh(k, e)).unwrap();
        let a = CMat::from_row_slice(2, 2, &[c(-k / 2.0, 0.0), c(e / 2.0, 0.0), c(e / 2.0, 0.0), c(-k / 2.0, 0.0)]);
        assert!(max_norm(&(ss.a - a)) < 1e-15);
        assert!(max_norm(&(ss.b + CMat::identity(2, 2) * c(k.sqrt(), 0.0))) < 1e-15);
        assert!(max_norm(&(ss.c - CMat::identity(2, 2) * c(k.sqrt(), 0.0))) < 1e-15);
        assert_eq!(ss.d, CMat::identity(2, 2));
    }

    #[test]
    fn zero_and_passive_models() {
        let z = cscalar(c(0.0, 0.0));
        let ss = build_complex_ss(&SlhParams::new(z.clone(), z.clone(), z.clone(), z.clone()).unwrap()).unwrap();
        assert_eq!(max_norm(&ss.a), 0.0);
        assert_eq!(max_norm(&ss.b), 0.0);
        assert_eq!(max_norm(&ss.c), 0.0);
        let q = to_quadrature(&ss).unwrap();
        assert_eq!(max_norm(&q.a), 0.0);
        assert!(max_norm(&(&q.d - CMat::identity(2, 2))) < 1e-15);

        let (w0, k) = (1.3f64, 0.8f64);
        let p = SlhParams::new(cscalar(c(w0, 0.0)), z.clone(), cscalar(c(k.sqrt(), 0.0)), z).unwrap();
        let ss = build_complex_ss(&p).unwrap();
        // oracle: -i diag(1,-1) diag(w0, w0) - k/2 I
        let expect = CMat::from_row_slice(2, 2, &[c(-k / 2.0, -w0), c(0.0, 0.0), c(0.0, 0.0), c(-k / 2.0, w0)]);
        assert!(max_norm(&(ss.a - expect)) < 1e-15);
    }

    #[test]
    fn non_hermitian_omega_rejected() {
        let z = cscalar(c(0.0, 0.0));
        let p = SlhParams::new(cscalar(c(0.0, 1.0)), z.clone(), cscalar(c(1.0, 0.0)), z).unwrap();
        assert!(matches!(build_complex_ss(&p), Err(ModelError::NonHermitian(r)) if (r - 2.0).abs() < 1e-15));
    }

    #[test]
    fn dpa_quadrature_model() {
        let (k, e) = (2.0, 1.0);
        let q = to_quadrature(&build_complex_ss(&dpa_slh(k, e)).unwrap()).unwrap();
        let a = rmat(2, 2, &[-(k - e) / 2.0, 0.0, 0.0, -(k + e) / 2.0]);
        assert!(matcore::max_norm_r(&(q.a_r() - a)) < 1e-15);
        assert!(matcore::max_norm_r(&(q.b_r() + RMat::identity(2, 2) * k.sqrt())) < 1e-15);
        assert!(matcore::max_norm_r(&(q.c_r() - RMat::identity(2, 2) * k.sqrt())) < 1e-15);
    }

    #[test]
    fn quadrature_transfer_is_v_conjugate() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_slh(&mut rng, 2, 2);
        let ss = build_complex_ss(&p).unwrap();
        let q = to_quadrature(&ss).unwrap();
        for s in sample_points(&mut rng, 5) {
            let s = c(0.0, s.im);
            let g = transfer_at(&ss, s).unwrap();
            let gq = transfer_at(&q, s).unwrap();
            let expect = to_quadrature_rect(&g).unwrap();
            assert!(max_norm(&(gq - expect)) < 1e-10);
        }
        let back = to_complex_rep(&q).unwrap();
        assert!(max_norm(&(back.a - ss.a)) < 1e-12);
    }

    #[test]
    fn pr_examples() {
        let a = rmat(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let bc = rmat(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let ex41 = StateSpace::quadrature(a, bc.clone(), bc, RMat::identity(2, 2)).unwrap();
        assert!(check_physical_realizability(&ex41, 1e-12).passed);

        let i2 = RMat::identity(2, 2);
        let classical = StateSpace::quadrature(i2.clone(), i2.clone(), i2.clone(), i2).unwrap();
        let r = check_physical_realizability(&classical, 1e-9);
        assert!(!r.passed);
        // oracle: I𝕁 + 𝕁I + I𝕁I = 3𝕁
        assert_eq!(r.residual_constraint1, 3.0);
    }

    #[test]
    fn transfer_examples() {
        let q = to_quadrature(&build_complex_ss(&dpa_slh(2.0, 0.0)).unwrap()).unwrap();
        let s = c(0.4, 1.7);
        let g = transfer_at(&q, s).unwrap();
        let f = (s - 1.0) / (s + 1.0);
        assert!(max_norm(&(g - CMat::identity(2, 2) * f)) < 1e-14);

        let (k, e) = (2.0, 1.0);
        let q = to_quadrature(&build_complex_ss(&dpa_slh(k, e)).unwrap()).unwrap();
        let g = transfer_at(&q, s).unwrap();
        let gq = (s - e / 2.0 - k / 2.0) / (s - e / 2.0 + k / 2.0);
        let gp = (s + e / 2.0 - k / 2.0) / (s + e / 2.0 + k / 2.0);
        assert!((g[(0, 0)] - gq).norm() < 1e-14 && (g[(1, 1)] - gp).norm() < 1e-14);
        assert!(g[(0, 1)].norm() < 1e-15 && g[(1, 0)].norm() < 1e-15);

        let pole = c((e - k) / 2.0, 0.0);
        assert!(transfer_at(&q, pole).is_err());

        let st = static_identity(Rep::Quadrature, 2);
        assert_eq!(transfer_at(&st, c(3.0, 1.0)).unwrap(), CMat::identity(4, 4));
    }

    #[test]
    fn example_rational_matrix_breaks_symplectic_identity() {
        let g = |s: C64| -> Option<CMat> {
            let one = c(1.0, 0.0);
            Some(CMat::from_row_slice(2, 2, &[(s - one) / (s + one), one, c(0.0, 0.0), (s + one) / (s - one)]))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let chk = symplectic_residual(g, &sample_points(&mut rng, 20));
        assert!(chk.max_residual > 0.1);

        let i2 = RMat::identity(2, 2);
        let classical = StateSpace::quadrature(i2.clone(), i2.clone(), i2.clone(), i2).unwrap();
        assert!(check_symplectic_identity(&classical, &sample_points(&mut rng, 20)).max_residual > 0.1);
    }

    #[test]
    fn interleaved_identities_need_transposed_permutation() {
        // for m = 3 the permutation is not symmetric; T⊤𝔾T is the arrangement
        // whose 2x2 blocks satisfy the identities
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_slh(&mut rng, 2, 3);
        let q = to_quadrature(&build_complex_ss(&p).unwrap()).unwrap();
        let s = c(0.3, 0.7);
        let ds = check_doubly_stochastic(&q, s).unwrap();
        assert!(ds.max_residual < 1e-9);
        let gs = transfer_at(&q, s).unwrap();
        let gm = transfer_at(&q, -s.conj()).unwrap();
        let t = to_complex(&matcore::interleave(3).unwrap());
        let swapped = doubly_stochastic_from(&(t.transpose() * &gs * t.transpose()), &(t.transpose() * &gm * t.transpose()));
        assert!(swapped.max_residual > 1e-3);
    }

    #[test]
    fn static_system_doubly_stochastic_exact() {
        let st = static_identity(Rep::Quadrature, 3);
        let ds = check_doubly_stochastic(&st, c(0.1, 0.2)).unwrap();
        assert_eq!(ds.max_residual, 0.0);
    }

    #[test]
    fn shape_errors_name_matrix() {
        let e = StateSpace::quadrature(
            RMat::zeros(3, 2),
            RMat::zeros(2, 2),
            RMat::zeros(2, 2),
            RMat::identity(2, 2),
        );
        assert!(e.is_err());
        let e = StateSpace::quadrature(
            RMat::zeros(2, 2),
            RMat::zeros(2, 4),
            RMat::zeros(2, 2),
            RMat::identity(2, 2),
        );
        assert!(matches!(e, Err(ModelError::Shape { ref name, .. }) if name == "B"));
    }

    #[test]
    fn direct_sum_keeps_layout() {
        let (k, e) = (2.0, 1.0);
        let dpa = to_quadrature(&build_complex_ss(&dpa_slh(k, e)).unwrap()).unwrap();
        let sum = direct_sum(&dpa, &dpa).unwrap();
        assert_eq!((sum.n, sum.m), (2, 2));
        assert!(check_physical_realizability(&sum, 1e-12).passed);
    }
}
