//! Kalman canonical decomposition in quadrature coordinates with the state
//! ordered as `(q_h, p_h, x_co, x_cbarobar)`.
//!
//! `q_h` spans the controllable-unobservable stage, `p_h` the
//! uncontrollable-observable stage. The transform is block-orthonormal but not
//! orthogonal overall; the co block is re-based so that it is physically
//! realizable with the standard symplectic form.

use crate::linalg::{complement_within, condition_1, eigenvalues_r, intersect, orth_complement, range_basis};
use crate::matcore::{jbar_r, max_norm_r, sym_j_r, to_complex, RMat, C64};
use crate::model::{check_physical_realizability, to_quadrature, ModelError, StateSpace};
use serde::Serialize;
use std::ops::Range;
use thiserror::Error;

pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KalmanError {
    #[error("the controllable and observable subsystem is empty")]
    EmptySubsystem,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Real dimensions of the four Kalman stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StageDims {
    pub co: usize,
    pub c_obar: usize,
    pub cbar_o: usize,
    pub cbar_obar: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanForm {
    pub original: StateSpace,
    pub transform: RMat,
    pub transform_inv: RMat,
    pub transform_condition: f64,
    pub stages: StageDims,
    /// co mode pairs.
    pub n1: usize,
    /// cbar-obar mode pairs.
    pub n2: usize,
    /// h mode pairs.
    pub n3: usize,
    pub a: RMat,
    pub b: RMat,
    pub c: RMat,
    pub ambiguous: bool,
    pub pattern_residual: f64,
    /// Residual of the block-symplectic realizability conditions in the computed basis.
    pub jbar_pr_residual: f64,
    pub pattern_only: bool,
    /// Whether the co block was brought to a realizable basis.
    pub co_symplectic: bool,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilitySplit {
    pub a_o: RMat,
    pub a_obar: RMat,
    pub b_o: RMat,
    pub c_o: RMat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub holds: bool,
    pub offending_eigenvalues: Vec<C64>,
    pub tol: f64,
}

fn hcat(parts: &[&RMat]) -> RMat {
    let rows = parts.iter().map(|p| p.nrows()).max().unwrap_or(0);
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = RMat::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.view_mut((0, at), (p.nrows(), p.ncols())).copy_from(*p);
        at += p.ncols();
    }
    out
}

pub(crate) fn sub(m: &RMat, r: Range<usize>, c: Range<usize>) -> RMat {
    m.view((r.start, c.start), (r.len(), c.len())).into_owned()
}

fn select(m: &RMat, rows: &[usize], cols: &[usize]) -> RMat {
    RMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Orthonormal basis of the smallest `A`-invariant subspace containing `range(B)`,
/// grown one orthogonal staircase step at a time.
pub fn reachable_subspace(a: &RMat, b: &RMat, rel_tol: f64) -> (RMat, bool) {
    let scale = a.abs().max().max(1.0);
    let a = a / scale;
    let (mut q, mut amb) = range_basis(b, rel_tol);
    loop {
        if q.ncols() == 0 || q.ncols() == a.nrows() {
            return (q, amb);
        }
        let aq = &a * &q;
        let (next, amb2) = range_basis(&hcat(&[&q, &aq]), rel_tol);
        amb |= amb2;
        if next.ncols() == q.ncols() {
            return (q, amb);
        }
        q = next;
    }
}

/// Orthonormal basis of the unobservable subspace.
pub fn unobservable_subspace(a: &RMat, c: &RMat, rel_tol: f64) -> (RMat, bool) {
    let (obs, amb) = reachable_subspace(&a.transpose(), &c.transpose(), rel_tol);
    (orth_complement(&obs), amb)
}

/// Skew `Y` with `A Y + Y A⊤ = -B𝕁B⊤` and `Y C⊤ = -B𝕁`, from
/// `Y (A⊤)^j C⊤ = W_j`, `W_0 = -B𝕁`, `W_{j+1} = -A W_j - B𝕁B⊤ (A⊤)^j C⊤`
/// stacked against the observability matrix. `A` is scaled to unit size.
fn realizability_gram(a: &RMat, b: &RMat, c: &RMat) -> RMat {
    let k = a.nrows();
    let p = c.nrows();
    let scale = a.abs().max().max(1.0);
    let ah = a / scale;
    let jm = sym_j_r(b.ncols() / 2);
    let bjb = b * &jm * b.transpose() / scale;
    let mut obs = RMat::zeros(p * k, k);
    let mut rhs = RMat::zeros(p * k, k);
    let mut w = -(b * &jm);
    let mut atc = c.transpose();
    for j in 0..k {
        obs.view_mut((j * p, 0), (p, k)).copy_from(&atc.transpose());
        rhs.view_mut((j * p, 0), (p, k)).copy_from(&w.transpose());
        w = -(&ah * &w) - &bjb * &atc;
        atc = ah.transpose() * atc;
    }
    let yt = crate::linalg::lstsq(&to_complex(&obs), &to_complex(&rhs), 1e-13);
    let y = RMat::from_fn(k, k, |i, j| yt[(j, i)].re);
    (&y - y.transpose()) * 0.5
}

/// `P` with `P Y P⊤ = 𝕁` by symplectic Gram-Schmidt on `ω(x, y) = x⊤ Y y`.
fn symplectic_factor(y: &RMat) -> Option<RMat> {
    let k = y.nrows();
    if k % 2 == 1 {
        return None;
    }
    let omega = |u: &nalgebra::DVector<f64>, v: &nalgebra::DVector<f64>| (u.transpose() * y * v)[(0, 0)];
    let mut pool: Vec<nalgebra::DVector<f64>> = (0..k).map(|i| RMat::identity(k, k).column(i).into_owned()).collect();
    let scale = y.abs().max();
    if scale == 0.0 {
        return None;
    }
    let mut es = Vec::new();
    let mut fs = Vec::new();
    while !pool.is_empty() {
        let mut best = (0, 0, 0.0f64);
        for i in 0..pool.len() {
            for j in (i + 1)..pool.len() {
                let w = omega(&pool[i], &pool[j]);
                if w.abs() > best.2.abs() {
                    best = (i, j, w);
                }
            }
        }
        let (i, j, w) = best;
        if w.abs() < 1e-10 * scale {
            return None;
        }
        let s = w.abs().sqrt();
        let e = &pool[i] / s;
        let f = &pool[j] * (w.signum() / s);
        let mut rest = Vec::with_capacity(pool.len() - 2);
        for (t, v) in pool.iter().enumerate() {
            if t == i || t == j {
                continue;
            }
            let v2 = v - &e * omega(v, &f) + &f * omega(v, &e);
            rest.push(v2);
        }
        pool = rest;
        es.push(e);
        fs.push(f);
    }
    let mut p = RMat::zeros(k, k);
    let h = k / 2;
    for t in 0..h {
        p.set_row(t, &es[t].transpose());
        p.set_row(h + t, &fs[t].transpose());
    }
    Some(p)
}

/// Change of basis bringing a minimal system to a realizable one, if found.
pub fn symplectic_rebasing(a: &RMat, b: &RMat, c: &RMat, tol: f64) -> Option<(RMat, RMat)> {
    if a.nrows() == 0 {
        return None;
    }
    let y = realizability_gram(a, b, c);
    let p = symplectic_factor(&y)?;
    let p_inv = p.clone().try_inverse()?;
    let ss = StateSpace::quadrature(&p * a * &p_inv, &p * b, c * &p_inv, RMat::identity(c.nrows(), c.nrows())).ok()?;
    let pr = check_physical_realizability(&ss, tol * (1.0 + a.abs().max()));
    if pr.passed {
        Some((p, p_inv))
    } else {
        None
    }
}

impl KalmanForm {
    pub fn q_h(&self) -> Range<usize> {
        0..self.stages.c_obar
    }
    pub fn p_h(&self) -> Range<usize> {
        let s = self.stages.c_obar;
        s..s + self.stages.cbar_o
    }
    pub fn co(&self) -> Range<usize> {
        let s = self.stages.c_obar + self.stages.cbar_o;
        s..s + self.stages.co
    }
    pub fn cbar_obar(&self) -> Range<usize> {
        let s = self.stages.c_obar + self.stages.cbar_o + self.stages.co;
        s..s + self.stages.cbar_obar
    }
    fn outputs(&self) -> Range<usize> {
        0..self.c.nrows()
    }
    fn inputs(&self) -> Range<usize> {
        0..self.b.ncols()
    }

    /// Named blocks of the canonical form.
    pub fn blocks(&self) -> Vec<(&'static str, RMat)> {
        let (qh, ph, co, cb) = (self.q_h(), self.p_h(), self.co(), self.cbar_obar());
        let a = &self.a;
        vec![
            ("A_h11", sub(a, qh.clone(), qh.clone())),
            ("A_h12", sub(a, qh.clone(), ph.clone())),
            ("A_h22", sub(a, ph.clone(), ph.clone())),
            ("A_12", sub(a, qh.clone(), co.clone())),
            ("A_13", sub(a, qh.clone(), cb.clone())),
            ("A_21", sub(a, co.clone(), ph.clone())),
            ("A_31", sub(a, cb.clone(), ph.clone())),
            ("A_co", sub(a, co.clone(), co.clone())),
            ("A_cbarobar", sub(a, cb.clone(), cb.clone())),
            ("B_h", sub(&self.b, qh.clone(), self.inputs())),
            ("B_co", sub(&self.b, co.clone(), self.inputs())),
            ("C_h", sub(&self.c, self.outputs(), ph)),
            ("C_co", sub(&self.c, self.outputs(), co)),
        ]
    }

    pub fn block(&self, name: &str) -> Option<RMat> {
        self.blocks().into_iter().find(|(n, _)| *n == name).map(|(_, m)| m)
    }

    /// The system in canonical coordinates.
    pub fn transformed(&self) -> StateSpace {
        StateSpace::quadrature(self.a.clone(), self.b.clone(), self.c.clone(), self.original.d_r()).expect("real")
    }

    /// Max over samples of the transfer-function mismatch with the original.
    pub fn transfer_residual(&self, samples: &[C64]) -> f64 {
        let t = self.transformed();
        let mut worst = 0.0f64;
        for &s in samples {
            if let (Ok(g1), Ok(g2)) = (crate::model::transfer_at(&self.original, s), crate::model::transfer_at(&t, s)) {
                worst = worst.max(crate::matcore::max_norm(&(g1 - g2)));
            }
        }
        worst
    }

    pub fn is_minimal(&self) -> bool {
        self.stages.c_obar == 0 && self.stages.cbar_o == 0 && self.stages.cbar_obar == 0
    }

    /// Eigenvalues of the h blocks `A_h11`, `A_h22`.
    pub fn h_eigenvalues(&self) -> Vec<C64> {
        let mut v = eigenvalues_r(&sub(&self.a, self.q_h(), self.q_h()));
        v.extend(eigenvalues_r(&sub(&self.a, self.p_h(), self.p_h())));
        v
    }

    pub fn cbar_obar_eigenvalues(&self) -> Vec<C64> {
        eigenvalues_r(&sub(&self.a, self.cbar_obar(), self.cbar_obar()))
    }

    pub fn co_eigenvalues(&self) -> Vec<C64> {
        eigenvalues_r(&sub(&self.a, self.co(), self.co()))
    }

    /// `‖A_h11 + A_h22⊤‖`, meaningful only when the h stages are paired.
    pub fn h_antisymmetry_residual(&self) -> Option<f64> {
        if self.stages.c_obar != self.stages.cbar_o {
            return None;
        }
        let a11 = sub(&self.a, self.q_h(), self.q_h());
        let a22 = sub(&self.a, self.p_h(), self.p_h());
        Some(max_norm_r(&(a11 + a22.transpose())))
    }
}

fn zero_pattern_residual(kf: &KalmanForm) -> f64 {
    let (qh, ph, co, cb) = (kf.q_h(), kf.p_h(), kf.co(), kf.cbar_obar());
    let a = &kf.a;
    let zeros = [
        sub(a, ph.clone(), qh.clone()),
        sub(a, ph.clone(), co.clone()),
        sub(a, ph.clone(), cb.clone()),
        sub(a, co.clone(), qh.clone()),
        sub(a, co.clone(), cb.clone()),
        sub(a, cb.clone(), qh.clone()),
        sub(a, cb.clone(), co.clone()),
        sub(&kf.b, ph, kf.inputs()),
        sub(&kf.b, cb.clone(), kf.inputs()),
        sub(&kf.c, kf.outputs(), qh),
        sub(&kf.c, kf.outputs(), cb),
    ];
    zeros.iter().map(|z| if z.is_empty() { 0.0 } else { z.abs().max() }).fold(0.0, f64::max)
}

fn jbar_residual(kf: &KalmanForm) -> f64 {
    if kf.stages.c_obar != kf.stages.cbar_o || kf.stages.co % 2 == 1 || kf.stages.cbar_obar % 2 == 1 {
        return f64::INFINITY;
    }
    let jb = jbar_r(kf.n3, kf.n1, kf.n2);
    let jm = sym_j_r(kf.original.m);
    let r1 = &kf.a * &jb + &jb * kf.a.transpose() + &kf.b * &jm * kf.b.transpose();
    let r2 = &kf.b - &jb * kf.c.transpose() * &jm;
    max_norm_r(&r1).max(max_norm_r(&r2))
}

/// Decomposes a system (converted to quadrature if needed).
pub fn kalman_decompose(ss: &StateSpace, rank_tol: f64) -> Result<KalmanForm, KalmanError> {
    let q = to_quadrature(ss)?;
    let pr = check_physical_realizability(&q, 1e-8);
    if !pr.passed {
        log::warn!("decomposing a system that is not physically realizable");
    }
    let (a, b, c) = (q.a_r(), q.b_r(), q.c_r());
    let dim = a.nrows();
    let (r, amb_r) = reachable_subspace(&a, &b, rank_tol);
    let (nn, amb_n) = unobservable_subspace(&a, &c, rank_tol);
    let (v1, amb_i) = intersect(&r, &nn, rank_tol);
    let v2 = complement_within(&r, &v1, rank_tol);
    let v3 = complement_within(&nn, &v1, rank_tol);
    let (sum, _) = range_basis(&hcat(&[&r, &nn]), rank_tol);
    let mut v4 = orth_complement(&sum);
    // pair each controllable-unobservable direction with its symplectic partner
    if v4.ncols() == v1.ncols() && v1.ncols() > 0 {
        let partner = sym_j_r(dim / 2).transpose() * &v1;
        let leak = (sum.transpose() * &partner).abs().max();
        if leak < 1e-8 {
            v4 = partner;
        }
    }
    let stages = StageDims { co: v2.ncols(), c_obar: v1.ncols(), cbar_o: v4.ncols(), cbar_obar: v3.ncols() };
    let mut t = hcat(&[&v1, &v4, &v2, &v3]);
    let mut t_inv = t.clone().try_inverse().unwrap_or_else(|| t.transpose());
    let mut co_symplectic = false;
    let co_range = {
        let s = stages.c_obar + stages.cbar_o;
        s..s + stages.co
    };
    if stages.co > 0 && stages.co % 2 == 0 {
        let at = &t_inv * &a * &t;
        let bt = &t_inv * &b;
        let ct = &c * &t;
        let aco = sub(&at, co_range.clone(), co_range.clone());
        let bco = sub(&bt, co_range.clone(), 0..b.ncols());
        let cco = sub(&ct, 0..c.nrows(), co_range.clone());
        if let Some((p, p_inv)) = symplectic_rebasing(&aco, &bco, &cco, 1e-9) {
            let mut right = RMat::identity(dim, dim);
            let mut left = RMat::identity(dim, dim);
            right.view_mut((co_range.start, co_range.start), (stages.co, stages.co)).copy_from(&p_inv);
            left.view_mut((co_range.start, co_range.start), (stages.co, stages.co)).copy_from(&p);
            t = &t * right;
            t_inv = left * &t_inv;
            co_symplectic = true;
        }
    }
    let cond = condition_1(&to_complex(&t));
    let solve = |rhs: RMat| if dim == 0 { None } else { t.clone().lu().solve(&rhs) };
    let a_bar = solve(&a * &t).unwrap_or_else(|| &t_inv * &a * &t);
    let b_bar = solve(b.clone()).unwrap_or_else(|| &t_inv * &b);
    let c_bar = &c * &t;
    let mut kf = KalmanForm {
        original: q,
        transform: t,
        transform_inv: t_inv,
        transform_condition: cond,
        stages,
        n1: stages.co / 2,
        n2: stages.cbar_obar / 2,
        n3: stages.c_obar,
        a: a_bar,
        b: b_bar,
        c: c_bar,
        ambiguous: amb_r || amb_n || amb_i,
        pattern_residual: 0.0,
        jbar_pr_residual: 0.0,
        pattern_only: true,
        co_symplectic,
        tol: rank_tol,
    };
    kf.pattern_residual = zero_pattern_residual(&kf);
    kf.jbar_pr_residual = jbar_residual(&kf);
    kf.pattern_only = !(kf.jbar_pr_residual < 1e-8 * (1.0 + a.abs().max()));
    if kf.ambiguous {
        log::warn!("Kalman rank decision is ambiguous at tolerance {rank_tol:e}");
    }
    Ok(kf)
}

/// `(A_co, B_co, C_co, I)`.
pub fn co_subsystem(kf: &KalmanForm) -> Result<StateSpace, KalmanError> {
    if kf.stages.co == 0 {
        return Err(KalmanError::EmptySubsystem);
    }
    let co = kf.co();
    let a = sub(&kf.a, co.clone(), co.clone());
    let b = sub(&kf.b, co.clone(), kf.inputs());
    let c = sub(&kf.c, kf.outputs(), co);
    Ok(StateSpace::quadrature(a, b, c, kf.original.d_r())?)
}

/// `A_o = [[A_co, A_21], [0, A_h22]]`, `A_obar = [[A_h11, A_13], [0, A_cbarobar]]`.
pub fn observability_split(kf: &KalmanForm) -> ObservabilitySplit {
    let o: Vec<usize> = kf.co().chain(kf.p_h()).collect();
    let ob: Vec<usize> = kf.q_h().chain(kf.cbar_obar()).collect();
    let ins: Vec<usize> = kf.inputs().collect();
    let outs: Vec<usize> = kf.outputs().collect();
    ObservabilitySplit {
        a_o: select(&kf.a, &o, &o),
        a_obar: select(&kf.a, &ob, &ob),
        b_o: select(&kf.b, &o, &ins),
        c_o: select(&kf.c, &outs, &o),
    }
}

/// Every eigenvalue of the h blocks and of `A_cbarobar` purely imaginary.
pub fn check_assumption1(kf: &KalmanForm, tol: f64) -> AssumptionReport {
    let mut all = kf.h_eigenvalues();
    all.extend(kf.cbar_obar_eigenvalues());
    let offending: Vec<C64> = all.into_iter().filter(|z| z.re.abs() > tol).collect();
    AssumptionReport { holds: offending.is_empty(), offending_eigenvalues: offending, tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{free_mode, h_block, nonminimal_corpus, pr_corpus, random_orthosymplectic, sample_points};
    use crate::linalg::{match_multisets, negate};
    use crate::matcore::c;
    use crate::model::{rmat, transfer_at};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dpa(k: f64, e: f64) -> StateSpace {
        StateSpace::quadrature(
            rmat(2, 2, &[-(k - e) / 2.0, 0.0, 0.0, -(k + e) / 2.0]),
            RMat::identity(2, 2) * -k.sqrt(),
            RMat::identity(2, 2) * k.sqrt(),
            RMat::identity(2, 2),
        )
        .unwrap()
    }

    fn ex41() -> StateSpace {
        h_block(1.0, 1.0)
    }

    #[test]
    fn minimal_system_is_unchanged_in_size() {
        let kf = kalman_decompose(&dpa(2.0, 1.0), DEFAULT_RANK_TOL).unwrap();
        assert_eq!((kf.n1, kf.n2, kf.n3), (1, 0, 0));
        assert!(kf.is_minimal());
        let co = co_subsystem(&kf).unwrap();
        assert!(check_physical_realizability(&co, 1e-12).passed);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for s in sample_points(&mut rng, 5) {
            let g1 = transfer_at(&co, s).unwrap();
            let g2 = transfer_at(&dpa(2.0, 1.0), s).unwrap();
            assert!(crate::matcore::max_norm(&(g1 - g2)) < 1e-12);
        }
        let split = observability_split(&kf);
        assert_eq!(split.a_obar.nrows(), 0);
        assert_eq!(split.a_o, kf.a);
        assert!(!kf.pattern_only);
        assert!(check_assumption1(&kf, 1e-9).holds);
    }

    #[test]
    fn example_h_system() {
        let kf = kalman_decompose(&ex41(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!((kf.n1, kf.n2, kf.n3), (0, 0, 1));
        assert_eq!(kf.transform, RMat::identity(2, 2));
        assert_eq!(kf.block("C_h").unwrap(), rmat(2, 1, &[1.0, 0.0]));
        assert!(matches!(co_subsystem(&kf), Err(KalmanError::EmptySubsystem)));
        let split = observability_split(&kf);
        assert_eq!(split.a_o, rmat(1, 1, &[1.0]));
        assert_eq!(split.a_obar, rmat(1, 1, &[-1.0]));
        let rep = check_assumption1(&kf, 1e-9);
        assert!(!rep.holds);
        let mut off = rep.offending_eigenvalues.clone();
        crate::linalg::sort_c(&mut off);
        assert_eq!(off, vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(kf.h_antisymmetry_residual(), Some(0.0));
        assert!(!kf.pattern_only);
    }

    #[test]
    fn dpa_plus_free_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let free = free_mode(&mut rng);
        let sum = crate::corpus::add_dark_mode(&dpa(2.0, 1.0), &free);
        let p = crate::matcore::to_complex(&random_orthosymplectic(&mut rng, 2));
        let mixed = sum.transformed(&p, &p.transpose());
        let kf = kalman_decompose(&mixed, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((kf.n1, kf.n2, kf.n3), (1, 1, 0));
        let co = co_subsystem(&kf).unwrap();
        assert!(check_physical_realizability(&co, 1e-10).passed);
        for s in sample_points(&mut rng, 5) {
            let g1 = transfer_at(&co, s).unwrap();
            let g2 = transfer_at(&dpa(2.0, 1.0), s).unwrap();
            assert!(crate::matcore::max_norm(&(g1 - g2)) < 1e-10);
        }
        let split = observability_split(&kf);
        let d = match_multisets(&crate::linalg::eigenvalues_r(&split.a_obar), &crate::linalg::eigenvalues_r(&free.a_r()));
        assert!(d < 1e-9);
    }

    #[test]
    fn passive_system_satisfies_assumption() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let z = crate::matcore::CMat::zeros(2, 2);
        let mut p = crate::corpus::random_slh(&mut rng, 2, 1);
        p.omega_plus = z;
        p.c_plus = crate::matcore::CMat::zeros(1, 2);
        // one dark mode
        p.c_minus[(0, 1)] = c(0.0, 0.0);
        p.omega_minus[(0, 1)] = c(0.0, 0.0);
        p.omega_minus[(1, 0)] = c(0.0, 0.0);
        let ss = crate::model::build_complex_ss(&p).unwrap();
        let kf = kalman_decompose(&ss, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(kf.n2, 1);
        assert!(check_assumption1(&kf, 1e-9).holds);
    }

    #[test]
    fn corpus_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let systems: Vec<StateSpace> = pr_corpus(31, 40, 4, 2).into_iter().chain(nonminimal_corpus(32, 40)).collect();
        for ss in &systems {
            let kf = kalman_decompose(ss, DEFAULT_RANK_TOL).unwrap();
            assert!(!kf.ambiguous);
            assert_eq!(kf.stages.c_obar, kf.stages.cbar_o);
            assert!(kf.pattern_residual < 1e-8, "pattern {}", kf.pattern_residual);
            assert!(kf.transfer_residual(&sample_points(&mut rng, 10)) < 1e-9);
            let split = observability_split(&kf);
            let mut both = crate::linalg::eigenvalues_r(&split.a_o);
            both.extend(crate::linalg::eigenvalues_r(&split.a_obar));
            assert!(match_multisets(&both, &crate::linalg::eigenvalues_r(&ss.a_r())) < 1e-7);
            let h = kf.h_eigenvalues();
            assert!(match_multisets(&h, &negate(&h)) < 1e-7);
            if kf.n1 > 0 {
                assert!(kf.co_symplectic);
                let co = co_subsystem(&kf).unwrap();
                assert!(check_physical_realizability(&co, 1e-8).passed);
            }
        }
    }
}
