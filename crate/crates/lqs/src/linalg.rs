//! Dense eigensolvers, subspace helpers and multiset matching.
//!
//! Standard eigenvalues come from the nalgebra complex Schur form. The
//! generalized problem uses a separate single-shift complex QZ iteration.
//! Singular values come from one-sided Jacobi rotations.

use crate::matcore::{c, CMat, RMat, C64};
use nalgebra::linalg::Schur;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("QZ iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("pencil dimensions differ: {0}x{1} vs {2}x{3}")]
    PencilShape(usize, usize, usize, usize),
    #[error("singular value decomposition failed")]
    Svd,
}

/// Eigenvalues of a square complex matrix.
pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if let Some(schur) = Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
        let (_, t) = schur.unpack();
        let sub = (1..n).fold(0.0f64, |acc, i| acc.max(t[(i, i - 1)].norm()));
        if sub <= 1e-12 * (1.0 + crate::matcore::max_norm(&t)) {
            return (0..n).map(|i| t[(i, i)]).collect();
        }
    }
    // fall back to QZ on (M, I)
    let pairs = qz_pairs(m, &CMat::identity(n, n)).expect("QZ on (M, I) converges");
    pairs.into_iter().map(|(a, b)| a / b).collect()
}

pub fn eigenvalues_r(m: &RMat) -> Vec<C64> {
    eigenvalues(&crate::matcore::to_complex(m))
}

/// Left rotation `[[c, s], [-conj(s), c]]` mapping `(a, b)` to `(r, 0)`.
#[derive(Clone, Copy, Debug)]
struct Givens {
    c: f64,
    s: C64,
}

impl Givens {
    fn zeroing(a: C64, b: C64) -> Givens {
        let nb = b.norm();
        if nb == 0.0 {
            return Givens { c: 1.0, s: c(0.0, 0.0) };
        }
        let na = a.norm();
        if na == 0.0 {
            return Givens { c: 0.0, s: b.conj() / nb };
        }
        let rho = na.hypot(nb);
        Givens { c: na / rho, s: (a / na) * b.conj() / rho }
    }

    fn rows(&self, m: &mut CMat, i: usize, k: usize) {
        for j in 0..m.ncols() {
            let x = m[(i, j)];
            let y = m[(k, j)];
            m[(i, j)] = x * self.c + self.s * y;
            m[(k, j)] = -self.s.conj() * x + y * self.c;
        }
    }
}

/// Right rotation `[[a, -conj(b)], [b, a]]` mapping row pair `(p, q)` to `(0, r)`.
#[derive(Clone, Copy, Debug)]
struct RightRot {
    a: f64,
    b: C64,
}

impl RightRot {
    fn zeroing_first(p: C64, q: C64) -> RightRot {
        let np = p.norm();
        if np == 0.0 {
            return RightRot { a: 1.0, b: c(0.0, 0.0) };
        }
        let nq = q.norm();
        if nq == 0.0 {
            return RightRot { a: 0.0, b: c(1.0, 0.0) };
        }
        let rho = np.hypot(nq);
        RightRot { a: nq / rho, b: -(p * q.conj()) / (nq * rho) }
    }

    fn cols(&self, m: &mut CMat, i: usize, k: usize) {
        for r in 0..m.nrows() {
            let x = m[(r, i)];
            let y = m[(r, k)];
            m[(r, i)] = x * self.a + y * self.b;
            m[(r, k)] = -x * self.b.conj() + y * self.a;
        }
    }
}

fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Generalized eigenvalue pairs `(alpha, beta)` of the pencil `(A, B)`,
/// `det(beta A - alpha B) = 0`, from a complex QZ iteration.
pub fn qz_pairs(a: &CMat, b: &CMat) -> Result<Vec<(C64, C64)>, LinalgError> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(LinalgError::PencilShape(a.nrows(), a.ncols(), b.nrows(), b.ncols()));
    }
    let n = a.nrows();
    let mut h = a.clone();
    let mut t = b.clone();
    if n == 0 {
        return Ok(Vec::new());
    }
    // triangularize T
    for j in 0..n {
        for i in (j + 1..n).rev() {
            if t[(i, j)].norm() == 0.0 {
                continue;
            }
            let g = Givens::zeroing(t[(i - 1, j)], t[(i, j)]);
            g.rows(&mut h, i - 1, i);
            g.rows(&mut t, i - 1, i);
            t[(i, j)] = c(0.0, 0.0);
        }
    }
    // Hessenberg-triangular reduction
    for j in 0..n.saturating_sub(2) {
        for i in (j + 2..n).rev() {
            if h[(i, j)].norm() == 0.0 {
                continue;
            }
            let g = Givens::zeroing(h[(i - 1, j)], h[(i, j)]);
            g.rows(&mut h, i - 1, i);
            g.rows(&mut t, i - 1, i);
            h[(i, j)] = c(0.0, 0.0);
            let z = RightRot::zeroing_first(t[(i, i - 1)], t[(i, i)]);
            z.cols(&mut h, i - 1, i);
            z.cols(&mut t, i - 1, i);
            t[(i, i - 1)] = c(0.0, 0.0);
        }
    }

    let eps = f64::EPSILON;
    let hnorm = fro(&h).max(f64::MIN_POSITIVE);
    let tnorm = fro(&t).max(f64::MIN_POSITIVE);
    let btol = eps * tnorm;
    let mut out: Vec<(C64, C64)> = vec![(c(0.0, 0.0), c(0.0, 0.0)); n];
    let mut ihi = n as isize - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n.max(1);

    while ihi >= 0 {
        let hi = ihi as usize;
        // find the active block
        let mut ilo = 0usize;
        for k in (1..=hi).rev() {
            let s = h[(k, k)].norm() + h[(k - 1, k - 1)].norm();
            let sub = h[(k, k - 1)].norm();
            if sub <= eps * s.max(hnorm * eps.sqrt()) || sub <= eps * hnorm {
                h[(k, k - 1)] = c(0.0, 0.0);
                ilo = k;
                break;
            }
        }
        if ilo == hi {
            out[hi] = (h[(hi, hi)], t[(hi, hi)]);
            ihi -= 1;
            iter = 0;
            continue;
        }
        // infinite eigenvalue inside the block: chase the zero of T down
        if let Some(j) = (ilo..=hi).find(|&j| t[(j, j)].norm() <= btol) {
            t[(j, j)] = c(0.0, 0.0);
            for k in j..hi {
                let g = Givens::zeroing(t[(k, k + 1)], t[(k + 1, k + 1)]);
                g.rows(&mut h, k, k + 1);
                g.rows(&mut t, k, k + 1);
                t[(k + 1, k + 1)] = c(0.0, 0.0);
                if k > ilo {
                    let z = RightRot::zeroing_first(h[(k + 1, k - 1)], h[(k + 1, k)]);
                    z.cols(&mut h, k - 1, k);
                    z.cols(&mut t, k - 1, k);
                    h[(k + 1, k - 1)] = c(0.0, 0.0);
                }
            }
            let z = RightRot::zeroing_first(h[(hi, hi - 1)], h[(hi, hi)]);
            z.cols(&mut h, hi - 1, hi);
            z.cols(&mut t, hi - 1, hi);
            h[(hi, hi - 1)] = c(0.0, 0.0);
            continue;
        }

        iter += 1;
        total += 1;
        if total > max_total {
            return Err(LinalgError::NoConvergence(total));
        }
        let mu = if iter % 10 == 0 {
            let scale = h[(hi, hi - 1)].norm() / t[(hi - 1, hi - 1)].norm();
            h[(hi, hi)] / t[(hi, hi)] + c(0.75 * scale, 0.3 * scale)
        } else {
            wilkinson_shift(&h, &t, hi)
        };

        let x = h[(ilo, ilo)] - mu * t[(ilo, ilo)];
        let y = h[(ilo + 1, ilo)];
        let g = Givens::zeroing(x, y);
        g.rows(&mut h, ilo, ilo + 1);
        g.rows(&mut t, ilo, ilo + 1);
        for k in ilo..hi {
            if k > ilo {
                let g = Givens::zeroing(h[(k, k - 1)], h[(k + 1, k - 1)]);
                g.rows(&mut h, k, k + 1);
                g.rows(&mut t, k, k + 1);
                h[(k + 1, k - 1)] = c(0.0, 0.0);
            }
            let z = RightRot::zeroing_first(t[(k + 1, k)], t[(k + 1, k + 1)]);
            z.cols(&mut h, k, k + 1);
            z.cols(&mut t, k, k + 1);
            t[(k + 1, k)] = c(0.0, 0.0);
        }
    }
    Ok(out)
}

fn wilkinson_shift(h: &CMat, t: &CMat, hi: usize) -> C64 {
    let (h11, h12, h21, h22) = (h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)]);
    let (t11, t12, t22) = (t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi)]);
    let qa = t11 * t22;
    let qb = -(h11 * t22 + h22 * t11 - h21 * t12);
    let qc = h11 * h22 - h12 * h21;
    let target = h22 / t22;
    let disc = (qb * qb - qa * qc * 4.0).sqrt();
    let r1 = (-qb + disc) / (qa * 2.0);
    let r2 = (-qb - disc) / (qa * 2.0);
    let pick = if (r1 - target).norm() <= (r2 - target).norm() { r1 } else { r2 };
    if pick.re.is_finite() && pick.im.is_finite() {
        pick
    } else {
        target
    }
}

fn to_c(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

/// Thin singular value decomposition `M = U diag(s) V†`, `s` descending.
/// Tall or square input gives `U` of the input's shape and a square `V`;
/// wide input is decomposed through its adjoint, giving a square `U`.
/// Columns of `U` belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn svd(m: &CMat) -> Svd {
    let (r, k) = m.shape();
    if r < k {
        let t = svd(&m.adjoint());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let mut u = m.clone();
    let mut v = CMat::identity(k, k);
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dotc(&u.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 { 1.0 } else { -1.0 } / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for w in [&mut u, &mut v] {
                    for i in 0..w.nrows() {
                        let wp = w[(i, p)];
                        let wq = w[(i, q)] * phase;
                        w[(i, p)] = wp * cs - wq * sn;
                        w[(i, q)] = wp * sn + wq * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..k).map(|j| u.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut uo = CMat::zeros(r, k);
    let mut vo = CMat::zeros(k, k);
    let mut s = Vec::with_capacity(k);
    for (j, &i) in order.iter().enumerate() {
        let nrm = norms[i];
        if nrm > 0.0 {
            uo.set_column(j, &(u.column(i) / c(nrm, 0.0)));
        }
        vo.set_column(j, &v.column(i));
        s.push(nrm);
    }
    Svd { u: uo, s, v: vo }
}

/// Least-squares solution of `M x = b` discarding singular values below `rel_tol * s_max`.
pub fn lstsq(m: &CMat, b: &CMat, rel_tol: f64) -> CMat {
    let d = svd(m);
    let smax = d.s.first().cloned().unwrap_or(0.0);
    let mut x = CMat::zeros(m.ncols(), b.ncols());
    for (j, &sj) in d.s.iter().enumerate() {
        if sj <= rel_tol * smax || sj == 0.0 {
            continue;
        }
        let coef = d.u.column(j).adjoint() * b / c(sj, 0.0);
        x += d.v.column(j) * coef;
    }
    x
}

/// Orthonormal basis of the column space, with the rank decided by
/// `sigma > rel_tol * sigma_max`. Returns the basis and whether any singular
/// value sits within a factor 10 of the threshold.
pub fn range_basis(m: &RMat, rel_tol: f64) -> (RMat, bool) {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return (RMat::zeros(n, 0), false);
    }
    let d = svd(&to_c(m));
    let smax = d.s.first().cloned().unwrap_or(0.0);
    if smax == 0.0 {
        return (RMat::zeros(n, 0), false);
    }
    let thr = rel_tol * smax;
    let keep = d.s.iter().filter(|&&x| x > thr).count();
    let ambiguous = d.s.iter().any(|&x| x > thr / 10.0 && x < thr * 10.0);
    let basis = RMat::from_fn(n, keep, |i, j| d.u[(i, j)].re);
    (basis, ambiguous)
}

/// Orthonormal basis of the kernel, `sigma <= rel_tol * sigma_max`.
pub fn kernel_basis(m: &RMat, rel_tol: f64) -> (RMat, bool) {
    let k = m.ncols();
    if k == 0 {
        return (RMat::zeros(0, 0), false);
    }
    let (rt, amb) = range_basis(&m.transpose(), rel_tol);
    (orth_complement(&rt), amb)
}

/// Orthonormal basis of the orthogonal complement of `span(q)` where `q`
/// has orthonormal columns.
pub fn orth_complement(q: &RMat) -> RMat {
    let n = q.nrows();
    let r = q.ncols();
    if r == 0 {
        return RMat::identity(n, n);
    }
    if r >= n {
        return RMat::zeros(n, 0);
    }
    let proj = RMat::identity(n, n) - q * q.transpose();
    let (b, _) = range_basis(&proj, 1e-8);
    let take = (n - r).min(b.ncols());
    b.columns(0, take).into_owned()
}

/// Orthonormal basis of the part of `span(x)` orthogonal to `span(q)`.
pub fn complement_within(x: &RMat, q: &RMat, rel_tol: f64) -> RMat {
    let n = x.nrows();
    if x.ncols() == 0 {
        return RMat::zeros(n, 0);
    }
    let proj = if q.ncols() == 0 { x.clone() } else { x - q * (q.transpose() * x) };
    let (b, _) = range_basis(&proj, rel_tol);
    let want = x.ncols() - q.ncols().min(x.ncols());
    let take = want.min(b.ncols());
    b.columns(0, take).into_owned()
}

/// Orthonormal basis of `span(a) ∩ span(b)` for orthonormal `a`, `b`, via
/// principal angles. Flags cosines within 10x tolerance of one.
pub fn intersect(a: &RMat, b: &RMat, tol: f64) -> (RMat, bool) {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return (RMat::zeros(n, 0), false);
    }
    let d = svd(&to_c(&(a.transpose() * b)));
    let mut cols = Vec::new();
    let mut ambiguous = false;
    for (i, &si) in d.s.iter().enumerate() {
        let gap = 1.0 - si;
        if gap <= tol {
            let ui = RMat::from_fn(a.ncols(), 1, |r, _| d.u[(r, i)].re);
            cols.push((a * ui).column(0).into_owned());
        }
        if gap > tol / 10.0 && gap < tol * 10.0 {
            ambiguous = true;
        }
    }
    if cols.is_empty() {
        return (RMat::zeros(n, 0), ambiguous);
    }
    let raw = RMat::from_columns(&cols);
    let (q, _) = range_basis(&raw, 1e-8);
    (q, ambiguous)
}

/// Smallest singular value and its right singular vector of a complex matrix
/// with at least as many rows as columns.
pub fn smallest_right_singular(m: &CMat) -> (f64, Vec<C64>) {
    let k = m.ncols();
    let work = if m.nrows() < k {
        let mut p = CMat::zeros(k, k);
        p.view_mut((0, 0), (m.nrows(), k)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let d = svd(&work);
    let last = d.s.len() - 1;
    (d.s[last], d.v.column(last).iter().cloned().collect())
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    svd(m).s
}

/// 1-norm condition estimate from an explicit LU solve; used only for reporting.
pub fn condition_1(m: &CMat) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    let lu = m.clone().lu();
    match lu.try_inverse() {
        Some(inv) => norm_1(m) * norm_1(&inv),
        None => f64::INFINITY,
    }
}

pub fn norm_1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn cmp_c(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
}

pub fn sort_c(v: &mut [C64]) {
    v.sort_by(cmp_c);
}

/// Greedy nearest pairing of two complex multisets after sorting by
/// `(re, im)`. Returns the largest pairing distance, or infinity when the
/// sizes differ.
pub fn match_multisets(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort_c(&mut a);
    sort_c(&mut b);
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in &a {
        let mut best: Option<(usize, f64)> = None;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            let better = match best {
                None => true,
                Some((bj, bd)) => d < bd || (d == bd && b[j].im < b[bj].im),
            };
            if better {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            used[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

pub fn negate(v: &[C64]) -> Vec<C64> {
    v.iter().map(|z| -z).collect()
}

/// `|Re λ| < 1e-8 (1 + |λ|)`.
pub fn is_imaginary(z: C64) -> bool {
    z.re.abs() < 1e-8 * (1.0 + z.norm())
}
