//! Structured complex matrix algebra: doubled-up matrices, the symplectic
//! forms `J` and `𝕁`, the ♭ and ♯ adjoints, the quadrature unitary `V_k`
//! and the channel interleaving permutation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

/// Default max-norm tolerance for exact identities.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("odd dimension {0} where an even one is required")]
    OddDimension(usize),
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("size parameter must be at least 1")]
    ZeroSize,
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn max_imag(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
}

/// Largest entry modulus; 0 for an empty matrix.
pub fn max_norm(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_norm_r(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Elementwise complex conjugate (`X^#`).
pub fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let k: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(r, k);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(*b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

pub fn block_diag_r(blocks: &[&RMat]) -> RMat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let k: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RMat::zeros(r, k);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(*b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

fn half(n: usize) -> Result<usize, MatError> {
    if n % 2 == 1 {
        Err(MatError::OddDimension(n))
    } else {
        Ok(n / 2)
    }
}

/// `J_k = diag(I_k, -I_k)`.
pub fn j_k(k: usize) -> CMat {
    CMat::from_fn(2 * k, 2 * k, |i, j| {
        if i != j {
            c(0.0, 0.0)
        } else if i < k {
            c(1.0, 0.0)
        } else {
            c(-1.0, 0.0)
        }
    })
}

/// Real symplectic form `𝕁_k = [[0, I_k], [-I_k, 0]]`.
pub fn sym_j_r(k: usize) -> RMat {
    RMat::from_fn(2 * k, 2 * k, |i, j| {
        if j == i + k && i < k {
            1.0
        } else if i == j + k && j < k {
            -1.0
        } else {
            0.0
        }
    })
}

pub fn sym_j(k: usize) -> CMat {
    to_complex(&sym_j_r(k))
}

/// `V_k = (1/√2) [[I, I], [-iI, iI]]`.
pub fn vquad(k: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMat::zeros(2 * k, 2 * k);
    for i in 0..k {
        v[(i, i)] = c(s, 0.0);
        v[(i, i + k)] = c(s, 0.0);
        v[(i + k, i)] = c(0.0, -s);
        v[(i + k, i + k)] = c(0.0, s);
    }
    v
}

/// `J̃_k = [[0, I_k], [I_k, 0]]`.
pub fn tilde_j(k: usize) -> CMat {
    CMat::from_fn(2 * k, 2 * k, |i, j| {
        if (i < k && j == i + k) || (i >= k && j + k == i) {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Block-symplectic form `diag(𝕁_{n3}, 𝕁_{n1}, 𝕁_{n2})` of the Kalman coordinates.
pub fn jbar_r(n3: usize, n1: usize, n2: usize) -> RMat {
    block_diag_r(&[&sym_j_r(n3), &sym_j_r(n1), &sym_j_r(n2)])
}

/// Permutation `T = [e_1 e_{m+1} e_2 e_{m+2} ... e_m e_{2m}]`.
pub fn interleave(m: usize) -> Result<RMat, MatError> {
    if m == 0 {
        return Err(MatError::ZeroSize);
    }
    let mut t = RMat::zeros(2 * m, 2 * m);
    for k in 0..m {
        t[(k, 2 * k)] = 1.0;
        t[(k + m, 2 * k + 1)] = 1.0;
    }
    Ok(t)
}

/// Named structured constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuredConstant {
    J(usize),
    DoubleJ(usize),
    Vquad(usize),
    Jbar { n3: usize, n1: usize, n2: usize },
    Interleave(usize),
    TildeJ(usize),
}

impl StructuredConstant {
    pub fn build(self) -> Result<CMat, MatError> {
        Ok(match self {
            StructuredConstant::J(k) => j_k(k),
            StructuredConstant::DoubleJ(k) => sym_j(k),
            StructuredConstant::Vquad(k) => vquad(k),
            StructuredConstant::Jbar { n3, n1, n2 } => to_complex(&jbar_r(n3, n1, n2)),
            StructuredConstant::Interleave(m) => to_complex(&interleave(m)?),
            StructuredConstant::TildeJ(k) => tilde_j(k),
        })
    }
}

/// `Δ(U, V) = [[U, V], [V^#, U^#]]`.
pub fn doubled_up(u: &CMat, v: &CMat) -> Result<CMat, MatError> {
    if u.shape() != v.shape() {
        return Err(MatError::Shape(format!(
            "U is {}x{} but V is {}x{}",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    let (k, r) = u.shape();
    let mut out = CMat::zeros(2 * k, 2 * r);
    out.view_mut((0, 0), (k, r)).copy_from(u);
    out.view_mut((0, r), (k, r)).copy_from(v);
    out.view_mut((k, 0), (k, r)).copy_from(&conj(v));
    out.view_mut((k, r), (k, r)).copy_from(&conj(u));
    Ok(out)
}

/// Split an even-shaped matrix into its doubled-up pair `(U, V)` taken from the top blocks.
pub fn split_doubled_up(m: &CMat) -> Result<(CMat, CMat), MatError> {
    let k = half(m.nrows())?;
    let r = half(m.ncols())?;
    Ok((
        m.view((0, 0), (k, r)).into_owned(),
        m.view((0, r), (k, r)).into_owned(),
    ))
}

/// Max-norm deviation from the conjugate-block symmetry of a doubled-up matrix.
pub fn doubled_up_residual(m: &CMat) -> Result<f64, MatError> {
    let (u, v) = split_doubled_up(m)?;
    let rebuilt = doubled_up(&u, &v)?;
    Ok(max_norm(&(m - rebuilt)))
}

/// `X^♭ = J_r X† J_k` for `X` of size `2k x 2r`.
pub fn flat_adjoint(x: &CMat) -> Result<CMat, MatError> {
    let k = half(x.nrows())?;
    let r = half(x.ncols())?;
    Ok(j_k(r) * x.adjoint() * j_k(k))
}

/// `X^♯ = -𝕁 X† 𝕁` for even square `X`.
pub fn sharp_adjoint(x: &CMat) -> Result<CMat, MatError> {
    if !x.is_square() {
        return Err(MatError::NotSquare(x.nrows(), x.ncols()));
    }
    let m = half(x.nrows())?;
    let jm = sym_j(m);
    Ok(-(&jm * x.adjoint() * &jm))
}

/// `V_k M V_k†`.
pub fn quadrature_similarity(m: &CMat) -> Result<CMat, MatError> {
    if !m.is_square() {
        return Err(MatError::NotSquare(m.nrows(), m.ncols()));
    }
    let k = half(m.nrows())?;
    let v = vquad(k);
    Ok(&v * m * v.adjoint())
}

/// `V_k† M V_k`, the inverse of [`quadrature_similarity`].
pub fn complex_similarity(m: &CMat) -> Result<CMat, MatError> {
    if !m.is_square() {
        return Err(MatError::NotSquare(m.nrows(), m.ncols()));
    }
    let k = half(m.nrows())?;
    let v = vquad(k);
    Ok(v.adjoint() * m * &v)
}

/// `V_r M V_c†` for a rectangular even-shaped matrix.
pub fn to_quadrature_rect(m: &CMat) -> Result<CMat, MatError> {
    let r = half(m.nrows())?;
    let k = half(m.ncols())?;
    Ok(vquad(r) * m * vquad(k).adjoint())
}

/// `V_r† M V_c` for a rectangular even-shaped matrix.
pub fn to_complex_rect(m: &CMat) -> Result<CMat, MatError> {
    let r = half(m.nrows())?;
    let k = half(m.ncols())?;
    Ok(vquad(r).adjoint() * m * vquad(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(rows: usize, cols: usize, v: &[(f64, f64)]) -> CMat {
        CMat::from_row_iterator(rows, cols, v.iter().map(|&(a, b)| c(a, b)))
    }

    fn arb_cmat(r: usize, k: usize) -> impl Strategy<Value = CMat> {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), r * k)
            .prop_map(move |v| cm(r, k, &v))
    }

    #[test]
    fn doubled_up_identity_and_swap() {
        let one = cm(1, 1, &[(1.0, 0.0)]);
        let zero = cm(1, 1, &[(0.0, 0.0)]);
        assert_eq!(doubled_up(&one, &zero).unwrap(), eye(2));
        assert_eq!(
            doubled_up(&zero, &one).unwrap(),
            cm(2, 2, &[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)])
        );
    }

    #[test]
    fn doubled_up_complex_entries() {
        let u = cm(1, 1, &[(1.0, 0.0)]);
        let v = cm(1, 1, &[(0.0, 1.0)]);
        // oracle: [[u, v], [conj v, conj u]]
        let expect = cm(2, 2, &[(1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 0.0)]);
        assert_eq!(doubled_up(&u, &v).unwrap(), expect);
    }

    #[test]
    fn doubled_up_rejects_shape_mismatch() {
        let u = CMat::zeros(1, 2);
        let v = CMat::zeros(2, 1);
        assert!(matches!(doubled_up(&u, &v), Err(MatError::Shape(_))));
    }

    #[test]
    fn flat_adjoint_examples() {
        assert_eq!(flat_adjoint(&eye(2)).unwrap(), eye(2));
        let x = cm(2, 2, &[(1.0, 0.0), (0.0, 1.0), (0.0, 0.0), (2.0, 0.0)]);
        let expect = cm(2, 2, &[(1.0, 0.0), (0.0, 0.0), (0.0, 1.0), (2.0, 0.0)]);
        assert!(max_norm(&(flat_adjoint(&x).unwrap() - expect)) < 1e-15);
        assert!(matches!(flat_adjoint(&CMat::zeros(3, 2)), Err(MatError::OddDimension(3))));
    }

    #[test]
    fn sharp_adjoint_examples() {
        assert_eq!(sharp_adjoint(&eye(2)).unwrap(), eye(2));
        let d = cm(2, 2, &[(2.0, 0.0), (0.0, 0.0), (0.0, 0.0), (3.0, 0.0)]);
        // oracle: -[[0,1],[-1,0]] diag(2,3) [[0,1],[-1,0]] swaps the diagonal
        let swapped = cm(2, 2, &[(3.0, 0.0), (0.0, 0.0), (0.0, 0.0), (2.0, 0.0)]);
        assert!(max_norm(&(sharp_adjoint(&d).unwrap() - swapped)) < 1e-15);
        let scalar = eye(2) * c(2.5, 0.0);
        assert!(max_norm(&(sharp_adjoint(&scalar).unwrap() - &scalar)) < 1e-15);
        assert!(matches!(sharp_adjoint(&CMat::zeros(2, 4)), Err(MatError::NotSquare(2, 4))));
        assert!(matches!(sharp_adjoint(&CMat::zeros(3, 3)), Err(MatError::OddDimension(3))));
    }

    #[test]
    fn quadrature_similarity_examples() {
        let eps = 0.7;
        let dpa = doubled_up(&cm(1, 1, &[(0.0, 0.0)]), &cm(1, 1, &[(0.0, eps / 2.0)])).unwrap();
        assert!(max_imag(&quadrature_similarity(&dpa).unwrap()) < 1e-12);
        for k in 1..4 {
            assert!(max_norm(&(quadrature_similarity(&eye(2 * k)).unwrap() - eye(2 * k))) < 1e-15);
        }
        // oracle: (1/2)[[1,1],[-i,i]] diag(1,-1) [[1,i],[1,-i]] = [[0,i],[-i,0]]
        let jq = quadrature_similarity(&j_k(1)).unwrap();
        let expect = cm(2, 2, &[(0.0, 0.0), (0.0, 1.0), (0.0, -1.0), (0.0, 0.0)]);
        assert!(max_norm(&(jq - expect)) < 1e-15);
        // the reverse similarity maps J onto J̃ and J̃ onto J
        assert!(max_norm(&(complex_similarity(&j_k(1)).unwrap() - tilde_j(1))) < 1e-15);
        assert!(max_norm(&(quadrature_similarity(&tilde_j(2)).unwrap() - j_k(2))) < 1e-15);
        assert!(matches!(quadrature_similarity(&CMat::zeros(3, 3)), Err(MatError::OddDimension(3))));
    }

    #[test]
    fn interleave_examples() {
        assert_eq!(interleave(1).unwrap(), RMat::identity(2, 2));
        let t = interleave(2).unwrap();
        // columns e1, e3, e2, e4
        let cols = [0usize, 2, 1, 3];
        for (j, &row) in cols.iter().enumerate() {
            for i in 0..4 {
                assert_eq!(t[(i, j)], if i == row { 1.0 } else { 0.0 });
            }
        }
        let prod = t.transpose() * sym_j_r(2) * &t;
        let expect = block_diag_r(&[&sym_j_r(1), &sym_j_r(1)]);
        assert_eq!(prod, expect);
        assert_eq!(interleave(0), Err(MatError::ZeroSize));
    }

    #[test]
    fn structured_constant_invariants() {
        for k in 1..5 {
            let jj = sym_j(k);
            assert!(max_norm(&(&jj * &jj + eye(2 * k))) == 0.0);
            let v = vquad(k);
            assert!(max_norm(&(&v * v.adjoint() - eye(2 * k))) < 1e-14);
            let t = interleave(k).unwrap();
            assert_eq!(&t * t.transpose(), RMat::identity(2 * k, 2 * k));
            let tj = tilde_j(k);
            assert_eq!(&tj * &tj, eye(2 * k));
            assert_eq!(StructuredConstant::J(k).build().unwrap(), j_k(k));
        }
        let jb = jbar_r(1, 2, 0);
        assert_eq!(jb.nrows(), 6);
        assert_eq!(jb.view((2, 2), (4, 4)).into_owned(), sym_j_r(2));
    }

    proptest! {
        #[test]
        fn flat_is_involutive_and_antimultiplicative(
            x in arb_cmat(4, 2), y in arb_cmat(2, 6)
        ) {
            let xf = flat_adjoint(&x).unwrap();
            prop_assert!(max_norm(&(flat_adjoint(&xf).unwrap() - &x)) < 1e-14);
            let lhs = flat_adjoint(&(&x * &y)).unwrap();
            let rhs = flat_adjoint(&y).unwrap() * flat_adjoint(&x).unwrap();
            prop_assert!(max_norm(&(lhs - rhs)) < 1e-12);
        }

        #[test]
        fn sharp_is_involutive_and_antimultiplicative(
            x in arb_cmat(4, 4), y in arb_cmat(4, 4)
        ) {
            let xs = sharp_adjoint(&x).unwrap();
            prop_assert!(max_norm(&(sharp_adjoint(&xs).unwrap() - &x)) < 1e-14);
            let lhs = sharp_adjoint(&(&x * &y)).unwrap();
            let rhs = sharp_adjoint(&y).unwrap() * sharp_adjoint(&x).unwrap();
            prop_assert!(max_norm(&(lhs - rhs)) < 1e-12);
        }

        #[test]
        fn doubled_up_structure(u in arb_cmat(2, 3), v in arb_cmat(2, 3)) {
            let d = doubled_up(&u, &v).unwrap();
            prop_assert_eq!(doubled_up_residual(&d).unwrap(), 0.0);
            let (u2, v2) = split_doubled_up(&d).unwrap();
            prop_assert_eq!(u2, u);
            prop_assert_eq!(v2, v);
        }

        #[test]
        fn quadrature_of_doubled_up_is_real(u in arb_cmat(2, 2), v in arb_cmat(2, 2)) {
            let d = doubled_up(&u, &v).unwrap();
            prop_assert!(max_imag(&quadrature_similarity(&d).unwrap()) < 1e-12);
        }
    }
}
