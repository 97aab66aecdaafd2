//! Seeded random physically realizable systems.

use crate::matcore::{c, doubled_up, quadrature_similarity, real_part, to_complex, CMat, RMat, C64};
use crate::model::{build_complex_ss, direct_sum, rmat, to_quadrature, SlhParams, StateSpace};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub const DEFAULT_SEED: u64 = 20240611;

/// Uniform point in the closed unit disc.
pub fn unit_disc<R: Rng>(rng: &mut R) -> C64 {
    loop {
        let z = c(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        if z.norm_sqr() <= 1.0 {
            return z;
        }
    }
}

fn disc_matrix<R: Rng>(rng: &mut R, r: usize, k: usize) -> CMat {
    CMat::from_fn(r, k, |_, _| unit_disc(rng))
}

/// Hermitian Ω₋, symmetric Ω₊, coupling entries in the unit disc.
pub fn random_slh<R: Rng>(rng: &mut R, n: usize, m: usize) -> SlhParams {
    let x = disc_matrix(rng, n, n);
    let om = (&x + x.adjoint()) * c(0.5, 0.0);
    let y = disc_matrix(rng, n, n);
    let op = (&y + y.transpose()) * c(0.5, 0.0);
    let cm = disc_matrix(rng, m, n);
    let cp = disc_matrix(rng, m, n);
    SlhParams::new(om, op, cm, cp).expect("shapes by construction")
}

pub fn random_quadrature<R: Rng>(rng: &mut R, n: usize, m: usize) -> StateSpace {
    to_quadrature(&build_complex_ss(&random_slh(rng, n, m)).expect("PR by construction")).expect("even")
}

/// Random unitary via QR of a complex Gaussian-like matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let g = disc_matrix(rng, n, n) + CMat::identity(n, n) * c(0.1, 0.0);
    let qr = g.qr();
    qr.q()
}

/// Orthogonal symplectic quadrature matrix from a random unitary.
pub fn random_orthosymplectic<R: Rng>(rng: &mut R, n: usize) -> RMat {
    let u = random_unitary(rng, n);
    let d = doubled_up(&u, &CMat::zeros(n, n)).expect("square");
    real_part(&quadrature_similarity(&d).expect("even"))
}

/// `A = diag(-a, a)`, `B = C = [[0, b], [0, 0]]`: a single-mode h subsystem.
pub fn h_block(a: f64, b: f64) -> StateSpace {
    let bc = rmat(2, 2, &[0.0, b, 0.0, 0.0]);
    StateSpace::quadrature(rmat(2, 2, &[-a, 0.0, 0.0, a]), bc.clone(), bc, RMat::identity(2, 2)).expect("valid")
}

/// `A = B = C = D = I₂`: a classical system that is not realizable.
pub fn classical_identity() -> StateSpace {
    let i = RMat::identity(2, 2);
    StateSpace::quadrature(i.clone(), i.clone(), i.clone(), i).expect("valid")
}

/// `A = diag(1, 2)`, `B = C = diag(1, 0)`, `D = I₂`.
pub fn classical_two_pole() -> StateSpace {
    let bc = rmat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    StateSpace::quadrature(rmat(2, 2, &[1.0, 0.0, 0.0, 2.0]), bc.clone(), bc, RMat::identity(2, 2)).expect("valid")
}

/// `A = I₂`, `B = C = diag(√2, -√2)`, `D = I₂`.
pub fn inverted_cavity() -> StateSpace {
    let s = std::f64::consts::SQRT_2;
    let bc = rmat(2, 2, &[s, 0.0, 0.0, -s]);
    StateSpace::quadrature(RMat::identity(2, 2), bc.clone(), bc, RMat::identity(2, 2)).expect("valid")
}

/// Empty cavity with decay rate `kappa`.
pub fn passive_cavity(kappa: f64) -> StateSpace {
    let i = RMat::identity(2, 2);
    StateSpace::quadrature(&i * (-kappa / 2.0), &i * -kappa.sqrt(), &i * kappa.sqrt(), i).expect("valid")
}

/// `[[(s-1)/(s+1), 1], [0, (s+1)/(s-1)]]`, a rational matrix that is not a quantum transfer function.
pub fn rational_counterexample(s: C64) -> Option<CMat> {
    let one = c(1.0, 0.0);
    if (s - one).norm() == 0.0 || (s + one).norm() == 0.0 {
        return None;
    }
    Some(CMat::from_row_slice(2, 2, &[(s - one) / (s + one), one, c(0.0, 0.0), (s + one) / (s - one)]))
}

/// Zero Hamiltonian and annihilation-only coupling: `A = -½B C`.
pub fn random_passive<R: Rng>(rng: &mut R, n: usize, m: usize) -> StateSpace {
    let mut p = random_slh(rng, n, m);
    p.omega_minus = CMat::zeros(n, n);
    p.omega_plus = CMat::zeros(n, n);
    p.c_plus = CMat::zeros(m, n);
    to_quadrature(&build_complex_ss(&p).expect("PR by construction")).expect("even")
}

/// Creation-only coupling and no squeezing Hamiltonian: every pole in the right half plane
/// when the coupling has full column rank.
pub fn random_antistable<R: Rng>(rng: &mut R, n: usize, m: usize) -> StateSpace {
    let mut p = random_slh(rng, n, m);
    p.omega_plus = CMat::zeros(n, n);
    p.c_minus = CMat::zeros(m, n);
    to_quadrature(&build_complex_ss(&p).expect("PR by construction")).expect("even")
}

/// A mode with no coupling and random Hamiltonian.
pub fn free_mode<R: Rng>(rng: &mut R) -> StateSpace {
    let om = CMat::from_element(1, 1, c(rng.random_range(-1.0..1.0), 0.0));
    let op = CMat::from_element(1, 1, unit_disc(rng) * 0.5);
    let z = CMat::zeros(1, 1);
    to_quadrature(&build_complex_ss(&SlhParams::new(om, op, z.clone(), z).unwrap()).unwrap()).unwrap()
}

/// Appends an uncoupled mode without adding a channel.
pub fn add_dark_mode(ss: &StateSpace, mode: &StateSpace) -> StateSpace {
    let sum = direct_sum(ss, mode).expect("same representation");
    let m = ss.m;
    let keep: Vec<usize> = (0..m).chain(m + 1..2 * m + 1).collect();
    let b = CMat::from_fn(sum.b.nrows(), keep.len(), |i, j| sum.b[(i, keep[j])]);
    let cc = CMat::from_fn(keep.len(), sum.c.ncols(), |i, j| sum.c[(keep[i], j)]);
    StateSpace::new(sum.rep, sum.a, b, cc, ss.d.clone()).expect("valid")
}

/// Random PR system padded with decoupled pieces and mixed by an orthogonal
/// symplectic change of state coordinates.
pub fn random_nonminimal<R: Rng>(rng: &mut R) -> StateSpace {
    let n = rng.random_range(1..=2);
    let m = rng.random_range(1..=2);
    let mut ss = random_quadrature(rng, n, m);
    let kind = rng.random_range(0..3);
    if kind != 1 {
        ss = add_dark_mode(&ss, &free_mode(rng));
    }
    if kind != 0 {
        let a = rng.random_range(0.2..1.5);
        let b = rng.random_range(0.5..1.5);
        ss = direct_sum(&ss, &h_block(a, b)).unwrap();
    }
    let p = to_complex(&random_orthosymplectic(rng, ss.n));
    let pt = p.transpose();
    ss.transformed(&p, &pt)
}

/// Random sample frequencies with moderate real and imaginary parts.
pub fn sample_points<R: Rng>(rng: &mut R, k: usize) -> Vec<C64> {
    (0..k).map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-3.0..3.0))).collect()
}

/// Seeded list of random PR quadrature systems with `n <= max_n`, `m <= max_m`.
pub fn pr_corpus(seed: u64, count: usize, max_n: usize, max_m: usize) -> Vec<StateSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=max_n);
            let m = rng.random_range(1..=max_m);
            random_quadrature(&mut rng, n, m)
        })
        .collect()
}

pub fn nonminimal_corpus(seed: u64, count: usize) -> Vec<StateSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_nonminimal(&mut rng)).collect()
}
