//! Seeded property suites over random systems, runnable from the command line.

use crate::corpus::{nonminimal_corpus, pr_corpus, random_passive, sample_points};
use crate::invert::{build_quantum_inverse_observer, co_part, verify_inverse_identity};
use crate::kalman::{kalman_decompose, DEFAULT_RANK_TOL};
use crate::linalg::{match_multisets, negate};
use crate::matcore::{c, C64};
use crate::model::{check_doubly_stochastic, check_symplectic_identity, StateSpace};
use crate::network::{DiagonalPlant, Eval, Network, Quadrature};
use crate::spectra::{decoupling_zeros, invariant_zeros_flat, invariant_zeros_pencil, poles, SPECTRAL_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Deliberate defect for checking that the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    None,
    /// Compare zeros against poles without negation.
    ZeroSign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub worst_residual: f64,
    pub tol: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn collect(name: &'static str, tol: f64, residuals: Vec<f64>) -> SuiteResult {
        let failures = residuals.iter().filter(|r| !(**r < tol)).count();
        let worst = residuals.iter().cloned().fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
        SuiteResult { name, cases: residuals.len(), failures, worst_residual: worst, tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub fault: Fault,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

fn sign(fault: Fault, v: &[C64]) -> Vec<C64> {
    match fault {
        Fault::None => negate(v),
        Fault::ZeroSign => v.to_vec(),
    }
}

fn pole_zero(systems: &[StateSpace], fault: Fault) -> Vec<SuiteResult> {
    let res: Vec<(f64, f64)> = crate::par::map(systems, |ss| {
        let Ok(iz) = invariant_zeros_pencil(ss) else { return (f64::INFINITY, f64::INFINITY) };
        let flat = invariant_zeros_flat(ss).map(|f| match_multisets(&iz, &f)).unwrap_or(f64::INFINITY);
        (match_multisets(&iz, &sign(fault, &poles(ss))), flat)
    });
    vec![
        SuiteResult::collect("pole_zero", SPECTRAL_TOL, res.iter().map(|r| r.0).collect()),
        SuiteResult::collect("zero_methods", SPECTRAL_TOL, res.iter().map(|r| r.1).collect()),
    ]
}

fn decoupling(systems: &[StateSpace], fault: Fault) -> SuiteResult {
    let res = crate::par::map(systems, |ss| match decoupling_zeros(ss, DEFAULT_RANK_TOL) {
        Ok(dz) => {
            let out: Vec<C64> = dz.output.iter().map(|z| z.value).collect();
            let inp: Vec<C64> = dz.input.iter().map(|z| z.value).collect();
            match_multisets(&out, &sign(fault, &inp))
        }
        Err(_) => f64::INFINITY,
    });
    SuiteResult::collect("decoupling", SPECTRAL_TOL, res)
}

fn identities(systems: &[StateSpace], seed: u64) -> SuiteResult {
    let pts = sample_points(&mut stream(seed, 3), 10);
    let res = crate::par::map(systems, |ss| {
        let sym = check_symplectic_identity(ss, &pts).max_residual;
        let ds = pts
            .iter()
            .filter_map(|s| check_doubly_stochastic(ss, *s).ok())
            .map(|d| d.max_residual)
            .fold(0.0, f64::max);
        sym.max(ds)
    });
    SuiteResult::collect("transfer_identities", 1e-9, res)
}

fn kalman(systems: &[StateSpace], seed: u64) -> SuiteResult {
    let pts = sample_points(&mut stream(seed, 4), 10);
    let res = crate::par::map(systems, |ss| match kalman_decompose(ss, DEFAULT_RANK_TOL) {
        Ok(kf) if kf.stages.c_obar == kf.stages.cbar_o => kf.transfer_residual(&pts),
        _ => f64::INFINITY,
    });
    SuiteResult::collect("kalman", 1e-9, res)
}

fn quantum_observer(seed: u64) -> SuiteResult {
    let mut rng = stream(seed, 5);
    let pts = sample_points(&mut rng, 10);
    let systems: Vec<StateSpace> = (0..20)
        .map(|_| {
            let n = rng.random_range(1..=3);
            let m = rng.random_range(n..=3);
            random_passive(&mut rng, n, m)
        })
        .collect();
    let res = crate::par::map(&systems, |ss| {
        let run = || -> Option<f64> {
            let co = co_part(ss, DEFAULT_RANK_TOL).ok()?;
            let q = build_quantum_inverse_observer(&co).ok()?;
            let id = verify_inverse_identity(&co, &q.observer, &pts).ok()?;
            // identity at 1e-9, structure at 1e-10
            Some(id.max_residual.max(10.0 * q.reflection_residual).max(10.0 * q.pr_residual))
        };
        run().unwrap_or(f64::INFINITY)
    });
    SuiteResult::collect("quantum_observer", 1e-9, res)
}

fn network(seed: u64) -> SuiteResult {
    let mut rng = stream(seed, 6);
    let plant = |rng: &mut ChaCha8Rng| DiagonalPlant {
        omega_plus: c(0.0, rng.random_range(-2.0..2.0)),
        cq: rng.random_range(0.1..2.0),
        cp: rng.random_range(0.1..2.0),
    };
    let cases: Vec<(Network, C64)> = (0..40)
        .map(|_| {
            let g = plant(&mut rng);
            let k = plant(&mut rng);
            let net = Network::new(g, k, rng.random_range(-0.95..0.95)).expect("alpha in range");
            (net, c(rng.random_range(-2.0..2.0), rng.random_range(-3.0..3.0)))
        })
        .collect();
    let res = crate::par::map(&cases, |(net, s)| {
        let mut worst = 0.0f64;
        if let (Eval::Finite(tq), Eval::Finite(tp)) = (net.t(Quadrature::Q, *s), net.t(Quadrature::P, -*s)) {
            worst = worst.max((tq * tp - 1.0).norm() / (1.0 + tq.norm() * tp.norm()));
        }
        for j in [Quadrature::Q, Quadrature::P] {
            if let (Eval::Finite(a), Eval::Finite(b), Eval::Finite(sum)) = (net.s(j, *s), net.t(j, *s), net.spt(j, *s)) {
                worst = worst.max((a + b - sum).norm() / (1.0 + sum.norm() + a.norm()));
            }
        }
        worst
    });
    SuiteResult::collect("network", 1e-9, res)
}

pub fn run_selftest(seed: u64, fault: Fault) -> SelftestReport {
    let pr = pr_corpus(seed, 60, 4, 2);
    let nonmin = nonminimal_corpus(seed ^ 0x9e37_79b9, 30);
    let mut suites = pole_zero(&pr, fault);
    suites.push(decoupling(&nonmin, fault));
    suites.push(identities(&pr[..20], seed));
    let both: Vec<StateSpace> = pr[..20].iter().chain(nonmin.iter()).cloned().collect();
    suites.push(kalman(&both, seed));
    suites.push(quantum_observer(seed));
    suites.push(network(seed));
    let passed = suites.iter().all(SuiteResult::passed);
    SelftestReport { seed, fault, suites, passed }
}
