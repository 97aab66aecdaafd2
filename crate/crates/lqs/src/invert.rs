//! Left invertibility verdicts, input observers and mean-dynamics simulation.

use crate::kalman::{check_assumption1, co_subsystem, kalman_decompose, observability_split, KalmanError, KalmanForm};
use crate::linalg::eigenvalues_r;
use crate::matcore::{j_k, max_norm, max_norm_r, real_part, tilde_j, to_complex, vquad, CMat, RMat, C64};
use crate::model::{check_physical_realizability, quadrature_transfer_at, IdentityCheck, ModelError, StateSpace};
use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvertError {
    #[error("system has no controllable and observable part")]
    EmptyCo,
    #[error("direct term is not the identity (residual {0:.3e})")]
    DirectTerm(f64),
    #[error("intrinsic Hamiltonian is not zero: |A_co - B_co C_co / 2| = {residual:.3e} (allowed {allowed:.3e})")]
    NonzeroHamiltonian { residual: f64, allowed: f64 },
    #[error("co subsystem is not in symplectic coordinates (residual {0:.3e})")]
    NotRealizable(f64),
    #[error("dt must be positive and finite and t_end non-negative (dt = {dt}, t_end = {t_end})")]
    InvalidStep { dt: f64, t_end: f64 },
    #[error("signal has {got} channels, expected {want}")]
    SignalWidth { got: usize, want: usize },
    #[error("initial state has {got} entries, expected {want}")]
    StateWidth { got: usize, want: usize },
    #[error(transparent)]
    Kalman(#[from] KalmanError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    SLeft,
    AsLeft,
    LeftOnly,
    NotAsLeft,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PreconditionFlags {
    pub no_h_subsystem: bool,
    pub cobarobar_imaginary: bool,
    pub a_co_in_rhp: bool,
    pub no_co_subsystem: bool,
    pub assumption1: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvertibilityVerdict {
    pub kind: VerdictKind,
    pub rationale: String,
    pub precondition_flags: PreconditionFlags,
    /// Eigenvalues of `A_o - B_o C_o`: the dynamics left when the output is held at zero.
    pub zero_dynamics: Vec<C64>,
    pub tol: f64,
}

fn all_rhp(v: &[C64], tol: f64) -> bool {
    v.iter().all(|z| z.re > tol)
}

pub fn classify_invertibility(kf: &KalmanForm, tol: f64) -> InvertibilityVerdict {
    let a1 = check_assumption1(kf, tol);
    let aco = kf.co_eigenvalues();
    let flags = PreconditionFlags {
        no_h_subsystem: kf.n3 == 0,
        cobarobar_imaginary: kf.cbar_obar_eigenvalues().iter().all(|z| z.re.abs() <= tol),
        a_co_in_rhp: !aco.is_empty() && all_rhp(&aco, tol),
        no_co_subsystem: kf.stages.co == 0,
        assumption1: a1.holds,
    };
    let split = observability_split(kf);
    let zd = if split.a_o.nrows() == 0 {
        Vec::new()
    } else {
        eigenvalues_r(&(&split.a_o - &split.b_o * &split.c_o))
    };
    let verdict = |kind, why: &str| InvertibilityVerdict {
        kind,
        rationale: why.to_string(),
        precondition_flags: flags,
        zero_dynamics: zd.clone(),
        tol,
    };
    if kf.ambiguous {
        return verdict(VerdictKind::Indeterminate, "rank decisions in the Kalman decomposition were ambiguous at this tolerance");
    }
    if flags.no_co_subsystem && flags.assumption1 {
        return verdict(VerdictKind::SLeft, "no co subsystem and every h and cbar-obar eigenvalue is imaginary");
    }
    if flags.no_h_subsystem && flags.cobarobar_imaginary {
        return if flags.a_co_in_rhp {
            verdict(VerdictKind::AsLeft, "no h subsystem, imaginary cbar-obar spectrum, A_co spectrum in the open right half plane")
        } else {
            verdict(VerdictKind::NotAsLeft, "no h subsystem, imaginary cbar-obar spectrum, A_co has an eigenvalue outside the open right half plane")
        };
    }
    if zd.iter().any(|z| z.re > tol) {
        verdict(VerdictKind::NotAsLeft, "zero-output dynamics on the observable part have an unstable mode")
    } else if zd.iter().all(|z| z.re < -tol) {
        verdict(VerdictKind::AsLeft, "zero-output dynamics on the observable part are Hurwitz")
    } else {
        verdict(VerdictKind::LeftOnly, "zero-output dynamics on the observable part have imaginary-axis modes")
    }
}

pub fn classify_system(ss: &StateSpace, rank_tol: f64, tol: f64) -> Result<InvertibilityVerdict, InvertError> {
    Ok(classify_invertibility(&kalman_decompose(ss, rank_tol)?, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverKind {
    Classical,
    QuantumInverse,
}

/// Quadrature matrices of an input observer driven by the plant output.
#[derive(Debug, Clone, PartialEq)]
pub struct Observer {
    pub kind: ObserverKind,
    pub a: RMat,
    pub b: RMat,
    pub c: RMat,
    pub d: RMat,
    /// Largest real part over `eig(A_obs)`; `None` for a static observer.
    pub stability: Option<f64>,
}

impl Observer {
    fn new(kind: ObserverKind, a: RMat, b: RMat, c: RMat, d: RMat) -> Observer {
        let stability = eigenvalues_r(&a).into_iter().map(|z| z.re).reduce(f64::max);
        Observer { kind, a, b, c, d, stability }
    }

    pub fn is_hurwitz(&self) -> bool {
        self.stability.map(|s| s < 0.0).unwrap_or(true)
    }

    pub fn state_space(&self) -> Result<StateSpace, ModelError> {
        StateSpace::quadrature(self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone())
    }
}

fn check_unit_d(co: &StateSpace) -> Result<(), InvertError> {
    let k = co.d.nrows();
    let r = max_norm(&(&co.d - CMat::identity(k, k)));
    if r > 1e-12 {
        return Err(InvertError::DirectTerm(r));
    }
    Ok(())
}

/// The system itself when minimal, its co part otherwise, in quadrature.
pub fn co_part(ss: &StateSpace, rank_tol: f64) -> Result<StateSpace, InvertError> {
    let kf = kalman_decompose(ss, rank_tol)?;
    if kf.stages.co == 0 {
        return Err(InvertError::EmptyCo);
    }
    if kf.is_minimal() {
        return Ok(kf.original);
    }
    Ok(co_subsystem(&kf)?)
}

/// `ξ' = (A_co - B_co C_co) ξ + B_co y`, `u_ℓ = -C_co ξ + y`.
pub fn build_classical_observer(co: &StateSpace) -> Result<Observer, InvertError> {
    if co.a.nrows() == 0 {
        return Err(InvertError::EmptyCo);
    }
    check_unit_d(co)?;
    let (a, b, c) = (co.a_r(), co.b_r(), co.c_r());
    let k = c.nrows();
    Ok(Observer::new(ObserverKind::Classical, &a - &b * &c, b, -c, RMat::identity(k, k)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumObserver {
    pub observer: Observer,
    /// `|A_co - B_co C_co / 2|`.
    pub hamiltonian_residual: f64,
    /// `|V Ã V† + J A_co J|` with `J = diag(I, -I)`.
    pub reflection_residual: f64,
    pub pr_residual: f64,
}

/// Inverse system with zero Hamiltonian: `C̃ = 𝒞 J̃`, `B̃ = -C̃^♭`, `Ã = B̃ C̃ / 2`.
pub fn build_quantum_inverse_observer(co: &StateSpace) -> Result<QuantumObserver, InvertError> {
    check_unit_d(co)?;
    let (a, b, c) = (co.a_r(), co.b_r(), co.c_r());
    let (n1, m) = (co.n, co.m);
    let pr = check_physical_realizability(co, 1e-8 * (1.0 + max_norm_r(&a)));
    if !pr.passed {
        return Err(InvertError::NotRealizable(pr.residual_constraint1.max(pr.residual_constraint2)));
    }
    let h = max_norm_r(&(&a - &b * &c * 0.5));
    let allowed = 1e-9 * max_norm_r(&a);
    if h > allowed {
        return Err(InvertError::NonzeroHamiltonian { residual: h, allowed });
    }
    let (vn, vm) = (vquad(n1), vquad(m));
    let cc = vm.adjoint() * to_complex(&c) * &vn;
    let ct = &cc * tilde_j(n1);
    let bt = -(j_k(n1) * ct.adjoint() * j_k(m));
    let at = &bt * &ct * crate::matcore::c(0.5, 0.0);
    let aq = &vn * &at * vn.adjoint();
    let bq = &vn * &bt * vm.adjoint();
    let cq = &vm * &ct * vn.adjoint();
    let reflection = max_norm(&(&aq + to_complex(&(real_part(&j_k(n1)) * &a * real_part(&j_k(n1))))));
    let obs = Observer::new(ObserverKind::QuantumInverse, real_part(&aq), real_part(&bq), real_part(&cq), RMat::identity(2 * m, 2 * m));
    let pr = check_physical_realizability(&obs.state_space()?, f64::INFINITY);
    Ok(QuantumObserver {
        observer: obs,
        hamiltonian_residual: h,
        reflection_residual: reflection,
        pr_residual: pr.residual_constraint1.max(pr.residual_constraint2),
    })
}

/// Max over samples of `|P(s) G(s) - I|`, quadrature transfer functions.
pub fn verify_inverse_identity(plant: &StateSpace, obs: &Observer, samples: &[C64]) -> Result<IdentityCheck, InvertError> {
    let p = obs.state_space()?;
    let k = obs.d.nrows();
    let mut out = IdentityCheck { max_residual: 0.0, evaluated: 0, skipped: 0 };
    for &s in samples {
        match (quadrature_transfer_at(plant, s), quadrature_transfer_at(&p, s)) {
            (Ok(g), Ok(ps)) => {
                out.max_residual = out.max_residual.max(max_norm(&(ps * g - CMat::identity(k, k))));
                out.evaluated += 1;
            }
            _ => out.skipped += 1,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub step_warning: bool,
}

impl Trajectory {
    pub fn csv_header(&self) -> Vec<String> {
        fn w(p: &'static str, k: usize) -> impl Iterator<Item = String> {
            (1..=k).map(move |i| format!("{p}_{i}"))
        }
        let nx = self.x.first().map_or(0, Vec::len);
        let nu = self.u.first().map_or(0, Vec::len);
        let ny = self.y.first().map_or(0, Vec::len);
        std::iter::once("t".to_string()).chain(w("x", nx)).chain(w("u", nu)).chain(w("y", ny)).collect()
    }

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        (0..self.t.len())
            .map(|k| {
                let mut r = vec![self.t[k]];
                r.extend(&self.x[k]);
                r.extend(&self.u[k]);
                r.extend(&self.y[k]);
                r
            })
            .collect()
    }
}

fn rk4<F>(f: F, x0: DVector<f64>, dt: f64, steps: usize) -> Vec<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0;
    out.push(x.clone());
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = f(t, &x);
        let k2 = f(t + dt / 2.0, &(&x + &k1 * (dt / 2.0)));
        let k3 = f(t + dt / 2.0, &(&x + &k2 * (dt / 2.0)));
        let k4 = f(t + dt, &(&x + &k3 * dt));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        out.push(x.clone());
    }
    out
}

fn step_count(dt: f64, t_end: f64) -> Result<usize, InvertError> {
    if !(dt > 0.0 && dt.is_finite() && t_end >= 0.0 && t_end.is_finite()) {
        return Err(InvertError::InvalidStep { dt, t_end });
    }
    Ok((t_end / dt - 1e-9).ceil().max(0.0) as usize)
}

fn warn_step(a: &RMat, dt: f64) -> bool {
    let big = a.abs().row_sum().max() * dt > 0.1;
    if big {
        log::warn!("step {dt} is large for this system (|A| dt > 0.1)");
    }
    big
}

fn checked<F: Fn(f64) -> DVector<f64>>(input: &F, want: usize) -> Result<(), InvertError> {
    let got = input(0.0).len();
    if got != want {
        return Err(InvertError::SignalWidth { got, want });
    }
    Ok(())
}

/// RK4 on `x' = A x + B u`, `y = C x + D u`, quadrature mean values.
pub fn simulate_mean<F>(ss: &StateSpace, input: F, x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory, InvertError>
where
    F: Fn(f64) -> DVector<f64>,
{
    simulate_matrices((&ss.a_r(), &ss.b_r(), &ss.c_r(), &ss.d_r()), input, x0, t_end, dt)
}

fn simulate_matrices<F>(m: (&RMat, &RMat, &RMat, &RMat), input: F, x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory, InvertError>
where
    F: Fn(f64) -> DVector<f64>,
{
    let (a, b, c, d) = m;
    let steps = step_count(dt, t_end)?;
    checked(&input, b.ncols())?;
    if x0.len() != a.nrows() {
        return Err(InvertError::StateWidth { got: x0.len(), want: a.nrows() });
    }
    let step_warning = warn_step(a, dt);
    let xs = rk4(|t, x| a * x + b * input(t), DVector::from_column_slice(x0), dt, steps);
    let t: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let u: Vec<DVector<f64>> = t.iter().map(|&s| input(s)).collect();
    let y = xs.iter().zip(&u).map(|(x, u)| (c * x + d * u).as_slice().to_vec()).collect();
    Ok(Trajectory {
        x: xs.iter().map(|x| x.as_slice().to_vec()).collect(),
        u: u.iter().map(|v| v.as_slice().to_vec()).collect(),
        y,
        t,
        step_warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub plant: Trajectory,
    pub u_hat: Vec<Vec<f64>>,
    pub err_norm: Vec<f64>,
    pub observer_stability: Option<f64>,
    /// Slope of `ln |u - u_hat|` over the second half of the run; `None` for unstable observers
    /// or when too few samples sit above the floor.
    pub fitted_rate: Option<f64>,
    pub unstable_observer: bool,
}

impl Reconstruction {
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = self.plant.csv_header();
        h.extend((1..=self.u_hat.first().map_or(0, Vec::len)).map(|i| format!("uhat_{i}")));
        h.push("err_norm".to_string());
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        self.plant
            .csv_rows()
            .into_iter()
            .zip(self.u_hat.iter().zip(&self.err_norm))
            .map(|(mut r, (uh, e))| {
                r.extend(uh);
                r.push(*e);
                r
            })
            .collect()
    }
}

/// Least-squares slope of `ln e` against `t` for `t >= t_end / 2`, skipping tiny values.
pub fn fit_decay_rate(t: &[f64], e: &[f64]) -> Option<f64> {
    let t_end = *t.last()?;
    let floor = 1e2 * f64::EPSILON;
    let pts: Vec<(f64, f64)> = t.iter().zip(e).filter(|(s, v)| **s >= t_end / 2.0 && **v > floor).map(|(s, v)| (*s, v.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let (mt, ml) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / k, acc.1 + p.1 / k));
    let num: f64 = pts.iter().map(|(s, l)| (s - mt) * (l - ml)).sum();
    let den: f64 = pts.iter().map(|(s, _)| (s - mt).powi(2)).sum();
    (den > 0.0).then(|| num / den)
}

/// Plant and observer integrated together, the observer driven by the plant output.
pub fn reconstruction_run<F>(
    plant: &StateSpace,
    obs: &Observer,
    input: F,
    x0: &[f64],
    xi0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Reconstruction, InvertError>
where
    F: Fn(f64) -> DVector<f64>,
{
    let (a, b, c, d) = (plant.a_r(), plant.b_r(), plant.c_r(), plant.d_r());
    let (nx, nxi) = (a.nrows(), obs.a.nrows());
    if obs.b.ncols() != c.nrows() {
        return Err(InvertError::SignalWidth { got: obs.b.ncols(), want: c.nrows() });
    }
    if xi0.len() != nxi {
        return Err(InvertError::StateWidth { got: xi0.len(), want: nxi });
    }
    // [x; ξ]' = [[A, 0], [B_o C, A_o]] [x; ξ] + [B; B_o D] u
    let mut big_a = RMat::zeros(nx + nxi, nx + nxi);
    big_a.view_mut((0, 0), (nx, nx)).copy_from(&a);
    big_a.view_mut((nx, 0), (nxi, nx)).copy_from(&(&obs.b * &c));
    big_a.view_mut((nx, nx), (nxi, nxi)).copy_from(&obs.a);
    let mut big_b = RMat::zeros(nx + nxi, b.ncols());
    big_b.view_mut((0, 0), (nx, b.ncols())).copy_from(&b);
    big_b.view_mut((nx, 0), (nxi, b.ncols())).copy_from(&(&obs.b * &d));
    let mut big_c = RMat::zeros(c.nrows(), nx + nxi);
    big_c.view_mut((0, 0), c.shape()).copy_from(&c);
    let z0: Vec<f64> = x0.iter().chain(xi0).cloned().collect();
    let run = simulate_matrices((&big_a, &big_b, &big_c, &d), &input, &z0, t_end, dt)?;
    let mut u_hat = Vec::with_capacity(run.t.len());
    let mut err = Vec::with_capacity(run.t.len());
    for k in 0..run.t.len() {
        let xi = DVector::from_column_slice(&run.x[k][nx..]);
        let y = DVector::from_column_slice(&run.y[k]);
        let uh = &obs.c * xi + &obs.d * &y;
        err.push((DVector::from_column_slice(&run.u[k]) - &uh).norm());
        u_hat.push(uh.as_slice().to_vec());
    }
    let unstable = !obs.is_hurwitz();
    let fitted_rate = if unstable { None } else { fit_decay_rate(&run.t, &err) };
    let plant_traj = Trajectory { x: run.x.iter().map(|z| z[..nx].to_vec()).collect(), ..run };
    Ok(Reconstruction {
        plant: plant_traj,
        u_hat,
        err_norm: err,
        observer_stability: obs.stability,
        fitted_rate,
        unstable_observer: unstable,
    })
}

/// Holds the listed outputs at zero by choosing `u_j = -(C x)_j`; other inputs follow `input`.
pub fn forced_zero_output<F>(ss: &StateSpace, forced: &[usize], input: F, x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory, InvertError>
where
    F: Fn(f64) -> DVector<f64>,
{
    check_unit_d(ss)?;
    let (a, b, c) = (ss.a_r(), ss.b_r(), ss.c_r());
    let k = c.nrows();
    if let Some(&bad) = forced.iter().find(|&&j| j >= k) {
        return Err(InvertError::SignalWidth { got: bad + 1, want: k });
    }
    checked(&input, k)?;
    let mut mask = RMat::zeros(k, k);
    for &j in forced {
        mask[(j, j)] = 1.0;
    }
    let keep = RMat::identity(k, k) - &mask;
    // u = keep·w(t) - mask·C x
    let a_cl = &a - &b * &mask * &c;
    let b_cl = &b * &keep;
    let mut tr = simulate_matrices((&a_cl, &b_cl, &c, &RMat::identity(k, k)), &input, x0, t_end, dt)?;
    for i in 0..tr.t.len() {
        let x = DVector::from_column_slice(&tr.x[i]);
        let w = DVector::from_column_slice(&tr.u[i]);
        let u = &keep * &w - &mask * (&c * &x);
        tr.y[i] = (&c * &x + &u).as_slice().to_vec();
        tr.u[i] = u.as_slice().to_vec();
    }
    Ok(tr)
}

/// `[sin(ω t)]`, `[cos(ω t)]`, constants and zero, one per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Waveform {
    Zero,
    Const(f64),
    Sin(f64),
    Cos(f64),
}

impl Waveform {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Waveform::Zero => 0.0,
            Waveform::Const(v) => v,
            Waveform::Sin(w) => (w * t).sin(),
            Waveform::Cos(w) => (w * t).cos(),
        }
    }
}

impl std::str::FromStr for Waveform {
    type Err = String;

    /// `0`, `const:v`, `sin:w`, `cos:w`.
    fn from_str(s: &str) -> Result<Waveform, String> {
        let s = s.trim();
        if s == "0" || s == "zero" {
            return Ok(Waveform::Zero);
        }
        let (kind, val) = s.split_once(':').ok_or_else(|| format!("bad waveform '{s}'"))?;
        let v: f64 = val.parse().map_err(|_| format!("bad number in waveform '{s}'"))?;
        match kind {
            "const" => Ok(Waveform::Const(v)),
            "sin" => Ok(Waveform::Sin(v)),
            "cos" => Ok(Waveform::Cos(v)),
            _ => Err(format!("unknown waveform '{kind}'")),
        }
    }
}

pub fn signal(ws: &[Waveform]) -> impl Fn(f64) -> DVector<f64> + '_ {
    move |t| DVector::from_iterator(ws.len(), ws.iter().map(|w| w.at(t)))
}
