//! Beamsplitter feedback network around diagonal SISO plants: closed loop,
//! sensitivity, their sum, squeezing ratios and ideal-squeezing solvers.

use crate::matcore::{c, CMat, C64};
use crate::model::{build_complex_ss, quadrature_transfer_at, to_quadrature, ModelError, SlhParams, StateSpace};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("beamsplitter parameter {0} is outside (-1, 1)")]
    AlphaOutOfRange(f64),
    #[error("no ideal-squeezing solution: {reason} (value {value})")]
    Infeasible { value: C64, reason: &'static str },
    #[error("kappa must be positive, got {0}")]
    BadKappa(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    /// `+1` for q, `-1` for p.
    fn sign(self) -> f64 {
        match self {
            Quadrature::Q => 1.0,
            Quadrature::P => -1.0,
        }
    }
}

impl std::str::FromStr for Quadrature {
    type Err = String;
    fn from_str(s: &str) -> Result<Quadrature, String> {
        match s {
            "q" => Ok(Quadrature::Q),
            "p" => Ok(Quadrature::P),
            _ => Err(format!("quadrature must be q or p, got '{s}'")),
        }
    }
}

/// Which factor vanished.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    PlantPole,
    /// `1 + α G K`
    LoopDenominator,
    /// `α + G K`
    SqueezeFactor,
    /// `G K = ±1`, where the sum formula is not used.
    UnitLoopGain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Eval {
    Finite(C64),
    Infinite(Factor),
    Excluded(Factor),
}

impl Eval {
    pub fn value(self) -> Option<C64> {
        match self {
            Eval::Finite(z) => Some(z),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Eval::Finite(_))
    }

    /// `|value|`, with `inf` for divergences and `nan` for exclusions.
    pub fn abs(self) -> f64 {
        match self {
            Eval::Finite(z) => z.norm(),
            Eval::Infinite(_) => f64::INFINITY,
            Eval::Excluded(_) => f64::NAN,
        }
    }
}

fn vanishes(den: C64, scale: f64) -> bool {
    den.norm() <= 4.0 * f64::EPSILON * scale
}

fn ratio(num: C64, den: C64, scale: f64, f: Factor) -> Eval {
    if vanishes(den, scale) {
        Eval::Infinite(f)
    } else {
        Eval::Finite(num / den)
    }
}

/// SISO plant with `G_q = (s + iΩ₊ - ½ℂ_qℂ_p)/(s + iΩ₊ + ½ℂ_qℂ_p)` and `G_p` with `-iΩ₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagonalPlant {
    pub omega_plus: C64,
    pub cq: f64,
    pub cp: f64,
}

impl DiagonalPlant {
    /// `G = 1`.
    pub fn unit() -> DiagonalPlant {
        DiagonalPlant { omega_plus: c(0.0, 0.0), cq: 0.0, cp: 0.0 }
    }

    fn half_gain(&self) -> f64 {
        0.5 * self.cq * self.cp
    }

    fn shift(&self, j: Quadrature) -> C64 {
        c(0.0, j.sign()) * self.omega_plus
    }

    /// `(numerator, denominator)` of `G_j(s)`.
    pub fn factors(&self, j: Quadrature, s: C64) -> (C64, C64) {
        if self.half_gain() == 0.0 {
            return (c(1.0, 0.0), c(1.0, 0.0));
        }
        let x = s + self.shift(j);
        (x - self.half_gain(), x + self.half_gain())
    }

    pub fn tf(&self, j: Quadrature, s: C64) -> Eval {
        let (n, d) = self.factors(j, s);
        ratio(n, d, s.norm() + self.omega_plus.norm() + self.half_gain().abs(), Factor::PlantPole)
    }

    /// One-mode realization with `Ω₋ = 0`, `C₋ = (ℂ_q + ℂ_p)/2`, `C₊ = (ℂ_q - ℂ_p)/2`.
    pub fn state_space(&self) -> Result<StateSpace, NetworkError> {
        let one = |z: C64| CMat::from_element(1, 1, z);
        let p = SlhParams::new(
            one(c(0.0, 0.0)),
            one(self.omega_plus),
            one(c(0.5 * (self.cq + self.cp), 0.0)),
            one(c(0.5 * (self.cq - self.cp), 0.0)),
        )?;
        Ok(to_quadrature(&build_complex_ss(&p)?)?)
    }
}

pub fn plant_tf(p: &DiagonalPlant, s: C64) -> (Eval, Eval) {
    (p.tf(Quadrature::Q, s), p.tf(Quadrature::P, s))
}

/// Parametric amplifier with decay `κ` and pump `ε`: `Ω₊ = iε/2`, `ℂ_q = ℂ_p = √κ`.
pub fn dpa(kappa: f64, epsilon: f64) -> Result<(DiagonalPlant, StateSpace), NetworkError> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(NetworkError::BadKappa(kappa));
    }
    let p = DiagonalPlant { omega_plus: c(0.0, epsilon / 2.0), cq: kappa.sqrt(), cp: kappa.sqrt() };
    let i2 = crate::matcore::RMat::identity(2, 2);
    let a = crate::model::rmat(2, 2, &[-(kappa - epsilon) / 2.0, 0.0, 0.0, -(kappa + epsilon) / 2.0]);
    let ss = StateSpace::quadrature(a, &i2 * -kappa.sqrt(), &i2 * kappa.sqrt(), i2)?;
    Ok((p, ss))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Network {
    pub plant: DiagonalPlant,
    pub controller: DiagonalPlant,
    pub alpha: f64,
    pub beta: f64,
}

/// `G K = N / D` for one quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopGain {
    pub n: C64,
    pub d: C64,
}

impl LoopGain {
    pub fn of(gk: C64) -> LoopGain {
        LoopGain { n: gk, d: c(1.0, 0.0) }
    }

    fn scale(&self) -> f64 {
        self.n.norm() + self.d.norm()
    }
}

/// `(α + GK)/(1 + α GK)`.
pub fn t_of(l: LoopGain, alpha: f64) -> Eval {
    ratio(l.n + l.d * alpha, l.d + l.n * alpha, l.scale(), Factor::LoopDenominator)
}

/// `β² GK / ((1 + α GK)(α + GK))`.
pub fn s_of(l: LoopGain, alpha: f64) -> Eval {
    let beta2 = 1.0 - alpha * alpha;
    let (den1, den2) = (l.d + l.n * alpha, l.n + l.d * alpha);
    if vanishes(den1, l.scale()) {
        return Eval::Infinite(Factor::LoopDenominator);
    }
    if vanishes(den2, l.scale()) {
        return Eval::Infinite(Factor::SqueezeFactor);
    }
    Eval::Finite(l.n * l.d * beta2 / (den1 * den2))
}

/// `((GK + (1+2α-α²)/2)² - (1+4α-α²)(1-α²)/4) / ((1 + α GK)(α + GK))`.
pub fn spt_of(l: LoopGain, alpha: f64) -> Eval {
    if vanishes(l.n - l.d, l.scale()) || vanishes(l.n + l.d, l.scale()) {
        return Eval::Excluded(Factor::UnitLoopGain);
    }
    let a2 = alpha * alpha;
    let c1 = (1.0 + 2.0 * alpha - a2) / 2.0;
    let c2 = (1.0 + 4.0 * alpha - a2) * (1.0 - a2) / 4.0;
    let num = (l.n + l.d * c1) * (l.n + l.d * c1) - l.d * l.d * c2;
    let (den1, den2) = (l.d + l.n * alpha, l.n + l.d * alpha);
    if vanishes(den1, l.scale()) {
        return Eval::Infinite(Factor::LoopDenominator);
    }
    if vanishes(den2, l.scale()) {
        return Eval::Infinite(Factor::SqueezeFactor);
    }
    Eval::Finite(num / (den1 * den2))
}

impl Network {
    pub fn new(plant: DiagonalPlant, controller: DiagonalPlant, alpha: f64) -> Result<Network, NetworkError> {
        if !(alpha > -1.0 && alpha < 1.0) {
            return Err(NetworkError::AlphaOutOfRange(alpha));
        }
        Ok(Network { plant, controller, alpha, beta: (1.0 - alpha * alpha).sqrt() })
    }

    pub fn loop_gain(&self, j: Quadrature, s: C64) -> LoopGain {
        let (ng, dg) = self.plant.factors(j, s);
        let (nk, dk) = self.controller.factors(j, s);
        LoopGain { n: ng * nk, d: dg * dk }
    }

    pub fn t(&self, j: Quadrature, s: C64) -> Eval {
        t_of(self.loop_gain(j, s), self.alpha)
    }

    pub fn s(&self, j: Quadrature, s: C64) -> Eval {
        s_of(self.loop_gain(j, s), self.alpha)
    }

    pub fn spt(&self, j: Quadrature, s: C64) -> Eval {
        spt_of(self.loop_gain(j, s), self.alpha)
    }

    /// Roots `s` of `G_j(s) K_j(s) = f`.
    pub fn solve_loop_gain(&self, j: Quadrature, f: C64) -> Vec<C64> {
        let (a, g) = (self.plant.shift(j), self.plant.half_gain());
        let (b, h) = (self.controller.shift(j), self.controller.half_gain());
        // (s + a - g)(s + b - h) - f (s + a + g)(s + b + h) = 0
        let one = c(1.0, 0.0);
        let q2 = one - f;
        let q1 = (a - g) + (b - h) - f * ((a + g) + (b + h));
        let q0 = (a - g) * (b - h) - f * (a + g) * (b + h);
        quadratic_roots(q2, q1, q0)
    }
}

fn quadratic_roots(a: C64, b: C64, c0: C64) -> Vec<C64> {
    let scale = a.norm().max(b.norm()).max(c0.norm());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.norm() <= 1e-14 * scale {
        return if b.norm() <= 1e-14 * scale { Vec::new() } else { vec![-c0 / b] };
    }
    let disc = (b * b - a * c0 * 4.0).sqrt();
    let q = if (b.conj() * disc).re >= 0.0 { (b + disc) * -0.5 } else { (b - disc) * -0.5 };
    if q.norm() == 0.0 {
        return vec![c(0.0, 0.0), c(0.0, 0.0)];
    }
    vec![q / a, c0 / q]
}

pub fn closed_loop_tf(net: &Network, s: C64) -> (Eval, Eval) {
    (net.t(Quadrature::Q, s), net.t(Quadrature::P, s))
}

pub fn sensitivity(net: &Network, s: C64) -> (Eval, Eval) {
    (net.s(Quadrature::Q, s), net.s(Quadrature::P, s))
}

pub fn s_plus_t(net: &Network, s: C64) -> (Eval, Eval) {
    (net.spt(Quadrature::Q, s), net.spt(Quadrature::P, s))
}

/// `|T_j(iω)|²`.
pub fn squeezing_ratio(net: &Network, j: Quadrature, omega: f64) -> Eval {
    match net.t(j, c(0.0, omega)) {
        Eval::Finite(z) => Eval::Finite(c(z.norm_sqr(), 0.0)),
        other => other,
    }
}

/// `α = -G_j(0)` with `K = 1`, when real and inside `(-1, 1)`.
pub fn solve_bs_alpha(plant: &DiagonalPlant, j: Quadrature) -> Result<f64, NetworkError> {
    let (n, d) = plant.factors(j, c(0.0, 0.0));
    if d.norm() == 0.0 {
        return Err(NetworkError::Infeasible { value: c(f64::INFINITY, 0.0), reason: "plant has a pole at the origin" });
    }
    let a = -n / d;
    if a.im.abs() > 1e-12 * a.norm().max(1.0) {
        return Err(NetworkError::Infeasible { value: a, reason: "beamsplitter parameter is not real" });
    }
    if !(a.re > -1.0 && a.re < 1.0) {
        return Err(NetworkError::Infeasible { value: a, reason: "beamsplitter parameter is outside (-1, 1)" });
    }
    Ok(a.re)
}

/// Controller `Ω₊′` sharing `ℂ_q, ℂ_p` with the plant that zeroes `T_j(0)`:
/// `Ω₊′ = (∓iℂ/2)((1+α)ℂ ∓ 2(1-α)iΩ₊)/((1-α)ℂ ∓ 2(1+α)iΩ₊)`, `ℂ = ℂ_qℂ_p`, upper sign for q.
pub fn solve_pump(plant: &DiagonalPlant, alpha: f64, j: Quadrature) -> Result<C64, NetworkError> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(NetworkError::AlphaOutOfRange(alpha));
    }
    let cc = plant.cq * plant.cp;
    let sg = j.sign();
    let i = c(0.0, 1.0);
    let num = (1.0 + alpha) * cc - i * plant.omega_plus * (2.0 * (1.0 - alpha) * sg);
    let den = (1.0 - alpha) * cc - i * plant.omega_plus * (2.0 * (1.0 + alpha) * sg);
    if vanishes(den, cc.abs() + plant.omega_plus.norm()) {
        return Err(NetworkError::Infeasible { value: den, reason: "pump formula denominator vanishes" });
    }
    Ok(-i * (sg * cc / 2.0) * num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoDpaCheck {
    /// `κ₁ε₂ + κ₂ε₁ ± (1+α)/(1-α)(κ₁κ₂ + ε₁ε₂)`, `+` for q.
    pub condition_residual: f64,
    pub satisfied: bool,
    /// `|T_j(0)|` from the two-amplifier closed form.
    pub t0: f64,
    pub tol: f64,
}

/// `(1+α)[x₁x₂ + k₁k₂] - (1-α)[k₁x₂ + k₂x₁]` over the same with `+`, `x_i = s ∓ ε_i/2`, `k_i = κ_i/2`.
pub fn two_dpa_t(k1: f64, e1: f64, k2: f64, e2: f64, alpha: f64, j: Quadrature, s: C64) -> Eval {
    let (x1, x2) = (s - j.sign() * e1 / 2.0, s - j.sign() * e2 / 2.0);
    let (h1, h2) = (k1 / 2.0, k2 / 2.0);
    let p = x1 * x2 + h1 * h2;
    let q = x1 * h2 + x2 * h1;
    let den = p * (1.0 + alpha) + q * (1.0 - alpha);
    ratio(p * (1.0 + alpha) - q * (1.0 - alpha), den, p.norm() + q.norm(), Factor::LoopDenominator)
}

/// Sensitivity of the two-amplifier network in expanded form.
pub fn two_dpa_s(k1: f64, e1: f64, k2: f64, e2: f64, alpha: f64, j: Quadrature, s: C64) -> Eval {
    let (x1, x2) = (s - j.sign() * e1 / 2.0, s - j.sign() * e2 / 2.0);
    let (h1, h2) = (k1 / 2.0, k2 / 2.0);
    let m1 = x1 * x1 - h1 * h1;
    let m2 = x2 * x2 - h2 * h2;
    let p1 = x1 * x1 + h1 * h1;
    let p2 = x2 * x2 + h2 * h2;
    let num = m1 * m2 * (1.0 - alpha * alpha);
    let den = m1 * m2 * (1.0 + alpha * alpha) + (p1 * p2 + x1 * x2 * (k1 * k2)) * (2.0 * alpha);
    ratio(num, den, (p1 * p2).norm() + (x1 * x2 * k1 * k2).norm(), Factor::SqueezeFactor)
}

/// `ε₂` that satisfies the two-amplifier ideal-squeezing relation for given `κ₁, ε₁, κ₂, α`.
pub fn solve_two_dpa_epsilon2(k1: f64, e1: f64, k2: f64, alpha: f64, j: Quadrature) -> Result<f64, NetworkError> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(NetworkError::AlphaOutOfRange(alpha));
    }
    let r = -j.sign() * (1.0 + alpha) / (1.0 - alpha);
    let den = k1 - r * e1;
    if den.abs() <= 4.0 * f64::EPSILON * (k1.abs() + (r * e1).abs()) {
        return Err(NetworkError::Infeasible { value: c(den, 0.0), reason: "relation is independent of the second pump" });
    }
    Ok((r * k1 * k2 - k2 * e1) / den)
}

pub fn two_dpa_ideal_check(k1: f64, e1: f64, k2: f64, e2: f64, alpha: f64, j: Quadrature) -> Result<TwoDpaCheck, NetworkError> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(NetworkError::AlphaOutOfRange(alpha));
    }
    let r = (1.0 + alpha) / (1.0 - alpha);
    let lhs = k1 * e2 + k2 * e1;
    let rhs = -j.sign() * r * (k1 * k2 + e1 * e2);
    let residual = (lhs - rhs).abs();
    let tol = 1e-9 * (lhs.abs() + rhs.abs()).max(1.0);
    let t0 = two_dpa_t(k1, e1, k2, e2, alpha, j, c(0.0, 0.0)).abs();
    Ok(TwoDpaCheck { condition_residual: residual, satisfied: residual <= tol, t0, tol })
}

/// Closed loop built from realizations: loop `L = G K` in series, beamsplitter
/// `[[α, β], [β, -α]]` mixing the input with the loop return.
pub fn closed_loop_state_space(g: &StateSpace, k: &StateSpace, alpha: f64) -> Result<StateSpace, NetworkError> {
    use crate::matcore::RMat;
    let (a1, b1, c1) = (g.a_r(), g.b_r(), g.c_r());
    let (a2, b2, c2) = (k.a_r(), k.b_r(), k.c_r());
    let (n1, n2, m) = (a1.nrows(), a2.nrows(), b1.ncols());
    let mut al = RMat::zeros(n1 + n2, n1 + n2);
    al.view_mut((0, 0), (n1, n1)).copy_from(&a1);
    al.view_mut((0, n1), (n1, n2)).copy_from(&(&b1 * &c2));
    al.view_mut((n1, n1), (n2, n2)).copy_from(&a2);
    let mut bl = RMat::zeros(n1 + n2, m);
    bl.view_mut((0, 0), (n1, m)).copy_from(&b1);
    bl.view_mut((n1, 0), (n2, m)).copy_from(&b2);
    let mut cl = RMat::zeros(m, n1 + n2);
    cl.view_mut((0, 0), (m, n1)).copy_from(&c1);
    cl.view_mut((0, n1), (m, n2)).copy_from(&c2);
    let beta = (1.0 - alpha * alpha).sqrt();
    let g1 = 1.0 / (1.0 + alpha);
    let a = &al - &bl * &cl * (alpha * g1);
    let b = &bl * (beta * g1);
    let cc = &cl * (beta * g1);
    // (q₁, p₁, q₂, p₂) to (q₁, q₂, p₁, p₂)
    let (h1, h2) = (n1 / 2, n2 / 2);
    let order: Vec<usize> = (0..h1).chain(n1..n1 + h2).chain(h1..n1).chain(n1 + h2..n1 + n2).collect();
    let p = RMat::from_fn(n1 + n2, n1 + n2, |i, j| if order[i] == j { 1.0 } else { 0.0 });
    Ok(StateSpace::quadrature(&p * a * p.transpose(), &p * b, cc * p.transpose(), RMat::identity(m, m))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

impl std::str::FromStr for Scale {
    type Err = String;
    fn from_str(s: &str) -> Result<Scale, String> {
        match s {
            "linear" | "lin" => Ok(Scale::Linear),
            "log" => Ok(Scale::Log),
            _ => Err(format!("scale must be linear or log, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub omega: f64,
    pub tq: Eval,
    pub tp: Eval,
    pub sq: Eval,
    pub sp: Eval,
    pub spt_q: Eval,
    pub spt_p: Eval,
    pub ratio_q: Eval,
    pub ratio_p: Eval,
}

pub const SWEEP_HEADER: [&str; 16] = [
    "omega", "Tq_re", "Tq_im", "Tp_re", "Tp_im", "Sq_re", "Sq_im", "Sp_re", "Sp_im", "SpTq_re", "SpTq_im", "SpTp_re", "SpTp_im",
    "ratio_q", "ratio_p", "flags",
];

impl SweepPoint {
    pub fn at(net: &Network, omega: f64) -> SweepPoint {
        let s = c(0.0, omega);
        SweepPoint {
            omega,
            tq: net.t(Quadrature::Q, s),
            tp: net.t(Quadrature::P, s),
            sq: net.s(Quadrature::Q, s),
            sp: net.s(Quadrature::P, s),
            spt_q: net.spt(Quadrature::Q, s),
            spt_p: net.spt(Quadrature::P, s),
            ratio_q: squeezing_ratio(net, Quadrature::Q, omega),
            ratio_p: squeezing_ratio(net, Quadrature::P, omega),
        }
    }

    /// Bit `k` set when the `k`-th of `Tq, Tp, Sq, Sp, SpTq, SpTp, ratio_q, ratio_p` is not finite.
    pub fn flags(&self) -> u32 {
        [self.tq, self.tp, self.sq, self.sp, self.spt_q, self.spt_p, self.ratio_q, self.ratio_p]
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_finite())
            .map(|(k, _)| 1u32 << k)
            .sum()
    }

    pub fn csv_record(&self) -> Vec<String> {
        fn num(x: f64) -> String {
            format!("{x:e}")
        }
        fn pair(e: Eval) -> [String; 2] {
            match e {
                Eval::Finite(z) => [num(z.re), num(z.im)],
                Eval::Infinite(_) => ["inf".into(), "inf".into()],
                Eval::Excluded(_) => ["nan".into(), "nan".into()],
            }
        }
        fn single(e: Eval) -> String {
            match e {
                Eval::Finite(z) => num(z.re),
                Eval::Infinite(_) => "inf".into(),
                Eval::Excluded(_) => "nan".into(),
            }
        }
        let mut r = vec![num(self.omega)];
        for e in [self.tq, self.tp, self.sq, self.sp, self.spt_q, self.spt_p] {
            r.extend(pair(e));
        }
        r.push(single(self.ratio_q));
        r.push(single(self.ratio_p));
        r.push(self.flags().to_string());
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

pub fn grid(omega_min: f64, omega_max: f64, points: usize, scale: Scale) -> Result<Vec<f64>, NetworkError> {
    if points < 2 {
        return Err(NetworkError::InvalidGrid(format!("need at least 2 points, got {points}")));
    }
    if !(omega_min.is_finite() && omega_max.is_finite() && omega_min < omega_max) {
        return Err(NetworkError::InvalidGrid(format!("need finite omega_min < omega_max, got {omega_min}, {omega_max}")));
    }
    let last = (points - 1) as f64;
    match scale {
        Scale::Linear => Ok((0..points).map(|k| omega_min + (omega_max - omega_min) * k as f64 / last).collect()),
        Scale::Log => {
            if omega_min <= 0.0 {
                return Err(NetworkError::InvalidGrid(format!("log grid needs omega_min > 0, got {omega_min}")));
            }
            let (l0, l1) = (omega_min.ln(), omega_max.ln());
            let mut g: Vec<f64> = (0..points).map(|k| (l0 + (l1 - l0) * k as f64 / last).exp()).collect();
            g[0] = omega_min;
            g[points - 1] = omega_max;
            Ok(g)
        }
    }
}

pub fn sweep(net: &Network, omega_min: f64, omega_max: f64, points: usize, scale: Scale) -> Result<SweepResult, NetworkError> {
    let g = grid(omega_min, omega_max, points, scale)?;
    Ok(SweepResult { points: crate::par::map(&g, |w| SweepPoint::at(net, *w)) })
}

/// Quadrature transfer of a realization at `s`, diagonal entries.
pub fn realized_diagonal(ss: &StateSpace, s: C64) -> Option<(C64, C64)> {
    let g = quadrature_transfer_at(ss, s).ok()?;
    Some((g[(0, 0)], g[(1, 1)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sample_points;
    use crate::model::check_physical_realizability;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fin(e: Eval) -> C64 {
        e.value().expect("finite")
    }

    fn pts(seed: u64) -> Vec<C64> {
        sample_points(&mut ChaCha8Rng::seed_from_u64(seed), 10)
    }

    #[test]
    fn dpa_plant_matches_closed_form_and_realization() {
        let (k, e) = (2.0, 1.0);
        let (p, ss) = dpa(k, e).unwrap();
        assert!(check_physical_realizability(&ss, 1e-12).passed);
        for s in pts(1) {
            let gq = (s - e / 2.0 - k / 2.0) / (s - e / 2.0 + k / 2.0);
            let gp = (s + e / 2.0 - k / 2.0) / (s + e / 2.0 + k / 2.0);
            let (q, pp) = plant_tf(&p, s);
            assert!((fin(q) - gq).norm() < 1e-14 && (fin(pp) - gp).norm() < 1e-14);
            let (rq, rp) = realized_diagonal(&ss, s).unwrap();
            assert!((rq - gq).norm() < 1e-12 && (rp - gp).norm() < 1e-12);
            let (sq, sp) = realized_diagonal(&p.state_space().unwrap(), s).unwrap();
            assert!((sq - gq).norm() < 1e-12 && (sp - gp).norm() < 1e-12);
            // duality
            assert!((fin(p.tf(Quadrature::Q, s)) * fin(p.tf(Quadrature::P, -s)) - 1.0).norm() < 1e-12);
        }
        let (_, ss) = dpa(2.0, 0.0).unwrap();
        assert_eq!(ss.a_r(), -crate::matcore::RMat::identity(2, 2));
        let (_, ss) = dpa(2.0, 2.0).unwrap();
        assert_eq!(ss.a_r()[(0, 0)], 0.0);
        assert!(dpa(0.0, 1.0).is_err());
        assert!(matches!(p.tf(Quadrature::Q, c(e / 2.0 - k / 2.0, 0.0)), Eval::Infinite(Factor::PlantPole)));
    }

    #[test]
    fn uncoupled_plant_is_unit() {
        let p = DiagonalPlant { omega_plus: c(0.0, 0.3), cq: 1.0, cp: 0.0 };
        for s in pts(2) {
            assert_eq!(plant_tf(&p, s), (Eval::Finite(c(1.0, 0.0)), Eval::Finite(c(1.0, 0.0))));
        }
    }

    #[test]
    fn dpa_critical_beamsplitter() {
        let (p, _) = dpa(2.0, 1.0).unwrap();
        let alpha = solve_bs_alpha(&p, Quadrature::P).unwrap();
        assert!((alpha - 1.0 / 3.0).abs() < 1e-15);
        let net = Network::new(p, DiagonalPlant::unit(), 1.0 / 3.0).unwrap();
        assert!(net.t(Quadrature::P, c(0.0, 0.0)).abs() < 1e-10);
        assert!(net.t(Quadrature::Q, c(0.0, 1e-8)).abs() > 1e6);
        assert!(net.s(Quadrature::P, c(0.0, 1e-8)).abs() > 1e6);
        assert!(squeezing_ratio(&net, Quadrature::Q, 1e-8).abs() > 1e12);
        // closed form for K = 1: ((1+α)(s+ε/2) - (1-α)κ/2)/((1+α)(s+ε/2) + (1-α)κ/2) in p
        for s in pts(3) {
            let a = 1.0 / 3.0;
            let x = s + 0.5;
            let want = (x * (1.0 + a) - (1.0 - a)) / (x * (1.0 + a) + (1.0 - a));
            assert!((fin(net.t(Quadrature::P, s)) - want).norm() < 1e-13);
        }
    }

    #[test]
    fn bs_alpha_infeasible_cases() {
        let (p, _) = dpa(2.0, 0.0).unwrap();
        match solve_bs_alpha(&p, Quadrature::P) {
            Err(NetworkError::Infeasible { value, .. }) => assert_eq!(value, c(1.0, 0.0)),
            other => panic!("{other:?}"),
        }
        let p = DiagonalPlant { omega_plus: c(0.0, 0.0), cq: 1.0, cp: 2.0 };
        assert!(solve_bs_alpha(&p, Quadrature::Q).is_err());
        // real detuning makes α complex
        let p = DiagonalPlant { omega_plus: c(0.4, 0.0), cq: 1.0, cp: 1.0 };
        assert!(matches!(solve_bs_alpha(&p, Quadrature::Q), Err(NetworkError::Infeasible { reason, .. }) if reason.contains("not real")));
    }

    #[test]
    fn feasible_alpha_zeroes_t_and_blows_up_s() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut hits = 0;
        for _ in 0..200 {
            let p = DiagonalPlant { omega_plus: c(0.0, rng.random_range(-2.0..2.0)), cq: rng.random_range(0.2..2.0), cp: rng.random_range(0.2..2.0) };
            for j in [Quadrature::Q, Quadrature::P] {
                if let Ok(a) = solve_bs_alpha(&p, j) {
                    let net = Network::new(p, DiagonalPlant::unit(), a).unwrap();
                    assert!(net.t(j, c(0.0, 0.0)).abs() < 1e-9);
                    let s0 = net.s(j, c(0.0, 0.0));
                    assert!(!s0.is_finite() || 1.0 / s0.abs() < 1e-6);
                    hits += 1;
                }
            }
        }
        assert!(hits > 50);
    }

    #[test]
    fn pump_solver_zeroes_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let p = DiagonalPlant { omega_plus: c(0.0, rng.random_range(-1.0..1.0)), cq: rng.random_range(0.5..1.5), cp: rng.random_range(0.5..1.5) };
            let alpha = rng.random_range(-0.9..0.9);
            for j in [Quadrature::Q, Quadrature::P] {
                let op = solve_pump(&p, alpha, j).unwrap();
                let k = DiagonalPlant { omega_plus: op, ..p };
                let net = Network::new(p, k, alpha).unwrap();
                assert!(net.t(j, c(0.0, 0.0)).abs() < 1e-9, "{:?}", net.t(j, c(0.0, 0.0)));
            }
        }
        let (p, _) = dpa(2.0, 1.0).unwrap();
        assert!(solve_pump(&p, 1.0, Quadrature::Q).is_err());
        // plant already ideal alone: the controller must keep T_p(0) at zero
        let (p, _) = dpa(2.0, 2.0).unwrap();
        let op = solve_pump(&p, 0.2, Quadrature::P).unwrap();
        let net = Network::new(p, DiagonalPlant { omega_plus: op, ..p }, 0.2).unwrap();
        assert!(net.t(Quadrature::P, c(0.0, 0.0)).abs() < 1e-9);
    }

    #[test]
    fn limit_items() {
        let gk = LoopGain::of(c(0.3, -0.7));
        for sgn in [1.0, -1.0] {
            let a = sgn * (1.0 - 1e-12);
            assert!(fin(s_of(gk, a)).norm() < 1e-9);
            assert!((fin(t_of(gk, a)) - sgn).norm() < 1e-9);
            assert!((fin(spt_of(gk, a)) - sgn).norm() < 1e-9);
        }
        assert!((fin(spt_of(gk, 0.0)) - (gk.n + 1.0)).norm() < 1e-14);
        // α + GK → 0 and 1 + α GK → 0
        let a = 0.4;
        assert!(s_of(LoopGain::of(c(-a + 1e-13, 0.0)), a).abs() > 1e9);
        assert!(s_of(LoopGain::of(c(-1.0 / a + 1e-13, 0.0)), a).abs() > 1e9);
        assert!(matches!(s_of(LoopGain::of(c(-0.5, 0.0)), 0.5), Eval::Infinite(Factor::SqueezeFactor)));
        assert!(matches!(spt_of(LoopGain::of(c(1.0, 0.0)), 0.5), Eval::Excluded(Factor::UnitLoopGain)));
        assert_eq!(t_of(LoopGain::of(c(1.0, 0.0)), 0.5), Eval::Finite(c(1.0, 0.0)));
    }

    #[test]
    fn sum_value_at_solved_frequency() {
        let (p, _) = dpa(2.0, 1.0).unwrap();
        let k = DiagonalPlant { omega_plus: c(0.0, 0.2), cq: 0.8, cp: 1.1 };
        for alpha in [-0.6, -0.1, 0.25, 0.7, 2.0 - 5f64.sqrt()] {
            let net = Network::new(p, k, alpha).unwrap();
            let f = -(1.0 + 2.0 * alpha - alpha * alpha) / 2.0;
            let want = (1.0 + 4.0 * alpha - alpha * alpha) / ((2.0 - alpha) * (1.0 - alpha * alpha));
            for j in [Quadrature::Q, Quadrature::P] {
                let roots = net.solve_loop_gain(j, c(f, 0.0));
                assert_eq!(roots.len(), 2);
                for s0 in roots {
                    let l = net.loop_gain(j, s0);
                    assert!((l.n / l.d - f).norm() < 1e-12);
                    assert!((fin(net.spt(j, s0)) - want).norm() < 1e-8);
                }
            }
        }
        assert!(((1.0 + 4.0 * (2.0 - 5f64.sqrt())) - (2.0 - 5f64.sqrt()).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn sum_vanishes_at_root_gain() {
        let (p, _) = dpa(1.5, 0.4).unwrap();
        let k = DiagonalPlant { omega_plus: c(0.0, -0.3), cq: 1.0, cp: 0.9 };
        for alpha in [0.1f64, 0.5] {
            let disc = ((1.0 + 4.0 * alpha - alpha * alpha) * (1.0 - alpha * alpha)).sqrt();
            let net = Network::new(p, k, alpha).unwrap();
            for sg in [1.0, -1.0] {
                let f = (alpha * alpha - 2.0 * alpha - 1.0 + sg * disc) / 2.0;
                for s0 in net.solve_loop_gain(Quadrature::Q, c(f, 0.0)) {
                    assert!(net.spt(Quadrature::Q, s0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn two_dpa_closed_forms_match_generic_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let (k1, e1, k2, e2) = (rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0));
            let alpha = rng.random_range(-0.9..0.9);
            let net = Network::new(dpa(k1, e1).unwrap().0, dpa(k2, e2).unwrap().0, alpha).unwrap();
            let cl = closed_loop_state_space(&dpa(k1, e1).unwrap().1, &dpa(k2, e2).unwrap().1, alpha).unwrap();
            assert!(check_physical_realizability(&cl, 1e-10).passed);
            for s in pts(9) {
                for j in [Quadrature::Q, Quadrature::P] {
                    let t = fin(two_dpa_t(k1, e1, k2, e2, alpha, j, s));
                    assert!((t - fin(net.t(j, s))).norm() < 1e-10);
                    let sv = fin(two_dpa_s(k1, e1, k2, e2, alpha, j, s));
                    assert!((sv - fin(net.s(j, s))).norm() < 1e-9 * (1.0 + sv.norm()));
                }
                let (tq, tp) = realized_diagonal(&cl, s).unwrap();
                assert!((tq - fin(net.t(Quadrature::Q, s))).norm() < 1e-9);
                assert!((tp - fin(net.t(Quadrature::P, s))).norm() < 1e-9);
                let g = quadrature_transfer_at(&cl, s).unwrap();
                assert!(g[(0, 1)].norm() < 1e-12 && g[(1, 0)].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn two_dpa_relation() {
        let e2 = solve_two_dpa_epsilon2(1.0, 0.5, 1.0, 0.0, Quadrature::P).unwrap();
        assert!((e2 - 1.0).abs() < 1e-15);
        let ok = two_dpa_ideal_check(1.0, 0.5, 1.0, e2, 0.0, Quadrature::P).unwrap();
        assert!(ok.satisfied && ok.t0 < 1e-9);
        let bad = two_dpa_ideal_check(1.0, 0.5, 1.0, e2 * 1.01, 0.0, Quadrature::P).unwrap();
        assert!(!bad.satisfied && bad.t0 > 1e-4);
        let none = two_dpa_ideal_check(1.3, 0.0, 0.7, 0.0, 0.0, Quadrature::Q).unwrap();
        assert!(!none.satisfied && none.t0 > 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let (k1, e1, k2) = (rng.random_range(0.5..2.0), rng.random_range(-0.4..0.4), rng.random_range(0.5..2.0));
            let alpha = rng.random_range(-0.8..0.8);
            for j in [Quadrature::Q, Quadrature::P] {
                let e2 = solve_two_dpa_epsilon2(k1, e1, k2, alpha, j).unwrap();
                let chk = two_dpa_ideal_check(k1, e1, k2, e2, alpha, j).unwrap();
                assert!(chk.satisfied && chk.t0 < 1e-9, "{chk:?}");
            }
        }
    }

    #[test]
    fn sweep_behaviour() {
        let (p, _) = dpa(2.0, 1.0).unwrap();
        let net = Network::new(p, DiagonalPlant::unit(), 1.0 / 3.0).unwrap();
        let r = sweep(&net, 1e-4, 1e2, 200, Scale::Log).unwrap();
        assert_eq!(r.points.len(), 200);
        let rp: Vec<f64> = r.points.iter().map(|x| x.ratio_p.abs()).collect();
        let argmin = rp.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        assert_eq!(argmin, 0);
        assert!(rp[0] < 1e-6);
        for pt in r.points.iter().step_by(37) {
            assert_eq!(*pt, SweepPoint::at(&net, pt.omega));
        }
        let r = sweep(&net, -1.0, 1.0, 3, Scale::Linear).unwrap();
        assert_eq!(r.points[1].omega, 0.0);
        assert!(r.points[1].flags() != 0);
        assert!(r.points[1].csv_record().contains(&"inf".to_string()));
        assert_eq!(r.points[1].csv_record().len(), SWEEP_HEADER.len());
        let unit = Network::new(DiagonalPlant::unit(), DiagonalPlant::unit(), 0.2).unwrap();
        let r = sweep(&unit, 0.0, 5.0, 6, Scale::Linear).unwrap();
        assert!(r.points.iter().all(|x| x.tq == Eval::Finite(c(1.0, 0.0)) && x.tp == Eval::Finite(c(1.0, 0.0))));
        assert!(sweep(&net, 0.0, 1.0, 10, Scale::Log).is_err());
        assert!(sweep(&net, 0.0, 1.0, 1, Scale::Linear).is_err());
        assert!(Network::new(p, p, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn closed_loop_duality_and_sum(
            wp in -2.0f64..2.0, cq in 0.1f64..2.0, cp in 0.1f64..2.0,
            wk in -2.0f64..2.0, kq in 0.1f64..2.0, kp in 0.1f64..2.0,
            alpha in -0.95f64..0.95, sr in -2.0f64..2.0, si in -3.0f64..3.0,
        ) {
            let g = DiagonalPlant { omega_plus: c(0.0, wp), cq, cp };
            let k = DiagonalPlant { omega_plus: c(0.0, wk), cq: kq, cp: kp };
            let net = Network::new(g, k, alpha).unwrap();
            let s = c(sr, si);
            if let (Eval::Finite(tq), Eval::Finite(tp)) = (net.t(Quadrature::Q, s), net.t(Quadrature::P, -s)) {
                prop_assume!(tq.norm() < 1e6 && tp.norm() < 1e6);
                prop_assert!((tq * tp - 1.0).norm() < 1e-9);
            }
            for j in [Quadrature::Q, Quadrature::P] {
                if let (Eval::Finite(a), Eval::Finite(b), Eval::Finite(sum)) = (net.s(j, s), net.t(j, s), net.spt(j, s)) {
                    prop_assume!(a.norm() < 1e6);
                    prop_assert!((a + b - sum).norm() < 1e-10 * (1.0 + sum.norm()));
                }
            }
        }
    }
}
