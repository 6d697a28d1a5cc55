//! Envelope and phase functions of the Lewis–Riesenfeld trial solution.
//!
//! The trial spinor is `(F₁(t), F₂(t))ᵀ · exp[i(ξ₁x + ξ₂y + ξ₃x² + ξ₄y²)]`
//! with `F₁ = e^{−imt+q₁}`, `F₂ = e^{imt+q₂}`, constant `ξ₃, ξ₄` and
//!
//! ```text
//! ξ₁(t) = −i { κ eB/(4im) e^{2imt} + ηκ/(4im − 2γ) e^{(−γ+2im)t} },   ξ₂ = ξ₁/i.
//! ```
//!
//! Everything here works in natural units (`ħ = c = 1`).

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::ncmodel::NCParams;

const I: C64 = C64::new(0.0, 1.0);

fn check_mass(p: &NCParams, what: &str) -> Result<()> {
    p.require_natural_units(what)?;
    if p.mass == 0.0 {
        return Err(Error::SingularParameter(format!(
            "{what}: the closed form for the linear phase coefficient divides by the mass (1/m); m = 0 is singular"
        )));
    }
    Ok(())
}

/// `F₁(t), F₂(t)`: pure phase rotations with fixed moduli `e^{q₁}`, `e^{q₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinorEnvelope {
    pub q1: f64,
    pub q2: f64,
    pub mass: f64,
}

impl SpinorEnvelope {
    pub fn from_params(p: &NCParams) -> Self {
        Self { q1: p.q1, q2: p.q2, mass: p.mass }
    }

    pub fn f1(&self, t: f64) -> C64 {
        C64::new(self.q1, -self.mass * t).exp()
    }

    pub fn f2(&self, t: f64) -> C64 {
        C64::new(self.q2, self.mass * t).exp()
    }

    pub fn at(&self, t: f64) -> [C64; 2] {
        [self.f1(t), self.f2(t)]
    }

    pub fn derivative(&self, t: f64) -> [C64; 2] {
        [-I * self.mass * self.f1(t), I * self.mass * self.f2(t)]
    }
}

/// `(F₁(t), F₂(t))` in closed form.
pub fn f_closed(p: &NCParams, t: f64) -> Result<[C64; 2]> {
    p.require_natural_units("spinor envelope")?;
    Ok(SpinorEnvelope::from_params(p).at(t))
}

/// The phase coefficients `ξ₁ … ξ₄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiFunctions {
    pub kappa: f64,
    pub mass: f64,
    pub gamma: f64,
    pub eta: f64,
    /// `eB = l_B⁻²`.
    pub inv_lb2: f64,
    pub xi3: C64,
    pub xi4: C64,
}

impl XiFunctions {
    pub fn from_params(p: &NCParams, xi3: C64, xi4: C64) -> Result<Self> {
        check_mass(p, "phase coefficients")?;
        Ok(Self {
            kappa: p.kappa,
            mass: p.mass,
            gamma: p.gamma,
            eta: p.eta,
            inv_lb2: p.charge * p.b_field,
            xi3,
            xi4,
        })
    }

    /// `e^{(−γ+2im)t}`, the term contributed by the momentum deformation.
    pub fn nc_branch(&self, t: f64) -> C64 {
        C64::new(-self.gamma * t, 2.0 * self.mass * t).exp()
    }

    pub fn xi1(&self, t: f64) -> C64 {
        let m = self.mass;
        let commutative = self.kappa * self.inv_lb2 / (4.0 * I * m) * C64::new(0.0, 2.0 * m * t).exp();
        let deformed = self.eta * self.kappa / (C64::new(-2.0 * self.gamma, 4.0 * m)) * self.nc_branch(t);
        -I * (commutative + deformed)
    }

    pub fn xi2(&self, t: f64) -> C64 {
        self.xi1(t) / I
    }

    pub fn all(&self, t: f64) -> [C64; 4] {
        [self.xi1(t), self.xi2(t), self.xi3, self.xi4]
    }

    /// `dξ₁/dt` in closed form.
    pub fn xi1_dot(&self, t: f64) -> C64 {
        let m = self.mass;
        let f_eta_ratio = 0.5 * self.inv_lb2 * C64::new(0.0, 2.0 * m * t).exp() + 0.5 * self.eta * self.nc_branch(t);
        -I * self.kappa * f_eta_ratio
    }
}

/// `ξ₁(t), ξ₂(t)` in closed form.
pub fn xi_closed(p: &NCParams, t: f64) -> Result<(C64, C64)> {
    let xi = XiFunctions::from_params(p, C64::new(0.0, 0.0), C64::new(0.0, 0.0))?;
    Ok((xi.xi1(t), xi.xi2(t)))
}

/// State of the envelope/phase system: `ξ₁, ξ₂, ξ₃, ξ₄, F₁, F₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiState {
    pub xi: [C64; 4],
    pub f1: C64,
    pub f2: C64,
}

impl XiState {
    fn axpy(&self, h: f64, d: &XiState) -> XiState {
        let mut xi = self.xi;
        for k in 0..4 {
            xi[k] += d.xi[k] * h;
        }
        XiState { xi, f1: self.f1 + d.f1 * h, f2: self.f2 + d.f2 * h }
    }

    pub fn closed(p: &NCParams, xi: &XiFunctions, t: f64) -> XiState {
        let env = SpinorEnvelope::from_params(p);
        XiState { xi: xi.all(t), f1: env.f1(t), f2: env.f2(t) }
    }
}

/// Right-hand side of the envelope/phase system at `(t, state)`.
pub fn xi_ode_rhs(p: &NCParams, t: f64, s: &XiState) -> Result<XiState> {
    if s.f1 == C64::new(0.0, 0.0) {
        return Err(Error::Division("F1 vanished in the phase-coefficient equations".into()));
    }
    let ratio = s.f2 / s.f1;
    let fe = p.f_eta(t);
    let zero = C64::new(0.0, 0.0);
    Ok(XiState {
        xi: [-I * fe * ratio, -fe * ratio, zero, zero],
        f1: -I * p.mass * s.f1,
        f2: I * p.mass * s.f2,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct XiSample {
    pub t: f64,
    pub integrated: XiState,
    pub closed: XiState,
    pub nc_branch: C64,
    pub dev_xi1: f64,
    pub dev_xi2: f64,
    pub dev_f1: f64,
    pub dev_f2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct XiTrajectory {
    pub dt: f64,
    pub samples: Vec<XiSample>,
    pub max_dev_xi1: f64,
    pub max_dev_xi: f64,
    pub max_dev_f1: f64,
    pub max_dev_f: f64,
}

impl XiTrajectory {
    /// Largest deviation of any integrated component from its closed form.
    pub fn max_deviation(&self) -> f64 {
        self.max_dev_xi.max(self.max_dev_f)
    }
}

/// Classical RK4 from the closed-form state at `t0` to `t1`.
///
/// The step is shrunk so that an integer number of steps lands on `t1`.
pub fn integrate_rk4(p: &NCParams, t0: f64, t1: f64, dt: f64, xi3: C64, xi4: C64) -> Result<XiTrajectory> {
    if !(dt > 0.0) || !(t1 > t0) {
        return Err(Error::Step(format!("need dt > 0 and t1 > t0, got dt={dt}, t0={t0}, t1={t1}")));
    }
    if dt > t1 - t0 {
        return Err(Error::Step(format!("dt={dt} exceeds the interval length {}", t1 - t0)));
    }
    let xi = XiFunctions::from_params(p, xi3, xi4)?;
    let n = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;

    let sample = |t: f64, s: XiState| {
        let c = XiState::closed(p, &xi, t);
        XiSample {
            t,
            integrated: s,
            closed: c,
            nc_branch: xi.nc_branch(t),
            dev_xi1: (s.xi[0] - c.xi[0]).norm(),
            dev_xi2: (s.xi[1] - c.xi[1]).norm(),
            dev_f1: (s.f1 - c.f1).norm(),
            dev_f2: (s.f2 - c.f2).norm(),
        }
    };

    let mut s = XiState::closed(p, &xi, t0);
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(sample(t0, s));
    for k in 0..n {
        let t = t0 + k as f64 * h;
        let k1 = xi_ode_rhs(p, t, &s)?;
        let k2 = xi_ode_rhs(p, t + 0.5 * h, &s.axpy(0.5 * h, &k1))?;
        let k3 = xi_ode_rhs(p, t + 0.5 * h, &s.axpy(0.5 * h, &k2))?;
        let k4 = xi_ode_rhs(p, t + h, &s.axpy(h, &k3))?;
        let mut next = s;
        for j in 0..4 {
            next.xi[j] += (k1.xi[j] + k2.xi[j] * 2.0 + k3.xi[j] * 2.0 + k4.xi[j]) * (h / 6.0);
        }
        next.f1 += (k1.f1 + k2.f1 * 2.0 + k3.f1 * 2.0 + k4.f1) * (h / 6.0);
        next.f2 += (k1.f2 + k2.f2 * 2.0 + k3.f2 * 2.0 + k4.f2) * (h / 6.0);
        s = next;
        samples.push(sample(t0 + (k + 1) as f64 * h, s));
    }

    let max = |f: fn(&XiSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    let max_dev_xi1 = max(|s| s.dev_xi1);
    let max_dev_xi = max_dev_xi1.max(max(|s| s.dev_xi2));
    let max_dev_f1 = max(|s| s.dev_f1);
    let max_dev_f = max_dev_f1.max(max(|s| s.dev_f2));
    Ok(XiTrajectory { dt: h, samples, max_dev_xi1, max_dev_xi, max_dev_f1, max_dev_f })
}

/// `ϑ(x, y, t) = Σ (ξ_k(0) − ξ_k(t))·monomial_k`.
pub fn theta_phase(xi: &XiFunctions, x: f64, y: f64, t: f64) -> C64 {
    let (a, b) = (xi.all(0.0), xi.all(t));
    (a[0] - b[0]) * x + (a[1] - b[1]) * y + (a[2] - b[2]) * (x * x) + (a[3] - b[3]) * (y * y)
}

/// Where an energy series came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySource {
    UserSupplied,
    FockTracked,
}

/// Sampled `E(t)` on a nondecreasing grid.
#[derive(Debug, Clone, Serialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub source: EnergySource,
}

impl EnergySeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, source: EnergySource) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dim { expected: times.len(), got: values.len() });
        }
        if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("energy series needs at least 2 strictly increasing times".into()));
        }
        Ok(Self { times, values, source })
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1] * (1.0 - w) + self.values[k] * w
    }

    /// Composite trapezoid over `[a, b]` with linear interpolation at
    /// endpoints falling between samples, plus an error estimate
    /// `(b−a)·h²/12·max|f''|` from second differences.
    pub fn integrate(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
        let (first, last) = (self.times[0], *self.times.last().unwrap());
        if a < first - slack || b > last + slack {
            return Err(Error::Coverage { start: first, end: last });
        }
        if b <= a {
            return Ok((0.0, 0.0));
        }
        let mut nodes = vec![(a, self.value_at(a))];
        for (&t, &v) in self.times.iter().zip(&self.values) {
            if t > a && t < b {
                nodes.push((t, v));
            }
        }
        nodes.push((b, self.value_at(b)));
        let integral: f64 = nodes.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();

        let mut h_max: f64 = 0.0;
        let mut curv: f64 = 0.0;
        for w in self.times.windows(2) {
            h_max = h_max.max(w[1] - w[0]);
        }
        for k in 1..self.times.len() - 1 {
            let (h0, h1) = (self.times[k] - self.times[k - 1], self.times[k + 1] - self.times[k]);
            let d2 = 2.0
                * (self.values[k + 1] / (h1 * (h0 + h1)) - self.values[k] / (h0 * h1)
                    + self.values[k - 1] / (h0 * (h0 + h1)));
            curv = curv.max(d2.abs());
        }
        Ok((integral, (b - a) * h_max * h_max / 12.0 * curv))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LrPhase {
    pub t: f64,
    pub theta_part: C64,
    pub energy_integral: f64,
    pub quadrature_error: f64,
    pub alpha: C64,
    pub source: EnergySource,
}

/// `α(t) = ϑ − ∫₀ᵗ E dt′`.
pub fn lr_phase(theta_part: C64, energy: &EnergySeries, t: f64) -> Result<LrPhase> {
    let (integral, err) = energy.integrate(0.0, t)?;
    Ok(LrPhase {
        t,
        theta_part,
        energy_integral: integral,
        quadrature_error: err,
        alpha: theta_part - integral,
        source: energy.source,
    })
}

/// Evaluator for the trial spinor field.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrialSolution {
    pub envelope: SpinorEnvelope,
    pub xi: XiFunctions,
}

impl TrialSolution {
    fn exponent(&self, x: f64, y: f64, t: f64) -> C64 {
        let k = self.xi.all(t);
        I * (k[0] * x + k[1] * y + k[2] * (x * x) + k[3] * (y * y))
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> [C64; 2] {
        let phase = self.exponent(x, y, t).exp();
        let [f1, f2] = self.envelope.at(t);
        [f1 * phase, f2 * phase]
    }
}

pub fn assemble_solution(envelope: SpinorEnvelope, xi: XiFunctions) -> TrialSolution {
    TrialSolution { envelope, xi }
}

/// `Σ C_k ψ_k`; the labels of the eigenvalue/auxiliary quantum numbers are
/// carried only as indices into this list.
#[derive(Debug, Clone, Default)]
pub struct Superposition {
    pub terms: Vec<(C64, TrialSolution)>,
}

impl Superposition {
    pub fn eval(&self, x: f64, y: f64, t: f64) -> [C64; 2] {
        self.terms.iter().fold([C64::new(0.0, 0.0); 2], |acc, (c, s)| {
            let v = s.eval(x, y, t);
            [acc[0] + c * v[0], acc[1] + c * v[1]]
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiracResidual {
    pub t: f64,
    pub points: usize,
    /// `max ‖i∂ψ/∂t − Hψ‖`.
    pub max_abs: f64,
    /// `max ‖i∂ψ/∂t − Hψ‖ / ‖ψ‖`.
    pub max_relative: f64,
}

/// Evaluates `i∂ψ/∂t − H ψ` for the trial solution on the given points,
/// with `−i∂_x`, `−i∂_y` applied analytically to the exponent.
pub fn dirac_residual(p: &NCParams, sol: &TrialSolution, points: &[(f64, f64)], t: f64) -> Result<DiracResidual> {
    check_mass(p, "trial-solution residual")?;
    let (ft, fe) = (p.f_theta(t), p.f_eta(t));
    let k = sol.xi.all(t);
    let k1_dot = sol.xi.xi1_dot(t);
    let k2_dot = k1_dot / I;
    let env = sol.envelope.at(t);
    let env_dot = sol.envelope.derivative(t);
    let mut max_abs: f64 = 0.0;
    let mut max_relative: f64 = 0.0;
    for &(x, y) in points {
        let phase = sol.exponent(x, y, t).exp();
        let kx = k[0] + k[2] * (2.0 * x);
        let ky = k[1] + k[3] * (2.0 * y);
        let h = Mat2::alpha1() * (kx * ft + fe * y) + Mat2::alpha2() * (ky * ft - fe * x) + Mat2::beta() * p.mass;
        let dphase = I * (k1_dot * x + k2_dot * y);
        let mut r2 = 0.0;
        let mut n2 = 0.0;
        for row in 0..2 {
            let dt_psi = env_dot[row] + env[row] * dphase;
            let h_psi = h.get(row, 0) * env[0] + h.get(row, 1) * env[1];
            r2 += ((I * dt_psi - h_psi) * phase).norm_sqr();
            n2 += (env[row] * phase).norm_sqr();
        }
        max_abs = max_abs.max(r2.sqrt());
        if n2 > 0.0 {
            max_relative = max_relative.max((r2 / n2).sqrt());
        }
    }
    Ok(DiracResidual { t, points: points.len(), max_abs, max_relative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncmodel::UnitMode;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn commutative() -> NCParams {
        NCParams::default()
    }

    fn static_nc() -> NCParams {
        NCParams { theta: 0.1, eta: 0.05, ..NCParams::default() }
    }

    fn dynamic_nc() -> NCParams {
        NCParams { theta: 0.1, eta: 0.05, gamma: 0.2, ..NCParams::default() }
    }

    fn zero() -> C64 {
        c(0.0, 0.0)
    }

    #[test]
    fn envelope_values() {
        let p = NCParams::default().with_envelope_constants(0.3, -0.2);
        let [f1, f2] = f_closed(&p, 0.0).unwrap();
        assert!((f1 - c(0.3f64.exp(), 0.0)).norm() < 1e-15);
        assert!((f1 * p.kappa - f2).norm() < 1e-15);
        let [f1, _] = f_closed(&commutative(), PI).unwrap();
        assert!((f1 - c(-1.0, 0.0)).norm() < 1e-15);
        for k in 0..=100 {
            let [f1, f2] = f_closed(&p, 0.1 * k as f64).unwrap();
            assert!((f1.norm() - 0.3f64.exp()).abs() < 1e-15);
            assert!((f2.norm() - (-0.2f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn commutative_closed_values() {
        let p = commutative();
        let (x1, x2) = xi_closed(&p, 0.0).unwrap();
        assert!((x1 - c(-0.25, 0.0)).norm() <= 1e-12);
        assert!((x2 - c(0.0, 0.25)).norm() <= 1e-12);
        for k in 0..50 {
            let t = 0.1 * k as f64;
            let (x1, _) = xi_closed(&p, t).unwrap();
            assert!((x1 - c(0.0, 2.0 * t).exp() * -0.25).norm() <= 1e-12);
        }
    }

    #[test]
    fn dynamic_closed_value_at_origin() {
        // −i{1/(4i) + 0.05/(4i − 0.4)}
        let expected = -I * (1.0 / (4.0 * I) + 0.05 / c(-0.4, 4.0));
        let (x1, _) = xi_closed(&dynamic_nc(), 0.0).unwrap();
        assert!((x1 - expected).norm() < 1e-15);
        assert!((expected - c(-0.25 - 0.2 / 16.16, 0.02 / 16.16)).norm() < 1e-15);
    }

    #[test]
    fn massless_is_singular() {
        let p = NCParams { mass: 0.0, ..NCParams::default() };
        match xi_closed(&p, 0.0) {
            Err(Error::SingularParameter(msg)) => assert!(msg.contains("1/m")),
            other => panic!("{other:?}"),
        }
        let si = NCParams { unit_mode: UnitMode::Si, ..NCParams::default() };
        assert!(matches!(xi_closed(&si, 0.0), Err(Error::UnitMode(_))));
    }

    #[test]
    fn rhs_examples() {
        let p = commutative();
        let s = XiState { xi: [zero(); 4], f1: c(1.0, 0.0), f2: c(1.0, 0.0) };
        let d = xi_ode_rhs(&p, 0.0, &s).unwrap();
        assert!((d.xi[0] - c(0.0, -0.5)).norm() < 1e-15);
        assert_eq!(d.xi[2], zero());
        assert_eq!(d.xi[3], zero());
        let s0 = XiState { f1: zero(), ..s };
        assert!(matches!(xi_ode_rhs(&p, 0.0, &s0), Err(Error::Division(_))));
    }

    #[test]
    fn closed_derivative_matches_rhs() {
        for p in [commutative(), static_nc(), dynamic_nc()] {
            let xi = XiFunctions::from_params(&p, zero(), zero()).unwrap();
            let h = 1e-6;
            for k in 0..20 {
                let t = 0.25 * k as f64;
                let fd = (xi.xi1(t + h) - xi.xi1(t - h)) / (2.0 * h);
                let rhs = xi_ode_rhs(&p, t, &XiState::closed(&p, &xi, t)).unwrap();
                assert!((fd - rhs.xi[0]).norm() <= 1e-6 * rhs.xi[0].norm());
                assert!((xi.xi1_dot(t) - rhs.xi[0]).norm() <= 1e-14);
                let fd2 = (xi.xi2(t + h) - xi.xi2(t - h)) / (2.0 * h);
                assert!((fd2 - rhs.xi[1]).norm() <= 1e-6 * rhs.xi[1].norm());
            }
        }
    }

    #[test]
    fn rk4_tracks_closed_forms() {
        let tr = integrate_rk4(&commutative(), 0.0, 5.0, 1e-3, zero(), zero()).unwrap();
        assert_eq!(tr.samples.len(), 5001);
        assert!(tr.max_dev_xi1 <= 1e-6);
        assert!(tr.max_dev_f1 <= 1e-8);
        let tr = integrate_rk4(&dynamic_nc(), 0.0, 5.0, 1e-3, c(0.1, 0.0), c(0.0, -0.2)).unwrap();
        assert!(tr.max_deviation() <= 1e-6);
        assert_eq!(tr.samples.last().unwrap().integrated.xi[2], c(0.1, 0.0));
    }

    #[test]
    fn rk4_is_fourth_order() {
        for p in [commutative(), dynamic_nc()] {
            let e1 = integrate_rk4(&p, 0.0, 5.0, 0.05, zero(), zero()).unwrap().max_dev_xi;
            let e2 = integrate_rk4(&p, 0.0, 5.0, 0.025, zero(), zero()).unwrap().max_dev_xi;
            let ratio = e1 / e2;
            assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn rk4_rejects_bad_steps() {
        let p = commutative();
        assert!(matches!(integrate_rk4(&p, 0.0, 1.0, 2.0, zero(), zero()), Err(Error::Step(_))));
        assert!(matches!(integrate_rk4(&p, 0.0, 1.0, 0.0, zero(), zero()), Err(Error::Step(_))));
        assert!(matches!(integrate_rk4(&p, 1.0, 0.0, 0.1, zero(), zero()), Err(Error::Step(_))));
    }

    #[test]
    fn theta_phase_values() {
        let xi = XiFunctions::from_params(&commutative(), c(0.3, 0.0), c(-0.1, 0.0)).unwrap();
        assert_eq!(theta_phase(&xi, 1.7, -2.0, 0.0), zero());
        assert!((theta_phase(&xi, 1.0, 0.0, PI / 2.0) - c(-0.5, 0.0)).norm() < 1e-15);
        // quadratic coefficients are constant, so x² and y² never contribute
        assert_eq!(
            theta_phase(&xi, 0.0, 0.0, 1.3),
            zero(),
        );
    }

    #[test]
    fn lr_phase_quadrature() {
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 1e-3).collect();
        let zeros = EnergySeries::new(times.clone(), vec![0.0; times.len()], EnergySource::UserSupplied).unwrap();
        let th = c(0.2, -0.1);
        assert_eq!(lr_phase(th, &zeros, 1.5).unwrap().alpha, th);

        let e0 = 1.3;
        let consts = EnergySeries::new(times.clone(), vec![e0; times.len()], EnergySource::UserSupplied).unwrap();
        let ph = lr_phase(th, &consts, 1.2345).unwrap();
        assert!((ph.alpha - (th - e0 * 1.2345)).norm() < 1e-13);
        assert!(ph.quadrature_error < 1e-15);

        let times: Vec<f64> = (0..=3142).map(|k| k as f64 * 1e-3).collect();
        let sin = EnergySeries::new(times.clone(), times.iter().map(|t| t.sin()).collect(), EnergySource::FockTracked)
            .unwrap();
        let (v, err) = sin.integrate(0.0, PI).unwrap();
        assert!((v - 2.0).abs() <= 1e-6);
        assert!(err > 0.0 && err < 1e-6);

        assert!(matches!(sin.integrate(0.0, 4.0), Err(Error::Coverage { .. })));
    }

    #[test]
    fn lr_phase_is_additive() {
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 2e-3).collect();
        let e = EnergySeries::new(times.clone(), times.iter().map(|t| (3.0 * t).cos() + t).collect(), EnergySource::UserSupplied)
            .unwrap();
        let (a, _) = e.integrate(0.0, 0.7).unwrap();
        let (b, _) = e.integrate(0.7, 1.9).unwrap();
        let (whole, err) = e.integrate(0.0, 1.9).unwrap();
        assert!((a + b - whole).abs() <= err.max(1e-12));
    }

    #[test]
    fn energy_series_validation() {
        assert!(matches!(
            EnergySeries::new(vec![0.0, 1.0], vec![0.0], EnergySource::UserSupplied),
            Err(Error::Dim { .. })
        ));
        assert!(matches!(
            EnergySeries::new(vec![0.0, 0.0], vec![0.0, 0.0], EnergySource::UserSupplied),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn assembled_solution() {
        let p = NCParams::default().with_envelope_constants(0.4, -0.3);
        let xi = XiFunctions::from_params(&p, c(0.2, 0.0), c(-0.1, 0.0)).unwrap();
        let sol = assemble_solution(SpinorEnvelope::from_params(&p), xi);
        let v = sol.eval(0.0, 0.0, 0.0);
        assert!((v[0] - c(0.4f64.exp(), 0.0)).norm() < 1e-15);
        assert!((v[1] - c((-0.3f64).exp(), 0.0)).norm() < 1e-15);

        // ξ₂ = ξ₁/i turns iξ₁x + iξ₂y into iξ₁(x − iy)
        let (x, y, t) = (0.7, -1.1, 0.9);
        let expected = -I * p.kappa / 4.0 * c(0.0, 2.0 * t).exp() * c(x, -y) + I * 0.2 * x * x - I * 0.1 * y * y;
        assert!((sol.exponent(x, y, t) - expected).norm() < 1e-14);

        let sup = Superposition { terms: vec![(c(2.0, 0.0), sol), (c(0.0, -1.0), sol)] };
        let s = sup.eval(x, y, t);
        let one = sol.eval(x, y, t);
        assert!((s[0] - one[0] * c(2.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn residual_is_reported() {
        let p = dynamic_nc();
        let xi = XiFunctions::from_params(&p, zero(), zero()).unwrap();
        let sol = assemble_solution(SpinorEnvelope::from_params(&p), xi);
        let pts: Vec<(f64, f64)> = (0..5).flat_map(|i| (0..5).map(move |j| (i as f64 - 2.0, j as f64 - 2.0))).collect();
        let r = dirac_residual(&p, &sol, &pts, 0.4).unwrap();
        assert_eq!(r.points, 25);
        assert!(r.max_abs.is_finite() && r.max_relative.is_finite());
    }

    proptest! {
        #[test]
        fn structural_identities(t in 0.0f64..10.0, eta in -0.5f64..0.5, gamma in -0.5f64..0.5,
                                 m in 0.2f64..3.0, q1 in -1.0f64..1.0, q2 in -1.0f64..1.0) {
            let p = NCParams { eta, gamma, mass: m, ..NCParams::default() }.with_envelope_constants(q1, q2);
            let xi = XiFunctions::from_params(&p, zero(), zero()).unwrap();
            prop_assert!((xi.xi1(t) - I * xi.xi2(t)).norm() <= 1e-14 * (1.0 + xi.xi1(t).norm()));
            let d = xi_ode_rhs(&p, t, &XiState::closed(&p, &xi, t)).unwrap();
            prop_assert!((d.xi[0] - I * d.xi[1]).norm() <= 1e-14 * (1.0 + d.xi[0].norm()));
            let sol = assemble_solution(SpinorEnvelope::from_params(&p), xi);
            let v = sol.eval(0.3, -0.8, t);
            let ratio = v[0].norm_sqr() / v[1].norm_sqr();
            prop_assert!((ratio / (2.0 * (q1 - q2)).exp() - 1.0).abs() <= 1e-12);
        }
    }
}
