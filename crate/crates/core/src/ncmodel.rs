//! Model parameters, the time-dependent Bopp shift and the Dirac Hamiltonians.
//!
//! The noncommutative coordinates are realised on the canonical ones by
//!
//! ```text
//! x_nc  = x  − Θe^{γt}/(2ħ) py      px_nc = px + ηe^{−γt}/(2ħ) y
//! y_nc  = y  + Θe^{γt}/(2ħ) px      py_nc = py − ηe^{−γt}/(2ħ) x
//! ```
//!
//! which reproduces `[x_nc, y_nc] = iΘe^{γt}`, `[px_nc, py_nc] = iηe^{−γt}`
//! and `[x_nc, px_nc] = [y_nc, py_nc] = iħ_eff` with
//! `ħ_eff = ħ(1 + Θη/4ħ²)`.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::phasepoly::{ps_commutator, Coord, PhasePoly, SymplecticForm, TimePhasePoly, TimeProfile};

pub const SPEED_OF_LIGHT_SI: f64 = 299_792_458.0;

/// Above this value of `|Θη/4ħ²|` the deformation is no longer a small
/// correction and a warning is raised.
pub const CONSISTENCY_WARN_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum UnitMode {
    #[default]
    #[serde(rename = "natural")]
    Natural,
    #[serde(rename = "SI")]
    Si,
}

impl UnitMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "natural" => Some(UnitMode::Natural),
            "SI" | "si" => Some(UnitMode::Si),
            _ => None,
        }
    }
}

impl fmt::Display for UnitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitMode::Natural => "natural",
            UnitMode::Si => "SI",
        })
    }
}

/// Physical and model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NCParams {
    /// Θ, length²
    pub theta: f64,
    /// η, momentum²
    pub eta: f64,
    /// γ, inverse time
    pub gamma: f64,
    /// Magnetic field along z.
    #[serde(rename = "B")]
    pub b_field: f64,
    /// Signed charge.
    #[serde(rename = "e")]
    pub charge: f64,
    #[serde(rename = "m")]
    pub mass: f64,
    pub hbar: f64,
    /// `κ = e^{q₂−q₁}`
    pub kappa: f64,
    pub q1: f64,
    pub q2: f64,
    pub unit_mode: UnitMode,
}

impl Default for NCParams {
    /// Commutative, natural units, `e = B = m = 1`.
    fn default() -> Self {
        Self {
            theta: 0.0,
            eta: 0.0,
            gamma: 0.0,
            b_field: 1.0,
            charge: 1.0,
            mass: 1.0,
            hbar: 1.0,
            kappa: 1.0,
            q1: 0.0,
            q2: 0.0,
            unit_mode: UnitMode::Natural,
        }
    }
}

/// Which kind of run a parameter set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Commutative,
    /// Θ or η nonzero, γ = 0.
    StaticNoncommutative,
    DynamicNoncommutative,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Commutative => "commutative",
            Regime::StaticNoncommutative => "static_noncommutative",
            Regime::DynamicNoncommutative => "dynamic_noncommutative",
        })
    }
}

impl NCParams {
    /// Sets `q₁, q₂` and the matching `κ = e^{q₂−q₁}`.
    pub fn with_envelope_constants(mut self, q1: f64, q2: f64) -> Self {
        self.q1 = q1;
        self.q2 = q2;
        self.kappa = (q2 - q1).exp();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("theta", self.theta),
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("B", self.b_field),
            ("e", self.charge),
            ("m", self.mass),
            ("hbar", self.hbar),
            ("kappa", self.kappa),
            ("q1", self.q1),
            ("q2", self.q2),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be finite")));
        }
        if self.mass < 0.0 {
            return Err(Error::InvalidParameter(format!("m must be non-negative, got {}", self.mass)));
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {}", self.hbar)));
        }
        let expected = (self.q2 - self.q1).exp();
        if (self.kappa - expected).abs() > 1e-12 * expected.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa = {} but exp(q2 - q1) = {expected}",
                self.kappa
            )));
        }
        Ok(())
    }

    /// `|Θη / 4ħ²|`
    pub fn consistency_ratio(&self) -> f64 {
        (self.theta * self.eta / (4.0 * self.hbar * self.hbar)).abs()
    }

    pub fn consistency_warning(&self) -> bool {
        self.consistency_ratio() > CONSISTENCY_WARN_THRESHOLD
    }

    /// `ħ(1 + Θη/4ħ²)`
    pub fn hbar_eff(&self) -> f64 {
        self.hbar * (1.0 + self.theta * self.eta / (4.0 * self.hbar * self.hbar))
    }

    /// `Θe^{γt}`
    pub fn theta_of_t(&self, t: f64) -> f64 {
        self.theta * (self.gamma * t).exp()
    }

    /// `ηe^{−γt}`
    pub fn eta_of_t(&self, t: f64) -> f64 {
        self.eta * (-self.gamma * t).exp()
    }

    /// `1 + (eB/4)Θe^{γt}`
    pub fn f_theta(&self, t: f64) -> f64 {
        1.0 + 0.25 * self.charge * self.b_field * self.theta_of_t(t)
    }

    /// `eB/2 + (η/2)e^{−γt}`
    pub fn f_eta(&self, t: f64) -> f64 {
        0.5 * self.charge * self.b_field + 0.5 * self.eta_of_t(t)
    }

    pub fn f_theta_dot(&self, t: f64) -> f64 {
        0.25 * self.charge * self.b_field * self.gamma * self.theta_of_t(t)
    }

    pub fn f_eta_dot(&self, t: f64) -> f64 {
        -0.5 * self.gamma * self.eta_of_t(t)
    }

    pub fn speed_of_light(&self) -> f64 {
        match self.unit_mode {
            UnitMode::Natural => 1.0,
            UnitMode::Si => SPEED_OF_LIGHT_SI,
        }
    }

    /// `l_B = (eB)^{-1/2}`, defined only for `eB > 0`.
    pub fn magnetic_length(&self) -> Option<f64> {
        let eb = self.charge * self.b_field;
        (eb > 0.0).then(|| eb.powf(-0.5))
    }

    pub fn regime(&self) -> Regime {
        if self.theta == 0.0 && self.eta == 0.0 {
            Regime::Commutative
        } else if self.gamma == 0.0 {
            Regime::StaticNoncommutative
        } else {
            Regime::DynamicNoncommutative
        }
    }

    pub fn symplectic_form(&self) -> SymplecticForm {
        SymplecticForm::canonical(self.hbar)
    }

    pub(crate) fn require_natural_units(&self, what: &str) -> Result<()> {
        if self.unit_mode != UnitMode::Natural || self.hbar != 1.0 {
            return Err(Error::UnitMode(format!(
                "{what} is defined with hbar = c = 1 (got unit_mode = {}, hbar = {})",
                self.unit_mode, self.hbar
            )));
        }
        Ok(())
    }

}

/// The four deformed phase-space operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NcCoord {
    #[serde(rename = "x_nc")]
    XNc,
    #[serde(rename = "y_nc")]
    YNc,
    #[serde(rename = "px_nc")]
    PxNc,
    #[serde(rename = "py_nc")]
    PyNc,
}

impl NcCoord {
    pub const ALL: [NcCoord; 4] = [NcCoord::XNc, NcCoord::YNc, NcCoord::PxNc, NcCoord::PyNc];

    pub fn label(self) -> &'static str {
        match self {
            NcCoord::XNc => "x_nc",
            NcCoord::YNc => "y_nc",
            NcCoord::PxNc => "px_nc",
            NcCoord::PyNc => "py_nc",
        }
    }
}

/// Time-dependent Bopp shift of one noncommutative operator, as a linear
/// polynomial in the canonical coordinates with `𝕀` coefficients.
pub fn bopp_shift(p: &NCParams, which: NcCoord, t: f64) -> PhasePoly {
    let th = p.theta_of_t(t) / (2.0 * p.hbar);
    let et = p.eta_of_t(t) / (2.0 * p.hbar);
    let id = Mat2::identity();
    let (base, shift, w) = match which {
        NcCoord::XNc => (Coord::X, Coord::Py, -th),
        NcCoord::YNc => (Coord::Y, Coord::Px, th),
        NcCoord::PxNc => (Coord::Px, Coord::Y, et),
        NcCoord::PyNc => (Coord::Py, Coord::X, -et),
    };
    PhasePoly::coord(base) + PhasePoly::linear_term(shift, id * w)
}

/// One deformed commutator at one time.
#[derive(Debug, Clone, Serialize)]
pub struct CommutatorCheck {
    pub pair: String,
    pub t: f64,
    pub computed: PhasePoly,
    pub expected: PhasePoly,
    pub deviation: f64,
    /// Largest traceless (spin) component of the computed commutator.
    pub spin_leak: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeformedAlgebraReport {
    pub checks: Vec<CommutatorCheck>,
    pub max_deviation: f64,
    /// Deviation divided by `max(|target|, ħ)` per check, maximised.
    pub max_relative_deviation: f64,
    /// Spread of `[x_nc, px_nc]` across the grid.
    pub x_px_time_spread: f64,
}

impl DeformedAlgebraReport {
    pub fn failing_pairs(&self, rel_tol: f64) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for c in &self.checks {
            let scale = c.expected.residual_norm().max(std::f64::consts::SQRT_2);
            if c.deviation / scale > rel_tol && !names.contains(&c.pair) {
                names.push(c.pair.clone());
            }
        }
        names
    }
}

/// Checks the six deformed commutators on the Bopp-shifted operators.
pub fn verify_nc_algebra(p: &NCParams, t_grid: &[f64]) -> Result<DeformedAlgebraReport> {
    verify_nc_algebra_with(p, t_grid, |which, t| bopp_shift(p, which, t))
}

/// As [`verify_nc_algebra`] with a caller-supplied realisation of the
/// noncommutative operators.
pub fn verify_nc_algebra_with(
    p: &NCParams,
    t_grid: &[f64],
    shift: impl Fn(NcCoord, f64) -> PhasePoly,
) -> Result<DeformedAlgebraReport> {
    if t_grid.is_empty() {
        return Err(Error::Grid("time grid is empty".into()));
    }
    let omega = p.symplectic_form();
    let i = C64::new(0.0, 1.0);
    let scalar = |v: f64| PhasePoly::constant(Mat2::scalar(i * v));
    use NcCoord::*;

    let mut checks = Vec::with_capacity(6 * t_grid.len());
    let mut xpx_values: Vec<PhasePoly> = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let targets = [
            (XNc, YNc, scalar(p.theta_of_t(t))),
            (PxNc, PyNc, scalar(p.eta_of_t(t))),
            (XNc, PxNc, scalar(p.hbar_eff())),
            (YNc, PyNc, scalar(p.hbar_eff())),
            (XNc, PyNc, PhasePoly::zero()),
            (YNc, PxNc, PhasePoly::zero()),
        ];
        for (a, b, expected) in targets {
            let computed = ps_commutator(&shift(a, t), &shift(b, t), &omega)?;
            let spin_leak = computed
                .slots()
                .map(|(_, m)| m.pauli_decompose().spin_part_max())
                .fold(0.0, f64::max);
            if (a, b) == (XNc, PxNc) {
                xpx_values.push(computed);
            }
            checks.push(CommutatorCheck {
                pair: format!("[{},{}]", a.label(), b.label()),
                t,
                deviation: computed.max_slot_distance(&expected),
                computed,
                expected,
                spin_leak,
            });
        }
    }

    let max_deviation = checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let max_relative_deviation = checks
        .iter()
        .map(|c| c.deviation / c.expected.residual_norm().max(p.hbar * std::f64::consts::SQRT_2))
        .fold(0.0, f64::max);
    let x_px_time_spread = xpx_values
        .iter()
        .map(|v| v.max_slot_distance(&xpx_values[0]))
        .fold(0.0, f64::max);
    Ok(DeformedAlgebraReport {
        checks,
        max_deviation,
        max_relative_deviation,
        x_px_time_spread,
    })
}

/// `H = cα₁px + cα₂py + eα₁(B/2)y − eα₂(B/2)x + βmc²`, time independent.
pub fn build_h_commutative(p: &NCParams) -> TimePhasePoly {
    let c = p.speed_of_light();
    let half_eb = 0.5 * p.charge * p.b_field;
    let (a1, a2) = (Mat2::alpha1(), Mat2::alpha2());
    let h = PhasePoly::linear_term(Coord::Px, a1 * c)
        + PhasePoly::linear_term(Coord::Py, a2 * c)
        + PhasePoly::linear_term(Coord::Y, a1 * half_eb)
        + PhasePoly::linear_term(Coord::X, a2 * (-half_eb))
        + PhasePoly::constant(Mat2::beta() * (p.mass * c * c));
    TimePhasePoly::constant(h)
}

/// Kinetic block `α₁px + α₂py` multiplying `f_Θ`.
pub fn momentum_block() -> PhasePoly {
    PhasePoly::linear_term(Coord::Px, Mat2::alpha1()) + PhasePoly::linear_term(Coord::Py, Mat2::alpha2())
}

/// Field block `α₁y − α₂x` multiplying `f_η`.
pub fn field_block() -> PhasePoly {
    PhasePoly::linear_term(Coord::Y, Mat2::alpha1()) + PhasePoly::linear_term(Coord::X, -Mat2::alpha2())
}

/// `H^nc(t) = f_Θ(α₁px + α₂py) + f_η(α₁y − α₂x) + βm` in natural units.
///
/// The result is cross-checked against the Hamiltonian obtained by
/// substituting the Bopp-shifted operators into the commutative form.
pub fn build_h_nc(p: &NCParams) -> Result<TimePhasePoly> {
    p.require_natural_units("the noncommutative Hamiltonian")?;
    let eb = p.charge * p.b_field;
    let h = TimePhasePoly::new()
        .with_term(TimeProfile::Constant(1.0), momentum_block())
        .with_term(
            TimeProfile::Exponential { amplitude: 0.25 * eb * p.theta, rate: p.gamma },
            momentum_block(),
        )
        .with_term(TimeProfile::Constant(0.5 * eb), field_block())
        .with_term(
            TimeProfile::Exponential { amplitude: 0.5 * p.eta, rate: -p.gamma },
            field_block(),
        )
        .with_term(TimeProfile::Constant(p.mass), PhasePoly::constant(Mat2::beta()));

    for t in [0.0, 1.0] {
        let direct = h.at(t);
        let scale = direct.residual_norm().max(1.0);
        let dev = direct.max_slot_distance(&h_nc_from_shift(p, t, |w, t| bopp_shift(p, w, t)));
        assert!(
            dev <= 1e-13 * scale,
            "Bopp-substituted and direct Hamiltonians differ by {dev} at t = {t}"
        );
    }
    Ok(h)
}

/// `cα₁px_nc + cα₂py_nc − eα₂(B/2)x_nc + eα₁(B/2)y_nc + βmc²` with the
/// noncommutative operators supplied by `shift`.
pub fn h_nc_from_shift(p: &NCParams, t: f64, shift: impl Fn(NcCoord, f64) -> PhasePoly) -> PhasePoly {
    let c = p.speed_of_light();
    let half_eb = 0.5 * p.charge * p.b_field;
    let (a1, a2) = (Mat2::alpha1(), Mat2::alpha2());
    let times = |m: Mat2, q: PhasePoly| q.map(|k| m * *k);
    times(a1 * c, shift(NcCoord::PxNc, t))
        + times(a2 * c, shift(NcCoord::PyNc, t))
        + times(a2 * (-half_eb), shift(NcCoord::XNc, t))
        + times(a1 * half_eb, shift(NcCoord::YNc, t))
        + PhasePoly::constant(Mat2::beta() * (p.mass * c * c))
}

/// Slot-wise distance between the Bopp-substituted Hamiltonian and the
/// direct time-dependent form at each `t`.
pub fn hamiltonian_dual_path_deviation(p: &NCParams, times: &[f64]) -> Result<Vec<f64>> {
    let h = build_h_nc(p)?;
    Ok(times
        .iter()
        .map(|&t| h.at(t).max_slot_distance(&h_nc_from_shift(p, t, |w, t| bopp_shift(p, w, t))))
        .collect())
}
