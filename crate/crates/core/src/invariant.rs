//! Linear Lewis–Riesenfeld invariants of the noncommutative Dirac Hamiltonian.
//!
//! The ansatz is `I(t) = A₁(t)px + B₁(t)x + A₂(t)py + B₂(t)y + C(t)` with
//! 2×2 matrix coefficients. `I` is an invariant iff the residual
//! `[I, H] + i∂I/∂t` vanishes identically.
//!
//! For scalar constant coefficients the residual collapses to
//! `i(a₁f_η + b₃f_Θ)α₂ + i(b₁f_Θ − a₃f_η)α₁`, so the constants are only free
//! when both brackets vanish at every time. [`solve_constant_invariant`]
//! measures the dimension of that family numerically instead of assuming it.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat2::{commutator, Mat2};
use crate::ncmodel::NCParams;
use crate::phasepoly::{ps_commutator, Coord, PhasePoly, SymplecticForm, TimePhasePoly, TimeProfile};

/// Relative SVD cutoff for the numerical rank.
pub const NULLSPACE_RTOL: f64 = 1e-10;

/// Default number of grid points for constraint assembly.
pub const DEFAULT_GRID_POINTS: usize = 16;

const I: C64 = C64::new(0.0, 1.0);

/// `Σ_k g_k(t) M_k`: a time-dependent 2×2 coefficient with analytic derivative.
#[derive(Clone, Debug, Default)]
pub struct MatrixFunction {
    pub terms: Vec<(TimeProfile, Mat2)>,
}

impl MatrixFunction {
    pub fn constant(m: Mat2) -> Self {
        Self { terms: vec![(TimeProfile::Constant(1.0), m)] }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn with_term(mut self, g: TimeProfile, m: Mat2) -> Self {
        self.terms.push((g, m));
        self
    }

    pub fn at(&self, t: f64) -> Mat2 {
        self.terms.iter().fold(Mat2::zero(), |acc, (g, m)| acc + *m * g.value(t))
    }

    pub fn derivative(&self, t: f64) -> Mat2 {
        self.terms.iter().fold(Mat2::zero(), |acc, (g, m)| acc + *m * g.derivative(t))
    }
}

/// Coefficients of the linear invariant ansatz, named by the phase-space
/// variable they multiply.
#[derive(Clone, Debug, Default)]
pub struct InvariantAnsatz {
    /// A₁
    pub px: MatrixFunction,
    /// B₁
    pub x: MatrixFunction,
    /// A₂
    pub py: MatrixFunction,
    /// B₂
    pub y: MatrixFunction,
    /// C
    pub constant: MatrixFunction,
}

/// Real constants of the spin-independent invariant
/// `a1·px + b1·x + a3·py + b3·y + c1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct InvariantConstants {
    pub a1: f64,
    pub a3: f64,
    pub b1: f64,
    pub b3: f64,
    pub c1: f64,
}

impl InvariantConstants {
    pub fn new(a1: f64, a3: f64, b1: f64, b3: f64, c1: f64) -> Self {
        Self { a1, a3, b1, b3, c1 }
    }
}

impl InvariantAnsatz {
    /// All five coefficients are `𝕀` times a real constant.
    pub fn from_constants(k: InvariantConstants) -> Self {
        let s = |v: f64| MatrixFunction::constant(Mat2::real_scalar(v));
        Self {
            px: s(k.a1),
            x: s(k.b1),
            py: s(k.a3),
            y: s(k.b3),
            constant: s(k.c1),
        }
    }

    pub fn to_phasepoly(&self, t: f64) -> PhasePoly {
        PhasePoly::linear_term(Coord::Px, self.px.at(t))
            + PhasePoly::linear_term(Coord::X, self.x.at(t))
            + PhasePoly::linear_term(Coord::Py, self.py.at(t))
            + PhasePoly::linear_term(Coord::Y, self.y.at(t))
            + PhasePoly::constant(self.constant.at(t))
    }

    pub fn derivative_phasepoly(&self, t: f64) -> PhasePoly {
        PhasePoly::linear_term(Coord::Px, self.px.derivative(t))
            + PhasePoly::linear_term(Coord::X, self.x.derivative(t))
            + PhasePoly::linear_term(Coord::Py, self.py.derivative(t))
            + PhasePoly::linear_term(Coord::Y, self.y.derivative(t))
            + PhasePoly::constant(self.constant.derivative(t))
    }

    /// The ansatz as a [`TimePhasePoly`] (for the Fock representation).
    pub fn to_time_phasepoly(&self) -> TimePhasePoly {
        let mut out = TimePhasePoly::new();
        let slots = [
            (&self.px, Some(Coord::Px)),
            (&self.x, Some(Coord::X)),
            (&self.py, Some(Coord::Py)),
            (&self.y, Some(Coord::Y)),
            (&self.constant, None),
        ];
        for (f, z) in slots {
            for (g, m) in &f.terms {
                let p = match z {
                    Some(z) => PhasePoly::linear_term(z, *m),
                    None => PhasePoly::constant(*m),
                };
                out.push(g.clone(), p);
            }
        }
        out
    }

    /// Largest traceless component over all slots at `t`; zero means the
    /// invariant acts as the identity on spinor space.
    pub fn spin_dependence(&self, t: f64) -> f64 {
        self.to_phasepoly(t)
            .slots()
            .map(|(_, m)| m.pauli_decompose().spin_part_max())
            .fold(0.0, f64::max)
    }
}

/// `[I, H] + i ∂I/∂t` at time `t`. The zero polynomial certifies invariance.
pub fn invariance_residual(
    ans: &InvariantAnsatz,
    h: &TimePhasePoly,
    omega: &SymplecticForm,
    t: f64,
) -> Result<PhasePoly> {
    let comm = ps_commutator(&ans.to_phasepoly(t), &h.at(t), omega)?;
    Ok(comm + ans.derivative_phasepoly(t).scale(I))
}

/// Largest residual norm over a grid.
pub fn max_invariance_residual(
    ans: &InvariantAnsatz,
    h: &TimePhasePoly,
    omega: &SymplecticForm,
    t_grid: &[f64],
) -> Result<f64> {
    t_grid.iter().try_fold(0.0f64, |acc, &t| {
        Ok(acc.max(invariance_residual(ans, h, omega, t)?.residual_norm()))
    })
}

/// Labels of the bracket relations, in order:
///
/// ```text
/// rel_a  [A₁, α₁f_Θ]                      rel_i  [A₁, α₂f_Θ] + [A₂, α₁f_Θ]
/// rel_b  [A₂, α₂f_Θ]                      rel_j  [B₁, α₁f_Θ] − [A₁, α₂f_η]
/// rel_c  [B₁, α₂f_η]                      rel_k  [B₁, α₂f_Θ] − [A₂, α₂f_η]
/// rel_d  [B₂, α₁f_η]                      rel_l  [B₁, α₁f_η] − [B₂, α₂f_η]
/// rel_e  [A₁, β]m + [C, α₁f_Θ] + i∂A₁     rel_m  [B₂, α₁f_Θ] + [A₁, α₁f_η]
/// rel_f  [A₂, β]m + [C, α₂f_Θ] + i∂A₂     rel_n  [A₂, α₁f_η] + [B₂, α₂f_Θ]
/// rel_g  [B₁, β]m − [C, α₂f_η] + i∂B₁
/// rel_h  [B₂, β]m + [C, α₁f_η] + i∂B₂
/// rel_o  iA₁α₂f_η + iB₁α₁f_Θ − iA₂α₁f_η + iB₂α₂f_Θ
///        − i([B₁, α₁f_Θ] + [B₂, α₂f_Θ]) + [C, βm] + i∂C
/// ```
pub const CONSTRAINT_LABELS: [&str; 15] = [
    "rel_a", "rel_b", "rel_c", "rel_d", "rel_e", "rel_f", "rel_g", "rel_h", "rel_i", "rel_j", "rel_k", "rel_l",
    "rel_m", "rel_n", "rel_o",
];

#[derive(Debug, Clone, Serialize)]
pub struct LabeledResidual {
    pub label: &'static str,
    pub residual: Mat2,
    pub norm: f64,
}

/// The fifteen bracket relations evaluated at one time.
#[derive(Debug, Clone, Serialize)]
pub struct ConstraintResidualSet {
    pub t: f64,
    pub residuals: Vec<LabeledResidual>,
    pub max_norm: f64,
    /// `b₁f_Θ − a₃f_η` from the identity components.
    pub chi: C64,
    /// `b₃f_Θ + a₁f_η` from the identity components.
    pub phi: C64,
}

impl ConstraintResidualSet {
    pub fn get(&self, label: &str) -> Option<&LabeledResidual> {
        self.residuals.iter().find(|r| r.label == label)
    }

    /// Largest norm among the relations that do not involve the constant
    /// block's closing relation (everything but the last).
    pub fn max_norm_excluding_closing(&self) -> f64 {
        self.residuals[..14].iter().map(|r| r.norm).fold(0.0, f64::max)
    }
}

/// Evaluates the fifteen bracket relations for the ansatz.
pub fn constraint_residuals(ans: &InvariantAnsatz, p: &NCParams, t: f64) -> ConstraintResidualSet {
    let (ft, fe, m) = (p.f_theta(t), p.f_eta(t), p.mass);
    let (a1, a2, b) = (Mat2::alpha1(), Mat2::alpha2(), Mat2::beta());
    let (ca1, cb1, ca2, cb2, cc) = (ans.px.at(t), ans.x.at(t), ans.py.at(t), ans.y.at(t), ans.constant.at(t));
    let (da1, db1, da2, db2, dc) = (
        ans.px.derivative(t),
        ans.x.derivative(t),
        ans.py.derivative(t),
        ans.y.derivative(t),
        ans.constant.derivative(t),
    );
    let com = |x: &Mat2, y: Mat2| commutator(x, &y);
    let i = |x: Mat2| x.scale(I);

    let values = [
        com(&ca1, a1 * ft),
        com(&ca2, a2 * ft),
        com(&cb1, a2 * fe),
        com(&cb2, a1 * fe),
        com(&ca1, b) * m + com(&cc, a1 * ft) + i(da1),
        com(&ca2, b) * m + com(&cc, a2 * ft) + i(da2),
        com(&cb1, b) * m - com(&cc, a2 * fe) + i(db1),
        com(&cb2, b) * m + com(&cc, a1 * fe) + i(db2),
        com(&ca1, a2 * ft) + com(&ca2, a1 * ft),
        com(&cb1, a1 * ft) - com(&ca1, a2 * fe),
        com(&cb1, a2 * ft) - com(&ca2, a2 * fe),
        com(&cb1, a1 * fe) - com(&cb2, a2 * fe),
        com(&cb2, a1 * ft) + com(&ca1, a1 * fe),
        com(&ca2, a1 * fe) + com(&cb2, a2 * ft),
        i(ca1 * a2 * fe) + i(cb1 * a1 * ft) - i(ca2 * a1 * fe) + i(cb2 * a2 * ft)
            - i(com(&cb1, a1 * ft) + com(&cb2, a2 * ft))
            + com(&cc, b * m)
            + i(dc),
    ];

    let residuals: Vec<LabeledResidual> = CONSTRAINT_LABELS
        .iter()
        .zip(values)
        .map(|(label, residual)| LabeledResidual { label, norm: residual.frobenius_norm(), residual })
        .collect();
    let max_norm = residuals.iter().map(|r| r.norm).fold(0.0, f64::max);
    let id = |x: &Mat2| x.pauli_decompose().c_i;
    ConstraintResidualSet {
        t,
        max_norm,
        chi: id(&cb1) * ft - id(&ca2) * fe,
        phi: id(&cb2) * ft + id(&ca1) * fe,
        residuals,
    }
}

/// Column order of the constant-invariant constraint matrix.
pub const NULLSPACE_COLUMNS: [&str; 4] = ["a1", "a3", "b1", "b3"];

/// Numerical nullspace of the constant-coefficient invariance conditions
/// `a₁f_η + b₃f_Θ = 0` and `b₁f_Θ − a₃f_η = 0` sampled on a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct NullspaceReport {
    pub times: Vec<f64>,
    pub columns: [&'static str; 4],
    /// `2·|times|` rows acting on `(a1, a3, b1, b3)`.
    pub constraint_matrix: Vec<[f64; 4]>,
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
    pub tolerance: f64,
    pub rank: usize,
    /// Orthonormal basis of the nullspace.
    pub nullspace_basis: Vec<[f64; 4]>,
    /// The same space in reduced row-echelon form (pivot entries 1).
    pub generators: Vec<[f64; 4]>,
    /// Set when the constants of the linear invariant are not all free.
    pub free_constant_tension: bool,
    pub note: String,
}

impl NullspaceReport {
    pub fn dimension(&self) -> usize {
        self.nullspace_basis.len()
    }

    /// Distance from `v` to the nullspace (norm of the orthogonal residual).
    pub fn distance_to_nullspace(&self, v: &[f64; 4]) -> f64 {
        let mut r = *v;
        for b in &self.nullspace_basis {
            let proj: f64 = (0..4).map(|k| b[k] * v[k]).sum();
            for k in 0..4 {
                r[k] -= proj * b[k];
            }
        }
        r.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// 16 uniform points on `[0, 2/max(γ, 1)]`.
pub fn default_constraint_grid(p: &NCParams) -> Vec<f64> {
    let end = 2.0 / p.gamma.abs().max(1.0);
    let n = DEFAULT_GRID_POINTS;
    (0..n).map(|k| end * k as f64 / (n - 1) as f64).collect()
}

/// Assembles the constant-coefficient constraints on `t_grid` and returns
/// their SVD-based nullspace at relative tolerance [`NULLSPACE_RTOL`].
pub fn solve_constant_invariant(p: &NCParams, t_grid: &[f64]) -> Result<NullspaceReport> {
    if t_grid.len() < 2 {
        return Err(Error::Grid(format!(
            "constraint assembly needs at least 2 grid points, got {}",
            t_grid.len()
        )));
    }
    let mut rows = Vec::with_capacity(2 * t_grid.len());
    for &t in t_grid {
        let (ft, fe) = (p.f_theta(t), p.f_eta(t));
        rows.push([fe, 0.0, 0.0, ft]);
        rows.push([0.0, -fe, ft, 0.0]);
    }
    let a = DMatrix::from_fn(rows.len(), 4, |r, c| rows[r][c]);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let tolerance = NULLSPACE_RTOL * sigma_max;

    let rank = singular_values.iter().filter(|&&s| s > tolerance).count();
    let nullspace_basis: Vec<[f64; 4]> = order[rank..]
        .iter()
        .map(|&k| [v_t[(k, 0)], v_t[(k, 1)], v_t[(k, 2)], v_t[(k, 3)]])
        .collect();
    let generators = reduced_row_echelon(&nullspace_basis);
    let dim = nullspace_basis.len();

    let free_constant_tension = dim < 4;
    let note = if dim == 0 {
        "tension: the linear invariant is stated with free constants a1, a3, b1, b3, c1, but the \
         invariance conditions a1*f_eta + b3*f_theta = 0 and b1*f_theta - a3*f_eta = 0 have only the \
         trivial solution on this grid; only the constant c1 survives"
            .to_string()
    } else if dim < 4 {
        format!(
            "tension: the linear invariant is stated with free constants a1, a3, b1, b3, c1, but only a \
             {dim}-dimensional family of (a1, a3, b1, b3) satisfies the invariance conditions on this grid"
        )
    } else {
        "all constants free".to_string()
    };

    Ok(NullspaceReport {
        times: t_grid.to_vec(),
        columns: NULLSPACE_COLUMNS,
        constraint_matrix: rows,
        singular_values,
        tolerance,
        rank,
        nullspace_basis,
        generators,
        free_constant_tension,
        note,
    })
}

/// Row-reduces a small set of row vectors (partial pivoting) and returns
/// the nonzero rows with unit pivots.
fn reduced_row_echelon(rows: &[[f64; 4]]) -> Vec<[f64; 4]> {
    let mut m: Vec<[f64; 4]> = rows.to_vec();
    let mut pivot_row = 0;
    for col in 0..4 {
        if pivot_row == m.len() {
            break;
        }
        let (best, val) = (pivot_row..m.len())
            .map(|r| (r, m[r][col].abs()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= 1e-12 {
            continue;
        }
        m.swap(pivot_row, best);
        let pv = m[pivot_row][col];
        for k in 0..4 {
            m[pivot_row][k] /= pv;
        }
        for r in 0..m.len() {
            if r != pivot_row {
                let f = m[r][col];
                for k in 0..4 {
                    m[r][k] -= f * m[pivot_row][k];
                }
            }
        }
        pivot_row += 1;
    }
    m.truncate(pivot_row);
    for row in &mut m {
        for v in row.iter_mut() {
            if v.abs() < 1e-15 {
                *v = 0.0;
            }
        }
    }
    m
}
