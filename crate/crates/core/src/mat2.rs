//! Complex 2×2 matrices and the Pauli/Dirac basis.
//!
//! In (2+1) dimensions the Dirac matrices reduce to Pauli matrices:
//! `α₁ = σ₁`, `α₂ = σ₂`, `β = σ₃`. Every spinor-space coefficient in the
//! crate is a [`Mat2`].

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64 as C64;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Row-major complex 2×2 matrix.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self([[a, b], [c, d]])
    }

    pub const fn zero() -> Self {
        Self([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn sigma1() -> Self {
        Self([[ZERO, ONE], [ONE, ZERO]])
    }

    pub const fn sigma2() -> Self {
        Self([[ZERO, C64::new(0.0, -1.0)], [I, ZERO]])
    }

    pub const fn sigma3() -> Self {
        Self([[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]])
    }

    /// `α₁ = σ₁`
    pub const fn alpha1() -> Self {
        Self::sigma1()
    }

    /// `α₂ = σ₂`
    pub const fn alpha2() -> Self {
        Self::sigma2()
    }

    /// `β = σ₃`
    pub const fn beta() -> Self {
        Self::sigma3()
    }

    /// `σ_a` for `a ∈ {1, 2, 3}`.
    pub fn sigma(a: usize) -> Self {
        match a {
            1 => Self::sigma1(),
            2 => Self::sigma2(),
            3 => Self::sigma3(),
            _ => panic!("Pauli index must be 1, 2 or 3, got {a}"),
        }
    }

    pub fn scalar(c: C64) -> Self {
        Self::identity().scale(c)
    }

    pub fn real_scalar(c: f64) -> Self {
        Self::scalar(C64::new(c, 0.0))
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[r][c]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Self([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|z| *z == ZERO)
    }

    /// `‖M − M†‖_F`
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).frobenius_norm()
    }

    pub fn pauli_decompose(&self) -> PauliCoeffs {
        pauli_decompose(self)
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            m[0][0], m[0][1], m[1][0], m[1][1]
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, rhs: Mat2) {
        *self = *self + rhs;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + (-rhs)
    }
}

impl SubAssign for Mat2 {
    fn sub_assign(&mut self, rhs: Mat2) {
        *self = *self - rhs;
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: C64) -> Mat2 {
        self.scale(rhs)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: f64) -> Mat2 {
        self.scale_re(rhs)
    }
}

impl Serialize for Mat2 {
    /// `[[[re, im], [re, im]], [[re, im], [re, im]]]`
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut rows = serializer.serialize_seq(Some(2))?;
        for row in &self.0 {
            let pair: [[f64; 2]; 2] = [[row[0].re, row[0].im], [row[1].re, row[1].im]];
            rows.serialize_element(&pair)?;
        }
        rows.end()
    }
}

/// `AB − BA`
pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    *a * *b - *b * *a
}

/// `AB + BA`
pub fn anticommutator(a: &Mat2, b: &Mat2) -> Mat2 {
    *a * *b + *b * *a
}

/// Coefficients of `M = c_I·𝕀 + c_1·σ₁ + c_2·σ₂ + c_3·σ₃`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PauliCoeffs {
    pub c_i: C64,
    pub c_1: C64,
    pub c_2: C64,
    pub c_3: C64,
}

impl PauliCoeffs {
    pub fn compose(&self) -> Mat2 {
        Mat2::identity().scale(self.c_i)
            + Mat2::sigma1().scale(self.c_1)
            + Mat2::sigma2().scale(self.c_2)
            + Mat2::sigma3().scale(self.c_3)
    }

    /// Largest modulus among the traceless (spin-dependent) coefficients.
    pub fn spin_part_max(&self) -> f64 {
        self.c_1.norm().max(self.c_2.norm()).max(self.c_3.norm())
    }
}

/// Trace formulas `c_I = Tr(M)/2`, `c_a = Tr(σ_a M)/2`.
pub fn pauli_decompose(m: &Mat2) -> PauliCoeffs {
    let half = 0.5;
    PauliCoeffs {
        c_i: m.trace() * half,
        c_1: (Mat2::sigma1() * *m).trace() * half,
        c_2: (Mat2::sigma2() * *m).trace() * half,
        c_3: (Mat2::sigma3() * *m).trace() * half,
    }
}

/// One checked identity of the Dirac algebra.
#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub relation: String,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiracAlgebraReport {
    pub relations: Vec<RelationCheck>,
    pub max_deviation: f64,
}

impl DiracAlgebraReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }

    pub fn failures(&self, tol: f64) -> Vec<&RelationCheck> {
        self.relations.iter().filter(|r| r.deviation > tol).collect()
    }
}

/// Checks the anticommutation relations on the standard matrices.
pub fn verify_dirac_algebra() -> DiracAlgebraReport {
    verify_dirac_algebra_for(&Mat2::alpha1(), &Mat2::alpha2(), &Mat2::beta())
}

/// Checks `{α_i, α_j} = 2δ_ij`, `{α_i, β} = 0` and `α_i² = β² = 𝕀` for the
/// given candidate matrices. Deviations are Frobenius norms.
pub fn verify_dirac_algebra_for(alpha1: &Mat2, alpha2: &Mat2, beta: &Mat2) -> DiracAlgebraReport {
    let alphas = [("alpha1", alpha1), ("alpha2", alpha2)];
    let id = Mat2::identity();
    let mut relations = Vec::with_capacity(9);

    for (i, (ni, ai)) in alphas.iter().enumerate() {
        for (j, (nj, aj)) in alphas.iter().enumerate() {
            let target = if i == j { id * 2.0 } else { Mat2::zero() };
            relations.push(RelationCheck {
                relation: format!("{{{ni},{nj}}} = {}", if i == j { "2I" } else { "0" }),
                deviation: (anticommutator(ai, aj) - target).frobenius_norm(),
            });
        }
    }
    for (n, a) in &alphas {
        relations.push(RelationCheck {
            relation: format!("{{{n},beta}} = 0"),
            deviation: anticommutator(a, beta).frobenius_norm(),
        });
    }
    for (n, a) in alphas.iter().chain(std::iter::once(&("beta", beta))) {
        relations.push(RelationCheck {
            relation: format!("{n}^2 = I"),
            deviation: (**a * **a - id).frobenius_norm(),
        });
    }

    let max_deviation = relations.iter().map(|r| r.deviation).fold(0.0, f64::max);
    DiracAlgebraReport {
        relations,
        max_deviation,
    }
}
