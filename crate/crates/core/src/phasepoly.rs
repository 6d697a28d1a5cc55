//! Degree-≤2 polynomials in the canonical phase-space coordinates
//! `(x, y, px, py)` with [`Mat2`] coefficients.
//!
//! Quadratic monomials are stored Weyl-ordered: the slot `{z_i, z_j}` holds
//! the coefficient of `S(z_i z_j) = (z_i z_j + z_j z_i)/2`. With that
//! convention two polynomials are equal as operators iff all fifteen slots
//! agree, so every "= 0" claim reduces to a slot-wise norm.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::error::{Error, Result};
use crate::mat2::{anticommutator, commutator, Mat2};

/// Canonical coordinate, ordered `x < y < px < py`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    X,
    Y,
    Px,
    Py,
}

impl Coord {
    pub const ALL: [Coord; 4] = [Coord::X, Coord::Y, Coord::Px, Coord::Py];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Coord {
        Coord::ALL[i]
    }

    pub fn label(self) -> &'static str {
        match self {
            Coord::X => "x",
            Coord::Y => "y",
            Coord::Px => "px",
            Coord::Py => "py",
        }
    }

    /// The conjugate momentum of a position (and vice versa).
    pub fn conjugate(self) -> Coord {
        match self {
            Coord::X => Coord::Px,
            Coord::Y => Coord::Py,
            Coord::Px => Coord::X,
            Coord::Py => Coord::Y,
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `[z_i, z_j] = i Ω_ij` on the canonical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticForm {
    omega: [[f64; 4]; 4],
}

impl SymplecticForm {
    /// `Ω(x,px) = Ω(y,py) = ħ`, all other independent entries zero.
    pub fn canonical(hbar: f64) -> Self {
        let mut omega = [[0.0; 4]; 4];
        for (q, p) in [(Coord::X, Coord::Px), (Coord::Y, Coord::Py)] {
            omega[q.index()][p.index()] = hbar;
            omega[p.index()][q.index()] = -hbar;
        }
        Self { omega }
    }

    pub fn from_matrix(omega: [[f64; 4]; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                if omega[i][j] != -omega[j][i] {
                    return Err(Error::InvalidParameter(format!(
                        "symplectic form is not antisymmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { omega })
    }

    #[inline]
    pub fn get(&self, a: Coord, b: Coord) -> f64 {
        self.omega[a.index()][b.index()]
    }

    pub fn matrix(&self) -> [[f64; 4]; 4] {
        self.omega
    }
}

/// Number of unordered coordinate pairs.
pub const N_QUAD: usize = 10;

/// Slot index of the unordered pair `{a, b}`.
#[inline]
pub fn quad_index(a: Coord, b: Coord) -> usize {
    let (i, j) = if a <= b { (a.index(), b.index()) } else { (b.index(), a.index()) };
    // rows of the upper triangle: 4, 3, 2, 1 entries
    let offset = [0, 4, 7, 9][i];
    offset + (j - i)
}

/// Inverse of [`quad_index`].
pub fn quad_pair(k: usize) -> (Coord, Coord) {
    const PAIRS: [(usize, usize); N_QUAD] = [
        (0, 0),
        (0, 1),
        (0, 2),
        (0, 3),
        (1, 1),
        (1, 2),
        (1, 3),
        (2, 2),
        (2, 3),
        (3, 3),
    ];
    let (i, j) = PAIRS[k];
    (Coord::from_index(i), Coord::from_index(j))
}

/// Operator polynomial `C + Σ L_i z_i + Σ Q_{ij} S(z_i z_j)`.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct PhasePoly {
    pub constant: Mat2,
    pub linear: [Mat2; 4],
    pub quadratic: [Mat2; N_QUAD],
}

/// Identifies one of the fifteen coefficient slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Constant,
    Linear(Coord),
    Quadratic(Coord, Coord),
}

impl Slot {
    pub fn label(&self) -> String {
        match self {
            Slot::Constant => "1".to_string(),
            Slot::Linear(c) => c.label().to_string(),
            Slot::Quadratic(a, b) => format!("{}*{}", a.label(), b.label()),
        }
    }
}

impl PhasePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(m: Mat2) -> Self {
        Self {
            constant: m,
            ..Self::default()
        }
    }

    /// `m · z`
    pub fn linear_term(z: Coord, m: Mat2) -> Self {
        let mut p = Self::default();
        p.linear[z.index()] = m;
        p
    }

    /// `m · S(a b)`
    pub fn quadratic_term(a: Coord, b: Coord, m: Mat2) -> Self {
        let mut p = Self::default();
        p.quadratic[quad_index(a, b)] = m;
        p
    }

    /// `𝕀 · z`
    pub fn coord(z: Coord) -> Self {
        Self::linear_term(z, Mat2::identity())
    }

    pub fn linear_coeff(&self, z: Coord) -> Mat2 {
        self.linear[z.index()]
    }

    pub fn quadratic_coeff(&self, a: Coord, b: Coord) -> Mat2 {
        self.quadratic[quad_index(a, b)]
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|m| m.scale(s))
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Applies `f` to every coefficient slot.
    pub fn map(&self, f: impl Fn(&Mat2) -> Mat2) -> Self {
        Self {
            constant: f(&self.constant),
            linear: self.linear.map(|m| f(&m)),
            quadratic: self.quadratic.map(|m| f(&m)),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(&Mat2, &Mat2) -> Mat2) -> Self {
        let mut out = Self {
            constant: f(&self.constant, &other.constant),
            ..Self::default()
        };
        for k in 0..4 {
            out.linear[k] = f(&self.linear[k], &other.linear[k]);
        }
        for k in 0..N_QUAD {
            out.quadratic[k] = f(&self.quadratic[k], &other.quadratic[k]);
        }
        out
    }

    /// All fifteen slots in canonical order.
    pub fn slots(&self) -> impl Iterator<Item = (Slot, &Mat2)> + '_ {
        std::iter::once((Slot::Constant, &self.constant))
            .chain(
                self.linear
                    .iter()
                    .enumerate()
                    .map(|(k, m)| (Slot::Linear(Coord::from_index(k)), m)),
            )
            .chain(self.quadratic.iter().enumerate().map(|(k, m)| {
                let (a, b) = quad_pair(k);
                (Slot::Quadratic(a, b), m)
            }))
    }

    /// 0, 1 or 2; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        if self.quadratic.iter().any(|m| !m.is_zero()) {
            2
        } else if self.linear.iter().any(|m| !m.is_zero()) {
            1
        } else {
            0
        }
    }

    pub fn is_zero(&self) -> bool {
        self.slots().all(|(_, m)| m.is_zero())
    }

    pub fn residual_norm(&self) -> f64 {
        ps_residual_norm(self)
    }

    pub fn hermitian_defect(&self) -> f64 {
        ps_hermitian_check(self)
    }

    /// Largest slot-wise Frobenius distance to `other`.
    pub fn max_slot_distance(&self, other: &Self) -> f64 {
        (*self - *other).residual_norm()
    }
}

impl fmt::Debug for PhasePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (slot, m) in self.slots().filter(|(_, m)| !m.is_zero()) {
            map.entry(&slot.label(), m);
        }
        map.finish()
    }
}

impl Serialize for PhasePoly {
    /// Nonzero slots only, keyed by monomial label (`"1"`, `"x"`, `"x*px"`, …).
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let nonzero: Vec<_> = self.slots().filter(|(_, m)| !m.is_zero()).collect();
        let mut map = serializer.serialize_map(Some(nonzero.len()))?;
        for (slot, m) in nonzero {
            map.serialize_entry(&slot.label(), m)?;
        }
        map.end()
    }
}

impl Add for PhasePoly {
    type Output = PhasePoly;
    fn add(self, rhs: PhasePoly) -> PhasePoly {
        self.zip(&rhs, |a, b| *a + *b)
    }
}

impl AddAssign for PhasePoly {
    fn add_assign(&mut self, rhs: PhasePoly) {
        *self = *self + rhs;
    }
}

impl Sub for PhasePoly {
    type Output = PhasePoly;
    fn sub(self, rhs: PhasePoly) -> PhasePoly {
        self.zip(&rhs, |a, b| *a - *b)
    }
}

impl Neg for PhasePoly {
    type Output = PhasePoly;
    fn neg(self) -> PhasePoly {
        self.map(|m| -*m)
    }
}

impl Mul<C64> for PhasePoly {
    type Output = PhasePoly;
    fn mul(self, rhs: C64) -> PhasePoly {
        self.scale(rhs)
    }
}

impl Mul<f64> for PhasePoly {
    type Output = PhasePoly;
    fn mul(self, rhs: f64) -> PhasePoly {
        self.scale_re(rhs)
    }
}

impl std::iter::Sum for PhasePoly {
    fn sum<It: Iterator<Item = PhasePoly>>(iter: It) -> PhasePoly {
        iter.fold(PhasePoly::zero(), |acc, p| acc + p)
    }
}

/// Slot-wise `Σ c_k P_k`.
pub fn ps_linear_combine(terms: &[(C64, PhasePoly)]) -> PhasePoly {
    terms.iter().map(|(c, p)| p.scale(*c)).sum()
}

/// Exact operator commutator of two degree-≤1 polynomials.
///
/// With `P = Σ M_i z_i + M₀` and `Q = Σ N_j z_j + N₀`,
///
/// ```text
/// [P, Q] = Σ_ij ( [M_i, N_j] S(z_i z_j) + (i/2) Ω_ij {M_i, N_j} )
///        + Σ_i [M_i, N₀] z_i + Σ_j [M₀, N_j] z_j + [M₀, N₀]
/// ```
pub fn ps_commutator(p: &PhasePoly, q: &PhasePoly, omega: &SymplecticForm) -> Result<PhasePoly> {
    if p.degree() > 1 {
        return Err(Error::Degree("left operand"));
    }
    if q.degree() > 1 {
        return Err(Error::Degree("right operand"));
    }
    let half_i = C64::new(0.0, 0.5);
    let mut out = PhasePoly::constant(commutator(&p.constant, &q.constant));

    for zi in Coord::ALL {
        let mi = p.linear_coeff(zi);
        out.linear[zi.index()] += commutator(&mi, &q.constant) + commutator(&p.constant, &q.linear_coeff(zi));
        if mi.is_zero() {
            continue;
        }
        for zj in Coord::ALL {
            let nj = q.linear_coeff(zj);
            if nj.is_zero() {
                continue;
            }
            out.quadratic[quad_index(zi, zj)] += commutator(&mi, &nj);
            let w = omega.get(zi, zj);
            if w != 0.0 {
                out.constant += anticommutator(&mi, &nj).scale(half_i * w);
            }
        }
    }
    Ok(out)
}

/// Largest slot Frobenius norm; zero certifies the polynomial vanishes.
pub fn ps_residual_norm(p: &PhasePoly) -> f64 {
    p.slots().map(|(_, m)| m.frobenius_norm()).fold(0.0, f64::max)
}

/// Largest slot-wise `‖C − C†‖_F`. Since the coordinates and the Weyl
/// monomials are Hermitian, zero certifies a Hermitian operator.
pub fn ps_hermitian_check(p: &PhasePoly) -> f64 {
    p.slots().map(|(_, m)| m.hermiticity_defect()).fold(0.0, f64::max)
}

/// User-supplied time function with its analytic derivative.
#[derive(Clone)]
pub struct CustomProfile {
    pub value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

/// Scalar time dependence of one term of a [`TimePhasePoly`].
#[derive(Clone)]
pub enum TimeProfile {
    Constant(f64),
    /// `amplitude · e^{rate·t}`
    Exponential { amplitude: f64, rate: f64 },
    Custom(CustomProfile),
}

impl fmt::Debug for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeProfile::Constant(c) => write!(f, "Constant({c})"),
            TimeProfile::Exponential { amplitude, rate } => {
                write!(f, "Exponential({amplitude}·e^({rate}t))")
            }
            TimeProfile::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl TimeProfile {
    pub fn custom(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TimeProfile::Custom(CustomProfile {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(c) => *c,
            TimeProfile::Exponential { amplitude, rate } => amplitude * (rate * t).exp(),
            TimeProfile::Custom(c) => (c.value)(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(_) => 0.0,
            TimeProfile::Exponential { amplitude, rate } => amplitude * rate * (rate * t).exp(),
            TimeProfile::Custom(c) => (c.derivative)(t),
        }
    }

    /// True when the profile is provably constant in time.
    pub fn is_constant(&self) -> bool {
        match self {
            TimeProfile::Constant(_) => true,
            TimeProfile::Exponential { amplitude, rate } => *amplitude == 0.0 || *rate == 0.0,
            TimeProfile::Custom(_) => false,
        }
    }
}

/// `Σ_k g_k(t) P_k` with scalar time profiles `g_k` and fixed polynomials.
#[derive(Clone, Debug, Default)]
pub struct TimePhasePoly {
    pub terms: Vec<(TimeProfile, PhasePoly)>,
}

impl TimePhasePoly {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(p: PhasePoly) -> Self {
        Self {
            terms: vec![(TimeProfile::Constant(1.0), p)],
        }
    }

    pub fn with_term(mut self, profile: TimeProfile, p: PhasePoly) -> Self {
        self.terms.push((profile, p));
        self
    }

    pub fn push(&mut self, profile: TimeProfile, p: PhasePoly) {
        self.terms.push((profile, p));
    }

    pub fn at(&self, t: f64) -> PhasePoly {
        self.terms.iter().map(|(g, p)| p.scale_re(g.value(t))).sum()
    }

    /// Analytic `∂/∂t`.
    pub fn derivative(&self, t: f64) -> PhasePoly {
        self.terms.iter().map(|(g, p)| p.scale_re(g.derivative(t))).sum()
    }

    pub fn is_time_constant(&self) -> bool {
        self.terms.iter().all(|(g, p)| g.is_constant() || p.is_zero())
    }

    /// Largest degree among the terms.
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, p)| p.degree()).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Operator expansion on explicit monomial strings, normal-ordered one
    /// swap at a time with `z_b z_a = z_a z_b − iΩ_ab`; independent of the
    /// closed commutator formula.
    mod oracle {
        use super::*;

        pub type Words = BTreeMap<Vec<usize>, Mat2>;

        pub fn from_poly(p: &PhasePoly) -> Words {
            assert!(p.degree() <= 1);
            let mut w = Words::new();
            w.insert(vec![], p.constant);
            for z in Coord::ALL {
                w.insert(vec![z.index()], p.linear_coeff(z));
            }
            w
        }

        pub fn product(a: &Words, b: &Words) -> Words {
            let mut out = Words::new();
            for (wa, ma) in a {
                for (wb, mb) in b {
                    let mut word = wa.clone();
                    word.extend_from_slice(wb);
                    *out.entry(word).or_default() += *ma * *mb;
                }
            }
            out
        }

        fn normal_order(word: Vec<usize>, coeff: Mat2, omega: &SymplecticForm, out: &mut Words) {
            if let Some(k) = (0..word.len().saturating_sub(1)).find(|&k| word[k] > word[k + 1]) {
                let (hi, lo) = (word[k], word[k + 1]);
                let mut swapped = word.clone();
                swapped.swap(k, k + 1);
                normal_order(swapped, coeff, omega, out);
                // z_hi z_lo = z_lo z_hi + [z_hi, z_lo] = z_lo z_hi + iΩ(hi, lo)
                let w = omega.get(Coord::from_index(hi), Coord::from_index(lo));
                if w != 0.0 {
                    let mut shorter = word[..k].to_vec();
                    shorter.extend_from_slice(&word[k + 2..]);
                    normal_order(shorter, coeff.scale(c(0.0, w)), omega, out);
                }
            } else {
                *out.entry(word).or_default() += coeff;
            }
        }

        pub fn commutator(p: &PhasePoly, q: &PhasePoly, omega: &SymplecticForm) -> PhasePoly {
            let (a, b) = (from_poly(p), from_poly(q));
            let mut raw = product(&a, &b);
            for (w, m) in product(&b, &a) {
                *raw.entry(w).or_default() -= m;
            }
            let mut ordered = Words::new();
            for (w, m) in raw {
                normal_order(w, m, omega, &mut ordered);
            }
            // normal-ordered → Weyl: z_i z_j = S(z_i z_j) + (i/2)Ω_ij for i < j
            let mut out = PhasePoly::zero();
            for (w, m) in ordered {
                match w.as_slice() {
                    [] => out.constant += m,
                    [i] => out.linear[*i] += m,
                    [i, j] => {
                        let (zi, zj) = (Coord::from_index(*i), Coord::from_index(*j));
                        out.quadratic[quad_index(zi, zj)] += m;
                        if i != j {
                            out.constant += m.scale(c(0.0, 0.5 * omega.get(zi, zj)));
                        }
                    }
                    _ => unreachable!("degree-1 inputs give words of length <= 2"),
                }
            }
            out
        }
    }

    fn arb_c64() -> impl Strategy<Value = C64> {
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| C64::new(re, im))
    }

    fn arb_mat2() -> impl Strategy<Value = Mat2> {
        proptest::array::uniform4(arb_c64()).prop_map(|[a, b, c, d]| Mat2::new(a, b, c, d))
    }

    fn arb_linear() -> impl Strategy<Value = PhasePoly> {
        proptest::array::uniform5(arb_mat2()).prop_map(|[m0, mx, my, mpx, mpy]| {
            let mut p = PhasePoly::constant(m0);
            p.linear = [mx, my, mpx, mpy];
            p
        })
    }

    fn arb_scalar_linear() -> impl Strategy<Value = PhasePoly> {
        proptest::array::uniform5(arb_c64()).prop_map(|cs| {
            let mut p = PhasePoly::constant(Mat2::scalar(cs[0]));
            for k in 0..4 {
                p.linear[k] = Mat2::scalar(cs[k + 1]);
            }
            p
        })
    }

    fn arb_omega() -> impl Strategy<Value = SymplecticForm> {
        proptest::array::uniform6(-2.0f64..2.0).prop_map(|w| {
            let mut m = [[0.0; 4]; 4];
            let mut k = 0;
            for i in 0..4 {
                for j in i + 1..4 {
                    m[i][j] = w[k];
                    m[j][i] = -w[k];
                    k += 1;
                }
            }
            SymplecticForm::from_matrix(m).unwrap()
        })
    }

    #[test]
    fn quad_index_round_trip() {
        for k in 0..N_QUAD {
            let (a, b) = quad_pair(k);
            assert_eq!(quad_index(a, b), k);
            assert_eq!(quad_index(b, a), k);
        }
    }

    #[test]
    fn linear_combine_examples() {
        let p = PhasePoly::coord(Coord::X) + PhasePoly::constant(Mat2::sigma3());
        let q = PhasePoly::coord(Coord::Py);
        assert_eq!(ps_linear_combine(&[(c(1., 0.), p), (c(0., 0.), q)]), p);
        assert!(ps_linear_combine(&[(c(1., 0.), p), (c(-1., 0.), p)]).is_zero());
        let x = PhasePoly::coord(Coord::X);
        assert_eq!(
            ps_linear_combine(&[(c(2., 0.), x), (c(3., 0.), x)]),
            PhasePoly::linear_term(Coord::X, Mat2::real_scalar(5.0))
        );
    }

    #[test]
    fn canonical_commutator() {
        let omega = SymplecticForm::canonical(1.0);
        let r = ps_commutator(&PhasePoly::coord(Coord::X), &PhasePoly::coord(Coord::Px), &omega).unwrap();
        assert_eq!(r, PhasePoly::constant(Mat2::scalar(c(0.0, 1.0))));
        let r = ps_commutator(&PhasePoly::coord(Coord::X), &PhasePoly::coord(Coord::X), &omega).unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn spinor_momentum_commutator_matches_oracle() {
        let omega = SymplecticForm::canonical(1.0);
        let p = PhasePoly::linear_term(Coord::Px, Mat2::alpha1());
        let q = PhasePoly::linear_term(Coord::Py, Mat2::alpha2());
        let r = ps_commutator(&p, &q, &omega).unwrap();
        let expected = PhasePoly::quadratic_term(Coord::Px, Coord::Py, Mat2::sigma3().scale(c(0.0, 2.0)));
        assert_eq!(oracle::commutator(&p, &q, &omega), expected);
        assert!(r.max_slot_distance(&expected) < 1e-15);
    }

    #[test]
    fn rejects_quadratic_input() {
        let omega = SymplecticForm::canonical(1.0);
        let q = PhasePoly::quadratic_term(Coord::X, Coord::X, Mat2::identity());
        let x = PhasePoly::coord(Coord::X);
        assert_eq!(ps_commutator(&q, &x, &omega), Err(Error::Degree("left operand")));
        assert_eq!(ps_commutator(&x, &q, &omega), Err(Error::Degree("right operand")));
    }

    #[test]
    fn residual_norm_examples() {
        assert_eq!(ps_residual_norm(&PhasePoly::zero()), 0.0);
        let ihbar = PhasePoly::constant(Mat2::scalar(c(0.0, 1.0)));
        assert!((ps_residual_norm(&ihbar) - 2f64.sqrt()).abs() < 1e-15);
        let xs1 = PhasePoly::linear_term(Coord::X, Mat2::sigma1());
        assert!((ps_residual_norm(&xs1) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hermitian_check_examples() {
        let p = PhasePoly::coord(Coord::X) + PhasePoly::coord(Coord::Px);
        assert_eq!(ps_hermitian_check(&p), 0.0);
        // iσ₁ − (iσ₁)† = 2iσ₁, ‖2iσ₁‖_F = 2√2
        let q = PhasePoly::linear_term(Coord::X, Mat2::sigma1().scale(c(0.0, 1.0)));
        assert!((ps_hermitian_check(&q) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn time_profile_derivative_matches_finite_difference() {
        let h = 1e-5;
        let tp = TimePhasePoly::constant(PhasePoly::coord(Coord::X))
            .with_term(
                TimeProfile::Exponential { amplitude: 0.3, rate: 0.7 },
                PhasePoly::linear_term(Coord::Px, Mat2::alpha1()),
            )
            .with_term(
                TimeProfile::Exponential { amplitude: -1.2, rate: -0.4 },
                PhasePoly::quadratic_term(Coord::Y, Coord::Py, Mat2::beta()),
            )
            .with_term(TimeProfile::custom(f64::sin, f64::cos), PhasePoly::coord(Coord::Y));
        for &t in &[0.0, 0.5, 1.3, 2.0] {
            let fd = (tp.at(t + h) - tp.at(t - h)).scale_re(0.5 / h);
            let an = tp.derivative(t);
            let scale = an.residual_norm().max(1.0);
            assert!(fd.max_slot_distance(&an) / scale < 1e-8);
        }
        assert!(!tp.is_time_constant());
        assert!(TimePhasePoly::constant(PhasePoly::coord(Coord::X))
            .with_term(TimeProfile::Exponential { amplitude: 0.0, rate: 3.0 }, PhasePoly::coord(Coord::Y))
            .is_time_constant());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn matches_string_oracle(p in arb_linear(), q in arb_linear(), omega in arb_omega()) {
            let fast = ps_commutator(&p, &q, &omega).unwrap();
            let slow = oracle::commutator(&p, &q, &omega);
            prop_assert!(fast.max_slot_distance(&slow) <= 1e-12);
        }

        #[test]
        fn antisymmetric(p in arb_linear(), q in arb_linear()) {
            let omega = SymplecticForm::canonical(1.0);
            let pq = ps_commutator(&p, &q, &omega).unwrap();
            let qp = ps_commutator(&q, &p, &omega).unwrap();
            prop_assert!((pq + qp).residual_norm() <= 1e-12);
        }

        #[test]
        fn bilinear(p in arb_linear(), q in arb_linear(), r in arb_linear(), a in arb_c64(), b in arb_c64()) {
            let omega = SymplecticForm::canonical(0.7);
            let lhs = ps_commutator(&(p.scale(a) + q.scale(b)), &r, &omega).unwrap();
            let rhs = ps_commutator(&p, &r, &omega).unwrap().scale(a)
                + ps_commutator(&q, &r, &omega).unwrap().scale(b);
            prop_assert!(lhs.max_slot_distance(&rhs) <= 1e-12);
            let lhs = ps_commutator(&r, &(p.scale(a) + q.scale(b)), &omega).unwrap();
            let rhs = ps_commutator(&r, &p, &omega).unwrap().scale(a)
                + ps_commutator(&r, &q, &omega).unwrap().scale(b);
            prop_assert!(lhs.max_slot_distance(&rhs) <= 1e-12);
        }

        #[test]
        fn jacobi_scalar(p in arb_scalar_linear(), q in arb_scalar_linear(), r in arb_scalar_linear(), omega in arb_omega()) {
            let comm = |a: &PhasePoly, b: &PhasePoly| ps_commutator(a, b, &omega).unwrap();
            let sum = comm(&comm(&p, &q), &r) + comm(&comm(&q, &r), &p) + comm(&comm(&r, &p), &q);
            prop_assert!(sum.residual_norm() <= 1e-12);
        }
    }
}
