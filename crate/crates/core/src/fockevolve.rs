//! Truncated two-mode Fock representation and unitary time evolution.
//!
//! Basis states are `|n_x, n_y⟩ ⊗ |s⟩` with `0 ≤ n < N`, stored at index
//! `(n_x·N + n_y)·2 + s`. Per mode `x = ℓ(a + a†)/√2` and
//! `px = iħ(a† − a)/(√2 ℓ)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariant::{invariance_residual, InvariantAnsatz};
use crate::lrsolve::{EnergySeries, EnergySource};
use crate::mat2::Mat2;
use crate::ncmodel::{bopp_shift, build_h_nc, NCParams, NcCoord};
use crate::phasepoly::{quad_pair, Coord, PhasePoly, Slot, TimePhasePoly, TimeProfile, N_QUAD};
use crate::sparse::SparseMatrix;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance for grid uniformity.
const GRID_RTOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct FockRep {
    pub n: usize,
    pub ell: f64,
    pub hbar: f64,
    pub dim: usize,
    /// `x, y, px, py` on the N² orbital space (no spinor factor).
    orbital: [SparseMatrix; 4],
    /// Symmetrised products `(Z_iZ_j + Z_jZ_i)/2` on the orbital space.
    orbital_quad: Vec<SparseMatrix>,
}

fn mode_ladder(n: usize) -> SparseMatrix {
    SparseMatrix::from_triplets(n, n, (1..n).map(|k| (k - 1, k, C64::new((k as f64).sqrt(), 0.0))).collect())
}

fn mat2_sparse(m: &Mat2) -> SparseMatrix {
    let mut t = Vec::new();
    for r in 0..2 {
        for c in 0..2 {
            t.push((r, c, m.get(r, c)));
        }
    }
    SparseMatrix::from_triplets(2, 2, t)
}

/// Builds the representation; `N ≥ 2`, `ell > 0`, `hbar > 0`.
pub fn build_fock_rep(n: usize, ell: f64, hbar: f64) -> Result<FockRep> {
    if n < 2 {
        return Err(Error::Size(format!("Fock truncation N must be at least 2, got {n}")));
    }
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::InvalidParameter(format!("oscillator length must be positive, got {ell}")));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    let a = mode_ladder(n);
    let ad = a.adjoint();
    let s2 = std::f64::consts::SQRT_2;
    let x = a.add(&ad).scale(C64::new(ell / s2, 0.0));
    let p = ad.axpy(-ONE, &a).scale(C64::new(0.0, hbar / (s2 * ell)));
    let id = SparseMatrix::identity(n);
    let orbital = [x.kron(&id), id.kron(&x), p.kron(&id), id.kron(&p)];
    let orbital_quad = (0..N_QUAD)
        .map(|k| {
            let (i, j) = quad_pair(k);
            let (zi, zj) = (&orbital[i.index()], &orbital[j.index()]);
            zi.mul(zj).add(&zj.mul(zi)).scale(C64::new(0.5, 0.0))
        })
        .collect();
    Ok(FockRep { n, ell, hbar, dim: 2 * n * n, orbital, orbital_quad })
}

impl FockRep {
    /// `(n_x, n_y, s)` of a basis index.
    pub fn decode(&self, idx: usize) -> (usize, usize, usize) {
        (idx / (2 * self.n), (idx / 2) % self.n, idx % 2)
    }

    pub fn encode(&self, nx: usize, ny: usize, s: usize) -> usize {
        (nx * self.n + ny) * 2 + s
    }

    /// Coordinate operator tensored with the spinor identity.
    pub fn coord(&self, z: Coord) -> SparseMatrix {
        self.orbital[z.index()].kron(&SparseMatrix::identity(2))
    }

    pub fn identity(&self) -> SparseMatrix {
        SparseMatrix::identity(self.dim)
    }

    /// Basis indices with `n_x, n_y < N − margin`.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        (0..self.dim)
            .filter(|&k| {
                let (nx, ny, _) = self.decode(k);
                nx + margin < self.n && ny + margin < self.n
            })
            .collect()
    }

    /// `|0,0⟩ ⊗ |↑⟩`.
    pub fn vacuum_spin_up(&self) -> Vec<C64> {
        let mut v = vec![ZERO; self.dim];
        v[0] = ONE;
        v
    }

    /// Product of truncated coherent states `|α_x⟩|α_y⟩` with spinor
    /// `spin`, renormalised after truncation.
    pub fn coherent_state(&self, alpha_x: C64, alpha_y: C64, spin: [C64; 2]) -> Vec<C64> {
        let mode = |a: C64| {
            let mut c = vec![ZERO; self.n];
            c[0] = ONE;
            for k in 1..self.n {
                c[k] = c[k - 1] * a / (k as f64).sqrt();
            }
            c
        };
        let (cx, cy) = (mode(alpha_x), mode(alpha_y));
        let mut v = vec![ZERO; self.dim];
        for nx in 0..self.n {
            for ny in 0..self.n {
                for s in 0..2 {
                    v[self.encode(nx, ny, s)] = cx[nx] * cy[ny] * spin[s];
                }
            }
        }
        let norm = vec_norm(&v);
        v.iter_mut().for_each(|z| *z /= norm);
        v
    }
}

/// Matrix of a [`PhasePoly`]; Weyl-ordered quadratics become symmetrised
/// matrix products.
pub fn represent(p: &PhasePoly, rep: &FockRep) -> SparseMatrix {
    let mut acc = SparseMatrix::zeros(rep.dim, rep.dim);
    for (slot, m) in p.slots() {
        if m.is_zero() {
            continue;
        }
        let orb = match slot {
            Slot::Constant => SparseMatrix::identity(rep.n * rep.n),
            Slot::Linear(z) => rep.orbital[z.index()].clone(),
            Slot::Quadratic(a, b) => rep.orbital_quad[crate::phasepoly::quad_index(a, b)].clone(),
        };
        acc = acc.add(&orb.kron(&mat2_sparse(m)));
    }
    acc
}

/// `Σ g_k(t) M_k` with each term represented once.
#[derive(Debug, Clone)]
pub struct RepresentedOperator {
    pub dim: usize,
    pub terms: Vec<(TimeProfile, SparseMatrix)>,
}

impl RepresentedOperator {
    pub fn new(h: &TimePhasePoly, rep: &FockRep) -> Self {
        Self { dim: rep.dim, terms: h.terms.iter().map(|(g, p)| (g.clone(), represent(p, rep))).collect() }
    }

    pub fn is_time_constant(&self) -> bool {
        self.terms.iter().all(|(g, _)| g.is_constant())
    }

    pub fn at(&self, t: f64) -> SparseMatrix {
        self.terms
            .iter()
            .fold(SparseMatrix::zeros(self.dim, self.dim), |acc, (g, m)| acc.axpy(C64::new(g.value(t), 0.0), m))
    }

    /// `out = M(t) v`.
    pub fn apply(&self, t: f64, v: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        for (g, m) in &self.terms {
            m.matvec_add(C64::new(g.value(t), 0.0), v, out);
        }
    }

    /// Upper bound on the spectral norm at `t`.
    pub fn norm_bound(&self, t: f64) -> f64 {
        self.terms.iter().map(|(g, m)| g.value(t).abs() * m.norm_inf()).sum()
    }
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `⟨ψ|M|ψ⟩`.
pub fn expectation(m: &SparseMatrix, psi: &[C64]) -> Result<C64> {
    if m.ncols() != psi.len() || m.nrows() != psi.len() {
        return Err(Error::Dim { expected: m.ncols(), got: psi.len() });
    }
    Ok(inner(psi, &m.matvec(psi)?))
}

/// `ψ ← exp(−i M(t) dt) ψ` by a Taylor series run to machine precision,
/// substepping so that each substep has `‖M‖dt ≤ 1`.
fn exp_step(op: &RepresentedOperator, t: f64, dt: f64, psi: &mut Vec<C64>, term: &mut Vec<C64>, next: &mut Vec<C64>) {
    let bound = op.norm_bound(t) * dt.abs();
    let sub = bound.ceil().max(1.0) as usize;
    let h = dt / sub as f64;
    for _ in 0..sub {
        term.copy_from_slice(psi);
        let mut acc = psi.clone();
        for k in 1..200 {
            op.apply(t, term, next);
            let f = -I * (h / k as f64);
            for (a, b) in term.iter_mut().zip(next.iter()) {
                *a = f * b;
            }
            for (a, b) in acc.iter_mut().zip(term.iter()) {
                *a += b;
            }
            if vec_norm(term) <= 1e-18 * vec_norm(&acc) {
                break;
            }
        }
        *psi = acc;
    }
}

#[derive(Debug, Clone)]
pub struct EvolvedState {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    /// Largest `|‖ψ_{k+1}‖ − ‖ψ_k‖|`.
    pub max_step_norm_change: f64,
    /// Largest `|‖ψ(t)‖ − 1|`.
    pub max_norm_deviation: f64,
}

/// Checks `t_grid` has at least two points and uniform positive spacing.
pub fn uniform_step(t_grid: &[f64]) -> Result<f64> {
    if t_grid.len() < 2 {
        return Err(Error::Grid(format!("time grid needs at least 2 points, got {}", t_grid.len())));
    }
    let dt = t_grid[1] - t_grid[0];
    if !(dt > 0.0) {
        return Err(Error::Grid("time grid must be increasing".into()));
    }
    for w in t_grid.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > GRID_RTOL * dt.max(w[1].abs() * 1e-6) {
            return Err(Error::Grid(format!("nonuniform time grid: step {} differs from {dt}", w[1] - w[0])));
        }
    }
    Ok(dt)
}

/// `n` uniform intervals covering `[t0, t1]` with step as close to `dt` as
/// an integer count allows.
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t1 > t0) {
        return Err(Error::Grid(format!("need dt > 0 and t1 > t0, got dt={dt}, t0={t0}, t1={t1}")));
    }
    let n = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((0..=n).map(|k| t0 + (t1 - t0) * k as f64 / n as f64).collect())
}

/// Midpoint-exponential propagation of `psi0` over `t_grid`.
pub fn evolve(op: &RepresentedOperator, psi0: &[C64], t_grid: &[f64]) -> Result<EvolvedState> {
    if psi0.len() != op.dim {
        return Err(Error::Dim { expected: op.dim, got: psi0.len() });
    }
    let n0 = vec_norm(psi0);
    if (n0 - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("initial state must have unit norm, got {n0}")));
    }
    let dt = uniform_step(t_grid)?;
    let mut psi = psi0.to_vec();
    let (mut term, mut next) = (vec![ZERO; op.dim], vec![ZERO; op.dim]);
    let mut states = Vec::with_capacity(t_grid.len());
    states.push(psi.clone());
    let mut max_step_norm_change: f64 = 0.0;
    let mut max_norm_deviation = (n0 - 1.0).abs();
    let mut prev = n0;
    for w in t_grid.windows(2) {
        exp_step(op, 0.5 * (w[0] + w[1]), dt, &mut psi, &mut term, &mut next);
        let nrm = vec_norm(&psi);
        max_step_norm_change = max_step_norm_change.max((nrm - prev).abs());
        max_norm_deviation = max_norm_deviation.max((nrm - 1.0).abs());
        prev = nrm;
        states.push(psi.clone());
    }
    Ok(EvolvedState { times: t_grid.to_vec(), states, max_step_norm_change, max_norm_deviation })
}

/// Eigenvalues and eigenvectors (columns) of a Hermitian matrix,
/// eigenvalues ascending.
pub fn hermitian_eigen(m: &SparseMatrix) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn spectrum(m: &SparseMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Nearest-eigenvalue continuation of the instantaneous spectrum of `op`.
///
/// The starting level is the eigenvalue whose eigenvector overlaps `psi0`
/// most; afterwards the tracked value moves to the eigenvalue closest to the
/// previous one. The spectrum is recomputed every `stride` samples (once if
/// the operator is time-independent) and the series is linear in between.
pub fn track_energy(op: &RepresentedOperator, psi0: &[C64], t_grid: &[f64], stride: usize) -> Result<EnergySeries> {
    if t_grid.len() < 2 {
        return Err(Error::Grid("energy tracking needs at least 2 times".into()));
    }
    let (vals0, vecs0) = hermitian_eigen(&op.at(t_grid[0]));
    let best = (0..vals0.len())
        .map(|k| (k, vecs0.column(k).iter().zip(psi0).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
        .0;
    let e0 = vals0[best];
    if op.is_time_constant() {
        return EnergySeries::new(t_grid.to_vec(), vec![e0; t_grid.len()], EnergySource::FockTracked);
    }
    let stride = stride.max(1);
    let mut idx: Vec<usize> = (0..t_grid.len()).step_by(stride).collect();
    if *idx.last().unwrap() != t_grid.len() - 1 {
        idx.push(t_grid.len() - 1);
    }
    let mut times = vec![t_grid[0]];
    let mut values = vec![e0];
    let mut prev = e0;
    for &k in &idx[1..] {
        let spec = spectrum(&op.at(t_grid[k]));
        prev = spec.iter().copied().min_by(|a, b| (a - prev).abs().total_cmp(&(b - prev).abs())).unwrap_or(prev);
        times.push(t_grid[k]);
        values.push(prev);
    }
    let coarse = EnergySeries::new(times, values, EnergySource::FockTracked)?;
    let full = t_grid.iter().map(|&t| coarse.value_at(t)).collect();
    EnergySeries::new(t_grid.to_vec(), full, EnergySource::FockTracked)
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftSeries {
    pub times: Vec<f64>,
    pub expectation: Vec<C64>,
    /// `Re⟨I⟩_t − Re⟨I⟩_0`.
    pub drift: Vec<f64>,
    /// `max |d| / (|⟨I⟩₀| + 1)`.
    pub relative_drift: f64,
}

/// `⟨ψ(t)|I(t)|ψ(t)⟩ − ⟨ψ(0)|I(0)|ψ(0)⟩` along an evolution.
pub fn invariant_drift(inv: &RepresentedOperator, states: &EvolvedState) -> Result<DriftSeries> {
    let fixed = inv.is_time_constant().then(|| inv.at(0.0));
    let mut values = Vec::with_capacity(states.times.len());
    for (t, psi) in states.times.iter().zip(&states.states) {
        let v = match &fixed {
            Some(m) => expectation(m, psi)?,
            None => expectation(&inv.at(*t), psi)?,
        };
        values.push(v);
    }
    let e0 = values[0];
    let drift: Vec<f64> = values.iter().map(|e| e.re - e0.re).collect();
    let max = drift.iter().map(|d| d.abs()).fold(0.0, f64::max);
    Ok(DriftSeries { times: states.times.clone(), expectation: values, drift, relative_drift: max / (e0.norm() + 1.0) })
}

/// `‖P ψ(t)‖²` for the eigenprojection `P` of `inv` whose eigenvalue is
/// closest to `⟨ψ₀|I|ψ₀⟩` (degenerate levels within `tol` merged).
pub fn eigenprojection_overlap(inv: &SparseMatrix, states: &EvolvedState, tol: f64) -> Result<Vec<f64>> {
    let psi0 = &states.states[0];
    let target = expectation(inv, psi0)?.re;
    let (vals, vecs) = hermitian_eigen(inv);
    let nearest = vals.iter().copied().min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs())).unwrap();
    let cols: Vec<usize> = (0..vals.len()).filter(|&k| (vals[k] - nearest).abs() <= tol).collect();
    Ok(states
        .states
        .iter()
        .map(|psi| {
            cols.iter()
                .map(|&k| vecs.column(k).iter().zip(psi).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr())
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct UncertaintyCheck {
    pub delta_a: f64,
    pub delta_b: f64,
    /// `ΔA·ΔB`
    pub lhs: f64,
    /// `½|⟨[A,B]⟩|`
    pub rhs: f64,
    pub margin: f64,
}

/// Robertson inequality on matrices: `ΔAΔB ≥ ½|⟨[A,B]⟩|`.
pub fn uncertainty_matrices(psi: &[C64], a: &SparseMatrix, b: &SparseMatrix) -> Result<UncertaintyCheck> {
    let (apsi, bpsi) = (a.matvec(psi)?, b.matvec(psi)?);
    let (ea, eb) = (inner(psi, &apsi).re, inner(psi, &bpsi).re);
    let spread = |v: &[C64], e: f64| -> f64 {
        v.iter().zip(psi).map(|(x, p)| (x - p * e).norm_sqr()).sum::<f64>().sqrt()
    };
    let (delta_a, delta_b) = (spread(&apsi, ea), spread(&bpsi, eb));
    let lhs = delta_a * delta_b;
    let rhs = inner(&apsi, &bpsi).im.abs();
    Ok(UncertaintyCheck { delta_a, delta_b, lhs, rhs, margin: lhs - rhs })
}

pub fn uncertainty_check(psi: &[C64], a: &PhasePoly, b: &PhasePoly, rep: &FockRep) -> Result<UncertaintyCheck> {
    uncertainty_matrices(psi, &represent(a, rep), &represent(b, rep))
}

/// Integrated Ehrenfest prediction of the drift from the symbolic residual:
/// `d⟨I⟩/dt = Re(−i⟨R⟩)` with `R = [I, H] + i∂I/∂t`.
#[derive(Debug, Clone, Serialize)]
pub struct EhrenfestComparison {
    pub predicted: Vec<f64>,
    pub max_predicted: f64,
    pub max_difference: f64,
    /// Largest symbolic residual norm over the grid.
    pub symbolic_residual: f64,
}

impl EhrenfestComparison {
    /// Measured drift agrees with the prediction within `rel` of its scale.
    pub fn consistent(&self, rel: f64) -> bool {
        self.max_difference <= rel * self.max_predicted
    }
}

pub fn ehrenfest_prediction(
    p: &NCParams,
    ans: &InvariantAnsatz,
    h: &TimePhasePoly,
    rep: &FockRep,
    states: &EvolvedState,
    drift: &DriftSeries,
) -> Result<EhrenfestComparison> {
    let omega = p.symplectic_form();
    let mut rate = Vec::with_capacity(states.times.len());
    let mut symbolic_residual: f64 = 0.0;
    for (t, psi) in states.times.iter().zip(&states.states) {
        let r = invariance_residual(ans, h, &omega, *t)?;
        symbolic_residual = symbolic_residual.max(r.residual_norm());
        rate.push((-I * expectation(&represent(&r, rep), psi)?).re);
    }
    let mut predicted = vec![0.0; rate.len()];
    for k in 1..rate.len() {
        predicted[k] = predicted[k - 1] + 0.5 * (states.times[k] - states.times[k - 1]) * (rate[k] + rate[k - 1]);
    }
    let max_predicted = predicted.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let max_difference = predicted.iter().zip(&drift.drift).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(EhrenfestComparison { predicted, max_predicted, max_difference, symbolic_residual })
}

/// Settings of a full evolution run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvolutionSettings {
    pub n: usize,
    /// Defaults to the magnetic length (or 1 without a field).
    pub ell: Option<f64>,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    /// Spectrum recomputation stride for energy tracking; 0 disables it.
    pub energy_stride: usize,
    /// Coherent-state displacements `(α_x, α_y)` of the initial state.
    pub displacement: [C64; 2],
    /// Initial spinor (normalised on use).
    pub spin: [C64; 2],
}

impl Default for EvolutionSettings {
    /// `N = 16`, `t ∈ [0, 1]`, `dt = 10⁻³`, initial state
    /// `|0,0⟩ ⊗ (1, i)/√2`.
    ///
    /// With a σ_z eigenspinor the state is symmetric under a π rotation
    /// about z, which pins every linear expectation value at zero.
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            n: 16,
            ell: None,
            t0: 0.0,
            t1: 1.0,
            dt: 1e-3,
            energy_stride: 100,
            displacement: [ZERO; 2],
            spin: [C64::new(h, 0.0), C64::new(0.0, h)],
        }
    }
}

impl EvolutionSettings {
    pub fn initial_state(&self, rep: &FockRep) -> Vec<C64> {
        rep.coherent_state(self.displacement[0], self.displacement[1], self.spin)
    }
}

/// One output row of an evolution run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvolutionRow {
    pub t: f64,
    pub re_i: f64,
    pub drift: f64,
    pub x_px: UncertaintyCheck,
    pub y_py: UncertaintyCheck,
    pub xnc_pxnc: UncertaintyCheck,
    pub norm_deviation: f64,
    pub energy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionRun {
    pub n: usize,
    pub ell: f64,
    pub dim: usize,
    pub rows: Vec<EvolutionRow>,
    pub relative_drift: f64,
    pub max_norm_deviation: f64,
    pub max_step_norm_change: f64,
    pub min_margin: f64,
    /// Largest `|½|⟨[x_nc, px_nc]⟩| − ħ_eff/2|`.
    pub max_nc_bound_deviation: f64,
    pub hbar_eff: f64,
    pub ehrenfest: EhrenfestComparison,
}

/// Evolves the configured initial state under the noncommutative Hamiltonian and measures the
/// invariant drift, the three uncertainty products and the tracked energy.
pub fn run_evolution(p: &NCParams, ans: &InvariantAnsatz, s: &EvolutionSettings) -> Result<EvolutionRun> {
    let h = build_h_nc(p)?;
    let ell = s.ell.or_else(|| p.magnetic_length()).unwrap_or(1.0);
    let rep = build_fock_rep(s.n, ell, p.hbar)?;
    let hop = RepresentedOperator::new(&h, &rep);
    let grid = uniform_grid(s.t0, s.t1, s.dt)?;
    let psi0 = s.initial_state(&rep);
    let states = evolve(&hop, &psi0, &grid)?;
    let iop = RepresentedOperator::new(&ans.to_time_phasepoly(), &rep);
    let drift = invariant_drift(&iop, &states)?;
    let ehrenfest = ehrenfest_prediction(p, ans, &h, &rep, &states, &drift)?;
    let energy = if s.energy_stride > 0 { Some(track_energy(&hop, &psi0, &grid, s.energy_stride)?) } else { None };

    let (x, px, y, py) = (rep.coord(Coord::X), rep.coord(Coord::Px), rep.coord(Coord::Y), rep.coord(Coord::Py));
    let hbar_eff = p.hbar_eff();
    let mut rows = Vec::with_capacity(grid.len());
    let mut min_margin = f64::INFINITY;
    let mut max_nc_bound_deviation: f64 = 0.0;
    for (k, (&t, psi)) in grid.iter().zip(&states.states).enumerate() {
        let xnc = represent(&bopp_shift(p, NcCoord::XNc, t), &rep);
        let pxnc = represent(&bopp_shift(p, NcCoord::PxNc, t), &rep);
        let row = EvolutionRow {
            t,
            re_i: drift.expectation[k].re,
            drift: drift.drift[k],
            x_px: uncertainty_matrices(psi, &x, &px)?,
            y_py: uncertainty_matrices(psi, &y, &py)?,
            xnc_pxnc: uncertainty_matrices(psi, &xnc, &pxnc)?,
            norm_deviation: (vec_norm(psi) - 1.0).abs(),
            energy: energy.as_ref().map(|e| e.values[k]),
        };
        min_margin = min_margin.min(row.x_px.margin).min(row.y_py.margin).min(row.xnc_pxnc.margin);
        max_nc_bound_deviation = max_nc_bound_deviation.max((row.xnc_pxnc.rhs - 0.5 * hbar_eff).abs());
        rows.push(row);
    }
    Ok(EvolutionRun {
        n: s.n,
        ell,
        dim: rep.dim,
        rows,
        relative_drift: drift.relative_drift,
        max_norm_deviation: states.max_norm_deviation,
        max_step_norm_change: states.max_step_norm_change,
        min_margin,
        max_nc_bound_deviation,
        hbar_eff,
        ehrenfest,
    })
}

/// Relative drift of the invariant for each truncation in `ns`.
pub fn drift_scaling(p: &NCParams, ans: &InvariantAnsatz, ns: &[usize], s: &EvolutionSettings) -> Result<Vec<(usize, f64)>> {
    let h = build_h_nc(p)?;
    let ell = s.ell.or_else(|| p.magnetic_length()).unwrap_or(1.0);
    let grid = uniform_grid(s.t0, s.t1, s.dt)?;
    ns.iter()
        .map(|&n| {
            let rep = build_fock_rep(n, ell, p.hbar)?;
            let states = evolve(&RepresentedOperator::new(&h, &rep), &s.initial_state(&rep), &grid)?;
            let iop = RepresentedOperator::new(&ans.to_time_phasepoly(), &rep);
            Ok((n, invariant_drift(&iop, &states)?.relative_drift))
        })
        .collect()
}
