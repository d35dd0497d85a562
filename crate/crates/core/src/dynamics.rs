//! Resonant Jaynes–Cummings evolution of one atom with one mode.
//!
//! Units are ħ = g = 1, so a pulse is described only by its Rabi angle
//! `theta = g·t`. Evolution is `exp(-i·theta·H)` with
//! `H = σ⁻a† + σ⁺a`, which acts as an independent rotation on every
//! doublet `{|e,n⟩, |g,n+1⟩}` at rate `√(n+1)`.
//!
//! [`jc_apply`] uses the closed-form doublet rotation. [`jc_hamiltonian`] and
//! [`propagator_expm`] build the same evolution as a dense matrix exponential
//! and serve as an independent cross-check.

use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{HilbertSpace, StateVector, EXCITED, GROUND};

/// Hermiticity tolerance accepted by [`propagator_expm`].
pub const HERMITIAN_TOL: f64 = 1e-12;

const MAX_TAYLOR_TERMS: usize = 200;

/// One resonant atom–mode interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcPulse {
    pub atom: usize,
    pub mode: usize,
    pub theta: f64,
}

impl JcPulse {
    pub fn new(atom: usize, mode: usize, theta: f64) -> Self {
        Self { atom, mode, theta }
    }

    pub fn inverse(self) -> Self {
        Self { theta: -self.theta, ..self }
    }
}

fn check_pair(space: &HilbertSpace, atom: usize, mode: usize) -> Result<()> {
    if atom == mode {
        return Err(Error::IndexError(format!("atom and mode are both subsystem {atom}")));
    }
    if !space.subsystem(atom)?.is_atom() {
        return Err(Error::IndexError(format!("subsystem {atom} is not an atom")));
    }
    if !space.subsystem(mode)?.is_mode() {
        return Err(Error::IndexError(format!("subsystem {mode} is not a mode")));
    }
    Ok(())
}

/// Probability sitting on `|e, top⟩` for the given pair, which the truncated
/// space cannot evolve correctly.
pub fn leakage(state: &StateVector, atom: usize, mode: usize) -> Result<f64> {
    let space = state.space();
    check_pair(space, atom, mode)?;
    let top = space.subsystems()[mode].levels - 1;
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|&(i, _)| space.digit(i, atom) == EXCITED && space.digit(i, mode) == top)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Apply a resonant pulse in closed form.
///
/// Fails with [`Error::TruncationLeakage`] unless the population of
/// `|e, top⟩` is below `leak_tol`. Pass `f64::INFINITY` to evolve within the
/// truncated space regardless (those kets are then left untouched, matching
/// the truncated Hamiltonian).
pub fn jc_apply(state: &StateVector, pulse: &JcPulse, leak_tol: f64) -> Result<StateVector> {
    if !pulse.theta.is_finite() {
        return Err(Error::InvalidConfig(format!("pulse angle {} is not finite", pulse.theta)));
    }
    let leaked = leakage(state, pulse.atom, pulse.mode)?;
    if !(leaked < leak_tol) {
        return Err(Error::TruncationLeakage { mode: pulse.mode, leaked });
    }

    let space = state.space().clone();
    let top = space.subsystems()[pulse.mode].levels - 1;
    let atom_stride = space.stride(pulse.atom);
    let mode_stride = space.stride(pulse.mode);
    // cos/sin of √(n+1)·θ for every doublet below the top level.
    let rot: Vec<(f64, f64)> = (0..top)
        .map(|n| {
            let phi = ((n + 1) as f64).sqrt() * pulse.theta;
            (phi.cos(), phi.sin())
        })
        .collect();

    let mut out = state.clone();
    let amps = out.amplitudes_mut();
    for e_index in 0..space.dim() {
        if space.digit(e_index, pulse.atom) != EXCITED {
            continue;
        }
        let n = space.digit(e_index, pulse.mode);
        if n == top {
            continue;
        }
        let g_index = e_index - atom_stride + mode_stride;
        let (c, s) = rot[n];
        let mis = Complex64::new(0.0, -s);
        let (ae, ag) = (amps[e_index], amps[g_index]);
        amps[e_index] = ae * c + ag * mis;
        amps[g_index] = ae * mis + ag * c;
    }
    Ok(out)
}

/// Row-major dense complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                m.data[c * self.dim + r] = self.data[r * self.dim + c].conj();
            }
        }
        m
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * k).collect() }
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.dim)
            .map(|c| (0..self.dim).map(|r| self.data[r * self.dim + c].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest `|H_ij - conj(H_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Count of entries with magnitude above `threshold`.
    pub fn nonzeros(&self, threshold: f64) -> usize {
        self.data.iter().filter(|x| x.norm() > threshold).count()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.space().dim() != self.dim {
            return Err(Error::SpaceMismatch);
        }
        let x = state.amplitudes();
        let y = (0..self.dim)
            .map(|r| self.data[r * self.dim..(r + 1) * self.dim].iter().zip(x).map(|(m, v)| m * v).sum())
            .collect();
        StateVector::from_amplitudes(state.space().clone(), y)
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;

    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            let row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for (o, b) in row.iter_mut().zip(&rhs.data[k * n..(k + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

/// `σ⁻a† + σ⁺a` for one atom–mode pair, identity on every other subsystem.
pub fn jc_hamiltonian(space: &HilbertSpace, atom: usize, mode: usize) -> Result<DenseMatrix> {
    check_pair(space, atom, mode)?;
    let top = space.subsystems()[mode].levels - 1;
    let mut h = DenseMatrix::zeros(space.dim());
    for g_index in 0..space.dim() {
        if space.digit(g_index, atom) != GROUND {
            continue;
        }
        let m = space.digit(g_index, mode);
        if m == 0 {
            continue;
        }
        // |g, m⟩ ↔ |e, m-1⟩ with amplitude √m.
        let e_index = g_index + space.stride(atom) - space.stride(mode);
        debug_assert!(m - 1 < top);
        let w = Complex64::new((m as f64).sqrt(), 0.0);
        h.set(e_index, g_index, w);
        h.set(g_index, e_index, w);
    }
    Ok(h)
}

/// `exp(-i·theta·h)` by scaling and squaring a truncated Taylor series.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 0.5; terms
/// are summed until a term's 1-norm drops below `tol / 10`, then the result
/// is squared `s` times.
pub fn propagator_expm(h: &DenseMatrix, theta: f64, tol: f64) -> Result<DenseMatrix> {
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    if !theta.is_finite() {
        return Err(Error::InvalidConfig(format!("pulse angle {theta} is not finite")));
    }
    let generator = h.scale(Complex64::new(0.0, -theta));
    let norm = generator.one_norm();
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let scaled = generator.scale(Complex64::new(2f64.powi(-(squarings as i32)), 0.0));

    let mut sum = DenseMatrix::identity(h.dim());
    let mut term = DenseMatrix::identity(h.dim());
    let mut converged = false;
    for k in 1..=MAX_TAYLOR_TERMS {
        term = (&term * &scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
        sum.add_assign(&term);
        if term.one_norm() < tol / 10.0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_TAYLOR_TERMS));
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}
