//! Tensor-product Hilbert spaces of truncated bosonic modes and two-level
//! atoms, and dense state vectors over them.
//!
//! Basis states are indexed in mixed radix with the first-listed subsystem as
//! the most significant digit, so a ket written `|n_A n_B n_C n_D, s1 s2>`
//! reads left to right as its own index.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Atom level encoding.
pub const GROUND: usize = 0;
pub const EXCITED: usize = 1;

/// Default number of Fock levels kept per mode (occupations 0..=3).
pub const DEFAULT_MODE_LEVELS: usize = 4;

/// Tolerance on `‖ψ‖ - 1` for operations that require normalized input.
pub const NORM_TOL: f64 = 1e-9;

/// Vectors with norm at or below this cannot be normalized.
pub const ZERO_NORM: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubsystemKind {
    Mode,
    Atom,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subsystem {
    pub kind: SubsystemKind,
    pub levels: usize,
    pub label: String,
}

impl Subsystem {
    pub fn mode(label: impl Into<String>, levels: usize) -> Self {
        Self { kind: SubsystemKind::Mode, levels, label: label.into() }
    }

    pub fn atom(label: impl Into<String>) -> Self {
        Self { kind: SubsystemKind::Atom, levels: 2, label: label.into() }
    }

    pub fn is_atom(&self) -> bool {
        self.kind == SubsystemKind::Atom
    }

    pub fn is_mode(&self) -> bool {
        self.kind == SubsystemKind::Mode
    }

    fn validate(&self) -> Result<()> {
        let reason = match self.kind {
            SubsystemKind::Atom if self.levels != 2 => {
                format!("atoms have exactly 2 levels, got {}", self.levels)
            }
            SubsystemKind::Mode if self.levels < 3 => {
                format!("modes need at least 3 levels, got {}", self.levels)
            }
            _ => return Ok(()),
        };
        Err(Error::InvalidSubsystem { label: self.label.clone(), reason })
    }
}

/// An ordered list of subsystems and the mixed-radix layout of their joint basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    subsystems: Vec<Subsystem>,
    strides: Vec<usize>,
    dim: usize,
}

impl HilbertSpace {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::InvalidSubsystem {
                label: String::new(),
                reason: "a space needs at least one subsystem".into(),
            });
        }
        for (i, s) in subsystems.iter().enumerate() {
            s.validate()?;
            if subsystems[..i].iter().any(|t| t.label == s.label) {
                return Err(Error::InvalidSubsystem { label: s.label.clone(), reason: "duplicate label".into() });
            }
        }
        let mut strides = vec![1; subsystems.len()];
        for i in (0..subsystems.len() - 1).rev() {
            strides[i] = strides[i + 1] * subsystems[i + 1].levels;
        }
        let dim = strides[0] * subsystems[0].levels;
        Ok(Self { subsystems, strides, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn subsystem(&self, i: usize) -> Result<&Subsystem> {
        self.subsystems.get(i).ok_or_else(|| Error::IndexError(format!("subsystem {i} of {}", self.len())))
    }

    /// Position of the subsystem with the given label.
    pub fn position(&self, label: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.label == label)
    }

    /// Distance in the flat index between neighbouring levels of subsystem `i`.
    pub fn stride(&self, i: usize) -> usize {
        self.strides[i]
    }

    /// Occupation of subsystem `i` in basis state `index`.
    #[inline]
    pub fn digit(&self, index: usize, i: usize) -> usize {
        (index / self.strides[i]) % self.subsystems[i].levels
    }

    /// Flat index of a basis ket.
    pub fn basis_index(&self, ket: &BasisKet) -> Result<usize> {
        if ket.0.len() != self.len() {
            return Err(Error::OutOfRange(format!(
                "ket has {} entries, space has {} subsystems",
                ket.0.len(),
                self.len()
            )));
        }
        let mut index = 0;
        for (i, (&n, s)) in ket.0.iter().zip(&self.subsystems).enumerate() {
            if n >= s.levels {
                return Err(Error::OutOfRange(format!("occupation {n} of `{}` exceeds {} levels", s.label, s.levels)));
            }
            index += n * self.strides[i];
        }
        Ok(index)
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn basis_ket(&self, index: usize) -> Result<BasisKet> {
        if index >= self.dim {
            return Err(Error::OutOfRange(format!("index {index} >= dim {}", self.dim)));
        }
        Ok(BasisKet((0..self.len()).map(|i| self.digit(index, i)).collect()))
    }

    /// The concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &HilbertSpace) -> Result<HilbertSpace> {
        let mut subsystems = self.subsystems.clone();
        subsystems.extend(other.subsystems.iter().cloned());
        HilbertSpace::new(subsystems)
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.subsystems.iter().map(|s| format!("{}[{}]", s.label, s.levels)).collect();
        write!(f, "{}", parts.join(" ⊗ "))
    }
}

pub fn make_space(subsystems: Vec<Subsystem>) -> Result<Arc<HilbertSpace>> {
    HilbertSpace::new(subsystems).map(Arc::new)
}

/// One occupation number per subsystem.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisKet(pub Vec<usize>);

impl From<Vec<usize>> for BasisKet {
    fn from(v: Vec<usize>) -> Self {
        BasisKet(v)
    }
}

impl<const N: usize> From<[usize; N]> for BasisKet {
    fn from(v: [usize; N]) -> Self {
        BasisKet(v.to_vec())
    }
}

impl fmt::Display for BasisKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "|{}⟩", digits.join(","))
    }
}

/// Dense amplitude vector. Need not be normalized; operations that require a
/// normalized input say so and check it.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: Arc<HilbertSpace>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(space: Arc<HilbertSpace>) -> Self {
        let amplitudes = vec![Complex64::new(0.0, 0.0); space.dim()];
        Self { space, amplitudes }
    }

    pub fn from_amplitudes(space: Arc<HilbertSpace>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::OutOfRange(format!(
                "{} amplitudes for a space of dim {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    /// One-hot state on a basis ket.
    pub fn ket(space: Arc<HilbertSpace>, ket: &BasisKet) -> Result<Self> {
        let index = space.basis_index(ket)?;
        let mut state = Self::zeros(space);
        state.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, ket: &BasisKet) -> Result<Complex64> {
        Ok(self.amplitudes[self.space.basis_index(ket)?])
    }

    pub fn same_space(&self, other: &StateVector) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    fn check_space(&self, other: &StateVector) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// `self + c·other`, unnormalized.
    pub fn add_scaled(&self, c: Complex64, other: &StateVector) -> Result<StateVector> {
        self.check_space(other)?;
        let amplitudes = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a + c * b).collect();
        Ok(StateVector { space: Arc::clone(&self.space), amplitudes })
    }

    pub fn scaled(&self, c: Complex64) -> StateVector {
        StateVector { space: Arc::clone(&self.space), amplitudes: self.amplitudes.iter().map(|a| a * c).collect() }
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_space(other)?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&self) -> Result<StateVector> {
        let n = self.norm();
        if !(n > ZERO_NORM) {
            return Err(Error::ZeroNorm(n));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    pub fn require_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() <= NORM_TOL {
            Ok(())
        } else {
            Err(Error::NotNormalized(n))
        }
    }

    /// `|⟨self|other⟩|²` for two normalized states.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        self.check_space(other)?;
        self.require_normalized()?;
        other.require_normalized()?;
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Total probability on basis kets whose occupations satisfy `pred`.
    pub fn population<F>(&self, mut pred: F) -> f64
    where
        F: FnMut(&[usize]) -> bool,
    {
        let n = self.space.len();
        let mut digits = vec![0; n];
        let mut total = 0.0;
        for (index, a) in self.amplitudes.iter().enumerate() {
            for (i, d) in digits.iter_mut().enumerate() {
                *d = self.space.digit(index, i);
            }
            if pred(&digits) {
                total += a.norm_sqr();
            }
        }
        total
    }

    /// Product state on the concatenated space `self ⊗ other`.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let space = Arc::new(self.space.tensor(&other.space)?);
        let mut amplitudes = Vec::with_capacity(space.dim());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Ok(StateVector { space, amplitudes })
    }

    /// Re-express the state in `target`, which must hold the same subsystems
    /// (matched by label) in a possibly different order.
    pub fn reorder(&self, target: Arc<HilbertSpace>) -> Result<StateVector> {
        if target.len() != self.space.len() {
            return Err(Error::SpaceMismatch);
        }
        // For each source subsystem, the stride it occupies in the target.
        let mut target_strides = Vec::with_capacity(self.space.len());
        for s in self.space.subsystems() {
            let j = target.position(&s.label).ok_or(Error::SpaceMismatch)?;
            if target.subsystems()[j] != *s {
                return Err(Error::SpaceMismatch);
            }
            target_strides.push(target.stride(j));
        }
        let mut out = StateVector::zeros(Arc::clone(&target));
        for (index, a) in self.amplitudes.iter().enumerate() {
            let t: usize =
                target_strides.iter().enumerate().map(|(i, stride)| self.space.digit(index, i) * stride).sum();
            out.amplitudes[t] = *a;
        }
        Ok(out)
    }

    /// Largest componentwise `|a_i - b_i|`.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        self.check_space(other)?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Rotate the global phase so the first amplitude with magnitude above
    /// `threshold` is real and positive.
    pub fn phase_fixed(&self, threshold: f64) -> StateVector {
        match self.amplitudes.iter().find(|a| a.norm() > threshold) {
            Some(pivot) => self.scaled(pivot.conj() / pivot.norm()),
            None => self.clone(),
        }
    }

    /// Nonzero terms as `(ket, amplitude)` pairs, in basis order.
    pub fn terms(&self, threshold: f64) -> Vec<(BasisKet, Complex64)> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > threshold)
            .map(|(i, a)| (self.space.basis_ket(i).expect("index < dim"), *a))
            .collect()
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms(1e-12);
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (ket, a)) in terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:+.6}{:+.6}i){}", a.re, a.im, ket)?;
        }
        Ok(())
    }
}

/// Max amplitude distance between two states after normalizing both and
/// fixing their global phases by the same pivot: the first basis index where
/// `a` has magnitude above `threshold`.
pub fn phase_aligned_distance(a: &StateVector, b: &StateVector, threshold: f64) -> Result<f64> {
    let a = a.normalize()?;
    let b = b.normalize()?;
    a.check_space(&b)?;
    let Some(pivot) = a.amplitudes.iter().position(|x| x.norm() > threshold) else {
        return a.max_abs_diff(&b);
    };
    let rotate = |s: &StateVector| {
        let p = s.amplitudes[pivot];
        if p.norm() > 0.0 {
            s.scaled(p.conj() / p.norm())
        } else {
            s.clone()
        }
    };
    rotate(&a).max_abs_diff(&rotate(&b))
}
