//! Truncated Fock-space operator algebra for an atom coupled to one cavity
//! mode, plus the dense Hermitian eigensolver used by the rest of the crate.
//!
//! Composite basis ordering is atom ⊗ Fock: index = `atom * N + n` with the
//! ground state `|g⟩` at atom index 0 and `|e⟩` at atom index 1.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ATOM_DIM: usize = 2;

/// Largest absolute deviation from Hermiticity, `max |A - A†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomLevel {
    Ground,
    Excited,
}

impl AtomLevel {
    fn index(self) -> usize {
        match self {
            AtomLevel::Ground => 0,
            AtomLevel::Excited => 1,
        }
    }
}

/// Hilbert-space signature: a two-level atom times `fock_cutoff` Fock levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSignature {
    fock_cutoff: usize,
}

impl SpaceSignature {
    pub fn new(fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 3 {
            return Err(Error::InvalidCutoff(fock_cutoff));
        }
        Ok(Self { fock_cutoff })
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn atom_dim(&self) -> usize {
        ATOM_DIM
    }

    pub fn dim(&self) -> usize {
        ATOM_DIM * self.fock_cutoff
    }

    pub fn index(&self, atom: AtomLevel, n: usize) -> usize {
        debug_assert!(n < self.fock_cutoff);
        atom.index() * self.fock_cutoff + n
    }

    fn check(&self, other: &SpaceSignature) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SignatureMismatch {
                left: *self,
                right: *other,
            })
        }
    }
}

impl fmt::Display for SpaceSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2x{}", self.fock_cutoff)
    }
}

/// Complex square matrix on the composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    sig: SpaceSignature,
    mat: CMatrix,
}

impl Operator {
    pub fn from_matrix(sig: SpaceSignature, mat: CMatrix) -> Result<Self> {
        let d = sig.dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: format!("{d}x{d}"),
                got: format!("{}x{}", mat.nrows(), mat.ncols()),
            });
        }
        Ok(Self { sig, mat })
    }

    pub fn zeros(sig: SpaceSignature) -> Self {
        let d = sig.dim();
        Self {
            sig,
            mat: CMatrix::zeros(d, d),
        }
    }

    pub fn identity(sig: SpaceSignature) -> Self {
        let d = sig.dim();
        Self {
            sig,
            mat: CMatrix::identity(d, d),
        }
    }

    /// Projector `|ψ⟩⟨ψ|` for a (not necessarily normalized) amplitude vector.
    pub fn projector(sig: SpaceSignature, psi: &[C64]) -> Result<Self> {
        if psi.len() != sig.dim() {
            return Err(Error::DimensionMismatch {
                expected: sig.dim().to_string(),
                got: psi.len().to_string(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::from_matrix(sig, &v * v.adjoint())
    }

    pub fn signature(&self) -> SpaceSignature {
        self.sig
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            sig: self.sig,
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        Self {
            sig: self.sig,
            mat: &self.mat * s.into(),
        }
    }

    pub fn try_add(&self, other: &Operator) -> Result<Self> {
        self.sig.check(&other.sig)?;
        Ok(Self {
            sig: self.sig,
            mat: &self.mat + &other.mat,
        })
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Self> {
        self.sig.check(&other.sig)?;
        Ok(Self {
            sig: self.sig,
            mat: &self.mat * &other.mat,
        })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.sig.check(&other.sig)?;
        Ok(Self {
            sig: self.sig,
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
        })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_defect(&self.mat) <= tol
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }
}

// Arithmetic through the std operators panics on signature mismatch, like
// shape mismatches in nalgebra. Use the `try_*` methods for fallible forms.
impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator signatures differ")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.sig, rhs.sig, "operator signatures differ");
        Operator {
            sig: self.sig,
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator signatures differ")
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(rhs)
    }
}

/// Validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    sig: SpaceSignature,
    rho: CMatrix,
}

pub const STATE_TRACE_TOL: f64 = 1e-9;
pub const STATE_HERMITIAN_TOL: f64 = 1e-9;
pub const STATE_POSITIVITY_TOL: f64 = 1e-8;

/// Tolerances applied to states produced along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateTolerances {
    pub trace: f64,
    pub hermitian: f64,
    pub positivity: f64,
}

impl StateTolerances {
    pub const CONSTRUCTION: Self = Self {
        trace: STATE_TRACE_TOL,
        hermitian: STATE_HERMITIAN_TOL,
        positivity: STATE_POSITIVITY_TOL,
    };
    pub const TRAJECTORY: Self = Self {
        trace: 1e-7,
        hermitian: 1e-7,
        positivity: 1e-6,
    };
}

impl QuantumState {
    pub fn new(sig: SpaceSignature, rho: CMatrix) -> Result<Self> {
        Self::with_tolerances(sig, rho, StateTolerances::CONSTRUCTION)
    }

    pub fn with_tolerances(
        sig: SpaceSignature,
        rho: CMatrix,
        tol: StateTolerances,
    ) -> Result<Self> {
        let op = Operator::from_matrix(sig, rho)?;
        let rho = op.mat;
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let herm = hermiticity_defect(&rho);
        if herm > tol.hermitian {
            return Err(Error::InvalidState(format!("Hermiticity defect {herm:e}")));
        }
        let min_ev = min_eigenvalue(&rho);
        if !(min_ev >= -tol.positivity) {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_ev:e}"
            )));
        }
        Ok(Self { sig, rho })
    }

    /// Pure state from an amplitude vector; the vector is normalized.
    pub fn pure(sig: SpaceSignature, psi: &[C64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::InvalidState("zero amplitude vector".into()));
        }
        let p = Operator::projector(sig, psi)?;
        Self::new(sig, p.mat / C64::new(norm2, 0.0))
    }

    pub fn basis(sig: SpaceSignature, atom: AtomLevel, n: usize) -> Result<Self> {
        if n >= sig.fock_cutoff() {
            return Err(Error::InvalidArgument(format!(
                "Fock level {n} outside cutoff {}",
                sig.fock_cutoff()
            )));
        }
        let mut psi = vec![C64::new(0.0, 0.0); sig.dim()];
        psi[sig.index(atom, n)] = C64::new(1.0, 0.0);
        Self::pure(sig, &psi)
    }

    pub fn ground(sig: SpaceSignature) -> Self {
        Self::basis(sig, AtomLevel::Ground, 0).expect("ground state is always valid")
    }

    /// Atom in `atom`, cavity in a coherent state truncated at the cutoff and
    /// renormalized.
    pub fn coherent(sig: SpaceSignature, atom: AtomLevel, alpha: C64) -> Result<Self> {
        let mut psi = vec![C64::new(0.0, 0.0); sig.dim()];
        let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..sig.fock_cutoff() {
            if n > 0 {
                amp = amp * alpha / (n as f64).sqrt();
            }
            psi[sig.index(atom, n)] = amp;
        }
        Self::pure(sig, &psi)
    }

    pub fn signature(&self) -> SpaceSignature {
        self.sig
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// Population of a basis state `|atom, n⟩`.
    pub fn population(&self, atom: AtomLevel, n: usize) -> f64 {
        let i = self.sig.index(atom, n);
        self.rho[(i, i)].re
    }

    /// Probability of finding `n` photons, traced over the atom.
    pub fn fock_probability(&self, n: usize) -> f64 {
        self.population(AtomLevel::Ground, n) + self.population(AtomLevel::Excited, n)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.rho)
    }
}

/// Smallest eigenvalue of the Hermitian part. The spectrum is shifted by
/// the largest entry before diagonalizing, since entries spanning hundreds of
/// decades make the unshifted symmetric eigensolver produce NaN.
pub(crate) fn min_eigenvalue(rho: &CMatrix) -> f64 {
    let d = rho.nrows();
    let h = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let scale = h.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    let shifted = h + CMatrix::identity(d, d) * C64::new(scale, 0.0);
    let ev = shifted.symmetric_eigenvalues();
    if ev.iter().any(|x| !x.is_finite()) {
        return f64::NAN;
    }
    ev.iter().fold(f64::INFINITY, |acc, &x| acc.min(x)) - scale
}

/// The operators appearing in the Hamiltonians and dissipators.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub a: Operator,
    pub a_dag: Operator,
    pub n_op: Operator,
    pub sigma_minus: Operator,
    pub sigma_plus: Operator,
    pub sigma_z: Operator,
    pub identity: Operator,
}

/// Single-mode annihilation operator on `cutoff` Fock levels.
pub fn fock_annihilation(cutoff: usize) -> CMatrix {
    let mut a = CMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Atomic lowering operator `|g⟩⟨e|`.
pub fn atom_lowering() -> CMatrix {
    let mut s = CMatrix::zeros(2, 2);
    s[(0, 1)] = C64::new(1.0, 0.0);
    s
}

pub fn build_operator_set(sig: SpaceSignature) -> OperatorSet {
    let n = sig.fock_cutoff();
    let id2 = CMatrix::identity(2, 2);
    let idn = CMatrix::identity(n, n);
    let a_f = fock_annihilation(n);
    let sm_a = atom_lowering();

    let a = Operator {
        sig,
        mat: kron(&id2, &a_f),
    };
    let a_dag = a.adjoint();
    let n_op = &a_dag * &a;
    let sigma_minus = Operator {
        sig,
        mat: kron(&sm_a, &idn),
    };
    let sigma_plus = sigma_minus.adjoint();
    let sigma_z = &(&sigma_plus * &sigma_minus) - &(&sigma_minus * &sigma_plus);
    OperatorSet {
        a,
        a_dag,
        n_op,
        sigma_minus,
        sigma_plus,
        sigma_z,
        identity: Operator::identity(sig),
    }
}

/// Kronecker-structured composite operator `atom_part ⊗ fock_part`.
pub fn tensor_embed(
    atom_part: &CMatrix,
    fock_part: &CMatrix,
    sig: SpaceSignature,
) -> Result<Operator> {
    let n = sig.fock_cutoff();
    if atom_part.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: "2x2".into(),
            got: format!("{}x{}", atom_part.nrows(), atom_part.ncols()),
        });
    }
    if fock_part.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", fock_part.nrows(), fock_part.ncols()),
        });
    }
    Operator::from_matrix(sig, kron(atom_part, fock_part))
}

/// Eigen-decomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

pub fn hermitian_eigensystem(h: &Operator) -> Result<Eigensystem> {
    hermitian_eigensystem_matrix(h.matrix())
}

pub fn hermitian_eigensystem_matrix(h: &CMatrix) -> Result<Eigensystem> {
    let defect = hermiticity_defect(h);
    if defect > 1e-9 {
        return Err(Error::NotHermitian(defect));
    }
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    // stable sort keeps solver order inside degenerate blocks
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let d = h.nrows();
    let mut vectors = CMatrix::zeros(d, d);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(Eigensystem { values, vectors })
}

/// `Tr(A ρ)`.
pub fn expectation(op: &Operator, rho: &QuantumState) -> Result<C64> {
    op.sig.check(&rho.sig)?;
    Ok(trace_of_product(op.matrix(), rho.matrix()))
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sig(n: usize) -> SpaceSignature {
        SpaceSignature::new(n).unwrap()
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn positivity_check_survives_wide_dynamic_range() {
        // a recorded trajectory state on which the unshifted solver yields NaN
        let text = include_str!("../tests/data/wide_range_state.txt");
        let vals: Vec<C64> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| {
                let mut it = l.split_whitespace().map(|x| x.parse::<f64>().unwrap());
                C64::new(it.next().unwrap(), it.next().unwrap())
            })
            .collect();
        let d = (vals.len() as f64).sqrt() as usize;
        let m = CMatrix::from_column_slice(d, d, &vals);
        let ev = min_eigenvalue(&m);
        assert!(ev.is_finite() && ev > -1e-12, "{ev}");
    }

    #[test]
    fn cutoff_below_three_is_rejected() {
        assert!(matches!(
            SpaceSignature::new(2),
            Err(Error::InvalidCutoff(2))
        ));
        assert_eq!(sig(3).dim(), 6);
    }

    #[test]
    fn ladder_elements() {
        let s = sig(3);
        let ops = build_operator_set(s);
        let g0 = s.index(AtomLevel::Ground, 0);
        let g1 = s.index(AtomLevel::Ground, 1);
        assert_eq!(ops.a.matrix()[(g0, g1)], one());

        let g2 = s.index(AtomLevel::Ground, 2);
        let mut psi = vec![C64::new(0.0, 0.0); s.dim()];
        psi[g2] = one();
        let v = ops.n_op.matrix() * nalgebra::DVector::from_vec(psi);
        assert_abs_diff_eq!(v[g2].re, 2.0, epsilon = 1e-14);

        let s = sig(6);
        let ops = build_operator_set(s);
        for atom in [AtomLevel::Ground, AtomLevel::Excited] {
            assert_eq!(
                ops.a
                    .matrix()
                    .column(s.index(atom, 0))
                    .iter()
                    .map(|z| z.norm())
                    .sum::<f64>(),
                0.0
            );
            for n in 1..6 {
                let el = ops.a.matrix()[(s.index(atom, n - 1), s.index(atom, n))];
                assert_eq!(el, C64::new((n as f64).sqrt(), 0.0));
            }
        }
    }

    #[test]
    fn truncated_commutator_diagonal() {
        let n = 4;
        let a = fock_annihilation(n);
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        let diag: Vec<f64> = (0..n).map(|i| comm[(i, i)].re).collect();
        // the last entry reflects the truncation boundary: -(N-1)
        let expected = [1.0, 1.0, 1.0, -3.0];
        for (d, e) in diag.iter().zip(expected) {
            assert_abs_diff_eq!(*d, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn operator_set_algebra() {
        let s = sig(5);
        let ops = build_operator_set(s);
        let anti = &(&ops.sigma_plus * &ops.sigma_minus) + &(&ops.sigma_minus * &ops.sigma_plus);
        assert_eq!(anti, ops.identity);
        let c = ops.a.commutator(&ops.sigma_minus).unwrap();
        assert_eq!(max_abs(c.matrix()), 0.0);
        assert_eq!(ops.a.adjoint().adjoint(), ops.a);
        let sz = &(&ops.sigma_plus * &ops.sigma_minus) - &(&ops.sigma_minus * &ops.sigma_plus);
        assert_eq!(sz, ops.sigma_z);
    }

    #[test]
    fn embedding_matches_operator_set() {
        let s = sig(4);
        let ops = build_operator_set(s);
        let id2 = CMatrix::identity(2, 2);
        let idn = CMatrix::identity(4, 4);
        assert_eq!(tensor_embed(&id2, &idn, s).unwrap(), ops.identity);
        assert_eq!(tensor_embed(&id2, &fock_annihilation(4), s).unwrap(), ops.a);
        assert_eq!(
            tensor_embed(&atom_lowering(), &idn, s).unwrap(),
            ops.sigma_minus
        );

        let mut sz = CMatrix::zeros(2, 2);
        sz[(0, 0)] = -one();
        sz[(1, 1)] = one();
        let lhs = tensor_embed(&sz, &fock_annihilation(4), s).unwrap();
        let rhs = &tensor_embed(&id2, &fock_annihilation(4), s).unwrap()
            * &tensor_embed(&sz, &idn, s).unwrap();
        assert!(max_abs(&(lhs.matrix() - rhs.matrix())) < 1e-15);

        assert!(tensor_embed(&id2, &CMatrix::identity(3, 3), s).is_err());
    }

    #[test]
    fn eigensystem_of_zero_and_errors() {
        let s = sig(3);
        let e = hermitian_eigensystem(&Operator::zeros(s)).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
        let ops = build_operator_set(s);
        assert!(matches!(
            hermitian_eigensystem(&ops.a),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn eigensystem_residual_and_orthonormality() {
        let s = sig(6);
        let ops = build_operator_set(s);
        let h = &(&ops.a + &ops.a_dag) + &(&ops.sigma_z * 0.7);
        let e = hermitian_eigensystem(&h).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let vtv = e.vectors.adjoint() * &e.vectors;
        assert!(max_abs(&(vtv - CMatrix::identity(12, 12))) < 1e-8);
        let norm = max_abs(h.matrix());
        for (k, &lam) in e.values.iter().enumerate() {
            let v = e.vectors.column(k);
            let r = h.matrix() * v - v * C64::new(lam, 0.0);
            assert!(r.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-8 * norm);
        }
    }

    #[test]
    fn expectations() {
        let s = sig(15);
        let ops = build_operator_set(s);
        let rho = QuantumState::basis(s, AtomLevel::Ground, 1).unwrap();
        assert_abs_diff_eq!(
            expectation(&ops.identity, &rho).unwrap().re,
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            expectation(&ops.n_op, &rho).unwrap().re,
            1.0,
            epsilon = 1e-15
        );

        // direct sum of the truncated coherent-state weights
        let alpha: f64 = 0.5;
        let mut w = Vec::new();
        let mut p = (-alpha * alpha).exp();
        for n in 0..15 {
            if n > 0 {
                p *= alpha * alpha / n as f64;
            }
            w.push(p);
        }
        let oracle: f64 =
            w.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / w.iter().sum::<f64>();
        let coh = QuantumState::coherent(s, AtomLevel::Ground, C64::new(alpha, 0.0)).unwrap();
        let got = expectation(&ops.n_op, &coh).unwrap();
        assert_abs_diff_eq!(got.re, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(got.re, 0.25, epsilon = 1e-6);
        assert!(got.im.abs() < 1e-9);

        let other = QuantumState::ground(sig(4));
        assert!(matches!(
            expectation(&ops.n_op, &other),
            Err(Error::SignatureMismatch { .. })
        ));
    }

    #[test]
    fn state_validation() {
        let s = sig(3);
        let mut m = CMatrix::zeros(6, 6);
        m[(0, 0)] = C64::new(0.5, 0.0);
        assert!(QuantumState::new(s, m.clone()).is_err());
        m[(1, 1)] = C64::new(0.5, 0.0);
        assert!(QuantumState::new(s, m.clone()).is_ok());
        m[(0, 1)] = C64::new(0.0, 0.1);
        assert!(QuantumState::new(s, m.clone()).is_err());
        m[(1, 0)] = C64::new(0.0, -0.1);
        assert!(QuantumState::new(s, m.clone()).is_ok());
        let mut neg = CMatrix::zeros(6, 6);
        neg[(0, 0)] = C64::new(1.5, 0.0);
        neg[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(QuantumState::new(s, neg).is_err());
    }
}
