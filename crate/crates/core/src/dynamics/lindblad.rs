//! Lindblad generator `L(ρ) = -i[H(t), ρ] + Σ_k (c_k ρ c_k† − ½{c_k†c_k, ρ})`.

use crate::error::{Error, Result};
use crate::hilbert::{build_operator_set, CMatrix, Operator, SpaceSignature, C64};
use crate::models::{Drive, HamiltonianParts, ModelSpec};

/// Collapse operators. The canonical set is `√(2Γ)σ₋`, `√(2κ)a`, `√Γφ σ_z`,
/// which reproduces dissipators written as `Γ(2σ₋ρσ₊ − σ₊σ₋ρ − ρσ₊σ₋)`,
/// `κ(2aρa† − a†aρ − ρa†a)` and `Γφ(σ_zρσ_z − ρ)`.
#[derive(Clone, Debug)]
pub struct CollapseChannels {
    ops: Vec<(String, Operator)>,
}

impl CollapseChannels {
    pub fn new(ops: Vec<(String, Operator)>) -> Self {
        Self { ops }
    }

    pub fn canonical(spec: &ModelSpec, sig: SpaceSignature) -> Self {
        let ops = build_operator_set(sig);
        let mut out = Vec::new();
        if spec.gamma > 0.0 {
            out.push((
                "atom_decay".into(),
                ops.sigma_minus.scale((2.0 * spec.gamma).sqrt()),
            ));
        }
        if spec.kappa > 0.0 {
            out.push((
                "cavity_decay".into(),
                ops.a.scale((2.0 * spec.kappa).sqrt()),
            ));
        }
        if spec.gamma_phi > 0.0 {
            out.push(("dephasing".into(), ops.sigma_z.scale(spec.gamma_phi.sqrt())));
        }
        Self { ops: out }
    }

    pub fn operators(&self) -> impl Iterator<Item = &Operator> {
        self.ops.iter().map(|(_, o)| o)
    }

    pub fn labelled(&self) -> &[(String, Operator)] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Nonzero entries `(row, col, value)` of a matrix.
#[derive(Clone, Debug, Default)]
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }
}

/// Precomputed sparse form of the generator. Matrices are flattened
/// column-major (`index = row + col * dim`), matching nalgebra storage.
///
/// The anti-commutator terms are folded into an effective non-Hermitian
/// Hamiltonian `H_eff = H0 − (i/2)Σ c†c`, so that
/// `L(ρ) = −i(H_eff ρ − ρ H_eff†) − iε(t)[V, ρ] + Σ c ρ c†`.
#[derive(Clone, Debug)]
pub struct LindbladKernel {
    sig: SpaceSignature,
    dim: usize,
    /// `-i H_eff`
    static_part: SparseOp,
    /// `-i V`
    drive_part: SparseOp,
    jumps: Vec<SparseOp>,
    drive: Drive,
}

impl LindbladKernel {
    pub fn new(parts: &HamiltonianParts, channels: &CollapseChannels) -> Result<Self> {
        let sig = parts.signature();
        let dim = sig.dim();
        let mut heff = parts.h0.matrix().clone();
        for c in channels.operators() {
            if c.signature() != sig {
                return Err(Error::SignatureMismatch {
                    left: sig,
                    right: c.signature(),
                });
            }
            let cdc = c.matrix().adjoint() * c.matrix();
            heff -= cdc * C64::new(0.0, 0.5);
        }
        if parts.v.signature() != sig {
            return Err(Error::SignatureMismatch {
                left: sig,
                right: parts.v.signature(),
            });
        }
        let minus_i = C64::new(0.0, -1.0);
        Ok(Self {
            sig,
            dim,
            static_part: SparseOp::from_dense(&(heff * minus_i)),
            drive_part: SparseOp::from_dense(&(parts.v.matrix() * minus_i)),
            jumps: channels
                .operators()
                .map(|c| SparseOp::from_dense(c.matrix()))
                .collect(),
            drive: Drive::Single(parts.pulse),
        })
    }

    /// Same generator with a different drive schedule (e.g. a pulse train).
    pub fn with_drive(mut self, drive: Drive) -> Self {
        self.drive = drive;
        self
    }

    pub fn signature(&self) -> SpaceSignature {
        self.sig
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }

    /// Writes `L_t(x)` into `out`; `x` need not be Hermitian.
    pub fn apply(&self, t: f64, x: &[C64], out: &mut [C64]) {
        let d = self.dim;
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        self.apply_hamiltonian_like(&self.static_part, 1.0, x, out);
        let eps = self.drive.amplitude(t);
        if eps != 0.0 {
            self.apply_hamiltonian_like(&self.drive_part, eps, x, out);
        }
        for jump in &self.jumps {
            for &(i, k, c1) in &jump.entries {
                for &(j, l, c2) in &jump.entries {
                    out[i + j * d] += c1 * x[k + l * d] * c2.conj();
                }
            }
        }
    }

    /// `out += (sM) x + x (sM)†`. With `M = −iH_eff` this is
    /// `−i(H_eff x − x H_eff†)`; with `M = −iV` and real `s = ε` it is the
    /// drive commutator `−iε[V, x]`.
    fn apply_hamiltonian_like(&self, op: &SparseOp, s: f64, x: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for &(i, k, m) in &op.entries {
            let m = m * s;
            let mc = m.conj();
            for j in 0..d {
                out[i + j * d] += m * x[k + j * d];
            }
            let (dst, src) = (i * d, k * d);
            for j in 0..d {
                out[j + dst] += mc * x[j + src];
            }
        }
    }

    pub fn apply_matrix(&self, t: f64, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.apply(t, x.as_slice(), out.as_mut_slice());
        out
    }

    /// Dense superoperator of the generator at time `t`, acting on
    /// column-major vectorised matrices.
    pub fn superoperator(&self, t: f64) -> CMatrix {
        let d = self.dim;
        let n = d * d;
        let mut sup = CMatrix::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for c in 0..n {
            e[c] = C64::new(1.0, 0.0);
            self.apply(t, &e, &mut col);
            sup.set_column(c, &nalgebra::DVector::from_column_slice(&col));
            e[c] = C64::new(0.0, 0.0);
        }
        sup
    }
}

/// `dρ/dt` at time `t` for the given Hamiltonian and collapse channels.
pub fn liouvillian_apply(
    parts: &HamiltonianParts,
    channels: &CollapseChannels,
    rho: &crate::hilbert::QuantumState,
    t: f64,
) -> Result<CMatrix> {
    if rho.signature() != parts.signature() {
        return Err(Error::SignatureMismatch {
            left: parts.signature(),
            right: rho.signature(),
        });
    }
    let kernel = LindbladKernel::new(parts, channels)?;
    Ok(kernel.apply_matrix(t, rho.matrix()))
}
