// Copyright 2026 the oneway developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License.You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! Dense complex state-vector and density-matrix kernel.
//!
//! Indexing convention: qubit 1 is the most significant bit of the basis
//! state index, so for `n` qubits, qubit `q` maps to bit `n - q` (counting
//! from the least significant bit). All public qubit indices are 1-based.
//!
//! Values are immutable from the caller's perspective; every operation
//! returns a fresh value, so states can be shared freely across threads.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hard cap on qubit count for dense simulation.
pub const MAX_QUBITS: usize = 12;

/// Probabilities below this are treated as zero (undefined collapse).
pub const PROB_FLOOR: f64 = 1e-14;

const NORM_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check_qubit(qubit: usize, n: usize) -> Result<()> {
    if qubit == 0 || qubit > n {
        return Err(Error::QubitOutOfRange { qubit, n });
    }
    Ok(())
}

/// Bit position (from LSB) of 1-based `qubit` in an `n`-qubit index.
fn bit_of(qubit: usize, n: usize) -> usize {
    n - qubit
}

/// Normalized complex amplitude vector over `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    n: usize,
    amps: Vec<C64>,
}

impl Ket {
    /// Builds from amplitudes, requiring unit norm within 1e-12.
    pub fn new(n: usize, amps: Vec<C64>) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange { n, max: MAX_QUBITS });
        }
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: amps.len(),
            });
        }
        let ket = Ket { n, amps };
        let norm = ket.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::ZeroNorm);
        }
        Ok(ket)
    }

    /// Builds from arbitrary amplitudes and renormalizes.
    pub fn from_unnormalized(n: usize, amps: Vec<C64>) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange { n, max: MAX_QUBITS });
        }
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: amps.len(),
            });
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr < PROB_FLOOR {
            return Err(Error::ZeroNorm);
        }
        let scale = 1.0 / norm_sqr.sqrt();
        let amps = amps.into_iter().map(|a| a * scale).collect();
        Ok(Ket { n, amps })
    }

    /// Computational basis state |index⟩.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange { n, max: MAX_QUBITS });
        }
        if index >= 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: index,
            });
        }
        let mut amps = vec![c(0.0, 0.0); 1 << n];
        amps[index] = c(1.0, 0.0);
        Ok(Ket { n, amps })
    }

    /// |0...0⟩.
    pub fn zero(n: usize) -> Self {
        Ket::basis(n, 0).expect("valid qubit count")
    }

    /// |+⟩^⊗n, the uniform superposition.
    pub fn plus_all(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange { n, max: MAX_QUBITS });
        }
        let dim = 1usize << n;
        let a = c(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Ket {
            n,
            amps: vec![a; dim],
        })
    }

    /// Single-qubit |0⟩.
    pub fn ket0() -> Self {
        Ket::basis(1, 0).unwrap()
    }

    /// Single-qubit |1⟩.
    pub fn ket1() -> Self {
        Ket::basis(1, 1).unwrap()
    }

    /// Single-qubit |+⟩ = (|0⟩+|1⟩)/√2.
    pub fn ket_plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ket::new(1, vec![c(s, 0.0), c(s, 0.0)]).unwrap()
    }

    /// Single-qubit |−⟩ = (|0⟩−|1⟩)/√2.
    pub fn ket_minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ket::new(1, vec![c(s, 0.0), c(-s, 0.0)]).unwrap()
    }

    /// Equatorial basis vector |φ_s⟩ = (|0⟩ + (−1)^s e^{−iφ}|1⟩)/√2.
    ///
    /// The sign convention on the phase matches the measurement bases used
    /// throughout the protocol layer: outcome 0 picks the `+` vector.
    pub fn equatorial(angle: f64, s: u8) -> Self {
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let sign = if s & 1 == 0 { 1.0 } else { -1.0 };
        let phase = C64::from_polar(sign * half, -angle);
        Ket::new(1, vec![c(half, 0.0), phase]).unwrap()
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Tensor product; `self` holds the more significant qubits.
    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        let n = self.n + other.n;
        if n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange { n, max: MAX_QUBITS });
        }
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Ket { n, amps })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Extracts the relative global phase such that `other ≈ phase · self`,
    /// or `None` if the two states are not equal up to a global phase.
    pub fn global_phase_to(&self, other: &Ket) -> Option<C64> {
        let ov = self.inner(other).ok()?;
        if (ov.norm() - 1.0).abs() > 1e-9 {
            return None;
        }
        Some(ov / ov.norm())
    }
}

/// |⟨a|b⟩|², the overlap fidelity of two pure states.
pub fn overlap_fidelity(a: &Ket, b: &Ket) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Dense complex square matrix on `k` qubits (dim 2^k).
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<C64>, // row-major
}

impl Operator {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if !dim.is_power_of_two() || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "operator dimension {dim} is not a power of two"
            )));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Operator { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![c(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = c(1.0, 0.0);
        }
        Operator { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Operator) -> Result<Operator> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.dim,
            });
        }
        let d = self.dim;
        let mut entries = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    entries[i * d + j] += a * rhs.entries[k * d + j];
                }
            }
        }
        Ok(Operator { dim: d, entries })
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Operator {
        let d = self.dim;
        let mut entries = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                entries[j * d + i] = self.entries[i * d + j].conj();
            }
        }
        Operator { dim: d, entries }
    }

    /// Kronecker product; `self` acts on the more significant qubits.
    pub fn kron(&self, rhs: &Operator) -> Operator {
        let d1 = self.dim;
        let d2 = rhs.dim;
        let d = d1 * d2;
        let mut entries = vec![c(0.0, 0.0); d * d];
        for i1 in 0..d1 {
            for j1 in 0..d1 {
                let a = self.entries[i1 * d1 + j1];
                for i2 in 0..d2 {
                    for j2 in 0..d2 {
                        entries[(i1 * d2 + i2) * d + (j1 * d2 + j2)] =
                            a * rhs.entries[i2 * d2 + j2];
                    }
                }
            }
        }
        Operator { dim: d, entries }
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Operator {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    /// Full-dimension matrix-vector application.
    pub fn apply(&self, state: &Ket) -> Result<Ket> {
        if self.dim != state.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: state.dim(),
            });
        }
        let d = self.dim;
        let mut amps = vec![c(0.0, 0.0); d];
        for (i, amp) in amps.iter_mut().enumerate() {
            let mut acc = c(0.0, 0.0);
            for j in 0..d {
                acc += self.entries[i * d + j] * state.amps[j];
            }
            *amp = acc;
        }
        Ok(Ket { n: state.n, amps })
    }

    /// Checks U·U† = identity within `tol` (max-entry deviation).
    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = match self.mul(&self.dagger()) {
            Ok(p) => p,
            Err(_) => return false,
        };
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (prod.entries[i * d + j] - c(expect, 0.0)).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Common gates and single-qubit operators.
pub mod gates {
    use super::{c, Operator, C64};

    pub fn identity1() -> Operator {
        Operator::identity(2)
    }

    pub fn pauli_x() -> Operator {
        Operator::new(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap()
    }

    pub fn pauli_y() -> Operator {
        Operator::new(2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap()
    }

    pub fn pauli_z() -> Operator {
        Operator::new(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]).unwrap()
    }

    /// H = (σ_x + σ_z)/√2.
    pub fn hadamard() -> Operator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Operator::new(2, vec![c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]).unwrap()
    }

    /// R_z(α) = exp(−iα σ_z/2) = diag(e^{−iα/2}, e^{iα/2}).
    pub fn rz(alpha: f64) -> Operator {
        Operator::new(
            2,
            vec![
                C64::from_polar(1.0, -alpha / 2.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                C64::from_polar(1.0, alpha / 2.0),
            ],
        )
        .unwrap()
    }

    /// R_x(β) = exp(−iβ σ_x/2).
    pub fn rx(beta: f64) -> Operator {
        let cos = (beta / 2.0).cos();
        let sin = (beta / 2.0).sin();
        Operator::new(
            2,
            vec![c(cos, 0.0), c(0.0, -sin), c(0.0, -sin), c(cos, 0.0)],
        )
        .unwrap()
    }

    /// CZ = |0⟩⟨0|⊗𝟙 + |1⟩⟨1|⊗σ_z on two qubits.
    pub fn cz() -> Operator {
        let mut op = Operator::identity(4);
        op.entries[15] = c(-1.0, 0.0);
        op
    }

    /// C-NOT with the more significant qubit as control.
    pub fn cnot() -> Operator {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        Operator::new(
            4,
            vec![
                o, z, z, z, //
                z, o, z, z, //
                z, z, z, o, //
                z, z, o, z,
            ],
        )
        .unwrap()
    }

    /// Projector |v⟩⟨v| from a single-qubit ket.
    pub fn projector(v: &super::Ket) -> Operator {
        let a0 = v.amp(0);
        let a1 = v.amp(1);
        Operator::new(
            2,
            vec![
                a0 * a0.conj(),
                a0 * a1.conj(),
                a1 * a0.conj(),
                a1 * a1.conj(),
            ],
        )
        .unwrap()
    }
}

/// Applies a single-qubit gate on the indexed tensor factor.
///
/// Validates unitarity (1e-10) by default; see [`apply_1q_unchecked`] for
/// the validation-free variant used on hot paths.
pub fn apply_1q(state: &Ket, gate: &Operator, qubit: usize) -> Result<Ket> {
    if !gate.is_unitary(UNITARY_TOL) {
        return Err(Error::NonUnitary);
    }
    apply_1q_unchecked(state, gate, qubit)
}

/// Same as [`apply_1q`] but skips the unitarity check. Also usable with
/// non-unitary 2×2 maps (projectors); the result is not renormalized.
pub fn apply_1q_unchecked(state: &Ket, gate: &Operator, qubit: usize) -> Result<Ket> {
    check_qubit(qubit, state.n)?;
    if gate.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: gate.dim(),
        });
    }
    let step = 1usize << bit_of(qubit, state.n);
    let u00 = gate.entry(0, 0);
    let u01 = gate.entry(0, 1);
    let u10 = gate.entry(1, 0);
    let u11 = gate.entry(1, 1);
    let mut amps = state.amps.clone();
    for base in (0..amps.len()).step_by(2 * step) {
        for offset in 0..step {
            let i0 = base + offset;
            let i1 = i0 + step;
            let a = amps[i0];
            let b = amps[i1];
            amps[i0] = u00 * a + u01 * b;
            amps[i1] = u10 * a + u11 * b;
        }
    }
    Ok(Ket { n: state.n, amps })
}

/// Applies CZ between qubits `i` and `j`: phase −1 where both bits are 1.
pub fn apply_cz(state: &Ket, i: usize, j: usize) -> Result<Ket> {
    check_qubit(i, state.n)?;
    check_qubit(j, state.n)?;
    if i == j {
        return Err(Error::InvalidParameter(format!(
            "cz requires distinct qubits, got {i} and {j}"
        )));
    }
    let bi = bit_of(i, state.n);
    let bj = bit_of(j, state.n);
    let mut amps = state.amps.clone();
    for (idx, amp) in amps.iter_mut().enumerate() {
        if (idx >> bi) & 1 == 1 && (idx >> bj) & 1 == 1 {
            *amp = -*amp;
        }
    }
    Ok(Ket { n: state.n, amps })
}

/// Outcome of a projective measurement of one qubit.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Squared norm of the projected component.
    pub prob: f64,
    /// Renormalized post-measurement state on all `n` qubits (the measured
    /// qubit is left in the projection target). `None` when `prob` is below
    /// the zero-probability threshold, in which case the collapsed state is
    /// undefined.
    pub collapsed: Option<Ket>,
}

/// Projects `qubit` onto the normalized 1-qubit state `onto`.
pub fn project(state: &Ket, qubit: usize, onto: &Ket) -> Result<Projection> {
    check_qubit(qubit, state.n)?;
    if onto.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: onto.dim(),
        });
    }
    let projected = apply_1q_unchecked(state, &gates::projector(onto), qubit)?;
    let prob = projected.norm_sqr();
    if prob < PROB_FLOOR {
        return Ok(Projection {
            prob: 0.0,
            collapsed: None,
        });
    }
    let scale = 1.0 / prob.sqrt();
    let amps = projected.amps.into_iter().map(|a| a * scale).collect();
    Ok(Projection {
        prob,
        collapsed: Some(Ket { n: state.n, amps }),
    })
}

/// Contracts one qubit against a 1-qubit bra, returning the squared norm of
/// the contraction and the renormalized residual state on the remaining
/// qubits (original order preserved).
pub fn contract_qubit(state: &Ket, qubit: usize, bra: &Ket) -> Result<(f64, Ket)> {
    check_qubit(qubit, state.n)?;
    if bra.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: bra.dim(),
        });
    }
    if state.n == 1 {
        return Err(Error::InvalidParameter(
            "cannot contract the only qubit of a state".into(),
        ));
    }
    let pos = bit_of(qubit, state.n);
    let low_mask = (1usize << pos) - 1;
    let v0 = bra.amp(0).conj();
    let v1 = bra.amp(1).conj();
    let mut amps = vec![c(0.0, 0.0); 1 << (state.n - 1)];
    for (idx, amp) in state.amps.iter().enumerate() {
        let b = (idx >> pos) & 1;
        let reduced = ((idx >> (pos + 1)) << pos) | (idx & low_mask);
        amps[reduced] += if b == 0 { v0 } else { v1 } * amp;
    }
    let weight: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if weight < PROB_FLOOR {
        return Err(Error::ImpossibleBranch { prob: weight });
    }
    let scale = 1.0 / weight.sqrt();
    let amps = amps.into_iter().map(|a| a * scale).collect();
    Ok((
        weight,
        Ket {
            n: state.n - 1,
            amps,
        },
    ))
}

/// Reorders tensor factors. `perm[new_pos - 1]` gives the 1-based old
/// position whose factor lands at `new_pos`.
pub fn permute_qubits(state: &Ket, perm: &[usize]) -> Result<Ket> {
    let n = state.n;
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: perm.len(),
        });
    }
    let mut seen = vec![false; n + 1];
    for &p in perm {
        check_qubit(p, n)?;
        if seen[p] {
            return Err(Error::InvalidParameter(format!(
                "permutation repeats qubit {p}"
            )));
        }
        seen[p] = true;
    }
    let mut amps = vec![c(0.0, 0.0); state.dim()];
    for (old_idx, amp) in state.amps.iter().enumerate() {
        let mut new_idx = 0usize;
        for (new_pos, &old_pos) in perm.iter().enumerate() {
            let bit = (old_idx >> bit_of(old_pos, n)) & 1;
            new_idx |= bit << bit_of(new_pos + 1, n);
        }
        amps[new_idx] = *amp;
    }
    Ok(Ket { n, amps })
}

/// Hermitian, unit-trace operator for noisy-state simulation.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n: usize,
    entries: Vec<C64>, // row-major, dim 2^n
}

impl DensityMatrix {
    /// Builds from entries, validating Hermiticity (1e-12) and unit trace
    /// (1e-12). Positivity is a separate, explicit check because it needs
    /// an eigendecomposition.
    pub fn new(n: usize, entries: Vec<C64>) -> Result<Self> {
        let dm = DensityMatrix::new_unchecked(n, entries)?;
        if !dm.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NonHermitian);
        }
        let tr = dm.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::BadTrace { trace: tr.re });
        }
        Ok(dm)
    }

    /// Builds without Hermiticity/trace validation.
    pub fn new_unchecked(n: usize, entries: Vec<C64>) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange { n, max: MAX_QUBITS });
        }
        let dim = 1usize << n;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(DensityMatrix { n, entries })
    }

    /// Rank-1 projector |ψ⟩⟨ψ|.
    pub fn from_ket(state: &Ket) -> Self {
        let dim = state.dim();
        let mut entries = vec![c(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = state.amps[i] * state.amps[j].conj();
            }
        }
        DensityMatrix {
            n: state.n,
            entries,
        }
    }

    /// I/2^n.
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange { n, max: MAX_QUBITS });
        }
        let dim = 1usize << n;
        let mut entries = vec![c(0.0, 0.0); dim * dim];
        let w = 1.0 / dim as f64;
        for i in 0..dim {
            entries[i * dim + i] = c(w, 0.0);
        }
        Ok(DensityMatrix { n, entries })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.entries[i * d + i]).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        for i in 0..d {
            for j in i..d {
                if (self.entries[i * d + j] - self.entries[j * d + i].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * w + b * (1.0 - w))
            .collect();
        Ok(DensityMatrix { n: self.n, entries })
    }

    /// tr(ρ·op) for a full-dimension operator.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        let d = self.dim();
        if op.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: op.dim(),
            });
        }
        let mut acc = c(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.entries[i * d + j] * op.entry(j, i);
            }
        }
        Ok(acc)
    }

    /// Applies a 2×2 map ρ → MρM† on the indexed qubit (no renormalization).
    pub fn map_1q(&self, m: &Operator, qubit: usize) -> Result<DensityMatrix> {
        check_qubit(qubit, self.n)?;
        if m.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: m.dim(),
            });
        }
        let d = self.dim();
        let step = 1usize << bit_of(qubit, self.n);
        let u00 = m.entry(0, 0);
        let u01 = m.entry(0, 1);
        let u10 = m.entry(1, 0);
        let u11 = m.entry(1, 1);
        let mut entries = self.entries.clone();
        // Left-multiply by M: act on row pairs per column.
        for col in 0..d {
            for base in (0..d).step_by(2 * step) {
                for offset in 0..step {
                    let r0 = base + offset;
                    let r1 = r0 + step;
                    let a = entries[r0 * d + col];
                    let b = entries[r1 * d + col];
                    entries[r0 * d + col] = u00 * a + u01 * b;
                    entries[r1 * d + col] = u10 * a + u11 * b;
                }
            }
        }
        // Right-multiply by M†: act on column pairs per row.
        let v00 = u00.conj();
        let v01 = u10.conj();
        let v10 = u01.conj();
        let v11 = u11.conj();
        for row in 0..d {
            for base in (0..d).step_by(2 * step) {
                for offset in 0..step {
                    let c0 = base + offset;
                    let c1 = c0 + step;
                    let a = entries[row * d + c0];
                    let b = entries[row * d + c1];
                    entries[row * d + c0] = a * v00 + b * v10;
                    entries[row * d + c1] = a * v01 + b * v11;
                }
            }
        }
        Ok(DensityMatrix { n: self.n, entries })
    }

    pub fn scale(&self, factor: f64) -> DensityMatrix {
        DensityMatrix {
            n: self.n,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    /// Eigenvalues of the (Hermitian) matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::eig::hermitian_eigenvalues(self.dim(), &self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// ⟨target|ρ|target⟩.
pub fn fidelity_dm(rho: &DensityMatrix, target: &Ket) -> Result<f64> {
    let d = rho.dim();
    if target.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: target.dim(),
        });
    }
    let mut acc = c(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += target.amps[i].conj() * rho.entries[i * d + j] * target.amps[j];
        }
    }
    Ok(acc.re)
}

/// Reduced density matrix on the kept qubits (ascending original order),
/// tracing out the rest. Trace is preserved.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if keep.is_empty() {
        return Err(Error::InvalidParameter("keep set must be non-empty".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::InvalidParameter("keep set has duplicates".into()));
    }
    for &q in &keep_sorted {
        check_qubit(q, n)?;
    }
    let traced: Vec<usize> = (1..=n).filter(|q| !keep_sorted.contains(q)).collect();
    let m = keep_sorted.len();
    if traced.is_empty() {
        return Ok(rho.clone());
    }

    // Compose a full index from kept-qubit bits and traced-qubit bits.
    let kept_bits: Vec<usize> = keep_sorted.iter().map(|&q| bit_of(q, n)).collect();
    let traced_bits: Vec<usize> = traced.iter().map(|&q| bit_of(q, n)).collect();
    let full_index = |kept_val: usize, traced_val: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &bit) in kept_bits.iter().enumerate() {
            idx |= ((kept_val >> (m - 1 - pos)) & 1) << bit;
        }
        for (pos, &bit) in traced_bits.iter().enumerate() {
            idx |= ((traced_val >> (traced_bits.len() - 1 - pos)) & 1) << bit;
        }
        idx
    };

    let dim_keep = 1usize << m;
    let dim_traced = 1usize << traced.len();
    let d = rho.dim();
    let mut entries = vec![c(0.0, 0.0); dim_keep * dim_keep];
    for a in 0..dim_keep {
        for b in 0..dim_keep {
            let mut acc = c(0.0, 0.0);
            for e in 0..dim_traced {
                let row = full_index(a, e);
                let col = full_index(b, e);
                acc += rho.entries[row * d + col];
            }
            entries[a * dim_keep + b] = acc;
        }
    }
    Ok(DensityMatrix { n: m, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn assert_close(a: C64, b: C64) {
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
    }

    /// Phase-insensitive state equality.
    fn assert_same_state(a: &Ket, b: &Ket) {
        let f = overlap_fidelity(a, b).unwrap();
        assert!((f - 1.0).abs() < 1e-10, "fidelity {f}");
    }

    #[test]
    fn hadamard_takes_zero_to_plus() {
        let out = apply_1q(&Ket::ket0(), &gates::hadamard(), 1).unwrap();
        assert_close(out.amp(0), c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        assert_close(out.amp(1), c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn rz_phases_plus_state() {
        let alpha = 0.7;
        let out = apply_1q(&Ket::ket_plus(), &gates::rz(alpha), 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(out.amp(0), C64::from_polar(s, -alpha / 2.0));
        assert_close(out.amp(1), C64::from_polar(s, alpha / 2.0));
    }

    #[test]
    fn pauli_x_negates_minus() {
        let out = apply_1q(&Ket::ket_minus(), &gates::pauli_x(), 1).unwrap();
        let minus = Ket::ket_minus();
        for i in 0..2 {
            assert_close(out.amp(i), -minus.amp(i));
        }
    }

    #[test]
    fn apply_1q_rejects_bad_qubit_and_nonunitary() {
        let st = Ket::ket0();
        assert!(matches!(
            apply_1q(&st, &gates::hadamard(), 2),
            Err(Error::QubitOutOfRange { .. })
        ));
        let bad = Operator::new(2, vec![c(1.0, 0.0); 4]).unwrap();
        assert!(matches!(apply_1q(&st, &bad, 1), Err(Error::NonUnitary)));
    }

    #[test]
    fn cz_on_plus_plus() {
        let st = Ket::plus_all(2).unwrap();
        let out = apply_cz(&st, 1, 2).unwrap();
        assert_close(out.amp(0b00), c(0.5, 0.0));
        assert_close(out.amp(0b01), c(0.5, 0.0));
        assert_close(out.amp(0b10), c(0.5, 0.0));
        assert_close(out.amp(0b11), c(-0.5, 0.0));
    }

    #[test]
    fn cz_is_involutive_and_control_inactive() {
        let st = Ket::from_unnormalized(
            2,
            vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.5, 0.0), c(0.1, -0.6)],
        )
        .unwrap();
        let twice = apply_cz(&apply_cz(&st, 1, 2).unwrap(), 1, 2).unwrap();
        for i in 0..4 {
            assert_close(twice.amp(i), st.amp(i));
        }
        // |0⟩ ⊗ |ψ⟩ is untouched.
        let psi = Ket::from_unnormalized(1, vec![c(0.6, 0.2), c(-0.3, 0.7)]).unwrap();
        let prod = Ket::ket0().tensor(&psi).unwrap();
        let out = apply_cz(&prod, 1, 2).unwrap();
        for i in 0..4 {
            assert_close(out.amp(i), prod.amp(i));
        }
    }

    #[test]
    fn cz_rejects_equal_or_out_of_range_indices() {
        let st = Ket::plus_all(2).unwrap();
        assert!(apply_cz(&st, 1, 1).is_err());
        assert!(apply_cz(&st, 1, 3).is_err());
    }

    #[test]
    fn project_plus_onto_zero() {
        let res = project(&Ket::ket_plus(), 1, &Ket::ket0()).unwrap();
        assert!((res.prob - 0.5).abs() < TOL);
        let collapsed = res.collapsed.unwrap();
        assert_close(collapsed.amp(0), c(1.0, 0.0));
        assert_close(collapsed.amp(1), c(0.0, 0.0));
    }

    #[test]
    fn project_zero_onto_one_is_undefined() {
        let res = project(&Ket::ket0(), 1, &Ket::ket1()).unwrap();
        assert_eq!(res.prob, 0.0);
        assert!(res.collapsed.is_none());
    }

    #[test]
    fn overlap_fidelity_basics() {
        assert!((overlap_fidelity(&Ket::ket_plus(), &Ket::ket_plus()).unwrap() - 1.0).abs() < TOL);
        assert!(overlap_fidelity(&Ket::ket0(), &Ket::ket1()).unwrap() < TOL);
        assert!(overlap_fidelity(&Ket::ket0(), &Ket::plus_all(2).unwrap()).is_err());
    }

    #[test]
    fn equatorial_vectors_match_definition() {
        let phi = 1.234;
        let plus = Ket::equatorial(phi, 0);
        let minus = Ket::equatorial(phi, 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(plus.amp(1), C64::from_polar(s, -phi));
        assert_close(minus.amp(1), -C64::from_polar(s, -phi));
        // Orthonormal pair.
        assert!(plus.inner(&minus).unwrap().norm() < TOL);
    }

    #[test]
    fn tensor_and_contract_roundtrip() {
        let a = Ket::from_unnormalized(1, vec![c(0.3, 0.4), c(0.5, -0.2)]).unwrap();
        let b =
            Ket::from_unnormalized(2, vec![c(0.1, 0.0), c(0.0, 0.8), c(-0.4, 0.2), c(0.3, 0.3)])
                .unwrap();
        let joint = a.tensor(&b).unwrap();
        let (w, rest) = contract_qubit(&joint, 1, &a).unwrap();
        assert!((w - 1.0).abs() < 1e-10);
        assert_same_state(&rest, &b);
    }

    #[test]
    fn permute_qubits_swaps_factors() {
        let a = Ket::ket0();
        let b = Ket::ket_plus();
        let ab = a.tensor(&b).unwrap();
        let ba = permute_qubits(&ab, &[2, 1]).unwrap();
        let expect = b.tensor(&a).unwrap();
        for i in 0..4 {
            assert_close(ba.amp(i), expect.amp(i));
        }
        // Inverse permutation restores the original.
        let back = permute_qubits(&ba, &[2, 1]).unwrap();
        for i in 0..4 {
            assert_close(back.amp(i), ab.amp(i));
        }
    }

    #[test]
    fn norm_preserved_under_random_unitaries() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=4);
            let amps = (0..1 << n)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let st = Ket::from_unnormalized(n, amps).unwrap();
            let u = gates::rz(rng.gen_range(0.0..std::f64::consts::TAU))
                .mul(&gates::rx(rng.gen_range(0.0..std::f64::consts::TAU)))
                .unwrap()
                .mul(&gates::rz(rng.gen_range(0.0..std::f64::consts::TAU)))
                .unwrap();
            let q = rng.gen_range(1..=n);
            let out = apply_1q(&st, &u, q).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn hadamard_squared_is_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let amps = (0..8)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let st = Ket::from_unnormalized(3, amps).unwrap();
            let q = rng.gen_range(1..=3);
            let once = apply_1q(&st, &gates::hadamard(), q).unwrap();
            let twice = apply_1q(&once, &gates::hadamard(), q).unwrap();
            for i in 0..8 {
                assert!((twice.amp(i) - st.amp(i)).norm() < TOL);
            }
        }
    }

    #[test]
    fn projection_probabilities_sum_to_one() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let amps = (0..16)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let st = Ket::from_unnormalized(4, amps).unwrap();
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let q = rng.gen_range(1..=4);
            let p0 = project(&st, q, &Ket::equatorial(phi, 0)).unwrap().prob;
            let p1 = project(&st, q, &Ket::equatorial(phi, 1)).unwrap().prob;
            assert!((p0 + p1 - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn density_matrix_from_ket_matches_overlap() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let amps = (0..8)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                Ket::from_unnormalized(3, amps).unwrap()
            };
            let psi = mk(&mut rng);
            let phi = mk(&mut rng);
            let rho = DensityMatrix::from_ket(&psi);
            let f1 = fidelity_dm(&rho, &phi).unwrap();
            let f2 = overlap_fidelity(&psi, &phi).unwrap();
            assert!((f1 - f2).abs() < TOL);
        }
    }

    #[test]
    fn fidelity_of_maximally_mixed_four_qubits() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        let target = Ket::plus_all(4).unwrap();
        assert!((fidelity_dm(&rho, &target).unwrap() - 1.0 / 16.0).abs() < TOL);
    }

    #[test]
    fn partial_trace_product_state() {
        let rho = DensityMatrix::from_ket(&Ket::zero(2));
        let reduced = partial_trace(&rho, &[1]).unwrap();
        assert_close(reduced.entry(0, 0), c(1.0, 0.0));
        assert_close(reduced.entry(1, 1), c(0.0, 0.0));
    }

    #[test]
    fn partial_trace_bell_state_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = Ket::new(2, vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
        let rho = DensityMatrix::from_ket(&bell);
        for keep in [1usize, 2] {
            let reduced = partial_trace(&rho, &[keep]).unwrap();
            assert_close(reduced.entry(0, 0), c(0.5, 0.0));
            assert_close(reduced.entry(1, 1), c(0.5, 0.0));
            assert_close(reduced.entry(0, 1), c(0.0, 0.0));
        }
    }

    #[test]
    fn partial_trace_preserves_trace_and_matches_bruteforce() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        // Random mixed state from two random kets.
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            let amps = (0..8)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            Ket::from_unnormalized(3, amps).unwrap()
        };
        let rho = DensityMatrix::from_ket(&mk(&mut rng))
            .mix(&DensityMatrix::from_ket(&mk(&mut rng)), 0.3)
            .unwrap();
        let reduced = partial_trace(&rho, &[1, 3]).unwrap();
        assert!((reduced.trace() - c(1.0, 0.0)).norm() < 1e-10);

        // Independent brute-force reduction over explicit index arithmetic:
        // qubit order (1,2,3) = bits (2,1,0); keep 1 and 3, trace qubit 2.
        for a in 0..4usize {
            for b in 0..4usize {
                let mut acc = c(0.0, 0.0);
                for e in 0..2usize {
                    let row = ((a >> 1) << 2) | (e << 1) | (a & 1);
                    let col = ((b >> 1) << 2) | (e << 1) | (b & 1);
                    acc += rho.entry(row, col);
                }
                assert_close(reduced.entry(a, b), acc);
            }
        }
    }

    #[test]
    fn partial_trace_rejects_bad_keep_sets() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[3]).is_err());
        assert!(partial_trace(&rho, &[1, 1]).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        // Non-Hermitian rejected.
        let mut entries = vec![c(0.0, 0.0); 4];
        entries[0] = c(0.5, 0.0);
        entries[1] = c(0.5, 0.0);
        entries[3] = c(0.5, 0.0);
        assert!(matches!(
            DensityMatrix::new(1, entries),
            Err(Error::NonHermitian)
        ));
        // Wrong trace rejected.
        let entries = vec![c(0.9, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)];
        assert!(matches!(
            DensityMatrix::new(1, entries),
            Err(Error::BadTrace { .. })
        ));
    }

    #[test]
    fn eigenvalues_of_known_matrices() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let eigs = rho.eigenvalues();
        for e in eigs {
            assert!((e - 0.25).abs() < 1e-10);
        }
        let pure = DensityMatrix::from_ket(&Ket::ket_plus());
        let eigs = pure.eigenvalues();
        assert!((eigs[0] - 0.0).abs() < 1e-10);
        assert!((eigs[1] - 1.0).abs() < 1e-10);
        assert!(pure.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn map_1q_matches_full_conjugation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let amps = (0..4)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let psi = Ket::from_unnormalized(2, amps).unwrap();
        let rho = DensityMatrix::from_ket(&psi);
        let h = gates::hadamard();
        let mapped = rho.map_1q(&h, 2).unwrap();
        let expect = DensityMatrix::from_ket(&apply_1q(&psi, &h, 2).unwrap());
        for i in 0..16 {
            assert!((mapped.entries()[i] - expect.entries()[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn gate_constructors_are_unitary() {
        for op in [
            gates::identity1(),
            gates::pauli_x(),
            gates::pauli_y(),
            gates::pauli_z(),
            gates::hadamard(),
            gates::rz(0.37),
            gates::rx(-1.2),
        ] {
            assert!(op.is_unitary(1e-12));
        }
        assert!(gates::cz().is_unitary(1e-12));
        assert!(gates::cnot().is_unitary(1e-12));
    }

    #[test]
    fn qubit_count_caps() {
        assert!(Ket::plus_all(0).is_err());
        assert!(Ket::plus_all(MAX_QUBITS + 1).is_err());
    }
}
