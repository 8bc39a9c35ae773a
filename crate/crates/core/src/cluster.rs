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

//! Cluster-state construction, computational ↔ laboratory basis
//! translation, and stabilizer-based fidelity.
//!
//! The laboratory encoding places two qubits on each of two photons:
//! polarization (H/V ↔ 0/1) and linear momentum (ℓ/r ↔ 0/1). A 4-qubit
//! cluster in the computational basis maps onto the laboratory basis via a
//! local unitary 𝒰 = U_1⊗U_2⊗U_3⊗U_4 whose factors depend on how the four
//! physical qubits (k_A, k_B, π_A, π_B) are assigned to logical positions
//! 1–4. Four standard assignments (orderings `a`–`d`) are built in.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{LocalFactor, LocalWord, Pauli, SignedPauli};
use crate::statevec::{apply_1q_unchecked, apply_cz, permute_qubits, DensityMatrix, Ket, Operator};

/// Undirected graph on qubits 1..=n; nodes are prepared in |+⟩ and every
/// edge receives a CZ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    #[serde(rename = "n")]
    pub n_qubits: usize,
    pub edges: Vec<(usize, usize)>,
}

impl GraphSpec {
    pub fn new(n_qubits: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let spec = GraphSpec { n_qubits, edges };
        spec.validate()?;
        Ok(spec)
    }

    /// Linear chain 1−2−...−n.
    pub fn chain(n: usize) -> Self {
        GraphSpec {
            n_qubits: n,
            edges: (1..n).map(|i| (i, i + 1)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > crate::statevec::MAX_QUBITS {
            return Err(Error::InvalidGraph(format!(
                "qubit count {} out of range",
                self.n_qubits
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(i, j) in &self.edges {
            if i == j {
                return Err(Error::InvalidGraph(format!("self loop on qubit {i}")));
            }
            if i == 0 || i > self.n_qubits || j == 0 || j > self.n_qubits {
                return Err(Error::InvalidGraph(format!("edge ({i},{j}) out of range")));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i},{j})")));
            }
        }
        Ok(())
    }

    /// Neighbours of `q`.
    pub fn neighbours(&self, q: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(i, j)| {
                if i == q {
                    Some(j)
                } else if j == q {
                    Some(i)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// |+⟩^⊗n with CZ applied per edge.
pub fn build_cluster(spec: &GraphSpec) -> Result<Ket> {
    spec.validate()?;
    let mut state = Ket::plus_all(spec.n_qubits)?;
    for &(i, j) in &spec.edges {
        state = apply_cz(&state, i, j)?;
    }
    Ok(state)
}

/// The four physical qubits of the 2-photon encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhysicalLabel {
    /// Momentum of photon A.
    KA,
    /// Momentum of photon B.
    KB,
    /// Polarization of photon A.
    PiA,
    /// Polarization of photon B.
    PiB,
}

impl fmt::Display for PhysicalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PhysicalLabel::KA => "k_A",
            PhysicalLabel::KB => "k_B",
            PhysicalLabel::PiA => "pi_A",
            PhysicalLabel::PiB => "pi_B",
        };
        write!(f, "{s}")
    }
}

/// Canonical physical register order used when writing a laboratory state
/// over physical labels: (π_A, k_A, π_B, k_B), i.e. photon A's polarization
/// and momentum followed by photon B's.
pub const CANONICAL_LAB_ORDER: [PhysicalLabel; 4] = [
    PhysicalLabel::PiA,
    PhysicalLabel::KA,
    PhysicalLabel::PiB,
    PhysicalLabel::KB,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingName {
    A,
    B,
    C,
    D,
}

impl OrderingName {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(OrderingName::A),
            "b" => Ok(OrderingName::B),
            "c" => Ok(OrderingName::C),
            "d" => Ok(OrderingName::D),
            other => Err(Error::InvalidParameter(format!(
                "unknown ordering '{other}', expected a|b|c|d"
            ))),
        }
    }
}

impl fmt::Display for OrderingName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OrderingName::A => "a",
            OrderingName::B => "b",
            OrderingName::C => "c",
            OrderingName::D => "d",
        };
        write!(f, "{s}")
    }
}

/// Assignment of physical labels to logical positions 1–4 plus the local
/// unitaries U_1..U_4 relating the computational cluster to the laboratory
/// state: |lab⟩ = 𝒰 |computational⟩ (up to a global phase, recorded by
/// tests, never absorbed into the U_j).
#[derive(Clone, Debug)]
pub struct OrderingMap {
    name: OrderingName,
    assignment: [PhysicalLabel; 4],
    local_words: [LocalWord; 4],
}

impl OrderingMap {
    pub fn named(name: OrderingName) -> Self {
        use LocalFactor::{H, X, Z};
        use PhysicalLabel::*;
        let (assignment, words) = match name {
            // (1,2,3,4) = (k_B, k_A, π_A, π_B), 𝒰 = σ_xH ⊗ σ_z ⊗ 𝟙 ⊗ H
            OrderingName::A => (
                [KB, KA, PiA, PiB],
                [
                    LocalWord(vec![X, H]),
                    LocalWord(vec![Z]),
                    LocalWord::identity(),
                    LocalWord(vec![H]),
                ],
            ),
            // (1,2,3,4) = (π_B, π_A, k_A, k_B), 𝒰 = H ⊗ σ_z ⊗ σ_x ⊗ σ_zH
            OrderingName::B => (
                [PiB, PiA, KA, KB],
                [
                    LocalWord(vec![H]),
                    LocalWord(vec![Z]),
                    LocalWord(vec![X]),
                    LocalWord(vec![Z, H]),
                ],
            ),
            // (1,2,3,4) = (k_A, k_B, π_B, π_A), 𝒰 = σ_zH ⊗ σ_x ⊗ 𝟙 ⊗ H
            OrderingName::C => (
                [KA, KB, PiB, PiA],
                [
                    LocalWord(vec![Z, H]),
                    LocalWord(vec![X]),
                    LocalWord::identity(),
                    LocalWord(vec![H]),
                ],
            ),
            // (1,2,3,4) = (π_A, π_B, k_B, k_A), 𝒰 = H ⊗ 𝟙 ⊗ σ_x ⊗ σ_zH
            OrderingName::D => (
                [PiA, PiB, KB, KA],
                [
                    LocalWord(vec![H]),
                    LocalWord::identity(),
                    LocalWord(vec![X]),
                    LocalWord(vec![Z, H]),
                ],
            ),
        };
        OrderingMap {
            name,
            assignment,
            local_words: words,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(OrderingMap::named(OrderingName::parse(s)?))
    }

    /// Custom assignment/unitaries; the assignment must be a bijection.
    pub fn custom(
        name: OrderingName,
        assignment: [PhysicalLabel; 4],
        local_words: [LocalWord; 4],
    ) -> Result<Self> {
        for (i, a) in assignment.iter().enumerate() {
            for b in assignment.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::InvalidParameter(
                        "ordering assignment is not a bijection".into(),
                    ));
                }
            }
        }
        Ok(OrderingMap {
            name,
            assignment,
            local_words,
        })
    }

    pub fn name(&self) -> OrderingName {
        self.name
    }

    pub fn assignment(&self) -> &[PhysicalLabel; 4] {
        &self.assignment
    }

    /// Physical label carried by logical position `q` (1-based).
    pub fn physical_of(&self, q: usize) -> PhysicalLabel {
        self.assignment[q - 1]
    }

    /// Logical position (1-based) carrying the given physical label.
    pub fn logical_of(&self, label: PhysicalLabel) -> usize {
        self.assignment
            .iter()
            .position(|&l| l == label)
            .expect("assignment is a bijection")
            + 1
    }

    pub fn local_words(&self) -> &[LocalWord; 4] {
        &self.local_words
    }

    pub fn local_word(&self, q: usize) -> &LocalWord {
        &self.local_words[q - 1]
    }

    /// Dense U_1..U_4 matrices.
    pub fn local_unitaries(&self) -> [Operator; 4] {
        [
            self.local_words[0].to_operator(),
            self.local_words[1].to_operator(),
            self.local_words[2].to_operator(),
            self.local_words[3].to_operator(),
        ]
    }
}

/// Applies 𝒰 = U_1⊗U_2⊗U_3⊗U_4 to a 4-qubit computational-basis state.
/// The result lives on the same logical positions; each position carries
/// the ordering's physical label.
pub fn to_lab(state: &Ket, ordering: &OrderingMap) -> Result<Ket> {
    if state.n_qubits() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            got: state.dim(),
        });
    }
    let mut out = state.clone();
    for (q, word) in ordering.local_words.iter().enumerate() {
        out = apply_1q_unchecked(&out, &word.to_operator(), q + 1)?;
    }
    Ok(out)
}

/// Permutes a logical-position laboratory state into the canonical physical
/// register order (π_A, k_A, π_B, k_B).
pub fn align_physical(state: &Ket, ordering: &OrderingMap) -> Result<Ket> {
    if state.n_qubits() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            got: state.dim(),
        });
    }
    let perm: Vec<usize> = CANONICAL_LAB_ORDER
        .iter()
        .map(|&label| ordering.logical_of(label))
        .collect();
    permute_qubits(state, &perm)
}

/// Graph-state stabilizer generators g_i = X_i ∏_{j∈nbr(i)} Z_j.
pub fn stabilizer_generators(spec: &GraphSpec) -> Result<Vec<SignedPauli>> {
    spec.validate()?;
    let n = spec.n_qubits;
    let mut gens = Vec::with_capacity(n);
    for i in 1..=n {
        let mut letters = vec![Pauli::I; n];
        letters[i - 1] = Pauli::X;
        for j in spec.neighbours(i) {
            letters[j - 1] = Pauli::Z;
        }
        gens.push(SignedPauli::new(false, letters));
    }
    Ok(gens)
}

/// The 16 signed Pauli strings stabilizing a 4-qubit graph state,
/// optionally conjugated by a local unitary 𝒰 (every element maps to
/// 𝒰 S 𝒰†, which stabilizes the corresponding laboratory state).
#[derive(Clone, Debug)]
pub struct StabilizerGroup {
    elements: Vec<SignedPauli>,
}

impl StabilizerGroup {
    pub fn elements(&self) -> &[SignedPauli] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Checks ⟨ψ|S|ψ⟩ = +1 within `tol` for every element.
    pub fn stabilizes(&self, state: &Ket, tol: f64) -> Result<bool> {
        for s in &self.elements {
            let op = s.to_operator();
            let image = op.apply(state)?;
            let expectation = state.inner(&image)?;
            if (expectation.re - 1.0).abs() > tol || expectation.im.abs() > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Builds the full 16-element stabilizer group of a 4-qubit graph state.
pub fn stabilizer_group(spec: &GraphSpec, local: Option<&OrderingMap>) -> Result<StabilizerGroup> {
    if spec.n_qubits != 4 {
        return Err(Error::InvalidGraph(format!(
            "full stabilizer group requires 4 qubits, got {}; use stabilizer_generators for other sizes",
            spec.n_qubits
        )));
    }
    let gens = stabilizer_generators(spec)?;
    let mut elements = Vec::with_capacity(16);
    for mask in 0..16usize {
        let mut acc = SignedPauli::identity(4);
        for (i, gen) in gens.iter().enumerate() {
            if (mask >> i) & 1 == 1 {
                acc = acc.mul(gen)?;
            }
        }
        elements.push(acc);
    }
    if let Some(ordering) = local {
        let words = ordering.local_words();
        elements = elements
            .into_iter()
            .map(|e| e.conjugate_by(words))
            .collect::<Result<Vec<_>>>()?;
    }
    Ok(StabilizerGroup { elements })
}

/// (1/16) Σ_S tr(ρ·S) over the group. For the stabilizer group of a state
/// |C⟩ this equals ⟨C|ρ|C⟩ for every ρ, because the group average is the
/// projector onto the stabilized subspace.
pub fn stabilizer_fidelity(rho: &DensityMatrix, group: &StabilizerGroup) -> Result<f64> {
    if rho.n_qubits() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            got: rho.dim(),
        });
    }
    let mut acc = 0.0;
    for s in group.elements() {
        acc += rho.expectation(&s.to_operator())?.re;
    }
    Ok(acc / group.len() as f64)
}
