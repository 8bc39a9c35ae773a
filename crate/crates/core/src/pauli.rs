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

//! Signed Pauli strings and symbolic products of H, σ_x, σ_z.
//!
//! Pauli multiplication tracks the full i^k phase (convention XZ = −iY) and
//! only Hermitian ±1-signed results are representable as [`SignedPauli`].
//! [`LocalWord`] is a symbolic product of {H, X, Z} factors; conjugating a
//! Pauli by such a word always yields ±(another Pauli), which is what the
//! stabilizer and Pauli-frame bookkeeping relies on.

use std::fmt;

use crate::error::{Error, Result};
use crate::statevec::{gates, Operator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn to_operator(self) -> Operator {
        match self {
            Pauli::I => gates::identity1(),
            Pauli::X => gates::pauli_x(),
            Pauli::Y => gates::pauli_y(),
            Pauli::Z => gates::pauli_z(),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Single-letter product `a · b = i^phase · letter`, phase in Z₄.
fn mul_letters(a: Pauli, b: Pauli) -> (u8, Pauli) {
    use Pauli::*;
    match (a, b) {
        (I, p) | (p, I) => (0, p),
        (X, X) | (Y, Y) | (Z, Z) => (0, I),
        (X, Y) => (1, Z),
        (Y, X) => (3, Z),
        (Y, Z) => (1, X),
        (Z, Y) => (3, X),
        (Z, X) => (1, Y),
        (X, Z) => (3, Y),
    }
}

/// Hermitian signed Pauli string: sign ∈ {+1, −1} times a tensor product of
/// Pauli letters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedPauli {
    negative: bool,
    letters: Vec<Pauli>,
}

impl SignedPauli {
    pub fn new(negative: bool, letters: Vec<Pauli>) -> Self {
        SignedPauli { negative, letters }
    }

    pub fn identity(n: usize) -> Self {
        SignedPauli {
            negative: false,
            letters: vec![Pauli::I; n],
        }
    }

    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        !self.negative && self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Letterwise product. Errors if the accumulated phase is imaginary
    /// (the result would not be Hermitian with a ±1 sign).
    pub fn mul(&self, other: &SignedPauli) -> Result<SignedPauli> {
        if self.letters.len() != other.letters.len() {
            return Err(Error::DimensionMismatch {
                expected: self.letters.len(),
                got: other.letters.len(),
            });
        }
        let mut phase: u8 = 0;
        let mut letters = Vec::with_capacity(self.letters.len());
        for (&a, &b) in self.letters.iter().zip(&other.letters) {
            let (k, p) = mul_letters(a, b);
            phase = (phase + k) % 4;
            letters.push(p);
        }
        if self.negative {
            phase = (phase + 2) % 4;
        }
        if other.negative {
            phase = (phase + 2) % 4;
        }
        match phase {
            0 => Ok(SignedPauli {
                negative: false,
                letters,
            }),
            2 => Ok(SignedPauli {
                negative: true,
                letters,
            }),
            _ => Err(Error::Unrepresentable(
                "pauli product has imaginary phase".into(),
            )),
        }
    }

    /// Dense matrix representation (sign included).
    pub fn to_operator(&self) -> Operator {
        let mut op = Operator::identity(1);
        for &p in &self.letters {
            op = op.kron(&p.to_operator());
        }
        if self.negative {
            op = op.scale(crate::statevec::C64::new(-1.0, 0.0));
        }
        op
    }

    /// Conjugates every letter by the per-qubit word, folding the resulting
    /// signs into the string sign.
    pub fn conjugate_by(&self, words: &[LocalWord]) -> Result<SignedPauli> {
        if words.len() != self.letters.len() {
            return Err(Error::DimensionMismatch {
                expected: self.letters.len(),
                got: words.len(),
            });
        }
        let mut negative = self.negative;
        let mut letters = Vec::with_capacity(self.letters.len());
        for (&p, word) in self.letters.iter().zip(words) {
            let (neg, q) = word.conjugate(p);
            negative ^= neg;
            letters.push(q);
        }
        Ok(SignedPauli { negative, letters })
    }
}

impl fmt::Display for SignedPauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.negative { '-' } else { '+' })?;
        for p in &self.letters {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

/// One factor of a local basis-change unitary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalFactor {
    H,
    X,
    Z,
}

/// Symbolic operator product of {H, σ_x, σ_z} factors, leftmost applied
/// last (ordinary operator-product order). The empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalWord(pub Vec<LocalFactor>);

impl LocalWord {
    pub fn identity() -> Self {
        LocalWord(Vec::new())
    }

    pub fn factors(&self) -> &[LocalFactor] {
        &self.0
    }

    /// Dense 2×2 matrix of the word.
    pub fn to_operator(&self) -> Operator {
        let mut op = Operator::identity(2);
        for f in &self.0 {
            let m = match f {
                LocalFactor::H => gates::hadamard(),
                LocalFactor::X => gates::pauli_x(),
                LocalFactor::Z => gates::pauli_z(),
            };
            op = op.mul(&m).unwrap();
        }
        op
    }

    /// U P U† for a single Pauli letter; returns (sign-flips, new letter).
    pub fn conjugate(&self, p: Pauli) -> (bool, Pauli) {
        let mut neg = false;
        let mut cur = p;
        // Innermost factor conjugates first.
        for f in self.0.iter().rev() {
            let (n, q) = conjugate_once(*f, cur);
            neg ^= n;
            cur = q;
        }
        (neg, cur)
    }

    /// Whether conjugation by this word exchanges X and Z (odd H count).
    pub fn swaps_xz(&self) -> bool {
        self.0
            .iter()
            .filter(|f| matches!(f, LocalFactor::H))
            .count()
            % 2
            == 1
    }
}

fn conjugate_once(f: LocalFactor, p: Pauli) -> (bool, Pauli) {
    use LocalFactor as F;
    use Pauli::*;
    match (f, p) {
        (_, I) => (false, I),
        (F::H, X) => (false, Z),
        (F::H, Z) => (false, X),
        (F::H, Y) => (true, Y),
        (F::X, X) => (false, X),
        (F::X, Y) => (true, Y),
        (F::X, Z) => (true, Z),
        (F::Z, X) => (true, X),
        (F::Z, Y) => (true, Y),
        (F::Z, Z) => (false, Z),
    }
}

impl fmt::Display for LocalWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for factor in &self.0 {
            let c = match factor {
                LocalFactor::H => 'H',
                LocalFactor::X => 'X',
                LocalFactor::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
