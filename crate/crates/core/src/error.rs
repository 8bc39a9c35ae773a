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

use thiserror::Error;

/// Library-wide error type.
///
/// The CLI maps these onto process exit codes: parameter/schema problems
/// exit 2, I/O problems exit 3, impossible forced branches exit 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },

    #[error("qubit count {n} outside supported range 1..={max}")]
    QubitCountOutOfRange { n: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not unitary within tolerance")]
    NonUnitary,

    #[error("matrix is not Hermitian within tolerance")]
    NonHermitian,

    #[error("matrix trace {trace} differs from 1 beyond tolerance")]
    BadTrace { trace: f64 },

    #[error("state vector is not normalizable (norm too small)")]
    ZeroNorm,

    #[error("requested branch has probability {prob:.3e} below threshold")]
    ImpossibleBranch { prob: f64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation not representable: {0}")]
    Unrepresentable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
