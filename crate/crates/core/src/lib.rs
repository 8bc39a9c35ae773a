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

//! Deterministic simulation and verification of one-way (measurement-based)
//! quantum computation on 4-qubit cluster states.
//!
//! The crate builds cluster states ([`cluster`]), runs adaptive measurement
//! patterns with byproduct tracking ([`mbqc`]), and packages the standard
//! gate protocols — single-qubit rotation, C-NOT for equatorial targets,
//! universal C-Phase — together with closed-form references
//! ([`protocols`]). A white-noise/depolarizing model and a density-matrix
//! execution path ([`noise`]) turn measured, sub-unity fidelities into
//! derived quantities, and a stabilizer-group average ([`cluster`]) gives
//! an independent route to state fidelity.
//!
//! ```
//! use oneway::cluster::{build_cluster, GraphSpec};
//! use oneway::mbqc::{run_pattern, RunMode};
//! use oneway::protocols::{rotation_pattern, RotationJob};
//! use oneway::cluster::OrderingName;
//!
//! let job = RotationJob {
//!     alpha: std::f64::consts::FRAC_PI_4,
//!     beta: 0.0,
//!     ordering: OrderingName::A,
//!     ff_enabled: true,
//!     branch_filter: None,
//! };
//! let state = build_cluster(&GraphSpec::chain(4)).unwrap();
//! let branches = run_pattern(&state, &rotation_pattern(&job).unwrap(), &RunMode::Enumerate).unwrap();
//! assert_eq!(branches.len(), 8);
//! ```
//!
//! Conventions: qubits are 1-based with qubit 1 as the most significant
//! bit of a basis-state index; equatorial bases are
//! |φ_±⟩ = (|0⟩ ± e^{−iφ}|1⟩)/√2 with outcome 0 for `+`; state equality
//! is up to a global phase.

pub mod cli;
pub mod cluster;
pub mod eig;
pub mod error;
pub mod mbqc;
pub mod noise;
pub mod pauli;
pub mod protocols;
pub mod report;
pub mod statevec;

pub use error::{Error, Result};
