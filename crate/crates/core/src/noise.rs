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

//! Noise channels and density-matrix pattern execution, making sub-unity
//! fidelities derived, checkable quantities.
//!
//! The default model is white noise: p·|ψ⟩⟨ψ| + (1−p)·I/2ⁿ, one parameter
//! fitted to a measured state fidelity. A per-qubit depolarizing channel is
//! available on top. Neither claims to model a specific apparatus; noisy
//! table values are diagnostics, not asserted equalities.

use serde::{Deserialize, Serialize};

use crate::cluster::{build_cluster, GraphSpec, OrderingMap};
use crate::error::{Error, Result};
use crate::mbqc::{Pattern, PauliFrame};
use crate::protocols::{
    cnot_conditional_target, cnot_control_readout, cnot_output_frame, cnot_pattern, cnot_reference,
    cphase_conditional_target, cphase_pattern, cphase_reference, lab_frame, rotation_pattern,
    rotation_reference, CnotBranchRow, CnotConditionalRow, CnotJob, CnotReport, CphaseBranchRow,
    CphaseConditionalRow, CphaseJob, CphaseReport, RotationBranchRow, RotationJob, RotationReport,
    CNOT_ORDERING, CPHASE_ORDERING,
};
use crate::statevec::{fidelity_dm, gates, partial_trace, DensityMatrix, Ket, PROB_FLOOR};

/// Noise configuration: white-noise weight plus optional per-qubit
/// depolarizing strengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Weight of the pure state against the maximally mixed state.
    pub white_p: f64,
    /// Per-qubit depolarizing λ, indexed by qubit 1..=n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depolarizing: Option<Vec<f64>>,
}

impl NoiseSpec {
    pub fn ideal() -> Self {
        NoiseSpec {
            white_p: 1.0,
            depolarizing: None,
        }
    }

    pub fn white(p: f64) -> Self {
        NoiseSpec {
            white_p: p,
            depolarizing: None,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.white_p == 1.0
            && self
                .depolarizing
                .as_ref()
                .is_none_or(|l| l.iter().all(|&x| x == 0.0))
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.white_p) {
            return Err(Error::InvalidParameter(format!(
                "white_p {} outside [0, 1]",
                self.white_p
            )));
        }
        if let Some(lambdas) = &self.depolarizing {
            if lambdas.len() > n_qubits {
                return Err(Error::InvalidParameter(format!(
                    "{} depolarizing strengths for {} qubits",
                    lambdas.len(),
                    n_qubits
                )));
            }
            for &l in lambdas {
                if !(0.0..=1.0).contains(&l) {
                    return Err(Error::InvalidParameter(format!(
                        "depolarizing λ {l} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// p|ψ⟩⟨ψ| + (1−p)·I/2ⁿ.
pub fn apply_white_noise(state: &Ket, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "white-noise weight {p} outside [0, 1]"
        )));
    }
    DensityMatrix::from_ket(state).mix(&DensityMatrix::maximally_mixed(state.n_qubits())?, p)
}

/// Single-qubit depolarizing channel:
/// (1−λ)ρ + (λ/3)(XρX + YρY + ZρZ) on the indexed qubit.
pub fn depolarize(rho: &DensityMatrix, qubit: usize, lambda: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "depolarizing λ {lambda} outside [0, 1]"
        )));
    }
    let x = rho.map_1q(&gates::pauli_x(), qubit)?;
    let y = rho.map_1q(&gates::pauli_y(), qubit)?;
    let z = rho.map_1q(&gates::pauli_z(), qubit)?;
    let mut entries = Vec::with_capacity(rho.entries().len());
    let w = lambda / 3.0;
    for i in 0..rho.entries().len() {
        entries.push(
            rho.entries()[i] * (1.0 - lambda)
                + (x.entries()[i] + y.entries()[i] + z.entries()[i]) * w,
        );
    }
    DensityMatrix::new_unchecked(rho.n_qubits(), entries)
}

/// Applies a full noise specification to a pure state: white noise first,
/// then per-qubit depolarizing.
pub fn apply_noise(state: &Ket, spec: &NoiseSpec) -> Result<DensityMatrix> {
    spec.validate(state.n_qubits())?;
    let mut rho = apply_white_noise(state, spec.white_p)?;
    if let Some(lambdas) = &spec.depolarizing {
        for (idx, &lambda) in lambdas.iter().enumerate() {
            if lambda > 0.0 {
                rho = depolarize(&rho, idx + 1, lambda)?;
            }
        }
    }
    Ok(rho)
}

/// One enumerated branch of a density-matrix pattern run.
#[derive(Clone, Debug)]
pub struct DmBranchResult {
    pub outcomes: std::collections::BTreeMap<usize, u8>,
    pub probability: f64,
    /// Reduced state of the output qubits (ascending original order).
    pub output_rho: DensityMatrix,
    pub frame: PauliFrame,
}

/// Density-matrix analogue of pattern enumeration: per-branch projector
/// sequences with adaptive angles, reduced output matrices, and exact
/// conditional-product probabilities.
pub fn run_pattern_dm(rho: &DensityMatrix, pattern: &Pattern) -> Result<Vec<DmBranchResult>> {
    pattern.validate()?;
    if rho.n_qubits() != pattern.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: 1 << pattern.n_qubits(),
            got: rho.dim(),
        });
    }
    let mut results = Vec::new();
    let mut outcomes = std::collections::BTreeMap::new();
    dm_branch(rho, pattern, 0, 1.0, &mut outcomes, &mut results)?;
    Ok(results)
}

fn dm_branch(
    rho: &DensityMatrix,
    pattern: &Pattern,
    step_idx: usize,
    prob_so_far: f64,
    outcomes: &mut std::collections::BTreeMap<usize, u8>,
    results: &mut Vec<DmBranchResult>,
) -> Result<()> {
    if step_idx == pattern.steps.len() {
        let outputs = pattern.sorted_outputs();
        let output_rho = partial_trace(rho, &outputs)?;
        let mut frame = PauliFrame::identity(&outputs);
        for (&q, rule) in &pattern.byproduct_rules {
            let x: u8 = rule.x.iter().map(|m| outcomes[m]).fold(0, |a, s| a ^ s);
            let z: u8 = rule.z.iter().map(|m| outcomes[m]).fold(0, |a, s| a ^ s);
            frame.entries.insert(q, crate::mbqc::FrameBits { x, z });
        }
        results.push(DmBranchResult {
            outcomes: outcomes.clone(),
            probability: prob_so_far,
            output_rho: output_rho.clone(),
            frame,
        });
        return Ok(());
    }
    let step = &pattern.steps[step_idx];
    let parity: u8 = step
        .sign_deps
        .iter()
        .map(|q| outcomes.get(q).copied().unwrap_or(0))
        .fold(0, |acc, s| acc ^ (s & 1));
    let angle = if parity == 1 { -step.angle } else { step.angle };
    for s in [0u8, 1u8] {
        let basis = match step.plane {
            crate::mbqc::Plane::ZBasis => {
                if s == 0 {
                    Ket::ket0()
                } else {
                    Ket::ket1()
                }
            }
            crate::mbqc::Plane::Equatorial => Ket::equatorial(angle, s),
        };
        let projected = rho.map_1q(&gates::projector(&basis), step.qubit)?;
        let p = projected.trace().re;
        if p < PROB_FLOOR {
            continue;
        }
        let normalized = projected.scale(1.0 / p);
        outcomes.insert(step.qubit, s);
        dm_branch(
            &normalized,
            pattern,
            step_idx + 1,
            prob_so_far * p,
            outcomes,
            results,
        )?;
        outcomes.remove(&step.qubit);
    }
    Ok(())
}

/// Applies a Pauli frame to a density matrix (σ_x then σ_z per qubit).
pub fn apply_frame_dm(rho: &DensityMatrix, frame: &PauliFrame) -> Result<DensityMatrix> {
    if frame.entries.len() != rho.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: frame.entries.len(),
            got: rho.n_qubits(),
        });
    }
    let mut out = rho.clone();
    for (pos, bits) in frame.entries.values().enumerate() {
        let qubit = pos + 1;
        if bits.x & 1 == 1 {
            out = out.map_1q(&gates::pauli_x(), qubit)?;
        }
        if bits.z & 1 == 1 {
            out = out.map_1q(&gates::pauli_z(), qubit)?;
        }
    }
    Ok(out)
}

/// Runs the rotation protocol on a noisy cluster, scoring frame-corrected
/// and raw outputs against the clean closed-form reference.
pub fn run_rotation_dm(job: &RotationJob, noise: &NoiseSpec) -> Result<RotationReport> {
    let ordering = OrderingMap::named(job.ordering);
    let pattern = rotation_pattern(job)?;
    let cluster = build_cluster(&GraphSpec::chain(4))?;
    let rho = apply_noise(&cluster, noise)?;
    let mut branches = run_pattern_dm(&rho, &pattern)?;
    if let Some(bits) = &job.branch_filter {
        filter_branches(&mut branches, &pattern, bits)?;
    }
    let u_out = ordering.local_word(4).to_operator();
    let mut rows = Vec::with_capacity(branches.len());
    for branch in &branches {
        let s1 = branch.outcomes[&1];
        let s2 = branch.outcomes[&2];
        let s3 = branch.outcomes[&3];
        let lab_rho = branch.output_rho.map_1q(&u_out, 1)?;
        let corrected = apply_frame_dm(&lab_rho, &lab_frame(&branch.frame, &ordering))?;
        let clean = rotation_reference(job.alpha, job.beta, s1, 0, 0, job.ordering)?;
        let own = rotation_reference(job.alpha, job.beta, s1, s2, s3, job.ordering)?;
        rows.push(RotationBranchRow {
            s1,
            s2,
            s3,
            probability: branch.probability,
            ff_on_fidelity: fidelity_dm(&corrected, &clean)?,
            ff_off_fidelity: fidelity_dm(&lab_rho, &clean)?,
            closed_form_fidelity: fidelity_dm(&lab_rho, &own)?,
        });
    }
    Ok(RotationReport {
        alpha: job.alpha,
        beta: job.beta,
        ordering: job.ordering,
        ff_enabled: job.ff_enabled,
        rows,
    })
}

fn filter_branches(
    branches: &mut Vec<DmBranchResult>,
    pattern: &Pattern,
    bits: &[u8],
) -> Result<()> {
    if bits.len() != pattern.steps.len() {
        return Err(Error::InvalidParameter(format!(
            "force vector length {} does not match {} steps",
            bits.len(),
            pattern.steps.len()
        )));
    }
    branches.retain(|b| {
        pattern
            .steps
            .iter()
            .zip(bits)
            .all(|(step, &bit)| b.outcomes[&step.qubit] == bit & 1)
    });
    if branches.is_empty() {
        return Err(Error::ImpossibleBranch { prob: 0.0 });
    }
    Ok(())
}

/// Noisy C-NOT run: density-matrix branches scored against the same closed
/// forms as the pure path.
pub fn run_cnot_dm(job: &CnotJob, noise: &NoiseSpec) -> Result<CnotReport> {
    let ordering = OrderingMap::named(CNOT_ORDERING);
    let pattern = cnot_pattern(job)?;
    let cluster = build_cluster(&GraphSpec::chain(4))?;
    let rho_in = apply_noise(&cluster, noise)?;
    let mut branches = run_pattern_dm(&rho_in, &pattern)?;
    if let Some(bits) = &job.branch_filter {
        filter_branches(&mut branches, &pattern, bits)?;
    }
    let u2 = ordering.local_word(2).to_operator();
    let u3 = ordering.local_word(3).to_operator();
    let mut rows = Vec::with_capacity(branches.len());
    for branch in &branches {
        let s1 = branch.outcomes[&1];
        let s4 = branch.outcomes[&4];
        let mut lab_rho = branch.output_rho.map_1q(&u2, 1)?.map_1q(&u3, 2)?;
        if job.ht_compensated {
            lab_rho = lab_rho.map_1q(&gates::hadamard(), 2)?;
        }
        let frame = cnot_output_frame(&branch.frame, job.ht_compensated);
        let corrected = apply_frame_dm(&lab_rho, &frame)?;
        let own = cnot_reference(job.alpha, job.o_choice, s1, s4, job.ht_compensated)?;
        let clean = cnot_reference(job.alpha, job.o_choice, s1, 0, job.ht_compensated)?;
        let mut conditional = Vec::new();
        for readout in [0u8, 1u8] {
            let basis = if readout == 0 {
                Ket::ket0()
            } else {
                Ket::ket1()
            };
            let projected = lab_rho.map_1q(&gates::projector(&basis), 1)?;
            let p = projected.trace().re;
            if p < PROB_FLOOR {
                continue;
            }
            let target_rho = partial_trace(&projected.scale(1.0 / p), &[2])?;
            let Some(reference) =
                cnot_conditional_target(job.alpha, job.o_choice, s1, s4, readout)?
            else {
                continue;
            };
            conditional.push(CnotConditionalRow {
                readout,
                probability: p,
                fidelity: fidelity_dm(&target_rho, &reference)?,
            });
        }
        rows.push(CnotBranchRow {
            s1,
            s4,
            probability: branch.probability,
            closed_form_fidelity: fidelity_dm(&lab_rho, &own)?,
            corrected_fidelity: fidelity_dm(&corrected, &clean)?,
            control_readout: cnot_control_readout(job.o_choice, s1),
            conditional,
        });
    }
    Ok(CnotReport {
        alpha: job.alpha,
        o_choice: job.o_choice,
        ht_compensated: job.ht_compensated,
        rows,
    })
}

/// Noisy C-Phase run.
pub fn run_cphase_dm(job: &CphaseJob, noise: &NoiseSpec) -> Result<CphaseReport> {
    let ordering = OrderingMap::named(CPHASE_ORDERING);
    let pattern = cphase_pattern(job)?;
    let cluster = build_cluster(&GraphSpec::chain(4))?;
    let rho_in = apply_noise(&cluster, noise)?;
    let mut branches = run_pattern_dm(&rho_in, &pattern)?;
    if let Some(bits) = &job.branch_filter {
        filter_branches(&mut branches, &pattern, bits)?;
    }
    let u3 = ordering.local_word(3).to_operator();
    let u4 = ordering.local_word(4).to_operator();
    let clean = cphase_reference(job.alpha, job.beta, 0, 0)?;
    let mut rows = Vec::with_capacity(branches.len());
    for branch in &branches {
        let s1 = branch.outcomes[&1];
        let s2 = branch.outcomes[&2];
        let lab_rho = branch.output_rho.map_1q(&u3, 1)?.map_1q(&u4, 2)?;
        let corrected = apply_frame_dm(&lab_rho, &lab_frame(&branch.frame, &ordering))?;
        let own = cphase_reference(job.alpha, job.beta, s1, s2)?;
        let mut conditional = Vec::new();
        for control_plus in [true, false] {
            let basis = if control_plus {
                Ket::ket_plus()
            } else {
                Ket::ket_minus()
            };
            let projected = corrected.map_1q(&gates::projector(&basis), 2)?;
            let p = projected.trace().re;
            if p < PROB_FLOOR {
                continue;
            }
            let target_rho = partial_trace(&projected.scale(1.0 / p), &[1])?;
            let reference = cphase_conditional_target(job.alpha, job.beta, control_plus)?;
            conditional.push(CphaseConditionalRow {
                control_plus,
                probability: p,
                fidelity: fidelity_dm(&target_rho, &reference)?,
            });
        }
        rows.push(CphaseBranchRow {
            s1,
            s2,
            probability: branch.probability,
            closed_form_fidelity: fidelity_dm(&lab_rho, &own)?,
            corrected_fidelity: fidelity_dm(&corrected, &clean)?,
            conditional,
        });
    }
    Ok(CphaseReport {
        alpha: job.alpha,
        beta: job.beta,
        rows,
    })
}
