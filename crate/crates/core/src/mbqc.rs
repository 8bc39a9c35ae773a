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

//! Adaptive measurement patterns on cluster states.
//!
//! A [`Pattern`] measures qubits in order, either in the computational
//! (Z) basis or in an equatorial basis |φ_±⟩ = (|0⟩ ± e^{−iφ}|1⟩)/√2,
//! with outcome s = 0 for `+` and s = 1 for `−`. Later angles may flip
//! sign with the parity of earlier outcomes (feed-forward of type i), and
//! byproduct rules give each output qubit's Pauli-frame exponents as
//! parities of recorded outcomes (feed-forward of type ii).

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{apply_1q_unchecked, contract_qubit, gates, project, Ket};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    Equatorial,
    ZBasis,
}

/// One measurement step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSpec {
    pub qubit: usize,
    pub plane: Plane,
    /// Base angle in radians; ignored for the Z basis.
    pub angle: f64,
    /// Earlier-measured qubits whose outcome parity flips the angle sign.
    #[serde(default)]
    pub sign_deps: BTreeSet<usize>,
    #[serde(default)]
    pub label: String,
}

impl MeasurementSpec {
    pub fn equatorial(qubit: usize, angle: f64, label: &str) -> Self {
        MeasurementSpec {
            qubit,
            plane: Plane::Equatorial,
            angle,
            sign_deps: BTreeSet::new(),
            label: label.to_string(),
        }
    }

    pub fn equatorial_adaptive(qubit: usize, angle: f64, deps: &[usize], label: &str) -> Self {
        MeasurementSpec {
            qubit,
            plane: Plane::Equatorial,
            angle,
            sign_deps: deps.iter().copied().collect(),
            label: label.to_string(),
        }
    }

    pub fn z_basis(qubit: usize, label: &str) -> Self {
        MeasurementSpec {
            qubit,
            plane: Plane::ZBasis,
            angle: 0.0,
            sign_deps: BTreeSet::new(),
            label: label.to_string(),
        }
    }

    /// Basis vector for outcome `s` at the runtime-effective angle.
    fn basis_vector(&self, effective_angle: f64, s: u8) -> Ket {
        match self.plane {
            Plane::ZBasis => {
                if s == 0 {
                    Ket::ket0()
                } else {
                    Ket::ket1()
                }
            }
            Plane::Equatorial => Ket::equatorial(effective_angle, s),
        }
    }
}

/// Parity sets giving one output qubit's σ_x and σ_z exponents.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ByproductRule {
    #[serde(default)]
    pub x: BTreeSet<usize>,
    #[serde(default)]
    pub z: BTreeSet<usize>,
}

impl ByproductRule {
    pub fn new(x: &[usize], z: &[usize]) -> Self {
        ByproductRule {
            x: x.iter().copied().collect(),
            z: z.iter().copied().collect(),
        }
    }
}

/// Ordered adaptive measurement program with byproduct rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub steps: Vec<MeasurementSpec>,
    pub outputs: BTreeSet<usize>,
    #[serde(default)]
    pub byproduct_rules: BTreeMap<usize, ByproductRule>,
}

impl Pattern {
    pub fn new(
        steps: Vec<MeasurementSpec>,
        outputs: &[usize],
        byproduct_rules: BTreeMap<usize, ByproductRule>,
    ) -> Result<Self> {
        let pattern = Pattern {
            steps,
            outputs: outputs.iter().copied().collect(),
            byproduct_rules,
        };
        pattern.validate()?;
        Ok(pattern)
    }

    /// Total qubit count: steps and outputs partition 1..=n.
    pub fn n_qubits(&self) -> usize {
        self.steps.len() + self.outputs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        let mut seen = BTreeSet::new();
        let mut measured_so_far: BTreeSet<usize> = BTreeSet::new();
        for step in &self.steps {
            if step.qubit == 0 || step.qubit > n {
                return Err(Error::InvalidPattern(format!(
                    "step qubit {} out of range 1..={n}",
                    step.qubit
                )));
            }
            if !seen.insert(step.qubit) {
                return Err(Error::InvalidPattern(format!(
                    "qubit {} measured twice",
                    step.qubit
                )));
            }
            if step.plane == Plane::ZBasis && !step.sign_deps.is_empty() {
                return Err(Error::InvalidPattern(format!(
                    "z-basis step on qubit {} cannot have sign dependencies",
                    step.qubit
                )));
            }
            for &dep in &step.sign_deps {
                if !measured_so_far.contains(&dep) {
                    return Err(Error::InvalidPattern(format!(
                        "step on qubit {} depends on qubit {dep} which is not measured earlier",
                        step.qubit
                    )));
                }
            }
            measured_so_far.insert(step.qubit);
        }
        for &q in &self.outputs {
            if q == 0 || q > n {
                return Err(Error::InvalidPattern(format!(
                    "output qubit {q} out of range 1..={n}"
                )));
            }
            if seen.contains(&q) {
                return Err(Error::InvalidPattern(format!(
                    "qubit {q} is both measured and an output"
                )));
            }
        }
        if seen.len() + self.outputs.len() != n {
            return Err(Error::InvalidPattern(
                "steps and outputs must partition the qubit set".into(),
            ));
        }
        for (&q, rule) in &self.byproduct_rules {
            if !self.outputs.contains(&q) {
                return Err(Error::InvalidPattern(format!(
                    "byproduct rule on non-output qubit {q}"
                )));
            }
            for &m in rule.x.iter().chain(rule.z.iter()) {
                if !seen.contains(&m) {
                    return Err(Error::InvalidPattern(format!(
                        "byproduct rule on qubit {q} references unmeasured qubit {m}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Copy with all type-i feed-forward removed (every sign_deps emptied).
    /// Breaks one-way determinism whenever the adaptive angle matters; used
    /// as the witness for the necessity of adaptive bases.
    pub fn without_sign_deps(&self) -> Pattern {
        let mut clone = self.clone();
        for step in &mut clone.steps {
            step.sign_deps.clear();
        }
        clone
    }

    /// Output qubits in ascending order.
    pub fn sorted_outputs(&self) -> Vec<usize> {
        self.outputs.iter().copied().collect()
    }

    fn effective_angle(&self, step: &MeasurementSpec, outcomes: &BTreeMap<usize, u8>) -> f64 {
        let parity: u8 = step
            .sign_deps
            .iter()
            .map(|q| outcomes.get(q).copied().unwrap_or(0))
            .fold(0, |acc, s| acc ^ (s & 1));
        if parity == 1 {
            -step.angle
        } else {
            step.angle
        }
    }
}

/// Per-output-qubit Pauli exponents.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameBits {
    pub x: u8,
    pub z: u8,
}

/// Pauli frame over the output qubits: the recorded byproduct
/// σ_x^x σ_z^z per qubit. Applying the frame to the raw output undoes the
/// byproduct up to a global sign.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliFrame {
    pub entries: BTreeMap<usize, FrameBits>,
}

impl PauliFrame {
    pub fn identity(outputs: &[usize]) -> Self {
        PauliFrame {
            entries: outputs.iter().map(|&q| (q, FrameBits::default())).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.entries.values().all(|b| b.x == 0 && b.z == 0)
    }
}

/// One measurement-outcome branch.
#[derive(Clone, Debug)]
pub struct BranchResult {
    /// Outcome bit per measured qubit.
    pub outcomes: BTreeMap<usize, u8>,
    /// Joint probability under enumerate/force; empirical shot frequency
    /// under sampling.
    pub probability: f64,
    /// State of the output qubits only (measured qubits projected out),
    /// ordered by ascending original qubit index.
    pub output_state: Ket,
    /// Byproduct frame from the pattern's rules and this branch's outcomes.
    pub frame: PauliFrame,
}

impl BranchResult {
    /// Outcome bits in step order, e.g. "010".
    pub fn outcome_bits(&self, pattern: &Pattern) -> String {
        pattern
            .steps
            .iter()
            .map(|s| char::from(b'0' + self.outcomes[&s.qubit]))
            .collect()
    }
}

/// Execution mode for [`run_pattern`].
#[derive(Clone, Debug)]
pub enum RunMode {
    /// All branches with probability above threshold, in lexicographic
    /// outcome order (first step most significant).
    Enumerate,
    /// Seeded multi-shot sampling; per-shot randomness comes from an
    /// independent counter-derived stream, so results do not depend on
    /// execution order. Reported probabilities are shot frequencies.
    Sample { seed: u64, shots: u64 },
    /// A single branch with the given outcome per step.
    Force(Vec<u8>),
}

/// Outcome selection for a single standalone measurement.
pub enum OutcomePolicy<'a> {
    Sample(&'a mut ChaCha8Rng),
    Force(u8),
}

/// Measures one qubit in the equatorial basis at `angle`. Returns the
/// outcome bit, its probability, and the collapsed state on all qubits
/// (the measured qubit left in the outcome basis vector).
pub fn measure_equatorial(
    state: &Ket,
    qubit: usize,
    angle: f64,
    policy: OutcomePolicy,
) -> Result<(u8, f64, Ket)> {
    let spec = MeasurementSpec::equatorial(qubit, angle, "");
    measure_step(state, &spec, angle, policy)
}

fn measure_step(
    state: &Ket,
    spec: &MeasurementSpec,
    effective_angle: f64,
    policy: OutcomePolicy,
) -> Result<(u8, f64, Ket)> {
    let project_onto = |s: u8| -> Result<(f64, Option<Ket>)> {
        let basis = spec.basis_vector(effective_angle, s);
        let res = project(state, spec.qubit, &basis)?;
        Ok((res.prob, res.collapsed))
    };
    match policy {
        OutcomePolicy::Force(s) => {
            let (prob, collapsed) = project_onto(s & 1)?;
            match collapsed {
                Some(ket) => Ok((s & 1, prob, ket)),
                None => Err(Error::ImpossibleBranch { prob }),
            }
        }
        OutcomePolicy::Sample(rng) => {
            let (p0, collapsed0) = project_onto(0)?;
            if rng.gen::<f64>() < p0 {
                match collapsed0 {
                    Some(ket) => Ok((0, p0, ket)),
                    None => Err(Error::ImpossibleBranch { prob: p0 }),
                }
            } else {
                let (p1, collapsed1) = project_onto(1)?;
                match collapsed1 {
                    Some(ket) => Ok((1, p1, ket)),
                    None => Err(Error::ImpossibleBranch { prob: p1 }),
                }
            }
        }
    }
}

/// Executes a pattern on a state.
///
/// Branch probabilities are exact products of conditional projection
/// probabilities. Output states have arity |outputs|: measured qubits are
/// contracted away after the final step.
pub fn run_pattern(state: &Ket, pattern: &Pattern, mode: &RunMode) -> Result<Vec<BranchResult>> {
    pattern.validate()?;
    if state.n_qubits() != pattern.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: 1 << pattern.n_qubits(),
            got: state.dim(),
        });
    }
    match mode {
        RunMode::Enumerate => {
            let mut results = Vec::new();
            enumerate_branches(
                state,
                pattern,
                0,
                1.0,
                &mut BTreeMap::new(),
                &mut Vec::new(),
                &mut results,
            )?;
            Ok(results)
        }
        RunMode::Force(bits) => {
            if bits.len() != pattern.steps.len() {
                return Err(Error::InvalidParameter(format!(
                    "force vector length {} does not match {} steps",
                    bits.len(),
                    pattern.steps.len()
                )));
            }
            let branch = force_branch(state, pattern, bits)?;
            Ok(vec![branch])
        }
        RunMode::Sample { seed, shots } => sample_branches(state, pattern, *seed, *shots),
    }
}

fn enumerate_branches(
    state: &Ket,
    pattern: &Pattern,
    step_idx: usize,
    prob_so_far: f64,
    outcomes: &mut BTreeMap<usize, u8>,
    angles: &mut Vec<f64>,
    results: &mut Vec<BranchResult>,
) -> Result<()> {
    if step_idx == pattern.steps.len() {
        results.push(finish_branch(
            state,
            pattern,
            prob_so_far,
            outcomes,
            angles,
        )?);
        return Ok(());
    }
    let step = &pattern.steps[step_idx];
    let angle = pattern.effective_angle(step, outcomes);
    for s in [0u8, 1u8] {
        let basis = step.basis_vector(angle, s);
        let res = project(state, step.qubit, &basis)?;
        let Some(collapsed) = res.collapsed else {
            continue; // zero-probability branch
        };
        outcomes.insert(step.qubit, s);
        angles.push(angle);
        enumerate_branches(
            &collapsed,
            pattern,
            step_idx + 1,
            prob_so_far * res.prob,
            outcomes,
            angles,
            results,
        )?;
        angles.pop();
        outcomes.remove(&step.qubit);
    }
    Ok(())
}

fn force_branch(state: &Ket, pattern: &Pattern, bits: &[u8]) -> Result<BranchResult> {
    let mut current = state.clone();
    let mut outcomes = BTreeMap::new();
    let mut angles = Vec::new();
    let mut prob = 1.0;
    for (step, &bit) in pattern.steps.iter().zip(bits) {
        let angle = pattern.effective_angle(step, &outcomes);
        let (_, p, collapsed) = measure_step(&current, step, angle, OutcomePolicy::Force(bit))?;
        prob *= p;
        current = collapsed;
        outcomes.insert(step.qubit, bit & 1);
        angles.push(angle);
    }
    finish_branch(&current, pattern, prob, &outcomes, &angles)
}

fn sample_branches(
    state: &Ket,
    pattern: &Pattern,
    seed: u64,
    shots: u64,
) -> Result<Vec<BranchResult>> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    let mut counts: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    for shot in 0..shots {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot);
        let mut current = state.clone();
        let mut outcomes = BTreeMap::new();
        let mut bits = Vec::with_capacity(pattern.steps.len());
        for step in &pattern.steps {
            let angle = pattern.effective_angle(step, &outcomes);
            let (s, _, collapsed) =
                measure_step(&current, step, angle, OutcomePolicy::Sample(&mut rng))?;
            current = collapsed;
            outcomes.insert(step.qubit, s);
            bits.push(s);
        }
        *counts.entry(bits).or_insert(0) += 1;
    }
    // BTreeMap iteration gives the canonical lexicographic branch order.
    counts
        .into_iter()
        .map(|(bits, count)| {
            let mut branch = force_branch(state, pattern, &bits)?;
            branch.probability = count as f64 / shots as f64;
            Ok(branch)
        })
        .collect()
}

fn finish_branch(
    state: &Ket,
    pattern: &Pattern,
    probability: f64,
    outcomes: &BTreeMap<usize, u8>,
    effective_angles: &[f64],
) -> Result<BranchResult> {
    // Contract measured qubits (descending index keeps lower indices valid).
    let mut measured: Vec<(usize, &MeasurementSpec, f64)> = pattern
        .steps
        .iter()
        .zip(effective_angles)
        .map(|(spec, &angle)| (spec.qubit, spec, angle))
        .collect();
    measured.sort_by_key(|m| std::cmp::Reverse(m.0));
    let mut current = state.clone();
    for (qubit, spec, angle) in measured {
        // Account for already-removed higher-indexed qubits: none are
        // higher since we go descending, so the 1-based index is intact.
        let basis = spec.basis_vector(angle, outcomes[&qubit]);
        let (_, rest) = contract_qubit(&current, qubit, &basis)?;
        current = rest;
    }
    let outputs = pattern.sorted_outputs();
    let mut frame = PauliFrame::identity(&outputs);
    for (&q, rule) in &pattern.byproduct_rules {
        let x: u8 = rule.x.iter().map(|m| outcomes[m]).fold(0, |a, s| a ^ s);
        let z: u8 = rule.z.iter().map(|m| outcomes[m]).fold(0, |a, s| a ^ s);
        frame.entries.insert(q, FrameBits { x, z });
    }
    Ok(BranchResult {
        outcomes: outcomes.clone(),
        probability,
        output_state: current,
        frame,
    })
}

/// Applies σ_x^x then σ_z^z per output qubit (so the net operator is
/// σ_z^z·σ_x^x). The state's qubits correspond to the frame's keys in
/// ascending order.
pub fn apply_frame(state: &Ket, frame: &PauliFrame) -> Result<Ket> {
    if frame.entries.len() != state.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: frame.entries.len(),
            got: state.n_qubits(),
        });
    }
    let mut out = state.clone();
    for (pos, bits) in frame.entries.values().enumerate() {
        let qubit = pos + 1;
        if bits.x & 1 == 1 {
            out = apply_1q_unchecked(&out, &gates::pauli_x(), qubit)?;
        }
        if bits.z & 1 == 1 {
            out = apply_1q_unchecked(&out, &gates::pauli_z(), qubit)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{build_cluster, GraphSpec};
    use crate::statevec::{overlap_fidelity, C64};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// The 4-qubit rotation program in the computational basis: qubit 1 in
    /// Z, qubit 2 at α, qubit 3 at β with the sign slaved to s₂, output on
    /// qubit 4 with byproduct σ_x^{s₃} σ_z^{s₂}.
    fn rotation_pattern(alpha: f64, beta: f64) -> Pattern {
        let mut rules = BTreeMap::new();
        rules.insert(4, ByproductRule::new(&[3], &[2]));
        Pattern::new(
            vec![
                MeasurementSpec::z_basis(1, "I"),
                MeasurementSpec::equatorial(2, alpha, "II"),
                MeasurementSpec::equatorial_adaptive(3, beta, &[2], "III"),
            ],
            &[4],
            rules,
        )
        .unwrap()
    }

    fn cluster4() -> Ket {
        build_cluster(&GraphSpec::chain(4)).unwrap()
    }

    /// Independent joint-probability oracle: contract the bra tensor
    /// product directly against the state amplitudes, no projection ops.
    fn branch_probability_oracle(state: &Ket, bases: &[Ket; 3]) -> f64 {
        let mut total = 0.0;
        for b4 in 0..2usize {
            let mut acc = c(0.0, 0.0);
            for idx in 0..16usize {
                if idx & 1 != b4 {
                    continue;
                }
                let bits = [(idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1];
                let mut coeff = c(1.0, 0.0);
                for (basis, &bit) in bases.iter().zip(&bits) {
                    coeff *= basis.amp(bit).conj();
                }
                acc += coeff * state.amp(idx);
            }
            total += acc.norm_sqr();
        }
        total
    }

    #[test]
    fn measure_plus_at_angle_zero_is_deterministic() {
        let (s, prob, _) =
            measure_equatorial(&Ket::ket_plus(), 1, 0.0, OutcomePolicy::Force(0)).unwrap();
        assert_eq!(s, 0);
        assert!((prob - 1.0).abs() < 1e-12);
        // The − outcome is impossible.
        assert!(matches!(
            measure_equatorial(&Ket::ket_plus(), 1, 0.0, OutcomePolicy::Force(1)),
            Err(Error::ImpossibleBranch { .. })
        ));
    }

    #[test]
    fn measure_zero_is_unbiased_at_any_angle() {
        for angle in [0.0, 0.7, std::f64::consts::FRAC_PI_2, 2.9] {
            for s in [0u8, 1u8] {
                let (_, prob, _) =
                    measure_equatorial(&Ket::ket0(), 1, angle, OutcomePolicy::Force(s)).unwrap();
                assert!((prob - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampled_measurement_follows_seeded_stream() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0u32; 2];
        for _ in 0..2000 {
            let (s, prob, collapsed) =
                measure_equatorial(&Ket::ket0(), 1, 0.9, OutcomePolicy::Sample(&mut rng)).unwrap();
            counts[s as usize] += 1;
            assert!((prob - 0.5).abs() < 1e-12);
            assert!((collapsed.norm_sqr() - 1.0).abs() < 1e-12);
        }
        // Unbiased within loose binomial bounds.
        assert!(counts[0] > 850 && counts[1] > 850, "{counts:?}");
        // Reseeding reproduces the exact sequence.
        let draw = |seed: u64| -> Vec<u8> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..32)
                .map(|_| {
                    measure_equatorial(&Ket::ket0(), 1, 0.9, OutcomePolicy::Sample(&mut rng))
                        .unwrap()
                        .0
                })
                .collect()
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn second_cluster_qubit_is_unbiased_after_first_measurement() {
        let alpha = 0.9;
        let state = cluster4();
        let res = project(&state, 1, &Ket::ket0()).unwrap();
        let collapsed = res.collapsed.unwrap();
        for s in [0u8, 1u8] {
            let (_, prob, _) =
                measure_equatorial(&collapsed, 2, alpha, OutcomePolicy::Force(s)).unwrap();
            assert!((prob - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_enumeration_gives_eight_uniform_branches() {
        let alpha = 0.37;
        let beta = 1.21;
        let pattern = rotation_pattern(alpha, beta);
        let branches = run_pattern(&cluster4(), &pattern, &RunMode::Enumerate).unwrap();
        assert_eq!(branches.len(), 8);
        let mut total = 0.0;
        for branch in &branches {
            assert!((branch.probability - 0.125).abs() < 1e-10);
            total += branch.probability;
            // Cross-check against the direct contraction oracle.
            let s1 = branch.outcomes[&1];
            let s2 = branch.outcomes[&2];
            let s3 = branch.outcomes[&3];
            let beta_eff = if s2 == 1 { -beta } else { beta };
            let bases = [
                if s1 == 0 { Ket::ket0() } else { Ket::ket1() },
                Ket::equatorial(alpha, s2),
                Ket::equatorial(beta_eff, s3),
            ];
            let oracle = branch_probability_oracle(&cluster4(), &bases);
            assert!((branch.probability - oracle).abs() < 1e-12);
        }
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn branch_order_is_lexicographic() {
        let pattern = rotation_pattern(0.2, 0.4);
        let branches = run_pattern(&cluster4(), &pattern, &RunMode::Enumerate).unwrap();
        let bits: Vec<String> = branches.iter().map(|b| b.outcome_bits(&pattern)).collect();
        let mut sorted = bits.clone();
        sorted.sort();
        assert_eq!(bits, sorted);
    }

    #[test]
    fn forced_zero_branch_at_zero_angles_outputs_plus() {
        let pattern = rotation_pattern(0.0, 0.0);
        let branches = run_pattern(&cluster4(), &pattern, &RunMode::Force(vec![0, 0, 0])).unwrap();
        assert_eq!(branches.len(), 1);
        let branch = &branches[0];
        assert!((branch.probability - 0.125).abs() < 1e-10);
        assert!(branch.frame.is_identity());
        let f = overlap_fidelity(&branch.output_state, &Ket::ket_plus()).unwrap();
        assert!((f - 1.0).abs() < 1e-10);
    }

    #[test]
    fn forcing_an_impossible_branch_errors() {
        // Measuring |+⟩⊗|+⟩ (no entangling edge) at angle 0 on qubit 1
        // can never give s = 1.
        let pattern = Pattern::new(
            vec![MeasurementSpec::equatorial(1, 0.0, "")],
            &[2],
            BTreeMap::new(),
        )
        .unwrap();
        let product = Ket::plus_all(2).unwrap();
        assert!(matches!(
            run_pattern(&product, &pattern, &RunMode::Force(vec![1])),
            Err(Error::ImpossibleBranch { .. })
        ));
        assert!(run_pattern(&product, &pattern, &RunMode::Force(vec![0, 0])).is_err());
    }

    #[test]
    fn corrected_branches_agree_within_input_sector() {
        // One-way determinism: applying the frame maps every branch onto
        // the all-zero branch of the same first-outcome sector.
        let pattern = rotation_pattern(1.1, -0.6);
        let branches = run_pattern(&cluster4(), &pattern, &RunMode::Enumerate).unwrap();
        for s1 in [0u8, 1u8] {
            let reference = branches
                .iter()
                .find(|b| b.outcomes[&1] == s1 && b.outcomes[&2] == 0 && b.outcomes[&3] == 0)
                .unwrap();
            for branch in branches.iter().filter(|b| b.outcomes[&1] == s1) {
                let corrected = apply_frame(&branch.output_state, &branch.frame).unwrap();
                let f = overlap_fidelity(&corrected, &reference.output_state).unwrap();
                assert!((f - 1.0).abs() < 1e-10, "branch {:?}", branch.outcomes);
            }
        }
    }

    #[test]
    fn disabling_sign_deps_breaks_determinism_for_nonzero_beta() {
        let pattern = rotation_pattern(0.4, std::f64::consts::FRAC_PI_2).without_sign_deps();
        let branches = run_pattern(&cluster4(), &pattern, &RunMode::Enumerate).unwrap();
        let reference = branches
            .iter()
            .find(|b| b.outcomes[&1] == 0 && b.outcomes[&2] == 0 && b.outcomes[&3] == 0)
            .unwrap();
        let mut worst: f64 = 1.0;
        for branch in branches.iter().filter(|b| b.outcomes[&1] == 0) {
            let corrected = apply_frame(&branch.output_state, &branch.frame).unwrap();
            let f = overlap_fidelity(&corrected, &reference.output_state).unwrap();
            worst = worst.min(f);
        }
        assert!(worst < 0.999, "worst corrected fidelity {worst}");
    }

    #[test]
    fn sampling_matches_enumeration_within_three_sigma() {
        let pattern = rotation_pattern(0.8, 0.3);
        let state = cluster4();
        let enumerated = run_pattern(&state, &pattern, &RunMode::Enumerate).unwrap();
        let shots = 20_000u64;
        let sampled = run_pattern(&state, &pattern, &RunMode::Sample { seed: 42, shots }).unwrap();
        assert_eq!(sampled.len(), enumerated.len());
        let mut freq_total = 0.0;
        for (s, e) in sampled.iter().zip(&enumerated) {
            assert_eq!(s.outcomes, e.outcomes);
            let p = e.probability;
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            assert!(
                (s.probability - p).abs() <= 3.0 * sigma,
                "branch {:?}: freq {} vs p {p}",
                s.outcomes,
                s.probability
            );
            freq_total += s.probability;
        }
        assert!((freq_total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible_from_seed() {
        let pattern = rotation_pattern(0.8, 0.3);
        let state = cluster4();
        let a = run_pattern(
            &state,
            &pattern,
            &RunMode::Sample {
                seed: 7,
                shots: 500,
            },
        )
        .unwrap();
        let b = run_pattern(
            &state,
            &pattern,
            &RunMode::Sample {
                seed: 7,
                shots: 500,
            },
        )
        .unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.outcomes, y.outcomes);
            assert_eq!(x.probability, y.probability);
        }
    }

    #[test]
    fn apply_frame_examples() {
        // Identity frame leaves the state alone.
        let st = Ket::equatorial(0.3, 0);
        let frame = PauliFrame::identity(&[4]);
        let out = apply_frame(&st, &frame).unwrap();
        for i in 0..2 {
            assert_eq!(out.amp(i), st.amp(i));
        }
        // x-frame on |−⟩ flips only the sign.
        let mut frame = PauliFrame::default();
        frame.entries.insert(1, FrameBits { x: 1, z: 0 });
        let out = apply_frame(&Ket::ket_minus(), &frame).unwrap();
        let f = overlap_fidelity(&out, &Ket::ket_minus()).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        assert!((out.amp(0) + Ket::ket_minus().amp(0)).norm() < 1e-12);
        // (x=1, z=1) on |0⟩ gives σ_z σ_x |0⟩ = −|1⟩ ≡ |1⟩ up to phase.
        let mut frame = PauliFrame::default();
        frame.entries.insert(1, FrameBits { x: 1, z: 1 });
        let out = apply_frame(&Ket::ket0(), &frame).unwrap();
        assert!((out.amp(1) - c(-1.0, 0.0)).norm() < 1e-12);
        let f = overlap_fidelity(&out, &Ket::ket1()).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        // Arity mismatch is an error.
        assert!(apply_frame(&Ket::plus_all(2).unwrap(), &frame).is_err());
    }

    #[test]
    fn pattern_json_shape() {
        let pattern = rotation_pattern(0.5, 0.25);
        let json = serde_json::to_string(&pattern).unwrap();
        let expected = r#"{"steps":[{"qubit":1,"plane":"z_basis","angle":0.0,"sign_deps":[],"label":"I"},{"qubit":2,"plane":"equatorial","angle":0.5,"sign_deps":[],"label":"II"},{"qubit":3,"plane":"equatorial","angle":0.25,"sign_deps":[2],"label":"III"}],"outputs":[4],"byproduct_rules":{"4":{"x":[3],"z":[2]}}}"#;
        assert_eq!(json, expected);
        let back: Pattern = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pattern);
    }

    #[test]
    fn pattern_validation_errors() {
        // Z-basis step with sign deps.
        let mut bad = rotation_pattern(0.0, 0.0);
        bad.steps[0].sign_deps.insert(2);
        assert!(bad.validate().is_err());
        // Dependency on a later-measured qubit.
        let mut bad = rotation_pattern(0.0, 0.0);
        bad.steps[1].sign_deps.insert(3);
        assert!(bad.validate().is_err());
        // Output and step overlap.
        let mut bad = rotation_pattern(0.0, 0.0);
        bad.outputs.insert(3);
        assert!(bad.validate().is_err());
        // Byproduct rule on a measured qubit.
        let mut bad = rotation_pattern(0.0, 0.0);
        let rule = bad.byproduct_rules.remove(&4).unwrap();
        bad.byproduct_rules.insert(3, rule);
        assert!(bad.validate().is_err());
    }
}
