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

//! Property tests over randomly generated states, angles, and patterns.

use std::collections::BTreeMap;

use proptest::prelude::*;

use oneway::cluster::{build_cluster, GraphSpec};
use oneway::mbqc::{run_pattern, ByproductRule, MeasurementSpec, Pattern, RunMode};
use oneway::statevec::{
    apply_1q, fidelity_dm, gates, overlap_fidelity, project, DensityMatrix, Ket, C64,
};

fn arb_ket(n: usize) -> impl Strategy<Value = Ket> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map(
        "norm too small",
        move |pairs| {
            let amps: Vec<C64> = pairs.iter().map(|&(re, im)| C64::new(re, im)).collect();
            Ket::from_unnormalized(n, amps).ok()
        },
    )
}

fn arb_angle() -> impl Strategy<Value = f64> {
    0.0..std::f64::consts::TAU
}

proptest! {
    #[test]
    fn random_unitaries_preserve_norm(
        state in arb_ket(3),
        a in arb_angle(),
        b in arb_angle(),
        g in arb_angle(),
        qubit in 1usize..=3,
    ) {
        let u = gates::rz(a).mul(&gates::rx(b)).unwrap().mul(&gates::rz(g)).unwrap();
        let out = apply_1q(&state, &u, qubit).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equatorial_projections_are_complete(
        state in arb_ket(3),
        angle in arb_angle(),
        qubit in 1usize..=3,
    ) {
        let p0 = project(&state, qubit, &Ket::equatorial(angle, 0)).unwrap().prob;
        let p1 = project(&state, qubit, &Ket::equatorial(angle, 1)).unwrap().prob;
        prop_assert!((p0 + p1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_state_fidelity_routes_agree(a in arb_ket(2), b in arb_ket(2)) {
        let via_dm = fidelity_dm(&DensityMatrix::from_ket(&a), &b).unwrap();
        let via_overlap = overlap_fidelity(&a, &b).unwrap();
        prop_assert!((via_dm - via_overlap).abs() < 1e-12);
    }

    #[test]
    fn cluster_construction_ignores_edge_order(seed in 0u64..1000) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut edges = vec![(1, 2), (2, 3), (3, 4), (1, 4), (2, 4)];
        let reference = build_cluster(&GraphSpec::new(4, edges.clone()).unwrap()).unwrap();
        edges.shuffle(&mut rng);
        let shuffled = build_cluster(&GraphSpec::new(4, edges).unwrap()).unwrap();
        for i in 0..16 {
            prop_assert!((reference.amp(i) - shuffled.amp(i)).norm() == 0.0);
        }
    }

    /// Any adaptive two-measurement pattern on the 4-chain enumerates to
    /// total probability 1 and every branch output stays normalized.
    #[test]
    fn random_patterns_enumerate_completely(
        angle1 in arb_angle(),
        angle2 in arb_angle(),
        adaptive in any::<bool>(),
        z_first in any::<bool>(),
    ) {
        let step1 = if z_first {
            MeasurementSpec::z_basis(1, "first")
        } else {
            MeasurementSpec::equatorial(1, angle1, "first")
        };
        let step2 = if adaptive && !z_first {
            MeasurementSpec::equatorial_adaptive(2, angle2, &[1], "second")
        } else {
            MeasurementSpec::equatorial(2, angle2, "second")
        };
        let mut rules = BTreeMap::new();
        rules.insert(3, ByproductRule::new(&[2], &[1]));
        let pattern = Pattern::new(vec![step1, step2], &[3, 4], rules).unwrap();
        let state = build_cluster(&GraphSpec::chain(4)).unwrap();
        let branches = run_pattern(&state, &pattern, &RunMode::Enumerate).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        for branch in &branches {
            prop_assert!((branch.output_state.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }
}
