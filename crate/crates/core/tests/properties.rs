use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qatpg_core::atpg::{build_fault_table, candidate_tests, generate_complete_set, distinguishes, DEFAULT_TAU};
use qatpg_core::circuit::{
    decompose_kcn, enumerate_error_locations, kcn_permutation, parse_circuit, unitary_of, Circuit, Gate, GateKind,
    LocationPosition,
};
use qatpg_core::faults::{
    apply_fault, enumerate_faults, kraus_completeness_deviation, EnumParams, Fault, FaultClass, FaultedModel,
    Insertion, Logic, MissingPart,
};
use qatpg_core::metrics::{
    fidelity, pauli_expectations, random_density, random_pure_state, state_tomography, trace_distance, ProcessMap,
};
use qatpg_core::qmath::{
    self, kron, kron_all, partial_trace, pauli, rotation, Axis, ComplexMatrix, PauliKind, C64,
};
use qatpg_core::simulator::{evolve_density, majority_vote, run_exact, run_shots, Basis, Bits, Test};

fn random_gate(rng: &mut ChaCha8Rng, width: usize, classical: bool) -> Gate {
    let mut wires: Vec<usize> = (0..width).collect();
    for i in (1..wires.len()).rev() {
        wires.swap(i, rng.random_range(0..=i));
    }
    let target = wires[0];
    let k = rng.random_range(0..width);
    let controls = wires[1..=k].to_vec();
    if classical {
        let kind = if controls.is_empty() { GateKind::X } else { GateKind::Not };
        return Gate::new(kind, controls, target);
    }
    let angle = rng.random_range(-3.0..3.0);
    let kind = match rng.random_range(0..10) {
        0 if k > 0 => GateKind::Not,
        0 | 1 => GateKind::H,
        2 => GateKind::Y,
        3 => GateKind::Z,
        4 => GateKind::V,
        5 => GateKind::Vdag,
        6 => GateKind::Root(2),
        7 => GateKind::Rx(angle),
        8 => GateKind::Ry(angle),
        _ => GateKind::Phase(angle),
    };
    Gate::new(kind, controls, target)
}

fn random_circuit(seed: u64, width: usize, len: usize, classical: bool) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gates = (0..len).map(|_| random_gate(&mut rng, width, classical)).collect();
    Circuit::from_gates(width, gates).unwrap()
}

fn hadamard_layer(n: usize) -> ComplexMatrix {
    kron_all(&vec![qmath::hadamard(); n])
}

fn embed(m: &ComplexMatrix, wire: usize, n: usize) -> ComplexMatrix {
    let factors: Vec<ComplexMatrix> = (0..n)
        .map(|w| if w == wire { m.clone() } else { ComplexMatrix::identity(2) })
        .collect();
    kron_all(&factors)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_is_associative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [a, b, c] = [0, 1, 2].map(|_| random_density(1, 2, &mut rng));
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.approx_eq(&right, 1e-12));
    }

    #[test]
    fn rotations_invert(theta in -10.0f64..10.0, axis in 0usize..3) {
        let axis = Axis::ALL[axis];
        let prod = rotation(axis, theta).matmul(&rotation(axis, -theta)).unwrap();
        prop_assert!(prod.approx_eq(&ComplexMatrix::identity(2), 1e-12));
        prop_assert!(rotation(axis, theta).is_unitary(1e-12));
    }

    #[test]
    fn partial_trace_keeps_trace(seed in any::<u64>(), traced in 0usize..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(2, 3, &mut rng);
        let reduced = partial_trace(&rho, &[2, 2], traced).unwrap();
        prop_assert!((reduced.trace() - rho.trace()).norm() < 1e-12);
    }

    #[test]
    fn circuits_are_unitary_and_round_trip(seed in any::<u64>(), width in 1usize..5, len in 0usize..8) {
        let c = random_circuit(seed, width, len, false);
        prop_assert!(unitary_of(&c).unwrap().is_unitary(1e-12));
        let back = parse_circuit(&c.serialize()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(parse_circuit(&back.serialize()).unwrap(), back);
    }

    #[test]
    fn exact_run_matches_unitary_oracle(seed in any::<u64>(), width in 1usize..5, len in 0usize..6, prep in any::<usize>(), x in any::<bool>()) {
        let c = random_circuit(seed, width, len, false);
        let mut u = unitary_of(&c).unwrap();
        let basis = if x { Basis::X } else { Basis::Z };
        if x {
            let h = hadamard_layer(width);
            u = h.matmul(&u).unwrap().matmul(&h).unwrap();
        }
        let prep = Bits::new(width, prep % (1 << width));
        let d = run_exact(&FaultedModel::gold(&c), &Test::new(prep, basis, basis)).unwrap();
        for out in 0..1usize << width {
            prop_assert!((d.probs()[out] - u[(out, prep.value())].norm_sqr()).abs() < 1e-9);
        }
    }

    #[test]
    fn fault_text_round_trips_and_channels_are_complete(seed in any::<u64>(), width in 2usize..4, len in 1usize..5) {
        let c = random_circuit(seed, width, len, false);
        let params = EnumParams { pauli_p: 0.3, init_gamma: 0.6, ..EnumParams::default() };
        for f in enumerate_faults(&c, &FaultClass::ALL, &params).faults {
            let text = f.to_string();
            prop_assert_eq!(Fault::parse(&text, &c).unwrap().to_string(), text);
            let m = apply_fault(&c, &f).unwrap();
            for ins in m.insertions() {
                if let Insertion::Channel { kraus, .. } = ins {
                    prop_assert!(kraus_completeness_deviation(kraus) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unitary_pauli_fault_is_a_conjugation(seed in any::<u64>(), width in 1usize..4, len in 1usize..5, pick in any::<usize>(), kind in 1usize..4) {
        let c = random_circuit(seed, width, len, false);
        let locs = enumerate_error_locations(&c);
        let loc = locs[pick % locs.len()];
        let kind = PauliKind::ALL[kind];
        let split = match loc.position {
            LocationPosition::BeforeGate(s) => s,
            LocationPosition::AfterGate(s) => s + 1,
            LocationPosition::Output => c.len(),
        };
        let prefix = unitary_of(&Circuit::from_gates(width, c.gates()[..split].to_vec()).unwrap()).unwrap();
        let suffix = unitary_of(&Circuit::from_gates(width, c.gates()[split..].to_vec()).unwrap()).unwrap();
        let want = suffix.matmul(&embed(&pauli(kind), loc.wire, width)).unwrap().matmul(&prefix).unwrap();
        let m = apply_fault(&c, &Fault::Pauli { kind, location: loc, p: 1.0 }).unwrap();
        let got = ProcessMap::from_model(&m).unwrap();
        prop_assert!(got.superoperator().approx_eq(ProcessMap::from_unitary(&want).unwrap().superoperator(), 1e-10));
    }

    #[test]
    fn bit_flips_in_classical_networks_are_always_detected(seed in any::<u64>(), width in 1usize..5, len in 0usize..6, y in any::<bool>()) {
        let c = random_circuit(seed, width, len, true);
        let kinds = vec![if y { PauliKind::Y } else { PauliKind::X }];
        let fs = enumerate_faults(&c, &[FaultClass::Pauli], &EnumParams { pauli_kinds: kinds, ..EnumParams::default() });
        let tests: Vec<Test> = Bits::all(width).map(|b| Test::new(b, Basis::Z, Basis::Z)).collect();
        let ft = build_fault_table(&c, &fs, &tests, DEFAULT_TAU).unwrap();
        prop_assert!(ft.detects.iter().all(|row| row.iter().all(|&d| d)));
    }

    #[test]
    fn distances_are_bounded_and_symmetric(seed in any::<u64>(), n in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_density(n, rng.random_range(1..=1 << n), &mut rng);
        let s = random_density(n, rng.random_range(1..=1 << n), &mut rng);
        let f = fidelity(&r, &s).unwrap();
        let d = trace_distance(&r, &s).unwrap();
        prop_assert!((0.0..=1.0).contains(&f) && (0.0..=1.0).contains(&d));
        prop_assert!((d - trace_distance(&s, &r).unwrap()).abs() < 1e-9);
        prop_assert!((f - fidelity(&s, &r).unwrap()).abs() < 1e-9);
        prop_assert!(trace_distance(&r, &r).unwrap() < 1e-9);
    }

    #[test]
    fn pure_states_satisfy_fuchs_van_de_graaf_equality(seed in any::<u64>(), n in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_pure_state(n, &mut rng).density();
        let b = random_pure_state(n, &mut rng).density();
        let f = fidelity(&a, &b).unwrap();
        let d = trace_distance(&a, &b).unwrap();
        prop_assert!((d - (1.0 - f).max(0.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn tomography_inverts_expectations(seed in any::<u64>(), n in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(n, rng.random_range(1..=1 << n), &mut rng);
        let back = state_tomography(&pauli_expectations(&rho).unwrap(), n).unwrap();
        prop_assert!(trace_distance(&rho, &back).unwrap() < 1e-9);
    }

    #[test]
    fn channels_contract_trace_distance(seed in any::<u64>(), gamma in 0.0f64..1.0, p in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = parse_circuit("qubits 2\ng h t=0\ncn c=0 t=1").unwrap();
        let loc = enumerate_error_locations(&c)[rng.random_range(0..5)];
        for f in [
            Fault::InitStuck { qubit: rng.random_range(0..2), stuck_to: Logic::One, gamma },
            Fault::Pauli { kind: PauliKind::Y, location: loc, p },
        ] {
            let m = apply_fault(&c, &f).unwrap();
            let r = random_density(2, 2, &mut rng);
            let s = random_density(2, 3, &mut rng);
            let after = trace_distance(&evolve_density(&m, &r).unwrap(), &evolve_density(&m, &s).unwrap()).unwrap();
            prop_assert!(after <= trace_distance(&r, &s).unwrap() + 1e-9);
        }
    }

    #[test]
    fn damping_matches_closed_form(ar in -1.0f64..1.0, ai in -1.0f64..1.0, br in -1.0f64..1.0, bi in -1.0f64..1.0, gamma in 0.0f64..=1.0) {
        let norm = (ar * ar + ai * ai + br * br + bi * bi).sqrt();
        prop_assume!(norm > 1e-3);
        let (a, b) = (C64::new(ar, ai) / norm, C64::new(br, bi) / norm);
        let rho = ComplexMatrix::outer(&[a, b], &[a, b]);
        let m = apply_fault(&Circuit::new(1), &Fault::InitStuck { qubit: 0, stuck_to: Logic::Zero, gamma }).unwrap();
        let out = evolve_density(&m, &rho).unwrap();
        let s = (1.0 - gamma).sqrt();
        let want = ComplexMatrix::from_rows(&[
            &[C64::new(a.norm_sqr() + gamma * b.norm_sqr(), 0.0), a * b.conj() * s],
            &[b * a.conj() * s, C64::new(b.norm_sqr() * (1.0 - gamma), 0.0)],
        ]);
        prop_assert!(out.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn shots_are_reproducible_and_complete(seed in any::<u64>(), shots in 1u64..9000) {
        let c = parse_circuit("qubits 3\ncn c=0,1 t=2").unwrap();
        let m = FaultedModel::gold(&c);
        let t = Test::x("001");
        let a = run_shots(&m, &t, shots, seed).unwrap();
        prop_assert_eq!(&a, &run_shots(&m, &t, shots, seed).unwrap());
        prop_assert_eq!(a.values().sum::<u64>(), shots);
        let det = run_shots(&m, &Test::z("110"), shots, seed).unwrap();
        prop_assert_eq!(majority_vote(&det).unwrap().to_string(), "111");
    }
}

#[test]
fn decompositions_match_permutations() {
    for k in 1..=3 {
        let u = unitary_of(&decompose_kcn(k).unwrap()).unwrap();
        assert!(u.approx_eq_up_to_phase(&kcn_permutation(k), 1e-12), "k={k}");
    }
}

#[test]
fn whole_gate_loss_on_single_gate_is_identity() {
    for text in ["qubits 3\ncn c=0,1 t=2", "qubits 2\ncn c=0 t=1", "qubits 2\ng v c=0 t=1"] {
        let c = parse_circuit(text).unwrap();
        let m = apply_fault(&c, &Fault::LostPhase { stage: 0, missing: MissingPart::WholeGate }).unwrap();
        let p = ProcessMap::from_model(&m).unwrap();
        assert!(p.superoperator().approx_eq(&ProcessMap::identity(c.width()).superoperator().clone(), 1e-12));
    }
}

#[test]
fn generated_sets_are_sound() {
    let circuits = [
        "qubits 3\ncn c=0,1 t=2",
        "qubits 3\ncn c=0 t=1\ncn c=0,1 t=2",
        "qubits 2\ng h t=0\ncn c=0 t=1",
    ];
    for text in circuits {
        let c = parse_circuit(text).unwrap();
        let fs = enumerate_faults(&c, &FaultClass::ALL, &EnumParams::default());
        let report = generate_complete_set(&c, &fs, DEFAULT_TAU).unwrap();
        for f in &fs.faults {
            let covered = report.covered.contains(&f.to_string());
            let detected = report.chosen.iter().any(|t| distinguishes(&c, f, t, DEFAULT_TAU).unwrap());
            assert_eq!(covered, detected, "{text}: {f}");
        }
        // greedy finds a cover whenever the vocabulary has one
        let ft = build_fault_table(&c, &fs, &candidate_tests(c.width()), DEFAULT_TAU).unwrap();
        assert_eq!(report.uncovered.len(), ft.uncoverable().len(), "{text}");
        let again = generate_complete_set(&c, &fs, DEFAULT_TAU).unwrap();
        assert_eq!(report.to_json(), again.to_json());
    }
}
