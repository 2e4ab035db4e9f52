use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use qfp_core::defense::{defend, gen_key, inv_layer, obf_layer};
use qfp_core::encoding::{amplitude_encode, haar_random_state};
use qfp_core::fingerprint::{extract, num_features};
use qfp_core::pqc::{augment, build_pqc, Entanglement, PqcConfig, ROTATIONS, START_GATES};
use qfp_core::seed::rng_from_seed;
use qfp_core::serialize::{emit_json, emit_qasm, parse_json, parse_qasm};
use qfp_core::statevector::{fidelity, min_fidelity, run, EquivalenceOptions, StateVector};
use qfp_core::transpile::{transpile, CouplingMap};
use qfp_core::{Circuit, EncodingClass, GateKind, Instruction};
use rand::seq::SliceRandom;
use rand::Rng;

fn random_circuit(n: usize, len: usize, seed: u64, barriers: bool) -> Circuit {
    let mut rng = rng_from_seed(seed);
    let mut c = Circuit::new(n);
    let kinds: Vec<GateKind> = GateKind::ALL
        .iter()
        .copied()
        .filter(|k| k.arity().is_some_and(|a| a <= n))
        .collect();
    for _ in 0..len {
        if barriers && rng.gen_bool(0.05) {
            c.barrier_all();
            continue;
        }
        let kind = *kinds.choose(&mut rng).unwrap();
        let mut qs: Vec<usize> = (0..n).collect();
        qs.shuffle(&mut rng);
        qs.truncate(kind.arity().unwrap());
        let params = (0..kind.num_params())
            .map(|_| rng.gen_range(-10.0..10.0))
            .collect();
        c.push(Instruction::new(kind, qs, params)).unwrap();
    }
    c
}

fn opts(seed: u64) -> EquivalenceOptions {
    EquivalenceOptions {
        trials: 3,
        seed,
        ..EquivalenceOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(n in 1usize..7, len in 0usize..60, seed in any::<u64>(), labelled in any::<bool>()) {
        let mut c = random_circuit(n, len, seed, true);
        if labelled {
            c.label = Some(EncodingClass::ALL[(seed % 5) as usize]);
            c.meta.insert("seed".into(), seed.to_string());
        }
        let text = emit_json(&c);
        let back = parse_json(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(emit_json(&back), text);
        prop_assert_eq!(back.gate_counts(), c.gate_counts());
    }

    #[test]
    fn qasm_round_trip_is_bitwise(n in 1usize..7, len in 0usize..100, seed in any::<u64>()) {
        let c = random_circuit(n, len, seed, true);
        let back = parse_qasm(&emit_qasm(&c)).unwrap();
        prop_assert_eq!(back.instructions(), c.instructions());
    }

    #[test]
    fn depth_bounds_and_barrier_invariance(n in 1usize..6, len in 0usize..40, seed in any::<u64>()) {
        let c = random_circuit(n, len, seed, true);
        prop_assert!(c.depth() <= c.gate_counts().total_gates());
        let mut fenced = c.clone();
        fenced.barrier_all();
        prop_assert_eq!(fenced.depth(), c.depth());
    }

    #[test]
    fn simulation_preserves_norm(n in 1usize..7, len in 0usize..200, seed in any::<u64>()) {
        let c = random_circuit(n, len, seed, true);
        let s = StateVector::haar_random(n, &mut rng_from_seed(seed ^ 1));
        let out = run(&c, Some(&s)).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transpile_contract(n in 1usize..7, len in 1usize..40, seed in any::<u64>(), linear in any::<bool>()) {
        let c = random_circuit(n, len, seed, true);
        let map = if linear { CouplingMap::linear(n) } else { CouplingMap::all_to_all(n) };
        let t = transpile(&c, &map).unwrap();
        for inst in t.circuit.instructions() {
            prop_assert!(inst.kind.is_basis(), "{:?}", inst.kind);
            if inst.kind == GateKind::CX {
                prop_assert!(map.contains(inst.qubits[0], inst.qubits[1]));
            }
        }
        let mut sorted = t.final_layout.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        let f = min_fidelity(&c, &t.circuit, &opts(seed).with_permutation(t.final_layout.clone())).unwrap();
        prop_assert!(f >= 1.0 - 1e-9, "fidelity {}", f);
        prop_assert_eq!(transpile(&c, &map).unwrap(), t);
    }

    #[test]
    fn amplitude_prep_fidelity(n in 1usize..9, seed in any::<u64>()) {
        let v = haar_random_state(n, seed);
        let c = amplitude_encode(&v).unwrap();
        for inst in c.instructions() {
            prop_assert!(matches!(inst.kind, GateKind::RY | GateKind::RZ | GateKind::CX | GateKind::X));
        }
        let f = fidelity(&run(&c, None).unwrap(), &v.to_state()).unwrap();
        prop_assert!(f >= 1.0 - 1e-9, "fidelity {}", f);
    }

    #[test]
    fn obfuscation_round_trip(n in 1usize..9, seed in any::<u64>()) {
        let key = gen_key(n, seed);
        prop_assert!(key.thetas.iter().all(|t| (-PI..=PI).contains(t)));
        let mut c = obf_layer(&key);
        c.extend_from(&inv_layer(&key)).unwrap();
        let s = StateVector::haar_random(n, &mut rng_from_seed(seed));
        prop_assert!(fidelity(&run(&c, Some(&s)).unwrap(), &s).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn pqc_structure(n in 2usize..7, layers in 1usize..6, seed in any::<u64>()) {
        let cfg = PqcConfig::sample(seed, layers..=layers);
        prop_assert!(START_GATES.contains(&cfg.start_gate));
        prop_assert!(cfg.rotation_pool.iter().all(|g| ROTATIONS.contains(g)));
        let c = build_pqc(&cfg, n).unwrap();
        prop_assert_eq!(&c, &build_pqc(&cfg, n).unwrap());
        let pairs = cfg.entanglement.pairs(n);
        let cx: Vec<(usize, usize)> = c.instructions()[1..]
            .iter()
            .filter(|i| i.kind == GateKind::CX)
            .map(|i| (i.qubits[0], i.qubits[1]))
            .collect();
        let expected: Vec<(usize, usize)> = (0..layers).flat_map(|_| pairs.iter().copied()).collect();
        prop_assert_eq!(cx, expected);
        for inst in c.instructions() {
            for &p in &inst.params {
                prop_assert!((0.0..TAU).contains(&p));
            }
        }
    }

    #[test]
    fn fingerprint_ranges(n in 1usize..6, len in 0usize..60, seed in any::<u64>()) {
        let c = random_circuit(n, len, seed, true);
        let t = transpile(&c, &CouplingMap::linear(n)).unwrap();
        let f = extract(&t.circuit).unwrap();
        prop_assert_eq!(f.len(), num_features(n));
        prop_assert!(f.values.iter().all(|v| v.is_finite()));
        for (name, v) in f.names.iter().zip(&f.values) {
            let unit = name.starts_with("ratio_") || name.starts_with("frac_") || name.ends_with("_entropy")
                || name.ends_with("_norm") || name.ends_with("_rate") || name == "rz_distinct_ratio"
                || name == "distinct_cx_pair_frac" || name == "max_qubit_cx_share" || name == "first_cx_layer_frac";
            if unit {
                prop_assert!((0.0..=1.0 + 1e-12).contains(v), "{} = {}", name, v);
            }
        }
        let ac = f.get("rot_lag1_autocorr").unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ac));
        prop_assert_eq!(extract(&t.circuit).unwrap(), f);
    }

    #[test]
    fn defense_preserves_semantics(n in 2usize..6, seed in any::<u64>(), layers in 1usize..6) {
        let class = EncodingClass::ALL[(seed % 5) as usize];
        let enc = qfp_core::encoding::sample_encoding(class, n, seed, Default::default()).unwrap();
        let pqc = build_pqc(&PqcConfig::sample(seed ^ 7, layers..=layers), n).unwrap();
        let key = gen_key(n, seed ^ 11);
        let defended = defend(&enc, &pqc, &key).unwrap();
        prop_assert_eq!(defended.gate_counts().get(GateKind::BARRIER), 3);
        prop_assert_eq!(defended.label, Some(class));
        let plain = augment(&enc, &pqc).unwrap();
        let map = CouplingMap::linear(n);
        let t = transpile(&defended, &map).unwrap();
        prop_assert_eq!(t.circuit.gate_counts().get(GateKind::BARRIER), 0);
        let f = min_fidelity(&plain, &t.circuit, &opts(seed).with_permutation(t.final_layout.clone())).unwrap();
        prop_assert!(f >= 1.0 - 1e-9, "fidelity {}", f);
        prop_assert!(t.circuit.depth() >= transpile(&plain, &map).unwrap().circuit.depth());
    }
}

#[test]
fn feature_length_law() {
    for n in 1..=100 {
        assert_eq!(num_features(n), 27 + 2 * n);
    }
    for (n, len) in [(1, 29), (3, 33), (14, 55), (100, 227)] {
        let mut c = Circuit::new(n);
        c.x(0);
        assert_eq!(extract(&c).unwrap().len(), len);
    }
}

#[test]
fn involutions() {
    let pairs: Vec<(Circuit, Circuit)> = {
        let mut v = Vec::new();
        let mut a = Circuit::new(2);
        a.x(0).x(0);
        v.push((a, Circuit::new(2)));
        let mut a = Circuit::new(2);
        a.sx(1).sx(1);
        let mut b = Circuit::new(2);
        b.x(1);
        v.push((a, b));
        let mut a = Circuit::new(2);
        a.cx(0, 1).cx(0, 1);
        v.push((a, Circuit::new(2)));
        let mut a = Circuit::new(2);
        a.rz(0, 0.83).rz(0, -0.83);
        v.push((a, Circuit::new(2)));
        v
    };
    for (a, b) in pairs {
        assert!(min_fidelity(&a, &b, &opts(3)).unwrap() >= 1.0 - 1e-12);
    }
}

#[test]
fn entanglement_patterns() {
    assert_eq!(Entanglement::Linear.pairs(4), vec![(0, 1), (1, 2), (2, 3)]);
    assert_eq!(
        Entanglement::Circular.pairs(3),
        vec![(0, 1), (1, 2), (2, 0)]
    );
    assert_eq!(Entanglement::Full.pairs(4).len(), 6);
}
