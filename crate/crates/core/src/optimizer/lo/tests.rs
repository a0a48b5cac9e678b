use super::*;
use crate::choi::channels;
use crate::process::{process_from_channel, process_from_state, random_valid_process, tensor_processes};

fn cfg() -> OptimizerConfig {
    OptimizerConfig {
        restarts: 3,
        ..Default::default()
    }
}

fn q(l: &str, d: usize) -> SystemId {
    SystemId::sys(l, d)
}

fn channel_process(m: &QuantumMap) -> ProcessOperator {
    process_from_channel(m, "A", "B").unwrap()
}

fn argument(r: &OptimizationResult) -> &LoArgument {
    match &r.argument {
        Argument::LocalOperations(a) => a,
        _ => panic!("expected local operations"),
    }
}

#[test]
fn identity_channel_process_gives_one_bit() {
    let w = channel_process(&channels::identity(2, "a2", "b1").unwrap());
    let r = lo_optimized_ci_with(&w, "B", &LoFamily::states_only(), &cfg(), None).unwrap();
    assert!((r.value_bits - 1.0).abs() < 1e-6, "{}", r.value_bits);
    let again = evaluate_lo(&w, "B", argument(&r)).unwrap();
    assert!((again - r.value_bits).abs() < 1e-8);
}

#[test]
fn erasure_channel_process_matches_analytic_value() {
    let w = channel_process(&channels::erasure(0.25, 2, "a2", "b1").unwrap());
    let r = lo_optimized_ci_with(&w, "B", &LoFamily::states_only(), &cfg(), None).unwrap();
    // (1 − 2p) log₂ d
    assert!((r.value_bits - 0.5).abs() < 1e-4, "{}", r.value_bits);
}

#[test]
fn entangled_state_process_is_one_bit() {
    let phi = LabeledOperator::phi_plus(q("a1", 2), q("b1", 2)).unwrap();
    let w = process_from_state(&phi, &[("A", &["a1"]), ("B", &["b1"])]).unwrap();
    let r = lo_optimized_ci(&w, "B", &cfg()).unwrap();
    assert!((r.value_bits - 1.0).abs() < 1e-6);
}

#[test]
fn product_process_has_nothing_to_find() {
    let wa = random_valid_process(&[("A", 2, 2)], 3).unwrap();
    let wb = random_valid_process(&[("B", 2, 2)], 4).unwrap();
    let w = tensor_processes(&wa, &wb).unwrap();
    let r = lo_optimized_ci(&w, "B", &cfg()).unwrap();
    assert!(r.value_bits <= 1e-6, "{}", r.value_bits);
}

#[test]
fn channels_on_the_other_side_discard_noise() {
    // A holds half of φ₊ plus a maximally mixed qubit
    let rho = LabeledOperator::phi_plus(q("x", 2), q("b1", 2))
        .unwrap()
        .tensor(&LabeledOperator::maximally_mixed(vec![q("g", 2)]).unwrap())
        .unwrap();
    let w = process_from_state(&rho, &[("A", &["x", "g"][..]), ("B", &["b1"][..])]).unwrap();
    let bare = lo_optimized_ci_with(&w, "B", &LoFamily::states_only(), &cfg(), None).unwrap();
    assert!(bare.value_bits.abs() < 1e-9);
    let fam = LoFamily {
        kraus_rank: Some(2),
        ..Default::default()
    };
    let r = lo_optimized_ci_with(&w, "B", &fam, &cfg(), None).unwrap();
    assert!(r.value_bits > 0.99, "{}", r.value_bits);
    let again = evaluate_lo(&w, "B", argument(&r)).unwrap();
    assert!((again - r.value_bits).abs() < 1e-8);
}

#[test]
fn larger_families_never_report_less() {
    let w = random_valid_process(&[("A", 2, 2), ("B", 2, 2)], 8).unwrap();
    let fams = [
        LoFamily {
            ancilla_dim: Some(1),
            kraus_rank: Some(0),
            ..Default::default()
        },
        LoFamily::states_only(),
        LoFamily::default(),
    ];
    let rs = lo_family_sweep(&w, "B", &fams, &cfg()).unwrap();
    for pair in rs.windows(2) {
        assert!(pair[1].value_bits >= pair[0].value_bits - 1e-6);
    }
    for r in &rs {
        assert!((evaluate_lo(&w, "B", argument(r)).unwrap() - r.value_bits).abs() < 1e-8);
    }
}

#[test]
fn identity_channel_regularized_and_generation() {
    let w = channel_process(&channels::identity(2, "a2", "b1").unwrap());
    let est = regularized_ci_estimate(&w, "B", 2, &LoFamily::states_only(), &cfg()).unwrap();
    assert!((est.per_copy_bits - 1.0).abs() < 1e-4);
    assert!(est.per_copy_bits >= est.single_copy_bits - 1e-6);
    let g = entanglement_generation_bound(&w, "B", 1, &LoFamily::states_only(), &cfg()).unwrap();
    assert!(g.rate_bits_per_copy >= 1.0 - 1e-4);
    assert!(regularized_ci_estimate(&w, "B", 4, &LoFamily::states_only(), &cfg()).is_err());
}

#[test]
fn dimension_cap_is_enforced() {
    let w = channel_process(&channels::identity(2, "a2", "b1").unwrap());
    let small = OptimizerConfig {
        dimension_cap: 2,
        ..cfg()
    };
    assert!(matches!(
        lo_optimized_ci(&w, "B", &small),
        Err(Error::DimensionCap { .. })
    ));
}
