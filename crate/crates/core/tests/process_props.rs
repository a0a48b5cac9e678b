use causalproc::choi::channels;
use causalproc::process::{
    feedback_loop, lv_project, probability, process_from_channel, random_valid_process, signaling_probe, validate,
};
use causalproc::random::{random_hermitian, random_kraus, Stream};
use causalproc::{LabeledOperator, QuantumMap, SystemId};
use proptest::prelude::*;

fn q(l: &str, d: usize) -> SystemId {
    SystemId::sys(l, d)
}

fn instrument(rng: &mut Stream, input: &str, output: &str, outcomes: usize) -> Vec<QuantumMap> {
    let ks = random_kraus(rng, 2, 2, 2 * outcomes).unwrap();
    ks.chunks(2)
        .map(|g| {
            channels::from_kraus(g.to_vec(), vec![q(input, 2)], vec![q(output, 2)])
                .unwrap()
                .to_paper_normalization()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_processes_are_valid(seed in any::<u64>()) {
        let w = random_valid_process(&[("A", 2, 2), ("B", 2, 2)], seed).unwrap();
        let r = validate(&w);
        prop_assert!(r.valid, "{:?}", r);
    }

    #[test]
    fn projector_is_a_trace_preserving_idempotent(seed in any::<u64>()) {
        let w = random_valid_process(&[("A", 2, 3), ("B", 2, 2)], seed).unwrap();
        let x = LabeledOperator::new(w.op().systems().to_vec(), random_hermitian(&mut Stream::new(seed, 1), w.op().dim())).unwrap();
        let once = lv_project(&x, w.parties()).unwrap();
        prop_assert!(lv_project(&once, w.parties()).unwrap().distance(&once).unwrap() < 1e-10);
        prop_assert!((once.trace() - x.trace()).norm() < 1e-10);
    }

    #[test]
    fn instrument_probabilities_sum_to_one(seed in any::<u64>()) {
        let w = random_valid_process(&[("A", 2, 2), ("B", 2, 2)], seed).unwrap();
        let mut rng = Stream::new(seed, 2);
        let ia = instrument(&mut rng, "a1", "a2", 2);
        let ib = instrument(&mut rng, "b1", "b2", 3);
        let mut total = 0.0;
        for ea in &ia {
            for eb in &ib {
                let p = probability(&w, &[ea.clone(), eb.clone()]).unwrap();
                prop_assert!(p.raw > -1e-10);
                total += p.raw;
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn channel_processes_are_valid_and_one_way(seed in any::<u64>()) {
        let mut rng = Stream::new(seed, 3);
        let m = channels::from_kraus(random_kraus(&mut rng, 2, 2, 2).unwrap(), vec![q("a2", 2)], vec![q("b1", 2)]).unwrap();
        let w = process_from_channel(&m, "A", "B").unwrap();
        prop_assert!(validate(&w).valid);
        prop_assert!(signaling_probe(&w, "B", "A").unwrap() < 1e-10);
    }
}

#[test]
fn feedback_loop_is_rejected_by_the_projector_only() {
    for d in [2, 3] {
        let r = validate(&feedback_loop(d).unwrap());
        assert!(r.psd && r.unit_trace && !r.valid);
        assert!(r.lv_residual > 0.1);
    }
}
