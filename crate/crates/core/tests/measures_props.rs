use causalproc::measures::{coherent_information, conditional_entropy, marginal_entropy, mutual_information, von_neumann_entropy};
use causalproc::random::{random_density, random_pure, Stream};
use causalproc::{LabeledOperator, SystemId};
use proptest::prelude::*;

fn q(l: &str, d: usize) -> SystemId {
    SystemId::sys(l, d)
}

fn state(seed: u64, rank: usize) -> LabeledOperator {
    let mut rng = Stream::new(seed, 0);
    LabeledOperator::new(vec![q("x", 2), q("y", 3)], random_density(&mut rng, 6, rank)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_bounds(seed in any::<u64>(), rank in 1usize..7) {
        let rho = state(seed, rank);
        let s = von_neumann_entropy(&rho).unwrap();
        prop_assert!(s >= 0.0 && s <= (rank as f64).log2() + 1e-9);
    }

    #[test]
    fn subadditivity_and_araki_lieb(seed in any::<u64>(), rank in 1usize..7) {
        let rho = state(seed, rank);
        let (sx, sy) = (marginal_entropy(&rho, &["x"]).unwrap(), marginal_entropy(&rho, &["y"]).unwrap());
        let s = von_neumann_entropy(&rho).unwrap();
        prop_assert!(s <= sx + sy + 1e-9);
        prop_assert!(s >= (sx - sy).abs() - 1e-9);
        prop_assert!(mutual_information(&rho, &["x"], &["y"]).unwrap() >= -1e-9);
    }

    #[test]
    fn coherent_information_is_minus_conditional_entropy(seed in any::<u64>(), rank in 1usize..7) {
        let rho = state(seed, rank);
        let ci = coherent_information(&rho, &["y"]).unwrap();
        let h = conditional_entropy(&rho, &["y"]).unwrap();
        prop_assert!((ci + h).abs() < 1e-12);
        // |I| ≤ log of the smaller side
        prop_assert!(ci.abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn pure_states_have_equal_marginal_entropies(seed in any::<u64>()) {
        let mut rng = Stream::new(seed, 1);
        let rho = LabeledOperator::from_ket(vec![q("x", 2), q("y", 3)], &random_pure(&mut rng, 6)).unwrap();
        let (sx, sy) = (marginal_entropy(&rho, &["x"]).unwrap(), marginal_entropy(&rho, &["y"]).unwrap());
        prop_assert!((sx - sy).abs() < 1e-8);
        prop_assert!((coherent_information(&rho, &["x"]).unwrap() - sx).abs() < 1e-8);
    }
}

#[test]
fn reference_values() {
    let phi = LabeledOperator::phi_plus(q("a", 3), q("b", 3)).unwrap();
    assert!((coherent_information(&phi, &["b"]).unwrap() - 3f64.log2()).abs() < 1e-12);
    let omega = LabeledOperator::maximally_mixed(vec![q("a", 2), q("b", 2)]).unwrap();
    assert!((coherent_information(&omega, &["b"]).unwrap() + 1.0).abs() < 1e-12);
    assert!(mutual_information(&omega, &["a"], &["b"]).unwrap().abs() < 1e-12);
}
