use proptest::prelude::*;

use kdent::densemath::{hermitian_eigenvalues, trace_norm, Subsystem, C64};
use kdent::entanglement::{entropy_s_kd, pure_entanglement};
use kdent::format::{round12, sig12};
use kdent::kd::{inner_sup_nonreality, kd_marginal, nonreality};
use kdent::optimize::BasisParams;
use kdent::seeding::task_rng;
use kdent::states::{
    haar_pure_state, haar_unitary, random_mixed_state, BipartiteDims, DensityOperator,
    OrthonormalBasis,
};

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=3, 2usize..=3)
}

fn mixed(seed: u64, (a, b): (usize, usize), rank: usize) -> DensityOperator {
    let d = BipartiteDims::new(a, b).unwrap();
    random_mixed_state(d, rank.clamp(1, a * b), &mut task_rng(seed, &[0])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kd_marginals_and_normalization(seed in any::<u64>(), dims in shape(), rank in 1usize..=4) {
        let rho = mixed(seed, dims, rank);
        let basis_a = OrthonormalBasis::haar_random(dims.0, &mut task_rng(seed, &[1]));
        let basis_y = OrthonormalBasis::haar_random(dims.0 * dims.1, &mut task_rng(seed, &[2]));
        let kd = kd_marginal(&rho, &basis_a, &basis_y).unwrap();
        let total: C64 = kd.values().iter().sum();
        prop_assert!((total - C64::new(1.0, 0.0)).norm() < 1e-12);
        let py = basis_y.born_probabilities(rho.matrix());
        for (y, p) in py.iter().enumerate() {
            let col: C64 = (0..kd.n_x()).map(|x| kd.value(x, y)).sum();
            prop_assert!((col - C64::new(*p, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn nonreality_below_inner_supremum(seed in any::<u64>(), dims in shape(), rank in 1usize..=4) {
        let rho = mixed(seed, dims, rank);
        let basis_a = OrthonormalBasis::haar_random(dims.0, &mut task_rng(seed, &[1]));
        let basis_y = OrthonormalBasis::haar_random(dims.0 * dims.1, &mut task_rng(seed, &[2]));
        let kd = kd_marginal(&rho, &basis_a, &basis_y).unwrap();
        prop_assert!(nonreality(&kd) <= inner_sup_nonreality(&rho, &basis_a).unwrap() + 1e-12);
    }

    #[test]
    fn pure_value_invariant_under_local_unitaries(seed in any::<u64>(), dims in shape()) {
        let d = BipartiteDims::new(dims.0, dims.1).unwrap();
        let mut rng = task_rng(seed, &[]);
        let psi = haar_pure_state(d, &mut rng);
        let moved = psi
            .apply_local_unitary(&haar_unitary(dims.0, &mut rng), &haar_unitary(dims.1, &mut rng))
            .unwrap();
        let e = pure_entanglement(&psi).unwrap();
        prop_assert!((e.value - pure_entanglement(&moved).unwrap().value).abs() < 1e-9);
        let max = ((dims.0.min(dims.1) - 1) as f64).sqrt();
        prop_assert!(e.value >= 0.0 && e.value <= max + 1e-12);
    }

    #[test]
    fn pure_value_symmetric_in_the_cut(seed in any::<u64>(), dims in shape()) {
        let d = BipartiteDims::new(dims.0, dims.1).unwrap();
        let psi = haar_pure_state(d, &mut task_rng(seed, &[]));
        let a = entropy_s_kd(&psi.reduced(Subsystem::A)).unwrap();
        let b = entropy_s_kd(&psi.reduced(Subsystem::B)).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn basis_parameters_give_unitaries(dim in 2usize..=4, raw in prop::collection::vec(-10.0f64..10.0, 16)) {
        let params = BasisParams::new(dim, raw[..dim * dim].to_vec()).unwrap();
        prop_assert!(params.unitary().unitary_deviation() < 1e-12);
    }

    #[test]
    fn trace_norm_triangle_and_spectrum(seed in any::<u64>(), dims in shape()) {
        let r = mixed(seed, dims, 2);
        let s = mixed(seed.wrapping_add(1), dims, 3);
        let diff = r.matrix() - s.matrix();
        let sum = r.matrix() + s.matrix();
        prop_assert!(trace_norm(&sum).unwrap() <= 2.0 + 1e-10);
        let spectral: f64 = hermitian_eigenvalues(&diff).unwrap().iter().map(|l| l.abs()).sum();
        prop_assert!((trace_norm(&diff).unwrap() - spectral).abs() < 1e-10);
    }

    #[test]
    fn twelve_digit_formatting_round_trips(x in -1e6f64..1e6) {
        let printed: f64 = sig12(x).parse().unwrap();
        prop_assert_eq!(printed, round12(x));
        prop_assert!((printed - x).abs() <= 1e-11 * x.abs().max(1e-300));
    }
}
