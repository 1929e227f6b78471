use proptest::prelude::*;
use srwalk_core::coupling::{fit_bounds, CouplingField};
use srwalk_core::model::{end_to_end_sq, spin_energy, spins_to_walk, walk_energy, walk_to_spins};
use srwalk_core::{constant_k, ModelParams, SpinChain, Step, Walk};

fn walk_strategy(max_len: usize) -> impl Strategy<Value = Walk> {
    prop::collection::vec(0usize..4, 1..=max_len).prop_map(|codes| {
        let steps: Vec<Step> = codes.into_iter().map(|k| Step::ALL[k]).collect();
        Walk::from_steps(&steps)
    })
}

proptest! {
    #[test]
    fn spin_map_is_a_bijection(w in walk_strategy(40)) {
        let (s, st) = walk_to_spins(&w);
        prop_assert_eq!(spins_to_walk(&s, &st).unwrap(), w.clone());
        let back = walk_to_spins(&spins_to_walk(&s, &st).unwrap());
        prop_assert_eq!(back, (s, st));
    }

    #[test]
    fn end_to_end_from_magnetizations(w in walk_strategy(40)) {
        let (s, st) = walk_to_spins(&w);
        let (m, mt) = (s.magnetization(), st.magnetization());
        prop_assert_eq!(2 * end_to_end_sq(&w) as i64, m * m + mt * mt);
    }

    #[test]
    fn energy_splits_into_two_chains(w in walk_strategy(24), alpha in 2.2f64..5.0) {
        let n = w.len();
        let p = ModelParams::new(n, alpha, 1.0).unwrap();
        let c = CouplingField::new(p);
        let (s, st) = walk_to_spins(&w);
        let split = spin_energy(&s, &c).unwrap() + spin_energy(&st, &c).unwrap() + constant_k(&p);
        let direct = walk_energy(&w, alpha);
        prop_assert!((split - direct).abs() <= 1e-10 * direct, "{} vs {}", split, direct);
    }

    #[test]
    fn coupling_is_symmetric_and_positive(n in 2usize..200, alpha in 2.1f64..6.0, a in 0usize..200, b in 0usize..200) {
        let (i, j) = (a % n + 1, b % n + 1);
        prop_assume!(i != j);
        let c = CouplingField::new(ModelParams::new(n, alpha, 0.0).unwrap());
        let u = c.coupling(i, j).unwrap();
        prop_assert!(u > 0.0);
        prop_assert_eq!(u, c.coupling(j, i).unwrap());
        let via = c.coupling_via_prefix(i, j).unwrap();
        prop_assert!((u - via).abs() <= 1e-10 * u);
        prop_assert!(u <= c.envelope(i.abs_diff(j)) * (1.0 + 1e-12));
    }

    #[test]
    fn spin_energy_is_flip_symmetric(mask in 0u64..(1 << 12), n in 1usize..=12) {
        let c = CouplingField::new(ModelParams::new(n, 3.5, 1.0).unwrap());
        let s = SpinChain::from_mask(mask & ((1 << n) - 1), n);
        let flipped = SpinChain::new(s.as_slice().iter().map(|x| -x).collect()).unwrap();
        let (e, ef) = (spin_energy(&s, &c).unwrap(), spin_energy(&flipped, &c).unwrap());
        prop_assert!((e - ef).abs() <= 1e-12 * c.total_coupling().max(1.0));
    }

    #[test]
    fn fitted_constants_bracket_bulk_ratios(n in 40usize..300, alpha in 3.0f64..4.0) {
        let c = CouplingField::new(ModelParams::new(n, alpha, 0.0).unwrap());
        let fit = fit_bounds(&c, 0.1).unwrap();
        prop_assert!(fit.c1_hat > 0.0 && fit.c1_hat <= fit.c2_hat);
        prop_assert_eq!(fit.outside_violations, 0);
    }
}
