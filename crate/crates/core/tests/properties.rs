use std::cmp::Ordering;
use std::collections::BTreeMap;

use cube_energy::energy::{
    brute_force_energy, energy, split_decomposition, EnergyKind, DEFAULT_BRUTE_FORCE_BUDGET,
};
use cube_energy::extension::{de_ratio, optimize_de, weighted_energy, DEProblem, OptimizerOptions};
use cube_energy::lattice::{convolve, correlate, sum_values, CountsMap, Point, PointSet, WeightFn};
use cube_energy::legendre::{compare_alpha, ExactAlpha};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn point(dim: usize, r: i64) -> impl Strategy<Value = Point> {
    prop::collection::vec(-r..=r, dim).prop_map(Point::new)
}

fn point_set(dim: usize, r: i64, max: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::btree_set(point(dim, r), 1..=max)
        .prop_map(move |pts| PointSet::new(dim, pts).unwrap())
}

fn counts(dim: usize, max: usize) -> impl Strategy<Value = CountsMap> {
    prop::collection::vec((point(dim, 4), -5i64..=5), 0..=max).prop_map(move |v| {
        CountsMap::from_entries(dim, v.into_iter().map(|(p, c)| (p, BigInt::from(c)))).unwrap()
    })
}

fn kind() -> impl Strategy<Value = EnergyKind> {
    prop_oneof![Just(EnergyKind::Additive), Just(EnergyKind::Higher)]
}

fn subset_of_binary_cube(d: usize) -> impl Strategy<Value = PointSet> {
    (1u64..(1 << (1 << d))).prop_map(move |m| PointSet::cube(1, d).subset_by_mask(m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_is_commutative_and_associative(f in counts(2, 8), g in counts(2, 8), h in counts(2, 6)) {
        prop_assert_eq!(convolve(&f, &g).unwrap(), convolve(&g, &f).unwrap());
        let left = convolve(&convolve(&f, &g).unwrap(), &h).unwrap();
        let right = convolve(&f, &convolve(&g, &h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn convolution_multiplies_mass(f in counts(1, 10), g in counts(1, 10)) {
        prop_assert_eq!(sum_values(&convolve(&f, &g).unwrap()), sum_values(&f) * sum_values(&g));
    }

    #[test]
    fn autocorrelation_is_symmetric(f in counts(2, 10)) {
        let c = correlate(&f, &f).unwrap();
        for (x, v) in c.iter() {
            prop_assert_eq!(&c.get(&x.neg()), v);
        }
    }

    #[test]
    fn convolution_matches_double_loop(f in counts(2, 20), g in counts(2, 20)) {
        let mut direct: BTreeMap<Point, BigInt> = BTreeMap::new();
        for (x, u) in f.iter() {
            for (y, v) in g.iter() {
                *direct.entry(x.add(y)).or_insert_with(BigInt::zero) += u * v;
            }
        }
        let oracle = CountsMap::from_entries(2, direct).unwrap();
        prop_assert_eq!(convolve(&f, &g).unwrap(), oracle);
    }

    #[test]
    fn energies_match_enumeration(set in point_set(2, 3, 8), k in 2u32..=3, kind in kind()) {
        let fast = energy(&set, k, kind).unwrap();
        let slow = brute_force_energy(&set, k, kind, DEFAULT_BRUTE_FORCE_BUDGET).unwrap();
        prop_assert_eq!(&fast.value, &slow.value);
        prop_assert!(fast.trivial_bounds_hold());
    }

    #[test]
    fn energies_are_affine_invariant(set in point_set(3, 3, 10), shift in point(3, 7), k in 2u32..=3, kind in kind()) {
        let e = energy(&set, k, kind).unwrap().value;
        prop_assert_eq!(&energy(&set.translate(&shift), k, kind).unwrap().value, &e);
        prop_assert_eq!(&energy(&set.permute_coordinates(&[2, 0, 1]), k, kind).unwrap().value, &e);
        prop_assert_eq!(&energy(&set.reflect(&shift), k, kind).unwrap().value, &e);
    }

    #[test]
    fn energies_are_multiplicative_on_products(a in point_set(1, 4, 5), b in point_set(1, 4, 5), k in 2u32..=3, kind in kind()) {
        let ab = energy(&a.product(&b), k, kind).unwrap().value;
        prop_assert_eq!(ab, energy(&a, k, kind).unwrap().value * energy(&b, k, kind).unwrap().value);
    }

    #[test]
    fn cross_terms_obey_cauchy_schwarz_and_holder(set in subset_of_binary_cube(4), k in 2u32..=3, kind in kind()) {
        let dec = split_decomposition(&set, k, kind).unwrap();
        let e0 = energy(&dec.a0, k, kind).unwrap().value;
        let e1 = energy(&dec.a1, k, kind).unwrap().value;
        if let Some(c1) = &dec.c1 {
            prop_assert!(c1 * c1 <= &e0 * &e1);
            prop_assert_eq!(dec.c1.as_ref(), dec.c2.as_ref());
        }
        for (i, c) in (1..k).zip(&dec.cross_terms) {
            let lhs = num_traits::pow(c.clone(), k as usize);
            let rhs = num_traits::pow(e0.clone(), i as usize) * num_traits::pow(e1.clone(), (k - i) as usize);
            prop_assert!(lhs <= rhs, "C_{{{},{}}} = {}", i, k, c);
        }
    }

    #[test]
    fn powers_of_a_set_keep_its_ratio(set in point_set(1, 3, 4), d in 2u32..=3, kind in kind()) {
        prop_assume!(set.len() >= 2);
        let mut power = set.clone();
        for _ in 1..d {
            power = power.product(&set);
        }
        let base = energy(&set, 2, kind).unwrap();
        let big = energy(&power, 2, kind).unwrap();
        prop_assert_eq!(&big.value, &num_traits::pow(base.value.clone(), d as usize));
        prop_assert!((big.log_ratio().unwrap() - base.log_ratio().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn alpha_comparisons_are_transitive(k in 2u32..=40, mut qs in prop::collection::vec((1i64..400, 1i64..400), 2..8)) {
        let alpha = ExactAlpha::new(k).unwrap();
        qs.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)));
        let orders: Vec<Ordering> = qs
            .iter()
            .map(|(p, q)| compare_alpha(&alpha, &BigInt::from(*p), &BigInt::from(*q)))
            .collect();
        // α above a larger threshold implies α above every smaller one
        for w in orders.windows(2) {
            prop_assert!(!(w[0] == Ordering::Less && w[1] == Ordering::Greater));
        }
        for ((p, q), o) in qs.iter().zip(&orders) {
            let rough = alpha.to_f64().partial_cmp(&(*p as f64 / *q as f64)).unwrap();
            if (alpha.to_f64() - *p as f64 / *q as f64).abs() > 1e-9 {
                prop_assert_eq!(rough, *o);
            }
        }
    }

    #[test]
    fn weighted_energy_of_indicator_is_energy(set in point_set(2, 3, 8), k in 2u32..=3) {
        let chi: WeightFn<BigRational> = WeightFn::indicator(&set);
        let e = energy(&set, k, EnergyKind::Additive).unwrap().value;
        prop_assert_eq!(weighted_energy(&chi, k).unwrap(), BigRational::from_integer(e));
    }

    #[test]
    fn weighted_energy_factors_over_tensors(
        fa in prop::collection::vec(0i64..6, 1..4),
        fb in prop::collection::vec(0i64..6, 1..4),
        k in 2u32..=3,
    ) {
        prop_assume!(fa.iter().any(|x| *x > 0) && fb.iter().any(|x| *x > 0));
        let mk = |v: &[i64]| {
            let set = PointSet::from_integers(0..v.len() as i64);
            WeightFn::on_set(&set, v.iter().map(|x| BigRational::new((*x).into(), 3.into()))).unwrap()
        };
        let (f, g) = (mk(&fa), mk(&fb));
        let lhs = weighted_energy(&f.tensor(&g), k).unwrap();
        prop_assert_eq!(lhs, weighted_energy(&f, k).unwrap() * weighted_energy(&g, k).unwrap());
    }

    #[test]
    fn ratio_is_scale_invariant(w in prop::collection::vec(0.01f64..1.0, 3), c in 1e-3f64..1e3, q in 1.0f64..4.0) {
        let set = PointSet::from_integers([0, 1, 2]);
        let problem = DEProblem::new(set.clone(), 2, q).unwrap();
        let f = WeightFn::on_set(&set, w.iter().cloned()).unwrap();
        let g = WeightFn::on_set(&set, w.iter().map(|x| c * x)).unwrap();
        let (a, b) = (de_ratio(&f, &problem).unwrap(), de_ratio(&g, &problem).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn optimiser_bound_is_realised_by_its_witness(n in 1i64..=4, q in 1.0f64..4.0, seed in 0u64..1000) {
        let problem = DEProblem::new(PointSet::from_integers(0..=n), 2, q).unwrap();
        let opts = OptimizerOptions { starts: 8, seed, ..Default::default() };
        let est = optimize_de(&problem, &opts).unwrap();
        let again = de_ratio(&est.witness, &problem).unwrap();
        prop_assert!((again - est.lower_bound).abs() <= 1e-10);
        prop_assert!(est.lower_bound >= est.restricted_lower_bound);
        prop_assert!(est.restricted_lower_bound >= 1.0 - 1e-15);
    }

    #[test]
    fn optimiser_bound_is_monotone_in_q(n in 1i64..=3, q1 in 1.0f64..4.0, dq in 0.0f64..1.0) {
        let set = PointSet::from_integers(0..=n);
        let opts = OptimizerOptions { starts: 8, seed: 5, ..Default::default() };
        let lo = optimize_de(&DEProblem::new(set.clone(), 2, q1).unwrap(), &opts).unwrap();
        let hi = optimize_de(&DEProblem::new(set, 2, (q1 + dq).min(4.0)).unwrap(), &opts).unwrap();
        prop_assert!(lo.lower_bound <= hi.lower_bound * (1.0 + 1e-9));
    }
}

/// For 0/1 weights, `ratio(χ_B) <= 1` is `E_2(B) <= |B|^p` with `q = 4/p`.
#[test]
fn restricted_ratio_matches_energy_exponent() {
    let alphabet = PointSet::from_integers([0, 1, 2]);
    let log3_19 = 19f64.ln() / 3f64.ln();
    for p in [log3_19 - 0.01, log3_19, log3_19 + 0.0394, 2.9] {
        let problem = DEProblem::for_exponent(alphabet.clone(), 2, p).unwrap();
        let mut all_within = true;
        for mask in 1u64..8 {
            let b = alphabet.subset_by_mask(mask);
            let e = energy(&b, 2, EnergyKind::Additive).unwrap().value;
            let e = e.to_string().parse::<f64>().unwrap();
            let by_energy = e <= (b.len() as f64).powf(p) * (1.0 + 1e-12);
            let by_ratio = de_ratio(&WeightFn::indicator(&b), &problem).unwrap() <= 1.0 + 1e-12;
            assert_eq!(by_energy, by_ratio, "p = {p}, B = {b:?}");
            all_within &= by_ratio;
        }
        let est = optimize_de(&problem, &OptimizerOptions::default()).unwrap();
        assert_eq!(
            all_within,
            est.restricted_lower_bound <= 1.0 + 1e-12,
            "p = {p}"
        );
    }
}

#[test]
fn brute_force_oracle_at_twelve_points() {
    let set = PointSet::from_integers([0, 1, 3, 4, 7, 9, 10, 15, 16, 20, 22, 23]);
    for kind in [EnergyKind::Additive, EnergyKind::Higher] {
        let fast = energy(&set, 2, kind).unwrap().value;
        let slow = brute_force_energy(&set, 2, kind, DEFAULT_BRUTE_FORCE_BUDGET)
            .unwrap()
            .value;
        assert_eq!(fast, slow);
        assert!(!fast.is_one());
    }
}
