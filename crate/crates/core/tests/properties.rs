use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

use cuntzlab::cuntz::{
    dim_fn_value, rank_gap_certificate, rank_gap_holds, standard_traces, uniform_dims, w_add, w_leq, CuntzClassRepr,
    LAffFunction, WElement,
};
use cuntzlab::exact::{format_q, parse_q, q, Q};
use cuntzlab::matfield::DEFAULT_RANK_TOL;
use cuntzlab::random::{contraction_field, field_with_ranks, rng, small_space};
use cuntzlab::rsh::{delta_schedule, matrix_amplify, rc_upper_bound, required_delta0, RshDecomposition, RshStage};
use cuntzlab::space::SampledSpace;
use cuntzlab::villadsen::{
    intertwine_defect, pushforward, stage_table, total_variation, Discrete1D, MarginalMeasure, VilladsenParams,
};

fn rational() -> impl Strategy<Value = Q> {
    (-50i64..50, 1i64..30).prop_map(|(n, d)| q(n, d))
}

fn unit_rational() -> impl Strategy<Value = Q> {
    (0i64..=8).prop_map(|n| q(n, 8))
}

fn marginal() -> impl Strategy<Value = Discrete1D> {
    (unit_rational(), unit_rational(), 1i64..8).prop_map(|(x, y, w)| {
        let mut m = BTreeMap::new();
        *m.entry(x).or_insert_with(Q::zero) += q(w, 8);
        *m.entry(y).or_insert_with(Q::zero) += q(8 - w, 8);
        Discrete1D(m)
    })
}

fn product(dim: usize) -> impl Strategy<Value = MarginalMeasure> {
    prop::collection::vec(marginal(), dim).prop_map(MarginalMeasure::product)
}

fn cube(dim: u64) -> Arc<SampledSpace> {
    Arc::new(SampledSpace::discrete("cube", dim, ["o"]).unwrap())
}

proptest! {
    #[test]
    fn rationals_round_trip(x in rational()) {
        prop_assert_eq!(parse_q(&format_q(&x)).unwrap(), x);
    }

    #[test]
    fn rank_gap_is_monotone(ra in 0usize..10, rb in 0usize..10, d in 0u64..6) {
        if rank_gap_holds(ra, rb, d) {
            prop_assert!(rank_gap_holds(ra, rb + 1, d));
            prop_assert!(ra == 0 || rank_gap_holds(ra - 1, rb, d));
            prop_assert!(d == 0 || rank_gap_holds(ra, rb, d - 1));
        }
        // integer form of rank a + (d − 1)/2 ≤ rank b
        let exact = q(ra as i64, 1) + q(d as i64 - 1, 2) <= q(rb as i64, 1);
        prop_assert_eq!(rank_gap_holds(ra, rb, d), exact);
    }

    #[test]
    fn certificate_matches_pointwise_ranks(seed in 0u64..500, n in 1usize..4, dim in 0u64..3) {
        let mut r = rng(seed);
        let space = small_space(&mut r, 6, dim);
        let ra: Vec<usize> = (0..space.len()).map(|i| (seed as usize + i) % (n + 1)).collect();
        let rb: Vec<usize> = (0..space.len()).map(|i| (seed as usize / 3 + 2 * i) % (n + 1)).collect();
        let a = field_with_ranks(&mut r, Arc::clone(&space), n, &ra);
        let b = field_with_ranks(&mut r, Arc::clone(&space), n, &rb);
        let cert = rank_gap_certificate(&a, &b, &uniform_dims(&space), DEFAULT_RANK_TOL).unwrap();
        let expect = ra.iter().zip(&rb).all(|(&x, &y)| rank_gap_holds(x, y, dim));
        prop_assert_eq!(cert.holds, expect);
        prop_assert_eq!(cert.witness.is_none(), expect);
    }

    #[test]
    fn dimension_function_bounded_and_monotone(seed in 0u64..500, n in 1usize..4) {
        let mut r = rng(seed);
        let space = small_space(&mut r, 5, 1);
        let a = contraction_field(&mut r, Arc::clone(&space), n);
        for mu in standard_traces(&space, n) {
            let full = dim_fn_value(&a, &mu, DEFAULT_RANK_TOL).unwrap();
            let cut = dim_fn_value(&a.cut_down(0.3).unwrap(), &mu, DEFAULT_RANK_TOL).unwrap();
            prop_assert!(cut <= full);
            prop_assert!(full <= Q::one());
        }
    }

    #[test]
    fn semigroup_addition_commutes(seed in 0u64..300, n in 1usize..3) {
        let mut r = rng(seed);
        let space = small_space(&mut r, 4, 1);
        let traces = standard_traces(&space, n);
        let a = contraction_field(&mut r, Arc::clone(&space), n);
        let b = contraction_field(&mut r, Arc::clone(&space), n);
        let ca = WElement::Class(CuntzClassRepr::from_field(&a, &traces, DEFAULT_RANK_TOL, "a").unwrap());
        let cb = WElement::Class(CuntzClassRepr::from_field(&b, &traces, DEFAULT_RANK_TOL, "b").unwrap());
        let ab = w_add(&ca, &cb).unwrap();
        let ba = w_add(&cb, &ca).unwrap();
        prop_assert!(w_leq(&ab, &ba).unwrap() && w_leq(&ba, &ab).unwrap());
        prop_assert!(w_leq(&ca, &ab).unwrap());
    }

    #[test]
    fn laff_order_is_pointwise(x in unit_rational(), y in unit_rational()) {
        let f = WElement::Laff(LAffFunction::constant(["t"], x.clone()));
        let g = WElement::Laff(LAffFunction::constant(["t"], y.clone()));
        prop_assert_eq!(w_leq(&f, &g).unwrap(), x <= y);
    }

    #[test]
    fn amplification_divides_rc(dims in prop::collection::vec(0u64..12, 1..4), sizes in prop::collection::vec(1u64..6, 4), k in 1u64..10) {
        let stages = dims.iter().zip(&sizes).map(|(&d, &s)| RshStage::free(cube(d), s)).collect();
        let d = RshDecomposition::new("sum", stages).unwrap();
        let amplified = matrix_amplify(&d, k).unwrap();
        prop_assert_eq!(rc_upper_bound(&amplified), rc_upper_bound(&d) / Q::from(BigInt::from(k)));
        prop_assert!(rc_upper_bound(&d) >= Q::zero());
    }

    #[test]
    fn required_delta0_is_least(eps_exp in -6i32..0, l in 0usize..6) {
        let eps = 10f64.powi(eps_exp) * 3.0;
        let r = required_delta0(eps, l, 49);
        let ok = delta_schedule(10f64.powi(-(r.exponent as i32)), l, 49);
        prop_assert!(ok.recursion[l] < eps * (1.0 + 1e-9));
        let looser = delta_schedule(10f64.powi(-(r.exponent as i32 - 1)), l, 49);
        prop_assert!(looser.recursion[l] >= eps * (1.0 - 1e-9));
    }

    #[test]
    fn stage_ratios_decrease_with_positive_l(n in prop::collection::vec(1u64..9, 1..8), l in prop::collection::vec(1u64..5, 8)) {
        let stages = n.len();
        let p = VilladsenParams { m0: 1, n0: 3, n_seq: n, l_seq: l[..stages].to_vec(), target_r: q(1, 3) };
        let rows = stage_table(&p, stages).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[1].ratio_i < w[0].ratio_i);
            prop_assert!((&w[1].m_i % &w[0].m_i).is_zero());
            prop_assert!((&w[1].big_n_i % &w[0].big_n_i).is_zero());
        }
    }

    #[test]
    fn intertwine_bound_in_range(n1 in 1u64..6, extra in 0u64..8, mult in 1u64..6, tail in 0u64..5) {
        let m1 = n1 + extra;
        let n2 = m1 * mult + tail;
        let d = intertwine_defect(n1, m1, n2).unwrap();
        prop_assert!(d.l * n1 <= n2);
        prop_assert!(d.bound >= Q::zero() && d.bound <= q(2, 1));
        if extra == 0 && tail == 0 {
            prop_assert!(d.bound.is_zero());
        }
    }

    #[test]
    fn pushforward_preserves_mass(mu in product(6), n in prop::sample::select(vec![1u64, 2, 3, 6])) {
        let out = pushforward(&mu, n, 0, &[], true).unwrap();
        prop_assert!(out.total_mass().is_one());
        prop_assert_eq!(out.dim, (6 / n) as usize);
        out.validate().unwrap();
    }

    #[test]
    fn total_variation_is_a_metric(a in product(2), b in product(2), c in product(2)) {
        let ab = total_variation(&a, &b).unwrap();
        prop_assert_eq!(&ab, &total_variation(&b, &a).unwrap());
        prop_assert!(total_variation(&a, &a).unwrap().is_zero());
        prop_assert!(ab <= total_variation(&a, &c).unwrap() + total_variation(&c, &b).unwrap());
        prop_assert!(ab <= q(2, 1));
    }

    #[test]
    fn pushforward_contracts(a in product(4), b in product(4)) {
        let pa = pushforward(&a, 2, 0, &[], true).unwrap();
        let pb = pushforward(&b, 2, 0, &[], true).unwrap();
        prop_assert!(total_variation(&pa, &pb).unwrap() <= total_variation(&a, &b).unwrap());
    }
}
