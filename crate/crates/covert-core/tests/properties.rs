use covert_core::awgn::{key_thresholds, rate_causal_lb, rate_converse_expression, rate_noncausal, AwgnSpec};
use covert_core::capacity::{causal_capacity, causal_inner, noncausal_capacity, AuxBound, SolverOptions};
use covert_core::channel::{causal_joint, cost_and_covert_residuals, noncausal_joint, q0, StateDmc, StrategyMap};
use covert_core::examples::random_channel;
use covert_core::probability::{
    entropy, joint_entropy, kl_divergence, mutual_information, n_fold_product, tv_distance, ConditionalPmf, JointPmf,
    Pmf,
};
use covert_core::sim::{covertness_metrics, marginal_kl_sum};
use proptest::prelude::*;

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    // about one entry in five is an exact zero
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 1e-3..1.0f64], n)
        .prop_filter("positive total", |w| w.iter().sum::<f64>() > 0.0)
}

fn pmf(n: usize) -> impl Strategy<Value = Pmf> {
    weights(n).prop_map(|w| Pmf::from_weights(w).unwrap())
}

fn positive_pmf(n: usize) -> impl Strategy<Value = Pmf> {
    prop::collection::vec(1e-3..1.0f64, n).prop_map(|w| Pmf::from_weights(w).unwrap())
}

fn joint3() -> impl Strategy<Value = JointPmf> {
    (1usize..4, 1usize..4, 1usize..4).prop_flat_map(|(a, b, c)| {
        weights(a * b * c).prop_map(move |w| JointPmf::from_weights(&["A", "B", "C"], &[a, b, c], w).unwrap())
    })
}

fn channel() -> impl Strategy<Value = StateDmc> {
    (any::<u64>(), 2usize..4, 1usize..3, 2usize..4, 2usize..4)
        .prop_map(|(seed, nx, ns, ny, nz)| random_channel(seed, nx, ns, ny, nz))
}

fn map_for(ch: &StateDmc, aux: usize) -> impl Strategy<Value = StrategyMap> {
    let (ns, nx) = (ch.ns(), ch.nx());
    prop::collection::vec(0..nx, aux * ns).prop_map(move |t| StrategyMap::new(aux, ns, nx, t).unwrap())
}

proptest! {
    #[test]
    fn mutual_information_identity(j in joint3()) {
        for (a, b) in [(&["A"][..], &["B"][..]), (&["A", "C"][..], &["B"][..]), (&["C"][..], &["A", "B"][..])] {
            let i = mutual_information(&j, a, b).unwrap();
            let mut ab = a.to_vec();
            ab.extend_from_slice(b);
            let h = joint_entropy(&j, a).unwrap() + joint_entropy(&j, b).unwrap() - joint_entropy(&j, &ab).unwrap();
            prop_assert!((i - h).abs() <= 1e-10, "I = {i}, H-identity = {h}");
            let rev = mutual_information(&j, b, a).unwrap();
            prop_assert!((i - rev).abs() <= 1e-12);
            prop_assert!(i >= 0.0);
        }
    }

    #[test]
    fn entropy_chain_rule(j in joint3()) {
        // H(A,B) = H(A) + H(B|A), with H(B|A) summed row by row
        let ab = j.marginalize(&["A", "B"]).unwrap();
        let pa = j.marginal("A").unwrap();
        let nb = ab.shape()[1];
        let mut h_b_given_a = 0.0;
        for (a, &w) in pa.probs().iter().enumerate() {
            if w > 0.0 {
                let row: Vec<f64> = ab.probs()[a * nb..(a + 1) * nb].iter().map(|p| p / w).collect();
                h_b_given_a += w * entropy(&row);
            }
        }
        prop_assert!((entropy(&ab) - entropy(&pa) - h_b_given_a).abs() <= 1e-10);
    }

    #[test]
    fn kl_joint_convexity(
        (p1, p2, q1, q2) in (2usize..6).prop_flat_map(|n| (pmf(n), pmf(n), pmf(n), positive_pmf(n))),
        lam in 0.0..=1.0f64,
    ) {
        let (p1, p2, q1, q2) = (p1.probs(), p2.probs(), q1.probs(), q2.probs());
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| lam * x + (1.0 - lam) * y).collect::<Vec<_>>();
        let lhs = kl_divergence(&mix(p1, p2), &mix(q1, q2));
        let rhs = lam * kl_divergence(p1, q1) + (1.0 - lam) * kl_divergence(p2, q2);
        prop_assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
    }

    #[test]
    fn pinsker_and_detection(n in 2usize..8, p in prop::collection::vec(0.0..1.0f64, 8), q in prop::collection::vec(1e-4..1.0f64, 8)) {
        let p = Pmf::from_weights(p[..n].iter().map(|v| v + 1e-9).collect()).unwrap();
        let q = Pmf::from_weights(q[..n].to_vec()).unwrap();
        let kl = kl_divergence(&p, &q);
        let tv = tv_distance(&p, &q);
        prop_assert!(tv <= (kl / 2.0).sqrt() + 1e-12);
        let m = covertness_metrics(p.probs(), q.probs());
        prop_assert!(m.optimal_test_sum >= m.detection_bound - 1e-12);
        prop_assert!((0.0..=1.0).contains(&m.tv));
    }

    #[test]
    fn kl_chain_over_letters(n in 1usize..5, q in positive_pmf(2), w in prop::collection::vec(0.0..1.0f64, 16)) {
        let len = 1usize << n;
        let dist: Vec<f64> = w[..len].iter().map(|v| v + 1e-6).collect();
        let t: f64 = dist.iter().sum();
        let dist: Vec<f64> = dist.iter().map(|v| v / t).collect();
        let qn = n_fold_product(&q, n, 1 << 20).unwrap();
        let total = kl_divergence(&dist, &qn);
        prop_assert!(marginal_kl_sum(&dist, &q, n) <= total + 1e-10);
    }

    #[test]
    fn causal_joint_state_is_exogenous(
        (ch, p_v, map) in (channel(), 1usize..4).prop_flat_map(|(ch, aux)| {
            let m = map_for(&ch, aux);
            (Just(ch), pmf(aux), m)
        }),
    ) {
        let aux = p_v.len();
        let j = causal_joint(&ch, &p_v, &map).unwrap();
        let ps = j.marginal("S").unwrap();
        for (a, b) in ps.probs().iter().zip(ch.state_dist().probs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let vs = j.marginalize(&["V", "S"]).unwrap();
        for v in 0..aux {
            for s in 0..ch.ns() {
                let prod = p_v.probs()[v] * ch.state_dist().probs()[s];
                prop_assert!((vs.get(&[v, s]) - prod).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn q0_is_the_idle_baseline(ch in channel()) {
        let idle = StrategyMap::constant(1, ch.ns(), ch.nx(), ch.x0()).unwrap();
        let j = causal_joint(&ch, &Pmf::uniform(1), &idle).unwrap();
        let pz = j.marginal("Z").unwrap();
        for (a, b) in pz.probs().iter().zip(q0(&ch).probs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!(cost_and_covert_residuals(&j, &ch).unwrap().1 <= 1e-14);
    }

    #[test]
    fn noncausal_joint_with_independent_aux_matches_causal(ch in channel(), p_v in pmf(3)) {
        let map = StrategyMap::from_fn(3, ch.ns(), ch.nx(), |u, s| (u + s) % ch.nx()).unwrap();
        let jc = causal_joint(&ch, &p_v, &map).unwrap();
        let jn = noncausal_joint(&ch, &ConditionalPmf::repeated(&p_v, ch.ns()), &map).unwrap();
        let ic = mutual_information(&jc, &["V"], &["Y"]).unwrap();
        let iuy = mutual_information(&jn, &["U"], &["Y"]).unwrap();
        let ius = mutual_information(&jn, &["U"], &["S"]).unwrap();
        prop_assert!(ius <= 1e-12);
        prop_assert!((ic - (iuy - ius)).abs() <= 1e-10);
    }

    #[test]
    fn awgn_monotone_and_consistent(p in 0.0..50.0f64, t in 1e-3..50.0f64, dp in 0.0..5.0f64, dt in 0.0..5.0f64, s2 in 1e-2..10.0f64) {
        let base = AwgnSpec::new(p, t, s2).unwrap();
        let more_p = AwgnSpec::new(p + dp, t, s2).unwrap();
        let more_t = AwgnSpec::new(p, t + dt, s2).unwrap();
        prop_assert!(rate_noncausal(&more_p) >= rate_noncausal(&base) - 1e-15);
        prop_assert!(rate_noncausal(&more_t) >= rate_noncausal(&base) - 1e-15);
        prop_assert!((rate_converse_expression(&base) - rate_noncausal(&base)).abs() <= 1e-12);
        prop_assert!(rate_causal_lb(&base) <= rate_noncausal(&base) + 1e-15);
        if t <= p / 2.0 {
            prop_assert_eq!(rate_causal_lb(&base), rate_noncausal(&base));
        }
        let (kc, kn) = key_thresholds(&base);
        if s2 > 1.0 {
            prop_assert!(kc <= 0.0 && kn <= 0.0);
        } else if s2 < 1.0 {
            prop_assert!(kc >= 0.0 && kn >= 0.0);
        }
        let (kc, kn) = key_thresholds(&AwgnSpec::new(p, t, 1.0).unwrap());
        prop_assert_eq!((kc, kn), (0.0, 0.0));
    }

    #[test]
    fn awgn_weak_interference_limit(p in 1e-2..100.0f64) {
        let spec = AwgnSpec::new(p, 1e6 * p, 1.0).unwrap();
        prop_assert!((rate_noncausal(&spec) - 0.5 * (1.0 + p).log2()).abs() <= 1e-6);
    }
}

#[test]
fn forbidden_inputs_give_infinite_divergence() {
    // nz = 3: the idle input never reaches z = 2, input 1 does under state 1
    let law = ConditionalPmf::from_rows(vec![
        vec![0.5, 0.5, 0.0],
        vec![0.2, 0.8, 0.0],
        vec![0.9, 0.1, 0.0],
        vec![0.3, 0.3, 0.4],
    ])
    .unwrap();
    let ch = StateDmc::new(2, 1, 3, 0, Pmf::bernoulli(0.4).unwrap(), law).unwrap();
    let report = ch.validate();
    assert_eq!(report.forbidden_inputs, vec![1]);
    assert_eq!(report.missing_outputs, vec![2]);
    let map = StrategyMap::from_fn(2, 2, 2, |v, _| v).unwrap();
    for w in [1e-9, 0.3, 1.0] {
        let j = causal_joint(&ch, &Pmf::new(vec![1.0 - w, w]).unwrap(), &map).unwrap();
        assert_eq!(cost_and_covert_residuals(&j, &ch).unwrap().1, f64::INFINITY);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn aux_relabeling_leaves_inner_value_unchanged(seed in any::<u64>(), table in prop::collection::vec(0usize..2, 6)) {
        let ch = random_channel(seed, 2, 2, 2, 2);
        let map = StrategyMap::new(3, 2, 2, table).unwrap();
        let perm = [2usize, 0, 1];
        let permuted = StrategyMap::from_fn(3, 2, 2, |a, s| map.get(perm[a], s)).unwrap();
        let r1 = causal_inner(&ch, &map, 0.0, f64::INFINITY);
        let r2 = causal_inner(&ch, &permuted, 0.0, f64::INFINITY);
        match (r1, r2) {
            (Ok((_, a)), Ok((_, b))) => prop_assert_eq!(a.to_bits(), b.to_bits()),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn solutions_certify_constraints_and_dominance(seed in any::<u64>(), budget in prop_oneof![Just(f64::INFINITY), 0.0..1.0f64]) {
        let ch = random_channel(seed, 2, 2, 2, 2).with_cost(vec![0.0, 1.0]).unwrap().with_budget(budget.min(1e9)).unwrap();
        let opts = SolverOptions { aux_bound: AuxBound::Fixed(3), restarts: 8, ..SolverOptions::default() };
        let c = causal_capacity(&ch, &opts).unwrap();
        let n = noncausal_capacity(&ch, &opts).unwrap();
        for sol in [&c, &n] {
            prop_assert!(sol.covert_residual_nats <= 1e-8);
            prop_assert!(sol.cost_used <= ch.budget() + 1e-8);
            let (cost, resid) = cost_and_covert_residuals(&sol.joint(&ch).unwrap(), &ch).unwrap();
            prop_assert!((cost - sol.cost_used).abs() <= 1e-12 && resid <= 1e-8);
        }
        prop_assert!(n.rate_bits >= c.rate_bits - 1e-6, "noncausal {} < causal {}", n.rate_bits, c.rate_bits);
    }
}
