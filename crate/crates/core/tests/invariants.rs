use keydist::binary::{c_rec_bsc, c_wsk_bec, c_wsk_bsc, BscCascadeSource};
use keydist::channel::convexity_probe;
use keydist::gaussian::{c_rec_gauss, c_wsk_gauss, GaussianSource};
use keydist::info::{binary_entropy, star};
use keydist::joint::bsc_matrix;
use keydist::protocol::{privacy_amplify, run_experiment, Decoder, Gf2n, ProtocolParams};
use keydist::quantization::{partition_mi, Partition};
use keydist::{optimize_oneway, DiscreteJoint, Objective, OptimizerOptions, Prob, TestChannel, TwoWayChannels, Units};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn prob() -> impl Strategy<Value = f64> {
    0.0f64..=1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn star_is_commutative_and_mixes(p in prob(), q in prob()) {
        let (a, b) = (Prob::new(p).unwrap(), Prob::new(q).unwrap());
        prop_assert!((star(a, b).get() - star(b, a).get()).abs() < 1e-15);
        prop_assert!((star(a, Prob::ZERO).get() - p).abs() < 1e-15);
        prop_assert!((star(a, Prob::HALF).get() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bsc_capacities_are_ordered_and_monotone(p in 0.01f64..0.49, q in 0.0f64..0.5, r in 0.0f64..1.2, dr in 0.001f64..0.3) {
        let src = BscCascadeSource::new(p, q).unwrap();
        let i_xy = 1.0 - binary_entropy(Prob::new(p).unwrap(), Units::Bits);
        let rec = c_rec_bsc(&src, r).unwrap();
        let wsk = c_wsk_bsc(&src, r).unwrap();
        prop_assert!(wsk <= rec + 1e-12);
        prop_assert!(rec <= i_xy + 1e-12);
        prop_assert!(c_rec_bsc(&src, r + dr).unwrap() >= rec - 1e-12);
        prop_assert!(c_wsk_bsc(&src, r + dr).unwrap() >= wsk - 1e-12);
    }

    #[test]
    fn bec_key_rate_scales_with_erasure(p in 0.01f64..0.49, e in prob(), r in 0.0f64..1.0) {
        let src = BscCascadeSource::new(p, 0.0).unwrap();
        let v = c_wsk_bec(&src, Prob::new(e).unwrap(), r).unwrap();
        prop_assert!((v - e * c_rec_bsc(&src, r).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_wsk_below_rec(rxy in 0.05f64..0.95, ryz in -0.95f64..0.95, r in 0.0f64..5.0) {
        let src = GaussianSource::degraded(rxy, ryz, 1.0).unwrap();
        let rec = c_rec_gauss(&src, r).unwrap();
        let wsk = c_wsk_gauss(&src, r).unwrap();
        prop_assert!(wsk <= rec + 1e-12);
        prop_assert!(rec < src.mutual_information());
    }

    #[test]
    fn quantizing_loses_information(cuts in prop::collection::btree_set(-400i32..400, 1..10)) {
        let src = GaussianSource::degraded(0.75, 0.0, 1.0).unwrap();
        let b: Vec<f64> = cuts.into_iter().map(|c| c as f64 / 100.0).collect();
        let mi = partition_mi(&src, &Partition::new(b.clone()).unwrap());
        prop_assert!(mi > 0.0);
        prop_assert!(mi < src.mutual_information());
        // refining a partition never loses information
        let mut finer = b;
        finer.push(4.5);
        prop_assert!(partition_mi(&src, &Partition::new(finer).unwrap()) >= mi - 1e-10);
    }

    #[test]
    fn hash_is_linear_in_the_input(bits in 1usize..=64, s in any::<u64>(), t in any::<u64>(), y in any::<u64>(), k in 1usize..=64) {
        let f = Gf2n::new(bits).unwrap();
        let k = k.min(bits);
        let (s, t, y) = (s & f.mask(), t & f.mask(), y & f.mask());
        let h = |v| privacy_amplify(&f, v, y, k).unwrap();
        prop_assert_eq!(h(s ^ t), h(s) ^ h(t));
        prop_assert!(k == 64 || h(s) >> k == 0);
    }

    #[test]
    fn field_multiplication_commutes_and_associates(bits in 1usize..=64, a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let f = Gf2n::new(bits).unwrap();
        let (a, b, c) = (a & f.mask(), b & f.mask(), c & f.mask());
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
    }
}

#[test]
fn optimizer_is_monotone_and_orders_objectives() {
    let j = DiscreteJoint::from_chain(&[0.4, 0.6], &bsc_matrix(0.15), &bsc_matrix(0.25)).unwrap();
    let opts = OptimizerOptions::default();
    let h = j.h_x_given_y();
    let (mut last_rec, mut last_wsk) = (0.0, 0.0);
    for i in 1..=10 {
        let r = h * i as f64 / 10.0;
        let rec = optimize_oneway(&j, r, Objective::Rec, &opts).unwrap().value;
        let wsk = optimize_oneway(&j, r, Objective::Wsk, &opts).unwrap().value;
        assert!(rec >= last_rec - 1e-6 && wsk >= last_wsk - 1e-6, "r1 = {r}");
        assert!(wsk <= rec + 1e-9);
        (last_rec, last_wsk) = (rec, wsk);
    }
}

#[test]
fn convexity_on_random_cascades() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (p, q) in [(0.05, 0.4), (0.3, 0.1), (0.2, 0.2)] {
        let j = DiscreteJoint::from_chain(&[0.3, 0.7], &bsc_matrix(p), &bsc_matrix(q)).unwrap();
        assert!(convexity_probe(&j, 300, &mut rng).unwrap().max_violation() <= 1e-10);
    }
}

#[test]
fn experiment_metrics_are_well_formed() {
    let j = DiscreteJoint::from_chain(&[0.5, 0.5], &bsc_matrix(0.1), &bsc_matrix(0.3)).unwrap();
    let tc = TwoWayChannels::one_way(TestChannel::identity(2), 2);
    let mut p = ProtocolParams::from_construction(&j, &tc, 10, 2, 3, 0.15).unwrap();
    p.trials = 300;
    p.decoder = Decoder::Likelihood;
    let m = run_experiment(&j, &tc, &p).unwrap();
    assert!((0.0..=1.0).contains(&m.p_e));
    assert!(m.p_e_ci.0 <= m.p_e && m.p_e <= m.p_e_ci.1);
    assert!(m.uniformity_est >= -1e-12 && m.uniformity_est <= 3.0);
    assert!(m.leakage_est >= 0.0 && m.leakage_bias >= 0.0);
    assert!(m.p_e <= m.recon_error_rate + 1e-12);
    assert_eq!(m, run_experiment(&j, &tc, &p).unwrap());
}

#[test]
fn under_rate_reconciliation_fails() {
    let j = DiscreteJoint::from_chain(&[0.5, 0.5], &bsc_matrix(0.1), &bsc_matrix(0.3)).unwrap();
    let tc = TwoWayChannels::one_way(TestChannel::identity(2), 2);
    let mut p = ProtocolParams::from_construction(&j, &tc, 12, 1, 1, 0.15).unwrap();
    p.decoder = Decoder::Likelihood;
    // bins far smaller than H(X|Y) leave Bob guessing among many candidates
    p.rates.r_u = 0.1;
    p.rates.r_u_prime = 0.9;
    let m = run_experiment(&j, &tc, &p).unwrap();
    assert!(m.recon_error_rate > 0.5, "{m:?}");
}
