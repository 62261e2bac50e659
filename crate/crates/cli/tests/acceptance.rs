//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use keydist::binary::{c_rec_bsc, c_wsk_bsc, counterexample_solve, AsymBinarySource, BscCascadeSource};
use keydist::channel::convexity_probe;
use keydist::gaussian::{
    c_rec_gauss, c_wsk_gauss, optimal_noise_variance, test_channel_rate, test_channel_utility, GaussianSource,
};
use keydist::joint::bsc_matrix;
use keydist::protocol::{
    collision_probability, leftover_bound, privacy_amplify, run_experiment, seeded_distance, Decoder, Gf2n,
    ProtocolParams,
};
use keydist::quantization::{bound_check, optimize_partitions};
use keydist::{optimize_oneway, DiscreteJoint, Objective, OptimizerOptions, TestChannel, TwoWayChannels};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn timed<F: FnOnce() -> Verdict>(limit: Option<Duration>, f: F) -> Verdict {
    let start = Instant::now();
    let mut v = f();
    let took = start.elapsed();
    v.detail = format!("{} [{:.2} s]", v.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            v.pass = false;
            v.detail = format!("{} exceeds {} s", v.detail, limit.as_secs());
        }
    }
    v
}

fn counterexample_gap() -> Verdict {
    let src = AsymBinarySource::reference();
    let rep = counterexample_solve(&src, src.h_x_given_y() / 3.0).unwrap();
    verdict(
        rep.c_wsk > 0.050 && rep.key_rate_at_rec_opt < 0.045 && rep.relative_loss > 0.10,
        format!(
            "C_WSK = {:.5}, key rate at reconciliation optimum = {:.5}, loss = {:.2}%",
            rep.c_wsk,
            rep.key_rate_at_rec_opt,
            100.0 * rep.relative_loss
        ),
    )
}

fn optimizer_agreement() -> Verdict {
    let fracs = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut cases = Vec::new();
    for p in [0.05, 0.1, 0.2, 0.3, 0.4] {
        for f in fracs {
            cases.push((p, 0.2, f));
        }
    }
    for p in [0.05, 0.15, 0.3] {
        for q in [0.1, 0.2, 0.35] {
            for f in fracs {
                cases.push((p, q, f));
            }
        }
    }
    let opts = OptimizerOptions::default();
    let worst = cases
        .par_iter()
        .map(|&(p, q, f)| {
            let src = BscCascadeSource::new(p, q).unwrap();
            let j = src.joint();
            let r1 = f * src.h_x_given_y();
            let rec = optimize_oneway(&j, r1, Objective::Rec, &opts).unwrap().value;
            let wsk = optimize_oneway(&j, r1, Objective::Wsk, &opts).unwrap().value;
            let d_rec = (rec - c_rec_bsc(&src, r1).unwrap()).abs();
            let d_wsk = (wsk - c_wsk_bsc(&src, r1).unwrap()).abs();
            d_rec.max(d_wsk)
        })
        .reduce(|| 0.0, f64::max);
    verdict(
        worst <= 1e-3,
        format!("{} cases, max |optimizer − closed form| = {worst:.2e}", cases.len()),
    )
}

fn gaussian_formulas() -> Verdict {
    let grid: Vec<f64> = (0..20)
        .map(|i| (0.01f64.ln() + i as f64 / 19.0 * (1000.0f64).ln()).exp())
        .collect();
    let mut ordered = true;
    let mut increasing = true;
    let mut worst_residual: f64 = 0.0;
    for rxy in [0.3, 0.5, 0.7, 0.8, 0.9] {
        for ryz in [0.2, 0.6] {
            let src = GaussianSource::degraded(rxy, ryz, 1.0).unwrap();
            let rec: Vec<f64> = grid.iter().map(|&r| c_rec_gauss(&src, r).unwrap()).collect();
            let wsk: Vec<f64> = grid.iter().map(|&r| c_wsk_gauss(&src, r).unwrap()).collect();
            ordered &= rec.iter().zip(&wsk).all(|(a, b)| b <= a);
            increasing &= rec.windows(2).all(|w| w[1] - w[0] > 0.0) && wsk.windows(2).all(|w| w[1] - w[0] > 0.0);
            for &r in &grid {
                let var_w = optimal_noise_variance(&src, r).unwrap();
                let rate_gap = (test_channel_rate(&src, var_w).unwrap() - r).abs();
                let util_gap = (test_channel_utility(&src, var_w).unwrap() - c_rec_gauss(&src, r).unwrap()).abs();
                worst_residual = worst_residual.max(rate_gap).max(util_gap);
            }
        }
    }
    verdict(
        ordered && increasing && worst_residual <= 1e-10,
        format!("wsk ≤ rec: {ordered}, strictly increasing: {increasing}, max residual of I(X;U|Y) = R1 and I(Y;U) = C_rec: {worst_residual:.1e}"),
    )
}

fn quantization_bound() -> Verdict {
    let src = GaussianSource::degraded(0.75, 0.0, 1.0).unwrap();
    let h = src.h_x_given_y();
    let grid: Vec<f64> = (1..=10).map(|i| h + 0.3 * i as f64).collect();
    let rep = bound_check(&src, &grid).unwrap();
    verdict(
        rep.within_bound && rep.slope <= -1.0,
        format!(
            "gap ≤ bound at all {} points: {}, log-linear slope = {:.3}",
            rep.points.len(),
            rep.within_bound,
            rep.slope
        ),
    )
}

fn partition_optimization() -> Verdict {
    let src = GaussianSource::degraded(0.75, 0.0, 1.0).unwrap();
    let res = optimize_partitions(&src, 15).unwrap();
    let mi: Vec<f64> = res.iter().map(|r| r.mi).collect();
    let increasing = mi.windows(2).all(|w| w[1] > w[0]) && res.len() == 14;
    let last = res.last().unwrap();
    let cap = c_rec_gauss(&src, last.implied_rate).unwrap();
    let rel = (cap - last.mi) / cap;
    verdict(
        increasing && rel <= 0.10,
        format!(
            "mi strictly increasing over L = 2..15: {increasing}; L = 15: mi = {:.4} nats at rate {:.3}, c_rec = {cap:.4} ({:.2}% below)",
            last.mi,
            last.implied_rate,
            100.0 * rel
        ),
    )
}

fn protocol_trend() -> Verdict {
    let j = DiscreteJoint::from_chain(&[0.5, 0.5], &bsc_matrix(0.1), &bsc_matrix(0.2)).unwrap();
    let tc = TwoWayChannels::one_way(TestChannel::identity(2), 2);
    let p_e: Vec<f64> = [8, 10, 12]
        .iter()
        .map(|&n| {
            let mut p = ProtocolParams::from_construction(&j, &tc, n, 1, 1, 0.15).unwrap();
            p.trials = 500;
            p.seed = 1;
            p.decoder = Decoder::Likelihood;
            run_experiment(&j, &tc, &p).unwrap().recon_error_rate
        })
        .collect();
    verdict(
        p_e[0] > p_e[1] && p_e[1] > p_e[2] && p_e[2] < 0.15,
        format!("P[ŝ ≠ s] at n = 8, 10, 12: {p_e:?}"),
    )
}

fn hash_properties() -> Verdict {
    let f = Gf2n::new(12).unwrap();
    // collisions depend only on s ⊕ s', so scanning every nonzero difference covers all pairs
    let worst_ratio = (1..=4usize)
        .flat_map(|k| (1..4096u64).map(move |d| (k, d)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(k, d)| collision_probability(&f, d, 0, k).unwrap() * (k as f64).exp2())
        .reduce(|| 0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let f16 = Gf2n::new(16).unwrap();
    let mut sampled_ratio: f64 = 0.0;
    for _ in 0..5 {
        let s = rng.random::<u64>() & f16.mask();
        let t = (s ^ (1 + rng.random_range(0..f16.mask()))) & f16.mask();
        let hits = (0..100_000)
            .filter(|_| {
                let y = rng.random::<u64>() & f16.mask();
                privacy_amplify(&f16, s, y, 4).unwrap() == privacy_amplify(&f16, t, y, 4).unwrap()
            })
            .count();
        sampled_ratio = sampled_ratio.max(hits as f64 / 100_000.0 * 16.0);
    }

    let mut worst_excess = f64::NEG_INFINITY;
    let mut exact_excess = f64::NEG_INFINITY;
    for h in [4usize, 6, 8, 10, 12] {
        let mut pool: Vec<u64> = (0..4096).collect();
        for i in 0..pool.len() {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        let support = &pool[..1 << h];
        for k in 1..=h.min(4) {
            let cells = 1usize << k;
            let mut mean = 0.0;
            for _ in 0..2000 {
                let y = rng.random::<u64>() & f.mask();
                let mut counts = vec![0usize; cells];
                for &s in support {
                    counts[privacy_amplify(&f, s, y, k).unwrap() as usize] += 1;
                }
                let tv: f64 = counts
                    .iter()
                    .map(|&c| (c as f64 / support.len() as f64 - 1.0 / cells as f64).abs())
                    .sum::<f64>()
                    / 2.0;
                mean += tv / 2000.0;
            }
            let bound = leftover_bound(h as f64, k);
            worst_excess = worst_excess.max(mean - bound);
            exact_excess = exact_excess.max(seeded_distance(&f, support, k).unwrap() - bound);
        }
    }
    verdict(
        worst_ratio <= 1.05 && sampled_ratio <= 1.05 && worst_excess <= 0.02 && exact_excess <= 0.0,
        format!(
            "max collision·2^k exhaustive at N = 12: {worst_ratio:.4}, sampled at N = 16: {sampled_ratio:.4}; \
             max (distance − leftover prediction): sampled {worst_excess:.4}, exact {exact_excess:.4}"
        ),
    )
}

fn convexity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..5 {
        let prior = rng.random_range(0.05..0.95);
        let a: f64 = rng.random_range(0.0..0.5);
        let b: f64 = rng.random_range(0.0..0.5);
        let c: f64 = rng.random_range(0.0..0.5);
        let d: f64 = rng.random_range(0.0..0.5);
        let y_given_x = vec![vec![1.0 - a, a], vec![b, 1.0 - b]];
        let z_given_y = vec![vec![1.0 - c, c], vec![d, 1.0 - d]];
        let j = DiscreteJoint::from_chain(&[1.0 - prior, prior], &y_given_x, &z_given_y).unwrap();
        worst = worst.max(convexity_probe(&j, 1000, &mut rng).unwrap().max_violation());
    }
    verdict(
        worst <= 1e-10,
        format!("5 degraded 2×2×2 joints × 1000 probes, max violation = {worst:.2e}"),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("source.toml");
    std::fs::write(&cfg, "[source]\nkind = \"bsc\"\np = 0.1\nq = 0.2\n").unwrap();
    let cfg = cfg.display().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["capacity", "bsc", "--p", "0.1", "--q", "0.2"],
        vec![
            "capacity",
            "bsc",
            "--p",
            "0.1",
            "--prior",
            "0.3",
            "--r1",
            "linear:0:0.4:3",
        ],
        vec!["capacity", "bec", "--p", "0.1", "--erasure", "0.3"],
        vec!["capacity", "gauss", "--rho-xy", "0.8", "--rho-yz", "0.4"],
        vec!["counterexample"],
        vec!["quantize"],
        vec!["quantize", "--mode", "partition-opt"],
        vec!["simulate", "--demo"],
        vec!["optimize", &cfg, "--objective", "wsk"],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_keydist"))
                .args(args)
                .args(["--seed", "7"])
                .output()
                .unwrap()
        };
        let (a, b) = (run(), run());
        if a.stdout != b.stdout || a.stdout.is_empty() || a.status.code() != b.status.code() {
            differing.push(args.join(" "));
        }
    }
    verdict(
        differing.is_empty(),
        format!(
            "{} commands run twice with --seed 7, differing: {differing:?}",
            commands.len()
        ),
    )
}

/// Name, time limit in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Verdict);

#[test]
fn acceptance() {
    let criteria: Vec<Criterion> = vec![
        ("counterexample reproduction", Some(5), counterexample_gap),
        ("closed-form / optimizer agreement", Some(120), optimizer_agreement),
        ("Gaussian formulas", None, gaussian_formulas),
        ("quantization bound", Some(60), quantization_bound),
        ("partition optimization", None, partition_optimization),
        ("protocol achievability trend", None, protocol_trend),
        ("privacy-amplification properties", None, hash_properties),
        ("convexity probe", None, convexity),
        ("determinism", None, determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let v = timed(limit.map(Duration::from_secs), run);
        println!(
            "{} {}. {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
        if !v.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
