use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use keydist::binary::{
    beta0_solve, c_rec_bsc, c_wsk_bec, c_wsk_bsc, counterexample_solve, AsymBinarySource, BscCascadeSource,
};
use keydist::gaussian::{c_rec_gauss, c_wsk_gauss, c_wsk_gauss_extrapolated, sigma0, GaussianSource};
use keydist::optimizer::Status;
use keydist::protocol::run_experiment;
use keydist::quantization::{bound_check, optimize_partitions, AscentStatus};
use keydist::{optimize_oneway, Objective, Prob, Units};

use crate::args::*;
use crate::config::Config;
use crate::error::{exit, CliError, CliResult};
use crate::output::{Column, OutputRecord, Table, Unit};
use crate::sweep::{Grid, SweepSpec};

/// What a command produced, and the exit status to report after writing it.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Table(Table),
    Records(Vec<OutputRecord>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: Output,
    pub status: i32,
}

impl Outcome {
    fn ok(output: Output) -> Outcome {
        Outcome {
            output,
            status: exit::OK,
        }
    }
}

fn table(columns: &[(&str, Unit)], rows: Vec<Vec<f64>>) -> Table {
    let mut t = Table::new(columns.iter().map(|&(n, u)| Column::new(n, u)).collect());
    for r in rows {
        t.push(r);
    }
    t
}

fn sweep_rows<F>(spec: &SweepSpec, f: F) -> CliResult<Vec<Vec<f64>>>
where
    F: Fn(f64) -> CliResult<Vec<f64>> + Send + Sync,
{
    spec.values()?.into_par_iter().map(f).collect()
}

pub fn capacity_bsc(a: &BscArgs) -> CliResult<Table> {
    let src = BscCascadeSource::new(a.p, a.q)?.with_prior(a.prior)?;
    let uniform = a.prior == 0.5;
    let h = src.h_x_given_y();
    let spec = SweepSpec::new("r1", a.r1)
        .with("p", a.p)
        .with("q", a.q)
        .with("prior", a.prior);
    let rows = sweep_rows(&spec, |r| {
        let mut row = vec![r, c_rec_bsc(&src, r)?, c_wsk_bsc(&src, r)?];
        if uniform {
            row.push(if r <= 0.0 {
                0.5
            } else if r >= h {
                0.0
            } else {
                beta0_solve(src.p, r)?.0.get()
            });
        }
        Ok(row)
    })?;
    let mut cols = vec![("r1", Unit::Bits), ("c_rec", Unit::Bits), ("c_wsk", Unit::Bits)];
    if uniform {
        cols.push(("beta0", Unit::Prob));
    }
    Ok(table(&cols, rows))
}

pub fn capacity_bec(a: &BecArgs) -> CliResult<Table> {
    let src = BscCascadeSource::new(a.p, 0.0)?;
    let e = Prob::new(a.erasure)?;
    let spec = SweepSpec::new("r1", a.r1).with("p", a.p).with("erasure", a.erasure);
    let rows = sweep_rows(&spec, |r| Ok(vec![r, c_rec_bsc(&src, r)?, c_wsk_bec(&src, e, r)?]))?;
    Ok(table(
        &[("r1", Unit::Bits), ("c_rec", Unit::Bits), ("c_wsk", Unit::Bits)],
        rows,
    ))
}

pub fn capacity_gauss(a: &GaussArgs) -> CliResult<Table> {
    let rho_xz = a.rho_xz.unwrap_or(a.rho_xy * a.rho_yz);
    let src = GaussianSource::new(a.rho_xy, rho_xz, a.rho_yz, a.sigma_x)?;
    if !src.is_degraded() && !a.extrapolate {
        return Err(CliError::Param(format!(
            "rho_xz = {rho_xz} differs from rho_xy·rho_yz = {}; pass --extrapolate to evaluate anyway",
            a.rho_xy * a.rho_yz
        )));
    }
    let spec = SweepSpec::new("r1", a.r1)
        .with("rho_xy", a.rho_xy)
        .with("rho_xz", rho_xz)
        .with("rho_yz", a.rho_yz);
    let rows = sweep_rows(&spec, |r| {
        let rec = c_rec_gauss(&src, r)?;
        let wsk = if a.extrapolate {
            c_wsk_gauss_extrapolated(&src, r)?
        } else {
            c_wsk_gauss(&src, r)?
        };
        let s0 = if r > 0.0 { sigma0(&src, r)? } else { f64::INFINITY };
        let to_bits = |v| Units::Nats.convert(v, Units::Bits);
        Ok(vec![r, rec, wsk, s0, to_bits(rec), to_bits(wsk)])
    })?;
    Ok(table(
        &[
            ("r1", Unit::Nats),
            ("c_rec", Unit::Nats),
            ("c_wsk", Unit::Nats),
            ("sigma0", Unit::Amplitude),
            ("c_rec", Unit::Bits),
            ("c_wsk", Unit::Bits),
        ],
        rows,
    ))
}

pub fn counterexample(a: &CounterexampleArgs) -> CliResult<Outcome> {
    let d = AsymBinarySource::reference();
    let src = AsymBinarySource::new(
        a.p.unwrap_or(d.p.get()),
        a.beta1.unwrap_or(d.beta1.get()),
        a.beta2.unwrap_or(d.beta2.get()),
        a.gamma1.unwrap_or(d.gamma1.get()),
        a.gamma2.unwrap_or(d.gamma2.get()),
    )?;
    let r1 = a.r1.unwrap_or(src.h_x_given_y() / 3.0);
    let rep = counterexample_solve(&src, r1)?;
    let mut rec = OutputRecord::new("counterexample", None, json!({ "source": src, "r1": r1 }));
    rec.push("r1", rep.r1, Unit::Bits);
    rec.push("h_x_given_y", rep.h_x_given_y, Unit::Bits);
    rec.push("c_wsk", rep.c_wsk, Unit::Bits);
    rec.push("key_rate_at_rec_opt", rep.key_rate_at_rec_opt, Unit::Bits);
    rec.push("c_rec", rep.c_rec, Unit::Bits);
    rec.push("relative_loss", rep.relative_loss, Unit::Ratio);
    rec.push("wsk_alpha1", rep.wsk_pair.alpha1.get(), Unit::Prob);
    rec.push("wsk_alpha2", rep.wsk_pair.alpha2.get(), Unit::Prob);
    rec.push("rec_alpha1", rep.rec_pair.alpha1.get(), Unit::Prob);
    rec.push("rec_alpha2", rep.rec_pair.alpha2.get(), Unit::Prob);
    rec.push("wsk_residual", rep.wsk_residual, Unit::Bits);
    rec.push("rec_residual", rep.rec_residual, Unit::Bits);
    rec.flag("gap_confirmed", rep.gap_confirmed);
    Ok(Outcome {
        output: Output::Records(vec![rec]),
        status: if rep.gap_confirmed { exit::OK } else { exit::NO_GAP },
    })
}

pub fn quantize(a: &QuantizeArgs) -> CliResult<Outcome> {
    let src = GaussianSource::degraded(a.rho_xy, 0.0, a.sigma_x)?;
    match a.mode {
        QuantizeMode::UniformSweep => {
            let grid = match a.r1 {
                Some(g) => g,
                None => {
                    let h = src.h_x_given_y();
                    Grid::new(crate::sweep::Scale::Linear, h + 0.3, h + 3.0, 10)?
                }
            };
            let rep = bound_check(&src, &grid.values())?;
            let rows = rep
                .points
                .iter()
                .map(|p| vec![p.r1, p.delta, p.mi, p.gap, p.bound])
                .collect();
            Ok(Outcome::ok(Output::Table(table(
                &[
                    ("r1", Unit::Nats),
                    ("delta", Unit::Amplitude),
                    ("mi", Unit::Nats),
                    ("gap", Unit::Nats),
                    ("bound", Unit::Nats),
                ],
                rows,
            ))))
        }
        QuantizeMode::PartitionOpt => {
            let results = optimize_partitions(&src, a.l_max)?;
            let mut rows = Vec::with_capacity(results.len());
            for r in &results {
                rows.push(vec![
                    r.partition.cells() as f64,
                    r.mi,
                    r.implied_rate,
                    c_rec_gauss(&src, r.implied_rate)?,
                ]);
            }
            let stuck = results.iter().any(|r| r.status == AscentStatus::MaxIters);
            Ok(Outcome {
                output: Output::Table(table(
                    &[
                        ("cells", Unit::Count),
                        ("mi", Unit::Nats),
                        ("implied_rate", Unit::Nats),
                        ("c_rec", Unit::Nats),
                    ],
                    rows,
                )),
                status: if stuck { exit::NON_CONVERGENCE } else { exit::OK },
            })
        }
    }
}

fn read_config(path: &std::path::Path) -> CliResult<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Config::parse(&text)
}

pub fn simulate(a: &SimulateArgs, seed: Option<u64>) -> CliResult<Outcome> {
    let mut cfg = match &a.config {
        Some(p) => read_config(p)?,
        None => Config::demo(),
    };
    if let Some(pc) = cfg.protocol.as_mut() {
        if let Some(s) = seed {
            pc.seed = s;
        }
        if let Some(t) = a.trials {
            pc.trials = t;
        }
    }
    let (j, tc, params) = cfg.experiment()?;
    let m = run_experiment(&j, &tc, &params)?;
    let mut rec = OutputRecord::new(
        "simulate",
        Some(params.seed),
        serde_json::to_value(&cfg).expect("config serializes"),
    );
    let r = &params.rates;
    rec.push("p_e", m.p_e, Unit::Prob);
    rec.push("p_e_ci_low", m.p_e_ci.0, Unit::Prob);
    rec.push("p_e_ci_high", m.p_e_ci.1, Unit::Prob);
    rec.push("block_error_rate", m.block_error_rate, Unit::Prob);
    rec.push("recon_error_rate", m.recon_error_rate, Unit::Prob);
    rec.push("encode_failure_rate", m.encode_failure_rate, Unit::Prob);
    rec.push("decode_failure_rate", m.decode_failure_rate, Unit::Prob);
    rec.push("uniformity_est", m.uniformity_est, Unit::Bits);
    rec.push("leakage_est", m.leakage_est, Unit::Bits);
    rec.push("leakage_bias", m.leakage_bias, Unit::Bits);
    rec.push("leakage_corrected", m.leakage_corrected(), Unit::Bits);
    rec.push("r_u", r.r_u, Unit::Bits);
    rec.push("r_u_prime", r.r_u_prime, Unit::Bits);
    rec.push("r_v", r.r_v, Unit::Bits);
    rec.push("r_v_prime", r.r_v_prime, Unit::Bits);
    rec.push("u_bins", m.sizes.u_bins as f64, Unit::Count);
    rec.push("u_bin_size", m.sizes.u_bin_size as f64, Unit::Count);
    rec.push("v_bins", m.sizes.v_bins as f64, Unit::Count);
    rec.push("v_bin_size", m.sizes.v_bin_size as f64, Unit::Count);
    rec.push("field_bits", m.field_bits as f64, Unit::Count);
    rec.push("key_bits", m.k as f64, Unit::Bits);
    rec.push("trials", m.trials as f64, Unit::Count);
    rec.flag("high_error", m.high_error);
    Ok(Outcome::ok(Output::Records(vec![rec])))
}

pub fn optimize(a: &OptimizeArgs, seed: Option<u64>) -> CliResult<Outcome> {
    let cfg = read_config(&a.config)?;
    let j = cfg.source.joint()?;
    let opts = cfg
        .optimizer
        .clone()
        .unwrap_or_default()
        .options(seed.unwrap_or(keydist::OptimizerOptions::default().seed))?;
    let objective = match a.objective {
        ObjectiveArg::Rec => Objective::Rec,
        ObjectiveArg::Wsk => Objective::Wsk,
    };
    let h = j.h_x_given_y();
    let spec = SweepSpec::new("r1", a.r1);
    let results = spec
        .values()?
        .into_par_iter()
        .map(|r| {
            if r < 0.0 {
                return Err(CliError::Param(format!("rate {r} must be non-negative")));
            }
            Ok(optimize_oneway(&j, r.min(h), objective, &opts)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let stuck = results.iter().any(|r| r.status == Status::MaxIters);
    let rows = spec
        .values()?
        .iter()
        .zip(&results)
        .map(|(&r, c)| vec![r, c.value, c.constraint_residual, c.rate_used])
        .collect();
    Ok(Outcome {
        output: Output::Table(table(
            &[
                ("r1", Unit::Bits),
                ("value", Unit::Bits),
                ("residual", Unit::Bits),
                ("rate_used", Unit::Bits),
            ],
            rows,
        )),
        status: if stuck { exit::NON_CONVERGENCE } else { exit::OK },
    })
}

/// Runs a parsed command line, writing its output to `out`.
pub fn execute<W: std::io::Write>(cli: &Cli, out: W) -> CliResult<i32> {
    let start = Instant::now();
    let run = || -> CliResult<Outcome> {
        match &cli.command {
            Command::Capacity(CapacityCmd::Bsc(a)) => capacity_bsc(a).map(|t| Outcome::ok(Output::Table(t))),
            Command::Capacity(CapacityCmd::Bec(a)) => capacity_bec(a).map(|t| Outcome::ok(Output::Table(t))),
            Command::Capacity(CapacityCmd::Gauss(a)) => capacity_gauss(a).map(|t| Outcome::ok(Output::Table(t))),
            Command::Counterexample(a) => counterexample(a),
            Command::Quantize(a) => quantize(a),
            Command::Simulate(a) => simulate(a, cli.seed),
            Command::Optimize(a) => optimize(a, cli.seed),
        }
    };
    let outcome = match cli.jobs {
        Some(0) => return Err(CliError::Param("--jobs must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Param(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let elapsed = start.elapsed().as_secs_f64();
    match outcome.output {
        Output::Table(t) => {
            t.write_csv(out)?;
            if cli.timing {
                eprintln!("wall time: {elapsed:.3} s");
            }
        }
        Output::Records(mut recs) => {
            if cli.timing {
                for r in &mut recs {
                    r.wall_time_s = Some(elapsed);
                }
            }
            crate::output::write_records(out, &recs)?;
        }
    }
    Ok(outcome.status)
}
