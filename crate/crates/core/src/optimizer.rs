//! Numerical solver for the one-way rate-limited capacities
//!
//! ```text
//! C(R1) = max_{p(u|x), |U| = |X|}  F(U)   subject to   I(X;U|Y) = R1
//! ```
//!
//! with `F = I(Y;U)` (reconciliation) or `F = I(Y;U) − I(Z;U)` (WSK).
//!
//! The search is a multistart projected coordinate ascent. Every iterate is
//! kept on the equality surface by a one-dimensional bisection: towards the
//! identity channel when the rate is too low (rate reaches `H(X|Y)` there) and
//! towards a constant channel when it is too high (rate is zero there). The
//! rate is convex in the channel, so both segments cross the surface exactly
//! once. Moves transfer mass between two entries of one row; each move is a
//! scan plus golden-section search over the admissible transfer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{FastEval, Objective, TestChannel};
use crate::error::{domain, Result};
use crate::info::Units;
use crate::joint::DiscreteJoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Number of random Dirichlet(1) starts.
    pub starts: usize,
    pub seed: u64,
    /// Allowed `|I(X;U|Y) − R1|` on the returned channel.
    pub tol: f64,
    /// Maximum number of coordinate sweeps per start.
    pub max_iters: usize,
    /// A start stops once a full sweep improves the objective by less than this.
    pub improvement_tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            starts: 32,
            seed: 0x5eed,
            tol: 1e-6,
            max_iters: 200,
            improvement_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub value: f64,
    pub units: Units,
    pub channel: TestChannel,
    /// `I(X;U|Y) − R1` on the returned channel.
    pub constraint_residual: f64,
    /// Rate at which the returned channel sits; differs from the request only
    /// for non-degraded WSK problems, where the inequality region is swept.
    pub rate_used: f64,
    pub method: String,
    pub status: Status,
}

const PROJ_TOL: f64 = 1e-12;
const SCAN_POINTS: usize = 10;
const GOLDEN_ITERS: usize = 60;

/// Maximizes the one-way objective on the equality surface `I(X;U|Y) = R1`.
pub fn optimize_oneway(
    j: &DiscreteJoint,
    r1: f64,
    objective: Objective,
    opts: &OptimizerOptions,
) -> Result<CapacityResult> {
    let h = j.h_x_given_y();
    if !r1.is_finite() || r1 < 0.0 {
        return Err(domain(format!("rate {r1} must be non-negative")));
    }
    if r1 > h + 1e-9 {
        return Err(domain(format!("rate {r1} exceeds H(X|Y) = {h}")));
    }
    let fe = FastEval::new(j);
    let dx = j.dims()[0];

    if h <= PROJ_TOL || r1 >= h - PROJ_TOL {
        // Saturated: U = X is feasible and maximizes both objectives.
        let id = TestChannel::identity(dx);
        let (value, rate) = fe.objective(id.rows(), objective);
        return Ok(CapacityResult {
            value,
            units: Units::Bits,
            channel: id,
            constraint_residual: rate - r1,
            rate_used: rate,
            method: "saturated identity channel".into(),
            status: Status::Converged,
        });
    }
    if r1 == 0.0 {
        let c = TestChannel::constant(dx, vec![1.0; 1].into_iter().chain(vec![0.0; dx - 1]).collect())?;
        return Ok(CapacityResult {
            value: 0.0,
            units: Units::Bits,
            channel: c,
            constraint_residual: 0.0,
            rate_used: 0.0,
            method: "zero rate".into(),
            status: Status::Converged,
        });
    }

    if objective == Objective::Wsk && !j.is_degraded() {
        // Equality is only known to be optimal for degraded sources: sweep R1' ≤ R1.
        let mut best: Option<CapacityResult> = None;
        for k in 1..=8 {
            let r = r1 * k as f64 / 8.0;
            let res = multistart(&fe, dx, r, objective, opts);
            if best.as_ref().is_none_or(|b| res.value > b.value) {
                best = Some(res);
            }
        }
        let mut best = best.expect("eight sweep points");
        best.constraint_residual = best.rate_used - r1;
        best.method = format!("{} over R1' <= R1 (non-degraded source)", best.method);
        return Ok(best);
    }
    Ok(multistart(&fe, dx, r1, objective, opts))
}

fn multistart(fe: &FastEval, dx: usize, r1: f64, objective: Objective, opts: &OptimizerOptions) -> CapacityResult {
    let runs: Vec<(f64, Vec<Vec<f64>>, f64, bool)> = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|branch| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(branch as u64);
            let start = TestChannel::random(dx, dx, &mut rng);
            let mut search = Search { fe, r1, objective };
            search.run(start.rows().to_vec(), opts)
        })
        .collect();
    // Ordered reduction: strict improvement keeps the lowest branch on ties.
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.0 > runs[best].0 {
            best = i;
        }
    }
    let (value, rows, rate, converged) = runs.into_iter().nth(best).expect("at least one start");
    CapacityResult {
        value,
        units: Units::Bits,
        channel: TestChannel::from_rows_unchecked(rows),
        constraint_residual: rate - r1,
        rate_used: rate,
        method: format!("multistart projected coordinate ascent ({} starts)", opts.starts.max(1)),
        status: if converged && (rate - r1).abs() <= opts.tol {
            Status::Converged
        } else {
            Status::MaxIters
        },
    }
}

struct Search<'a> {
    fe: &'a FastEval,
    r1: f64,
    objective: Objective,
}

impl Search<'_> {
    fn rate(&self, w: &[Vec<f64>]) -> f64 {
        self.fe.eval(w).2
    }

    /// Moves `w` onto the surface `rate = r1`.
    fn project(&self, w: &mut [Vec<f64>]) {
        let r = self.rate(w);
        if (r - self.r1).abs() <= PROJ_TOL {
            return;
        }
        let dx = w.len();
        let (from, to): (Vec<Vec<f64>>, Vec<Vec<f64>>) = if r < self.r1 {
            let id = TestChannel::identity(dx).rows().to_vec();
            (w.to_vec(), id)
        } else {
            // Constant channel with the current output marginal; rate 0.
            let du = w[0].len();
            let px = self.fe.px();
            let mut row = vec![0.0; du];
            for (x, wr) in w.iter().enumerate() {
                for (o, v) in row.iter_mut().zip(wr) {
                    *o += px[x] * v;
                }
            }
            (vec![row; dx], w.to_vec())
        };
        // rate(from) < r1 <= rate(to)
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut buf = w.to_vec();
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            blend(&from, &to, mid, &mut buf);
            let rm = self.rate(&buf);
            if (rm - self.r1).abs() <= PROJ_TOL {
                lo = mid;
                hi = mid;
                break;
            }
            if rm < self.r1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        blend(&from, &to, 0.5 * (lo + hi), &mut buf);
        w.clone_from_slice(&buf);
    }

    fn value(&self, w: &[Vec<f64>]) -> f64 {
        self.fe.objective(w, self.objective).0
    }

    /// Objective after transferring `t` of mass from `w[x][b]` to `w[x][a]`
    /// and reprojecting. Returns the projected channel too.
    fn moved(&self, w: &[Vec<f64>], x: usize, a: usize, b: usize, t: f64, buf: &mut Vec<Vec<f64>>) -> f64 {
        buf.clear();
        buf.extend(w.iter().cloned());
        buf[x][a] = (buf[x][a] + t).clamp(0.0, 1.0);
        buf[x][b] = (buf[x][b] - t).clamp(0.0, 1.0);
        let s: f64 = buf[x].iter().sum();
        buf[x].iter_mut().for_each(|v| *v /= s);
        self.project(buf);
        self.value(buf)
    }

    fn run(&mut self, mut w: Vec<Vec<f64>>, opts: &OptimizerOptions) -> (f64, Vec<Vec<f64>>, f64, bool) {
        self.project(&mut w);
        let mut current = self.value(&w);
        let dx = w.len();
        let du = w[0].len();
        let mut buf = Vec::with_capacity(dx);
        let mut converged = false;
        for _ in 0..opts.max_iters {
            let sweep_start = current;
            for x in 0..dx {
                for a in 0..du {
                    for b in (a + 1)..du {
                        let lo = -w[x][a];
                        let hi = w[x][b];
                        if hi - lo <= 1e-15 {
                            continue;
                        }
                        let (t, v) = self.line_search(&w, x, a, b, lo, hi, &mut buf);
                        if v > current {
                            self.moved(&w, x, a, b, t, &mut buf);
                            w.clone_from(&buf);
                            current = self.value(&w);
                        }
                    }
                }
            }
            if current - sweep_start < opts.improvement_tol {
                converged = true;
                break;
            }
        }
        let rate = self.rate(&w);
        (current, w, rate, converged)
    }

    #[allow(clippy::too_many_arguments)]
    fn line_search(
        &self,
        w: &[Vec<f64>],
        x: usize,
        a: usize,
        b: usize,
        lo: f64,
        hi: f64,
        buf: &mut Vec<Vec<f64>>,
    ) -> (f64, f64) {
        let mut f = |t: f64| self.moved(w, x, a, b, t, buf);
        let step = (hi - lo) / SCAN_POINTS as f64;
        let mut best_t = 0.0;
        let mut best_v = f(0.0);
        let mut best_i = None;
        for i in 0..=SCAN_POINTS {
            let t = lo + step * i as f64;
            let v = f(t);
            if v > best_v {
                best_v = v;
                best_t = t;
                best_i = Some(i);
            }
        }
        // Golden-section refinement around the best scan point (or around 0).
        let centre = best_i.map_or(0.0, |_| best_t);
        let mut l = (centre - step).max(lo);
        let mut r = (centre + step).min(hi);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = r - g * (r - l);
        let mut d = l + g * (r - l);
        let mut fc = f(c);
        let mut fd = f(d);
        for _ in 0..GOLDEN_ITERS {
            if r - l <= 1e-13 {
                break;
            }
            if fc >= fd {
                r = d;
                d = c;
                fd = fc;
                c = r - g * (r - l);
                fc = f(c);
            } else {
                l = c;
                c = d;
                fc = fd;
                d = l + g * (r - l);
                fd = f(d);
            }
        }
        for (t, v) in [(c, fc), (d, fd)] {
            if v > best_v {
                best_v = v;
                best_t = t;
            }
        }
        (best_t, best_v)
    }
}

fn blend(from: &[Vec<f64>], to: &[Vec<f64>], s: f64, out: &mut [Vec<f64>]) {
    for ((o, a), b) in out.iter_mut().zip(from).zip(to) {
        for ((ov, av), bv) in o.iter_mut().zip(a).zip(b) {
            *ov = (1.0 - s) * av + s * bv;
        }
    }
}
