//! Scalar quantization of `X` for a Gaussian pair `Y = X + N`.
//!
//! Integrals over `Y` run in the standardized coordinate `s = y/σ_y`, under
//! which `X | s ~ N(ρσ_x s, σ_x²(1 − ρ²))`. Everything is in nats.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{domain, Error, Result};
use crate::gaussian::GaussianSource;
use crate::info::ZERO_MASS;
use crate::quadrature::{integrate, Composite};

/// Half-width of the standardized `y` range integrated over.
const S_RANGE: f64 = 9.0;
const MI_TOL: f64 = 1e-9;

/// Largest number of cells a [`Partition`] may have.
pub const MAX_CELLS: usize = 15;

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `Φ(hi) − Φ(lo)` without cancellation in either tail.
fn normal_interval(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        0.5 * (erfc(lo / SQRT_2) - erfc(hi / SQRT_2))
    } else if hi <= 0.0 {
        0.5 * (erfc(-hi / SQRT_2) - erfc(-lo / SQRT_2))
    } else {
        1.0 - 0.5 * (erfc(-lo / SQRT_2) + erfc(hi / SQRT_2))
    }
}

/// Masses of the cells cut by `boundaries` under `N(mean, sd²)`.
fn cell_masses(boundaries: &[f64], mean: f64, sd: f64, out: &mut Vec<f64>) {
    out.clear();
    let mut lo = f64::NEG_INFINITY;
    for &b in boundaries.iter().chain(std::iter::once(&f64::INFINITY)) {
        let z_hi = (b - mean) / sd;
        out.push(normal_interval(lo, z_hi).max(0.0));
        lo = z_hi;
    }
}

fn entropy_nats(masses: &[f64]) -> f64 {
    -masses
        .iter()
        .filter(|&&m| m > ZERO_MASS)
        .map(|&m| m * m.ln())
        .sum::<f64>()
}

struct Geometry {
    rho: f64,
    sigma_x: f64,
    cond_sd: f64,
}

impl Geometry {
    fn new(src: &GaussianSource) -> Geometry {
        Geometry {
            rho: src.rho_xy,
            sigma_x: src.sigma_x,
            cond_sd: src.sigma_x * (1.0 - src.rho_xy * src.rho_xy).sqrt(),
        }
    }

    fn cond_mean(&self, s: f64) -> f64 {
        self.rho * self.sigma_x * s
    }
}

/// `I(Q(X); Y)` for the deterministic quantizer cutting at `boundaries`.
fn cells_mi(src: &GaussianSource, boundaries: &[f64]) -> f64 {
    let geo = Geometry::new(src);
    let mut buf = Vec::with_capacity(boundaries.len() + 1);
    cell_masses(boundaries, 0.0, geo.sigma_x, &mut buf);
    let h = entropy_nats(&buf);
    let cond = integrate(
        |s| {
            cell_masses(boundaries, geo.cond_mean(s), geo.cond_sd, &mut buf);
            normal_pdf(s) * entropy_nats(&buf)
        },
        -S_RANGE,
        S_RANGE,
        MI_TOL,
    );
    (h - cond).max(0.0)
}

/// Uniform scalar quantizer with cells `[(n−1)Δ, nΔ)` centred at `Δ/2 + (n−1)Δ`.
///
/// Cells beyond `±support_halfwidth` are merged into the two outer cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformQuantizer {
    pub delta: f64,
    pub support_halfwidth: f64,
}

impl UniformQuantizer {
    pub fn new(delta: f64, support_halfwidth: f64) -> Result<UniformQuantizer> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(domain(format!("cell width {delta} must be positive")));
        }
        if !(support_halfwidth.is_finite() && support_halfwidth > 0.0) {
            return Err(domain(format!(
                "support half-width {support_halfwidth} must be positive"
            )));
        }
        Ok(UniformQuantizer {
            delta,
            support_halfwidth,
        })
    }

    /// Support half-width `8σ_x`.
    pub fn for_source(src: &GaussianSource, delta: f64) -> Result<UniformQuantizer> {
        UniformQuantizer::new(delta, 8.0 * src.sigma_x)
    }

    fn last_index(&self) -> i64 {
        (self.support_halfwidth / self.delta).floor() as i64
    }

    /// Cell edges `nΔ` with `|nΔ| ≤ support_halfwidth` (always including 0).
    pub fn boundaries(&self) -> Vec<f64> {
        let k = self.last_index();
        (-k..=k).map(|n| n as f64 * self.delta).collect()
    }

    /// Centres `Δ/2 + (n−1)Δ` of the cells inside the support.
    pub fn centers(&self) -> Vec<f64> {
        let k = self.last_index();
        (-k + 1..=k)
            .map(|n| self.delta / 2.0 + (n - 1) as f64 * self.delta)
            .collect()
    }
}

/// `I(Q(X); Y)` with exact cell masses.
pub fn quantized_mi(src: &GaussianSource, q: &UniformQuantizer) -> Result<f64> {
    Ok(cells_mi(src, &q.boundaries()))
}

/// Outcome of the density-times-width construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannMi {
    pub mi: f64,
    /// `Σ p_X(t_n) Δ` before renormalization.
    pub normalization: f64,
}

/// `I(U;Y)` where `U` takes the masses `p_X(t_n)Δ` and `p_{X|Y}(t_n|y)Δ`,
/// each renormalized.
///
/// For smooth densities the midpoint sums are accurate far beyond `O(Δ²)`,
/// so the result tracks `I(X;Y)` down to quadrature noise.
pub fn riemann_quantized_mi(src: &GaussianSource, q: &UniformQuantizer) -> Result<RiemannMi> {
    let geo = Geometry::new(src);
    let centers = q.centers();
    let dens = |mean: f64, sd: f64, buf: &mut Vec<f64>| {
        buf.clear();
        buf.extend(centers.iter().map(|&t| normal_pdf((t - mean) / sd) / sd * q.delta));
        let z: f64 = buf.iter().sum();
        buf.iter_mut().for_each(|m| *m /= z);
        z
    };
    let mut buf = Vec::with_capacity(centers.len());
    let normalization = dens(0.0, geo.sigma_x, &mut buf);
    if (normalization - 1.0).abs() > 1e-6 {
        return Err(Error::Truncation(format!(
            "cell masses sum to {normalization}; widen the support or shrink the cell width"
        )));
    }
    let h = entropy_nats(&buf);
    let cond = integrate(
        |s| {
            dens(geo.cond_mean(s), geo.cond_sd, &mut buf);
            normal_pdf(s) * entropy_nats(&buf)
        },
        -S_RANGE,
        S_RANGE,
        MI_TOL,
    );
    Ok(RiemannMi {
        mi: h - cond,
        normalization,
    })
}

/// Constants of the exponential quantization-gap bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBoundConstants {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Closed-form upper bound on `K`.
    pub kappa: f64,
}

impl GapBoundConstants {
    pub fn new(src: &GaussianSource) -> Result<GapBoundConstants> {
        if !src.sigma_n.is_finite() {
            return Err(domain("the bound needs rho_xy != 0"));
        }
        let (sx, sn) = (src.sigma_x, src.sigma_n);
        let vx = sx * sx;
        let vn = sn * sn;
        let vy = vx + vn;
        let rt2pi = (2.0 * PI).sqrt();
        let alpha1 = 1.0 / (rt2pi * sx);
        let beta1 = ((1.0 / (rt2pi * sx)).ln() - 0.5).abs();
        let alpha2 = (vy - vx / (SQRT_2 * sn)).powi(2) / (rt2pi * vy * sn.powi(3));
        let beta2 = PI.sqrt() / 2.0 * alpha2
            + ((1.0 / (2.0 * SQRT_2 * sn)) * (vx / (2.0 * vn * vy) - (vy / (2.0 * PI * vn * vx)).ln())).abs();
        let kappa =
            ((rt2pi * sx).ln().abs() + 11.0 + 4.0 * beta2 + PI.sqrt() * alpha2 * (11.0 / (2.0 * vn).sqrt() - 2.0))
                / (24.0 * PI.sqrt() * vx);
        Ok(GapBoundConstants {
            alpha1,
            beta1,
            alpha2,
            beta2,
            alpha: alpha1 + alpha2,
            beta: beta1 + beta2,
            kappa,
        })
    }
}

/// `[αR1 + β]e^{−R1} + K√R1 e^{2(h(X|Y) − R1)}`.
pub fn gap_bound(src: &GaussianSource, r1: f64) -> Result<f64> {
    if !(r1.is_finite() && r1 > 0.0) {
        return Err(domain(format!("rate {r1} must be positive")));
    }
    let c = GapBoundConstants::new(src)?;
    let h = src.h_x_given_y();
    Ok((c.alpha * r1 + c.beta) * (-r1).exp() + c.kappa * r1.sqrt() * (2.0 * (h - r1)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub r1: f64,
    pub delta: f64,
    pub mi: f64,
    pub gap: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub points: Vec<BoundPoint>,
    /// Least-squares slope of `ln gap` against `R1`; NaN if some gap is not positive.
    pub slope: f64,
    pub within_bound: bool,
    pub decreasing: bool,
}

/// Measures the quantization gap at `Δ = e^{h(X|Y) − R1}` for each rate.
pub fn bound_check(src: &GaussianSource, r1_grid: &[f64]) -> Result<BoundReport> {
    let h = src.h_x_given_y();
    if let Some(r) = r1_grid.iter().find(|&&r| r.is_nan() || r <= h) {
        return Err(domain(format!("rate {r} must exceed h(X|Y) = {h}")));
    }
    let mi_true = src.mutual_information();
    let points = r1_grid
        .par_iter()
        .map(|&r1| {
            let delta = (h - r1).exp();
            let mi = quantized_mi(src, &UniformQuantizer::for_source(src, delta)?)?;
            Ok(BoundPoint {
                r1,
                delta,
                mi,
                gap: mi_true - mi,
                bound: gap_bound(src, r1)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let within_bound = points.iter().all(|p| p.gap <= p.bound);
    let decreasing = points.windows(2).all(|w| w[1].gap < w[0].gap);
    let slope = if points.len() >= 2 && points.iter().all(|p| p.gap > 0.0) {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.r1).sum::<f64>() / n;
        let my = points.iter().map(|p| p.gap.ln()).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.r1 - mx) * (p.gap.ln() - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.r1 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(BoundReport {
        points,
        slope,
        within_bound,
        decreasing,
    })
}

/// Interior cut points of a scalar quantizer with `L = boundaries.len() + 1` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Partition {
    boundaries: Vec<f64>,
}

impl Partition {
    pub fn new(boundaries: Vec<f64>) -> Result<Partition> {
        let cells = boundaries.len() + 1;
        if !(2..=MAX_CELLS).contains(&cells) {
            return Err(domain(format!("a partition needs 2 to {MAX_CELLS} cells, got {cells}")));
        }
        if boundaries.iter().any(|b| !b.is_finite()) || boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("boundaries must be finite and strictly increasing"));
        }
        Ok(Partition { boundaries })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn cells(&self) -> usize {
        self.boundaries.len() + 1
    }
}

impl TryFrom<Vec<f64>> for Partition {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Partition> {
        Partition::new(v)
    }
}

impl From<Partition> for Vec<f64> {
    fn from(p: Partition) -> Vec<f64> {
        p.boundaries
    }
}

/// `I(Q(X); Y)` for a partition, with exact cell masses.
pub fn partition_mi(src: &GaussianSource, partition: &Partition) -> f64 {
    cells_mi(src, partition.boundaries())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AscentStatus {
    /// Gradient norm fell below the tolerance.
    Converged,
    /// No step along the gradient improved the objective.
    Stalled,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub partition: Partition,
    /// `I(Q(X); Y)` in nats.
    pub mi: f64,
    /// `H(Q(X) | Y)` in nats.
    pub implied_rate: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: AscentStatus,
    /// Objective after each accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

const GRAD_TOL: f64 = 1e-7;
const MAX_ASCENT_ITERS: usize = 20_000;
const MIN_GAP: f64 = 1e-9;

/// Partition objective on a fixed quadrature grid, with its exact gradient.
struct Smooth {
    geo: Geometry,
    rule: Composite,
    pdf_s: Vec<f64>,
}

impl Smooth {
    fn new(src: &GaussianSource) -> Smooth {
        let rule = Composite::new(-S_RANGE, S_RANGE, 48);
        let pdf_s = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&s, &w)| w * normal_pdf(s))
            .collect();
        Smooth {
            geo: Geometry::new(src),
            rule,
            pdf_s,
        }
    }

    fn value(&self, b: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(b.len() + 1);
        cell_masses(b, 0.0, self.geo.sigma_x, &mut buf);
        let h = entropy_nats(&buf);
        let cond: f64 = self
            .rule
            .nodes
            .iter()
            .zip(&self.pdf_s)
            .map(|(&s, &w)| {
                cell_masses(b, self.geo.cond_mean(s), self.geo.cond_sd, &mut buf);
                w * entropy_nats(&buf)
            })
            .sum();
        h - cond
    }

    /// `d/db_k [H(P) − E H(q)] = p(b_k) ln(P_{k+1}/P_k) − E[p(b_k|s) ln(q_{k+1}/q_k)]`.
    fn gradient(&self, b: &[f64]) -> Vec<f64> {
        let term = |masses: &[f64], k: usize, density: f64| {
            let (lo, hi) = (masses[k], masses[k + 1]);
            if lo <= ZERO_MASS || hi <= ZERO_MASS {
                0.0
            } else {
                density * (hi / lo).ln()
            }
        };
        let mut buf = Vec::with_capacity(b.len() + 1);
        let sx = self.geo.sigma_x;
        cell_masses(b, 0.0, sx, &mut buf);
        let mut g: Vec<f64> = (0..b.len())
            .map(|k| term(&buf, k, normal_pdf(b[k] / sx) / sx))
            .collect();
        let sd = self.geo.cond_sd;
        for (&s, &w) in self.rule.nodes.iter().zip(&self.pdf_s) {
            let mean = self.geo.cond_mean(s);
            cell_masses(b, mean, sd, &mut buf);
            for (k, gk) in g.iter_mut().enumerate() {
                *gk -= w * term(&buf, k, normal_pdf((b[k] - mean) / sd) / sd);
            }
        }
        g
    }
}

fn ordered(b: &[f64]) -> bool {
    b.iter().all(|x| x.is_finite()) && b.windows(2).all(|w| w[1] - w[0] > MIN_GAP)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gradient ascent with Barzilai-Borwein trial steps and step halving.
fn ascend(obj: &Smooth, mut b: Vec<f64>) -> (Vec<f64>, usize, f64, AscentStatus, Vec<f64>) {
    let mut f = obj.value(&b);
    let mut g = obj.gradient(&b);
    let mut history = vec![f];
    let mut step = 1.0;
    let mut status = AscentStatus::MaxIters;
    let mut iters = 0;
    while iters < MAX_ASCENT_ITERS {
        if norm(&g) < GRAD_TOL {
            status = AscentStatus::Converged;
            break;
        }
        let mut t = step;
        let accepted = loop {
            let cand: Vec<f64> = b.iter().zip(&g).map(|(x, d)| x + t * d).collect();
            if ordered(&cand) {
                let fc = obj.value(&cand);
                if fc > f {
                    break Some((cand, fc));
                }
            }
            t *= 0.5;
            if t < 1e-20 {
                break None;
            }
        };
        let Some((nb, nf)) = accepted else {
            status = AscentStatus::Stalled;
            break;
        };
        debug_assert!(nf > f);
        let ng = obj.gradient(&nb);
        let s: Vec<f64> = nb.iter().zip(&b).map(|(x, y)| x - y).collect();
        let y: Vec<f64> = ng.iter().zip(&g).map(|(x, y)| x - y).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, c)| a * c).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        step = if sy.abs() > 0.0 {
            (ss / sy.abs()).min(1e6)
        } else {
            2.0 * t
        };
        b = nb;
        f = nf;
        g = ng;
        history.push(f);
        iters += 1;
    }
    let gn = norm(&g);
    (b, iters, gn, status, history)
}

/// Point splitting the `X`-mass of cell `k` in half.
fn split_point(b: &[f64], k: usize, sigma_x: f64) -> f64 {
    let cdf = |x: f64| normal_interval(f64::NEG_INFINITY, x / sigma_x);
    let lo = if k == 0 { f64::NEG_INFINITY } else { b[k - 1] };
    let hi = if k == b.len() { f64::INFINITY } else { b[k] };
    let target = 0.5 * (cdf(lo) + cdf(hi));
    let (mut a, mut c) = (lo.max(-40.0 * sigma_x), hi.min(40.0 * sigma_x));
    for _ in 0..200 {
        let m = 0.5 * (a + c);
        if cdf(m) < target {
            a = m;
        } else {
            c = m;
        }
    }
    0.5 * (a + c)
}

fn finish(
    src: &GaussianSource,
    b: Vec<f64>,
    iters: usize,
    gn: f64,
    status: AscentStatus,
    history: Vec<f64>,
) -> Result<PartitionResult> {
    let partition = Partition::new(b)?;
    let mi = partition_mi(src, &partition);
    let geo = Geometry::new(src);
    let mut buf = Vec::new();
    cell_masses(partition.boundaries(), 0.0, geo.sigma_x, &mut buf);
    let implied_rate = entropy_nats(&buf) - mi;
    Ok(PartitionResult {
        partition,
        mi,
        implied_rate,
        iterations: iters,
        grad_norm: gn,
        status,
        history,
    })
}

/// Optimized partitions for `L = 2..=l_max`, each warm-started from the
/// previous one with one extra cut.
pub fn optimize_partitions(src: &GaussianSource, l_max: usize) -> Result<Vec<PartitionResult>> {
    if !(2..=MAX_CELLS).contains(&l_max) {
        return Err(domain(format!("cell count {l_max} must lie in [2, {MAX_CELLS}]")));
    }
    let obj = Smooth::new(src);
    let sx = src.sigma_x;
    let mut out: Vec<PartitionResult> = Vec::with_capacity(l_max - 1);
    let mut b = vec![0.0];
    for _l in 2..=l_max {
        if let Some(prev) = out.last() {
            let pb = prev.partition.boundaries();
            let candidates: Vec<Vec<f64>> = (0..=pb.len())
                .map(|k| {
                    let mut nb = pb.to_vec();
                    nb.insert(k, split_point(pb, k, sx));
                    nb
                })
                .filter(|nb| ordered(nb))
                .collect();
            let mut best: Option<(f64, Vec<f64>)> = None;
            for c in candidates {
                let v = obj.value(&c);
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, c));
                }
            }
            b = best
                .ok_or_else(|| Error::Infeasible("no room for another cut".into()))?
                .1;
        }
        let (nb, iters, gn, status, history) = ascend(&obj, b.clone());
        out.push(finish(src, nb, iters, gn, status, history)?);
    }
    Ok(out)
}

/// Optimized `L`-cell partition maximizing `I(Q(X); Y)`.
pub fn optimize_partition(src: &GaussianSource, l: usize) -> Result<PartitionResult> {
    let mut all = optimize_partitions(src, l)?;
    Ok(all.pop().expect("at least one partition"))
}
