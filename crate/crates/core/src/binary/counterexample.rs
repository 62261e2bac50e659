use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::info::{hb, Prob};
use crate::joint::DiscreteJoint;

/// Binary degraded source with asymmetric links.
///
/// `P[X=1] = p`, `P[Y=1|X=0] = β₁`, `P[Y=0|X=1] = β₂`, `P[Z=1|Y=0] = γ₁`,
/// `P[Z=0|Y=1] = γ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymBinarySource {
    pub p: Prob,
    pub beta1: Prob,
    pub beta2: Prob,
    pub gamma1: Prob,
    pub gamma2: Prob,
}

impl AsymBinarySource {
    pub fn new(p: f64, beta1: f64, beta2: f64, gamma1: f64, gamma2: f64) -> Result<AsymBinarySource> {
        Ok(AsymBinarySource {
            p: Prob::new(p)?,
            beta1: Prob::new(beta1)?,
            beta2: Prob::new(beta2)?,
            gamma1: Prob::new(gamma1)?,
            gamma2: Prob::new(gamma2)?,
        })
    }

    /// The source on which the gap shows up: `p = 0.23`, `β = (0.01, 0.03)`, `γ = (0.03, 0.01)`.
    pub fn reference() -> AsymBinarySource {
        AsymBinarySource::new(0.23, 0.01, 0.03, 0.03, 0.01).expect("valid constants")
    }

    /// `P[Y = 0]`
    pub fn p_y(&self) -> f64 {
        let (p, b1, b2) = (self.p.get(), self.beta1.get(), self.beta2.get());
        (1.0 - p) * (1.0 - b1) + p * b2
    }

    /// `P[Z = 0]`
    pub fn p_z(&self) -> f64 {
        let py = self.p_y();
        py * (1.0 - self.gamma1.get()) + (1.0 - py) * self.gamma2.get()
    }

    /// `H(X|Y)` in bits.
    pub fn h_x_given_y(&self) -> f64 {
        let p = self.p.get();
        hb(p) + (1.0 - p) * hb(self.beta1.get()) + p * hb(self.beta2.get()) - hb(self.p_y())
    }

    pub fn joint(&self) -> DiscreteJoint {
        let p = self.p.get();
        let (b1, b2) = (self.beta1.get(), self.beta2.get());
        let (g1, g2) = (self.gamma1.get(), self.gamma2.get());
        let y_given_x = vec![vec![1.0 - b1, b1], vec![b2, 1.0 - b2]];
        let z_given_y = vec![vec![1.0 - g1, g1], vec![g2, 1.0 - g2]];
        DiscreteJoint::from_chain(&[1.0 - p, p], &y_given_x, &z_given_y).expect("valid binary chain")
    }
}

/// Posterior parametrization of a binary test channel.
///
/// `α₁ = P[X=1|U=u₁]` and `α₂ = P[X=0|U=u₂]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaPair {
    pub alpha1: Prob,
    pub alpha2: Prob,
}

impl AlphaPair {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<AlphaPair> {
        Ok(AlphaPair {
            alpha1: Prob::new(alpha1)?,
            alpha2: Prob::new(alpha2)?,
        })
    }

    /// `P[U = u₁]` for the given input prior, if it lies in `[0, 1]`.
    pub fn p_u(&self, p: Prob) -> Option<f64> {
        p_u(p.get(), self.alpha1.get(), self.alpha2.get())
    }
}

fn p_u(p: f64, a1: f64, a2: f64) -> Option<f64> {
    let den = 1.0 - a2 - a1;
    if den.abs() < 1e-15 {
        return None;
    }
    let pu = (1.0 - a2 - p) / den;
    if (-1e-12..=1.0 + 1e-12).contains(&pu) {
        Some(pu.clamp(0.0, 1.0))
    } else {
        None
    }
}

/// `f = I(Y;U)`, `g = I(Z;U)`, `h = I(X;U)` in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fgh {
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

impl Fgh {
    /// `h − f = I(X;U|Y)`
    pub fn rate(&self) -> f64 {
        self.h - self.f
    }

    pub fn key_rate(&self) -> f64 {
        self.f - self.g
    }
}

struct Params {
    p: f64,
    b1: f64,
    b2: f64,
    g1: f64,
    g2: f64,
    hb_py: f64,
    hb_pz: f64,
    hb_p: f64,
}

impl Params {
    fn new(src: &AsymBinarySource) -> Params {
        Params {
            p: src.p.get(),
            b1: src.beta1.get(),
            b2: src.beta2.get(),
            g1: src.gamma1.get(),
            g2: src.gamma2.get(),
            hb_py: hb(src.p_y()),
            hb_pz: hb(src.p_z()),
            hb_p: hb(src.p.get()),
        }
    }

    fn fgh(&self, a1: f64, a2: f64) -> Option<Fgh> {
        let pu = p_u(self.p, a1, a2)?;
        let (b1, b2, g1, g2) = (self.b1, self.b2, self.g1, self.g2);
        let (na1, na2, nb1, nb2, ng1) = (1.0 - a1, 1.0 - a2, 1.0 - b1, 1.0 - b2, 1.0 - g1);
        let a = a1 * b2 + na1 * nb1;
        let b = a2 * nb1 + na2 * b2;
        let c = na1 * nb1 * ng1 + na1 * b1 * g2 + a1 * b2 * ng1 + a1 * nb2 * g2;
        let d = na2 * nb2 * g2 + na2 * b2 * ng1 + a2 * nb1 * ng1 + a2 * b1 * g2;
        let npu = 1.0 - pu;
        Some(Fgh {
            f: self.hb_py - pu * hb(a) - npu * hb(b),
            g: self.hb_pz - pu * hb(c) - npu * hb(d),
            h: self.hb_p - pu * hb(a1) - npu * hb(a2),
        })
    }
}

/// Evaluates `(f, g, h)` for a test channel given by its posteriors.
pub fn counterexample_fgh(src: &AsymBinarySource, ap: AlphaPair) -> Result<Fgh> {
    Params::new(src).fgh(ap.alpha1.get(), ap.alpha2.get()).ok_or_else(|| {
        Error::Infeasible(format!(
            "alpha pair ({}, {}) induces no valid P[U=u1] for p = {}",
            ap.alpha1.get(),
            ap.alpha2.get(),
            src.p.get()
        ))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub source: AsymBinarySource,
    pub r1: f64,
    pub h_x_given_y: f64,
    /// `max (f − g)` on the constraint curve.
    pub c_wsk: f64,
    pub wsk_pair: AlphaPair,
    pub wsk_residual: f64,
    /// `max f` on the constraint curve.
    pub c_rec: f64,
    pub rec_pair: AlphaPair,
    pub rec_residual: f64,
    /// `f − g` at the reconciliation-optimal pair.
    pub key_rate_at_rec_opt: f64,
    /// `(c_wsk − key_rate_at_rec_opt) / c_wsk`
    pub relative_loss: f64,
    pub gap_confirmed: bool,
}

/// Relative loss below this is treated as no gap.
pub const GAP_TOL: f64 = 1e-4;

const ALPHA1_GRID: usize = 2000;
const ALPHA2_GRID: usize = 400;

#[derive(Clone, Copy)]
enum Target {
    Wsk,
    Rec,
}

impl Target {
    fn score(self, v: &Fgh) -> f64 {
        match self {
            Target::Wsk => v.key_rate(),
            Target::Rec => v.f,
        }
    }
}

#[derive(Clone, Copy)]
struct CurvePoint {
    a1: f64,
    a2: f64,
    value: Fgh,
}

struct Curve<'a> {
    par: &'a Params,
    r1: f64,
    a2_max: f64,
}

impl Curve<'_> {
    fn residual(&self, a1: f64, a2: f64) -> Option<f64> {
        self.par.fgh(a1, a2).map(|v| v.rate() - self.r1)
    }

    fn bisect(&self, a1: f64, mut lo: f64, mut hi: f64, rlo: f64) -> f64 {
        let lo_positive = rlo > 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let Some(r) = self.residual(a1, mid) else { break };
            if r == 0.0 {
                return mid;
            }
            if (r > 0.0) == lo_positive {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// All `α₂` crossings on `[lo, hi]` found by scanning `steps` cells.
    fn roots(&self, a1: f64, lo: f64, hi: f64, steps: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let at = |j: usize| lo + (hi - lo) * j as f64 / steps as f64;
        let mut prev: Option<(f64, f64)> = None;
        for j in 0..=steps {
            let a2 = at(j);
            let Some(r) = self.residual(a1, a2) else {
                prev = None;
                continue;
            };
            if r == 0.0 {
                out.push(a2);
                prev = None;
                continue;
            }
            if let Some((x0, r0)) = prev {
                if (r0 > 0.0) != (r > 0.0) {
                    out.push(self.bisect(a1, x0, a2, r0));
                }
            }
            prev = Some((a2, r));
        }
        out
    }

    fn point(&self, a1: f64, a2: f64) -> Option<CurvePoint> {
        self.par.fgh(a1, a2).map(|value| CurvePoint { a1, a2, value })
    }

    fn root_near(&self, a1: f64, guess: f64, width: f64) -> Option<CurvePoint> {
        let lo = (guess - width).max(0.0);
        let hi = (guess + width).min(self.a2_max);
        self.roots(a1, lo, hi, 64)
            .into_iter()
            .min_by(|x, y| (x - guess).abs().total_cmp(&(y - guess).abs()))
            .and_then(|a2| self.point(a1, a2))
    }

    /// Golden-section refinement of `target` along the branch through `seed`.
    fn refine(&self, target: Target, seed: CurvePoint, a1_lo: f64, a1_hi: f64) -> CurvePoint {
        let width = 4.0 * self.a2_max / ALPHA2_GRID as f64;
        let eval = |a1: f64| -> Option<CurvePoint> { self.root_near(a1, seed.a2, width) };
        let score = |c: &Option<CurvePoint>| c.map_or(f64::NEG_INFINITY, |c| target.score(&c.value));
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (a1_lo, a1_hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut pc = eval(c);
        let mut pd = eval(d);
        let mut best = seed;
        for _ in 0..100 {
            if b - a <= 1e-13 {
                break;
            }
            if score(&pc) >= score(&pd) {
                b = d;
                d = c;
                pd = pc;
                c = b - inv_phi * (b - a);
                pc = eval(c);
            } else {
                a = c;
                c = d;
                pc = pd;
                d = a + inv_phi * (b - a);
                pd = eval(d);
            }
        }
        for cand in [pc, pd, eval(a1_lo), eval(a1_hi)].into_iter().flatten() {
            if target.score(&cand.value) > target.score(&best.value) {
                best = cand;
            }
        }
        best
    }
}

/// Maximizes `f − g` and `f` along the curve `h − f = r1`.
///
/// The grid traces every crossing in `α₂` for each `α₁ ∈ [0, p]`; the best
/// grid point of each objective is then refined by golden section in `α₁`
/// with `α₂` kept on the curve by bisection.
pub fn counterexample_solve(src: &AsymBinarySource, r1: f64) -> Result<CounterexampleReport> {
    let hxy = src.h_x_given_y();
    if !(r1 > 0.0 && r1 < hxy) {
        return Err(domain(format!("rate {r1} must lie in (0, {hxy})")));
    }
    let par = Params::new(src);
    let p = par.p;
    let curve = Curve {
        par: &par,
        r1,
        a2_max: 1.0 - p,
    };
    let a1_at = |i: usize| p * i as f64 / ALPHA1_GRID as f64;

    type Best = Option<(usize, CurvePoint)>;
    let per_row: Vec<(Best, Best)> = (0..=ALPHA1_GRID)
        .into_par_iter()
        .map(|i| {
            let a1 = a1_at(i);
            let mut best_w: Option<CurvePoint> = None;
            let mut best_r: Option<CurvePoint> = None;
            for a2 in curve.roots(a1, 0.0, curve.a2_max, ALPHA2_GRID) {
                let Some(pt) = curve.point(a1, a2) else { continue };
                if best_w.is_none_or(|b| pt.value.key_rate() > b.value.key_rate()) {
                    best_w = Some(pt);
                }
                if best_r.is_none_or(|b| pt.value.f > b.value.f) {
                    best_r = Some(pt);
                }
            }
            (best_w.map(|b| (i, b)), best_r.map(|b| (i, b)))
        })
        .collect();

    let pick = |target: Target, sel: fn(&(Best, Best)) -> Best| {
        let mut best: Best = None;
        for row in &per_row {
            if let Some((i, pt)) = sel(row) {
                if best.is_none_or(|(_, b)| target.score(&pt.value) > target.score(&b.value)) {
                    best = Some((i, pt));
                }
            }
        }
        best
    };
    let grid_w = pick(Target::Wsk, |r| r.0);
    let grid_r = pick(Target::Rec, |r| r.1);
    let (Some((iw, pw)), Some((ir, pr))) = (grid_w, grid_r) else {
        return Err(Error::Infeasible(format!("no test channel meets rate {r1}")));
    };
    let bracket = |i: usize| (a1_at(i.saturating_sub(1)), a1_at((i + 1).min(ALPHA1_GRID)));
    let (lo, hi) = bracket(iw);
    let w = curve.refine(Target::Wsk, pw, lo, hi);
    let (lo, hi) = bracket(ir);
    let r = curve.refine(Target::Rec, pr, lo, hi);

    let c_wsk = w.value.key_rate();
    let key_rate = r.value.key_rate();
    let relative_loss = if c_wsk > 0.0 {
        ((c_wsk - key_rate) / c_wsk).max(0.0)
    } else {
        0.0
    };
    let pair = |c: &CurvePoint| AlphaPair {
        alpha1: Prob::saturating(c.a1),
        alpha2: Prob::saturating(c.a2),
    };
    Ok(CounterexampleReport {
        source: *src,
        r1,
        h_x_given_y: hxy,
        c_wsk,
        wsk_pair: pair(&w),
        wsk_residual: w.value.rate() - r1,
        c_rec: r.value.f,
        rec_pair: pair(&r),
        rec_residual: r.value.rate() - r1,
        key_rate_at_rec_opt: key_rate,
        relative_loss,
        gap_confirmed: relative_loss > GAP_TOL,
    })
}
