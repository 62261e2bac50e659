use serde::{Deserialize, Serialize};

use crate::channel::Objective;
use crate::error::{domain, Error, Result};
use crate::info::{hb, star, Prob};
use crate::joint::{bec_matrix, bsc_matrix, DiscreteJoint};
use crate::optimizer::{optimize_oneway, OptimizerOptions};

/// `X ~ B(prior)`, `Y = X ⊕ B(p)`, `Z = Y ⊕ B(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BscCascadeSource {
    pub p: Prob,
    pub q: Prob,
    /// `P[X = 1]`
    pub prior: Prob,
}

impl BscCascadeSource {
    pub fn new(p: f64, q: f64) -> Result<BscCascadeSource> {
        Ok(BscCascadeSource {
            p: Prob::new(p)?,
            q: Prob::new(q)?,
            prior: Prob::HALF,
        })
    }

    pub fn with_prior(mut self, prior: f64) -> Result<BscCascadeSource> {
        self.prior = Prob::new(prior)?;
        Ok(self)
    }

    fn prior_vec(&self) -> [f64; 2] {
        [1.0 - self.prior.get(), self.prior.get()]
    }

    pub fn joint(&self) -> DiscreteJoint {
        DiscreteJoint::from_chain(&self.prior_vec(), &bsc_matrix(self.p.get()), &bsc_matrix(self.q.get()))
            .expect("BSC cascade is a valid source")
    }

    /// Same `X → Y` link with `Z` an erasure of `Y`.
    pub fn erasure_joint(&self, epsilon: Prob) -> DiscreteJoint {
        DiscreteJoint::from_chain(&self.prior_vec(), &bsc_matrix(self.p.get()), &bec_matrix(epsilon.get()))
            .expect("BSC/BEC cascade is a valid source")
    }

    /// `H(X|Y)` of this source in bits.
    pub fn h_x_given_y(&self) -> f64 {
        self.joint().h_x_given_y()
    }

    fn is_uniform(&self) -> bool {
        self.prior.get() == 0.5
    }
}

/// Both roots `(β₀, 1 − β₀)` of `H_b(p ⋆ β) − H_b(β) = r1`, with `β₀ ∈ [0, ½]`.
///
/// The left side decreases from `H_b(p)` at `β = 0` to `0` at `β = ½`. A rate
/// above `H_b(p) = H(X|Y)` yields [`Error::Saturated`].
pub fn beta0_solve(p: Prob, r1: f64) -> Result<(Prob, Prob)> {
    if !r1.is_finite() || r1 <= 0.0 {
        return Err(domain(format!("rate {r1} must be positive")));
    }
    let threshold = hb(p.get());
    if r1 > threshold {
        return Err(Error::Saturated { r1, threshold });
    }
    let g = |beta: f64| hb(star(p, Prob::saturating(beta)).get()) - hb(beta);
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    let mut beta = 0.0;
    for _ in 0..200 {
        beta = 0.5 * (lo + hi);
        let r = g(beta) - r1;
        if r.abs() <= 1e-14 || hi - lo <= f64::EPSILON {
            break;
        }
        if r > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
    }
    if r1 == threshold {
        beta = 0.0;
    }
    Ok((Prob::saturating(beta), Prob::saturating(1.0 - beta)))
}

/// `(β₀, saturated)` for a rate, handling the two boundary regimes.
fn beta0_or_saturated(src: &BscCascadeSource, r1: f64) -> Result<Option<Prob>> {
    if !r1.is_finite() || r1 < 0.0 {
        return Err(domain(format!("rate {r1} must be non-negative")));
    }
    if r1 >= src.h_x_given_y() {
        return Ok(None);
    }
    if r1 == 0.0 {
        return Ok(Some(Prob::HALF));
    }
    match beta0_solve(src.p, r1) {
        Ok((b, _)) => Ok(Some(b)),
        Err(Error::Saturated { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn optimizer_fallback(j: &DiscreteJoint, r1: f64, objective: Objective) -> Result<f64> {
    if !r1.is_finite() || r1 < 0.0 {
        return Err(domain(format!("rate {r1} must be non-negative")));
    }
    let r = r1.min(j.h_x_given_y());
    Ok(optimize_oneway(j, r, objective, &OptimizerOptions::default())?.value)
}

/// One-way reconciliation capacity `C_rec(R1, 0)` in bits.
///
/// Closed form for a uniform prior; other priors go through the generic optimizer.
pub fn c_rec_bsc(src: &BscCascadeSource, r1: f64) -> Result<f64> {
    if !src.is_uniform() {
        return optimizer_fallback(&src.joint(), r1, Objective::Rec);
    }
    Ok(match beta0_or_saturated(src, r1)? {
        None => 1.0 - hb(src.p.get()),
        Some(b) => 1.0 - hb(star(src.p, b).get()),
    })
}

/// One-way WSK capacity `C_WSK(R1, 0)` in bits for the BSC cascade.
pub fn c_wsk_bsc(src: &BscCascadeSource, r1: f64) -> Result<f64> {
    if !src.is_uniform() {
        return optimizer_fallback(&src.joint(), r1, Objective::Wsk);
    }
    let v = match beta0_or_saturated(src, r1)? {
        None => hb(star(src.p, src.q).get()) - hb(src.p.get()),
        Some(b) => {
            let pb = star(src.p, b);
            hb(star(pb, src.q).get()) - hb(pb.get())
        }
    };
    Ok(v.max(0.0))
}

/// One-way WSK capacity when `Z` is an erasure of `Y` with probability `epsilon`.
pub fn c_wsk_bec(src: &BscCascadeSource, epsilon: Prob, r1: f64) -> Result<f64> {
    if !src.is_uniform() {
        return optimizer_fallback(&src.erasure_joint(epsilon), r1, Objective::Wsk);
    }
    Ok(epsilon.get() * c_rec_bsc(src, r1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(x: f64) -> Prob {
        Prob::new(x).unwrap()
    }

    #[test]
    fn beta0_boundaries() {
        let (b, b2) = beta0_solve(pr(0.1), hb(0.1)).unwrap();
        assert_eq!(b.get(), 0.0);
        assert_eq!(b2.get(), 1.0);
        let (b, _) = beta0_solve(pr(0.1), 1e-9).unwrap();
        assert!((b.get() - 0.5).abs() < 1e-3);
        assert!(matches!(beta0_solve(pr(0.1), 0.9), Err(Error::Saturated { .. })));
        assert!(matches!(beta0_solve(pr(0.1), 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn beta0_residual() {
        let (b, b2) = beta0_solve(pr(0.1), 0.2).unwrap();
        assert!(b.get() <= 0.5);
        let res = |beta: Prob| hb(star(pr(0.1), beta).get()) - hb(beta.get()) - 0.2;
        assert!(res(b).abs() <= 1e-10);
        assert!(res(b2).abs() <= 1e-10);
    }

    #[test]
    fn saturation_values() {
        let src = BscCascadeSource::new(0.1, 0.2).unwrap();
        let h = hb(0.1);
        assert!((src.h_x_given_y() - h).abs() < 1e-12);
        for r in [h, h + 0.1, 5.0] {
            assert!((c_rec_bsc(&src, r).unwrap() - (1.0 - h)).abs() < 1e-12);
            let expect = hb(star(pr(0.1), pr(0.2)).get()) - h;
            assert!((c_wsk_bsc(&src, r).unwrap() - expect).abs() < 1e-12);
        }
        assert_eq!(c_rec_bsc(&src, 0.0).unwrap(), 0.0);
        assert_eq!(c_wsk_bsc(&src, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn independent_eavesdropper_reduces_wsk_to_rec() {
        let src = BscCascadeSource::new(0.15, 0.5).unwrap();
        for i in 0..=12 {
            let r = i as f64 * 0.05;
            assert!((c_wsk_bsc(&src, r).unwrap() - c_rec_bsc(&src, r).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn erasure_proportionality() {
        let src = BscCascadeSource::new(0.1, 0.0).unwrap();
        for r in [0.05, 0.2, 0.4, 1.0] {
            let rec = c_rec_bsc(&src, r).unwrap();
            assert_eq!(c_wsk_bec(&src, Prob::ZERO, r).unwrap(), 0.0);
            assert!((c_wsk_bec(&src, Prob::ONE, r).unwrap() - rec).abs() < 1e-15);
        }
        let v = c_wsk_bec(&src, pr(0.3), 0.2).unwrap();
        assert!((v - 0.3 * c_rec_bsc(&src, 0.2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn both_roots_give_same_capacity() {
        let p = pr(0.12);
        for r in [0.05, 0.2, 0.45] {
            let (b, b2) = beta0_solve(p, r).unwrap();
            let c1 = 1.0 - hb(star(p, b).get());
            let c2 = 1.0 - hb(star(p, b2).get());
            assert!((c1 - c2).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_rate_rejected() {
        let src = BscCascadeSource::new(0.1, 0.2).unwrap();
        assert!(c_rec_bsc(&src, -0.1).is_err());
    }
}
