//! Scalar information-theoretic primitives: binary entropy and its inverse,
//! the BSC composition `p ⋆ q`, Shannon and min-entropy of finite
//! distributions, and the mutual information of a bivariate Gaussian pair.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Masses below this are treated as exact zeros.
pub const ZERO_MASS: f64 = 1e-300;

/// Tolerance on the total mass of a distribution.
pub const MASS_TOL: f64 = 1e-12;

/// Logarithm base of an information quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Bits,
    Nats,
}

impl Units {
    /// Converts `value` expressed in `self` into `to`.
    pub fn convert(self, value: f64, to: Units) -> f64 {
        match (self, to) {
            (Units::Bits, Units::Nats) => value * LN_2,
            (Units::Nats, Units::Bits) => value / LN_2,
            _ => value,
        }
    }

    /// `x log x` in this base, with `0 log 0 = 0`.
    #[inline]
    pub(crate) fn xlogx(self, x: f64) -> f64 {
        if x <= ZERO_MASS {
            0.0
        } else {
            match self {
                Units::Bits => x * x.log2(),
                Units::Nats => x * x.ln(),
            }
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Units::Bits => "bits",
            Units::Nats => "nats",
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Prob(f64);

impl Prob {
    pub const ZERO: Prob = Prob(0.0);
    pub const HALF: Prob = Prob(0.5);
    pub const ONE: Prob = Prob(1.0);

    pub fn new(value: f64) -> Result<Prob> {
        if (0.0..=1.0).contains(&value) {
            Ok(Prob(value))
        } else {
            Err(domain(format!("probability {value} outside [0, 1]")))
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to zero.
    pub fn saturating(value: f64) -> Prob {
        if value.is_nan() {
            Prob(0.0)
        } else {
            Prob(value.clamp(0.0, 1.0))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn complement(self) -> Prob {
        Prob(1.0 - self.0)
    }
}

impl TryFrom<f64> for Prob {
    type Error = crate::Error;
    fn try_from(value: f64) -> Result<Prob> {
        Prob::new(value)
    }
}

impl From<Prob> for f64 {
    fn from(p: Prob) -> f64 {
        p.0
    }
}

/// Crossover probability of two cascaded binary symmetric channels.
pub fn star(p: Prob, q: Prob) -> Prob {
    let (p, q) = (p.0, q.0);
    Prob::saturating(p * (1.0 - q) + (1.0 - p) * q)
}

/// Binary entropy `H_b(p)`.
pub fn binary_entropy(p: Prob, units: Units) -> f64 {
    let p = p.0;
    let h = -(units.xlogx(p) + units.xlogx(1.0 - p));
    h.max(0.0)
}

/// `H_b` on a raw float in bits, for internal hot loops that already hold a
/// valid probability.
#[inline]
pub(crate) fn hb(p: f64) -> f64 {
    binary_entropy(Prob::saturating(p), Units::Bits)
}

/// The unique `p ∈ [0, ½]` with `H_b(p) = h` (bits), found by bisection.
pub fn inverse_binary_entropy(h: f64) -> Result<Prob> {
    if !(0.0..=1.0).contains(&h) {
        return Err(domain(format!("binary entropy {h} outside [0, 1]")));
    }
    if h == 0.0 {
        return Ok(Prob::ZERO);
    }
    if h == 1.0 {
        return Ok(Prob::HALF);
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let hm = hb(mid);
        if (hm - h).abs() <= 1e-15 || hi - lo <= f64::EPSILON * 0.5 {
            return Ok(Prob(mid));
        }
        if hm < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Prob(0.5 * (lo + hi)))
}

/// A probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDist {
    masses: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(masses: Vec<f64>) -> Result<DiscreteDist> {
        if masses.is_empty() {
            return Err(domain("empty distribution"));
        }
        check_masses(&masses)?;
        Ok(DiscreteDist { masses })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<DiscreteDist> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || total <= 0.0 {
            return Err(domain("weights must be finite, non-negative and not all zero"));
        }
        DiscreteDist::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(size: usize) -> Result<DiscreteDist> {
        if size == 0 {
            return Err(domain("empty alphabet"));
        }
        Ok(DiscreteDist {
            masses: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(size: usize, at: usize) -> Result<DiscreteDist> {
        if at >= size {
            return Err(domain(format!("symbol {at} outside alphabet of size {size}")));
        }
        let mut masses = vec![0.0; size];
        masses[at] = 1.0;
        Ok(DiscreteDist { masses })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

pub(crate) fn check_masses(masses: &[f64]) -> Result<()> {
    let mut total = 0.0;
    for &m in masses {
        if !m.is_finite() || m < 0.0 {
            return Err(domain(format!("invalid probability mass {m}")));
        }
        total += m;
    }
    if (total - 1.0).abs() > MASS_TOL * (masses.len().max(1) as f64).sqrt().max(1.0) {
        return Err(domain(format!("masses sum to {total}, not 1")));
    }
    Ok(())
}

/// Shannon entropy of raw masses (assumed valid).
pub(crate) fn entropy_of(masses: &[f64], units: Units) -> f64 {
    let h: f64 = masses.iter().map(|&m| -units.xlogx(m)).sum();
    h.max(0.0)
}

pub fn entropy(d: &DiscreteDist, units: Units) -> f64 {
    entropy_of(&d.masses, units)
}

/// Min-entropy `−log₂ max p`, in bits.
pub fn min_entropy(d: &DiscreteDist) -> f64 {
    let max = d.masses.iter().copied().fold(0.0_f64, f64::max);
    (-max.log2()).max(0.0)
}

/// Mutual information (nats) of a bivariate Gaussian pair with correlation `rho`.
pub fn gaussian_mi(rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(domain(format!("correlation {rho} must satisfy |rho| < 1")));
    }
    Ok(-0.5 * (-rho * rho).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> Prob {
        Prob::new(x).unwrap()
    }

    #[test]
    fn star_identity_and_absorbing() {
        for q in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert_eq!(star(Prob::HALF, p(q)).get(), 0.5);
            assert_eq!(star(Prob::ZERO, p(q)).get(), q);
        }
        // 0.23*0.99 + 0.77*0.01
        assert!((star(p(0.23), p(0.01)).get() - 0.2354).abs() < 1e-15);
    }

    #[test]
    fn star_commutative_associative_on_grid() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        for &a in &grid {
            for &b in &grid {
                let ab = star(p(a), p(b)).get();
                assert!((ab - star(p(b), p(a)).get()).abs() <= 1e-12);
                for &c in &grid {
                    let l = star(star(p(a), p(b)), p(c)).get();
                    let r = star(p(a), star(p(b), p(c))).get();
                    assert!((l - r).abs() <= 1e-12, "{a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(Prob::HALF, Units::Bits), 1.0);
        assert_eq!(binary_entropy(Prob::ZERO, Units::Bits), 0.0);
        assert_eq!(binary_entropy(Prob::ONE, Units::Bits), 0.0);
        let direct = -(0.11_f64 * 0.11_f64.log2() + 0.89 * 0.89_f64.log2());
        let h = binary_entropy(p(0.11), Units::Bits);
        assert!((h - direct).abs() < 1e-15);
        assert!((h - 0.499916).abs() < 1e-6);
        assert!((binary_entropy(p(0.3), Units::Nats) - binary_entropy(p(0.3), Units::Bits) * LN_2).abs() < 1e-15);
    }

    #[test]
    fn inverse_binary_entropy_round_trip() {
        assert_eq!(inverse_binary_entropy(1.0).unwrap().get(), 0.5);
        assert_eq!(inverse_binary_entropy(0.0).unwrap().get(), 0.0);
        let back = inverse_binary_entropy(binary_entropy(p(0.3), Units::Bits)).unwrap();
        assert!((back.get() - 0.3).abs() < 1e-10);
        for i in 1..50 {
            let x = i as f64 / 100.0;
            let h = binary_entropy(p(x), Units::Bits);
            let y = inverse_binary_entropy(h).unwrap().get();
            assert!((binary_entropy(p(y), Units::Bits) - h).abs() <= 1e-12);
        }
        assert!(matches!(inverse_binary_entropy(1.5), Err(crate::Error::Domain(_))));
        assert!(inverse_binary_entropy(-0.1).is_err());
    }

    #[test]
    fn entropy_examples() {
        let u4 = DiscreteDist::uniform(4).unwrap();
        assert!((entropy(&u4, Units::Bits) - 2.0).abs() < 1e-15);
        let pm = DiscreteDist::point_mass(3, 1).unwrap();
        assert_eq!(entropy(&pm, Units::Bits), 0.0);
        let d = DiscreteDist::new(vec![0.25, 0.75]).unwrap();
        assert!((entropy(&d, Units::Bits) - binary_entropy(p(0.25), Units::Bits)).abs() < 1e-15);
    }

    #[test]
    fn min_entropy_examples() {
        let u8 = DiscreteDist::uniform(8).unwrap();
        assert!((min_entropy(&u8) - 3.0).abs() < 1e-15);
        assert_eq!(min_entropy(&DiscreteDist::point_mass(2, 0).unwrap()), 0.0);
        let d = DiscreteDist::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(min_entropy(&d), 1.0);
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(DiscreteDist::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDist::new(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDist::new(vec![]).is_err());
        assert!(Prob::new(1.0000001).is_err());
    }

    #[test]
    fn gaussian_mi_values() {
        assert_eq!(gaussian_mi(0.0).unwrap(), 0.0);
        let v = gaussian_mi(0.6).unwrap();
        assert!((v - (-0.5 * 0.64_f64.ln())).abs() < 1e-15);
        assert!((v - 0.22314).abs() < 1e-5);
        assert_eq!(gaussian_mi(-0.6).unwrap(), v);
        assert!(gaussian_mi(1.0).is_err());
        assert!(gaussian_mi(-1.2).is_err());
    }
}
