//! Degraded zero-mean Gaussian sources.
//!
//! All rates and capacities here are in nats.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::info::gaussian_mi;

/// Tolerance on `ρ_XZ = ρ_XY ρ_YZ`.
pub const GAUSS_DEGRADED_TOL: f64 = 1e-10;

/// Jointly Gaussian `(X, Y, Z)`, zero mean, with `Y = X + N` as the physical
/// model behind `sigma_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSource {
    pub rho_xy: f64,
    pub rho_xz: f64,
    pub rho_yz: f64,
    pub sigma_x: f64,
    /// Std of `N` in `Y = X + N`; infinite when `ρ_XY = 0`.
    pub sigma_n: f64,
}

impl GaussianSource {
    pub fn new(rho_xy: f64, rho_xz: f64, rho_yz: f64, sigma_x: f64) -> Result<GaussianSource> {
        for (name, r) in [("rho_xy", rho_xy), ("rho_xz", rho_xz), ("rho_yz", rho_yz)] {
            if !r.is_finite() || r.abs() >= 1.0 {
                return Err(domain(format!("{name} = {r} must satisfy |rho| < 1")));
            }
        }
        if !(sigma_x.is_finite() && sigma_x > 0.0) {
            return Err(domain(format!("sigma_x = {sigma_x} must be positive")));
        }
        let det = 1.0 - rho_xy * rho_xy - rho_xz * rho_xz - rho_yz * rho_yz + 2.0 * rho_xy * rho_xz * rho_yz;
        if det < -1e-12 {
            return Err(domain(format!(
                "correlation matrix is not positive semidefinite (det {det})"
            )));
        }
        let sigma_n = if rho_xy == 0.0 {
            f64::INFINITY
        } else {
            sigma_x * (1.0 - rho_xy * rho_xy).sqrt() / rho_xy.abs()
        };
        Ok(GaussianSource {
            rho_xy,
            rho_xz,
            rho_yz,
            sigma_x,
            sigma_n,
        })
    }

    /// The Markov chain `X → Y → Z` with `ρ_XZ = ρ_XY ρ_YZ`.
    pub fn degraded(rho_xy: f64, rho_yz: f64, sigma_x: f64) -> Result<GaussianSource> {
        GaussianSource::new(rho_xy, rho_xy * rho_yz, rho_yz, sigma_x)
    }

    pub fn is_degraded(&self) -> bool {
        (self.rho_xz - self.rho_xy * self.rho_yz).abs() <= GAUSS_DEGRADED_TOL
    }

    /// `σ_y² = σ_x² + σ_n²`
    pub fn sigma_y(&self) -> f64 {
        self.sigma_x / self.rho_xy.abs()
    }

    /// Differential entropy `h(X|Y) = ½ ln(2πe σ_x²(1 − ρ_XY²))`.
    pub fn h_x_given_y(&self) -> f64 {
        0.5 * (2.0
            * std::f64::consts::PI
            * std::f64::consts::E
            * self.sigma_x
            * self.sigma_x
            * (1.0 - self.rho_xy * self.rho_xy))
            .ln()
    }

    /// `I(X;Y)`
    pub fn mutual_information(&self) -> f64 {
        gaussian_mi(self.rho_xy).expect("validated correlation")
    }
}

fn check_rate(r1: f64) -> Result<()> {
    if r1.is_nan() || r1 < 0.0 {
        return Err(domain(format!("rate {r1} must be non-negative")));
    }
    Ok(())
}

fn sigma0_formula(sigma_x: f64, rho: f64, r1: f64) -> f64 {
    sigma_x * (1.0 + (1.0 - rho) / (2.0 * r1).exp_m1())
}

/// `σ_x (1 + (1 − ρ_XY)/(e^{2R1} − 1))`.
///
/// See [`optimal_test_channel_variance`] for the variance that meets the rate
/// constraint with equality.
pub fn sigma0(src: &GaussianSource, r1: f64) -> Result<f64> {
    if r1.is_nan() || r1 <= 0.0 {
        return Err(domain(format!("rate {r1} must be positive")));
    }
    Ok(sigma0_formula(src.sigma_x, src.rho_xy, r1))
}

/// `Var(W)` for `U = X + W`, `W` independent Gaussian, with `I(X;U|Y) = r1`:
/// `σ_x² (1 − ρ_XY²)/(e^{2R1} − 1)`.
pub fn optimal_noise_variance(src: &GaussianSource, r1: f64) -> Result<f64> {
    if r1.is_nan() || r1 <= 0.0 {
        return Err(domain(format!("rate {r1} must be positive")));
    }
    let vx = src.sigma_x * src.sigma_x;
    Ok(vx * (1.0 - src.rho_xy * src.rho_xy) / (2.0 * r1).exp_m1())
}

/// `Var(U) = σ_x² + Var(W)` for the channel of [`optimal_noise_variance`].
pub fn optimal_test_channel_variance(src: &GaussianSource, r1: f64) -> Result<f64> {
    Ok(src.sigma_x * src.sigma_x + optimal_noise_variance(src, r1)?)
}

fn check_noise(var_w: f64) -> Result<()> {
    if var_w.is_nan() || var_w <= 0.0 || var_w.is_infinite() {
        return Err(domain(format!("noise variance {var_w} must be positive and finite")));
    }
    Ok(())
}

/// `I(X;U|Y)` for `U = X + W` with `Var(W) = var_w`.
pub fn test_channel_rate(src: &GaussianSource, var_w: f64) -> Result<f64> {
    check_noise(var_w)?;
    let cond = src.sigma_x * src.sigma_x * (1.0 - src.rho_xy * src.rho_xy);
    Ok(0.5 * (cond / var_w).ln_1p())
}

/// `I(Y;U)` for `U = X + W` with `Var(W) = var_w`.
pub fn test_channel_utility(src: &GaussianSource, var_w: f64) -> Result<f64> {
    check_noise(var_w)?;
    let vx = src.sigma_x * src.sigma_x;
    let r2 = src.rho_xy * src.rho_xy * vx / (vx + var_w);
    Ok(-0.5 * (-r2).ln_1p())
}

/// `C_rec(R1, 0) = ½ ln[(1 − ρ_XY² e^{−2R1})/(1 − ρ_XY²)]`, in nats.
pub fn c_rec_gauss(src: &GaussianSource, r1: f64) -> Result<f64> {
    check_rate(r1)?;
    let r2 = src.rho_xy * src.rho_xy;
    Ok(0.5 * ((-r2 * (-2.0 * r1).exp()).ln_1p() - (-r2).ln_1p()))
}

/// `C_WSK(R1, 0)` for a degraded source, in nats.
pub fn c_wsk_gauss(src: &GaussianSource, r1: f64) -> Result<f64> {
    if !src.is_degraded() {
        return Err(domain(format!(
            "source is not degraded: rho_xz = {} but rho_xy * rho_yz = {}",
            src.rho_xz,
            src.rho_xy * src.rho_yz
        )));
    }
    c_wsk_gauss_extrapolated(src, r1)
}

/// The degraded-source WSK expression evaluated without the degradedness check.
pub fn c_wsk_gauss_extrapolated(src: &GaussianSource, r1: f64) -> Result<f64> {
    check_rate(r1)?;
    let d = (1.0 - src.rho_yz * src.rho_yz) * (1.0 - src.rho_xz * src.rho_xz);
    let c = src.rho_xy - src.rho_yz * src.rho_xz;
    let c2 = c * c;
    let den = d - c2;
    let num = d - c2 * (-2.0 * r1).exp();
    if !(den > 0.0 && num > 0.0) {
        return Err(domain("correlations put the expression outside its domain"));
    }
    Ok(0.5 * (num / den).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(rxy: f64, ryz: f64) -> GaussianSource {
        GaussianSource::degraded(rxy, ryz, 1.0).unwrap()
    }

    #[test]
    fn sigma0_values() {
        let s = src(0.8, 0.3);
        let v = sigma0(&s, 0.5).unwrap();
        assert!((v - (1.0 + 0.2 / (1f64.exp() - 1.0))).abs() < 1e-14);
        assert!((v - 1.11639).abs() < 1e-5);
        assert!((sigma0(&s, 40.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(sigma0(&s, 1e-6).unwrap() > 1e4);
        assert_eq!(sigma0_formula(2.0, 1.0, 0.3), 2.0);
        assert!(sigma0(&s, 0.0).is_err());
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let v = sigma0(&s, i as f64 * 0.1).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn optimal_variance_meets_rate() {
        for rho in [0.1, 0.5, 0.75, 0.95] {
            let s = GaussianSource::degraded(rho, 0.2, 1.7).unwrap();
            for r in [1e-3, 0.1, 1.0, 5.0, 12.0] {
                let var_w = optimal_noise_variance(&s, r).unwrap();
                assert!((test_channel_rate(&s, var_w).unwrap() - r).abs() < 1e-10);
                let var_u = optimal_test_channel_variance(&s, r).unwrap();
                assert!((var_u - 1.7 * 1.7 - var_w).abs() < 1e-12);
                let util = test_channel_utility(&s, var_w).unwrap();
                assert!((util - c_rec_gauss(&s, r).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rec_boundaries() {
        let s = src(0.75, 0.4);
        assert_eq!(c_rec_gauss(&s, 0.0).unwrap(), 0.0);
        let expect = 0.5 * ((1.0 - 0.5625 * (-2f64).exp()) / (1.0 - 0.5625)).ln();
        assert!((c_rec_gauss(&s, 1.0).unwrap() - expect).abs() < 1e-14);
        let mi = s.mutual_information();
        let far = c_rec_gauss(&s, 15.0).unwrap();
        assert!(far < mi && mi - far < 1e-12);
        assert!(c_rec_gauss(&s, -1.0).is_err());
    }

    #[test]
    fn wsk_reductions() {
        let s = src(0.8, 0.4);
        assert!((s.rho_xz - 0.32).abs() < 1e-15);
        assert_eq!(c_wsk_gauss(&s, 0.0).unwrap(), 0.0);
        let w = c_wsk_gauss(&s, 1.0).unwrap();
        assert!(w > 0.0 && w <= c_rec_gauss(&s, 1.0).unwrap());
        let blind = src(0.8, 0.0);
        for r in [0.01, 0.5, 2.0, 8.0] {
            assert!((c_wsk_gauss(&blind, r).unwrap() - c_rec_gauss(&blind, r).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn non_degraded_rejected() {
        let s = GaussianSource::new(0.8, 0.1, 0.4, 1.0).unwrap();
        assert!(!s.is_degraded());
        assert!(c_wsk_gauss(&s, 1.0).is_err());
        assert!(c_wsk_gauss_extrapolated(&s, 1.0).is_ok());
    }

    #[test]
    fn invalid_correlations() {
        assert!(GaussianSource::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(GaussianSource::new(0.9, -0.9, 0.9, 1.0).is_err());
        assert!(GaussianSource::new(0.5, 0.2, 0.4, 0.0).is_err());
    }

    #[test]
    fn noise_model() {
        let s = src(0.75, 0.4);
        let vy = s.sigma_x.powi(2) + s.sigma_n.powi(2);
        assert!((s.sigma_y().powi(2) - vy).abs() < 1e-12);
        assert!((s.sigma_x / vy.sqrt() - 0.75).abs() < 1e-12);
        let h =
            0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * s.sigma_n.powi(2) * s.sigma_x.powi(2) / vy).ln();
        assert!((s.h_x_given_y() - h).abs() < 1e-12);
    }

    #[test]
    fn rec_approaches_mi_exponentially() {
        let s = src(0.75, 0.4);
        let mi = s.mutual_information();
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let r = 2.0 + i as f64 * 0.5;
                (r, (mi - c_rec_gauss(&s, r).unwrap()).ln())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope + 2.0).abs() < 0.1, "{slope}");
    }
}
