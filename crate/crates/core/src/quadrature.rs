use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

const ORDER: usize = 20;
const MAX_DEPTH: u32 = 40;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(NonZeroUsize::new(ORDER).expect("non-zero order"))
            .as_node_weight_pairs()
            .to_vec()
    })
}

fn panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * rule().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

fn adapt<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m);
    let right = panel(f, m, b);
    let split = left + right;
    if depth >= MAX_DEPTH || (split - whole).abs() <= tol {
        return split;
    }
    adapt(f, a, m, left, 0.5 * tol, depth + 1) + adapt(f, m, b, right, 0.5 * tol, depth + 1)
}

/// Adaptive Gauss-Legendre integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub(crate) fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    let whole = panel(&mut f, a, b);
    adapt(&mut f, a, b, whole, tol, 0)
}

/// A fixed composite rule: `panels` equal panels of the base rule on `[a, b]`.
///
/// Objectives built on it are smooth in their parameters, which the
/// gradient-based partition search relies on.
#[derive(Debug, Clone)]
pub(crate) struct Composite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Composite {
    pub fn new(a: f64, b: f64, panels: usize) -> Composite {
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * ORDER);
        let mut weights = Vec::with_capacity(panels * ORDER);
        for k in 0..panels {
            let mid = a + h * (k as f64 + 0.5);
            for &(x, w) in rule() {
                nodes.push(mid + 0.5 * h * x);
                weights.push(0.5 * h * w);
            }
        }
        Composite { nodes, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_mass() {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = integrate(phi, -12.0, 12.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
        let c = Composite::new(-12.0, 12.0, 48);
        let w: f64 = c.nodes.iter().zip(&c.weights).map(|(x, w)| w * phi(*x)).sum();
        assert!((w - 1.0).abs() < 1e-13);
    }

    #[test]
    fn kink_handled_by_subdivision() {
        let v = integrate(|x: f64| x.abs(), -1.0, 2.0, 1e-10);
        assert!((v - 2.5).abs() < 1e-9);
    }

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 1e-14);
        assert!((v - (32.0 - 8.0)).abs() < 1e-11);
    }
}
