//! Dense joint probability mass functions over a product of finite alphabets.
//!
//! [`JointPmf`] carries an arbitrary number of axes so that auxiliary
//! variables (the test channel output `U`, the second-round `V`) can be
//! appended to a source model and every information quantity of the extended
//! joint computed by marginalization. [`DiscreteJoint`] is the three-axis
//! source model `p_XYZ`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Result};
use crate::info::{check_masses, entropy_of, DiscreteDist, Units, ZERO_MASS};

/// Tolerance used when checking `p(z|x,y) = p(z|y)`.
pub const DEGRADED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    dims: Vec<usize>,
    /// Row-major, last axis varies fastest.
    masses: Vec<f64>,
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, masses: Vec<f64>) -> Result<JointPmf> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(domain(format!("invalid alphabet sizes {dims:?}")));
        }
        let size = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| domain("joint alphabet too large"))?;
        if masses.len() != size {
            return Err(domain(format!(
                "expected {size} masses for dims {dims:?}, got {}",
                masses.len()
            )));
        }
        check_masses(&masses)?;
        Ok(JointPmf { dims, masses })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn num_axes(&self) -> usize {
        self.dims.len()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.masses[self.flat_index(idx)]
    }

    /// Decodes a flat index into per-axis symbols.
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
    }

    fn check_axes(&self, axes: &[usize]) -> Result<()> {
        for (i, &a) in axes.iter().enumerate() {
            if a >= self.dims.len() {
                return Err(usage(format!("axis {a} out of range for {} axes", self.dims.len())));
            }
            if axes[..i].contains(&a) {
                return Err(usage(format!("axis {a} repeated")));
            }
        }
        Ok(())
    }

    /// Marginal over `axes`, laid out row-major in the order the axes are listed.
    pub fn marginal(&self, axes: &[usize]) -> Result<Vec<f64>> {
        self.check_axes(axes)?;
        Ok(self.marginal_unchecked(axes))
    }

    fn marginal_unchecked(&self, axes: &[usize]) -> Vec<f64> {
        let out_size: usize = axes.iter().map(|&a| self.dims[a]).product();
        let mut out = vec![0.0; out_size];
        let mut idx = vec![0usize; self.dims.len()];
        for (flat, &m) in self.masses.iter().enumerate() {
            if m <= ZERO_MASS {
                continue;
            }
            self.unflatten(flat, &mut idx);
            let o = axes.iter().fold(0, |acc, &a| acc * self.dims[a] + idx[a]);
            out[o] += m;
        }
        out
    }

    pub fn marginal_dist(&self, axes: &[usize]) -> Result<DiscreteDist> {
        let m = self.marginal(axes)?;
        DiscreteDist::new(m)
    }

    /// Joint entropy of the variables on `axes`; the empty set has entropy 0.
    pub fn entropy(&self, axes: &[usize], units: Units) -> Result<f64> {
        self.check_axes(axes)?;
        if axes.is_empty() {
            return Ok(0.0);
        }
        Ok(entropy_of(&self.marginal_unchecked(axes), units))
    }

    /// `H(A | C)`.
    pub fn conditional_entropy(&self, a: &[usize], c: &[usize], units: Units) -> Result<f64> {
        disjoint(&[a, c])?;
        let ac = concat(&[a, c]);
        Ok((self.entropy(&ac, units)? - self.entropy(c, units)?).max(0.0))
    }

    /// `I(A; B)` for disjoint, non-empty axis sets.
    pub fn mutual_information(&self, a: &[usize], b: &[usize], units: Units) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(usage("mutual information needs non-empty axis sets"));
        }
        disjoint(&[a, b])?;
        let ab = concat(&[a, b]);
        let v = self.entropy(a, units)? + self.entropy(b, units)? - self.entropy(&ab, units)?;
        Ok(v.max(0.0))
    }

    /// `I(A; B | C)` for pairwise disjoint axis sets.
    pub fn conditional_mutual_information(&self, a: &[usize], b: &[usize], c: &[usize], units: Units) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(usage("conditional mutual information needs non-empty A and B"));
        }
        disjoint(&[a, b, c])?;
        let ac = concat(&[a, c]);
        let bc = concat(&[b, c]);
        let abc = concat(&[a, b, c]);
        let v = self.entropy(&ac, units)? + self.entropy(&bc, units)?
            - self.entropy(&abc, units)?
            - self.entropy(c, units)?;
        Ok(v.max(0.0))
    }

    /// Appends a new axis of size `out_size` distributed according to
    /// `channel(parents) -> row`, where `parents` holds the symbols on
    /// `given` in the listed order. The new axis is conditionally independent
    /// of every other axis given `given`.
    pub fn extend_with<F>(&self, given: &[usize], out_size: usize, mut channel: F) -> Result<JointPmf>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        self.check_axes(given)?;
        if out_size == 0 {
            return Err(domain("empty output alphabet"));
        }
        let mut dims = self.dims.clone();
        dims.push(out_size);
        let mut masses = Vec::with_capacity(self.masses.len() * out_size);
        let mut idx = vec![0usize; self.dims.len()];
        let mut parents = vec![0usize; given.len()];
        for (flat, &m) in self.masses.iter().enumerate() {
            self.unflatten(flat, &mut idx);
            for (p, &a) in parents.iter_mut().zip(given) {
                *p = idx[a];
            }
            let row = channel(&parents);
            if row.len() != out_size {
                return Err(usage(format!(
                    "channel row has {} entries, expected {out_size}",
                    row.len()
                )));
            }
            masses.extend(row.iter().map(|r| m * r));
        }
        JointPmf::new(dims, masses)
    }

    /// Product distribution of independent marginals.
    pub fn product(marginals: &[&[f64]]) -> Result<JointPmf> {
        let dims: Vec<usize> = marginals.iter().map(|m| m.len()).collect();
        let mut masses = vec![1.0];
        for m in marginals {
            masses = masses.iter().flat_map(|a| m.iter().map(move |b| a * b)).collect();
        }
        JointPmf::new(dims, masses)
    }
}

fn disjoint(sets: &[&[usize]]) -> Result<()> {
    for (i, s) in sets.iter().enumerate() {
        for t in &sets[i + 1..] {
            if let Some(a) = s.iter().find(|a| t.contains(a)) {
                return Err(usage(format!("axis {a} appears in two axis sets")));
            }
        }
    }
    Ok(())
}

fn concat(sets: &[&[usize]]) -> Vec<usize> {
    sets.iter().flat_map(|s| s.iter().copied()).collect()
}

/// Source model `p_XYZ`: Alice observes `X`, Bob `Y`, Eve `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointPmf", into = "JointPmf")]
pub struct DiscreteJoint {
    pmf: JointPmf,
}

impl DiscreteJoint {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const Z: usize = 2;

    /// From dense masses indexed `(x, y, z)`.
    pub fn new(dims: [usize; 3], masses: Vec<f64>) -> Result<DiscreteJoint> {
        Ok(DiscreteJoint {
            pmf: JointPmf::new(dims.to_vec(), masses)?,
        })
    }

    /// Builds the degraded source `X → Y → Z` from a prior and two channels
    /// (rows indexed by the input symbol).
    pub fn from_chain(prior: &[f64], y_given_x: &[Vec<f64>], z_given_y: &[Vec<f64>]) -> Result<DiscreteJoint> {
        let dx = prior.len();
        if y_given_x.len() != dx {
            return Err(usage("p(y|x) needs one row per X symbol"));
        }
        let dy = y_given_x.first().map_or(0, Vec::len);
        if z_given_y.len() != dy {
            return Err(usage("p(z|y) needs one row per Y symbol"));
        }
        let dz = z_given_y.first().map_or(0, Vec::len);
        for row in y_given_x.iter().chain(z_given_y) {
            DiscreteDist::new(row.clone())?;
        }
        if z_given_y.iter().any(|r| r.len() != dz) || y_given_x.iter().any(|r| r.len() != dy) {
            return Err(usage("ragged channel matrix"));
        }
        let mut masses = Vec::with_capacity(dx * dy * dz);
        for (x, px) in prior.iter().enumerate() {
            for (pyx, zs) in y_given_x[x].iter().zip(z_given_y) {
                masses.extend(zs.iter().map(|pzy| px * pyx * pzy));
            }
        }
        DiscreteJoint::new([dx, dy, dz], masses)
    }

    /// Builds the joint with `Z` depending on `(X, Y)` through `z_given_xy`,
    /// rows indexed by `x * |Y| + y`.
    pub fn from_general(prior: &[f64], y_given_x: &[Vec<f64>], z_given_xy: &[Vec<f64>]) -> Result<DiscreteJoint> {
        let dx = prior.len();
        let dy = y_given_x.first().map_or(0, Vec::len);
        if y_given_x.len() != dx || z_given_xy.len() != dx * dy {
            return Err(usage("channel shapes do not match the prior"));
        }
        let dz = z_given_xy.first().map_or(0, Vec::len);
        let mut masses = Vec::with_capacity(dx * dy * dz);
        for (x, px) in prior.iter().enumerate() {
            for y in 0..dy {
                let row = &z_given_xy[x * dy + y];
                if row.len() != dz {
                    return Err(usage("ragged channel matrix"));
                }
                for &pz in row {
                    masses.push(px * y_given_x[x][y] * pz);
                }
            }
        }
        DiscreteJoint::new([dx, dy, dz], masses)
    }

    pub fn pmf(&self) -> &JointPmf {
        &self.pmf
    }

    pub fn dims(&self) -> [usize; 3] {
        let d = self.pmf.dims();
        [d[0], d[1], d[2]]
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.pmf.get(&[x, y, z])
    }

    /// Checks `p(z|x,y) = p(z|y)` on every cell with `p(x,y) > 0`.
    pub fn is_degraded(&self) -> bool {
        let [dx, dy, dz] = self.dims();
        let pyz = self.pmf.marginal_unchecked(&[Self::Y, Self::Z]);
        for y in 0..dy {
            let py: f64 = (0..dz).map(|z| pyz[y * dz + z]).sum();
            if py <= ZERO_MASS {
                continue;
            }
            for x in 0..dx {
                let pxy: f64 = (0..dz).map(|z| self.get(x, y, z)).sum();
                if pxy <= ZERO_MASS {
                    continue;
                }
                for z in 0..dz {
                    let lhs = self.get(x, y, z) / pxy;
                    let rhs = pyz[y * dz + z] / py;
                    if (lhs - rhs).abs() > DEGRADED_TOL {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn prior_x(&self) -> Vec<f64> {
        self.pmf.marginal_unchecked(&[Self::X])
    }

    pub fn mutual_information(&self, a: &[usize], b: &[usize], units: Units) -> Result<f64> {
        self.pmf.mutual_information(a, b, units)
    }

    pub fn conditional_mutual_information(&self, a: &[usize], b: &[usize], c: &[usize], units: Units) -> Result<f64> {
        self.pmf.conditional_mutual_information(a, b, c, units)
    }

    /// `H(X | Y)` in bits: the rate above which the one-way constraint stops binding.
    pub fn h_x_given_y(&self) -> f64 {
        self.pmf
            .conditional_entropy(&[Self::X], &[Self::Y], Units::Bits)
            .expect("fixed axes are valid")
    }
}

impl TryFrom<JointPmf> for DiscreteJoint {
    type Error = crate::Error;
    fn try_from(pmf: JointPmf) -> Result<DiscreteJoint> {
        if pmf.num_axes() != 3 {
            return Err(domain(format!("source model needs 3 axes, got {}", pmf.num_axes())));
        }
        Ok(DiscreteJoint { pmf })
    }
}

impl From<DiscreteJoint> for JointPmf {
    fn from(j: DiscreteJoint) -> JointPmf {
        j.pmf
    }
}

/// Row-stochastic matrix of a binary symmetric channel.
pub fn bsc_matrix(p: f64) -> Vec<Vec<f64>> {
    vec![vec![1.0 - p, p], vec![p, 1.0 - p]]
}

/// Binary erasure channel; output symbol 2 is the erasure.
pub fn bec_matrix(eps: f64) -> Vec<Vec<f64>> {
    vec![vec![1.0 - eps, 0.0, eps], vec![0.0, 1.0 - eps, eps]]
}
