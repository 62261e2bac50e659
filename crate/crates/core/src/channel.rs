//! Test channels `p_{U|X}` (and the second-round `p_{V|Y,U}`) together with
//! the one-way and two-way objectives they induce on a source model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Result};
use crate::info::{check_masses, entropy_of, Units};
use crate::joint::{DiscreteJoint, JointPmf};

/// Which one-way capacity is being maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// `I(Y;U)`: reconciliation capacity.
    Rec,
    /// `I(Y;U) − I(Z;U)`: wiretap secret-key capacity.
    Wsk,
}

/// A conditional distribution `p_{U|X}`, one row per `X` symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestChannel {
    rows: Vec<Vec<f64>>,
}

impl TestChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<TestChannel> {
        let u_size = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || u_size == 0 {
            return Err(domain("test channel needs at least one row and one output symbol"));
        }
        if u_size > rows.len() {
            return Err(domain(format!("|U| = {u_size} exceeds |X| = {}", rows.len())));
        }
        for row in &rows {
            if row.len() != u_size {
                return Err(domain("ragged test channel"));
            }
            check_masses(row)?;
        }
        Ok(TestChannel { rows })
    }

    /// `U = X`.
    pub fn identity(x_size: usize) -> TestChannel {
        let rows = (0..x_size)
            .map(|x| (0..x_size).map(|u| if u == x { 1.0 } else { 0.0 }).collect())
            .collect();
        TestChannel { rows }
    }

    /// Every row equal to `row`: `U` independent of `X`.
    pub fn constant(x_size: usize, row: Vec<f64>) -> Result<TestChannel> {
        TestChannel::new(vec![row; x_size])
    }

    /// Binary symmetric test channel with crossover `beta`.
    pub fn bsc(beta: f64) -> Result<TestChannel> {
        TestChannel::new(crate::joint::bsc_matrix(beta))
    }

    /// Rows drawn independently from a flat Dirichlet over `u_size` symbols.
    pub fn random<R: Rng + ?Sized>(x_size: usize, u_size: usize, rng: &mut R) -> TestChannel {
        let rows = (0..x_size).map(|_| dirichlet_flat(u_size, rng)).collect();
        TestChannel { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn x_size(&self) -> usize {
        self.rows.len()
    }

    pub fn u_size(&self) -> usize {
        self.rows[0].len()
    }

    /// `λ·self + (1 − λ)·other`.
    pub fn mix(&self, other: &TestChannel, lambda: f64) -> Result<TestChannel> {
        if self.x_size() != other.x_size() || self.u_size() != other.u_size() {
            return Err(usage("cannot mix test channels of different shapes"));
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect())
            .collect();
        Ok(TestChannel { rows })
    }

    /// Relabels the output alphabet: new symbol `perm[u]` carries old `u`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<TestChannel> {
        let k = self.u_size();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(usage("not a permutation of the output alphabet"));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut out = vec![0.0; k];
                for (u, &m) in r.iter().enumerate() {
                    out[perm[u]] = m;
                }
                out
            })
            .collect();
        Ok(TestChannel { rows })
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> TestChannel {
        TestChannel { rows }
    }

    fn check_against(&self, j: &DiscreteJoint) -> Result<()> {
        if self.x_size() != j.dims()[0] {
            return Err(usage(format!(
                "test channel has {} rows but |X| = {}",
                self.x_size(),
                j.dims()[0]
            )));
        }
        Ok(())
    }
}

pub(crate) fn dirichlet_flat<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Second-round channel `p_{V|Y,U}` paired with the first-round test channel.
/// Rows of `v_rows` are indexed by `y * |U| + u`, so `V → (Y,U) → (X,Z)` holds
/// by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoWayChannels {
    pub u_channel: TestChannel,
    v_rows: Vec<Vec<f64>>,
}

impl TwoWayChannels {
    pub fn new(u_channel: TestChannel, v_rows: Vec<Vec<f64>>) -> Result<TwoWayChannels> {
        let v_size = v_rows.first().map_or(0, Vec::len);
        if v_size == 0 {
            return Err(domain("V channel needs at least one output symbol"));
        }
        for row in &v_rows {
            if row.len() != v_size {
                return Err(domain("ragged V channel"));
            }
            check_masses(row)?;
        }
        if !v_rows.len().is_multiple_of(u_channel.u_size()) {
            return Err(usage("V channel rows must be indexed by (y, u)"));
        }
        Ok(TwoWayChannels { u_channel, v_rows })
    }

    /// `V` constant: the second round carries nothing.
    pub fn one_way(u_channel: TestChannel, y_size: usize) -> TwoWayChannels {
        let rows = vec![vec![1.0]; y_size * u_channel.u_size()];
        TwoWayChannels {
            u_channel,
            v_rows: rows,
        }
    }

    pub fn v_rows(&self) -> &[Vec<f64>] {
        &self.v_rows
    }

    pub fn v_size(&self) -> usize {
        self.v_rows[0].len()
    }

    pub fn v_row(&self, y: usize, u: usize) -> &[f64] {
        &self.v_rows[y * self.u_channel.u_size() + u]
    }

    /// Extended joint over axes `(X, Y, Z, U, V)`.
    pub fn extend(&self, j: &DiscreteJoint) -> Result<JointPmf> {
        self.u_channel.check_against(j)?;
        let dy = j.dims()[1];
        if self.v_rows.len() != dy * self.u_channel.u_size() {
            return Err(usage(format!(
                "V channel has {} rows, expected |Y|·|U| = {}",
                self.v_rows.len(),
                dy * self.u_channel.u_size()
            )));
        }
        let with_u = extend_u(j, &self.u_channel)?;
        with_u.extend_with(&[DiscreteJoint::Y, AXIS_U], self.v_size(), |p| {
            self.v_row(p[0], p[1]).to_vec()
        })
    }
}

/// Axis of `U` in an extended joint.
pub const AXIS_U: usize = 3;
/// Axis of `V` in a two-way extended joint.
pub const AXIS_V: usize = 4;

/// Extended joint `p_{XYZU} = p_{XYZ} · p_{U|X}` over axes `(X, Y, Z, U)`.
pub fn extend_u(j: &DiscreteJoint, tc: &TestChannel) -> Result<JointPmf> {
    tc.check_against(j)?;
    j.pmf()
        .extend_with(&[DiscreteJoint::X], tc.u_size(), |p| tc.rows[p[0]].clone())
}

/// `I(Y;U) − I(Z;U)` in bits.
pub fn objective_wsk(j: &DiscreteJoint, tc: &TestChannel) -> Result<f64> {
    let e = extend_u(j, tc)?;
    let iyu = e.mutual_information(&[DiscreteJoint::Y], &[AXIS_U], Units::Bits)?;
    let izu = e.mutual_information(&[DiscreteJoint::Z], &[AXIS_U], Units::Bits)?;
    Ok(iyu - izu)
}

/// `I(Y;U)` in bits.
pub fn objective_rec(j: &DiscreteJoint, tc: &TestChannel) -> Result<f64> {
    let e = extend_u(j, tc)?;
    e.mutual_information(&[DiscreteJoint::Y], &[AXIS_U], Units::Bits)
}

pub fn objective(j: &DiscreteJoint, tc: &TestChannel, which: Objective) -> Result<f64> {
    match which {
        Objective::Rec => objective_rec(j, tc),
        Objective::Wsk => objective_wsk(j, tc),
    }
}

/// Public rate consumed by the test channel, `I(X;U|Y)` in bits.
pub fn rate_constraint(j: &DiscreteJoint, tc: &TestChannel) -> Result<f64> {
    let e = extend_u(j, tc)?;
    e.conditional_mutual_information(&[DiscreteJoint::X], &[AXIS_U], &[DiscreteJoint::Y], Units::Bits)
}

/// Which two-way expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoWayMode {
    /// `I(Y;U) + I(X;V|U)`; the eavesdropper has no side information.
    Sk,
    /// `[I(Y;U) − I(Z;U)]⁺ + [I(X;V|U) − I(Z;V|U)]⁺`.
    Wsk,
}

/// Key rate of a two-way channel pair and the two public rates it consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoWayValue {
    pub value: f64,
    /// `I(X;U|Y)`
    pub r1_used: f64,
    /// `I(Y;UV|X)`
    pub r2_used: f64,
}

pub fn objective_twoway(j: &DiscreteJoint, tw: &TwoWayChannels, mode: TwoWayMode) -> Result<TwoWayValue> {
    const X: usize = DiscreteJoint::X;
    const Y: usize = DiscreteJoint::Y;
    const Z: usize = DiscreteJoint::Z;
    let e = tw.extend(j)?;
    let b = Units::Bits;
    let iyu = e.mutual_information(&[Y], &[AXIS_U], b)?;
    let ixv_u = e.conditional_mutual_information(&[X], &[AXIS_V], &[AXIS_U], b)?;
    let value = match mode {
        TwoWayMode::Sk => iyu + ixv_u,
        TwoWayMode::Wsk => {
            let izu = e.mutual_information(&[Z], &[AXIS_U], b)?;
            let izv_u = e.conditional_mutual_information(&[Z], &[AXIS_V], &[AXIS_U], b)?;
            (iyu - izu).max(0.0) + (ixv_u - izv_u).max(0.0)
        }
    };
    Ok(TwoWayValue {
        value,
        r1_used: e.conditional_mutual_information(&[X], &[AXIS_U], &[Y], b)?,
        r2_used: e.conditional_mutual_information(&[Y], &[AXIS_U, AXIS_V], &[X], b)?,
    })
}

/// Precomputed marginals of a source model for fast repeated evaluation of
/// the one-way objective and rate constraint under a varying test channel.
#[derive(Debug, Clone)]
pub(crate) struct FastEval {
    dx: usize,
    dy: usize,
    dz: usize,
    px: Vec<f64>,
    pxy: Vec<f64>,
    pxz: Vec<f64>,
    hy: f64,
    hz: f64,
}

impl FastEval {
    pub(crate) fn new(j: &DiscreteJoint) -> FastEval {
        let [dx, dy, dz] = j.dims();
        let pmf = j.pmf();
        let px = pmf.marginal(&[0]).expect("axis 0");
        let pxy = pmf.marginal(&[0, 1]).expect("axes 0,1");
        let pxz = pmf.marginal(&[0, 2]).expect("axes 0,2");
        let py = pmf.marginal(&[1]).expect("axis 1");
        let pz = pmf.marginal(&[2]).expect("axis 2");
        FastEval {
            dx,
            dy,
            dz,
            hy: entropy_of(&py, Units::Bits),
            hz: entropy_of(&pz, Units::Bits),
            px,
            pxy,
            pxz,
        }
    }

    pub(crate) fn px(&self) -> &[f64] {
        &self.px
    }

    /// `I(S;U)` where `p(x,s)` is `pxs` with `ds` columns.
    fn mi_with(&self, pxs: &[f64], ds: usize, hs: f64, rows: &[Vec<f64>], hu: f64, scratch: &mut Vec<f64>) -> f64 {
        let du = rows[0].len();
        scratch.clear();
        scratch.resize(ds * du, 0.0);
        for x in 0..self.dx {
            let w = &rows[x];
            for s in 0..ds {
                let m = pxs[x * ds + s];
                if m == 0.0 {
                    continue;
                }
                let out = &mut scratch[s * du..(s + 1) * du];
                for (o, &wu) in out.iter_mut().zip(w) {
                    *o += m * wu;
                }
            }
        }
        hs + hu - entropy_of(scratch, Units::Bits)
    }

    /// Returns `(I(Y;U), I(Z;U), I(X;U|Y))` in bits.
    pub(crate) fn eval(&self, rows: &[Vec<f64>]) -> (f64, f64, f64) {
        let du = rows[0].len();
        let mut pu = vec![0.0; du];
        let mut h_u_given_x = 0.0;
        for (x, w) in rows.iter().enumerate() {
            let m = self.px[x];
            for (p, &wu) in pu.iter_mut().zip(w) {
                *p += m * wu;
            }
            h_u_given_x += m * entropy_of(w, Units::Bits);
        }
        let hu = entropy_of(&pu, Units::Bits);
        let mut scratch = Vec::new();
        let iyu = self.mi_with(&self.pxy, self.dy, self.hy, rows, hu, &mut scratch);
        let izu = self.mi_with(&self.pxz, self.dz, self.hz, rows, hu, &mut scratch);
        // I(X;U|Y) = I(X;U) − I(Y;U) since U → X → Y.
        let ixu = hu - h_u_given_x;
        (iyu.max(0.0), izu.max(0.0), (ixu - iyu).max(0.0))
    }

    pub(crate) fn objective(&self, rows: &[Vec<f64>], which: Objective) -> (f64, f64) {
        let (iyu, izu, rate) = self.eval(rows);
        let v = match which {
            Objective::Rec => iyu,
            Objective::Wsk => iyu - izu,
        };
        (v, rate)
    }
}

/// Outcome of [`convexity_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub probes: usize,
    /// Largest `f(mix) − [λ f(a) + (1−λ) f(b)]` observed for `I(Y;U)`.
    pub max_violation_rec: f64,
    /// Same for `I(X;U|Y)`.
    pub max_violation_rate: f64,
    /// Same for `I(Y;U) − I(Z;U)`.
    pub max_violation_wsk: f64,
}

impl ConvexityReport {
    pub fn max_violation(&self) -> f64 {
        self.max_violation_rec
            .max(self.max_violation_rate)
            .max(self.max_violation_wsk)
    }
}

/// Samples random test-channel pairs and mixing weights and records the
/// worst violation of the convexity inequality for the three functionals.
pub fn convexity_probe<R: Rng + ?Sized>(j: &DiscreteJoint, probes: usize, rng: &mut R) -> Result<ConvexityReport> {
    let dx = j.dims()[0];
    if dx > 3 {
        return Err(domain("convexity probe is meant for binary or ternary sources"));
    }
    let mut report = ConvexityReport {
        probes,
        max_violation_rec: f64::NEG_INFINITY,
        max_violation_rate: f64::NEG_INFINITY,
        max_violation_wsk: f64::NEG_INFINITY,
    };
    for _ in 0..probes {
        let a = TestChannel::random(dx, dx, rng);
        let b = TestChannel::random(dx, dx, rng);
        let lambda: f64 = rng.random();
        let m = a.mix(&b, lambda)?;
        let fa = triple(j, &a)?;
        let fb = triple(j, &b)?;
        let fm = triple(j, &m)?;
        let viol = |i: usize| fm[i] - (lambda * fa[i] + (1.0 - lambda) * fb[i]);
        report.max_violation_rec = report.max_violation_rec.max(viol(0));
        report.max_violation_rate = report.max_violation_rate.max(viol(1));
        report.max_violation_wsk = report.max_violation_wsk.max(viol(2));
    }
    Ok(report)
}

fn triple(j: &DiscreteJoint, tc: &TestChannel) -> Result<[f64; 3]> {
    let e = extend_u(j, tc)?;
    let b = Units::Bits;
    let iyu = e.mutual_information(&[DiscreteJoint::Y], &[AXIS_U], b)?;
    let izu = e.mutual_information(&[DiscreteJoint::Z], &[AXIS_U], b)?;
    let rate = e.conditional_mutual_information(&[DiscreteJoint::X], &[AXIS_U], &[DiscreteJoint::Y], b)?;
    Ok([iyu, rate, iyu - izu])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{hb, star, Prob};
    use crate::joint::bsc_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cascade(p: f64, q: f64) -> DiscreteJoint {
        DiscreteJoint::from_chain(&[0.5, 0.5], &bsc_matrix(p), &bsc_matrix(q)).unwrap()
    }

    fn pr(x: f64) -> Prob {
        Prob::new(x).unwrap()
    }

    #[test]
    fn identity_channel_collapses() {
        let j = cascade(0.1, 0.2);
        let id = TestChannel::identity(2);
        let ixy = j.mutual_information(&[0], &[1], Units::Bits).unwrap();
        let ixz = j.mutual_information(&[0], &[2], Units::Bits).unwrap();
        assert!((objective_wsk(&j, &id).unwrap() - (ixy - ixz)).abs() < 1e-12);
        assert!((rate_constraint(&j, &id).unwrap() - j.h_x_given_y()).abs() < 1e-12);
    }

    #[test]
    fn constant_channel_is_useless() {
        let j = cascade(0.1, 0.2);
        let c = TestChannel::constant(2, vec![0.3, 0.7]).unwrap();
        assert!(objective_wsk(&j, &c).unwrap().abs() < 1e-12);
        assert!(rate_constraint(&j, &c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bsc_test_channel_matches_closed_forms() {
        let (p, q) = (0.1, 0.2);
        let j = cascade(p, q);
        for beta in [0.0, 0.05, 0.2, 0.37, 0.5] {
            let tc = TestChannel::bsc(beta).unwrap();
            let pb = star(pr(p), pr(beta));
            let wsk = hb(star(pb, pr(q)).get()) - hb(pb.get());
            let rate = hb(pb.get()) - hb(beta);
            assert!((objective_wsk(&j, &tc).unwrap() - wsk).abs() < 1e-12);
            assert!((rate_constraint(&j, &tc).unwrap() - rate).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_eval_agrees_with_joint_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let j = DiscreteJoint::from_chain(
            &[0.2, 0.5, 0.3],
            &[vec![0.7, 0.2, 0.1], vec![0.1, 0.8, 0.1], vec![0.3, 0.3, 0.4]],
            &[vec![0.9, 0.1], vec![0.4, 0.6], vec![0.5, 0.5]],
        )
        .unwrap();
        let fe = FastEval::new(&j);
        for _ in 0..50 {
            let tc = TestChannel::random(3, 3, &mut rng);
            let (iyu, izu, rate) = fe.eval(tc.rows());
            assert!((iyu - objective_rec(&j, &tc).unwrap()).abs() < 1e-12);
            assert!((iyu - izu - objective_wsk(&j, &tc).unwrap()).abs() < 1e-12);
            assert!((rate - rate_constraint(&j, &tc).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn wsk_objective_invariant_under_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let j = cascade(0.15, 0.3);
        for _ in 0..20 {
            let tc = TestChannel::random(2, 2, &mut rng);
            let swapped = tc.permute_outputs(&[1, 0]).unwrap();
            let a = objective_wsk(&j, &tc).unwrap();
            let b = objective_wsk(&j, &swapped).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(TestChannel::identity(2).permute_outputs(&[0, 0]).is_err());
    }

    #[test]
    fn test_channel_validation() {
        assert!(TestChannel::new(vec![vec![0.5, 0.5, 0.0], vec![0.2, 0.3, 0.5]]).is_err());
        assert!(TestChannel::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
        let j = cascade(0.1, 0.1);
        assert!(matches!(
            objective_wsk(&j, &TestChannel::identity(3)),
            Err(crate::Error::Usage(_))
        ));
    }

    #[test]
    fn twoway_with_constant_v_reduces_to_one_way() {
        let j = cascade(0.1, 0.25);
        let tc = TestChannel::bsc(0.2).unwrap();
        let tw = TwoWayChannels::one_way(tc.clone(), 2);
        let sk = objective_twoway(&j, &tw, TwoWayMode::Sk).unwrap();
        assert!((sk.value - objective_rec(&j, &tc).unwrap()).abs() < 1e-12);
        let wsk = objective_twoway(&j, &tw, TwoWayMode::Wsk).unwrap();
        assert!((wsk.value - objective_wsk(&j, &tc).unwrap()).abs() < 1e-12);
        assert!((sk.r1_used - rate_constraint(&j, &tc).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn twoway_bob_sends_everything() {
        let j = cascade(0.1, 0.25);
        let u = TestChannel::constant(2, vec![1.0]).unwrap();
        // V = Y regardless of U.
        let tw = TwoWayChannels::new(u, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let v = objective_twoway(&j, &tw, TwoWayMode::Sk).unwrap();
        let ixy = j.mutual_information(&[0], &[1], Units::Bits).unwrap();
        assert!((v.value - ixy).abs() < 1e-12);
        let hyx = j.pmf().conditional_entropy(&[1], &[0], Units::Bits).unwrap();
        assert!((v.r2_used - hyx).abs() < 1e-12);
        assert!(v.r1_used.abs() < 1e-12);
    }

    #[test]
    fn twoway_wsk_brackets_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let masses = dirichlet_flat(8, &mut rng);
            let j = DiscreteJoint::new([2, 2, 2], masses).unwrap();
            let u = TestChannel::random(2, 2, &mut rng);
            let v_rows = (0..4).map(|_| dirichlet_flat(2, &mut rng)).collect();
            let tw = TwoWayChannels::new(u, v_rows).unwrap();
            let r = objective_twoway(&j, &tw, TwoWayMode::Wsk).unwrap();
            assert!(r.value >= 0.0);
            assert!(r.r1_used >= 0.0 && r.r2_used >= 0.0);
        }
    }

    #[test]
    fn convexity_endpoints_and_degenerate_mixtures() {
        let j = cascade(0.1, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = TestChannel::random(2, 2, &mut rng);
        let b = TestChannel::random(2, 2, &mut rng);
        for lambda in [0.0, 1.0] {
            let m = a.mix(&b, lambda).unwrap();
            let expect = if lambda == 1.0 { &a } else { &b };
            assert_eq!(triple(&j, &m).unwrap(), triple(&j, expect).unwrap());
        }
        let same = a.mix(&a, 0.37).unwrap();
        let (ta, ts) = (triple(&j, &a).unwrap(), triple(&j, &same).unwrap());
        for i in 0..3 {
            assert!((ta[i] - ts[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn convexity_probe_small_joint() {
        let j = cascade(0.12, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let r = convexity_probe(&j, 200, &mut rng).unwrap();
        assert!(r.max_violation() <= 1e-10, "{r:?}");
    }
}
