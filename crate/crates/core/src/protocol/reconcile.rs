use super::codebook::ReconCode;
use super::matcher::{Decoder, Matcher};
use super::{ProtocolParams, Samples};
use crate::channel::{TwoWayChannels, AXIS_U, AXIS_V};
use crate::error::{usage, Result};
use crate::joint::DiscreteJoint;

/// What each party ends up with after one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockOutcome {
    /// Public bin index of Alice's `U` codeword.
    pub omega: usize,
    /// Public bin index of Bob's `V` codeword.
    pub v_bin: usize,
    /// `U` then `V` symbols as held by Alice, Bob and Eve (`2n` each).
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
    pub eve: Vec<u8>,
    /// A covering step (Alice's `U` or Bob's `V`) found no codeword.
    pub encode_failure: bool,
    /// A decoding step (Bob's `U` or Alice's `V`) found no codeword.
    pub decode_failure: bool,
}

impl BlockOutcome {
    pub fn agrees(&self) -> bool {
        self.alice == self.bob
    }
}

/// `ln q(a | b, c)` over a pmf laid out as `(a, b, c)` with `c` fastest.
fn cond_first(q: &[f64], da: usize, dbc: usize) -> Vec<f64> {
    let mut bc = vec![0.0; dbc];
    for a in 0..da {
        for i in 0..dbc {
            bc[i] += q[a * dbc + i];
        }
    }
    q.iter().enumerate().map(|(f, &m)| m.ln() - bc[f % dbc].ln()).collect()
}

/// `ln q(c | a, b) − ln q(c | b)` over a pmf laid out as `(a, b, c)`.
fn cond_gain(q: &[f64], da: usize, db: usize, dc: usize) -> Vec<f64> {
    let mut ab = vec![0.0; da * db];
    let mut bc = vec![0.0; db * dc];
    let mut b_m = vec![0.0; db];
    for a in 0..da {
        for b in 0..db {
            for c in 0..dc {
                let m = q[(a * db + b) * dc + c];
                ab[a * db + b] += m;
                bc[b * dc + c] += m;
                b_m[b] += m;
            }
        }
    }
    let mut out = Vec::with_capacity(q.len());
    for a in 0..da {
        for b in 0..db {
            for c in 0..dc {
                let m = q[(a * db + b) * dc + c];
                out.push(m.ln() - ab[a * db + b].ln() - bc[b * dc + c].ln() + b_m[b].ln());
            }
        }
    }
    out
}

/// Per-block decision rules of the three parties for a fixed codebook.
#[derive(Debug, Clone)]
pub struct Reconciler<'a> {
    code: &'a ReconCode,
    decoder: Decoder,
    du: usize,
    dv: usize,
    alice_u: Matcher,
    bob_u: Matcher,
    eve_u: Matcher,
    bob_v: Matcher,
    alice_v: Matcher,
    eve_v: Matcher,
}

impl<'a> Reconciler<'a> {
    pub fn new(
        code: &'a ReconCode,
        j: &DiscreteJoint,
        tc: &TwoWayChannels,
        params: &ProtocolParams,
    ) -> Result<Reconciler<'a>> {
        if code.block_len() != params.n {
            return Err(usage("codebook block length differs from the protocol block length"));
        }
        let ext = tc.extend(j)?;
        let [dx, dy, dz] = j.dims();
        let (du, dv) = (tc.u_channel.u_size(), tc.v_size());
        if dx.max(dy).max(dz) * du > u16::MAX as usize {
            return Err(usage("alphabets too large for the simulator"));
        }
        let (n, e1, e2) = (params.n, params.epsilon, 2.0 * params.epsilon);
        let (x, y, z) = (DiscreteJoint::X, DiscreteJoint::Y, DiscreteJoint::Z);

        let one_round = |obs: usize, d: usize| -> Result<Matcher> {
            let q = ext.marginal(&[obs, AXIS_U])?;
            Ok(Matcher::new(&q, cond_first(&q, d, du), du, n, e1))
        };
        let second_round = |obs: usize, d: usize| -> Result<Matcher> {
            let q = ext.marginal(&[obs, AXIS_U, AXIS_V])?;
            Ok(Matcher::new(&q, cond_first(&q, d, du * dv), dv, n, e2))
        };
        let q_yuv = ext.marginal(&[y, AXIS_U, AXIS_V])?;
        let bob_v = Matcher::new(&q_yuv, cond_gain(&q_yuv, dy, du, dv), dv, n, e2);
        Ok(Reconciler {
            code,
            decoder: params.decoder,
            du,
            dv,
            alice_u: one_round(x, dx)?,
            bob_u: one_round(y, dy)?,
            eve_u: one_round(z, dz)?,
            bob_v,
            alice_v: second_round(x, dx)?,
            eve_v: second_round(z, dz)?,
        })
    }

    fn joint_obs(&self, obs: &[usize], u: &[u8]) -> Vec<u16> {
        obs.iter()
            .zip(u)
            .map(|(&o, &u)| (o * self.du + u as usize) as u16)
            .collect()
    }

    /// Decodes `U` inside bin `omega` and then `V` inside bin `v_bin`.
    fn follow(&self, u_m: &Matcher, v_m: &Matcher, obs: &[usize], omega: usize, v_bin: usize) -> (Vec<u8>, bool) {
        let code = self.code;
        let o: Vec<u16> = obs.iter().map(|&v| v as u16).collect();
        let nu = u_m.pick(self.decoder, &o, code.u_bin(omega));
        let u_flat = omega * code.sizes().u_bin_size + nu.unwrap_or(0);
        if self.dv == 1 {
            let mut held = code.u_word(u_flat).to_vec();
            held.extend(std::iter::repeat_n(0, code.block_len()));
            return (held, nu.is_none());
        }
        let (held, failed) = self.follow_v(v_m, obs, u_flat, v_bin);
        (held, failed || nu.is_none())
    }

    pub fn run(&self, s: &Samples) -> BlockOutcome {
        let code = self.code;
        let n = code.block_len();
        assert_eq!(s.x.len(), n, "block length mismatch");

        let ox: Vec<u16> = s.x.iter().map(|&v| v as u16).collect();
        let a_u = self.alice_u.pick(self.decoder, &ox, code.u_candidates());
        let mut encode_failure = a_u.is_none();
        let a_flat = a_u.unwrap_or(0);
        let omega = a_flat / code.sizes().u_bin_size;

        let oy: Vec<u16> = s.y.iter().map(|&v| v as u16).collect();
        let nu = self.bob_u.pick(self.decoder, &oy, code.u_bin(omega));
        let mut decode_failure = nu.is_none();
        let b_flat = omega * code.sizes().u_bin_size + nu.unwrap_or(0);

        let mut bob = code.u_word(b_flat).to_vec();
        let mut alice = code.u_word(a_flat).to_vec();
        let v_bin = if self.dv == 1 {
            bob.extend(std::iter::repeat_n(0, n));
            alice.extend(std::iter::repeat_n(0, n));
            0
        } else {
            let book = code.v_codebook(b_flat);
            let o = self.joint_obs(&s.y, code.u_word(b_flat));
            let words = book.chunks_exact(n).enumerate();
            let pick = self.bob_v.pick(self.decoder, &o, words);
            encode_failure |= pick.is_none();
            let f = pick.unwrap_or(0);
            bob.extend_from_slice(&book[f * n..(f + 1) * n]);
            let v_bin = f / code.sizes().v_bin_size;
            let (held, failed) = self.follow_v(&self.alice_v, &s.x, a_flat, v_bin);
            alice = held;
            decode_failure |= failed;
            v_bin
        };
        let (eve, _) = self.follow(&self.eve_u, &self.eve_v, &s.z, omega, v_bin);
        BlockOutcome {
            omega,
            v_bin,
            alice,
            bob,
            eve,
            encode_failure,
            decode_failure,
        }
    }

    /// Alice knows her own `U` codeword and only resolves `V` in bin `v_bin`.
    fn follow_v(&self, v_m: &Matcher, obs: &[usize], u_flat: usize, v_bin: usize) -> (Vec<u8>, bool) {
        let code = self.code;
        let n = code.block_len();
        let u = code.u_word(u_flat);
        let book = code.v_codebook(u_flat);
        let bin = code.sizes().v_bin_size;
        let o = self.joint_obs(obs, u);
        let words = (0..bin).map(|l| (l, &book[(v_bin * bin + l) * n..(v_bin * bin + l + 1) * n]));
        let l = v_m.pick(self.decoder, &o, words);
        let f = v_bin * bin + l.unwrap_or(0);
        let mut held = u.to_vec();
        held.extend_from_slice(&book[f * n..(f + 1) * n]);
        (held, l.is_none())
    }
}

/// Runs one block of the two-round reconciliation.
pub fn reconcile(
    code: &ReconCode,
    j: &DiscreteJoint,
    tc: &TwoWayChannels,
    params: &ProtocolParams,
    block: &Samples,
) -> Result<BlockOutcome> {
    if block.x.len() != params.n || block.y.len() != params.n || block.z.len() != params.n {
        return Err(usage("block length differs from the protocol block length"));
    }
    Ok(Reconciler::new(code, j, tc, params)?.run(block))
}
