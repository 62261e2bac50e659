use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use super::{stream_rng, ProtocolParams, U_STREAM, V_STREAM};
use crate::channel::{TwoWayChannels, AXIS_U, AXIS_V};
use crate::error::{Error, Result};
use crate::joint::DiscreteJoint;

/// Largest `U` codebook materialized in memory.
pub const MAX_U_WORDS: usize = 1 << 22;
/// Largest `V` codebook generated for one `U` codeword.
pub const MAX_V_WORDS: usize = 1 << 20;

/// Realized codebook dimensions: `⌈2^{n·rate}⌉` for each rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookSizes {
    pub u_bins: usize,
    pub u_bin_size: usize,
    pub v_bins: usize,
    pub v_bin_size: usize,
}

fn size_for(n: usize, rate: f64, what: &str) -> Result<usize> {
    let e = n as f64 * rate;
    if e > 40.0 {
        return Err(Error::Resource(format!("{what} needs 2^{e:.1} codewords")));
    }
    Ok(((e.exp2() - 1e-9).ceil() as usize).max(1))
}

impl CodebookSizes {
    pub fn new(p: &ProtocolParams) -> Result<CodebookSizes> {
        let s = CodebookSizes {
            u_bins: size_for(p.n, p.rates.r_u, "U code")?,
            u_bin_size: size_for(p.n, p.rates.r_u_prime, "U code")?,
            v_bins: size_for(p.n, p.rates.r_v, "V code")?,
            v_bin_size: size_for(p.n, p.rates.r_v_prime, "V code")?,
        };
        let u_total = s.u_bins.checked_mul(s.u_bin_size).filter(|&t| t <= MAX_U_WORDS);
        if u_total.is_none() {
            return Err(Error::Resource(format!(
                "U codebook of {} x {} words exceeds {MAX_U_WORDS}",
                s.u_bins, s.u_bin_size
            )));
        }
        let v_total = s.v_bins.checked_mul(s.v_bin_size).filter(|&t| t <= MAX_V_WORDS);
        if v_total.is_none() {
            return Err(Error::Resource(format!(
                "V codebook of {} x {} words exceeds {MAX_V_WORDS}",
                s.v_bins, s.v_bin_size
            )));
        }
        Ok(s)
    }

    pub fn u_words(&self) -> usize {
        self.u_bins * self.u_bin_size
    }

    pub fn v_words(&self) -> usize {
        self.v_bins * self.v_bin_size
    }
}

/// Random codebooks shared by Alice, Bob and Eve.
///
/// `U` codewords are indexed by `ω · u_bin_size + ν` and drawn i.i.d. from
/// `p_U`. For each `U` codeword the `V` codewords, indexed by
/// `k · v_bin_size + l`, are drawn letter by letter from `p_{V|U}`; they are
/// regenerated on demand from a per-codeword stream.
#[derive(Debug, Clone)]
pub struct ReconCode {
    n: usize,
    sizes: CodebookSizes,
    u_words: Vec<u8>,
    /// Flat index of the first occurrence of each distinct `U` word, ascending.
    distinct: Vec<u32>,
    v_size: usize,
    v_given_u: Vec<Option<WeightedIndex<f64>>>,
    seed: u64,
}

impl ReconCode {
    pub fn new(j: &DiscreteJoint, tc: &TwoWayChannels, params: &ProtocolParams) -> Result<ReconCode> {
        params.validate()?;
        let sizes = CodebookSizes::new(params)?;
        let ext = tc.extend(j)?;
        let du = tc.u_channel.u_size();
        let dv = tc.v_size();
        if du > 256 || dv > 256 {
            return Err(Error::Resource("auxiliary alphabets are limited to 256 symbols".into()));
        }
        let p_u = ext.marginal(&[AXIS_U])?;
        let p_uv = ext.marginal(&[AXIS_U, AXIS_V])?;
        let n = params.n;

        let u_dist = WeightedIndex::new(&p_u).map_err(|e| Error::Domain(e.to_string()))?;
        let mut rng = stream_rng(params.seed, U_STREAM);
        let total = sizes.u_words();
        let mut u_words = Vec::with_capacity(total * n);
        for _ in 0..total * n {
            u_words.push(u_dist.sample(&mut rng) as u8);
        }
        let mut first: HashMap<&[u8], u32> = HashMap::new();
        for f in 0..total {
            first.entry(&u_words[f * n..(f + 1) * n]).or_insert(f as u32);
        }
        let mut distinct: Vec<u32> = first.into_values().collect();
        distinct.sort_unstable();

        let v_given_u = (0..du)
            .map(|u| {
                let row = &p_uv[u * dv..(u + 1) * dv];
                if p_u[u] > 0.0 {
                    WeightedIndex::new(row).ok()
                } else {
                    None
                }
            })
            .collect();
        Ok(ReconCode {
            n,
            sizes,
            u_words,
            distinct,
            v_size: dv,
            v_given_u,
            seed: params.seed,
        })
    }

    pub fn sizes(&self) -> CodebookSizes {
        self.sizes
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn u_word(&self, flat: usize) -> &[u8] {
        &self.u_words[flat * self.n..(flat + 1) * self.n]
    }

    pub fn distinct_u_words(&self) -> usize {
        self.distinct.len()
    }

    /// Distinct `U` words in order of their lowest flat index.
    pub(crate) fn u_candidates(&self) -> impl Iterator<Item = (usize, &[u8])> {
        self.distinct.iter().map(|&f| (f as usize, self.u_word(f as usize)))
    }

    /// The words of bin `omega`, keyed by in-bin index.
    pub(crate) fn u_bin(&self, omega: usize) -> impl Iterator<Item = (usize, &[u8])> {
        let base = omega * self.sizes.u_bin_size;
        (0..self.sizes.u_bin_size).map(move |nu| (nu, self.u_word(base + nu)))
    }

    /// All `V` words attached to `U` codeword `u_flat`, flattened.
    pub fn v_codebook(&self, u_flat: usize) -> Vec<u8> {
        let total = self.sizes.v_words() * self.n;
        if self.v_size == 1 {
            return vec![0; total];
        }
        let u = self.u_word(u_flat);
        let mut rng = stream_rng(self.seed, V_STREAM + u_flat as u64);
        let mut out = Vec::with_capacity(total);
        for _ in 0..self.sizes.v_words() {
            for &sym in u {
                let dist = self.v_given_u[sym as usize]
                    .as_ref()
                    .expect("codeword symbols have positive mass");
                out.push(dist.sample(&mut rng) as u8);
            }
        }
        out
    }
}
