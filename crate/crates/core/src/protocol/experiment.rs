use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{CodebookSizes, ReconCode};
use super::hash::{privacy_amplify, Gf2n, MAX_FIELD_BITS};
use super::reconcile::{BlockOutcome, Reconciler};
use super::{stream_rng, EveView, ProtocolParams, Sampler, Samples, SHUFFLE_STREAM, TRIAL_STREAM};
use crate::channel::TwoWayChannels;
use crate::error::{Error, Result};
use crate::joint::DiscreteJoint;

/// Shuffles used to estimate the plug-in leakage bias.
pub const BIAS_SHUFFLES: usize = 20;

const Z_95: f64 = 1.959_963_984_540_054;

/// Aggregate statistics of one simulation run. Entropies are in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub trials: usize,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Bits of reconciled material per trial, i.e. the hash field degree.
    pub field_bits: usize,
    pub sizes: CodebookSizes,
    /// `P[K̂ ≠ K]`.
    pub p_e: f64,
    pub p_e_ci: (f64, f64),
    /// Fraction of blocks whose reconciled sequences differ.
    pub block_error_rate: f64,
    /// Fraction of trials with at least one differing block.
    pub recon_error_rate: f64,
    pub encode_failure_rate: f64,
    pub decode_failure_rate: f64,
    /// `k − Ĥ(K)`.
    pub uniformity_est: f64,
    /// Plug-in `Î(K; Eve's view)`.
    pub leakage_est: f64,
    /// Mean plug-in estimate after shuffling keys against views.
    pub leakage_bias: f64,
    pub high_error: bool,
}

impl RunMetrics {
    /// Leakage with the shuffle baseline removed, floored at zero.
    pub fn leakage_corrected(&self) -> f64 {
        (self.leakage_est - self.leakage_bias).max(0.0)
    }
}

fn symbol_bits(d: usize) -> usize {
    if d <= 1 {
        0
    } else {
        (usize::BITS - (d - 1).leading_zeros()) as usize
    }
}

/// Packs `U` then `V` symbols of each block into the low bits of a word.
fn pack(blocks: &[&[u8]], n: usize, bu: usize, bv: usize) -> u64 {
    let mut word = 0u64;
    let mut at = 0;
    for b in blocks {
        for (i, &sym) in b.iter().enumerate() {
            let w = if i < n { bu } else { bv };
            if w > 0 {
                word |= (sym as u64) << at;
                at += w;
            }
        }
    }
    word
}

fn wilson(successes: usize, trials: usize) -> (f64, f64) {
    let nf = trials as f64;
    let p = successes as f64 / nf;
    let z2 = Z_95 * Z_95;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = Z_95 / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn plugin_entropy<K: Ord>(items: impl IntoIterator<Item = K>) -> f64 {
    let mut counts: BTreeMap<K, usize> = BTreeMap::new();
    let mut total = 0usize;
    for k in items {
        *counts.entry(k).or_default() += 1;
        total += 1;
    }
    let t = total as f64;
    counts.values().map(|&c| -(c as f64 / t) * (c as f64 / t).log2()).sum()
}

fn plugin_mi(keys: &[u64], views: &[Vec<u64>]) -> f64 {
    let h_k = plugin_entropy(keys.iter().copied());
    let h_v = plugin_entropy(views.iter());
    let h_kv = plugin_entropy(keys.iter().zip(views));
    (h_k + h_v - h_kv).max(0.0)
}

struct Trial {
    key: u64,
    bob_key: u64,
    view: Vec<u64>,
    block_errors: usize,
    encode_failures: usize,
    decode_failures: usize,
}

/// Runs `params.trials` independent trials of reconciliation followed by
/// privacy amplification and summarizes them.
pub fn run_experiment(j: &DiscreteJoint, tc: &TwoWayChannels, params: &ProtocolParams) -> Result<RunMetrics> {
    params.validate()?;
    let code = ReconCode::new(j, tc, params)?;
    let reconciler = Reconciler::new(&code, j, tc, params)?;
    let (n, m, k) = (params.n, params.m, params.k);
    let bu = symbol_bits(tc.u_channel.u_size());
    let bv = symbol_bits(tc.v_size());
    let field_bits = m * n * (bu + bv);
    if field_bits > MAX_FIELD_BITS {
        return Err(Error::Resource(format!(
            "{field_bits} reconciled bits exceed the {MAX_FIELD_BITS}-bit hash field"
        )));
    }
    if field_bits < k {
        return Err(Error::Usage(format!(
            "key length {k} exceeds the {field_bits} reconciled bits"
        )));
    }
    let field = Gf2n::new(field_bits)?;
    let sampler = Sampler::new(j);
    let dz = j.dims()[2];

    let run_trial = |t: usize| -> Result<Trial> {
        let mut rng = stream_rng(params.seed, TRIAL_STREAM + t as u64);
        let mut outcomes: Vec<BlockOutcome> = Vec::with_capacity(m);
        let mut z_type = vec![0u64; dz];
        for _ in 0..m {
            let mut s = Samples {
                x: Vec::with_capacity(n),
                y: Vec::with_capacity(n),
                z: Vec::with_capacity(n),
            };
            for _ in 0..n {
                let (x, y, z) = sampler.draw(&mut rng);
                s.x.push(x);
                s.y.push(y);
                s.z.push(z);
                z_type[z] += 1;
            }
            outcomes.push(reconciler.run(&s));
        }
        let seed = rng.random::<u64>() & field.mask();
        let packed = |f: fn(&BlockOutcome) -> &[u8]| {
            let blocks: Vec<&[u8]> = outcomes.iter().map(f).collect();
            pack(&blocks, n, bu, bv)
        };
        let key = privacy_amplify(&field, packed(|o| &o.alice), seed, k)?;
        let bob_key = privacy_amplify(&field, packed(|o| &o.bob), seed, k)?;
        let view = match params.eve_view {
            EveView::DecodedKey => vec![privacy_amplify(&field, packed(|o| &o.eve), seed, k)?],
            EveView::Type => {
                let mut v = z_type;
                v.extend(outcomes.iter().flat_map(|o| [o.omega as u64, o.v_bin as u64]));
                v
            }
        };
        Ok(Trial {
            key,
            bob_key,
            view,
            block_errors: outcomes.iter().filter(|o| !o.agrees()).count(),
            encode_failures: outcomes.iter().filter(|o| o.encode_failure).count(),
            decode_failures: outcomes.iter().filter(|o| o.decode_failure).count(),
        })
    };
    let trials: Vec<Trial> = (0..params.trials)
        .into_par_iter()
        .map(run_trial)
        .collect::<Result<_>>()?;

    let t = trials.len();
    let blocks = (t * m) as f64;
    let errors = trials.iter().filter(|r| r.key != r.bob_key).count();
    let p_e = errors as f64 / t as f64;
    let keys: Vec<u64> = trials.iter().map(|r| r.key).collect();
    let views: Vec<Vec<u64>> = trials.iter().map(|r| r.view.clone()).collect();
    let leakage_est = plugin_mi(&keys, &views);
    let mut shuffle_rng = stream_rng(params.seed, SHUFFLE_STREAM);
    let mut shuffled = keys.clone();
    let leakage_bias = (0..BIAS_SHUFFLES)
        .map(|_| {
            shuffled.shuffle(&mut shuffle_rng);
            plugin_mi(&shuffled, &views)
        })
        .sum::<f64>()
        / BIAS_SHUFFLES as f64;

    Ok(RunMetrics {
        trials: t,
        n,
        m,
        k,
        field_bits,
        sizes: code.sizes(),
        p_e,
        p_e_ci: wilson(errors, t),
        block_error_rate: trials.iter().map(|r| r.block_errors).sum::<usize>() as f64 / blocks,
        recon_error_rate: trials.iter().filter(|r| r.block_errors > 0).count() as f64 / t as f64,
        encode_failure_rate: trials.iter().map(|r| r.encode_failures).sum::<usize>() as f64 / blocks,
        decode_failure_rate: trials.iter().map(|r| r.decode_failures).sum::<usize>() as f64 / blocks,
        uniformity_est: k as f64 - plugin_entropy(keys.iter().copied()),
        leakage_est,
        leakage_bias,
        high_error: p_e > 0.5,
    })
}
