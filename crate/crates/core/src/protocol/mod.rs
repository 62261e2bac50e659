//! Sequential key distillation at desk scale: Wyner-Ziv style reconciliation
//! with random codebooks, followed by privacy amplification with a
//! `GF(2^N)` multiplication hash.

mod codebook;
mod experiment;
pub mod hash;
mod matcher;
mod reconcile;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{TwoWayChannels, AXIS_U, AXIS_V};
use crate::error::{domain, usage, Result};
use crate::info::Units;
use crate::joint::DiscreteJoint;

pub use codebook::{CodebookSizes, ReconCode};
pub use experiment::{run_experiment, RunMetrics};
pub use hash::{collision_probability, leftover_bound, privacy_amplify, seeded_distance, Gf2n};
pub use matcher::Decoder;
pub use reconcile::{reconcile, BlockOutcome, Reconciler};

/// Largest supported block length.
pub const MAX_BLOCK_LEN: usize = 14;

/// Counter-based generator for one independent stream of a run.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids; codeword streams occupy `[V_STREAM, TRIAL_STREAM)`.
pub(crate) const U_STREAM: u64 = 0;
pub(crate) const V_STREAM: u64 = 1;
pub(crate) const TRIAL_STREAM: u64 = 1 << 40;
pub(crate) const SHUFFLE_STREAM: u64 = 1 << 41;

/// What the eavesdropper's view is reduced to for the leakage estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveView {
    /// The key Eve obtains by decoding like Bob with `z` in place of `y`.
    #[default]
    DecodedKey,
    /// The type of `z` together with all public messages.
    Type,
}

/// Code rates in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// Bin-index rate of the `U` code (sent by Alice).
    pub r_u: f64,
    /// In-bin rate of the `U` code.
    pub r_u_prime: f64,
    /// Bin-index rate of the `V` code (sent by Bob).
    pub r_v: f64,
    /// In-bin rate of the `V` code.
    pub r_v_prime: f64,
}

impl Rates {
    /// Rates of the random-binning construction with slack `epsilon`
    /// (`2 epsilon` for the second round).
    pub fn from_construction(j: &DiscreteJoint, tc: &TwoWayChannels, epsilon: f64) -> Result<Rates> {
        let e = tc.extend(j)?;
        let b = Units::Bits;
        let (x, y, u, v) = (DiscreteJoint::X, DiscreteJoint::Y, AXIS_U, AXIS_V);
        let h_u = e.entropy(&[u], b)?;
        let h_v_u = e.conditional_entropy(&[v], &[u], b)?;
        let eps2 = 2.0 * epsilon;
        Ok(Rates {
            r_u: e.conditional_mutual_information(&[x], &[u], &[y], b)? + 6.0 * epsilon * h_u,
            r_u_prime: (e.mutual_information(&[y], &[u], b)? - 3.0 * epsilon * h_u).max(0.0),
            r_v: e.conditional_mutual_information(&[v], &[y], &[x, u], b)? + 6.0 * eps2 * h_v_u,
            r_v_prime: (e.conditional_mutual_information(&[v], &[x], &[u], b)? - 3.0 * eps2 * h_v_u).max(0.0),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Block length.
    pub n: usize,
    /// Number of reconciled blocks fed to one hash.
    pub m: usize,
    /// Key length in bits.
    pub k: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub decoder: Decoder,
    pub eve_view: EveView,
    pub rates: Rates,
}

impl ProtocolParams {
    pub fn from_construction(
        j: &DiscreteJoint,
        tc: &TwoWayChannels,
        n: usize,
        m: usize,
        k: usize,
        epsilon: f64,
    ) -> Result<ProtocolParams> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(domain(format!("typicality slack {epsilon} must be positive")));
        }
        let p = ProtocolParams {
            n,
            m,
            k,
            epsilon,
            trials: 500,
            seed: 0,
            decoder: Decoder::default(),
            eve_view: EveView::default(),
            rates: Rates::from_construction(j, tc, epsilon)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_BLOCK_LEN).contains(&self.n) {
            return Err(usage(format!("block length {} outside 1..={MAX_BLOCK_LEN}", self.n)));
        }
        if self.m == 0 || self.trials == 0 {
            return Err(usage("block count and trial count must be positive"));
        }
        if self.k == 0 || self.k > self.n * self.m {
            return Err(usage(format!("key length {} outside 1..={}", self.k, self.n * self.m)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(domain(format!("typicality slack {} must be positive", self.epsilon)));
        }
        let r = &self.rates;
        for (name, v) in [
            ("r_u", r.r_u),
            ("r_u_prime", r.r_u_prime),
            ("r_v", r.r_v),
            ("r_v_prime", r.r_v_prime),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("rate {name} = {v} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// `n` i.i.d. draws of `(X, Y, Z)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Samples {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
}

pub(crate) struct Sampler {
    index: WeightedIndex<f64>,
    dims: [usize; 3],
}

impl Sampler {
    pub fn new(j: &DiscreteJoint) -> Sampler {
        Sampler {
            index: WeightedIndex::new(j.pmf().masses()).expect("a valid pmf has positive total mass"),
            dims: j.dims(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize, usize) {
        let f = self.index.sample(rng);
        let [_, dy, dz] = self.dims;
        (f / (dy * dz), (f / dz) % dy, f % dz)
    }
}

/// Draws `n` source symbols with a generator seeded by `seed`.
pub fn sample_source(j: &DiscreteJoint, n: usize, seed: u64) -> Samples {
    let sampler = Sampler::new(j);
    let mut rng = stream_rng(seed, U_STREAM);
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
    }
    s
}
