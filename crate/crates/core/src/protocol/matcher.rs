use serde::{Deserialize, Serialize};

/// How a party picks a codeword matching its observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decoder {
    /// Lowest-index codeword jointly robust-typical with the observation.
    #[default]
    Typicality,
    /// Codeword with the largest conditional log-likelihood, lowest index on ties.
    Likelihood,
}

/// Scores candidate sequences `c` against an observed sequence `o` under a
/// pair pmf `q(o, c)` stored row-major with `c` fastest.
#[derive(Debug, Clone)]
pub(crate) struct Matcher {
    c_size: usize,
    /// Per-letter log-likelihood (or log-ratio) contributions.
    score: Vec<f64>,
    /// Allowed count range of each pair in a typical sequence of length `n`.
    lo: Vec<u32>,
    hi: Vec<u32>,
}

impl Matcher {
    /// `pair` is `q(o, c)`; `score` the matching per-letter log score.
    pub fn new(pair: &[f64], score: Vec<f64>, c_size: usize, n: usize, eps: f64) -> Matcher {
        let nf = n as f64;
        let mut lo = Vec::with_capacity(pair.len());
        let mut hi = Vec::with_capacity(pair.len());
        for &q in pair {
            let a = nf * q * (1.0 - eps);
            let b = nf * q * (1.0 + eps);
            lo.push((a - 1e-9).ceil().max(0.0) as u32);
            hi.push((b + 1e-9).floor().max(0.0) as u32);
        }
        Matcher { c_size, score, lo, hi }
    }

    /// `|N(a)/n − q(a)| ≤ ε q(a)` for every pair `a`.
    pub fn typical(&self, obs: &[u16], cand: &[u8], counts: &mut Vec<u32>) -> bool {
        counts.clear();
        counts.resize(self.lo.len(), 0);
        for (&o, &c) in obs.iter().zip(cand) {
            counts[o as usize * self.c_size + c as usize] += 1;
        }
        counts
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&n, (&lo, &hi))| n >= lo && n <= hi)
    }

    pub fn log_score(&self, obs: &[u16], cand: &[u8]) -> f64 {
        obs.iter()
            .zip(cand)
            .map(|(&o, &c)| self.score[o as usize * self.c_size + c as usize])
            .sum()
    }

    /// Index of the chosen candidate, or `None` when nothing qualifies.
    pub fn pick<'a, I>(&self, decoder: Decoder, obs: &[u16], candidates: I) -> Option<usize>
    where
        I: IntoIterator<Item = (usize, &'a [u8])>,
    {
        match decoder {
            Decoder::Typicality => {
                let mut counts = Vec::new();
                candidates
                    .into_iter()
                    .find(|(_, c)| self.typical(obs, c, &mut counts))
                    .map(|(i, _)| i)
            }
            Decoder::Likelihood => {
                let mut best: Option<(usize, f64)> = None;
                for (i, c) in candidates {
                    let s = self.log_score(obs, c);
                    if s > f64::NEG_INFINITY && best.is_none_or(|(_, b)| s > b) {
                        best = Some((i, s));
                    }
                }
                best.map(|(i, _)| i)
            }
        }
    }
}
