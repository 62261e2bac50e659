//! Experiment configuration files (TOML).
//!
//! ```toml
//! [source]
//! kind = "bsc"        # bsc | bec | asymmetric | joint
//! p = 0.1
//! q = 0.2
//!
//! [channel]
//! kind = "identity"   # identity | bsc | rows
//!
//! [protocol]
//! n = 12
//! m = 4
//! k = 2
//! epsilon = 0.15
//! trials = 2000
//! seed = 1
//! decoder = "likelihood"
//! ```

use serde::{Deserialize, Serialize};

use keydist::binary::{AsymBinarySource, BscCascadeSource};
use keydist::protocol::{Decoder, EveView, ProtocolParams, Rates};
use keydist::{DiscreteJoint, OptimizerOptions, Prob, TestChannel, TwoWayChannels};

use crate::error::{CliError, CliResult};

/// The demo experiment shipped with the tool.
pub const DEMO_CONFIG: &str = include_str!("../configs/demo.toml");

fn at(path: &'static str) -> impl Fn(keydist::Error) -> CliError {
    move |e| CliError::config(path, e)
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    /// `Y = X ⊕ B(p)`, `Z = Y ⊕ B(q)`.
    Bsc {
        p: f64,
        q: f64,
        #[serde(default = "half")]
        prior: f64,
    },
    /// `Y = X ⊕ B(p)`, `Z` an erasure of `Y`.
    Bec { p: f64, erasure: f64 },
    /// Asymmetric binary links `X → Y → Z`.
    Asymmetric {
        p: f64,
        beta1: f64,
        beta2: f64,
        gamma1: f64,
        gamma2: f64,
    },
    /// Explicit pmf over `(X, Y, Z)`, row-major with `Z` fastest.
    Joint { dims: [usize; 3], masses: Vec<f64> },
}

impl SourceConfig {
    pub fn joint(&self) -> CliResult<DiscreteJoint> {
        match *self {
            SourceConfig::Bsc { p, q, prior } => {
                Prob::new(q).map_err(at("source.q"))?;
                let src = BscCascadeSource::new(p, q).map_err(at("source.p"))?;
                Ok(src.with_prior(prior).map_err(at("source.prior"))?.joint())
            }
            SourceConfig::Bec { p, erasure } => {
                let src = BscCascadeSource::new(p, 0.0).map_err(at("source.p"))?;
                let e = Prob::new(erasure).map_err(at("source.erasure"))?;
                Ok(src.erasure_joint(e))
            }
            SourceConfig::Asymmetric {
                p,
                beta1,
                beta2,
                gamma1,
                gamma2,
            } => {
                for (path, v) in [
                    ("source.p", p),
                    ("source.beta1", beta1),
                    ("source.beta2", beta2),
                    ("source.gamma1", gamma1),
                    ("source.gamma2", gamma2),
                ] {
                    Prob::new(v).map_err(at(path))?;
                }
                Ok(AsymBinarySource::new(p, beta1, beta2, gamma1, gamma2)?.joint())
            }
            SourceConfig::Joint { dims, ref masses } => {
                DiscreteJoint::new(dims, masses.clone()).map_err(at("source.masses"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelConfig {
    /// `U = X`, `V` constant.
    #[default]
    Identity,
    /// `U = X ⊕ B(beta)`, `V` constant.
    Bsc { beta: f64 },
    /// Explicit `p(u|x)` rows and optional `p(v|y,u)` rows indexed by `y·|U| + u`.
    Rows {
        rows: Vec<Vec<f64>>,
        #[serde(default)]
        v_rows: Option<Vec<Vec<f64>>>,
    },
}

impl ChannelConfig {
    pub fn channels(&self, j: &DiscreteJoint) -> CliResult<TwoWayChannels> {
        let [dx, dy, _] = j.dims();
        let tc = match self {
            ChannelConfig::Identity => TwoWayChannels::one_way(TestChannel::identity(dx), dy),
            ChannelConfig::Bsc { beta } => {
                if dx != 2 {
                    return Err(CliError::config("channel.kind", "a BSC test channel needs a binary X"));
                }
                TwoWayChannels::one_way(TestChannel::bsc(*beta).map_err(at("channel.beta"))?, dy)
            }
            ChannelConfig::Rows { rows, v_rows } => {
                let u = TestChannel::new(rows.clone()).map_err(at("channel.rows"))?;
                match v_rows {
                    None => TwoWayChannels::one_way(u, dy),
                    Some(v) => TwoWayChannels::new(u, v.clone()).map_err(at("channel.v_rows"))?,
                }
            }
        };
        tc.extend(j).map_err(|e| CliError::config("channel", e))?;
        Ok(tc)
    }
}

fn default_trials() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub epsilon: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub decoder: Decoder,
    #[serde(default)]
    pub eve_view: EveView,
    /// Overrides the construction rates (bits per symbol).
    #[serde(default)]
    pub rates: Option<Rates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "OptimizerConfig::default_starts")]
    pub starts: usize,
    #[serde(default = "OptimizerConfig::default_tol")]
    pub tol: f64,
    #[serde(default = "OptimizerConfig::default_iters")]
    pub max_iters: usize,
}

impl OptimizerConfig {
    fn default_starts() -> usize {
        OptimizerOptions::default().starts
    }
    fn default_tol() -> f64 {
        OptimizerOptions::default().tol
    }
    fn default_iters() -> usize {
        OptimizerOptions::default().max_iters
    }

    pub fn options(&self, seed: u64) -> CliResult<OptimizerOptions> {
        if self.starts == 0 {
            return Err(CliError::config("optimizer.starts", "must be positive"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(CliError::config("optimizer.tol", "must be positive"));
        }
        Ok(OptimizerOptions {
            starts: self.starts,
            seed,
            tol: self.tol,
            max_iters: self.max_iters,
            ..OptimizerOptions::default()
        })
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            starts: Self::default_starts(),
            tol: Self::default_tol(),
            max_iters: Self::default_iters(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub source: SourceConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default)]
    pub optimizer: Option<OptimizerConfig>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Config> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = match inner.span() {
                Some(span) => {
                    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                    format!("{} (line {line})", inner.message())
                }
                None => inner.message().to_string(),
            };
            CliError::config(if path == "." { "<root>".into() } else { path }, message)
        })
    }

    pub fn demo() -> Config {
        Config::parse(DEMO_CONFIG).expect("bundled demo config is valid")
    }

    /// Resolves the protocol section into simulator parameters.
    pub fn experiment(&self) -> CliResult<(DiscreteJoint, TwoWayChannels, ProtocolParams)> {
        let j = self.source.joint()?;
        let tc = self.channel.channels(&j)?;
        let pc = self
            .protocol
            .as_ref()
            .ok_or_else(|| CliError::config("protocol", "missing [protocol] section"))?;
        if !(pc.epsilon.is_finite() && pc.epsilon > 0.0) {
            return Err(CliError::config("protocol.epsilon", "must be positive"));
        }
        let rates = match pc.rates {
            Some(r) => r,
            None => Rates::from_construction(&j, &tc, pc.epsilon).map_err(|e| CliError::config("protocol.rates", e))?,
        };
        let params = ProtocolParams {
            n: pc.n,
            m: pc.m,
            k: pc.k,
            epsilon: pc.epsilon,
            trials: pc.trials,
            seed: pc.seed,
            decoder: pc.decoder,
            eve_view: pc.eve_view,
            rates,
        };
        params.validate().map_err(|e| {
            let field = match &e {
                keydist::Error::Usage(m) if m.contains("block length") => "protocol.n",
                keydist::Error::Usage(m) if m.contains("key length") => "protocol.k",
                keydist::Error::Usage(_) => "protocol",
                _ if pc.rates.is_some() => "protocol.rates",
                _ => "protocol.epsilon",
            };
            CliError::config(field, e)
        })?;
        Ok((j, tc, params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_config_resolves() {
        let c = Config::demo();
        let (j, _, p) = c.experiment().unwrap();
        assert_eq!(j.dims(), [2, 2, 2]);
        assert_eq!((p.n, p.m, p.k, p.trials), (12, 4, 2, 2000));
    }

    #[test]
    fn unknown_field_reports_path() {
        let err = Config::parse(
            "[source]\nkind = \"bsc\"\np = 0.1\nq = 0.2\n[protocol]\nn = 8\nm = 1\nk = 1\nepsilon = 0.1\nbogus = 3\n",
        )
        .unwrap_err();
        match err {
            CliError::Config { path, message } => {
                assert!(path.starts_with("protocol"), "{path}");
                assert!(message.contains("bogus"), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn type_error_reports_path() {
        let err = Config::parse("[source]\nkind = \"bsc\"\np = \"x\"\nq = 0.2\n").unwrap_err();
        // tagged sections report the section and where it starts
        assert!(
            matches!(err, CliError::Config { ref path, ref message } if path == "source" && message.contains("expected f64 (line 1)")),
            "{err}"
        );
    }

    #[test]
    fn semantic_errors_report_path() {
        let bad_p = Config::parse("[source]\nkind = \"bsc\"\np = 1.5\nq = 0.2\n").unwrap();
        assert!(matches!(bad_p.source.joint(), Err(CliError::Config { ref path, .. }) if path == "source.p"));
        let bad_q = Config::parse("[source]\nkind = \"bsc\"\np = 0.1\nq = -0.2\n").unwrap();
        assert!(matches!(bad_q.source.joint(), Err(CliError::Config { ref path, .. }) if path == "source.q"));
        let mut c = Config::demo();
        c.protocol.as_mut().unwrap().n = 40;
        assert!(matches!(c.experiment(), Err(CliError::Config { ref path, .. }) if path == "protocol.n"));
        let mut c = Config::demo();
        c.protocol.as_mut().unwrap().k = 100;
        assert!(matches!(c.experiment(), Err(CliError::Config { ref path, .. }) if path == "protocol.k"));
    }

    #[test]
    fn explicit_rows_and_rate_override() {
        let text = r#"
[source]
kind = "joint"
dims = [2, 2, 1]
masses = [0.45, 0.05, 0.05, 0.45]

[channel]
kind = "rows"
rows = [[1.0, 0.0], [0.0, 1.0]]

[protocol]
n = 8
m = 1
k = 1
epsilon = 0.1
rates = { r_u = 0.5, r_u_prime = 0.25, r_v = 0.0, r_v_prime = 0.0 }
"#;
        let (_, tc, p) = Config::parse(text).unwrap().experiment().unwrap();
        assert_eq!(tc.u_channel.u_size(), 2);
        assert_eq!(p.rates.r_u, 0.5);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = Config::demo();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(Config::parse(&text).unwrap(), c);
    }
}
