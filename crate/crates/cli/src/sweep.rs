use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

/// A one-dimensional parameter sweep.
///
/// The textual form is `scale:start:stop:points`, e.g. `linear:0:1:21` or
/// `log:0.01:10:20`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: String,
    pub scale: Scale,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Parameters held constant along the sweep.
    pub fixed: BTreeMap<String, f64>,
}

/// Upper limit on grid points per sweep.
pub const MAX_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub scale: Scale,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(scale: Scale, start: f64, stop: f64, points: usize) -> Result<Grid, CliError> {
        if !(start.is_finite() && stop.is_finite()) {
            return Err(CliError::Param(format!("grid bounds {start}, {stop} must be finite")));
        }
        if start >= stop {
            return Err(CliError::Param(format!("grid start {start} must be below stop {stop}")));
        }
        if !(2..=MAX_POINTS).contains(&points) {
            return Err(CliError::Param(format!(
                "grid needs 2..={MAX_POINTS} points, got {points}"
            )));
        }
        if scale == Scale::Log && start <= 0.0 {
            return Err(CliError::Param(format!("log grid start {start} must be positive")));
        }
        Ok(Grid {
            scale,
            start,
            stop,
            points,
        })
    }

    /// Grid values; the endpoints are exact.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    return self.stop;
                }
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.start + t * (self.stop - self.start),
                    Scale::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Grid, CliError> {
        let bad = |m: &str| CliError::Format {
            what: "grid",
            message: format!("`{s}`: {m} (expected scale:start:stop:points)"),
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [scale, start, stop, points] = parts[..] else {
            return Err(bad("wrong number of fields"));
        };
        let scale = match scale {
            "linear" | "lin" => Scale::Linear,
            "log" => Scale::Log,
            _ => return Err(bad("unknown scale")),
        };
        let start: f64 = start.parse().map_err(|_| bad("start is not a number"))?;
        let stop: f64 = stop.parse().map_err(|_| bad("stop is not a number"))?;
        let points: usize = points.parse().map_err(|_| bad("points is not a count"))?;
        Grid::new(scale, start, stop, points)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scale = match self.scale {
            Scale::Linear => "linear",
            Scale::Log => "log",
        };
        write!(f, "{scale}:{}:{}:{}", self.start, self.stop, self.points)
    }
}

impl SweepSpec {
    pub fn new(variable: &str, grid: Grid) -> SweepSpec {
        SweepSpec {
            variable: variable.to_string(),
            scale: grid.scale,
            start: grid.start,
            stop: grid.stop,
            points: grid.points,
            fixed: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> SweepSpec {
        self.fixed.insert(name.to_string(), value);
        self
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.scale, self.start, self.stop, self.points)
    }

    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        Ok(self.grid()?.values())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_displays() {
        let g: Grid = "linear:0:1:5".parse().unwrap();
        assert_eq!(g.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.to_string().parse::<Grid>().unwrap(), g);
        let l: Grid = "log:0.01:100:5".parse().unwrap();
        let v = l.values();
        assert!((v[2] - 1.0).abs() < 1e-12);
        assert_eq!(v[4], 100.0);
    }

    #[test]
    fn rejects_bad_grids() {
        for s in [
            "linear:1:0:5",
            "linear:0:1:1",
            "log:0:1:4",
            "cubic:0:1:3",
            "linear:0:1",
            "linear:a:1:3",
            "linear:0:inf:3",
        ] {
            assert!(s.parse::<Grid>().is_err(), "{s}");
        }
    }

    #[test]
    fn sweep_spec_keeps_fixed_parameters() {
        let s = SweepSpec::new("r1", "linear:0:2:3".parse().unwrap()).with("p", 0.1);
        assert_eq!(s.values().unwrap(), vec![0.0, 1.0, 2.0]);
        assert_eq!(s.fixed["p"], 0.1);
    }
}
