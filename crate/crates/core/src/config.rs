//! Plain-text run configuration: one `key = value` per line.
//!
//! ```text
//! # K=5, N=10 network from the threshold experiments
//! K = 5
//! N = 10
//! rates = 1, 0.5
//! p_l = 0.3
//! p_r = 0.3
//! boundary = stuck
//! phi = 0.2
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are errors.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grid::{Boundary, NetworkParams};
use crate::sim::SimConfig;

/// Network parameters plus simulation settings read from a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: NetworkParams,
    pub seed: u64,
    pub slots: u64,
    pub burn_in: u64,
    pub replications: u32,
}

impl RunConfig {
    pub fn sim_config(&self, policy: crate::policy::PolicySpec) -> SimConfig {
        SimConfig {
            params: self.params.clone(),
            slots: self.slots,
            burn_in: self.burn_in,
            seed: self.seed,
            policy,
            replications: self.replications,
            observation: Default::default(),
        }
    }
}

const KEYS: [&str; 12] = [
    "K",
    "N",
    "m",
    "rates",
    "p_l",
    "p_r",
    "boundary",
    "phi",
    "seed",
    "slots",
    "burn_in",
    "replications",
];

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut seen = HashSet::new();
    let mut k = None;
    let mut n = None;
    let mut m = None;
    let mut rates: Option<Vec<f64>> = None;
    let mut params = NetworkParams::new(1, 0);
    let mut run = RunConfig {
        params: params.clone(),
        seed: 0,
        slots: SimConfig::DEFAULT_SLOTS,
        burn_in: SimConfig::DEFAULT_BURN_IN,
        replications: 1,
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Config { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        if !seen.insert(key.to_string()) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        let int = || {
            value
                .parse::<u64>()
                .map_err(|_| err(format!("`{key}` expects a non-negative integer, got `{value}`")))
        };
        let real = || {
            value
                .parse::<f64>()
                .map_err(|_| err(format!("`{key}` expects a number, got `{value}`")))
        };
        match key {
            "K" => k = Some(int()? as usize),
            "N" => n = Some(int()? as usize),
            "m" => m = Some(int()? as usize),
            "rates" => {
                let list = value.trim_start_matches('[').trim_end_matches(']');
                let parsed = list
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| err(format!("`rates` expects a list of numbers, got `{value}`")))?;
                if parsed.is_empty() {
                    return Err(err("`rates` is empty".into()));
                }
                rates = Some(parsed);
            }
            "p_l" => params.p_left = real()?,
            "p_r" => params.p_right = real()?,
            "phi" => params.phi = real()?,
            "boundary" => {
                params.boundary = match value.to_ascii_lowercase().as_str() {
                    "stuck" | "stuckatboundary" | "stuck-at-boundary" => Boundary::StuckAtBoundary,
                    "wrap" | "wraparound" | "wrap-around" => Boundary::WrapAround,
                    _ => return Err(err(format!("unknown boundary `{value}` (use stuck or wrap)"))),
                }
            }
            "seed" => run.seed = int()?,
            "slots" => run.slots = int()?,
            "burn_in" => run.burn_in = int()?,
            "replications" => {
                run.replications = u32::try_from(int()?).map_err(|_| err("`replications` is too large".into()))?
            }
            _ => unreachable!("key list checked above"),
        }
    }

    let missing = |key: &str| Error::Config {
        line: 0,
        message: format!("missing required key `{key}`"),
    };
    params.k = k.ok_or_else(|| missing("K"))?;
    params.n = n.ok_or_else(|| missing("N"))?;
    match (m, rates) {
        (_, Some(r)) => {
            params.m = m.unwrap_or(r.len());
            params.rates = r;
        }
        (Some(m), None) if m != 2 => {
            return Err(Error::Config {
                line: 0,
                message: format!("m = {m} needs an explicit `rates` list"),
            })
        }
        _ => {}
    }
    params.validate().map_err(|e| Error::Config {
        line: 0,
        message: e.to_string(),
    })?;
    if run.slots <= run.burn_in {
        return Err(Error::Config {
            line: 0,
            message: format!("slots ({}) must exceed burn_in ({})", run.slots, run.burn_in),
        });
    }
    if run.replications == 0 {
        return Err(Error::Config {
            line: 0,
            message: "replications must be at least 1".into(),
        });
    }
    run.params = params;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let text = "# comment\nK = 5\nN = 10\nm = 2\nrates = [1 0.5]\np_l = 0.3\np_r = 0.2\n\
                    boundary = wrap\nphi = 0.25  # trailing\nseed = 42\nslots = 5000\nburn_in = 100\nreplications = 3\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.params.k, 5);
        assert_eq!(cfg.params.n, 10);
        assert_eq!(cfg.params.rates, vec![1.0, 0.5]);
        assert_eq!(cfg.params.p_left, 0.3);
        assert_eq!(cfg.params.p_right, 0.2);
        assert_eq!(cfg.params.boundary, Boundary::WrapAround);
        assert_eq!(cfg.params.phi, 0.25);
        assert_eq!((cfg.seed, cfg.slots, cfg.burn_in, cfg.replications), (42, 5000, 100, 3));
    }

    #[test]
    fn defaults() {
        let cfg = parse_config("K = 4\nN = 4\n").unwrap();
        assert_eq!(cfg.params, NetworkParams::new(4, 4));
        assert_eq!(cfg.slots, 1_000_000);
        assert_eq!(cfg.burn_in, 10_000);
    }

    #[test]
    fn rates_set_the_range() {
        let cfg = parse_config("K = 4\nN = 4\nrates = 1, 0.5, 0.25\n").unwrap();
        assert_eq!(cfg.params.m, 3);
    }

    #[test]
    fn errors() {
        let line_of = |text: &str| match parse_config(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(line_of("K = 4\nN = 4\ncolor = red\n"), 3);
        assert_eq!(line_of("K = 4\nK = 5\nN = 4\n"), 2);
        assert_eq!(line_of("K = four\nN = 4\n"), 1);
        assert_eq!(line_of("K = 4\nN 4\n"), 2);
        assert_eq!(line_of("K = 4\nN = 4\nboundary = bounce\n"), 3);
        assert_eq!(line_of("N = 4\n"), 0);
        assert_eq!(line_of("K = 4\nN = 4\nm = 3\n"), 0);
        assert_eq!(line_of("K = 4\nN = 4\np_l = 0.8\np_r = 0.8\n"), 0);
        assert_eq!(line_of("K = 4\nN = 4\nslots = 10\nburn_in = 10\n"), 0);
    }
}
