//! Expected raw throughput, the threshold rule and the policy families
//! compared against the optimal MDP policy.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{enumerate_configurations, NetworkParams};
use crate::mdp::{
    evaluate_policy, evaluate_policy_from, holding_route, solve_avg_reward, Action, EvalOptions, Evaluation, Mdp,
    Policy, SolveOptions,
};
use crate::mobility::{multinomial_prob, node_weights};
use crate::scheduler::{RouteTable, RATE_TIE};

/// Stationary expectation of the best-route throughput over configurations,
/// ignoring discovery cost.
pub fn expected_raw_throughput(params: &NetworkParams) -> Result<f64> {
    params.validate()?;
    let configs = enumerate_configurations(params)?;
    let table = RouteTable::new(params)?;
    let node = node_weights(params)?;
    Ok(configs
        .iter()
        .map(|c| multinomial_prob(c, &node) * table.best(c).1)
        .sum())
}

/// Same expectation from an already built MDP.
pub fn expected_raw_from_mdp(mdp: &Mdp) -> Result<f64> {
    let weights = mdp.config_weights()?;
    Ok(weights.iter().enumerate().map(|(n, w)| w * mdp.best_rate(n)).sum())
}

/// `theta = (1 - phi^x) * E[raw throughput]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRule {
    pub x: f64,
    pub theta: f64,
}

impl ThresholdRule {
    pub fn new(expected_raw: f64, phi: f64, x: f64) -> Result<Self> {
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::InvalidParams(format!("rule exponent must be positive, got {x}")));
        }
        Ok(ThresholdRule {
            x,
            theta: (1.0 - phi.powf(x)) * expected_raw,
        })
    }
}

pub fn rule_threshold(params: &NetworkParams, x: f64) -> Result<f64> {
    let raw = expected_raw_throughput(params)?;
    Ok(ThresholdRule::new(raw, params.phi, x)?.theta)
}

/// Discover when the held route's current throughput is below `theta` or zero.
pub fn threshold_policy(mdp: &Mdp, theta: f64) -> Policy {
    Policy::from_fn(mdp, |s| {
        let observed = mdp.observed(s);
        if observed < theta || observed == 0.0 {
            Action::Discover
        } else {
            Action::Continue
        }
    })
}

/// Discover only when the held route delivers nothing.
pub fn route_break_policy(mdp: &Mdp) -> Policy {
    threshold_policy(mdp, 0.0)
}

/// Distinct raw route throughputs, ascending (includes the null route's 0).
pub fn achievable_rates(mdp: &Mdp) -> Vec<f64> {
    let mut rates: Vec<f64> = mdp.route_table().throughputs().to_vec();
    rates.sort_by(f64::total_cmp);
    rates.dedup_by(|a, b| (*a - *b).abs() <= RATE_TIE);
    rates
}

/// One representative threshold per behaviorally distinct threshold policy:
/// zero, midpoints between consecutive achievable rates, and one above the maximum.
pub fn candidate_thresholds(mdp: &Mdp) -> Vec<f64> {
    let rates = achievable_rates(mdp);
    let mut out = vec![0.0];
    out.extend(rates.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let max = rates.last().copied().unwrap_or(0.0);
    out.push(max + 0.5 * max.max(1e-3));
    out
}

/// Gain of a policy, starting from the null route if its chain is not unichain.
pub fn policy_gain(mdp: &Mdp, policy: &Policy) -> Result<Evaluation> {
    match evaluate_policy(mdp, policy) {
        Err(Error::ReducibleChain { .. }) => {
            let init = holding_route(mdp, mdp.null_route())?;
            evaluate_policy_from(mdp, policy, init, EvalOptions::default())
        }
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    pub theta: f64,
    pub gain: f64,
    /// Every candidate threshold with its exact gain.
    pub candidates: Vec<(f64, f64)>,
}

/// Exhaustive search over [`candidate_thresholds`]; ties keep the smaller threshold.
pub fn best_threshold_search(mdp: &Mdp) -> Result<ThresholdSearch> {
    let mut candidates = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for theta in candidate_thresholds(mdp) {
        let gain = policy_gain(mdp, &threshold_policy(mdp, theta))?.gain;
        candidates.push((theta, gain));
        if best.is_none_or(|(_, g)| gain > g + 1e-12) {
            best = Some((theta, gain));
        }
    }
    let (theta, gain) = best.expect("candidate set is never empty");
    Ok(ThresholdSearch {
        theta,
        gain,
        candidates,
    })
}

/// Policy names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    Optimal,
    /// Threshold from the rule with exponent `x`.
    Rule(f64),
    BestThreshold,
    RouteBreak,
    Fixed(f64),
    Always,
    Never,
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Optimal => f.write_str("optimal"),
            PolicySpec::Rule(x) => write!(f, "rule:{x}"),
            PolicySpec::BestThreshold => f.write_str("best-threshold"),
            PolicySpec::RouteBreak => f.write_str("route-break"),
            PolicySpec::Fixed(t) => write!(f, "fixed:{t}"),
            PolicySpec::Always => f.write_str("always"),
            PolicySpec::Never => f.write_str("never"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPolicy(s.to_string());
        let number = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let spec = match s.trim() {
            "optimal" => PolicySpec::Optimal,
            "rule" => PolicySpec::Rule(2.0),
            "best-threshold" => PolicySpec::BestThreshold,
            "route-break" => PolicySpec::RouteBreak,
            "always" => PolicySpec::Always,
            "never" => PolicySpec::Never,
            other => match other.split_once(':') {
                Some(("rule", x)) => {
                    let x = number(x)?;
                    if !(x > 0.0 && x.is_finite()) {
                        return Err(bad());
                    }
                    PolicySpec::Rule(x)
                }
                Some(("fixed", t)) => {
                    let t = number(t)?;
                    if !(t >= 0.0 && t.is_finite()) {
                        return Err(bad());
                    }
                    PolicySpec::Fixed(t)
                }
                _ => return Err(bad()),
            },
        };
        Ok(spec)
    }
}

impl PolicySpec {
    /// True for policies that act on the held route's observed throughput.
    pub fn is_threshold(&self) -> bool {
        matches!(
            self,
            PolicySpec::Rule(_) | PolicySpec::BestThreshold | PolicySpec::RouteBreak | PolicySpec::Fixed(_)
        )
    }
}

/// A policy spec made concrete for one MDP.
#[derive(Debug, Clone)]
pub struct ResolvedPolicy {
    pub spec: PolicySpec,
    pub policy: Policy,
    /// Threshold in use, for threshold policies.
    pub threshold: Option<f64>,
    /// Gain already known from solving (optimal and best-threshold).
    pub known_gain: Option<f64>,
}

pub fn resolve_policy(spec: PolicySpec, mdp: &Mdp) -> Result<ResolvedPolicy> {
    let threshold = |theta: f64| ResolvedPolicy {
        spec,
        policy: threshold_policy(mdp, theta),
        threshold: Some(theta),
        known_gain: None,
    };
    Ok(match spec {
        PolicySpec::Optimal => {
            let sol = solve_avg_reward(mdp, SolveOptions::default())?;
            ResolvedPolicy {
                spec,
                policy: sol.policy,
                threshold: None,
                known_gain: Some(sol.gain),
            }
        }
        PolicySpec::Rule(x) => {
            let raw = expected_raw_from_mdp(mdp)?;
            threshold(ThresholdRule::new(raw, mdp.phi(), x)?.theta)
        }
        PolicySpec::BestThreshold => {
            let search = best_threshold_search(mdp)?;
            ResolvedPolicy {
                known_gain: Some(search.gain),
                ..threshold(search.theta)
            }
        }
        PolicySpec::RouteBreak => threshold(0.0),
        PolicySpec::Fixed(theta) => threshold(theta),
        PolicySpec::Always => ResolvedPolicy {
            spec,
            policy: Policy::uniform(mdp, Action::Discover),
            threshold: None,
            known_gain: None,
        },
        PolicySpec::Never => ResolvedPolicy {
            spec,
            policy: Policy::uniform(mdp, Action::Continue),
            threshold: None,
            known_gain: None,
        },
    })
}
