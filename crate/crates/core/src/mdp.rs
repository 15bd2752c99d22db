//! Average-reward MDP over (configuration, held route) states.
//!
//! Each slot the nodes move first, then the controller sees the new state and
//! either continues with the held route or runs route discovery. Discovery
//! earns `(1 - phi)` times the best raw throughput of the current
//! configuration and replaces the held route with that best route. Continuing
//! earns the held route's LP throughput if all its relay positions are
//! occupied and zero otherwise; a broken route stays held.

use std::fmt;
use std::sync::Arc;

use crate::chain;
use crate::error::{Error, Result};
use crate::grid::{route_count, route_supported, Configuration, NetworkParams, Route};
use crate::mobility::{config_kernel, multinomial_prob, node_weights, ConfigKernel};
use crate::scheduler::RouteTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Continue,
    Discover,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Continue => f.write_str("continue"),
            Action::Discover => f.write_str("discover"),
        }
    }
}

/// State index `config * routes + route`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MdpState {
    pub config: usize,
    pub route: usize,
}

/// The MDP tables. Transition rows are shared with the configuration kernel
/// since the configuration evolves independently of the action.
#[derive(Debug, Clone)]
pub struct Mdp {
    params: NetworkParams,
    kernel: Arc<ConfigKernel>,
    table: Arc<RouteTable>,
    best: Arc<Vec<usize>>,
    best_rate: Arc<Vec<f64>>,
    /// Continue reward, independent of `phi`.
    observed: Arc<Vec<f64>>,
}

impl Mdp {
    pub fn build(params: &NetworkParams) -> Result<Self> {
        params.validate()?;
        let configs = params.configuration_count();
        if configs > params.limits.max_configurations {
            return Err(Error::SizeLimit {
                what: "configuration enumeration",
                size: configs,
                limit: params.limits.max_configurations,
            });
        }
        let states = configs.saturating_mul(route_count(params));
        if states > params.limits.max_states {
            return Err(Error::SizeLimit {
                what: "MDP state space",
                size: states,
                limit: params.limits.max_states,
            });
        }
        let table = RouteTable::new(params)?;
        let kernel = config_kernel(params)?;
        let routes = table.routes();
        let mut best = Vec::with_capacity(kernel.len());
        let mut best_rate = Vec::with_capacity(kernel.len());
        let mut observed = Vec::with_capacity(kernel.len() * routes.len());
        for config in kernel.configs() {
            let (b, f) = table.best(config);
            best.push(b);
            best_rate.push(f);
            for (r, route) in routes.iter().enumerate() {
                observed.push(if route_supported(route, config) {
                    table.throughput(r)
                } else {
                    0.0
                });
            }
        }
        Ok(Mdp {
            params: params.clone(),
            kernel: Arc::new(kernel),
            table: Arc::new(table),
            best: Arc::new(best),
            best_rate: Arc::new(best_rate),
            observed: Arc::new(observed),
        })
    }

    /// Same network with a different discovery cost; tables are shared.
    pub fn with_phi(&self, phi: f64) -> Result<Self> {
        let params = self.params.clone().with_phi(phi);
        params.validate()?;
        Ok(Mdp { params, ..self.clone() })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn phi(&self) -> f64 {
        self.params.phi
    }

    pub fn kernel(&self) -> &ConfigKernel {
        &self.kernel
    }

    pub fn route_table(&self) -> &RouteTable {
        &self.table
    }

    pub fn configs(&self) -> &[Configuration] {
        self.kernel.configs()
    }

    pub fn routes(&self) -> &[Route] {
        self.table.routes()
    }

    pub fn config_count(&self) -> usize {
        self.kernel.len()
    }

    pub fn route_count(&self) -> usize {
        self.table.routes().len()
    }

    pub fn state_count(&self) -> usize {
        self.config_count() * self.route_count()
    }

    pub fn null_route(&self) -> usize {
        self.table.null_index()
    }

    pub fn state_index(&self, s: MdpState) -> usize {
        s.config * self.route_count() + s.route
    }

    pub fn state(&self, idx: usize) -> MdpState {
        MdpState {
            config: idx / self.route_count(),
            route: idx % self.route_count(),
        }
    }

    /// Index of the best route of configuration `config`.
    pub fn best_route(&self, config: usize) -> usize {
        self.best[config]
    }

    /// Raw throughput of the best route of configuration `config`.
    pub fn best_rate(&self, config: usize) -> f64 {
        self.best_rate[config]
    }

    /// Held route's throughput in the current configuration (zero when broken or null).
    pub fn observed(&self, s: MdpState) -> f64 {
        self.observed[self.state_index(s)]
    }

    pub fn reward(&self, s: MdpState, a: Action) -> f64 {
        match a {
            Action::Discover => (1.0 - self.params.phi) * self.best_rate[s.config],
            Action::Continue => self.observed(s),
        }
    }

    /// Route held after taking `a` in `s`.
    pub fn next_route(&self, s: MdpState, a: Action) -> usize {
        match a {
            Action::Discover => self.best[s.config],
            Action::Continue => s.route,
        }
    }

    /// `P(s' | s, a)` as a sparse list of (state index, probability).
    pub fn transitions(&self, s: MdpState, a: Action) -> Vec<(usize, f64)> {
        let r = self.next_route(s, a);
        self.kernel
            .row(s.config)
            .map(|(n, p)| (self.state_index(MdpState { config: n, route: r }), p))
            .collect()
    }

    /// Stationary configuration weights from the product form.
    pub fn config_weights(&self) -> Result<Vec<f64>> {
        let node = node_weights(&self.params)?;
        Ok(self.configs().iter().map(|c| multinomial_prob(c, &node)).collect())
    }

    /// Label used in reports and error messages.
    pub fn describe(&self, idx: usize) -> String {
        let s = self.state(idx);
        format!("{}/{}", self.configs()[s.config], self.routes()[s.route].compact())
    }

    /// Mixing weight for the aperiodicity transform `tau * T + (1 - tau) * I`.
    ///
    /// With `p_t > 0` every configuration has a self-loop, which makes every
    /// recurrent class aperiodic; otherwise a lazy step is mixed in.
    pub fn aperiodicity(&self) -> f64 {
        if self.params.p_stay() > 0.0 {
            1.0
        } else {
            0.5
        }
    }

    /// `out[n * R + r] = sum_{n'} K(n, n') values[n' * R + r]`.
    fn expect_next(&self, values: &[f64], out: &mut [f64]) {
        let width = self.route_count();
        out.fill(0.0);
        for n in 0..self.config_count() {
            let dst = &mut out[n * width..(n + 1) * width];
            for (next, p) in self.kernel.row(n) {
                let src = &values[next * width..(next + 1) * width];
                for (d, v) in dst.iter_mut().zip(src) {
                    *d += p * v;
                }
            }
        }
    }
}

/// A stationary deterministic policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    actions: Vec<Action>,
}

impl Policy {
    pub fn from_fn<F>(mdp: &Mdp, mut f: F) -> Self
    where
        F: FnMut(MdpState) -> Action,
    {
        Policy {
            actions: (0..mdp.state_count()).map(|i| f(mdp.state(i))).collect(),
        }
    }

    pub fn uniform(mdp: &Mdp, a: Action) -> Self {
        Policy {
            actions: vec![a; mdp.state_count()],
        }
    }

    pub fn from_actions(actions: Vec<Action>) -> Self {
        Policy { actions }
    }

    pub fn action(&self, state: usize) -> Action {
        self.actions[state]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stop when the span of successive value differences drops below this.
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            epsilon: 1e-8,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MdpSolution {
    /// Optimal long-run average net throughput.
    pub gain: f64,
    /// Relative values, zero at the reference state (state 0).
    pub bias: Vec<f64>,
    pub policy: Policy,
    pub iterations: usize,
    pub span: f64,
}

/// Actions whose values differ by less than this count as tied; ties go to continue.
const ACTION_TIE: f64 = 1e-12;

/// Relative value iteration with the span-seminorm stopping rule.
pub fn solve_avg_reward(mdp: &Mdp, opts: SolveOptions) -> Result<MdpSolution> {
    let width = mdp.route_count();
    let states = mdp.state_count();
    let tau = mdp.aperiodicity();
    let mut v = vec![0.0; states];
    let mut w = vec![0.0; states];
    let mut next = vec![0.0; states];
    let mut span = f64::INFINITY;

    for iteration in 1..=opts.max_iterations {
        mdp.expect_next(&v, &mut w);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for n in 0..mdp.config_count() {
            let base = n * width;
            let discover = mdp.reward(MdpState { config: n, route: 0 }, Action::Discover) + w[base + mdp.best[n]];
            for r in 0..width {
                let i = base + r;
                let cont = mdp.observed[i] + w[i];
                let tv = cont.max(discover);
                let updated = tau * tv + (1.0 - tau) * v[i];
                let diff = updated - v[i];
                lo = lo.min(diff);
                hi = hi.max(diff);
                next[i] = updated;
            }
        }
        span = (hi - lo) / tau;
        let offset = next[0];
        for (vi, ni) in v.iter_mut().zip(&next) {
            *vi = ni - offset;
        }
        if span < opts.epsilon {
            let gain = 0.5 * (hi + lo) / tau;
            let policy = greedy_policy(mdp, &v, &mut w);
            return Ok(MdpSolution {
                gain,
                bias: v,
                policy,
                iterations: iteration,
                span,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        span,
    })
}

fn greedy_policy(mdp: &Mdp, v: &[f64], w: &mut [f64]) -> Policy {
    mdp.expect_next(v, w);
    let width = mdp.route_count();
    Policy::from_fn(mdp, |s| {
        let i = mdp.state_index(s);
        let cont = mdp.observed[i] + w[i];
        let discover = mdp.reward(s, Action::Discover) + w[s.config * width + mdp.best[s.config]];
        if cont >= discover - ACTION_TIE {
            Action::Continue
        } else {
            Action::Discover
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Stop when successive stationary iterates differ by less than this in L1.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            tolerance: 1e-13,
            max_iterations: 1_000_000,
        }
    }
}

/// Long-run behavior of a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Long-run average net reward.
    pub gain: f64,
    /// Long-run fraction of slots with discovery.
    pub discovery_rate: f64,
    pub iterations: usize,
}

/// Exact long-run gain of a policy from the stationary distribution of its
/// induced chain. Fails if the induced chain has several closed classes.
pub fn evaluate_policy(mdp: &Mdp, policy: &Policy) -> Result<Evaluation> {
    evaluate_policy_with(mdp, policy, EvalOptions::default())
}

pub fn evaluate_policy_with(mdp: &Mdp, policy: &Policy, opts: EvalOptions) -> Result<Evaluation> {
    check_unichain(mdp, policy)?;
    let weights = mdp.config_weights()?;
    let width = mdp.route_count();
    let mut init = vec![0.0; mdp.state_count()];
    for (n, w) in weights.iter().enumerate() {
        for r in 0..width {
            init[n * width + r] = w / width as f64;
        }
    }
    stationary_gain(mdp, policy, init, opts)
}

/// Long-run gain from an initial state distribution, without the unichain
/// requirement; for policies such as never-discover whose route component
/// never changes.
pub fn evaluate_policy_from(mdp: &Mdp, policy: &Policy, initial: Vec<f64>, opts: EvalOptions) -> Result<Evaluation> {
    if initial.len() != mdp.state_count() {
        return Err(Error::InvalidParams("initial distribution has the wrong length".into()));
    }
    stationary_gain(mdp, policy, initial, opts)
}

/// Initial distribution: stationary configurations, holding `route`.
pub fn holding_route(mdp: &Mdp, route: usize) -> Result<Vec<f64>> {
    let weights = mdp.config_weights()?;
    let mut init = vec![0.0; mdp.state_count()];
    for (n, w) in weights.into_iter().enumerate() {
        init[mdp.state_index(MdpState { config: n, route })] = w;
    }
    Ok(init)
}

fn check_unichain(mdp: &Mdp, policy: &Policy) -> Result<()> {
    let classes = chain::closed_classes(mdp.state_count(), |i, out| {
        let s = mdp.state(i);
        let r = mdp.next_route(s, policy.action(i));
        out.extend(
            mdp.kernel
                .row(s.config)
                .map(|(n, _)| mdp.state_index(MdpState { config: n, route: r })),
        );
    });
    if classes.len() > 1 {
        return Err(Error::ReducibleChain {
            classes: chain::describe_classes(&classes, |i| mdp.describe(i)),
        });
    }
    Ok(())
}

fn stationary_gain(mdp: &Mdp, policy: &Policy, mut pi: Vec<f64>, opts: EvalOptions) -> Result<Evaluation> {
    let width = mdp.route_count();
    let states = mdp.state_count();
    let tau = mdp.aperiodicity();
    let next_route: Vec<usize> = (0..states)
        .map(|i| mdp.next_route(mdp.state(i), policy.action(i)))
        .collect();
    let mut mass = vec![0.0; states];
    let mut next = vec![0.0; states];
    let mut delta = f64::INFINITY;

    for iteration in 1..=opts.max_iterations {
        // Route component first, then the configuration moves.
        mass.fill(0.0);
        for n in 0..mdp.config_count() {
            let base = n * width;
            for r in 0..width {
                mass[base + next_route[base + r]] += pi[base + r];
            }
        }
        next.fill(0.0);
        for n in 0..mdp.config_count() {
            let src = &mass[n * width..(n + 1) * width];
            for (dest, p) in mdp.kernel.row(n) {
                let dst = &mut next[dest * width..(dest + 1) * width];
                for (d, m) in dst.iter_mut().zip(src) {
                    *d += p * m;
                }
            }
        }
        delta = 0.0;
        for (p, q) in pi.iter_mut().zip(&next) {
            let updated = tau * q + (1.0 - tau) * *p;
            delta += (updated - *p).abs();
            *p = updated;
        }
        if delta < opts.tolerance {
            let total: f64 = pi.iter().sum();
            let (mut gain, mut discovery) = (0.0, 0.0);
            for (i, &p) in pi.iter().enumerate() {
                let a = policy.action(i);
                gain += p * mdp.reward(mdp.state(i), a);
                if a == Action::Discover {
                    discovery += p;
                }
            }
            return Ok(Evaluation {
                gain: gain / total,
                discovery_rate: discovery / total,
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        span: delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Mdp {
        Mdp::build(&NetworkParams::new(3, 3).with_mobility(0.2, 0.2)).unwrap()
    }

    #[test]
    fn state_count_product() {
        let mdp = Mdp::build(&NetworkParams::new(5, 9)).unwrap();
        assert_eq!(mdp.state_count(), 715 * 14);
    }

    #[test]
    fn state_limit() {
        let limits = crate::grid::Limits {
            max_states: 100,
            ..Default::default()
        };
        let err = Mdp::build(&NetworkParams::new(5, 9).with_limits(limits)).unwrap_err();
        assert!(err.is_size_limit());
    }

    #[test]
    fn reward_extremes() {
        let mdp = small();
        for i in 0..mdp.state_count() {
            let s = mdp.state(i);
            assert!(mdp.reward(s, Action::Discover) >= mdp.reward(s, Action::Continue) - 1e-15);
        }
        let costly = mdp.with_phi(1.0).unwrap();
        for i in 0..costly.state_count() {
            assert_eq!(costly.reward(costly.state(i), Action::Discover), 0.0);
        }
    }

    #[test]
    fn transitions_follow_the_action() {
        let mdp = small();
        let s = MdpState {
            config: 4,
            route: mdp.null_route(),
        };
        let t = mdp.transitions(s, Action::Discover);
        assert!((t.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(t.iter().all(|&(j, _)| mdp.state(j).route == mdp.best_route(4)));
        let t = mdp.transitions(s, Action::Continue);
        assert!(t.iter().all(|&(j, _)| mdp.state(j).route == mdp.null_route()));
    }

    #[test]
    fn solver_and_evaluation_agree() {
        let mdp = small().with_phi(0.3).unwrap();
        let sol = solve_avg_reward(&mdp, SolveOptions::default()).unwrap();
        let eval = evaluate_policy(&mdp, &sol.policy).unwrap();
        assert!((sol.gain - eval.gain).abs() < 1e-6, "{} {}", sol.gain, eval.gain);
        assert_eq!(sol.bias[0], 0.0);
    }

    #[test]
    fn null_route_states_discover() {
        let mdp = small().with_phi(0.4).unwrap();
        let sol = solve_avg_reward(&mdp, SolveOptions::default()).unwrap();
        for n in 0..mdp.config_count() {
            let s = MdpState {
                config: n,
                route: mdp.null_route(),
            };
            if mdp.reward(s, Action::Discover) > 0.0 {
                assert_eq!(sol.policy.action(mdp.state_index(s)), Action::Discover);
            }
        }
    }

    #[test]
    fn never_discover_is_reducible() {
        let mdp = small();
        let never = Policy::uniform(&mdp, Action::Continue);
        match evaluate_policy(&mdp, &never) {
            Err(Error::ReducibleChain { classes }) => assert_eq!(classes.len(), mdp.route_count()),
            other => panic!("unexpected {other:?}"),
        }
        let from_null = holding_route(&mdp, mdp.null_route()).unwrap();
        let eval = evaluate_policy_from(&mdp, &never, from_null, EvalOptions::default()).unwrap();
        assert_eq!(eval.gain, 0.0);
    }

    #[test]
    fn never_discover_holding_a_route() {
        // Gain is the route's throughput times the probability it is supported.
        let mdp = small();
        let never = Policy::uniform(&mdp, Action::Continue);
        let weights = mdp.config_weights().unwrap();
        for r in 0..mdp.route_count() {
            let expected: f64 = (0..mdp.config_count())
                .map(|n| weights[n] * mdp.observed(MdpState { config: n, route: r }))
                .sum();
            let init = holding_route(&mdp, r).unwrap();
            let eval = evaluate_policy_from(&mdp, &never, init, EvalOptions::default()).unwrap();
            assert!((eval.gain - expected).abs() < 1e-12);
            assert_eq!(eval.discovery_rate, 0.0);
        }
    }

    #[test]
    fn frozen_single_position() {
        // K = 1 has one configuration; discovering once then continuing is optimal.
        let mdp = Mdp::build(&NetworkParams::new(1, 2).with_mobility(0.0, 0.0).with_phi(0.6)).unwrap();
        let sol = solve_avg_reward(&mdp, SolveOptions::default()).unwrap();
        assert!((sol.gain - 0.5).abs() < 1e-9);
    }

    #[test]
    fn periodic_wrap_around_still_converges() {
        // p_t = 0 on an even ring makes the configuration chain periodic.
        let params = NetworkParams::new(2, 1)
            .with_mobility(0.5, 0.5)
            .with_boundary(crate::grid::Boundary::WrapAround)
            .with_phi(0.2);
        let mdp = Mdp::build(&params).unwrap();
        assert_eq!(mdp.aperiodicity(), 0.5);
        let sol = solve_avg_reward(&mdp, SolveOptions::default()).unwrap();
        let eval = evaluate_policy(&mdp, &sol.policy).unwrap();
        assert!((sol.gain - eval.gain).abs() < 1e-6);
    }
}
