//! Route discovery initiation in a one-dimensional slotted mobile ad hoc network.

pub mod chain;
pub mod config;
pub mod error;
pub mod grid;
pub mod mdp;
pub mod mobility;
pub mod policy;
pub mod report;
pub mod scheduler;
pub mod sim;
pub mod simplex;

pub use config::{parse_config, RunConfig};
pub use error::{Error, Result};
pub use grid::{
    enumerate_configurations, enumerate_routes, hop_rate, route_supported, Boundary, Configuration, Limits,
    NetworkParams, Route,
};
pub use mdp::{
    evaluate_policy, solve_avg_reward, Action, Evaluation, Mdp, MdpSolution, MdpState, Policy, SolveOptions,
};
pub use mobility::{
    config_kernel, config_stationary_prob, node_kernel, stationary_node_distribution, ConfigKernel, NodeKernel,
};
pub use policy::{
    best_threshold_search, expected_raw_throughput, route_break_policy, rule_threshold, threshold_policy, PolicySpec,
    ThresholdRule,
};
pub use scheduler::{
    best_route, build_conflict_graph, maximal_independent_sets, route_throughput, ConflictGraph, Link, RouteTable,
    Schedule,
};
pub use sim::{simulate, sweep_phi, Observation, PolicyReport, SimConfig, SweepResult};
