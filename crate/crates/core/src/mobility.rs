//! Random-walk mobility: the per-node kernel, the exact configuration-level
//! kernel and their stationary distributions.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::chain;
use crate::error::{Error, Result};
use crate::grid::{enumerate_configurations, multichoose, Boundary, Configuration, NetworkParams};

/// Single-node transition matrix over the `K` interior positions (0-based indices).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeKernel {
    matrix: DMatrix<f64>,
}

impl NodeKernel {
    pub fn k(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.matrix[(from, to)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    /// Destinations reachable from `i` with positive probability.
    pub fn support(&self, i: usize) -> Vec<(usize, f64)> {
        (0..self.k())
            .filter_map(|j| {
                let p = self.matrix[(i, j)];
                (p > 0.0).then_some((j, p))
            })
            .collect()
    }

    pub fn max_row_error(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_column_error(&self) -> f64 {
        self.matrix
            .column_iter()
            .map(|c| (c.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.max_row_error() <= tol && self.max_column_error() <= tol
    }
}

/// Builds the per-slot single-node kernel for the configured boundary model.
///
/// Stuck-at-boundary folds a blocked move into the diagonal; wrap-around is
/// circulant with `P[1][K] = p_l` and `P[K][1] = p_r`.
pub fn node_kernel(params: &NetworkParams) -> NodeKernel {
    let k = params.k;
    let (pl, pr, pt) = (params.p_left, params.p_right, params.p_stay());
    let mut m = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        m[(i, i)] += pt;
        let left = match (i, params.boundary) {
            (0, Boundary::StuckAtBoundary) => i,
            (0, Boundary::WrapAround) => k - 1,
            _ => i - 1,
        };
        let right = match (i + 1 == k, params.boundary) {
            (true, Boundary::StuckAtBoundary) => i,
            (true, Boundary::WrapAround) => 0,
            _ => i + 1,
        };
        m[(i, left)] += pl;
        m[(i, right)] += pr;
    }
    NodeKernel { matrix: m }
}

/// Solves `pi P = pi` directly; fails when the kernel has more than one closed class.
pub fn stationary_node_distribution(kernel: &NodeKernel) -> Result<Vec<f64>> {
    Ok(chain::dense_stationary(kernel.matrix())?.iter().copied().collect())
}

/// Steady-state probability of a configuration when every node is uniform
/// over the `K` positions: `N! / (n_1! ... n_K!) * (1/K)^N`.
pub fn config_stationary_prob(config: &Configuration, params: &NetworkParams) -> f64 {
    let uniform = vec![1.0 / params.k as f64; params.k];
    multinomial_prob(config, &uniform)
}

/// Probability of the occupancy vector when `N` nodes are placed independently
/// with per-position probabilities `node_pi`.
pub fn multinomial_prob(config: &Configuration, node_pi: &[f64]) -> f64 {
    let mut remaining = config.total();
    let mut prob = 1.0;
    for (&c, &p) in config.counts().iter().zip(node_pi) {
        let c = c as usize;
        prob *= binomial_f64(remaining, c) * p.powi(c as i32);
        remaining -= c;
    }
    prob
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Stationary per-position node distribution used for configuration weights.
///
/// Any doubly stochastic kernel leaves the uniform distribution invariant, so
/// that case (including frozen nodes) returns `1/K` without a solve.
pub fn node_weights(params: &NetworkParams) -> Result<Vec<f64>> {
    let kernel = node_kernel(params);
    if kernel.is_doubly_stochastic(1e-12) {
        Ok(vec![1.0 / params.k as f64; params.k])
    } else {
        stationary_node_distribution(&kernel)
    }
}

/// Exact transition kernel on configurations, in compressed-row form.
#[derive(Debug, Clone)]
pub struct ConfigKernel {
    configs: Vec<Configuration>,
    offsets: Vec<usize>,
    columns: Vec<usize>,
    values: Vec<f64>,
}

impl ConfigKernel {
    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzero entries of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.columns[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.row(from).find(|&(j, _)| j == to).map_or(0.0, |(_, p)| p)
    }

    pub fn max_row_error(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.row(i).map(|(_, p)| p).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, p) in self.row(i) {
                m[(i, j)] = p;
            }
        }
        m
    }

    /// Exact stationary distribution of the configuration chain (dense solve).
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let dense = self.to_dense();
        chain::dense_stationary(&dense)
            .map(|v| v.iter().copied().collect())
            .map_err(|e| match e {
                Error::ReducibleChain { .. } => {
                    let classes = chain::closed_classes(self.len(), |i, out| out.extend(self.row(i).map(|(j, _)| j)));
                    Error::ReducibleChain {
                        classes: chain::describe_classes(&classes, |i| self.configs[i].to_string()),
                    }
                }
                other => other,
            })
    }
}

/// Exact joint kernel: each node moves independently by [`node_kernel`].
///
/// For every occupied position the `n_k` nodes there are split among the
/// node kernel's destinations with multinomial weights; the cross-product of
/// the splits over all positions gives the destination count vectors.
pub fn config_kernel(params: &NetworkParams) -> Result<ConfigKernel> {
    let configs = enumerate_configurations(params)?;
    let node = node_kernel(params);
    let supports: Vec<Vec<(usize, f64)>> = (0..params.k).map(|i| node.support(i)).collect();

    let mut offsets = Vec::with_capacity(configs.len() + 1);
    let mut columns = Vec::new();
    let mut values = Vec::new();
    offsets.push(0);
    for config in &configs {
        let splits = config.counts().iter().zip(&supports).fold(1u128, |acc, (&c, s)| {
            acc.saturating_mul(multichoose(s.len(), c as usize))
        });
        if splits > params.limits.max_kernel_splits {
            return Err(Error::SizeLimit {
                what: "configuration kernel split product",
                size: splits,
                limit: params.limits.max_kernel_splits,
            });
        }
        let mut row: Vec<(usize, f64)> = kernel_row(config, &supports)
            .into_iter()
            .map(|(dest, p)| (Configuration::new(dest).rank(), p))
            .collect();
        row.sort_by_key(|&(j, _)| j);
        for (j, p) in row {
            columns.push(j);
            values.push(p);
        }
        offsets.push(columns.len());
    }
    Ok(ConfigKernel {
        configs,
        offsets,
        columns,
        values,
    })
}

fn kernel_row(config: &Configuration, supports: &[Vec<(usize, f64)>]) -> BTreeMap<Vec<u32>, f64> {
    let k = config.k();
    let mut partial: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    partial.insert(vec![0; k], 1.0);
    for (pos, &count) in config.counts().iter().enumerate() {
        if count == 0 {
            continue;
        }
        let splits = position_splits(count, &supports[pos]);
        let mut next = BTreeMap::new();
        for (dest, p) in &partial {
            for (moves, q) in &splits {
                let mut d = dest.clone();
                for (&(target, _), &c) in supports[pos].iter().zip(moves) {
                    d[target] += c;
                }
                *next.entry(d).or_insert(0.0) += p * q;
            }
        }
        partial = next;
    }
    partial
}

/// All ways to send `count` nodes to the destinations of `support`, each with
/// its multinomial probability.
fn position_splits(count: u32, support: &[(usize, f64)]) -> Vec<(Vec<u32>, f64)> {
    let mut out = Vec::new();
    let mut parts = vec![0u32; support.len()];
    compose(count, 0, &mut parts, support, &mut out);
    out
}

fn compose(remaining: u32, idx: usize, parts: &mut Vec<u32>, support: &[(usize, f64)], out: &mut Vec<(Vec<u32>, f64)>) {
    if idx + 1 == parts.len() {
        parts[idx] = remaining;
        let total: u32 = parts.iter().sum();
        let mut left = total as usize;
        let mut prob = 1.0;
        for (&c, &(_, p)) in parts.iter().zip(support) {
            prob *= binomial_f64(left, c as usize) * p.powi(c as i32);
            left -= c as usize;
        }
        out.push((parts.clone(), prob));
        return;
    }
    for c in 0..=remaining {
        parts[idx] = c;
        compose(remaining - c, idx + 1, parts, support, out);
    }
}
