//! Conflict-graph link scheduling and per-route optimal throughput.
//!
//! Links of a route conflict when some endpoint of one lies within the
//! transmission range `m` of some endpoint of the other (the interference
//! range sits strictly between `m` and `m + 1`). Links in an independent set
//! of the conflict graph can be active together; the optimal schedule is the
//! LP over time shares of the maximal independent sets.

use crate::error::{Error, Result};
use crate::grid::{enumerate_routes, hop_rate, route_supported, Configuration, NetworkParams, Route};
use crate::simplex;

/// A hop between grid positions `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub rate: f64,
}

impl Link {
    fn distance_to(&self, other: &Link) -> usize {
        [self.a, self.b]
            .iter()
            .flat_map(|&x| [other.a, other.b].map(move |y| x.abs_diff(y)))
            .min()
            .unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    pub links: Vec<Link>,
    adjacent: Vec<Vec<bool>>,
}

impl ConflictGraph {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn conflicts(&self, i: usize, j: usize) -> bool {
        self.adjacent[i][j]
    }

    pub fn edge_count(&self) -> usize {
        (0..self.len())
            .map(|i| (i + 1..self.len()).filter(|&j| self.adjacent[i][j]).count())
            .sum()
    }

    /// Graph from explicit links and an edge list; used for hand-built cases.
    pub fn from_edges(links: Vec<Link>, edges: &[(usize, usize)]) -> Self {
        let n = links.len();
        let mut adjacent = vec![vec![false; n]; n];
        for &(i, j) in edges {
            if i != j {
                adjacent[i][j] = true;
                adjacent[j][i] = true;
            }
        }
        ConflictGraph { links, adjacent }
    }
}

/// Conflict graph over the consecutive-position links of a non-null route.
pub fn build_conflict_graph(route: &Route, params: &NetworkParams) -> ConflictGraph {
    let links: Vec<Link> = route
        .positions()
        .windows(2)
        .map(|w| Link {
            a: w[0],
            b: w[1],
            rate: hop_rate(w[1] - w[0], params),
        })
        .collect();
    let n = links.len();
    let mut adjacent = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if links[i].distance_to(&links[j]) <= params.m {
                adjacent[i][j] = true;
                adjacent[j][i] = true;
            }
        }
    }
    ConflictGraph { links, adjacent }
}

/// Every inclusion-maximal independent set, as sorted vertex lists in
/// lexicographic order. Enumerated as maximal cliques of the complement
/// graph (Bron–Kerbosch with pivoting).
pub fn maximal_independent_sets(g: &ConflictGraph, limit: usize) -> Result<Vec<Vec<usize>>> {
    let n = g.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let compatible = |u: usize, v: usize| u != v && !g.adjacent[u][v];
    let mut out = Vec::new();
    let mut stack = vec![(Vec::new(), (0..n).collect::<Vec<_>>(), Vec::new())];
    while let Some((r, p, x)) = stack.pop() {
        if p.is_empty() {
            if x.is_empty() {
                if out.len() == limit {
                    return Err(Error::SizeLimit {
                        what: "maximal independent sets",
                        size: limit as u128 + 1,
                        limit: limit as u128,
                    });
                }
                let mut set: Vec<usize> = r;
                set.sort_unstable();
                out.push(set);
            }
            continue;
        }
        let pivot = p
            .iter()
            .chain(&x)
            .copied()
            .max_by_key(|&u| p.iter().filter(|&&v| compatible(u, v)).count())
            .unwrap();
        let mut p = p;
        let mut x = x;
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !compatible(pivot, v)).collect();
        for v in candidates {
            let mut r2 = r.clone();
            r2.push(v);
            let p2 = p.iter().copied().filter(|&w| compatible(v, w)).collect();
            let x2 = x.iter().copied().filter(|&w| compatible(v, w)).collect();
            stack.push((r2, p2, x2));
            p.retain(|&w| w != v);
            x.push(v);
        }
    }
    out.sort();
    Ok(out)
}

/// Time shares over maximal independent sets achieving throughput `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub links: Vec<Link>,
    /// (independent set as link indices, fraction of time)
    pub shares: Vec<(Vec<usize>, f64)>,
    pub throughput: f64,
}

impl Schedule {
    fn empty() -> Self {
        Schedule {
            links: Vec::new(),
            shares: Vec::new(),
            throughput: 0.0,
        }
    }

    /// Fraction of time link `l` is active.
    pub fn activity(&self, l: usize) -> f64 {
        self.shares
            .iter()
            .filter(|(set, _)| set.contains(&l))
            .map(|(_, s)| s)
            .sum()
    }
}

/// Optimal end-to-end throughput of a route, ignoring occupancy.
///
/// Solves `max f` over shares `lambda_I >= 0` with `sum lambda_I <= 1` and,
/// per link, `rate * sum_{I containing l} lambda_I >= f`.
pub fn route_throughput(route: &Route, params: &NetworkParams) -> Result<Schedule> {
    if route.is_null() {
        return Ok(Schedule::empty());
    }
    let graph = build_conflict_graph(route, params);
    let sets = maximal_independent_sets(&graph, params.limits.max_independent_sets)?;
    let vars = 1 + sets.len();

    let mut c = vec![0.0; vars];
    c[0] = 1.0;
    let mut a = Vec::with_capacity(1 + graph.len());
    let mut b = Vec::with_capacity(1 + graph.len());
    let mut budget = vec![1.0; vars];
    budget[0] = 0.0;
    a.push(budget);
    b.push(1.0);
    for (l, link) in graph.links.iter().enumerate() {
        if link.rate <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "hop {}-{} is beyond the transmission range",
                link.a, link.b
            )));
        }
        let mut row = vec![0.0; vars];
        row[0] = 1.0;
        for (s, set) in sets.iter().enumerate() {
            if set.contains(&l) {
                row[1 + s] = -link.rate;
            }
        }
        a.push(row);
        b.push(0.0);
    }
    let sol = simplex::maximize(&c, &a, &b)?;
    let shares = sets
        .into_iter()
        .zip(sol.x[1..].iter().copied())
        .filter(|&(_, share)| share > 1e-12)
        .collect();
    Ok(Schedule {
        links: graph.links,
        shares,
        throughput: sol.x[0],
    })
}

/// All routes with their raw LP throughput, for repeated best-route queries.
#[derive(Debug, Clone)]
pub struct RouteTable {
    routes: Vec<Route>,
    throughput: Vec<f64>,
}

/// Throughputs closer than this are treated as ties.
pub const RATE_TIE: f64 = 1e-12;

impl RouteTable {
    pub fn new(params: &NetworkParams) -> Result<Self> {
        let routes = enumerate_routes(params);
        let throughput = routes
            .iter()
            .map(|r| route_throughput(r, params).map(|s| s.throughput))
            .collect::<Result<Vec<_>>>()?;
        Ok(RouteTable { routes, throughput })
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn throughput(&self, idx: usize) -> f64 {
        self.throughput[idx]
    }

    pub fn throughputs(&self) -> &[f64] {
        &self.throughput
    }

    pub fn null_index(&self) -> usize {
        self.routes.len() - 1
    }

    /// Index and throughput of the best supported route: highest throughput,
    /// then fewest hops, then lexicographically smallest. `(null, 0)` when
    /// nothing is supported.
    pub fn best(&self, config: &Configuration) -> (usize, f64) {
        let mut best: Option<(usize, f64)> = None;
        for (i, route) in self.routes.iter().enumerate() {
            if !route_supported(route, config) {
                continue;
            }
            let f = self.throughput[i];
            let replace = match best {
                None => true,
                Some((j, g)) => f > g + RATE_TIE || ((f - g).abs() <= RATE_TIE && route.hops() < self.routes[j].hops()),
            };
            if replace {
                best = Some((i, f));
            }
        }
        best.unwrap_or((self.null_index(), 0.0))
    }
}

/// Best supported route of a configuration and its raw throughput.
pub fn best_route(config: &Configuration, params: &NetworkParams) -> Result<(Route, f64)> {
    let table = RouteTable::new(params)?;
    let (idx, f) = table.best(config);
    Ok((table.routes[idx].clone(), f))
}
