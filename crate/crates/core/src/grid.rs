//! The linear-grid network: parameters, occupancy configurations and routes.
//!
//! The source sits at position 0 and the destination at `K + 1`; relays
//! occupy the interior positions `1..=K`. Node identities are erased, so the
//! network state is the occupancy count vector over the interior.

use std::fmt;

use crate::error::{Error, Result};

/// Boundary behavior of the per-node random walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// A node trying to leave the grid waits at the boundary for the slot.
    StuckAtBoundary,
    /// A node leaving one end re-enters at the other end.
    WrapAround,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::StuckAtBoundary => f.write_str("stuck"),
            Boundary::WrapAround => f.write_str("wrap"),
        }
    }
}

/// Guards on the combinatorial enumerations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_configurations: u128,
    /// Cap on the split cross-product of a single configuration-kernel row.
    pub max_kernel_splits: u128,
    pub max_independent_sets: usize,
    /// Cap on `|configurations| * |routes|`.
    pub max_states: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_configurations: 1_000_000,
            max_kernel_splits: 10_000_000,
            max_independent_sets: 10_000,
            max_states: 2_000_000,
        }
    }
}

/// Everything that defines one network instance.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    /// Interior grid positions.
    pub k: usize,
    /// Relay nodes.
    pub n: usize,
    /// Transmission range in grid units.
    pub m: usize,
    /// `rates[d - 1]` is the normalized rate of a hop of length `d`.
    pub rates: Vec<f64>,
    pub p_left: f64,
    pub p_right: f64,
    pub boundary: Boundary,
    /// Fraction of a slot consumed by route discovery.
    pub phi: f64,
    pub limits: Limits,
}

impl NetworkParams {
    /// `K` positions and `N` relays with the default rate table `[1, 0.5]`,
    /// `p_l = p_r = 0.25`, stuck-at-boundary mobility and zero discovery cost.
    pub fn new(k: usize, n: usize) -> Self {
        NetworkParams {
            k,
            n,
            m: 2,
            rates: vec![1.0, 0.5],
            p_left: 0.25,
            p_right: 0.25,
            boundary: Boundary::StuckAtBoundary,
            phi: 0.0,
            limits: Limits::default(),
        }
    }

    pub fn with_mobility(mut self, p_left: f64, p_right: f64) -> Self {
        self.p_left = p_left;
        self.p_right = p_right;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    /// Sets the range and its rate table together.
    pub fn with_rates(mut self, rates: Vec<f64>) -> Self {
        self.m = rates.len();
        self.rates = rates;
        self
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    /// Probability of staying put for one slot.
    pub fn p_stay(&self) -> f64 {
        1.0 - self.p_left - self.p_right
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.k == 0 {
            return bad("K must be positive".into());
        }
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if self.rates.len() != self.m {
            return bad(format!(
                "rate table has {} entries but m = {}",
                self.rates.len(),
                self.m
            ));
        }
        for (i, &r) in self.rates.iter().enumerate() {
            if !(r > 0.0 && r <= 1.0) {
                return bad(format!("rate for hop length {} is {r}, expected (0, 1]", i + 1));
            }
            if i > 0 && r > self.rates[i - 1] {
                return bad("rates must be non-increasing in hop length".into());
            }
        }
        for (name, p) in [("p_l", self.p_left), ("p_r", self.p_right)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.p_left + self.p_right > 1.0 + 1e-12 {
            return bad("p_l + p_r exceeds 1".into());
        }
        if !(0.0..=1.0).contains(&self.phi) {
            return bad(format!("phi = {} is outside [0, 1]", self.phi));
        }
        Ok(())
    }

    /// Stuck-at-boundary walks drift to one end unless mobility is symmetric.
    pub fn has_asymmetric_stuck_boundary(&self) -> bool {
        self.boundary == Boundary::StuckAtBoundary && self.p_left != self.p_right
    }

    pub fn configuration_count(&self) -> u128 {
        multichoose(self.k, self.n)
    }
}

/// Number of multisets of size `items` over `slots` slots, `C(items + slots - 1, slots - 1)`.
/// Saturates at `u128::MAX`.
pub fn multichoose(slots: usize, items: usize) -> u128 {
    if slots == 0 {
        return u128::from(items == 0);
    }
    binomial((items + slots - 1) as u128, (slots - 1) as u128)
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        match acc.checked_mul(n - i) {
            Some(v) => acc = v / (i + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// Occupancy counts `[n_1, ..., n_K]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    counts: Vec<u32>,
}

impl Configuration {
    pub fn new(counts: Vec<u32>) -> Self {
        Configuration { counts }
    }

    /// Counts the nodes at each position from a list of 1-based positions.
    pub fn from_positions(k: usize, positions: &[usize]) -> Self {
        let mut counts = vec![0u32; k];
        for &p in positions {
            counts[p - 1] += 1;
        }
        Configuration { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    /// Nodes at 1-based grid position `pos`.
    pub fn at(&self, pos: usize) -> u32 {
        self.counts[pos - 1]
    }

    /// Index of this configuration in [`enumerate_configurations`] order.
    pub fn rank(&self) -> usize {
        let k = self.counts.len();
        let mut remaining = self.total();
        let mut rank: u128 = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            let c = c as usize;
            let rest = k - i - 1;
            // Configurations with a larger count here come first.
            for v in c + 1..=remaining {
                rank += multichoose(rest, remaining - v);
            }
            remaining -= c;
        }
        rank as usize
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

/// All occupancy vectors of `N` nodes over `K` positions, in descending
/// lexicographic order (`[N, 0, ...]` first, `[..., 0, N]` last).
pub fn enumerate_configurations(params: &NetworkParams) -> Result<Vec<Configuration>> {
    let count = params.configuration_count();
    if count > params.limits.max_configurations {
        return Err(Error::SizeLimit {
            what: "configuration enumeration",
            size: count,
            limit: params.limits.max_configurations,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut counts = vec![0u32; params.k];
    fill_configurations(&mut counts, 0, params.n as u32, &mut out);
    Ok(out)
}

fn fill_configurations(counts: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<Configuration>) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        out.push(Configuration::new(counts.to_vec()));
        return;
    }
    for c in (0..=remaining).rev() {
        counts[pos] = c;
        fill_configurations(counts, pos + 1, remaining - c, out);
    }
    counts[pos] = 0;
}

/// A source-to-destination position sequence, or the null route.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Route {
    /// Carries nothing; held before the first discovery.
    Null,
    /// Full sequence `0, i_1, ..., i_l, K + 1`, strictly increasing.
    Path(Vec<usize>),
}

impl Route {
    pub fn is_null(&self) -> bool {
        matches!(self, Route::Null)
    }

    /// Full position sequence including source and destination; empty for the null route.
    pub fn positions(&self) -> &[usize] {
        match self {
            Route::Null => &[],
            Route::Path(p) => p,
        }
    }

    /// Relay positions, without source and destination.
    pub fn relays(&self) -> &[usize] {
        match self {
            Route::Null => &[],
            Route::Path(p) => &p[1..p.len() - 1],
        }
    }

    pub fn hops(&self) -> usize {
        self.positions().len().saturating_sub(1)
    }

    /// Compact form without commas, e.g. `S-1-3-D` or `null`.
    pub fn compact(&self) -> String {
        match self {
            Route::Null => "null".to_string(),
            Route::Path(p) => {
                let last = p.len() - 1;
                p.iter()
                    .enumerate()
                    .map(|(i, v)| match i {
                        0 => "S".to_string(),
                        i if i == last => "D".to_string(),
                        _ => v.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join("-")
            }
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Route::Null => f.write_str("(null)"),
            Route::Path(_) => write!(f, "({})", self.compact().replace('-', ",")),
        }
    }
}

/// Every route whose hops are all at most `m` long, in lexicographic order of
/// the full position sequence, followed by the null route.
///
/// Repeated positions are not generated: a zero-length hop cannot add rate.
pub fn enumerate_routes(params: &NetworkParams) -> Vec<Route> {
    let mut out = Vec::new();
    let mut path = vec![0usize];
    extend_routes(params.k + 1, params.m, &mut path, &mut out);
    out.push(Route::Null);
    out
}

fn extend_routes(dest: usize, m: usize, path: &mut Vec<usize>, out: &mut Vec<Route>) {
    let cur = *path.last().expect("path starts at the source");
    for next in cur + 1..=(cur + m).min(dest) {
        path.push(next);
        if next == dest {
            out.push(Route::Path(path.clone()));
        } else {
            extend_routes(dest, m, path, out);
        }
        path.pop();
    }
}

/// Number of routes [`enumerate_routes`] returns, null route included,
/// counted without enumerating. Saturates at `u128::MAX`.
pub fn route_count(params: &NetworkParams) -> u128 {
    // ways[i]: hop sequences from the source reaching position i.
    let dest = params.k + 1;
    let mut ways = vec![0u128; dest + 1];
    ways[0] = 1;
    for i in 1..=dest {
        ways[i] = (1..=params.m.min(i)).fold(0u128, |acc, d| acc.saturating_add(ways[i - d]));
    }
    ways[dest].saturating_add(1)
}

/// Rate of a hop of length `d`; zero beyond the transmission range.
pub fn hop_rate(d: usize, params: &NetworkParams) -> f64 {
    assert!(d >= 1, "hop length must be positive");
    params.rates.get(d - 1).copied().unwrap_or(0.0)
}

/// True when every relay position of a non-null route is occupied.
pub fn route_supported(route: &Route, config: &Configuration) -> bool {
    match route {
        Route::Null => false,
        Route::Path(_) => route.relays().iter().all(|&p| config.at(p) >= 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(relays: &[usize], k: usize) -> Route {
        let mut p = vec![0];
        p.extend_from_slice(relays);
        p.push(k + 1);
        Route::Path(p)
    }

    #[test]
    fn small_configuration_sets() {
        let two = enumerate_configurations(&NetworkParams::new(2, 2)).unwrap();
        let counts: Vec<_> = two.iter().map(|c| c.counts().to_vec()).collect();
        assert_eq!(counts, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);

        let one = enumerate_configurations(&NetworkParams::new(1, 5)).unwrap();
        assert_eq!(one, vec![Configuration::new(vec![5])]);

        // C(13, 4) by the product formula.
        let expected = (13 * 12 * 11 * 10) / (4 * 3 * 2);
        assert_eq!(
            enumerate_configurations(&NetworkParams::new(5, 9)).unwrap().len(),
            expected
        );
    }

    #[test]
    fn configuration_guard() {
        let limits = Limits {
            max_configurations: 10,
            ..Default::default()
        };
        let err = enumerate_configurations(&NetworkParams::new(5, 9).with_limits(limits)).unwrap_err();
        assert!(err.is_size_limit());
    }

    #[test]
    fn rank_matches_enumeration_order() {
        for (k, n) in [(1, 3), (3, 0), (3, 4), (5, 5)] {
            let configs = enumerate_configurations(&NetworkParams::new(k, n)).unwrap();
            for (i, c) in configs.iter().enumerate() {
                assert_eq!(c.rank(), i, "{c}");
            }
        }
    }

    #[test]
    fn routes_for_four_positions() {
        let routes = enumerate_routes(&NetworkParams::new(4, 3));
        let expected = vec![
            path(&[1, 2, 3, 4], 4),
            path(&[1, 2, 3], 4),
            path(&[1, 2, 4], 4),
            path(&[1, 3, 4], 4),
            path(&[1, 3], 4),
            path(&[2, 3, 4], 4),
            path(&[2, 3], 4),
            path(&[2, 4], 4),
            Route::Null,
        ];
        assert_eq!(routes, expected);
    }

    #[test]
    fn direct_route_when_destination_in_range() {
        let routes = enumerate_routes(&NetworkParams::new(1, 1));
        assert_eq!(routes, vec![path(&[1], 1), path(&[], 1), Route::Null]);
    }

    #[test]
    fn route_count_follows_compositions() {
        // Compositions of K+1 into parts {1, 2}: Fibonacci.
        let routes = enumerate_routes(&NetworkParams::new(5, 1));
        assert_eq!(routes.len(), 14);
        for k in 1..=8 {
            for rates in [vec![1.0], vec![1.0, 0.5], vec![1.0, 0.5, 0.25]] {
                let p = NetworkParams::new(k, 1).with_rates(rates);
                assert_eq!(route_count(&p), enumerate_routes(&p).len() as u128);
            }
        }
    }

    #[test]
    fn hop_rates() {
        let p = NetworkParams::new(4, 4);
        assert_eq!(hop_rate(1, &p), 1.0);
        assert_eq!(hop_rate(2, &p), 0.5);
        assert_eq!(hop_rate(3, &p), 0.0);
    }

    #[test]
    fn support_checks() {
        let c = Configuration::new(vec![1, 0, 1, 0]);
        assert!(route_supported(&path(&[1, 3], 4), &c));
        assert!(!route_supported(&path(&[1, 2, 3], 4), &c));
        assert!(!route_supported(&Route::Null, &c));
        // Extra nodes at a position still support it.
        assert!(route_supported(
            &path(&[1, 3], 4),
            &Configuration::new(vec![3, 0, 2, 0])
        ));
    }

    #[test]
    fn route_display() {
        assert_eq!(path(&[1, 3], 4).to_string(), "(S,1,3,D)");
        assert_eq!(path(&[1, 3], 4).compact(), "S-1-3-D");
        assert_eq!(Route::Null.compact(), "null");
    }

    #[test]
    fn param_validation() {
        assert!(NetworkParams::new(4, 4).validate().is_ok());
        assert!(NetworkParams::new(0, 4).validate().is_err());
        assert!(NetworkParams::new(4, 4).with_mobility(0.7, 0.5).validate().is_err());
        assert!(NetworkParams::new(4, 4).with_rates(vec![0.5, 1.0]).validate().is_err());
        assert!(NetworkParams::new(4, 4).with_phi(1.5).validate().is_err());
        let mut p = NetworkParams::new(4, 4);
        p.m = 3;
        assert!(p.validate().is_err());
    }
}
