//! CSV output: header row, `,` separator, `.` decimal point, LF line endings,
//! reals in fixed notation with 10 significant digits.

use std::fmt::Write;

use crate::mdp::{Mdp, MdpSolution};
use crate::sim::SweepResult;

/// Fixed-point rendering with 10 significant digits, e.g. `0.3333333333`.
pub fn sig10(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0.000000000".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (9 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding can carry into a new leading digit (9.9999999999 -> 10.00000000).
    let rounded: f64 = s.parse().unwrap_or(v);
    if decimals > 0 && rounded.abs() >= 10f64.powi(exp + 1) {
        let decimals = decimals - 1;
        format!("{v:.decimals$}")
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(sig10).unwrap_or_default()
}

pub const POLICY_HEADER: &str = "state_id,config,held_route,action,bias";

/// One row per MDP state with the optimal action and relative value.
pub fn policy_csv(mdp: &Mdp, solution: &MdpSolution) -> String {
    let mut out = String::new();
    out.push_str(POLICY_HEADER);
    out.push('\n');
    for i in 0..mdp.state_count() {
        let s = mdp.state(i);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            i,
            mdp.configs()[s.config],
            mdp.routes()[s.route].compact(),
            solution.policy.action(i),
            sig10(solution.bias[i])
        );
    }
    out
}

pub const SWEEP_HEADER: &str = "phi,policy,method,gain,stderr,threshold,discovery_rate,ratio_to_optimal";

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            sig10(row.phi),
            row.policy,
            row.method,
            sig10(row.gain),
            opt(row.stderr),
            opt(row.threshold),
            sig10(row.discovery_rate),
            opt(row.ratio_to_optimal)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formatting() {
        assert_eq!(sig10(1.0 / 3.0), "0.3333333333");
        assert_eq!(sig10(0.25), "0.2500000000");
        assert_eq!(sig10(1.0), "1.000000000");
        assert_eq!(sig10(0.0), "0.000000000");
        assert_eq!(sig10(-2.5), "-2.500000000");
        assert_eq!(sig10(0.00123), "0.001230000000");
        assert_eq!(sig10(9.99999999999), "10.00000000");
        assert_eq!(sig10(123.456), "123.4560000");
    }

    proptest! {
        #[test]
        fn ten_significant_digits(v in 1e-6f64..1e6) {
            let s = sig10(v);
            let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
            let significant = digits.trim_start_matches('0');
            prop_assert_eq!(significant.len(), 10, "{}", s);
            let back: f64 = s.parse().unwrap();
            prop_assert!((back - v).abs() <= v * 1e-9);
        }
    }
}
