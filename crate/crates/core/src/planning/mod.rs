//! Exact history dynamic programs, AIS dynamic programs, infinite-horizon fixed
//! points, and the `α` error bounds.

mod ais_dp;
mod bounds;
mod check;
mod history;
mod truncated;

pub use ais_dp::{
    ais_dp, ais_policy_eval, ais_policy_eval_stationary, ais_value_iteration, bellman_ais, AisPolicy,
    ViResult, DEFAULT_VI_TOL,
};
pub use bounds::{
    alpha_bounds, alpha_recursion, alpha_stationary, compare_bounds, stationary_bound_report,
    lipschitz_value_bound, value_norm_bounds, BoundReport, BoundVariant, Comparison, Scenario, ValueNormBounds,
};
pub use check::{
    check_finite_bounds, check_policy_eval_bounds, greedy_policy, history_tv_rho, lift_policy,
    BoundCheck, CHECK_TOL,
};
pub use history::{history_dp, history_dp_on, history_policy_eval, history_policy_eval_on};
pub use truncated::{truncated_eval_inf, truncated_opt_inf, FscPolicy, TruncatedOptimal, TruncatedValue};

use serde::{Deserialize, Serialize};
use std::fmt::Write;

/// Values closer than this to the maximum count as ties.
pub const TIE_TOL: f64 = 1e-10;

/// Values, action values and a greedy action for every key of one stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageValues {
    pub keys: Vec<String>,
    pub value: Vec<f64>,
    /// `q[i][a]`.
    pub q: Vec<Vec<f64>>,
    /// Lowest-index action within `TIE_TOL` of the maximum.
    pub greedy: Vec<usize>,
}

/// Per-stage tables; `stages[t-1]` is stage `t`. Stationary solutions hold one stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValueTables {
    pub stages: Vec<StageValues>,
}

/// Lowest index among `allowed` whose value is within `TIE_TOL` of the best.
pub(crate) fn argmax(q: &[f64], allowed: &[usize]) -> (usize, f64) {
    let best = allowed.iter().map(|&a| q[a]).fold(f64::NEG_INFINITY, f64::max);
    let a = allowed
        .iter()
        .copied()
        .find(|&a| q[a] >= best - TIE_TOL)
        .expect("non-empty action set");
    (a, best)
}

/// `x` rounded to 12 significant digits, printed in shortest form.
pub fn csv_number(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{r}")
}

impl ValueTables {
    /// Columns `stage,key,value,greedy,q0,q1,…`.
    pub fn to_csv(&self) -> String {
        let na = self.stages.iter().flat_map(|s| s.q.first()).map(Vec::len).next().unwrap_or(0);
        let mut out = String::from("stage,key,value,greedy");
        for a in 0..na {
            write!(out, ",q{a}").unwrap();
        }
        out.push('\n');
        for (t, st) in self.stages.iter().enumerate() {
            for i in 0..st.keys.len() {
                write!(out, "{},{},{},{}", t + 1, st.keys[i], csv_number(st.value[i]), st.greedy[i]).unwrap();
                for q in &st.q[i] {
                    write!(out, ",{}", csv_number(*q)).unwrap();
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("value tables serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(csv_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(csv_number(-45.0), "-45");
        assert_eq!(csv_number(0.0), "0");
        assert_eq!(csv_number(-0.0), "0");
        assert_eq!(csv_number(123_456_789.123_456), "123456789.123");
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0], &[0, 1, 2]).0, 1);
        assert_eq!(argmax(&[1.0, 3.0, 3.0], &[0, 2]).0, 2);
        assert_eq!(argmax(&[3.0 - 1e-12, 3.0], &[0, 1]).0, 0);
    }
}
