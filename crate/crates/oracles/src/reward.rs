//! Scenario reward by evaluating every law at every sample instant.

use lawgen_core::stl::LawSpec;
use lawgen_core::trace::Trace;

use crate::stl::robustness_signal;

/// `(R_overall, attaining law)` for `laws` with their weights, in order.
pub fn reward(trace: &Trace, laws: &[(&LawSpec, f64)]) -> (f64, Option<String>) {
    let mut best = 0.0;
    let mut who = None;
    for (law, w) in laws {
        let sig = robustness_signal(&law.formula, trace);
        let mut min = f64::INFINITY;
        for v in sig {
            if v < min {
                min = v;
            }
        }
        let score = if min < 0.0 { w * -min } else { 0.0 };
        if score > best {
            best = score;
            who = Some(law.id.clone());
        }
    }
    (best, who)
}
