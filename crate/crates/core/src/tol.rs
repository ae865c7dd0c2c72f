//! Comparison tolerances used across the crate.
//!
//! Probabilities are exact rationals, so equality of distributions never needs
//! a tolerance. Entropies are the one real-valued surface (log2 is
//! irrational); every inequality on entropic quantities is checked with the
//! slack below.

/// Slack for externally visible inequality checks (membership verdicts, bound
/// reports). An inequality `lhs >= bound` passes when `lhs - bound >= -SLACK`.
pub const SLACK: f64 = 1e-9;

/// Tolerance for internally generated quantities (chain-rule identities,
/// symmetry of mutual information, agreement of two algebraic routes).
pub const INTERNAL: f64 = 1e-12;

/// Settings object bundling the two tolerances. [`Tolerances::default`]
/// returns the global values; callers that need different slack construct
/// their own.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// Slack for inequality verdicts.
    pub slack: f64,
    /// Tolerance for internal identities.
    pub internal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            slack: SLACK,
            internal: INTERNAL,
        }
    }
}
