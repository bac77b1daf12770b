//! Error type shared across the library.

use thiserror::Error;

/// Errors from model evaluation, integration, and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error<T: std::fmt::Display + std::fmt::Debug> {
    /// An argument lies outside an operation's domain.
    #[error("domain error in {op}: {what} = {value}")]
    Domain {
        op: &'static str,
        what: &'static str,
        value: T,
    },

    /// The reset task can never be accomplished: the target error lies at or
    /// below the fixed point of the bounded control.
    #[error("infeasible: epsilon = {epsilon} <= fixed point {p_fixed} of lambda_max = {lambda_max} (need lambda_max > {lambda_needed})")]
    Infeasible {
        epsilon: T,
        lambda_max: T,
        p_fixed: T,
        lambda_needed: T,
    },

    /// The reset time is shorter than the first critical time; the task is
    /// unreachable at this tau (but feasible for larger tau).
    #[error("inaccessible: tau = {tau} < tau_c1 = {tau_c1}")]
    Inaccessible { tau: T, tau_c1: T },

    /// A bracketing search failed to enclose a sign change.
    #[error("bracketing failed on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracket { lo: T, hi: T, f_lo: T, f_hi: T },

    /// The step budget was exhausted before reaching the end of the span.
    #[error("integration step budget exhausted at t = {t}")]
    StepBudget { t: T },

    /// The step size underflowed, typically because the right-hand side is
    /// non-finite or singular near the reported state.
    #[error("step size underflow at t = {t} (state {state:?}); non-finite or singular derivative")]
    StepSizeUnderflow { t: T, state: Vec<T> },

    /// The registered event never fired within the integration span.
    #[error("event did not fire by t = {t_end}")]
    EventNotFound { t_end: T },

    /// A solver was invoked outside the case it handles.
    #[error("case mismatch: {reason}")]
    CaseMismatch { reason: String },

    /// A control protocol failed validation.
    #[error("invalid protocol at line {line}: {reason}")]
    Protocol { line: usize, reason: String },
}

/// Library result alias.
pub type Result<V, T> = std::result::Result<V, Error<T>>;
