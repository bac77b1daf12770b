//! Minimum-work reset without a control bound: the variational two-point
//! boundary problem solved by backward shooting.
//!
//! Eliminating the gap through the motion equation turns the work functional
//! into an autonomous Lagrangian in `(p, p_dot)` whose stationarity condition
//! is the second-order equation implemented by [`el_rhs`]. The boundary
//! conditions are `p(0) = 1/2`, `p(tau) = epsilon`.
//!
//! Shooting runs backward from `t = tau` with state `(epsilon, s)`,
//! `s = p_dot(tau) in (-epsilon, 0)`, and terminates on the event
//! `p = 1/2`; the residual is the elapsed backward time minus `tau`. The
//! equation has a pole on the `p = 1/2` boundary (every solution arrives
//! there with `p_dot -> -1/2` and a square-root profile), so the event is
//! detected just short of it and the remaining sliver is added in closed
//! form from the local orbit model `p_dot = -1/2 + c sqrt(1 - 2p)`, which is
//! exact to far below the shooting tolerance.

use crate::error::{Error, Result};
use crate::model;
use crate::ode::{integrate_to_event, EventDirection, IntegratorConfig, SampledCurve};
use crate::scalar::Real;
use crate::trajectory::{DenseTrajectory, Piece, Trajectory, WorkBreakdown};

/// Solver knobs shared by the unbounded and bounded solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Integrator tolerances for the shooting integrations.
    pub integrator: IntegratorConfig<T>,
    /// Shooting residual tolerance, in time units.
    pub shoot_tol: T,
    /// Touch-time root tolerance, in time units.
    pub t_star_tol: T,
    /// Number of output samples per trajectory.
    pub samples: usize,
    /// Geometric bracket expansions allowed in the shooting parameter.
    pub max_bracket_expansions: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            shoot_tol: T::cst(1e-10),
            t_star_tol: T::cst(1e-9),
            samples: 1000,
            max_bracket_expansions: 6,
        }
    }
}

/// Diagnostics of a shooting solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingReport<T> {
    /// The solved parameter: terminal slope `p_dot(tau)` here, the touch
    /// time `t*` for the bounded solver.
    pub parameter: T,
    /// Final absolute residual, in time units.
    pub residual: T,
    /// Residual evaluations performed (bracketing plus root refinement).
    pub iterations: usize,
    /// Residual tolerance that was targeted.
    pub shoot_tol: T,
    /// Integrator relative tolerance used.
    pub rel_tol: T,
    /// Integrator absolute tolerance used.
    pub abs_tol: T,
}

/// An unbounded solve: the optimal trajectory and how it was obtained.
#[derive(Debug, Clone)]
pub struct UnboundedSolution<T> {
    pub trajectory: Trajectory<T>,
    pub report: ShootingReport<T>,
}

/// Second derivative of the population along optimal trajectories:
///
/// ```text
/// p_ddot = [(1 - 2p + 2p^2) v^2 + 2v^3 + 2v^4] / [(1 - 2p)(2p(1-p) + v)]
/// ```
///
/// Singular at `p = 1/2` and where `2p(1-p) + v = 0`.
pub fn el_rhs<T: Real>(p_e: T, p_dot: T) -> Result<T, T> {
    let half = T::cst(0.5);
    if !(p_e > T::zero() && p_e < half) {
        return Err(Error::Domain {
            op: "el_rhs",
            what: "p_e",
            value: p_e,
        });
    }
    let den2 = T::cst(2.0) * p_e * (T::one() - p_e) + p_dot;
    if den2 == T::zero() {
        return Err(Error::Domain {
            op: "el_rhs",
            what: "2p(1-p) + p_dot",
            value: den2,
        });
    }
    Ok(el_rhs_raw(p_e, p_dot))
}

/// `el_rhs` without checks; NaN outside the domain.
#[inline]
pub(crate) fn el_rhs_raw<T: Real>(p: T, v: T) -> T {
    let one = T::one();
    let two = T::cst(2.0);
    let v2 = v * v;
    let num = v2 * ((one - two * p + two * p * p) + two * v + two * v2);
    let den = (one - two * p) * (two * p * (one - p) + v);
    num / den
}

/// First integral of the autonomous Lagrangian,
/// `E = p_dot^2 (1 - 2p) / ((p_dot + 1 - p)(p_dot + p))`,
/// constant along every solution of the variational equation. The strongest
/// cheap optimality diagnostic: evaluate it along a solved trajectory and
/// check for drift.
pub fn beltrami_constant<T: Real>(p_e: T, p_dot: T) -> Result<T, T> {
    let half = T::cst(0.5);
    if !(p_e > T::zero() && p_e < half) {
        return Err(Error::Domain {
            op: "beltrami_constant",
            what: "p_e",
            value: p_e,
        });
    }
    if !(p_dot + p_e > T::zero()) {
        return Err(Error::Domain {
            op: "beltrami_constant",
            what: "p_dot + p_e",
            value: p_dot + p_e,
        });
    }
    let one = T::one();
    Ok(p_dot * p_dot * (one - (p_e + p_e)) / ((p_dot + one - p_e) * (p_dot + p_e)))
}

/// Population width `1 - 2p` at which the backward integration hands the
/// final approach to the closed-form local orbit model.
fn u_switch<T: Real>() -> T {
    T::cst(1e-10).max(T::cst(64.0) * T::epsilon())
}

/// Start states closer to `p = 1/2` than this skip integration entirely and
/// use the local model for the whole (microscopic) duration.
fn u_analytic<T: Real>() -> T {
    T::cst(1e-6).max(T::cst(1e4) * T::epsilon())
}

/// Backward time to cover `u in (0, u0]` on the local orbit
/// `p_dot = -1/2 + c sqrt(u)`:
/// exact integral `-sqrt(u0)/c - ln(1 - 2 c sqrt(u0)) / (2 c^2)`.
fn tail_time<T: Real>(u0: T, c: T) -> T {
    let c = c.max(T::zero());
    let z = (c + c) * u0.sqrt();
    if z < T::cst(1e-8) {
        // series limit, avoids 0/0 at c = 0
        return u0 * (T::one() + T::cst(2.0 / 3.0) * z + T::cst(0.5) * z * z);
    }
    -u0.sqrt() / c - (-z).ln_1p() / ((c + c) * c)
}

/// Outcome of one backward run.
pub(crate) enum Backward<T> {
    /// Event reached: total backward duration (integration + analytic tail)
    /// and the integrated curve, if any (`None` when the start state was
    /// already inside the analytic region).
    Reached {
        duration: T,
        curve: Option<SampledCurve<T, 2>>,
    },
    /// The time cap was hit before the event fired.
    CapHit,
}

/// Integrate the variational equation backward from `(p0, v0)` until
/// `p = 1/2` (up to the analytic sliver) or until `sigma = cap`.
pub(crate) fn backward_duration<T: Real>(
    p0: T,
    v0: T,
    cap: T,
    cfg: &IntegratorConfig<T>,
) -> Result<Backward<T>, T> {
    let half = T::cst(0.5);
    let u0 = T::one() - (p0 + p0);
    if u0 <= u_analytic() {
        let c = (v0 + half) / u0.sqrt();
        return Ok(Backward::Reached {
            duration: tail_time(u0, c),
            curve: None,
        });
    }
    let p_stop = half - half * u_switch();
    let rhs = |_s: T, y: &[T; 2]| [-y[1], -el_rhs_raw(y[0], y[1])];
    let event = move |_s: T, y: &[T; 2]| y[0] - p_stop;
    match integrate_to_event(rhs, [p0, v0], T::zero(), event, EventDirection::Rising, cfg, cap) {
        Ok(curve) => {
            let sigma_e = curve.event_time.expect("event fired");
            let y_e = curve.end_state();
            let u_e = T::one() - (y_e[0] + y_e[0]);
            let c = (y_e[1] + half) / u_e.sqrt();
            Ok(Backward::Reached {
                duration: sigma_e + tail_time(u_e, c),
                curve: Some(curve),
            })
        }
        Err(Error::EventNotFound { .. }) => Ok(Backward::CapHit),
        Err(e) => Err(e),
    }
}

/// Shooting core: find the terminal slope `s` for which the backward orbit
/// from `(epsilon, s)` spends exactly `tau` before reaching `p = 1/2`.
///
/// The slope is parametrized as `s = -epsilon * logistic(x)` so both tails
/// (`s -> 0` and `s -> -epsilon`) are resolved; the residual is monotone
/// decreasing in `x`.
pub(crate) fn shoot<T: Real>(
    tau: T,
    epsilon: T,
    cfg: &SolverConfig<T>,
) -> Result<(T, T, usize), T> {
    let cap = T::cst(3.0) * tau + T::cst(100.0);
    let evals = std::cell::Cell::new(0usize);
    let slope = |x: T| -epsilon / (T::one() + (-x).exp());
    let residual = |x: T| -> Result<T, T> {
        evals.set(evals.get() + 1);
        match backward_duration(epsilon, slope(x), cap, &cfg.integrator)? {
            Backward::Reached { duration, .. } => Ok(duration - tau),
            Backward::CapHit => Ok(cap - tau),
        }
    };

    // initial bracket: s in (-0.999 eps, -1e-6 eps), expanded geometrically
    let mut x_lo = T::cst(-13.8);
    let mut x_hi = T::cst(6.9);
    let x_cap = T::cst(36.0);
    let mut r_lo = residual(x_lo)?;
    let mut r_hi = residual(x_hi)?;
    let mut expansions = 0usize;
    while r_lo < T::zero() && x_lo > -x_cap {
        if expansions >= cfg.max_bracket_expansions {
            break;
        }
        expansions += 1;
        x_lo = (x_lo - T::cst(13.8)).max(-x_cap);
        r_lo = residual(x_lo)?;
    }
    while r_hi > T::zero() && x_hi < x_cap {
        if expansions >= cfg.max_bracket_expansions {
            break;
        }
        expansions += 1;
        x_hi = (x_hi + T::cst(13.8)).min(x_cap);
        r_hi = residual(x_hi)?;
    }
    if !(r_lo >= T::zero() && r_hi <= T::zero()) {
        return Err(Error::Bracket {
            lo: slope(x_lo),
            hi: slope(x_hi),
            f_lo: r_lo,
            f_hi: r_hi,
        });
    }

    let failure: std::cell::RefCell<Option<Error<T>>> = std::cell::RefCell::new(None);
    let x_root = crate::ode::find_root(
        |x| match residual(x) {
            Ok(r) => r,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                T::nan()
            }
        },
        (x_lo, x_hi),
        cfg.shoot_tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let x = x_root?;
    let s = slope(x);
    let r = match backward_duration(epsilon, s, cap, &cfg.integrator)? {
        Backward::Reached { duration, .. } => duration - tau,
        Backward::CapHit => cap - tau,
    };
    Ok((s, r.abs(), evals.get()))
}

/// Assemble the dense pieces and samples of a solved arc that runs backward
/// from `(t_anchor, p_end, v_end)` and reaches `p = 1/2` at forward time 0.
pub(crate) fn assemble_el_pieces<T: Real>(
    curve: Option<SampledCurve<T, 2>>,
    t_anchor: T,
) -> Vec<Piece<T>> {
    match curve {
        None => {
            // whole arc inside the analytic sliver
            vec![Piece::StartSliver {
                t0: T::zero(),
                t1: t_anchor,
                p1: T::cst(0.5),
                v1: T::cst(-0.5),
            }]
        }
        Some(curve) => {
            let sigma_e = curve.event_time.expect("event fired");
            let y_e = curve.end_state();
            let t_ev = (t_anchor - sigma_e).max(T::zero());
            let mut pieces = Vec::with_capacity(2);
            if t_ev > T::zero() {
                pieces.push(Piece::StartSliver {
                    t0: T::zero(),
                    t1: t_ev,
                    p1: y_e[0],
                    v1: y_e[1],
                });
            }
            pieces.push(Piece::ElBackward {
                curve,
                t_anchor,
                t0: t_ev,
                t1: t_anchor,
            });
            pieces
        }
    }
}

/// Sample a dense trajectory uniformly on `[0, tau]`.
pub(crate) fn sample_dense<T: Real>(
    dense: DenseTrajectory<T>,
    tau: T,
    samples: usize,
) -> Trajectory<T> {
    let n = samples.max(2);
    let half = T::cst(0.5);
    let mut ts = Vec::with_capacity(n);
    let mut p_e = Vec::with_capacity(n);
    let mut p_dot = Vec::with_capacity(n);
    let mut lambda_h = Vec::with_capacity(n);
    for i in 0..n {
        let t = if i + 1 == n {
            tau
        } else {
            tau * T::of_usize(i) / T::of_usize(n - 1)
        };
        let (p, v) = if i == 0 {
            (half, -half)
        } else {
            dense.state_at(t)
        };
        let l = if i == 0 { T::zero() } else { dense.lambda_at(t) };
        ts.push(t);
        p_e.push(p);
        p_dot.push(v);
        lambda_h.push(l);
    }
    Trajectory::with_dense(ts, p_e, p_dot, lambda_h, dense)
}

/// Solve the unbounded minimum-work reset.
pub fn solve_unbounded<T: Real>(
    task: &model::ResetTask<T>,
    cfg: &SolverConfig<T>,
) -> Result<UnboundedSolution<T>, T> {
    if task.lambda_max.is_some() {
        return Err(Error::CaseMismatch {
            reason: "solve_unbounded requires a task without a control bound".into(),
        });
    }
    let (s, residual, iterations) = shoot(task.tau, task.epsilon, cfg)?;

    let cap = T::cst(3.0) * task.tau + T::cst(100.0);
    let curve = match backward_duration(task.epsilon, s, cap, &cfg.integrator)? {
        Backward::Reached { curve, .. } => curve,
        Backward::CapHit => {
            return Err(Error::EventNotFound { t_end: cap });
        }
    };
    let dense = DenseTrajectory {
        pieces: assemble_el_pieces(curve, task.tau),
    };
    let mut trajectory = sample_dense(dense, task.tau, cfg.samples);
    // pin the exact terminal values
    let last = trajectory.ts.len() - 1;
    trajectory.p_e[last] = task.epsilon;
    trajectory.p_dot[last] = s;
    trajectory.lambda_h[last] = model::invert_control(task.epsilon, s)?;

    Ok(UnboundedSolution {
        trajectory,
        report: ShootingReport {
            parameter: s,
            residual,
            iterations,
            shoot_tol: cfg.shoot_tol,
            rel_tol: cfg.integrator.rel_tol,
            abs_tol: cfg.integrator.abs_tol,
        },
    })
}

/// Work objective `J = -integral of p_dot * lambda_H dt` over a trajectory.
///
/// Uses adaptive quadrature on the dense backbone when present (with the
/// boundary segments integrated exactly), and a trapezoid rule over the
/// samples otherwise.
pub fn objective<T: Real>(traj: &Trajectory<T>) -> T {
    match &traj.dense {
        Some(dense) => {
            let tau = traj.duration();
            dense.work_integral(T::zero(), tau, quad_tol::<T>())
        }
        None => traj.sampled_work_integral(),
    }
}

pub(crate) fn quad_tol<T: Real>() -> T {
    T::cst(1e-12).max(T::cst(100.0) * T::epsilon())
}

/// Extra work above the quasistatic cost, `W_ex = J - (ln 2 - S(eps))`.
pub fn extra_work<T: Real>(j: T, epsilon: T) -> Result<T, T> {
    Ok(j - model::quasistatic_work(epsilon)?)
}

/// Full work accounting of a trajectory ending at `epsilon`.
pub fn work_breakdown<T: Real>(traj: &Trajectory<T>, epsilon: T) -> Result<WorkBreakdown<T>, T> {
    let j = objective(traj);
    breakdown_from_j(j, None, None, traj.final_gap(), epsilon)
}

pub(crate) fn breakdown_from_j<T: Real>(
    j: T,
    j1: Option<T>,
    j2: Option<T>,
    lambda_tau: T,
    epsilon: T,
) -> Result<WorkBreakdown<T>, T> {
    let half = T::cst(0.5);
    let w_qs = model::quasistatic_work(epsilon)?;
    let w_sc1 = j + lambda_tau * (epsilon - half);
    let w_qa2 = -lambda_tau * (epsilon - half);
    Ok(WorkBreakdown {
        j,
        j1,
        j2,
        w_sc1,
        w_qa2,
        w_sc: j,
        w_qs,
        w_ex: j - w_qs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn el_rhs_matches_direct_evaluation() {
        // (0.625*0.01 - 0.002 + 0.0002) / (0.5*0.275)
        assert_relative_eq!(
            el_rhs(0.25, -0.1).unwrap(),
            0.03236363636363636,
            max_relative = 1e-13
        );
        // stationary point
        assert_eq!(el_rhs(0.3, 0.0).unwrap(), 0.0);
        assert!(el_rhs(0.5, -0.1).is_err());
        let p = 0.3;
        let v = -2.0 * p * (1.0 - p);
        assert!(el_rhs(p, v).is_err());
    }

    #[test]
    fn el_numerator_factors_near_one_half() {
        // at p = 1/2 the numerator equals 2 v^2 (v + 1/2)^2
        for k in 0..10 {
            let v = -0.49 + 0.048 * k as f64;
            let num = (1.0 - 2.0 * 0.5 + 2.0 * 0.25) * v * v + 2.0 * v.powi(3) + 2.0 * v.powi(4);
            let factored = 2.0 * v * v * (v + 0.5) * (v + 0.5);
            assert_relative_eq!(num, factored, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn beltrami_vanishes_at_rest() {
        assert_eq!(beltrami_constant(0.3, 0.0).unwrap(), 0.0);
        assert!(beltrami_constant(0.3, -0.3).is_err());
    }

    #[test]
    fn tail_time_series_and_log_forms_agree() {
        let u0 = 1e-10f64;
        for c in [1e-6, 1e-3, 0.5, 100.0] {
            let z = 2.0 * c * u0.sqrt();
            let exact = -u0.sqrt() / c - (1.0f64 - z).ln() / (2.0 * c * c);
            assert_relative_eq!(tail_time(u0, c), exact, max_relative = 1e-6);
        }
        // c = 0 reduces to u0
        assert_relative_eq!(tail_time(1e-10f64, 0.0), 1e-10, max_relative = 1e-12);
    }
}
