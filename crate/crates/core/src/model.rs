//! Closed-form physics of the thermally coupled two-level system.
//!
//! Everything is dimensionless: energies are `beta * lambda`, times are
//! `gamma * t`, work is in units of `1/beta`; internally `beta = gamma = 1`.
//! No operation accepts raw SI values.
//!
//! The single control knob is the effective gap `lambda_H`. The excited-state
//! population relaxes as
//!
//! ```text
//! dp/dt = (exp(-lambda)*(1 - p) - p) / (1 - exp(-lambda)) = n - (2n + 1)*p
//! ```
//!
//! with `n = 1/(exp(lambda) - 1)` the bath occupation at the gap. The
//! inversion of this relation (gap from a population and its rate) is what
//! lets the optimizers work in the population representation throughout.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gap threshold above which `exp(-lambda)` is below double rounding; kept
/// for documentation of the guard style, the expressions below are stable
/// without branching because they use `exp_m1`/`ln_1p` forms.
pub const LOG_DOMAIN_GUARD: f64 = 30.0;

/// A reset problem statement: reach `p_e(tau) = epsilon` from `p_e(0) = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetTask<T> {
    /// Dimensionless reset time (gamma * tau).
    pub tau: T,
    /// Target excited-state population at the end of the protocol.
    pub epsilon: T,
    /// Optional control bound (beta * lambda_m); `None` means unbounded.
    pub lambda_max: Option<T>,
}

impl<T: Real> ResetTask<T> {
    /// Unbounded task. Requires `tau > 0` and `0 < epsilon < 1/2`.
    pub fn new(tau: T, epsilon: T) -> Result<Self, T> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::Domain {
                op: "ResetTask::new",
                what: "tau",
                value: tau,
            });
        }
        if !(epsilon > T::zero() && epsilon < T::cst(0.5)) {
            return Err(Error::Domain {
                op: "ResetTask::new",
                what: "epsilon",
                value: epsilon,
            });
        }
        Ok(Self {
            tau,
            epsilon,
            lambda_max: None,
        })
    }

    /// Bounded task. Additionally requires `lambda_max > 0` and feasibility:
    /// `epsilon` must lie above the fixed point of the bounded dynamics,
    /// equivalently `lambda_max > ln((1 - epsilon)/epsilon)`.
    pub fn with_bound(tau: T, epsilon: T, lambda_max: T) -> Result<Self, T> {
        let mut task = Self::new(tau, epsilon)?;
        if !(lambda_max > T::zero()) || !lambda_max.is_finite() {
            return Err(Error::Domain {
                op: "ResetTask::with_bound",
                what: "lambda_max",
                value: lambda_max,
            });
        }
        let p_fixed = equilibrium_population(lambda_max)?;
        if epsilon <= p_fixed {
            return Err(Error::Infeasible {
                epsilon,
                lambda_max,
                p_fixed,
                lambda_needed: lambda_for_error(epsilon)?,
            });
        }
        task.lambda_max = Some(lambda_max);
        Ok(task)
    }
}

/// Population and its time derivative at an instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationState<T> {
    pub p_e: T,
    pub p_dot: T,
}

impl<T: Real> PopulationState<T> {
    /// Whether a finite gap realizes this state: `0 < p_e < 1/2` and
    /// `p_dot > -p_e` (the infinite-gap speed limit).
    pub fn admissible(&self) -> bool {
        self.p_e > T::zero()
            && self.p_e < T::cst(0.5)
            && self.p_dot + self.p_e > T::zero()
    }
}

/// Bath occupation `n = 1/(exp(lambda) - 1)` at gap `lambda > 0`.
///
/// Strictly decreasing; underflows cleanly to 0 for very large gaps.
pub fn mean_phonon<T: Real>(lambda: T) -> Result<T, T> {
    if !(lambda > T::zero()) {
        return Err(Error::Domain {
            op: "mean_phonon",
            what: "lambda",
            value: lambda,
        });
    }
    Ok(lambda.exp_m1().recip())
}

/// Equilibrium excited population `exp(-lambda)/(1 + exp(-lambda))` at gap
/// `lambda > 0`; equals `n/(2n + 1)`. Lies in `(0, 1/2)`.
pub fn equilibrium_population<T: Real>(lambda: T) -> Result<T, T> {
    if !(lambda > T::zero()) {
        return Err(Error::Domain {
            op: "equilibrium_population",
            what: "lambda",
            value: lambda,
        });
    }
    let e = (-lambda).exp();
    Ok(e / (T::one() + e))
}

/// Gap whose equilibrium population equals `epsilon`: `ln((1 - eps)/eps)`.
pub fn lambda_for_error<T: Real>(epsilon: T) -> Result<T, T> {
    if !(epsilon > T::zero() && epsilon < T::cst(0.5)) {
        return Err(Error::Domain {
            op: "lambda_for_error",
            what: "epsilon",
            value: epsilon,
        });
    }
    Ok(((T::one() - epsilon) / epsilon).ln())
}

/// Population rate under gap `lambda_H`:
/// `(exp(-l)*(1 - p) - p)/(1 - exp(-l))`.
pub fn master_rhs<T: Real>(p_e: T, lambda_h: T) -> Result<T, T> {
    if !(p_e > T::zero() && p_e < T::one()) {
        return Err(Error::Domain {
            op: "master_rhs",
            what: "p_e",
            value: p_e,
        });
    }
    if !(lambda_h > T::zero()) {
        return Err(Error::Domain {
            op: "master_rhs",
            what: "lambda_H",
            value: lambda_h,
        });
    }
    Ok(master_rhs_raw(p_e, lambda_h))
}

/// `master_rhs` without domain checks, for integrator right-hand sides.
/// Returns NaN on invalid input so adaptive steps reject and shrink.
#[inline]
pub(crate) fn master_rhs_raw<T: Real>(p_e: T, lambda_h: T) -> T {
    let em = (-lambda_h).exp();
    // denominator 1 - exp(-l) computed as -expm1(-l): accurate for small l
    (em * (T::one() - p_e) - p_e) / (-(-lambda_h).exp_m1())
}

/// Gap realizing the state `(p_e, p_dot)`:
/// `lambda_H = -ln((p_dot + p_e)/(p_dot + 1 - p_e))`.
///
/// Round-trips with [`master_rhs`]. Requires `p_dot + p_e > 0` (otherwise the
/// gap would be infinite or undefined) and `p_e < 1/2` (at `p_e = 1/2` every
/// gap gives the same rate, so the inverse is not unique; callers handle the
/// initial instant specially).
pub fn invert_control<T: Real>(p_e: T, p_dot: T) -> Result<T, T> {
    if !(p_e > T::zero() && p_e < T::cst(0.5)) {
        return Err(Error::Domain {
            op: "invert_control",
            what: "p_e",
            value: p_e,
        });
    }
    if !(p_dot + p_e > T::zero()) {
        return Err(Error::Domain {
            op: "invert_control",
            what: "p_dot + p_e",
            value: p_dot + p_e,
        });
    }
    Ok(invert_control_raw(p_e, p_dot))
}

/// `invert_control` without domain checks; NaN on invalid input.
///
/// Uses `ln_1p((1 - 2p)/(p_dot + p))`, which keeps absolute accuracy when
/// both populations approach 1/2 and the ratio approaches 1.
#[inline]
pub(crate) fn invert_control_raw<T: Real>(p_e: T, p_dot: T) -> T {
    ((T::one() - p_e - p_e) / (p_dot + p_e)).ln_1p()
}

/// Rate of change of the gap along an optimal trajectory (chain rule of the
/// inversion through the population dynamics):
///
/// ```text
/// dl/dt = 2 (1 - p(1+e)) (p - e(1-p)) / [(1-2p)(p(1-e) + e)(1-e)],  e = exp(-l)
/// ```
///
/// Strictly positive whenever `p_e` lies above the equilibrium population of
/// the current gap, which holds along every reset trajectory.
pub fn control_rate<T: Real>(p_e: T, lambda_h: T) -> Result<T, T> {
    if !(lambda_h > T::zero()) {
        return Err(Error::Domain {
            op: "control_rate",
            what: "lambda_H",
            value: lambda_h,
        });
    }
    if !(p_e > T::zero() && p_e < T::cst(0.5)) {
        return Err(Error::Domain {
            op: "control_rate",
            what: "p_e",
            value: p_e,
        });
    }
    let one = T::one();
    let em = (-lambda_h).exp();
    let den1 = one - (p_e + p_e);
    let den2 = p_e * (one - em) + em;
    let den3 = -(-lambda_h).exp_m1();
    let num = T::cst(2.0) * (one - p_e * (one + em)) * (p_e - em * (one - p_e));
    Ok(num / (den1 * den2 * den3))
}

/// Population under a constant gap `lambda_m`, anchored at
/// `(t_start, p_start)`:
///
/// ```text
/// p(t) = p_inf + (p_start - p_inf) * exp(-(2n+1)(t - t_start))
/// ```
///
/// with `p_inf = n/(2n+1)`. Valid for any `t`, before or after the anchor;
/// anchoring at the endpoint of a reset gives the boundary-segment tail in
/// closed form.
pub fn relaxation_solution<T: Real>(t: T, p_start: T, t_start: T, lambda_m: T) -> Result<T, T> {
    let n = mean_phonon(lambda_m)?;
    let k = T::cst(2.0) * n + T::one();
    let p_inf = n / k;
    Ok(p_inf + (p_start - p_inf) * (-k * (t - t_start)).exp())
}

/// Shannon entropy `-e ln e - (1-e) ln(1-e)`; endpoints map to 0 by limit.
pub fn shannon_entropy<T: Real>(epsilon: T) -> T {
    if epsilon <= T::zero() || epsilon >= T::one() {
        return T::zero();
    }
    -epsilon * epsilon.ln() - (T::one() - epsilon) * (-epsilon).ln_1p()
}

/// Quasistatic reset work `ln 2 - S(epsilon)` in units of `1/beta`;
/// approaches `ln 2` (the Landauer cost) for perfect reset.
pub fn quasistatic_work<T: Real>(epsilon: T) -> Result<T, T> {
    if !(epsilon > T::zero() && epsilon < T::cst(0.5)) {
        return Err(Error::Domain {
            op: "quasistatic_work",
            what: "epsilon",
            value: epsilon,
        });
    }
    Ok(T::cst(std::f64::consts::LN_2) - shannon_entropy(epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn mean_phonon_matches_closed_forms() {
        // e^{ln 2} - 1 = 1
        assert_relative_eq!(mean_phonon(2.0f64.ln()).unwrap(), 1.0, max_relative = 1e-14);
        // direct evaluation of 1/(e^15 - 1)
        assert_relative_eq!(
            mean_phonon(15.0).unwrap(),
            3.059024140780841e-7,
            max_relative = 1e-12
        );
        // large-gap limit
        assert_eq!(mean_phonon(800.0).unwrap(), 0.0);
        assert!(mean_phonon(0.0).is_err());
        assert!(mean_phonon(-1.0).is_err());
    }

    #[test]
    fn equilibrium_population_values() {
        assert_relative_eq!(
            equilibrium_population(1e-9).unwrap(),
            0.5,
            max_relative = 1e-8
        );
        let eps = 1e-5;
        let lam = lambda_for_error(eps).unwrap();
        assert_relative_eq!(equilibrium_population(lam).unwrap(), eps, max_relative = 1e-12);
        assert_relative_eq!(
            equilibrium_population(15.0).unwrap(),
            3.059022269256247e-7,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lambda_for_error_values() {
        assert_relative_eq!(lambda_for_error(1e-3).unwrap(), 999.0f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(
            lambda_for_error(1e-5).unwrap(),
            11.512915464920228,
            max_relative = 1e-13
        );
        // eps -> 1/2 gives lambda -> 0
        assert_abs_diff_eq!(lambda_for_error(0.5 - 1e-12).unwrap(), 0.0, epsilon = 1e-11);
        assert!(lambda_for_error(0.5).is_err());
        assert!(lambda_for_error(0.0).is_err());
    }

    #[test]
    fn master_rhs_fixed_point_and_limits() {
        // equilibrium is a fixed point
        for lam in [0.1, 1.0, 3.0, 10.0, 30.0] {
            let pe = equilibrium_population(lam).unwrap();
            assert_abs_diff_eq!(master_rhs(pe, lam).unwrap(), 0.0, epsilon = 1e-14);
        }
        // at p = 1/2 the rate is -1/2 for every finite gap
        assert_relative_eq!(master_rhs(0.5, 3.0).unwrap(), -0.5, max_relative = 1e-14);
        // pure-decay limit
        assert_relative_eq!(master_rhs(0.3, 800.0).unwrap(), -0.3, max_relative = 1e-14);
        assert!(master_rhs(0.3, 0.0).is_err());
    }

    #[test]
    fn invert_control_matches_examples() {
        // p = 1e-5, p_dot = 0: equilibrium gap
        assert_relative_eq!(
            invert_control(1e-5, 0.0).unwrap(),
            99999.0f64.ln(),
            max_relative = 1e-12
        );
        // ln(0.5/0.1)
        assert_relative_eq!(
            invert_control(0.3, -0.2).unwrap(),
            5.0f64.ln(),
            max_relative = 1e-12
        );
        assert!(invert_control(0.3, -0.3).is_err());
        assert!(invert_control(0.5, -0.1).is_err());
    }

    #[test]
    fn invert_and_master_round_trip() {
        for (p, pd) in [(0.3, -0.2), (0.49, -0.1), (1e-4, -5e-5), (0.2, -1e-9)] {
            let lam = invert_control(p, pd).unwrap();
            assert_relative_eq!(master_rhs(p, lam).unwrap(), pd, max_relative = 1e-10);
        }
    }

    #[test]
    fn control_rate_sign_and_zero() {
        for (p, lam) in [(0.3, 2.0), (0.1, 5.0), (0.45, 0.5)] {
            let peq = equilibrium_population(lam).unwrap();
            assert!(p > peq);
            assert!(control_rate(p, lam).unwrap() > 0.0);
        }
        // vanishes at equilibrium
        let lam = 2.0;
        let peq = equilibrium_population(lam).unwrap();
        assert_abs_diff_eq!(control_rate(peq, lam).unwrap(), 0.0, epsilon = 1e-14);
        assert!(control_rate(0.5, 2.0).is_err());
    }

    #[test]
    fn relaxation_solution_anchors_and_limits() {
        assert_relative_eq!(
            relaxation_solution(2.0, 0.37, 2.0, 15.0).unwrap(),
            0.37,
            max_relative = 1e-15
        );
        let n = mean_phonon(15.0).unwrap();
        assert_relative_eq!(
            relaxation_solution(1e6, 0.5, 0.0, 15.0).unwrap(),
            n / (2.0 * n + 1.0),
            max_relative = 1e-10
        );
        // backward anchoring works too (t < t_start)
        let fwd = relaxation_solution(3.0, 0.5, 0.0, 15.0).unwrap();
        let back = relaxation_solution(0.0, fwd, 3.0, 15.0).unwrap();
        assert_relative_eq!(back, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn entropy_and_quasistatic_work() {
        assert_relative_eq!(shannon_entropy(0.5), 2.0f64.ln(), max_relative = 1e-15);
        assert_eq!(shannon_entropy(0.0), 0.0);
        assert_eq!(shannon_entropy(1.0), 0.0);
        assert_relative_eq!(shannon_entropy(0.1), 0.3250829733914482, max_relative = 1e-13);
        // W_qs(1e-5) frozen from direct evaluation
        assert_relative_eq!(
            quasistatic_work(1e-5).unwrap(),
            0.6930220513552957,
            max_relative = 1e-12
        );
        assert_abs_diff_eq!(quasistatic_work(0.5 - 1e-13).unwrap(), 0.0, epsilon = 1e-11);
    }

    #[test]
    fn feasibility_gate_on_bounded_tasks() {
        assert!(ResetTask::with_bound(20.0, 1e-5, 15.0).is_ok());
        // beta*lambda_m = 11 < ln(99999) = 11.51: infeasible
        match ResetTask::with_bound(20.0, 1e-5, 11.0) {
            Err(Error::Infeasible { lambda_needed, .. }) => {
                assert_relative_eq!(lambda_needed, 11.512915464920228, max_relative = 1e-12);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(ResetTask::new(0.0, 1e-3).is_err());
        assert!(ResetTask::new(10.0, 0.6).is_err());
    }

    #[test]
    fn works_in_f32_with_loose_tolerances() {
        let lam: f32 = lambda_for_error(1e-3f32).unwrap();
        assert_relative_eq!(equilibrium_population(lam).unwrap(), 1e-3f32, max_relative = 1e-4);
        let pd: f32 = master_rhs(0.3f32, 2.0).unwrap();
        let lam2: f32 = invert_control(0.3f32, pd).unwrap();
        assert_relative_eq!(lam2, 2.0f32, max_relative = 1e-4);
    }
}
