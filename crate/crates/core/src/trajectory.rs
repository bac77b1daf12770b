//! Sampled reset trajectories with an internal dense backbone.
//!
//! A [`Trajectory`] is the sampled series `(t, p_e, p_dot, lambda_H)` on
//! `[0, tau]`. Trajectories produced by the solvers and the simulator also
//! carry a piecewise dense representation, which the work integrals use to
//! reach quadrature-level accuracy independent of the sample count.

use crate::model::{self, master_rhs_raw};
use crate::ode::{adaptive_simpson, SampledCurve};
use crate::scalar::Real;

/// Work accounting of a reset protocol, all in units of `1/beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkBreakdown<T> {
    /// Dimensionless objective `J = -integral of p_dot * lambda_H dt`.
    pub j: T,
    /// Objective restricted to the solved segment `[0, t*]` (bounded runs).
    pub j1: Option<T>,
    /// Objective over the boundary segment `[t*, tau]` (bounded runs).
    pub j2: Option<T>,
    /// Driving-step work `W_sc1 = J + lambda_H(tau) (eps - 1/2)`.
    pub w_sc1: T,
    /// Quench-step work `W_qa2 = -lambda_H(tau) (eps - 1/2)`.
    pub w_qa2: T,
    /// Total scheme work `W_sc = W_sc1 + W_qa2 = J`.
    pub w_sc: T,
    /// Quasistatic cost `ln 2 - S(eps)`.
    pub w_qs: T,
    /// Extra work `W_ex = W_sc - W_qs >= 0`.
    pub w_ex: T,
}

/// Piecewise-linear gap curve used by simulated (forward) pieces.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GapCurve<T> {
    /// Strictly increasing node times.
    pub ts: Vec<T>,
    /// Gap values at the nodes.
    pub ls: Vec<T>,
}

impl<T: Real> GapCurve<T> {
    pub(crate) fn constant(lambda: T, t0: T, t1: T) -> Self {
        Self {
            ts: vec![t0, t1],
            ls: vec![lambda, lambda],
        }
    }

    pub(crate) fn eval(&self, t: T) -> T {
        let n = self.ts.len();
        if t <= self.ts[0] {
            return self.ls[0];
        }
        if t >= self.ts[n - 1] {
            return self.ls[n - 1];
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.ts[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = (t - self.ts[lo]) / (self.ts[hi] - self.ts[lo]);
        self.ls[lo] + w * (self.ls[hi] - self.ls[lo])
    }
}

/// Gap floor used when evaluating the dynamics along protocols whose first
/// node sits at `lambda = 0` (the quench convention).
pub(crate) fn gap_floor<T: Real>() -> T {
    T::cst(1e-9).max(T::epsilon() * T::cst(16.0))
}

/// One dense piece of a trajectory on a forward-time span `[t0, t1]`.
#[derive(Debug, Clone)]
pub(crate) enum Piece<T> {
    /// Microscopic start interval `[t0, t1]` between the exact boundary state
    /// `(1/2, -1/2)` and the first integrated state; linear in both fields.
    StartSliver { t0: T, t1: T, p1: T, v1: T },
    /// Solved variational segment stored as a backward integration: the state
    /// at forward time `t` is `curve.eval(t_anchor - t)`, state = (p, v).
    ElBackward {
        curve: SampledCurve<T, 2>,
        t_anchor: T,
        t0: T,
        t1: T,
    },
    /// Constant-gap relaxation in closed form, anchored at `(anchor_t, anchor_p)`.
    Relax {
        lambda: T,
        anchor_t: T,
        anchor_p: T,
        t0: T,
        t1: T,
    },
    /// Forward-simulated population under a protocol gap curve.
    Forward {
        curve: SampledCurve<T, 1>,
        gap: GapCurve<T>,
        t0: T,
        t1: T,
    },
}

impl<T: Real> Piece<T> {
    pub(crate) fn span(&self) -> (T, T) {
        match self {
            Piece::StartSliver { t0, t1, .. } => (*t0, *t1),
            Piece::ElBackward { t0, t1, .. } => (*t0, *t1),
            Piece::Relax { t0, t1, .. } => (*t0, *t1),
            Piece::Forward { t0, t1, .. } => (*t0, *t1),
        }
    }

    /// Population and rate at forward time `t`.
    pub(crate) fn state_at(&self, t: T) -> (T, T) {
        let half = T::cst(0.5);
        match self {
            Piece::StartSliver { t0, t1, p1, v1 } => {
                if *t1 <= *t0 {
                    return (*p1, *v1);
                }
                let w = ((t - *t0) / (*t1 - *t0)).max(T::zero()).min(T::one());
                (
                    half + w * (*p1 - half),
                    -half + w * (*v1 + half),
                )
            }
            Piece::ElBackward { curve, t_anchor, .. } => {
                let y = curve.eval(*t_anchor - t);
                (y[0], y[1])
            }
            Piece::Relax {
                lambda,
                anchor_t,
                anchor_p,
                ..
            } => {
                let p = model::relaxation_solution(t, *anchor_p, *anchor_t, *lambda)
                    .unwrap_or(T::nan());
                (p, master_rhs_raw(p, *lambda))
            }
            Piece::Forward { curve, gap, .. } => {
                let p = curve.eval(t)[0];
                let l = gap.eval(t).max(gap_floor());
                (p, master_rhs_raw(p, l))
            }
        }
    }

    /// Gap at forward time `t`; exactly the segment constant on boundary
    /// pieces, the raw protocol value on simulated pieces, and the control
    /// inversion elsewhere (0 at `t = 0` by the continuity convention).
    pub(crate) fn lambda_at(&self, t: T) -> T {
        match self {
            Piece::StartSliver { t0, .. } => {
                if t <= *t0 {
                    return T::zero();
                }
                let (p, v) = self.state_at(t);
                if p >= T::cst(0.5) {
                    T::zero()
                } else {
                    model::invert_control_raw(p, v)
                }
            }
            Piece::ElBackward { .. } => {
                let (p, v) = self.state_at(t);
                model::invert_control_raw(p, v)
            }
            Piece::Relax { lambda, .. } => *lambda,
            Piece::Forward { gap, .. } => gap.eval(t),
        }
    }

    /// Interior node times that subdivide the piece for quadrature (protocol
    /// kinks on simulated pieces).
    fn interior_nodes(&self) -> Vec<T> {
        match self {
            Piece::Forward { gap, t0, t1, .. } => gap
                .ts
                .iter()
                .copied()
                .filter(|&t| t > *t0 && t < *t1)
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Dense backbone: contiguous pieces covering `[0, tau]`.
#[derive(Debug, Clone)]
pub(crate) struct DenseTrajectory<T> {
    pub pieces: Vec<Piece<T>>,
}

impl<T: Real> DenseTrajectory<T> {
    fn piece_for(&self, t: T) -> &Piece<T> {
        for piece in &self.pieces {
            let (_, t1) = piece.span();
            if t <= t1 {
                return piece;
            }
        }
        self.pieces.last().expect("dense trajectory has pieces")
    }

    pub(crate) fn state_at(&self, t: T) -> (T, T) {
        self.piece_for(t).state_at(t)
    }

    pub(crate) fn lambda_at(&self, t: T) -> T {
        self.piece_for(t).lambda_at(t)
    }

    /// `-integral of p_dot * lambda_H dt` over `[t_from, t_to]` by adaptive
    /// quadrature on the dense pieces; boundary pieces integrate exactly.
    pub(crate) fn work_integral(&self, t_from: T, t_to: T, tol: T) -> T {
        let mut total = T::zero();
        for piece in &self.pieces {
            let (p0, p1) = piece.span();
            let a = t_from.max(p0);
            let b = t_to.min(p1);
            if !(b > a) {
                continue;
            }
            total = total + piece_work(piece, a, b, tol);
        }
        total
    }

    /// Stieltjes integral of `(p - 1/2) dlambda` over the whole trajectory.
    pub(crate) fn stieltjes_integral(&self, tol: T) -> T {
        let half = T::cst(0.5);
        let mut total = T::zero();
        for piece in &self.pieces {
            let (a, b) = piece.span();
            if !(b > a) {
                continue;
            }
            match piece {
                Piece::Relax { .. } => {} // dlambda = 0
                Piece::StartSliver { .. } | Piece::ElBackward { .. } => {
                    // dlambda = control_rate(p, lambda) dt along solved arcs
                    let f = |t: T| {
                        let (p, _v) = piece.state_at(t);
                        let l = piece.lambda_at(t);
                        if l <= gap_floor() || p >= half {
                            return T::zero();
                        }
                        let one = T::one();
                        let em = (-l).exp();
                        let num = T::cst(2.0) * (one - p * (one + em)) * (p - em * (one - p));
                        let den =
                            (one - (p + p)) * (p * (one - em) + em) * (-(-l).exp_m1());
                        (p - half) * num / den
                    };
                    total = total + adaptive_simpson(&f, a, b, tol);
                }
                Piece::Forward { gap, .. } => {
                    // piecewise-linear gap: constant slope between nodes
                    let mut cuts = vec![a];
                    cuts.extend(piece.interior_nodes());
                    cuts.push(b);
                    for w in cuts.windows(2) {
                        let (ta, tb) = (w[0], w[1]);
                        if !(tb > ta) {
                            continue;
                        }
                        let la = gap.eval(ta);
                        let lb = gap.eval(tb);
                        let slope = (lb - la) / (tb - ta);
                        if slope == T::zero() {
                            continue;
                        }
                        let f = |t: T| {
                            let (p, _v) = piece.state_at(t);
                            (p - half) * slope
                        };
                        total = total + adaptive_simpson(&f, ta, tb, tol);
                    }
                }
            }
        }
        total
    }
}

fn piece_work<T: Real>(piece: &Piece<T>, a: T, b: T, tol: T) -> T {
    match piece {
        Piece::Relax { lambda, .. } => {
            // exact constant-gap integral: lambda * (p(a) - p(b))
            let (pa, _) = piece.state_at(a);
            let (pb, _) = piece.state_at(b);
            *lambda * (pa - pb)
        }
        _ => {
            let f = |t: T| {
                let (_, v) = piece.state_at(t);
                let l = piece.lambda_at(t);
                if !l.is_finite() || !v.is_finite() {
                    return T::zero();
                }
                -v * l
            };
            let mut cuts = vec![a];
            cuts.extend(piece.interior_nodes());
            cuts.push(b);
            let mut acc = T::zero();
            for w in cuts.windows(2) {
                if w[1] > w[0] {
                    acc = acc + adaptive_simpson(&f, w[0], w[1], tol);
                }
            }
            acc
        }
    }
}

/// Sampled time series of a reset trajectory on `[0, tau]`.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    /// Strictly increasing times from 0 to tau.
    pub ts: Vec<T>,
    /// Excited-state populations; `p_e[0] = 1/2`, strictly decreasing.
    pub p_e: Vec<T>,
    /// Population rates.
    pub p_dot: Vec<T>,
    /// Control gap; 0 at `t = 0` by convention, strictly increasing on
    /// solved optimal trajectories.
    pub lambda_h: Vec<T>,
    pub(crate) dense: Option<DenseTrajectory<T>>,
}

impl<T: Real> Trajectory<T> {
    /// Build a bare (sample-only) trajectory; used by file-based paths.
    pub fn from_samples(ts: Vec<T>, p_e: Vec<T>, p_dot: Vec<T>, lambda_h: Vec<T>) -> Self {
        assert_eq!(ts.len(), p_e.len());
        assert_eq!(ts.len(), p_dot.len());
        assert_eq!(ts.len(), lambda_h.len());
        assert!(ts.len() >= 2, "trajectory needs at least two samples");
        Self {
            ts,
            p_e,
            p_dot,
            lambda_h,
            dense: None,
        }
    }

    pub(crate) fn with_dense(
        ts: Vec<T>,
        p_e: Vec<T>,
        p_dot: Vec<T>,
        lambda_h: Vec<T>,
        dense: DenseTrajectory<T>,
    ) -> Self {
        let mut traj = Self::from_samples(ts, p_e, p_dot, lambda_h);
        traj.dense = Some(dense);
        traj
    }

    /// Total duration `tau`.
    pub fn duration(&self) -> T {
        *self.ts.last().unwrap()
    }

    /// Final excited population.
    pub fn final_population(&self) -> T {
        *self.p_e.last().unwrap()
    }

    /// Terminal gap `lambda_H(tau)`.
    pub fn final_gap(&self) -> T {
        *self.lambda_h.last().unwrap()
    }

    /// Whether a dense backbone is attached (solver/simulator outputs).
    pub fn has_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// Dense state `(p_e, p_dot)` at `t`; falls back to linear interpolation
    /// of the samples when no dense backbone is attached.
    pub fn state_at(&self, t: T) -> (T, T) {
        if let Some(dense) = &self.dense {
            return dense.state_at(t);
        }
        let (i, w) = self.locate(t);
        (
            self.p_e[i] + w * (self.p_e[i + 1] - self.p_e[i]),
            self.p_dot[i] + w * (self.p_dot[i + 1] - self.p_dot[i]),
        )
    }

    /// Gap at `t`, dense when available.
    pub fn lambda_at(&self, t: T) -> T {
        if let Some(dense) = &self.dense {
            return dense.lambda_at(t);
        }
        let (i, w) = self.locate(t);
        self.lambda_h[i] + w * (self.lambda_h[i + 1] - self.lambda_h[i])
    }

    fn locate(&self, t: T) -> (usize, T) {
        let n = self.ts.len();
        if t <= self.ts[0] {
            return (0, T::zero());
        }
        if t >= self.ts[n - 1] {
            return (n - 2, T::one());
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.ts[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = (t - self.ts[lo]) / (self.ts[lo + 1] - self.ts[lo]);
        (lo, w)
    }

    /// Trapezoid integral of `-p_dot * lambda` over the samples; the
    /// fallback work route for bare trajectories.
    pub(crate) fn sampled_work_integral(&self) -> T {
        let half = T::cst(0.5);
        let mut acc = T::zero();
        for i in 1..self.ts.len() {
            let dt = self.ts[i] - self.ts[i - 1];
            let w0 = -self.p_dot[i - 1] * self.lambda_h[i - 1];
            let w1 = -self.p_dot[i] * self.lambda_h[i];
            acc = acc + half * (w0 + w1) * dt;
        }
        acc
    }

    /// Trapezoid Stieltjes integral of `(p - 1/2) dlambda` over the samples.
    pub(crate) fn sampled_stieltjes_integral(&self) -> T {
        let half = T::cst(0.5);
        let mut acc = T::zero();
        for i in 1..self.ts.len() {
            let dl = self.lambda_h[i] - self.lambda_h[i - 1];
            let pm = half * (self.p_e[i] + self.p_e[i - 1]);
            acc = acc + (pm - half) * dl;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gap_curve_interpolates_linearly() {
        let g = GapCurve {
            ts: vec![0.0, 1.0, 3.0],
            ls: vec![0.0, 2.0, 2.0],
        };
        assert_eq!(g.eval(-1.0), 0.0);
        assert_relative_eq!(g.eval(0.5), 1.0);
        assert_relative_eq!(g.eval(2.0), 2.0);
        assert_eq!(g.eval(5.0), 2.0);
    }

    #[test]
    fn sampled_work_integral_constant_gap() {
        // p(t) = 0.5 e^{-t}, lambda = 2: -integral p_dot*lambda = 2*(p0 - p1)
        let ts: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.002).collect();
        let p: Vec<f64> = ts.iter().map(|t| 0.5 * (-t).exp()).collect();
        let pd: Vec<f64> = ts.iter().map(|t| -0.5 * (-t).exp()).collect();
        let lam = vec![2.0; ts.len()];
        let traj = Trajectory::from_samples(ts, p.clone(), pd, lam);
        let exact = 2.0 * (p[0] - p[p.len() - 1]);
        assert_relative_eq!(traj.sampled_work_integral(), exact, max_relative = 1e-6);
    }
}
