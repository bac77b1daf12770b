//! Numerical plumbing: adaptive Dormand-Prince 5(4) integration with dense
//! output and event detection, a safeguarded scalar root finder, and an
//! adaptive quadrature used for work integrals.
//!
//! One production integrator; a fixed-step RK4 lives in test code only, as an
//! independent oracle.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Integrator tolerances and budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    /// Relative tolerance (default 1e-10).
    pub rel_tol: T,
    /// Absolute tolerance (default 1e-12).
    pub abs_tol: T,
    /// Maximum step size (default: no cap).
    pub max_step: T,
    /// Accepted + rejected step budget (default 1_000_000).
    pub max_steps: usize,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::cst(1e-10),
            abs_tol: T::cst(1e-12),
            max_step: T::infinity(),
            max_steps: 1_000_000,
        }
    }
}

/// Crossing direction an event is armed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventDirection {
    /// Fire when the event function crosses zero from below.
    Rising,
    /// Fire when the event function crosses zero from above.
    Falling,
    /// Fire on any sign change.
    Any,
}

/// Tolerance on the event function at the located crossing.
const EVENT_TOL: f64 = 1e-12;

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// y5 - y4 error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense-output weights (Hairer's continuous extension)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its quartic interpolation coefficients.
#[derive(Debug, Clone)]
struct DenseStep<T, const N: usize> {
    t0: T,
    h: T,
    cont: [[T; N]; 5],
}

impl<T: Real, const N: usize> DenseStep<T, N> {
    /// Evaluate the interpolant at fraction `theta` of the step.
    fn eval(&self, theta: T) -> [T; N] {
        let omt = T::one() - theta;
        let mut y = [T::zero(); N];
        for i in 0..N {
            let c = &self.cont;
            y[i] = c[0][i]
                + theta * (c[1][i] + omt * (c[2][i] + theta * (c[3][i] + omt * c[4][i])));
        }
        y
    }
}

/// Integration result: accepted grid points plus a dense interpolant.
#[derive(Debug, Clone)]
pub struct SampledCurve<T, const N: usize> {
    /// Strictly increasing accepted times, starting at `t0`.
    pub ts: Vec<T>,
    /// States aligned with `ts`.
    pub ys: Vec<[T; N]>,
    /// If an event fired, the located time.
    pub event_time: Option<T>,
    steps: Vec<DenseStep<T, N>>,
}

impl<T: Real, const N: usize> SampledCurve<T, N> {
    /// Final time reached (event time if an event fired).
    pub fn end_time(&self) -> T {
        *self.ts.last().expect("curve has at least one point")
    }

    /// Final state (at the event when one fired).
    pub fn end_state(&self) -> [T; N] {
        *self.ys.last().expect("curve has at least one point")
    }

    /// Dense evaluation at `t`; clamps to the covered span.
    pub fn eval(&self, t: T) -> [T; N] {
        if self.steps.is_empty() {
            return self.end_state();
        }
        let first = &self.steps[0];
        if t <= first.t0 {
            return self.ys[0];
        }
        let t_end = self.end_time();
        if t >= t_end {
            return self.end_state();
        }
        // binary search for the step containing t
        let mut lo = 0usize;
        let mut hi = self.steps.len() - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.steps[mid].t0 <= t {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let step = &self.steps[lo];
        let theta = (t - step.t0) / step.h;
        step.eval(theta.max(T::zero()).min(T::one()))
    }

    fn push_step(&mut self, step: DenseStep<T, N>, t1: T, y1: [T; N]) {
        self.steps.push(step);
        self.ts.push(t1);
        self.ys.push(y1);
    }
}

#[inline]
fn weighted_rms<T: Real, const N: usize>(
    err: &[T; N],
    y0: &[T; N],
    y1: &[T; N],
    cfg: &IntegratorConfig<T>,
) -> T {
    let mut acc = T::zero();
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        acc = acc + r * r;
    }
    (acc / T::of_usize(N)).sqrt()
}

fn all_finite<T: Real, const N: usize>(y: &[T; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Initial step heuristic (two derivative evaluations).
fn initial_step<T: Real, const N: usize, F>(
    rhs: &F,
    t0: T,
    y0: &[T; N],
    f0: &[T; N],
    span: T,
    cfg: &IntegratorConfig<T>,
) -> T
where
    F: Fn(T, &[T; N]) -> [T; N],
{
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        let a = y0[i] / sc;
        let b = f0[i] / sc;
        d0 = d0 + a * a;
        d1 = d1 + b * b;
    }
    d0 = (d0 / T::of_usize(N)).sqrt();
    d1 = (d1 / T::of_usize(N)).sqrt();
    let small = T::cst(1e-10);
    let mut h0 = if d0 < small || d1 < small {
        T::cst(1e-6)
    } else {
        T::cst(0.01) * d0 / d1
    };
    h0 = h0.min(span).min(cfg.max_step);
    let mut y1 = [T::zero(); N];
    for i in 0..N {
        y1[i] = y0[i] + h0 * f0[i];
    }
    let f1 = rhs(t0 + h0, &y1);
    if !all_finite(&f1) {
        return (h0 * T::cst(1e-3)).max(T::cst(1e-12) * span);
    }
    let mut d2 = T::zero();
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        let r = (f1[i] - f0[i]) / sc;
        d2 = d2 + r * r;
    }
    d2 = (d2 / T::of_usize(N)).sqrt() / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= T::cst(1e-15) {
        (h0 * T::cst(1e-3)).max(T::cst(1e-6))
    } else {
        (T::cst(0.01) / dm).powf(T::cst(0.2))
    };
    (T::cst(100.0) * h0).min(h1).min(span).min(cfg.max_step)
}

struct StepOutcome<T, const N: usize> {
    y1: [T; N],
    k_last: [T; N],
    err_norm: T,
    dense: DenseStep<T, N>,
}

/// One DOPRI5 attempt from `(t0, y0)` with derivative `k1` and step `h`.
/// Returns `None` when a non-finite stage appears.
fn try_step<T: Real, const N: usize, F>(
    rhs: &F,
    t0: T,
    y0: &[T; N],
    k1: &[T; N],
    h: T,
    cfg: &IntegratorConfig<T>,
) -> Option<StepOutcome<T, N>>
where
    F: Fn(T, &[T; N]) -> [T; N],
{
    let c = |x: f64| T::cst(x);
    let mut y = [T::zero(); N];

    for i in 0..N {
        y[i] = y0[i] + h * c(A21) * k1[i];
    }
    let k2 = rhs(t0 + c(C2) * h, &y);
    if !all_finite(&k2) {
        return None;
    }
    for i in 0..N {
        y[i] = y0[i] + h * (c(A31) * k1[i] + c(A32) * k2[i]);
    }
    let k3 = rhs(t0 + c(C3) * h, &y);
    if !all_finite(&k3) {
        return None;
    }
    for i in 0..N {
        y[i] = y0[i] + h * (c(A41) * k1[i] + c(A42) * k2[i] + c(A43) * k3[i]);
    }
    let k4 = rhs(t0 + c(C4) * h, &y);
    if !all_finite(&k4) {
        return None;
    }
    for i in 0..N {
        y[i] = y0[i] + h * (c(A51) * k1[i] + c(A52) * k2[i] + c(A53) * k3[i] + c(A54) * k4[i]);
    }
    let k5 = rhs(t0 + c(C5) * h, &y);
    if !all_finite(&k5) {
        return None;
    }
    for i in 0..N {
        y[i] = y0[i]
            + h * (c(A61) * k1[i] + c(A62) * k2[i] + c(A63) * k3[i] + c(A64) * k4[i]
                + c(A65) * k5[i]);
    }
    let k6 = rhs(t0 + h, &y);
    if !all_finite(&k6) {
        return None;
    }
    let mut y1 = [T::zero(); N];
    for i in 0..N {
        y1[i] = y0[i]
            + h * (c(B1) * k1[i] + c(B3) * k3[i] + c(B4) * k4[i] + c(B5) * k5[i] + c(B6) * k6[i]);
    }
    if !all_finite(&y1) {
        return None;
    }
    let k7 = rhs(t0 + h, &y1);
    if !all_finite(&k7) {
        return None;
    }

    let mut err = [T::zero(); N];
    for i in 0..N {
        err[i] = h
            * (c(E1) * k1[i] + c(E3) * k3[i] + c(E4) * k4[i] + c(E5) * k5[i] + c(E6) * k6[i]
                + c(E7) * k7[i]);
    }
    let err_norm = weighted_rms(&err, y0, &y1, cfg);

    let mut cont = [[T::zero(); N]; 5];
    for i in 0..N {
        let dy = y1[i] - y0[i];
        let bspl = h * k1[i] - dy;
        cont[0][i] = y0[i];
        cont[1][i] = dy;
        cont[2][i] = bspl;
        cont[3][i] = dy - h * k7[i] - bspl;
        cont[4][i] = h
            * (c(D1) * k1[i] + c(D3) * k3[i] + c(D4) * k4[i] + c(D5) * k5[i] + c(D6) * k6[i]
                + c(D7) * k7[i]);
    }

    Some(StepOutcome {
        y1,
        k_last: k7,
        err_norm,
        dense: DenseStep { t0, h, cont },
    })
}

/// Integrate `dy/dt = rhs(t, y)` from `t_span.0` to `t_span.1` (forward).
///
/// The right-hand side may return NaN outside its domain; such stages reject
/// the step and shrink it. A persistent non-finite region surfaces as
/// [`Error::StepSizeUnderflow`] with the offending state.
pub fn integrate<T: Real, const N: usize, F>(
    rhs: F,
    y0: [T; N],
    t_span: (T, T),
    cfg: &IntegratorConfig<T>,
) -> Result<SampledCurve<T, N>, T>
where
    F: Fn(T, &[T; N]) -> [T; N],
{
    integrate_inner(
        rhs,
        y0,
        t_span.0,
        t_span.1,
        cfg,
        None::<fn(T, &[T; N]) -> T>,
        EventDirection::Any,
        false,
    )
}

fn integrate_inner<T: Real, const N: usize, F, G>(
    rhs: F,
    y0: [T; N],
    t0: T,
    t1: T,
    cfg: &IntegratorConfig<T>,
    event: Option<G>,
    direction: EventDirection,
    event_required: bool,
) -> Result<SampledCurve<T, N>, T>
where
    F: Fn(T, &[T; N]) -> [T; N],
    G: Fn(T, &[T; N]) -> T,
{
    if !(t1 > t0) {
        return Err(Error::Domain {
            op: "integrate",
            what: "t_span",
            value: t1 - t0,
        });
    }
    let mut curve = SampledCurve {
        ts: vec![t0],
        ys: vec![y0],
        event_time: None,
        steps: Vec::new(),
    };

    let evt_tol = T::cst(EVENT_TOL);
    let mut g_prev = if let Some(g) = &event {
        let g0 = g(t0, &y0);
        // degenerate: already at the event
        if g0.abs() <= evt_tol {
            curve.event_time = Some(t0);
            return Ok(curve);
        }
        g0
    } else {
        T::zero()
    };

    let f0 = rhs(t0, &y0);
    if !all_finite(&f0) {
        return Err(Error::StepSizeUnderflow {
            t: t0,
            state: y0.to_vec(),
        });
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f0;
    let mut h = initial_step(&rhs, t0, &y0, &f0, t1 - t0, cfg);
    let mut steps_used = 0usize;

    while t < t1 {
        if steps_used >= cfg.max_steps {
            return Err(Error::StepBudget { t });
        }
        steps_used += 1;

        let h_floor = T::cst(16.0) * T::epsilon() * t.abs().max(T::one());
        if h < h_floor {
            return Err(Error::StepSizeUnderflow {
                t,
                state: y.to_vec(),
            });
        }
        let mut h_try = h.min(t1 - t).min(cfg.max_step);
        let last_stretch = h_try >= t1 - t;
        if last_stretch {
            h_try = t1 - t;
        }

        match try_step(&rhs, t, &y, &k1, h_try, cfg) {
            None => {
                // non-finite stage: shrink hard
                h = h_try * T::cst(0.25);
                continue;
            }
            Some(out) => {
                if out.err_norm <= T::one() {
                    // accepted
                    let t_new = t + h_try;
                    curve.push_step(out.dense, t_new, out.y1);

                    if let Some(g) = &event {
                        let g_new = g(t_new, &out.y1);
                        let crossed = match direction {
                            EventDirection::Rising => {
                                g_prev < T::zero() && g_new >= T::zero()
                            }
                            EventDirection::Falling => {
                                g_prev > T::zero() && g_new <= T::zero()
                            }
                            EventDirection::Any => {
                                (g_prev < T::zero()) != (g_new < T::zero())
                            }
                        };
                        if crossed || g_new.abs() <= evt_tol {
                            let te = locate_event(&curve, g, t, t_new, evt_tol);
                            let ye = curve.eval(te);
                            // truncate the grid at the event
                            curve.ts.pop();
                            curve.ys.pop();
                            curve.ts.push(te);
                            curve.ys.push(ye);
                            curve.event_time = Some(te);
                            return Ok(curve);
                        }
                        g_prev = g_new;
                    }

                    t = t_new;
                    y = out.y1;
                    k1 = out.k_last;
                    let scale = if out.err_norm <= T::cst(1e-30) {
                        T::cst(10.0)
                    } else {
                        (T::cst(0.9) * out.err_norm.powf(T::cst(-0.2)))
                            .max(T::cst(0.2))
                            .min(T::cst(10.0))
                    };
                    h = (h_try * scale).min(cfg.max_step);
                } else {
                    let scale = (T::cst(0.9) * out.err_norm.powf(T::cst(-0.2)))
                        .max(T::cst(0.1))
                        .min(T::one());
                    h = h_try * scale;
                }
            }
        }
    }

    if event_required {
        return Err(Error::EventNotFound { t_end: t1 });
    }
    Ok(curve)
}

/// Bisection on the dense output to locate the crossing inside `(t_lo, t_hi]`.
fn locate_event<T: Real, const N: usize, G>(
    curve: &SampledCurve<T, N>,
    g: &G,
    t_lo: T,
    t_hi: T,
    evt_tol: T,
) -> T
where
    G: Fn(T, &[T; N]) -> T,
{
    let mut lo = t_lo;
    let mut hi = t_hi;
    let mut g_lo = g(lo, &curve.eval(lo));
    if g_lo.abs() <= evt_tol {
        return lo;
    }
    for _ in 0..200 {
        let width = hi - lo;
        if width <= T::cst(4.0) * T::epsilon() * hi.abs().max(T::one()) {
            break;
        }
        let mid = lo + width * T::cst(0.5);
        let g_mid = g(mid, &curve.eval(mid));
        if g_mid.abs() <= evt_tol {
            return mid;
        }
        if (g_mid < T::zero()) == (g_lo < T::zero()) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Integrate until `event(t, y)` first crosses zero in the given direction,
/// or fail with [`Error::EventNotFound`] if it has not fired by `t_limit`.
///
/// An event already satisfied at `t0` fires immediately with
/// `event_time = t0`.
pub fn integrate_to_event<T: Real, const N: usize, F, G>(
    rhs: F,
    y0: [T; N],
    t0: T,
    event: G,
    direction: EventDirection,
    cfg: &IntegratorConfig<T>,
    t_limit: T,
) -> Result<SampledCurve<T, N>, T>
where
    F: Fn(T, &[T; N]) -> [T; N],
    G: Fn(T, &[T; N]) -> T,
{
    integrate_inner(rhs, y0, t0, t_limit, cfg, Some(event), direction, true)
}

/// Safeguarded Brent root finder on a bracket `[a, b]` with `f(a) f(b) <= 0`.
///
/// Stops when `|f| < tol` or the bracket width falls below `tol`; the iterate
/// never leaves the bracket. Deterministic for identical inputs.
pub fn find_root<T: Real, F>(f: F, bracket: (T, T), tol: T) -> Result<T, T>
where
    F: Fn(T) -> T,
{
    let (mut a, mut b) = bracket;
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Bracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if (fa < T::zero()) == (fb < T::zero()) {
        return Err(Error::Bracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    let two = T::cst(2.0);
    let three = T::cst(3.0);

    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            // ensure b is the best iterate
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + tol * T::cst(0.5);
        let xm = (c - b) * T::cst(0.5);
        if xm.abs() <= tol1 || fb.abs() < tol || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic / secant attempt
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (two * xm * s, T::one() - s)
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (two * xm * q0 * (q0 - r) - (b - a) * (r - T::one())),
                    (q0 - T::one()) * (r - T::one()) * (s - T::one()),
                )
            };
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = three * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b = b + d;
        } else {
            b = b + if xm > T::zero() { tol1 } else { -tol1 };
        }
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::Bracket {
                lo: a,
                hi: c,
                f_lo: fa,
                f_hi: fb,
            });
        }
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok(b)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance
/// `tol`. Recursion clusters near endpoint singularities of square-root type.
pub fn adaptive_simpson<T: Real, F>(f: &F, a: T, b: T, tol: T) -> T
where
    F: Fn(T) -> T,
{
    let half = T::cst(0.5);
    let m = (a + b) * half;
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / T::cst(6.0) * (fa + T::cst(4.0) * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<T: Real, F>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T
where
    F: Fn(T) -> T,
{
    let half = T::cst(0.5);
    let six = T::cst(6.0);
    let four = T::cst(4.0);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / six * (fa + four * flm + fm);
    let right = (b - m) / six * (fm + four * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::cst(15.0) * tol {
        return left + right + delta / T::cst(15.0);
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol * half, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol * half, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Fixed-step RK4: the independent oracle for the adaptive integrator.
    fn rk4<const N: usize>(
        rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
        mut y: [f64; N],
        t0: f64,
        t1: f64,
        steps: usize,
    ) -> [f64; N] {
        let h = (t1 - t0) / steps as f64;
        let mut t = t0;
        for _ in 0..steps {
            let k1 = rhs(t, &y);
            let mut ytmp = [0.0; N];
            for i in 0..N {
                ytmp[i] = y[i] + 0.5 * h * k1[i];
            }
            let k2 = rhs(t + 0.5 * h, &ytmp);
            for i in 0..N {
                ytmp[i] = y[i] + 0.5 * h * k2[i];
            }
            let k3 = rhs(t + 0.5 * h, &ytmp);
            for i in 0..N {
                ytmp[i] = y[i] + h * k3[i];
            }
            let k4 = rhs(t + h, &ytmp);
            for i in 0..N {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
        }
        y
    }

    #[test]
    fn linear_decay_hits_exponential() {
        let cfg = IntegratorConfig::default();
        let curve = integrate(|_t, y: &[f64; 1]| [-y[0]], [1.0], (0.0, 1.0), &cfg).unwrap();
        assert_abs_diff_eq!(curve.end_state()[0], (-1.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn zero_rhs_is_constant() {
        let cfg = IntegratorConfig::default();
        let curve = integrate(|_t, _y: &[f64; 2]| [0.0, 0.0], [3.0, -2.0], (0.0, 5.0), &cfg).unwrap();
        assert_eq!(curve.end_state(), [3.0, -2.0]);
        for &t in &[0.1, 2.5, 4.9] {
            assert_eq!(curve.eval(t), [3.0, -2.0]);
        }
    }

    #[test]
    fn agrees_with_rk4_oracle_on_oscillator() {
        let rhs = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let cfg = IntegratorConfig::default();
        let curve = integrate(rhs, [1.0, 0.0], (0.0, 10.0), &cfg).unwrap();
        let oracle = rk4(rhs, [1.0, 0.0], 0.0, 10.0, 200_000);
        assert_abs_diff_eq!(curve.end_state()[0], oracle[0], epsilon = 1e-9);
        assert_abs_diff_eq!(curve.end_state()[1], oracle[1], epsilon = 1e-9);
        // and with the analytic solution
        assert_abs_diff_eq!(curve.end_state()[0], 10.0f64.cos(), epsilon = 1e-9);
    }

    #[test]
    fn dense_output_matches_reintegration() {
        let rhs = |t: f64, y: &[f64; 1]| [y[0] * t.sin()];
        let cfg = IntegratorConfig::default();
        let curve = integrate(rhs, [1.0], (0.0, 6.0), &cfg).unwrap();
        for &t in &[0.7, 1.9, 3.3, 5.1] {
            let direct = integrate(rhs, [1.0], (0.0, t), &cfg).unwrap();
            assert_relative_eq!(curve.eval(t)[0], direct.end_state()[0], max_relative = 1e-9);
        }
    }

    #[test]
    fn halving_rel_tol_tightens_result() {
        let rhs = |t: f64, y: &[f64; 1]| [y[0] * (2.0 * t).cos()];
        let exact = |t: f64| ((2.0 * t).sin() / 2.0).exp();
        let loose = IntegratorConfig {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            ..Default::default()
        };
        let tight = IntegratorConfig {
            rel_tol: 5e-7,
            abs_tol: 1e-9,
            ..Default::default()
        };
        let y_loose = integrate(rhs, [1.0], (0.0, 4.0), &loose).unwrap().end_state()[0];
        let y_tight = integrate(rhs, [1.0], (0.0, 4.0), &tight).unwrap().end_state()[0];
        let e = exact(4.0);
        assert!((y_tight - e).abs() <= (y_loose - e).abs() + 1e-12);
        assert!((y_loose - y_tight).abs() < 10.0 * 1e-6 * e.abs());
    }

    #[test]
    fn event_linear_crossing() {
        let cfg = IntegratorConfig::default();
        let curve = integrate_to_event(
            |_t, _y: &[f64; 1]| [-1.0],
            [1.0],
            0.0,
            |_t, y: &[f64; 1]| y[0],
            EventDirection::Falling,
            &cfg,
            10.0,
        )
        .unwrap();
        assert_abs_diff_eq!(curve.event_time.unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn event_already_satisfied_fires_at_t0() {
        let cfg = IntegratorConfig::default();
        let curve = integrate_to_event(
            |_t, _y: &[f64; 1]| [1.0],
            [0.0],
            2.0,
            |_t, y: &[f64; 1]| y[0],
            EventDirection::Rising,
            &cfg,
            10.0,
        )
        .unwrap();
        assert_eq!(curve.event_time, Some(2.0));
    }

    #[test]
    fn event_never_firing_is_distinct_error() {
        let cfg = IntegratorConfig::default();
        let err = integrate_to_event(
            |_t, _y: &[f64; 1]| [1.0],
            [1.0],
            0.0,
            |_t, y: &[f64; 1]| y[0], // stays positive, rising never crosses
            EventDirection::Falling,
            &cfg,
            5.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EventNotFound { .. }));
    }

    #[test]
    fn nonfinite_rhs_reports_state() {
        let cfg = IntegratorConfig {
            max_steps: 10_000,
            ..Default::default()
        };
        // derivative blows up to NaN past y = 1
        let err = integrate(
            |_t, y: &[f64; 1]| [(1.0 - y[0]).sqrt()],
            [0.999999],
            (0.0, 10.0),
            &cfg,
        )
        .unwrap_err();
        match err {
            Error::StepSizeUnderflow { state, .. } => assert!(state[0] <= 1.0 + 1e-9),
            Error::StepBudget { .. } => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn find_root_basics() {
        assert_abs_diff_eq!(
            find_root(|x: f64| x - 2.0, (0.0, 5.0), 1e-12).unwrap(),
            2.0,
            epsilon = 1e-11
        );
        assert_abs_diff_eq!(
            find_root(|x: f64| (-x).exp() - 0.5, (0.0, 2.0), 1e-14).unwrap(),
            2.0f64.ln(),
            epsilon = 1e-12
        );
        assert!(find_root(|x: f64| x * x + 1.0, (0.0, 1.0), 1e-12).is_err());
    }

    #[test]
    fn find_root_is_deterministic() {
        let f = |x: f64| x.cos() - x;
        let r1 = find_root(f, (0.0, 1.0), 1e-14).unwrap();
        let r2 = find_root(f, (0.0, 1.0), 1e-14).unwrap();
        assert_eq!(r1.to_bits(), r2.to_bits());
    }

    #[test]
    fn simpson_handles_sqrt_endpoint() {
        // integral of sqrt(x) on [0,1] = 2/3
        let v = adaptive_simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-9);
        let v2 = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert_abs_diff_eq!(v2, 2.0, epsilon = 1e-11);
    }

    #[test]
    fn integrator_works_in_f32() {
        let cfg = IntegratorConfig::<f32> {
            rel_tol: 1e-5,
            abs_tol: 1e-6,
            ..Default::default()
        };
        let curve = integrate(|_t, y: &[f32; 1]| [-y[0]], [1.0f32], (0.0, 1.0), &cfg).unwrap();
        assert_relative_eq!(curve.end_state()[0], (-1.0f32).exp(), max_relative = 1e-4);
    }
}
