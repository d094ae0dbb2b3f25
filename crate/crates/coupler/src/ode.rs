//! Dormand-Prince 5(4) integration of complex ODE systems.
//!
//! Output times falling inside a step are filled by cubic Hermite interpolation
//! from the step endpoints and their derivatives. Breakpoints split the interval
//! so that no step straddles a discontinuity of the right-hand side.

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_max: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, max_steps: 20_000_000, h_max: f64::INFINITY }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
// Fifth-order weights minus the embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Work {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    err: Vec<C64>,
}

impl Work {
    fn new(n: usize) -> Self {
        let z = vec![C64::default(); n];
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z.clone(),
            y_new: z.clone(),
            err: z,
        }
    }
}

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::default();
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = y[i] + acc * h;
    }
}

fn err_norm(err: &[C64], y0: &[C64], y1: &[C64], opts: &OdeOptions) -> f64 {
    let mut s = 0.0;
    for i in 0..err.len() {
        let sc = opts.atol + opts.rtol * y0[i].norm().max(y1[i].norm());
        let r = err[i].norm() / sc;
        s += r * r;
    }
    (s / err.len().max(1) as f64).sqrt()
}

fn hermite(out: &mut [C64], y0: &[C64], f0: &[C64], y1: &[C64], f1: &[C64], h: f64, theta: f64) {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    for i in 0..out.len() {
        out[i] = y0[i] * h00 + f0[i] * (h10 * h) + y1[i] * h01 + f1[i] * (h11 * h);
    }
}

/// Integrates `y' = rhs(t, y)` from `t0`, calling `sink(i, t_out[i], y)` at every
/// output time. `t_out` must be non-decreasing and start at or after `t0`.
pub fn solve<F, S>(
    mut rhs: F,
    t0: f64,
    y0: &[C64],
    t_out: &[f64],
    breakpoints: &[f64],
    opts: &OdeOptions,
    mut sink: S,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    S: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    if t_out.iter().any(|t| !t.is_finite()) || !t0.is_finite() {
        return Err(Error::NonFinite("output time"));
    }
    if t_out.windows(2).any(|w| w[1] < w[0]) || t_out.first().is_some_and(|&t| t < t0) {
        return Err(Error::Invalid("output times must be non-decreasing and start at t0 or later".into()));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::Invalid("tolerances must be positive".into()));
    }
    let mut stats = OdeStats::default();
    let Some(&t_end) = t_out.last() else { return Ok(stats) };
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut next_out = 0;
    while next_out < t_out.len() && t_out[next_out] <= t0 {
        sink(next_out, t_out[next_out], &y)?;
        next_out += 1;
    }
    if next_out == t_out.len() {
        return Ok(stats);
    }

    let mut bounds: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > t0 && b < t_end).collect();
    bounds.sort_by(|a, b| a.total_cmp(b));
    bounds.push(t_end);
    // Drop bounds closer than rounding noise to their successor; a sub-ulp
    // segment cannot be stepped across.
    let tiny = |a: f64, b: f64| b - a <= 1e-12 * a.abs().max(b.abs());
    let mut merged: Vec<f64> = Vec::with_capacity(bounds.len());
    for (i, &b) in bounds.iter().enumerate() {
        let prev = merged.last().copied().unwrap_or(t0);
        let next_close = bounds.get(i + 1).is_some_and(|&n| tiny(b, n));
        if !tiny(prev, b) && !next_close {
            merged.push(b);
        }
    }
    if merged.last() != Some(&t_end) {
        merged.push(t_end);
    }
    let bounds = merged;

    let mut w = Work::new(n);
    let mut interp = vec![C64::default(); n];
    let mut t = t0;
    let mut h_prev: Option<f64> = None;

    for &seg_end in &bounds {
        let seg_start = t;
        let span = seg_end - seg_start;
        if span <= 0.0 {
            continue;
        }
        // Stage times are kept strictly inside the segment so a discontinuous
        // right-hand side is always evaluated on the correct side.
        let eta = span * 1e-12;
        let clamp = |s: f64| s.clamp(seg_start + eta, seg_end - eta);

        rhs(clamp(t), &y, &mut w.k[0]);
        stats.rhs_evals += 1;

        let mut h = match h_prev {
            Some(hp) => hp.min(span),
            None => {
                let hi = initial_step(&mut rhs, clamp, t, &y, &w.k[0], opts, &mut w.tmp, &mut w.y_new);
                stats.rhs_evals += 1;
                hi.min(span)
            }
        }
        .min(opts.h_max);

        while t < seg_end {
            if stats.steps + stats.rejected >= opts.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: format!(
                        "step budget of {} exhausted; loosen rtol/atol or shorten the window",
                        opts.max_steps
                    ),
                });
            }
            let mut last = false;
            if t + h >= seg_end - 1e-13 * span.max(seg_end.abs()) {
                h = seg_end - t;
                last = true;
            }
            if !(h > 0.0) || h < 1e-15 * t.abs().max(span) {
                return Err(Error::Integration { t, reason: "step size underflow; the system may be stiff".into() });
            }

            let (k1, rest) = w.k.split_first_mut().unwrap();
            let [k2, k3, k4, k5, k6, k7] = rest else { unreachable!() };
            combine(&mut w.tmp, &y, h, &[(A21, k1)]);
            rhs(clamp(t + C2 * h), &w.tmp, k2);
            combine(&mut w.tmp, &y, h, &[(A31, k1), (A32, k2)]);
            rhs(clamp(t + C3 * h), &w.tmp, k3);
            combine(&mut w.tmp, &y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
            rhs(clamp(t + C4 * h), &w.tmp, k4);
            combine(&mut w.tmp, &y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
            rhs(clamp(t + C5 * h), &w.tmp, k5);
            combine(&mut w.tmp, &y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
            rhs(clamp(t + h), &w.tmp, k6);
            combine(&mut w.y_new, &y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
            rhs(clamp(t + h), &w.y_new, k7);
            stats.rhs_evals += 6;
            for i in 0..n {
                w.err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            }
            let en = err_norm(&w.err, &y, &w.y_new, opts);
            if !en.is_finite() {
                return Err(Error::Integration { t, reason: "non-finite state encountered".into() });
            }
            if en <= 1.0 {
                let t_new = if last { seg_end } else { t + h };
                while next_out < t_out.len() && t_out[next_out] <= t_new {
                    let to = t_out[next_out];
                    if to == t_new {
                        sink(next_out, to, &w.y_new)?;
                    } else {
                        hermite(&mut interp, &y, k1, &w.y_new, k7, h, (to - t) / h);
                        sink(next_out, to, &interp)?;
                    }
                    next_out += 1;
                }
                std::mem::swap(&mut y, &mut w.y_new);
                std::mem::swap(k1, k7);
                t = t_new;
                stats.steps += 1;
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = (h * fac).min(opts.h_max);
                    h_prev = Some(h);
                } else if h_prev.is_none() {
                    h_prev = Some((h * fac).min(opts.h_max));
                }
            } else {
                stats.rejected += 1;
                h *= (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
    }
    Ok(stats)
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F: FnMut(f64, &[C64], &mut [C64])>(
    rhs: &mut F,
    clamp: impl Fn(f64) -> f64,
    t: f64,
    y: &[C64],
    f0: &[C64],
    opts: &OdeOptions,
    y1: &mut [C64],
    f1: &mut [C64],
) -> f64 {
    let n = y.len().max(1) as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y.len() {
        let sc = opts.atol + opts.rtol * y[i].norm();
        d0 += (y[i].norm() / sc).powi(2);
        d1 += (f0[i].norm() / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    for i in 0..y.len() {
        y1[i] = y[i] + f0[i] * h0;
    }
    rhs(clamp(t + h0), y1, f1);
    let mut d2 = 0.0;
    for i in 0..y.len() {
        let sc = opts.atol + opts.rtol * y[i].norm();
        d2 += ((f1[i] - f0[i]).norm() / sc).powi(2);
    }
    let d2 = (d2 / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}
