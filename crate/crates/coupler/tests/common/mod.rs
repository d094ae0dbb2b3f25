//! Independent oracles shared by the integration tests. Nothing here calls into the
//! library's numerics; each value comes from a separate closed form or plain summation.

#![allow(dead_code)]

use coupler::C64;

/// Generalized Laguerre polynomial `L_n^{(a)}(x)` by the three-term recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut l0, mut l1) = (1.0, 1.0 + a - x);
    for k in 1..n {
        let k = k as f64;
        let l2 = ((2.0 * k + 1.0 + a - x) * l1 - (k + a) * l0) / (k + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// `⟨m|D(α)|n⟩` of the untruncated displacement operator.
pub fn displacement_element(m: usize, n: usize, alpha: C64) -> C64 {
    let x = alpha.norm_sqr();
    let pre = (-x / 2.0).exp();
    // sqrt(min!/max!) without overflow.
    let (lo, hi) = (m.min(n), m.max(n));
    let mut ratio = 1.0f64;
    for k in lo + 1..=hi {
        ratio /= (k as f64).sqrt();
    }
    let d = hi - lo;
    let lag = laguerre(lo, d as f64, x);
    if m >= n {
        alpha.powu(d as u32) * (pre * ratio * lag)
    } else {
        (-alpha.conj()).powu(d as u32) * (pre * ratio * lag)
    }
}

/// `Σₙ xⁿ/n! Πₖ (pₖ/(pₖ + n))²` summed term by term until the running sum stops moving.
pub fn squared_pole_sum(p: &[f64], x: f64) -> f64 {
    let mut sum = 0.0;
    let mut weight = 1.0;
    for n in 0..2000 {
        if n > 0 {
            weight *= x / n as f64;
        }
        let f: f64 = p.iter().map(|pk| (pk / (pk + n as f64)).powi(2)).product();
        let term = weight * f;
        sum += term;
        if n as f64 > x + 5.0 && term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
