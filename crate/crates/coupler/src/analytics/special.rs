//! Bessel functions of integer order and the complex error function.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::{Error, Result, C64};

/// `J_s(x)` for `|s| ≤ 60`, `|x| ≤ 1000`, by Miller's backward recurrence
/// normalized with `J₀ + 2Σ J₂ₖ = 1`.
pub fn bessel_j(s: i64, x: f64) -> Result<f64> {
    if s.unsigned_abs() > 60 {
        return Err(Error::Invalid(format!("Bessel order {s} outside |s| <= 60")));
    }
    if !x.is_finite() || x.abs() > 1e3 {
        return Err(Error::Invalid(format!("Bessel argument {x} outside |x| <= 1000")));
    }
    let n = s.unsigned_abs() as usize;
    let mut sign = if s < 0 && n % 2 == 1 { -1.0 } else { 1.0 };
    if x < 0.0 && n % 2 == 1 {
        sign = -sign;
    }
    Ok(sign * bessel_j_nonneg(n, x.abs()))
}

/// `J_0(x) … J_n(x)` for `x ≥ 0` from a single backward recurrence, without the
/// public order limit. Used by the Jacobi-Anger sums whose arguments grow with the NLR level.
pub(crate) fn bessel_j_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = (n as f64).max(x) + 40.0 + 12.0 * x.cbrt();
    let mut m = start.ceil() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let (mut jp, mut jk) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    for k in (1..=m).rev() {
        let jm = 2.0 * k as f64 / x * jk - jp;
        jp = jk;
        jk = jm;
        let idx = k - 1;
        if idx <= n {
            out[idx] = jk;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * jk;
        }
        if jk.abs() > 1e200 {
            jk *= 1e-200;
            jp *= 1e-200;
            norm *= 1e-200;
            for v in out.iter_mut() {
                *v *= 1e-200;
            }
        }
    }
    norm += jk;
    out.iter().map(|v| v / norm).collect()
}

fn bessel_j_nonneg(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let start = (n as f64).max(x) + 40.0 + 12.0 * x.cbrt();
    let mut m = start.ceil() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let (mut jp, mut jk) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    let mut result = 0.0;
    for k in (1..=m).rev() {
        // jk holds J_k, jp holds J_{k+1}; step down to J_{k−1}.
        let jm = 2.0 * k as f64 / x * jk - jp;
        jp = jk;
        jk = jm;
        let idx = k - 1;
        if idx == n {
            result = jk;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * jk;
        }
        if jk.abs() > 1e200 {
            jk *= 1e-200;
            jp *= 1e-200;
            norm *= 1e-200;
            result *= 1e-200;
        }
    }
    norm += jk;
    result / norm
}

/// First positive zero of `J₀`, by bisection on `[2, 3]` to `1e-13`.
pub fn bessel_j0_first_zero() -> f64 {
    let (mut lo, mut hi) = (2.0f64, 3.0f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if bessel_j_nonneg(0, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const WEIDEMAN_N: usize = 40;

struct Weideman {
    l: f64,
    coeffs: Vec<f64>,
}

fn weideman() -> &'static Weideman {
    static TABLE: OnceLock<Weideman> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = WEIDEMAN_N;
        let m = 2 * n;
        let l = (n as f64 / 2f64.sqrt()).sqrt();
        // aⱼ = (1/2M) Σ_{k=−M+1}^{M−1} f(k) cos(πjk/M), f(k) = e^{−t²}(L² + t²), t = L tan(πk/2M).
        let f = |k: i64| {
            let t = l * (k as f64 * PI / (2.0 * m as f64)).tan();
            (-t * t).exp() * (l * l + t * t)
        };
        let coeffs = (1..=n)
            .map(|j| {
                let mut acc = 0.0;
                for k in -(m as i64) + 1..m as i64 {
                    acc += f(k) * (PI * j as f64 * k as f64 / m as f64).cos();
                }
                acc / (2 * m) as f64
            })
            .collect();
        Weideman { l, coeffs }
    })
}

/// Faddeeva function `w(z) = e^{−z²} erfc(−iz)` for `Im z ≥ 0` (Weideman's rational
/// expansion with 40 terms).
fn faddeeva_upper(z: C64) -> C64 {
    let wd = weideman();
    let lz = C64::new(wd.l, 0.0) - C64::i() * z;
    let big_z = (C64::new(wd.l, 0.0) + C64::i() * z) / lz;
    let mut p = C64::default();
    for a in wd.coeffs.iter().rev() {
        p = p * big_z + a;
    }
    p * 2.0 / (lz * lz) + 1.0 / (PI.sqrt() * lz)
}

/// Faddeeva function on the whole plane.
pub fn faddeeva(z: C64) -> C64 {
    if z.im >= 0.0 {
        faddeeva_upper(z)
    } else {
        (-z * z).exp() * 2.0 - faddeeva_upper(-z)
    }
}

/// `erf(z)` for `|z| ≤ 30`: Maclaurin series near the origin, otherwise
/// `1 − e^{−z²} w(iz)` in the right half plane and odd symmetry in the left.
pub fn erf_complex(z: C64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() > 30.0 {
        return Err(Error::Invalid(format!("erf argument {z} outside |z| <= 30")));
    }
    if z.norm() < 0.5 {
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        for n in 1..40 {
            term = -term * z2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        return Ok(sum * (2.0 / PI.sqrt()));
    }
    if z.re < 0.0 {
        return erf_complex(-z).map(|v| -v);
    }
    Ok(C64::new(1.0, 0.0) - (-z * z).exp() * faddeeva_upper(C64::i() * z))
}
