//! `pFp(p; 1+p; x)` series whose upper and lower parameters differ by one.

use crate::{Error, Result, C64};

const MAX_TERMS: usize = 1_000_000;

/// `Σₙ xⁿ/n! Πₖ (1 + n/pₖ)⁻¹`, which is `pFp(p; 1+p; x)`. An infinite `pₖ` contributes
/// a factor of one. A `pₖ = −n` with non-negligible weight is reported as a pole at level `n`.
pub fn hyp_pfq_unit_shift(p: &[C64], x: f64) -> Result<C64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Invalid(format!("series argument must be finite and non-negative, got {x}")));
    }
    let finite: Vec<C64> = p.iter().copied().filter(|v| v.re.is_finite() && v.im.is_finite()).collect();
    if finite.iter().any(|v| v.norm() == 0.0) {
        return Err(Error::Pole { level: 0, sideband: None });
    }
    // Past this index no factor can change sign or vanish, so the tail is geometric.
    let pole_region = finite.iter().map(|v| -v.re).fold(0.0f64, f64::max);
    let mut sum = C64::default();
    let mut weight = 1.0f64;
    let mut quiet = 0;
    for n in 0..MAX_TERMS {
        if n > 0 {
            weight *= x / n as f64;
        }
        let mut denom = C64::new(1.0, 0.0);
        for v in &finite {
            denom *= C64::new(1.0, 0.0) + n as f64 / v;
        }
        if denom.norm() < 1e-12 {
            if weight > 1e-18 * sum.norm().max(1.0) {
                return Err(Error::Pole { level: n, sideband: None });
            }
            continue;
        }
        let term = denom.inv() * weight;
        sum += term;
        let past = n as f64 > x && n as f64 > pole_region + 1.0;
        // Before a distant pole region the tail is still bounded: past n > x the weights
        // fall geometrically and each factor is at most |p|/dist(−p, {n+1, n+2, …}).
        if !past && n as f64 > 2.0 * x + 1.0 && x > 0.0 {
            let ratio = x / (n + 1) as f64;
            let bound = finite.iter().map(|v| v.norm() / tail_distance(*v, n + 1)).product::<f64>();
            if weight * ratio / (1.0 - ratio) * bound <= 1e-16 * sum.norm() {
                return Ok(sum);
            }
        }
        if past && term.norm() <= 1e-14 * sum.norm() {
            quiet += 1;
            if quiet >= 3 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
        if x == 0.0 && n as f64 > pole_region + 1.0 {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence(MAX_TERMS))
}

/// Smallest `|p + m|` over integers `m ≥ from`.
fn tail_distance(p: C64, from: usize) -> f64 {
    let target = -p.re;
    let m = if target <= from as f64 { from as f64 } else { target.round() };
    C64::new(p.re + m, p.im).norm()
}

/// `Σₙ xⁿ/n! Πₖ (1 + n/pₖ)⁻²`, the squared-pole series of the static IPR estimate.
pub fn hyp_pfq_squaredpoles(p: &[C64], x: f64) -> Result<C64> {
    let doubled: Vec<C64> = p.iter().chain(p.iter()).copied().collect();
    hyp_pfq_unit_shift(&doubled, x)
}
