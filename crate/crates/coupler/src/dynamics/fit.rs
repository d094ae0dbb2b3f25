//! Least-squares fits of population and coherence traces.
//!
//! The population model is the Bloch solution of a driven two-level system with
//! `H = (Δ/2)σ_z + (Ω̃/2)σ_x`, longitudinal rate `γ₁` and transverse rate
//! `γ₂ = γ₁/2 + γ_φ`, started in the ground state and propagated with a matrix
//! exponential. `Ω̃` is the angular frequency of the population oscillation.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelFit {
    pub omega_tilde: f64,
    pub detuning: f64,
    pub t1_eff: f64,
    pub t2_eff: f64,
    /// RMS residual over the peak-to-peak signal amplitude.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// Fits whose relative residual exceeds this are rejected.
    pub max_residual: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_residual: 0.05, max_iterations: 300 }
    }
}

/// Excited-state population `(1 + w)/2` of the Bloch model at times `t` (measured from `t[0]`).
pub fn bloch_population(omega: f64, detuning: f64, gamma1: f64, gamma_phi: f64, t: &[f64]) -> Vec<f64> {
    let g2 = gamma1 / 2.0 + gamma_phi;
    // Augmented generator on (u, v, w, 1) so the pumping term stays linear.
    #[rustfmt::skip]
    let a = Matrix4::new(
        -g2, -detuning, 0.0, 0.0,
        detuning, -g2, -omega, 0.0,
        0.0, omega, -gamma1, -gamma1,
        0.0, 0.0, 0.0, 0.0,
    );
    let mut y = Vector4::new(0.0, 0.0, -1.0, 1.0);
    let mut out = Vec::with_capacity(t.len());
    let mut cached: Option<(f64, Matrix4<f64>)> = None;
    let mut prev = t.first().copied().unwrap_or(0.0);
    for &ti in t {
        let dt = ti - prev;
        if dt != 0.0 {
            let step = match cached {
                Some((h, m)) if (h - dt).abs() <= 1e-12 * dt.abs() => m,
                _ => {
                    let m = (a * dt).exp();
                    cached = Some((dt, m));
                    m
                }
            };
            y = step * y;
        }
        out.push((1.0 + y[2]) / 2.0);
        prev = ti;
    }
    out
}

/// Levenberg-Marquardt on a residual vector with a central-difference Jacobian.
fn levenberg_marquardt(
    residual: &dyn Fn(&[f64]) -> Vec<f64>,
    p0: &[f64],
    max_iterations: usize,
) -> (Vec<f64>, f64) {
    let cost = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut p = p0.to_vec();
    let mut r = residual(&p);
    let mut c = cost(&r);
    let mut mu = 1e-3;
    let np = p.len();
    for _ in 0..max_iterations {
        let n = r.len();
        let mut jac = DMatrix::<f64>::zeros(n, np);
        for k in 0..np {
            let h = 1e-6 * p[k].abs().max(1e-3);
            let mut pp = p.clone();
            pp[k] += h;
            let rp = residual(&pp);
            pp[k] -= 2.0 * h;
            let rm = residual(&pp);
            for i in 0..n {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += mu * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = residual(&trial);
            let ct = cost(&rt);
            if ct.is_finite() && ct < c {
                let gain = (c - ct) / c.max(1e-300);
                p = trial;
                r = rt;
                c = ct;
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                if gain < 1e-12 {
                    return (p, c);
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (p, c)
}

fn span_and_amplitude(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if t.len() != y.len() || t.len() < 8 {
        return Err(Error::Fit(format!("need at least 8 matching samples, got {} and {}", t.len(), y.len())));
    }
    if y.iter().chain(t).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit data"));
    }
    let span = t[t.len() - 1] - t[0];
    if !(span > 0.0) {
        return Err(Error::Fit("time samples must span a positive interval".into()));
    }
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi - lo > 0.0) {
        return Err(Error::Fit("signal is constant".into()));
    }
    Ok((span, hi - lo))
}

/// Fits the Bloch population model. Five starts spread over two octaves around the
/// crossing-count frequency estimate; the best fit wins.
pub fn fit_two_level(t: &[f64], population: &[f64], opts: &FitOptions) -> Result<TwoLevelFit> {
    let (span, amplitude) = span_and_amplitude(t, population)?;
    let rel: Vec<f64> = t.iter().map(|v| (v - t[0]) / span).collect();
    let mean = population.iter().sum::<f64>() / population.len() as f64;
    let crossings = population.windows(2).filter(|w| (w[0] - mean) * (w[1] - mean) < 0.0).count();
    // Dimensionless angular frequency over the unit interval.
    let w0 = (std::f64::consts::PI * crossings as f64).max(std::f64::consts::PI);

    // Parameters: [ω, Δ, √γ₁, √γ_φ] in units of 1/span.
    let model = |p: &[f64]| bloch_population(p[0].abs(), p[1], p[2] * p[2], p[3] * p[3], &rel);
    let residual = |p: &[f64]| model(p).iter().zip(population).map(|(m, d)| m - d).collect::<Vec<f64>>();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for k in -2..=2 {
        let w = w0 * 2f64.powf(k as f64 / 2.0);
        // The population is even in Δ, so Δ = 0 would be a stationary start.
        let start = [w, 0.05 * w, 0.5, 1.0];
        let (p, c) = levenberg_marquardt(&residual, &start, opts.max_iterations);
        if best.as_ref().is_none_or(|(_, bc)| c < *bc) {
            best = Some((p, c));
        }
    }
    let (p, c) = best.expect("five starts ran");
    let rms = (c / population.len() as f64).sqrt();
    let residual = rms / amplitude;
    if !residual.is_finite() || residual > opts.max_residual {
        return Err(Error::Fit(format!("relative residual {residual:.3e} exceeds {}", opts.max_residual)));
    }
    let gamma1 = p[2] * p[2] / span;
    let gamma2 = gamma1 / 2.0 + p[3] * p[3] / span;
    Ok(TwoLevelFit {
        omega_tilde: p[0].abs() / span,
        detuning: p[1] / span,
        t1_eff: 1.0 / gamma1,
        t2_eff: 1.0 / gamma2,
        residual,
    })
}

/// Fits `A e^{−(t − t₀)/T}` to a decaying magnitude; `T` is returned as `t2_eff`.
pub fn fit_exponential_decay(t: &[f64], y: &[f64], opts: &FitOptions) -> Result<TwoLevelFit> {
    let (span, amplitude) = span_and_amplitude(t, y)?;
    let rel: Vec<f64> = t.iter().map(|v| (v - t[0]) / span).collect();
    // Log-linear start from the positive samples.
    let pts: Vec<(f64, f64)> = rel.iter().zip(y).filter(|(_, v)| **v > 0.0).map(|(s, v)| (*s, v.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::Fit("decay trace has fewer than two positive samples".into()));
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let start = [intercept.exp(), (-slope).max(1e-6).sqrt()];
    let residual = |p: &[f64]| {
        rel.iter().zip(y).map(|(s, d)| p[0] * (-p[1] * p[1] * s).exp() - d).collect::<Vec<f64>>()
    };
    let (p, c) = levenberg_marquardt(&residual, &start, opts.max_iterations);
    let rms = (c / y.len() as f64).sqrt();
    let rel_res = rms / amplitude;
    if !rel_res.is_finite() || rel_res > opts.max_residual {
        return Err(Error::Fit(format!("relative residual {rel_res:.3e} exceeds {}", opts.max_residual)));
    }
    Ok(TwoLevelFit {
        omega_tilde: 0.0,
        detuning: 0.0,
        t1_eff: f64::INFINITY,
        t2_eff: span / (p[1] * p[1]),
        residual: rel_res,
    })
}
