//! Classical bus-conditional NLR displacements `αₙ(t)` and their steady values.

use super::{DriveEnvelope, SystemParams};
use crate::ode::{self, OdeOptions};
use crate::{Error, Result, C64};

/// Per bus level `n`: a sampled trajectory `αₙ(t)` (possibly empty) and the steady value `ᾱₙ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementSet {
    steady: Vec<C64>,
    times: Vec<f64>,
    traj: Vec<Vec<C64>>,
    deriv: Vec<Vec<C64>>,
}

impl DisplacementSet {
    /// Steady values `ᾱₙ = ε/(δ + nχ − iκ/2)` for `n < n_levels`, with no trajectory.
    pub fn steady(params: &SystemParams, eps: C64, n_levels: usize) -> Result<Self> {
        let steady = steady_values(params, eps, n_levels)?;
        Ok(Self { steady, times: Vec::new(), traj: Vec::new(), deriv: Vec::new() })
    }

    /// Steady set whose `n = 0` branch equals `alpha0`.
    pub fn from_alpha0(params: &SystemParams, alpha0: C64, n_levels: usize) -> Result<Self> {
        Self::steady(params, alpha0 * params.lambda_n(0), n_levels)
    }

    /// Arbitrary steady values, for tests and hand-built models.
    pub fn from_values(steady: Vec<C64>) -> Self {
        Self { steady, times: Vec::new(), traj: Vec::new(), deriv: Vec::new() }
    }

    pub fn n_levels(&self) -> usize {
        self.steady.len()
    }

    pub fn steady_values(&self) -> &[C64] {
        &self.steady
    }

    pub fn steady_value(&self, n: usize) -> C64 {
        self.steady[n]
    }

    /// `ᾱ = ᾱ₁ − ᾱ₀`.
    pub fn alpha_bar(&self) -> C64 {
        match self.steady.as_slice() {
            [a0, a1, ..] => a1 - a0,
            _ => C64::default(),
        }
    }

    pub fn has_trajectories(&self) -> bool {
        !self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn trajectory(&self, n: usize) -> &[C64] {
        &self.traj[n]
    }

    /// `αₙ(t)`: cubic Hermite interpolation between grid samples using the exact
    /// ODE derivative. Outside the grid the nearest endpoint value is held; with no
    /// trajectory the steady value is returned.
    pub fn alpha_at(&self, n: usize, t: f64) -> C64 {
        if self.times.is_empty() {
            return self.steady[n];
        }
        let ts = &self.times;
        let (y, f) = (&self.traj[n], &self.deriv[n]);
        if t <= ts[0] {
            return y[0];
        }
        let last = ts.len() - 1;
        if t >= ts[last] {
            return y[last];
        }
        let k = ts.partition_point(|&s| s <= t) - 1;
        let h = ts[k + 1] - ts[k];
        let th = (t - ts[k]) / h;
        let (t2, t3) = (th * th, th * th * th);
        y[k] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + f[k] * ((t3 - 2.0 * t2 + th) * h)
            + y[k + 1] * (3.0 * t2 - 2.0 * t3)
            + f[k + 1] * ((t3 - t2) * h)
    }
}

fn steady_values(params: &SystemParams, eps: C64, n_levels: usize) -> Result<Vec<C64>> {
    (0..n_levels)
        .map(|n| {
            let l = params.lambda_n(n);
            if l.norm() == 0.0 {
                Err(Error::Invalid(format!("delta + {n} chi - i kappa/2 vanishes; no steady displacement")))
            } else {
                Ok(eps / l)
            }
        })
        .collect()
}

/// Integrates `iα̇ₙ = (δ + nχ − iκ/2)αₙ − ε(t)` from `αₙ(0) = 0` for `n = 0..=n_max`.
pub fn classical_displacements(
    params: &SystemParams,
    envelope: &DriveEnvelope,
    t_grid: &[f64],
    n_max: usize,
) -> Result<DisplacementSet> {
    let init = vec![C64::default(); n_max + 1];
    classical_displacements_with(params, &|t| envelope.eval(t), &envelope.breakpoints(), envelope.plateau(), &init, t_grid)
}

/// General form: arbitrary drive `eps`, its discontinuity times, the plateau value
/// used for `ᾱₙ`, and initial amplitudes (one per level).
pub fn classical_displacements_with(
    params: &SystemParams,
    eps: &(dyn Fn(f64) -> C64 + Sync),
    breakpoints: &[f64],
    plateau: C64,
    init: &[C64],
    t_grid: &[f64],
) -> Result<DisplacementSet> {
    params.validate()?;
    if t_grid.is_empty() {
        return Err(Error::Invalid("empty time grid".into()));
    }
    if t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("time grid must be strictly increasing and start at t >= 0".into()));
    }
    let levels = init.len();
    let lambdas: Vec<C64> = (0..levels).map(|n| params.lambda_n(n)).collect();
    let steady = steady_values(params, plateau, levels)?;

    // Absolute tolerance scaled to the size of the displacement the drive can produce.
    let eps_max = t_grid.iter().map(|&t| eps(t).norm()).fold(plateau.norm(), f64::max);
    let lam_min = lambdas.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min).max(1e-300);
    let init_max = init.iter().map(|a| a.norm()).fold(0.0f64, f64::max);
    let scale = (eps_max / lam_min).max(init_max).max(1e-300);
    let opts = OdeOptions { rtol: 1e-11, atol: 1e-13 * scale, ..OdeOptions::default() };

    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let e = eps(t);
        for n in 0..y.len() {
            dy[n] = -C64::i() * (lambdas[n] * y[n] - e);
        }
    };
    let mut traj = vec![vec![C64::default(); t_grid.len()]; levels];
    ode::solve(rhs, 0.0, init, t_grid, breakpoints, &opts, |i, _, y| {
        for n in 0..levels {
            traj[n][i] = y[n];
        }
        Ok(())
    })
    .map_err(|e| match e {
        Error::Integration { t, reason } => {
            Error::Integration { t, reason: format!("{reason}; try a coarser output grid or tighter ramp") }
        }
        other => other,
    })?;
    let deriv = (0..levels)
        .map(|n| {
            t_grid
                .iter()
                .zip(&traj[n])
                .map(|(&t, &a)| -C64::i() * (lambdas[n] * a - eps(t)))
                .collect()
        })
        .collect();
    Ok(DisplacementSet { steady, times: t_grid.to_vec(), traj, deriv })
}

/// `k`-th central finite difference of `f` at `t` with step `h`.
pub fn central_derivative(f: &dyn Fn(f64) -> C64, k: usize, t: f64, h: f64) -> C64 {
    let mut acc = C64::default();
    let mut binom = 1.0;
    for i in 0..=k {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += f(t + (k as f64 / 2.0 - i as f64) * h) * (sign * binom);
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    acc / h.powi(k as i32)
}

/// Deviation of `αₙ(t)` caused by an additive drive error, from the integration-by-parts
/// series `Σₖ iᵏ [ε_err⁽ᵏ⁾(z) e^{iλₙ(z−t)}]_{z=0}^{z=t} / λₙ^{k+1}` with
/// `λₙ = δ + nχ − iκ/2`, truncated after `k = order`.
///
/// `derivs(k, z)` must return `ε_err⁽ᵏ⁾(z)`; [`central_derivative`] can supply it.
pub fn tqd_error_estimate(
    derivs: &dyn Fn(usize, f64) -> C64,
    params: &SystemParams,
    n_levels: usize,
    order: usize,
    t: f64,
) -> Result<Vec<C64>> {
    if order > 6 {
        return Err(Error::Invalid(format!("series order {order} not supported beyond 6")));
    }
    (0..n_levels)
        .map(|n| {
            let l = params.lambda_n(n);
            if l.norm() == 0.0 {
                return Err(Error::Invalid(format!("level {n} is resonant with the drive")));
            }
            let phase0 = (C64::i() * l * (-t)).exp();
            let mut sum = C64::default();
            let mut ik = C64::new(1.0, 0.0);
            let mut lk = l;
            for k in 0..=order {
                sum += ik * (derivs(k, t) - derivs(k, 0.0) * phase0) / lk;
                ik *= C64::i();
                lk *= l;
            }
            Ok(sum)
        })
        .collect()
}
