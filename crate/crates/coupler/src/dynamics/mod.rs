//! Lindblad evolution of dense density matrices under sparse time-dependent Hamiltonians,
//! two-level fits of the resulting traces, and the bus Rabi and dephasing experiments.

mod experiments;
mod fit;

pub use experiments::{
    dephasing_experiment, dephasing_trace, polaron_rabi_experiment, rabi_drive_frequency, rabi_experiment, rabi_layout,
    RabiSetup,
};
pub use fit::{bloch_population, fit_exponential_decay, fit_two_level, FitOptions, TwoLevelFit};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::hilbert::{Operator, TdOperator};
use crate::ode::{solve, OdeOptions, OdeStats};
use crate::{Error, Result, C64};

/// Sampled expectation values and the state at the last output time.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub expectations: Vec<(String, Vec<C64>)>,
    pub final_state: Option<DMatrix<C64>>,
    /// `max |Tr ρ − 1|` over the output times.
    pub trace_drift: f64,
    /// Smallest eigenvalue of the final state.
    pub min_eigenvalue: f64,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn series(&self, name: &str) -> Result<&[C64]> {
        self.expectations
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Invalid(format!("trajectory has no series named {name}")))
    }

    /// Real part of a named series.
    pub fn real(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.series(name)?.iter().map(|v| v.re).collect())
    }
}

/// `ρ = |ψ⟩⟨ψ|` for a normalized state.
pub fn pure_state(psi: &[C64]) -> DMatrix<C64> {
    let d = psi.len();
    DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj())
}

fn validate_state(rho: &DMatrix<C64>, d: usize) -> Result<()> {
    if rho.shape() != (d, d) {
        return Err(Error::Invalid(format!("initial state is {:?}, expected {d}x{d}", rho.shape())));
    }
    let herm = (rho - rho.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if herm > 1e-9 {
        return Err(Error::NotHermitian(herm));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::Invalid(format!("initial state has trace {tr}")));
    }
    let min = SymmetricEigen::new(rho.clone()).eigenvalues.min();
    if min < -1e-9 {
        return Err(Error::Invalid(format!("initial state has eigenvalue {min}")));
    }
    Ok(())
}

/// Row-compressed operator used inside the right-hand side.
struct Csr {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl Csr {
    fn from(op: &Operator) -> Self {
        let m = op.matrix();
        let m = if m.is_csr() { m.clone() } else { m.to_csr() };
        Self {
            indptr: m.indptr().raw_storage().to_vec(),
            indices: m.indices().to_vec(),
            values: m.data().to_vec(),
        }
    }
}

/// `out = M ρ` for row-major `ρ`.
fn left_mul(indptr: &[usize], indices: &[usize], values: &[C64], rho: &[C64], d: usize, out: &mut [C64]) {
    out.fill(C64::default());
    for i in 0..d {
        let row = &mut out[i * d..(i + 1) * d];
        for p in indptr[i]..indptr[i + 1] {
            let (k, v) = (indices[p], values[p]);
            for (o, r) in row.iter_mut().zip(&rho[k * d..(k + 1) * d]) {
                *o += v * r;
            }
        }
    }
}

/// Integrates `ρ̇ = −i[H, ρ] + Σ (LρL† − ½{L†L, ρ})` and samples `Tr(Oρ)` on `t_grid`.
/// Integration starts at `t_grid[0]`.
pub fn evolve(
    h: &TdOperator,
    collapse: &[Operator],
    rho0: &DMatrix<C64>,
    t_grid: &[f64],
    observables: &[(String, Operator)],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    let layout = h.layout();
    let d = layout.dim();
    if collapse.iter().chain(observables.iter().map(|o| &o.1)).any(|o| o.layout() != layout) {
        return Err(Error::LayoutMismatch);
    }
    validate_state(rho0, d)?;
    let Some(&t0) = t_grid.first() else {
        return Err(Error::Invalid("empty time grid".into()));
    };

    // Non-Hermitian effective Hamiltonian H − (i/2) Σ L†L; the commutator part then
    // reads −i(Aρ − (Aρ)†) with A = H_eff.
    let mut heff = h.clone();
    for l in collapse {
        let ldl = l.adjoint().mul(l)?;
        heff.add_static(ldl.scale(C64::new(0.0, -0.5)).unflagged())?;
    }
    let compiled = heff.compile();
    let jumps: Vec<Csr> = collapse.iter().map(Csr::from).collect();

    let mut hv = vec![C64::default(); compiled.nnz()];
    let mut a = vec![C64::default(); d * d];
    let mut b = vec![C64::default(); d * d];
    let mut c = vec![C64::default(); d * d];
    // The commutator form below assumes ρ = ρ†. Both parts of the right-hand side are
    // written exactly Hermitian, so an anti-Hermitian rounding component never appears;
    // if it did, the jump term would amplify it without the matching anticommutator.
    let rhs = |t: f64, rho: &[C64], out: &mut [C64]| {
        compiled.values_at(t, &mut hv);
        left_mul(compiled.indptr(), compiled.indices(), &hv, rho, d, &mut a);
        let mi = C64::new(0.0, -1.0);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = mi * (a[i * d + j] - a[j * d + i].conj());
            }
        }
        if jumps.is_empty() {
            return;
        }
        c.fill(C64::default());
        for l in &jumps {
            left_mul(&l.indptr, &l.indices, &l.values, rho, d, &mut b);
            // c += B L†: (B L†)_{ij} = Σ_k B_{ik} conj(L_{jk}).
            for j in 0..d {
                for p in l.indptr[j]..l.indptr[j + 1] {
                    let (k, lv) = (l.indices[p], l.values[p].conj());
                    for i in 0..d {
                        c[i * d + j] += b[i * d + k] * lv;
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] += (c[i * d + j] + c[j * d + i].conj()) * 0.5;
            }
        }
    };

    let y0: Vec<C64> = (0..d * d).map(|idx| (rho0[(idx / d, idx % d)] + rho0[(idx % d, idx / d)].conj()) * 0.5).collect();
    let mut series: Vec<Vec<C64>> = vec![Vec::with_capacity(t_grid.len()); observables.len()];
    let mut drift = 0.0f64;
    let mut last = Vec::new();
    let n_out = t_grid.len();
    let stats = solve(rhs, t0, &y0, t_grid, h.breakpoints(), opts, |i, t, y| {
        let tr: C64 = (0..d).map(|k| y[k * d + k]).sum();
        drift = drift.max((tr - C64::new(1.0, 0.0)).norm());
        for (s, (_, o)) in series.iter_mut().zip(observables) {
            s.push(o.expect_dm(y));
        }
        for k in 0..d {
            if y[k * d + k].re < -1e-6 {
                return Err(Error::Integration { t, reason: format!("population {} of basis state {k} is negative", y[k * d + k].re) });
            }
        }
        if i + 1 == n_out {
            last = y.to_vec();
        }
        Ok(())
    })?;
    if drift > 1e-7 {
        return Err(Error::Integration { t: t_grid[n_out - 1], reason: format!("trace drifted by {drift:.3e}") });
    }
    let final_state = DMatrix::from_fn(d, d, |i, j| last[i * d + j]);
    let herm = (&final_state + final_state.adjoint()) * C64::new(0.5, 0.0);
    let min_eigenvalue = SymmetricEigen::new(herm).eigenvalues.min();
    if min_eigenvalue < -1e-6 {
        return Err(Error::Integration {
            t: t_grid[n_out - 1],
            reason: format!("final state has eigenvalue {min_eigenvalue:.3e}"),
        });
    }
    Ok(Trajectory {
        t: t_grid.to_vec(),
        expectations: observables.iter().map(|(n, _)| n.clone()).zip(series).collect(),
        final_state: Some(final_state),
        trace_drift: drift,
        min_eigenvalue,
        stats,
    })
}
