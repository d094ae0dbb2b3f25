//! The named pipelines. Each validates its slice of the config, evaluates the sweep
//! points in parallel, and returns tables plus oracle comparisons.

use std::f64::consts::TAU;

use coupler::analytics::{
    bessel_j0_first_zero, chi12_ac, chi12_ac_warnings, dephasing_estimate, dephasing_suppression, ipr_ld, ipr_pam,
    ipr_pam_ld, ipr_static, rabi_suppression, IprState, SwInputs,
};
use coupler::circuit::{metapotential, well_shift, IqGrid, KerrCatSystem, MetaModel};
use coupler::dynamics::{dephasing_experiment, fit_two_level, rabi_experiment, FitOptions, RabiSetup};
use coupler::hilbert::ModeLayout;
use coupler::model::{DisplacementSet, PamParams, SystemParams};
use coupler::ode::OdeOptions;
use coupler::spectral::{converged_polaron_spectrum, ipr, qubit_dephasing_rate, qubit_label, zz_shift, Spectrum};
use coupler::units::{mhz, ns, to_mhz};
use coupler::C64;
use rayon::prelude::*;

use crate::bundle::{Check, Mode, Outcome, Table};
use crate::config::{ExperimentConfig, MetaKind, Pipeline, SystemMhz};

#[derive(Debug)]
pub enum RunError {
    Validation(String),
    Numerical(String),
}

impl From<coupler::Error> for RunError {
    fn from(e: coupler::Error) -> Self {
        RunError::Numerical(e.to_string())
    }
}

/// Config accessors report their rejections as plain strings.
impl From<String> for RunError {
    fn from(e: String) -> Self {
        RunError::Validation(e)
    }
}

type Run = Result<Outcome, RunError>;

/// One line per pipeline for `list`: name, figure, required params, expected runtime.
pub struct Listing {
    pub pipeline: Pipeline,
    pub figure: &'static str,
    pub params: &'static str,
    /// Default sweep on one worker, measured on the reference machine.
    pub runtime: &'static str,
}

pub const LISTINGS: [Listing; 9] = [
    Listing { pipeline: Pipeline::Fig3Rabi, figure: "Fig. 3", params: "system (kappa > 0, g = 0); options.chi_values", runtime: "~4 min" },
    Listing { pipeline: Pipeline::Fig4Ipr, figure: "Fig. 4", params: "system; options.k_r_values", runtime: "~30 s" },
    Listing { pipeline: Pipeline::Fig5Zz, figure: "Fig. 5", params: "system; options.k_r_values", runtime: "~40 s" },
    Listing { pipeline: Pipeline::Fig6Pam, figure: "Fig. 6", params: "system; options.lambda, options.omega0", runtime: "<1 s" },
    Listing { pipeline: Pipeline::Fig7Circuit, figure: "Fig. 7", params: "kerr_cat or circuit; options.preset", runtime: "~5 s" },
    Listing { pipeline: Pipeline::AppDephasing, figure: "App. dephasing", params: "system (kappa > 0); options.k_r_values", runtime: "~35 s" },
    Listing { pipeline: Pipeline::AppLd, figure: "App. LD", params: "system; options.alpha0_sq, options.omega_m", runtime: "<1 s" },
    Listing { pipeline: Pipeline::AppPamLd, figure: "App. PAM+LD", params: "system; options.alpha0_sq, lambda, omega0, omega_m_delta", runtime: "<1 s" },
    Listing { pipeline: Pipeline::Metapotential, figure: "Fig. 2(c)", params: "system or kerr_cat; options.model, eps, grid", runtime: "<1 s" },
];

pub fn run(cfg: &ExperimentConfig) -> Run {
    let grid = cfg.grid().map_err(RunError::Validation)?;
    let mut out = match cfg.pipeline {
        Pipeline::Fig3Rabi => fig3_rabi(cfg, &grid),
        Pipeline::Fig4Ipr => fig4_ipr(cfg, &grid),
        Pipeline::Fig5Zz => fig5_zz(cfg, &grid),
        Pipeline::Fig6Pam => fig6_pam(cfg, &grid),
        Pipeline::Fig7Circuit => fig7_circuit(cfg, &grid),
        Pipeline::AppDephasing => app_dephasing(cfg, &grid),
        Pipeline::AppLd => app_ld(cfg, &grid),
        Pipeline::AppPamLd => app_pam_ld(cfg, &grid),
        Pipeline::Metapotential => metapotential_maps(cfg, &grid),
    }?;
    if out.checks.is_empty() && out.failures.is_empty() {
        return Err(RunError::Numerical("pipeline produced no oracle comparison".into()));
    }
    out.log.insert(0, format!("pipeline {} hash {} points {}", cfg.pipeline.name(), cfg.hash(), grid.len()));
    Ok(out)
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::Validation(msg.into())
}

/// Validates finite, physical system constants.
fn checked(p: SystemParams) -> Result<SystemParams, RunError> {
    p.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(p)
}

fn layout(cfg: &ExperimentConfig) -> Result<ModeLayout, RunError> {
    let t = &cfg.truncation;
    if t.nlr_max < t.nlr {
        return Err(invalid("truncation.nlr_max is below truncation.nlr"));
    }
    ModeLayout::coupler(t.q1, t.q2, t.bus, t.nlr).map_err(|e| invalid(e.to_string()))
}

/// Evaluates every point, keeping order; failed points are reported and skipped.
fn sweep<P: Sync + std::fmt::Debug, T: Send>(
    out: &mut Outcome,
    points: &[P],
    f: impl Fn(&P) -> coupler::Result<T> + Sync,
) -> Vec<(usize, T)> {
    let results: Vec<_> = points.par_iter().map(&f).collect();
    let mut ok = Vec::new();
    for (k, (p, r)) in points.iter().zip(results).enumerate() {
        match r {
            Ok(v) => ok.push((k, v)),
            Err(e) => out.failures.push(format!("point {p:?}: {e}")),
        }
    }
    out.log.push(format!("{} of {} points evaluated", ok.len(), points.len()));
    ok
}

fn pairs(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn fig3_rabi(cfg: &ExperimentConfig, grid: &[f64]) -> Run {
    let sys = cfg.system()?;
    let o = &cfg.options;
    let chis = cfg.list_or(&o.chi_values, sys.chi, &[-5.0, -10.0, -20.0]).map_err(invalid)?;
    let omega = mhz(o.rabi_omega.unwrap_or(1.0));
    let tau = ns(o.ramp_ns.unwrap_or(5.0));
    let samples = o.samples.unwrap_or(300);
    if !(omega > 0.0 && tau > 0.0) || samples < 8 {
        return Err(invalid("fig3_rabi needs rabi_omega > 0, ramp_ns > 0 and samples >= 8"));
    }
    let at_chi = |chi: f64| SystemMhz { chi: Some(chi), ..sys.clone() }.apply(SystemParams::rabi_preset(chi));
    for &chi in &chis {
        let p = checked(at_chi(chi))?;
        if !(p.kappa > 0.0) || p.g_1 != 0.0 || p.g_2 != 0.0 {
            return Err(invalid("fig3_rabi needs kappa > 0 and decoupled qubits"));
        }
    }
    let tol = &cfg.tolerances;
    let ode = OdeOptions { rtol: tol.ode_rtol, atol: tol.ode_atol, ..OdeOptions::default() };
    let fit = FitOptions { max_residual: tol.fit_max_residual, max_iterations: tol.fit_max_iterations };
    let mut out = Outcome::default();
    let points = pairs(&chis, grid);
    let rows = sweep(&mut out, &points, |&(chi, a0)| {
        let p = at_chi(chi);
        let alpha_bar = RabiSetup::new(p, omega, a0, tau, 1.0).displacements()?.alpha_bar();
        // Population oscillates at twice the suppressed coupling.
        let w_formula = 2.0 * rabi_suppression(omega, alpha_bar);
        let mut setup = RabiSetup::new(p, omega, a0, tau, 3.0 * TAU / w_formula);
        setup.n_samples = samples;
        setup.ode = ode;
        let tr = rabi_experiment(&setup)?;
        let w_fit = fit_two_level(&tr.t, &tr.real("n_b")?, &fit)?.omega_tilde;
        let t_formula = dephasing_suppression(f64::INFINITY, p.kappa, alpha_bar)?;
        let mut setup = RabiSetup::new(p, omega, a0, tau, 3.0 * t_formula);
        setup.n_samples = samples.min(200);
        setup.ode = ode;
        let t_fit = dephasing_experiment(&setup, &fit)?.t2_eff;
        Ok([to_mhz(w_fit), to_mhz(w_formula), t_fit * 1e6, t_formula * 1e6])
    });
    let name = "fig3_rabi.csv";
    let mut t = Table::new(
        name,
        &["alpha0_sq", "chi", "omega_tilde_fit", "omega_tilde_formula", "tphi_fit", "tphi_formula"],
    );
    for (k, v) in rows {
        let (chi, a0) = points[k];
        let row = t.push(vec![a0, chi, v[0], v[1], v[2], v[3]]);
        let at = format!("chi={chi} alpha0_sq={a0}");
        out.checks.push(
            Check::new(format!("rabi frequency {at}"), v[0], v[1], 0.10, Mode::Rel).from_table(
                name,
                row,
                "omega_tilde_fit",
                Some("omega_tilde_formula"),
            ),
        );
        out.checks.push(
            Check::new(format!("bus coherence time {at}"), v[2], v[3], 0.15, Mode::Rel).from_table(
                name,
                row,
                "tphi_fit",
                Some("tphi_formula"),
            ),
        );
    }
    out.tables.push(t);
    Ok(out)
}

/// Converged hybridized spectrum of the coupler at `|ᾱ₀|²`.
fn coupler_point(p: &SystemParams, layout: &ModeLayout, r_max: usize, a0: f64) -> coupler::Result<(Spectrum, DisplacementSet)> {
    let disp = DisplacementSet::from_alpha0(p, C64::new(a0.sqrt(), 0.0), layout.dims()[2])?;
    let labels = vec![qubit_label(layout, 1, 0), qubit_label(layout, 0, 1)];
    let (spec, _) = converged_polaron_spectrum(p, layout, &disp, &labels, r_max)?;
    Ok((spec, disp))
}

fn hybrid_presets(cfg: &ExperimentConfig, delta: f64) -> Result<Vec<SystemParams>, RunError> {
    let sys = cfg.system()?;
    let krs = cfg.list_or(&cfg.options.k_r_values, sys.k_r, &[0.0, -10.0, -1.0e4]).map_err(invalid)?;
    krs.into_iter()
        .map(|k| checked(SystemMhz { k_r: Some(k), ..sys.clone() }.apply(SystemParams::ipr_preset(delta, k))))
        .collect()
}

const STATES: [(IprState, usize, usize); 2] = [(IprState::S1000, 1, 0), (IprState::S0100, 0, 1)];

fn fig4_ipr(cfg: &ExperimentConfig, grid: &[f64]) -> Run {
    let presets = hybrid_presets(cfg, -1.5)?;
    let layout = layout(cfg)?;
    let r_max = cfg.truncation.nlr_max;
    let mut out = Outcome::default();
    let points: Vec<(usize, f64)> =
        (0..presets.len()).flat_map(|i| grid.iter().map(move |&a| (i, a))).collect();
    let rows = sweep(&mut out, &points, |&(i, a0)| {
        let p = &presets[i];
        let (spec, disp) = coupler_point(p, &layout, r_max, a0)?;
        let inp = SwInputs::new(p, &disp);
        let l = spec.bare.layout().clone();
        let mut per_state = Vec::new();
        for (which, q1, q2) in STATES {
            let v = 1.0 - ipr(&spec, &qubit_label(&l, q1, q2))?;
            let a = 1.0 - ipr_static(&inp.with_k_r(0.0), which)?;
            let b = 1.0 - ipr_static(&inp.with_k_r(f64::INFINITY), which)?;
            // Undriven qubits at the ac-Stark-shifted detunings.
            let dashed = 1.0 - ipr_static(&SwInputs { x: 0.0, ..inp }, which)?;
            per_state.push([v, 0.8 * a.min(b), 1.2 * a.max(b), dashed]);
        }
        Ok(per_state)
    });
    let cols = ["alpha0_sq", "K_r", "one_minus_ipr_diag", "band_lo", "band_hi", "dashed_acstark"];
    let mut tables: Vec<Table> = STATES.iter().map(|s| Table::new(format!("fig4_ipr_{}.csv", s.0.label()), &cols)).collect();
    for (k, per_state) in rows {
        let (i, a0) = points[k];
        let k_r = to_mhz(presets[i].k_r);
        for (j, v) in per_state.into_iter().enumerate() {
            let row = tables[j].push(vec![a0, k_r, v[0], v[1], v[2], v[3]]);
            let (mid, half) = ((v[1] + v[2]) / 2.0, (v[2] - v[1]) / 2.0);
            out.checks.push(
                Check::new(format!("1-IPR_{} within band K_r={k_r} alpha0_sq={a0}", STATES[j].0.label()), v[0], mid, half, Mode::Abs)
                    .from_table(&tables[j].name, row, "one_minus_ipr_diag", None),
            );
        }
    }
    out.tables = tables;
    Ok(out)
}

fn fig5_zz(cfg: &ExperimentConfig, grid: &[f64]) -> Run {
    let presets = hybrid_presets(cfg, -1.5)?;
    let layout = layout(cfg)?;
    let r_max = cfg.truncation.nlr_max;
    let mut out = Outcome::default();
    let points: Vec<(usize, f64)> =
        (0..presets.len()).flat_map(|i| grid.iter().map(move |&a| (i, a))).collect();
    let rows = sweep(&mut out, &points, |&(i, a0)| {
        let p = &presets[i];
        let (spec, disp) = coupler_point(p, &layout, r_max, a0)?;
        Ok([zz_shift(&spec)?, chi12_ac(&SwInputs::new(p, &disp))?])
    });
    let name = "fig5_zz.csv";
    let mut t = Table::new(name, &["alpha0_sq", "K_r", "zz_numeric", "zz_acstark_formula"]);
    for (k, v) in rows {
        let (i, a0) = points[k];
        let (num, formula) = (to_mhz(v[0]), to_mhz(v[1]));
        let row = t.push(vec![a0, to_mhz(presets[i].k_r), num, formula]);
        if a0 == 0.0 {
            out.checks.push(
                Check::new(format!("undriven ZZ vs fourth-order formula K_r={}", to_mhz(presets[i].k_r)), num, formula, 0.05, Mode::Rel)
                    .from_table(name, row, "zz_numeric", Some("zz_acstark_formula")),
            );
        }
    }
    if !grid.contains(&0.0) {
        // Reference point outside the sweep so that every bundle carries a comparison.
        let p = presets[0];
        let (spec, disp) = coupler_point(&p, &layout, r_max, 0.0)?;
        let inp = SwInputs::new(&p, &disp);
        out.warnings.extend(chi12_ac_warnings(&inp, [p.k_1, p.k_2], p.k_b));
        out.checks.push(Check::new(
            "undriven ZZ vs fourth-order formula (reference)",
            to_mhz(zz_shift(&spec)?),
            to_mhz(chi12_ac(&inp)?),
            0.05,
            Mode::Rel,
        ));
    }
    out.tables.push(t);
    Ok(out)
}

fn fig6_pam(cfg: &ExperimentConfig, grid: &[f64]) -> Run {
    let p = checked(cfg.system()?.apply(SystemParams::ipr_preset(-1.0, 0.0)))?;
    let lambda = cfg.options.lambda.unwrap_or_else(bessel_j0_first_zero);
    let omega0 = mhz(cfg.options.omega0.unwrap_or(500.0));
    if !(lambda.is_finite() && omega0 > 0.0) {
        return Err(invalid("fig6_pam needs a finite lambda and omega0 > 0"));
    }
    let mut out = Outcome::default();
    let rows = sweep(&mut out, grid, |&a0| {
        let disp = DisplacementSet::from_alpha0(&p, C64::new(a0.sqrt(), 0.0), 4)?;
        let inp = SwInputs::new(&p, &disp);
        let omega_m = omega0 * disp.alpha_bar().norm();
        let pam = 1.0 - ipr_pam(&inp, &PamParams { lambda, omega_m }, IprState::S1000, None)?;
        let stat = 1.0 - ipr_static(&inp, IprState::S1000)?;
        Ok([to_mhz(omega_m), pam, stat, 2.0 * (p.g_1 / omega_m).powi(2)])
    });
    let name = "fig6_pam.csv";
    let cols = ["alpha0_sq", "lambda", "omega_m", "one_minus_ipr_pam", "one_minus_ipr_static", "floor", "suppression"];
    let mut t = Table::new(name, &cols);
    for (k, v) in rows {
        let a0 = grid[k];
        let gain = v[2] / v[1];
        let row = t.push(vec![a0, lambda, v[0], v[1], v[2], v[3], gain]);
        out.checks.push(
            Check::new(format!("suppression at least 10x alpha0_sq={a0}"), gain, 10.0, 0.0, Mode::AtLeast)
                .from_table(name, row, "suppression", None),
        );
        out.checks.push(
            Check::new(format!("1-IPR above half the floor alpha0_sq={a0}"), v[1], v[3], 0.5, Mode::AtLeast)
                .from_table(name, row, "one_minus_ipr_pam", Some("floor")),
        );
    }
    out.tables.push(t);
    Ok(out)
}

fn fig7_circuit(cfg: &ExperimentConfig, grid: &[f64]) -> Run {
    let sys: KerrCatSystem = cfg.kerr_cat().map_err(invalid)?;
    let all = [sys.delta, sys.k_b, sys.k_r, sys.chi, sys.detunings[0], sys.detunings[1], sys.k_q[0], sys.k_q[1], sys.g[0], sys.g[1]];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(invalid("Kerr-cat parameters must be finite"));
    }
    let mut out = Outcome::default();
    let rows = sweep(&mut out, grid, |&a2| {
        let layout = sys.layout(a2)?;
        let eff = sys.effective(a2);
        Ok([
            1.0 - sys.ipr(a2, &layout, 1)?,
            1.0 - sys.ipr(a2, &layout, 2)?,
            to_mhz(well_shift(&eff, &layout, 0)?),
            to_mhz(well_shift(&eff, &layout, 1)?),
            to_mhz(-eff.k_r * a2 * a2 / 2.0),
        ])
    });
    let name = "fig7_circuit.csv";
    let cols = ["alpha_sq", "one_minus_ipr_1000", "one_minus_ipr_0100", "well_shift_0", "well_shift_1", "well_shift_formula"];
    let mut t = Table::new(name, &cols);
    let mut curve = Vec::new();
    for (k, v) in rows {
        let a2 = grid[k];
        let row = t.push(vec![a2, v[0], v[1], v[2], v[3], v[4]]);
        curve.push(v[0]);
        if a2 > 0.0 {
            for n in 0..2 {
                let col = ["well_shift_0", "well_shift_1"][n];
                out.checks.push(
                    Check::new(format!("well shift n={n} alpha_sq={a2}"), v[2 + n], v[4], 1e-9, Mode::Rel)
                        .from_table(name, row, col, Some("well_shift_formula")),
                );
            }
        }
    }
    let rises = curve.windows(2).filter(|w| w[1] >= w[0]).count();
    out.checks.push(Check::new("1-IPR_1000 decreases along the sweep (count of rises)", rises as f64, 0.0, 0.0, Mode::Abs));
    out.tables.push(t);
    Ok(out)
}

fn app_dephasing(cfg: &ExperimentConfig, grid: &[f64]) -> Run {
    let mut presets = hybrid_presets(cfg, -1.5)?;
    for p in &mut presets {
        if cfg.system()?.kappa.is_none() {
            p.kappa = mhz(0.1);
        }
        if !(p.kappa > 0.0) {
            return Err(invalid("app_dephasing needs kappa > 0"));
        }
    }
    let layout = layout(cfg)?;
    let r_max = cfg.truncation.nlr_max;
    let mut out = Outcome::default();
    let points: Vec<(usize, f64)> =
        (0..presets.len()).flat_map(|i| grid.iter().map(move |&a| (i, a))).collect();
    let rows = sweep(&mut out, &points, |&(i, a0)| {
        let p = &presets[i];
        let (spec, disp) = coupler_point(p, &layout, r_max, a0)?;
        let a = disp.alpha_bar();
        let omi = 1.0 - ipr(&spec, &qubit_label(spec.bare.layout(), 1, 0))?;
        Ok([qubit_dephasing_rate(&spec, p.kappa, a, 1)?, dephasing_estimate(p.kappa, a, omi)?, omi])
    });
    let name = "app_dephasing.csv";
    let mut t = Table::new(name, &["alpha0_sq", "K_r", "gamma_overlap", "gamma_ipr", "one_minus_ipr"]);
    for (k, v) in rows {
        let (i, a0) = points[k];
        let k_r = to_mhz(presets[i].k_r);
        let (g_ov, g_ipr) = (to_mhz(v[0]), to_mhz(v[1]));
        let row = t.push(vec![a0, k_r, g_ov, g_ipr, v[2]]);
        out.checks.push(
            Check::new(format!("overlap vs IPR dephasing K_r={k_r} alpha0_sq={a0}"), g_ov, g_ipr, 0.20, Mode::Rel)
                .from_table(name, row, "gamma_overlap", Some("gamma_ipr")),
        );
    }
    out.tables.push(t);
    Ok(out)
}

/// Driven preset shared by the longitudinal-drive pipelines.
fn ld_inputs(cfg: &ExperimentConfig, delta: f64, default_a0: f64) -> Result<SwInputs, RunError> {
    let p = checked(cfg.system()?.apply(SystemParams::ipr_preset(delta, 0.0)))?;
    let a0 = cfg.options.alpha0_sq.unwrap_or(default_a0);
    if !(a0 >= 0.0 && a0.is_finite()) {
        return Err(invalid("options.alpha0_sq must be finite and non-negative"));
    }
    let disp = DisplacementSet::from_alpha0(&p, C64::new(a0.sqrt(), 0.0), 3)?;
    Ok(SwInputs::new(&p, &disp))
}

fn app_ld(cfg: &ExperimentConfig, grid: &[f64]) -> Run {
    let inp = ld_inputs(cfg, -1.5, 2.0)?;
    let omega_m = mhz(cfg.options.omega_m.unwrap_or(500.0));
    if !(omega_m > 0.0) {
        return Err(invalid("options.omega_m must be positive"));
    }
    let reference = [1.0 - ipr_static(&inp, IprState::S1000)?, 1.0 - ipr_static(&inp, IprState::S0100)?];
    let mut out = Outcome::default();
    out.warnings.extend(inp.dispersive_warnings());
    let rows = sweep(&mut out, grid, |&z| {
        Ok([1.0 - ipr_ld(&inp, z, omega_m, IprState::S1000)?, 1.0 - ipr_ld(&inp, z, omega_m, IprState::S0100)?])
    });
    let name = "app_ld.csv";
    let mut t = Table::new(name, &["z", "one_minus_ipr_1000", "one_minus_ipr_0100", "static_1000", "static_0100"]);
    for (k, v) in rows {
        let z = grid[k];
        let row = t.push(vec![z, v[0], v[1], reference[0], reference[1]]);
        if z == 0.0 {
            for (j, (col, oracle)) in [("one_minus_ipr_1000", "static_1000"), ("one_minus_ipr_0100", "static_0100")].into_iter().enumerate() {
                out.checks.push(
                    Check::new(format!("z=0 reduces to the static estimate ({col})"), v[j], reference[j], 1e-12, Mode::Rel)
                        .from_table(name, row, col, Some(oracle)),
                );
            }
        }
    }
    if !grid.contains(&0.0) {
        let v = 1.0 - ipr_ld(&inp, 0.0, omega_m, IprState::S1000)?;
        out.checks.push(Check::new("z=0 reduces to the static estimate (reference)", v, reference[0], 1e-12, Mode::Rel));
    }
    out.tables.push(t);
    Ok(out)
}

fn app_pam_ld(cfg: &ExperimentConfig, grid: &[f64]) -> Run {
    let inp = ld_inputs(cfg, -1.0, 6.0)?;
    let o = &cfg.options;
    let lambda = o.lambda.unwrap_or_else(bessel_j0_first_zero);
    let omega_m = mhz(o.omega0.unwrap_or(500.0)) * inp.x.sqrt();
    let omega_d = mhz(o.omega_m_delta.unwrap_or(10.0));
    if !(lambda.is_finite() && omega_m > 0.0 && omega_d > 0.0) {
        return Err(invalid("app_pam_ld needs a finite lambda, omega0 > 0, alpha0_sq > 0 and omega_m_delta > 0"));
    }
    let pam = PamParams { lambda, omega_m };
    let reference = 1.0 - ipr_pam(&inp, &pam, IprState::S1000, None)?;
    let mut out = Outcome::default();
    out.warnings.extend(inp.dispersive_warnings());
    let rows = sweep(&mut out, grid, |&z| Ok(1.0 - ipr_pam_ld(&inp, &pam, z, omega_d, IprState::S1000)?));
    let name = "app_pam_ld.csv";
    let mut t = Table::new(name, &["z", "one_minus_ipr_1000", "pam_only_1000"]);
    for (k, v) in rows {
        let z = grid[k];
        let row = t.push(vec![z, v, reference]);
        if z == 0.0 {
            out.checks.push(
                Check::new("z=0 reduces to the phase-modulated estimate", v, reference, 1e-12, Mode::Rel)
                    .from_table(name, row, "one_minus_ipr_1000", Some("pam_only_1000")),
            );
        }
    }
    if !grid.contains(&0.0) {
        let v = 1.0 - ipr_pam_ld(&inp, &pam, 0.0, omega_d, IprState::S1000)?;
        out.checks.push(Check::new("z=0 reduces to the phase-modulated estimate (reference)", v, reference, 1e-12, Mode::Rel));
    }
    out.tables.push(t);
    Ok(out)
}

fn metapotential_maps(cfg: &ExperimentConfig, grid: &[f64]) -> Run {
    let o = &cfg.options;
    let kind = o.model.unwrap_or(MetaKind::Simple);
    let half = o.grid_half_width.unwrap_or(4.0);
    let points = o.grid_points.unwrap_or(161);
    let normalize = o.normalize.unwrap_or(true);
    let iq = IqGrid::square(half, points);
    iq.validate().map_err(|e| invalid(e.to_string()))?;
    let model = match kind {
        MetaKind::Simple => {
            let base = SystemParams { kappa: 0.0, ..SystemParams::rabi_preset(-10.0) };
            let p = checked(cfg.system()?.apply(base))?;
            let [re, im] = o.eps.unwrap_or([-15.0, 0.0]);
            MetaModel::Simple { params: p, eps: C64::new(mhz(re), mhz(im)) }
        }
        MetaKind::KerrCat => {
            let sys = cfg.kerr_cat().map_err(invalid)?;
            let a2 = o.alpha_sq.unwrap_or(2.0);
            if !(a2 >= 0.0 && a2.is_finite()) {
                return Err(invalid("options.alpha_sq must be finite and non-negative"));
            }
            MetaModel::KerrCat { effective: sys.effective(a2), delta: sys.delta }
        }
    };
    let hash = cfg.hash();
    let levels: Vec<usize> = grid.iter().map(|&v| v as usize).collect();
    let mut out = Outcome::default();
    let maps = sweep(&mut out, &levels, |&n| metapotential(&model, n, &iq, normalize));
    let name = "minima.csv";
    let mut minima = match kind {
        MetaKind::Simple => Table::new(name, &["bus_level", "min_i", "min_q", "expected_i", "expected_q", "offset_steps"]),
        MetaKind::KerrCat => Table::new(name, &["bus_level", "min_i", "min_q", "local_minima", "inversion_asymmetry"]),
    };
    for (k, m) in maps {
        let n = levels[k];
        let mut body = Vec::new();
        m.write_csv(&mut body, &hash).map_err(|e| RunError::Numerical(e.to_string()))?;
        out.tables.push(Table::raw(format!("metapotential_n{n}.csv"), String::from_utf8(body).expect("ascii csv")));
        match model {
            MetaModel::Simple { params, eps } => {
                let target = DisplacementSet::steady(&params, eps, n + 1)?.steady_value(n);
                let offset = (C64::new(m.minimum.0, m.minimum.1) - target).norm() / iq.resolution();
                let row = minima.push(vec![n as f64, m.minimum.0, m.minimum.1, target.re, target.im, offset]);
                out.checks.push(
                    Check::new(format!("minimum at the steady displacement n={n} (grid steps)"), offset, 0.0, 1.0, Mode::Abs)
                        .from_table(name, row, "offset_steps", None),
                );
            }
            MetaModel::KerrCat { .. } => {
                let scale = m.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
                let last = m.values.len() - 1;
                // The square grid is symmetric, so (I, Q) → (−I, −Q) reverses the flat index.
                let asym = (0..m.values.len()).map(|j| (m.values[j] - m.values[last - j]).abs()).fold(0.0, f64::max) / scale;
                let row = minima.push(vec![n as f64, m.minimum.0, m.minimum.1, m.local_minima().len() as f64, asym]);
                out.checks.push(
                    Check::new(format!("inversion symmetry n={n}"), asym, 0.0, 1e-12, Mode::Abs)
                        .from_table(name, row, "inversion_asymmetry", None),
                );
            }
        }
    }
    out.tables.push(minima);
    Ok(out)
}
