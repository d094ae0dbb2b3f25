//! Experiment configuration: strict JSON schema, frequencies in MHz (`/2π`).

use std::path::PathBuf;

use coupler::circuit::{CircuitParams, KerrCatSystem};
use coupler::model::SystemParams;
use coupler::units::mhz;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Fig3Rabi,
    Fig4Ipr,
    Fig5Zz,
    Fig6Pam,
    Fig7Circuit,
    AppDephasing,
    AppLd,
    AppPamLd,
    Metapotential,
}

impl Pipeline {
    pub const ALL: [Pipeline; 9] = [
        Pipeline::Fig3Rabi,
        Pipeline::Fig4Ipr,
        Pipeline::Fig5Zz,
        Pipeline::Fig6Pam,
        Pipeline::Fig7Circuit,
        Pipeline::AppDephasing,
        Pipeline::AppLd,
        Pipeline::AppPamLd,
        Pipeline::Metapotential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Fig3Rabi => "fig3_rabi",
            Pipeline::Fig4Ipr => "fig4_ipr",
            Pipeline::Fig5Zz => "fig5_zz",
            Pipeline::Fig6Pam => "fig6_pam",
            Pipeline::Fig7Circuit => "fig7_circuit",
            Pipeline::AppDephasing => "app_dephasing",
            Pipeline::AppLd => "app_ld",
            Pipeline::AppPamLd => "app_pam_ld",
            Pipeline::Metapotential => "metapotential",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Name of the swept variable.
    pub fn sweep_variable(self) -> &'static str {
        match self {
            Pipeline::Fig7Circuit => "alpha_sq",
            Pipeline::AppLd | Pipeline::AppPamLd => "z",
            Pipeline::Metapotential => "bus_level",
            _ => "alpha0_sq",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        let steps = |lo: usize, hi: usize, h: f64| (lo..=hi).map(|k| k as f64 * h).collect::<Vec<_>>();
        match self {
            Pipeline::Fig3Rabi => vec![1.0, 2.0, 4.0, 6.0, 8.0],
            Pipeline::Fig4Ipr | Pipeline::Fig5Zz => steps(0, 20, 0.5),
            Pipeline::AppDephasing => steps(1, 20, 0.5),
            Pipeline::Fig6Pam => steps(8, 20, 0.5),
            Pipeline::Fig7Circuit => steps(0, 16, 0.5),
            Pipeline::AppLd => steps(0, 40, 1.0),
            Pipeline::AppPamLd => steps(0, 10, 0.5),
            Pipeline::Metapotential => vec![0.0, 1.0],
        }
    }
}

/// Top-level configuration. `output` does not enter the hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    #[serde(default)]
    pub params: Option<Params>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub options: Options,
}

/// Parameter overrides on the pipeline preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Params {
    System(SystemMhz),
    KerrCat(KerrCatMhz),
    Circuit(CircuitMhz),
}

/// Coupler constants in MHz. `delta` moves the drive; absent fields keep the preset value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemMhz {
    pub omega_1: Option<f64>,
    pub omega_2: Option<f64>,
    pub omega_b: Option<f64>,
    pub omega_r: Option<f64>,
    pub k_1: Option<f64>,
    pub k_2: Option<f64>,
    pub k_b: Option<f64>,
    pub k_r: Option<f64>,
    pub g_1: Option<f64>,
    pub g_2: Option<f64>,
    pub chi: Option<f64>,
    pub kappa: Option<f64>,
    pub delta: Option<f64>,
}

impl SystemMhz {
    pub fn apply(&self, base: SystemParams) -> SystemParams {
        let set = |v: Option<f64>, d: f64| v.map(mhz).unwrap_or(d);
        let delta = self.delta.map(mhz).unwrap_or(base.delta());
        let omega_r = set(self.omega_r, base.omega_r);
        SystemParams {
            omega_1: set(self.omega_1, base.omega_1),
            omega_2: set(self.omega_2, base.omega_2),
            omega_b: set(self.omega_b, base.omega_b),
            omega_r,
            k_1: set(self.k_1, base.k_1),
            k_2: set(self.k_2, base.k_2),
            k_b: set(self.k_b, base.k_b),
            k_r: set(self.k_r, base.k_r),
            g_1: set(self.g_1, base.g_1),
            g_2: set(self.g_2, base.g_2),
            chi: set(self.chi, base.chi),
            kappa: set(self.kappa, base.kappa),
            omega_d: omega_r,
        }
        .with_delta(delta)
    }
}

/// Effective Kerr-cat parameters in MHz.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrCatMhz {
    pub delta: Option<f64>,
    pub k_b: Option<f64>,
    pub k_r: Option<f64>,
    pub chi: Option<f64>,
    pub detunings: Option<[f64; 2]>,
    pub k_q: Option<[f64; 2]>,
    pub g: Option<[f64; 2]>,
}

impl KerrCatMhz {
    pub fn apply(&self, base: KerrCatSystem) -> KerrCatSystem {
        let set = |v: Option<f64>, d: f64| v.map(mhz).unwrap_or(d);
        let pair = |v: Option<[f64; 2]>, d: [f64; 2]| v.map(|a| [mhz(a[0]), mhz(a[1])]).unwrap_or(d);
        KerrCatSystem {
            delta: set(self.delta, base.delta),
            k_b: set(self.k_b, base.k_b),
            k_r: set(self.k_r, base.k_r),
            chi: set(self.chi, base.chi),
            detunings: pair(self.detunings, base.detunings),
            k_q: pair(self.k_q, base.k_q),
            g: pair(self.g, base.g),
        }
    }
}

/// Circuit energies in MHz for the Kerr-cat design; `zeta` in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitMhz {
    pub e_cb: f64,
    pub e_jb: f64,
    pub e_cr: f64,
    pub e_jl: f64,
    pub e_jn: f64,
    pub n: u32,
    pub zeta: f64,
    #[serde(default)]
    pub eps0: f64,
    #[serde(default)]
    pub pi_z_b: Option<f64>,
    #[serde(default)]
    pub pi_z_r: Option<f64>,
}

impl CircuitMhz {
    pub fn to_params(&self) -> CircuitParams {
        let mut c = CircuitParams::kerr_cat(
            mhz(self.e_cb),
            mhz(self.e_jb),
            mhz(self.e_cr),
            mhz(self.e_jl),
            mhz(self.e_jn),
            self.n,
            self.zeta,
            mhz(self.eps0),
        );
        c.pi_z_b = self.pi_z_b;
        c.pi_z_r = self.pi_z_r;
        c
    }
}

/// Either an explicit list of values or `points` equally spaced values from `start` to `stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

impl Sweep {
    pub fn grid(&self) -> Result<Vec<f64>, String> {
        match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => Ok(v.clone()),
            (None, Some(a), Some(b), Some(n)) if n >= 2 => {
                Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
            }
            (None, Some(a), _, Some(1)) => Ok(vec![a]),
            _ => Err("sweep needs either `values` or all of `start`, `stop` and `points`".into()),
        }
    }
}

/// Mode truncations of the `(q1, q2, b, r)` layout; the NLR grows up to `nlr_max` until converged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Truncation {
    pub q1: usize,
    pub q2: usize,
    pub bus: usize,
    pub nlr: usize,
    pub nlr_max: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { q1: 3, q2: 3, bus: 4, nlr: 8, nlr_max: 60 }
    }
}

/// Integrator and fit settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub fit_max_residual: f64,
    pub fit_max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ode_rtol: 1e-8, ode_atol: 1e-10, fit_max_residual: 0.05, fit_max_iterations: 300 }
    }
}

/// Pipeline-specific settings; each pipeline reads the fields it documents and
/// falls back to its defaults. Frequencies in MHz.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    pub chi_values: Option<Vec<f64>>,
    pub k_r_values: Option<Vec<f64>>,
    pub rabi_omega: Option<f64>,
    pub ramp_ns: Option<f64>,
    pub samples: Option<usize>,
    pub alpha0_sq: Option<f64>,
    pub alpha_sq: Option<f64>,
    pub lambda: Option<f64>,
    pub omega0: Option<f64>,
    pub omega_m: Option<f64>,
    pub omega_m_delta: Option<f64>,
    pub preset: Option<KerrCatPreset>,
    pub model: Option<MetaKind>,
    pub eps: Option<[f64; 2]>,
    pub grid_half_width: Option<f64>,
    pub grid_points: Option<usize>,
    pub normalize: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KerrCatPreset {
    Main,
    Appendix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaKind {
    Simple,
    KerrCat,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&canonical)[..8])
    }

    pub fn grid(&self) -> Result<Vec<f64>, String> {
        let want = self.pipeline.sweep_variable();
        let grid = match &self.sweep {
            None => self.pipeline.default_grid(),
            Some(s) if s.variable != want => {
                return Err(format!("pipeline {} sweeps `{want}`, not `{}`", self.pipeline.name(), s.variable))
            }
            Some(s) => s.grid()?,
        };
        if grid.is_empty() {
            return Err("sweep is empty".into());
        }
        if grid.iter().any(|v| !v.is_finite()) {
            return Err("sweep values must be finite".into());
        }
        let non_negative = grid.iter().all(|&v| v >= 0.0);
        match self.pipeline {
            Pipeline::Metapotential if !grid.iter().all(|&v| v >= 0.0 && v.fract() == 0.0 && v < 16.0) => {
                Err("bus_level values must be integers in [0, 16)".into())
            }
            Pipeline::AppDephasing if !grid.iter().all(|&v| v > 0.0) => {
                Err("the dephasing rates need alpha0_sq > 0".into())
            }
            _ if !non_negative => Err(format!("`{want}` values must be non-negative")),
            _ => Ok(grid),
        }
    }

    /// The system overrides, rejecting a parameter kind the pipeline does not take.
    pub fn system(&self) -> Result<SystemMhz, String> {
        match &self.params {
            None => Ok(SystemMhz::default()),
            Some(Params::System(s)) => Ok(s.clone()),
            Some(_) => Err(format!("pipeline {} takes `system` params", self.pipeline.name())),
        }
    }

    /// Kerr-cat system from the preset, then direct overrides or circuit-derived constants.
    pub fn kerr_cat(&self) -> Result<KerrCatSystem, String> {
        let base = match self.options.preset.unwrap_or(KerrCatPreset::Main) {
            KerrCatPreset::Main => KerrCatSystem::fig7(),
            KerrCatPreset::Appendix => KerrCatSystem::fig7_appendix(),
        };
        match &self.params {
            None => Ok(base),
            Some(Params::KerrCat(k)) => Ok(k.apply(base)),
            Some(Params::Circuit(c)) => {
                let eff = coupler::circuit::derive_kerr_cat_params(&c.to_params()).map_err(|e| e.to_string())?;
                Ok(KerrCatSystem { k_b: eff.k_b, k_r: eff.k_r, chi: eff.chi, ..base })
            }
            Some(Params::System(_)) => {
                Err(format!("pipeline {} takes `kerr_cat` or `circuit` params", self.pipeline.name()))
            }
        }
    }

    /// `values` in MHz, else the single override, else the defaults.
    pub fn list_or(&self, values: &Option<Vec<f64>>, single: Option<f64>, default: &[f64]) -> Result<Vec<f64>, String> {
        let v = match (values, single) {
            (Some(v), _) => v.clone(),
            (None, Some(s)) => vec![s],
            (None, None) => default.to_vec(),
        };
        if v.is_empty() || v.iter().any(|x| x.is_nan()) {
            return Err("parameter lists must be non-empty and free of NaN".into());
        }
        Ok(v)
    }
}
