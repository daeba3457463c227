//! Run configuration: JSON document with CLI-flag overrides.

use anyhow::{anyhow, bail, Context, Result};
use harmonikos_core::fields::{make_prepotential, DslField};
use harmonikos_core::harmonics::GridSpec;
use harmonikos_core::lie::{AlgebraBasis, BasisRef};
use harmonikos_core::mat::Mat;
use harmonikos_core::ode::OdeOptions;
use harmonikos_core::reconstruct::{BridgeOptions, GaugeData};
use harmonikos_core::tol::TolProfile;
use harmonikos_core::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// "u1", "sl2" or "file:<path>" (structure-constant JSON).
    pub algebra: String,
    /// Prepotential expression, inline or "@<path>" to a UTF-8 file.
    pub prepotential: String,
    /// Centered box bounds [lo, hi] on each real coordinate.
    #[serde(rename = "box")]
    pub box_bounds: [f64; 2],
    /// Grid points per axis for box sups and finite differences.
    pub nx: usize,
    pub haar_grid: GridSpec,
    /// [abs, rel] tolerances of the transport integrator.
    pub ode_tol: [f64; 2],
    pub ode_h_init: f64,
    pub ode_safety: f64,
    /// Finite-difference spacing of the differential-identity suite.
    pub fd_h: f64,
    pub tol_profile: String,
    pub seed: u64,
    /// Number of (x, U) residual samples.
    pub samples: usize,
    /// Reject sample harmonics with |u²₋| below this.
    pub cell_margin: f64,
    /// "ode", "poly" or "auto" (poly when available, ode otherwise).
    pub realization: String,
    pub t_cap: f64,
    /// Worker threads (0 = all available); the HARMONIKOS_THREADS
    /// environment variable caps the effective value.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algebra: "sl2".into(),
            prepotential: "T1*xm1*xm2".into(),
            box_bounds: [-1.0, 1.0],
            nx: 5,
            haar_grid: GridSpec::Euler { n: [12, 12, 12] },
            ode_tol: [harmonikos_core::tol::ODE_ABS, harmonikos_core::tol::ODE_REL],
            ode_h_init: 0.1,
            ode_safety: 0.9,
            fd_h: 0.05,
            tol_profile: "default".into(),
            seed: 7,
            samples: 100,
            cell_margin: 0.15,
            realization: "ode".into(),
            t_cap: 4.0,
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.box_bounds[0] >= self.box_bounds[1] {
            bail!("box bounds must satisfy lo < hi");
        }
        if (self.box_bounds[0] + self.box_bounds[1]).abs() > 1e-12 {
            bail!("box must be centered (lo = -hi); got {:?}", self.box_bounds);
        }
        if self.nx == 0 || self.samples == 0 {
            bail!("nx and samples must be positive");
        }
        if self.ode_tol[0] <= 0.0 || self.ode_tol[1] <= 0.0 || self.fd_h <= 0.0 {
            bail!("tolerances and fd_h must be positive");
        }
        if !(0.0..1.0).contains(&self.cell_margin) {
            bail!("cell_margin must lie in [0, 1)");
        }
        if TolProfile::by_name(&self.tol_profile).is_none() {
            bail!("unknown tolerance profile `{}`", self.tol_profile);
        }
        if !matches!(self.realization.as_str(), "ode" | "poly" | "auto") {
            bail!("realization must be ode, poly or auto");
        }
        Ok(())
    }

    pub fn half_width(&self) -> f64 {
        self.box_bounds[1]
    }

    pub fn tol(&self) -> TolProfile {
        TolProfile::by_name(&self.tol_profile).expect("validated")
    }

    pub fn bridge_options(&self) -> BridgeOptions {
        BridgeOptions {
            ode: OdeOptions {
                abs_tol: self.ode_tol[0],
                rel_tol: self.ode_tol[1],
                h_init: self.ode_h_init,
                safety: self.ode_safety,
                max_steps: 100_000,
            },
            cell_margin: 1e-6,
            t_cap: self.t_cap,
        }
    }
}

/// Structure-constant file schema.
#[derive(Deserialize)]
struct AlgebraFile {
    name: String,
    dim: usize,
    /// Sparse entries [i, j, k, re, im] with 0-based indices.
    f: Vec<(usize, usize, usize, f64, f64)>,
    compact_flags: Vec<bool>,
    ip: Vec<Vec<f64>>,
}

pub fn load_algebra(selector: &str) -> Result<BasisRef> {
    match selector {
        "u1" => Ok(harmonikos_core::lie::u1()),
        "sl2" => Ok(harmonikos_core::lie::sl2()),
        other => {
            let path = other
                .strip_prefix("file:")
                .ok_or_else(|| anyhow!("unknown algebra `{other}` (use u1, sl2 or file:<path>)"))?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading algebra file {path}"))?;
            let spec: AlgebraFile =
                serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
            let d = spec.dim;
            let mut f = vec![C64::default(); d * d * d];
            for (i, j, k, re, im) in spec.f {
                if i >= d || j >= d || k >= d {
                    bail!("structure-constant index out of range in {path}");
                }
                f[(i * d + j) * d + k] = C64::new(re, im);
            }
            let mut ip = Vec::with_capacity(d * d);
            for row in &spec.ip {
                if row.len() != d {
                    bail!("inner-product matrix must be {d}x{d}");
                }
                ip.extend_from_slice(row);
            }
            AlgebraBasis::new(&spec.name, d, f, spec.compact_flags, ip, Vec::<Mat<C64>>::new())
                .map_err(|e| anyhow!("invalid algebra data: {e}"))
        }
    }
}

pub fn load_prepotential_text(source: &str) -> Result<String> {
    if let Some(path) = source.strip_prefix('@') {
        Ok(std::fs::read_to_string(path)
            .with_context(|| format!("reading prepotential file {path}"))?
            .trim()
            .to_string())
    } else {
        Ok(source.to_string())
    }
}

/// Resolved runtime objects of a configuration.
pub struct Resolved {
    pub config: RunConfig,
    pub basis: BasisRef,
    pub field: DslField,
    pub tol: TolProfile,
}

impl Resolved {
    pub fn from_config(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let basis = load_algebra(&config.algebra)?;
        let text = load_prepotential_text(&config.prepotential)?;
        let field = make_prepotential(&text, basis.clone(), 1)
            .map_err(|e| anyhow!("invalid prepotential: {e}"))?;
        let tol = config.tol();
        Ok(Resolved { config, basis, field, tol })
    }

    /// Build the gauge data for the configured realization. "auto" prefers
    /// the closed form and falls back to the integrator.
    pub fn gauge_data(&self) -> Result<GaugeData> {
        let opts = self.config.bridge_options();
        match self.config.realization.as_str() {
            "poly" => GaugeData::reconstruct_poly(&self.field)
                .map_err(|e| anyhow!("closed-form reconstruction unavailable: {e}")),
            "ode" => GaugeData::reconstruct_ode(&self.field, opts)
                .map_err(|e| anyhow!("reconstruction failed: {e}")),
            _ => match GaugeData::reconstruct_poly(&self.field) {
                Ok(gd) => Ok(gd),
                Err(_) => GaugeData::reconstruct_ode(&self.field, opts)
                    .map_err(|e| anyhow!("reconstruction failed: {e}")),
            },
        }
    }
}

