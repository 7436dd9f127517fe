//! Sweep configuration: TOML sections, built-in presets and validation.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use irs_cascade::frontend::IrsSampling;
use irs_cascade::geometry::{ArrayGeometry, HALF_WAVELENGTH};
use irs_cascade::pipeline::SystemConfig;

/// Which estimators a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Two-stage estimator with forward-backward spatial smoothing.
    Proposed,
    /// Two-stage estimator on the raw sample covariances.
    ProposedNoFbss,
    /// Exhaustive least-squares baseline.
    Ls,
}

impl EstimatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::ProposedNoFbss => "proposed_no_fbss",
            Self::Ls => "ls",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "proposed" => Ok(Self::Proposed),
            "proposed_no_fbss" => Ok(Self::ProposedNoFbss),
            "ls" => Ok(Self::Ls),
            other => bail!("unknown estimator '{other}' (expected proposed, proposed_no_fbss or ls)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// Transmit antennas.
    pub k: usize,
    /// Receive antennas.
    pub m: usize,
    /// IRS elements (`n_y·n_z` when planar).
    pub n: usize,
    /// Planar IRS grid; both or neither.
    pub n_y: Option<usize>,
    pub n_z: Option<usize>,
    pub q_t: usize,
    pub q_r: usize,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_spacing() -> f64 {
    HALF_WAVELENGTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    pub l_f: usize,
    pub l_g: usize,
    #[serde(default = "default_outer_bounds")]
    pub outer_bounds_deg: (f64, f64),
    #[serde(default = "default_azimuth_bounds")]
    pub azimuth_bounds_deg: (f64, f64),
    #[serde(default = "default_elevation_bounds")]
    pub elevation_bounds_deg: (f64, f64),
    /// Minimum pairwise separation of each cosine group; draws are rejected
    /// until satisfied. 0 disables the constraint.
    #[serde(default = "default_min_separation")]
    pub min_separation: f64,
}

fn default_outer_bounds() -> (f64, f64) {
    (30.0, 150.0)
}
fn default_azimuth_bounds() -> (f64, f64) {
    (-90.0, 90.0)
}
fn default_elevation_bounds() -> (f64, f64) {
    (30.0, 150.0)
}
fn default_min_separation() -> f64 {
    0.15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    /// Stage-1 training length in channel uses.
    pub s: usize,
    /// Stage-2 IRS sampling size.
    pub d: usize,
    /// L-shaped subarray arms (planar IRS only).
    pub j_y: Option<usize>,
    pub j_z: Option<usize>,
    #[serde(default = "default_hybrid_iters")]
    pub hybrid_iters: usize,
    /// Completion regularization scale c in μ = c·σ·√(S·Q_r).
    #[serde(default = "default_mu_scale")]
    pub mu_scale: f64,
}

fn default_hybrid_iters() -> usize {
    20
}
fn default_mu_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub pnr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// Full sweep definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub geometry: GeometrySection,
    pub paths: PathSection,
    pub training: TrainingSection,
    pub sweep: SweepSection,
    pub estimators: Vec<EstimatorKind>,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: Self = toml::from_str(text).context("parsing configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let g = &self.geometry;
        match (g.n_y, g.n_z) {
            (Some(ny), Some(nz)) => {
                if ny * nz != g.n {
                    bail!("planar IRS grid {ny}×{nz} does not match n = {}", g.n);
                }
                let (Some(j_y), Some(j_z)) = (self.training.j_y, self.training.j_z) else {
                    bail!("planar IRS needs j_y and j_z in [training]");
                };
                if j_y == 0 || j_y > nz || j_z == 0 || j_z > ny {
                    bail!("L-shape arms j_y = {j_y}, j_z = {j_z} outside the {ny}×{nz} grid");
                }
                let d = j_y * ny + j_z * nz - j_y * j_z;
                if d != self.training.d {
                    bail!(
                        "L-shape ({j_y}, {j_z}) switches on {d} elements but d = {}",
                        self.training.d
                    );
                }
            }
            (None, None) => {
                if self.training.j_y.is_some() || self.training.j_z.is_some() {
                    bail!("j_y/j_z are only meaningful for a planar IRS");
                }
            }
            _ => bail!("set both n_y and n_z or neither"),
        }
        if self.sweep.pnr_db.is_empty() {
            bail!("PNR grid is empty");
        }
        if self.sweep.trials == 0 {
            bail!("trial count must be positive");
        }
        if self.estimators.is_empty() {
            bail!("no estimators selected");
        }
        let (lo, hi) = self.paths.outer_bounds_deg;
        if !(0.0 < lo && lo < hi && hi < 180.0) {
            bail!("outer angle bounds must satisfy 0 < lo < hi < 180 degrees");
        }
        if self.paths.min_separation < 0.0 {
            bail!("min_separation must be nonnegative");
        }
        // The per-estimator geometry checks (S·Q_r, D bounds, RF chains).
        self.system_config(true)
            .and_then(|c| c.validate().map_err(anyhow::Error::from))
            .context("invalid system configuration")?;
        Ok(())
    }

    /// Core estimator configuration with the FBSS switch applied.
    pub fn system_config(&self, use_fbss: bool) -> anyhow::Result<SystemConfig> {
        let g = &self.geometry;
        let irs = match (g.n_y, g.n_z) {
            (Some(ny), Some(nz)) => ArrayGeometry::upa(ny, nz, g.spacing)?,
            _ => ArrayGeometry::ula(g.n, g.spacing)?,
        };
        let irs_sampling = match (self.training.j_y, self.training.j_z) {
            (Some(j_y), Some(j_z)) => IrsSampling::LShaped { j_y, j_z },
            _ => IrsSampling::UlaPrefix,
        };
        Ok(SystemConfig {
            tx: ArrayGeometry::ula(g.k, g.spacing)?,
            rx: ArrayGeometry::ula(g.m, g.spacing)?,
            irs,
            q_t: g.q_t,
            q_r: g.q_r,
            l_f: self.paths.l_f,
            l_g: self.paths.l_g,
            s: self.training.s,
            d: self.training.d,
            irs_sampling,
            hybrid_iters: self.training.hybrid_iters,
            mu_scale: self.training.mu_scale,
            use_fbss,
        })
    }

    pub fn angle_bounds(&self) -> irs_cascade::channel::AngleBounds {
        irs_cascade::channel::AngleBounds {
            outer: self.paths.outer_bounds_deg,
            azimuth: self.paths.azimuth_bounds_deg,
            elevation: self.paths.elevation_bounds_deg,
        }
    }

    /// Pilot overhead `S + D·L_F` of the two-stage estimator.
    pub fn training_overhead(&self) -> usize {
        self.training.s + self.training.d * self.paths.l_f
    }

    /// Pilot overhead `K·N·M/Q_r` of the LS baseline.
    pub fn ls_overhead(&self) -> usize {
        self.geometry.k * self.geometry.n * self.geometry.m / self.geometry.q_r
    }
}

/// Built-in sweep presets mirroring the three benchmark setups.
pub fn preset(name: &str) -> anyhow::Result<SimConfig> {
    match name {
        "fig5" => Ok(fig5()),
        "fig6" => Ok(fig6()),
        "fig7" => Ok(fig7()),
        other => bail!("unknown preset '{other}' (expected fig5, fig6 or fig7)"),
    }
}

/// ULA IRS, single TX-side path: K = M = 16, N = 32, Q = 2, S = 64, D = 16.
pub fn fig5() -> SimConfig {
    SimConfig {
        geometry: GeometrySection {
            k: 16,
            m: 16,
            n: 32,
            n_y: None,
            n_z: None,
            q_t: 2,
            q_r: 2,
            spacing: HALF_WAVELENGTH,
        },
        paths: PathSection {
            l_f: 1,
            l_g: 2,
            outer_bounds_deg: default_outer_bounds(),
            azimuth_bounds_deg: default_azimuth_bounds(),
            elevation_bounds_deg: default_elevation_bounds(),
            min_separation: default_min_separation(),
        },
        training: TrainingSection {
            s: 64,
            d: 16,
            j_y: None,
            j_z: None,
            hybrid_iters: default_hybrid_iters(),
            mu_scale: default_mu_scale(),
        },
        sweep: SweepSection { pnr_db: vec![0.0, 10.0, 20.0, 30.0], trials: 100, seed: 1 },
        estimators: vec![
            EstimatorKind::Proposed,
            EstimatorKind::ProposedNoFbss,
            EstimatorKind::Ls,
        ],
    }
}

/// Same system as `fig5` with two TX-side paths (T = 96).
pub fn fig6() -> SimConfig {
    let mut config = fig5();
    config.paths.l_f = 2;
    config
}

/// Planar 16×16 IRS with an L-shaped training subarray: K = M = 32, Q = 4,
/// S = 128, D = 31. The LS baseline (T = 65536) is not enabled by default;
/// add it with `--estimators`.
pub fn fig7() -> SimConfig {
    SimConfig {
        geometry: GeometrySection {
            k: 32,
            m: 32,
            n: 256,
            n_y: Some(16),
            n_z: Some(16),
            q_t: 4,
            q_r: 4,
            spacing: HALF_WAVELENGTH,
        },
        paths: PathSection {
            l_f: 2,
            l_g: 2,
            outer_bounds_deg: default_outer_bounds(),
            azimuth_bounds_deg: default_azimuth_bounds(),
            elevation_bounds_deg: default_elevation_bounds(),
            min_separation: default_min_separation(),
        },
        training: TrainingSection {
            s: 128,
            d: 31,
            j_y: Some(1),
            j_z: Some(1),
            hybrid_iters: default_hybrid_iters(),
            mu_scale: default_mu_scale(),
        },
        sweep: SweepSection { pnr_db: vec![0.0, 10.0, 20.0, 30.0], trials: 100, seed: 1 },
        estimators: vec![EstimatorKind::Proposed, EstimatorKind::ProposedNoFbss],
    }
}
