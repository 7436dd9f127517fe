//! Error metrics: per-trial figures and their sweep-level aggregation.

use serde::{Deserialize, Serialize};

use irs_cascade::channel::{composite_atoms, ChannelRealization, IrsCoord};
use irs_cascade::geometry::wrap_diff_distance;
use irs_cascade::pipeline::EstimationResult;
use irs_cascade::sparse::match_atoms;
use irs_cascade::CMat;

/// Error figures of one successful trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    /// `‖cos θ_R − cos θ̂_R‖² / L_G` on sorted cosines.
    pub mse_theta_r: f64,
    /// `‖cos φ_T − cos φ̂_T‖² / L_F` on sorted cosines.
    pub mse_phi_t: f64,
    /// IRS coordinate MSE over aligned atoms (mean of the u and v figures
    /// for a planar IRS), measured in the wrapped difference domain.
    pub mse_irs: f64,
    /// Split u/v coordinate MSEs (planar IRS only).
    pub mse_irs_uv: Option<(f64, f64)>,
    /// Composite gain MSE over aligned atoms, `‖γ − γ̂‖² / (L_F·L_G)`.
    pub mse_gamma: f64,
    /// `‖H − Ĥ‖_F² / ‖H‖_F²`.
    pub nmse_h: f64,
}

fn sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values
}

fn sorted_sq_error(truth: &[f64], estimate: &[f64]) -> f64 {
    let t = sorted(truth.to_vec());
    let e = sorted(estimate.to_vec());
    t.iter().zip(&e).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// NMSE of a bare channel estimate (used for the LS baseline, which carries
/// no angle information).
pub fn channel_nmse(channel: &ChannelRealization, h_hat: &CMat) -> f64 {
    let h = channel.cascade();
    (h_hat - &h).norm_squared() / h.norm_squared()
}

/// Full per-trial metrics of a two-stage estimate against the ground truth.
///
/// Outer angles compare sorted cosines; IRS coordinates and gains compare
/// aligned atoms, the alignment being nearest-neighbor in angle space.
pub fn compute_metrics(channel: &ChannelRealization, result: &EstimationResult) -> TrialMetrics {
    let l_f = channel.paths.l_f();
    let l_g = channel.paths.l_g();
    let l_total = (l_f * l_g) as f64;
    let spacing = channel.irs.spacing;

    let mse_theta_r =
        sorted_sq_error(&channel.paths.theta_r, &result.theta_r_hat) / l_g as f64;
    let mse_phi_t = sorted_sq_error(&channel.paths.phi_t, &result.phi_t_hat) / l_f as f64;

    let truth = composite_atoms(&channel.paths, &channel.tx, &channel.irs, &channel.rx);
    let pairs = match_atoms(&truth, &result.atoms, spacing);
    let mut irs_sq = 0.0;
    let mut u_sq = 0.0;
    let mut v_sq = 0.0;
    let mut gamma_sq = 0.0;
    let mut planar = false;
    for &(t, e) in &pairs {
        match (&truth[t].irs, &result.atoms[e].irs) {
            (IrsCoord::Psi(a), IrsCoord::Psi(b)) => {
                let d = wrap_diff_distance(*a, *b, spacing);
                irs_sq += d * d;
            }
            (IrsCoord::Uv(a), IrsCoord::Uv(b)) => {
                planar = true;
                let du = wrap_diff_distance(a.u, b.u, spacing);
                let dv = wrap_diff_distance(a.v, b.v, spacing);
                u_sq += du * du;
                v_sq += dv * dv;
            }
            _ => {}
        }
        gamma_sq += (truth[t].gain - result.atoms[e].gain).norm_sqr();
    }
    let (mse_irs, mse_irs_uv) = if planar {
        let u = u_sq / l_total;
        let v = v_sq / l_total;
        ((u + v) / 2.0, Some((u, v)))
    } else {
        (irs_sq / l_total, None)
    };

    TrialMetrics {
        mse_theta_r,
        mse_phi_t,
        mse_irs,
        mse_irs_uv,
        mse_gamma: gamma_sq / l_total,
        nmse_h: channel_nmse(channel, &result.h_hat),
    }
}

/// Aggregated metrics of one (estimator, PNR) cell.
///
/// Angle and gain figures are means over the successful trials and absent
/// when the estimator does not produce them (LS) or no trial succeeded.
/// `mean_runtime_ms` is measured wall time; it is intentionally not part of
/// the serialized schema so that emitted files are a pure function of
/// (config, seed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub estimator: String,
    pub pnr_db: f64,
    pub mse_theta_r: Option<f64>,
    pub mse_phi_t: Option<f64>,
    pub mse_irs: Option<f64>,
    pub mse_gamma: Option<f64>,
    pub nmse_h: Option<f64>,
    pub failure_rate: f64,
    pub trials: usize,
    pub failures: usize,
    #[serde(skip)]
    pub mean_runtime_ms: f64,
}

impl PartialEq for MetricsRecord {
    /// Identity is the emitted content; measured runtime is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.estimator == other.estimator
            && self.pnr_db == other.pnr_db
            && self.mse_theta_r == other.mse_theta_r
            && self.mse_phi_t == other.mse_phi_t
            && self.mse_irs == other.mse_irs
            && self.mse_gamma == other.mse_gamma
            && self.nmse_h == other.nmse_h
            && self.failure_rate == other.failure_rate
            && self.trials == other.trials
            && self.failures == other.failures
    }
}
