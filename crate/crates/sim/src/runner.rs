//! Seeded Monte Carlo execution.
//!
//! Every trial derives its random streams from (master seed, PNR index,
//! trial index, stream tag), so results are a pure function of the
//! configuration regardless of thread count or execution order. The channel
//! stream omits the PNR index: all PNR points see the same channel ensemble,
//! which pairs the sweep points and keeps the reported curves comparable.
//! The two proposed variants share one training stream (their schedules and
//! noise coincide); the LS baseline draws its own.

use std::time::Instant;

use anyhow::Context;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use irs_cascade::channel::{ChannelRealization, PathSet};
use irs_cascade::geometry::ArrayKind;
use irs_cascade::pipeline::{ls_baseline, run_two_stage_ula, run_two_stage_upa};

use crate::config::{EstimatorKind, SimConfig};
use crate::metrics::{channel_nmse, compute_metrics, MetricsRecord, TrialMetrics};

const CHANNEL_STREAM: u64 = 0;
const PROPOSED_STREAM: u64 = 1;
const LS_STREAM: u64 = 2;

fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    *state = z ^ (z >> 31);
}

/// Deterministic stream derivation: hash the parts into a 256-bit seed.
pub fn derive_rng(master: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut state = master ^ 0x6a09_e667_f3bc_c908;
    splitmix64(&mut state);
    for &p in parts {
        state ^= p;
        splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        splitmix64(&mut state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

fn stream_tag(estimator: EstimatorKind) -> u64 {
    match estimator {
        EstimatorKind::Proposed | EstimatorKind::ProposedNoFbss => PROPOSED_STREAM,
        EstimatorKind::Ls => LS_STREAM,
    }
}

fn draw_paths(config: &SimConfig, kind: ArrayKind, rng: &mut ChaCha8Rng) -> PathSet {
    let bounds = config.angle_bounds();
    let (l_f, l_g) = (config.paths.l_f, config.paths.l_g);
    if config.paths.min_separation <= 0.0 {
        return irs_cascade::channel::sample_paths(l_f, l_g, &bounds, kind, rng);
    }
    // Rejection sampling; give up on the constraint after a generous budget
    // rather than looping forever on infeasible settings.
    let mut last = None;
    for _ in 0..10_000 {
        let p = irs_cascade::channel::sample_paths(l_f, l_g, &bounds, kind, rng);
        if paths_separated(&p, config.paths.min_separation) {
            return p;
        }
        last = Some(p);
    }
    last.expect("at least one draw")
}

fn paths_separated(p: &PathSet, min_sep: f64) -> bool {
    use irs_cascade::channel::IrsAngles;
    use irs_cascade::geometry::{wrap_diff, HALF_WAVELENGTH};
    let ok_group = |v: &[f64]| {
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if (v[i] - v[j]).abs() < min_sep {
                    return false;
                }
            }
        }
        true
    };
    let mut ok = ok_group(&p.phi_t) && ok_group(&p.theta_r);
    match &p.irs {
        IrsAngles::Ula { aoa, aod } => {
            let mut psi = Vec::new();
            for &a in aoa {
                for &d in aod {
                    psi.push(wrap_diff(d - a, HALF_WAVELENGTH));
                }
            }
            ok &= ok_group(&psi);
        }
        IrsAngles::Upa { aoa, aod } => {
            let mut us = Vec::new();
            let mut vs = Vec::new();
            for a in aoa {
                for d in aod {
                    us.push(wrap_diff(d.u - a.u, HALF_WAVELENGTH));
                    vs.push(wrap_diff(d.v - a.v, HALF_WAVELENGTH));
                }
            }
            ok &= ok_group(&us) && ok_group(&vs);
        }
    }
    ok
}

/// One estimator's outcome on one trial.
struct TrialOutcome {
    metrics: Option<TrialMetrics>,
    nmse_only: Option<f64>,
    failed: bool,
    runtime_ms: f64,
}

fn run_estimator(
    config: &SimConfig,
    estimator: EstimatorKind,
    channel: &ChannelRealization,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> anyhow::Result<TrialOutcome> {
    let started = Instant::now();
    let outcome = match estimator {
        EstimatorKind::Proposed | EstimatorKind::ProposedNoFbss => {
            let system = config.system_config(estimator == EstimatorKind::Proposed)?;
            let result = match system.irs.kind {
                ArrayKind::Ula => run_two_stage_ula(&system, channel, sigma, rng)?,
                ArrayKind::Upa { .. } => run_two_stage_upa(&system, channel, sigma, rng)?,
            };
            if result.failed() {
                TrialOutcome {
                    metrics: None,
                    nmse_only: None,
                    failed: true,
                    runtime_ms: 0.0,
                }
            } else {
                TrialOutcome {
                    metrics: Some(compute_metrics(channel, &result)),
                    nmse_only: None,
                    failed: false,
                    runtime_ms: 0.0,
                }
            }
        }
        EstimatorKind::Ls => {
            let system = config.system_config(true)?;
            let ls = ls_baseline(&system, channel, sigma, rng)?;
            TrialOutcome {
                metrics: None,
                nmse_only: Some(channel_nmse(channel, &ls.h_hat)),
                failed: false,
                runtime_ms: 0.0,
            }
        }
    };
    Ok(TrialOutcome { runtime_ms: started.elapsed().as_secs_f64() * 1e3, ..outcome })
}

/// Run the full sweep: every PNR × trial × estimator, trials in parallel,
/// aggregation in trial order.
pub fn run_monte_carlo(config: &SimConfig) -> anyhow::Result<Vec<MetricsRecord>> {
    config.validate()?;
    let kind = config.system_config(true)?.irs.kind;
    let seed = config.sweep.seed;
    let trials = config.sweep.trials;
    let mut records = Vec::new();

    for (pnr_idx, &pnr_db) in config.sweep.pnr_db.iter().enumerate() {
        let sigma = 10f64.powf(-pnr_db / 20.0);
        let outcomes: Vec<Vec<TrialOutcome>> = (0..trials)
            .into_par_iter()
            .map(|trial| -> anyhow::Result<Vec<TrialOutcome>> {
                let mut channel_rng =
                    derive_rng(seed, &[CHANNEL_STREAM, trial as u64]);
                let paths = draw_paths(config, kind, &mut channel_rng);
                let system = config.system_config(true)?;
                let channel =
                    ChannelRealization::synthesize(paths, system.tx, system.irs, system.rx)?;
                config
                    .estimators
                    .iter()
                    .map(|&estimator| {
                        let mut rng = derive_rng(
                            seed,
                            &[stream_tag(estimator), pnr_idx as u64, trial as u64],
                        );
                        run_estimator(config, estimator, &channel, sigma, &mut rng)
                    })
                    .collect()
            })
            .collect::<anyhow::Result<_>>()
            .with_context(|| format!("sweep point {pnr_db} dB"))?;

        for (e_idx, &estimator) in config.estimators.iter().enumerate() {
            records.push(aggregate(
                estimator,
                pnr_db,
                trials,
                outcomes.iter().map(|per_trial| &per_trial[e_idx]),
            ));
        }
    }
    Ok(records)
}

fn aggregate<'a>(
    estimator: EstimatorKind,
    pnr_db: f64,
    trials: usize,
    outcomes: impl Iterator<Item = &'a TrialOutcome>,
) -> MetricsRecord {
    let mut n_ok = 0usize;
    let mut failures = 0usize;
    let mut sum_theta = 0.0;
    let mut sum_phi = 0.0;
    let mut sum_irs = 0.0;
    let mut sum_gamma = 0.0;
    let mut sum_nmse = 0.0;
    let mut n_nmse = 0usize;
    let mut runtime = 0.0;
    for outcome in outcomes {
        runtime += outcome.runtime_ms;
        if outcome.failed {
            failures += 1;
            continue;
        }
        if let Some(m) = &outcome.metrics {
            n_ok += 1;
            sum_theta += m.mse_theta_r;
            sum_phi += m.mse_phi_t;
            sum_irs += m.mse_irs;
            sum_gamma += m.mse_gamma;
            sum_nmse += m.nmse_h;
            n_nmse += 1;
        } else if let Some(nmse) = outcome.nmse_only {
            sum_nmse += nmse;
            n_nmse += 1;
        }
    }
    let mean = |sum: f64, n: usize| if n > 0 { Some(sum / n as f64) } else { None };
    let angle_metrics = matches!(
        estimator,
        EstimatorKind::Proposed | EstimatorKind::ProposedNoFbss
    );
    MetricsRecord {
        estimator: estimator.label().to_string(),
        pnr_db,
        mse_theta_r: if angle_metrics { mean(sum_theta, n_ok) } else { None },
        mse_phi_t: if angle_metrics { mean(sum_phi, n_ok) } else { None },
        mse_irs: if angle_metrics { mean(sum_irs, n_ok) } else { None },
        mse_gamma: if angle_metrics { mean(sum_gamma, n_ok) } else { None },
        nmse_h: mean(sum_nmse, n_nmse),
        failure_rate: failures as f64 / trials as f64,
        trials,
        failures,
        mean_runtime_ms: runtime / trials as f64,
    }
}
