// Temporary diagnostic: per-trial breakdown of fig5 at one PNR.
use irs_cascade::channel::ChannelRealization;
use irs_cascade::pipeline::run_two_stage_ula;
use irs_cascade_sim::config::fig5;
use irs_cascade_sim::metrics::compute_metrics;
use irs_cascade_sim::runner::derive_rng;

fn main() {
    let config = fig5();
    let pnr_db: f64 = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(30.0);
    let sigma = 10f64.powf(-pnr_db / 20.0);
    let system = config.system_config(true).unwrap();
    let mut rows: Vec<(usize, f64, f64, f64, f64, usize, f64, f64)> = Vec::new();
    for trial in 0..100usize {
        let mut channel_rng = derive_rng(config.sweep.seed, &[0, trial as u64]);
        let paths = {
            // mirror runner::draw_paths with min separation 0.15
            let bounds = config.angle_bounds();
            let mut out = None;
            for _ in 0..10000 {
                let p = irs_cascade::channel::sample_paths(
                    1, 2, &bounds, system.irs.kind, &mut channel_rng,
                );
                let t = &p.theta_r;
                let sep = (t[0] - t[1]).abs();
                let psis: Vec<f64> = match &p.irs {
                    irs_cascade::channel::IrsAngles::Ula { aoa, aod } => aod
                        .iter()
                        .map(|d| irs_cascade::geometry::wrap_diff(d - aoa[0], 0.5))
                        .collect(),
                    _ => unreachable!(),
                };
                let psep = (psis[0] - psis[1]).abs();
                if sep >= 0.15 && psep >= 0.15 {
                    out = Some(p);
                    break;
                }
            }
            out.unwrap()
        };
        let channel =
            ChannelRealization::synthesize(paths, system.tx, system.irs, system.rx).unwrap();
        let mut rng = derive_rng(config.sweep.seed, &[1, 0, trial as u64]);
        let result = run_two_stage_ula(&system, &channel, sigma, &mut rng).unwrap();
        if result.failed() {
            println!("trial {trial}: FAILED {:?}", result.diagnostics.failures);
            continue;
        }
        let m = compute_metrics(&channel, &result);
        let h = channel.cascade();
        rows.push((
            trial,
            m.nmse_h,
            m.mse_theta_r,
            m.mse_irs,
            m.mse_gamma,
            result.diagnostics.imc_rank,
            result.diagnostics.omp_residual,
            h.norm_squared(),
        ));
    }
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("worst 12 by NMSE at PNR {pnr_db}:");
    println!("trial  nmse      mse_thR   mse_irs   mse_gam   rank omp_res  |H|^2");
    for r in rows.iter().take(12) {
        println!(
            "{:>5}  {:<9.2e} {:<9.2e} {:<9.2e} {:<9.2e} {:<4} {:<8.2e} {:<9.3e}",
            r.0, r.1, r.2, r.3, r.4, r.5, r.6, r.7
        );
    }
    let mean_nmse: f64 = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    let median = rows[rows.len() / 2].1;
    println!(
        "mean NMSE {:.3e} ({:.2} dB), median {:.3e} ({:.2} dB)",
        mean_nmse,
        10.0 * mean_nmse.log10(),
        median,
        10.0 * median.log10()
    );
}
