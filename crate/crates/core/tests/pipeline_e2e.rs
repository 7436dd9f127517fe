//! End-to-end pipeline checks on noise-free channels: with exact
//! observations the full two-stage chain must reproduce angles and the
//! cascaded channel to numerical accuracy.

use irs_cascade::channel::{
    composite_atoms, sample_paths, AngleBounds, ChannelRealization, IrsAngles, IrsCoord, PathSet,
};
use irs_cascade::frontend::IrsSampling;
use irs_cascade::geometry::{wrap_diff, wrap_diff_distance, ArrayGeometry, ArrayKind, HALF_WAVELENGTH};
use irs_cascade::pipeline::{ls_baseline, run_two_stage_ula, run_two_stage_upa, SystemConfig};
use irs_cascade::sparse::{match_atoms, IrsEstimates};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fig5_config() -> SystemConfig {
    SystemConfig {
        tx: ArrayGeometry::ula(16, HALF_WAVELENGTH).unwrap(),
        rx: ArrayGeometry::ula(16, HALF_WAVELENGTH).unwrap(),
        irs: ArrayGeometry::ula(32, HALF_WAVELENGTH).unwrap(),
        q_t: 2,
        q_r: 2,
        l_f: 1,
        l_g: 2,
        s: 64,
        d: 16,
        irs_sampling: IrsSampling::UlaPrefix,
        hybrid_iters: 20,
        mu_scale: 1.0,
        use_fbss: true,
    }
}

fn separated(values: &[f64], min_sep: f64) -> bool {
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            if (values[i] - values[j]).abs() < min_sep {
                return false;
            }
        }
    }
    true
}

fn well_separated_paths(
    l_f: usize,
    l_g: usize,
    min_sep: f64,
    kind: ArrayKind,
    rng: &mut ChaCha8Rng,
) -> PathSet {
    loop {
        let p = sample_paths(l_f, l_g, &AngleBounds::default(), kind, rng);
        let mut ok = separated(&p.phi_t, min_sep) && separated(&p.theta_r, min_sep);
        match &p.irs {
            IrsAngles::Ula { aoa, aod } => {
                let mut psi = Vec::new();
                for &a in aoa {
                    for &d in aod {
                        psi.push(wrap_diff(d - a, HALF_WAVELENGTH));
                    }
                }
                ok &= separated(&psi, min_sep);
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
                ok &= separated(&us, min_sep) && separated(&vs, min_sep);
            }
        }
        if ok {
            return p;
        }
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn noiseless_ula_pipeline_recovers_everything() {
    let config = fig5_config();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let paths =
            well_separated_paths(config.l_f, config.l_g, 0.15, config.irs.kind, &mut rng);
        let channel =
            ChannelRealization::synthesize(paths, config.tx, config.irs, config.rx).unwrap();
        let result = run_two_stage_ula(&config, &channel, 0.0, &mut rng).unwrap();
        assert!(!result.failed(), "seed {seed}: {:?}", result.diagnostics);

        let theta_err = max_abs_diff(&result.theta_r_hat, &sorted(channel.paths.theta_r.clone()));
        let phi_err = max_abs_diff(&result.phi_t_hat, &sorted(channel.paths.phi_t.clone()));
        assert!(theta_err < 1e-6, "seed {seed}: θ error {theta_err:.2e}");
        assert!(phi_err < 1e-6, "seed {seed}: φ error {phi_err:.2e}");

        let h = channel.cascade();
        let nmse = (&result.h_hat - &h).norm_squared() / h.norm_squared();
        assert!(nmse <= 1e-6, "seed {seed}: NMSE {nmse:.2e}");

        // IRS coordinates via atom alignment against the ground truth.
        let truth = composite_atoms(&channel.paths, &channel.tx, &channel.irs, &channel.rx);
        let pairs = match_atoms(&truth, &result.atoms, HALF_WAVELENGTH);
        assert_eq!(pairs.len(), 2);
        for &(t, e) in &pairs {
            let (IrsCoord::Psi(pt), IrsCoord::Psi(pe)) = (truth[t].irs, result.atoms[e].irs)
            else {
                panic!("coordinate kind mismatch")
            };
            let d = wrap_diff_distance(pt, pe, HALF_WAVELENGTH).abs();
            assert!(d < 1e-4, "seed {seed}: ψ error {d:.2e}");
            let gain_err = (truth[t].gain - result.atoms[e].gain).norm() / truth[t].gain.norm();
            assert!(gain_err < 1e-3, "seed {seed}: gain error {gain_err:.2e}");
        }
        assert_eq!(result.overhead, 80);
    }
}

#[test]
fn noiseless_upa_pipeline_recovers_uv() {
    let config = SystemConfig {
        tx: ArrayGeometry::ula(16, HALF_WAVELENGTH).unwrap(),
        rx: ArrayGeometry::ula(16, HALF_WAVELENGTH).unwrap(),
        irs: ArrayGeometry::upa(8, 8, HALF_WAVELENGTH).unwrap(),
        q_t: 4,
        q_r: 4,
        l_f: 2,
        l_g: 2,
        s: 64,
        d: 15,
        irs_sampling: IrsSampling::LShaped { j_y: 1, j_z: 1 },
        hybrid_iters: 20,
        mu_scale: 1.0,
        use_fbss: true,
    };
    config.validate().unwrap();
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let paths =
            well_separated_paths(config.l_f, config.l_g, 0.2, config.irs.kind, &mut rng);
        let channel =
            ChannelRealization::synthesize(paths, config.tx, config.irs, config.rx).unwrap();
        let result = run_two_stage_upa(&config, &channel, 0.0, &mut rng).unwrap();
        assert!(!result.failed(), "seed {seed}: {:?}", result.diagnostics);

        // u/v estimates against the wrapped ground-truth differences.
        let truth = composite_atoms(&channel.paths, &channel.tx, &channel.irs, &channel.rx);
        let mut want_u: Vec<f64> = Vec::new();
        let mut want_v: Vec<f64> = Vec::new();
        for atom in &truth {
            let IrsCoord::Uv(uv) = atom.irs else { panic!() };
            want_u.push(uv.u);
            want_v.push(uv.v);
        }
        let IrsEstimates::Upa { u, v } = &result.irs_hat else { panic!() };
        let u_err = max_abs_diff(u, &sorted(want_u));
        let v_err = max_abs_diff(v, &sorted(want_v));
        assert!(u_err < 1e-4, "seed {seed}: u error {u_err:.2e}");
        assert!(v_err < 1e-4, "seed {seed}: v error {v_err:.2e}");

        let h = channel.cascade();
        let nmse = (&result.h_hat - &h).norm_squared() / h.norm_squared();
        assert!(nmse <= 1e-5, "seed {seed}: NMSE {nmse:.2e}");
        assert_eq!(result.overhead, 64 + 15 * 2);
    }
}

#[test]
fn ls_baseline_exact_in_noise_free_case() {
    let config = fig5_config();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let paths = sample_paths(
        config.l_f,
        config.l_g,
        &AngleBounds::default(),
        config.irs.kind,
        &mut rng,
    );
    let channel =
        ChannelRealization::synthesize(paths, config.tx, config.irs, config.rx).unwrap();
    let ls = ls_baseline(&config, &channel, 0.0, &mut rng).unwrap();
    let h = channel.cascade();
    let rel = (&ls.h_hat - &h).norm() / h.norm();
    assert!(rel <= 1e-9, "LS relative error {rel:.2e}");
    assert_eq!(ls.overhead, 4096);
}

#[test]
fn pipeline_is_deterministic_for_fixed_seed() {
    let config = fig5_config();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let paths = sample_paths(
            config.l_f,
            config.l_g,
            &AngleBounds::default(),
            config.irs.kind,
            &mut rng,
        );
        let channel =
            ChannelRealization::synthesize(paths, config.tx, config.irs, config.rx).unwrap();
        run_two_stage_ula(&config, &channel, 0.01, &mut rng).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.h_hat, b.h_hat);
    assert_eq!(a.theta_r_hat, b.theta_r_hat);
}
