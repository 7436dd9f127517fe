//! Subspace spectrum estimation: sample covariance, forward-backward spatial
//! smoothing (FBSS) and root-MUSIC.
//!
//! The cascade estimator reuses one recipe three times: form a covariance
//! whose column space is spanned by steering vectors, restore the signal
//! subspace rank with FBSS when the underlying sources are coherent, then
//! root the noise-subspace polynomial instead of scanning a spectrum.

use alloc::{format, vec, vec::Vec};
use core::f64::consts::PI;

#[allow(unused_imports)] // float math via trait when built without std
use num_traits::Float;

use crate::error::CascadeError;
use crate::geometry::{wrap_diff, SubarraySelection};
use crate::linalg::{hermitian_eigen_sorted, polynomial_roots};
use crate::{C64, CMat, Result};

/// A Hermitian covariance estimate together with how it was produced.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub matrix: CMat,
    pub n_snapshots: usize,
    pub smoothed: bool,
    /// Effective array length the matrix refers to (subarray size after FBSS).
    pub subarray_len: usize,
}

impl CovarianceEstimate {
    pub fn new(matrix: CMat, n_snapshots: usize, smoothed: bool) -> Self {
        // Re-hermitize so rounding from the products cannot accumulate.
        let herm = (&matrix + matrix.adjoint()).map(|z| z * 0.5);
        let subarray_len = herm.nrows();
        Self { matrix: herm, n_snapshots, smoothed, subarray_len }
    }
}

/// Sample covariance of the columns: `(1/k)·X·X^H`.
pub fn column_scm(samples: &CMat) -> CovarianceEstimate {
    let k = samples.ncols();
    assert!(k >= 1, "need at least one snapshot column");
    let r = (samples * samples.adjoint()).map(|z| z / k as f64);
    CovarianceEstimate::new(r, k, false)
}

/// Covariance from the Gram form `(1/k)·X^H·X` of `k` row snapshots.
pub fn row_gram_covariance(samples: &CMat) -> CovarianceEstimate {
    let k = samples.nrows();
    assert!(k >= 1);
    let r = (samples.adjoint() * samples).map(|z| z / k as f64);
    CovarianceEstimate::new(r, k, false)
}

/// Forward-backward spatial smoothing for `l` coherent sources.
///
/// Averages the `U = l + 1` forward subarray blocks of size `S = n − l` along
/// the diagonal together with their exchanged conjugates:
/// `(1/2U)·Σ_u [R_u + J·R_u^*·J]`. Hermitian PSD in, Hermitian PSD out.
pub fn fbss(r: &CovarianceEstimate, l: usize) -> Result<CovarianceEstimate> {
    let n = r.matrix.nrows();
    if n <= l {
        return Err(CascadeError::domain(format!(
            "FBSS needs array length {n} > source count {l}"
        )));
    }
    let s = n - l;
    let u_count = l + 1;
    let mut out = CMat::zeros(s, s);
    for u in 0..u_count {
        for i in 0..s {
            for j in 0..s {
                // Forward block plus its exchanged conjugate (J R* J).
                out[(i, j)] += r.matrix[(u + i, u + j)]
                    + r.matrix[(u + s - 1 - i, u + s - 1 - j)].conj();
            }
        }
    }
    out /= C64::new(2.0 * u_count as f64, 0.0);
    Ok(CovarianceEstimate::new(out, r.n_snapshots, true))
}

/// Autocorrelation lags of the noise-subspace quadratic form:
/// `c_m = Σ_i C[i, i+m]` for `m = 0..S-1` (negative lags are conjugates).
fn noise_polynomial_lags(c: &CMat) -> Vec<C64> {
    let s = c.nrows();
    (0..s)
        .map(|m| (0..s - m).map(|i| c[(i, i + m)]).sum())
        .collect()
}

/// Null-spectrum value and first two derivatives at electrical angle θ.
fn spectrum_at(lags: &[C64], theta: f64) -> (f64, f64, f64) {
    let mut g = lags[0].re;
    let mut dg = 0.0;
    let mut ddg = 0.0;
    for (m, &c) in lags.iter().enumerate().skip(1) {
        let e = C64::from_polar(1.0, m as f64 * theta);
        let t = c * e;
        g += 2.0 * t.re;
        dg -= 2.0 * m as f64 * t.im;
        ddg -= 2.0 * (m * m) as f64 * t.re;
    }
    (g, dg, ddg)
}

/// A few guarded Newton steps on the unit circle toward the local minimum of
/// the null spectrum.
///
/// An exactly rank-deficient covariance puts double roots on the circle;
/// rounding splits them and can displace the root arguments by O(√ε).
/// Refining against the spectrum itself recovers the minimizer to full
/// precision.
fn polish_on_circle(lags: &[C64], mut theta: f64, s: usize) -> f64 {
    let max_step = PI / (2.0 * s as f64);
    let (mut g, _, _) = spectrum_at(lags, theta);
    for _ in 0..12 {
        let (_, dg, ddg) = spectrum_at(lags, theta);
        if ddg <= 0.0 {
            break;
        }
        let mut step = -dg / ddg;
        if step.abs() > max_step {
            step = max_step * step.signum();
        }
        let cand = theta + step;
        let (g_new, _, _) = spectrum_at(lags, cand);
        if g_new > g {
            break;
        }
        theta = cand;
        let done = step.abs() < 1e-15;
        g = g_new;
        if done {
            break;
        }
    }
    theta
}

/// Root-MUSIC estimate of `l` direction coordinates from a covariance.
///
/// Eigendecomposes the covariance, roots the degree-2(S−1) noise-subspace
/// polynomial, collapses the conjugate-reciprocal root pairs and keeps the
/// `l` pairs nearest the unit circle. Returned coordinates are root arguments
/// divided by `2π·spacing`, wrapped to the principal interval and sorted
/// ascending.
pub fn root_music(r: &CovarianceEstimate, l: usize, spacing: f64) -> Result<Vec<f64>> {
    let s = r.matrix.nrows();
    if s <= l {
        return Err(CascadeError::domain(format!(
            "root-MUSIC needs subarray size {s} > source count {l}"
        )));
    }
    if l == 0 {
        return Ok(Vec::new());
    }
    let (_, vectors) = hermitian_eigen_sorted(&r.matrix);
    // Noise subspace: eigenvectors of the s − l smallest eigenvalues.
    let e_n = vectors.columns(0, s - l);
    let c = &e_n * e_n.adjoint();
    let lags = noise_polynomial_lags(&c);

    // Coefficients over lags −(s−1)..(s−1), ascending degree.
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * s - 1];
    for m in 0..s {
        coeffs[s - 1 + m] = lags[m];
        coeffs[s - 1 - m] = lags[m].conj();
    }
    let roots = polynomial_roots(&coeffs)?;

    // Collapse conjugate-reciprocal pairs to one candidate each. Pairing uses
    // the product metric |conj(z_a)·z_b − 1|, exact for true pairs and finite
    // even for roots at the origin.
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| {
        let qa = (roots[a].norm() - 1.0).abs();
        let qb = (roots[b].norm() - 1.0).abs();
        qa.partial_cmp(&qb).unwrap()
    });
    struct Candidate {
        theta: f64,
        quality: f64,
        radius: f64,
    }
    let mut used = vec![false; roots.len()];
    let mut candidates: Vec<Candidate> = Vec::new();
    for &i in &order {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut partner: Option<usize> = None;
        let mut best = f64::INFINITY;
        for (j, z) in roots.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (roots[i].conj() * z - C64::new(1.0, 0.0)).norm();
            if d < best {
                best = d;
                partner = Some(j);
            }
        }
        let rep = match partner {
            Some(j) => {
                used[j] = true;
                // Prefer the member inside the unit circle.
                if roots[i].norm() <= roots[j].norm() { roots[i] } else { roots[j] }
            }
            None => roots[i],
        };
        let radius = rep.norm();
        if radius == 0.0 {
            continue; // origin roots carry no direction information
        }
        candidates.push(Candidate {
            theta: rep.arg(),
            quality: (radius - 1.0).abs(),
            radius,
        });
    }
    if candidates.len() < l {
        return Err(CascadeError::estimation(format!(
            "root deficit: {} usable roots for {} sources",
            candidates.len(),
            l
        )));
    }
    candidates.sort_by(|a, b| {
        a.quality
            .partial_cmp(&b.quality)
            .unwrap()
            .then(b.radius.partial_cmp(&a.radius).unwrap())
            .then(a.theta.partial_cmp(&b.theta).unwrap())
    });
    let mut coords: Vec<f64> = candidates[..l]
        .iter()
        .map(|cand| {
            let theta = polish_on_circle(&lags, cand.theta, s);
            wrap_diff(theta / (2.0 * PI * spacing), spacing)
        })
        .collect();
    coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(coords)
}

/// Stage-1 outer angle estimation from the recovered effective channel.
///
/// Receive AoA cosines come from the column covariance of `h0`, transmit AoD
/// cosines from the column covariance of `h0^H`. Returns `(θ_R, φ_T)`
/// cosines, each sorted ascending.
pub fn estimate_outer_angles(
    h0: &CMat,
    l_g: usize,
    l_f: usize,
    spacing: f64,
    use_fbss: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let theta_r = music_from_columns(h0, l_g, spacing, use_fbss)?;
    let phi_t = music_from_columns(&h0.adjoint(), l_f, spacing, use_fbss)?;
    Ok((theta_r, phi_t))
}

/// Deepest smoothing level that still leaves root-MUSIC a noise subspace:
/// `S = n − l_smooth > l` requires `l_smooth < n − l`. Paper-scale apertures
/// are unaffected; tight apertures degrade to partial smoothing (level 0 is
/// plain forward-backward averaging).
fn smoothing_level(n: usize, l: usize) -> usize {
    l.min(n.saturating_sub(l + 1))
}

fn smoothed(r: CovarianceEstimate, l: usize, use_fbss: bool) -> Result<CovarianceEstimate> {
    if use_fbss {
        fbss(&r, smoothing_level(r.matrix.nrows(), l))
    } else {
        Ok(r)
    }
}

fn music_from_columns(samples: &CMat, l: usize, spacing: f64, use_fbss: bool) -> Result<Vec<f64>> {
    let r = smoothed(column_scm(samples), l, use_fbss)?;
    root_music(&r, l, spacing)
}

/// Undo the DFT schedule on a stage-2 observation: `Z̃ = (1/D)·Y·Θ^H`.
///
/// Exact when the schedule satisfies `Θ·Θ^H = D·I`.
pub fn decode_stage2(y: &CMat, theta: &CMat) -> CMat {
    let d = theta.nrows();
    (y * theta.adjoint()).map(|z| z / d as f64)
}

/// IRS difference-coordinate estimation for a linear IRS.
///
/// The row space of `Z̃` is spanned by subarray steering vectors at the
/// composite coordinates, so `R = Z̃^H·Z̃/(L_F·L_G)` feeds the same
/// FBSS + root-MUSIC machinery. Returns `l_total` wrapped coordinates sorted
/// ascending.
pub fn estimate_irs_angles_ula(
    y: &CMat,
    theta: &CMat,
    l_total: usize,
    spacing: f64,
    use_fbss: bool,
) -> Result<Vec<f64>> {
    let d = theta.nrows();
    if d <= l_total {
        return Err(CascadeError::config(format!(
            "IRS angle estimation needs D = {d} > L_F·L_G = {l_total}"
        )));
    }
    let z_tilde = decode_stage2(y, theta);
    let r = smoothed(row_gram_covariance(&z_tilde), l_total, use_fbss)?;
    root_music(&r, l_total, spacing)
}

/// Separate u/v estimation for a planar IRS sampled by an L-shaped subarray.
///
/// Columns of `Z̃` belonging to each full grid row are stacked into a taller
/// matrix whose row space is spanned by y-axis steering vectors; the column
/// groups give the z-axis estimate. The outputs are sorted independently and
/// are not associated with each other.
pub fn estimate_irs_angles_upa(
    y: &CMat,
    theta: &CMat,
    selection: &SubarraySelection,
    l_total: usize,
    spacing: f64,
    use_fbss: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let z_tilde = decode_stage2(y, theta);
    if z_tilde.ncols() != selection.len() {
        return Err(CascadeError::config(
            "subarray selection does not match the observation width",
        ));
    }
    let u_hat = music_from_groups(
        &z_tilde,
        selection,
        &selection.row_groups,
        l_total,
        spacing,
        use_fbss,
    )?;
    let v_hat = music_from_groups(
        &z_tilde,
        selection,
        &selection.col_groups,
        l_total,
        spacing,
        use_fbss,
    )?;
    Ok((u_hat, v_hat))
}

fn music_from_groups(
    z_tilde: &CMat,
    selection: &SubarraySelection,
    groups: &[Vec<usize>],
    l_total: usize,
    spacing: f64,
    use_fbss: bool,
) -> Result<Vec<f64>> {
    let group_len = groups.first().map(|g| g.len()).unwrap_or(0);
    if group_len <= l_total {
        return Err(CascadeError::config(format!(
            "grid axis length {group_len} must exceed L_F·L_G = {l_total}"
        )));
    }
    let rows = z_tilde.nrows();
    let mut stacked = CMat::zeros(groups.len() * rows, group_len);
    for (b, group) in groups.iter().enumerate() {
        for (t, parent) in group.iter().enumerate() {
            let pos = selection
                .active_indices
                .binary_search(parent)
                .map_err(|_| CascadeError::config("group index not in the active set"))?;
            for r in 0..rows {
                stacked[(b * rows + r, t)] = z_tilde[(r, pos)];
            }
        }
    }
    let r = smoothed(row_gram_covariance(&stacked), l_total, use_fbss)?;
    root_music(&r, l_total, spacing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_paths, AngleBounds, ChannelRealization, IrsAngles, PathSet};
    use crate::geometry::{
        l_shaped_selection, response_matrix, ula_steering, upa_steering, ArrayGeometry, ArrayKind,
        HALF_WAVELENGTH,
    };
    use crate::linalg::{dft_matrix, standard_complex_gaussian};
    use crate::CVec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exact_covariance(cosines: &[f64], powers: &[f64], n: usize) -> CovarianceEstimate {
        let a = response_matrix(cosines, n, HALF_WAVELENGTH).unwrap();
        let p = CMat::from_fn(cosines.len(), cosines.len(), |i, j| {
            if i == j { C64::new(powers[i], 0.0) } else { C64::new(0.0, 0.0) }
        });
        CovarianceEstimate::new(&a * p * a.adjoint(), n, false)
    }

    #[test]
    fn scm_single_column_and_unitary() {
        let x = CVec::from_fn(5, |k, _| C64::new(k as f64, 1.0));
        let m = CMat::from_column_slice(5, 1, x.as_slice());
        let r = column_scm(&m);
        assert!((r.matrix.clone() - &x * x.adjoint()).norm() < 1e-12);
        let svd = r.matrix.svd(false, false);
        assert!(svd.singular_values[1] < 1e-12 * svd.singular_values[0]);

        let q = crate::linalg::unitary_dft(6);
        let r = column_scm(&q);
        assert!((r.matrix - CMat::identity(6, 6) / C64::new(6.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn scm_matches_outer_product_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = CMat::from_fn(8, 32, |_, _| standard_complex_gaussian(&mut rng));
        let r = column_scm(&x);
        let mut brute = CMat::zeros(8, 8);
        for k in 0..32 {
            let col = x.column(k);
            brute += &col * col.adjoint();
        }
        brute /= C64::new(32.0, 0.0);
        assert!((r.matrix - brute).norm() < 1e-12);
    }

    #[test]
    fn fbss_degenerate_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = CMat::from_fn(6, 6, |_, _| standard_complex_gaussian(&mut rng));
        let r = CovarianceEstimate::new(&a * a.adjoint(), 6, false);
        // L = 0: forward/backward average only, full size.
        let s0 = fbss(&r, 0).unwrap();
        assert_eq!(s0.matrix.nrows(), 6);
        let j = CMat::from_fn(6, 6, |i, k| {
            if i + k == 5 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let expect = (&r.matrix + &j * r.matrix.map(|z| z.conj()) * &j).map(|z| z * 0.5);
        assert!((s0.matrix - expect).norm() < 1e-12);

        let eye = CovarianceEstimate::new(CMat::identity(8, 8), 8, false);
        let s = fbss(&eye, 3).unwrap();
        assert_eq!(s.matrix.nrows(), 5);
        assert!((s.matrix - CMat::identity(5, 5)).norm() < 1e-12);

        assert!(fbss(&eye, 8).is_err());
    }

    #[test]
    fn fbss_restores_coherent_source_rank() {
        // Two fully coherent sources: identical gains on every snapshot.
        let n = 16;
        let a1 = ula_steering(0.4, n, HALF_WAVELENGTH).unwrap();
        let a2 = ula_steering(-0.4, n, HALF_WAVELENGTH).unwrap();
        let combined = a1 + a2;
        let r = CovarianceEstimate::new(&combined * combined.adjoint(), 1, false);
        let (pre_vals, _) = hermitian_eigen_sorted(&r.matrix);
        let pre_signal = pre_vals.iter().filter(|&&v| v > 1e-10 * pre_vals[n - 1]).count();
        assert_eq!(pre_signal, 1);

        let sm = fbss(&r, 2).unwrap();
        let s = sm.matrix.nrows();
        let (post_vals, _) = hermitian_eigen_sorted(&sm.matrix);
        assert!(
            post_vals[s - 2] > 10.0 * post_vals[s - 3].max(1e-300),
            "second eigenvalue did not separate: {post_vals:?}"
        );
        // Hermitian PSD is preserved.
        assert!(post_vals[0] > -1e-10 * post_vals[s - 1]);
    }

    #[test]
    fn forward_backward_subarray_identity() {
        // J (x^f_u)^* equals the backward subarray starting at offset l − u,
        // i.e. the (U−u)-th backward window, on raw snapshot data.
        let m = 9;
        let l = 2;
        let s = m - l;
        let u_count = l + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = CVec::from_fn(m, |_, _| standard_complex_gaussian(&mut rng));
        let forward = |u: usize| CVec::from_fn(s, |i, _| x[u + i]);
        let backward = |u: usize| CVec::from_fn(s, |i, _| x[m - 1 - u - i].conj());
        for u in 0..u_count {
            let xf = forward(u);
            let j_conj = CVec::from_fn(s, |i, _| xf[s - 1 - i].conj());
            let xb = backward(l - u);
            assert!((j_conj - xb).norm() < 1e-15);
        }
    }

    #[test]
    fn root_music_single_source_exact() {
        let r = exact_covariance(&[0.0], &[1.0], 8);
        let got = root_music(&r, 1, HALF_WAVELENGTH).unwrap();
        assert_eq!(got.len(), 1);
        assert!(got[0].abs() < 1e-10, "got {}", got[0]);
    }

    #[test]
    fn root_music_two_sources_noise_free() {
        let r = exact_covariance(&[-0.5, 0.5], &[1.0, 0.8], 10);
        let got = root_music(&r, 2, HALF_WAVELENGTH).unwrap();
        assert!((got[0] + 0.5).abs() < 1e-8, "{got:?}");
        assert!((got[1] - 0.5).abs() < 1e-8, "{got:?}");
    }

    #[test]
    fn root_music_scale_invariance_and_guards() {
        let r = exact_covariance(&[0.2, -0.7], &[1.0, 1.0], 9);
        let scaled = CovarianceEstimate::new(r.matrix.clone() * C64::new(37.0, 0.0), 9, false);
        let a = root_music(&r, 2, HALF_WAVELENGTH).unwrap();
        let b = root_music(&scaled, 2, HALF_WAVELENGTH).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(root_music(&exact_covariance(&[0.1], &[1.0], 3), 3, HALF_WAVELENGTH).is_err());
        assert_eq!(root_music(&r, 0, HALF_WAVELENGTH).unwrap().len(), 0);
    }

    #[test]
    fn root_music_unaffected_by_white_noise_floor() {
        // Subspace-exact covariance plus σ²I: estimates must not move.
        let r0 = exact_covariance(&[-0.35, 0.15, 0.6], &[1.0, 2.0, 0.5], 12);
        let shifted = CovarianceEstimate::new(
            r0.matrix.clone() + CMat::identity(12, 12) * C64::new(0.3, 0.0),
            12,
            false,
        );
        let got = root_music(&shifted, 3, HALF_WAVELENGTH).unwrap();
        for (g, e) in got.iter().zip([-0.35, 0.15, 0.6]) {
            assert!((g - e).abs() < 1e-8, "{got:?}");
        }
    }

    fn separated_paths(
        l_f: usize,
        l_g: usize,
        min_sep: f64,
        kind: ArrayKind,
        rng: &mut ChaCha8Rng,
    ) -> PathSet {
        loop {
            let p = sample_paths(l_f, l_g, &AngleBounds::default(), kind, rng);
            let mut ok = true;
            for group in [&p.phi_t, &p.theta_r] {
                for i in 0..group.len() {
                    for j in i + 1..group.len() {
                        ok &= (group[i] - group[j]).abs() >= min_sep;
                    }
                }
            }
            if let IrsAngles::Ula { aoa, aod } = &p.irs {
                let mut psis = Vec::new();
                for &a in aoa {
                    for &d in aod {
                        psis.push(wrap_diff(d - a, HALF_WAVELENGTH));
                    }
                }
                for i in 0..psis.len() {
                    for j in i + 1..psis.len() {
                        ok &= (psis[i] - psis[j]).abs() >= min_sep;
                    }
                }
            }
            if ok {
                return p;
            }
        }
    }

    #[test]
    fn outer_angles_noise_free_end_to_end() {
        let tx = ArrayGeometry::ula(12, HALF_WAVELENGTH).unwrap();
        let irs = ArrayGeometry::ula(16, HALF_WAVELENGTH).unwrap();
        let rx = ArrayGeometry::ula(12, HALF_WAVELENGTH).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let paths = separated_paths(2, 2, 0.15, irs.kind, &mut rng);
        let ch = ChannelRealization::synthesize(paths, tx, irs, rx).unwrap();
        let omega = CVec::from_fn(16, |_, _| {
            C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
        });
        let h0 = ch.effective(&omega);
        let (theta_r, phi_t) = estimate_outer_angles(&h0, 2, 2, HALF_WAVELENGTH, true).unwrap();
        let mut want_theta = ch.paths.theta_r.clone();
        want_theta.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want_phi = ch.paths.phi_t.clone();
        want_phi.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in theta_r.iter().zip(&want_theta) {
            assert!((g - w).abs() < 1e-6, "θ_R {theta_r:?} vs {want_theta:?}");
        }
        for (g, w) in phi_t.iter().zip(&want_phi) {
            assert!((g - w).abs() < 1e-6, "φ_T {phi_t:?} vs {want_phi:?}");
        }
    }

    #[test]
    fn outer_angles_perturbation_continuity() {
        let tx = ArrayGeometry::ula(10, HALF_WAVELENGTH).unwrap();
        let irs = ArrayGeometry::ula(12, HALF_WAVELENGTH).unwrap();
        let rx = ArrayGeometry::ula(10, HALF_WAVELENGTH).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let paths = separated_paths(1, 2, 0.2, irs.kind, &mut rng);
        let ch = ChannelRealization::synthesize(paths, tx, irs, rx).unwrap();
        let omega = CVec::from_fn(12, |_, _| {
            C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
        });
        let h0 = ch.effective(&omega);
        let scale = h0.norm();
        let noise = CMat::from_fn(10, 10, |_, _| standard_complex_gaussian(&mut rng));
        let mut want = ch.paths.theta_r.clone();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut errs = Vec::new();
        for eps in [1e-3, 1e-6] {
            let noisy = &h0 + noise.map(|z| z * (eps * scale / noise.norm()));
            let (theta_r, _) = estimate_outer_angles(&noisy, 2, 1, HALF_WAVELENGTH, true).unwrap();
            let err: f64 = theta_r
                .iter()
                .zip(&want)
                .map(|(g, w)| (g - w) * (g - w))
                .sum::<f64>()
                .sqrt();
            errs.push(err);
        }
        assert!(errs[1] <= errs[0], "errors {errs:?}");
        assert!(errs[1] < 1e-5);
    }

    #[test]
    fn fbss_sizing_rule_single_source() {
        // L = 1: U = 2 subarrays of size M − 1.
        let r = exact_covariance(&[0.3], &[1.0], 7);
        let s = fbss(&r, 1).unwrap();
        assert_eq!(s.matrix.nrows(), 6);
        assert!(s.smoothed);
    }

    #[test]
    fn irs_angles_ideal_coupling_single_path() {
        let d = 16;
        let theta = dft_matrix(d);
        // Z = scaled ψ-steering row (ideal coupling), observed through the
        // DFT schedule.
        let a = crate::geometry::diff_response_matrix(&[0.3], d, HALF_WAVELENGTH);
        let z = CMat::from_fn(1, d, |_, n| a[(n, 0)].conj() * C64::new(2.2, -0.4));
        let y = &z * &theta;
        let z_rt = decode_stage2(&y, &theta);
        assert!((z_rt - &z).norm() < 1e-10 * z.norm());
        let got = estimate_irs_angles_ula(&y, &theta, 1, HALF_WAVELENGTH, true).unwrap();
        assert!((got[0] - 0.3).abs() < 1e-8, "{got:?}");
    }

    #[test]
    fn irs_angles_multiple_paths_with_coupling() {
        let d = 16;
        let l_total = 2;
        let theta = dft_matrix(d);
        let psis = [-0.45, 0.3];
        let a = crate::geometry::diff_response_matrix(&psis, d, HALF_WAVELENGTH);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Non-identity coupling: well-conditioned random mixing.
        let psi_mat = CMat::from_fn(l_total, l_total, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                standard_complex_gaussian(&mut rng) * 0.3
            }
        });
        let gamma = CMat::from_fn(l_total, l_total, |i, j| {
            if i == j {
                standard_complex_gaussian(&mut rng) + C64::new(2.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let z = psi_mat * gamma * a.adjoint();
        let y = &z * &theta;
        let got = estimate_irs_angles_ula(&y, &theta, l_total, HALF_WAVELENGTH, true).unwrap();
        assert!((got[0] + 0.45).abs() < 1e-7, "{got:?}");
        assert!((got[1] - 0.3).abs() < 1e-7, "{got:?}");
        assert!(estimate_irs_angles_ula(&y, &theta, d, HALF_WAVELENGTH, true).is_err());
    }

    #[test]
    fn upa_irs_angles_single_path_and_plain_selection() {
        let (n_y, n_z) = (8, 8);
        let sel = l_shaped_selection(n_y, n_z, 2, 2).unwrap();
        let d = sel.len();
        let theta = dft_matrix(d);
        let (u_true, v_true) = (0.42, -0.3);
        let full = upa_steering(u_true, v_true, n_y, n_z, HALF_WAVELENGTH);
        // Z over the active elements only (ideal coupling, unit gain).
        let z = CMat::from_fn(1, d, |_, t| full[sel.active_indices[t]].conj());
        let y = &z * &theta;
        let (u_hat, v_hat) =
            estimate_irs_angles_upa(&y, &theta, &sel, 1, HALF_WAVELENGTH, true).unwrap();
        assert!((u_hat[0] - u_true).abs() < 1e-6, "{u_hat:?}");
        assert!((v_hat[0] - v_true).abs() < 1e-6, "{v_hat:?}");

        // J_y = J_z = 1 reduces the stacking to a plain column selection.
        let sel1 = l_shaped_selection(n_y, n_z, 1, 1).unwrap();
        let d1 = sel1.len();
        let theta1 = dft_matrix(d1);
        let z1 = CMat::from_fn(1, d1, |_, t| full[sel1.active_indices[t]].conj());
        let y1 = &z1 * &theta1;
        let (u1, v1) =
            estimate_irs_angles_upa(&y1, &theta1, &sel1, 1, HALF_WAVELENGTH, true).unwrap();
        assert!((u1[0] - u_true).abs() < 1e-6);
        assert!((v1[0] - v_true).abs() < 1e-6);
    }

    #[test]
    fn upa_gram_invariant_under_group_permutation() {
        // Permuting stacked blocks leaves Z̃_y^H Z̃_y unchanged; realized by
        // swapping the order of the two row groups.
        let (n_y, n_z) = (6, 6);
        let sel = l_shaped_selection(n_y, n_z, 2, 2).unwrap();
        let mut swapped = sel.clone();
        swapped.row_groups.swap(0, 1);
        let d = sel.len();
        let theta = dft_matrix(d);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let y = CMat::from_fn(2, d, |_, _| standard_complex_gaussian(&mut rng)) * &theta;
        let a = estimate_irs_angles_upa(&y, &theta, &sel, 1, HALF_WAVELENGTH, true).unwrap();
        let b = estimate_irs_angles_upa(&y, &theta, &swapped, 1, HALF_WAVELENGTH, true).unwrap();
        assert_relative_eq!(a.0[0], b.0[0], epsilon = 1e-12);
        assert_relative_eq!(a.1[0], b.1[0], epsilon = 1e-12);
    }
}
