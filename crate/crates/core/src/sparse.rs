//! Composite-gain recovery: parametric dictionary, orthogonal matching
//! pursuit and cascade reconstruction.
//!
//! The separately estimated angle groups are not associated with each other.
//! Fitting the stage-2 observation against a dictionary spanning every
//! (IRS, AoD, AoA) combination both recovers the composite gains and selects
//! the valid combinations, which performs the association for free.

use alloc::{format, vec, vec::Vec};

#[allow(unused_imports)] // float math via trait when built without std
use num_traits::Float;

use crate::channel::{CompositeAtom, IrsCoord};
use crate::error::CascadeError;
use crate::frontend::Stage2Plan;
use crate::geometry::{
    diff_response_matrix, response_matrix, upa_response_matrix, wrap_diff_distance,
    ArrayGeometry, ArrayKind, UV,
};
use crate::{C64, CMat, CVec, Result};

/// IRS angle estimates feeding the dictionary.
#[derive(Debug, Clone, PartialEq)]
pub enum IrsEstimates {
    /// Difference coordinates of a linear IRS, one per composite path.
    Ula(Vec<f64>),
    /// Unassociated u and v estimates of a planar IRS; the dictionary spans
    /// every (u, v) combination.
    Upa { u: Vec<f64>, v: Vec<f64> },
}

impl IrsEstimates {
    /// Candidate IRS coordinates, in dictionary order.
    pub fn coords(&self) -> Vec<IrsCoord> {
        match self {
            Self::Ula(psi) => psi.iter().map(|&p| IrsCoord::Psi(p)).collect(),
            Self::Upa { u, v } => u
                .iter()
                .flat_map(|&uu| v.iter().map(move |&vv| IrsCoord::Uv(UV { u: uu, v: vv })))
                .collect(),
        }
    }
}

/// Which (IRS, AoD, AoA) combination a dictionary column represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtomIndex {
    pub irs: usize,
    pub phi: usize,
    pub theta: usize,
}

/// Dictionary whose columns are vectorized single-atom stage-2 responses.
#[derive(Debug, Clone)]
pub struct GainDictionary {
    /// (L_F·L_G·D) × (n_irs·L_F·L_G).
    pub matrix: CMat,
    /// Flat column → combination indices (IRS slowest, AoA fastest).
    pub index_map: Vec<AtomIndex>,
    /// IRS coordinate of each `irs` index.
    pub irs_coords: Vec<IrsCoord>,
}

/// Assemble `Φ = (Ω̄^T·A_I^*) ⊗ (P^T·A_T^*) ⊗ (W^H·A_R)` from the angle
/// estimates, so that `vec(Y) ≈ Φ·γ` for the sparse composite-gain vector.
pub fn gain_dictionary(
    plan: &Stage2Plan,
    irs_estimates: &IrsEstimates,
    phi_t_hat: &[f64],
    theta_r_hat: &[f64],
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    irs: &ArrayGeometry,
) -> Result<GainDictionary> {
    let irs_coords = irs_estimates.coords();
    if irs_coords.is_empty() || phi_t_hat.is_empty() || theta_r_hat.is_empty() {
        return Err(CascadeError::config("empty angle estimates"));
    }
    let a_i = irs_response(&irs_coords, irs)?;
    let a_t = response_matrix(phi_t_hat, tx.n_elements, tx.spacing)?;
    let a_r = response_matrix(theta_r_hat, rx.n_elements, rx.spacing)?;
    let irs_factor = plan.omega_bar.transpose() * a_i.conjugate();
    let tx_factor = plan.p.transpose() * a_t.conjugate();
    let rx_factor = plan.w.adjoint() * a_r;
    let matrix = irs_factor.kronecker(&tx_factor).kronecker(&rx_factor);

    let (l_f, l_g) = (phi_t_hat.len(), theta_r_hat.len());
    let mut index_map = Vec::with_capacity(irs_coords.len() * l_f * l_g);
    for irs_idx in 0..irs_coords.len() {
        for phi in 0..l_f {
            for theta in 0..l_g {
                index_map.push(AtomIndex { irs: irs_idx, phi, theta });
            }
        }
    }
    Ok(GainDictionary { matrix, index_map, irs_coords })
}

fn irs_response(coords: &[IrsCoord], irs: &ArrayGeometry) -> Result<CMat> {
    match irs.kind {
        ArrayKind::Ula => {
            let psi: Vec<f64> = coords
                .iter()
                .map(|c| match c {
                    IrsCoord::Psi(p) => Ok(*p),
                    IrsCoord::Uv(_) => {
                        Err(CascadeError::config("planar coordinate on a linear IRS"))
                    }
                })
                .collect::<Result<_>>()?;
            Ok(diff_response_matrix(&psi, irs.n_elements, irs.spacing))
        }
        ArrayKind::Upa { n_y, n_z } => {
            let uv: Vec<UV> = coords
                .iter()
                .map(|c| match c {
                    IrsCoord::Uv(uv) => Ok(*uv),
                    IrsCoord::Psi(_) => {
                        Err(CascadeError::config("linear coordinate on a planar IRS"))
                    }
                })
                .collect::<Result<_>>()?;
            Ok(upa_response_matrix(&uv, n_y, n_z, irs.spacing))
        }
    }
}

/// Result of an OMP run.
#[derive(Debug, Clone)]
pub struct OmpResult {
    /// Selected dictionary columns, in selection order.
    pub support: Vec<usize>,
    /// Coefficients on the support (unscaled dictionary basis).
    pub coefficients: Vec<C64>,
    /// Residual norm after each selection, non-increasing.
    pub residual_norms: Vec<f64>,
    /// Set when the selected columns were numerically rank deficient and the
    /// fit fell back to the pseudo-inverse.
    pub degenerate: bool,
}

impl OmpResult {
    /// Dense coefficient vector over all dictionary columns.
    pub fn dense(&self, n_columns: usize) -> CVec {
        let mut out = CVec::zeros(n_columns);
        for (&col, &coef) in self.support.iter().zip(&self.coefficients) {
            out[col] = coef;
        }
        out
    }
}

/// Orthogonal matching pursuit with exactly `k` greedy selections.
///
/// Correlations are taken against norm-scaled columns; the least-squares
/// refit on the accumulated support uses the original columns.
pub fn omp(y: &CVec, dict: &GainDictionary, k: usize) -> Result<OmpResult> {
    let (rows, cols) = dict.matrix.shape();
    if k > cols || k > rows {
        return Err(CascadeError::config(format!(
            "sparsity {k} exceeds dictionary size {rows}×{cols}"
        )));
    }
    let col_norms: Vec<f64> = (0..cols).map(|c| dict.matrix.column(c).norm()).collect();
    if col_norms.iter().any(|&n| n == 0.0) {
        return Err(CascadeError::Numeric("dictionary has a zero column".into()));
    }
    let mut residual = y.clone();
    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut coefficients = Vec::new();
    let mut residual_norms = Vec::with_capacity(k);
    let mut degenerate = false;
    for _ in 0..k {
        let mut best = usize::MAX;
        let mut best_corr = -1.0;
        for c in 0..cols {
            if support.contains(&c) {
                continue;
            }
            let corr = dict.matrix.column(c).dotc(&residual).norm() / col_norms[c];
            if corr > best_corr {
                best_corr = corr;
                best = c;
            }
        }
        support.push(best);
        let sub = dict.matrix.select_columns(support.iter());
        let svd = sub.clone().svd(true, true);
        let tol = 1e-12 * svd.singular_values.max();
        if svd.rank(tol) < support.len() {
            degenerate = true;
        }
        let sol = svd
            .solve(y, tol)
            .map_err(|e| CascadeError::Numeric(format!("support refit failed: {e}")))?;
        residual = y - &sub * &sol;
        residual_norms.push(residual.norm());
        coefficients = sol.iter().copied().collect();
    }
    Ok(OmpResult { support, coefficients, residual_norms, degenerate })
}

/// Rebuild the full cascaded channel from estimated atoms.
///
/// `atoms` pairs each selected combination with its gain; the gain matrix is
/// generally non-diagonal because the angle groups were estimated without
/// association. The IRS response spans all `N` elements, not just the
/// subarray used in training.
pub fn reconstruct_cascade(
    phi_t_hat: &[f64],
    theta_r_hat: &[f64],
    irs_coords: &[IrsCoord],
    atoms: &[(AtomIndex, C64)],
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    irs: &ArrayGeometry,
) -> Result<CMat> {
    let (l_f, l_g) = (phi_t_hat.len(), theta_r_hat.len());
    let a_t = response_matrix(phi_t_hat, tx.n_elements, tx.spacing)?;
    let a_r = response_matrix(theta_r_hat, rx.n_elements, rx.spacing)?;
    let a_i = irs_response(irs_coords, irs)?;
    let mut gain_mat = CMat::zeros(l_f * l_g, irs_coords.len());
    for &(idx, gain) in atoms {
        if idx.irs >= irs_coords.len() || idx.phi >= l_f || idx.theta >= l_g {
            return Err(CascadeError::config("atom index outside the dictionary"));
        }
        gain_mat[(idx.phi * l_g + idx.theta, idx.irs)] += gain;
    }
    let outer = a_t.conjugate().kronecker(&a_r);
    Ok(outer * gain_mat * a_i.adjoint())
}

/// Squared distance between two atoms in angle space; IRS coordinates use
/// the periodic metric.
fn atom_distance_sq(a: &CompositeAtom, b: &CompositeAtom, spacing: f64) -> f64 {
    let irs = match (&a.irs, &b.irs) {
        (IrsCoord::Psi(x), IrsCoord::Psi(y)) => {
            let d = wrap_diff_distance(*x, *y, spacing);
            d * d
        }
        (IrsCoord::Uv(x), IrsCoord::Uv(y)) => {
            let du = wrap_diff_distance(x.u, y.u, spacing);
            let dv = wrap_diff_distance(x.v, y.v, spacing);
            du * du + dv * dv
        }
        _ => f64::INFINITY,
    };
    irs + (a.phi_t - b.phi_t) * (a.phi_t - b.phi_t)
        + (a.theta_r - b.theta_r) * (a.theta_r - b.theta_r)
}

/// Greedy one-to-one matching of estimated atoms to ground-truth atoms by
/// angle-space distance: repeatedly take the globally closest unmatched pair.
/// Returns `(truth_index, estimate_index)` pairs.
pub fn match_atoms(
    truth: &[CompositeAtom],
    estimates: &[CompositeAtom],
    spacing: f64,
) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(truth.len().min(estimates.len()));
    let mut truth_used = vec![false; truth.len()];
    let mut est_used = vec![false; estimates.len()];
    loop {
        let mut best = f64::INFINITY;
        let mut best_pair = None;
        for (t, ta) in truth.iter().enumerate() {
            if truth_used[t] {
                continue;
            }
            for (e, ea) in estimates.iter().enumerate() {
                if est_used[e] {
                    continue;
                }
                let d = atom_distance_sq(ta, ea, spacing);
                if d < best {
                    best = d;
                    best_pair = Some((t, e));
                }
            }
        }
        match best_pair {
            Some((t, e)) => {
                truth_used[t] = true;
                est_used[e] = true;
                pairs.push((t, e));
            }
            None => break,
        }
    }
    pairs
}
