//! Array geometries, steering vectors and subarray bookkeeping.
//!
//! Angles live in the cosine domain: a ULA direction is its cosine in
//! `[-1, 1]`, a UPA direction is the pair `(u, v)` of direction cosines along
//! the y and z grid axes. Degree-valued angles exist only at configuration
//! boundaries. UPA elements are indexed z-fastest so that the planar steering
//! vector is exactly `a_y(u) ⊗ a_z(v)`.

use alloc::{format, vec::Vec};
use core::f64::consts::PI;

#[allow(unused_imports)] // float math via trait when built without std
use num_traits::Float;

use crate::error::CascadeError;
use crate::{C64, CMat, CVec, Result};

/// Physical layout of an antenna array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayKind {
    /// Uniform linear array.
    Ula,
    /// Uniform planar array on the y-z plane, `n_y · n_z` elements.
    Upa { n_y: usize, n_z: usize },
}

/// Element count, layout and spacing (as a fraction of the carrier
/// wavelength) of one array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub kind: ArrayKind,
    pub n_elements: usize,
    pub spacing: f64,
}

/// Half-wavelength element spacing.
pub const HALF_WAVELENGTH: f64 = 0.5;

impl ArrayGeometry {
    pub fn ula(n_elements: usize, spacing: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(CascadeError::config("array needs at least one element"));
        }
        if spacing <= 0.0 {
            return Err(CascadeError::config("element spacing must be positive"));
        }
        Ok(Self { kind: ArrayKind::Ula, n_elements, spacing })
    }

    pub fn upa(n_y: usize, n_z: usize, spacing: f64) -> Result<Self> {
        if n_y == 0 || n_z == 0 {
            return Err(CascadeError::config("UPA grid dimensions must be positive"));
        }
        if spacing <= 0.0 {
            return Err(CascadeError::config("element spacing must be positive"));
        }
        Ok(Self { kind: ArrayKind::Upa { n_y, n_z }, n_elements: n_y * n_z, spacing })
    }
}

/// A `(u, v)` direction-cosine pair for a planar array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UV {
    pub u: f64,
    pub v: f64,
}

/// ULA steering vector: entry `k` is `exp(j·2π·spacing·k·cosine)/√n`.
pub fn ula_steering(cosine: f64, n: usize, spacing: f64) -> Result<CVec> {
    if !(-1.0..=1.0).contains(&cosine) {
        return Err(CascadeError::domain(format!(
            "steering cosine {cosine} outside [-1, 1]"
        )));
    }
    Ok(steering_unchecked(cosine, n, spacing))
}

/// Same phase progression without the domain check; used internally where the
/// argument is a difference coordinate rather than a physical cosine.
fn steering_unchecked(coord: f64, n: usize, spacing: f64) -> CVec {
    let scale = 1.0 / (n as f64).sqrt();
    CVec::from_fn(n, |k, _| {
        C64::from_polar(scale, 2.0 * PI * spacing * k as f64 * coord)
    })
}

/// UPA steering vector `a_y(u) ⊗ a_z(v)`, unit norm.
///
/// `u` and `v` are difference coordinates when the array plays the IRS role,
/// so magnitudes up to 2 are accepted.
pub fn upa_steering(u: f64, v: f64, n_y: usize, n_z: usize, spacing: f64) -> CVec {
    debug_assert!(u.abs() <= 2.0 && v.abs() <= 2.0);
    let ay = steering_unchecked(u, n_y, spacing);
    let az = steering_unchecked(v, n_z, spacing);
    let mut out = CVec::zeros(n_y * n_z);
    for p in 0..n_y {
        for q in 0..n_z {
            out[p * n_z + q] = ay[p] * az[q];
        }
    }
    out
}

/// Response matrix whose column `l` is `ula_steering(cosines[l], n, spacing)`.
pub fn response_matrix(cosines: &[f64], n: usize, spacing: f64) -> Result<CMat> {
    let mut out = CMat::zeros(n, cosines.len());
    for (l, &c) in cosines.iter().enumerate() {
        out.set_column(l, &ula_steering(c, n, spacing)?);
    }
    Ok(out)
}

/// Response matrix over difference coordinates in `[-2, 2]`.
///
/// The phase of a steering entry is periodic in the coordinate with period
/// `1/spacing`, so each value is wrapped to the principal interval first; at
/// half-wavelength spacing wrapped and unwrapped responses coincide.
pub fn diff_response_matrix(coords: &[f64], n: usize, spacing: f64) -> CMat {
    let mut out = CMat::zeros(n, coords.len());
    for (l, &c) in coords.iter().enumerate() {
        out.set_column(l, &steering_unchecked(wrap_diff(c, spacing), n, spacing));
    }
    out
}

/// Response matrix for a UPA over `(u, v)` difference pairs.
pub fn upa_response_matrix(coords: &[UV], n_y: usize, n_z: usize, spacing: f64) -> CMat {
    let mut out = CMat::zeros(n_y * n_z, coords.len());
    for (l, c) in coords.iter().enumerate() {
        out.set_column(l, &upa_steering(c.u, c.v, n_y, n_z, spacing));
    }
    out
}

/// Wrap a difference coordinate into the principal interval
/// `[-1/(2·spacing), 1/(2·spacing))` — `[-1, 1)` at half-wavelength spacing.
pub fn wrap_diff(coord: f64, spacing: f64) -> f64 {
    let period = 1.0 / spacing;
    let mut c = (coord + period / 2.0) % period;
    if c < 0.0 {
        c += period;
    }
    c - period / 2.0
}

/// Shortest signed distance between two difference coordinates on their
/// periodic domain.
pub fn wrap_diff_distance(a: f64, b: f64, spacing: f64) -> f64 {
    wrap_diff(a - b, spacing)
}

/// Active-element bookkeeping for a partially switched-on UPA.
///
/// `row_groups[j]` collects the parent-array indices of the j-th full row
/// (parallel to y); `col_groups[j]` of the j-th full column (parallel to z).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubarraySelection {
    pub active_indices: Vec<usize>,
    pub row_groups: Vec<Vec<usize>>,
    pub col_groups: Vec<Vec<usize>>,
}

impl SubarraySelection {
    /// Number of switched-on elements.
    pub fn len(&self) -> usize {
        self.active_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active_indices.is_empty()
    }
}

/// L-shaped subarray anchored at grid corner (0, 0): the first `j_y` full
/// rows and first `j_z` full columns of an `n_y × n_z` UPA, overlap counted
/// once, so `D = j_y·n_y + j_z·n_z − j_y·j_z`.
pub fn l_shaped_selection(
    n_y: usize,
    n_z: usize,
    j_y: usize,
    j_z: usize,
) -> Result<SubarraySelection> {
    if j_y == 0 || j_y > n_z {
        return Err(CascadeError::config(format!(
            "j_y = {j_y} outside 1..={n_z}"
        )));
    }
    if j_z == 0 || j_z > n_y {
        return Err(CascadeError::config(format!(
            "j_z = {j_z} outside 1..={n_y}"
        )));
    }
    let flat = |p: usize, q: usize| p * n_z + q; // z fastest
    let row_groups: Vec<Vec<usize>> = (0..j_y)
        .map(|q| (0..n_y).map(|p| flat(p, q)).collect())
        .collect();
    let col_groups: Vec<Vec<usize>> = (0..j_z)
        .map(|p| (0..n_z).map(|q| flat(p, q)).collect())
        .collect();
    let mut active: Vec<usize> = row_groups
        .iter()
        .chain(col_groups.iter())
        .flatten()
        .copied()
        .collect();
    active.sort_unstable();
    active.dedup();
    Ok(SubarraySelection { active_indices: active, row_groups, col_groups })
}
