//! Geometric channel synthesis: subchannels, effective and cascaded channels,
//! and the parametric factorization used as ground truth.
//!
//! The TX→IRS link `F` (N×K) and IRS→RX link `G` (M×N) are sums of planar
//! wavefronts with complex gains. With IRS phases `ω`, the effective channel
//! is `G·diag(ω)·F` and its vectorization factors through the cascaded
//! channel `H = F^T ⋄ G`, which in turn admits the parametric form
//! `(A_T^* ⊗ A_R)·diag(γ)·A_I^H(ψ)` over composite angle differences `ψ` and
//! composite gains `γ`.

use alloc::{vec::Vec};
use core::f64::consts::PI;

#[allow(unused_imports)] // float math via trait when built without std
use num_traits::Float;
use rand::Rng;

use crate::error::CascadeError;
use crate::geometry::{
    diff_response_matrix, response_matrix, upa_response_matrix, wrap_diff, ArrayGeometry,
    ArrayKind, UV,
};
use crate::linalg::{khatri_rao, standard_complex_gaussian};
use crate::{C64, CMat, CVec, Result};

/// IRS-side path directions for both links.
///
/// The F-link carries the angles of arrival at the IRS (one per TX→IRS path),
/// the G-link the angles of departure (one per IRS→RX path).
#[derive(Debug, Clone, PartialEq)]
pub enum IrsAngles {
    /// Linear IRS: direction cosines.
    Ula { aoa: Vec<f64>, aod: Vec<f64> },
    /// Planar IRS: `(u, v)` direction-cosine pairs.
    Upa { aoa: Vec<UV>, aod: Vec<UV> },
}

/// Per-link path angles and complex gains.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    /// TX AoD cosines, length `L_F`.
    pub phi_t: Vec<f64>,
    /// F-link gains, length `L_F`.
    pub gamma_f: Vec<C64>,
    /// RX AoA cosines, length `L_G`.
    pub theta_r: Vec<f64>,
    /// G-link gains, length `L_G`.
    pub gamma_g: Vec<C64>,
    /// IRS-side directions for both links.
    pub irs: IrsAngles,
}

impl PathSet {
    pub fn l_f(&self) -> usize {
        self.phi_t.len()
    }
    pub fn l_g(&self) -> usize {
        self.theta_r.len()
    }
}

/// Angle distributions used when drawing a random path set.
///
/// Bounds are in degrees. Linear-array angles are drawn uniformly from
/// `outer`; for a planar IRS, azimuth comes from `azimuth` and elevation from
/// `elevation`, with `u = sin(az)·sin(el)` and `v = cos(el)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBounds {
    pub outer: (f64, f64),
    pub azimuth: (f64, f64),
    pub elevation: (f64, f64),
}

impl Default for AngleBounds {
    fn default() -> Self {
        Self {
            outer: (30.0, 150.0),
            azimuth: (-90.0, 90.0),
            elevation: (30.0, 150.0),
        }
    }
}

fn uniform_deg<R: Rng + ?Sized>(bounds: (f64, f64), rng: &mut R) -> f64 {
    rng.random_range(bounds.0..bounds.1)
}

fn cos_deg(deg: f64) -> f64 {
    (deg * PI / 180.0).cos()
}

/// Draw a path set with i.i.d. uniform angles and standard complex Gaussian
/// gains.
pub fn sample_paths<R: Rng + ?Sized>(
    l_f: usize,
    l_g: usize,
    bounds: &AngleBounds,
    irs_kind: ArrayKind,
    rng: &mut R,
) -> PathSet {
    assert!(l_f >= 1 && l_g >= 1);
    let draw_uv = |rng: &mut R| {
        let az = uniform_deg(bounds.azimuth, rng) * PI / 180.0;
        let el = uniform_deg(bounds.elevation, rng) * PI / 180.0;
        UV { u: az.sin() * el.sin(), v: el.cos() }
    };
    let phi_t: Vec<f64> = (0..l_f).map(|_| cos_deg(uniform_deg(bounds.outer, rng))).collect();
    let irs = match irs_kind {
        ArrayKind::Ula => {
            let aoa = (0..l_f).map(|_| cos_deg(uniform_deg(bounds.outer, rng))).collect();
            let aod = (0..l_g).map(|_| cos_deg(uniform_deg(bounds.outer, rng))).collect();
            IrsAngles::Ula { aoa, aod }
        }
        ArrayKind::Upa { .. } => {
            let aoa = (0..l_f).map(|_| draw_uv(rng)).collect();
            let aod = (0..l_g).map(|_| draw_uv(rng)).collect();
            IrsAngles::Upa { aoa, aod }
        }
    };
    let theta_r: Vec<f64> = (0..l_g).map(|_| cos_deg(uniform_deg(bounds.outer, rng))).collect();
    let gamma_f = (0..l_f).map(|_| standard_complex_gaussian(rng)).collect();
    let gamma_g = (0..l_g).map(|_| standard_complex_gaussian(rng)).collect();
    PathSet { phi_t, gamma_f, theta_r, gamma_g, irs }
}

fn irs_response_for(paths: &IrsAngles, link: Link, geom: &ArrayGeometry) -> Result<CMat> {
    match (paths, geom.kind) {
        (IrsAngles::Ula { aoa, aod }, ArrayKind::Ula) => {
            let cosines = match link {
                Link::F => aoa,
                Link::G => aod,
            };
            response_matrix(cosines, geom.n_elements, geom.spacing)
        }
        (IrsAngles::Upa { aoa, aod }, ArrayKind::Upa { n_y, n_z }) => {
            let uvs = match link {
                Link::F => aoa,
                Link::G => aod,
            };
            Ok(upa_response_matrix(uvs, n_y, n_z, geom.spacing))
        }
        _ => Err(CascadeError::config(
            "IRS path angles do not match the IRS array kind",
        )),
    }
}

#[derive(Clone, Copy)]
enum Link {
    F,
    G,
}

/// TX→IRS subchannel `F = √(KN/L_F)·A_I(θ_I)·Γ_F·A_T^H(φ_T)`, N×K.
pub fn subchannel_f(paths: &PathSet, tx: &ArrayGeometry, irs: &ArrayGeometry) -> Result<CMat> {
    let a_i = irs_response_for(&paths.irs, Link::F, irs)?;
    let a_t = response_matrix(&paths.phi_t, tx.n_elements, tx.spacing)?;
    let scale = ((tx.n_elements * irs.n_elements) as f64 / paths.l_f() as f64).sqrt();
    let gamma = CMat::from_fn(paths.l_f(), paths.l_f(), |i, j| {
        if i == j { paths.gamma_f[i] * scale } else { C64::new(0.0, 0.0) }
    });
    Ok(a_i * gamma * a_t.adjoint())
}

/// IRS→RX subchannel `G = √(NM/L_G)·A_R(θ_R)·Γ_G·A_I^H(φ_I)`, M×N.
pub fn subchannel_g(paths: &PathSet, irs: &ArrayGeometry, rx: &ArrayGeometry) -> Result<CMat> {
    let a_r = response_matrix(&paths.theta_r, rx.n_elements, rx.spacing)?;
    let a_i = irs_response_for(&paths.irs, Link::G, irs)?;
    let scale = ((irs.n_elements * rx.n_elements) as f64 / paths.l_g() as f64).sqrt();
    let gamma = CMat::from_fn(paths.l_g(), paths.l_g(), |i, j| {
        if i == j { paths.gamma_g[i] * scale } else { C64::new(0.0, 0.0) }
    });
    Ok(a_r * gamma * a_i.adjoint())
}

/// One drawn channel: both subchannels plus the geometry they were built on.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub f: CMat,
    pub g: CMat,
    pub paths: PathSet,
    pub tx: ArrayGeometry,
    pub irs: ArrayGeometry,
    pub rx: ArrayGeometry,
}

impl ChannelRealization {
    pub fn synthesize(
        paths: PathSet,
        tx: ArrayGeometry,
        irs: ArrayGeometry,
        rx: ArrayGeometry,
    ) -> Result<Self> {
        let f = subchannel_f(&paths, &tx, &irs)?;
        let g = subchannel_g(&paths, &irs, &rx)?;
        Ok(Self { f, g, paths, tx, irs, rx })
    }

    /// `G·diag(ω)·F` for the given IRS phase vector.
    pub fn effective(&self, omega: &CVec) -> CMat {
        effective_channel(&self.f, &self.g, omega)
    }

    /// Cascaded channel `F^T ⋄ G`.
    pub fn cascade(&self) -> CMat {
        cascaded_channel(&self.f, &self.g)
    }
}

/// Effective channel `G·diag(ω)·F` (M×K).
pub fn effective_channel(f: &CMat, g: &CMat, omega: &CVec) -> CMat {
    let mut scaled = f.clone();
    for (n, mut row) in scaled.row_iter_mut().enumerate() {
        row *= omega[n];
    }
    g * scaled
}

/// Cascaded channel `H = F^T ⋄ G` (MK×N): column `n` is `vec(G(:,n)·F(n,:))`.
pub fn cascaded_channel(f: &CMat, g: &CMat) -> CMat {
    assert_eq!(f.nrows(), g.ncols(), "inner IRS dimension mismatch");
    khatri_rao(&f.transpose(), g)
}

/// IRS-side composite coordinates of the cascade atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum DiffCoords {
    /// Cosine differences `ψ_{i,j} = cos(φ_{I,j}) − cos(θ_{I,i})`, in `[-2, 2]`.
    Ula(Vec<f64>),
    /// `(u, v)` differences, AoD minus AoA per axis.
    Upa(Vec<UV>),
}

/// Composite parameters of the cascade: one atom per (F-path i, G-path j)
/// pair, flat index `i·L_G + j` (G-path fastest, matching `Γ_F ⊗ Γ_G`).
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeParams {
    pub coords: DiffCoords,
    /// Scaled composite gains `√(KMN/(L_F·L_G))·γ_{F,i}·γ_{G,j}`; the scaling
    /// makes the parametric cascade reproduce `F^T ⋄ G` exactly.
    pub gamma: Vec<C64>,
}

impl CompositeParams {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }
}

/// Composite angle differences and scaled gains for a path set.
pub fn composite_params(
    paths: &PathSet,
    tx: &ArrayGeometry,
    irs: &ArrayGeometry,
    rx: &ArrayGeometry,
) -> CompositeParams {
    let (l_f, l_g) = (paths.l_f(), paths.l_g());
    let kappa = ((tx.n_elements * rx.n_elements * irs.n_elements) as f64
        / (l_f * l_g) as f64)
        .sqrt();
    let mut gamma = Vec::with_capacity(l_f * l_g);
    for i in 0..l_f {
        for j in 0..l_g {
            gamma.push(paths.gamma_f[i] * paths.gamma_g[j] * kappa);
        }
    }
    let coords = match &paths.irs {
        IrsAngles::Ula { aoa, aod } => {
            let mut psi = Vec::with_capacity(l_f * l_g);
            for &a in aoa {
                for &d in aod {
                    psi.push(d - a);
                }
            }
            DiffCoords::Ula(psi)
        }
        IrsAngles::Upa { aoa, aod } => {
            let mut uv = Vec::with_capacity(l_f * l_g);
            for a in aoa {
                for d in aod {
                    uv.push(UV { u: d.u - a.u, v: d.v - a.v });
                }
            }
            DiffCoords::Upa(uv)
        }
    };
    CompositeParams { coords, gamma }
}

/// One cascade atom together with the outer angles it couples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeAtom {
    pub irs: IrsCoord,
    pub phi_t: f64,
    pub theta_r: f64,
    pub gain: C64,
}

/// A single IRS difference coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IrsCoord {
    Psi(f64),
    Uv(UV),
}

/// Ground-truth cascade atoms with IRS coordinates wrapped onto the
/// measurable principal interval.
pub fn composite_atoms(
    paths: &PathSet,
    tx: &ArrayGeometry,
    irs: &ArrayGeometry,
    rx: &ArrayGeometry,
) -> Vec<CompositeAtom> {
    let params = composite_params(paths, tx, irs, rx);
    let l_g = paths.l_g();
    let spacing = irs.spacing;
    params
        .gamma
        .iter()
        .enumerate()
        .map(|(flat, &gain)| {
            let (i, j) = (flat / l_g, flat % l_g);
            let irs_coord = match &params.coords {
                DiffCoords::Ula(psi) => IrsCoord::Psi(wrap_diff(psi[flat], spacing)),
                DiffCoords::Upa(uv) => IrsCoord::Uv(UV {
                    u: wrap_diff(uv[flat].u, spacing),
                    v: wrap_diff(uv[flat].v, spacing),
                }),
            };
            CompositeAtom {
                irs: irs_coord,
                phi_t: paths.phi_t[i],
                theta_r: paths.theta_r[j],
                gain,
            }
        })
        .collect()
}

/// Parametric cascade `(A_T^*(φ_T) ⊗ A_R(θ_R))·diag(γ)·A_I^H(ψ)` (MK×N).
pub fn parametric_cascade(
    phi_t: &[f64],
    theta_r: &[f64],
    composite: &CompositeParams,
    tx: &ArrayGeometry,
    irs: &ArrayGeometry,
    rx: &ArrayGeometry,
) -> Result<CMat> {
    let a_t = response_matrix(phi_t, tx.n_elements, tx.spacing)?;
    let a_r = response_matrix(theta_r, rx.n_elements, rx.spacing)?;
    if phi_t.len() * theta_r.len() != composite.len() {
        return Err(CascadeError::config(
            "composite parameter count does not match outer angle counts",
        ));
    }
    let a_i = match (&composite.coords, irs.kind) {
        (DiffCoords::Ula(psi), ArrayKind::Ula) => {
            diff_response_matrix(psi, irs.n_elements, irs.spacing)
        }
        (DiffCoords::Upa(uv), ArrayKind::Upa { n_y, n_z }) => {
            upa_response_matrix(uv, n_y, n_z, irs.spacing)
        }
        _ => {
            return Err(CascadeError::config(
                "composite coordinates do not match the IRS array kind",
            ))
        }
    };
    let outer = a_t.conjugate().kronecker(&a_r);
    let mut weighted = outer;
    for (c, mut col) in weighted.column_iter_mut().enumerate() {
        col *= composite.gamma[c];
    }
    Ok(weighted * a_i.adjoint())
}

/// Add circularly-symmetric complex Gaussian noise with per-entry variance
/// `sigma²` to every entry.
pub fn add_awgn<R: Rng + ?Sized>(signal: &mut CMat, sigma: f64, rng: &mut R) {
    debug_assert!(sigma >= 0.0);
    if sigma == 0.0 {
        return;
    }
    for z in signal.iter_mut() {
        *z += standard_complex_gaussian(rng) * sigma;
    }
}
