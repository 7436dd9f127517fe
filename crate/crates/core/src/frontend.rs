//! Hybrid training frontend: feature matrices and the sampling schedule for
//! stage 1, phase-only precoder/combiner synthesis and the DFT-scheduled IRS
//! sampling for stage 2, plus the corresponding noisy observations.

use alloc::{format, vec::Vec};
use core::f64::consts::PI;

#[allow(unused_imports)] // float math via trait when built without std
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::CascadeError;
use crate::geometry::{l_shaped_selection, response_matrix, ArrayGeometry, ArrayKind, SubarraySelection};
use crate::linalg::{dft_matrix, lstsq, randomized_unitary_dft, standard_complex_gaussian};
use crate::{C64, CMat, CVec, Result};

/// One stage-1 training step: a transmit feature column probed by `Q_r`
/// receive feature columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage1Step {
    pub tx_column: usize,
    pub rx_columns: Vec<usize>,
}

/// Stage-1 training plan.
///
/// `x_t` (K×K) and `x_r` (M×M) are phase-randomized unitary DFT features; one
/// observed entry of the transformed channel `X_R^H·H₀·X_T` lands at
/// coordinate `(r, tx_column)` per selected receive column `r`, so
/// `pattern.len() == S·Q_r` with no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Plan {
    pub x_t: CMat,
    pub x_r: CMat,
    pub schedule: Vec<Stage1Step>,
    pub pattern: Vec<(usize, usize)>,
}

/// Build the stage-1 schedule: transmit columns cycle `s mod K`, receive
/// columns are drawn without replacement per transmit column so the sampled
/// entries spread evenly over the M×K grid without repetition.
pub fn build_stage1_plan<R: Rng + ?Sized>(
    k: usize,
    m: usize,
    q_r: usize,
    s: usize,
    rng: &mut R,
) -> Result<Stage1Plan> {
    if q_r == 0 || q_r > m {
        return Err(CascadeError::config(format!("Q_r = {q_r} outside 1..={m}")));
    }
    if s * q_r > m * k {
        return Err(CascadeError::infeasible(format!(
            "S·Q_r = {} exceeds the {}×{} grid",
            s * q_r,
            m,
            k
        )));
    }
    // Cyclic transmit selection visits column c ⌈S/K⌉ or ⌊S/K⌋ times; each
    // visit consumes Q_r fresh rows of that column.
    let max_visits = s.div_ceil(k);
    if max_visits * q_r > m {
        return Err(CascadeError::infeasible(format!(
            "column-cyclic schedule needs ceil(S/K)·Q_r = {} <= M = {m}",
            max_visits * q_r
        )));
    }
    let x_t = randomized_unitary_dft(k, rng);
    let x_r = randomized_unitary_dft(m, rng);

    let mut row_pools: Vec<Vec<usize>> = (0..k)
        .map(|_| {
            let mut rows: Vec<usize> = (0..m).collect();
            rows.shuffle(rng);
            rows
        })
        .collect();
    let mut schedule = Vec::with_capacity(s);
    let mut pattern = Vec::with_capacity(s * q_r);
    for step in 0..s {
        let tx_column = step % k;
        let pool = &mut row_pools[tx_column];
        let rx_columns: Vec<usize> = pool.drain(..q_r).collect();
        for &r in &rx_columns {
            pattern.push((r, tx_column));
        }
        schedule.push(Stage1Step { tx_column, rx_columns });
    }
    Ok(Stage1Plan { x_t, x_r, schedule, pattern })
}

/// Observe the transformed channel through the stage-1 schedule.
///
/// Step `s` applies precoder `X_T(:, t(s))` and the `Q_r` combiner columns of
/// `X_R` named by the schedule; each observed value is
/// `[X_R^H·H₀·X_T]_{r,t(s)}` plus combined noise, with a fresh noise vector
/// per step. Values are returned in `plan.pattern` order.
pub fn stage1_observe<R: Rng + ?Sized>(
    plan: &Stage1Plan,
    h0: &CMat,
    sigma: f64,
    rng: &mut R,
) -> Vec<C64> {
    let m = plan.x_r.nrows();
    assert_eq!(h0.nrows(), m, "H0 row count must match X_R");
    assert_eq!(h0.ncols(), plan.x_t.nrows(), "H0 column count must match X_T");
    let c0 = plan.x_r.adjoint() * h0 * &plan.x_t;
    let mut out = Vec::with_capacity(plan.pattern.len());
    for step in &plan.schedule {
        let noise = if sigma > 0.0 {
            Some(CVec::from_fn(m, |_, _| standard_complex_gaussian(rng) * sigma))
        } else {
            None
        };
        for &r in &step.rx_columns {
            let mut value = c0[(r, step.tx_column)];
            if let Some(n) = &noise {
                value += plan.x_r.column(r).dotc(n);
            }
            out.push(value);
        }
    }
    out
}

/// Unit-modulus RF factor and baseband factor approximating a target matrix.
#[derive(Debug, Clone)]
pub struct HybridFactors {
    /// n×q, entries of modulus `1/√n`.
    pub rf: CMat,
    /// q×m baseband combining.
    pub bb: CMat,
    /// Relative residual after each alternating pass.
    pub residuals: Vec<f64>,
}

impl HybridFactors {
    pub fn product(&self) -> CMat {
        &self.rf * &self.bb
    }

    /// Final relative approximation error.
    pub fn residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(1.0)
    }
}

/// Phase-extraction alternating minimization for a fully connected hybrid
/// front end: approximate `target ≈ RF·BB` with `RF` unit-modulus.
///
/// Each pass solves the baseband least squares at fixed RF (where the
/// residual is recorded), then re-extracts the RF phases from `target·BB^H`.
/// The product is finally rescaled to the target's Frobenius power.
pub fn hybrid_approximation(target: &CMat, q_chains: usize, iters: usize) -> Result<HybridFactors> {
    let (n, m) = (target.nrows(), target.ncols());
    if q_chains < m {
        return Err(CascadeError::config(format!(
            "{q_chains} RF chains cannot synthesize {m} beams"
        )));
    }
    if iters == 0 {
        return Err(CascadeError::config("need at least one iteration"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let phase_of = |z: C64| -> C64 {
        if z.norm() == 0.0 { C64::new(scale, 0.0) } else { C64::from_polar(scale, z.arg()) }
    };
    // Start from the target's own column phases; spare chains get DFT columns.
    let mut rf = CMat::from_fn(n, q_chains, |i, q| {
        if q < m {
            phase_of(target[(i, q)])
        } else {
            C64::from_polar(scale, -2.0 * PI * (i * q) as f64 / n as f64)
        }
    });
    let mut bb = CMat::zeros(q_chains, m);
    let mut residuals = Vec::with_capacity(iters);
    let target_norm = target.norm().max(1e-300);
    for _ in 0..iters {
        for col in 0..m {
            let rhs = CVec::from_column_slice(target.column(col).as_slice());
            bb.set_column(col, &lstsq(&rf, &rhs)?);
        }
        residuals.push((target - &rf * &bb).norm() / target_norm);
        let projected = target * bb.adjoint();
        rf = projected.map(phase_of);
    }
    for col in 0..m {
        let rhs = CVec::from_column_slice(target.column(col).as_slice());
        bb.set_column(col, &lstsq(&rf, &rhs)?);
    }
    // Match the prescribed power exactly.
    let power = (&rf * &bb).norm();
    if power > 0.0 {
        bb *= C64::new(target.norm() / power, 0.0);
    }
    residuals.push((target - &rf * &bb).norm() / target_norm);
    Ok(HybridFactors { rf, bb, residuals })
}

/// How the IRS is sampled during stage-2 training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsSampling {
    /// Keep the first `D` elements of a linear IRS switched on.
    UlaPrefix,
    /// Switch on an L-shaped subarray of a planar IRS.
    LShaped { j_y: usize, j_z: usize },
}

/// Stage-2 training plan.
///
/// `p` (K×L_F) and `w` (M×L_G) are hybrid approximations of the steering
/// matrices at the stage-1 angle estimates, normalized to powers `L_F` and
/// `L_G`. `omega_bar` (N×D) holds one IRS phase vector per training step:
/// rows of the switched-on elements carry the unit-modulus DFT `theta`
/// (`Θ·Θ^H = D·I`), all other rows are zero.
#[derive(Debug, Clone)]
pub struct Stage2Plan {
    pub p: CMat,
    pub w: CMat,
    pub omega_bar: CMat,
    pub theta: CMat,
    pub d: usize,
    pub active: Vec<usize>,
    pub selection: Option<SubarraySelection>,
    pub p_residual: f64,
    pub w_residual: f64,
}

impl Stage2Plan {
    pub fn l_f(&self) -> usize {
        self.p.ncols()
    }
    pub fn l_g(&self) -> usize {
        self.w.ncols()
    }
}

/// Build the stage-2 plan from the stage-1 outer-angle estimates.
pub fn build_stage2_plan(
    phi_t_hat: &[f64],
    theta_r_hat: &[f64],
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    irs: &ArrayGeometry,
    d: usize,
    sampling: IrsSampling,
    q_t: usize,
    q_r: usize,
    hybrid_iters: usize,
) -> Result<Stage2Plan> {
    let l_f = phi_t_hat.len();
    let l_g = theta_r_hat.len();
    if d < l_f * l_g + 1 {
        return Err(CascadeError::config(format!(
            "D = {d} must be at least L_F·L_G + 1 = {}",
            l_f * l_g + 1
        )));
    }
    if d > irs.n_elements {
        return Err(CascadeError::config(format!(
            "D = {d} exceeds the IRS size {}",
            irs.n_elements
        )));
    }
    let p_target = response_matrix(phi_t_hat, tx.n_elements, tx.spacing)?;
    let w_target = response_matrix(theta_r_hat, rx.n_elements, rx.spacing)?;
    let p_hybrid = hybrid_approximation(&p_target, q_t, hybrid_iters)?;
    let w_hybrid = hybrid_approximation(&w_target, q_r, hybrid_iters)?;

    let (active, selection) = match (sampling, irs.kind) {
        (IrsSampling::UlaPrefix, ArrayKind::Ula) => ((0..d).collect::<Vec<_>>(), None),
        (IrsSampling::LShaped { j_y, j_z }, ArrayKind::Upa { n_y, n_z }) => {
            let sel = l_shaped_selection(n_y, n_z, j_y, j_z)?;
            if sel.len() != d {
                return Err(CascadeError::config(format!(
                    "L-shaped selection yields D = {} but the plan asks for {d}",
                    sel.len()
                )));
            }
            (sel.active_indices.clone(), Some(sel))
        }
        _ => {
            return Err(CascadeError::config(
                "IRS sampling mode does not match the IRS array kind",
            ))
        }
    };

    let theta = dft_matrix(d);
    let mut omega_bar = CMat::zeros(irs.n_elements, d);
    for (t, &element) in active.iter().enumerate() {
        for col in 0..d {
            omega_bar[(element, col)] = theta[(t, col)];
        }
    }
    Ok(Stage2Plan {
        p: p_hybrid.product(),
        w: w_hybrid.product(),
        omega_bar,
        theta,
        d,
        active,
        selection,
        p_residual: p_hybrid.residual(),
        w_residual: w_hybrid.residual(),
    })
}

/// Run the stage-2 training and collect the observation matrix
/// `Y ∈ C^{L_F·L_G × D}`.
///
/// Step `d` fixes the IRS phases to `omega_bar(:, d)` and sends the identity
/// pilot over `L_F` channel uses; column `d` of the result is
/// `vec(W^H·G·diag(ω_d)·F·P)` plus combined noise `W^H·n`, drawn fresh per
/// channel use.
pub fn stage2_observe<R: Rng + ?Sized>(
    plan: &Stage2Plan,
    f: &CMat,
    g: &CMat,
    sigma: f64,
    rng: &mut R,
) -> CMat {
    let (l_f, l_g) = (plan.l_f(), plan.l_g());
    let m = plan.w.nrows();
    assert_eq!(g.nrows(), m);
    assert_eq!(f.ncols(), plan.p.nrows());
    let mut y = CMat::zeros(l_f * l_g, plan.d);
    for step in 0..plan.d {
        // Only the switched-on rows of F contribute.
        let mut scaled_f = f.clone();
        for (n, mut row) in scaled_f.row_iter_mut().enumerate() {
            row *= plan.omega_bar[(n, step)];
        }
        let beamformed = plan.w.adjoint() * g * scaled_f * &plan.p; // L_G × L_F
        for l in 0..l_f {
            let mut col = beamformed.column(l).clone_owned();
            if sigma > 0.0 {
                let noise = CVec::from_fn(m, |_, _| standard_complex_gaussian(rng) * sigma);
                col += plan.w.adjoint() * noise;
            }
            for r in 0..l_g {
                y[(l * l_g + r, step)] = col[r];
            }
        }
    }
    y
}

/// Outer-beam coupling `Ψ = (P^T·A_T^*(φ_T)) ⊗ (W^H·A_R(θ_R))` at the true
/// angles. Diagnostic only: the estimator never forms it, but tests verify
/// the stage-2 observation model against it.
pub fn outer_coupling(
    plan: &Stage2Plan,
    phi_t: &[f64],
    theta_r: &[f64],
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
) -> Result<CMat> {
    let a_t = response_matrix(phi_t, tx.n_elements, tx.spacing)?;
    let a_r = response_matrix(theta_r, rx.n_elements, rx.spacing)?;
    let left = plan.p.transpose() * a_t.conjugate();
    let right = plan.w.adjoint() * a_r;
    Ok(left.kronecker(&right))
}
