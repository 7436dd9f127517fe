//! Nuclear-norm-regularized inductive matrix completion.
//!
//! The transformed channel is observed on a sampling pattern Ω; its low rank
//! is recovered by minimizing
//! `½‖P_Ω(U·V^H) − Y‖_F² + ½μ(‖U‖_F² + ‖V‖_F²)`
//! with a greedy conditional-gradient outer loop that grows the factor rank
//! one atom at a time and an alternating ridge-regression inner loop that
//! refines the factors at fixed rank.

use alloc::{vec, vec::Vec};

#[allow(unused_imports)] // float math via trait when built without std
use num_traits::Float;

use crate::error::CascadeError;
use crate::linalg::{dominant_singular_pair, solve_left, solve_right};
use crate::{C64, CMat, Result};

/// A partially observed matrix plus solver knobs.
#[derive(Debug, Clone)]
pub struct CompletionProblem {
    /// Observed entries keyed by (row, col); no duplicates.
    pub entries: Vec<((usize, usize), C64)>,
    /// Full matrix dimensions (rows, cols).
    pub dims: (usize, usize),
    /// Nuclear-norm weight; 0 interpolates the observations.
    pub mu: f64,
    /// Hard cap on the recovered rank.
    pub max_rank: usize,
    /// Relative objective-change tolerance of the inner loop.
    pub tol: f64,
    /// Outer (rank-growth) iteration cap.
    pub max_outer: usize,
    /// Inner (alternating) iteration cap per rank.
    pub max_inner: usize,
}

impl CompletionProblem {
    pub fn new(
        entries: Vec<((usize, usize), C64)>,
        dims: (usize, usize),
        mu: f64,
        max_rank: usize,
    ) -> Self {
        Self {
            entries,
            dims,
            mu,
            max_rank,
            tol: 1e-8,
            max_outer: 50,
            max_inner: 200,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(CascadeError::config("no observed entries"));
        }
        if self.mu < 0.0 {
            return Err(CascadeError::config("mu must be nonnegative"));
        }
        if self.max_rank == 0 {
            return Err(CascadeError::config("max_rank must be at least one"));
        }
        let (m, k) = self.dims;
        if self.entries.iter().any(|&((r, c), _)| r >= m || c >= k) {
            return Err(CascadeError::config("observed coordinate outside dims"));
        }
        Ok(())
    }
}

/// Low-rank factors recovered by [`gcg_altmin`].
#[derive(Debug, Clone)]
pub struct CompletionResult {
    /// M×r left factor.
    pub u: CMat,
    /// K×r right factor.
    pub v: CMat,
    pub rank_found: usize,
    /// Objective after every inner refinement step, non-increasing.
    pub objective_trace: Vec<f64>,
    /// Set when an iteration cap cut the refinement short.
    pub hit_iteration_cap: bool,
}

impl CompletionResult {
    /// The completed matrix `U·V^H`.
    pub fn low_rank_product(&self) -> CMat {
        &self.u * self.v.adjoint()
    }
}

struct PatternIndex {
    /// Per row: (col, value) pairs.
    rows: Vec<Vec<(usize, C64)>>,
    /// Per col: (row, value) pairs.
    cols: Vec<Vec<(usize, C64)>>,
}

impl PatternIndex {
    fn build(problem: &CompletionProblem) -> Self {
        let (m, k) = problem.dims;
        let mut rows = vec![Vec::new(); m];
        let mut cols = vec![Vec::new(); k];
        for &((r, c), y) in &problem.entries {
            rows[r].push((c, y));
            cols[c].push((r, y));
        }
        Self { rows, cols }
    }
}

fn objective(u: &CMat, v: &CMat, problem: &CompletionProblem) -> f64 {
    let fit: f64 = problem
        .entries
        .iter()
        .map(|&((r, c), y)| {
            let pred = u.row(r).dot(&v.row(c).map(|z| z.conj()));
            (pred - y).norm_sqr()
        })
        .sum();
    0.5 * fit + 0.5 * problem.mu * (u.norm_squared() + v.norm_squared())
}

/// One alternating pass: ridge-update every row of `u` at fixed `v`, then
/// every row of `v` at fixed `u`. Each half step solves the exact regularized
/// least squares, so the objective cannot increase.
fn altmin_pass(u: &mut CMat, v: &mut CMat, index: &PatternIndex, mu: f64) {
    let r = u.ncols();
    update_factor(u, v, &index.rows, mu, r, false);
    // An entry is conjugate-linear in V's row, so the V update fits the
    // conjugated observations.
    update_factor(v, u, &index.cols, mu, r, true);
}

fn update_factor(
    target: &mut CMat,
    other: &CMat,
    observations: &[Vec<(usize, C64)>],
    mu: f64,
    r: usize,
    conjugate_obs: bool,
) {
    for (row, obs) in observations.iter().enumerate() {
        if obs.is_empty() {
            for j in 0..r {
                target[(row, j)] = C64::new(0.0, 0.0);
            }
            continue;
        }
        // Normal equations of min_t ‖B·t − y‖² + μ‖t‖² with rows
        // B[p, a] = conj(other[pos_p, a]), so that Σ_a t_a·conj(other[pos, a])
        // predicts the observed entry.
        let mut gram = CMat::zeros(r, r);
        let mut rhs = CMat::zeros(r, 1);
        for &(pos, y) in obs {
            let y = if conjugate_obs { y.conj() } else { y };
            for a in 0..r {
                let oa = other[(pos, a)];
                rhs[(a, 0)] += oa * y;
                for b in 0..r {
                    gram[(a, b)] += oa * other[(pos, b)].conj();
                }
            }
        }
        let damping = mu.max(1e-12 * gram.trace().re.max(1.0));
        for a in 0..r {
            gram[(a, a)] += C64::new(damping, 0.0);
        }
        if let Some(x) = gram.lu().solve(&rhs) {
            for a in 0..r {
                target[(row, a)] = x[(a, 0)];
            }
        }
    }
}

fn residual_entries(
    u: &CMat,
    v: &CMat,
    problem: &CompletionProblem,
) -> Vec<((usize, usize), C64)> {
    problem
        .entries
        .iter()
        .map(|&((r, c), y)| {
            let pred = if u.ncols() == 0 {
                C64::new(0.0, 0.0)
            } else {
                u.row(r).dot(&v.row(c).map(|z| z.conj()))
            };
            ((r, c), pred - y)
        })
        .collect()
}

/// Greedy conditional-gradient completion with alternating refinement.
///
/// Each outer round forms the residual gradient on the pattern, extracts its
/// dominant singular pair by power iteration, and stops once the dominant
/// singular value falls to the regularization level (that is the stationarity
/// condition of the nuclear-norm problem) or the rank cap is hit. Otherwise
/// the pair joins the factors with a line-search weight and the inner loop
/// re-fits at fixed rank.
pub fn gcg_altmin(problem: &CompletionProblem) -> Result<CompletionResult> {
    problem.validate()?;
    let (m, k) = problem.dims;
    let index = PatternIndex::build(problem);
    let mut u = CMat::zeros(m, 0);
    let mut v = CMat::zeros(k, 0);
    let mut trace = Vec::new();
    let mut hit_cap = false;
    let mut sigma_floor = 0.0;

    for outer in 0..problem.max_outer {
        let residual = residual_entries(&u, &v, problem);
        // The descent atom is −u₁v₁^H for the residual's top singular pair.
        let (atom_u, sigma, atom_v) = dominant_singular_pair(&residual, m, k, 100, 1e-10);
        let atom_u = -atom_u;
        if outer == 0 {
            sigma_floor = sigma * 1e-12;
        }
        // Slack on the σ ≤ μ test: at the regularized optimum the residual's
        // top singular value equals μ exactly, so a strict comparison flips
        // on rounding.
        if sigma <= problem.mu * (1.0 + 1e-3) + sigma_floor || u.ncols() >= problem.max_rank {
            break;
        }
        // Exact line search for the new atom weight α ≥ 0 on
        // ½‖R + α·P_Ω(u v^H)‖² + μα (the atom has unit nuclear norm).
        let mut corr = 0.0;
        let mut gain_norm_sq = 0.0;
        let mut fit = 0.0;
        for &((r, c), res) in &residual {
            let g = atom_u[r] * atom_v[c].conj();
            corr += (g.conj() * res).re;
            gain_norm_sq += g.norm_sqr();
            fit += res.norm_sqr();
        }
        let alpha = (-corr - problem.mu) / gain_norm_sq.max(1e-300);
        if alpha <= 0.0 {
            break;
        }
        // The line search decreases the objective by (σ−μ)²/(2‖P_Ω(uv^H)‖²);
        // a vanishing decrease means the rank is exhausted even when σ sits a
        // few inner-loop tolerances above μ.
        let obj_now =
            0.5 * fit + 0.5 * problem.mu * (u.norm_squared() + v.norm_squared());
        let predicted_decrease = 0.5 * alpha * alpha * gain_norm_sq;
        if predicted_decrease <= problem.tol * obj_now.max(1e-300) {
            break;
        }
        let weight = C64::new(alpha.sqrt(), 0.0);
        u = extend_with_column(&u, &(atom_u * weight));
        v = extend_with_column(&v, &(atom_v * weight));

        // Alternating refinement at the new rank.
        let mut prev = objective(&u, &v, problem);
        trace.push(prev);
        let mut converged = false;
        for _ in 0..problem.max_inner {
            altmin_pass(&mut u, &mut v, &index, problem.mu);
            let obj = objective(&u, &v, problem);
            trace.push(obj);
            if (prev - obj).abs() <= problem.tol * prev.max(1e-300) {
                converged = true;
                break;
            }
            prev = obj;
        }
        hit_cap |= !converged;
        if outer + 1 == problem.max_outer {
            hit_cap = true;
        }
    }

    Ok(CompletionResult {
        rank_found: u.ncols(),
        u,
        v,
        objective_trace: trace,
        hit_iteration_cap: hit_cap,
    })
}

fn extend_with_column(m: &CMat, col: &nalgebra::DVector<C64>) -> CMat {
    let mut out = CMat::zeros(m.nrows(), m.ncols() + 1);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out.set_column(m.ncols(), col);
    out
}

/// Undo the feature transform: `Ĥ₀ = (X_R^H)⁻¹·(U·V^H)·(X_T)⁻¹`.
///
/// With unitary features this reduces to `X_R·(U·V^H)·X_T^H`; the solve form
/// keeps the contract exact for any invertible features.
pub fn recover_h0(result: &CompletionResult, x_r: &CMat, x_t: &CMat) -> Result<CMat> {
    let c0 = result.low_rank_product();
    let left = solve_left(&x_r.adjoint(), &c0)?;
    solve_right(&left, x_t)
}
