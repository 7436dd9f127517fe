//! Dense complex linear-algebra helpers shared by the estimator stages.
//!
//! nalgebra supplies factorizations (LU, Cholesky, SVD, Hermitian eigen); this
//! module adds the structured pieces that have no off-the-shelf home: DFT
//! constructors, the column-wise Khatri-Rao product, eigenvalues of a complex
//! companion matrix for polynomial rooting, and a power iteration for the
//! dominant singular pair of a sparsely observed residual.

use alloc::{vec, vec::Vec};
use core::f64::consts::PI;

#[allow(unused_imports)] // float math via trait when built without std
use num_traits::Float;
use rand::Rng;

use crate::error::CascadeError;
use crate::{C64, CMat, CVec, Result};

/// Square DFT matrix with unit-modulus entries `exp(-2πi·jk/n)`.
pub fn dft_matrix(n: usize) -> CMat {
    CMat::from_fn(n, n, |j, k| {
        C64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64)
    })
}

/// Unitary DFT matrix (`dft_matrix` scaled by `1/√n`).
pub fn unitary_dft(n: usize) -> CMat {
    dft_matrix(n).map(|z| z / (n as f64).sqrt())
}

/// Unitary DFT with i.i.d. uniform random phases applied to the rows.
///
/// The product of a unit-modulus diagonal and a unitary matrix stays unitary,
/// so the result is exactly invertible with condition number 1.
pub fn randomized_unitary_dft<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let mut x = unitary_dft(n);
    for j in 0..n {
        let phase = C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        for k in 0..n {
            x[(j, k)] *= phase;
        }
    }
    x
}

/// Column-wise Khatri-Rao product: column `j` of the result is
/// `a.column(j) ⊗ b.column(j)`.
pub fn khatri_rao(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.ncols(), "khatri_rao: column count mismatch");
    let (ma, mb, n) = (a.nrows(), b.nrows(), a.ncols());
    CMat::from_fn(ma * mb, n, |row, col| {
        a[(row / mb, col)] * b[(row % mb, col)]
    })
}

/// Stack the columns of `m` into a single vector.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_iterator(m.nrows() * m.ncols(), m.iter().cloned())
}

/// Standard circularly-symmetric complex Gaussian, `E|z|² = 1`.
///
/// Single-draw Box-Muller: `|z|² ~ Exp(1)`, phase uniform.
pub fn standard_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let r = (-u.ln()).sqrt();
    C64::from_polar(r, rng.random_range(0.0..2.0 * PI))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is re-hermitized (`(R + R^H)/2`) before factorizing so that
/// accumulated rounding from covariance construction cannot leak in.
pub fn hermitian_eigen_sorted(r: &CMat) -> (Vec<f64>, CMat) {
    let n = r.nrows();
    let herm = (r + r.adjoint()).map(|z| z * 0.5);
    let se = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `X = A⁻¹ B` by partially pivoted LU.
pub fn solve_left(a: &CMat, b: &CMat) -> Result<CMat> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| CascadeError::Numeric("singular matrix in left solve".into()))
}

/// `X = B A⁻¹` by solving the transposed system.
pub fn solve_right(b: &CMat, a: &CMat) -> Result<CMat> {
    Ok(solve_left(&a.transpose(), &b.transpose())?.transpose())
}

/// Minimum-norm least squares `argmin ‖Ax − b‖₂` via the normal equations.
///
/// A Cholesky solve is attempted first; if the Gram matrix is numerically
/// singular the ridge `1e-12·tr/n` is added. Intended for small, thin systems
/// (support refits, baseband solves).
pub fn lstsq(a: &CMat, b: &CVec) -> Result<CVec> {
    let gram = a.adjoint() * a;
    let rhs = a.adjoint() * b;
    if let Some(chol) = gram.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    let n = gram.nrows();
    let ridge = gram.diagonal().iter().map(|z| z.re).sum::<f64>() / n as f64 * 1e-12 + 1e-300;
    let damped = gram + CMat::identity(n, n) * C64::new(ridge, 0.0);
    damped
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CascadeError::Numeric("degenerate least-squares system".into()))
}

// ---------------------------------------------------------------------------
// Dominant singular pair of a sparsely observed matrix
// ---------------------------------------------------------------------------

/// Dominant singular triple `(u, σ, v)` of a matrix given by its nonzero
/// entries, via power iteration on `A^H A`.
///
/// Deterministic: the start vector is fixed. Returns `σ = 0` with zero vectors
/// when all entries vanish.
pub fn dominant_singular_pair(
    entries: &[((usize, usize), C64)],
    nrows: usize,
    ncols: usize,
    max_iter: usize,
    tol: f64,
) -> (CVec, f64, CVec) {
    let mut v = CVec::from_fn(ncols, |k, _| C64::from_polar(1.0, 0.7 * k as f64));
    v /= C64::new((ncols as f64).sqrt(), 0.0);
    let mut y = CVec::zeros(nrows);

    let apply = |v: &CVec, y: &mut CVec| {
        y.fill(C64::new(0.0, 0.0));
        for &((i, k), val) in entries {
            y[i] += val * v[k];
        }
    };
    let apply_adjoint = |y: &CVec, x: &mut CVec| {
        x.fill(C64::new(0.0, 0.0));
        for &((i, k), val) in entries {
            x[k] += val.conj() * y[i];
        }
    };

    let mut sigma = 0.0;
    let mut x = CVec::zeros(ncols);
    for _ in 0..max_iter {
        apply(&v, &mut y);
        let norm_y = y.norm();
        if norm_y == 0.0 {
            return (CVec::zeros(nrows), 0.0, CVec::zeros(ncols));
        }
        apply_adjoint(&y, &mut x);
        let norm_x = x.norm();
        if norm_x == 0.0 {
            return (CVec::zeros(nrows), 0.0, CVec::zeros(ncols));
        }
        v = &x / C64::new(norm_x, 0.0);
        let new_sigma = norm_y;
        let done = (new_sigma - sigma).abs() <= tol * new_sigma.max(1e-300);
        sigma = new_sigma;
        if done {
            break;
        }
    }
    apply(&v, &mut y);
    sigma = y.norm();
    let u = if sigma > 0.0 {
        &y / C64::new(sigma, 0.0)
    } else {
        CVec::zeros(nrows)
    };
    (u, sigma, v)
}

// ---------------------------------------------------------------------------
// Polynomial rooting via companion-matrix QR
// ---------------------------------------------------------------------------

/// All roots of `Σ coeffs[k] z^k` (coefficients in ascending degree).
///
/// Negligible leading coefficients (relative to the largest) are trimmed —
/// those roots escape to infinity; trailing zeros become roots at the origin.
/// The remaining degree is handled by eigenvalues of the balanced companion
/// matrix.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let max_mag = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max_mag == 0.0 {
        return Err(CascadeError::domain("all polynomial coefficients are zero"));
    }
    let cut = max_mag * 1e-13;
    let mut hi = coeffs.len() - 1;
    while hi > 0 && coeffs[hi].norm() < cut {
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi && coeffs[lo].norm() == 0.0 {
        lo += 1;
    }
    let mut roots = vec![C64::new(0.0, 0.0); lo];
    let degree = hi - lo;
    if degree == 0 {
        return Ok(roots);
    }
    // Monic companion of the trimmed polynomial, coefficients along the top row.
    let lead = coeffs[hi];
    let n = degree;
    let mut comp = CMat::zeros(n, n);
    for k in 0..n {
        comp[(0, k)] = -coeffs[hi - 1 - k] / lead;
    }
    for k in 1..n {
        comp[(k, k - 1)] = C64::new(1.0, 0.0);
    }
    balance_in_place(&mut comp);
    roots.extend(hessenberg_eigenvalues(comp)?);
    Ok(roots)
}

/// Osborne-style balancing with power-of-two scaling (exact in floating
/// point). Reduces the norm spread of companion matrices before QR.
fn balance_in_place(a: &mut CMat) {
    let n = a.nrows();
    for _sweep in 0..5 {
        let mut converged = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    r += a[(i, j)].norm();
                    c += a[(j, i)].norm();
                }
            }
            if r == 0.0 || c == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = c + r;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / 2.0 {
                f *= 2.0;
                cc *= 2.0;
                rr /= 2.0;
            }
            while cc >= rr * 2.0 {
                f /= 2.0;
                cc /= 2.0;
                rr *= 2.0;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                let finv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= finv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

/// Eigenvalues of the 2×2 complex matrix `[[a, b], [c, d]]`.
fn eig2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let m = (a + d) * 0.5;
    let s = (((a - d) * 0.5).powi(2) + b * c).sqrt();
    let big = if (m + s).norm() >= (m - s).norm() { m + s } else { m - s };
    if big.norm() == 0.0 {
        return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    }
    // The small eigenvalue through the determinant avoids cancellation.
    let det = a * d - b * c;
    (big, det / big)
}

/// Complex Givens rotation `[c, s; -s̄, c]` (c real) mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    let r = (na * na + nb * nb).sqrt();
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    (na / r, (a / na) * b.conj() / r)
}

/// Eigenvalues of a complex upper Hessenberg matrix by the implicitly
/// shifted single-shift QR iteration with deflation.
fn hessenberg_eigenvalues(mut h: CMat) -> Result<Vec<C64>> {
    let n = h.nrows();
    let mut eigs = vec![C64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eigs);
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iters_here = 0usize;

    loop {
        // Flush negligible subdiagonals.
        for i in 1..=hi {
            let scale = h[(i - 1, i - 1)].norm() + h[(i, i)].norm();
            if h[(i, i - 1)].norm() <= eps * scale {
                h[(i, i - 1)] = C64::new(0.0, 0.0);
            }
        }
        // Deflate converged 1×1 tail blocks.
        if hi == 0 || h[(hi, hi - 1)].norm() == 0.0 {
            eigs[hi] = h[(hi, hi)];
            if hi == 0 {
                return Ok(eigs);
            }
            hi -= 1;
            iters_here = 0;
            continue;
        }
        // Closed-form 2×2 deflation.
        if hi == 1 || h[(hi - 1, hi - 2)].norm() == 0.0 {
            let (l1, l2) = eig2(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            eigs[hi] = l1;
            eigs[hi - 1] = l2;
            if hi == 1 {
                return Ok(eigs);
            }
            hi -= 2;
            iters_here = 0;
            continue;
        }

        let mut lo = hi;
        while lo > 0 && h[(lo, lo - 1)].norm() != 0.0 {
            lo -= 1;
        }

        iters_here += 1;
        if iters_here > 120 {
            return Err(CascadeError::Numeric(
                "QR iteration failed to converge".into(),
            ));
        }
        let shift = if iters_here % 20 == 0 {
            // Exceptional shift to break symmetric stalls.
            h[(hi, hi)] + h[(hi, hi - 1)] * C64::new(1.25, 0.75)
        } else {
            let (l1, l2) = eig2(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            let d = h[(hi, hi)];
            if (l1 - d).norm() <= (l2 - d).norm() { l1 } else { l2 }
        };

        // Implicit shift: chase the bulge from `lo` down to `hi`.
        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            let (c, s) = givens(x, y);
            let cs = C64::new(c, 0.0);
            // Rows k, k+1 (left multiplication by G).
            let col_start = k.saturating_sub(1).max(lo);
            for j in col_start..n {
                let t1 = h[(k, j)];
                let t2 = h[(k + 1, j)];
                h[(k, j)] = cs * t1 + s * t2;
                h[(k + 1, j)] = -s.conj() * t1 + cs * t2;
            }
            // Columns k, k+1 (right multiplication by G^H).
            let row_end = (k + 2).min(hi) + 1;
            for i in 0..row_end {
                let t1 = h[(i, k)];
                let t2 = h[(i, k + 1)];
                h[(i, k)] = cs * t1 + s.conj() * t2;
                h[(i, k + 1)] = -s * t1 + cs * t2;
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn poly_from_roots(roots: &[C64]) -> Vec<C64> {
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        coeffs
    }

    fn assert_root_multiset_close(found: &[C64], expected: &[C64], tol: f64) {
        assert_eq!(found.len(), expected.len());
        let mut used = vec![false; expected.len()];
        for &f in found {
            let mut best = None;
            let mut best_d = f64::INFINITY;
            for (i, &e) in expected.iter().enumerate() {
                if !used[i] && (f - e).norm() < best_d {
                    best_d = (f - e).norm();
                    best = Some(i);
                }
            }
            let i = best.expect("unmatched root");
            assert!(best_d < tol, "root {f} off by {best_d:.3e}");
            used[i] = true;
        }
    }

    #[test]
    fn dft_is_unitary() {
        let x = unitary_dft(8);
        let gram = x.adjoint() * &x;
        assert_relative_eq!((gram - CMat::identity(8, 8)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn randomized_dft_is_unitary_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = randomized_unitary_dft(16, &mut rng);
        let gram = x.adjoint() * &x;
        assert!((gram - CMat::identity(16, 16)).norm() < 1e-10);
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let x2 = randomized_unitary_dft(16, &mut rng2);
        assert_eq!(x, x2);
    }

    #[test]
    fn khatri_rao_matches_per_column_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = CMat::from_fn(3, 4, |_, _| standard_complex_gaussian(&mut rng));
        let b = CMat::from_fn(5, 4, |_, _| standard_complex_gaussian(&mut rng));
        let kr = khatri_rao(&a, &b);
        for col in 0..4 {
            let expect = CMat::from_column_slice(3, 1, a.column(col).as_slice())
                .kronecker(&CMat::from_column_slice(5, 1, b.column(col).as_slice()));
            for row in 0..15 {
                assert_relative_eq!(kr[(row, col)].re, expect[(row, 0)].re, epsilon = 1e-14);
                assert_relative_eq!(kr[(row, col)].im, expect[(row, 0)].im, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn hermitian_eigen_sorted_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = CMat::from_fn(7, 7, |_, _| standard_complex_gaussian(&mut rng));
        let h = &a * a.adjoint();
        let (vals, vecs) = hermitian_eigen_sorted(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let lam = CMat::from_fn(7, 7, |i, j| {
            if i == j { C64::new(vals[i], 0.0) } else { C64::new(0.0, 0.0) }
        });
        let recon = &vecs * lam * vecs.adjoint();
        assert!((recon - h).norm() < 1e-10);
    }

    #[test]
    fn roots_of_known_polynomials() {
        // (z - 2)(z + 1) = z² - z - 2
        let roots = polynomial_roots(&[
            C64::new(-2.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(1.0, 0.0),
        ])
        .unwrap();
        assert_root_multiset_close(&roots, &[C64::new(2.0, 0.0), C64::new(-1.0, 0.0)], 1e-12);
    }

    #[test]
    fn roots_of_random_complex_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for deg in [3usize, 8, 15, 26] {
            let expected: Vec<C64> = (0..deg)
                .map(|_| standard_complex_gaussian(&mut rng) * 1.2)
                .collect();
            let coeffs = poly_from_roots(&expected);
            let roots = polynomial_roots(&coeffs).unwrap();
            assert_root_multiset_close(&roots, &expected, 1e-7);
        }
    }

    #[test]
    fn roots_handle_origin_and_tiny_leading_coefficients() {
        // z² (z - 3) plus a negligible cubic-degree-4 perturbation.
        let mut coeffs = vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-3.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1e-16, 0.0),
        ];
        let roots = polynomial_roots(&coeffs).unwrap();
        assert_root_multiset_close(
            &roots,
            &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(3.0, 0.0)],
            1e-9,
        );
        coeffs.truncate(1);
        assert!(polynomial_roots(&coeffs).is_err());
    }

    #[test]
    fn roots_of_conjugate_reciprocal_polynomial_pair_up() {
        // Self-inversive spectrum polynomial built from two unit-circle sources.
        let s = 8usize;
        let a = |c: f64| CVec::from_fn(s, |k, _| C64::from_polar(1.0, PI * c * k as f64));
        let a1 = a(0.3);
        let a2 = a(-0.55);
        let proj = CMat::identity(s, s)
            - (&a1 * a1.adjoint()).map(|z| z / s as f64)
            - (&a2 * a2.adjoint()).map(|z| z / s as f64);
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * s - 1];
        for m in -(s as isize - 1)..=(s as isize - 1) {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..s {
                let j = i as isize + m;
                if (0..s as isize).contains(&j) {
                    acc += proj[(i, j as usize)];
                }
            }
            coeffs[(m + s as isize - 1) as usize] = acc;
        }
        let roots = polynomial_roots(&coeffs).unwrap();
        assert_eq!(roots.len(), 2 * (s - 1));
        // Every root's conjugate reciprocal is also a root.
        for &r in &roots {
            let partner = C64::new(1.0, 0.0) / r.conj();
            let d = roots.iter().map(|&q| (q - partner).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-6, "missing reciprocal partner for {r}");
        }
    }

    #[test]
    fn dominant_singular_pair_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = CMat::from_fn(9, 6, |_, _| standard_complex_gaussian(&mut rng));
        let entries: Vec<((usize, usize), C64)> = (0..9)
            .flat_map(|i| (0..6).map(move |k| ((i, k), ())))
            .map(|((i, k), _)| ((i, k), a[(i, k)]))
            .collect();
        let (u, sigma, v) = dominant_singular_pair(&entries, 9, 6, 200, 1e-12);
        let svd = a.clone().svd(false, false);
        assert_relative_eq!(sigma, svd.singular_values[0], epsilon = 1e-8);
        // u, v reproduce the rank-one action: ‖A v − σ u‖ small.
        assert!((&a * &v - &u * C64::new(sigma, 0.0)).norm() < 1e-7);

        let (_, zero_sigma, _) = dominant_singular_pair(&[], 4, 4, 50, 1e-12);
        assert_eq!(zero_sigma, 0.0);
    }

    #[test]
    fn lstsq_recovers_consistent_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = CMat::from_fn(10, 3, |_, _| standard_complex_gaussian(&mut rng));
        let x_true = CVec::from_fn(3, |_, _| standard_complex_gaussian(&mut rng));
        let b = &a * &x_true;
        let x = lstsq(&a, &b).unwrap();
        assert!((x - x_true).norm() < 1e-10);
    }
}
