//! Small dense complex linear algebra: condition estimates, eigenvalues of
//! small complex matrices via Hessenberg QR, and polynomial roots via the
//! companion matrix.
//!
//! Everything here targets matrices of order <= 8; no attempt is made at
//! cache-aware blocking or balancing.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// 1-norm (maximum absolute column sum).
pub fn norm1(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse together with the reciprocal 1-norm condition estimate
/// 1 / (||M||_1 ||M^-1||_1). Returns `None` when the LU factorization
/// breaks down entirely.
pub fn invert_with_rcond(m: &DMatrix<Complex64>) -> Option<(DMatrix<Complex64>, f64)> {
    let inv = m.clone().try_inverse()?;
    let rcond = 1.0 / (norm1(m) * norm1(&inv));
    Some((inv, rcond))
}

/// Eigenvalues of a small complex matrix: Householder reduction to upper
/// Hessenberg form followed by the shifted QR iteration.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let mut h = m.clone();
    hessenberg_in_place(&mut h);
    hessenberg_eigenvalues(h)
}

/// Roots of a polynomial with complex coefficients, `coeffs[k]` multiplying
/// x^k. Leading coefficients below 1e-14 of the largest magnitude are
/// dropped; exact roots at zero from trailing zero coefficients are kept.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::InvalidParameter("all-zero polynomial".into()));
    }
    let mut hi = coeffs.len();
    while hi > 1 && coeffs[hi - 1].norm() < 1e-14 * scale {
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi - 1 && coeffs[lo].norm() == 0.0 {
        lo += 1;
    }
    let mut roots = vec![Complex64::new(0.0, 0.0); lo];
    let monic: Vec<Complex64> = coeffs[lo..hi - 1]
        .iter()
        .map(|c| c / coeffs[hi - 1])
        .collect();
    let n = monic.len();
    if n == 0 {
        return Ok(roots);
    }
    // companion matrix: subdiagonal of ones, last column -a_k
    let mut c = DMatrix::zeros(n, n);
    for k in 0..n - 1 {
        c[(k + 1, k)] = Complex64::new(1.0, 0.0);
    }
    for k in 0..n {
        c[(k, n - 1)] = -monic[k];
    }
    roots.extend(hessenberg_eigenvalues(c)?);
    Ok(roots)
}

/// Chebyshev sample points of the first kind on [-scale, scale].
pub fn chebyshev_nodes(n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|k| scale * (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos())
        .collect()
}

/// Solve the Vandermonde system sum_j c_j t_i^j = v_i for the coefficients
/// c_j, returning them together with the reciprocal condition estimate of
/// the Vandermonde matrix.
pub fn solve_vandermonde(
    nodes: &[Complex64],
    values: &[Complex64],
) -> Result<(Vec<Complex64>, f64)> {
    let n = nodes.len();
    assert_eq!(values.len(), n);
    let mut v = DMatrix::zeros(n, n);
    for (i, t) in nodes.iter().enumerate() {
        let mut p = Complex64::new(1.0, 0.0);
        for j in 0..n {
            v[(i, j)] = p;
            p *= t;
        }
    }
    let (inv, rcond) =
        invert_with_rcond(&v).ok_or(Error::InterpolationIllConditioned { rcond: 0.0 })?;
    let rhs = DMatrix::from_column_slice(n, 1, values);
    let sol = &inv * rhs;
    Ok(((0..n).map(|i| sol[(i, 0)]).collect(), rcond))
}

fn hessenberg_in_place(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let norm_x: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm_x;
        // v = x - alpha e1
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm;
        // rows: A <- (I - beta v v^H) A
        for j in k..n {
            let dot: Complex64 = (0..v.len()).map(|i| v[i].conj() * a[(k + 1 + i, j)]).sum();
            for i in 0..v.len() {
                let delta = beta * v[i] * dot;
                a[(k + 1 + i, j)] -= delta;
            }
        }
        // columns: A <- A (I - beta v v^H)
        for i in 0..n {
            let dot: Complex64 = (0..v.len()).map(|j| a[(i, k + 1 + j)] * v[j]).sum();
            for j in 0..v.len() {
                let delta = beta * dot * v[j].conj();
                a[(i, k + 1 + j)] -= delta;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = Complex64::new(0.0, 0.0);
        }
        a[(k + 1, k)] = alpha;
    }
}

/// Eigenvalues of the 2x2 block [[a, b], [c, d]], the one closer to `d`
/// listed first.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let s = disc.sqrt();
    let (l1, l2) = (tr + s, tr - s);
    if (l1 - d).norm() <= (l2 - d).norm() {
        (l1, l2)
    } else {
        (l2, l1)
    }
}

/// Shifted QR iteration on an upper Hessenberg matrix; eigenvalues only.
fn hessenberg_eigenvalues(mut h: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let mut eigs = Vec::with_capacity(n);
    if n == 0 {
        return Ok(eigs);
    }
    let mut hi = n;
    let mut iter_since_deflation = 0usize;
    let mut total_iters = 0usize;
    let budget = 120 * n;
    while hi > 0 {
        if hi == 1 {
            eigs.push(h[(0, 0)]);
            hi = 0;
            continue;
        }
        // zero out negligible subdiagonals, then find the active window
        let mut lo = hi - 1;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            eigs.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            iter_since_deflation = 0;
            continue;
        }
        if lo == hi - 2 {
            let (l1, l2) = eig2(
                h[(hi - 2, hi - 2)],
                h[(hi - 2, hi - 1)],
                h[(hi - 1, hi - 2)],
                h[(hi - 1, hi - 1)],
            );
            eigs.push(l1);
            eigs.push(l2);
            hi -= 2;
            iter_since_deflation = 0;
            continue;
        }
        total_iters += 1;
        iter_since_deflation += 1;
        if total_iters > budget {
            return Err(Error::NoConvergence(format!(
                "QR iteration exceeded {budget} steps on a {n}x{n} matrix"
            )));
        }
        let mut shift = eig2(
            h[(hi - 2, hi - 2)],
            h[(hi - 2, hi - 1)],
            h[(hi - 1, hi - 2)],
            h[(hi - 1, hi - 1)],
        )
        .0;
        if iter_since_deflation % 12 == 0 {
            // exceptional shift to break symmetry-induced stalls
            shift += Complex64::new(
                1.5 * h[(hi - 1, hi - 2)].norm(),
                0.5 * h[(hi - 2, hi - 3.min(hi - 2))].norm(),
            );
        }
        qr_step(&mut h, lo, hi, shift);
    }
    Ok(eigs)
}

/// One explicit single-shift QR sweep on the active window [lo, hi).
fn qr_step(h: &mut DMatrix<Complex64>, lo: usize, hi: usize, shift: Complex64) {
    let m = hi - lo;
    let mut rot = Vec::with_capacity(m - 1);
    for k in lo..hi {
        h[(k, k)] -= shift;
    }
    // QR by Givens rotations chasing the subdiagonal
    for k in lo..hi - 1 {
        let f = h[(k, k)];
        let g = h[(k + 1, k)];
        let r = (f.norm_sqr() + g.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (1.0, Complex64::new(0.0, 0.0))
        } else if f.norm() == 0.0 {
            (0.0, Complex64::new(1.0, 0.0))
        } else {
            let ph = f / f.norm();
            (f.norm() / r, ph * g.conj() / r)
        };
        for j in k..hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = c * x + s * y;
            h[(k + 1, j)] = -s.conj() * x + c * y;
        }
        rot.push((c, s));
    }
    // form R Q by applying the conjugated rotations on the right
    for (idx, (c, s)) in rot.iter().enumerate() {
        let k = lo + idx;
        for i in lo..(k + 2).min(hi) {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = *c * x + s.conj() * y;
            h[(i, k + 1)] = -*s * x + *c * y;
        }
    }
    for k in lo..hi {
        h[(k, k)] += shift;
    }
}
