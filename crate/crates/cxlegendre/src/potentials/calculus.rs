//! Wirtinger-to-real dictionary.
//!
//! Real coordinates are blocked `(x₁..xₙ, y₁..yₙ)` and `∇ = (∂/∂x, ∂/∂y)`.
//! With `∂ = (∂/∂x − i∂/∂y)/2` the rules used below are, for a real-valued
//! function with holomorphic gradient `g`, mixed Hessian `H` (Hermitian) and
//! holomorphic Hessian `S` (symmetric):
//!
//! ```text
//! ∇    = (2Re g, −2Im g)
//! ∇²   = [ 2Re(S+H)   2Im(H−S) ]
//!        [ 2Im(H−S)ᵀ  2Re(H−S) ]
//! ```
//!
//! For `2Re u` with `u` holomorphic (second derivative `S`):
//! `∇ = (2Re u′, −2Im u′)`, `∇² = [[2Re S, −2Im S], [−2Im Sᵀ, −2Re S]]`,
//! and for `2Re u` with `u` anti-holomorphic (derivatives in the conjugate
//! variable, `P = ∂²u/∂q̄∂q̄`):
//! `∇ = (2Re A, 2Im A)`, `∇² = [[2Re P, 2Im P], [2Im Pᵀ, −2Re P]]`.
//! The mixed block of `2Re u(z, q)` (holomorphic in z, anti-holomorphic in
//! q, `T = ∂²u/∂z∂q̄`), rows z and columns q, is
//! `[[2Re T, 2Im T], [−2Im T, 2Re T]]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CVec = Vec<Complex64>;
pub type CMat = Vec<Vec<Complex64>>;

/// ∇ of a real function (or of 2Re of a holomorphic one) from ∂/∂z data.
pub fn grad_from_dz(g: &[Complex64]) -> DVector<f64> {
    let n = g.len();
    let mut v = DVector::zeros(2 * n);
    for (j, gj) in g.iter().enumerate() {
        v[j] = 2.0 * gj.re;
        v[n + j] = -2.0 * gj.im;
    }
    v
}

/// ∇ of 2Re u for anti-holomorphic u from ∂/∂q̄ data.
pub fn grad_from_dqbar(a: &[Complex64]) -> DVector<f64> {
    let n = a.len();
    let mut v = DVector::zeros(2 * n);
    for (j, aj) in a.iter().enumerate() {
        v[j] = 2.0 * aj.re;
        v[n + j] = 2.0 * aj.im;
    }
    v
}

/// ∇² of a real function from its mixed (`H`) and holomorphic (`S`) Hessians.
pub fn hess_real(h: &CMat, s: &CMat) -> DMatrix<f64> {
    let n = h.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let sum = s[j][k] + h[j][k];
            let diff = h[j][k] - s[j][k];
            m[(j, k)] = 2.0 * sum.re;
            m[(n + j, n + k)] = 2.0 * diff.re;
            m[(j, n + k)] = 2.0 * diff.im;
            m[(n + k, j)] = 2.0 * diff.im;
        }
    }
    m
}

/// ∇² of 2Re u for holomorphic u with second derivative `S`.
pub fn hess_from_holo(s: &CMat) -> DMatrix<f64> {
    let n = s.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            m[(j, k)] = 2.0 * s[j][k].re;
            m[(n + j, n + k)] = -2.0 * s[j][k].re;
            m[(j, n + k)] = -2.0 * s[j][k].im;
            m[(n + j, k)] = -2.0 * s[j][k].im;
        }
    }
    m
}

/// ∇² of 2Re u for anti-holomorphic u with conjugate second derivative `P`.
pub fn hess_from_antiholo(p: &CMat) -> DMatrix<f64> {
    let n = p.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            m[(j, k)] = 2.0 * p[j][k].re;
            m[(n + j, n + k)] = -2.0 * p[j][k].re;
            m[(j, n + k)] = 2.0 * p[j][k].im;
            m[(n + j, k)] = 2.0 * p[j][k].im;
        }
    }
    m
}

/// Mixed real block of 2Re u(z, q): rows are z-coordinates, columns are
/// q-coordinates, from `T = ∂²u/∂z∂q̄`.
pub fn cross_from_mixed(t: &CMat) -> DMatrix<f64> {
    let n = t.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            m[(j, k)] = 2.0 * t[j][k].re;
            m[(j, n + k)] = 2.0 * t[j][k].im;
            m[(n + j, k)] = -2.0 * t[j][k].im;
            m[(n + j, n + k)] = 2.0 * t[j][k].re;
        }
    }
    m
}

/// Smallest eigenvalue of a Hermitian matrix via its real embedding
/// [[Re H, −Im H], [Im H, Re H]], whose spectrum doubles that of H.
pub fn hermitian_min_eigenvalue(h: &CMat) -> f64 {
    let n = h.len();
    if n == 1 {
        return h[0][0].re;
    }
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            e[(j, k)] = h[j][k].re;
            e[(n + j, n + k)] = h[j][k].re;
            e[(j, n + k)] = -h[j][k].im;
            e[(n + j, k)] = h[j][k].im;
        }
    }
    e.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Hermitian determinant (real for Hermitian input), n ≤ 2 closed form,
/// LU beyond.
pub fn hermitian_determinant(h: &CMat) -> f64 {
    match h.len() {
        1 => h[0][0].re,
        2 => (h[0][0] * h[1][1] - h[0][1] * h[1][0]).re,
        n => {
            let m = DMatrix::from_fn(n, n, |j, k| h[j][k]);
            m.lu().determinant().re
        }
    }
}

/// Maximum deviation from Hermitian symmetry.
pub fn hermitian_asymmetry(h: &CMat) -> f64 {
    let n = h.len();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            worst = worst.max((h[j][k] - h[k][j].conj()).norm());
        }
    }
    worst
}
