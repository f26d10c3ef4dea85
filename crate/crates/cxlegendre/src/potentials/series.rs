//! Truncated Hermitian power series Σ c[α|β] zᵅ z̄ᵝ.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Exponent multi-index; length equals the complex dimension.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// zᵅ.
    pub fn monomial(&self, z: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(z)
            .fold(Complex64::new(1.0, 0.0), |acc, (&e, &zj)| {
                acc * zj.powu(e as u32)
            })
    }

    /// ∂(zᵅ)/∂z_j as (coefficient, lowered index); zero when α_j = 0.
    fn lower(&self, j: usize) -> Option<(f64, MultiIndex)> {
        if self.0[j] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[j] -= 1;
        Some((self.0[j] as f64, MultiIndex(e)))
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Finite coefficient table of a real-analytic potential in polarized form.
///
/// Hermitian symmetry `c[α|β] = conj(c[β|α])` is enforced at construction;
/// it is exactly the condition making the diagonal restriction real-valued.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSeries {
    dimension: usize,
    degree_bound: usize,
    coefficients: BTreeMap<(MultiIndex, MultiIndex), Complex64>,
}

impl HermitianSeries {
    pub fn new(
        dimension: usize,
        degree_bound: usize,
        terms: impl IntoIterator<Item = (MultiIndex, MultiIndex, Complex64)>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("series dimension must be positive".into()));
        }
        if degree_bound == 0 {
            return Err(Error::Config("series degree bound must be positive".into()));
        }
        let mut coefficients = BTreeMap::new();
        for (alpha, beta, c) in terms {
            if alpha.len() != dimension || beta.len() != dimension {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "index pair {alpha}|{beta} in a dimension-{dimension} series"
                    ),
                });
            }
            if alpha.order() + beta.order() > degree_bound {
                return Err(Error::Config(format!(
                    "term {alpha}|{beta} exceeds degree bound {degree_bound}"
                )));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("coefficient at {alpha}|{beta}"),
                });
            }
            if coefficients.insert((alpha.clone(), beta.clone()), c).is_some() {
                return Err(Error::Config(format!("duplicate term {alpha}|{beta}")));
            }
        }
        let series = Self { dimension, degree_bound, coefficients };
        series.check_hermitian()?;
        Ok(series)
    }

    fn check_hermitian(&self) -> Result<()> {
        for ((alpha, beta), &c) in &self.coefficients {
            let mirrored = self
                .coefficients
                .get(&(beta.clone(), alpha.clone()))
                .copied()
                .unwrap_or_else(|| Complex64::new(0.0, 0.0));
            let expected = mirrored.conj();
            if (c - expected).norm() > 1e-14 * (1.0 + c.norm()) {
                return Err(Error::NonHermitian {
                    alpha: alpha.to_string(),
                    beta: beta.to_string(),
                    found: format!("{c}"),
                    expected: format!("{expected}"),
                });
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, Complex64)> {
        self.coefficients.iter().map(|((a, b), &c)| (a, b, c))
    }

    /// Polarized sum Σ c[α|β] zᵅ w̄ᵝ.
    pub fn polar(&self, z: &[Complex64], w: &[Complex64]) -> Complex64 {
        let wbar: Vec<Complex64> = w.iter().map(|c| c.conj()).collect();
        self.coefficients
            .iter()
            .map(|((a, b), c)| c * a.monomial(z) * b.monomial(&wbar))
            .sum()
    }

    /// ∂/∂z_j of the polarized sum.
    pub fn polar_dz(&self, z: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
        let wbar: Vec<Complex64> = w.iter().map(|c| c.conj()).collect();
        let mut out = vec![Complex64::default(); self.dimension];
        for ((a, b), c) in &self.coefficients {
            let wb = b.monomial(&wbar);
            for (j, slot) in out.iter_mut().enumerate() {
                if let Some((k, low)) = a.lower(j) {
                    *slot += c * k * low.monomial(z) * wb;
                }
            }
        }
        out
    }

    /// ∂/∂w̄_k of the polarized sum.
    pub fn polar_dwbar(&self, z: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
        let wbar: Vec<Complex64> = w.iter().map(|c| c.conj()).collect();
        let mut out = vec![Complex64::default(); self.dimension];
        for ((a, b), c) in &self.coefficients {
            let za = a.monomial(z);
            for (k, slot) in out.iter_mut().enumerate() {
                if let Some((m, low)) = b.lower(k) {
                    *slot += c * m * za * low.monomial(&wbar);
                }
            }
        }
        out
    }

    /// ∂²/∂z_j∂z_k of the polarized sum.
    pub fn polar_dzz(&self, z: &[Complex64], w: &[Complex64]) -> Vec<Vec<Complex64>> {
        let n = self.dimension;
        let wbar: Vec<Complex64> = w.iter().map(|c| c.conj()).collect();
        let mut out = vec![vec![Complex64::default(); n]; n];
        for ((a, b), c) in &self.coefficients {
            let wb = b.monomial(&wbar);
            for j in 0..n {
                let Some((kj, aj)) = a.lower(j) else { continue };
                for k in 0..n {
                    if let Some((kk, ajk)) = aj.lower(k) {
                        out[j][k] += c * kj * kk * ajk.monomial(z) * wb;
                    }
                }
            }
        }
        out
    }

    /// ∂²/∂w̄_j∂w̄_k of the polarized sum.
    pub fn polar_dwbar2(&self, z: &[Complex64], w: &[Complex64]) -> Vec<Vec<Complex64>> {
        let n = self.dimension;
        let wbar: Vec<Complex64> = w.iter().map(|c| c.conj()).collect();
        let mut out = vec![vec![Complex64::default(); n]; n];
        for ((a, b), c) in &self.coefficients {
            let za = a.monomial(z);
            for j in 0..n {
                let Some((kj, bj)) = b.lower(j) else { continue };
                for k in 0..n {
                    if let Some((kk, bjk)) = bj.lower(k) {
                        out[j][k] += c * kj * kk * bjk.monomial(&wbar) * za;
                    }
                }
            }
        }
        out
    }

    /// ∂²/∂z_j∂w̄_k of the polarized sum.
    pub fn polar_dz_dwbar(&self, z: &[Complex64], w: &[Complex64]) -> Vec<Vec<Complex64>> {
        let n = self.dimension;
        let wbar: Vec<Complex64> = w.iter().map(|c| c.conj()).collect();
        let mut out = vec![vec![Complex64::default(); n]; n];
        for ((a, b), c) in &self.coefficients {
            for j in 0..n {
                let Some((kj, aj)) = a.lower(j) else { continue };
                let za = aj.monomial(z);
                for k in 0..n {
                    if let Some((km, bk)) = b.lower(k) {
                        out[j][k] += c * kj * km * za * bk.monomial(&wbar);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_non_hermitian_pair() {
        // c[(1)|(0)] with no conjugate counterpart.
        let err = HermitianSeries::new(
            1,
            2,
            [(MultiIndex(vec![1]), MultiIndex(vec![0]), c(1.0, 0.0))],
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("non-Hermitian"), "{msg}");
        assert!(msg.contains("(1)") && msg.contains("(0)"), "{msg}");
    }

    #[test]
    fn accepts_hermitian_pair_and_evaluates() {
        // 2|z|² as the single diagonal term c[(1)|(1)] = 2.
        let s = HermitianSeries::new(
            1,
            2,
            [(MultiIndex(vec![1]), MultiIndex(vec![1]), c(2.0, 0.0))],
        )
        .unwrap();
        let z = [c(1.0, 0.0)];
        // Independent scalar oracle: 2·z·z̄ at z = 1.
        let oracle = 2.0 * (z[0] * z[0].conj()).re;
        assert!((s.polar(&z, &z).re - oracle).abs() < 1e-15);
        assert_eq!(oracle, 2.0);
    }

    #[test]
    fn rejects_degree_overflow() {
        assert!(HermitianSeries::new(
            1,
            1,
            [(MultiIndex(vec![1]), MultiIndex(vec![1]), c(1.0, 0.0))],
        )
        .is_err());
    }

    #[test]
    fn polar_derivatives_match_finite_differences() {
        // Hermitian set: |z|² + Re(z₁²z̄₂) pair terms in dimension 2.
        let terms = [
            (MultiIndex(vec![1, 0]), MultiIndex(vec![1, 0]), c(1.0, 0.0)),
            (MultiIndex(vec![0, 1]), MultiIndex(vec![0, 1]), c(1.0, 0.0)),
            (MultiIndex(vec![2, 0]), MultiIndex(vec![0, 1]), c(0.3, 0.1)),
            (MultiIndex(vec![0, 1]), MultiIndex(vec![2, 0]), c(0.3, -0.1)),
        ];
        let s = HermitianSeries::new(2, 3, terms).unwrap();
        let z = [c(0.4, -0.2), c(-0.1, 0.5)];
        let w = [c(0.2, 0.3), c(0.6, -0.4)];
        let h = 1e-6;

        // dz_0 by central difference in the holomorphic variable.
        let mut zp = z;
        zp[0] += c(h, 0.0);
        let mut zm = z;
        zm[0] -= c(h, 0.0);
        let fd = (s.polar(&zp, &w) - s.polar(&zm, &w)) / (2.0 * h);
        let dz = s.polar_dz(&z, &w);
        assert!((fd - dz[0]).norm() < 1e-8);

        // dwbar_1: differentiating in w̄ means perturbing w by real h lowers
        // w̄ too, so the central difference in w.re equals ∂/∂w̄ here.
        let mut wp = w;
        wp[1] += c(h, 0.0);
        let mut wm = w;
        wm[1] -= c(h, 0.0);
        let fdw = (s.polar(&z, &wp) - s.polar(&z, &wm)) / (2.0 * h);
        let dw = s.polar_dwbar(&z, &w);
        assert!((fdw - dw[1]).norm() < 1e-8);
    }
}
