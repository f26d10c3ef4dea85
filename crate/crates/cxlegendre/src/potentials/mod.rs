//! Real-analytic strongly plurisubharmonic potentials.
//!
//! A potential φ is carried either as a closed-form family (|z|² and the
//! Fubini–Study potential log(1+|z|²)) or as a truncated Hermitian series,
//! plus weighted sums of those. Each variant knows its polarization
//! φ_ℂ(z, w) — holomorphic in z, anti-holomorphic in w, equal to φ on the
//! diagonal — together with exact first and second derivatives of both the
//! diagonal and the polarized forms. The diastasis
//!
//! ```text
//! D(p, q) = φ(p) + φ(q) − 2 Re φ_ℂ(p, q)
//! ```
//!
//! and its chart-local real derivatives are assembled from that data; they
//! drive every transform and verification downstream.

pub mod calculus;
mod neighborhood;
pub mod series;

pub use neighborhood::{concavity_margin, estimate_neighborhood, NeighborhoodEstimate};
pub use series::{HermitianSeries, MultiIndex};

use crate::domain::ChartedDomain;
use crate::error::{Error, Result};
use calculus::{CMat, CVec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Relative tolerance below which imaginary residues of nominally real
/// evaluations are discarded; larger residues raise an error.
pub const REALNESS_TOL: f64 = 1e-12;

/// Tolerance on Hermitian symmetry of mixed Hessians.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// A real-analytic potential with exact polarization and derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticPotential {
    /// |z|² on ℂⁿ.
    Euclidean { dimension: usize },
    /// log(1 + |z|²) on ℂ (also the chart-local sphere potential).
    FubiniStudy,
    /// Truncated Hermitian series.
    Series(HermitianSeries),
    /// Weighted sum of potentials of equal dimension.
    ScaledSum(Vec<(f64, AnalyticPotential)>),
}

impl AnalyticPotential {
    pub fn euclidean(dimension: usize) -> Self {
        Self::Euclidean { dimension }
    }

    pub fn fubini_study() -> Self {
        Self::FubiniStudy
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Euclidean { dimension } => *dimension,
            Self::FubiniStudy => 1,
            Self::Series(s) => s.dimension(),
            Self::ScaledSum(terms) => terms.first().map_or(0, |(_, p)| p.dimension()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Euclidean { dimension } => {
                if *dimension == 0 {
                    return Err(Error::Config("dimension must be positive".into()));
                }
            }
            Self::FubiniStudy => {}
            Self::Series(_) => {}
            Self::ScaledSum(terms) => {
                if terms.is_empty() {
                    return Err(Error::Config("scaled sum needs at least one term".into()));
                }
                let d = terms[0].1.dimension();
                for (w, p) in terms {
                    if !w.is_finite() {
                        return Err(Error::NonFinite { context: "scaled-sum weight".into() });
                    }
                    p.validate()?;
                    if p.dimension() != d {
                        return Err(Error::DimensionMismatch {
                            context: "scaled-sum terms of different dimension".into(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_dim(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "point of dimension {} for potential of dimension {}",
                    z.len(),
                    self.dimension()
                ),
            });
        }
        Ok(())
    }

    /// φ(z). Exactly real: small imaginary residues of the underlying sum
    /// are discarded, larger ones are an internal consistency error.
    pub fn evaluate(&self, z: &[Complex64]) -> Result<f64> {
        self.check_dim(z)?;
        let raw = self.raw_value(z)?;
        let scale = 1.0 + raw.norm();
        if raw.im.abs() > REALNESS_TOL * scale {
            return Err(Error::ImaginaryResidue {
                residue: raw.im.abs(),
                tolerance: REALNESS_TOL * scale,
                context: "potential evaluation",
            });
        }
        if !raw.re.is_finite() {
            return Err(Error::NonFinite { context: "potential evaluation".into() });
        }
        Ok(raw.re)
    }

    fn raw_value(&self, z: &[Complex64]) -> Result<Complex64> {
        Ok(match self {
            Self::Euclidean { .. } => {
                Complex64::new(z.iter().map(|c| c.norm_sqr()).sum(), 0.0)
            }
            Self::FubiniStudy => Complex64::new((1.0 + z[0].norm_sqr()).ln(), 0.0),
            Self::Series(s) => s.polar(z, z),
            Self::ScaledSum(terms) => {
                let mut acc = Complex64::default();
                for (w, p) in terms {
                    acc += w * p.raw_value(z)?;
                }
                acc
            }
        })
    }

    /// φ_ℂ(z, w). For Fubini–Study the principal branch of log(1 + z·w̄);
    /// pairs on the cut (1 + z·w̄ real ≤ 0, the antipodal locus) are a
    /// domain error.
    pub fn polarize(&self, z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
        self.check_dim(z)?;
        self.check_dim(w)?;
        match self {
            Self::Euclidean { .. } => Ok(z
                .iter()
                .zip(w)
                .map(|(a, b)| a * b.conj())
                .sum()),
            Self::FubiniStudy => Ok(fs_log_arg(z[0], w[0])?.ln()),
            Self::Series(s) => Ok(s.polar(z, w)),
            Self::ScaledSum(terms) => {
                let mut acc = Complex64::default();
                for (wt, p) in terms {
                    acc += wt * p.polarize(z, w)?;
                }
                Ok(acc)
            }
        }
    }

    /// Calabi diastasis D(z, w) = φ(z) + φ(w) − 2 Re φ_ℂ(z, w).
    pub fn diastasis(&self, z: &[Complex64], w: &[Complex64]) -> Result<f64> {
        Ok(self.evaluate(z)? + self.evaluate(w)? - 2.0 * self.polarize(z, w)?.re)
    }

    /// Holomorphic gradient ∂φ/∂z at a point.
    pub fn holo_grad(&self, z: &[Complex64]) -> Result<CVec> {
        self.check_dim(z)?;
        Ok(match self {
            Self::Euclidean { .. } => z.iter().map(|c| c.conj()).collect(),
            Self::FubiniStudy => vec![z[0].conj() / (1.0 + z[0].norm_sqr())],
            Self::Series(s) => s.polar_dz(z, z),
            Self::ScaledSum(terms) => {
                let n = self.dimension();
                let mut acc = vec![Complex64::default(); n];
                for (w, p) in terms {
                    for (a, g) in acc.iter_mut().zip(p.holo_grad(z)?) {
                        *a += w * g;
                    }
                }
                acc
            }
        })
    }

    /// Mixed complex Hessian H[j][k] = ∂²φ/∂z_j∂z̄_k (Hermitian).
    pub fn mixed_hessian(&self, z: &[Complex64]) -> Result<CMat> {
        self.check_dim(z)?;
        Ok(match self {
            Self::Euclidean { dimension } => identity_cmat(*dimension),
            Self::FubiniStudy => {
                let d = 1.0 + z[0].norm_sqr();
                vec![vec![Complex64::new(1.0 / (d * d), 0.0)]]
            }
            Self::Series(s) => s.polar_dz_dwbar(z, z),
            Self::ScaledSum(terms) => {
                let n = self.dimension();
                let mut acc = vec![vec![Complex64::default(); n]; n];
                for (w, p) in terms {
                    let h = p.mixed_hessian(z)?;
                    for j in 0..n {
                        for k in 0..n {
                            acc[j][k] += w * h[j][k];
                        }
                    }
                }
                acc
            }
        })
    }

    /// Holomorphic Hessian S[j][k] = ∂²φ/∂z_j∂z_k (symmetric).
    pub fn holo_hessian(&self, z: &[Complex64]) -> Result<CMat> {
        self.check_dim(z)?;
        Ok(match self {
            Self::Euclidean { dimension } => zero_cmat(*dimension),
            Self::FubiniStudy => {
                let d = 1.0 + z[0].norm_sqr();
                let zb = z[0].conj();
                vec![vec![-zb * zb / (d * d)]]
            }
            Self::Series(s) => s.polar_dzz(z, z),
            Self::ScaledSum(terms) => {
                let n = self.dimension();
                let mut acc = vec![vec![Complex64::default(); n]; n];
                for (w, p) in terms {
                    let h = p.holo_hessian(z)?;
                    for j in 0..n {
                        for k in 0..n {
                            acc[j][k] += w * h[j][k];
                        }
                    }
                }
                acc
            }
        })
    }

    /// ∂φ_ℂ/∂z at (z, w).
    pub fn polar_dz(&self, z: &[Complex64], w: &[Complex64]) -> Result<CVec> {
        Ok(match self {
            Self::Euclidean { .. } => w.iter().map(|c| c.conj()).collect(),
            Self::FubiniStudy => vec![w[0].conj() / fs_log_arg(z[0], w[0])?],
            Self::Series(s) => s.polar_dz(z, w),
            Self::ScaledSum(terms) => {
                let n = self.dimension();
                let mut acc = vec![Complex64::default(); n];
                for (wt, p) in terms {
                    for (a, g) in acc.iter_mut().zip(p.polar_dz(z, w)?) {
                        *a += wt * g;
                    }
                }
                acc
            }
        })
    }

    /// ∂²φ_ℂ/∂z∂z at (z, w).
    pub fn polar_dzz(&self, z: &[Complex64], w: &[Complex64]) -> Result<CMat> {
        Ok(match self {
            Self::Euclidean { dimension } => zero_cmat(*dimension),
            Self::FubiniStudy => {
                let v = fs_log_arg(z[0], w[0])?;
                let wb = w[0].conj();
                vec![vec![-wb * wb / (v * v)]]
            }
            Self::Series(s) => s.polar_dzz(z, w),
            Self::ScaledSum(terms) => self.combine_mats(terms, |p| p.polar_dzz(z, w))?,
        })
    }

    /// ∂φ_ℂ/∂w̄ at (z, w).
    pub fn polar_dwbar(&self, z: &[Complex64], w: &[Complex64]) -> Result<CVec> {
        Ok(match self {
            Self::Euclidean { .. } => z.to_vec(),
            Self::FubiniStudy => vec![z[0] / fs_log_arg(z[0], w[0])?],
            Self::Series(s) => s.polar_dwbar(z, w),
            Self::ScaledSum(terms) => {
                let n = self.dimension();
                let mut acc = vec![Complex64::default(); n];
                for (wt, p) in terms {
                    for (a, g) in acc.iter_mut().zip(p.polar_dwbar(z, w)?) {
                        *a += wt * g;
                    }
                }
                acc
            }
        })
    }

    /// ∂²φ_ℂ/∂w̄∂w̄ at (z, w).
    pub fn polar_dwbar2(&self, z: &[Complex64], w: &[Complex64]) -> Result<CMat> {
        Ok(match self {
            Self::Euclidean { dimension } => zero_cmat(*dimension),
            Self::FubiniStudy => {
                let v = fs_log_arg(z[0], w[0])?;
                vec![vec![-z[0] * z[0] / (v * v)]]
            }
            Self::Series(s) => s.polar_dwbar2(z, w),
            Self::ScaledSum(terms) => self.combine_mats(terms, |p| p.polar_dwbar2(z, w))?,
        })
    }

    /// T[j][k] = ∂²φ_ℂ/∂z_j∂w̄_k at (z, w).
    pub fn polar_dz_dwbar(&self, z: &[Complex64], w: &[Complex64]) -> Result<CMat> {
        Ok(match self {
            Self::Euclidean { dimension } => identity_cmat(*dimension),
            Self::FubiniStudy => {
                let v = fs_log_arg(z[0], w[0])?;
                vec![vec![1.0 / (v * v)]]
            }
            Self::Series(s) => s.polar_dz_dwbar(z, w),
            Self::ScaledSum(terms) => self.combine_mats(terms, |p| p.polar_dz_dwbar(z, w))?,
        })
    }

    fn combine_mats(
        &self,
        terms: &[(f64, AnalyticPotential)],
        f: impl Fn(&AnalyticPotential) -> Result<CMat>,
    ) -> Result<CMat> {
        let n = self.dimension();
        let mut acc = vec![vec![Complex64::default(); n]; n];
        for (w, p) in terms {
            let m = f(p)?;
            for j in 0..n {
                for k in 0..n {
                    acc[j][k] += w * m[j][k];
                }
            }
        }
        Ok(acc)
    }

    /// (∂φ, ∂̄φ, ∂∂̄φ): holomorphic gradient, its conjugate, and the mixed
    /// Hessian validated to be Hermitian.
    pub fn complex_derivatives(&self, z: &[Complex64]) -> Result<(CVec, CVec, CMat)> {
        let dz = self.holo_grad(z)?;
        let dzbar: CVec = dz.iter().map(|c| c.conj()).collect();
        let h = self.mixed_hessian(z)?;
        let asym = calculus::hermitian_asymmetry(&h);
        if asym > HERMITIAN_TOL {
            return Err(Error::HessianAsymmetry { asymmetry: asym });
        }
        Ok((dz, dzbar, h))
    }

    /// ∇φ in real block coordinates.
    pub fn real_grad(&self, z: &[Complex64]) -> Result<DVector<f64>> {
        Ok(calculus::grad_from_dz(&self.holo_grad(z)?))
    }

    /// ∇²φ in real block coordinates.
    pub fn real_hessian(&self, z: &[Complex64]) -> Result<DMatrix<f64>> {
        Ok(calculus::hess_real(
            &self.mixed_hessian(z)?,
            &self.holo_hessian(z)?,
        ))
    }

    /// ∇_z D(·, q) at z.
    pub fn diastasis_grad_z(&self, z: &[Complex64], q: &[Complex64]) -> Result<DVector<f64>> {
        Ok(self.real_grad(z)? - calculus::grad_from_dz(&self.polar_dz(z, q)?))
    }

    /// ∇²_z D(·, q) at z.
    pub fn diastasis_hess_z(&self, z: &[Complex64], q: &[Complex64]) -> Result<DMatrix<f64>> {
        Ok(self.real_hessian(z)? - calculus::hess_from_holo(&self.polar_dzz(z, q)?))
    }

    /// ∇_q D(z, ·) at q.
    pub fn diastasis_grad_q(&self, z: &[Complex64], q: &[Complex64]) -> Result<DVector<f64>> {
        Ok(self.real_grad(q)? - calculus::grad_from_dqbar(&self.polar_dwbar(z, q)?))
    }

    /// ∇²_q D(z, ·) at q.
    pub fn diastasis_hess_q(&self, z: &[Complex64], q: &[Complex64]) -> Result<DMatrix<f64>> {
        Ok(self.real_hessian(q)? - calculus::hess_from_antiholo(&self.polar_dwbar2(z, q)?))
    }

    /// Mixed block ∂²D/∂z∂q (rows z-coordinates, columns q-coordinates).
    pub fn diastasis_cross_zq(&self, z: &[Complex64], q: &[Complex64]) -> Result<DMatrix<f64>> {
        Ok(-calculus::cross_from_mixed(&self.polar_dz_dwbar(z, q)?))
    }
}

/// 1 + z·w̄ with the Fubini–Study branch-cut guard.
fn fs_log_arg(z: Complex64, w: Complex64) -> Result<Complex64> {
    let v = 1.0 + z * w.conj();
    let scale = 1.0 + z.norm() * w.norm();
    if v.norm() < 1e-14 * scale || (v.re <= 0.0 && v.im.abs() < 1e-14 * scale) {
        return Err(Error::PolarizationDomain { value: format!("{v}") });
    }
    Ok(v)
}

fn identity_cmat(n: usize) -> CMat {
    let mut m = vec![vec![Complex64::default(); n]; n];
    for (j, row) in m.iter_mut().enumerate() {
        row[j] = Complex64::new(1.0, 0.0);
    }
    m
}

fn zero_cmat(n: usize) -> CMat {
    vec![vec![Complex64::default(); n]; n]
}

/// Smallest eigenvalue of the mixed Hessian over every grid node of the
/// domain. A positive result certifies strong plurisubharmonicity at grid
/// scale.
pub fn check_strong_psh(potential: &AnalyticPotential, domain: &ChartedDomain) -> Result<f64> {
    let mut min_eig = f64::INFINITY;
    for chart in 0..domain.chart_count() {
        let grid = domain.chart(chart).grid();
        for idx in grid.iter_indices() {
            let p = domain.node(chart, &idx);
            let h = potential.mixed_hessian(&p.z)?;
            let asym = calculus::hermitian_asymmetry(&h);
            if asym > HERMITIAN_TOL {
                return Err(Error::HessianAsymmetry { asymmetry: asym });
            }
            min_eig = min_eig.min(calculus::hermitian_min_eigenvalue(&h));
        }
    }
    Ok(min_eig)
}

#[cfg(test)]
mod tests;
