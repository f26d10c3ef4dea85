//! Kähler forms, Monge–Ampère densities, pullbacks and the Mabuchi metric.
//!
//! A (1,1)-form is carried in two representations with a fixed conversion
//! law: the Hermitian coefficient matrix `h` (so the form is
//! i Σ h_jk dz_j ∧ dz̄_k) and the real antisymmetric matrix on ℝ²ⁿ in block
//! coordinates,
//!
//! ```text
//! Ω = 2 [ −Im h    Re h ]
//!       [ −Re hᵀ  −Im h ]
//! ```
//!
//! The maximizer map is smooth but not holomorphic, so pullbacks are
//! computed on the real representation with full real Jacobians; the
//! Hermitian picture is recovered through the conversion afterwards.
//!
//! Kähler forms of grid-backed potentials use second-order stencils at grid
//! step; their defect under pullback identities therefore shrinks at second
//! order, which is exactly the refinement signal the verification checks
//! fit.

use crate::domain::{ChartPoint, ChartedDomain};
use crate::error::{Error, Result};
use crate::fields::{SampledFunction, SmoothField};
use crate::gradient_map::{gradient_map_from, GradientMapField};
use crate::potentials::calculus::{hermitian_asymmetry, hermitian_determinant, CMat};
use crate::potentials::AnalyticPotential;
use crate::transforms::{transform_field, EtaContext, TransformContext};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Hermitian n×n coefficients to the real antisymmetric 2n×2n matrix.
pub fn complex_form_to_real(h: &CMat) -> DMatrix<f64> {
    let n = h.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let a = h[j][k].re;
            let b = h[j][k].im;
            m[(j, k)] = -2.0 * b;
            m[(n + j, n + k)] = -2.0 * b;
            m[(j, n + k)] = 2.0 * a;
            m[(n + k, j)] = -2.0 * a;
        }
    }
    m
}

/// Inverse of [`complex_form_to_real`].
pub fn real_form_to_complex(m: &DMatrix<f64>) -> CMat {
    let n = m.nrows() / 2;
    let mut h = vec![vec![Complex64::default(); n]; n];
    for j in 0..n {
        for k in 0..n {
            h[j][k] = Complex64::new(m[(j, n + k)] / 2.0, -m[(j, k)] / 2.0);
        }
    }
    h
}

/// Grid-indexed (1,1)-form in Hermitian representation.
#[derive(Debug, Clone)]
pub struct TwoFormField {
    pub domain: ChartedDomain,
    n: usize,
    /// Flattened per chart: node·n² + j·n + k.
    data: Vec<Vec<Complex64>>,
}

impl TwoFormField {
    pub fn hermitian_at(&self, chart: usize, lin: usize) -> CMat {
        let n = self.n;
        let mut h = vec![vec![Complex64::default(); n]; n];
        for j in 0..n {
            for k in 0..n {
                h[j][k] = self.data[chart][lin * n * n + j * n + k];
            }
        }
        h
    }

    pub fn real_at(&self, chart: usize, idx: &[usize]) -> DMatrix<f64> {
        let lin = self.domain.chart(chart).grid().linear(idx);
        complex_form_to_real(&self.hermitian_at(chart, lin))
    }

    /// Real representation multilinearly interpolated inside the chart box
    /// of the point's own chart.
    pub fn real_interpolated(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        if !self.domain.in_chart_box(p) {
            return Err(Error::OutOfDomain {
                context: format!("form evaluation at {:?}", p.z),
            });
        }
        let grid = self.domain.chart(p.chart).grid();
        let n = self.n;
        let u = p.reals();
        let mut h = vec![vec![Complex64::default(); n]; n];
        for j in 0..n {
            for k in 0..n {
                let re: Vec<f64> = (0..grid.len())
                    .map(|lin| self.data[p.chart][lin * n * n + j * n + k].re)
                    .collect();
                let im: Vec<f64> = (0..grid.len())
                    .map(|lin| self.data[p.chart][lin * n * n + j * n + k].im)
                    .collect();
                h[j][k] = Complex64::new(grid.interpolate(&re, &u)?, grid.interpolate(&im, &u)?);
            }
        }
        Ok(complex_form_to_real(&h))
    }

    /// Smallest Hermitian eigenvalue over all nodes.
    pub fn min_eigenvalue(&self) -> f64 {
        let mut min = f64::INFINITY;
        for chart in 0..self.domain.chart_count() {
            let count = self.domain.chart(chart).grid().len();
            for lin in 0..count {
                let h = self.hermitian_at(chart, lin);
                min = min.min(crate::potentials::calculus::hermitian_min_eigenvalue(&h));
            }
        }
        min
    }

    /// Hermitian symmetry and conversion-law consistency at every node.
    pub fn validate(&self) -> Result<()> {
        for chart in 0..self.domain.chart_count() {
            let count = self.domain.chart(chart).grid().len();
            for lin in 0..count {
                let h = self.hermitian_at(chart, lin);
                let asym = hermitian_asymmetry(&h);
                if asym > 1e-12 {
                    return Err(Error::HessianAsymmetry { asymmetry: asym });
                }
                let m = complex_form_to_real(&h);
                let anti = (&m + m.transpose()).abs().max();
                if anti > 1e-12 {
                    return Err(Error::HessianAsymmetry { asymmetry: anti });
                }
                let back = real_form_to_complex(&m);
                for j in 0..self.n {
                    for k in 0..self.n {
                        if (back[j][k] - h[j][k]).norm() > 1e-12 {
                            return Err(Error::HessianAsymmetry {
                                asymmetry: (back[j][k] - h[j][k]).norm(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// ∂∂̄ of grid data at a node from real second-derivative stencils:
/// H_jk = ¼[(ψ_xjxk + ψ_yjyk) + i(ψ_xjyk − ψ_yjxk)].
fn complex_hessian_of_grid(
    grid: &crate::grid::GridBox,
    values: &[f64],
    idx: &[usize],
    n: usize,
) -> CMat {
    let mut h = vec![vec![Complex64::default(); n]; n];
    for j in 0..n {
        for k in 0..n {
            let xx = grid.node_second_derivative(values, idx, j, k);
            let yy = grid.node_second_derivative(values, idx, n + j, n + k);
            let xy = grid.node_second_derivative(values, idx, j, n + k);
            let yx = grid.node_second_derivative(values, idx, n + j, k);
            h[j][k] = Complex64::new(0.25 * (xx + yy), 0.25 * (xy - yx));
        }
    }
    // Composed face stencils do not commute exactly; Hermitize.
    let mut out = vec![vec![Complex64::default(); n]; n];
    for j in 0..n {
        for k in 0..n {
            out[j][k] = 0.5 * (h[j][k] + h[k][j].conj());
        }
    }
    out
}

/// ω_ψ = ∂∂̄φ (exact) + ∂∂̄ψ (grid-step central stencils) at one interior
/// node.
pub fn kahler_form(
    psi: &SampledFunction,
    omega: &AnalyticPotential,
    chart: usize,
    idx: &[usize],
) -> Result<CMat> {
    let grid = psi.domain.chart(chart).grid();
    if !grid.is_interior(idx, 1) {
        return Err(Error::OutOfDomain {
            context: format!("kahler form stencil at boundary node {idx:?}"),
        });
    }
    kahler_form_any(psi, omega, chart, idx)
}

fn kahler_form_any(
    psi: &SampledFunction,
    omega: &AnalyticPotential,
    chart: usize,
    idx: &[usize],
) -> Result<CMat> {
    let n = psi.domain.dim();
    let grid = psi.domain.chart(chart).grid();
    let p = psi.domain.node(chart, idx);
    let mut h = omega.mixed_hessian(&p.z)?;
    let hp = complex_hessian_of_grid(grid, psi.values(chart), idx, n);
    for j in 0..n {
        for k in 0..n {
            h[j][k] += hp[j][k];
        }
    }
    Ok(h)
}

/// ω_ψ over every node (one-sided stencils at the faces so that
/// interpolation near the boundary stays defined).
pub fn kahler_form_field(psi: &SampledFunction, omega: &AnalyticPotential) -> Result<TwoFormField> {
    let n = psi.domain.dim();
    let mut data = Vec::new();
    for chart in 0..psi.domain.chart_count() {
        let grid = psi.domain.chart(chart).grid();
        let mut flat = vec![Complex64::default(); grid.len() * n * n];
        for idx in grid.iter_indices() {
            let lin = grid.linear(&idx);
            let h = kahler_form_any(psi, omega, chart, &idx)?;
            for j in 0..n {
                for k in 0..n {
                    flat[lin * n * n + j * n + k] = h[j][k];
                }
            }
        }
        data.push(flat);
    }
    Ok(TwoFormField { domain: psi.domain.clone(), n, data })
}

/// Monge–Ampère density det(ω_ψ)/n! at an interior node.
pub fn monge_ampere(
    psi: &SampledFunction,
    omega: &AnalyticPotential,
    chart: usize,
    idx: &[usize],
) -> Result<f64> {
    let h = kahler_form(psi, omega, chart, idx)?;
    let det = hermitian_determinant(&h);
    if det <= 0.0 {
        let p = psi.domain.node(chart, idx);
        return Err(Error::AdmissibilityViolation {
            location: format!("{:?}", p.z),
            density: det,
        });
    }
    let n = psi.domain.dim();
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    Ok(det / factorial)
}

/// Pullback (G*ω)(q) = J(q)ᵀ · Ω(G(q)) · J(q) on real 2-forms.
pub fn pullback_form(
    map: &GradientMapField,
    form: &TwoFormField,
    chart: usize,
    idx: &[usize],
) -> Result<DMatrix<f64>> {
    let j = map.jacobian(chart, idx);
    let target = map.map_point(chart, idx);
    let omega = form.real_interpolated(&target)?;
    Ok(j.transpose() * omega * j)
}

/// Max and mean sup-norm defect of G(η)*ω_η = ω_{L(η)} over interior nodes.
#[derive(Debug, Clone, Copy)]
pub struct PullbackDefect {
    pub max_defect: f64,
    pub mean_defect: f64,
    pub nodes: usize,
}

pub fn pullback_identity_defect(
    ctx: &TransformContext,
    eta: &EtaContext,
) -> Result<PullbackDefect> {
    let eta_sampled = SampledFunction::sample(ctx.domain, eta.field)?;
    let result = transform_field(ctx, eta)?;
    let map = gradient_map_from(ctx, &result)?;
    let form_eta = kahler_form_field(&eta_sampled, ctx.potential)?;
    let form_l = kahler_form_field(&result.transform, ctx.potential)?;

    let mut max_defect = 0.0f64;
    let mut sum = 0.0f64;
    let mut nodes = 0usize;
    for chart in 0..ctx.domain.chart_count() {
        let grid = ctx.domain.chart(chart).grid();
        for idx in grid.iter_indices() {
            if !grid.is_interior(&idx, 2) {
                continue;
            }
            let pulled = pullback_form(&map, &form_eta, chart, &idx)?;
            let target = form_l.real_at(chart, &idx);
            let defect = (pulled - target).abs().max();
            max_defect = max_defect.max(defect);
            sum += defect;
            nodes += 1;
        }
    }
    Ok(PullbackDefect {
        max_defect,
        mean_defect: if nodes > 0 { sum / nodes as f64 } else { 0.0 },
        nodes,
    })
}

/// C^∞ step: 0 for x ≤ 0, 1 for x ≥ 1.
fn smooth_step(x: f64) -> f64 {
    let g = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = g(x);
    let b = g(1.0 - x);
    a / (a + b)
}

/// Partition-of-unity weight of a chart at one of its own grid nodes.
/// Boxes carry weight 1; the sphere uses a radial cutoff between moduli
/// 1.2 and 1.4 glued across the transition so the two charts sum to one.
pub fn chart_weight(domain: &ChartedDomain, chart: usize, p: &ChartPoint) -> f64 {
    match domain {
        ChartedDomain::Box(_) => 1.0,
        ChartedDomain::Sphere { .. } => {
            let r = p.z[0].norm();
            let sigma = |radius: f64| smooth_step((1.4 - radius) / 0.2);
            if chart == 0 {
                sigma(r)
            } else if r < 1e-12 {
                1.0
            } else {
                1.0 - sigma(1.0 / r)
            }
        }
    }
}

/// Mabuchi inner product g(ν, χ)|_ψ = ∫ ν χ det(ω_ψ) over the domain by
/// trapezoid quadrature (chart quadrature with the partition of unity on
/// the sphere).
pub fn mabuchi_inner(
    nu: &SampledFunction,
    chi: &SampledFunction,
    psi: &SampledFunction,
    omega: &AnalyticPotential,
) -> Result<f64> {
    let form = kahler_form_field(psi, omega)?;
    mabuchi_inner_with_form(nu, chi, &form)
}

/// Same, reusing a prebuilt ω_ψ field.
pub fn mabuchi_inner_with_form(
    nu: &SampledFunction,
    chi: &SampledFunction,
    form: &TwoFormField,
) -> Result<f64> {
    let domain = &form.domain;
    let mut acc = 0.0;
    for chart in 0..domain.chart_count() {
        let grid = domain.chart(chart).grid();
        for idx in grid.iter_indices() {
            let lin = grid.linear(&idx);
            let h = form.hermitian_at(chart, lin);
            let density = hermitian_determinant(&h);
            if density <= 0.0 {
                let p = domain.node(chart, &idx);
                return Err(Error::AdmissibilityViolation {
                    location: format!("{:?}", p.z),
                    density,
                });
            }
            let p = domain.node(chart, &idx);
            let w = grid.trapezoid_weight(&idx) * chart_weight(domain, chart, &p);
            if w == 0.0 {
                continue;
            }
            acc += w * nu.values(chart)[lin] * chi.values(chart)[lin] * density;
        }
    }
    Ok(acc)
}

/// dL(η).χ = −χ ∘ G(η) as a grid field; χ is evaluated exactly when it is
/// recipe-backed and by multilinear interpolation when it is grid data.
pub fn differential_transform(
    chi: &dyn SmoothField,
    map: &GradientMapField,
) -> Result<SampledFunction> {
    let mut charts = Vec::new();
    for chart in 0..map.domain.chart_count() {
        let grid = map.domain.chart(chart).grid();
        let mut values = Vec::with_capacity(grid.len());
        for idx in grid.iter_indices() {
            let target = map.map_point(chart, &idx);
            values.push(-chi.value(&target)?);
        }
        charts.push(values);
    }
    SampledFunction::from_values(map.domain.clone(), charts)
}

/// Relative Mabuchi-isometry defect:
/// |g(dLχ, dLν)|_{L(η)} − g(χ, ν)|_η| / (|g(χ, ν)|_η| + 1e-12),
/// both sides integrated independently.
pub fn verify_isometry(
    ctx: &TransformContext,
    eta: &EtaContext,
    chi: &dyn SmoothField,
    nu: &dyn SmoothField,
) -> Result<f64> {
    let eta_sampled = SampledFunction::sample(ctx.domain, eta.field)?;
    let chi_sampled = SampledFunction::sample(ctx.domain, chi)?;
    let nu_sampled = SampledFunction::sample(ctx.domain, nu)?;
    let base = mabuchi_inner(&nu_sampled, &chi_sampled, &eta_sampled, ctx.potential)?;

    let result = transform_field(ctx, eta)?;
    let map = gradient_map_from(ctx, &result)?;
    let dl_chi = differential_transform(chi, &map)?;
    let dl_nu = differential_transform(nu, &map)?;
    let transformed = mabuchi_inner(&dl_nu, &dl_chi, &result.transform, ctx.potential)?;

    Ok((transformed - base).abs() / (base.abs() + 1e-12))
}

#[cfg(test)]
mod tests;
