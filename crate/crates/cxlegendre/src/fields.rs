//! Scalar fields on a domain with two evaluation backings.
//!
//! Perturbations built from closed-form recipes evaluate themselves and
//! their first two derivatives exactly anywhere on the domain; grid-backed
//! fields interpolate multilinearly and differentiate by second-order
//! stencils at grid scale. Transforms accept either through [`SmoothField`];
//! which backing a check uses decides whether its defect is solver-limited
//! or shrinks at the stencil order.

use crate::domain::{sphere_transition_jets, ChartPoint, ChartedDomain};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// A C² scalar field on a charted domain.
pub trait SmoothField: Send + Sync {
    /// Complex dimension of the underlying domain.
    fn dim(&self) -> usize;
    fn value(&self, p: &ChartPoint) -> Result<f64>;
    /// Real gradient in block coordinates.
    fn gradient(&self, p: &ChartPoint) -> Result<DVector<f64>>;
    /// Real Hessian in block coordinates.
    fn hessian(&self, p: &ChartPoint) -> Result<DMatrix<f64>>;
    /// Evaluable at any chart point (closed forms), as opposed to only
    /// inside the sampled grid. Suprema over grid-limited fields are
    /// truncated at the box and flagged.
    fn global(&self) -> bool {
        true
    }
}

/// Everywhere-zero field.
pub struct ZeroField {
    pub dimension: usize,
}

impl SmoothField for ZeroField {
    fn dim(&self) -> usize {
        self.dimension
    }

    fn value(&self, _p: &ChartPoint) -> Result<f64> {
        Ok(0.0)
    }

    fn gradient(&self, _p: &ChartPoint) -> Result<DVector<f64>> {
        Ok(DVector::zeros(2 * self.dimension))
    }

    fn hessian(&self, _p: &ChartPoint) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(2 * self.dimension, 2 * self.dimension))
    }
}

/// Chart-local view of an analytic potential.
pub struct PotentialField<'a> {
    pub potential: &'a crate::potentials::AnalyticPotential,
}

impl SmoothField for PotentialField<'_> {
    fn dim(&self) -> usize {
        self.potential.dimension()
    }

    fn value(&self, p: &ChartPoint) -> Result<f64> {
        self.potential.evaluate(&p.z)
    }

    fn gradient(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        self.potential.real_grad(&p.z)
    }

    fn hessian(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        self.potential.real_hessian(&p.z)
    }
}

/// Weighted sum of borrowed fields.
pub struct LinearCombo<'a> {
    terms: Vec<(f64, &'a dyn SmoothField)>,
    dimension: usize,
}

impl<'a> LinearCombo<'a> {
    pub fn new(terms: Vec<(f64, &'a dyn SmoothField)>) -> Self {
        let dimension = terms.first().map_or(0, |(_, f)| f.dim());
        Self { terms, dimension }
    }
}

impl SmoothField for LinearCombo<'_> {
    fn dim(&self) -> usize {
        self.dimension
    }

    fn global(&self) -> bool {
        self.terms.iter().all(|(_, f)| f.global())
    }

    fn value(&self, p: &ChartPoint) -> Result<f64> {
        let mut acc = 0.0;
        for (w, f) in &self.terms {
            acc += w * f.value(p)?;
        }
        Ok(acc)
    }

    fn gradient(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        let mut acc = DVector::zeros(2 * self.dimension);
        for (w, f) in &self.terms {
            acc += f.gradient(p)? * *w;
        }
        Ok(acc)
    }

    fn hessian(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        let mut acc = DMatrix::zeros(2 * self.dimension, 2 * self.dimension);
        for (w, f) in &self.terms {
            acc += f.hessian(p)? * *w;
        }
        Ok(acc)
    }
}

/// One closed-form perturbation term, expressed in chart-0 coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum RecipeTerm {
    /// amplitude · exp(−|z − center|²/width²)
    Gaussian {
        amplitude: f64,
        center: Vec<Complex64>,
        width: f64,
    },
    /// amplitude · 2Re(direction̄ · z)
    Linear {
        amplitude: f64,
        direction: Vec<Complex64>,
    },
    /// amplitude · |z − center|²
    Quadratic {
        amplitude: f64,
        center: Vec<Complex64>,
    },
    /// amplitude · exp(1 − R²/(R² − |z − center|²)) inside |z − center| < R,
    /// identically zero outside; C^∞ with compact support.
    CompactBump {
        amplitude: f64,
        center: Vec<Complex64>,
        radius: f64,
    },
}

impl RecipeTerm {
    fn dim(&self) -> usize {
        match self {
            Self::Gaussian { center, .. }
            | Self::Quadratic { center, .. }
            | Self::CompactBump { center, .. } => center.len(),
            Self::Linear { direction, .. } => direction.len(),
        }
    }

    /// Decays (with all derivatives) at infinity: extendable to the sphere.
    fn decays_at_infinity(&self) -> bool {
        matches!(self, Self::Gaussian { .. } | Self::CompactBump { .. })
    }

    /// Value, real gradient and real Hessian in flat chart-0 coordinates.
    fn jet_flat(&self, u: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let d2 = u.len();
        match self {
            Self::Gaussian { amplitude, center, width } => {
                let cm = reals_of(center);
                let s2 = width * width;
                let diff: Vec<f64> = u.iter().zip(&cm).map(|(a, b)| a - b).collect();
                let r2: f64 = diff.iter().map(|x| x * x).sum();
                let v = amplitude * (-r2 / s2).exp();
                let mut g = DVector::zeros(d2);
                let mut h = DMatrix::zeros(d2, d2);
                if v != 0.0 {
                    for j in 0..d2 {
                        g[j] = v * (-2.0 * diff[j] / s2);
                        for k in 0..d2 {
                            h[(j, k)] = v * (4.0 * diff[j] * diff[k] / (s2 * s2));
                        }
                        h[(j, j)] -= v * 2.0 / s2;
                    }
                }
                (v, g, h)
            }
            Self::Linear { amplitude, direction } => {
                let bm = reals_of(direction);
                let v = 2.0 * amplitude * u.iter().zip(&bm).map(|(a, b)| a * b).sum::<f64>();
                let g = DVector::from_iterator(d2, bm.iter().map(|b| 2.0 * amplitude * b));
                (v, g, DMatrix::zeros(d2, d2))
            }
            Self::Quadratic { amplitude, center } => {
                let cm = reals_of(center);
                let diff: Vec<f64> = u.iter().zip(&cm).map(|(a, b)| a - b).collect();
                let r2: f64 = diff.iter().map(|x| x * x).sum();
                let g = DVector::from_iterator(d2, diff.iter().map(|x| 2.0 * amplitude * x));
                let h = DMatrix::identity(d2, d2) * (2.0 * amplitude);
                (amplitude * r2, g, h)
            }
            Self::CompactBump { amplitude, center, radius } => {
                let cm = reals_of(center);
                let r2cap = radius * radius;
                let diff: Vec<f64> = u.iter().zip(&cm).map(|(a, b)| a - b).collect();
                let rho: f64 = diff.iter().map(|x| x * x).sum();
                if rho >= r2cap * (1.0 - 1e-12) {
                    return (0.0, DVector::zeros(d2), DMatrix::zeros(d2, d2));
                }
                // b(ρ) = exp(1 − R²/(R² − ρ)), ρ = |u − c|².
                let den = r2cap - rho;
                let b = amplitude * (1.0 - r2cap / den).exp();
                let bp = -b * r2cap / (den * den);
                let bpp = b * (r2cap * r2cap / den.powi(4) - 2.0 * r2cap / den.powi(3));
                let mut g = DVector::zeros(d2);
                let mut h = DMatrix::zeros(d2, d2);
                for j in 0..d2 {
                    g[j] = 2.0 * bp * diff[j];
                    for k in 0..d2 {
                        h[(j, k)] = 4.0 * bpp * diff[j] * diff[k];
                    }
                    h[(j, j)] += 2.0 * bp;
                }
                (b, g, h)
            }
        }
    }
}

fn reals_of(z: &[Complex64]) -> Vec<f64> {
    let n = z.len();
    let mut v = vec![0.0; 2 * n];
    for (j, c) in z.iter().enumerate() {
        v[j] = c.re;
        v[n + j] = c.im;
    }
    v
}

/// A closed-form perturbation: a sum of recipe terms tied to a domain.
///
/// On the sphere the recipe lives in chart-0 coordinates and is pulled back
/// through the transition `z = 1/w` on the other chart; only decaying terms
/// extend smoothly across the chart-0 point at infinity.
#[derive(Debug, Clone)]
pub struct Perturbation {
    terms: Vec<RecipeTerm>,
    domain: ChartedDomain,
}

impl Perturbation {
    pub fn new(terms: Vec<RecipeTerm>, domain: &ChartedDomain) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Config("perturbation needs at least one term".into()));
        }
        for t in &terms {
            if t.dim() != domain.dim() {
                return Err(Error::DimensionMismatch {
                    context: "perturbation term dimension vs domain".into(),
                });
            }
            if domain.is_sphere() && !t.decays_at_infinity() {
                return Err(Error::Config(
                    "linear and quadratic recipes do not extend to the sphere".into(),
                ));
            }
        }
        Ok(Self { terms, domain: domain.clone() })
    }

    pub fn terms(&self) -> &[RecipeTerm] {
        &self.terms
    }

    fn jet(&self, p: &ChartPoint) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let d2 = 2 * self.domain.dim();
        if p.chart == 0 {
            let u = p.reals();
            let mut value = 0.0;
            let mut grad = DVector::zeros(d2);
            let mut hess = DMatrix::zeros(d2, d2);
            for t in &self.terms {
                let (v, g, h) = t.jet_flat(&u);
                value += v;
                grad += g;
                hess += h;
            }
            return Ok((value, grad, hess));
        }
        // Chart 1 of the sphere: pull back through z = 1/w.
        let w = p.z[0];
        if w.norm() < 1e-8 {
            // All terms decay superpolynomially toward the chart-0 point at
            // infinity; the jet vanishes to double precision.
            return Ok((0.0, DVector::zeros(d2), DMatrix::zeros(d2, d2)));
        }
        let (z, dz, d2z) = sphere_transition_jets(w);
        let zp = ChartPoint { chart: 0, z: vec![z] };
        let (value, gz, hz) = self.jet(&zp)?;
        // Real Jacobian of the holomorphic transition.
        let j = DMatrix::from_row_slice(2, 2, &[dz.re, -dz.im, dz.im, dz.re]);
        let grad = j.transpose() * &gz;
        // Curvature of the transition: Hessians of Re z(w) and Im z(w).
        let hx = DMatrix::from_row_slice(2, 2, &[d2z.re, -d2z.im, -d2z.im, -d2z.re]);
        let hy = DMatrix::from_row_slice(2, 2, &[d2z.im, d2z.re, d2z.re, -d2z.im]);
        let hess = j.transpose() * &hz * &j + hx * gz[0] + hy * gz[1];
        Ok((value, grad, hess))
    }
}

impl SmoothField for Perturbation {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn value(&self, p: &ChartPoint) -> Result<f64> {
        Ok(self.jet(p)?.0)
    }

    fn gradient(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        Ok(self.jet(p)?.1)
    }

    fn hessian(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        Ok(self.jet(p)?.2)
    }
}

/// Grid-indexed scalar field over a charted domain (one value array per
/// chart).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub domain: ChartedDomain,
    charts: Vec<Vec<f64>>,
}

impl SampledFunction {
    pub fn from_values(domain: ChartedDomain, charts: Vec<Vec<f64>>) -> Result<Self> {
        if charts.len() != domain.chart_count() {
            return Err(Error::DimensionMismatch {
                context: "one value array per chart required".into(),
            });
        }
        for (k, values) in charts.iter().enumerate() {
            if values.len() != domain.chart(k).grid().len() {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "chart {k}: {} values on a {}-node grid",
                        values.len(),
                        domain.chart(k).grid().len()
                    ),
                });
            }
            if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("sampled value {bad} on chart {k}"),
                });
            }
        }
        Ok(Self { domain, charts })
    }

    /// Sample a field at every grid node.
    pub fn sample(domain: &ChartedDomain, field: &dyn SmoothField) -> Result<Self> {
        let mut charts = Vec::with_capacity(domain.chart_count());
        for k in 0..domain.chart_count() {
            let grid = domain.chart(k).grid();
            let mut values = Vec::with_capacity(grid.len());
            for idx in grid.iter_indices() {
                values.push(field.value(&domain.node(k, &idx))?);
            }
            charts.push(values);
        }
        Self::from_values(domain.clone(), charts)
    }

    pub fn values(&self, chart: usize) -> &[f64] {
        &self.charts[chart]
    }

    pub fn value_at_node(&self, chart: usize, idx: &[usize]) -> f64 {
        self.charts[chart][self.domain.chart(chart).grid().linear(idx)]
    }

    /// Multilinear interpolation. The point is read in its own chart when it
    /// lies inside that chart's box, otherwise through the transition.
    pub fn interpolate(&self, p: &ChartPoint) -> Result<f64> {
        let q = self.locate(p)?;
        self.domain
            .chart(q.chart)
            .grid()
            .interpolate(&self.charts[q.chart], &q.reals())
    }

    fn locate(&self, p: &ChartPoint) -> Result<ChartPoint> {
        if self.domain.in_chart_box(p) {
            return Ok(p.clone());
        }
        if self.domain.chart_count() > 1 {
            let other = self.domain.to_chart(p, 1 - p.chart)?;
            if self.domain.in_chart_box(&other) {
                return Ok(other);
            }
        }
        Err(Error::OutOfDomain {
            context: format!("field evaluation at chart {} point {:?}", p.chart, p.z),
        })
    }

    pub fn min_value(&self) -> f64 {
        self.charts
            .iter()
            .flatten()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn max_value(&self) -> f64 {
        self.charts
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }
}

/// Interpolating [`SmoothField`] view of grid data: multilinear values,
/// derivatives from second-order stencils sampled on the grid and then
/// interpolated.
pub struct GridSmoothField {
    sampled: SampledFunction,
    grad_charts: Vec<Vec<Vec<f64>>>,
    hess_charts: Vec<Vec<Vec<f64>>>,
}

impl GridSmoothField {
    pub fn new(sampled: SampledFunction) -> Self {
        let d2 = 2 * sampled.domain.dim();
        let mut grad_charts = Vec::new();
        let mut hess_charts = Vec::new();
        for k in 0..sampled.domain.chart_count() {
            let grid = sampled.domain.chart(k).grid();
            let values = sampled.values(k);
            let mut grads = vec![vec![0.0; grid.len()]; d2];
            for idx in grid.iter_indices() {
                let lin = grid.linear(&idx);
                for a in 0..d2 {
                    grads[a][lin] = stencil_d1(grid, values, &idx, a);
                }
            }
            let mut hesses = vec![vec![0.0; grid.len()]; d2 * d2];
            for idx in grid.iter_indices() {
                let lin = grid.linear(&idx);
                for a in 0..d2 {
                    for b in 0..d2 {
                        hesses[a * d2 + b][lin] = stencil_d1(grid, &grads[a], &idx, b);
                    }
                }
            }
            grad_charts.push(grads);
            hess_charts.push(hesses);
        }
        Self { sampled, grad_charts, hess_charts }
    }

    pub fn sampled(&self) -> &SampledFunction {
        &self.sampled
    }
}

/// First derivative along axis `a` at a node: central inside, one-sided
/// second-order at the faces.
fn stencil_d1(grid: &crate::grid::GridBox, values: &[f64], idx: &[usize], a: usize) -> f64 {
    let h = grid.axes()[a].step();
    let count = grid.axes()[a].count;
    let at = |i: usize| {
        let mut jdx = idx.to_vec();
        jdx[a] = i;
        values[grid.linear(&jdx)]
    };
    let i = idx[a];
    if i > 0 && i + 1 < count {
        (at(i + 1) - at(i - 1)) / (2.0 * h)
    } else if i == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
    } else {
        (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h)
    }
}

impl SmoothField for GridSmoothField {
    fn dim(&self) -> usize {
        self.sampled.domain.dim()
    }

    fn global(&self) -> bool {
        // Evaluable only where some chart grid covers the point; on a flat
        // box that is the box itself.
        self.sampled.domain.is_sphere()
    }

    fn value(&self, p: &ChartPoint) -> Result<f64> {
        self.sampled.interpolate(p)
    }

    fn gradient(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        let q = self.sampled.locate(p)?;
        let grid = self.sampled.domain.chart(q.chart).grid();
        let u = q.reals();
        let d2 = 2 * self.dim();
        let mut g = DVector::zeros(d2);
        for a in 0..d2 {
            g[a] = grid.interpolate(&self.grad_charts[q.chart][a], &u)?;
        }
        Ok(g)
    }

    fn hessian(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        let q = self.sampled.locate(p)?;
        let grid = self.sampled.domain.chart(q.chart).grid();
        let u = q.reals();
        let d2 = 2 * self.dim();
        let mut h = DMatrix::zeros(d2, d2);
        for a in 0..d2 {
            for b in 0..d2 {
                h[(a, b)] = grid.interpolate(&self.hess_charts[q.chart][a * d2 + b], &u)?;
            }
        }
        // Mixed stencils do not commute exactly; symmetrize.
        let ht = h.transpose();
        Ok((h + ht) * 0.5)
    }
}

/// Measured sup-norms of a field over the grid nodes of a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C2Norms {
    pub sup_value: f64,
    pub sup_gradient: f64,
    pub sup_hessian: f64,
}

impl C2Norms {
    pub fn c2(&self) -> f64 {
        self.sup_value.max(self.sup_gradient).max(self.sup_hessian)
    }
}

/// Scan the grid nodes of `domain` for the sup-norms of a field.
pub fn measure_c2(field: &dyn SmoothField, domain: &ChartedDomain) -> Result<C2Norms> {
    let mut out = C2Norms { sup_value: 0.0, sup_gradient: 0.0, sup_hessian: 0.0 };
    for k in 0..domain.chart_count() {
        for idx in domain.chart(k).grid().iter_indices() {
            let p = domain.node(k, &idx);
            out.sup_value = out.sup_value.max(field.value(&p)?.abs());
            out.sup_gradient = out.sup_gradient.max(field.gradient(&p)?.norm());
            let h = field.hessian(&p)?;
            let spec = h
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .fold(0.0f64, |a, &b| a.max(b.abs()));
            out.sup_hessian = out.sup_hessian.max(spec);
        }
    }
    Ok(out)
}

/// A region where a field's Hessian exceeds a concavity budget, so local
/// maximization must scan instead of trusting Newton.
#[derive(Debug, Clone)]
pub struct TroubleSpot {
    pub chart: usize,
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Locate grid nodes whose Hessian spectral norm exceeds `budget` and
/// cluster them into covering spots.
pub fn find_trouble_spots(
    field: &dyn SmoothField,
    domain: &ChartedDomain,
    budget: f64,
) -> Result<Vec<TroubleSpot>> {
    let mut spots: Vec<TroubleSpot> = Vec::new();
    for k in 0..domain.chart_count() {
        let grid = domain.chart(k).grid();
        let pad = 3.0 * grid.max_step();
        let mut nodes: Vec<Vec<f64>> = Vec::new();
        for idx in grid.iter_indices() {
            let p = domain.node(k, &idx);
            let h = field.hessian(&p)?;
            let spec = h
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .fold(0.0f64, |a, &b| a.max(b.abs()));
            if spec > budget {
                nodes.push(p.reals());
            }
        }
        // Greedy clustering: grow a spot around the first uncovered node.
        while let Some(seed) = nodes.pop() {
            let (mut members, rest): (Vec<_>, Vec<_>) = nodes
                .into_iter()
                .partition(|n| dist(n, &seed) < 12.0 * grid.max_step());
            nodes = rest;
            members.push(seed);
            let d2 = members[0].len();
            let mut center = vec![0.0; d2];
            for m in &members {
                for (c, v) in center.iter_mut().zip(m) {
                    *c += v / members.len() as f64;
                }
            }
            let radius = members
                .iter()
                .map(|m| dist(m, &center))
                .fold(0.0f64, f64::max)
                + pad;
            spots.push(TroubleSpot { chart: k, center, radius });
        }
    }
    Ok(spots)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
