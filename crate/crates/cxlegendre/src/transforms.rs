//! Legendre transforms: classical, flat complex, and diastasis-based.
//!
//! The diastasis transform of a perturbation η at a query q maximizes
//! `−D(p, q) − η(p)` over the ball |p − q| ≤ δ in chart coordinates; the
//! flat complex transform of ψ maximizes `2Re φ_ℂ(z, w) − ψ(z)`. Both are
//! solved by damped Newton with exact derivatives of D and of closed-form
//! perturbations, so transform values at grid nodes are solver-limited, not
//! stencil-limited.
//!
//! A computed transform is itself a [`SmoothField`]: its value at any point
//! is a fresh solve, its gradient is the envelope identity
//! `∇L(q) = −(∇_q D)(G(q), q)` and its Hessian follows from the
//! implicit-function formula for ∇G. Iterating the transform therefore
//! composes exactly, which is what the involution and inverse-map checks
//! need at their 1e-6 tolerances.

use crate::domain::{ChartPoint, ChartedDomain};
use crate::error::{Error, Result};
use crate::fields::{find_trouble_spots, SampledFunction, SmoothField, TroubleSpot};
use crate::grid::GridBox;
use crate::potentials::{
    concavity_margin, estimate_neighborhood, AnalyticPotential, NeighborhoodEstimate,
};
use crate::solver::{
    solve_concave_max, Objective, ScanHints, SolveOutcome, SolverOptions, SolverReport,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

/// First-order condition level asserted on every converged argmax.
pub const FIRST_ORDER_TOL: f64 = 1e-9;

/// Fraction of the measured concavity margin a perturbation Hessian may use
/// before its neighborhood is treated as a scan region.
const HESSIAN_BUDGET_FRACTION: f64 = 0.5;

/// Shared state of one transform setting: potential, domain, tube estimate
/// and concavity margin.
pub struct TransformContext<'a> {
    pub potential: &'a AnalyticPotential,
    pub domain: &'a ChartedDomain,
    pub neighborhood: NeighborhoodEstimate,
    /// Smallest eigenvalue of ∇²_z D over the sampled tube.
    pub concavity_margin: f64,
    pub options: SolverOptions,
    /// Separation beyond which near-equal maxima are ambiguous.
    pub tie_distance: f64,
}

impl<'a> TransformContext<'a> {
    /// Estimate the tube and margin, then build the context.
    pub fn prepare(potential: &'a AnalyticPotential, domain: &'a ChartedDomain) -> Result<Self> {
        let neighborhood = estimate_neighborhood(potential, domain)?;
        Self::with_neighborhood(potential, domain, neighborhood)
    }

    pub fn with_neighborhood(
        potential: &'a AnalyticPotential,
        domain: &'a ChartedDomain,
        neighborhood: NeighborhoodEstimate,
    ) -> Result<Self> {
        let margin = concavity_margin(potential, domain, neighborhood.radius_delta)?;
        let tie_distance = 10.0
            * (0..domain.chart_count())
                .map(|k| domain.chart(k).grid().max_step())
                .fold(0.0f64, f64::max);
        Ok(Self {
            potential,
            domain,
            neighborhood,
            concavity_margin: margin,
            options: SolverOptions::default(),
            tie_distance,
        })
    }

    /// Per-axis clipping bounds for flat boxes (the supremum never leaves
    /// the box); sphere solves are unconstrained in chart coordinates.
    fn box_clip(&self, chart: usize) -> Option<Vec<(f64, f64)>> {
        match self.domain {
            ChartedDomain::Box(b) => Some(
                b.grid()
                    .axes()
                    .iter()
                    .map(|a| (a.min, a.max))
                    .collect(),
            ),
            ChartedDomain::Sphere { .. } => {
                let _ = chart;
                None
            }
        }
    }

    /// True when the search ball around `q` is truncated by the chart box.
    fn ball_truncated(&self, q: &ChartPoint) -> bool {
        match self.domain {
            ChartedDomain::Box(b) => {
                let u = q.reals();
                b.grid().axes().iter().zip(&u).any(|(a, &x)| {
                    x - self.neighborhood.radius_delta < a.min
                        || x + self.neighborhood.radius_delta > a.max
                })
            }
            ChartedDomain::Sphere { .. } => false,
        }
    }
}

/// A perturbation prepared for solving: the field plus its concavity
/// certificate against the tube margin.
pub struct EtaContext<'a> {
    pub field: &'a dyn SmoothField,
    spots: Vec<TroubleSpot>,
    /// Hessian stays inside the concavity budget everywhere on the grid.
    pub certified: bool,
    /// Replace Newton by lattice scan + refinement at every query.
    pub force_scan: bool,
}

impl<'a> EtaContext<'a> {
    pub fn prepare(field: &'a dyn SmoothField, ctx: &TransformContext) -> Result<Self> {
        let budget = HESSIAN_BUDGET_FRACTION * ctx.concavity_margin;
        let spots = find_trouble_spots(field, ctx.domain, budget)?;
        let certified = spots.is_empty();
        Ok(Self { field, spots, certified, force_scan: false })
    }

    pub fn forced_scan(mut self) -> Self {
        self.force_scan = true;
        self
    }

    fn hints(&self, ctx: &TransformContext, chart: usize) -> ScanHints {
        ScanHints {
            spots: self
                .spots
                .iter()
                .filter(|s| s.chart == chart)
                .map(|s| (s.center.clone(), s.radius))
                .collect(),
            tie_distance: ctx.tie_distance,
            force_scan: self.force_scan,
        }
    }
}

/// f(z) = −D(z, q) − η(z) in the chart of q.
struct DiastasisObjective<'a> {
    potential: &'a AnalyticPotential,
    eta: &'a dyn SmoothField,
    chart: usize,
    q: Vec<Complex64>,
}

impl DiastasisObjective<'_> {
    fn point(&self, u: &[f64]) -> ChartPoint {
        ChartPoint::from_reals(self.chart, u)
    }
}

impl Objective for DiastasisObjective<'_> {
    fn dim2(&self) -> usize {
        2 * self.q.len()
    }

    fn value_at(&self, u: &[f64]) -> Result<f64> {
        let p = self.point(u);
        Ok(-self.potential.diastasis(&p.z, &self.q)? - self.eta.value(&p)?)
    }

    fn gradient_at(&self, u: &[f64]) -> Result<DVector<f64>> {
        let p = self.point(u);
        Ok(-self.potential.diastasis_grad_z(&p.z, &self.q)? - self.eta.gradient(&p)?)
    }

    fn hessian_at(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let p = self.point(u);
        Ok(-self.potential.diastasis_hess_z(&p.z, &self.q)? - self.eta.hessian(&p)?)
    }
}

/// f(z) = 2Re φ_ℂ(z, w) − ψ(z) in the chart of w.
struct FlatObjective<'a> {
    potential: &'a AnalyticPotential,
    psi: &'a dyn SmoothField,
    chart: usize,
    w: Vec<Complex64>,
}

impl FlatObjective<'_> {
    fn point(&self, u: &[f64]) -> ChartPoint {
        ChartPoint::from_reals(self.chart, u)
    }
}

impl Objective for FlatObjective<'_> {
    fn dim2(&self) -> usize {
        2 * self.w.len()
    }

    fn value_at(&self, u: &[f64]) -> Result<f64> {
        let p = self.point(u);
        Ok(2.0 * self.potential.polarize(&p.z, &self.w)?.re - self.psi.value(&p)?)
    }

    fn gradient_at(&self, u: &[f64]) -> Result<DVector<f64>> {
        let p = self.point(u);
        let polar_dz = self.potential.polar_dz(&p.z, &self.w)?;
        Ok(crate::potentials::calculus::grad_from_dz(&polar_dz) - self.psi.gradient(&p)?)
    }

    fn hessian_at(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let p = self.point(u);
        let s = self.potential.polar_dzz(&p.z, &self.w)?;
        Ok(crate::potentials::calculus::hess_from_holo(&s) - self.psi.hessian(&p)?)
    }
}

/// One solved transform query.
#[derive(Debug, Clone)]
pub struct PointSolve {
    pub value: f64,
    pub argmax: ChartPoint,
    pub displacement: f64,
    pub truncated: bool,
    pub outcome: SolveOutcome,
}

fn finish_solve(
    ctx: &TransformContext,
    q: &ChartPoint,
    outcome: SolveOutcome,
    clipped: bool,
) -> Result<PointSolve> {
    let radius = ctx.neighborhood.radius_delta;
    let argmax = ChartPoint::from_reals(q.chart, outcome.maximizer.as_slice());
    let displacement = argmax.dist(q);
    if displacement > radius * (1.0 - 1e-9) {
        return Err(Error::NeighborhoodViolation {
            query: format!("{:?}", q.z),
            distance: displacement,
            radius,
        });
    }
    if !outcome.degraded && outcome.gradient_norm > FIRST_ORDER_TOL {
        return Err(Error::SolverFailure {
            query: format!("{:?}", q.z),
            detail: format!("first-order residual {:.3e}", outcome.gradient_norm),
        });
    }
    Ok(PointSolve {
        value: outcome.value,
        displacement,
        truncated: clipped && ctx.ball_truncated(q),
        outcome,
        argmax,
    })
}

/// Diastasis transform at one query: max of −D(p, q) − η(p) over the tube.
pub fn diastasis_legendre(
    ctx: &TransformContext,
    eta: &EtaContext,
    q: &ChartPoint,
    warm: Option<&ChartPoint>,
) -> Result<PointSolve> {
    let obj = DiastasisObjective {
        potential: ctx.potential,
        eta: eta.field,
        chart: q.chart,
        q: q.z.clone(),
    };
    let clip = if eta.field.global() { None } else { ctx.box_clip(q.chart) };
    let query = DVector::from_column_slice(&q.reals());
    let warm_v = warm.map(|w| DVector::from_column_slice(&w.reals()));
    let hints = eta.hints(ctx, q.chart);
    let outcome = solve_concave_max(
        &obj,
        &query,
        ctx.neighborhood.radius_delta,
        clip.as_deref(),
        &ctx.options,
        &hints,
        warm_v.as_ref(),
    )?;
    finish_solve(ctx, q, outcome, clip.is_some())
}

/// Flat complex transform at one query: max of 2Re φ_ℂ(z, w) − ψ(z).
pub fn complex_legendre_flat(
    ctx: &TransformContext,
    psi: &dyn SmoothField,
    w: &ChartPoint,
    warm: Option<&ChartPoint>,
) -> Result<PointSolve> {
    let obj = FlatObjective {
        potential: ctx.potential,
        psi,
        chart: w.chart,
        w: w.z.clone(),
    };
    let clip = if psi.global() { None } else { ctx.box_clip(w.chart) };
    let query = DVector::from_column_slice(&w.reals());
    let warm_v = warm.map(|p| DVector::from_column_slice(&p.reals()));
    let hints = ScanHints {
        spots: vec![],
        tie_distance: ctx.tie_distance,
        force_scan: false,
    };
    let outcome = solve_concave_max(
        &obj,
        &query,
        ctx.neighborhood.radius_delta,
        clip.as_deref(),
        &ctx.options,
        &hints,
        warm_v.as_ref(),
    )?;
    finish_solve(ctx, w, outcome, clip.is_some())
}

/// Transform values and maximizers over every grid node.
#[derive(Debug, Clone)]
pub struct TransformResult {
    pub transform: SampledFunction,
    /// Maximizers, flattened per chart with stride n.
    pub argmax: Vec<Vec<Complex64>>,
    pub solver_report: SolverReport,
}

impl TransformResult {
    pub fn argmax_point(&self, chart: usize, idx: &[usize]) -> ChartPoint {
        let n = self.transform.domain.dim();
        let lin = self.transform.domain.chart(chart).grid().linear(idx);
        ChartPoint {
            chart,
            z: self.argmax[chart][lin * n..(lin + 1) * n].to_vec(),
        }
    }
}

struct RowOutput {
    values: Vec<f64>,
    argmax: Vec<Complex64>,
    report: SolverReport,
}

/// Apply the diastasis transform at every grid node. Rows (all leading grid
/// axes fixed, last axis sweeping) are processed in parallel; within a row
/// each solve warm-starts from its neighbor's maximizer shifted by the grid
/// step.
pub fn transform_field(ctx: &TransformContext, eta: &EtaContext) -> Result<TransformResult> {
    let mut charts_values = Vec::new();
    let mut charts_argmax = Vec::new();
    let mut report = SolverReport::default();

    for chart in 0..ctx.domain.chart_count() {
        let grid = ctx.domain.chart(chart).grid();
        let last_count = grid.axes().last().expect("non-empty grid").count;
        let rows = grid.len() / last_count;

        let row_results: Vec<Result<RowOutput>> = (0..rows)
            .into_par_iter()
            .map(|row| {
                let mut values = Vec::with_capacity(last_count);
                let mut argmax = Vec::with_capacity(last_count * ctx.domain.dim());
                let mut row_report = SolverReport::default();
                let mut warm: Option<ChartPoint> = None;
                let mut prev_q: Option<ChartPoint> = None;
                for j in 0..last_count {
                    let idx = grid.multi(row * last_count + j);
                    let q = ctx.domain.node(chart, &idx);
                    // Shift the previous maximizer along with the query.
                    let start = match (&warm, &prev_q) {
                        (Some(w), Some(p)) => {
                            let shifted: Vec<Complex64> = w
                                .z
                                .iter()
                                .zip(q.z.iter().zip(&p.z))
                                .map(|(wz, (qz, pz))| wz + (qz - pz))
                                .collect();
                            Some(ChartPoint { chart, z: shifted })
                        }
                        _ => None,
                    };
                    let solve = diastasis_legendre(ctx, eta, &q, start.as_ref())?;
                    row_report.absorb(&solve.outcome, solve.displacement, solve.truncated);
                    values.push(solve.value);
                    argmax.extend_from_slice(&solve.argmax.z);
                    warm = Some(solve.argmax);
                    prev_q = Some(q);
                }
                Ok(RowOutput { values, argmax, report: row_report })
            })
            .collect();

        let mut values = Vec::with_capacity(grid.len());
        let mut argmax = Vec::with_capacity(grid.len());
        for r in row_results {
            let r = r?;
            values.extend(r.values);
            argmax.extend(r.argmax);
            report = report.merge(r.report);
        }
        charts_values.push(values);
        charts_argmax.push(argmax);
    }

    Ok(TransformResult {
        transform: SampledFunction::from_values(ctx.domain.clone(), charts_values)?,
        argmax: charts_argmax,
        solver_report: report,
    })
}

/// The transform L(η) as an exactly evaluable field: values by fresh solves,
/// gradient by the envelope identity, Hessian by the implicit-function
/// formula for the maximizer map.
pub struct TransformedField<'a> {
    ctx: &'a TransformContext<'a>,
    eta: &'a EtaContext<'a>,
}

impl<'a> TransformedField<'a> {
    pub fn new(ctx: &'a TransformContext<'a>, eta: &'a EtaContext<'a>) -> Self {
        Self { ctx, eta }
    }

    pub fn solve(&self, q: &ChartPoint) -> Result<PointSolve> {
        diastasis_legendre(self.ctx, self.eta, q, None)
    }

    /// Jacobian of the maximizer map at q via the implicit-function theorem:
    /// ∇G = −(∇²_z D + ∇²η)⁻¹ · ∂²D/∂z∂q, evaluated at (G(q), q).
    pub fn map_jacobian(&self, q: &ChartPoint, argmax: &ChartPoint) -> Result<DMatrix<f64>> {
        let hz = self.ctx.potential.diastasis_hess_z(&argmax.z, &q.z)?;
        let heta = self.eta.field.hessian(argmax)?;
        let cross = self.ctx.potential.diastasis_cross_zq(&argmax.z, &q.z)?;
        let lhs = hz + heta;
        let inv = lhs
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::SolverFailure {
                query: format!("{:?}", q.z),
                detail: "singular implicit-function system".into(),
            })?;
        Ok(-(inv * cross))
    }
}

impl SmoothField for TransformedField<'_> {
    fn dim(&self) -> usize {
        self.ctx.domain.dim()
    }

    fn global(&self) -> bool {
        self.eta.field.global()
    }

    fn value(&self, p: &ChartPoint) -> Result<f64> {
        Ok(self.solve(p)?.value)
    }

    fn gradient(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        let s = self.solve(p)?;
        Ok(-self.ctx.potential.diastasis_grad_q(&s.argmax.z, &p.z)?)
    }

    fn hessian(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        let s = self.solve(p)?;
        let grad_g = self.map_jacobian(p, &s.argmax)?;
        let cross = self.ctx.potential.diastasis_cross_zq(&s.argmax.z, &p.z)?;
        let dqq = self.ctx.potential.diastasis_hess_q(&s.argmax.z, &p.z)?;
        Ok(-(cross.transpose() * grad_g + dqq))
    }
}

/// Signed double-transform defect L²(η) − η over the grid.
#[derive(Debug, Clone)]
pub struct DoubleTransformDefect {
    pub defects: SampledFunction,
    pub max_signed_defect: f64,
    pub max_location: (usize, Vec<usize>),
    pub solver_report: SolverReport,
}

/// Compute L²(η) − η at every grid node. With `eta.force_scan` set, both
/// solve levels scan instead of trusting Newton (the Lemma-4.4 inequality
/// path for non-convex η); otherwise certified Newton runs at both levels.
pub fn double_transform_defect(
    ctx: &TransformContext,
    eta: &EtaContext,
) -> Result<DoubleTransformDefect> {
    let l1 = TransformedField::new(ctx, eta);
    let mut outer = EtaContext::prepare(&l1, ctx)?;
    if eta.force_scan {
        outer = outer.forced_scan();
    }

    let mut charts = Vec::new();
    let mut report = SolverReport::default();
    let mut max_signed = f64::NEG_INFINITY;
    let mut max_loc = (0usize, vec![0usize]);

    for chart in 0..ctx.domain.chart_count() {
        let grid = ctx.domain.chart(chart).grid();
        let results: Vec<Result<(f64, SolverReport)>> = (0..grid.len())
            .into_par_iter()
            .map(|lin| {
                let idx = grid.multi(lin);
                let q = ctx.domain.node(chart, &idx);
                let solve = diastasis_legendre(ctx, &outer, &q, None)?;
                let mut r = SolverReport::default();
                r.absorb(&solve.outcome, solve.displacement, solve.truncated);
                Ok((solve.value - eta.field.value(&q)?, r))
            })
            .collect();
        let mut defects = Vec::with_capacity(grid.len());
        for (lin, res) in results.into_iter().enumerate() {
            let (d, r) = res?;
            report = report.merge(r);
            if d > max_signed {
                max_signed = d;
                max_loc = (chart, grid.multi(lin));
            }
            defects.push(d);
        }
        charts.push(defects);
    }

    Ok(DoubleTransformDefect {
        defects: SampledFunction::from_values(ctx.domain.clone(), charts)?,
        max_signed_defect: max_signed,
        max_location: max_loc,
        solver_report: report,
    })
}

/// Classical real Legendre transform of grid data over a real box.
pub struct RealSampledFunction<'a> {
    pub grid: GridBox,
    pub values: Vec<f64>,
    /// Smooth closed form backing the samples, used for Newton refinement.
    pub closed_form: Option<&'a (dyn Fn(&[f64]) -> f64 + Send + Sync)>,
}

#[derive(Debug, Clone)]
pub struct RealLegendreResult {
    pub value: f64,
    pub argmax: Vec<f64>,
    /// Supremum attained on the box boundary: the transform is clipped.
    pub boundary_max: bool,
}

/// sup_x [x·y − ψ(x)] over the sampled box.
pub fn real_legendre(psi: &RealSampledFunction, y: &[f64]) -> Result<RealLegendreResult> {
    if y.len() != psi.grid.ndim() {
        return Err(Error::DimensionMismatch {
            context: "query dimension vs grid".into(),
        });
    }
    if psi.values.len() != psi.grid.len() {
        return Err(Error::DimensionMismatch {
            context: "value count vs grid".into(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "real Legendre query".into() });
    }
    let dot = |x: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();

    let mut best_lin = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for lin in 0..psi.grid.len() {
        let x = psi.grid.point_linear(lin);
        let v = dot(&x) - psi.values[lin];
        if v > best_val {
            best_val = v;
            best_lin = lin;
        }
    }
    let mut best_x = psi.grid.point_linear(best_lin);

    if let Some(f) = psi.closed_form {
        // Newton refinement on the smooth objective with difference
        // quotients; iterates clipped to the box.
        let obj = |x: &[f64]| dot(x) - f(x);
        let nd = psi.grid.ndim();
        let h = 1e-6;
        for _ in 0..60 {
            let mut g = DVector::zeros(nd);
            let mut hess = DMatrix::zeros(nd, nd);
            for a in 0..nd {
                let mut up = best_x.clone();
                up[a] += h;
                let mut dn = best_x.clone();
                dn[a] -= h;
                g[a] = (obj(&up) - obj(&dn)) / (2.0 * h);
                for b in 0..nd {
                    let mut pp = best_x.clone();
                    pp[a] += h;
                    pp[b] += h;
                    let mut pm = best_x.clone();
                    pm[a] += h;
                    pm[b] -= h;
                    let mut mp = best_x.clone();
                    mp[a] -= h;
                    mp[b] += h;
                    let mut mm = best_x.clone();
                    mm[a] -= h;
                    mm[b] -= h;
                    hess[(a, b)] = (obj(&pp) - obj(&pm) - obj(&mp) + obj(&mm)) / (4.0 * h * h);
                }
            }
            if g.norm() < 1e-9 {
                break;
            }
            let step = match (-hess.clone()).cholesky() {
                Some(c) => c.solve(&g),
                None => g.clone() * (1.0 / (1.0 + g.norm())),
            };
            let mut t = 1.0;
            let cur = obj(&best_x);
            let mut moved = false;
            while t > 1e-12 {
                let cand: Vec<f64> = best_x
                    .iter()
                    .zip(step.iter())
                    .zip(psi.grid.axes())
                    .map(|((x, d), a)| (x + t * d).clamp(a.min, a.max))
                    .collect();
                if obj(&cand) > cur {
                    best_x = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        best_val = obj(&best_x);
    }

    let boundary_max = best_x.iter().zip(psi.grid.axes()).any(|(x, a)| {
        let tol = 1e-9 * (1.0 + a.step());
        (x - a.min).abs() < tol || (x - a.max).abs() < tol
    });
    Ok(RealLegendreResult { value: best_val, argmax: best_x, boundary_max })
}
