//! The maximizer map G(η) and its structure.
//!
//! G(η)(q) is the unique maximizer of −D(·, q) − η; at η = 0 it is the
//! identity. The field stores the map over the grid together with full real
//! Jacobians taken by finite differences of the computed map at grid-step
//! scale (an independent route from the implicit-function formula, which is
//! kept as a spot check).

use crate::domain::{ChartPoint, ChartedDomain};
use crate::error::{Error, Result};
use crate::fields::{LinearCombo, SmoothField};
use crate::solver::SolverReport;
use crate::transforms::{
    diastasis_legendre, transform_field, EtaContext, TransformContext, TransformResult,
    TransformedField,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Maximizer map values and Jacobians over every grid node.
#[derive(Debug, Clone)]
pub struct GradientMapField {
    pub domain: ChartedDomain,
    /// Map values, flattened per chart with stride n.
    pub map_values: Vec<Vec<Complex64>>,
    /// Full real 2n×2n Jacobians, flattened row-major per node.
    pub jacobians: Vec<Vec<f64>>,
    pub solver_report: SolverReport,
}

impl GradientMapField {
    pub fn map_point(&self, chart: usize, idx: &[usize]) -> ChartPoint {
        let n = self.domain.dim();
        let lin = self.domain.chart(chart).grid().linear(idx);
        ChartPoint {
            chart,
            z: self.map_values[chart][lin * n..(lin + 1) * n].to_vec(),
        }
    }

    pub fn jacobian(&self, chart: usize, idx: &[usize]) -> DMatrix<f64> {
        let d2 = 2 * self.domain.dim();
        let lin = self.domain.chart(chart).grid().linear(idx);
        DMatrix::from_row_slice(
            d2,
            d2,
            &self.jacobians[chart][lin * d2 * d2..(lin + 1) * d2 * d2],
        )
    }

    /// Real-coordinate map components at a node.
    fn map_reals(&self, chart: usize, lin: usize) -> Vec<f64> {
        let n = self.domain.dim();
        let z = &self.map_values[chart][lin * n..(lin + 1) * n];
        let mut v = vec![0.0; 2 * n];
        for (j, c) in z.iter().enumerate() {
            v[j] = c.re;
            v[n + j] = c.im;
        }
        v
    }
}

/// Build the map field from an already computed transform.
pub fn gradient_map_from(
    ctx: &TransformContext,
    result: &TransformResult,
) -> Result<GradientMapField> {
    let domain = ctx.domain.clone();
    let n = domain.dim();
    let d2 = 2 * n;
    let mut field = GradientMapField {
        domain: domain.clone(),
        map_values: result.argmax.clone(),
        jacobians: Vec::new(),
        solver_report: result.solver_report.clone(),
    };

    for chart in 0..domain.chart_count() {
        let grid = domain.chart(chart).grid();
        // Real components of the map as nodal scalar grids.
        let mut component_grids = vec![vec![0.0; grid.len()]; d2];
        for lin in 0..grid.len() {
            let reals = field.map_reals(chart, lin);
            for (a, grids) in component_grids.iter_mut().enumerate() {
                grids[lin] = reals[a];
            }
        }
        let mut jac = vec![0.0; grid.len() * d2 * d2];
        for idx in grid.iter_indices() {
            let lin = grid.linear(&idx);
            for a in 0..d2 {
                for b in 0..d2 {
                    jac[lin * d2 * d2 + a * d2 + b] =
                        grid.node_derivative(&component_grids[a], &idx, b);
                }
            }
            let j = DMatrix::from_row_slice(d2, d2, &jac[lin * d2 * d2..(lin + 1) * d2 * d2]);
            let det = j.determinant();
            if det <= 0.0 {
                let q = domain.node(chart, &idx);
                return Err(Error::DiffeomorphismFailure {
                    query: format!("{:?}", q.z),
                    determinant: det,
                });
            }
        }
        field.jacobians.push(jac);
    }
    Ok(field)
}

/// Solve the transform field and extract map values plus FD Jacobians.
pub fn gradient_map(ctx: &TransformContext, eta: &EtaContext) -> Result<GradientMapField> {
    let result = transform_field(ctx, eta)?;
    gradient_map_from(ctx, &result)
}

/// Worst-case composition defect max_q |G(L(η))(G(η)(q)) − q|.
///
/// The outer map is evaluated at the exact off-grid points G(η)(q) by fresh
/// solves; interpolating the map field would hide genuine defects.
pub fn compose_check(ctx: &TransformContext, eta: &EtaContext) -> Result<f64> {
    let inner = transform_field(ctx, eta)?;
    let l_field = TransformedField::new(ctx, eta);
    let outer_eta = EtaContext::prepare(&l_field, ctx)?;
    let n = ctx.domain.dim();

    let mut worst = 0.0f64;
    for chart in 0..ctx.domain.chart_count() {
        let grid = ctx.domain.chart(chart).grid();
        let defects: Vec<Result<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|lin| {
                let idx = grid.multi(lin);
                let q = ctx.domain.node(chart, &idx);
                let g_q = ChartPoint {
                    chart,
                    z: inner.argmax[chart][lin * n..(lin + 1) * n].to_vec(),
                };
                let back = diastasis_legendre(ctx, &outer_eta, &g_q, Some(&q))?;
                Ok(back.argmax.dist(&q))
            })
            .collect();
        for d in defects {
            worst = worst.max(d?);
        }
    }
    Ok(worst)
}

/// Minimum Jacobian determinant and symmetric-part eigenvalue over the grid
/// and over the homotopy weights `ts` applied to η.
pub fn jacobian_positivity_sweep(
    ctx: &TransformContext,
    eta_field: &dyn SmoothField,
    ts: &[f64],
) -> Result<(f64, f64)> {
    let mut min_det = f64::INFINITY;
    let mut min_sym_eig = f64::INFINITY;
    for &t in ts {
        let scaled = LinearCombo::new(vec![(t, eta_field)]);
        let eta_t = EtaContext::prepare(&scaled, ctx)?;
        let map = gradient_map(ctx, &eta_t)?;
        for chart in 0..ctx.domain.chart_count() {
            let grid = ctx.domain.chart(chart).grid();
            for idx in grid.iter_indices() {
                let j = map.jacobian(chart, &idx);
                min_det = min_det.min(j.determinant());
                let sym = (j.clone() + j.transpose()) * 0.5;
                let eig = sym
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .fold(f64::INFINITY, |a, &b| a.min(b));
                min_sym_eig = min_sym_eig.min(eig);
            }
        }
    }
    Ok((min_det, min_sym_eig))
}

/// Max defect of the envelope identity ∇L(η)(q) = −(∇_q D)(G(η)(q), q):
/// the left side from grid finite differences of the transform values, the
/// right side in closed form. Interior nodes only.
pub fn transform_gradient_identity(ctx: &TransformContext, eta: &EtaContext) -> Result<f64> {
    let result = transform_field(ctx, eta)?;
    let n = ctx.domain.dim();
    let mut worst = 0.0f64;
    for chart in 0..ctx.domain.chart_count() {
        let grid = ctx.domain.chart(chart).grid();
        let values = result.transform.values(chart);
        for idx in grid.iter_indices() {
            if !grid.is_interior(&idx, 1) {
                continue;
            }
            let lin = grid.linear(&idx);
            let q = ctx.domain.node(chart, &idx);
            let g_q = &result.argmax[chart][lin * n..(lin + 1) * n];
            let rhs = -ctx.potential.diastasis_grad_q(g_q, &q.z)?;
            for a in 0..2 * n {
                let lhs = grid.node_derivative(values, &idx, a);
                worst = worst.max((lhs - rhs[a]).abs());
            }
        }
    }
    Ok(worst)
}

/// Spot check of the finite-difference Jacobians against the
/// implicit-function formula at seeded interior nodes.
pub fn jacobian_formula_check(
    ctx: &TransformContext,
    eta: &EtaContext,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    let result = transform_field(ctx, eta)?;
    let map = gradient_map_from(ctx, &result)?;
    let l_field = TransformedField::new(ctx, eta);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let chart = if ctx.domain.chart_count() > 1 {
            rng.random_range(0..ctx.domain.chart_count())
        } else {
            0
        };
        let grid = ctx.domain.chart(chart).grid();
        let idx: Vec<usize> = grid
            .axes()
            .iter()
            .map(|a| rng.random_range(1..a.count - 1))
            .collect();
        let q = ctx.domain.node(chart, &idx);
        let fd = map.jacobian(chart, &idx);
        let formula = l_field.map_jacobian(&q, &map.map_point(chart, &idx))?;
        worst = worst.max((fd - formula).abs().max());
    }
    Ok(worst)
}

/// Pairwise injectivity of the map at grid scale via a spatial hash: no two
/// distinct nodes may map within `tol` of each other.
pub fn injectivity_check(map: &GradientMapField, tol: f64) -> Result<()> {
    use std::collections::HashMap;
    for chart in 0..map.domain.chart_count() {
        let grid = map.domain.chart(chart).grid();
        let cell = grid.max_step().max(tol * 4.0);
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for lin in 0..grid.len() {
            let u = map.map_reals(chart, lin);
            let key: Vec<i64> = u.iter().map(|&x| (x / cell).floor() as i64).collect();
            let dim = key.len();
            let mut neighbor = key.clone();
            for code in 0..3usize.pow(dim as u32) {
                let mut c = code;
                for (d, slot) in neighbor.iter_mut().enumerate() {
                    *slot = key[d] + (c % 3) as i64 - 1;
                    c /= 3;
                }
                let Some(others) = buckets.get(&neighbor) else { continue };
                for &other in others {
                    let v = map.map_reals(chart, other);
                    let dist: f64 = u
                        .iter()
                        .zip(&v)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    if dist < tol {
                        let a = map.domain.node(chart, &grid.multi(lin));
                        let b = map.domain.node(chart, &grid.multi(other));
                        return Err(Error::DiffeomorphismFailure {
                            query: format!("{:?} vs {:?} collide", a.z, b.z),
                            determinant: dist,
                        });
                    }
                }
            }
            buckets.entry(key).or_default().push(lin);
        }
    }
    Ok(())
}
