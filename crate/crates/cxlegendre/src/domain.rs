//! Computational domains: complex boxes and the two-chart Riemann sphere.
//!
//! A point of ℂⁿ is identified with ℝ²ⁿ in block order `(x₁,…,xₙ,y₁,…,yₙ)`
//! where `z_j = x_j + i y_j`. All real gradients, Hessians and 2-form
//! matrices in this crate use that ordering.
//!
//! The sphere carries two standard stereographic charts with transition
//! `w = 1/z`; each chart grid is the square box of half-width 1.5, so the
//! unit-disk cores `|z| ≤ 1` of the two charts already cover everything and
//! the annulus `1/1.5 ≤ |z| ≤ 1.5` is shared.

use crate::error::{Error, Result};
use crate::grid::{Axis, GridBox};
use num_complex::Complex64;

pub const SPHERE_CHART_HALF_WIDTH: f64 = 1.5;

/// A point expressed in the coordinates of one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub chart: usize,
    pub z: Vec<Complex64>,
}

impl ChartPoint {
    pub fn flat(z: Vec<Complex64>) -> Self {
        Self { chart: 0, z }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Real-coordinate vector in block order.
    pub fn reals(&self) -> Vec<f64> {
        let n = self.z.len();
        let mut out = vec![0.0; 2 * n];
        for (j, z) in self.z.iter().enumerate() {
            out[j] = z.re;
            out[n + j] = z.im;
        }
        out
    }

    pub fn from_reals(chart: usize, v: &[f64]) -> Self {
        let n = v.len() / 2;
        let z = (0..n).map(|j| Complex64::new(v[j], v[n + j])).collect();
        Self { chart, z }
    }

    /// Chart-coordinate Euclidean distance to another point of the same chart.
    pub fn dist(&self, other: &ChartPoint) -> f64 {
        debug_assert_eq!(self.chart, other.chart);
        self.z
            .iter()
            .zip(&other.z)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// One chart: a complex box with a tensor grid on its realification.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxChart {
    pub center: Vec<Complex64>,
    pub half_widths: Vec<f64>,
    pub points_per_axis: usize,
    grid: GridBox,
}

impl BoxChart {
    pub fn new(center: Vec<Complex64>, half_widths: Vec<f64>, points_per_axis: usize) -> Result<Self> {
        if center.is_empty() || center.len() != half_widths.len() {
            return Err(Error::Config(
                "box center and half-width lists must be non-empty and equal length".into(),
            ));
        }
        if half_widths.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::Config("box half-widths must be positive".into()));
        }
        let n = center.len();
        let mut axes = Vec::with_capacity(2 * n);
        for j in 0..n {
            axes.push(Axis::new(
                center[j].re - half_widths[j],
                center[j].re + half_widths[j],
                points_per_axis,
            )?);
        }
        for j in 0..n {
            axes.push(Axis::new(
                center[j].im - half_widths[j],
                center[j].im + half_widths[j],
                points_per_axis,
            )?);
        }
        let grid = GridBox::new(axes)?;
        Ok(Self { center, half_widths, points_per_axis, grid })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    #[inline]
    pub fn grid(&self) -> &GridBox {
        &self.grid
    }

    pub fn contains(&self, z: &[Complex64]) -> bool {
        z.len() == self.dim() && {
            let mut v = vec![0.0; 2 * z.len()];
            for (j, c) in z.iter().enumerate() {
                v[j] = c.re;
                v[z.len() + j] = c.im;
            }
            self.grid.contains(&v)
        }
    }
}

/// A computational domain: flat box in ℂⁿ or the two-chart sphere.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartedDomain {
    Box(BoxChart),
    Sphere { charts: [BoxChart; 2] },
}

impl ChartedDomain {
    pub fn flat_box(center: Vec<Complex64>, half_widths: Vec<f64>, points_per_axis: usize) -> Result<Self> {
        Ok(Self::Box(BoxChart::new(center, half_widths, points_per_axis)?))
    }

    /// Two-chart sphere atlas at the fixed half-width 1.5.
    pub fn sphere(points_per_axis: usize) -> Result<Self> {
        let mk = || {
            BoxChart::new(
                vec![Complex64::new(0.0, 0.0)],
                vec![SPHERE_CHART_HALF_WIDTH],
                points_per_axis,
            )
        };
        Ok(Self::Sphere { charts: [mk()?, mk()?] })
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        match self {
            Self::Box(b) => b.dim(),
            Self::Sphere { .. } => 1,
        }
    }

    pub fn chart_count(&self) -> usize {
        match self {
            Self::Box(_) => 1,
            Self::Sphere { .. } => 2,
        }
    }

    pub fn chart(&self, k: usize) -> &BoxChart {
        match self {
            Self::Box(b) => {
                assert_eq!(k, 0, "flat box has a single chart");
                b
            }
            Self::Sphere { charts } => &charts[k],
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, Self::Sphere { .. })
    }

    /// Grid node as a chart point.
    pub fn node(&self, chart: usize, idx: &[usize]) -> ChartPoint {
        let v = self.chart(chart).grid().point(idx);
        ChartPoint::from_reals(chart, &v)
    }

    /// Express `p` in the coordinates of `target`. For the sphere the
    /// transition is `w = 1/z`; the chart origin has no image on the other
    /// chart.
    pub fn to_chart(&self, p: &ChartPoint, target: usize) -> Result<ChartPoint> {
        if p.chart == target {
            return Ok(p.clone());
        }
        match self {
            Self::Box(_) => Err(Error::OutOfDomain {
                context: "flat box has a single chart".into(),
            }),
            Self::Sphere { .. } => {
                let z = p.z[0];
                if z.norm() < 1e-14 {
                    return Err(Error::OutOfDomain {
                        context: "chart origin maps to infinity on the other chart".into(),
                    });
                }
                Ok(ChartPoint { chart: target, z: vec![z.inv()] })
            }
        }
    }

    /// Chart whose unit-disk core owns the underlying point (sphere);
    /// always 0 on a box.
    pub fn owning_chart(&self, p: &ChartPoint) -> usize {
        match self {
            Self::Box(_) => 0,
            Self::Sphere { .. } => {
                if p.z[0].norm() <= 1.0 {
                    p.chart
                } else {
                    1 - p.chart
                }
            }
        }
    }

    /// Whether the point lies inside the grid box of its own chart.
    pub fn in_chart_box(&self, p: &ChartPoint) -> bool {
        self.chart(p.chart).contains(&p.z)
    }

    /// Descriptor used in JSON sidecars.
    pub fn descriptor(&self) -> serde_json::Value {
        match self {
            Self::Box(b) => serde_json::json!({
                "kind": "box",
                "center": b.center.iter().map(|c| serde_json::json!({"re": c.re, "im": c.im})).collect::<Vec<_>>(),
                "half_widths": b.half_widths,
                "points_per_axis": b.points_per_axis,
            }),
            Self::Sphere { charts } => serde_json::json!({
                "kind": "sphere",
                "points_per_axis": charts[0].points_per_axis,
                "chart_half_width": SPHERE_CHART_HALF_WIDTH,
            }),
        }
    }
}

/// Derivative data of the sphere transition `z = 1/w` at a point `w`,
/// used to pull closed-form values defined in chart-0 coordinates back to
/// chart 1. Returns `(z, dz/dw, d²z/dw²)`.
pub fn sphere_transition_jets(w: Complex64) -> (Complex64, Complex64, Complex64) {
    let z = w.inv();
    let dz = -z * z;
    let d2z = 2.0 * z * z * z;
    (z, dz, d2z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn realification_block_order() {
        let p = ChartPoint::flat(vec![Complex64::new(1.0, 2.0), Complex64::new(3.0, 4.0)]);
        assert_eq!(p.reals(), vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(ChartPoint::from_reals(0, &p.reals()), p);
    }

    #[test]
    fn sphere_charts_cover_with_margin() {
        let d = ChartedDomain::sphere(9).unwrap();
        // Any point with |z| <= 1.5 is in chart 0's box; beyond that its
        // image under the transition has modulus < 1/1.5 < 1.5.
        let p = ChartPoint { chart: 0, z: vec![Complex64::new(2.0, 2.0)] };
        let q = d.to_chart(&p, 1).unwrap();
        assert!(q.z[0].norm() <= 1.5);
        assert!(d.in_chart_box(&q));
    }

    #[test]
    fn transition_is_involutive() {
        let d = ChartedDomain::sphere(9).unwrap();
        let p = ChartPoint { chart: 0, z: vec![Complex64::new(0.3, -0.8)] };
        let back = d.to_chart(&d.to_chart(&p, 1).unwrap(), 0).unwrap();
        assert_relative_eq!(back.z[0].re, p.z[0].re, max_relative = 1e-14);
        assert_relative_eq!(back.z[0].im, p.z[0].im, max_relative = 1e-14);
    }

    #[test]
    fn owning_chart_switches_at_unit_modulus() {
        let d = ChartedDomain::sphere(9).unwrap();
        let inside = ChartPoint { chart: 0, z: vec![Complex64::new(0.5, 0.0)] };
        let outside = ChartPoint { chart: 0, z: vec![Complex64::new(1.2, 0.0)] };
        assert_eq!(d.owning_chart(&inside), 0);
        assert_eq!(d.owning_chart(&outside), 1);
    }
}
