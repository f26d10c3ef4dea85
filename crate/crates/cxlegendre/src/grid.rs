//! Uniform tensor-product grids over real boxes.
//!
//! Everything downstream (complex boxes, sphere charts, quadrature,
//! finite-difference stencils) is built on this one representation: a box
//! `[min_i, max_i]` per axis sampled at `count_i` equispaced nodes,
//! endpoints included.

use crate::error::{Error, Result};

/// One uniformly sampled axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::Config(format!("bad axis range [{min}, {max}]")));
        }
        if count < 3 {
            return Err(Error::Config(format!(
                "axis needs at least 3 points, got {count}"
            )));
        }
        Ok(Self { min, max, count })
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.min + self.step() * i as f64
    }

    /// Fractional grid coordinate of `x`, clamped to the axis range.
    #[inline]
    pub fn locate(&self, x: f64) -> f64 {
        ((x - self.min) / self.step()).clamp(0.0, (self.count - 1) as f64)
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        let pad = 1e-12 * (1.0 + self.max.abs() + self.min.abs());
        x >= self.min - pad && x <= self.max + pad
    }
}

/// Tensor-product grid over a real box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBox {
    axes: Vec<Axis>,
    /// Row-major strides; last axis fastest.
    strides: Vec<usize>,
    len: usize,
}

impl GridBox {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Config("grid needs at least one axis".into()));
        }
        let mut strides = vec![0usize; axes.len()];
        let mut acc = 1usize;
        for (k, axis) in axes.iter().enumerate().rev() {
            strides[k] = acc;
            acc = acc.checked_mul(axis.count).ok_or_else(|| {
                Error::Config("grid too large".into())
            })?;
        }
        Ok(Self { axes, strides, len: acc })
    }

    #[inline]
    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Largest axis step (stencil scale).
    pub fn max_step(&self) -> f64 {
        self.axes.iter().map(Axis::step).fold(0.0, f64::max)
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| (a.max - a.min).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[inline]
    pub fn linear(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.axes.len());
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi(&self, mut lin: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.axes.len()];
        for (k, s) in self.strides.iter().enumerate() {
            idx[k] = lin / s;
            lin %= s;
        }
        idx
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.coord(i))
            .collect()
    }

    pub fn point_linear(&self, lin: usize) -> Vec<f64> {
        self.point(&self.multi(lin))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.axes.len() && x.iter().zip(&self.axes).all(|(&v, a)| a.contains(v))
    }

    /// True when a centered stencil of `margin` cells fits around `idx`.
    pub fn is_interior(&self, idx: &[usize], margin: usize) -> bool {
        idx.iter()
            .zip(&self.axes)
            .all(|(&i, a)| i >= margin && i + margin < a.count)
    }

    /// Iterate all multi-indices in row-major order.
    pub fn iter_indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len).map(|l| self.multi(l))
    }

    /// Multilinear interpolation of nodal `values` at a point inside the box.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> Result<f64> {
        if values.len() != self.len {
            return Err(Error::DimensionMismatch {
                context: format!("{} values on a {}-node grid", values.len(), self.len),
            });
        }
        if !self.contains(x) {
            return Err(Error::OutOfDomain {
                context: format!("interpolation at {x:?}"),
            });
        }
        let nd = self.ndim();
        let mut base = vec![0usize; nd];
        let mut frac = vec![0.0f64; nd];
        for k in 0..nd {
            let t = self.axes[k].locate(x[k]);
            let i = (t.floor() as usize).min(self.axes[k].count - 2);
            base[k] = i;
            frac[k] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << nd) {
            let mut w = 1.0;
            let mut lin = 0usize;
            for k in 0..nd {
                let hi = (corner >> k) & 1 == 1;
                w *= if hi { frac[k] } else { 1.0 - frac[k] };
                lin += (base[k] + hi as usize) * self.strides[k];
            }
            if w != 0.0 {
                acc += w * values[lin];
            }
        }
        Ok(acc)
    }

    /// Stencil (offset, coefficient) pairs for d/dx along `axis` at position
    /// `i`: central inside, one-sided second-order at the faces.
    fn d1_stencil(&self, axis: usize, i: usize) -> [(isize, f64); 3] {
        let h = self.axes[axis].step();
        let count = self.axes[axis].count;
        if i > 0 && i + 1 < count {
            [(-1, -0.5 / h), (1, 0.5 / h), (0, 0.0)]
        } else if i == 0 {
            [(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)]
        } else {
            [(0, 1.5 / h), (-1, -2.0 / h), (-2, 0.5 / h)]
        }
    }

    /// First derivative of nodal data along `axis` at a node.
    pub fn node_derivative(&self, values: &[f64], idx: &[usize], axis: usize) -> f64 {
        let mut acc = 0.0;
        for (off, coef) in self.d1_stencil(axis, idx[axis]) {
            if coef == 0.0 {
                continue;
            }
            let mut jdx = idx.to_vec();
            jdx[axis] = (idx[axis] as isize + off) as usize;
            acc += coef * values[self.linear(&jdx)];
        }
        acc
    }

    /// Second derivative ∂a∂b of nodal data at a node (composed stencils).
    pub fn node_second_derivative(
        &self,
        values: &[f64],
        idx: &[usize],
        a: usize,
        b: usize,
    ) -> f64 {
        let mut acc = 0.0;
        for (off, coef) in self.d1_stencil(a, idx[a]) {
            if coef == 0.0 {
                continue;
            }
            let mut jdx = idx.to_vec();
            jdx[a] = (idx[a] as isize + off) as usize;
            acc += coef * self.node_derivative(values, &jdx, b);
        }
        acc
    }

    /// Trapezoid quadrature weight of node `idx` (product of per-axis weights).
    pub fn trapezoid_weight(&self, idx: &[usize]) -> f64 {
        idx.iter()
            .zip(&self.axes)
            .map(|(&i, a)| {
                let w = if i == 0 || i + 1 == a.count { 0.5 } else { 1.0 };
                w * a.step()
            })
            .product()
    }
}
