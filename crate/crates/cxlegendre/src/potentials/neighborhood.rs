//! Empirical estimation of the convexity tube around the diagonal.
//!
//! The estimate is a sweep, not a proof: pairs (z, q) with |z − q| ≤ δ are
//! sampled chart-locally, and δ is the largest radius (found by bisection
//! starting from the box diameter) at which every sampled pair satisfies
//! D(z, q) > 0 with a positive-definite real Hessian of z ↦ D(z, q). The
//! convexity constant is half the smallest observed ratio D / |z − q|².

use super::AnalyticPotential;
use crate::domain::{ChartPoint, ChartedDomain};
use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tube radius δ and convexity constant C with
/// D(z, q) ≥ C·|z − q|² on sampled pairs inside the tube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodEstimate {
    pub radius_delta: f64,
    pub convexity_constant: f64,
}

/// Radius fractions at which partners are placed along each direction.
const RADIUS_FRACTIONS: [f64; 5] = [0.02, 0.25, 0.5, 0.75, 1.0];
const DIRECTIONS_PER_BASE: usize = 8;
const BASE_NODES_PER_AXIS: usize = 7;
const SWEEP_SEED: u64 = 0x5eed_cab1e;

struct SweepOutcome {
    admissible: bool,
    min_ratio: f64,
    min_hessian_eig: f64,
}

fn unit_directions(dim2: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..DIRECTIONS_PER_BASE)
        .map(|_| {
            loop {
                let v: Vec<f64> = (0..dim2).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-3 {
                    return v.iter().map(|x| x / norm).collect();
                }
            }
        })
        .collect()
}

fn base_nodes(domain: &ChartedDomain, chart: usize) -> Vec<ChartPoint> {
    let grid = domain.chart(chart).grid();
    let mut out = Vec::new();
    let strides: Vec<usize> = grid
        .axes()
        .iter()
        .map(|a| (a.count.saturating_sub(1) / (BASE_NODES_PER_AXIS - 1)).max(1))
        .collect();
    for idx in grid.iter_indices() {
        let coarse = idx
            .iter()
            .zip(grid.axes())
            .zip(&strides)
            .all(|((&i, a), &s)| i % s == 0 || i + 1 == a.count);
        if coarse {
            out.push(domain.node(chart, &idx));
        }
    }
    out
}

fn sweep(
    potential: &AnalyticPotential,
    domain: &ChartedDomain,
    radius: f64,
) -> Result<SweepOutcome> {
    let n = potential.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED);
    let dirs = unit_directions(2 * n, &mut rng);
    let mut min_ratio = f64::INFINITY;
    let mut min_eig = f64::INFINITY;

    for chart in 0..domain.chart_count() {
        let chart_box = domain.chart(chart);
        for q in base_nodes(domain, chart) {
            let qr = q.reals();
            for dir in &dirs {
                for &f in &RADIUS_FRACTIONS {
                    let zr: Vec<f64> = qr
                        .iter()
                        .zip(dir)
                        .map(|(&c, &u)| c + u * f * radius)
                        .collect();
                    let z = ChartPoint::from_reals(chart, &zr);
                    if !chart_box.contains(&z.z) {
                        continue;
                    }
                    let dist2: f64 = zr
                        .iter()
                        .zip(&qr)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    // A pair reaching the polarization cut is simply outside
                    // the admissible tube.
                    let (d, hess) = match (
                        potential.diastasis(&z.z, &q.z),
                        potential.diastasis_hess_z(&z.z, &q.z),
                    ) {
                        (Ok(d), Ok(h)) => (d, h),
                        _ => {
                            return Ok(SweepOutcome {
                                admissible: false,
                                min_ratio: 0.0,
                                min_hessian_eig: f64::NEG_INFINITY,
                            })
                        }
                    };
                    if !(d > 0.0) {
                        return Ok(SweepOutcome {
                            admissible: false,
                            min_ratio: 0.0,
                            min_hessian_eig: f64::NEG_INFINITY,
                        });
                    }
                    min_ratio = min_ratio.min(d / dist2);
                    let eig = hess
                        .symmetric_eigen()
                        .eigenvalues
                        .iter()
                        .fold(f64::INFINITY, |a, &b| a.min(b));
                    min_eig = min_eig.min(eig);
                    if eig <= 0.0 {
                        return Ok(SweepOutcome {
                            admissible: false,
                            min_ratio,
                            min_hessian_eig: eig,
                        });
                    }
                }
            }
        }
    }
    Ok(SweepOutcome {
        admissible: min_ratio.is_finite() && min_ratio > 0.0,
        min_ratio,
        min_hessian_eig: min_eig,
    })
}

/// Estimate (δ, C) for a strongly psh potential over the domain.
pub fn estimate_neighborhood(
    potential: &AnalyticPotential,
    domain: &ChartedDomain,
) -> Result<NeighborhoodEstimate> {
    let diameter = (0..domain.chart_count())
        .map(|c| domain.chart(c).grid().diameter())
        .fold(0.0f64, f64::max);

    let outcome = sweep(potential, domain, diameter)?;
    if outcome.admissible {
        return Ok(NeighborhoodEstimate {
            radius_delta: diameter,
            convexity_constant: outcome.min_ratio / 2.0,
        });
    }

    // Shrink until admissible, then bisect the boundary.
    let mut good = diameter / 2.0;
    let mut bad = diameter;
    loop {
        let o = sweep(potential, domain, good)?;
        if o.admissible {
            break;
        }
        bad = good;
        good /= 2.0;
        if good < diameter * 1e-6 {
            return Err(Error::DegeneratePotential { smallest: good });
        }
    }
    for _ in 0..20 {
        let mid = 0.5 * (good + bad);
        if sweep(potential, domain, mid)?.admissible {
            good = mid;
        } else {
            bad = mid;
        }
    }
    let outcome = sweep(potential, domain, good)?;
    Ok(NeighborhoodEstimate {
        radius_delta: good,
        convexity_constant: outcome.min_ratio / 2.0,
    })
}

/// Smallest eigenvalue of ∇²_z D over sampled pairs in the tube of the given
/// radius: the uniform-concavity budget available to perturbations.
pub fn concavity_margin(
    potential: &AnalyticPotential,
    domain: &ChartedDomain,
    radius: f64,
) -> Result<f64> {
    let outcome = sweep(potential, domain, radius)?;
    if !outcome.min_hessian_eig.is_finite() {
        return Err(Error::DegeneratePotential { smallest: radius });
    }
    Ok(outcome.min_hessian_eig)
}
