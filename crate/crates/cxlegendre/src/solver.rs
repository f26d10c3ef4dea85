//! Concave maximization over a ball in chart coordinates.
//!
//! The primary path is damped Newton with Armijo backtracking (factor 1/2,
//! slope 1e-4), started at the query point, stopped at gradient norm 1e-10
//! or 50 iterations. Objectives whose concavity certificate fails carry
//! trouble spots; those are scanned on a local lattice and every candidate
//! is polished, with distant near-equal maxima reported as an ambiguity
//! (concavity violation) rather than silently tie-broken. A derivative-free
//! pattern refinement backs the forced-scan mode used on kinked envelopes.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// One maximization target in the real coordinates of a fixed chart.
pub trait Objective: Sync {
    fn dim2(&self) -> usize;
    fn value_at(&self, u: &[f64]) -> Result<f64>;
    fn gradient_at(&self, u: &[f64]) -> Result<DVector<f64>>;
    fn hessian_at(&self, u: &[f64]) -> Result<DMatrix<f64>>;
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub gradient_tol: f64,
    pub max_iterations: usize,
    pub armijo_slope: f64,
    pub armijo_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gradient_tol: 1e-10,
            max_iterations: 50,
            armijo_slope: 1e-4,
            armijo_factor: 0.5,
        }
    }
}

/// Result of one solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub maximizer: DVector<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub used_fallback: bool,
    /// Newton (or its polish) failed; the result comes from scanning only.
    pub degraded: bool,
    /// Largest eigenvalue of the objective Hessian at the maximizer
    /// (negative when the local concavity check passes).
    pub hessian_max_eig: f64,
}

/// Scan regions for objectives without a global concavity certificate:
/// chart-local centers and radii.
#[derive(Debug, Clone, Default)]
pub struct ScanHints {
    pub spots: Vec<(Vec<f64>, f64)>,
    /// Two local maxima farther apart than this with near-equal values are
    /// an ambiguity error (10 grid steps in field solves).
    pub tie_distance: f64,
    /// Force the lattice scan + pattern refinement even where Newton
    /// converges (kinked envelopes).
    pub force_scan: bool,
}

enum NewtonFail {
    NotConcave,
    NoProgress,
    MaxIterations,
    Eval(Error),
}

fn clamp_point(
    u: &mut DVector<f64>,
    center: &DVector<f64>,
    radius: f64,
    clip: Option<&[(f64, f64)]>,
) {
    let d = u.clone() - center;
    let n = d.norm();
    if n > radius {
        *u = center + d * (radius / n);
    }
    if let Some(bounds) = clip {
        for (x, &(lo, hi)) in u.iter_mut().zip(bounds) {
            *x = x.clamp(lo, hi);
        }
    }
}

fn newton_max(
    obj: &dyn Objective,
    start: &DVector<f64>,
    center: &DVector<f64>,
    radius: f64,
    clip: Option<&[(f64, f64)]>,
    opts: &SolverOptions,
) -> std::result::Result<(DVector<f64>, f64, f64, usize), NewtonFail> {
    let mut u = start.clone();
    clamp_point(&mut u, center, radius, clip);
    let mut value = obj.value_at(u.as_slice()).map_err(NewtonFail::Eval)?;
    for it in 0..opts.max_iterations {
        let g = obj.gradient_at(u.as_slice()).map_err(NewtonFail::Eval)?;
        let gnorm = g.norm();
        if gnorm <= opts.gradient_tol {
            return Ok((u, value, gnorm, it));
        }
        let h = obj.hessian_at(u.as_slice()).map_err(NewtonFail::Eval)?;
        let neg = -h;
        let Some(chol) = neg.cholesky() else {
            return Err(NewtonFail::NotConcave);
        };
        let dir = chol.solve(&g);
        let slope = g.dot(&dir);
        if !slope.is_finite() || slope <= 0.0 {
            return Err(NewtonFail::NotConcave);
        }
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-14 {
            let mut cand = &u + &dir * t;
            clamp_point(&mut cand, center, radius, clip);
            let cv = obj.value_at(cand.as_slice()).map_err(NewtonFail::Eval)?;
            if cv >= value + opts.armijo_slope * t * slope {
                u = cand;
                value = cv;
                moved = true;
                break;
            }
            t *= opts.armijo_factor;
        }
        if !moved {
            // Line search exhausted: accept only if effectively stationary.
            let g = obj.gradient_at(u.as_slice()).map_err(NewtonFail::Eval)?;
            if g.norm() <= 1e2 * opts.gradient_tol {
                return Ok((u, value, g.norm(), it));
            }
            return Err(NewtonFail::NoProgress);
        }
    }
    let g = obj.gradient_at(u.as_slice()).map_err(NewtonFail::Eval)?;
    if g.norm() <= opts.gradient_tol {
        return Ok((u, value, g.norm(), opts.max_iterations));
    }
    Err(NewtonFail::MaxIterations)
}

/// Derivative-free compass refinement for kinked but unimodal objectives.
fn pattern_refine(
    obj: &dyn Objective,
    start: &DVector<f64>,
    center: &DVector<f64>,
    radius: f64,
    clip: Option<&[(f64, f64)]>,
    initial_step: f64,
) -> Result<(DVector<f64>, f64)> {
    let d2 = obj.dim2();
    let mut u = start.clone();
    let mut value = obj.value_at(u.as_slice())?;
    let mut step = initial_step.max(1e-12);
    while step > 1e-10 * (1.0 + radius) {
        let mut improved = false;
        for a in 0..d2 {
            for sgn in [-1.0, 1.0] {
                let mut cand = u.clone();
                cand[a] += sgn * step;
                clamp_point(&mut cand, center, radius, clip);
                let cv = obj.value_at(cand.as_slice())?;
                if cv > value {
                    u = cand;
                    value = cv;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((u, value))
}

/// Lattice of points covering a square window intersected with the search
/// ball.
fn lattice_points(
    center_window: &[f64],
    half_width: f64,
    per_axis: usize,
    ball_center: &DVector<f64>,
    radius: f64,
    clip: Option<&[(f64, f64)]>,
) -> Vec<DVector<f64>> {
    let d2 = center_window.len();
    let total = per_axis.pow(d2 as u32);
    let mut out = Vec::new();
    for lin in 0..total {
        let mut rem = lin;
        let mut u = DVector::zeros(d2);
        for a in 0..d2 {
            let i = rem % per_axis;
            rem /= per_axis;
            let frac = if per_axis == 1 { 0.5 } else { i as f64 / (per_axis - 1) as f64 };
            u[a] = center_window[a] - half_width + 2.0 * half_width * frac;
        }
        let inside_clip = clip.is_none_or(|bounds| {
            u.iter().zip(bounds).all(|(&x, &(lo, hi))| x >= lo && x <= hi)
        });
        if inside_clip && (u.clone() - ball_center).norm() <= radius {
            out.push(u);
        }
    }
    out
}

struct Candidate {
    point: DVector<f64>,
    value: f64,
    gradient_norm: f64,
    iterations: usize,
    degraded: bool,
}

/// Maximize over the ball of `radius` around `query`.
///
/// `warm` seeds the Newton start; `hints` carries the trouble spots of the
/// non-certified part of the objective plus the tie threshold.
pub fn solve_concave_max(
    obj: &dyn Objective,
    query: &DVector<f64>,
    radius: f64,
    clip: Option<&[(f64, f64)]>,
    opts: &SolverOptions,
    hints: &ScanHints,
    warm: Option<&DVector<f64>>,
) -> Result<SolveOutcome> {
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut newton_failed = false;

    if !hints.force_scan {
        let start = warm.unwrap_or(query);
        match newton_max(obj, start, query, radius, clip, opts) {
            Ok((u, v, g, it)) => candidates.push(Candidate {
                point: u,
                value: v,
                gradient_norm: g,
                iterations: it,
                degraded: false,
            }),
            Err(NewtonFail::Eval(e)) => return Err(e),
            Err(_) => newton_failed = true,
        }
    }

    let relevant_spots: Vec<&(Vec<f64>, f64)> = hints
        .spots
        .iter()
        .filter(|(c, r)| {
            let cv = DVector::from_column_slice(c);
            (cv - query).norm() <= radius + r
        })
        .collect();

    let scanning = hints.force_scan || newton_failed || !relevant_spots.is_empty();
    if scanning {
        // One seed group per basin candidate: every trouble spot separately,
        // plus a global lattice over the ball when Newton gave nothing.
        let mut seed_groups: Vec<Vec<DVector<f64>>> = Vec::new();
        for (c, r) in &relevant_spots {
            let pts = lattice_points(c, *r, 13, query, radius, clip);
            if !pts.is_empty() {
                seed_groups.push(pts);
            }
        }
        if hints.force_scan || newton_failed {
            let q_slice: Vec<f64> = query.iter().copied().collect();
            let mut pts = lattice_points(&q_slice, radius, 17, query, radius, clip);
            pts.push(query.clone());
            seed_groups.push(pts);
        }
        for group in seed_groups {
            let mut best: Option<(DVector<f64>, f64)> = None;
            for s in group {
                let v = obj.value_at(s.as_slice())?;
                if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                    best = Some((s, v));
                }
            }
            let Some((seed, _)) = best else { continue };
            match newton_max(obj, &seed, query, radius, clip, opts) {
                Ok((u, v, g, it)) => candidates.push(Candidate {
                    point: u,
                    value: v,
                    gradient_norm: g,
                    iterations: it,
                    degraded: false,
                }),
                Err(NewtonFail::Eval(e)) => return Err(e),
                Err(_) => {
                    let step = radius / 16.0;
                    let (u, v) = pattern_refine(obj, &seed, query, radius, clip, step)?;
                    candidates.push(Candidate {
                        point: u,
                        value: v,
                        gradient_norm: f64::INFINITY,
                        iterations: opts.max_iterations,
                        degraded: true,
                    });
                }
            }
        }
    }

    if candidates.is_empty() {
        return Err(Error::SolverFailure {
            query: format!("{:?}", query.as_slice()),
            detail: "no maximizer candidate found".into(),
        });
    }

    // Ambiguity detection among well-separated near-equal candidates.
    if hints.tie_distance > 0.0 {
        for i in 0..candidates.len() {
            for j in i + 1..candidates.len() {
                let gap = (candidates[i].value - candidates[j].value).abs();
                let sep = (candidates[i].point.clone() - &candidates[j].point).norm();
                if gap < 1e-6 && sep > hints.tie_distance {
                    return Err(Error::AmbiguousMaximum {
                        query: format!("{:?}", query.as_slice()),
                        first: format!("{:?}", candidates[i].point.as_slice()),
                        second: format!("{:?}", candidates[j].point.as_slice()),
                        value_gap: gap,
                        separation: sep,
                    });
                }
            }
        }
    }

    let best = candidates
        .into_iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .expect("non-empty");

    let hessian_max_eig = match obj.hessian_at(best.point.as_slice()) {
        Ok(h) => h
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
        Err(_) => f64::NAN,
    };

    Ok(SolveOutcome {
        value: best.value,
        gradient_norm: best.gradient_norm,
        iterations: best.iterations,
        used_fallback: scanning,
        degraded: best.degraded,
        hessian_max_eig,
        maximizer: best.point,
    })
}

/// Aggregate statistics over the per-point solves of a field computation.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solves: usize,
    pub max_gradient_norm: f64,
    pub max_iterations: usize,
    pub fallback_count: usize,
    pub degraded_count: usize,
    /// Queries whose search ball was truncated by the chart box.
    pub boundary_truncated: usize,
    /// Largest Hessian eigenvalue seen at any maximizer (< 0 certifies
    /// concavity of every solved objective at its solution).
    pub worst_hessian_eig: f64,
    pub max_displacement: f64,
}

impl Default for SolverReport {
    fn default() -> Self {
        Self {
            solves: 0,
            max_gradient_norm: 0.0,
            max_iterations: 0,
            fallback_count: 0,
            degraded_count: 0,
            boundary_truncated: 0,
            worst_hessian_eig: f64::NEG_INFINITY,
            max_displacement: 0.0,
        }
    }
}

impl SolverReport {
    pub fn absorb(&mut self, outcome: &SolveOutcome, displacement: f64, truncated: bool) {
        self.solves += 1;
        if !outcome.degraded {
            self.max_gradient_norm = self.max_gradient_norm.max(outcome.gradient_norm);
        }
        self.max_iterations = self.max_iterations.max(outcome.iterations);
        self.fallback_count += outcome.used_fallback as usize;
        self.degraded_count += outcome.degraded as usize;
        self.boundary_truncated += truncated as usize;
        if outcome.hessian_max_eig.is_finite() {
            self.worst_hessian_eig = self.worst_hessian_eig.max(outcome.hessian_max_eig);
        }
        self.max_displacement = self.max_displacement.max(displacement);
    }

    pub fn merge(mut self, other: SolverReport) -> SolverReport {
        self.solves += other.solves;
        self.max_gradient_norm = self.max_gradient_norm.max(other.max_gradient_norm);
        self.max_iterations = self.max_iterations.max(other.max_iterations);
        self.fallback_count += other.fallback_count;
        self.degraded_count += other.degraded_count;
        self.boundary_truncated += other.boundary_truncated;
        self.worst_hessian_eig = self.worst_hessian_eig.max(other.worst_hessian_eig);
        self.max_displacement = self.max_displacement.max(other.max_displacement);
        self
    }

    /// Every solved objective was locally concave at its maximizer.
    pub fn all_concave(&self) -> bool {
        self.solves > 0 && self.worst_hessian_eig < 0.0
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "solves": self.solves,
            "max_gradient_norm": self.max_gradient_norm,
            "max_iterations": self.max_iterations,
            "fallback_count": self.fallback_count,
            "degraded_count": self.degraded_count,
            "boundary_truncated": self.boundary_truncated,
            "worst_hessian_eig": self.worst_hessian_eig,
            "max_displacement": self.max_displacement,
        })
    }
}
