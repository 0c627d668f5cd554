//! Cost profiles on low-dimensional affine slices through a reference
//! solution, for the output-matching cost `J` and the saddle objective `L`.
//!
//! Primal directions are `θ_i - θ*` for random `θ_i` with `‖θ_i - θ*‖ = ‖θ*‖`.
//! The dual direction is `V_1 - V*` where `V*` is the closed-form maximizer at
//! `θ*` and `V_1` is drawn uniform on `(-2, -1e-3)` per entry.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::corpus::NGramModel;
use crate::cost::empirical_odm_cost;
use crate::error::{Error, Result};
use crate::model::LinearClassifier;
use crate::rng::{stream, Stream};
use crate::spdg::{dual_closed_form, lagrangian, DualVariables};
use crate::synthdata::SequenceDataset;

/// Evenly spaced axis values `min, ..., max` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if points == 0 || !(min <= max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidArgument(format!("bad axis [{min}, {max}] with {points} points")));
        }
        if points == 1 && min != max {
            return Err(Error::InvalidArgument("a single-point axis needs min == max".into()));
        }
        Ok(Self { min, max, points })
    }

    /// Value at position `k`. Computed as `min + k·(max-min)/(points-1)` so
    /// that refining by doubling resolution reproduces shared points exactly
    /// whenever they are exactly representable.
    pub fn value(&self, k: usize) -> f64 {
        if self.points == 1 {
            return self.min;
        }
        let t = k as f64 / (self.points - 1) as f64;
        if k + 1 == self.points {
            self.max
        } else {
            self.min + t * (self.max - self.min)
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.value(k)).collect()
    }
}

impl Default for Axis {
    fn default() -> Self {
        Self { min: -2.0, max: 2.0, points: 41 }
    }
}

/// Which objective a grid holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `J(θ* + λ1(θ1-θ*) + λ2(θ2-θ*))`.
    Cost,
    /// `L(θ* + λ1(θ1-θ*), V* + λ2(V1-V*))`.
    Saddle,
}

/// A 2D profile. `values[i * lambda2.len() + j]` is the value at
/// `(lambda1[i], lambda2[j])`; flagged cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGrid {
    pub kind: ProfileKind,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub values: Vec<f64>,
    /// Cells where some dual was not strictly negative.
    pub flags: Vec<bool>,
    /// Human-readable description of anchors and seeds.
    pub anchor: String,
}

impl ProfileGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.lambda2.len() + j]
    }

    pub fn flagged(&self, i: usize, j: usize) -> bool {
        self.flags[i * self.lambda2.len() + j]
    }

    /// Indices of the cell closest to `(0, 0)`.
    pub fn origin(&self) -> (usize, usize) {
        let nearest = |axis: &[f64]| {
            (0..axis.len())
                .min_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs()))
                .unwrap_or(0)
        };
        (nearest(&self.lambda1), nearest(&self.lambda2))
    }

    /// Position of the smallest unflagged value.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        let n2 = self.lambda2.len();
        (0..self.values.len())
            .filter(|&k| !self.flags[k])
            .min_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .map(|k| (k / n2, k % n2))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda1,lambda2,value,flag\n");
        for (i, l1) in self.lambda1.iter().enumerate() {
            for (j, l2) in self.lambda2.iter().enumerate() {
                let k = i * self.lambda2.len() + j;
                let _ = writeln!(out, "{l1},{l2},{:e},{}", self.values[k], u8::from(self.flags[k]));
            }
        }
        out
    }

    pub fn metadata(&self) -> String {
        let kind = match self.kind {
            ProfileKind::Cost => "J (output-matching cost)",
            ProfileKind::Saddle => "L (saddle objective)",
        };
        format!(
            "cost = {kind}\nlambda1 = [{}, {}] x {}\nlambda2 = [{}, {}] x {}\n{}\n",
            self.lambda1.first().copied().unwrap_or(0.0),
            self.lambda1.last().copied().unwrap_or(0.0),
            self.lambda1.len(),
            self.lambda2.first().copied().unwrap_or(0.0),
            self.lambda2.last().copied().unwrap_or(0.0),
            self.lambda2.len(),
            self.anchor
        )
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A random point `θ1` with `‖θ1 - θ*‖ = ‖θ*‖`, from a Gaussian direction.
/// `index` selects independent draws under one seed.
pub fn random_direction(theta_star: &LinearClassifier, seed: u64, index: u64) -> Result<LinearClassifier> {
    let mut rng = stream(seed.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)), Stream::Directions);
    let dir: Vec<f64> = (0..theta_star.weights().len()).map(|_| rng.sample(StandardNormal)).collect();
    let scale = l2(theta_star.weights()) / l2(&dir);
    if !scale.is_finite() || scale == 0.0 {
        return Err(Error::InvalidArgument("reference weights must be nonzero to scale directions".into()));
    }
    let weights = theta_star.weights().iter().zip(&dir).map(|(w, d)| w + scale * d).collect();
    Ok(theta_star.with_weights(weights))
}

/// Dual endpoint `V1`, uniform on `(-2, -1e-3)` per entry.
pub fn dual_direction(lm: &NGramModel, seed: u64) -> Result<DualVariables> {
    let mut rng = stream(seed, Stream::DualDirection);
    let values = (0..lm.support_len()).map(|_| rng.random_range(-2.0..-1e-3)).collect();
    DualVariables::new(lm, values)
}

fn affine(base: &[f64], dirs: &[(&[f64], f64)]) -> Vec<f64> {
    let mut out = base.to_vec();
    for &(end, lambda) in dirs {
        if lambda != 0.0 {
            for ((o, e), b) in out.iter_mut().zip(end).zip(base) {
                *o += lambda * (e - b);
            }
        }
    }
    out
}

fn check_same_shape(a: &LinearClassifier, b: &LinearClassifier) -> Result<()> {
    if a.weights().len() != b.weights().len() || a.gamma() != b.gamma() {
        return Err(Error::DimensionMismatch { expected: a.weights().len(), found: b.weights().len() });
    }
    Ok(())
}

/// Model at `θ* + λ1(θ1-θ*) + λ2(θ2-θ*)`.
pub fn primal_point(theta_star: &LinearClassifier, dirs: &[(&LinearClassifier, f64)]) -> LinearClassifier {
    let d: Vec<(&[f64], f64)> = dirs.iter().map(|(m, l)| (m.weights(), *l)).collect();
    theta_star.with_weights(affine(theta_star.weights(), &d))
}

/// `J` on the plane through `θ*`, `θ1`, `θ2`.
pub fn profile_j(
    dataset: &SequenceDataset,
    lm: &NGramModel,
    theta_star: &LinearClassifier,
    theta1: &LinearClassifier,
    theta2: &LinearClassifier,
    axis1: Axis,
    axis2: Axis,
) -> Result<ProfileGrid> {
    check_same_shape(theta_star, theta1)?;
    check_same_shape(theta_star, theta2)?;
    let (lambda1, lambda2) = (axis1.values(), axis2.values());
    let mut values = Vec::with_capacity(lambda1.len() * lambda2.len());
    for &a in &lambda1 {
        for &b in &lambda2 {
            let model = primal_point(theta_star, &[(theta1, a), (theta2, b)]);
            values.push(empirical_odm_cost(&model, dataset, lm)?);
        }
    }
    let flags = vec![false; values.len()];
    Ok(ProfileGrid {
        kind: ProfileKind::Cost,
        lambda1,
        lambda2,
        values,
        flags,
        anchor: "anchor = theta_star; lambda1 -> theta1; lambda2 -> theta2".into(),
    })
}

/// `L` on the plane spanned by the primal direction `θ1-θ*` (λ1) and the
/// dual direction `V1-V*` (λ2). Cells whose duals leave the negative orthant
/// are flagged and hold NaN.
#[allow(clippy::too_many_arguments)]
pub fn profile_l(
    dataset: &SequenceDataset,
    lm: &NGramModel,
    theta_star: &LinearClassifier,
    v_star: &DualVariables,
    theta1: &LinearClassifier,
    v1: &DualVariables,
    axis_primal: Axis,
    axis_dual: Axis,
) -> Result<ProfileGrid> {
    check_same_shape(theta_star, theta1)?;
    if v_star.values().len() != lm.support_len() || v1.values().len() != lm.support_len() {
        return Err(Error::DimensionMismatch { expected: lm.support_len(), found: v1.values().len() });
    }
    let (lambda1, lambda2) = (axis_primal.values(), axis_dual.values());
    let n = lambda1.len() * lambda2.len();
    let mut values = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for &a in &lambda1 {
        let model = primal_point(theta_star, &[(theta1, a)]);
        for &b in &lambda2 {
            let v = affine(v_star.values(), &[(v1.values(), b)]);
            match DualVariables::new(lm, v) {
                Ok(duals) => {
                    values.push(lagrangian(&model, &duals, dataset, lm)?);
                    flags.push(false);
                }
                Err(Error::NonNegativeDual { .. }) => {
                    values.push(f64::NAN);
                    flags.push(true);
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(ProfileGrid {
        kind: ProfileKind::Saddle,
        lambda1,
        lambda2,
        values,
        flags,
        anchor: "anchor = (theta_star, V_star closed form); lambda1 -> theta1; lambda2 -> V1".into(),
    })
}

/// Outcome of the saddle checks on an `L` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleReport {
    /// Every unflagged cell on the dual axis through the origin is at most
    /// the origin value.
    pub dual_axis_max_at_origin: bool,
    /// Largest `value(0, λ_d) - value(0, 0)` seen on that axis.
    pub dual_axis_worst_excess: f64,
    /// Central-difference slope along the primal axis at the origin.
    pub primal_slope: f64,
}

pub fn saddle_checks(grid: &ProfileGrid) -> Result<SaddleReport> {
    if grid.kind != ProfileKind::Saddle {
        return Err(Error::InvalidArgument("saddle checks need an L profile".into()));
    }
    let (i0, j0) = grid.origin();
    if grid.lambda1[i0] != 0.0 || grid.lambda2[j0] != 0.0 {
        return Err(Error::InvalidArgument("grid does not contain the origin".into()));
    }
    let centre = grid.get(i0, j0);
    let mut worst = f64::NEG_INFINITY;
    for j in (0..grid.lambda2.len()).filter(|&j| j != j0 && !grid.flagged(i0, j)) {
        worst = worst.max(grid.get(i0, j) - centre);
    }
    let primal_slope = if i0 > 0 && i0 + 1 < grid.lambda1.len() {
        (grid.get(i0 + 1, j0) - grid.get(i0 - 1, j0)) / (grid.lambda1[i0 + 1] - grid.lambda1[i0 - 1])
    } else {
        f64::NAN
    };
    Ok(SaddleReport { dual_axis_max_at_origin: worst <= 0.0, dual_axis_worst_excess: worst, primal_slope })
}

/// `J` and `L(·, V*)` along `θ* + λ(θ1-θ*)`, with `V*` the closed-form dual
/// at `θ*`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineProfile {
    pub lambdas: Vec<f64>,
    pub cost_j: Vec<f64>,
    pub cost_l: Vec<f64>,
}

impl LineProfile {
    pub fn max_j(&self) -> f64 {
        self.cost_j.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_l(&self) -> f64 {
        self.cost_l.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max L <= max J`, allowing a relative rounding slack of `1e-12`
    /// (the two coincide at `λ = 0`, where `V*` is exact).
    pub fn l_below_j(&self) -> bool {
        let (j, l) = (self.max_j(), self.max_l());
        l <= j + 1e-12 * j.abs().max(1.0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,J,L\n");
        for ((l, j), v) in self.lambdas.iter().zip(&self.cost_j).zip(&self.cost_l) {
            let _ = writeln!(out, "{l},{j:e},{v:e}");
        }
        out
    }
}

pub fn line_profile(
    dataset: &SequenceDataset,
    lm: &NGramModel,
    theta_star: &LinearClassifier,
    theta1: &LinearClassifier,
    lambdas: &[f64],
) -> Result<LineProfile> {
    check_same_shape(theta_star, theta1)?;
    let v_star = dual_closed_form(theta_star, dataset, lm)?;
    let mut cost_j = Vec::with_capacity(lambdas.len());
    let mut cost_l = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let model = primal_point(theta_star, &[(theta1, lambda)]);
        cost_j.push(empirical_odm_cost(&model, dataset, lm)?);
        cost_l.push(lagrangian(&model, &v_star, dataset, lm)?);
    }
    Ok(LineProfile { lambdas: lambdas.to_vec(), cost_j, cost_l })
}
