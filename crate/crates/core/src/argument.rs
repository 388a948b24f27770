//! Change of argument along the oriented boundary.
//!
//! Each circle is traversed in its standard orientation and the principal
//! values of `arg(F(z_{i+1}) / F(z_i))` are summed, closing the loop from the
//! last sample back to the first. The per-circle sums are therefore exact
//! multiples of `2 pi` up to rounding. A step of `pi/2` or more means the
//! samples may have skipped a full turn; the function is then resampled at
//! twice the density if it carries an evaluator, or rejected if it does not.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{BoundaryError, BoundaryFunction};

/// Largest admissible phase increment between consecutive samples.
pub const PHASE_STEP_LIMIT: f64 = PI / 2.0;
/// Modulus below this fraction of the largest sample counts as a zero.
pub const ZERO_TOLERANCE: f64 = 1e-9;
/// Number of sample doublings attempted before giving up.
pub const MAX_REFINEMENTS: usize = 6;
/// Largest distance of a winding total from a multiple of `2 pi` that is
/// still reported as a whole number of turns.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArgumentError {
    #[error("function vanishes on the boundary (min modulus {min:e}, max {max:e})")]
    ZeroOnBoundary { min: f64, max: f64 },
    #[error("phase step {step:.3} rad on circle {circle} with {m} samples cannot be resolved")]
    UnresolvedPhase { circle: usize, m: usize, step: f64 },
    #[error("total {total} is not a whole number of turns")]
    NonIntegral { total: f64 },
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleWinding {
    pub circle: usize,
    pub radians: f64,
    pub turns: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingReport {
    pub per_circle: Vec<CircleWinding>,
    pub total: f64,
    pub total_turns: i64,
    pub integrality_defect: f64,
    pub min_modulus: f64,
    pub refinement_depth: usize,
    pub samples_per_circle: usize,
}

impl WindingReport {
    pub fn is_negative(&self) -> bool {
        self.total_turns < 0
    }
}

/// Total change of argument of `f` along the boundary.
pub fn change_of_argument(f: &BoundaryFunction) -> Result<WindingReport, ArgumentError> {
    let mut current = f.clone();
    let mut depth = 0;
    loop {
        check_nonvanishing(&current)?;
        match phase_sums(&current) {
            Ok(per_circle) => return assemble(&current, per_circle, depth),
            Err(unresolved) => {
                if depth == MAX_REFINEMENTS {
                    return Err(unresolved);
                }
                let m = current.sampling().samples_per_circle() * 2;
                current = match current.resample(m) {
                    Some(next) => next?,
                    None => return Err(unresolved),
                };
                depth += 1;
            }
        }
    }
}

/// Whether the winding of `f` equals `2 pi` times `zeros`.
pub fn zero_count_check(f: &BoundaryFunction, zeros: usize) -> Result<bool, ArgumentError> {
    let report = change_of_argument(f)?;
    Ok((report.total - TAU * zeros as f64).abs() <= INTEGRALITY_TOLERANCE * TAU)
}

/// Unwrapped argument along each circle as `(t, arg F)` pairs, `t` being the
/// traversal parameter. The final pair closes the loop at `t = 2 pi`.
pub fn phase_trace(f: &BoundaryFunction) -> Vec<Vec<(f64, f64)>> {
    f.sampling()
        .circles()
        .iter()
        .zip(f.values())
        .map(|(sc, vals)| {
            let mut phase = vals[0].arg();
            let mut out = vec![(0.0, phase)];
            for i in 1..=vals.len() {
                let next = vals[i % vals.len()];
                phase += (next * vals[i - 1].conj()).arg();
                let t = if i == vals.len() { TAU } else { sc.angles[i] };
                out.push((t, phase));
            }
            out
        })
        .collect()
}

fn check_nonvanishing(f: &BoundaryFunction) -> Result<(), ArgumentError> {
    let max = f.sup_norm();
    let min = f.min_modulus();
    if !(min >= ZERO_TOLERANCE * max) || max == 0.0 {
        return Err(ArgumentError::ZeroOnBoundary { min, max });
    }
    Ok(())
}

fn phase_sums(f: &BoundaryFunction) -> Result<Vec<f64>, ArgumentError> {
    let m = f.sampling().samples_per_circle();
    f.values()
        .iter()
        .enumerate()
        .map(|(circle, vals)| {
            let mut sum = 0.0;
            for i in 0..vals.len() {
                let step = (vals[(i + 1) % vals.len()] * vals[i].conj()).arg();
                if step.abs() >= PHASE_STEP_LIMIT {
                    return Err(ArgumentError::UnresolvedPhase { circle, m, step });
                }
                sum += step;
            }
            Ok(sum)
        })
        .collect()
}

fn assemble(
    f: &BoundaryFunction,
    per_circle: Vec<f64>,
    refinement_depth: usize,
) -> Result<WindingReport, ArgumentError> {
    let total: f64 = per_circle.iter().sum();
    let total_turns = (total / TAU).round() as i64;
    let integrality_defect = (total / TAU - total_turns as f64).abs();
    if integrality_defect > INTEGRALITY_TOLERANCE {
        return Err(ArgumentError::NonIntegral { total });
    }
    Ok(WindingReport {
        per_circle: per_circle
            .into_iter()
            .enumerate()
            .map(|(circle, radians)| CircleWinding {
                circle,
                radians,
                turns: (radians / TAU).round() as i64,
            })
            .collect(),
        total,
        total_turns,
        integrality_defect,
        min_modulus: f.min_modulus(),
        refinement_depth,
        samples_per_circle: f.sampling().samples_per_circle(),
    })
}
