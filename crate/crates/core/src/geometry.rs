//! Circle domains and their oriented boundary samplings.
//!
//! A circle domain is the open disc of the outer circle with the closed discs
//! of the holes removed. Holes are indexed `0..n-1` in the order supplied and
//! the outer circle always comes last, so circle index `k` in every per-circle
//! vector of the crate refers to the same boundary component.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Circles closer than this fraction of the outer radius are rejected.
pub const MIN_SEPARATION_RATIO: f64 = 1e-3;
/// Circles closer than this fraction of the outer radius trigger a warning.
pub const WARN_SEPARATION_RATIO: f64 = 1e-2;
/// Smallest admissible number of samples per boundary circle.
pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("circle {index} has degenerate radius {radius}")]
    DegenerateRadius { index: usize, radius: f64 },
    #[error("hole {index} is not strictly inside the outer circle")]
    HoleOutsideOuter { index: usize },
    #[error("holes {first} and {second} overlap or touch")]
    OverlappingCircles { first: usize, second: usize },
    #[error("boundary circles are {gap:e} apart, below the minimum {min:e}")]
    CirclesTooClose { gap: f64, min: f64 },
    #[error("need at least {min} samples per circle, got {got}")]
    TooFewSamples { got: usize, min: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Point at parameter angle `theta`, measured counterclockwise from the
    /// positive real direction.
    pub fn point(&self, theta: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, theta)
    }

    /// `m` equispaced points traversed in the given direction, starting at
    /// angle zero.
    pub fn sample_points(&self, m: usize, orientation: Orientation) -> Vec<Complex64> {
        (0..m)
            .map(|i| self.point(orientation.sign() * TAU * i as f64 / m as f64))
            .collect()
    }

    fn distance_to(&self, z: Complex64) -> f64 {
        (z - self.center).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Counterclockwise,
    Clockwise,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Counterclockwise => 1.0,
            Orientation::Clockwise => -1.0,
        }
    }
}

/// Unvalidated circle list; the serialized form of a [`CircleDomain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub outer: Circle,
    #[serde(default)]
    pub holes: Vec<Circle>,
}

impl TryFrom<DomainSpec> for CircleDomain {
    type Error = GeometryError;

    fn try_from(spec: DomainSpec) -> Result<Self, Self::Error> {
        CircleDomain::new(spec.outer, spec.holes)
    }
}

impl From<CircleDomain> for DomainSpec {
    fn from(d: CircleDomain) -> Self {
        DomainSpec { outer: d.outer, holes: d.holes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpec", into = "DomainSpec")]
pub struct CircleDomain {
    outer: Circle,
    holes: Vec<Circle>,
    separation: f64,
}

impl CircleDomain {
    /// Checks the circle configuration and computes the minimum gap between
    /// boundary circles (`+inf` for a disc).
    pub fn new(outer: Circle, holes: Vec<Circle>) -> Result<Self, GeometryError> {
        for (index, c) in holes.iter().chain(std::iter::once(&outer)).enumerate() {
            if !(c.radius.is_finite() && c.radius > 0.0) || !c.center.is_finite() {
                return Err(GeometryError::DegenerateRadius { index, radius: c.radius });
            }
        }

        let mut separation = f64::INFINITY;
        for (index, hole) in holes.iter().enumerate() {
            let gap = outer.radius - outer.distance_to(hole.center) - hole.radius;
            if gap <= 0.0 {
                return Err(GeometryError::HoleOutsideOuter { index });
            }
            separation = separation.min(gap);
        }
        for i in 0..holes.len() {
            for j in i + 1..holes.len() {
                let gap = holes[i].distance_to(holes[j].center) - holes[i].radius - holes[j].radius;
                if gap <= 0.0 {
                    return Err(GeometryError::OverlappingCircles { first: i, second: j });
                }
                separation = separation.min(gap);
            }
        }

        let min = MIN_SEPARATION_RATIO * outer.radius;
        if separation < min {
            return Err(GeometryError::CirclesTooClose { gap: separation, min });
        }
        if separation < WARN_SEPARATION_RATIO * outer.radius {
            log::warn!(
                "boundary circles are only {separation:e} apart; expect a poorly conditioned basis"
            );
        }

        Ok(Self { outer, holes, separation })
    }

    pub fn disc(center: Complex64, radius: f64) -> Result<Self, GeometryError> {
        Self::new(Circle::new(center, radius), Vec::new())
    }

    pub fn outer(&self) -> &Circle {
        &self.outer
    }

    pub fn holes(&self) -> &[Circle] {
        &self.holes
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Number of boundary circles `n` (holes plus the outer circle).
    pub fn circle_count(&self) -> usize {
        self.holes.len() + 1
    }

    pub fn is_disc(&self) -> bool {
        self.holes.is_empty()
    }

    /// Boundary circle `k`: holes first, the outer circle at `n - 1`.
    pub fn circle(&self, k: usize) -> &Circle {
        if k < self.holes.len() {
            &self.holes[k]
        } else {
            assert_eq!(k, self.holes.len(), "circle index out of range");
            &self.outer
        }
    }

    pub fn circles(&self) -> impl Iterator<Item = &Circle> {
        self.holes.iter().chain(std::iter::once(&self.outer))
    }

    /// Standard orientation: domain on the left.
    pub fn orientation(&self, k: usize) -> Orientation {
        if k == self.holes.len() {
            Orientation::Counterclockwise
        } else {
            Orientation::Clockwise
        }
    }

    /// Whether `z` lies in the open domain.
    pub fn contains(&self, z: Complex64) -> bool {
        self.outer.distance_to(z) < self.outer.radius
            && self.holes.iter().all(|h| h.distance_to(z) > h.radius)
    }

    /// Distance from `z` to the nearest boundary circle.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        self.circles()
            .map(|c| (c.distance_to(z) - c.radius).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `contains(z)`, or `z` within `tol * R` of the boundary.
    pub fn contains_closure(&self, z: Complex64, tol: f64) -> bool {
        self.contains(z) || self.boundary_distance(z) <= tol * self.outer.radius
    }

    /// Samples every circle with `m` equispaced points in the standard
    /// orientation.
    pub fn sampling(&self, m: usize) -> Result<Arc<BoundarySampling>, GeometryError> {
        BoundarySampling::new(self.clone(), m).map(Arc::new)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledCircle {
    pub circle: Circle,
    pub orientation: Orientation,
    /// Traversal parameters `2*pi*i/m`; the geometric angle of point `i` is
    /// `orientation.sign() * angles[i]`.
    pub angles: Vec<f64>,
    pub points: Vec<Complex64>,
}

/// Equispaced points on each boundary circle, in traversal order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySampling {
    domain: CircleDomain,
    m: usize,
    circles: Vec<SampledCircle>,
}

impl BoundarySampling {
    pub fn new(domain: CircleDomain, m: usize) -> Result<Self, GeometryError> {
        if m < MIN_SAMPLES {
            return Err(GeometryError::TooFewSamples { got: m, min: MIN_SAMPLES });
        }
        let circles = (0..domain.circle_count())
            .map(|k| {
                let circle = *domain.circle(k);
                let orientation = domain.orientation(k);
                SampledCircle {
                    circle,
                    orientation,
                    angles: (0..m).map(|i| TAU * i as f64 / m as f64).collect(),
                    points: circle.sample_points(m, orientation),
                }
            })
            .collect();
        Ok(Self { domain, m, circles })
    }

    pub fn domain(&self) -> &CircleDomain {
        &self.domain
    }

    pub fn samples_per_circle(&self) -> usize {
        self.m
    }

    pub fn circles(&self) -> &[SampledCircle] {
        &self.circles
    }

    pub fn circle(&self, k: usize) -> &SampledCircle {
        &self.circles[k]
    }

    /// All points, circle by circle.
    pub fn points(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.circles
            .iter()
            .enumerate()
            .flat_map(|(k, c)| c.points.iter().map(move |&z| (k, z)))
    }

    pub fn total_points(&self) -> usize {
        self.m * self.circles.len()
    }

    /// Same domain and sample count.
    pub fn is_compatible(&self, other: &BoundarySampling) -> bool {
        self.m == other.m && self.domain == other.domain
    }
}
