//! Dirichlet problem on circle domains by least-squares collocation.
//!
//! Every harmonic function on a circle domain `D` (outer circle centre `o`,
//! radius `R`, holes centred at `z_j` with radii `r_j`) has the form
//!
//! ```text
//! u(z) = F(z) + conj(G(z)) + sum_j lambda_j log|z - z_j|
//! ```
//!
//! with `F`, `G` holomorphic on `D`. Truncating the Taylor series about `o`
//! and the Laurent tails about each `z_j` at degree `N` gives the basis
//!
//! ```text
//! ((z-o)/R)^k            k = 0..N     outer holomorphic
//! conj((z-o)/R)^k        k = 1..N     outer antiholomorphic
//! (r_j/(z-z_j))^k        k = 1..N     hole j holomorphic
//! conj(r_j/(z-z_j))^k    k = 1..N     hole j antiholomorphic
//! log|z - z_j|                        hole j logarithmic
//! ```
//!
//! Boundary data is fitted in this basis by a column-scaled SVD least-squares
//! solve. The only multivalued-conjugate obstruction is the log part: the
//! closed-curve integral of `du/dz` counterclockwise around hole `j` is
//! `pi i lambda_j`, so `u` has a conjugate on `D` iff every `lambda_j` is zero.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::BoundaryFunction;
use crate::geometry::{BoundarySampling, CircleDomain};

pub const DEFAULT_DEGREE: usize = 24;
pub const MIN_DEGREE: usize = 4;
/// Samples per circle must be at least this multiple of the per-circle basis
/// size `2N + 1`.
pub const OVERSAMPLING: usize = 4;
/// Smallest admissible ratio of extreme singular values of the scaled
/// collocation matrix.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Residual cap for smooth boundary data.
pub const SMOOTH_RESIDUAL_CAP: f64 = 1e-8;
/// Residual cap for merely continuous boundary data.
pub const CONTINUOUS_RESIDUAL_CAP: f64 = 1e-4;
/// Largest log coefficient tolerated by [`HarmonicRepresentation::split_conjugable`].
pub const LOG_PART_TOLERANCE: f64 = 1e-9;
/// Points this close to the boundary (relative to `R`) count as on it.
const CLOSURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarmonicError {
    #[error("degree {degree} is below the minimum {min}")]
    DegreeTooSmall { degree: usize, min: usize },
    #[error("{m} samples per circle cannot support degree {degree}; need at least {required}")]
    TooFewSamples { m: usize, degree: usize, required: usize },
    #[error("collocation matrix is numerically rank deficient (singular value ratio {ratio:e})")]
    IllConditioned { ratio: f64 },
    #[error("boundary fit residual {residual:e} exceeds cap {cap:e}")]
    ResidualTooLarge { residual: f64, cap: f64 },
    #[error("point {z} is outside the closed domain")]
    PointOutsideDomain { z: Complex64 },
    #[error("period matrix is singular (singular value ratio {ratio:e})")]
    SingularPeriodMatrix { ratio: f64 },
    #[error("log coefficient of magnitude {magnitude:e} prevents a conjugate")]
    HasLogPart { magnitude: f64 },
    #[error("boundary function is sampled differently from the solver")]
    SamplingMismatch,
}

/// One member of the collocation basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTerm {
    OuterHolo(usize),
    OuterAnti(usize),
    HoleHolo { hole: usize, power: usize },
    HoleAnti { hole: usize, power: usize },
    HoleLog { hole: usize },
}

impl BasisTerm {
    pub fn label(&self) -> String {
        match self {
            BasisTerm::OuterHolo(_) => "outer_holo".into(),
            BasisTerm::OuterAnti(_) => "outer_anti".into(),
            BasisTerm::HoleHolo { hole, .. } => format!("hole{hole}_holo"),
            BasisTerm::HoleAnti { hole, .. } => format!("hole{hole}_anti"),
            BasisTerm::HoleLog { hole } => format!("hole{hole}_log"),
        }
    }

    pub fn power(&self) -> usize {
        match *self {
            BasisTerm::OuterHolo(k) | BasisTerm::OuterAnti(k) => k,
            BasisTerm::HoleHolo { power, .. } | BasisTerm::HoleAnti { power, .. } => power,
            BasisTerm::HoleLog { .. } => 0,
        }
    }
}

/// Index layout of the basis for a domain and degree.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicBasis {
    domain: CircleDomain,
    degree: usize,
}

impl HarmonicBasis {
    pub fn new(domain: CircleDomain, degree: usize) -> Self {
        Self { domain, degree }
    }

    pub fn domain(&self) -> &CircleDomain {
        &self.domain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        2 * self.degree + 1 + self.domain.holes().len() * (2 * self.degree + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn outer_holo(&self, k: usize) -> usize {
        k
    }

    pub fn outer_anti(&self, k: usize) -> usize {
        debug_assert!(k >= 1);
        self.degree + k
    }

    fn hole_base(&self, hole: usize) -> usize {
        (2 * self.degree + 1) * (hole + 1)
    }

    pub fn hole_holo(&self, hole: usize, k: usize) -> usize {
        debug_assert!(k >= 1);
        self.hole_base(hole) + k - 1
    }

    pub fn hole_anti(&self, hole: usize, k: usize) -> usize {
        debug_assert!(k >= 1);
        self.hole_base(hole) + self.degree + k - 1
    }

    pub fn hole_log(&self, hole: usize) -> usize {
        self.hole_base(hole) + 2 * self.degree
    }

    pub fn terms(&self) -> Vec<BasisTerm> {
        let n = self.degree;
        let mut t: Vec<BasisTerm> = (0..=n).map(BasisTerm::OuterHolo).collect();
        t.extend((1..=n).map(BasisTerm::OuterAnti));
        for hole in 0..self.domain.holes().len() {
            t.extend((1..=n).map(|power| BasisTerm::HoleHolo { hole, power }));
            t.extend((1..=n).map(|power| BasisTerm::HoleAnti { hole, power }));
            t.push(BasisTerm::HoleLog { hole });
        }
        t
    }

    /// Values of every basis member at `z`.
    pub fn eval_row(&self, z: Complex64, row: &mut [Complex64]) {
        let n = self.degree;
        let outer = self.domain.outer();
        let w = (z - outer.center) / outer.radius;
        let mut p = Complex64::new(1.0, 0.0);
        row[0] = p;
        for k in 1..=n {
            p *= w;
            row[self.outer_holo(k)] = p;
            row[self.outer_anti(k)] = p.conj();
        }
        for (hole, c) in self.domain.holes().iter().enumerate() {
            let d = z - c.center;
            let q = c.radius / d;
            let mut p = Complex64::new(1.0, 0.0);
            for k in 1..=n {
                p *= q;
                row[self.hole_holo(hole, k)] = p;
                row[self.hole_anti(hole, k)] = p.conj();
            }
            row[self.hole_log(hole)] = Complex64::from(d.norm().ln());
        }
    }

    fn row(&self, z: Complex64) -> Vec<Complex64> {
        let mut row = vec![Complex64::default(); self.len()];
        self.eval_row(z, &mut row);
        row
    }
}

/// A harmonic function on the domain as coefficients in [`HarmonicBasis`].
#[derive(Debug, Clone)]
pub struct HarmonicRepresentation {
    basis: Arc<HarmonicBasis>,
    coefficients: Vec<Complex64>,
    residual: f64,
}

impl HarmonicRepresentation {
    pub fn from_coefficients(basis: Arc<HarmonicBasis>, coefficients: Vec<Complex64>) -> Self {
        assert_eq!(coefficients.len(), basis.len(), "coefficient count must match the basis");
        Self { basis, coefficients, residual: 0.0 }
    }

    /// The constant function `c`.
    pub fn constant(basis: Arc<HarmonicBasis>, c: Complex64) -> Self {
        let mut coefficients = vec![Complex64::default(); basis.len()];
        coefficients[0] = c;
        Self::from_coefficients(basis, coefficients)
    }

    pub fn basis(&self) -> &Arc<HarmonicBasis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficient(&self, index: usize) -> Complex64 {
        self.coefficients[index]
    }

    /// Sup-norm boundary misfit recorded when the function was fitted.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `lambda_j`, the coefficient of `log|z - z_j|`, for each hole.
    pub fn log_coefficients(&self) -> Vec<Complex64> {
        (0..self.basis.domain.holes().len())
            .map(|j| self.coefficients[self.basis.hole_log(j)])
            .collect()
    }

    /// Coefficients of the antiholomorphic basis members.
    pub fn antiholo_coefficients(&self) -> Vec<Complex64> {
        let b = &self.basis;
        let n = b.degree;
        let mut out: Vec<Complex64> = (1..=n).map(|k| self.coefficients[b.outer_anti(k)]).collect();
        for j in 0..b.domain.holes().len() {
            out.extend((1..=n).map(|k| self.coefficients[b.hole_anti(j, k)]));
        }
        out
    }

    /// Largest antiholomorphic coefficient and largest log coefficient, in
    /// that order. Both vanish iff the function is holomorphic.
    pub fn holomorphy_defect(&self) -> (f64, f64) {
        let sup = |v: Vec<Complex64>| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        (sup(self.antiholo_coefficients()), sup(self.log_coefficients()))
    }

    /// Value at `z` in the closed domain.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64, HarmonicError> {
        if !self.basis.domain.contains_closure(z, CLOSURE_TOLERANCE) {
            return Err(HarmonicError::PointOutsideDomain { z });
        }
        Ok(self.evaluate_unchecked(z))
    }

    pub(crate) fn evaluate_unchecked(&self, z: Complex64) -> Complex64 {
        self.basis.row(z).iter().zip(&self.coefficients).map(|(b, c)| b * c).sum()
    }

    /// Counterclockwise periods `oint du/dz dz` around each hole:
    /// `pi i lambda_j`.
    pub fn periods(&self) -> Vec<Complex64> {
        self.log_coefficients()
            .into_iter()
            .map(|l| Complex64::new(0.0, PI) * l)
            .collect()
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Self {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    /// `alpha * self + beta * other`. The residual bound adds up accordingly.
    pub fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        assert!(Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis);
        Self {
            basis: self.basis.clone(),
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
            residual: alpha.norm() * self.residual + beta.norm() * other.residual,
        }
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self {
            basis: self.basis.clone(),
            coefficients: self.coefficients.iter().map(|c| alpha * c).collect(),
            residual: alpha.norm() * self.residual,
        }
    }

    pub fn add_constant(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.coefficients[0] += c;
        out
    }

    /// Splits a function with vanishing log part as `F + conj(G)`.
    ///
    /// The constant term goes to `F`.
    pub fn split_conjugable(&self) -> Result<(HolomorphicSeries, HolomorphicSeries), HarmonicError> {
        let magnitude = self.log_coefficients().iter().map(|l| l.norm()).fold(0.0, f64::max);
        if magnitude > LOG_PART_TOLERANCE {
            return Err(HarmonicError::HasLogPart { magnitude });
        }
        let b = &self.basis;
        let n = b.degree;
        let holes = b.domain.holes().len();
        let f = HolomorphicSeries {
            domain: b.domain.clone(),
            degree: n,
            outer: (0..=n).map(|k| self.coefficients[b.outer_holo(k)]).collect(),
            holes: (0..holes)
                .map(|j| (1..=n).map(|k| self.coefficients[b.hole_holo(j, k)]).collect())
                .collect(),
        };
        let mut g_outer = vec![Complex64::default()];
        g_outer.extend((1..=n).map(|k| self.coefficients[b.outer_anti(k)].conj()));
        let g = HolomorphicSeries {
            domain: b.domain.clone(),
            degree: n,
            outer: g_outer,
            holes: (0..holes)
                .map(|j| (1..=n).map(|k| self.coefficients[b.hole_anti(j, k)].conj()).collect())
                .collect(),
        };
        Ok((f, g))
    }

    /// `(label, power, coefficient)` for every basis member.
    pub fn coefficient_table(&self) -> Vec<(String, usize, Complex64)> {
        self.basis
            .terms()
            .iter()
            .zip(&self.coefficients)
            .map(|(t, &c)| (t.label(), t.power(), c))
            .collect()
    }
}

/// A holomorphic function on the domain: a Taylor polynomial about the outer
/// centre plus a Laurent tail about each hole centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolomorphicSeries {
    pub domain: CircleDomain,
    pub degree: usize,
    /// Coefficients of `((z-o)/R)^k`, `k = 0..=N`.
    pub outer: Vec<Complex64>,
    /// Per hole, coefficients of `(r_j/(z-z_j))^k`, `k = 1..=N`.
    pub holes: Vec<Vec<Complex64>>,
}

impl HolomorphicSeries {
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        let outer = self.domain.outer();
        let w = (z - outer.center) / outer.radius;
        // Horner in w
        let mut acc = self.outer.iter().rev().fold(Complex64::default(), |acc, &c| acc * w + c);
        for (c, coeffs) in self.domain.holes().iter().zip(&self.holes) {
            let q = c.radius / (z - c.center);
            let tail = coeffs.iter().rev().fold(Complex64::default(), |acc, &a| acc * q + a);
            acc += tail * q;
        }
        acc
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let outer = self.domain.outer();
        let w = (z - outer.center) / outer.radius;
        let mut acc = Complex64::default();
        let mut p = Complex64::new(1.0, 0.0);
        for (k, c) in self.outer.iter().enumerate().skip(1) {
            acc += c * k as f64 * p / outer.radius;
            p *= w;
        }
        for (c, coeffs) in self.domain.holes().iter().zip(&self.holes) {
            let q = c.radius / (z - c.center);
            let mut p = q * q;
            for (i, a) in coeffs.iter().enumerate() {
                acc -= a * (i + 1) as f64 * p / c.radius;
                p *= q;
            }
        }
        acc
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree);
        Self {
            domain: self.domain.clone(),
            degree: self.degree,
            outer: self.outer.iter().zip(&other.outer).map(|(a, b)| a + b).collect(),
            holes: self
                .holes
                .iter()
                .zip(&other.holes)
                .map(|(x, y)| x.iter().zip(y).map(|(a, b)| a + b).collect())
                .collect(),
        }
    }

    pub fn add_constant(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.outer[0] += c;
        out
    }
}

/// Reusable least-squares Dirichlet solver for one sampling and degree.
///
/// The SVD of the column-scaled collocation matrix is computed once; every
/// solve is then a pair of matrix-vector products.
#[derive(Debug, Clone)]
pub struct DirichletSolver {
    sampling: Arc<BoundarySampling>,
    basis: Arc<HarmonicBasis>,
    matrix: DMatrix<Complex64>,
    column_scale: Vec<f64>,
    u: DMatrix<Complex64>,
    singular_values: DVector<f64>,
    v_t: DMatrix<Complex64>,
    condition_ratio: f64,
}

impl DirichletSolver {
    pub fn new(sampling: Arc<BoundarySampling>, degree: usize) -> Result<Self, HarmonicError> {
        if degree < MIN_DEGREE {
            return Err(HarmonicError::DegreeTooSmall { degree, min: MIN_DEGREE });
        }
        let m = sampling.samples_per_circle();
        let required = OVERSAMPLING * (2 * degree + 1);
        if m < required {
            return Err(HarmonicError::TooFewSamples { m, degree, required });
        }
        let basis = Arc::new(HarmonicBasis::new(sampling.domain().clone(), degree));
        let cols = basis.len();
        let points: Vec<Complex64> = sampling.points().map(|(_, z)| z).collect();
        let rows: Vec<Vec<Complex64>> = points.par_iter().map(|&z| basis.row(z)).collect();
        let matrix = DMatrix::from_fn(points.len(), cols, |i, j| rows[i][j]);

        let column_scale: Vec<f64> = (0..cols).map(|j| matrix.column(j).norm()).collect();
        let mut scaled = matrix.clone();
        for (j, s) in column_scale.iter().enumerate() {
            scaled.column_mut(j).unscale_mut(*s);
        }
        let svd = scaled.svd(true, true);
        let singular_values = svd.singular_values;
        let max = singular_values.max();
        let min = singular_values.min();
        let condition_ratio = min / max;
        if !(condition_ratio >= RANK_TOLERANCE) {
            return Err(HarmonicError::IllConditioned { ratio: condition_ratio });
        }
        Ok(Self {
            sampling,
            basis,
            matrix,
            column_scale,
            u: svd.u.expect("requested U"),
            singular_values,
            v_t: svd.v_t.expect("requested V^H"),
            condition_ratio,
        })
    }

    pub fn sampling(&self) -> &Arc<BoundarySampling> {
        &self.sampling
    }

    pub fn basis(&self) -> &Arc<HarmonicBasis> {
        &self.basis
    }

    pub fn domain(&self) -> &CircleDomain {
        self.basis.domain()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    /// Ratio of smallest to largest singular value of the scaled matrix.
    pub fn condition_ratio(&self) -> f64 {
        self.condition_ratio
    }

    /// Least-squares harmonic extension of `f`.
    pub fn solve(&self, f: &BoundaryFunction) -> Result<HarmonicRepresentation, HarmonicError> {
        if !self.sampling.is_compatible(f.sampling()) {
            return Err(HarmonicError::SamplingMismatch);
        }
        let b = DVector::from_iterator(self.matrix.nrows(), f.samples());
        let mut y = self.u.ad_mul(&b);
        for (yi, s) in y.iter_mut().zip(self.singular_values.iter()) {
            *yi /= *s;
        }
        let x = self.v_t.ad_mul(&y);
        let coefficients: Vec<Complex64> =
            x.iter().zip(&self.column_scale).map(|(c, s)| c / *s).collect();
        let fitted = &self.matrix * DVector::from_column_slice(&coefficients);
        let residual = fitted.iter().zip(b.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        Ok(HarmonicRepresentation { basis: self.basis.clone(), coefficients, residual })
    }

    /// [`solve`](Self::solve), failing when the boundary misfit exceeds `cap`.
    pub fn solve_capped(
        &self,
        f: &BoundaryFunction,
        cap: f64,
    ) -> Result<HarmonicRepresentation, HarmonicError> {
        let h = self.solve(f)?;
        if h.residual > cap {
            return Err(HarmonicError::ResidualTooLarge { residual: h.residual, cap });
        }
        Ok(h)
    }

    /// Harmonic measures of every boundary circle, holes first.
    pub fn harmonic_measures(&self) -> Result<HarmonicMeasureSet, HarmonicError> {
        let n = self.domain().circle_count();
        let m = self.sampling.samples_per_circle();
        let measures = (0..n)
            .map(|k| {
                let data = (0..n)
                    .map(|j| vec![Complex64::from(if j == k { 1.0 } else { 0.0 }); m])
                    .collect();
                let f = BoundaryFunction::from_samples(self.sampling.clone(), data)
                    .expect("indicator data matches the sampling");
                self.solve(&f)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HarmonicMeasureSet { measures })
    }
}

/// Builds a solver for `f`'s sampling and fits `f`.
pub fn solve_dirichlet(
    f: &BoundaryFunction,
    degree: usize,
) -> Result<HarmonicRepresentation, HarmonicError> {
    DirichletSolver::new(f.sampling().clone(), degree)?.solve(f)
}

/// Harmonic measures `omega_1..omega_n`, holes first and the outer circle last.
#[derive(Debug, Clone)]
pub struct HarmonicMeasureSet {
    measures: Vec<HarmonicRepresentation>,
}

impl HarmonicMeasureSet {
    pub fn measures(&self) -> &[HarmonicRepresentation] {
        &self.measures
    }

    pub fn measure(&self, k: usize) -> &HarmonicRepresentation {
        &self.measures[k]
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    /// `P[i][j] = lambda_i(omega_j)` over the holes.
    pub fn period_matrix(&self) -> DMatrix<Complex64> {
        let holes = self.measures.len() - 1;
        DMatrix::from_fn(holes, holes, |i, j| self.measures[j].log_coefficients()[i])
    }

    /// The constants `c_j` for which `h + sum_j c_j omega_j` has no log part,
    /// i.e. has a conjugate on the domain. Empty for a disc.
    pub fn conjugation_constants(
        &self,
        h: &HarmonicRepresentation,
    ) -> Result<Vec<Complex64>, HarmonicError> {
        let holes = self.measures.len() - 1;
        if holes == 0 {
            return Ok(Vec::new());
        }
        let p = self.period_matrix();
        let sv = p.clone().singular_values();
        let ratio = sv.min() / sv.max();
        if !(ratio >= 1e-12) {
            return Err(HarmonicError::SingularPeriodMatrix { ratio });
        }
        let rhs = -DVector::from_vec(h.log_coefficients());
        let c = p
            .lu()
            .solve(&rhs)
            .ok_or(HarmonicError::SingularPeriodMatrix { ratio })?;
        Ok(c.iter().copied().collect())
    }

    /// `h + sum_j c_j omega_j`.
    pub fn apply_constants(&self, h: &HarmonicRepresentation, c: &[Complex64]) -> HarmonicRepresentation {
        c.iter().enumerate().fold(h.clone(), |acc, (j, &cj)| {
            acc.combine(Complex64::new(1.0, 0.0), &self.measures[j], cj)
        })
    }
}
