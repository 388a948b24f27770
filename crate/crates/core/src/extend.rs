//! Extendibility detection and negative-winding witnesses.
//!
//! For a boundary function `f` and a point `a` of the domain let
//!
//! ```text
//! A(a, f) = H[(Z - a) f](a) = H(Zf)(a) - a H(f)(a)
//! ```
//!
//! where `H` is harmonic extension and `Z` the identity. `A(., f)` vanishes
//! identically iff `f` extends holomorphically. When it does not, the harmonic
//! measures `omega_j` supply constants `c_j(f)`, `d_j(f)` making
//! `H(f) + sum c_j omega_j` and `H(Zf) + sum d_j omega_j` conjugable, and
//!
//! ```text
//! Phi_{a,f} = sum_j (d_j - a c_j)(omega_j - omega_j(a)) - A(a, f)
//! ```
//!
//! makes `H[(Z - a) f] + Phi_{a,f}` conjugable and zero at `a`. `Phi` is
//! constant on every boundary circle. Choosing `a` so that no constant
//! vanishes and rotating `f` so that all their real parts `beta_k` are
//! nonzero, the real part of `u = H[(Z - a) f_1] + Phi_{a,f_1}` (with `f_1`
//! a smoothed `f`) is the real part of a holomorphic `g` with `g(a) = 0`.
//! Then `G = (z - a) f - g` has real part close to `-beta_k` on circle `k`,
//! so it does not wind, while `z - a` winds once around the outer circle.
//! Writing `g = (z - a) h`, `f - h` winds `-1` times: a certificate that `f`
//! does not extend.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::argument::{change_of_argument, ArgumentError, WindingReport};
use crate::boundary::{BoundaryError, BoundaryFunction, PointEvaluator};
use crate::geometry::{BoundarySampling, CircleDomain, GeometryError};
use crate::harmonic::{
    DirichletSolver, HarmonicError, HarmonicMeasureSet, HarmonicRepresentation, HolomorphicSeries,
    CONTINUOUS_RESIDUAL_CAP, DEFAULT_DEGREE,
};

pub const CERTIFICATE_FORMAT_VERSION: u32 = 1;
/// Base points closer to the boundary than this fraction of `R` are skipped.
pub const BOUNDARY_MARGIN: f64 = 0.05;
/// Smallest acceptable `min_k |phi_k|` at the selected base point.
pub const MIN_PHI: f64 = 1e-8;
/// Smallest acceptable `min_k |beta_k|` after rotation.
pub const MIN_BETA: f64 = 1e-9;
/// `|Re g(a)|` must be below this before normalisation.
pub const BASE_VALUE_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtendError {
    #[error("no grid point gives nonvanishing boundary constants (best min |phi_k| = {best:e})")]
    NoViableBasePoint { best: f64 },
    #[error(
        "no cutoff met the bounds (epsilon {epsilon:e}; best smoothing {smoothing:e}, phi {phi:e}, fit {fit:e})"
    )]
    SmoothingFailed { epsilon: f64, smoothing: f64, phi: f64, fit: f64 },
    #[error("certificate verification failed: {0}")]
    VerificationFailed(String),
    #[error("base point {a} is not in the domain")]
    BasePointOutside { a: Complex64 },
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Argument(#[from] ArgumentError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendParams {
    pub degree: usize,
    /// Base-point grid: `(columns, rows)` cell centres over the outer
    /// circle's bounding box.
    pub grid: (usize, usize),
    /// Detection tolerance on the holomorphy defect.
    pub tol: f64,
    /// Boundary misfit allowed when fitting `f` itself.
    pub residual_cap: f64,
    /// Fourier cutoffs tried, in order, for the smoothed `f_1`. Empty means
    /// powers of two from 2 to `m/8`.
    pub cutoffs: Vec<usize>,
    pub rotation_candidates: usize,
}

impl Default for ExtendParams {
    fn default() -> Self {
        Self {
            degree: DEFAULT_DEGREE,
            grid: (7, 7),
            tol: 1e-8,
            residual_cap: CONTINUOUS_RESIDUAL_CAP,
            cutoffs: Vec::new(),
            rotation_candidates: 360,
        }
    }
}

impl ExtendParams {
    fn cutoff_schedule(&self, m: usize) -> Vec<usize> {
        if self.cutoffs.is_empty() {
            std::iter::successors(Some(2usize), |k| Some(k * 2))
                .take_while(|&k| k <= (m / 8).max(2) && 2 * k < m)
                .collect()
        } else {
            self.cutoffs.iter().copied().filter(|&k| k >= 1 && 2 * k < m).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Extendable,
    NotExtendable,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Extendable => "extendable",
            Verdict::NotExtendable => "not_extendable",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendibilityReport {
    pub verdict: Verdict,
    /// `max(antiholo_defect, log_defect)`.
    pub defect: f64,
    pub antiholo_defect: f64,
    pub log_defect: f64,
    pub fit_residual: f64,
    pub max_abs_a: f64,
    pub argmax_a: Complex64,
    pub grid_points: usize,
    pub tol: f64,
}

/// `Phi_{a,f}` and the constants it is built from. Circle indices follow the
/// domain: holes first, outer circle last.
#[derive(Debug, Clone)]
pub struct PhiData {
    pub base_point: Complex64,
    pub c: Vec<Complex64>,
    pub d: Vec<Complex64>,
    pub a_value: Complex64,
    pub boundary_constants: Vec<Complex64>,
    pub representation: HarmonicRepresentation,
}

impl PhiData {
    pub fn min_abs_constant(&self) -> f64 {
        min_abs(&self.boundary_constants)
    }
}

/// Harmonic extensions of `f` and `Zf` with their conjugation constants.
#[derive(Debug, Clone)]
pub struct Extensions {
    pub hf: HarmonicRepresentation,
    pub hzf: HarmonicRepresentation,
    pub c: Vec<Complex64>,
    pub d: Vec<Complex64>,
}

impl Extensions {
    /// `A(a, f) = H(Zf)(a) - a H(f)(a)`.
    pub fn a_value(&self, a: Complex64) -> Complex64 {
        self.hzf.evaluate_unchecked(a) - a * self.hf.evaluate_unchecked(a)
    }
}

/// Everything needed to analyse functions on one sampled domain.
#[derive(Debug, Clone)]
pub struct Analyzer {
    solver: DirichletSolver,
    measures: HarmonicMeasureSet,
    params: ExtendParams,
}

impl Analyzer {
    pub fn new(sampling: Arc<BoundarySampling>, params: ExtendParams) -> Result<Self, ExtendError> {
        let solver = DirichletSolver::new(sampling, params.degree)?;
        let measures = solver.harmonic_measures()?;
        Ok(Self { solver, measures, params })
    }

    pub fn solver(&self) -> &DirichletSolver {
        &self.solver
    }

    pub fn measures(&self) -> &HarmonicMeasureSet {
        &self.measures
    }

    pub fn params(&self) -> &ExtendParams {
        &self.params
    }

    pub fn domain(&self) -> &CircleDomain {
        self.solver.domain()
    }

    pub fn sampling(&self) -> &Arc<BoundarySampling> {
        self.solver.sampling()
    }

    /// `A(a, f)` from a single harmonic extension of `(Z - a) f`.
    pub fn compute_a(&self, f: &BoundaryFunction, a: Complex64) -> Result<Complex64, ExtendError> {
        self.check_base_point(a)?;
        let h = self.solver.solve(&f.multiply_by_affine(a))?;
        Ok(h.evaluate(a)?)
    }

    pub fn extensions(&self, f: &BoundaryFunction) -> Result<Extensions, ExtendError> {
        self.extensions_capped(f, self.params.residual_cap)
    }

    fn extensions_capped(&self, f: &BoundaryFunction, cap: f64) -> Result<Extensions, ExtendError> {
        let hf = self.solver.solve_capped(f, cap)?;
        let hzf = self.solver.solve_capped(&f.multiply_by_affine(Complex64::default()), cap)?;
        let c = self.measures.conjugation_constants(&hf)?;
        let d = self.measures.conjugation_constants(&hzf)?;
        Ok(Extensions { hf, hzf, c, d })
    }

    /// Cell centres of the base-point grid that lie in the domain at least
    /// `BOUNDARY_MARGIN * R` from the boundary.
    pub fn scan_grid(&self) -> Vec<Complex64> {
        scan_grid(self.domain(), self.params.grid)
    }

    pub fn detect_extendibility(&self, f: &BoundaryFunction) -> Result<ExtendibilityReport, ExtendError> {
        let ext = self.extensions(f)?;
        let (antiholo_defect, log_defect) = ext.hf.holomorphy_defect();
        let defect = antiholo_defect.max(log_defect);
        let grid = self.scan_grid();
        let values: Vec<f64> = grid.par_iter().map(|&a| ext.a_value(a).norm()).collect();
        let (mut max_abs_a, mut argmax_a) = (0.0, self.domain().outer().center);
        for (&a, &v) in grid.iter().zip(&values) {
            if v > max_abs_a {
                max_abs_a = v;
                argmax_a = a;
            }
        }
        let tol = self.params.tol;
        let verdict = if defect <= tol {
            Verdict::Extendable
        } else if max_abs_a >= 10.0 * tol {
            Verdict::NotExtendable
        } else {
            Verdict::Inconclusive
        };
        Ok(ExtendibilityReport {
            verdict,
            defect,
            antiholo_defect,
            log_defect,
            fit_residual: ext.hf.residual(),
            max_abs_a,
            argmax_a,
            grid_points: grid.len(),
            tol,
        })
    }

    pub fn phi_data(&self, f: &BoundaryFunction, a: Complex64) -> Result<PhiData, ExtendError> {
        self.check_base_point(a)?;
        let ext = self.extensions(f)?;
        Ok(self.phi_from_extensions(&ext, a))
    }

    fn phi_constants(&self, ext: &Extensions, a: Complex64) -> (Complex64, Vec<Complex64>) {
        let a_value = ext.a_value(a);
        let weights: Vec<Complex64> = ext.d.iter().zip(&ext.c).map(|(d, c)| d - a * c).collect();
        let at_a: Complex64 = weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * self.measures.measure(j).evaluate_unchecked(a))
            .sum();
        let mut constants: Vec<Complex64> = weights.iter().map(|w| w - at_a - a_value).collect();
        constants.push(-at_a - a_value);
        (a_value, constants)
    }

    pub fn phi_from_extensions(&self, ext: &Extensions, a: Complex64) -> PhiData {
        let (a_value, boundary_constants) = self.phi_constants(ext, a);
        let basis = self.solver.basis().clone();
        let zero = HarmonicRepresentation::constant(basis, Complex64::default());
        let mut representation = zero;
        let mut at_a = Complex64::default();
        for (j, (d, c)) in ext.d.iter().zip(&ext.c).enumerate() {
            let w = d - a * c;
            let omega = self.measures.measure(j);
            representation = representation.combine(Complex64::new(1.0, 0.0), omega, w);
            at_a += w * omega.evaluate_unchecked(a);
        }
        let representation = representation.add_constant(-at_a - a_value);
        PhiData {
            base_point: a,
            c: ext.c.clone(),
            d: ext.d.clone(),
            a_value,
            boundary_constants,
            representation,
        }
    }

    /// Grid point maximising `min_k |phi_k|`.
    pub fn select_base_point(&self, f: &BoundaryFunction) -> Result<PhiData, ExtendError> {
        let ext = self.extensions(f)?;
        self.select_base_point_from(&ext)
    }

    fn select_base_point_from(&self, ext: &Extensions) -> Result<PhiData, ExtendError> {
        let grid = self.scan_grid();
        let scores: Vec<f64> =
            grid.par_iter().map(|&a| min_abs(&self.phi_constants(ext, a).1)).collect();
        let mut best: Option<(Complex64, f64)> = None;
        for (&a, &s) in grid.iter().zip(&scores) {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((a, s));
            }
        }
        match best {
            Some((a, s)) if s >= MIN_PHI => Ok(self.phi_from_extensions(ext, a)),
            Some((_, s)) => Err(ExtendError::NoViableBasePoint { best: s }),
            None => Err(ExtendError::NoViableBasePoint { best: 0.0 }),
        }
    }

    /// Builds and verifies a holomorphic `g` with `f + g` winding negatively.
    pub fn construct_witness(&self, f: &BoundaryFunction) -> Result<WitnessCertificate, ExtendError> {
        let m = self.sampling().samples_per_circle();
        let phi = self.select_base_point_from(&self.extensions_capped(f, f64::INFINITY)?)?;
        let a = phi.base_point;
        let (rotation, _) = select_rotation(&phi.boundary_constants, self.params.rotation_candidates);
        let spin = Complex64::from_polar(1.0, rotation);
        let betas: Vec<f64> = phi.boundary_constants.iter().map(|p| (spin * p).re).collect();
        let min_beta = betas.iter().map(|b| b.abs()).fold(f64::INFINITY, f64::min);
        if min_beta < MIN_BETA {
            return Err(ExtendError::NoViableBasePoint { best: min_beta });
        }
        let epsilon = min_beta / 8.0;

        let f_rot = f.rotate(rotation);
        let phi_rot = self.phi_from_extensions(&self.extensions_capped(&f_rot, f64::INFINITY)?, a);

        // Smallest cutoff in the schedule for which the smoothed function, its
        // Phi and the fit of (Z - a) f_1 are all within epsilon.
        let mut best = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut accepted = None;
        for cutoff in self.params.cutoff_schedule(m) {
            let f1 = f_rot.smooth_truncate(cutoff)?;
            let smoothing = f1
                .sub(&f_rot)?
                .multiply_by_affine(a)
                .sup_norm();
            let ext1 = self.extensions_capped(&f1, f64::INFINITY)?;
            let phi1 = self.phi_from_extensions(&ext1, a);
            let phi_dev = phi1
                .boundary_constants
                .iter()
                .zip(&phi_rot.boundary_constants)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            let h = self.solver.solve(&f1.multiply_by_affine(a))?;
            let fit = h.residual();
            if smoothing < best.0 {
                best = (smoothing, phi_dev, fit);
            }
            if smoothing < epsilon && phi_dev < epsilon && fit < epsilon {
                accepted = Some((cutoff, smoothing, phi_dev, fit, h, phi1));
                break;
            }
        }
        let (cutoff, smoothing_deviation, phi_deviation, fit_residual, h, phi1) =
            accepted.ok_or(ExtendError::SmoothingFailed {
                epsilon,
                smoothing: best.0,
                phi: best.1,
                fit: best.2,
            })?;

        // u has a conjugate; g = F + G has Re g = Re u on the closed domain.
        let u = h.add(&phi1.representation);
        let (big_f, big_g) = u.split_conjugable()?;
        let g = big_f.add(&big_g);
        let g_at_a = g.evaluate(a);
        if g_at_a.re.abs() > BASE_VALUE_TOLERANCE {
            return Err(ExtendError::VerificationFailed(format!(
                "Re g(a) = {:e} does not vanish",
                g_at_a.re
            )));
        }
        let g = g.add_constant(-g_at_a);

        let witness = WitnessFunction { series: g, base_point: a, rotation };
        let g_out = witness.boundary_function(self.sampling().clone())?;
        let sum = f.add(&g_out)?;
        let winding = change_of_argument(&sum).map_err(|e| {
            ExtendError::VerificationFailed(format!("winding of f + g could not be computed: {e}"))
        })?;
        if winding.total_turns >= 0 || !(winding.min_modulus > 0.0) {
            return Err(ExtendError::VerificationFailed(format!(
                "f + g winds {} times (min modulus {:e})",
                winding.total_turns, winding.min_modulus
            )));
        }

        // G = (z - a) f_rot - (z - a) h = e^{i omega} (z - a)(f + g_out)
        let aux = sum.multiply_by_affine(a).rotate(rotation);
        let aux_winding = change_of_argument(&aux)?;
        let real_part_margin = aux
            .values()
            .iter()
            .zip(&betas)
            .flat_map(|(vals, &b)| vals.iter().map(move |v| (v.re + b).abs() / b.abs()))
            .fold(0.0, f64::max);

        Ok(WitnessCertificate {
            format_version: CERTIFICATE_FORMAT_VERSION,
            domain: self.domain().clone(),
            samples_per_circle: m,
            degree: self.solver.degree(),
            function: None,
            base_point: a,
            rotation,
            boundary_constants: phi.boundary_constants,
            betas,
            epsilon,
            cutoff,
            smoothing_deviation,
            phi_deviation,
            fit_residual,
            real_part_margin,
            g_series: witness.series,
            g_samples: g_out.values().to_vec(),
            winding,
            aux_winding,
        })
    }

    fn check_base_point(&self, a: Complex64) -> Result<(), ExtendError> {
        if self.domain().contains(a) {
            Ok(())
        } else {
            Err(ExtendError::BasePointOutside { a })
        }
    }
}

/// Cell centres of a `gx x gy` grid over the outer bounding box, kept when
/// at least `BOUNDARY_MARGIN * R` inside the domain.
pub fn scan_grid(domain: &CircleDomain, (gx, gy): (usize, usize)) -> Vec<Complex64> {
    let outer = domain.outer();
    let r = outer.radius;
    let (sx, sy) = (2.0 * r / gx as f64, 2.0 * r / gy as f64);
    let mut out = Vec::new();
    for iy in 0..gy {
        for ix in 0..gx {
            let z = outer.center
                + Complex64::new(-r + (ix as f64 + 0.5) * sx, -r + (iy as f64 + 0.5) * sy);
            if domain.contains(z) && domain.boundary_distance(z) >= BOUNDARY_MARGIN * r {
                out.push(z);
            }
        }
    }
    out
}

/// Rotation `omega` among `candidates` equispaced angles in `[0, 2 pi)`
/// maximising `min_k |Re(e^{i omega} phi_k)|`, with that minimum.
pub fn select_rotation(phi: &[Complex64], candidates: usize) -> (f64, f64) {
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..candidates.max(1) {
        let omega = TAU * i as f64 / candidates.max(1) as f64;
        let spin = Complex64::from_polar(1.0, omega);
        let score = phi.iter().map(|p| (spin * p).re.abs()).fold(f64::INFINITY, f64::min);
        if score > best.1 {
            best = (omega, score);
        }
    }
    best
}

/// `change_of_argument(f + g)`.
pub fn verify_certificate(
    f: &BoundaryFunction,
    g: &BoundaryFunction,
) -> Result<WindingReport, ExtendError> {
    Ok(change_of_argument(&f.add(g)?)?)
}

fn min_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min)
}

/// `-e^{-i omega} g(z) / (z - a)` with `g` holomorphic and `g(a) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessFunction {
    pub series: HolomorphicSeries,
    pub base_point: Complex64,
    pub rotation: f64,
}

impl WitnessFunction {
    /// Value anywhere in the closed domain; at the base point the removable
    /// singularity is filled with `g'(a)`.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        let scale = -Complex64::from_polar(1.0, -self.rotation);
        let dz = z - self.base_point;
        if dz == Complex64::default() {
            scale * self.series.derivative(z)
        } else {
            scale * self.series.evaluate(z) / dz
        }
    }

    pub fn boundary_function(
        &self,
        sampling: Arc<BoundarySampling>,
    ) -> Result<BoundaryFunction, BoundaryError> {
        let w = self.clone();
        let eval: PointEvaluator = Arc::new(move |_, z| w.evaluate(z));
        BoundaryFunction::from_evaluator(sampling, eval)
    }
}

/// A verified witness `g` for the non-extendibility of `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCertificate {
    pub format_version: u32,
    pub domain: CircleDomain,
    pub samples_per_circle: usize,
    pub degree: usize,
    /// Free-form description of `f`, e.g. the expression it was sampled from.
    pub function: Option<String>,
    pub base_point: Complex64,
    pub rotation: f64,
    /// `phi_k`, the value of `Phi_{a,f}` on circle `k`.
    pub boundary_constants: Vec<Complex64>,
    /// `Re(e^{i omega} phi_k)`.
    pub betas: Vec<f64>,
    pub epsilon: f64,
    pub cutoff: usize,
    /// `sup |(z - a)(f_1 - f)|` on the boundary samples.
    pub smoothing_deviation: f64,
    /// `sup |Phi_{a,f_1} - Phi_{a,f}|`.
    pub phi_deviation: f64,
    /// Boundary misfit of `H[(Z - a) f_1]`.
    pub fit_residual: f64,
    /// `max_k sup |Re G + beta_k| / |beta_k|`; below 1/2 forces `G` not to wind.
    pub real_part_margin: f64,
    /// `g` with `g(a) = 0`; the witness is `-e^{-i omega} g / (z - a)`.
    pub g_series: HolomorphicSeries,
    /// Witness values on the boundary samples, circle by circle.
    pub g_samples: Vec<Vec<Complex64>>,
    /// Change of argument of `f + g`.
    pub winding: WindingReport,
    /// Change of argument of `G = e^{i omega}(z - a)(f + g)`.
    pub aux_winding: WindingReport,
}

impl WitnessCertificate {
    pub fn witness(&self) -> WitnessFunction {
        WitnessFunction {
            series: self.g_series.clone(),
            base_point: self.base_point,
            rotation: self.rotation,
        }
    }

    pub fn sampling(&self) -> Result<Arc<BoundarySampling>, GeometryError> {
        self.domain.sampling(self.samples_per_circle)
    }

    /// The stored witness samples, resamplable through the stored series.
    pub fn g_boundary(&self, sampling: Arc<BoundarySampling>) -> Result<BoundaryFunction, ExtendError> {
        let raw = BoundaryFunction::from_samples(sampling.clone(), self.g_samples.clone())?;
        let w = self.witness();
        let eval: PointEvaluator = Arc::new(move |_, z| w.evaluate(z));
        let with_eval = BoundaryFunction::from_evaluator(sampling, eval)?;
        if raw.values() != with_eval.values() {
            log::warn!("stored witness samples differ from the series; using stored samples");
            return Ok(raw);
        }
        Ok(with_eval)
    }

    /// Re-runs the winding computation of `f + g` from the stored data.
    pub fn recheck(&self, f: &BoundaryFunction) -> Result<WindingReport, ExtendError> {
        let g = self.g_boundary(f.sampling().clone())?;
        verify_certificate(f, &g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::geometry::Circle;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};
    use std::sync::OnceLock;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disc() -> CircleDomain {
        CircleDomain::disc(c(0.0, 0.0), 1.0).unwrap()
    }

    fn annulus() -> CircleDomain {
        CircleDomain::new(Circle::new(c(0.0, 0.0), 1.0), vec![Circle::new(c(0.0, 0.0), 0.5)]).unwrap()
    }

    fn triple() -> CircleDomain {
        CircleDomain::new(
            Circle::new(c(0.0, 0.0), 1.0),
            vec![Circle::new(c(-0.4, 0.0), 0.15), Circle::new(c(0.45, 0.0), 0.15)],
        )
        .unwrap()
    }

    fn analyzer(domain: CircleDomain, m: usize) -> Analyzer {
        Analyzer::new(domain.sampling(m).unwrap(), ExtendParams::default()).unwrap()
    }

    fn disc_analyzer() -> &'static Analyzer {
        static A: OnceLock<Analyzer> = OnceLock::new();
        A.get_or_init(|| analyzer(disc(), 512))
    }

    fn annulus_analyzer() -> &'static Analyzer {
        static A: OnceLock<Analyzer> = OnceLock::new();
        A.get_or_init(|| analyzer(annulus(), 512))
    }

    fn triple_analyzer() -> &'static Analyzer {
        static A: OnceLock<Analyzer> = OnceLock::new();
        A.get_or_init(|| analyzer(triple(), 512))
    }

    fn func(an: &Analyzer, src: &str) -> BoundaryFunction {
        BoundaryFunction::from_expr(&Expr::parse(src).unwrap(), an.sampling().clone()).unwrap()
    }

    #[test]
    fn a_of_conj_on_the_disc() {
        let an = disc_analyzer();
        let f = func(an, "conj(z)");
        for a in [c(0.0, 0.0), c(0.3, 0.0), c(0.0, 0.6), c(0.8, 0.0)] {
            let got = an.compute_a(&f, a).unwrap();
            let want = 1.0 - a.norm_sqr();
            assert!((got - want).norm() <= 1e-7, "a = {a}: {got} vs {want}");
        }
    }

    #[test]
    fn a_of_conj_on_the_annulus() {
        let an = annulus_analyzer();
        let f = func(an, "conj(z)");
        for x in [0.55, 0.7, 0.9] {
            let got = an.compute_a(&f, c(x, 0.0)).unwrap();
            let want = 1.0 + (0.25 - 1.0) * x.ln() / 0.5f64.ln() - x * x;
            assert!((got - want).norm() <= 1e-6, "a = {x}: {got} vs {want}");
        }
    }

    #[test]
    fn direct_and_split_a_agree() {
        let an = triple_analyzer();
        let f = func(an, "conj(z)^2 + 0.3*z");
        let ext = an.extensions(&f).unwrap();
        for a in [c(0.1, 0.5), c(-0.2, -0.6), c(0.7, 0.2)] {
            let direct = an.compute_a(&f, a).unwrap();
            assert!((direct - ext.a_value(a)).norm() <= 1e-10);
        }
    }

    #[test]
    fn extendable_functions_have_no_a() {
        let an = annulus_analyzer();
        for src in ["z^2", "1/z", "1/(z-2)", "3+z"] {
            let f = func(an, src);
            for a in [c(0.6, 0.1), c(-0.3, -0.7)] {
                assert!(an.compute_a(&f, a).unwrap().norm() <= 1e-7, "{src}");
            }
        }
    }

    #[test]
    fn base_point_outside_is_rejected() {
        let an = annulus_analyzer();
        let f = func(an, "conj(z)");
        assert!(matches!(an.compute_a(&f, c(0.1, 0.0)), Err(ExtendError::BasePointOutside { .. })));
        assert!(matches!(an.phi_data(&f, c(1.5, 0.0)), Err(ExtendError::BasePointOutside { .. })));
    }

    fn assert_phi_consistent(an: &Analyzer, phi: &PhiData) {
        let at_a = phi.representation.evaluate(phi.base_point).unwrap();
        assert!((at_a + phi.a_value).norm() <= 1e-9, "Phi(a) = {at_a}, A = {}", phi.a_value);
        for (k, sc) in an.sampling().circles().iter().enumerate() {
            let expected = phi.boundary_constants[k];
            for &z in &sc.points {
                let v = phi.representation.evaluate(z).unwrap();
                assert!((v - expected).norm() <= 1e-9, "circle {k}: {v} vs {expected}");
            }
        }
    }

    #[test]
    fn phi_is_constant_on_circles_and_minus_a_at_base_point() {
        for (an, src, a) in [
            (disc_analyzer(), "conj(z)", c(0.2, 0.1)),
            (annulus_analyzer(), "conj(z)", c(0.7, 0.0)),
            (annulus_analyzer(), "abs2(z) - 0.5", c(-0.1, 0.75)),
            (triple_analyzer(), "conj(z)", c(0.0, 0.6)),
            (triple_analyzer(), "conj(z)^2", c(0.1, -0.5)),
        ] {
            let phi = an.phi_data(&func(an, src), a).unwrap();
            assert_eq!(phi.boundary_constants.len(), an.domain().circle_count());
            assert_phi_consistent(an, &phi);
        }
    }

    #[test]
    fn phi_on_the_disc_is_minus_a() {
        let an = disc_analyzer();
        let a = c(0.3, -0.2);
        let phi = an.phi_data(&func(an, "conj(z)"), a).unwrap();
        assert!(phi.c.is_empty() && phi.d.is_empty());
        assert_eq!(phi.boundary_constants.len(), 1);
        assert!((phi.boundary_constants[0] + (1.0 - a.norm_sqr())).norm() <= 1e-7);
    }

    #[test]
    fn phi_of_extendable_function_vanishes() {
        let an = triple_analyzer();
        let phi = an.phi_data(&func(an, "z^3 - 1/(z+0.4)"), c(0.0, 0.5)).unwrap();
        for v in phi.c.iter().chain(&phi.d).chain(&phi.boundary_constants) {
            assert!(v.norm() <= 1e-8, "{v}");
        }
    }

    #[test]
    fn scan_grid_respects_the_margin() {
        let grid = scan_grid(&annulus(), (7, 7));
        assert!(!grid.is_empty());
        for z in &grid {
            assert!(annulus().boundary_distance(*z) >= BOUNDARY_MARGIN);
        }
        // 7 x 7 over the unit disc: the centre cell is the origin
        assert!(scan_grid(&disc(), (7, 7)).contains(&c(0.0, 0.0)));
        assert!(!grid.contains(&c(0.0, 0.0)));
    }

    #[test]
    fn rotation_examples() {
        let (omega, min) = select_rotation(&[c(0.0, 1.0)], 360);
        assert!((min - 1.0).abs() <= 1e-12);
        assert!((omega - PI / 2.0).abs() <= 1e-12 || (omega - 1.5 * PI).abs() <= 1e-12);

        let (omega, min) = select_rotation(&[c(1.0, 0.0), c(-1.0, 0.0)], 360);
        assert_eq!(omega, 0.0);
        assert!((min - 1.0).abs() <= 1e-12);

        // min(|cos w|, |sin w|) peaks at every odd multiple of pi/4
        let (omega, min) = select_rotation(&[c(1.0, 0.0), c(0.0, 1.0)], 360);
        assert!((min - FRAC_1_SQRT_2).abs() <= 1e-12);
        let k = (omega - FRAC_PI_4) / (PI / 2.0);
        assert!((k - k.round()).abs() <= 1e-9);
    }

    #[test]
    fn detector_verdicts() {
        for (an, src, verdict) in [
            (disc_analyzer(), "z^2", Verdict::Extendable),
            (disc_analyzer(), "conj(z)", Verdict::NotExtendable),
            (annulus_analyzer(), "1/z", Verdict::Extendable),
            (annulus_analyzer(), "abs2(z) - 0.5", Verdict::NotExtendable),
            (triple_analyzer(), "1/(z-2)", Verdict::Extendable),
            (triple_analyzer(), "conj(z)^2", Verdict::NotExtendable),
        ] {
            let r = an.detect_extendibility(&func(an, src)).unwrap();
            assert_eq!(r.verdict, verdict, "{src}: {r:?}");
            match verdict {
                Verdict::Extendable => assert!(r.defect <= 1e-8),
                _ => assert!(r.max_abs_a >= 1e-2),
            }
        }
        let r = disc_analyzer().detect_extendibility(&func(disc_analyzer(), "conj(z)")).unwrap();
        assert_eq!(r.argmax_a, c(0.0, 0.0));
        assert!((r.max_abs_a - 1.0).abs() <= 1e-7);
    }

    #[test]
    fn abs2_is_extendable_on_the_disc_but_not_the_annulus() {
        let f = "abs2(z) - 0.5";
        let d = disc_analyzer().detect_extendibility(&func(disc_analyzer(), f)).unwrap();
        assert_eq!(d.verdict, Verdict::Extendable);
        let a = annulus_analyzer().detect_extendibility(&func(annulus_analyzer(), f)).unwrap();
        assert_eq!(a.verdict, Verdict::NotExtendable);
        assert!(a.log_defect > 0.1);
    }

    #[test]
    fn base_point_on_the_disc_is_the_centre() {
        let an = disc_analyzer();
        let phi = an.select_base_point(&func(an, "conj(z)")).unwrap();
        assert_eq!(phi.base_point, c(0.0, 0.0));
    }

    #[test]
    fn extendable_functions_have_no_base_point() {
        for (an, src) in [(disc_analyzer(), "z^2"), (annulus_analyzer(), "1/z + z")] {
            let f = func(an, src);
            assert!(matches!(an.select_base_point(&f), Err(ExtendError::NoViableBasePoint { .. })));
            assert!(matches!(an.construct_witness(&f), Err(ExtendError::NoViableBasePoint { .. })));
        }
    }

    fn check_certificate(an: &Analyzer, f: &BoundaryFunction) -> WitnessCertificate {
        let cert = an.construct_witness(f).unwrap();
        assert_eq!(cert.winding.total_turns, -1);
        assert!(cert.winding.integrality_defect <= 1e-6);
        assert!(cert.winding.min_modulus >= 1e-4);
        let (holes, outer) = cert.winding.per_circle.split_at(cert.winding.per_circle.len() - 1);
        assert!(holes.iter().all(|w| w.turns == 0));
        assert_eq!(outer[0].turns, -1);
        assert!(cert.aux_winding.per_circle.iter().all(|w| w.turns == 0));
        assert!(cert.real_part_margin < 0.5);
        assert!(cert.betas.iter().all(|b| b.abs() > 0.0));
        let min_beta = cert.betas.iter().map(|b| b.abs()).fold(f64::INFINITY, f64::min);
        assert!(cert.epsilon < 0.25 * min_beta);
        assert!(cert.witness().series.evaluate(cert.base_point).norm() <= 1e-14);
        cert
    }

    #[test]
    fn witnesses_for_conj() {
        for an in [disc_analyzer(), annulus_analyzer(), triple_analyzer()] {
            check_certificate(an, &func(an, "conj(z)"));
        }
    }

    #[test]
    fn witness_for_a_function_with_kinks() {
        let an = annulus_analyzer();
        let eval: PointEvaluator = Arc::new(|_, z: Complex64| z.conj() + 0.2 * z.re.abs());
        let f = BoundaryFunction::from_evaluator(an.sampling().clone(), eval).unwrap();
        let cert = check_certificate(an, &f);
        assert!(cert.cutoff > 2, "cutoff {}", cert.cutoff);
    }

    #[test]
    fn witness_from_raw_samples() {
        let an = triple_analyzer();
        let f = func(an, "abs2(z) - 0.5").into_samples_only();
        check_certificate(an, &f);
    }

    #[test]
    fn exhausted_schedule_reports_smoothing_failure() {
        let sampling = annulus().sampling(512).unwrap();
        let params = ExtendParams { cutoffs: vec![1], ..ExtendParams::default() };
        let an = Analyzer::new(sampling, params).unwrap();
        let f = func(&an, "conj(z) + 0.5*conj(z)^5");
        assert!(matches!(an.construct_witness(&f), Err(ExtendError::SmoothingFailed { .. })));
    }

    #[test]
    fn default_cutoff_schedule() {
        let p = ExtendParams::default();
        assert_eq!(p.cutoff_schedule(512), vec![2, 4, 8, 16, 32, 64]);
        assert_eq!(p.cutoff_schedule(8), vec![2]);
        let q = ExtendParams { cutoffs: vec![0, 3, 200, 300], ..p };
        assert_eq!(q.cutoff_schedule(512), vec![3, 200]);
    }

    #[test]
    fn certificate_round_trip_is_bit_exact() {
        let an = annulus_analyzer();
        let f = func(an, "conj(z)");
        let cert = an.construct_witness(&f).unwrap();
        let back = WitnessCertificate::from_json(&cert.to_json()).unwrap();
        assert_eq!(back, cert);
        let again = back.recheck(&f).unwrap();
        assert_eq!(again.total.to_bits(), cert.winding.total.to_bits());
        assert_eq!(again, cert.winding);
    }

    #[test]
    fn witness_is_continuous_at_the_base_point() {
        let an = disc_analyzer();
        let cert = an.construct_witness(&func(an, "conj(z)^2 + 0.1*conj(z)")).unwrap();
        let w = cert.witness();
        let a = cert.base_point;
        let at = w.evaluate(a);
        let near = w.evaluate(a + c(1e-7, 1e-7));
        assert!((at - near).norm() <= 1e-5 * (1.0 + at.norm()));
    }

    #[test]
    fn verify_examples() {
        let an = disc_analyzer();
        let f = func(an, "z");
        let r = verify_certificate(&f, &func(an, "1 - z")).unwrap();
        assert_eq!(r.total_turns, 0);
        let r = verify_certificate(&f, &func(an, "z^2 - z - 0.25")).unwrap();
        assert_eq!(r.total_turns, 2);
        assert!(matches!(
            verify_certificate(&f, &func(an, "-z")),
            Err(ExtendError::Argument(ArgumentError::ZeroOnBoundary { .. }))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn a_and_constants_rotate_with_f(omega in 0.0..TAU) {
            let an = triple_analyzer();
            let f = func(an, "conj(z)^2 + 0.4*abs2(z) - z");
            let rot = f.rotate(omega);
            let spin = Complex64::from_polar(1.0, omega);
            let e0 = an.extensions(&f).unwrap();
            let e1 = an.extensions(&rot).unwrap();
            let a = c(0.1, 0.55);
            let (a0, a1) = (an.compute_a(&f, a).unwrap(), an.compute_a(&rot, a).unwrap());
            prop_assert!((a1 - spin * a0).norm() <= 1e-9 * a0.norm().max(1e-300));
            for (x, y) in e0.c.iter().zip(&e1.c).chain(e0.d.iter().zip(&e1.d)) {
                prop_assert!((y - spin * x).norm() <= 1e-9 * x.norm().max(1e-300));
            }
        }

        #[test]
        fn adding_holomorphic_data_keeps_a(
            p in -1.0f64..1.0, q in -1.0f64..1.0, ax in -0.7f64..0.7, ay in -0.7f64..0.7,
        ) {
            let an = annulus_analyzer();
            let a = c(ax, ay);
            prop_assume!(an.domain().contains(a) && an.domain().boundary_distance(a) >= 0.05);
            let f = func(an, "conj(z) + abs2(z)");
            let g = func(an, &format!("({p})*z^3 + ({q})/(z - 3) + 1/(z - 0.1)"));
            let base = an.compute_a(&f, a).unwrap();
            let moved = an.compute_a(&f.add(&g).unwrap(), a).unwrap();
            prop_assert!((base - moved).norm() <= 1e-7);
        }
    }
}
