//! Complex-valued functions on the boundary, stored as samples.
//!
//! A [`BoundaryFunction`] always carries its sample vectors. When it was built
//! from something that can be evaluated at arbitrary boundary points (an
//! expression, a trigonometric polynomial, a holomorphic series) it also keeps
//! that evaluator, which lets the winding computation resample it on a finer
//! grid. Raw sample data has no evaluator.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::geometry::{BoundarySampling, GeometryError};

/// Evaluates a function at a point `z` on boundary circle `k`.
pub type PointEvaluator = Arc<dyn Fn(usize, Complex64) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundaryError {
    #[error("pole on boundary circle {circle} at z = {z}")]
    PoleOnBoundary { circle: usize, z: Complex64 },
    #[error("boundary functions are sampled differently")]
    SamplingMismatch,
    #[error("Fourier cutoff {cutoff} must satisfy 1 <= K < m/2 = {half}")]
    CutoffTooLarge { cutoff: usize, half: f64 },
    #[error("non-finite value on circle {circle} at sample {index}")]
    NonFinite { circle: usize, index: usize },
    #[error("expected {expected} circles of {m} samples each")]
    ShapeMismatch { expected: usize, m: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone)]
pub struct BoundaryFunction {
    sampling: Arc<BoundarySampling>,
    values: Vec<Vec<Complex64>>,
    evaluator: Option<PointEvaluator>,
}

impl fmt::Debug for BoundaryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryFunction")
            .field("circles", &self.values.len())
            .field("m", &self.sampling.samples_per_circle())
            .field("resamplable", &self.evaluator.is_some())
            .finish()
    }
}

impl BoundaryFunction {
    /// Raw samples, one vector per circle in sampling order.
    pub fn from_samples(
        sampling: Arc<BoundarySampling>,
        values: Vec<Vec<Complex64>>,
    ) -> Result<Self, BoundaryError> {
        let m = sampling.samples_per_circle();
        let expected = sampling.circles().len();
        if values.len() != expected || values.iter().any(|v| v.len() != m) {
            return Err(BoundaryError::ShapeMismatch { expected, m });
        }
        check_finite(&values)?;
        Ok(Self { sampling, values, evaluator: None })
    }

    /// Samples a closed-form expression. Fails if any sample hits a pole.
    pub fn from_expr(expr: &Expr, sampling: Arc<BoundarySampling>) -> Result<Self, BoundaryError> {
        let values = sampling
            .circles()
            .iter()
            .enumerate()
            .map(|(k, sc)| {
                sc.points
                    .iter()
                    .map(|&z| match expr.eval(z) {
                        Ok(v) if v.is_finite() => Ok(v),
                        Ok(_) | Err(ExprError::Pole { .. }) => {
                            Err(BoundaryError::PoleOnBoundary { circle: k, z })
                        }
                        Err(ExprError::Parse { .. }) => unreachable!("parsed expressions evaluate"),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let expr = expr.clone();
        let evaluator: PointEvaluator =
            Arc::new(move |_, z| expr.eval(z).unwrap_or(Complex64::new(f64::NAN, f64::NAN)));
        Ok(Self { sampling, values, evaluator: Some(evaluator) })
    }

    /// Samples `eval` at every boundary point and keeps it for resampling.
    pub fn from_evaluator(
        sampling: Arc<BoundarySampling>,
        eval: PointEvaluator,
    ) -> Result<Self, BoundaryError> {
        let values = sample_with(&sampling, &eval);
        check_finite(&values)?;
        Ok(Self { sampling, values, evaluator: Some(eval) })
    }

    /// Finite Fourier data per circle: `sum c_n e^{i n t}` where `t` is the
    /// counterclockwise angle about that circle's center.
    pub fn from_fourier(
        sampling: Arc<BoundarySampling>,
        coefficients: Vec<Vec<(i32, Complex64)>>,
    ) -> Result<Self, BoundaryError> {
        let expected = sampling.circles().len();
        if coefficients.len() != expected {
            return Err(BoundaryError::ShapeMismatch {
                expected,
                m: sampling.samples_per_circle(),
            });
        }
        let centers: Vec<Complex64> = sampling.circles().iter().map(|c| c.circle.center).collect();
        let eval: PointEvaluator = Arc::new(move |k, z| {
            let t = (z - centers[k]).arg();
            coefficients[k]
                .iter()
                .map(|&(n, c)| c * Complex64::from_polar(1.0, n as f64 * t))
                .sum()
        });
        Self::from_evaluator(sampling, eval)
    }

    pub fn sampling(&self) -> &Arc<BoundarySampling> {
        &self.sampling
    }

    pub fn values(&self) -> &[Vec<Complex64>] {
        &self.values
    }

    pub fn circle_values(&self, k: usize) -> &[Complex64] {
        &self.values[k]
    }

    pub fn evaluator(&self) -> Option<&PointEvaluator> {
        self.evaluator.as_ref()
    }

    pub fn is_resamplable(&self) -> bool {
        self.evaluator.is_some()
    }

    /// Drops the evaluator, leaving raw samples.
    pub fn into_samples_only(mut self) -> Self {
        self.evaluator = None;
        self
    }

    /// Re-evaluates on a sampling of the same domain with `m` points per
    /// circle. `None` for raw samples.
    pub fn resample(&self, m: usize) -> Option<Result<Self, BoundaryError>> {
        let eval = self.evaluator.clone()?;
        Some(
            self.sampling
                .domain()
                .sampling(m)
                .map_err(BoundaryError::from)
                .and_then(|s| Self::from_evaluator(s, eval)),
        )
    }

    /// Values of `(z - a) f(z)`.
    pub fn multiply_by_affine(&self, a: Complex64) -> Self {
        self.map_with_point(move |_, z, v| (z - a) * v)
    }

    /// Values of `e^{i omega} f`.
    pub fn rotate(&self, omega: f64) -> Self {
        self.scale(Complex64::from_polar(1.0, omega))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map_with_point(move |_, _, v| c * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self, BoundaryError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, BoundaryError> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self, BoundaryError> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Replaces each circle's samples by their discrete Fourier truncation to
    /// frequencies `|n| <= cutoff`. The result is a trigonometric polynomial
    /// and can be evaluated anywhere on the boundary.
    pub fn smooth_truncate(&self, cutoff: usize) -> Result<Self, BoundaryError> {
        let m = self.sampling.samples_per_circle();
        if cutoff == 0 || 2 * cutoff >= m {
            return Err(BoundaryError::CutoffTooLarge { cutoff, half: m as f64 / 2.0 });
        }
        let coefficients: Vec<Vec<Complex64>> =
            self.values.iter().map(|v| truncated_dft(v, cutoff)).collect();
        let values = coefficients
            .iter()
            .map(|c| {
                (0..m)
                    .map(|i| trig_eval(c, cutoff, TAU * i as f64 / m as f64))
                    .collect()
            })
            .collect();
        let geometry: Vec<(Complex64, f64)> = self
            .sampling
            .circles()
            .iter()
            .map(|c| (c.circle.center, c.orientation.sign()))
            .collect();
        let evaluator: PointEvaluator = Arc::new(move |k, z| {
            let (center, sign) = geometry[k];
            trig_eval(&coefficients[k], cutoff, sign * (z - center).arg())
        });
        Ok(Self { sampling: self.sampling.clone(), values, evaluator: Some(evaluator) })
    }

    /// Largest sample modulus.
    pub fn sup_norm(&self) -> f64 {
        self.samples().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Smallest sample modulus.
    pub fn min_modulus(&self) -> f64 {
        self.samples().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn samples(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.values.iter().flatten().copied()
    }

    fn map_with_point<F>(&self, op: F) -> Self
    where
        F: Fn(usize, Complex64, Complex64) -> Complex64 + Send + Sync + Clone + 'static,
    {
        let values = self
            .sampling
            .circles()
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(k, (sc, vals))| {
                sc.points.iter().zip(vals).map(|(&z, &v)| op(k, z, v)).collect()
            })
            .collect();
        let evaluator = self.evaluator.clone().map(|e| {
            let composed: PointEvaluator = Arc::new(move |k, z| op(k, z, e(k, z)));
            composed
        });
        Self { sampling: self.sampling.clone(), values, evaluator }
    }

    fn zip_with<F>(&self, other: &Self, op: F) -> Result<Self, BoundaryError>
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Send + Sync + Copy + 'static,
    {
        if !self.sampling.is_compatible(&other.sampling) {
            return Err(BoundaryError::SamplingMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect())
            .collect();
        let evaluator = match (&self.evaluator, &other.evaluator) {
            (Some(e1), Some(e2)) => {
                let (e1, e2) = (e1.clone(), e2.clone());
                let composed: PointEvaluator = Arc::new(move |k, z| op(e1(k, z), e2(k, z)));
                Some(composed)
            }
            _ => None,
        };
        Ok(Self { sampling: self.sampling.clone(), values, evaluator })
    }
}

fn sample_with(sampling: &BoundarySampling, eval: &PointEvaluator) -> Vec<Vec<Complex64>> {
    sampling
        .circles()
        .iter()
        .enumerate()
        .map(|(k, sc)| sc.points.iter().map(|&z| eval(k, z)).collect())
        .collect()
}

fn check_finite(values: &[Vec<Complex64>]) -> Result<(), BoundaryError> {
    for (circle, v) in values.iter().enumerate() {
        if let Some(index) = v.iter().position(|x| !x.is_finite()) {
            return Err(BoundaryError::NonFinite { circle, index });
        }
    }
    Ok(())
}

/// Coefficients `c_n`, `n = -cutoff..=cutoff`, of the samples `v_i` at
/// `t_i = 2 pi i / m`.
fn truncated_dft(v: &[Complex64], cutoff: usize) -> Vec<Complex64> {
    let m = v.len();
    let k = cutoff as i64;
    (-k..=k)
        .map(|n| {
            let sum: Complex64 = v
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    // n*i reduced mod m before scaling
                    let r = (n * i as i64).rem_euclid(m as i64);
                    x * Complex64::from_polar(1.0, -TAU * r as f64 / m as f64)
                })
                .sum();
            sum / m as f64
        })
        .collect()
}

fn trig_eval(c: &[Complex64], cutoff: usize, t: f64) -> Complex64 {
    c.iter()
        .enumerate()
        .map(|(j, &cn)| cn * Complex64::from_polar(1.0, (j as f64 - cutoff as f64) * t))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Circle, CircleDomain};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disc(m: usize) -> Arc<BoundarySampling> {
        CircleDomain::disc(c(0.0, 0.0), 1.0).unwrap().sampling(m).unwrap()
    }

    fn annulus(m: usize) -> Arc<BoundarySampling> {
        CircleDomain::new(Circle::new(c(0.0, 0.0), 1.0), vec![Circle::new(c(0.0, 0.0), 0.5)])
            .unwrap()
            .sampling(m)
            .unwrap()
    }

    fn parse(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn max_diff(a: &BoundaryFunction, b: &BoundaryFunction) -> f64 {
        a.samples().zip(b.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn samples_of_builtins() {
        let s = disc(8);
        let f = BoundaryFunction::from_expr(&parse("conj(z)"), s.clone()).unwrap();
        let g = BoundaryFunction::from_expr(&parse("z^2"), s.clone()).unwrap();
        for i in 0..8 {
            let t = TAU * i as f64 / 8.0;
            assert!((f.circle_values(0)[i] - Complex64::from_polar(1.0, -t)).norm() < 1e-15);
            assert!((g.circle_values(0)[i] - Complex64::from_polar(1.0, 2.0 * t)).norm() < 1e-15);
        }
        assert!(matches!(
            BoundaryFunction::from_expr(&parse("1/(z-1)"), s),
            Err(BoundaryError::PoleOnBoundary { circle: 0, .. })
        ));
    }

    #[test]
    fn affine_multiplication() {
        let s = disc(16);
        let one = BoundaryFunction::from_expr(&parse("1"), s.clone()).unwrap();
        let z = BoundaryFunction::from_expr(&parse("z"), s.clone()).unwrap();
        assert!(max_diff(&one.multiply_by_affine(c(0.0, 0.0)), &z) < 1e-15);

        let f = BoundaryFunction::from_expr(&parse("conj(z)"), s.clone()).unwrap();
        assert!(f.multiply_by_affine(c(0.0, 0.0)).samples().all(|v| (v - 1.0).norm() < 1e-15));

        // hand evaluation of 1 - 0.5 e^{-i theta} at theta = 0, pi/2, pi
        let g = f.multiply_by_affine(c(0.5, 0.0));
        let v = g.circle_values(0);
        assert!((v[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((v[4] - c(1.0, 0.5)).norm() < 1e-15);
        assert!((v[8] - c(1.5, 0.0)).norm() < 1e-15);
        // the evaluator follows the samples
        let e = g.evaluator().unwrap();
        assert!((e(0, c(0.0, 1.0)) - c(1.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn rotation() {
        let s = disc(8);
        let one = BoundaryFunction::from_expr(&parse("1"), s.clone()).unwrap();
        assert!(max_diff(&one.rotate(0.0), &one) == 0.0);
        assert!(one.rotate(PI).samples().all(|v| (v + 1.0).norm() < 1e-15));
        let f = BoundaryFunction::from_expr(&parse("conj(z)"), s).unwrap();
        assert!((f.rotate(PI / 2.0).circle_values(0)[0] - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn algebra_and_mismatch() {
        let s = disc(16);
        let z = BoundaryFunction::from_expr(&parse("z"), s.clone()).unwrap();
        let minus_z = BoundaryFunction::from_expr(&parse("-z"), s.clone()).unwrap();
        assert_eq!(z.add(&minus_z).unwrap().sup_norm(), 0.0);
        let one = BoundaryFunction::from_expr(&parse("1"), s).unwrap();
        assert!(one.scale(c(2.0, 0.0)).samples().all(|v| v == c(2.0, 0.0)));
        let other = BoundaryFunction::from_expr(&parse("1"), disc(32)).unwrap();
        assert_eq!(one.add(&other).unwrap_err(), BoundaryError::SamplingMismatch);
    }

    #[test]
    fn raw_samples_are_checked() {
        let s = annulus(8);
        assert!(matches!(
            BoundaryFunction::from_samples(s.clone(), vec![vec![c(0.0, 0.0); 8]]),
            Err(BoundaryError::ShapeMismatch { expected: 2, m: 8 })
        ));
        let mut v = vec![vec![c(1.0, 0.0); 8]; 2];
        v[1][3] = c(f64::NAN, 0.0);
        assert_eq!(
            BoundaryFunction::from_samples(s.clone(), v).unwrap_err(),
            BoundaryError::NonFinite { circle: 1, index: 3 }
        );
        let f = BoundaryFunction::from_samples(s, vec![vec![c(1.0, 0.0); 8]; 2]).unwrap();
        assert!(f.resample(16).is_none());
    }

    #[test]
    fn truncation_leaves_low_degree_data_alone() {
        let s = annulus(64);
        let trig = BoundaryFunction::from_fourier(
            s.clone(),
            vec![
                vec![(-2, c(0.3, 0.1)), (0, c(1.0, 0.0)), (1, c(0.0, -0.7))],
                vec![(2, c(0.5, 0.5)), (-1, c(-0.2, 0.0))],
            ],
        )
        .unwrap();
        assert!(max_diff(&trig.smooth_truncate(2).unwrap(), &trig) < 1e-12);

        let f = BoundaryFunction::from_expr(&parse("conj(z)"), s).unwrap();
        for k in [1, 5, 31] {
            assert!(max_diff(&f.smooth_truncate(k).unwrap(), &f) < 1e-12);
        }
        assert!(matches!(f.smooth_truncate(32), Err(BoundaryError::CutoffTooLarge { .. })));
        assert!(matches!(f.smooth_truncate(0), Err(BoundaryError::CutoffTooLarge { .. })));
    }

    #[test]
    fn truncation_evaluator_matches_samples() {
        let s = annulus(64);
        let f = BoundaryFunction::from_expr(&parse("abs2(z - 0.3) * conj(z)^3"), s).unwrap();
        let f1 = f.smooth_truncate(6).unwrap();
        let e = f1.evaluator().unwrap();
        for (k, sc) in f1.sampling().circles().iter().enumerate() {
            for (z, v) in sc.points.iter().zip(f1.circle_values(k)) {
                assert!((e(k, *z) - v).norm() < 1e-12);
            }
        }
        let fine = f1.resample(256).unwrap().unwrap();
        assert!(max_diff(&fine.smooth_truncate(6).unwrap(), &fine) < 1e-12);
    }

    #[test]
    fn truncation_error_of_continuous_sawtooth_shrinks() {
        // triangle wave |t - pi|: continuous, not smooth
        let s = disc(512);
        let tri = BoundaryFunction::from_samples(
            s.clone(),
            vec![(0..512).map(|i| c((TAU * i as f64 / 512.0 - PI).abs(), 0.0)).collect()],
        )
        .unwrap();
        let errs: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&k| max_diff(&tri.smooth_truncate(k).unwrap(), &tri))
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        for (e, k) in errs.iter().zip([4usize, 8, 16]) {
            // continuous Fourier tail at t = 0: sum over odd n > K of 4/(pi n^2)
            let tail: f64 = (k + 1..200_000)
                .filter(|n| n % 2 == 1)
                .map(|n| 4.0 / (PI * (n * n) as f64))
                .sum();
            assert!((e - tail).abs() <= 0.1 * tail, "{e} vs tail {tail} at K = {k}");
        }
    }

    #[test]
    fn evaluators_compose() {
        let s = disc(16);
        let f = BoundaryFunction::from_expr(&parse("conj(z)"), s.clone()).unwrap();
        let g = BoundaryFunction::from_expr(&parse("z^2"), s).unwrap();
        let h = f.add(&g).unwrap().multiply_by_affine(c(0.2, 0.1)).rotate(0.4);
        let fine = h.resample(64).unwrap().unwrap();
        let direct = BoundaryFunction::from_expr(
            &parse("(conj(z) + z^2) * (z - 0.2 - 0.1*i)"),
            fine.sampling().clone(),
        )
        .unwrap()
        .rotate(0.4);
        assert!(max_diff(&fine, &direct) < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sample_fn() -> impl Strategy<Value = Vec<(f64, f64)>> {
            proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 32 * 2)
        }

        fn build(v: &[(f64, f64)]) -> BoundaryFunction {
            let vals: Vec<Complex64> = v.iter().map(|&(a, b)| c(a, b)).collect();
            BoundaryFunction::from_samples(annulus(32), vals.chunks(32).map(|x| x.to_vec()).collect())
                .unwrap()
        }

        proptest! {
            #[test]
            fn rotation_inverts(v in sample_fn(), w in -10.0f64..10.0) {
                let f = build(&v);
                let back = f.rotate(w).rotate(-w);
                for (x, y) in f.samples().zip(back.samples()) {
                    prop_assert!((x - y).norm() <= 1e-14 * x.norm().max(1.0));
                }
            }

            #[test]
            fn affine_multiplication_is_linear(
                v in sample_fn(), u in sample_fn(), re in -0.9f64..0.9, im in -0.9f64..0.9
            ) {
                let (f, g) = (build(&v), build(&u));
                let a = c(re, im);
                let lhs = f.add(&g).unwrap().multiply_by_affine(a);
                let rhs = f.multiply_by_affine(a).add(&g.multiply_by_affine(a)).unwrap();
                for (x, y) in lhs.samples().zip(rhs.samples()) {
                    prop_assert!((x - y).norm() <= 1e-14 * x.norm().max(1.0));
                }
            }

            #[test]
            fn truncation_is_a_projection(v in sample_fn(), k in 1usize..16) {
                let once = build(&v).smooth_truncate(k).unwrap();
                let twice = once.smooth_truncate(k).unwrap();
                prop_assert!(max_diff(&once, &twice) <= 1e-13);
            }
        }
    }
}
