//! Complex-valued functions on the upper half-plane.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::halfplane::UHPoint;
use crate::poincare::{eval_regular_part_batch, eval_series, eval_series_batch, SeriesSpec, TruncationParams};

/// A function that can be sampled at points of the half-plane.
pub trait PointFunction: Sync {
    fn eval(&self, z: UHPoint) -> Result<Complex64>;

    /// Values at many points; results are in input order and independent of
    /// the thread count.
    fn eval_many(&self, zs: &[UHPoint]) -> Result<Vec<Complex64>> {
        zs.par_iter().map(|z| self.eval(*z)).collect()
    }

    /// Values together with a magnitude scale for their rounding error
    /// (for sums, the sum of absolute values of the summands).
    fn eval_many_scaled(&self, zs: &[UHPoint]) -> Result<Vec<(Complex64, f64)>> {
        Ok(self.eval_many(zs)?.into_iter().map(|v| (v, v.norm())).collect())
    }
}

impl<F> PointFunction for F
where
    F: Fn(UHPoint) -> Result<Complex64> + Sync,
{
    fn eval(&self, z: UHPoint) -> Result<Complex64> {
        self(z)
    }
}

/// A Poincare series truncated to a fixed set of shells.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedSeries {
    pub spec: SeriesSpec,
    pub trunc: TruncationParams,
}

impl TruncatedSeries {
    pub fn new(spec: SeriesSpec, trunc: TruncationParams) -> Self {
        Self { spec, trunc }
    }
}

impl PointFunction for TruncatedSeries {
    fn eval(&self, z: UHPoint) -> Result<Complex64> {
        Ok(eval_series(&self.spec, z, self.trunc)?.value)
    }

    fn eval_many(&self, zs: &[UHPoint]) -> Result<Vec<Complex64>> {
        Ok(eval_series_batch(&self.spec, zs, self.trunc)?.into_iter().map(|v| v.value).collect())
    }

    fn eval_many_scaled(&self, zs: &[UHPoint]) -> Result<Vec<(Complex64, f64)>> {
        Ok(eval_series_batch(&self.spec, zs, self.trunc)?
            .into_iter()
            .map(|v| (v.value, v.term_magnitude))
            .collect())
    }
}

/// A truncated Poincare series without the terms of the matrices fixing its
/// center, which is regular near the center.
#[derive(Debug, Clone, Copy)]
pub struct RegularPart {
    pub spec: SeriesSpec,
    pub trunc: TruncationParams,
}

impl PointFunction for RegularPart {
    fn eval(&self, z: UHPoint) -> Result<Complex64> {
        Ok(self.eval_many(&[z])?[0])
    }

    fn eval_many(&self, zs: &[UHPoint]) -> Result<Vec<Complex64>> {
        Ok(eval_regular_part_batch(&self.spec, zs, self.trunc)?.into_iter().map(|v| v.value).collect())
    }

    fn eval_many_scaled(&self, zs: &[UHPoint]) -> Result<Vec<(Complex64, f64)>> {
        Ok(eval_regular_part_batch(&self.spec, zs, self.trunc)?
            .into_iter()
            .map(|v| (v.value, v.term_magnitude))
            .collect())
    }
}

/// `scale · f`.
pub struct Scaled<'a, F: PointFunction + ?Sized> {
    pub scale: Complex64,
    pub inner: &'a F,
}

impl<F: PointFunction + ?Sized> PointFunction for Scaled<'_, F> {
    fn eval(&self, z: UHPoint) -> Result<Complex64> {
        Ok(self.scale * self.inner.eval(z)?)
    }

    fn eval_many(&self, zs: &[UHPoint]) -> Result<Vec<Complex64>> {
        Ok(self.inner.eval_many(zs)?.into_iter().map(|v| self.scale * v).collect())
    }

    fn eval_many_scaled(&self, zs: &[UHPoint]) -> Result<Vec<(Complex64, f64)>> {
        let a = self.scale.norm();
        Ok(self.inner.eval_many_scaled(zs)?.into_iter().map(|(v, m)| (self.scale * v, a * m)).collect())
    }
}
