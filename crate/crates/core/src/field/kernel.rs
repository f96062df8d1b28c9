use std::sync::Arc;

use super::FieldError;
use crate::kernel::{
    build_mollified_table, build_table, KernelParams, KernelTable, MollifierParams,
};
use crate::potential::IndicatorKernel;

/// Radial convolution kernel used to build fields from particles.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldKernel {
    /// G through an interpolation table.
    Green(Arc<KernelTable>),
    /// G evaluated directly from the Bessel closed form.
    Exact(KernelParams),
    /// G_ε through an interpolation table.
    Mollified(Arc<KernelTable>),
    Indicator(IndicatorKernel),
}

/// Table sizes chosen so interpolation error stays near 1e-10.
const GREEN_POINTS: usize = 4096;
const MOLLIFIED_POINTS: usize = 1024;
/// Tables reach out to this many decay lengths; beyond it the fitted tail takes over.
const TABLE_REACH: f64 = 60.0;

impl FieldKernel {
    pub fn green(params: KernelParams) -> Result<Self, FieldError> {
        let m = params.mass();
        let t = build_table(&params, 1e-6 / m, TABLE_REACH / m, GREEN_POINTS)?;
        Ok(Self::Green(Arc::new(t)))
    }

    pub fn exact(params: KernelParams) -> Self {
        Self::Exact(params)
    }

    pub fn mollified(params: KernelParams, moll: MollifierParams) -> Result<Self, FieldError> {
        Ok(Self::Mollified(Arc::new(smoothed_table(&params, moll.epsilon())?)))
    }

    pub fn indicator(kernel: IndicatorKernel) -> Self {
        Self::Indicator(kernel)
    }

    /// Kernel parameters, absent for the indicator kernel.
    pub fn params(&self) -> Option<KernelParams> {
        match self {
            Self::Green(t) | Self::Mollified(t) => Some(*t.params()),
            Self::Exact(p) => Some(*p),
            Self::Indicator(_) => None,
        }
    }

    /// Gaussian smoothing width already present in the kernel (ε or 0).
    pub fn smoothing(&self) -> f64 {
        match self {
            Self::Mollified(t) => t.epsilon().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// True when the kernel diverges at the origin.
    pub fn is_singular(&self) -> bool {
        matches!(self, Self::Green(_) | Self::Exact(_))
    }

    /// Distance beyond which the kernel is negligible: n_pad/m, or R.
    pub fn reach(&self, n_pad: f64) -> f64 {
        match self {
            Self::Indicator(k) => k.radius(),
            _ => n_pad / self.params().expect("non-indicator").mass(),
        }
    }

    #[inline]
    pub fn radial(&self, r: f64) -> f64 {
        match self {
            Self::Green(t) | Self::Mollified(t) => t.eval(r),
            Self::Exact(p) => p.green(r),
            Self::Indicator(k) => k.eval(r),
        }
    }

    /// Finite value at distance 0, if any.
    pub fn value_at_origin(&self) -> Option<f64> {
        match self {
            Self::Mollified(t) => Some(t.eval(0.0)),
            Self::Indicator(_) => Some(1.0),
            _ => None,
        }
    }
}

/// Table of G smoothed by a Gaussian of standard deviation `width`.
pub(crate) fn smoothed_table(params: &KernelParams, width: f64) -> Result<KernelTable, FieldError> {
    let m = params.mass();
    let moll = MollifierParams::new(width)?;
    let r_min = 1e-3 * width.min(1.0 / m);
    let r_max = TABLE_REACH / m + 10.0 * width;
    Ok(build_mollified_table(params, &moll, r_min, r_max, MOLLIFIED_POINTS)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::green_mollified;

    #[test]
    fn tables_track_direct_evaluation() {
        let p = KernelParams::new(2, 1.0).unwrap();
        let g = FieldKernel::green(p).unwrap();
        for &r in &[1e-5, 0.013, 0.77, 5.5, 33.0] {
            assert!(((g.radial(r) - p.green(r)) / p.green(r)).abs() < 1e-9, "r={r}");
        }
        let m = MollifierParams::new(0.5).unwrap();
        let k = FieldKernel::mollified(p, m).unwrap();
        for &r in &[0.0, 1e-4, 0.3, 1.7, 12.0] {
            let want = green_mollified(&p, &m, r).unwrap();
            assert!(((k.radial(r) - want) / want).abs() < 1e-8, "r={r}");
        }
        assert_eq!(k.smoothing(), 0.5);
    }
}
