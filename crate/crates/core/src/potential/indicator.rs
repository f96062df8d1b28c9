/// χ_{B_R}: 1 inside the open ball of radius R, 0 elsewhere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndicatorKernel {
    radius: f64,
}

impl IndicatorKernel {
    pub fn new(radius: f64) -> Result<Self, super::PotentialError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(super::PotentialError::Domain(format!(
                "indicator radius must be positive, got {radius}"
            )));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        if r < self.radius {
            1.0
        } else {
            0.0
        }
    }
}
