use serde::{Deserialize, Serialize};

use crate::body::HumanModel;
use crate::error::{Error, Result};
use crate::Scalar;

/// Ground-contact interval of the double stance in the sagittal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportPolygon<T> {
    pub x_min: T,
    pub x_max: T,
}

impl<T: Scalar> SupportPolygon<T> {
    pub fn new(x_min: T, x_max: T) -> Result<Self> {
        if !(x_min < x_max) {
            return Err(Error::Model("support polygon must have x_min < x_max".into()));
        }
        Ok(Self { x_min, x_max })
    }

    /// Signed distance outside the interval: positive outside, non-positive inside.
    pub fn slack(&self, x: T) -> T {
        (self.x_min - x).max(x - self.x_max)
    }

    pub fn contains(&self, x: T) -> bool {
        self.slack(x) <= T::zero()
    }

    pub fn center(&self) -> T {
        (self.x_min + self.x_max) / T::lit(2.0)
    }
}

pub fn support_polygon<T: Scalar>(model: &HumanModel<T>) -> Result<SupportPolygon<T>> {
    let f = model.foot();
    SupportPolygon::new(f.ankle_x + f.heel_offset, f.ankle_x + f.toe_offset)
}
