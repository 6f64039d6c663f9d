use serde::{Deserialize, Serialize};

use crate::Vector;

/// Axis-aligned box `corner + [0, sides]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub corner: Vector,
    pub sides: Vector,
}

impl Default for BoxDomain {
    /// Cube of side 2.5 with a corner at the origin.
    fn default() -> Self {
        BoxDomain::cube(2.5)
    }
}

impl BoxDomain {
    pub fn new(corner: Vector, sides: Vector) -> Self {
        BoxDomain { corner, sides }
    }

    pub fn cube(side: f64) -> Self {
        BoxDomain { corner: Vector::zero(), sides: Vector::splat(side) }
    }

    pub fn volume(&self) -> f64 {
        self.sides.x * self.sides.y * self.sides.z
    }

    pub fn center(&self) -> Vector {
        self.corner + self.sides * 0.5
    }

    pub fn upper(&self) -> Vector {
        self.corner + self.sides
    }

    pub fn contains(&self, x: Vector) -> bool {
        (0..3).all(|a| x[a] >= self.corner[a] && x[a] <= self.corner[a] + self.sides[a])
    }

    /// Distance to the nearest face; negative outside.
    pub fn distance_to_boundary(&self, x: Vector) -> f64 {
        (0..3)
            .map(|a| (x[a] - self.corner[a]).min(self.corner[a] + self.sides[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Coordinates relative to the corner, scaled to `[0, 1]³`.
    pub fn unit_coords(&self, x: Vector) -> Vector {
        Vector::new(
            (x.x - self.corner.x) / self.sides.x,
            (x.y - self.corner.y) / self.sides.y,
            (x.z - self.corner.z) / self.sides.z,
        )
    }

    pub fn is_valid(&self) -> bool {
        self.corner.is_finite() && self.sides.is_finite() && (0..3).all(|a| self.sides[a] > 0.0)
    }
}
