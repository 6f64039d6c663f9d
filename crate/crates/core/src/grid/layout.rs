use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::Vector;

/// Uniform MAC grid on a box.
///
/// Velocity component `c` is stored on a padded array: along axis `c` the
/// entries are the faces `0..=n_c` (positions `i h`), along each other axis
/// `a` entry `0` and `n_a + 1` sit on the walls and entry `m ∈ 1..=n_a` at the
/// cell center `(m − ½) h`. Unknowns are the entries that are not on a wall.
/// Pressure lives on the `n_0 n_1 n_2` cell centers. All arrays are x-fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub domain: BoxDomain,
    pub h: f64,
    pub n: [usize; 3],
}

impl GridLayout {
    pub fn new(domain: BoxDomain, h: f64) -> Result<Self> {
        if !domain.is_valid() || !(h > 0.0) || !h.is_finite() {
            return Err(Error::Precondition(format!("invalid grid: domain {domain:?}, h = {h}")));
        }
        let mut n = [0; 3];
        for a in 0..3 {
            let q = domain.sides[a] / h;
            let r = q.round();
            if (q - r).abs() > 1e-9 * q.max(1.0) || r < 2.0 {
                return Err(Error::Precondition(format!(
                    "h = {h} does not divide side {} = {} into at least two cells",
                    a, domain.sides[a]
                )));
            }
            n[a] = r as usize;
        }
        Ok(GridLayout { domain, h, n })
    }

    /// Grid with `cells` cells along the shortest side.
    pub fn with_cells(domain: BoxDomain, cells: usize) -> Result<Self> {
        let s = domain.sides.x.min(domain.sides.y).min(domain.sides.z);
        Self::new(domain, s / cells as f64)
    }

    pub fn cells(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    pub fn comp_dims(&self, c: usize) -> [usize; 3] {
        let mut d = [0; 3];
        for a in 0..3 {
            d[a] = if a == c { self.n[a] + 1 } else { self.n[a] + 2 };
        }
        d
    }

    pub fn comp_len(&self, c: usize) -> usize {
        let d = self.comp_dims(c);
        d[0] * d[1] * d[2]
    }

    #[inline]
    pub fn comp_index(&self, c: usize, i: [usize; 3]) -> usize {
        let d = self.comp_dims(c);
        i[0] + d[0] * (i[1] + d[1] * i[2])
    }

    #[inline]
    pub fn cell_index(&self, i: [usize; 3]) -> usize {
        i[0] + self.n[0] * (i[1] + self.n[1] * i[2])
    }

    /// Coordinate along `axis` of padded entry `idx` of component `c`.
    #[inline]
    pub fn comp_coord(&self, c: usize, axis: usize, idx: usize) -> f64 {
        let o = self.domain.corner[axis];
        if axis == c {
            o + idx as f64 * self.h
        } else if idx == 0 {
            o
        } else if idx == self.n[axis] + 1 {
            o + self.domain.sides[axis]
        } else {
            o + (idx as f64 - 0.5) * self.h
        }
    }

    pub fn comp_pos(&self, c: usize, i: [usize; 3]) -> Vector {
        Vector::new(self.comp_coord(c, 0, i[0]), self.comp_coord(c, 1, i[1]), self.comp_coord(c, 2, i[2]))
    }

    pub fn cell_pos(&self, i: [usize; 3]) -> Vector {
        let h = self.h;
        self.domain.corner + Vector::new((i[0] as f64 + 0.5) * h, (i[1] as f64 + 0.5) * h, (i[2] as f64 + 0.5) * h)
    }

    #[inline]
    pub fn is_unknown(&self, c: usize, i: [usize; 3]) -> bool {
        (0..3).all(|a| if a == c { i[a] >= 1 && i[a] < self.n[a] } else { i[a] >= 1 && i[a] <= self.n[a] })
    }

    /// Same box with twice the spacing, when every side has an even cell count ≥ 4.
    pub fn coarsen(&self) -> Option<GridLayout> {
        if self.n.iter().all(|&m| m % 2 == 0 && m >= 4) {
            Some(GridLayout { domain: self.domain, h: 2.0 * self.h, n: [self.n[0] / 2, self.n[1] / 2, self.n[2] / 2] })
        } else {
            None
        }
    }

    /// Padded multi-indices of component `c`, x-fastest.
    pub fn comp_indices(&self, c: usize) -> impl Iterator<Item = [usize; 3]> {
        let d = self.comp_dims(c);
        (0..d[2]).flat_map(move |k| (0..d[1]).flat_map(move |j| (0..d[0]).map(move |i| [i, j, k])))
    }

    pub fn cell_indices(&self) -> impl Iterator<Item = [usize; 3]> {
        let n = self.n;
        (0..n[2]).flat_map(move |k| (0..n[1]).flat_map(move |j| (0..n[0]).map(move |i| [i, j, k])))
    }
}
