//! Uniform bucket grid over sphere centers.

use std::collections::HashMap;

use crate::Vector;

#[derive(Clone, Debug)]
pub struct BucketIndex {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
    centers: Vec<Vector>,
}

impl BucketIndex {
    /// `cell` should be at least the largest query radius.
    pub fn new(centers: &[Vector], cell: f64) -> Self {
        assert!(cell > 0.0);
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, c) in centers.iter().enumerate() {
            buckets.entry(Self::key(*c, cell)).or_default().push(i);
        }
        BucketIndex { cell, buckets, centers: centers.to_vec() }
    }

    fn key(x: Vector, cell: f64) -> [i64; 3] {
        [(x.x / cell).floor() as i64, (x.y / cell).floor() as i64, (x.z / cell).floor() as i64]
    }

    /// Indices of centers within `radius ≤ cell` of `x`, in increasing order.
    pub fn within(&self, x: Vector, radius: f64) -> Vec<usize> {
        debug_assert!(radius <= self.cell);
        let k = Self::key(x, self.cell);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(b) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        out.extend(b.iter().copied().filter(|&i| (self.centers[i] - x).norm() < radius));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest center within `radius`, if any.
    pub fn nearest_within(&self, x: Vector, radius: f64) -> Option<usize> {
        self.within(x, radius).into_iter().min_by(|&a, &b| {
            (self.centers[a] - x).norm_sq().total_cmp(&(self.centers[b] - x).norm_sq())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_neighbors_across_cells() {
        let c = vec![Vector::new(0.0, 0.0, 0.0), Vector::new(0.95, 0.0, 0.0), Vector::new(3.0, 3.0, 3.0)];
        let idx = BucketIndex::new(&c, 1.0);
        assert_eq!(idx.within(Vector::new(0.5, 0.0, 0.0), 0.6), vec![0, 1]);
        assert_eq!(idx.nearest_within(Vector::new(0.6, 0.0, 0.0), 1.0), Some(1));
        assert_eq!(idx.nearest_within(Vector::new(2.0, 2.0, 2.0), 1.0), None);
    }
}
