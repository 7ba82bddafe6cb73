//! Sequential reference pipeline and barcode comparison.
//!
//! The oracle runs full Delaunay -> alpha filtration -> standard reduction on
//! a single thread and shares the geometry/alpha/reduction code with the
//! distributed pipeline, but none of the cover/spectral/runtime machinery.
//! Because both pipelines share arithmetic, distributed results are expected
//! to match the oracle exactly; the documented tolerance (1e-8) is the
//! contract for comparing against other implementations.

use crate::alpha::global_alpha;
use crate::delaunay::{DelaunayError, Triangulation};
use crate::geometry::Point2;
use crate::z2matrix::persistence_with_representatives;

/// One barcode interval; `death` is `f64::INFINITY` for essential classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
}

impl Bar {
    pub fn is_empty(&self) -> bool {
        self.birth == self.death
    }
}

/// Sorts per dimension in the standard order: birth ascending, and for equal
/// births the longer interval (later death) first.
pub fn sort_standard(bars: &mut [Bar]) {
    bars.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.partial_cmp(&b.birth).unwrap())
            .then(b.death.partial_cmp(&a.death).unwrap())
    });
}

/// Exact alpha persistence in dimensions 0 and 1 by single-threaded
/// reduction. Empty intervals are dropped.
pub fn sequential_persistence(points: &[(usize, Point2)]) -> Result<Vec<Bar>, DelaunayError> {
    let tri = Triangulation::build(points)?;
    let fc = global_alpha(&tri);
    let (_, ivs) = persistence_with_representatives(&fc, 1);
    let mut bars: Vec<Bar> = ivs
        .iter()
        .filter(|iv| !iv.is_empty())
        .map(|iv| Bar {
            dim: iv.dim,
            birth: iv.birth,
            death: iv.death,
        })
        .collect();
    sort_standard(&mut bars);
    Ok(bars)
}

/// First mismatch found when comparing two barcodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Mismatch {
    CountDiffers { dim: usize, left: usize, right: usize },
    IntervalDiffers { left: Bar, right: Bar },
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mismatch::CountDiffers { dim, left, right } => {
                write!(f, "dim {dim}: {left} intervals vs {right}")
            }
            Mismatch::IntervalDiffers { left, right } => write!(
                f,
                "dim {}: [{}, {}) vs [{}, {})",
                left.dim, left.birth, left.death, right.birth, right.death
            ),
        }
    }
}

/// Greedy matching after standard-order sorting; intervals match iff both
/// endpoint deltas are within `tol` (infinite deaths only match infinite).
/// Empty intervals are ignored.
pub fn compare(b1: &[Bar], b2: &[Bar], tol: f64) -> Result<(), Mismatch> {
    let clean = |b: &[Bar]| -> Vec<Bar> {
        let mut v: Vec<Bar> = b.iter().copied().filter(|x| !x.is_empty()).collect();
        sort_standard(&mut v);
        v
    };
    let (l, r) = (clean(b1), clean(b2));
    for dim in 0..=2 {
        let ld: Vec<&Bar> = l.iter().filter(|b| b.dim == dim).collect();
        let rd: Vec<&Bar> = r.iter().filter(|b| b.dim == dim).collect();
        if ld.len() != rd.len() {
            return Err(Mismatch::CountDiffers {
                dim,
                left: ld.len(),
                right: rd.len(),
            });
        }
        for (a, b) in ld.iter().zip(rd.iter()) {
            let death_ok = match (a.death.is_finite(), b.death.is_finite()) {
                (true, true) => (a.death - b.death).abs() <= tol,
                (false, false) => true,
                _ => false,
            };
            if (a.birth - b.birth).abs() > tol || !death_ok {
                return Err(Mismatch::IntervalDiffers {
                    left: **a,
                    right: **b,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(coords: &[(f64, f64)]) -> Vec<(usize, Point2)> {
        coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i, Point2::new(x, y)))
            .collect()
    }

    #[test]
    fn single_point() {
        let bars = sequential_persistence(&cloud(&[(1.0, 2.0)])).unwrap();
        assert_eq!(bars.len(), 1);
        assert_eq!(bars[0].dim, 0);
        assert_eq!(bars[0].birth, 0.0);
        assert!(bars[0].death.is_infinite());
    }

    #[test]
    fn right_triangle() {
        let bars = sequential_persistence(&cloud(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])).unwrap();
        let dim0: Vec<&Bar> = bars.iter().filter(|b| b.dim == 0).collect();
        let dim1: Vec<&Bar> = bars.iter().filter(|b| b.dim == 1).collect();
        assert_eq!(dim0.len(), 3);
        assert!(dim0[0].death.is_infinite()); // standard order: longest first
        assert_eq!((dim0[1].birth, dim0[1].death), (0.0, 0.25));
        assert_eq!((dim0[2].birth, dim0[2].death), (0.0, 0.25));
        assert!(dim1.is_empty()); // loop is born and killed at 0.5
    }

    #[test]
    fn noisy_circle_has_one_long_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        let pts: Vec<(usize, Point2)> = (0..200)
            .map(|i| {
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = 10.0 + rng.gen_range(-0.5..0.5);
                (i, Point2::new(r * a.cos(), r * a.sin()))
            })
            .collect();
        let bars = sequential_persistence(&pts).unwrap();
        let long: Vec<&Bar> = bars
            .iter()
            .filter(|b| b.dim == 1 && b.death / b.birth > 5.0)
            .collect();
        assert_eq!(long.len(), 1);
    }

    /// Four polygonal loops sized so the number of live 1-dim classes at the
    /// probe values 1.2, 4.6, 9.3, 12.8 is 2, 3, 2, 1. Points of a regular
    /// n-gon are exactly cocircular, so every filling triangle carries the
    /// squared circumradius of the defining circle and each loop dies exactly
    /// there.
    #[test]
    fn four_loop_rank_profile() {
        let mut coords = Vec::new();
        let mut ring = |cx: f64, cy: f64, r2: f64, n: usize| {
            let r = r2.sqrt();
            for k in 0..n {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                coords.push((cx + r * a.cos(), cy + r * a.sin()));
            }
        };
        ring(0.0, 0.0, 3.0, 8); // born ~0.44, dies 3
        ring(100.0, 0.0, 14.0, 12); // born ~0.94, dies 14
        ring(0.0, 100.0, 10.0, 7); // born ~1.88, dies 10
        ring(100.0, 100.0, 8.0, 6); // born 2, dies 8
        let bars = sequential_persistence(&cloud(&coords)).unwrap();
        let alive = |t: f64| {
            bars.iter()
                .filter(|b| b.dim == 1 && b.birth <= t && t < b.death)
                .count()
        };
        assert_eq!(
            [alive(1.2), alive(4.6), alive(9.3), alive(12.8)],
            [2, 3, 2, 1]
        );
    }

    #[test]
    fn compare_reports_mismatches() {
        let a = vec![
            Bar { dim: 0, birth: 0.0, death: f64::INFINITY },
            Bar { dim: 1, birth: 1.0, death: 2.0 },
        ];
        assert_eq!(compare(&a, &a, 0.0), Ok(()));
        let mut b = a.clone();
        b[1].death = 2.0 + 1e-6;
        assert_eq!(compare(&a, &b, 1e-8), compare(&b, &a, 1e-8).map_err(|e| match e {
            Mismatch::IntervalDiffers { left, right } => Mismatch::IntervalDiffers { left: right, right: left },
            other => other,
        }));
        assert!(matches!(
            compare(&a, &b, 1e-8),
            Err(Mismatch::IntervalDiffers { .. })
        ));
        assert_eq!(compare(&a, &b, 1e-5), Ok(()));
        // Empty intervals are ignored.
        let mut c = a.clone();
        c.push(Bar { dim: 1, birth: 3.0, death: 3.0 });
        assert_eq!(compare(&a, &c, 0.0), Ok(()));
        // Infinity only matches infinity.
        let mut d = a.clone();
        d[0].death = 1e12;
        assert!(compare(&a, &d, 1e-8).is_err());
    }
}
