//! Sparse Z2 column matrices and persistence reduction.
//!
//! Columns are strictly sorted row-index vectors; addition is symmetric
//! difference. The standard left-to-right reduction always tracks the
//! addition log `V` with `R = D * V`, which later stages need for cycle
//! representatives and for solving chain preimages.

use crate::alpha::{FilteredComplex2D, Simplex};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseZ2Matrix {
    pub nrows: usize,
    cols: Vec<Vec<usize>>,
}

impl SparseZ2Matrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        SparseZ2Matrix {
            nrows,
            cols: vec![Vec::new(); ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseZ2Matrix {
            nrows: n,
            cols: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    /// Sets a column from arbitrary row indices (sorted and deduplicated;
    /// an index appearing twice cancels).
    pub fn set_col(&mut self, j: usize, rows: impl IntoIterator<Item = usize>) {
        let mut v: Vec<usize> = rows.into_iter().collect();
        v.sort_unstable();
        let mut out = Vec::with_capacity(v.len());
        let mut i = 0;
        while i < v.len() {
            let mut k = i + 1;
            while k < v.len() && v[k] == v[i] {
                k += 1;
            }
            if (k - i) % 2 == 1 {
                debug_assert!(v[i] < self.nrows);
                out.push(v[i]);
            }
            i = k;
        }
        self.cols[j] = out;
    }

    pub fn push_col(&mut self, rows: impl IntoIterator<Item = usize>) -> usize {
        self.cols.push(Vec::new());
        let j = self.cols.len() - 1;
        self.set_col(j, rows);
        j
    }

    pub fn col(&self, j: usize) -> &[usize] {
        &self.cols[j]
    }

    pub fn is_zero_col(&self, j: usize) -> bool {
        self.cols[j].is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cols[j].binary_search(&i).is_ok()
    }

    /// Lowest nonzero row of a column (the pivot row in reduction order).
    pub fn low(&self, j: usize) -> Option<usize> {
        self.cols[j].last().copied()
    }

    /// cols[to] += cols[from] over Z2.
    pub fn add_col(&mut self, to: usize, from: usize) {
        debug_assert_ne!(to, from);
        let merged = xor_sorted(&self.cols[to], &self.cols[from]);
        self.cols[to] = merged;
    }

    /// Sets entry (i, j) to zero if present.
    pub fn clear_entry(&mut self, i: usize, j: usize) {
        if let Ok(pos) = self.cols[j].binary_search(&i) {
            self.cols[j].remove(pos);
        }
    }

    /// Matrix product over Z2 (used by consistency checks).
    pub fn multiply(&self, rhs: &SparseZ2Matrix) -> SparseZ2Matrix {
        let mut out = SparseZ2Matrix::new(self.nrows, rhs.ncols());
        for j in 0..rhs.ncols() {
            let mut acc: Vec<usize> = Vec::new();
            for &k in rhs.col(j) {
                acc = xor_sorted(&acc, self.col(k));
            }
            out.cols[j] = acc;
        }
        out
    }
}

pub fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub r: SparseZ2Matrix,
    /// Addition log: R = D * V, V upper-triangular with unit diagonal.
    pub v: SparseZ2Matrix,
    /// pivot row -> column holding that pivot.
    pub pivot_col: HashMap<usize, usize>,
}

/// Standard left-to-right column reduction. Columns must already be in the
/// intended (filtration) order.
pub fn standard_reduce(d: &SparseZ2Matrix) -> ReductionResult {
    let ncols = d.ncols();
    let mut r = d.clone();
    let mut v = SparseZ2Matrix::identity(ncols);
    let mut pivot_col: HashMap<usize, usize> = HashMap::new();
    for j in 0..ncols {
        while let Some(piv) = r.low(j) {
            match pivot_col.get(&piv) {
                Some(&k) => {
                    r.add_col(j, k);
                    v.add_col(j, k);
                }
                None => {
                    pivot_col.insert(piv, j);
                    break;
                }
            }
        }
    }
    ReductionResult { r, v, pivot_col }
}

/// The boundary-matrix reduction of a filtered complex, with the simplex
/// order and metadata needed to interpret rows and columns.
#[derive(Debug, Clone)]
pub struct FiltrationReduction {
    pub order: Vec<Simplex>,
    pub index: HashMap<Simplex, usize>,
    pub values: Vec<f64>,
    pub dims: Vec<usize>,
    pub red: ReductionResult,
}

impl FiltrationReduction {
    pub fn boundary_matrix(order: &[Simplex], index: &HashMap<Simplex, usize>) -> SparseZ2Matrix {
        let mut d = SparseZ2Matrix::new(order.len(), order.len());
        for (j, s) in order.iter().enumerate() {
            d.set_col(j, s.facets().iter().map(|f| index[f]));
        }
        d
    }

    pub fn new(fc: &FilteredComplex2D) -> Self {
        let order = fc.reduction_order();
        let index: HashMap<Simplex, usize> =
            order.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let values: Vec<f64> = order.iter().map(|s| fc.value(s).unwrap()).collect();
        let dims: Vec<usize> = order.iter().map(|s| s.dim()).collect();
        let d = Self::boundary_matrix(&order, &index);
        let red = standard_reduce(&d);
        FiltrationReduction {
            order,
            index,
            values,
            dims,
            red,
        }
    }

    /// Boundary of a chain given as simplex indices.
    pub fn boundary_of(&self, chain: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for &j in chain {
            let rows: Vec<usize> = self.order[j].facets().iter().map(|f| self.index[f]).collect();
            let mut sorted = rows;
            sorted.sort_unstable();
            out = xor_sorted(&out, &sorted);
        }
        out
    }

    /// Finds a chain `a` of (dim(z)+1)-simplices with filtration <= `t` and
    /// boundary exactly `z`, or `None` if `z` is not a boundary at `t`.
    /// `z` must be a cycle given as sorted simplex indices.
    pub fn solve_chain(&self, z: &[usize], t: f64) -> Option<Vec<usize>> {
        let mut z: Vec<usize> = z.to_vec();
        debug_assert!(z.windows(2).all(|w| w[0] < w[1]));
        let mut a: Vec<usize> = Vec::new();
        while let Some(&piv) = z.last() {
            let &col = self.red.pivot_col.get(&piv)?;
            if self.values[col] > t {
                return None;
            }
            z = xor_sorted(&z, self.red.r.col(col));
            a = xor_sorted(&a, self.red.v.col(col));
        }
        Some(a)
    }
}

/// One interval of a persistence barcode, with its generating cycle.
#[derive(Debug, Clone)]
pub struct IntervalRep {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    pub birth_index: usize,
    pub death_index: Option<usize>,
    /// Representative cycle as sorted simplex indices into `order`.
    pub cycle: Vec<usize>,
}

impl IntervalRep {
    pub fn is_empty(&self) -> bool {
        self.birth == self.death
    }
}

/// Persistence intervals with representatives, for dimensions <= `max_dim`.
/// Empty intervals (birth == death) are retained; callers filter at output
/// boundaries.
pub fn persistence_with_representatives(
    fc: &FilteredComplex2D,
    max_dim: usize,
) -> (FiltrationReduction, Vec<IntervalRep>) {
    let fr = FiltrationReduction::new(fc);
    let mut out = Vec::new();
    let n = fr.order.len();
    for j in 0..n {
        if let Some(i) = fr.red.r.low(j) {
            let dim = fr.dims[i];
            if dim <= max_dim {
                out.push(IntervalRep {
                    dim,
                    birth: fr.values[i],
                    death: fr.values[j],
                    birth_index: i,
                    death_index: Some(j),
                    cycle: fr.red.r.col(j).to_vec(),
                });
            }
        } else if !fr.red.pivot_col.contains_key(&j) {
            let dim = fr.dims[j];
            if dim <= max_dim {
                out.push(IntervalRep {
                    dim,
                    birth: fr.values[j],
                    death: f64::INFINITY,
                    birth_index: j,
                    death_index: None,
                    cycle: fr.red.v.col(j).to_vec(),
                });
            }
        }
    }
    // Deterministic order: by (dim, birth, death, birth simplex).
    out.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.partial_cmp(&b.birth).unwrap())
            .then(a.death.partial_cmp(&b.death).unwrap())
            .then(a.birth_index.cmp(&b.birth_index))
    });
    (fr, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::global_alpha;
    use crate::delaunay::Triangulation;
    use crate::geometry::Point2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_matrix_reduces_to_zero_with_identity_log() {
        let d = SparseZ2Matrix::new(4, 3);
        let res = standard_reduce(&d);
        assert!((0..3).all(|j| res.r.is_zero_col(j)));
        assert_eq!(res.v, SparseZ2Matrix::identity(3));
    }

    #[test]
    fn reduction_satisfies_r_equals_d_v() {
        let mut d = SparseZ2Matrix::new(5, 5);
        d.set_col(1, [0, 2]);
        d.set_col(2, [0, 2]);
        d.set_col(3, [1, 2, 4]);
        d.set_col(4, [0, 1, 4]);
        let res = standard_reduce(&d);
        assert_eq!(d.multiply(&res.v), res.r);
        // All nonzero columns have distinct pivots.
        let mut lows: Vec<usize> = (0..5).filter_map(|j| res.r.low(j)).collect();
        lows.sort_unstable();
        lows.dedup();
        assert_eq!(lows.len(), (0..5).filter(|&j| !res.r.is_zero_col(j)).count());
    }

    #[test]
    fn single_triangle_complex_pairs() {
        let pts: Vec<(usize, Point2)> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i, Point2::new(x, y)))
            .collect();
        let t = Triangulation::build(&pts).unwrap();
        let fc = global_alpha(&t);
        let (_, ivs) = persistence_with_representatives(&fc, 1);
        let dim0: Vec<&IntervalRep> = ivs.iter().filter(|iv| iv.dim == 0).collect();
        let dim1: Vec<&IntervalRep> = ivs.iter().filter(|iv| iv.dim == 1).collect();
        assert_eq!(dim0.len(), 3);
        assert_eq!(dim0.iter().filter(|iv| iv.death.is_infinite()).count(), 1);
        let mut finite: Vec<(f64, f64)> = dim0
            .iter()
            .filter(|iv| iv.death.is_finite())
            .map(|iv| (iv.birth, iv.death))
            .collect();
        finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(finite, vec![(0.0, 0.25), (0.0, 0.25)]);
        // The would-be loop is born and dies at 0.5: an empty interval.
        assert_eq!(dim1.len(), 1);
        assert!(dim1[0].is_empty());
        assert_eq!(dim1[0].birth, 0.5);
    }

    #[test]
    fn square_loop_representative() {
        use crate::alpha::{FilteredComplex2D, Simplex};
        let mut fc = FilteredComplex2D::new();
        for v in 0..4 {
            fc.insert(Simplex::vertex(v), 0.0);
        }
        fc.insert(Simplex::edge(0, 1), 1.0);
        fc.insert(Simplex::edge(1, 2), 1.0);
        fc.insert(Simplex::edge(2, 3), 1.0);
        fc.insert(Simplex::edge(0, 3), 2.0);
        let (fr, ivs) = persistence_with_representatives(&fc, 1);
        let dim1: Vec<&IntervalRep> = ivs.iter().filter(|iv| iv.dim == 1).collect();
        assert_eq!(dim1.len(), 1);
        assert_eq!(dim1[0].birth, 2.0);
        assert!(dim1[0].death.is_infinite());
        // Representative is the full 4-edge cycle.
        let cyc: Vec<Simplex> = dim1[0].cycle.iter().map(|&i| fr.order[i]).collect();
        assert_eq!(cyc.len(), 4);
        assert!(fr.boundary_of(&dim1[0].cycle).is_empty());
    }

    #[test]
    fn solve_chain_cases() {
        let pts: Vec<(usize, Point2)> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i, Point2::new(x, y)))
            .collect();
        let t = Triangulation::build(&pts).unwrap();
        let fc = global_alpha(&t);
        let fr = FiltrationReduction::new(&fc);
        // z = 0 -> a = 0.
        assert_eq!(fr.solve_chain(&[], 0.0), Some(vec![]));
        // z = boundary of the triangle at its value.
        let tri_idx = fr.index[&crate::alpha::Simplex::triangle(0, 1, 2)];
        let z = fr.boundary_of(&[tri_idx]);
        assert_eq!(fr.solve_chain(&z, 0.5), Some(vec![tri_idx]));
        assert_eq!(fr.solve_chain(&z, 0.49), None);
        // z = two vertices in the same component -> an edge path.
        let v0 = fr.index[&crate::alpha::Simplex::vertex(0)];
        let v2 = fr.index[&crate::alpha::Simplex::vertex(2)];
        let mut z = vec![v0, v2];
        z.sort_unstable();
        let a = fr.solve_chain(&z, 0.25).unwrap();
        assert_eq!(fr.boundary_of(&a), z);
        assert_eq!(fr.solve_chain(&z, -0.1), None);
    }

    /// A second, different (but valid) elimination strategy: exhaustive
    /// reduction that also clears entries above pivots. Pairs must agree.
    fn exhaustive_pairs(d: &SparseZ2Matrix) -> Vec<(usize, Option<usize>)> {
        let mut r = d.clone();
        let n = r.ncols();
        let mut pivot_col: HashMap<usize, usize> = HashMap::new();
        for j in 0..n {
            while let Some(piv) = r.low(j) {
                match pivot_col.get(&piv) {
                    Some(&k) => r.add_col(j, k),
                    None => {
                        pivot_col.insert(piv, j);
                        break;
                    }
                }
            }
            // Extra (still valid) work: fully reduce every entry that is the
            // pivot of an earlier column.
            if r.low(j).is_some() {
                loop {
                    let extra: Vec<usize> = r
                        .col(j)
                        .iter()
                        .rev()
                        .skip(1)
                        .filter(|i| pivot_col.get(i).is_some_and(|&k| k != j))
                        .map(|&i| pivot_col[&i])
                        .collect();
                    if extra.is_empty() {
                        break;
                    }
                    for k in extra {
                        r.add_col(j, k);
                    }
                }
            }
        }
        let mut pairs = Vec::new();
        for j in 0..n {
            if let Some(piv) = r.low(j) {
                pairs.push((piv, Some(j)));
            } else if !pivot_col.contains_key(&j) {
                pairs.push((j, None));
            }
        }
        pairs.sort_unstable();
        pairs
    }

    #[test]
    fn pairs_agree_with_independent_reducer_on_random_alpha_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(usize, Point2)> = (0..30)
            .map(|i| (i, Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))))
            .collect();
        let t = Triangulation::build(&pts).unwrap();
        let fc = global_alpha(&t);
        let fr = FiltrationReduction::new(&fc);
        let d = FiltrationReduction::boundary_matrix(&fr.order, &fr.index);
        let mut pairs: Vec<(usize, Option<usize>)> = Vec::new();
        for j in 0..fr.order.len() {
            if let Some(piv) = fr.red.r.low(j) {
                pairs.push((piv, Some(j)));
            } else if !fr.red.pivot_col.contains_key(&j) {
                pairs.push((j, None));
            }
        }
        pairs.sort_unstable();
        assert_eq!(pairs, exhaustive_pairs(&d));
        assert_eq!(d.multiply(&fr.red.v), fr.red.r);
    }

    #[test]
    fn representatives_are_cycles_and_die_on_schedule() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<(usize, Point2)> = (0..25)
            .map(|i| (i, Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))))
            .collect();
        let t = Triangulation::build(&pts).unwrap();
        let fc = global_alpha(&t);
        let (fr, ivs) = persistence_with_representatives(&fc, 1);
        for iv in ivs.iter().filter(|iv| !iv.is_empty()) {
            assert!(fr.boundary_of(&iv.cycle).is_empty());
            if iv.death.is_finite() {
                // Not a boundary just before death, boundary at death.
                assert!(fr.solve_chain(&iv.cycle, iv.death).is_some());
                let before = iv.birth + (iv.death - iv.birth) * 0.5;
                assert!(fr.solve_chain(&iv.cycle, before).is_none());
            }
        }
    }
}
