//! Barcode bases of persistence modules, matrices of persistence morphisms,
//! image/kernel bases, and the box-Gauss quotient reduction.
//!
//! Everything here works on intervals `[a, b)` plus Z2 coordinate columns; no
//! geometry is involved. The two orders on a barcode basis matter a great
//! deal: column reductions are only valid when the columns carry the standard
//! order (births ascending) and the rows the endpoint order (deaths
//! ascending), because then every leftward addition is automatically
//! admissible for the filtration.

use crate::z2matrix::{xor_sorted, SparseZ2Matrix};
use std::collections::HashMap;
use thiserror::Error;

/// Half-open interval `[birth, death)`; `death` may be infinite. Empty
/// intervals (`birth == death`) are allowed internally and filtered at output
/// boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub birth: f64,
    pub death: f64,
}

impl Interval {
    pub fn new(birth: f64, death: f64) -> Self {
        debug_assert!(birth <= death);
        Interval { birth, death }
    }

    pub fn is_empty(&self) -> bool {
        self.birth == self.death
    }

    pub fn contains(&self, t: f64) -> bool {
        self.birth <= t && t < self.death
    }
}

/// Order tag of a [`BarcodeBasis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Births ascending; ties broken by death descending.
    Standard,
    /// Deaths ascending; ties broken by birth ascending.
    Endpoint,
    Unordered,
}

/// An ordered list of interval generators together with representative
/// coordinates in some ambient space (chain coordinates or a previous basis).
/// Column `j` of `reps` belongs to `intervals[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarcodeBasis {
    pub intervals: Vec<Interval>,
    pub reps: SparseZ2Matrix,
    pub order: Order,
}

impl BarcodeBasis {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

fn standard_key(a: &Interval, b: &Interval) -> std::cmp::Ordering {
    a.birth
        .total_cmp(&b.birth)
        .then(b.death.total_cmp(&a.death))
}

fn endpoint_key(a: &Interval, b: &Interval) -> std::cmp::Ordering {
    a.death
        .total_cmp(&b.death)
        .then(a.birth.total_cmp(&b.birth))
}

/// True if the list already satisfies the requested order.
pub fn is_sorted(intervals: &[Interval], order: Order) -> bool {
    let key = match order {
        Order::Standard => standard_key,
        Order::Endpoint => endpoint_key,
        Order::Unordered => return true,
    };
    intervals
        .windows(2)
        .all(|w| key(&w[0], &w[1]) != std::cmp::Ordering::Greater)
}

/// Stable sort into the requested order. Returns the sorted basis and the
/// permutation `perm` with `sorted[i] = original[perm[i]]`; equal intervals
/// keep their original relative order so the permutation is reproducible.
pub fn sort_basis(basis: &BarcodeBasis, order: Order) -> (BarcodeBasis, Vec<usize>) {
    let mut perm: Vec<usize> = (0..basis.len()).collect();
    match order {
        Order::Standard => {
            perm.sort_by(|&i, &j| standard_key(&basis.intervals[i], &basis.intervals[j]))
        }
        Order::Endpoint => {
            perm.sort_by(|&i, &j| endpoint_key(&basis.intervals[i], &basis.intervals[j]))
        }
        Order::Unordered => {}
    }
    let mut reps = SparseZ2Matrix::new(basis.reps.nrows, 0);
    let mut intervals = Vec::with_capacity(basis.len());
    for &i in &perm {
        intervals.push(basis.intervals[i]);
        reps.push_col(basis.reps.col(i).iter().copied());
    }
    (
        BarcodeBasis {
            intervals,
            reps,
            order,
        },
        perm,
    )
}

/// Matrix of a persistence morphism `f: V -> W` in bases A (columns) and B
/// (rows). A nonzero entry `(β, α)` requires `a_β ≤ a_α ≤ b_β ≤ b_α`.
#[derive(Debug, Clone)]
pub struct MorphismMatrix {
    pub matrix: SparseZ2Matrix,
    pub row_intervals: Vec<Interval>,
    pub col_intervals: Vec<Interval>,
}

impl MorphismMatrix {
    /// Checks the support condition on every nonzero entry.
    pub fn support_condition_holds(&self) -> bool {
        (0..self.matrix.ncols()).all(|j| {
            let a = &self.col_intervals[j];
            self.matrix.col(j).iter().all(|&i| {
                let b = &self.row_intervals[i];
                b.birth <= a.birth && a.birth <= b.death && b.death <= a.death
            })
        })
    }

    /// The matrix of `f_t`: entries whose row and column are both alive at t.
    pub fn at(&self, t: f64) -> SparseZ2Matrix {
        let mut m = SparseZ2Matrix::new(self.matrix.nrows, 0);
        for j in 0..self.matrix.ncols() {
            if self.col_intervals[j].contains(t) {
                m.push_col(
                    self.matrix
                        .col(j)
                        .iter()
                        .copied()
                        .filter(|&i| self.row_intervals[i].contains(t)),
                );
            } else {
                m.push_col([]);
            }
        }
        m
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    /// An embedded domain column could not be reduced to zero, so the given
    /// chains are not cycles of the codomain (or the embedding is wrong).
    #[error("embedded cycle {0} does not reduce to zero in the codomain")]
    NotACycleMap(usize),
    /// Reduction would need a column whose filtration value exceeds the value
    /// of the column being reduced.
    #[error("inadmissible reduction: needs value {needed} but column has value {value}")]
    Inadmissible { needed: f64, value: f64 },
    #[error("basis not in the required {0:?} order")]
    WrongOrder(Order),
}

/// Computes the matrix `F` of the persistence morphism induced by an
/// inclusion, working at chain level in the codomain.
///
/// `im_cols` are boundary columns of the codomain (spanning `Im d_{n+1}`) with
/// their filtration values; `codomain` is a barcode basis whose
/// representatives are codomain chains (standard order, value = birth);
/// `domain_chains`/`domain_births` give each domain generator's cycle
/// representative pushed into codomain chain coordinates (standard order).
///
/// The block matrix `(Im | Cycles | embedded)` is reduced left to right;
/// each embedded column may only use pivot columns with value less than or
/// equal to its own birth. Tracking which cycle columns were used yields `F`.
pub fn associated_matrix(
    im_cols: &[(Vec<usize>, f64)],
    codomain: &BarcodeBasis,
    domain_chains: &SparseZ2Matrix,
    domain_births: &[f64],
) -> Result<SparseZ2Matrix, AlgebraError> {
    if !is_sorted(&codomain.intervals, Order::Standard) {
        return Err(AlgebraError::WrongOrder(Order::Standard));
    }
    let nrows = codomain.reps.nrows;
    // Joint (value, block) order: images before cycles at equal values, each
    // block keeping its internal order. `kind` 0 = image, 1 = cycle.
    let mut cols: Vec<(f64, u8, usize)> = im_cols
        .iter()
        .enumerate()
        .map(|(i, &(_, v))| (v, 0u8, i))
        .chain(
            codomain
                .intervals
                .iter()
                .enumerate()
                .map(|(i, iv)| (iv.birth, 1u8, i)),
        )
        .collect();
    cols.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut block = SparseZ2Matrix::new(nrows, 0);
    for &(_, kind, i) in &cols {
        let data = if kind == 0 {
            im_cols[i].0.clone()
        } else {
            codomain.reps.col(i).to_vec()
        };
        block.push_col(data);
    }
    // Left-to-right reduction with usage tracking. Prefix reductions only add
    // earlier columns, whose values are less than or equal, so each reduced
    // column keeps its own filtration value.
    let mut v = SparseZ2Matrix::identity(block.ncols());
    let mut pivot: HashMap<usize, usize> = HashMap::new();
    for j in 0..block.ncols() {
        while let Some(r) = block.low(j) {
            match pivot.get(&r) {
                Some(&k) => {
                    block.add_col(j, k);
                    v.add_col(j, k);
                }
                None => {
                    pivot.insert(r, j);
                    break;
                }
            }
        }
    }

    let mut f = SparseZ2Matrix::new(codomain.len(), 0);
    for (a, birth) in (0..domain_chains.ncols()).zip(domain_births) {
        let mut z = domain_chains.col(a).to_vec();
        let mut usage: Vec<usize> = Vec::new();
        while let Some(r) = z.last().copied() {
            let Some(&k) = pivot.get(&r) else {
                return Err(AlgebraError::NotACycleMap(a));
            };
            if cols[k].0 > *birth {
                return Err(AlgebraError::Inadmissible {
                    needed: cols[k].0,
                    value: *birth,
                });
            }
            z = xor_sorted(&z, block.col(k));
            usage = xor_sorted(&usage, &[k]);
        }
        // Expand usage through the reduction log and keep the cycle-block
        // components only; boundary usage is invisible in homology.
        let mut total: Vec<usize> = Vec::new();
        for &k in &usage {
            total = xor_sorted(&total, v.col(k));
        }
        f.push_col(total.iter().filter_map(|&k| {
            let (_, kind, i) = cols[k];
            (kind == 1).then_some(i)
        }));
    }
    Ok(f)
}

/// Image and kernel bases of a persistence morphism from its matrix.
///
/// Requires columns in standard order and rows in endpoint order. The matrix
/// is column-reduced left to right; because of the orders, every addition is
/// admissible. Whenever a column of birth `a` is changed, entries in rows
/// that die at or before `a` are dropped — those generators no longer exist
/// at `a`.
///
/// Image intervals pair each surviving column's birth with the death of its
/// pivot row; representatives are the reduced columns (codomain
/// coordinates). Kernel intervals come from the tracked preimage matrix `P`:
/// a column that became zero contributes `[a_j, b_j)`, and a nonzero column
/// whose pivot dies before the column does contributes `[b_pivot, b_j)`; in
/// both cases the representative is the `P` column (domain coordinates).
pub fn image_kernel(f: &MorphismMatrix) -> Result<(BarcodeBasis, BarcodeBasis), AlgebraError> {
    let (image, kernel, _) = image_kernel_with_preimages(f)?;
    Ok((image, kernel))
}

/// [`image_kernel`] that also returns a preimage (domain coordinates) for
/// every image generator, column-aligned with the image basis.
pub fn image_kernel_with_preimages(
    f: &MorphismMatrix,
) -> Result<(BarcodeBasis, BarcodeBasis, SparseZ2Matrix), AlgebraError> {
    if !is_sorted(&f.col_intervals, Order::Standard) {
        return Err(AlgebraError::WrongOrder(Order::Standard));
    }
    if !is_sorted(&f.row_intervals, Order::Endpoint) {
        return Err(AlgebraError::WrongOrder(Order::Endpoint));
    }
    let mut r = f.matrix.clone();
    let mut p = SparseZ2Matrix::identity(r.ncols());
    let mut pivot: HashMap<usize, usize> = HashMap::new();
    for j in 0..r.ncols() {
        let birth = f.col_intervals[j].birth;
        loop {
            // Entries in rows already dead at this column's birth carry no
            // information and must not become pivots.
            while let Some(row) = r.low(j) {
                if f.row_intervals[row].death <= birth {
                    r.clear_entry(row, j);
                } else {
                    break;
                }
            }
            let Some(row) = r.low(j) else { break };
            match pivot.get(&row) {
                Some(&k) => {
                    r.add_col(j, k);
                    p.add_col(j, k);
                }
                None => {
                    pivot.insert(row, j);
                    break;
                }
            }
        }
    }

    let mut image = BarcodeBasis {
        intervals: Vec::new(),
        reps: SparseZ2Matrix::new(f.matrix.nrows, 0),
        order: Order::Unordered,
    };
    let mut kernel = BarcodeBasis {
        intervals: Vec::new(),
        reps: SparseZ2Matrix::new(r.ncols(), 0),
        order: Order::Unordered,
    };
    let mut preimages = SparseZ2Matrix::new(r.ncols(), 0);
    for j in 0..r.ncols() {
        let col = f.col_intervals[j];
        match r.low(j) {
            Some(row) => {
                let pivot_death = f.row_intervals[row].death;
                if pivot_death > col.birth {
                    image.intervals.push(Interval::new(col.birth, pivot_death));
                    image.reps.push_col(r.col(j).iter().copied());
                    preimages.push_col(p.col(j).iter().copied());
                }
                if pivot_death < col.death {
                    kernel.intervals.push(Interval::new(pivot_death, col.death));
                    kernel.reps.push_col(p.col(j).iter().copied());
                }
            }
            None => {
                kernel.intervals.push(col);
                kernel.reps.push_col(p.col(j).iter().copied());
            }
        }
    }
    kernel.intervals.retain_mut_with_reps(&mut kernel.reps);
    Ok((image, kernel, preimages))
}

trait RetainWithReps {
    fn retain_mut_with_reps(&mut self, reps: &mut SparseZ2Matrix);
}

impl RetainWithReps for Vec<Interval> {
    /// Drops empty intervals together with their representative columns.
    fn retain_mut_with_reps(&mut self, reps: &mut SparseZ2Matrix) {
        let keep: Vec<usize> = (0..self.len()).filter(|&j| !self[j].is_empty()).collect();
        if keep.len() == self.len() {
            return;
        }
        let mut new_reps = SparseZ2Matrix::new(reps.nrows, 0);
        let mut new_iv = Vec::with_capacity(keep.len());
        for &j in &keep {
            new_iv.push(self[j]);
            new_reps.push_col(reps.col(j).iter().copied());
        }
        *self = new_iv;
        *reps = new_reps;
    }
}

/// Output of [`box_gauss_reduce`].
#[derive(Debug, Clone)]
pub struct BoxGaussResult {
    pub reduced: SparseZ2Matrix,
    /// Final (possibly raised) column births.
    pub lbirths: Vec<f64>,
    /// Combination log: column `j` of the input matrix now holds the sum of
    /// the original columns listed in `additions.col(j)`.
    pub additions: SparseZ2Matrix,
    /// Quotient intervals, one per trailing column that survives; paired with
    /// the trailing column's index in the input matrix.
    pub intervals: Vec<(usize, Interval)>,
}

/// Quotient of a persistence module by a submodule, by the box-Gauss sweep.
///
/// The first `n_relations` columns span the submodule; the trailing columns
/// are the generators being quotiented, indexed in standard order. Rows are
/// in endpoint order with deaths `ldeaths`; `lbirths` records every column's
/// birth. Sweeping rows bottom to top, the leftmost column with its pivot on
/// the current row is added into every other column sharing that pivot; the
/// target's birth is raised to the maximum of the two, and entries in rows
/// that die at or before the new birth are zeroed.
///
/// A trailing column that stays nonzero yields `[original birth, death of its
/// pivot row)`; one reduced to zero yields `[original birth, final birth)` —
/// it was absorbed by the relations at the moment its birth got raised to.
/// Empty intervals are dropped from `intervals` (the reduced matrix and
/// birth lists still cover every column).
pub fn box_gauss_reduce(
    matrix: &SparseZ2Matrix,
    ldeaths: &[f64],
    lbirths: &[f64],
    n_relations: usize,
) -> BoxGaussResult {
    assert_eq!(matrix.nrows, ldeaths.len());
    assert_eq!(matrix.ncols(), lbirths.len());
    let mut m = matrix.clone();
    let mut lb = lbirths.to_vec();
    let mut additions = SparseZ2Matrix::identity(m.ncols());
    let drop_dead = |m: &mut SparseZ2Matrix, j: usize, birth: f64| {
        let dead: Vec<usize> = m
            .col(j)
            .iter()
            .copied()
            .filter(|&r| ldeaths[r] <= birth)
            .collect();
        for r in dead {
            m.clear_entry(r, j);
        }
    };
    for j in 0..m.ncols() {
        drop_dead(&mut m, j, lb[j]);
    }
    for row in (0..m.nrows).rev() {
        let sharing: Vec<usize> = (0..m.ncols()).filter(|&j| m.low(j) == Some(row)).collect();
        let Some((&piv, rest)) = sharing.split_first() else {
            continue;
        };
        for &j in rest {
            m.add_col(j, piv);
            additions.add_col(j, piv);
            lb[j] = lb[j].max(lb[piv]);
            drop_dead(&mut m, j, lb[j]);
        }
    }
    let mut intervals = Vec::new();
    for j in n_relations..m.ncols() {
        let iv = match m.low(j) {
            Some(row) => Interval::new(lbirths[j], ldeaths[row]),
            None => Interval::new(lbirths[j], lb[j]),
        };
        if !iv.is_empty() {
            intervals.push((j, iv));
        }
    }
    BoxGaussResult {
        reduced: m,
        lbirths: lb,
        additions,
        intervals,
    }
}

/// Barcode of a finitely presented persistence module, paired with the
/// generator each interval is read off from.
///
/// Generator `i` is born at `rows[i].birth` and is killed outright at
/// `rows[i].death` (pass an infinite death for a generator with no expiry).
/// Each column of `relations` is a combination of generators, switched on
/// from the matching entry of `rel_births` onward.
///
/// Internally the deaths become one extra relation column each, so the
/// module is the cokernel of a map of free modules. Generators are ordered
/// by birth (ties: longer-lived first), columns by birth, and a plain
/// left-to-right column reduction pairs each surviving pivot row with the
/// column that cleared it: pivot `(i, j)` reads as `[birth of i, birth of
/// j)`, an unpaired generator as `[birth, inf)`. Column additions only ever
/// flow rightward, so every operation is valid from the target's birth on
/// and the pairing is the barcode. Empty intervals are dropped.
pub fn presentation_barcode(
    rows: &[Interval],
    relations: &SparseZ2Matrix,
    rel_births: &[f64],
) -> Vec<(usize, Interval)> {
    assert_eq!(relations.nrows, rows.len());
    assert_eq!(relations.ncols(), rel_births.len());
    let mut row_order: Vec<usize> = (0..rows.len()).collect();
    row_order.sort_by(|&a, &b| {
        rows[a]
            .birth
            .total_cmp(&rows[b].birth)
            .then(rows[b].death.total_cmp(&rows[a].death))
            .then(a.cmp(&b))
    });
    let mut pos = vec![0; rows.len()];
    for (i, &orig) in row_order.iter().enumerate() {
        pos[orig] = i;
    }

    // (birth, content in sorted row positions); relations first on ties so
    // the readout matches the quotient convention for simultaneous events.
    let mut cols: Vec<(f64, Vec<usize>)> = Vec::new();
    for j in 0..relations.ncols() {
        let mut c: Vec<usize> = relations.col(j).iter().map(|&r| pos[r]).collect();
        c.sort_unstable();
        cols.push((rel_births[j], c));
    }
    for (i, iv) in rows.iter().enumerate() {
        if iv.death.is_finite() {
            cols.push((iv.death, vec![pos[i]]));
        }
    }
    cols.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut owner: Vec<Option<usize>> = vec![None; rows.len()];
    let mut paired_at: Vec<Option<f64>> = vec![None; rows.len()];
    let mut reduced: Vec<Vec<usize>> = Vec::with_capacity(cols.len());
    for (j, (birth, col)) in cols.iter().enumerate() {
        let mut c = col.clone();
        while let Some(&low) = c.last() {
            match owner[low] {
                Some(k) => c = xor_sorted(&c, &reduced[k]),
                None => {
                    owner[low] = Some(j);
                    paired_at[low] = Some(*birth);
                    break;
                }
            }
        }
        reduced.push(c);
    }

    let mut out = Vec::new();
    for &orig in &row_order {
        let death = paired_at[pos[orig]].unwrap_or(f64::INFINITY);
        let iv = Interval::new(rows[orig].birth, death);
        if !iv.is_empty() {
            out.push((orig, iv));
        }
    }
    out
}

/// A persistence vector: an interval together with coordinates in some fixed
/// barcode basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceVector {
    pub interval: Interval,
    pub coords: Vec<usize>,
}

/// Barcode sum: coordinate-wise Z2 sum, defined on the overlap of the two
/// intervals.
pub fn barcode_sum(v1: &PersistenceVector, v2: &PersistenceVector) -> PersistenceVector {
    let birth = v1.interval.birth.max(v2.interval.birth);
    let death = v1.interval.death.min(v2.interval.death).max(birth);
    PersistenceVector {
        interval: Interval::new(birth, death),
        coords: xor_sorted(&v1.coords, &v2.coords),
    }
}

/// The operator `1_s`: truncates the birth to `max(s, birth)` leaving the
/// coordinates untouched.
pub fn cutoff(s: f64, v: &PersistenceVector) -> PersistenceVector {
    let birth = v.interval.birth.max(s);
    PersistenceVector {
        interval: Interval::new(birth, v.interval.death.max(birth)),
        coords: v.coords.clone(),
    }
}

/// Solves `z = Σ basis.col(j)` over the columns flagged admissible; returns
/// the sorted indices of the columns used, or `None` if `z` is outside their
/// span.
pub fn solve_in_span(
    basis: &SparseZ2Matrix,
    admissible: &[bool],
    z: &[usize],
) -> Option<Vec<usize>> {
    let cols: Vec<usize> = (0..basis.ncols()).filter(|&j| admissible[j]).collect();
    let mut echelon = SparseZ2Matrix::new(basis.nrows, 0);
    let mut usage = SparseZ2Matrix::new(basis.ncols(), 0);
    for &j in &cols {
        echelon.push_col(basis.col(j).iter().copied());
        usage.push_col([j]);
    }
    let mut pivot: HashMap<usize, usize> = HashMap::new();
    for j in 0..echelon.ncols() {
        while let Some(r) = echelon.low(j) {
            match pivot.get(&r) {
                Some(&k) => {
                    echelon.add_col(j, k);
                    usage.add_col(j, k);
                }
                None => {
                    pivot.insert(r, j);
                    break;
                }
            }
        }
    }
    let mut z = z.to_vec();
    let mut used: Vec<usize> = Vec::new();
    while let Some(r) = z.last().copied() {
        let &k = pivot.get(&r)?;
        z = xor_sorted(&z, echelon.col(k));
        used = xor_sorted(&used, usage.col(k));
    }
    Some(used)
}

/// [`solve_in_span`] restricted to the basis columns alive at `t`.
pub fn coordinates_in_basis(
    basis: &SparseZ2Matrix,
    intervals: &[Interval],
    z: &[usize],
    t: f64,
) -> Option<Vec<usize>> {
    let admissible: Vec<bool> = intervals.iter().map(|iv| iv.contains(t)).collect();
    solve_in_span(basis, &admissible, z)
}
