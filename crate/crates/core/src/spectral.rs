//! The Mayer-Vietoris spectral sequence of the cover.
//!
//! The cover pieces and their intersections form a double complex: vertical
//! differentials are the simplicial boundaries inside each piece, horizontal
//! differentials alternate-sum (over Z2: plain sum) the inclusions into the
//! facets of the nerve cell. The first page stores the persistence of every
//! piece; the second page takes homology of the horizontal differential `d1`.
//! For a 2D alpha complex the sequence collapses at the second page whenever
//! the terms checked by [`collapse_check`] carry no infinite interval, and the
//! remaining work is the extension problem joining `E2_{1,0}` classes onto
//! `E2_{0,1}` ones.
//!
//! Everything here is plain linear algebra over barcode bases; the actual
//! matrix mechanics live in [`crate::barcode_algebra`].

use crate::alpha::{FilteredComplex2D, Simplex};
use crate::barcode_algebra::{
    associated_matrix, box_gauss_reduce, image_kernel_with_preimages, presentation_barcode,
    sort_basis, AlgebraError,
    BarcodeBasis, Interval, MorphismMatrix, Order,
};
use crate::cover::{IntersectionSet, SubcomplexK};
use crate::z2matrix::{
    persistence_with_representatives, xor_sorted, FiltrationReduction, SparseZ2Matrix,
};
use thiserror::Error;

/// One nerve cell together with the filtration of its piece of the cover.
#[derive(Debug, Clone)]
pub struct CellComplex {
    /// Sorted zone tuple.
    pub cell: Vec<usize>,
    pub filtration: FilteredComplex2D,
}

/// Nonempty nerve cells by dimension, each list in lexicographic order of the
/// zone tuples. Pairwise and triple intersections are all the sequence ever
/// consumes: no needed term involves deeper cells.
#[derive(Debug, Clone)]
pub struct CoverInput {
    pub cells: [Vec<CellComplex>; 3],
}

/// Assembles the spectral sequence input from the cover subcomplexes, their
/// intersections and the reconciled filtration values (which agree across
/// processors, so a single value map serves every cell).
pub fn cover_input(
    ks: &[SubcomplexK],
    inter: &IntersectionSet,
    values: &FilteredComplex2D,
) -> CoverInput {
    let mut cells: [Vec<CellComplex>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for k in ks {
        if k.simplices.is_empty() {
            continue;
        }
        cells[0].push(CellComplex {
            cell: vec![k.zone],
            filtration: values.restrict_to(k.simplices.iter()),
        });
    }
    for (&(i, j), set) in &inter.pairs {
        if set.is_empty() {
            continue;
        }
        cells[1].push(CellComplex {
            cell: vec![i, j],
            filtration: values.restrict_to(set.iter()),
        });
    }
    for (&(i, j, l), set) in &inter.triples {
        if set.is_empty() {
            continue;
        }
        cells[2].push(CellComplex {
            cell: vec![i, j, l],
            filtration: values.restrict_to(set.iter()),
        });
    }
    CoverInput { cells }
}

/// E1 summand of one nerve cell: the reduction of its complex plus the
/// persistence bases in dimensions 0 and 1 (standard order, representatives
/// as chain coordinates into `fr.order`). Dimension 2 vanishes: subcomplexes
/// of a planar triangulation have no 2-cycles.
#[derive(Debug, Clone)]
pub struct Summand {
    pub cell: Vec<usize>,
    pub fr: FiltrationReduction,
    pub basis: [BarcodeBasis; 2],
}

/// First page of the sequence: summands indexed by nerve cells, and the
/// horizontal differentials as block matrices with rows and columns in
/// concatenated summand order (no global sorting yet).
#[derive(Debug)]
pub struct FirstPage {
    pub summands: [Vec<Summand>; 3],
    /// `d1[p-1][q]` is `E1_{p,q} -> E1_{p-1,q}` for `p` = 1, 2.
    pub d1: [[MorphismMatrix; 2]; 2],
    /// `offsets[p][q][i]`: first concatenated index of summand `i` in
    /// `E1_{p,q}`.
    pub offsets: [[Vec<usize>; 2]; 3],
}

impl FirstPage {
    /// Concatenated interval list of `E1_{p,q}`.
    pub fn e1_intervals(&self, p: usize, q: usize) -> Vec<Interval> {
        self.summands[p]
            .iter()
            .flat_map(|s| s.basis[q].intervals.iter().copied())
            .collect()
    }

    pub fn e1_len(&self, p: usize, q: usize) -> usize {
        self.summands[p].iter().map(|s| s.basis[q].len()).sum()
    }

    /// Splits a concatenated `E1_{p,q}` index into (summand, local generator).
    pub fn locate(&self, p: usize, q: usize, global: usize) -> (usize, usize) {
        let offs = &self.offsets[p][q];
        let i = match offs.binary_search(&global) {
            Ok(i) => {
                // Skip summands with no generators in this dimension; they
                // share the offset with their successor.
                let mut i = i;
                while self.summands[p][i].basis[q].is_empty() {
                    i += 1;
                }
                i
            }
            Err(i) => i - 1,
        };
        (i, global - offs[i])
    }
}

/// Computes the E1 summand of one nerve cell: runs the reduction of the
/// cell's filtered complex and extracts the persistence bases. In the
/// distributed runtime each worker does this for the cells it owns.
pub fn cell_summand(cc: &CellComplex) -> Summand {
    let (fr, ivs) = persistence_with_representatives(&cc.filtration, 1);
    let n = fr.order.len();
    let mut basis = [
        BarcodeBasis {
            intervals: Vec::new(),
            reps: SparseZ2Matrix::new(n, 0),
            order: Order::Unordered,
        },
        BarcodeBasis {
            intervals: Vec::new(),
            reps: SparseZ2Matrix::new(n, 0),
            order: Order::Unordered,
        },
    ];
    for iv in &ivs {
        if iv.is_empty() {
            continue;
        }
        basis[iv.dim]
            .intervals
            .push(Interval::new(iv.birth, iv.death));
        basis[iv.dim].reps.push_col(iv.cycle.iter().copied());
    }
    for b in &mut basis {
        let (sorted, _) = sort_basis(b, Order::Standard);
        *b = sorted;
    }
    Summand {
        cell: cc.cell.clone(),
        fr,
        basis,
    }
}

/// Boundary columns of the reduction whose pivots sit in dimension `q`; these
/// span `Im d_{q+1}` together with the value at which each boundary appears.
pub fn im_cols(fr: &FiltrationReduction, q: usize) -> Vec<(Vec<usize>, f64)> {
    (0..fr.order.len())
        .filter_map(|j| {
            fr.red.r.low(j).and_then(|i| {
                (fr.dims[i] == q).then(|| (fr.red.r.col(j).to_vec(), fr.values[j]))
            })
        })
        .collect()
}

pub(crate) fn is_facet(small: &[usize], big: &[usize]) -> bool {
    small.len() + 1 == big.len() && small.iter().all(|v| big.contains(v))
}

/// One block of `d1`: the associated matrix of the inclusion of `sigma`'s
/// complex into its facet `tau`'s complex in dimension `q`, with rows indexed
/// by `tau`'s basis and columns by `sigma`'s. `tau_im` must be
/// `im_cols(&tau.fr, q)`. In the distributed runtime the worker owning the
/// codomain computes each block.
pub fn inclusion_block(
    tau: &Summand,
    tau_im: &[(Vec<usize>, f64)],
    sigma: &Summand,
    q: usize,
) -> Result<SparseZ2Matrix, AlgebraError> {
    let mut chains = SparseZ2Matrix::new(tau.fr.order.len(), 0);
    for c in 0..sigma.basis[q].len() {
        chains.push_col(
            sigma.basis[q]
                .reps
                .col(c)
                .iter()
                .map(|&idx| tau.fr.index[&sigma.fr.order[idx]]),
        );
    }
    let births: Vec<f64> = sigma.basis[q].intervals.iter().map(|iv| iv.birth).collect();
    associated_matrix(tau_im, &tau.basis[q], &chains, &births)
}

/// Assembles a first page from precomputed summands and `d1` blocks, keyed by
/// `(p, sigma index, tau index, q)` with rows in the codomain summand's local
/// basis. Missing keys are zero blocks. Summand representatives and
/// reductions are not consulted, so cells whose chain-level data lives on
/// another worker may carry empty ones.
pub fn assemble_first_page(
    summands: [Vec<Summand>; 3],
    blocks: &std::collections::BTreeMap<(usize, usize, usize, usize), SparseZ2Matrix>,
) -> FirstPage {
    let mut offsets: [[Vec<usize>; 2]; 3] = Default::default();
    for p in 0..3 {
        for q in 0..2 {
            let mut acc = 0;
            for s in &summands[p] {
                offsets[p][q].push(acc);
                acc += s.basis[q].len();
            }
        }
    }
    let build = |p: usize, q: usize| -> MorphismMatrix {
        let taus = &summands[p - 1];
        let sigmas = &summands[p];
        let nrows: usize = taus.iter().map(|t| t.basis[q].len()).sum();
        let mut matrix = SparseZ2Matrix::new(nrows, 0);
        for (si, sigma) in sigmas.iter().enumerate() {
            for c in 0..sigma.basis[q].len() {
                let mut col: Vec<usize> = Vec::new();
                for ti in 0..taus.len() {
                    if let Some(f) = blocks.get(&(p, si, ti, q)) {
                        col.extend(f.col(c).iter().map(|&r| offsets[p - 1][q][ti] + r));
                    }
                }
                matrix.push_col(col);
            }
        }
        MorphismMatrix {
            matrix,
            row_intervals: taus
                .iter()
                .flat_map(|t| t.basis[q].intervals.iter().copied())
                .collect(),
            col_intervals: sigmas
                .iter()
                .flat_map(|s| s.basis[q].intervals.iter().copied())
                .collect(),
        }
    };
    let d1 = [
        [build(1, 0), build(1, 1)],
        [build(2, 0), build(2, 1)],
    ];
    FirstPage {
        summands,
        d1,
        offsets,
    }
}

/// Computes the first page from the cover input. Each `d1` block is the
/// associated matrix of the inclusion of a cell's complex into a facet's
/// complex; blocks between non-incident cells are zero by construction.
pub fn first_page(input: &CoverInput) -> Result<FirstPage, AlgebraError> {
    let summands: [Vec<Summand>; 3] = [
        input.cells[0].iter().map(cell_summand).collect(),
        input.cells[1].iter().map(cell_summand).collect(),
        input.cells[2].iter().map(cell_summand).collect(),
    ];
    // No support-condition check on the blocks: a class pushed into a facet's
    // complex may survive past the source generator's death, so entries on
    // longer-lived rows are legitimate.
    let mut blocks = std::collections::BTreeMap::new();
    for p in 1..3 {
        for q in 0..2 {
            let taus = &summands[p - 1];
            let tau_ims: Vec<Vec<(Vec<usize>, f64)>> =
                taus.iter().map(|t| im_cols(&t.fr, q)).collect();
            for (si, sigma) in summands[p].iter().enumerate() {
                for (ti, tau) in taus.iter().enumerate() {
                    if !is_facet(&tau.cell, &sigma.cell) {
                        continue;
                    }
                    blocks.insert((p, si, ti, q), inclusion_block(tau, &tau_ims[ti], sigma, q)?);
                }
            }
        }
    }
    Ok(assemble_first_page(summands, &blocks))
}

/// Sorted coordinate frame of one `E1_{p,q}` term: the concatenated interval
/// list in endpoint order (used for rows) and in standard order (used for
/// columns), with the permutations back to concatenated indices.
struct Frame {
    endpoint: Vec<Interval>,
    /// `endpoint[i]` is the concatenated generator `row_perm[i]`.
    row_perm: Vec<usize>,
    inv_row: Vec<usize>,
    std_intervals: Vec<Interval>,
    std_perm: Vec<usize>,
}

fn frame(intervals: Vec<Interval>) -> Frame {
    let base = BarcodeBasis {
        reps: SparseZ2Matrix::new(0, intervals.len()),
        intervals,
        order: Order::Unordered,
    };
    let (e, row_perm) = sort_basis(&base, Order::Endpoint);
    let (s, std_perm) = sort_basis(&base, Order::Standard);
    let mut inv_row = vec![0; row_perm.len()];
    for (i, &o) in row_perm.iter().enumerate() {
        inv_row[o] = i;
    }
    Frame {
        endpoint: e.intervals,
        row_perm,
        inv_row,
        std_intervals: s.intervals,
        std_perm,
    }
}

/// Rewrites an unsorted block morphism into standard-order columns and
/// endpoint-order rows, as required by the image/kernel computation.
fn sorted_morphism(m: &MorphismMatrix, dom: &Frame, cod: &Frame) -> MorphismMatrix {
    let mut matrix = SparseZ2Matrix::new(cod.endpoint.len(), 0);
    for &oc in &dom.std_perm {
        matrix.push_col(m.matrix.col(oc).iter().map(|&r| cod.inv_row[r]));
    }
    MorphismMatrix {
        matrix,
        row_intervals: cod.endpoint.clone(),
        col_intervals: dom.std_intervals.clone(),
    }
}

/// Converts a kernel basis (coordinates over the sorted domain columns) into
/// the domain's endpoint frame and standard order.
fn kernel_in_ambient(ker: &BarcodeBasis, dom: &Frame) -> BarcodeBasis {
    let mut reps = SparseZ2Matrix::new(dom.endpoint.len(), 0);
    for j in 0..ker.len() {
        reps.push_col(
            ker.reps
                .col(j)
                .iter()
                .map(|&k| dom.inv_row[dom.std_perm[k]]),
        );
    }
    let base = BarcodeBasis {
        intervals: ker.intervals.clone(),
        reps,
        order: Order::Unordered,
    };
    sort_basis(&base, Order::Standard).0
}

/// The full term as its own kernel (for `p` = 0, where `d1` is zero): unit
/// vectors in the endpoint frame, listed in standard order.
fn full_kernel(f: &Frame) -> BarcodeBasis {
    let mut reps = SparseZ2Matrix::new(f.endpoint.len(), 0);
    for &orig in &f.std_perm {
        reps.push_col([f.inv_row[orig]]);
    }
    BarcodeBasis {
        intervals: f.std_intervals.clone(),
        reps,
        order: Order::Standard,
    }
}

/// One generator of a second-page term.
#[derive(Debug, Clone, Copy)]
pub struct E2Gen {
    /// Column in the box-Gauss input matrix.
    pub box_col: usize,
    /// Column in the kernel basis (`box_col` minus the relation count).
    pub kernel_col: usize,
    pub interval: Interval,
    /// Birth after raises during reduction; the combination recorded in the
    /// additions log is a valid representative from here on.
    pub final_birth: f64,
}

/// A second-page term `E2_{p,q} = Ker(d1_{p,q}) / Im(d1_{p+1,q})`, kept with
/// the data needed to answer pointwise coordinate queries and to lift
/// representatives: the ambient `E1_{p,q}` frame, the relation and kernel
/// bases in ambient coordinates, and the box-Gauss additions log.
#[derive(Debug)]
pub struct QuotientTerm {
    pub p: usize,
    pub q: usize,
    /// `E1_{p,q}` intervals in endpoint order.
    pub ambient: Vec<Interval>,
    /// `ambient[i]` is the concatenated `E1` generator `row_perm[i]`.
    pub row_perm: Vec<usize>,
    pub relations: BarcodeBasis,
    pub kernel: BarcodeBasis,
    pub n_relations: usize,
    pub additions: SparseZ2Matrix,
    pub gens: Vec<E2Gen>,
}

impl QuotientTerm {
    /// Coordinates at time `t` of the class of `z` (ambient endpoint
    /// coordinates) in the generators alive at `t`, or `None` if `z` is not
    /// in the span of kernel and relations there. All vectors are restricted
    /// to the ambient rows alive at `t` first: entries on dead rows are zero
    /// pointwise.
    pub fn class_coordinates(&self, z: &[usize], t: f64) -> Option<Vec<usize>> {
        let alive: Vec<bool> = self.ambient.iter().map(|iv| iv.contains(t)).collect();
        let filter = |rows: &[usize]| -> Vec<usize> {
            rows.iter().copied().filter(|&r| alive[r]).collect()
        };
        let mut m = SparseZ2Matrix::new(self.ambient.len(), 0);
        let mut admissible = Vec::new();
        for j in 0..self.relations.len() {
            m.push_col(filter(self.relations.reps.col(j)));
            admissible.push(self.relations.intervals[j].contains(t));
        }
        let gen_base = m.ncols();
        for g in &self.gens {
            m.push_col(filter(self.kernel.reps.col(g.kernel_col)));
            admissible.push(g.interval.contains(t));
        }
        let used = crate::barcode_algebra::solve_in_span(&m, &admissible, &filter(z))?;
        Some(
            used.into_iter()
                .filter(|&k| k >= gen_base)
                .map(|k| k - gen_base)
                .collect(),
        )
    }
}

fn quotient(p: usize, q: usize, f: Frame, relations: BarcodeBasis, kernel: BarcodeBasis) -> QuotientTerm {
    let n_relations = relations.len();
    let mut m = SparseZ2Matrix::new(f.endpoint.len(), 0);
    let mut lbirths = Vec::new();
    for j in 0..n_relations {
        m.push_col(relations.reps.col(j).iter().copied());
        lbirths.push(relations.intervals[j].birth);
    }
    for j in 0..kernel.len() {
        m.push_col(kernel.reps.col(j).iter().copied());
        lbirths.push(kernel.intervals[j].birth);
    }
    let ldeaths: Vec<f64> = f.endpoint.iter().map(|iv| iv.death).collect();
    let res = box_gauss_reduce(&m, &ldeaths, &lbirths, n_relations);
    let gens = res
        .intervals
        .iter()
        .map(|&(j, interval)| E2Gen {
            box_col: j,
            kernel_col: j - n_relations,
            interval,
            final_birth: res.lbirths[j],
        })
        .collect();
    QuotientTerm {
        p,
        q,
        ambient: f.endpoint,
        row_perm: f.row_perm,
        relations,
        kernel,
        n_relations,
        additions: res.additions,
        gens,
    }
}

/// The second page: the four terms that survive into the final answer or the
/// collapse test, plus lifting data for the extension problem.
#[derive(Debug)]
pub struct SecondPage {
    pub e2_00: QuotientTerm,
    pub e2_10: QuotientTerm,
    pub e2_01: QuotientTerm,
    pub e2_11: QuotientTerm,
    /// Intervals of `Ker(d1_{2,1})`, checked by the collapse test.
    pub ker21: Vec<Interval>,
    /// A preimage in `E1_{2,0}` (concatenated coordinates) for every relation
    /// of `e2_10`; realizing relations as horizontal boundaries of actual
    /// triple-intersection chains is what the extension lift needs.
    pub rel10_preimages: SparseZ2Matrix,
}

pub fn second_page(fp: &FirstPage) -> Result<SecondPage, AlgebraError> {
    let f00 = frame(fp.e1_intervals(0, 0));
    let f10 = frame(fp.e1_intervals(1, 0));
    let f20 = frame(fp.e1_intervals(2, 0));
    let f01 = frame(fp.e1_intervals(0, 1));
    let f11 = frame(fp.e1_intervals(1, 1));
    let f21 = frame(fp.e1_intervals(2, 1));

    let m10 = sorted_morphism(&fp.d1[0][0], &f10, &f00);
    let m20 = sorted_morphism(&fp.d1[1][0], &f20, &f10);
    let m11 = sorted_morphism(&fp.d1[0][1], &f11, &f01);
    let m21 = sorted_morphism(&fp.d1[1][1], &f21, &f11);

    let (im10, ker10, _) = image_kernel_with_preimages(&m10)?;
    let (im20, _, pre20) = image_kernel_with_preimages(&m20)?;
    let (im11, ker11, _) = image_kernel_with_preimages(&m11)?;
    let (im21, ker21, _) = image_kernel_with_preimages(&m21)?;

    let mut rel10_preimages = SparseZ2Matrix::new(f20.std_perm.len(), 0);
    for j in 0..pre20.ncols() {
        rel10_preimages.push_col(pre20.col(j).iter().map(|&k| f20.std_perm[k]));
    }

    let ker21_intervals = ker21.intervals.clone();
    let ker10 = kernel_in_ambient(&ker10, &f10);
    let ker11 = kernel_in_ambient(&ker11, &f11);
    let full00 = full_kernel(&f00);
    let full01 = full_kernel(&f01);

    Ok(SecondPage {
        e2_00: quotient(0, 0, f00, im10, full00),
        e2_10: quotient(1, 0, f10, im20, ker10),
        e2_01: quotient(0, 1, f01, im11, full01),
        e2_11: quotient(1, 1, f11, im21, ker11),
        ker21: ker21_intervals,
        rel10_preimages,
    })
}

/// Witness that the sequence fails to collapse at the second page.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseFailure {
    pub term: &'static str,
    pub interval: Interval,
}

impl std::fmt::Display for CollapseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} carries the infinite interval [{}, inf)",
            self.term, self.interval.birth
        )
    }
}

/// Collapse happens at the second page when `E2_{0,1}`, `E2_{1,1}` and
/// `Ker(d1_{2,1})` carry no infinite interval; then the later differentials
/// never matter and the barcode can be assembled from the second page alone.
pub fn collapse_check(sp: &SecondPage) -> Result<(), CollapseFailure> {
    for g in &sp.e2_01.gens {
        if g.interval.death.is_infinite() {
            return Err(CollapseFailure {
                term: "E2_{0,1}",
                interval: g.interval,
            });
        }
    }
    for g in &sp.e2_11.gens {
        if g.interval.death.is_infinite() {
            return Err(CollapseFailure {
                term: "E2_{1,1}",
                interval: g.interval,
            });
        }
    }
    for iv in &sp.ker21 {
        if iv.death.is_infinite() {
            return Err(CollapseFailure {
                term: "Ker(d1_{2,1})",
                interval: *iv,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("second page does not collapse: {0}")]
    Collapse(CollapseFailure),
    #[error("extension lift failed: {0}")]
    Lift(String),
}

/// The chain-level data behind one finite generator of `E2_{1,0}`: its
/// representative expanded into actual 0-chains `w` in the double
/// intersections (relation columns of the additions log contribute the
/// horizontal boundary of a preimage chain in the triples), and the vertical
/// lifts `a1` of those chains at the generator's death, where the class has
/// become a boundary in every pair. Chains are simplex indices into the pair
/// summands' reduction orders.
#[derive(Debug)]
pub struct GenChains {
    pub death: f64,
    /// Birth after raises during reduction; the chains are valid
    /// representatives from here on.
    pub final_birth: f64,
    /// Per pair summand.
    pub w: Vec<Vec<usize>>,
    pub a1: Vec<Vec<usize>>,
}

/// Computes [`GenChains`] for every generator of `E2_{1,0}` (`None` for the
/// infinite ones, which never extend anything). Only pair and triple summands
/// are consulted, so the coordinator can run this without any cover-piece
/// chain data.
pub fn extension_pair_chains(
    fp: &FirstPage,
    sp: &SecondPage,
) -> Result<Vec<Option<GenChains>>, SpectralError> {
    let e10 = &sp.e2_10;
    let pairs = &fp.summands[1];
    let triples = &fp.summands[2];

    let mut out = Vec::with_capacity(e10.gens.len());
    for g in &e10.gens {
        if !g.interval.death.is_finite() {
            out.push(None);
            continue;
        }
        let b = g.interval.death;

        // Expand the additions log into per-pair 0-chains.
        let mut w: Vec<Vec<usize>> = vec![Vec::new(); pairs.len()];
        for &k in e10.additions.col(g.box_col) {
            if k >= e10.n_relations {
                for &row in e10.kernel.reps.col(k - e10.n_relations) {
                    let (t, l) = fp.locate(1, 0, e10.row_perm[row]);
                    w[t] = xor_sorted(&w[t], pairs[t].basis[0].reps.col(l));
                }
            } else {
                let mut u: Vec<Vec<usize>> = vec![Vec::new(); triples.len()];
                for &orig in sp.rel10_preimages.col(k) {
                    let (tr, l) = fp.locate(2, 0, orig);
                    u[tr] = xor_sorted(&u[tr], triples[tr].basis[0].reps.col(l));
                }
                for (tr, chain) in u.iter().enumerate() {
                    if chain.is_empty() {
                        continue;
                    }
                    let su = &triples[tr];
                    for (t, tau) in pairs.iter().enumerate() {
                        if !is_facet(&tau.cell, &su.cell) {
                            continue;
                        }
                        let mut mapped: Vec<usize> = chain
                            .iter()
                            .map(|&idx| tau.fr.index[&su.fr.order[idx]])
                            .collect();
                        mapped.sort_unstable();
                        w[t] = xor_sorted(&w[t], &mapped);
                    }
                }
            }
        }

        // Vertical lifts at the death: the class dies there, so each pair
        // chain has become a boundary.
        let mut a1: Vec<Vec<usize>> = Vec::with_capacity(pairs.len());
        for (t, chain) in w.iter().enumerate() {
            if chain.is_empty() {
                a1.push(Vec::new());
                continue;
            }
            let lifted = pairs[t].fr.solve_chain(chain, b).ok_or_else(|| {
                SpectralError::Lift(format!(
                    "pair chain is not a vertical boundary at {b}"
                ))
            })?;
            a1.push(lifted);
        }
        out.push(Some(GenChains {
            death: b,
            final_birth: g.final_birth,
            w,
            a1,
        }));
    }
    Ok(out)
}

/// One cover piece's share of the extension lift. `dh_w` and `dh_a1` are the
/// horizontal images inside this piece of the generator's pair chains and
/// their vertical lifts, given as simplices (already cancelled across pairs).
/// Solves `dV(w0) = dH(W)` at the raised birth; `z = w0 + dH(a1)` is the
/// piece's part of the 1-cycle carrying the extension class, and its
/// coordinates in the piece's dimension-1 basis at the death are returned.
pub fn extension_zone_coords(
    zone: &Summand,
    zone_im: &[(Vec<usize>, f64)],
    dh_w: &[Simplex],
    dh_a1: &[Simplex],
    final_birth: f64,
    death: f64,
) -> Result<Vec<usize>, SpectralError> {
    let to_chain = |ss: &[Simplex]| -> Vec<usize> {
        let mut v: Vec<usize> = ss.iter().map(|s| zone.fr.index[s]).collect();
        v.sort_unstable();
        v
    };
    let h = to_chain(dh_w);
    let da1 = to_chain(dh_a1);
    let w0 = if h.is_empty() {
        Vec::new()
    } else {
        zone.fr.solve_chain(&h, final_birth).ok_or_else(|| {
            SpectralError::Lift(format!(
                "cover chain is not a vertical boundary at {final_birth}"
            ))
        })?
    };
    let z = xor_sorted(&w0, &da1);
    if z.is_empty() {
        return Ok(Vec::new());
    }
    let mut chains = SparseZ2Matrix::new(zone.fr.order.len(), 1);
    chains.set_col(0, z.iter().copied());
    let f = associated_matrix(zone_im, &zone.basis[1], &chains, &[death])?;
    Ok(f.col(0).to_vec())
}

/// Collects, per cover piece, the symmetric difference of the given per-pair
/// chains pushed into the piece, as simplices.
pub fn push_chains_into_zones(
    pairs: &[Summand],
    zone_cells: &[Vec<usize>],
    chains: &[Vec<usize>],
) -> Vec<Vec<Simplex>> {
    let mut out: Vec<std::collections::BTreeSet<Simplex>> =
        vec![Default::default(); zone_cells.len()];
    for (t, tau) in pairs.iter().enumerate() {
        for (zi, cell) in zone_cells.iter().enumerate() {
            if !is_facet(cell, &tau.cell) {
                continue;
            }
            for &idx in &chains[t] {
                let s = tau.fr.order[idx];
                if !out[zi].remove(&s) {
                    out[zi].insert(s);
                }
            }
        }
    }
    out.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// One extension column per generator of `E2_{1,0}`: the coordinates over the
/// generators of `E2_{0,1}`, evaluated at the generator's death, of the class
/// its total-complex representative continues into. Sequential composition of
/// [`extension_pair_chains`] and the per-piece lifts; the distributed runtime
/// runs the pieces on their own workers instead.
pub fn extension_columns(
    fp: &FirstPage,
    sp: &SecondPage,
) -> Result<Vec<Vec<usize>>, SpectralError> {
    let e01 = &sp.e2_01;
    let mut inv01 = vec![0; e01.row_perm.len()];
    for (i, &o) in e01.row_perm.iter().enumerate() {
        inv01[o] = i;
    }
    let zones = &fp.summands[0];
    let pairs = &fp.summands[1];
    let zone_cells: Vec<Vec<usize>> = zones.iter().map(|z| z.cell.clone()).collect();
    let zone_im: Vec<Vec<(Vec<usize>, f64)>> =
        zones.iter().map(|z| im_cols(&z.fr, 1)).collect();

    let mut out = Vec::with_capacity(sp.e2_10.gens.len());
    for gc in extension_pair_chains(fp, sp)? {
        let Some(gc) = gc else {
            out.push(Vec::new());
            continue;
        };
        let dh_w = push_chains_into_zones(pairs, &zone_cells, &gc.w);
        let dh_a1 = push_chains_into_zones(pairs, &zone_cells, &gc.a1);
        let mut zvec: Vec<usize> = Vec::new();
        for (zi, zs) in zones.iter().enumerate() {
            let coords = extension_zone_coords(
                zs,
                &zone_im[zi],
                &dh_w[zi],
                &dh_a1[zi],
                gc.final_birth,
                gc.death,
            )?;
            for l in coords {
                zvec.push(inv01[fp.offsets[0][1][zi] + l]);
            }
        }
        zvec.sort_unstable();

        let coords = e01.class_coordinates(&zvec, gc.death).ok_or_else(|| {
            SpectralError::Lift("extension class missing from the second page basis".into())
        })?;
        out.push(coords);
    }
    Ok(out)
}

/// Where a final dimension-1 interval came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ph1Origin {
    /// Generator of `E2_{0,1}` (index into its gens).
    Vertical(usize),
    /// Generator of `E2_{1,0}`, possibly extended past its second-page death.
    Horizontal(usize),
}

/// Solves the extension problem: quotients the sum of `E2_{0,1}` (intervals
/// `e0`) and the births of `E2_{1,0}` (`e1`, as `[a, inf)` generators) by one
/// relation per finite `e1` generator, born at its death, that glues the
/// generator onto its extension coordinates (`ext`, indices into `e0`).
/// Returns the final dimension-1 intervals tagged with their origin.
pub fn solve_extension(
    e0: &[Interval],
    e1: &[Interval],
    ext: &[Vec<usize>],
) -> Vec<(Ph1Origin, Interval)> {
    let n0 = e0.len();
    let mut rows: Vec<Interval> = e0.to_vec();
    rows.extend(e1.iter().map(|iv| Interval::new(iv.birth, f64::INFINITY)));

    let mut relations = SparseZ2Matrix::new(rows.len(), 0);
    let mut rel_births = Vec::new();
    for (i, iv) in e1.iter().enumerate() {
        if iv.death.is_finite() {
            let mut col = ext[i].clone();
            col.push(n0 + i);
            col.sort_unstable();
            relations.push_col(col);
            rel_births.push(iv.death);
        }
    }

    presentation_barcode(&rows, &relations, &rel_births)
        .into_iter()
        .map(|(orig, iv)| {
            let origin = if orig < n0 {
                Ph1Origin::Vertical(orig)
            } else {
                Ph1Origin::Horizontal(orig - n0)
            };
            (origin, iv)
        })
        .collect()
}

/// The assembled barcode of the distributed pipeline.
#[derive(Debug, Clone)]
pub struct PhOutput {
    /// Dimension 0: `E2_{0,0}` verbatim.
    pub ph0: Vec<Interval>,
    /// Dimension 1 with origins.
    pub ph1: Vec<(Ph1Origin, Interval)>,
}

/// Runs the extension problem and assembles the final barcode from the second
/// page. Callers should run [`collapse_check`] first; this only performs the
/// quotients.
pub fn persistent_homology(fp: &FirstPage, sp: &SecondPage) -> Result<PhOutput, SpectralError> {
    let ext = extension_columns(fp, sp)?;
    let e0: Vec<Interval> = sp.e2_01.gens.iter().map(|g| g.interval).collect();
    let e1: Vec<Interval> = sp.e2_10.gens.iter().map(|g| g.interval).collect();
    let ph1 = solve_extension(&e0, &e1, &ext);
    let ph0 = sp.e2_00.gens.iter().map(|g| g.interval).collect();
    Ok(PhOutput { ph0, ph1 })
}

/// The nerve cells supporting a final interval's representative; used for the
/// localized report.
pub fn origin_cells(fp: &FirstPage, sp: &SecondPage, origin: Ph1Origin) -> Vec<Vec<usize>> {
    let (term, p, idx) = match origin {
        Ph1Origin::Vertical(i) => (&sp.e2_01, 0usize, i),
        Ph1Origin::Horizontal(i) => (&sp.e2_10, 1usize, i),
    };
    gen_cells(fp, term, p, idx)
}

/// The nerve cells supporting one generator of a second-page quotient term.
pub fn gen_cells(fp: &FirstPage, term: &QuotientTerm, p: usize, idx: usize) -> Vec<Vec<usize>> {
    let g = &term.gens[idx];
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for &row in term.kernel.reps.col(g.kernel_col) {
        let (s, _) = fp.locate(p, term.q, term.row_perm[row]);
        let cell = fp.summands[p][s].cell.clone();
        if !cells.contains(&cell) {
            cells.push(cell);
        }
    }
    cells.sort();
    cells
}

/// `d1 . d1 = 0` in both rows; cheap structural check used by tests and debug
/// assertions.
pub fn d1_squared_is_zero(fp: &FirstPage) -> bool {
    (0..2).all(|q| {
        let prod = fp.d1[0][q].matrix.multiply(&fp.d1[1][q].matrix);
        (0..prod.ncols()).all(|j| prod.is_zero_col(j))
    })
}
