//! Deterministic in-process message-passing execution of the distributed
//! pipeline.
//!
//! M workers (one per grid zone) run the full workflow: point distribution,
//! cover expansion by layer requests, the intersection exchange protocol,
//! filtration reconciliation, local persistence with inclusion matrices,
//! second-page quotients, the extension lifts, and the final gather. Worker 0
//! coordinates the `q = 0` row and assembles the output; worker 1 (worker 0
//! when M = 1) coordinates the `q = 1` row and solves the extension problem.
//!
//! There is no network layer: workers are state machines driven phase by
//! phase, and all cross-worker data travels in [`WorkerMessage`] values.
//! Within a phase the scheduler delivers messages in an arbitrary
//! (seed-dependent) order; per-pair channels are FIFO and every worker
//! processes its inbox sorted by sender, so the output is bit-identical under
//! any delivery schedule. Duplicated read-only computation (a worker
//! re-deriving an intersection summand another worker also holds) is
//! preferred over extra messages.
//!
//! The optimised-entries filter keeps cover-piece generators whose rows
//! vanish in every inclusion matrix out of the shipped data entirely: they
//! are direct summands no differential can touch, so their intervals rejoin
//! the barcode only at gather — unless an extension lift references one, in
//! which case it is shipped late by id.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::alpha::{
    alpha_filtration, authoritative_claims, intersection_alpha, merge_claims, reconcile,
    FilteredComplex2D, NonGabrielEntry, Simplex,
};
use crate::barcode_algebra::{AlgebraError, BarcodeBasis, Interval, Order};
use crate::cover::{
    compute_grid, detect_missing_triples, patch_intersections, rect_contains,
    share_boundary_simplices, CoverError, CriticalRecord, ExpansionState, Grid, GridSpec,
    IntersectionSet, SubcomplexK,
};
use crate::geometry::{BoundingBox, Point2};
use crate::oracle::Bar;
use crate::spectral::{
    assemble_first_page, cell_summand, collapse_check, d1_squared_is_zero,
    extension_pair_chains, extension_zone_coords, gen_cells, im_cols, inclusion_block,
    is_facet, push_chains_into_zones, second_page, solve_extension, CellComplex,
    CollapseFailure, FirstPage, Ph1Origin, SecondPage, SpectralError, Summand,
};
use crate::z2matrix::{FiltrationReduction, SparseZ2Matrix};

/// Workflow phases in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    PointDistribution,
    LayerPoints,
    TripleIntersectionShare,
    CriticalNonGabriel,
    BarcodeAndMatrices,
    E2Broadcast,
    LiftCoordinates,
    WithheldIntervals,
    FinalBarcode,
}

pub const PHASES: [Phase; 9] = [
    Phase::PointDistribution,
    Phase::LayerPoints,
    Phase::TripleIntersectionShare,
    Phase::CriticalNonGabriel,
    Phase::BarcodeAndMatrices,
    Phase::E2Broadcast,
    Phase::LiftCoordinates,
    Phase::WithheldIntervals,
    Phase::FinalBarcode,
];

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Phase::PointDistribution => "point-distribution",
            Phase::LayerPoints => "layer-points",
            Phase::TripleIntersectionShare => "triple-intersection-share",
            Phase::CriticalNonGabriel => "critical-non-gabriel",
            Phase::BarcodeAndMatrices => "barcode-and-matrices",
            Phase::E2Broadcast => "e2-broadcast",
            Phase::LiftCoordinates => "lift-coordinates",
            Phase::WithheldIntervals => "withheld-intervals",
            Phase::FinalBarcode => "final-barcode",
        };
        f.write_str(name)
    }
}

/// Immutable global id of a local persistence generator, assigned at
/// creation; late shipping of a withheld generator is a lookup by this id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GenId {
    pub zone: usize,
    pub dim: usize,
    pub index: usize,
}

/// One cell's contribution to the `BarcodeAndMatrices` payload.
#[derive(Debug, Clone)]
pub struct ShippedCell {
    /// Sorted zone tuple.
    pub cell: Vec<usize>,
    /// Interval lists per dimension; for cover pieces only the shipped
    /// generators appear here.
    pub intervals: [Vec<Interval>; 2],
    /// Chain-level summand, shipped for intersection cells whose
    /// representatives and reduced boundary matrix the coordinators consume
    /// directly; `None` for cover pieces (their chain data stays local).
    pub chains: Option<Summand>,
}

/// One `d1` block, computed by the worker owning the codomain cell. Rows are
/// indexed by the codomain's shipped basis.
#[derive(Debug, Clone)]
pub struct ShippedBlock {
    pub domain: Vec<usize>,
    pub codomain: Vec<usize>,
    pub q: usize,
    pub matrix: SparseZ2Matrix,
}

/// Horizontal chain data of one `E2_{1,0}` generator restricted to the
/// receiving worker's cover piece, as simplices (already cancelled across
/// the contributing pairs).
#[derive(Debug, Clone)]
pub struct ZoneLift {
    pub gen: usize,
    pub final_birth: f64,
    pub death: f64,
    pub dh_w: Vec<Simplex>,
    pub dh_a1: Vec<Simplex>,
}

/// The lifted class of one generator in the sender's cover piece, as
/// coordinates in the local dimension-1 basis: indices into the shipped part
/// plus late-shipped withheld generators.
#[derive(Debug, Clone)]
pub struct LiftColumn {
    pub gen: usize,
    pub zone: usize,
    pub shipped: Vec<usize>,
    pub late: Vec<(GenId, Interval)>,
}

/// Per-phase payloads. Everything is value-semantic: no shared mutable state
/// crosses a worker boundary.
#[derive(Debug)]
pub enum Payload {
    /// Grid layout plus the receiver's own zone points.
    Points { grid: Grid, own: Vec<(usize, Point2)> },
    /// Expansion round: the requester needs every point inside `region`.
    LayerRequest { region: BoundingBox },
    LayerReply { points: Vec<(usize, Point2)> },
    /// Step 1 of the intersection protocol: boundary simplices by pair and
    /// triple.
    BoundaryShares {
        pairs: BTreeMap<(usize, usize), BTreeSet<Simplex>>,
        triples: BTreeMap<(usize, usize, usize), BTreeSet<Simplex>>,
    },
    /// Step 2: triple members discovered this round plus critical records.
    TripleRound {
        found: BTreeMap<(usize, usize, usize), BTreeSet<Simplex>>,
        critical: Vec<CriticalRecord>,
    },
    /// Authoritative filtration claims of one zone, with the critical
    /// non-Gabriel edges its intersections could not see locally.
    Claims {
        claims: BTreeMap<Simplex, f64>,
        critical: Vec<NonGabrielEntry>,
    },
    /// The merged value map; bitwise equal to the global filtration.
    MergedClaims { values: BTreeMap<Simplex, f64> },
    /// Local barcodes, intersection chain data, and owned `d1` blocks.
    CellData {
        cells: Vec<ShippedCell>,
        blocks: Vec<ShippedBlock>,
    },
    /// Chain data of `E2_{1,0}` generators for the receiver's cover piece.
    GenLifts { gens: Vec<ZoneLift> },
    /// Lift coordinates for the extension coordinator.
    LiftCoords { gens: Vec<LiftColumn> },
    /// Withheld intervals reclaimed at gather.
    Withheld { intervals: Vec<(GenId, Interval)> },
    /// Extension output: final dimension-1 intervals with supporting cells,
    /// plus the ids of late-shipped generators the extension consumed.
    Final {
        ph1: Vec<(Vec<Vec<usize>>, Interval)>,
        used_late: Vec<GenId>,
    },
}

fn phase_of(p: &Payload) -> Phase {
    match p {
        Payload::Points { .. } => Phase::PointDistribution,
        Payload::LayerRequest { .. } | Payload::LayerReply { .. } => Phase::LayerPoints,
        Payload::BoundaryShares { .. } | Payload::TripleRound { .. } => {
            Phase::TripleIntersectionShare
        }
        Payload::Claims { .. } | Payload::MergedClaims { .. } => Phase::CriticalNonGabriel,
        Payload::CellData { .. } => Phase::BarcodeAndMatrices,
        Payload::GenLifts { .. } => Phase::E2Broadcast,
        Payload::LiftCoords { .. } => Phase::LiftCoordinates,
        Payload::Withheld { .. } => Phase::WithheldIntervals,
        Payload::Final { .. } => Phase::FinalBarcode,
    }
}

#[derive(Debug)]
pub struct WorkerMessage {
    pub phase: Phase,
    pub from: usize,
    pub to: usize,
    /// Position in the (from, to) channel; channels are FIFO.
    pub seq: usize,
    pub payload: Payload,
}

fn msg(from: usize, to: usize, payload: Payload) -> WorkerMessage {
    WorkerMessage {
        phase: phase_of(&payload),
        from,
        to,
        seq: 0,
        payload,
    }
}

/// The scheduler: stamps channel sequence numbers, delivers one phase's
/// messages in a seed-dependent arbitrary order, and hands every worker its
/// inbox sorted by (sender, channel position). Any order-sensitivity in the
/// workers would surface as seed-dependent output, which the determinism
/// tests reject.
struct Network {
    rng: ChaCha8Rng,
    m: usize,
    seq: BTreeMap<(usize, usize), usize>,
    /// Latest phase each worker has received; senders must not be past it.
    floor: Vec<Phase>,
    delivered: usize,
}

impl Network {
    fn new(m: usize, seed: u64) -> Self {
        Network {
            rng: ChaCha8Rng::seed_from_u64(seed),
            m,
            seq: BTreeMap::new(),
            floor: vec![Phase::PointDistribution; m],
            delivered: 0,
        }
    }

    fn exchange(&mut self, phase: Phase, mut msgs: Vec<WorkerMessage>) -> Vec<Vec<WorkerMessage>> {
        for w in &mut msgs {
            assert_eq!(w.phase, phase, "message sent outside its phase");
            assert!(
                self.floor[w.from] <= phase,
                "phase monotonicity violated by worker {}",
                w.from
            );
            let s = self.seq.entry((w.from, w.to)).or_insert(0);
            w.seq = *s;
            *s += 1;
        }
        msgs.shuffle(&mut self.rng);
        let mut inboxes: Vec<Vec<WorkerMessage>> = (0..self.m).map(|_| Vec::new()).collect();
        for w in msgs {
            self.floor[w.to] = self.floor[w.to].max(phase);
            self.delivered += 1;
            inboxes[w.to].push(w);
        }
        for inbox in &mut inboxes {
            inbox.sort_by_key(|w| (w.from, w.seq));
        }
        inboxes
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("second page does not collapse: {0}")]
    Collapse(CollapseFailure),
    #[error("protocol desync: {0}")]
    Desync(String),
}

impl From<SpectralError> for RunError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Algebra(a) => RunError::Algebra(a),
            SpectralError::Collapse(c) => RunError::Collapse(c),
            SpectralError::Lift(s) => RunError::Desync(s),
        }
    }
}

fn desync(what: impl Into<String>) -> RunError {
    RunError::Desync(what.into())
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Seed for the delivery-order fuzzing; the output must not depend on it.
    pub seed: u64,
    /// Withhold cover-piece generators with all-zero inclusion rows.
    pub optimised: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 0,
            optimised: true,
        }
    }
}

/// A final interval together with the nerve cells supporting its
/// representative (for withheld generators: the owning cover piece).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedBar {
    pub bar: Bar,
    pub cells: Vec<Vec<usize>>,
}

#[derive(Debug)]
pub struct RunOutput {
    /// Final intervals in standard order (dimension, then birth ascending,
    /// longer interval first on ties).
    pub bars: Vec<LocalizedBar>,
    /// Wall-clock seconds per phase, in workflow order.
    pub timings: Vec<(Phase, f64)>,
    /// Messages delivered across all phases.
    pub messages: usize,
    /// Critical simplices found by the intersection protocol.
    pub critical_simplices: usize,
    /// Distinct critical non-Gabriel edges exchanged during reconciliation.
    pub critical_edges: usize,
    /// Generators withheld by the optimised-entries filter.
    pub withheld: usize,
}

impl RunOutput {
    pub fn plain_bars(&self) -> Vec<Bar> {
        self.bars.iter().map(|b| b.bar).collect()
    }
}

/// Splits a local persistence basis into (shipped, withheld) generator
/// indices: withheld are those whose rows are zero in every given inclusion
/// matrix, so no downstream image or kernel can involve them.
pub fn apply_optimised_entries(
    basis: &BarcodeBasis,
    blocks: &[&SparseZ2Matrix],
) -> (Vec<usize>, Vec<usize>) {
    let mut used = vec![false; basis.len()];
    for b in blocks {
        for j in 0..b.ncols() {
            for &r in b.col(j) {
                used[r] = true;
            }
        }
    }
    let mut shipped = Vec::new();
    let mut withheld = Vec::new();
    for (i, u) in used.iter().enumerate() {
        if *u {
            shipped.push(i);
        } else {
            withheld.push(i);
        }
    }
    (shipped, withheld)
}

/// Coordinator-side first/second page, plus the map from cell tuples to
/// summand indices.
struct Coordinator {
    fp: FirstPage,
    sp: SecondPage,
    cell_index: [BTreeMap<Vec<usize>, usize>; 3],
}

fn placeholder_summand(cell: Vec<usize>, intervals: [Vec<Interval>; 2]) -> Summand {
    let basis = intervals.map(|ivs| BarcodeBasis {
        reps: SparseZ2Matrix::new(0, ivs.len()),
        intervals: ivs,
        order: Order::Standard,
    });
    Summand {
        cell,
        fr: FiltrationReduction::new(&FilteredComplex2D::new()),
        basis,
    }
}

fn assemble_coordinator(
    cells: Vec<ShippedCell>,
    blocks: Vec<ShippedBlock>,
) -> Result<Coordinator, RunError> {
    let mut by_dim: [Vec<ShippedCell>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for c in cells {
        let p = c.cell.len() - 1;
        if p > 2 {
            return Err(desync(format!("cell {:?} beyond the nerve cap", c.cell)));
        }
        by_dim[p].push(c);
    }
    let mut cell_index: [BTreeMap<Vec<usize>, usize>; 3] = Default::default();
    let mut summands: [Vec<Summand>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for p in 0..3 {
        by_dim[p].sort_by(|a, b| a.cell.cmp(&b.cell));
        for c in by_dim[p].drain(..) {
            if cell_index[p].insert(c.cell.clone(), summands[p].len()).is_some() {
                return Err(desync(format!("cell {:?} shipped twice", c.cell)));
            }
            summands[p].push(match c.chains {
                Some(s) => {
                    debug_assert_eq!(s.cell, c.cell);
                    s
                }
                None => placeholder_summand(c.cell, c.intervals),
            });
        }
    }
    let mut block_map = BTreeMap::new();
    for b in blocks {
        let p = b.domain.len() - 1;
        let si = *cell_index[p]
            .get(&b.domain)
            .ok_or_else(|| desync(format!("block domain {:?} unknown", b.domain)))?;
        let ti = *cell_index[p - 1]
            .get(&b.codomain)
            .ok_or_else(|| desync(format!("block codomain {:?} unknown", b.codomain)))?;
        if block_map.insert((p, si, ti, b.q), b.matrix).is_some() {
            return Err(desync("duplicate d1 block"));
        }
    }
    let fp = assemble_first_page(summands, &block_map);
    debug_assert!(d1_squared_is_zero(&fp));
    let sp = second_page(&fp)?;
    Ok(Coordinator { fp, sp, cell_index })
}

/// Per-worker state. A worker holds only what it received or derived from
/// messages; nothing here is shared.
struct Worker {
    id: usize,
    grid: Option<Grid>,
    own: Vec<(usize, Point2)>,
    exp: Option<ExpansionState>,
    k: Option<SubcomplexK>,
    inter: IntersectionSet,
    ng: Vec<NonGabrielEntry>,
    values: FilteredComplex2D,
    /// Full local summand of this worker's cover piece.
    summand: Option<Summand>,
    /// Local index -> shipped index, per dimension.
    shipped_pos: [BTreeMap<usize, usize>; 2],
    withheld: Vec<(GenId, Interval)>,
    coord: Option<Coordinator>,
    // Extension coordinator buffers.
    lift_shipped: BTreeMap<usize, Vec<usize>>,
    lift_late: BTreeMap<usize, Vec<GenId>>,
    late_bank: BTreeMap<GenId, Interval>,
    // Gather buffers.
    bank: BTreeMap<GenId, Interval>,
    final_msg: Option<(Vec<(Vec<Vec<usize>>, Interval)>, Vec<GenId>)>,
    critical_edges: BTreeSet<Simplex>,
}

impl Worker {
    fn new(id: usize) -> Self {
        Worker {
            id,
            grid: None,
            own: Vec::new(),
            exp: None,
            k: None,
            inter: IntersectionSet::default(),
            ng: Vec::new(),
            values: FilteredComplex2D::new(),
            summand: None,
            shipped_pos: Default::default(),
            withheld: Vec::new(),
            coord: None,
            lift_shipped: BTreeMap::new(),
            lift_late: BTreeMap::new(),
            late_bank: BTreeMap::new(),
            bank: BTreeMap::new(),
            final_msg: None,
            critical_edges: BTreeSet::new(),
        }
    }

    fn grid(&self) -> &Grid {
        self.grid.as_ref().expect("grid not distributed yet")
    }

    fn k(&self) -> &SubcomplexK {
        self.k.as_ref().expect("cover piece not built yet")
    }

    /// Pairs of the intersection set involving this worker, and whether it
    /// owns them (owner = smaller zone).
    fn my_pairs(&self) -> Vec<((usize, usize), bool)> {
        self.inter
            .pairs
            .iter()
            .filter(|((a, b), set)| (*a == self.id || *b == self.id) && !set.is_empty())
            .map(|(&(a, b), _)| ((a, b), a == self.id))
            .collect()
    }

    fn intersection_summand(&self, cell: Vec<usize>, set: &BTreeSet<Simplex>) -> Summand {
        cell_summand(&CellComplex {
            cell,
            filtration: self.values.restrict_to(set.iter()),
        })
    }

    /// The local persistence + inclusion-block computation (phase PH_i).
    /// Returns the CellData payload for the coordinators and records the
    /// shipped/withheld split.
    fn barcode_and_matrices(
        &mut self,
        optimised: bool,
    ) -> Result<(Vec<ShippedCell>, Vec<ShippedBlock>), RunError> {
        let id = self.id;
        let mut cells = Vec::new();
        let mut blocks = Vec::new();

        if self.k().simplices.is_empty() {
            return Ok((cells, blocks));
        }
        let zone_cc = CellComplex {
            cell: vec![id],
            filtration: self.values.restrict_to(self.k().simplices.iter()),
        };
        let su = cell_summand(&zone_cc);

        // Blocks whose codomain is this cover piece, rows in the full local
        // basis for now.
        let my_pairs = self.my_pairs();
        let mut pair_summands: BTreeMap<(usize, usize), Summand> = BTreeMap::new();
        for &(pair, _) in &my_pairs {
            let set = &self.inter.pairs[&pair];
            pair_summands.insert(pair, self.intersection_summand(vec![pair.0, pair.1], set));
        }
        let mut zone_blocks: [Vec<((usize, usize), SparseZ2Matrix)>; 2] =
            [Vec::new(), Vec::new()];
        for q in 0..2 {
            let zim = im_cols(&su.fr, q);
            for &(pair, _) in &my_pairs {
                let f = inclusion_block(&su, &zim, &pair_summands[&pair], q)?;
                zone_blocks[q].push((pair, f));
            }
        }

        // The optimised-entries filter, per dimension.
        for q in 0..2 {
            let (shipped, withheld) = if optimised {
                let refs: Vec<&SparseZ2Matrix> =
                    zone_blocks[q].iter().map(|(_, f)| f).collect();
                apply_optimised_entries(&su.basis[q], &refs)
            } else {
                ((0..su.basis[q].len()).collect(), Vec::new())
            };
            for (pos, &l) in shipped.iter().enumerate() {
                self.shipped_pos[q].insert(l, pos);
            }
            for &l in &withheld {
                self.withheld.push((
                    GenId {
                        zone: id,
                        dim: q,
                        index: l,
                    },
                    su.basis[q].intervals[l],
                ));
            }
        }
        let shipped_intervals = [0, 1].map(|q| {
            self.shipped_pos[q]
                .keys()
                .map(|&l| su.basis[q].intervals[l])
                .collect::<Vec<_>>()
        });
        cells.push(ShippedCell {
            cell: vec![id],
            intervals: shipped_intervals,
            chains: None,
        });

        // Ship the zone blocks with withheld rows dropped and the rest
        // reindexed to shipped positions.
        for q in 0..2 {
            for (pair, f) in &zone_blocks[q] {
                let mut matrix = SparseZ2Matrix::new(self.shipped_pos[q].len(), 0);
                for j in 0..f.ncols() {
                    matrix.push_col(f.col(j).iter().map(|r| self.shipped_pos[q][r]));
                }
                blocks.push(ShippedBlock {
                    domain: vec![pair.0, pair.1],
                    codomain: vec![id],
                    q,
                    matrix,
                });
            }
        }

        // Owned intersection cells ship their full chain-level summands, and
        // the owner of each pair computes the blocks out of the triples above
        // it.
        for &(pair, owned) in &my_pairs {
            if !owned {
                continue;
            }
            let psu = &pair_summands[&pair];
            cells.push(ShippedCell {
                cell: psu.cell.clone(),
                intervals: [psu.basis[0].intervals.clone(), psu.basis[1].intervals.clone()],
                chains: Some(psu.clone()),
            });
            let pair_cell = vec![pair.0, pair.1];
            for (&(a, b, c), set) in &self.inter.triples {
                let tcell = vec![a, b, c];
                if set.is_empty() || !is_facet(&pair_cell, &tcell) {
                    continue;
                }
                let tsu = self.intersection_summand(tcell.clone(), set);
                for q in 0..2 {
                    let pim = im_cols(&psu.fr, q);
                    let f = inclusion_block(psu, &pim, &tsu, q)?;
                    blocks.push(ShippedBlock {
                        domain: tcell.clone(),
                        codomain: pair_cell.clone(),
                        q,
                        matrix: f,
                    });
                }
            }
        }
        for (&(a, b, c), set) in &self.inter.triples {
            if set.is_empty() || a != id {
                continue;
            }
            let tsu = self.intersection_summand(vec![a, b, c], set);
            cells.push(ShippedCell {
                cell: tsu.cell.clone(),
                intervals: [tsu.basis[0].intervals.clone(), tsu.basis[1].intervals.clone()],
                chains: Some(tsu),
            });
        }
        self.summand = Some(su);
        Ok((cells, blocks))
    }

    /// Runs the local part of the extension lifts and splits the coordinates
    /// into shipped and late (withheld) parts.
    fn lift_columns(&self, lifts: &[ZoneLift]) -> Result<Vec<LiftColumn>, RunError> {
        let su = self
            .summand
            .as_ref()
            .ok_or_else(|| desync("lift request for an empty cover piece"))?;
        let zim = im_cols(&su.fr, 1);
        let mut out = Vec::with_capacity(lifts.len());
        for l in lifts {
            let coords =
                extension_zone_coords(su, &zim, &l.dh_w, &l.dh_a1, l.final_birth, l.death)?;
            let mut shipped = Vec::new();
            let mut late = Vec::new();
            for c in coords {
                match self.shipped_pos[1].get(&c) {
                    Some(&pos) => shipped.push(pos),
                    None => late.push((
                        GenId {
                            zone: self.id,
                            dim: 1,
                            index: c,
                        },
                        su.basis[1].intervals[c],
                    )),
                }
            }
            out.push(LiftColumn {
                gen: l.gen,
                zone: self.id,
                shipped,
                late,
            });
        }
        Ok(out)
    }
}

fn unexpected(w: &WorkerMessage) -> RunError {
    desync(format!(
        "worker {} got a {:?}-phase message from {} it cannot handle",
        w.to, w.phase, w.from
    ))
}

/// Executes the distributed pipeline on `m = m1 * m2` workers and gathers
/// the final barcode. The output is bit-identical across runs, seeds, and
/// any within-phase message delivery order; with `m = 1` it equals the
/// sequential oracle exactly.
///
/// The `k` field of `spec` is recomputed from the data; only `m1`, `m2` and
/// `density` are honored.
pub fn run(
    points: &[(usize, Point2)],
    spec: GridSpec,
    m: usize,
    opts: RunOptions,
) -> Result<RunOutput, RunError> {
    assert_eq!(m, spec.m1 * spec.m2, "one worker per grid zone");
    let c1 = if m > 1 { 1 } else { 0 };
    let mut net = Network::new(m, opts.seed);
    let mut ws: Vec<Worker> = (0..m).map(Worker::new).collect();
    let mut timings: Vec<(Phase, f64)> = Vec::new();

    // (D_0) Worker 0 takes the input, lays out the grid, and distributes
    // every zone's points to its worker.
    let t0 = Instant::now();
    {
        let grid = compute_grid(points, spec.m1, spec.m2, spec.density)?;
        let by_id: BTreeMap<usize, Point2> = points.iter().copied().collect();
        if by_id.len() != points.len() {
            return Err(desync("duplicate point ids"));
        }
        let mut msgs = Vec::new();
        for z in 0..m {
            let own: Vec<(usize, Point2)> = grid.assignment[z]
                .iter()
                .map(|&id| (id, by_id[&id]))
                .collect();
            msgs.push(msg(
                0,
                z,
                Payload::Points {
                    grid: grid.clone(),
                    own,
                },
            ));
        }
        for (w, inbox) in ws.iter_mut().zip(net.exchange(Phase::PointDistribution, msgs)) {
            for wm in inbox {
                match wm.payload {
                    Payload::Points { grid, own } => {
                        w.grid = Some(grid);
                        w.own = own;
                    }
                    _ => return Err(unexpected(&wm)),
                }
            }
        }
    }
    timings.push((Phase::PointDistribution, t0.elapsed().as_secs_f64()));

    // (AC_i) Cover expansion: rounds of layer requests until every local
    // triangulation has stabilized.
    let t0 = Instant::now();
    {
        for w in ws.iter_mut() {
            w.exp = Some(ExpansionState::new(w.grid(), w.id, &w.own)?);
        }
        loop {
            let mut requests = Vec::new();
            for w in ws.iter() {
                if let Some(region) = w.exp.as_ref().unwrap().needed_region(w.grid()) {
                    for other in 0..m {
                        if other != w.id {
                            requests.push(msg(w.id, other, Payload::LayerRequest { region }));
                        }
                    }
                }
            }
            let pending: BTreeSet<usize> = requests.iter().map(|r| r.from).collect();
            if pending.is_empty() {
                break;
            }
            let mut replies = Vec::new();
            for (w, inbox) in ws.iter().zip(net.exchange(Phase::LayerPoints, requests)) {
                for wm in inbox {
                    match wm.payload {
                        Payload::LayerRequest { region } => {
                            let pts: Vec<(usize, Point2)> = w
                                .own
                                .iter()
                                .copied()
                                .filter(|(_, p)| rect_contains(&region, p))
                                .collect();
                            replies.push(msg(w.id, wm.from, Payload::LayerReply { points: pts }));
                        }
                        _ => return Err(unexpected(&wm)),
                    }
                }
            }
            for (w, inbox) in ws.iter_mut().zip(net.exchange(Phase::LayerPoints, replies)) {
                if !pending.contains(&w.id) {
                    debug_assert!(inbox.is_empty());
                    continue;
                }
                let mut layer = Vec::new();
                for wm in inbox {
                    match wm.payload {
                        Payload::LayerReply { points } => layer.extend(points),
                        _ => return Err(unexpected(&wm)),
                    }
                }
                let grid = w.grid.clone().unwrap();
                w.exp.as_mut().unwrap().insert_layer(&grid, &layer)?;
            }
        }
        for w in ws.iter_mut() {
            let grid = w.grid.clone().unwrap();
            w.k = Some(w.exp.take().unwrap().finish(&grid)?);
        }
    }
    timings.push((Phase::LayerPoints, t0.elapsed().as_secs_f64()));

    // Intersection exchange: everyone shares boundary simplices, then two
    // detect/patch rounds close the triples.
    let t0 = Instant::now();
    {
        let mut shares = Vec::new();
        for w in ws.iter() {
            let local = share_boundary_simplices(w.grid(), w.k());
            for to in 0..m {
                shares.push(msg(
                    w.id,
                    to,
                    Payload::BoundaryShares {
                        pairs: local.pairs.clone(),
                        triples: local.triples.clone(),
                    },
                ));
            }
        }
        for (w, inbox) in ws
            .iter_mut()
            .zip(net.exchange(Phase::TripleIntersectionShare, shares))
        {
            for wm in inbox {
                match wm.payload {
                    Payload::BoundaryShares { pairs, triples } => {
                        for (key, v) in pairs {
                            w.inter.pairs.entry(key).or_default().extend(v);
                        }
                        for (key, v) in triples {
                            w.inter.triples.entry(key).or_default().extend(v);
                        }
                    }
                    _ => return Err(unexpected(&wm)),
                }
            }
        }
        for _round in 0..2 {
            let mut msgs = Vec::new();
            for w in ws.iter() {
                let (found, critical) =
                    detect_missing_triples(w.grid(), w.k(), &w.inter.pairs, &w.inter.triples);
                for to in 0..m {
                    msgs.push(msg(
                        w.id,
                        to,
                        Payload::TripleRound {
                            found: found.clone(),
                            critical: critical.clone(),
                        },
                    ));
                }
            }
            let mut any_new = false;
            for (w, inbox) in ws
                .iter_mut()
                .zip(net.exchange(Phase::TripleIntersectionShare, msgs))
            {
                let mut new_triples: BTreeMap<(usize, usize, usize), BTreeSet<Simplex>> =
                    BTreeMap::new();
                for wm in inbox {
                    match wm.payload {
                        Payload::TripleRound { found, critical } => {
                            for (key, v) in found {
                                new_triples.entry(key).or_default().extend(v);
                            }
                            for c in critical {
                                if !w.inter.critical.contains(&c) {
                                    w.inter.critical.push(c);
                                }
                            }
                        }
                        _ => return Err(unexpected(&wm)),
                    }
                }
                if !new_triples.is_empty() {
                    any_new = true;
                    for (key, v) in new_triples {
                        w.inter.triples.entry(key).or_default().extend(v);
                    }
                    patch_intersections(&mut w.inter);
                }
            }
            if !any_new {
                break;
            }
        }
    }
    timings.push((Phase::TripleIntersectionShare, t0.elapsed().as_secs_f64()));

    // Filtration values and reconciliation: zones claim what they own, the
    // coordinator merges bitwise, and everyone adopts the merged map.
    let t0 = Instant::now();
    {
        let mut msgs = Vec::new();
        for w in ws.iter_mut() {
            let k = w.k.as_ref().unwrap();
            let coords = |v: usize| k.tri.point(v).unwrap();
            let (mut zone_fc, ng) = alpha_filtration(&k.maximal, coords);
            let mut critical = Vec::new();
            for ((a, b), set) in &w.inter.pairs {
                if *a != w.id || set.is_empty() {
                    continue;
                }
                let (_, crit) = intersection_alpha(set, &ng, coords);
                critical.extend(crit);
                let _ = b;
            }
            for ((a, _, _), set) in &w.inter.triples {
                if *a != w.id || set.is_empty() {
                    continue;
                }
                let (_, crit) = intersection_alpha(set, &ng, coords);
                critical.extend(crit);
            }
            let grid = w.grid.as_ref().unwrap();
            let claims =
                authoritative_claims(&zone_fc, |v| grid.zone_of(&k.tri.point(v).unwrap()) == w.id);
            // The local list is reconciled like everything else below; keep
            // it so the debug check can compare.
            reconcile(&mut zone_fc, &claims);
            w.ng = ng;
            msgs.push(msg(w.id, 0, Payload::Claims { claims, critical }));
        }
        let mut inboxes = net.exchange(Phase::CriticalNonGabriel, msgs);
        let mut merged_msgs = Vec::new();
        {
            let w0 = &mut ws[0];
            let mut claim_maps = Vec::new();
            for wm in inboxes[0].drain(..) {
                match wm.payload {
                    Payload::Claims { claims, critical } => {
                        claim_maps.push(claims);
                        w0.critical_edges.extend(critical.iter().map(|e| e.edge));
                    }
                    _ => return Err(unexpected(&wm)),
                }
            }
            let merged = merge_claims(claim_maps).map_err(|e| desync(e.to_string()))?;
            for to in 0..m {
                merged_msgs.push(msg(
                    0,
                    to,
                    Payload::MergedClaims {
                        values: merged.clone(),
                    },
                ));
            }
        }
        for (w, inbox) in ws
            .iter_mut()
            .zip(net.exchange(Phase::CriticalNonGabriel, merged_msgs))
        {
            for wm in inbox {
                match wm.payload {
                    Payload::MergedClaims { values } => {
                        let mut fc = FilteredComplex2D::new();
                        for (s, v) in &values {
                            fc.insert(*s, *v);
                        }
                        w.values = fc;
                    }
                    _ => return Err(unexpected(&wm)),
                }
            }
            // The merged map agrees bitwise with what this worker derived
            // locally once its own claims are honored; spot-check one cell.
            #[cfg(debug_assertions)]
            if let Some((_, set)) = w
                .inter
                .pairs
                .iter()
                .find(|((a, _), set)| *a == w.id && !set.is_empty())
            {
                let k = w.k.as_ref().unwrap();
                let coords = |v: usize| k.tri.point(v).unwrap();
                let (mut fc, _) = intersection_alpha(set, &w.ng, coords);
                let merged: BTreeMap<Simplex, f64> =
                    w.values.simplices().map(|(s, v)| (*s, v)).collect();
                reconcile(&mut fc, &merged);
                for (s, v) in fc.simplices() {
                    debug_assert_eq!(v.to_bits(), w.values.value(s).unwrap().to_bits());
                }
            }
        }
    }
    timings.push((Phase::CriticalNonGabriel, t0.elapsed().as_secs_f64()));

    // (PH_i) Local persistence, inclusion blocks, optimised-entries filter;
    // barcodes and matrices go to both coordinators.
    let t0 = Instant::now();
    {
        let mut msgs = Vec::new();
        for w in ws.iter_mut() {
            let (cells, blocks) = w.barcode_and_matrices(opts.optimised)?;
            let mut targets = vec![0];
            if c1 != 0 {
                targets.push(c1);
            }
            for &to in &targets {
                msgs.push(msg(
                    w.id,
                    to,
                    Payload::CellData {
                        cells: cells.clone(),
                        blocks: blocks.clone(),
                    },
                ));
            }
        }
        for (w, inbox) in ws
            .iter_mut()
            .zip(net.exchange(Phase::BarcodeAndMatrices, msgs))
        {
            if w.id != 0 && w.id != c1 {
                debug_assert!(inbox.is_empty());
                continue;
            }
            let mut cells = Vec::new();
            let mut blocks = Vec::new();
            for wm in inbox {
                match wm.payload {
                    Payload::CellData {
                        cells: c,
                        blocks: b,
                    } => {
                        cells.extend(c);
                        blocks.extend(b);
                    }
                    _ => return Err(unexpected(&wm)),
                }
            }
            w.coord = Some(assemble_coordinator(cells, blocks)?);
        }
        // (E2_i) The q = 1 coordinator owns the collapse gate.
        let co = ws[c1].coord.as_ref().unwrap();
        collapse_check(&co.sp).map_err(RunError::Collapse)?;
    }
    timings.push((Phase::BarcodeAndMatrices, t0.elapsed().as_secs_f64()));

    // (L_i, part 1) Worker 0 expands every finite E2_{1,0} generator into
    // per-pair chains and broadcasts each cover piece its share.
    let t0 = Instant::now();
    {
        let mut msgs = Vec::new();
        {
            let co = ws[0].coord.as_ref().unwrap();
            let chains = extension_pair_chains(&co.fp, &co.sp)?;
            let zone_cells: Vec<Vec<usize>> =
                co.fp.summands[0].iter().map(|s| s.cell.clone()).collect();
            let mut per_worker: BTreeMap<usize, Vec<ZoneLift>> = BTreeMap::new();
            for (gi, gc) in chains.iter().enumerate() {
                let Some(gc) = gc else { continue };
                let dh_w = push_chains_into_zones(&co.fp.summands[1], &zone_cells, &gc.w);
                let dh_a1 = push_chains_into_zones(&co.fp.summands[1], &zone_cells, &gc.a1);
                for (zi, cell) in zone_cells.iter().enumerate() {
                    if dh_w[zi].is_empty() && dh_a1[zi].is_empty() {
                        continue;
                    }
                    per_worker.entry(cell[0]).or_default().push(ZoneLift {
                        gen: gi,
                        final_birth: gc.final_birth,
                        death: gc.death,
                        dh_w: dh_w[zi].clone(),
                        dh_a1: dh_a1[zi].clone(),
                    });
                }
            }
            for (to, gens) in per_worker {
                msgs.push(msg(0, to, Payload::GenLifts { gens }));
            }
        }
        let inboxes = net.exchange(Phase::E2Broadcast, msgs);
        // (L_i, part 2) Each cover piece lifts its share; coordinates go to
        // the extension coordinator in the next phase.
        let mut lift_msgs = Vec::new();
        for (w, inbox) in ws.iter().zip(inboxes) {
            let mut cols = Vec::new();
            for wm in inbox {
                match wm.payload {
                    Payload::GenLifts { gens } => cols.extend(w.lift_columns(&gens)?),
                    _ => return Err(unexpected(&wm)),
                }
            }
            lift_msgs.push(msg(w.id, c1, Payload::LiftCoords { gens: cols }));
        }
        timings.push((Phase::E2Broadcast, t0.elapsed().as_secs_f64()));

        let t1 = Instant::now();
        for (w, inbox) in ws.iter_mut().zip(net.exchange(Phase::LiftCoordinates, lift_msgs)) {
            if w.id != c1 {
                debug_assert!(inbox.is_empty());
                continue;
            }
            for wm in inbox {
                match wm.payload {
                    Payload::LiftCoords { gens } => {
                        let co = w.coord.as_ref().unwrap();
                        for col in gens {
                            let si = *co.cell_index[0]
                                .get(&vec![col.zone])
                                .ok_or_else(|| desync("lift from an unknown cover piece"))?;
                            let mut inv01 = vec![0; co.sp.e2_01.row_perm.len()];
                            for (i, &o) in co.sp.e2_01.row_perm.iter().enumerate() {
                                inv01[o] = i;
                            }
                            let entry = w.lift_shipped.entry(col.gen).or_default();
                            for l in col.shipped {
                                entry.push(inv01[co.fp.offsets[0][1][si] + l]);
                            }
                            for (gid, iv) in col.late {
                                w.late_bank.insert(gid, iv);
                                w.lift_late.entry(col.gen).or_default().push(gid);
                            }
                        }
                    }
                    _ => return Err(unexpected(&wm)),
                }
            }
        }
        timings.push((Phase::LiftCoordinates, t1.elapsed().as_secs_f64()));
    }

    // Withheld intervals stream to the gatherer.
    let t0 = Instant::now();
    {
        let mut msgs = Vec::new();
        for w in ws.iter() {
            msgs.push(msg(
                w.id,
                0,
                Payload::Withheld {
                    intervals: w.withheld.clone(),
                },
            ));
        }
        for (w, inbox) in ws
            .iter_mut()
            .zip(net.exchange(Phase::WithheldIntervals, msgs))
        {
            for wm in inbox {
                match wm.payload {
                    Payload::Withheld { intervals } => {
                        for (gid, iv) in intervals {
                            if w.bank.insert(gid, iv).is_some() {
                                return Err(desync(format!("duplicate generator id {gid:?}")));
                            }
                        }
                    }
                    _ => return Err(unexpected(&wm)),
                }
            }
        }
    }
    timings.push((Phase::WithheldIntervals, t0.elapsed().as_secs_f64()));

    // (Ex_1) The extension problem on worker c1, then (G_0) gather on 0.
    let t0 = Instant::now();
    {
        let mut msgs = Vec::new();
        {
            let w = &mut ws[c1];
            let co = w.coord.as_ref().unwrap();
            let n0 = co.sp.e2_01.gens.len();
            let late_ids: Vec<GenId> = w.late_bank.keys().copied().collect();
            let late_pos: BTreeMap<GenId, usize> = late_ids
                .iter()
                .enumerate()
                .map(|(i, &g)| (g, i))
                .collect();
            let e1: Vec<Interval> = co.sp.e2_10.gens.iter().map(|g| g.interval).collect();
            let mut ext: Vec<Vec<usize>> = vec![Vec::new(); e1.len()];
            for (gi, g) in co.sp.e2_10.gens.iter().enumerate() {
                if !g.interval.death.is_finite() {
                    continue;
                }
                let mut zvec = w.lift_shipped.get(&gi).cloned().unwrap_or_default();
                zvec.sort_unstable();
                let mut col = co
                    .sp
                    .e2_01
                    .class_coordinates(&zvec, g.interval.death)
                    .ok_or_else(|| desync("extension class missing from the second page basis"))?;
                for gid in w.lift_late.get(&gi).into_iter().flatten() {
                    col.push(n0 + late_pos[gid]);
                }
                ext[gi] = col;
            }
            let mut e0: Vec<Interval> = co.sp.e2_01.gens.iter().map(|g| g.interval).collect();
            e0.extend(late_ids.iter().map(|g| w.late_bank[g]));
            let ph1 = solve_extension(&e0, &e1, &ext);
            let localized: Vec<(Vec<Vec<usize>>, Interval)> = ph1
                .into_iter()
                .map(|(origin, iv)| {
                    let cells = match origin {
                        Ph1Origin::Vertical(i) if i < n0 => gen_cells(&co.fp, &co.sp.e2_01, 0, i),
                        Ph1Origin::Vertical(i) => vec![vec![late_ids[i - n0].zone]],
                        Ph1Origin::Horizontal(i) => gen_cells(&co.fp, &co.sp.e2_10, 1, i),
                    };
                    (cells, iv)
                })
                .collect();
            msgs.push(msg(
                c1,
                0,
                Payload::Final {
                    ph1: localized,
                    used_late: late_ids,
                },
            ));
        }
        for (w, inbox) in ws.iter_mut().zip(net.exchange(Phase::FinalBarcode, msgs)) {
            for wm in inbox {
                match wm.payload {
                    Payload::Final { ph1, used_late } => w.final_msg = Some((ph1, used_late)),
                    _ => return Err(unexpected(&wm)),
                }
            }
        }
    }

    // Gather on worker 0.
    let w0 = &mut ws[0];
    let (ph1, used_late) = w0
        .final_msg
        .take()
        .ok_or_else(|| desync("extension result never arrived"))?;
    let used: BTreeSet<GenId> = used_late.into_iter().collect();
    for gid in &used {
        if !w0.bank.contains_key(gid) {
            return Err(desync(format!("late generator {gid:?} was never withheld")));
        }
    }
    let mut bars: Vec<LocalizedBar> = Vec::new();
    {
        let co = w0.coord.as_ref().unwrap();
        for (i, g) in co.sp.e2_00.gens.iter().enumerate() {
            bars.push(LocalizedBar {
                bar: Bar {
                    dim: 0,
                    birth: g.interval.birth,
                    death: g.interval.death,
                },
                cells: gen_cells(&co.fp, &co.sp.e2_00, 0, i),
            });
        }
    }
    for (gid, iv) in &w0.bank {
        if used.contains(gid) {
            continue;
        }
        bars.push(LocalizedBar {
            bar: Bar {
                dim: gid.dim,
                birth: iv.birth,
                death: iv.death,
            },
            cells: vec![vec![gid.zone]],
        });
    }
    for (cells, iv) in ph1 {
        bars.push(LocalizedBar {
            bar: Bar {
                dim: 1,
                birth: iv.birth,
                death: iv.death,
            },
            cells,
        });
    }
    bars.retain(|b| !b.bar.is_empty());
    bars.sort_by(|a, b| {
        a.bar
            .dim
            .cmp(&b.bar.dim)
            .then(a.bar.birth.total_cmp(&b.bar.birth))
            .then(b.bar.death.total_cmp(&a.bar.death))
    });
    timings.push((Phase::FinalBarcode, t0.elapsed().as_secs_f64()));

    let withheld_total = ws.iter().map(|w| w.withheld.len()).sum();
    Ok(RunOutput {
        bars,
        timings,
        messages: net.delivered,
        critical_simplices: ws[0].inter.critical.len(),
        critical_edges: ws[0].critical_edges.len(),
        withheld: withheld_total,
    })
}
