//! Grid cover of the Delaunay triangulation: zone assignment, iterative
//! construction of the subcomplexes K_i, double/triple intersections with
//! the critical vertex/edge protocol, and the nerve.
//!
//! A zone's subcomplex K_i consists of all triangles with at least one
//! vertex in X_i together with their faces (the inner and boundary
//! triangles of B_i). It is built without global knowledge by growing a
//! local triangulation ring by ring until no relevant circumcircle can
//! reach unseen points.

use crate::alpha::{maximal_simplices, Simplex};
use crate::delaunay::{DelaunayError, Triangulation};
use crate::geometry::{circumdata_triangle, BoundingBox, Point2};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("point cloud is empty")]
    EmptyInput,
    #[error(transparent)]
    Delaunay(#[from] DelaunayError),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

/// Grid layout: `m1 × m2` zones, each subdivided into `k × k` cells sized so
/// an average cell holds roughly `density` points.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub m1: usize,
    pub m2: usize,
    pub density: usize,
    /// Cells per axis within one zone.
    pub k: usize,
}

impl GridSpec {
    pub fn zones(&self) -> usize {
        self.m1 * self.m2
    }
}

/// The padded bounding box, zone boxes, and the point partition.
#[derive(Debug, Clone)]
pub struct Grid {
    pub bbox: BoundingBox,
    pub spec: GridSpec,
    pub zone_boxes: Vec<BoundingBox>,
    /// Point ids per zone.
    pub assignment: Vec<Vec<usize>>,
}

impl Grid {
    pub fn zones(&self) -> usize {
        self.spec.zones()
    }

    fn zone_width(&self) -> f64 {
        (self.bbox.x_max - self.bbox.x_min) / self.spec.m1 as f64
    }

    fn zone_height(&self) -> f64 {
        (self.bbox.y_max - self.bbox.y_min) / self.spec.m2 as f64
    }

    /// Zone of a point inside the bounding box, following the half-open
    /// rule: a point on an interior grid line belongs to the zone on its
    /// right / above.
    pub fn zone_of(&self, p: &Point2) -> usize {
        let zx = (((p.x - self.bbox.x_min) / self.zone_width()).floor() as isize)
            .clamp(0, self.spec.m1 as isize - 1) as usize;
        let zy = (((p.y - self.bbox.y_min) / self.zone_height()).floor() as isize)
            .clamp(0, self.spec.m2 as isize - 1) as usize;
        zy * self.spec.m1 + zx
    }

    /// The zone box grown by `rings` cell rings, clipped to the bounding
    /// box. `rings = 0` gives the zone box itself.
    pub fn expanded_box(&self, zone: usize, rings: usize) -> BoundingBox {
        let zb = &self.zone_boxes[zone];
        let cw = self.zone_width() / self.spec.k as f64;
        let ch = self.zone_height() / self.spec.k as f64;
        let r = rings as f64;
        BoundingBox {
            x_min: (zb.x_min - r * cw).max(self.bbox.x_min),
            x_max: (zb.x_max + r * cw).min(self.bbox.x_max),
            y_min: (zb.y_min - r * ch).max(self.bbox.y_min),
            y_max: (zb.y_max + r * ch).min(self.bbox.y_max),
        }
    }
}

fn covers(outer: &BoundingBox, inner: &BoundingBox) -> bool {
    outer.x_min <= inner.x_min
        && outer.x_max >= inner.x_max
        && outer.y_min <= inner.y_min
        && outer.y_max >= inner.y_max
}

/// Closed containment; used for layer queries where over-inclusion is
/// harmless (duplicates are dropped by id).
pub fn rect_contains(b: &BoundingBox, p: &Point2) -> bool {
    b.x_min <= p.x && p.x <= b.x_max && b.y_min <= p.y && p.y <= b.y_max
}

/// Builds the padded bounding box, the zone grid, and the point partition.
pub fn compute_grid(
    points: &[(usize, Point2)],
    m1: usize,
    m2: usize,
    density: usize,
) -> Result<Grid, CoverError> {
    if points.is_empty() {
        return Err(CoverError::EmptyInput);
    }
    assert!(m1 >= 1 && m2 >= 1 && density >= 1);
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, p) in points {
        x_min = x_min.min(p.x);
        x_max = x_max.max(p.x);
        y_min = y_min.min(p.y);
        y_max = y_max.max(p.y);
    }
    // Pad so no point lies on the outer boundary; the margin is relative to
    // the cloud diameter (absolute fallback for degenerate extents).
    let extent = (x_max - x_min).max(y_max - y_min);
    let pad = if extent > 0.0 { 1e-9 * extent } else { 1.0 };
    let bbox = BoundingBox {
        x_min: x_min - pad,
        x_max: x_max + pad,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };
    let m = m1 * m2;
    let per_zone = points.len() as f64 / (density * m) as f64;
    let k = per_zone.max(1.0).sqrt().ceil() as usize;
    let spec = GridSpec { m1, m2, density, k };

    let w = (bbox.x_max - bbox.x_min) / m1 as f64;
    let h = (bbox.y_max - bbox.y_min) / m2 as f64;
    let mut zone_boxes = Vec::with_capacity(m);
    for zy in 0..m2 {
        for zx in 0..m1 {
            zone_boxes.push(BoundingBox {
                x_min: bbox.x_min + zx as f64 * w,
                x_max: if zx + 1 == m1 {
                    bbox.x_max
                } else {
                    bbox.x_min + (zx + 1) as f64 * w
                },
                y_min: bbox.y_min + zy as f64 * h,
                y_max: if zy + 1 == m2 {
                    bbox.y_max
                } else {
                    bbox.y_min + (zy + 1) as f64 * h
                },
            });
        }
    }
    let mut grid = Grid {
        bbox,
        spec,
        zone_boxes,
        assignment: vec![Vec::new(); m],
    };
    for (id, p) in points {
        let z = grid.zone_of(p);
        grid.assignment[z].push(*id);
    }
    for zone in grid.assignment.iter_mut() {
        zone.sort_unstable();
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriClass {
    Inner,
    Boundary,
    Outer,
}

/// Classifies a triangle with respect to one zone by counting vertices whose
/// owning zone is `zone`.
pub fn classify_triangle(vs: &[usize; 3], zone: usize, zone_of: impl Fn(usize) -> usize) -> TriClass {
    let n = vs.iter().filter(|&&v| zone_of(v) == zone).count();
    match n {
        3 => TriClass::Inner,
        0 => TriClass::Outer,
        _ => TriClass::Boundary,
    }
}

/// The finished subcomplex K_i together with the local triangulation it was
/// carved from.
#[derive(Debug)]
pub struct SubcomplexK {
    pub zone: usize,
    pub tri: Triangulation,
    /// Maximal simplices of K_i (triangles, or lower-dimensional pieces for
    /// degenerate clouds), sorted.
    pub maximal: Vec<Simplex>,
    /// All simplices of K_i.
    pub simplices: BTreeSet<Simplex>,
    /// Expansion rounds performed (0 = the zone's own points sufficed).
    pub rounds: usize,
}

impl SubcomplexK {
    pub fn contains(&self, s: &Simplex) -> bool {
        self.simplices.contains(s)
    }

    /// Connectivity of the underlying graph (isolated vertices count as
    /// components). Claimed but not proven for protocol-built covers, so
    /// callers treat a `false` as a warning, not an error.
    pub fn is_connected(&self) -> bool {
        let verts: Vec<usize> = self
            .simplices
            .iter()
            .filter(|s| s.dim() == 0)
            .map(|s| s.vertices()[0])
            .collect();
        if verts.len() <= 1 {
            return true;
        }
        let index: BTreeMap<usize, usize> =
            verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut parent: Vec<usize> = (0..verts.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let r = find(parent, parent[i]);
                parent[i] = r;
            }
            parent[i]
        }
        for s in self.simplices.iter().filter(|s| s.dim() == 1) {
            let (a, b) = (index[&s.vertices()[0]], index[&s.vertices()[1]]);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        (1..verts.len()).all(|i| find(&mut parent, i) == root)
    }
}

/// Ring-by-ring growth of one zone's local triangulation.
///
/// Round `k` covers the zone box expanded by `k` cell rings. After each
/// insertion the state decides whether any triangle of the current K_i^k has
/// a circumcircle reaching past the covered box into a part of the bounding
/// box that still holds unseen points; if so another ring is needed.
/// The circumcircle test is applied to all triangles of K_i^k, not only the
/// boundary ones — strictly more conservative, and it costs at most extra
/// rounds, never correctness.
#[derive(Debug)]
pub struct ExpansionState {
    pub zone: usize,
    pub rounds: usize,
    rect: BoundingBox,
    tri: Triangulation,
    present: HashSet<usize>,
    own_empty: bool,
    done: bool,
}

impl ExpansionState {
    pub fn new(
        grid: &Grid,
        zone: usize,
        own: &[(usize, Point2)],
    ) -> Result<ExpansionState, CoverError> {
        let tri = Triangulation::build(own)?;
        let mut st = ExpansionState {
            zone,
            rounds: 0,
            rect: grid.expanded_box(zone, 0),
            present: own.iter().map(|&(id, _)| id).collect(),
            own_empty: own.is_empty(),
            tri,
            done: false,
        };
        st.evaluate(grid);
        Ok(st)
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// The region whose points are needed for the next round, or `None` when
    /// stable. Points already inserted may be included again by the
    /// provider; they are skipped by id.
    pub fn needed_region(&self, grid: &Grid) -> Option<BoundingBox> {
        if self.done {
            None
        } else {
            Some(grid.expanded_box(self.zone, self.rounds + 1))
        }
    }

    /// Inserts the next layer (any points inside the requested region) and
    /// re-evaluates stability.
    pub fn insert_layer(
        &mut self,
        grid: &Grid,
        layer: &[(usize, Point2)],
    ) -> Result<(), CoverError> {
        assert!(!self.done, "insert_layer after stabilization");
        let fresh: Vec<(usize, Point2)> = layer
            .iter()
            .copied()
            .filter(|(id, _)| !self.present.contains(id))
            .collect();
        self.tri.insert(&fresh)?;
        self.present.extend(fresh.iter().map(|&(id, _)| id));
        self.rounds += 1;
        self.rect = grid.expanded_box(self.zone, self.rounds);
        self.evaluate(grid);
        Ok(())
    }

    fn evaluate(&mut self, grid: &Grid) {
        if self.own_empty {
            // K_i is empty; nothing to stabilize.
            self.done = true;
            return;
        }
        if covers(&self.rect, &grid.bbox) {
            // Every point has been seen.
            self.done = true;
            return;
        }
        if !self.tri.is_full2d() {
            // Cannot certify anything from a degenerate local set.
            self.done = false;
            return;
        }
        let zone_of = |v: usize| grid.zone_of(&self.tri.point(v).unwrap());
        for t in self.tri.triangles() {
            if classify_triangle(&t, self.zone, zone_of) == TriClass::Outer {
                continue;
            }
            let cd = circumdata_triangle(
                self.tri.point(t[0]).unwrap(),
                self.tri.point(t[1]).unwrap(),
                self.tri.point(t[2]).unwrap(),
            )
            .expect("Delaunay triangle is non-degenerate");
            if disk_escapes(&cd.center, cd.squared_radius, &self.rect, &grid.bbox) {
                self.done = false;
                return;
            }
        }
        // Hull edges stand in for their not-yet-seen cofaces: a global
        // triangle over a hull edge with an endpoint in X_i belongs to K_i,
        // and its third vertex lies in the exterior half-plane. If that
        // half-plane still reaches unseen parts of the bounding box, the
        // star of K_i's vertices may be incomplete.
        for e in self.tri.hull_edges() {
            let touches_zone = e.iter().any(|&v| zone_of(v) == self.zone);
            if touches_zone
                && halfplane_escapes(
                    self.tri.point(e[0]).unwrap(),
                    self.tri.point(e[1]).unwrap(),
                    &self.rect,
                    &grid.bbox,
                )
            {
                self.done = false;
                return;
            }
        }
        self.done = true;
    }

    /// Carves K_i out of the stabilized local triangulation.
    pub fn finish(self, grid: &Grid) -> Result<SubcomplexK, CoverError> {
        if !self.done {
            return Err(CoverError::Internal(format!(
                "zone {} finished before stabilization",
                self.zone
            )));
        }
        let zone_of = |v: usize| grid.zone_of(&self.tri.point(v).unwrap());
        let mut maximal: Vec<Simplex> = maximal_simplices(&self.tri)
            .into_iter()
            .filter(|s| s.vertices().iter().any(|&v| zone_of(v) == self.zone))
            .collect();
        maximal.sort();
        let mut simplices = BTreeSet::new();
        for s in &maximal {
            simplices.insert(s.clone());
            for f in s.faces() {
                simplices.insert(f);
            }
        }
        Ok(SubcomplexK {
            zone: self.zone,
            tri: self.tri,
            maximal,
            simplices,
            rounds: self.rounds,
        })
    }
}

/// True if the disk pokes out of `rect` across a side that has not yet
/// reached the bounding box — i.e. it could contain points not seen yet.
/// Side-wise, so it may over-report near corners; that only costs rounds.
fn disk_escapes(center: &Point2, r2: f64, rect: &BoundingBox, bbox: &BoundingBox) -> bool {
    let past = |gap: f64| gap < 0.0 || gap * gap < r2;
    (rect.x_min > bbox.x_min && past(center.x - rect.x_min))
        || (rect.x_max < bbox.x_max && past(rect.x_max - center.x))
        || (rect.y_min > bbox.y_min && past(center.y - rect.y_min))
        || (rect.y_max < bbox.y_max && past(rect.y_max - center.y))
}

/// True if the open half-plane strictly left of s → t reaches a part of the
/// bounding box not covered by `rect`. The box is clipped against the
/// half-plane; the clipped polygon lies in `rect` iff all its vertices do.
fn halfplane_escapes(s: Point2, t: Point2, rect: &BoundingBox, bbox: &BoundingBox) -> bool {
    let corners = [
        Point2::new(bbox.x_min, bbox.y_min),
        Point2::new(bbox.x_max, bbox.y_min),
        Point2::new(bbox.x_max, bbox.y_max),
        Point2::new(bbox.x_min, bbox.y_max),
    ];
    let side = |p: &Point2| (t.x - s.x) * (p.y - s.y) - (t.y - s.y) * (p.x - s.x);
    let mut poly: Vec<Point2> = Vec::new();
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        let (da, db) = (side(&a), side(&b));
        if da >= 0.0 {
            poly.push(a);
        }
        if (da > 0.0) != (db > 0.0) && da != db {
            let f = da / (da - db);
            poly.push(Point2::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)));
        }
    }
    let eps = 1e-12 * (bbox.x_max - bbox.x_min).max(bbox.y_max - bbox.y_min);
    poly.iter().any(|p| {
        p.x < rect.x_min - eps
            || p.x > rect.x_max + eps
            || p.y < rect.y_min - eps
            || p.y > rect.y_max + eps
    })
}

/// Runs the whole expansion loop against the full point set; the
/// message-passing runtime drives `ExpansionState` step by step instead.
pub fn expand_until_stable(
    grid: &Grid,
    points: &[(usize, Point2)],
    zone: usize,
) -> Result<SubcomplexK, CoverError> {
    let own: Vec<(usize, Point2)> = points
        .iter()
        .copied()
        .filter(|(_, p)| grid.zone_of(p) == zone)
        .collect();
    let mut st = ExpansionState::new(grid, zone, &own)?;
    while let Some(region) = st.needed_region(grid) {
        let layer: Vec<(usize, Point2)> = points
            .iter()
            .copied()
            .filter(|(_, p)| rect_contains(&region, p))
            .collect();
        st.insert_layer(grid, &layer)?;
    }
    st.finish(grid)
}

type Pair = (usize, usize);
type Triple = (usize, usize, usize);

/// A critical vertex or edge: a simplex of K_i ∩ K_j none of whose vertices
/// lies in X_i ∪ X_j, detected by the processor owning one of its vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalRecord {
    pub simplex: Simplex,
    pub pair: Pair,
    pub detected_by: usize,
}

/// All double and triple intersections plus the critical-simplex records.
#[derive(Debug, Default)]
pub struct IntersectionSet {
    pub pairs: BTreeMap<Pair, BTreeSet<Simplex>>,
    pub triples: BTreeMap<Triple, BTreeSet<Simplex>>,
    pub critical: Vec<CriticalRecord>,
}

fn sorted_pair(a: usize, b: usize) -> Pair {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn sorted_triple(a: usize, b: usize, c: usize) -> Triple {
    let mut v = [a, b, c];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

/// Step 1 for one processor: walk the boundary maximal simplices of K_i and
/// assign them (with faces) to every pair and triple their vertex zones
/// witness.
pub fn share_boundary_simplices(grid: &Grid, k: &SubcomplexK) -> IntersectionSet {
    let mut out = IntersectionSet::default();
    let zone_of = |v: usize| grid.zone_of(&k.tri.point(v).unwrap());
    for s in &k.maximal {
        let zs: BTreeSet<usize> = s.vertices().iter().map(|&v| zone_of(v)).collect();
        if !zs.contains(&k.zone) || zs.len() < 2 {
            continue;
        }
        let zs: Vec<usize> = zs.into_iter().collect();
        let with_faces = |set: &mut BTreeSet<Simplex>| {
            set.insert(s.clone());
            for f in s.faces() {
                set.insert(f);
            }
        };
        for &j in zs.iter().filter(|&&j| j != k.zone) {
            with_faces(out.pairs.entry(sorted_pair(k.zone, j)).or_default());
        }
        for (a, &j) in zs.iter().enumerate() {
            for &l in &zs[a + 1..] {
                if j != k.zone && l != k.zone {
                    with_faces(out.triples.entry(sorted_triple(k.zone, j, l)).or_default());
                }
            }
        }
    }
    out
}

/// Step 2 for one processor: any simplex present in two of its own pairwise
/// intersections lies in the corresponding triple. Simplices with no vertex
/// in either zone of a pair are critical vertices/edges of that pair.
pub fn detect_missing_triples(
    grid: &Grid,
    k: &SubcomplexK,
    pairs: &BTreeMap<Pair, BTreeSet<Simplex>>,
    known_triples: &BTreeMap<Triple, BTreeSet<Simplex>>,
) -> (BTreeMap<Triple, BTreeSet<Simplex>>, Vec<CriticalRecord>) {
    let me = k.zone;
    let zone_of = |v: usize| grid.zone_of(&k.tri.point(v).unwrap());
    let my_pairs: Vec<(usize, &BTreeSet<Simplex>)> = pairs
        .iter()
        .filter(|((a, b), _)| *a == me || *b == me)
        .map(|((a, b), set)| (if *a == me { *b } else { *a }, set))
        .collect();
    let mut found: BTreeMap<Triple, BTreeSet<Simplex>> = BTreeMap::new();
    let mut critical = Vec::new();
    for (x, &(i, set_i)) in my_pairs.iter().enumerate() {
        for &(j, set_j) in &my_pairs[x + 1..] {
            for s in set_i.intersection(set_j) {
                let triple = sorted_triple(me, i, j);
                if known_triples
                    .get(&triple)
                    .is_some_and(|t| t.contains(s))
                {
                    continue;
                }
                found.entry(triple).or_default().insert(s.clone());
                let touches_pair = s
                    .vertices()
                    .iter()
                    .any(|&v| zone_of(v) == i || zone_of(v) == j);
                if !touches_pair {
                    critical.push(CriticalRecord {
                        simplex: s.clone(),
                        pair: sorted_pair(i, j),
                        detected_by: me,
                    });
                }
            }
        }
    }
    (found, critical)
}

/// Steps 3–4: merge everybody's triples, then patch the pairwise
/// intersections so each triple simplex appears in all three pairs.
pub fn patch_intersections(set: &mut IntersectionSet) {
    for ((a, b, c), simplices) in &set.triples {
        for pair in [(*a, *b), (*a, *c), (*b, *c)] {
            let entry = set.pairs.entry(pair).or_default();
            for s in simplices {
                entry.insert(s.clone());
            }
        }
    }
    set.pairs.retain(|_, v| !v.is_empty());
}

/// The full exchange protocol, run sequentially over all zones: share
/// boundary simplices, detect missing triple members, merge, patch — and
/// then one more detect/patch round. The extra round closes the corner case
/// where four zones meet at a grid point and a simplex of a pair is only
/// discoverable after that pair has been patched; a second comparison pass
/// over exact pairwise intersections finds every remaining triple member.
pub fn compute_intersections(grid: &Grid, ks: &[SubcomplexK]) -> IntersectionSet {
    let mut set = IntersectionSet::default();
    for k in ks {
        let local = share_boundary_simplices(grid, k);
        for (key, v) in local.pairs {
            set.pairs.entry(key).or_default().extend(v);
        }
        for (key, v) in local.triples {
            set.triples.entry(key).or_default().extend(v);
        }
    }
    for _round in 0..2 {
        let mut new_triples: BTreeMap<Triple, BTreeSet<Simplex>> = BTreeMap::new();
        for k in ks {
            let (found, critical) = detect_missing_triples(grid, k, &set.pairs, &set.triples);
            for (key, v) in found {
                new_triples.entry(key).or_default().extend(v);
            }
            for c in critical {
                if !set.critical.contains(&c) {
                    set.critical.push(c);
                }
            }
        }
        if new_triples.is_empty() {
            break;
        }
        for (key, v) in new_triples {
            set.triples.entry(key).or_default().extend(v);
        }
        patch_intersections(&mut set);
    }
    set
}

/// The zone set of every simplex, computed by the rule: s lies in K_m iff
/// some maximal coface of s has a vertex in X_m. Each simplex is judged by
/// a zone owning one of its vertices, which sees all of its cofaces. This is
/// the brute-force referee for the exchange protocol.
pub fn zones_of_simplices(grid: &Grid, ks: &[SubcomplexK]) -> BTreeMap<Simplex, BTreeSet<usize>> {
    let mut cofaces: BTreeMap<Simplex, Vec<&Simplex>> = BTreeMap::new();
    let mut owner_of: BTreeMap<Simplex, usize> = BTreeMap::new();
    for k in ks {
        let zone_of = |v: usize| grid.zone_of(&k.tri.point(v).unwrap());
        for s in &k.simplices {
            // Judged by the zone owning the smallest owned vertex; every
            // owning zone would give the same answer.
            let owned = s.vertices().iter().any(|&v| zone_of(v) == k.zone);
            if owned && !owner_of.contains_key(s) {
                owner_of.insert(s.clone(), k.zone);
            }
        }
        for m in &k.maximal {
            for f in m.faces() {
                cofaces.entry(f).or_default().push(m);
            }
            cofaces.entry(m.clone()).or_default().push(m);
        }
    }
    let mut zones: BTreeMap<Simplex, BTreeSet<usize>> = BTreeMap::new();
    for (s, &owner) in &owner_of {
        let k = ks.iter().find(|k| k.zone == owner).unwrap();
        let zone_of = |v: usize| grid.zone_of(&k.tri.point(v).unwrap());
        let mut zs = BTreeSet::new();
        for m in cofaces.get(s).into_iter().flatten() {
            if k.contains(m) {
                zs.extend(m.vertices().iter().map(|&v| zone_of(v)));
            }
        }
        zones.insert(s.clone(), zs);
    }
    zones
}

/// Nerve of the cover, truncated at dimension 2: a zone tuple enters iff
/// its intersection is nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NerveComplex {
    pub vertices: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

pub fn build_nerve(ks: &[SubcomplexK], inter: &IntersectionSet) -> NerveComplex {
    let vertices: Vec<usize> = ks
        .iter()
        .filter(|k| !k.simplices.is_empty())
        .map(|k| k.zone)
        .collect();
    let edges: Vec<[usize; 2]> = inter
        .pairs
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(&(a, b), _)| [a, b])
        .collect();
    let triangles: Vec<[usize; 3]> = inter
        .triples
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(&(a, b, c), _)| [a, b, c])
        .collect();
    NerveComplex {
        vertices,
        edges,
        triangles,
    }
}
