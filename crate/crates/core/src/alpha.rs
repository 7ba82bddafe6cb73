//! Alpha filtration values on 2D simplicial complexes.
//!
//! Filtration values are squared circumradii: a triangle carries the squared
//! radius of its circumcircle, a Gabriel edge the squared radius of its
//! diametral circle, a non-Gabriel edge the minimum value of its adjacent
//! triangles, and vertices carry 0. Whether an edge is Gabriel is decided by
//! an exact determinant sign (see [`crate::geometry::diametral_dot_sign`]),
//! never by floating-point distances.

use crate::delaunay::Triangulation;
use crate::geometry::{circumdata_edge, circumdata_triangle, diametral_dot_sign, Point2};
use std::collections::BTreeMap;

/// A simplex of dimension <= 2, with sorted vertex ids. The derived `Ord`
/// sorts by dimension first, then lexicographically by vertex tuple, which is
/// the tie-break order used everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Simplex {
    V(usize),
    E([usize; 2]),
    T([usize; 3]),
}

impl Simplex {
    pub fn vertex(v: usize) -> Self {
        Simplex::V(v)
    }

    pub fn edge(a: usize, b: usize) -> Self {
        assert_ne!(a, b);
        let mut e = [a, b];
        e.sort_unstable();
        Simplex::E(e)
    }

    pub fn triangle(a: usize, b: usize, c: usize) -> Self {
        let mut t = [a, b, c];
        t.sort_unstable();
        assert!(t[0] < t[1] && t[1] < t[2]);
        Simplex::T(t)
    }

    pub fn dim(&self) -> usize {
        match self {
            Simplex::V(_) => 0,
            Simplex::E(_) => 1,
            Simplex::T(_) => 2,
        }
    }

    pub fn vertices(&self) -> &[usize] {
        match self {
            Simplex::V(v) => std::slice::from_ref(v),
            Simplex::E(e) => e,
            Simplex::T(t) => t,
        }
    }

    /// Codimension-1 faces (empty for vertices).
    pub fn facets(&self) -> Vec<Simplex> {
        match self {
            Simplex::V(_) => vec![],
            Simplex::E(e) => vec![Simplex::V(e[0]), Simplex::V(e[1])],
            Simplex::T(t) => vec![
                Simplex::edge(t[0], t[1]),
                Simplex::edge(t[0], t[2]),
                Simplex::edge(t[1], t[2]),
            ],
        }
    }

    /// All proper faces, including vertices.
    pub fn faces(&self) -> Vec<Simplex> {
        match self {
            Simplex::V(_) => vec![],
            Simplex::E(_) => self.facets(),
            Simplex::T(t) => {
                let mut f = self.facets();
                f.extend(t.iter().map(|&v| Simplex::V(v)));
                f
            }
        }
    }

    pub fn has_vertex(&self, v: usize) -> bool {
        self.vertices().contains(&v)
    }

    pub fn is_face_of(&self, other: &Simplex) -> bool {
        self.vertices().iter().all(|v| other.has_vertex(*v))
    }
}

/// A filtered complex of dimension <= 2: simplices with filtration values,
/// kept in canonical (dimension, vertex tuple) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilteredComplex2D {
    map: BTreeMap<Simplex, f64>,
}

impl FilteredComplex2D {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, s: Simplex, value: f64) {
        self.map.insert(s, value);
    }

    pub fn value(&self, s: &Simplex) -> Option<f64> {
        self.map.get(s).copied()
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.map.contains_key(s)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn simplices(&self) -> impl Iterator<Item = (&Simplex, f64)> + '_ {
        self.map.iter().map(|(s, &v)| (s, v))
    }

    /// Column order for matrix reduction: by (value, dimension, vertex tuple).
    pub fn reduction_order(&self) -> Vec<Simplex> {
        let mut cols: Vec<Simplex> = self.map.keys().copied().collect();
        cols.sort_by(|a, b| {
            self.map[a]
                .partial_cmp(&self.map[b])
                .unwrap()
                .then_with(|| a.cmp(b))
        });
        cols
    }

    /// filt(face) <= filt(coface) for every incidence.
    pub fn is_monotone(&self) -> bool {
        self.map.iter().all(|(s, &v)| {
            s.facets()
                .iter()
                .all(|f| self.map.get(f).is_some_and(|&fv| fv <= v))
        })
    }

    /// Restriction to the simplices of `other` (values kept from `self`).
    pub fn restrict_to<'a>(&self, keys: impl Iterator<Item = &'a Simplex>) -> FilteredComplex2D {
        let mut out = FilteredComplex2D::new();
        for s in keys {
            if let Some(v) = self.value(s) {
                out.insert(*s, v);
            }
        }
        out
    }
}

/// A non-Gabriel edge record: the edge, its filtration value (minimum of its
/// adjacent triangle values in the complex the record was computed from), and
/// the vertices that block its diametral disk there.
#[derive(Debug, Clone, PartialEq)]
pub struct NonGabrielEntry {
    pub edge: Simplex,
    pub value: f64,
    pub blockers: Vec<usize>,
}

/// Computes alpha filtration values on the closure of the given maximal
/// simplices, treating that closure as the whole complex. Returns the
/// filtered complex and the list of edges judged non-Gabriel within it.
///
/// `coords` must resolve every vertex id that occurs.
pub fn alpha_filtration<F>(maximal: &[Simplex], coords: F) -> (FilteredComplex2D, Vec<NonGabrielEntry>)
where
    F: Fn(usize) -> Point2,
{
    // Close under faces.
    let mut all: BTreeMap<Simplex, ()> = BTreeMap::new();
    for s in maximal {
        all.insert(*s, ());
        for f in s.faces() {
            all.insert(f, ());
        }
    }
    let mut fc = FilteredComplex2D::new();
    // Triangles first (edge values may refer to them).
    let mut tri_val: BTreeMap<Simplex, f64> = BTreeMap::new();
    for s in all.keys() {
        if let Simplex::T(t) = s {
            let cd = circumdata_triangle(coords(t[0]), coords(t[1]), coords(t[2]))
                .expect("degenerate triangle in alpha complex");
            tri_val.insert(*s, cd.squared_radius);
        }
    }
    let mut non_gabriel = Vec::new();
    for (s, _) in all.iter() {
        match s {
            Simplex::V(_) => fc.insert(*s, 0.0),
            Simplex::E(e) => {
                let (a, b) = (coords(e[0]), coords(e[1]));
                // Cofaces within the complex, in canonical order.
                let cofaces: Vec<&Simplex> = tri_val
                    .keys()
                    .filter(|t| s.is_face_of(t))
                    .collect();
                let mut blockers = Vec::new();
                for t in &cofaces {
                    let opp = t
                        .vertices()
                        .iter()
                        .copied()
                        .find(|v| !e.contains(v))
                        .unwrap();
                    if diametral_dot_sign(a, b, coords(opp)) < 0 {
                        blockers.push(opp);
                    }
                }
                let coface_min = cofaces
                    .iter()
                    .map(|t| tri_val[*t])
                    .fold(f64::INFINITY, f64::min);
                let value = if blockers.is_empty() {
                    // Gabriel; clamp against float rounding so that the edge
                    // never exceeds its cofaces.
                    circumdata_edge(a, b).expect("zero-length edge").squared_radius.min(coface_min)
                } else {
                    non_gabriel.push(NonGabrielEntry {
                        edge: *s,
                        value: coface_min,
                        blockers: blockers.clone(),
                    });
                    coface_min
                };
                fc.insert(*s, value);
            }
            Simplex::T(_) => fc.insert(*s, tri_val[s]),
        }
    }
    (fc, non_gabriel)
}

/// Maximal members of a set of simplices: those that are not a proper face
/// of another member.
pub fn maximal_of_set(set: &std::collections::BTreeSet<Simplex>) -> Vec<Simplex> {
    set.iter()
        .filter(|s| !set.iter().any(|t| *s != t && s.is_face_of(t)))
        .copied()
        .collect()
}

/// Alpha values on a shared complex (a double or triple intersection), seen
/// by a worker holding `own_list` from its local computation.
///
/// Every edge of the intersection found in `own_list` adopts the listed
/// value. Edges whose non-Gabriel status is invisible from inside the
/// intersection — no coface present there has a blocking opposite vertex —
/// are returned separately: the other side of the intersection cannot have
/// detected them, so their values must be exchanged.
pub fn intersection_alpha<F>(
    set: &std::collections::BTreeSet<Simplex>,
    own_list: &[NonGabrielEntry],
    coords: F,
) -> (FilteredComplex2D, Vec<NonGabrielEntry>)
where
    F: Fn(usize) -> Point2,
{
    let (mut fc, local_ng) = alpha_filtration(&maximal_of_set(set), &coords);
    let visible: std::collections::BTreeSet<Simplex> =
        local_ng.iter().map(|e| e.edge).collect();
    let mut critical = Vec::new();
    for entry in own_list {
        if fc.contains(&entry.edge) {
            fc.insert(entry.edge, entry.value);
            if !visible.contains(&entry.edge) {
                critical.push(entry.clone());
            }
        }
    }
    (fc, critical)
}

/// The values a zone can certify: those of simplices with at least one owned
/// vertex. Every coface of such a simplex contains that vertex and therefore
/// lies in the zone's subcomplex, so these values coincide with the global
/// filtration.
///
/// Exchanging only the flagged critical edges would not be enough: an edge
/// owned by neither side of an intersection can be judged non-Gabriel by
/// both, each through a different adjacent triangle, which raises no flag
/// while the minima differ. Adopting owner values wholesale closes that gap.
pub fn authoritative_claims<F>(fc: &FilteredComplex2D, owns: F) -> BTreeMap<Simplex, f64>
where
    F: Fn(usize) -> bool,
{
    fc.simplices()
        .filter(|(s, _)| s.vertices().iter().any(|&v| owns(v)))
        .map(|(s, v)| (*s, v))
        .collect()
}

/// Two workers certified different values for the same simplex. With shared
/// arithmetic this cannot happen; it indicates a bug, not a data problem.
#[derive(Debug, Clone, PartialEq)]
pub struct InconsistentValue {
    pub simplex: Simplex,
    pub left: f64,
    pub right: f64,
}

impl std::fmt::Display for InconsistentValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "conflicting filtration values {} and {} for {:?}",
            self.left, self.right, self.simplex
        )
    }
}

/// Merges per-zone claims into one map, requiring bitwise agreement wherever
/// two zones certify the same simplex.
pub fn merge_claims<I>(claims: I) -> Result<BTreeMap<Simplex, f64>, InconsistentValue>
where
    I: IntoIterator<Item = BTreeMap<Simplex, f64>>,
{
    let mut merged: BTreeMap<Simplex, f64> = BTreeMap::new();
    for map in claims {
        for (s, v) in map {
            match merged.entry(s) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(v);
                }
                std::collections::btree_map::Entry::Occupied(e) => {
                    if e.get().to_bits() != v.to_bits() {
                        return Err(InconsistentValue {
                            simplex: s,
                            left: *e.get(),
                            right: v,
                        });
                    }
                }
            }
        }
    }
    Ok(merged)
}

/// Overwrites every simplex of `fc` that appears in the merged claims.
/// Afterwards `fc` agrees with the global filtration on all of its simplices
/// (every simplex has an endpoint owner among the claimants).
pub fn reconcile(fc: &mut FilteredComplex2D, merged: &BTreeMap<Simplex, f64>) {
    for (s, v) in merged {
        if fc.contains(s) {
            fc.insert(*s, *v);
        }
    }
}

/// Maximal simplices of a triangulation: its triangles, or its path edges in
/// the degenerate (collinear) case, or bare vertices.
pub fn maximal_simplices(tri: &Triangulation) -> Vec<Simplex> {
    let tris = tri.triangles();
    if !tris.is_empty() {
        return tris.into_iter().map(|t| Simplex::T(t)).collect();
    }
    let edges = tri.edges();
    if !edges.is_empty() {
        return edges.into_iter().map(|e| Simplex::E(e)).collect();
    }
    tri.vertices().map(|(id, _)| Simplex::V(id)).collect()
}

/// The alpha filtration of a full Delaunay triangulation.
pub fn global_alpha(tri: &Triangulation) -> FilteredComplex2D {
    let (fc, _) = alpha_filtration(&maximal_simplices(tri), |v| {
        tri.point(v).expect("vertex id without coordinates")
    });
    fc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud2(coords: &[(f64, f64)]) -> Vec<(usize, Point2)> {
        coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i, Point2::new(x, y)))
            .collect()
    }

    fn build(coords: &[(f64, f64)]) -> Triangulation {
        let pts: Vec<(usize, Point2)> = coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i, Point2::new(x, y)))
            .collect();
        Triangulation::build(&pts).unwrap()
    }

    #[test]
    fn single_triangle_values() {
        let t = build(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let fc = global_alpha(&t);
        assert_eq!(fc.value(&Simplex::triangle(0, 1, 2)), Some(0.5));
        assert_eq!(fc.value(&Simplex::edge(1, 2)), Some(0.5));
        assert_eq!(fc.value(&Simplex::edge(0, 1)), Some(0.25));
        assert_eq!(fc.value(&Simplex::edge(0, 2)), Some(0.25));
        for v in 0..3 {
            assert_eq!(fc.value(&Simplex::vertex(v)), Some(0.0));
        }
    }

    #[test]
    fn non_gabriel_edge_takes_min_adjacent_triangle_value() {
        // Quadrilateral with Delaunay diagonal (0,1); vertex 2 blocks the
        // diagonal's diametral disk, so the diagonal is non-Gabriel.
        let t = build(&[(0.0, 0.0), (2.0, 0.0), (1.0, 0.5), (1.0, -2.5)]);
        assert_eq!(t.triangles(), vec![[0, 1, 2], [0, 1, 3]]);
        let (fc, ng) = alpha_filtration(&maximal_simplices(&t), |v| t.point(v).unwrap());
        let diag = Simplex::edge(0, 1);
        assert_eq!(ng.len(), 1);
        assert_eq!(ng[0].edge, diag);
        assert_eq!(ng[0].blockers, vec![2]);
        let v = fc.value(&diag).unwrap();
        assert_eq!(v, 1.5625); // circumradius^2 of (0,1,2), the smaller coface
        assert!(v > 1.0); // strictly above the squared half-length
    }

    #[test]
    fn degenerate_path_is_gabriel_everywhere() {
        let t = build(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)]);
        let fc = global_alpha(&t);
        assert_eq!(fc.value(&Simplex::edge(0, 1)), Some(0.25));
        assert_eq!(fc.value(&Simplex::edge(1, 2)), Some(1.0));
        assert!(fc.is_monotone());
    }

    #[test]
    fn reduction_order_breaks_ties_by_dim_then_tuple() {
        let t = build(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let fc = global_alpha(&t);
        let order = fc.reduction_order();
        // Vertices (value 0) first in id order, then the two legs (0.25),
        // then hypotenuse and triangle tied at 0.5 with the edge first.
        assert_eq!(
            order,
            vec![
                Simplex::vertex(0),
                Simplex::vertex(1),
                Simplex::vertex(2),
                Simplex::edge(0, 1),
                Simplex::edge(0, 2),
                Simplex::edge(1, 2),
                Simplex::triangle(0, 1, 2),
            ]
        );
    }

    /// A shared vertical edge whose blocking vertex lies entirely on one side
    /// of a 2x1 grid. The left zone owns only the far vertex, judges the edge
    /// Gabriel, and assigns the diametral value; the right zone owns both
    /// endpoints and the blocker, flags the edge when valuing the
    /// intersection, and reconciliation repairs the left copy exactly.
    #[test]
    fn critical_non_gabriel_edge_reconciled() {
        use crate::cover::{compute_grid, compute_intersections, expand_until_stable};
        let pts = cloud2(&[(0.0, 3.0), (0.0, -1.0), (1.4, 1.0), (-3.4, 1.6)]);
        let coords = |v: usize| pts[v].1;
        let grid = compute_grid(&pts, 2, 1, 1000).unwrap();
        assert_eq!(grid.assignment[0], vec![3]); // only the far vertex is left
        let ks: Vec<_> = (0..2)
            .map(|z| expand_until_stable(&grid, &pts, z).unwrap())
            .collect();
        let (a0, ng0) = alpha_filtration(&ks[0].maximal, coords);
        let (a1, ng1) = alpha_filtration(&ks[1].maximal, coords);
        let ab = Simplex::edge(0, 1);
        // Blocked by vertex 2, so the true value is the circumradius^2 of
        // the blocking triangle (the smaller coface), not the diametral 4.0.
        let expected = circumdata_triangle(coords(0), coords(1), coords(2))
            .unwrap()
            .squared_radius;
        assert!(expected > 4.0);
        assert_eq!(a0.value(&ab), Some(4.0)); // wrong: blocker invisible
        assert!(ng0.is_empty());
        assert_eq!(ng1.len(), 1);
        assert_eq!((ng1[0].edge, ng1[0].value), (ab, expected));
        assert_eq!(ng1[0].blockers, vec![2]);

        let set = compute_intersections(&grid, &ks);
        let shared = &set.pairs[&(0, 1)];
        let (i1, crit1) = intersection_alpha(shared, &ng1, coords);
        assert_eq!(crit1.len(), 1);
        assert_eq!(crit1[0].edge, ab);
        assert_eq!(i1.value(&ab), Some(expected));
        let (i0, crit0) = intersection_alpha(shared, &ng0, coords);
        assert!(crit0.is_empty());
        assert_eq!(i0.value(&ab), Some(4.0)); // the disagreement to repair

        let claims = merge_claims((0..2).map(|z| {
            let fc = if z == 0 { &a0 } else { &a1 };
            authoritative_claims(fc, |v| grid.assignment[z].contains(&v))
        }))
        .unwrap();
        let tri = Triangulation::build(&pts).unwrap();
        let global = global_alpha(&tri);
        for mut fc in [a0, a1, i0, i1] {
            reconcile(&mut fc, &claims);
            for (s, v) in fc.simplices() {
                assert_eq!(global.value(s).unwrap().to_bits(), v.to_bits());
            }
            assert!(fc.is_monotone());
        }
    }

    #[test]
    fn merge_claims_rejects_conflicts() {
        let e = Simplex::edge(0, 1);
        let a = BTreeMap::from([(e, 1.0)]);
        let b = BTreeMap::from([(e, 2.0)]);
        assert_eq!(merge_claims([a.clone(), a.clone()]), Ok(BTreeMap::from([(e, 1.0)])));
        let err = merge_claims([a, b]).unwrap_err();
        assert_eq!((err.simplex, err.left, err.right), (e, 1.0, 2.0));
    }

    #[test]
    fn reconciliation_matches_global_on_random_clouds() {
        use crate::cover::{compute_grid, compute_intersections, expand_until_stable};
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for &(m1, m2) in &[(2usize, 2usize), (3, 2)] {
            let pts: Vec<(usize, Point2)> = (0..300)
                .map(|i| (i, Point2::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0))))
                .collect();
            let coords = |v: usize| pts[v].1;
            let grid = compute_grid(&pts, m1, m2, 50).unwrap();
            let zones = m1 * m2;
            let ks: Vec<_> = (0..zones)
                .map(|z| expand_until_stable(&grid, &pts, z).unwrap())
                .collect();
            let set = compute_intersections(&grid, &ks);
            let locals: Vec<_> = ks.iter().map(|k| alpha_filtration(&k.maximal, coords)).collect();
            let claims = merge_claims(locals.iter().enumerate().map(|(z, (fc, _))| {
                authoritative_claims(fc, |v| grid.assignment[z].contains(&v))
            }))
            .unwrap();
            let global = global_alpha(&Triangulation::build(&pts).unwrap());
            let shared = set
                .pairs
                .iter()
                .map(|((i, _), s)| (*i, s))
                .chain(set.triples.iter().map(|((i, _, _), s)| (*i, s)));
            let shared_fcs = shared.map(|(i, s)| intersection_alpha(s, &locals[i].1, coords).0);
            for mut fc in locals.iter().map(|(fc, _)| fc.clone()).chain(shared_fcs) {
                reconcile(&mut fc, &claims);
                for (s, v) in fc.simplices() {
                    assert_eq!(global.value(s).unwrap().to_bits(), v.to_bits());
                }
                assert!(fc.is_monotone());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn alpha_is_monotone_on_random_clouds(seed in 0u64..200, n in 3usize..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<(usize, Point2)> = (0..n)
                .map(|i| (i, Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))))
                .collect();
            let t = Triangulation::build(&pts).unwrap();
            let fc = global_alpha(&t);
            prop_assert!(fc.is_monotone());
            prop_assert!(fc.simplices().all(|(_, v)| v >= 0.0));
        }
    }
}
