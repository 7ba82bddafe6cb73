//! Incremental 2D Delaunay triangulation.
//!
//! Bowyer-Watson insertion with walking point location. Instead of a
//! super-triangle the structure keeps one symbolic infinite vertex, so the
//! stored complex is a triangulated topological sphere: every directed edge
//! has exactly one owning triangle and the hull needs no special casing
//! during cavity carving. Cocircular ties are resolved by the id-keyed
//! symbolic perturbation of [`crate::geometry`], which makes the triangle set
//! unique and hence independent of insertion order.
//!
//! Inputs with fewer than three points, or with all points collinear, are
//! kept as a sorted path (the correct Delaunay limit in dimension <= 1); the
//! first insertion that breaks collinearity triggers a full rebuild.

use crate::geometry::{in_circle_perturbed, orientation, Point2};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Sentinel id for the infinite vertex. Never appears in the public API.
const INF: usize = usize::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum DelaunayError {
    #[error("duplicate point: ids {0} and {1} share coordinates")]
    DuplicatePoint(usize, usize),
    #[error("point id {0} inserted twice")]
    DuplicateId(usize),
    #[error("internal triangulation inconsistency: {0}")]
    Internal(&'static str),
}

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    alive: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Triangulation {
    points: BTreeMap<usize, Point2>,
    by_coord: HashMap<(u64, u64), usize>,
    tris: Vec<Tri>,
    free: Vec<usize>,
    edge: HashMap<(usize, usize), usize>,
    last: usize,
    /// False while the point set is empty/degenerate (collinear).
    full2d: bool,
}

fn key(p: &Point2) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

impl Triangulation {
    /// Builds the triangulation of `points` (global id, coordinates).
    pub fn build(points: &[(usize, Point2)]) -> Result<Self, DelaunayError> {
        let mut t = Triangulation::default();
        t.insert(points)?;
        Ok(t)
    }

    /// Inserts additional points. The result equals `build` of the union.
    pub fn insert(&mut self, new_points: &[(usize, Point2)]) -> Result<(), DelaunayError> {
        for &(id, p) in new_points {
            if id == INF {
                return Err(DelaunayError::Internal("reserved id"));
            }
            if self.points.contains_key(&id) {
                return Err(DelaunayError::DuplicateId(id));
            }
            if let Some(&other) = self.by_coord.get(&key(&p)) {
                return Err(DelaunayError::DuplicatePoint(other, id));
            }
            self.points.insert(id, p);
            self.by_coord.insert(key(&p), id);
            if self.full2d {
                self.bw_insert(id, p)?;
            }
        }
        if !self.full2d && !self.is_degenerate_set() {
            self.rebuild()?;
        }
        Ok(())
    }

    /// True once the point set spans the plane (at least one triangle).
    pub fn is_full2d(&self) -> bool {
        self.full2d
    }

    pub fn vertices(&self) -> impl Iterator<Item = (usize, Point2)> + '_ {
        self.points.iter().map(|(&id, &p)| (id, p))
    }

    pub fn point(&self, id: usize) -> Option<Point2> {
        self.points.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Finite triangles, each as a sorted id triple, in sorted order.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let mut out: Vec<[usize; 3]> = self
            .tris
            .iter()
            .filter(|t| t.alive && !t.v.contains(&INF))
            .map(|t| {
                let mut v = t.v;
                v.sort_unstable();
                v
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Directed convex-hull edges `[s, t]` with the exterior open half-plane
    /// strictly to the left of s → t. Empty for degenerate point sets.
    pub fn hull_edges(&self) -> Vec<[usize; 2]> {
        let mut out: Vec<[usize; 2]> = self
            .tris
            .iter()
            .filter(|t| t.alive)
            .filter_map(|t| {
                t.v.iter()
                    .position(|&x| x == INF)
                    .map(|i| [t.v[(i + 1) % 3], t.v[(i + 2) % 3]])
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Undirected edges as sorted id pairs, in sorted order. For degenerate
    /// (collinear) inputs these are the consecutive-path edges.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        if self.full2d {
            let mut out: Vec<[usize; 2]> = self
                .edge
                .keys()
                .filter(|&&(u, v)| u != INF && v != INF && u < v)
                .map(|&(u, v)| [u, v])
                .collect();
            out.sort_unstable();
            out
        } else {
            let order = self.collinear_order();
            order.windows(2).map(|w| {
                let mut e = [w[0], w[1]];
                e.sort_unstable();
                e
            }).collect()
        }
    }

    /// For each finite triangle (sorted triple), whether no witness lies
    /// strictly inside its circumcircle under the perturbed predicate.
    pub fn is_delaunay(&self, witnesses: &[(usize, Point2)]) -> Vec<([usize; 3], bool)> {
        self.triangles()
            .into_iter()
            .map(|t| {
                let a = (self.points[&t[0]], t[0]);
                let b = (self.points[&t[1]], t[1]);
                let c = (self.points[&t[2]], t[2]);
                let ok = witnesses.iter().all(|&(wid, wp)| {
                    t.contains(&wid) || in_circle_perturbed(a, b, c, (wp, wid)) != 1
                });
                (t, ok)
            })
            .collect()
    }

    // ----- internals -------------------------------------------------------

    fn is_degenerate_set(&self) -> bool {
        if self.points.len() < 3 {
            return true;
        }
        let pts: Vec<Point2> = self.points.values().copied().collect();
        let (a, b) = (pts[0], pts[1]);
        pts[2..].iter().all(|&c| orientation(a, b, c) == 0)
    }

    /// Vertex ids sorted along the common line (degenerate mode only).
    fn collinear_order(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.points.keys().copied().collect();
        if ids.len() < 2 {
            return ids;
        }
        let pts: Vec<Point2> = self.points.values().copied().collect();
        let (xs, ys) = (
            pts.iter().map(|p| p.x).fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v))),
            pts.iter().map(|p| p.y).fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v))),
        );
        if xs.1 - xs.0 >= ys.1 - ys.0 {
            ids.sort_by(|a, b| {
                let (pa, pb) = (self.points[a], self.points[b]);
                (pa.x, pa.y).partial_cmp(&(pb.x, pb.y)).unwrap()
            });
        } else {
            ids.sort_by(|a, b| {
                let (pa, pb) = (self.points[a], self.points[b]);
                (pa.y, pa.x).partial_cmp(&(pb.y, pb.x)).unwrap()
            });
        }
        ids
    }

    fn rebuild(&mut self) -> Result<(), DelaunayError> {
        self.tris.clear();
        self.free.clear();
        self.edge.clear();
        self.last = 0;
        let ids: Vec<usize> = self.points.keys().copied().collect();
        let a = ids[0];
        let b = ids[1];
        let (pa, pb) = (self.points[&a], self.points[&b]);
        let c = *ids[2..]
            .iter()
            .find(|&&c| orientation(pa, pb, self.points[&c]) != 0)
            .ok_or(DelaunayError::Internal("rebuild on degenerate set"))?;
        let pc = self.points[&c];
        let (a, b) = if orientation(pa, pb, pc) < 0 { (b, a) } else { (a, b) };
        let t0 = self.alloc([a, b, c]);
        let t1 = self.alloc([b, a, INF]);
        let t2 = self.alloc([c, b, INF]);
        let t3 = self.alloc([a, c, INF]);
        for t in [t0, t1, t2, t3] {
            self.map_edges(t);
        }
        self.full2d = true;
        for &id in &ids {
            if id != a && id != b && id != c {
                let p = self.points[&id];
                self.bw_insert(id, p)?;
            }
        }
        Ok(())
    }

    fn alloc(&mut self, v: [usize; 3]) -> usize {
        if let Some(i) = self.free.pop() {
            self.tris[i] = Tri { v, alive: true };
            i
        } else {
            self.tris.push(Tri { v, alive: true });
            self.tris.len() - 1
        }
    }

    fn map_edges(&mut self, t: usize) {
        let v = self.tris[t].v;
        for k in 0..3 {
            self.edge.insert((v[k], v[(k + 1) % 3]), t);
        }
    }

    /// Whether point `p` (id `pid`) conflicts with triangle `t`, i.e. lies in
    /// its (perturbed) open circumdisk; for infinite triangles the disk limit
    /// is the open outer half-plane plus the open hull segment.
    fn in_conflict(&self, t: usize, pid: usize, p: Point2) -> bool {
        let v = self.tris[t].v;
        if let Some(i) = v.iter().position(|&x| x == INF) {
            let s = v[(i + 1) % 3];
            let tt = v[(i + 2) % 3];
            let (ps, pt) = (self.points[&s], self.points[&tt]);
            match orientation(ps, pt, p) {
                1 => true,
                0 => strictly_between(ps, pt, p),
                _ => false,
            }
        } else {
            let (a, b, c) = (v[0], v[1], v[2]);
            in_circle_perturbed(
                (self.points[&a], a),
                (self.points[&b], b),
                (self.points[&c], c),
                (p, pid),
            ) == 1
        }
    }

    /// Finds some triangle in conflict with `p` by walking, with a full-scan
    /// fallback for the rare degenerate walks.
    fn locate_conflict(&self, pid: usize, p: Point2) -> Result<usize, DelaunayError> {
        let mut cur = if self.last < self.tris.len() && self.tris[self.last].alive {
            self.last
        } else {
            self.tris
                .iter()
                .position(|t| t.alive)
                .ok_or(DelaunayError::Internal("no triangles"))?
        };
        let mut steps = 0usize;
        let max_steps = 4 * self.tris.len() + 16;
        'walk: while steps < max_steps {
            steps += 1;
            let v = self.tris[cur].v;
            if v.contains(&INF) {
                if self.in_conflict(cur, pid, p) {
                    return Ok(cur);
                }
                // Outside the hull but not visible from this hull edge: scan.
                break 'walk;
            }
            for k in 0..3 {
                let (u, w) = (v[k], v[(k + 1) % 3]);
                if orientation(self.points[&u], self.points[&w], p) < 0 {
                    cur = *self
                        .edge
                        .get(&(w, u))
                        .ok_or(DelaunayError::Internal("missing neighbor"))?;
                    continue 'walk;
                }
            }
            // p inside or on the current triangle: it must be in conflict.
            return Ok(cur);
        }
        self.tris
            .iter()
            .enumerate()
            .filter(|(_, t)| t.alive)
            .map(|(i, _)| i)
            .find(|&i| self.in_conflict(i, pid, p))
            .ok_or(DelaunayError::Internal("no conflict triangle found"))
    }

    fn bw_insert(&mut self, id: usize, p: Point2) -> Result<(), DelaunayError> {
        let seed = self.locate_conflict(id, p)?;
        // Flood-fill the conflict cavity.
        let mut cavity = vec![seed];
        let mut in_cavity: HashMap<usize, bool> = HashMap::new();
        in_cavity.insert(seed, true);
        let mut stack = vec![seed];
        while let Some(t) = stack.pop() {
            let v = self.tris[t].v;
            for k in 0..3 {
                let (u, w) = (v[k], v[(k + 1) % 3]);
                let nb = *self
                    .edge
                    .get(&(w, u))
                    .ok_or(DelaunayError::Internal("missing neighbor"))?;
                if let std::collections::hash_map::Entry::Vacant(e) = in_cavity.entry(nb) {
                    let c = self.in_conflict(nb, id, p);
                    e.insert(c);
                    if c {
                        cavity.push(nb);
                        stack.push(nb);
                    }
                }
            }
        }
        // Boundary directed edges: owned by a cavity triangle, neighbor outside.
        let mut boundary = Vec::new();
        for &t in &cavity {
            let v = self.tris[t].v;
            for k in 0..3 {
                let (u, w) = (v[k], v[(k + 1) % 3]);
                let nb = self.edge[&(w, u)];
                if !in_cavity.get(&nb).copied().unwrap_or(false) {
                    boundary.push((u, w));
                }
            }
        }
        // Carve and re-fan.
        for &t in &cavity {
            let v = self.tris[t].v;
            for k in 0..3 {
                self.edge.remove(&(v[k], v[(k + 1) % 3]));
            }
            self.tris[t].alive = false;
            self.free.push(t);
        }
        for &(u, w) in &boundary {
            let t = self.alloc([u, w, id]);
            self.map_edges(t);
            self.last = t;
        }
        Ok(())
    }
}

/// For exactly collinear `s`, `t`, `p`: whether `p` lies strictly inside the
/// segment. Coordinate comparisons only, so exact.
fn strictly_between(s: Point2, t: Point2, p: Point2) -> bool {
    if (s.x - t.x).abs() >= (s.y - t.y).abs() {
        (s.x < p.x && p.x < t.x) || (t.x < p.x && p.x < s.x)
    } else {
        (s.y < p.y && p.y < t.y) || (t.y < p.y && p.y < s.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::in_circle_perturbed;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(coords: &[(f64, f64)]) -> Vec<(usize, Point2)> {
        coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i, Point2::new(x, y)))
            .collect()
    }

    fn random_cloud(seed: u64, n: usize) -> Vec<(usize, Point2)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..n {
            out.push((i, Point2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0))));
        }
        out
    }

    fn brute_force_delaunay_ok(t: &Triangulation) -> bool {
        let all: Vec<(usize, Point2)> = t.vertices().collect();
        t.is_delaunay(&all).iter().all(|&(_, ok)| ok)
    }

    #[test]
    fn three_points_one_triangle() {
        let t = Triangulation::build(&pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])).unwrap();
        assert_eq!(t.triangles(), vec![[0, 1, 2]]);
        assert_eq!(t.edges(), vec![[0, 1], [0, 2], [1, 2]]);
    }

    #[test]
    fn square_diagonal_follows_perturbation_rule() {
        let corners = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let t = Triangulation::build(&corners).unwrap();
        let tris = t.triangles();
        assert_eq!(tris.len(), 2);
        // The chosen diagonal must agree with the perturbed in-circle verdict:
        // triangle (0,1,2) keeps vertex 3 outside iff the diagonal is 0-2.
        let s = in_circle_perturbed(
            (corners[0].1, 0),
            (corners[1].1, 1),
            (corners[2].1, 2),
            (corners[3].1, 3),
        );
        let diag02 = tris.contains(&[0, 1, 2]) && tris.contains(&[0, 2, 3]);
        let diag13 = tris.contains(&[0, 1, 3]) && tris.contains(&[1, 2, 3]);
        assert!(diag02 ^ diag13);
        assert_eq!(s == -1, diag02);
        assert!(brute_force_delaunay_ok(&t));
    }

    #[test]
    fn degenerate_inputs_form_paths() {
        let t = Triangulation::build(&[]).unwrap();
        assert!(t.triangles().is_empty() && t.edges().is_empty());
        let t = Triangulation::build(&pts(&[(1.0, 2.0)])).unwrap();
        assert!(t.triangles().is_empty() && t.edges().is_empty());
        let t = Triangulation::build(&pts(&[(0.0, 0.0), (2.0, 0.0), (1.0, 0.0), (3.0, 0.0)])).unwrap();
        assert!(t.triangles().is_empty());
        assert_eq!(t.edges(), vec![[0, 2], [1, 2], [1, 3]]);
    }

    #[test]
    fn collinear_then_breaking_point_rebuilds() {
        let mut t =
            Triangulation::build(&pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)])).unwrap();
        assert!(t.triangles().is_empty());
        t.insert(&[(4, Point2::new(1.5, 2.0))]).unwrap();
        assert_eq!(t.triangles().len(), 3);
        assert!(brute_force_delaunay_ok(&t));
    }

    #[test]
    fn duplicate_points_rejected() {
        let e = Triangulation::build(&[
            (0, Point2::new(1.0, 1.0)),
            (1, Point2::new(1.0, 1.0)),
        ])
        .unwrap_err();
        assert_eq!(e, DelaunayError::DuplicatePoint(0, 1));
        let mut t = Triangulation::build(&pts(&[(0.0, 0.0), (1.0, 0.0)])).unwrap();
        assert_eq!(
            t.insert(&[(0, Point2::new(5.0, 5.0))]).unwrap_err(),
            DelaunayError::DuplicateId(0)
        );
    }

    #[test]
    fn insert_empty_is_identity() {
        let mut t = Triangulation::build(&random_cloud(7, 30)).unwrap();
        let before = t.triangles();
        t.insert(&[]).unwrap();
        assert_eq!(before, t.triangles());
    }

    #[test]
    fn interior_insertion_adds_two_triangles() {
        let mut t = Triangulation::build(&pts(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)])).unwrap();
        t.insert(&[(3, Point2::new(1.0, 1.0))]).unwrap();
        assert_eq!(t.triangles().len(), 3);
        assert!(brute_force_delaunay_ok(&t));
    }

    #[test]
    fn fifty_random_points_empty_circumcircles() {
        let t = Triangulation::build(&random_cloud(42, 50)).unwrap();
        assert!(brute_force_delaunay_ok(&t));
    }

    #[test]
    fn build_then_insert_matches_build_all() {
        let cloud = random_cloud(3, 60);
        let mut partial = Triangulation::build(&cloud[..40]).unwrap();
        partial.insert(&cloud[40..]).unwrap();
        let full = Triangulation::build(&cloud).unwrap();
        assert_eq!(partial.triangles(), full.triangles());
    }

    #[test]
    fn euler_relation_holds() {
        for seed in 0..5u64 {
            let t = Triangulation::build(&random_cloud(seed, 80)).unwrap();
            let v = t.len() as i64;
            let e = t.edges().len() as i64;
            let f = t.triangles().len() as i64;
            assert_eq!(v - e + f, 1);
        }
    }

    #[test]
    fn points_on_hull_edge_lines_insert_cleanly() {
        // A grid has many collinear hull configurations.
        let mut coords = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                coords.push((i as f64, j as f64));
            }
        }
        let t = Triangulation::build(&pts(&coords)).unwrap();
        assert!(brute_force_delaunay_ok(&t));
        assert_eq!(t.triangles().len(), 32); // 2 per unit square
    }

    #[test]
    fn cocircular_cloud_is_handled() {
        // Many points on a common circle: every in-circle test of neighbors
        // degenerates to the symbolic perturbation.
        let mut coords = Vec::new();
        for k in 0..12 {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 12.0;
            coords.push((a.cos(), a.sin()));
        }
        let t = Triangulation::build(&pts(&coords)).unwrap();
        assert!(brute_force_delaunay_ok(&t));
        let v = t.len() as i64;
        let e = t.edges().len() as i64;
        let f = t.triangles().len() as i64;
        assert_eq!(v - e + f, 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn insertion_order_independent(seed in 0u64..500, n in 4usize..40, split in 1usize..3) {
            let mut cloud = random_cloud(seed, n);
            let full = Triangulation::build(&cloud).unwrap();
            // Reverse order.
            cloud.reverse();
            let rev = Triangulation::build(&cloud).unwrap();
            prop_assert_eq!(full.triangles(), rev.triangles());
            // Split build + insert.
            let k = cloud.len() / (split + 1);
            let mut part = Triangulation::build(&cloud[..k]).unwrap();
            part.insert(&cloud[k..]).unwrap();
            prop_assert_eq!(full.triangles(), part.triangles());
        }

        #[test]
        fn random_clouds_are_delaunay(seed in 500u64..600, n in 3usize..60) {
            let t = Triangulation::build(&random_cloud(seed, n)).unwrap();
            prop_assert!(brute_force_delaunay_ok(&t));
        }
    }
}
