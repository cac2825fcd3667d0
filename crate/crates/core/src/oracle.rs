//! Ground-truth layer: explicit intersection graphs, BFS distances, and
//! brute-force multipartite reachability checks.
//!
//! Everything here is allowed quadratic (or cubic) work; the fast deciders
//! are validated against this module on randomized suites.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bits::Bits;
use crate::geom::{GeomError, GeomObject};
use crate::instance::Instance;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("objects of mixed kinds or dimensions")]
    MixedKinds,
    #[error("expected {want} groups for hops={hops}, got {got}")]
    WrongGroupCount { want: usize, got: usize, hops: usize },
    #[error("hops must be 2 or 3, got {0}")]
    BadHops(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

pub const INFINITE_DIST: u32 = u32::MAX;

/// Distances from one source vertex; `INFINITE_DIST` marks unreachable.
#[derive(Clone, Debug)]
pub struct DistanceMatrixSlice {
    pub source: u32,
    pub dist: Vec<u32>,
}

/// Explicit intersection graph with sorted adjacency lists.
#[derive(Clone, Debug)]
pub struct IntersectionGraph {
    adj: Vec<Vec<u32>>,
    part_of: Vec<u32>,
    part_names: Vec<String>,
}

impl IntersectionGraph {
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn part_of(&self, v: usize) -> u32 {
        self.part_of[v]
    }

    pub fn part_names(&self) -> &[String] {
        &self.part_names
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&(v as u32)).is_ok()
    }

    pub fn bfs(&self, source: usize) -> DistanceMatrixSlice {
        let mut dist = vec![INFINITE_DIST; self.n()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source as u32);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &v in &self.adj[u as usize] {
                if dist[v as usize] == INFINITE_DIST {
                    dist[v as usize] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        DistanceMatrixSlice {
            source: source as u32,
            dist,
        }
    }

    pub fn eccentricity(&self, source: usize) -> u32 {
        self.bfs(source).dist.into_iter().max().unwrap_or(0)
    }

    /// True iff the graph is connected and every eccentricity is at most
    /// `delta`. Disconnected graphs fail for every finite `delta`.
    pub fn diameter_at_most(&self, delta: u32) -> bool {
        if self.n() == 0 {
            return true;
        }
        for v in 0..self.n() {
            if self.eccentricity(v) > delta {
                return false;
            }
        }
        true
    }

    pub fn diameter(&self) -> Option<u32> {
        let mut d = 0;
        for v in 0..self.n() {
            let e = self.eccentricity(v);
            if e == INFINITE_DIST {
                return None;
            }
            d = d.max(e);
        }
        Some(d)
    }
}

fn kind_id<S: Scalar>(o: &GeomObject<S>) -> usize {
    match o {
        GeomObject::UnitCube(_) => 0,
        GeomObject::Box(_) => 1,
        GeomObject::Ball(_) => 2,
    }
}

/// Exact intersection graph over a homogeneous object list.
///
/// Unit cubes in low dimension go through unit-grid bucketing: candidate
/// pairs come only from L-infinity-adjacent cells, which cannot drop an
/// edge because intersecting unit cubes have centers within distance 1 per
/// axis. Higher dimensions and the other kinds use the all-pairs scan.
pub fn build_intersection_graph<S: Scalar>(
    objects: &[GeomObject<S>],
) -> Result<IntersectionGraph, OracleError> {
    build_graph_with_parts(objects, &vec![0; objects.len()], vec!["V".into()])
}

pub fn build_graph_from_instance<S: Scalar>(
    inst: &Instance<S>,
) -> Result<IntersectionGraph, OracleError> {
    let (objects, part_of) = inst.all_objects().map_err(|_| OracleError::MixedKinds)?;
    let part_of: Vec<u32> = part_of.into_iter().map(|p| p as u32).collect();
    let names = inst.parts.iter().map(|p| p.name.clone()).collect();
    build_graph_with_parts(&objects, &part_of, names)
}

pub fn build_graph_with_parts<S: Scalar>(
    objects: &[GeomObject<S>],
    part_of: &[u32],
    part_names: Vec<String>,
) -> Result<IntersectionGraph, OracleError> {
    let n = objects.len();
    if n > 0 {
        let k = kind_id(&objects[0]);
        let d = objects[0].dim();
        if objects.iter().any(|o| kind_id(o) != k || o.dim() != d) {
            return Err(OracleError::MixedKinds);
        }
    }
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    let add = |adj: &mut Vec<Vec<u32>>, i: usize, j: usize| {
        adj[i].push(j as u32);
        adj[j].push(i as u32);
    };

    let bucketed = matches!(objects.first(), Some(GeomObject::UnitCube(c)) if c.dim() <= 4);
    if bucketed {
        // Bucket centers by unit cell, then only test L-inf adjacent cells.
        let dim = objects[0].dim();
        let mut cells: BTreeMap<Vec<i64>, Vec<u32>> = BTreeMap::new();
        for (i, o) in objects.iter().enumerate() {
            let GeomObject::UnitCube(c) = o else { unreachable!() };
            let key: Vec<i64> = c.coords().iter().map(|v| v.floor_i64()).collect();
            cells.entry(key).or_default().push(i as u32);
        }
        let offsets = enumerate_offsets(dim);
        for (key, members) in &cells {
            for (ai, &a) in members.iter().enumerate() {
                for &b in &members[ai + 1..] {
                    if objects[a as usize].intersects(&objects[b as usize])? {
                        add(&mut adj, a as usize, b as usize);
                    }
                }
            }
            for off in &offsets {
                // Visit each unordered cell pair once.
                if off <= &vec![0; dim] {
                    continue;
                }
                let nkey: Vec<i64> = key.iter().zip(off).map(|(k, o)| k + o).collect();
                if let Some(others) = cells.get(&nkey) {
                    for &a in members {
                        for &b in others {
                            if objects[a as usize].intersects(&objects[b as usize])? {
                                add(&mut adj, a as usize, b as usize);
                            }
                        }
                    }
                }
            }
        }
    } else {
        for i in 0..n {
            for j in i + 1..n {
                if objects[i].intersects(&objects[j])? {
                    add(&mut adj, i, j);
                }
            }
        }
    }

    for a in &mut adj {
        a.sort_unstable();
    }
    Ok(IntersectionGraph {
        adj,
        part_of: part_of.to_vec(),
        part_names,
    })
}

fn enumerate_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * 3);
        for prefix in &out {
            for d in [-1i64, 0, 1] {
                let mut v = prefix.clone();
                v.push(d);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Result of a multipartite reachability check.
#[derive(Clone, Debug)]
pub struct PathCheck {
    pub ok: bool,
    /// Violating `(first-group index, last-group index)` pairs, ascending,
    /// truncated to the reporting cap.
    pub violations: Vec<(usize, usize)>,
    pub truncated: bool,
}

pub const DEFAULT_VIOLATION_CAP: usize = 1024;

/// Brute-force witness-chain check.
///
/// `hops == 2` takes groups `[P, Q, R]` and decides whether every pair in
/// `P x R` has a common neighbor in `Q`. `hops == 3` takes `[P, Q, R, S]`
/// and decides whether every pair in `P x S` is linked by a chain
/// `p ~ q ~ r ~ s` with `q` from `Q` and `r` from `R`.
pub fn multipartite_common_path_check<S: Scalar>(
    groups: &[&[GeomObject<S>]],
    hops: usize,
    cap: usize,
) -> Result<PathCheck, OracleError> {
    let want = match hops {
        2 => 3,
        3 => 4,
        h => return Err(OracleError::BadHops(h)),
    };
    if groups.len() != want {
        return Err(OracleError::WrongGroupCount {
            want,
            got: groups.len(),
            hops,
        });
    }

    let adj_rows = |a: &[GeomObject<S>], b: &[GeomObject<S>]| -> Result<Vec<Bits>, OracleError> {
        let mut rows = Vec::with_capacity(a.len());
        for oa in a {
            let mut row = Bits::new(b.len());
            for (j, ob) in b.iter().enumerate() {
                if oa.intersects(ob)? {
                    row.set(j);
                }
            }
            rows.push(row);
        }
        Ok(rows)
    };

    let mut violations = Vec::new();
    let mut truncated = false;
    match hops {
        2 => {
            let (p, q, r) = (groups[0], groups[1], groups[2]);
            let pq = adj_rows(p, q)?;
            let rq = adj_rows(r, q)?;
            'outer: for (pi, prow) in pq.iter().enumerate() {
                for (ri, rrow) in rq.iter().enumerate() {
                    if !prow.intersects(rrow) {
                        if violations.len() >= cap {
                            truncated = true;
                            break 'outer;
                        }
                        violations.push((pi, ri));
                    }
                }
            }
        }
        3 => {
            let (p, q, r, s) = (groups[0], groups[1], groups[2], groups[3]);
            let pq = adj_rows(p, q)?;
            let qr = adj_rows(q, r)?;
            let sr = adj_rows(s, r)?;
            // 2-step reach: which R objects each p can see through Q.
            let mut reach: Vec<Bits> = Vec::with_capacity(p.len());
            for prow in &pq {
                let mut acc = Bits::new(r.len());
                for qi in prow.iter_ones() {
                    acc.or_assign(&qr[qi]);
                }
                reach.push(acc);
            }
            'outer3: for (pi, prow) in reach.iter().enumerate() {
                for (si, srow) in sr.iter().enumerate() {
                    if !prow.intersects(srow) {
                        if violations.len() >= cap {
                            truncated = true;
                            break 'outer3;
                        }
                        violations.push((pi, si));
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(PathCheck {
        ok: violations.is_empty() && !truncated,
        violations,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{BallD, PointD};
    use crate::scalar::Rat;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn cube(c: &[f64]) -> GeomObject<f64> {
        GeomObject::UnitCube(PointD::new(c.to_vec()).unwrap())
    }

    fn random_cubes(rng: &mut StdRng, n: usize, side: f64) -> Vec<GeomObject<f64>> {
        (0..n)
            .map(|_| {
                cube(&[
                    rng.gen_range(0.0..side),
                    rng.gen_range(0.0..side),
                    rng.gen_range(0.0..side),
                ])
            })
            .collect()
    }

    #[test]
    fn single_vertex() {
        let g = build_intersection_graph(&[cube(&[0.0, 0.0, 0.0])]).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.edge_count(), 0);
        assert!(g.diameter_at_most(0));
    }

    #[test]
    fn tangent_balls_form_edge() {
        let a = GeomObject::Ball(
            BallD::from_radius_sq(
                PointD::new(vec![Rat::int(0), Rat::int(0), Rat::int(0)]).unwrap(),
                Rat::new(1, 4),
            )
            .unwrap(),
        );
        let b = GeomObject::Ball(
            BallD::from_radius_sq(
                PointD::new(vec![Rat::int(1), Rat::int(0), Rat::int(0)]).unwrap(),
                Rat::new(1, 4),
            )
            .unwrap(),
        );
        let g = build_intersection_graph(&[a, b]).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn bucketed_build_equals_all_pairs() {
        let mut rng = StdRng::seed_from_u64(21);
        for trial in 0..20 {
            let n = 20 + trial * 24;
            let objs = random_cubes(&mut rng, n, 6.0);
            let g = build_intersection_graph(&objs).unwrap();
            let mut edges = 0;
            for i in 0..n {
                for j in i + 1..n {
                    let e = objs[i].intersects(&objs[j]).unwrap();
                    assert_eq!(g.has_edge(i, j), e, "pair ({i},{j})");
                    edges += e as usize;
                }
            }
            assert_eq!(g.edge_count(), edges);
        }
    }

    #[test]
    fn mixed_kinds_rejected() {
        let a = cube(&[0.0, 0.0, 0.0]);
        let b = GeomObject::Ball(
            BallD::from_radius(PointD::new(vec![0.0, 0.0, 0.0]).unwrap(), 1.0).unwrap(),
        );
        assert!(matches!(
            build_intersection_graph(&[a, b]),
            Err(OracleError::MixedKinds)
        ));
    }

    #[test]
    fn clique_and_disconnected_diameter() {
        // Five pairwise-intersecting cubes: diameter 1.
        let objs: Vec<_> = (0..5).map(|i| cube(&[i as f64 * 0.1, 0.0, 0.0])).collect();
        let g = build_intersection_graph(&objs).unwrap();
        assert!(g.diameter_at_most(1));
        // Two far cliques: disconnected, so no finite bound holds.
        let mut objs2 = objs.clone();
        objs2.push(cube(&[50.0, 0.0, 0.0]));
        objs2.push(cube(&[50.1, 0.0, 0.0]));
        let g2 = build_intersection_graph(&objs2).unwrap();
        assert!(!g2.diameter_at_most(1_000_000));
        assert_eq!(g2.diameter(), None);
    }

    #[test]
    fn bfs_symmetry_and_triangle_inequality() {
        let mut rng = StdRng::seed_from_u64(22);
        let objs = random_cubes(&mut rng, 120, 5.0);
        let g = build_intersection_graph(&objs).unwrap();
        let slices: Vec<_> = (0..g.n()).map(|v| g.bfs(v)).collect();
        for _ in 0..2000 {
            let u = rng.gen_range(0..g.n());
            let v = rng.gen_range(0..g.n());
            let w = rng.gen_range(0..g.n());
            assert_eq!(slices[u].dist[v], slices[v].dist[u]);
            let (duv, dvw, duw) = (
                slices[u].dist[v] as u64,
                slices[v].dist[w] as u64,
                slices[u].dist[w] as u64,
            );
            if duv != INFINITE_DIST as u64 && dvw != INFINITE_DIST as u64 {
                assert!(duw <= duv + dvw);
            }
            assert_eq!(slices[u].dist[u], 0);
        }
    }

    #[test]
    fn multipartite_trivial_cases() {
        let o = cube(&[0.0, 0.0, 0.0]);
        // Self-chain through the same cube.
        let r = multipartite_common_path_check(
            &[
                std::slice::from_ref(&o),
                std::slice::from_ref(&o),
                std::slice::from_ref(&o),
            ],
            2,
            16,
        )
        .unwrap();
        assert!(r.ok);
        // Far apart with empty middle: the pair is reported.
        let far = cube(&[40.0, 0.0, 0.0]);
        let empty: Vec<GeomObject<f64>> = Vec::new();
        let r = multipartite_common_path_check(
            &[std::slice::from_ref(&o), &empty, std::slice::from_ref(&far)],
            2,
            16,
        )
        .unwrap();
        assert!(!r.ok);
        assert_eq!(r.violations, vec![(0, 0)]);
        // Wrong group count is an error.
        assert!(multipartite_common_path_check(&[&[o.clone()], &[o.clone()]], 2, 16).is_err());
    }

    #[test]
    fn multipartite_matches_bfs_distances() {
        // On a tripartite split of random cubes, the 2-hop check must agree
        // with BFS distance <= 2 computed through middle-group vertices only.
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..50 {
            let p = random_cubes(&mut rng, 20, 3.0);
            let q = random_cubes(&mut rng, 20, 3.0);
            let r = random_cubes(&mut rng, 20, 3.0);
            let chk = multipartite_common_path_check(&[&p, &q, &r], 2, usize::MAX).unwrap();
            for pi in 0..p.len() {
                for ri in 0..r.len() {
                    let direct = q.iter().any(|qq| {
                        p[pi].intersects(qq).unwrap() && r[ri].intersects(qq).unwrap()
                    });
                    assert_eq!(!chk.violations.contains(&(pi, ri)), direct);
                }
            }
        }
    }

    #[test]
    fn violation_cap_respected() {
        let p = vec![cube(&[0.0, 0.0, 0.0]); 10];
        let r = vec![cube(&[90.0, 0.0, 0.0]); 10];
        let q: Vec<GeomObject<f64>> = Vec::new();
        let chk = multipartite_common_path_check(&[&p, &q, &r], 2, 7).unwrap();
        assert!(!chk.ok);
        assert!(chk.truncated);
        assert_eq!(chk.violations.len(), 7);
    }
}
