//! Orthogonal range queries over small-dimensional point sets.
//!
//! A kd-tree storing per-subtree bounding boxes and weight aggregates. One
//! structure answers every query shape the solvers need: range max/min of a
//! stored weight, range max/min of a coordinate, emptiness, counting, and
//! enumeration. Empty ranges report sentinels via `Option`.
//!
//! Query boxes carry per-axis open/closed flags, so the strict comparisons
//! demanded by the dominance predicates are exact rather than
//! epsilon-adjusted.

const LEAF_SIZE: usize = 8;

/// One side of a query interval. `v` is the threshold, `incl` whether
/// equality passes.
#[derive(Clone, Copy, Debug)]
pub struct Bound {
    pub v: f64,
    pub incl: bool,
}

impl Bound {
    pub const NONE_LO: Bound = Bound {
        v: f64::NEG_INFINITY,
        incl: true,
    };
    pub const NONE_HI: Bound = Bound {
        v: f64::INFINITY,
        incl: true,
    };

    fn accepts_lo(&self, x: f64) -> bool {
        if self.incl {
            x >= self.v
        } else {
            x > self.v
        }
    }
    fn accepts_hi(&self, x: f64) -> bool {
        if self.incl {
            x <= self.v
        } else {
            x < self.v
        }
    }
}

/// Axis-aligned query box with per-axis bound styles.
#[derive(Clone, Debug)]
pub struct QueryBox {
    pub lo: Vec<Bound>,
    pub hi: Vec<Bound>,
}

impl QueryBox {
    pub fn all(dim: usize) -> Self {
        QueryBox {
            lo: vec![Bound::NONE_LO; dim],
            hi: vec![Bound::NONE_HI; dim],
        }
    }

    /// Constrain to `x[axis] > v` (or `>= v` with `incl`).
    pub fn above(mut self, axis: usize, v: f64, incl: bool) -> Self {
        self.lo[axis] = Bound { v, incl };
        self
    }

    /// Constrain to `x[axis] < v` (or `<= v` with `incl`).
    pub fn below(mut self, axis: usize, v: f64, incl: bool) -> Self {
        self.hi[axis] = Bound { v, incl };
        self
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(i, &x)| self.lo[i].accepts_lo(x) && self.hi[i].accepts_hi(x))
    }

    fn dim(&self) -> usize {
        self.lo.len()
    }
}

#[derive(Clone, Copy)]
struct Node {
    left: i32,
    right: i32,
    start: u32,
    end: u32,
    wmin: f64,
    wmax: f64,
}

enum Overlap {
    Disjoint,
    Full,
    Partial,
}

/// kd-tree over `n` points in `dim` dimensions with optional weights.
pub struct RangeIndex {
    dim: usize,
    pts: Vec<f64>,
    ids: Vec<u32>,
    weights: Option<Vec<f64>>,
    nodes: Vec<Node>,
    bboxes: Vec<f64>,
    root: i32,
}

impl RangeIndex {
    /// `points` is row-major `n x dim`. `weights`, when given, is aligned to
    /// the original point order.
    pub fn build(dim: usize, points: &[f64], weights: Option<&[f64]>) -> Self {
        assert!(dim > 0 && points.len() % dim == 0);
        let n = points.len() / dim;
        if let Some(w) = weights {
            assert_eq!(w.len(), n);
        }
        let mut idx = RangeIndex {
            dim,
            pts: points.to_vec(),
            ids: (0..n as u32).collect(),
            weights: weights.map(|w| w.to_vec()),
            nodes: Vec::new(),
            bboxes: Vec::new(),
            root: -1,
        };
        if n > 0 {
            let mut order: Vec<u32> = (0..n as u32).collect();
            idx.root = idx.build_rec(points, weights, &mut order, 0, n);
            // Reorder storage to match leaf order.
            let mut pts = Vec::with_capacity(points.len());
            let mut w = weights.map(|_| Vec::with_capacity(n));
            for &o in &order {
                pts.extend_from_slice(&points[o as usize * dim..(o as usize + 1) * dim]);
                if let (Some(dst), Some(src)) = (w.as_mut(), weights) {
                    dst.push(src[o as usize]);
                }
            }
            idx.pts = pts;
            idx.ids = order;
            idx.weights = w;
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn build_rec(
        &mut self,
        points: &[f64],
        weights: Option<&[f64]>,
        order: &mut [u32],
        offset: usize,
        n_total: usize,
    ) -> i32 {
        let dim = self.dim;
        let mut bbox = vec![f64::INFINITY; dim]
            .into_iter()
            .chain(vec![f64::NEG_INFINITY; dim])
            .collect::<Vec<f64>>();
        let mut wmin = f64::INFINITY;
        let mut wmax = f64::NEG_INFINITY;
        for &o in order.iter() {
            let p = &points[o as usize * dim..(o as usize + 1) * dim];
            for a in 0..dim {
                bbox[a] = bbox[a].min(p[a]);
                bbox[dim + a] = bbox[dim + a].max(p[a]);
            }
            if let Some(w) = weights {
                wmin = wmin.min(w[o as usize]);
                wmax = wmax.max(w[o as usize]);
            }
        }
        let id = self.nodes.len() as i32;
        self.nodes.push(Node {
            left: -1,
            right: -1,
            start: offset as u32,
            end: (offset + order.len()) as u32,
            wmin,
            wmax,
        });
        self.bboxes.extend_from_slice(&bbox);

        if order.len() > LEAF_SIZE {
            // Split on the widest axis at the median position.
            let mut axis = 0;
            let mut best = f64::NEG_INFINITY;
            for a in 0..dim {
                let w = bbox[dim + a] - bbox[a];
                if w > best {
                    best = w;
                    axis = a;
                }
            }
            let mid = order.len() / 2;
            order.select_nth_unstable_by(mid, |&x, &y| {
                let vx = points[x as usize * dim + axis];
                let vy = points[y as usize * dim + axis];
                vx.partial_cmp(&vy).unwrap().then(x.cmp(&y))
            });
            let (l, r) = order.split_at_mut(mid);
            // Degenerate spreads (all points equal) stay a leaf.
            if !l.is_empty() && !r.is_empty() {
                let left = self.build_rec(points, weights, l, offset, n_total);
                let right = self.build_rec(points, weights, r, offset + mid, n_total);
                self.nodes[id as usize].left = left;
                self.nodes[id as usize].right = right;
            }
        }
        id
    }

    fn classify(&self, node: i32, q: &QueryBox) -> Overlap {
        let b = &self.bboxes[node as usize * 2 * self.dim..(node as usize + 1) * 2 * self.dim];
        let mut full = true;
        for a in 0..self.dim {
            let (bmin, bmax) = (b[a], b[self.dim + a]);
            // Entirely outside on this axis?
            if !q.lo[a].accepts_lo(bmax) || !q.hi[a].accepts_hi(bmin) {
                return Overlap::Disjoint;
            }
            if !(q.lo[a].accepts_lo(bmin) && q.hi[a].accepts_hi(bmax)) {
                full = false;
            }
        }
        if full {
            Overlap::Full
        } else {
            Overlap::Partial
        }
    }

    fn point(&self, slot: usize) -> &[f64] {
        &self.pts[slot * self.dim..(slot + 1) * self.dim]
    }

    /// Visit every point inside `q`; the callback gets (original id, slot).
    /// Returning `false` stops the traversal early.
    pub fn for_each_in(&self, q: &QueryBox, f: &mut impl FnMut(u32, usize) -> bool) -> bool {
        debug_assert_eq!(q.dim(), self.dim);
        if self.root < 0 {
            return true;
        }
        self.visit(self.root, q, f)
    }

    fn visit(&self, node: i32, q: &QueryBox, f: &mut impl FnMut(u32, usize) -> bool) -> bool {
        let nd = self.nodes[node as usize];
        match self.classify(node, q) {
            Overlap::Disjoint => true,
            Overlap::Full => {
                for slot in nd.start as usize..nd.end as usize {
                    if !f(self.ids[slot], slot) {
                        return false;
                    }
                }
                true
            }
            Overlap::Partial => {
                if nd.left < 0 {
                    for slot in nd.start as usize..nd.end as usize {
                        if q.contains(self.point(slot)) && !f(self.ids[slot], slot) {
                            return false;
                        }
                    }
                    true
                } else {
                    self.visit(nd.left, q, f) && self.visit(nd.right, q, f)
                }
            }
        }
    }

    pub fn count_in(&self, q: &QueryBox) -> usize {
        if self.root < 0 {
            return 0;
        }
        self.count_rec(self.root, q)
    }

    fn count_rec(&self, node: i32, q: &QueryBox) -> usize {
        let nd = self.nodes[node as usize];
        match self.classify(node, q) {
            Overlap::Disjoint => 0,
            Overlap::Full => (nd.end - nd.start) as usize,
            Overlap::Partial => {
                if nd.left < 0 {
                    (nd.start as usize..nd.end as usize)
                        .filter(|&s| q.contains(self.point(s)))
                        .count()
                } else {
                    self.count_rec(nd.left, q) + self.count_rec(nd.right, q)
                }
            }
        }
    }

    pub fn any_in(&self, q: &QueryBox) -> Option<u32> {
        let mut found = None;
        self.for_each_in(q, &mut |id, _| {
            found = Some(id);
            false
        });
        found
    }

    /// Maximum of `coord[axis]` over points in `q`, with a witness id.
    pub fn coord_max_in(&self, q: &QueryBox, axis: usize) -> Option<(f64, u32)> {
        self.extreme(q, axis, true)
    }

    pub fn coord_min_in(&self, q: &QueryBox, axis: usize) -> Option<(f64, u32)> {
        self.extreme(q, axis, false)
    }

    fn extreme(&self, q: &QueryBox, axis: usize, want_max: bool) -> Option<(f64, u32)> {
        let mut best: Option<(f64, u32)> = None;
        if self.root >= 0 {
            self.extreme_rec(self.root, q, axis, want_max, &mut best);
        }
        best
    }

    fn extreme_rec(
        &self,
        node: i32,
        q: &QueryBox,
        axis: usize,
        want_max: bool,
        best: &mut Option<(f64, u32)>,
    ) {
        let nd = self.nodes[node as usize];
        let b = &self.bboxes[node as usize * 2 * self.dim..(node as usize + 1) * 2 * self.dim];
        let potential = if want_max { b[self.dim + axis] } else { b[axis] };
        if let Some((bv, _)) = best {
            if (want_max && potential <= *bv) || (!want_max && potential >= *bv) {
                return;
            }
        }
        match self.classify(node, q) {
            Overlap::Disjoint => {}
            Overlap::Full | Overlap::Partial => {
                let full = matches!(self.classify(node, q), Overlap::Full);
                if nd.left < 0 || full {
                    // Leaf scan, or a fully-contained subtree whose bbox
                    // already bounds the answer; scan its slots.
                    for slot in nd.start as usize..nd.end as usize {
                        let p = self.point(slot);
                        if !full && !q.contains(p) {
                            continue;
                        }
                        let v = p[axis];
                        let better = match best {
                            None => true,
                            Some((bv, _)) => {
                                if want_max {
                                    v > *bv
                                } else {
                                    v < *bv
                                }
                            }
                        };
                        if better {
                            *best = Some((v, self.ids[slot]));
                        }
                    }
                } else {
                    // Explore the more promising child first.
                    let (l, r) = (nd.left, nd.right);
                    let key = |c: i32| {
                        let bb = &self.bboxes[c as usize * 2 * self.dim..];
                        if want_max {
                            bb[self.dim + axis]
                        } else {
                            -bb[axis]
                        }
                    };
                    let (first, second) = if key(l) >= key(r) { (l, r) } else { (r, l) };
                    self.extreme_rec(first, q, axis, want_max, best);
                    self.extreme_rec(second, q, axis, want_max, best);
                }
            }
        }
    }

    /// Minimum stored weight over points in `q`, with a witness id.
    pub fn weight_min_in(&self, q: &QueryBox) -> Option<(f64, u32)> {
        self.weight_extreme(q, false)
    }

    pub fn weight_max_in(&self, q: &QueryBox) -> Option<(f64, u32)> {
        self.weight_extreme(q, true)
    }

    fn weight_extreme(&self, q: &QueryBox, want_max: bool) -> Option<(f64, u32)> {
        let w = self.weights.as_ref().expect("index built without weights");
        let mut best: Option<(f64, u32)> = None;
        if self.root >= 0 {
            self.weight_rec(self.root, q, w, want_max, &mut best);
        }
        best
    }

    fn weight_rec(
        &self,
        node: i32,
        q: &QueryBox,
        w: &[f64],
        want_max: bool,
        best: &mut Option<(f64, u32)>,
    ) {
        let nd = self.nodes[node as usize];
        let potential = if want_max { nd.wmax } else { nd.wmin };
        if let Some((bv, _)) = best {
            if (want_max && potential <= *bv) || (!want_max && potential >= *bv) {
                return;
            }
        }
        match self.classify(node, q) {
            Overlap::Disjoint => {}
            ov => {
                let full = matches!(ov, Overlap::Full);
                if nd.left < 0 || full {
                    for slot in nd.start as usize..nd.end as usize {
                        if !full && !q.contains(self.point(slot)) {
                            continue;
                        }
                        let v = w[slot];
                        let better = match best {
                            None => true,
                            Some((bv, _)) => {
                                if want_max {
                                    v > *bv
                                } else {
                                    v < *bv
                                }
                            }
                        };
                        if better {
                            *best = Some((v, self.ids[slot]));
                        }
                    }
                } else {
                    let key = |c: i32| {
                        let n = &self.nodes[c as usize];
                        if want_max {
                            n.wmax
                        } else {
                            -n.wmin
                        }
                    };
                    let (first, second) = if key(nd.left) >= key(nd.right) {
                        (nd.left, nd.right)
                    } else {
                        (nd.right, nd.left)
                    };
                    self.weight_rec(first, q, w, want_max, best);
                    self.weight_rec(second, q, w, want_max, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_query(rng: &mut StdRng, dim: usize) -> QueryBox {
        let mut q = QueryBox::all(dim);
        for a in 0..dim {
            if rng.gen_bool(0.7) {
                q.lo[a] = Bound {
                    v: rng.gen_range(-1.2..1.2),
                    incl: rng.gen_bool(0.5),
                };
            }
            if rng.gen_bool(0.7) {
                q.hi[a] = Bound {
                    v: rng.gen_range(-1.2..1.2),
                    incl: rng.gen_bool(0.5),
                };
            }
        }
        q
    }

    #[test]
    fn matches_naive_on_random_queries() {
        let mut rng = StdRng::seed_from_u64(31);
        for dim in [1usize, 2, 3, 6] {
            for &n in &[0usize, 1, 7, 64, 300] {
                let pts: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let ws: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let idx = RangeIndex::build(dim, &pts, Some(&ws));
                for _ in 0..60 {
                    let q = random_query(&mut rng, dim);
                    let inside: Vec<usize> = (0..n)
                        .filter(|&i| q.contains(&pts[i * dim..(i + 1) * dim]))
                        .collect();
                    assert_eq!(idx.count_in(&q), inside.len());
                    assert_eq!(idx.any_in(&q).is_some(), !inside.is_empty());
                    let naive_wmax = inside
                        .iter()
                        .map(|&i| ws[i])
                        .fold(f64::NEG_INFINITY, f64::max);
                    match idx.weight_max_in(&q) {
                        Some((v, id)) => {
                            assert_eq!(v, naive_wmax);
                            assert!(inside.contains(&(id as usize)));
                            assert_eq!(ws[inside.iter().position(|&i| i == id as usize).map(|p| inside[p]).unwrap()], v);
                        }
                        None => assert!(inside.is_empty()),
                    }
                    let naive_wmin =
                        inside.iter().map(|&i| ws[i]).fold(f64::INFINITY, f64::min);
                    match idx.weight_min_in(&q) {
                        Some((v, _)) => assert_eq!(v, naive_wmin),
                        None => assert!(inside.is_empty()),
                    }
                    for axis in 0..dim {
                        let naive_cmax = inside
                            .iter()
                            .map(|&i| pts[i * dim + axis])
                            .fold(f64::NEG_INFINITY, f64::max);
                        match idx.coord_max_in(&q, axis) {
                            Some((v, _)) => assert_eq!(v, naive_cmax),
                            None => assert!(inside.is_empty()),
                        }
                        let naive_cmin = inside
                            .iter()
                            .map(|&i| pts[i * dim + axis])
                            .fold(f64::INFINITY, f64::min);
                        match idx.coord_min_in(&q, axis) {
                            Some((v, _)) => assert_eq!(v, naive_cmin),
                            None => assert!(inside.is_empty()),
                        }
                    }
                    let mut seen = Vec::new();
                    idx.for_each_in(&q, &mut |id, _| {
                        seen.push(id as usize);
                        true
                    });
                    seen.sort_unstable();
                    assert_eq!(seen, inside);
                }
            }
        }
    }

    #[test]
    fn strict_bounds_exclude_boundary_points() {
        // Points exactly on a strict bound must not be reported.
        let pts = vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        let idx = RangeIndex::build(2, &pts, None);
        let q = QueryBox::all(2).above(0, 1.0, false);
        assert_eq!(idx.count_in(&q), 1);
        let q = QueryBox::all(2).above(0, 1.0, true);
        assert_eq!(idx.count_in(&q), 2);
        let q = QueryBox::all(2).below(1, 0.0, false);
        assert_eq!(idx.count_in(&q), 0);
    }
}
