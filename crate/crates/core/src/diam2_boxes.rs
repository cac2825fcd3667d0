//! Diameter-2 deciders for axis-aligned boxes (3D), rectangles (2D), and
//! cubes (3D).
//!
//! A box maps to two corner codes in `R^{2d}`: the lower code
//! `(lo_1, -hi_1, ..., lo_d, -hi_d)` and the upper code
//! `(hi_1, -lo_1, ..., hi_d, -lo_d)`. Two boxes intersect iff the lower
//! code of one is componentwise strictly below the upper code of the other
//! (under general position). The decider runs one restricted case per
//! size-`d` index subset `I` and per role orientation: within a case, only
//! pairs whose upper codes compare on `I` are checked, which lets the
//! off-`I` half of the witness condition collapse to membership in a
//! staircase union of orthants.
//!
//! An equal-frequency grid caps per-slab endpoint counts. For each box `p`,
//! the largest inscribed grid box splits its witnesses into those touching
//! the inscribed box (precomputed per distinct inscribed box, amortized via
//! bottomless grid boxes and a reach weight) and the few crossing its
//! boundary (handled per `p` through the staircase complement).

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::nonuniform_grid::NonuniformGrid;
use crate::range_index::{QueryBox, RangeIndex};
use crate::staircase::staircase_complement_decompose;

/// Axis-aligned closed box with runtime dimension 2 or 3.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxF {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxF {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        debug_assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b));
        BoxF { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn intersects(&self, other: &BoxF) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(other.lo.iter().zip(&other.hi))
            .all(|((alo, ahi), (blo, bhi))| alo <= bhi && blo <= ahi)
    }
}

/// Lower corner code `(lo_a, -hi_a)` per axis.
pub fn box_code_lower(b: &BoxF) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * b.dim());
    for a in 0..b.dim() {
        v.push(b.lo[a]);
        v.push(-b.hi[a]);
    }
    v
}

/// Upper corner code `(hi_a, -lo_a)` per axis.
pub fn box_code_upper(b: &BoxF) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * b.dim());
    for a in 0..b.dim() {
        v.push(b.hi[a]);
        v.push(-b.lo[a]);
    }
    v
}

/// Strict componentwise dominance between code vectors.
pub fn code_dominated(lower: &[f64], upper: &[f64]) -> bool {
    lower.iter().zip(upper).all(|(a, b)| a < b)
}

/// All size-`d` subsets of `{0, ..., 2d-1}` in lexicographic order.
pub fn projection_indices(dim: usize) -> Vec<Vec<usize>> {
    let m = 2 * dim;
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, m: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, d, cur, out);
            cur.pop();
        }
    }
    rec(0, m, dim, &mut cur, &mut out);
    out
}

#[derive(Clone, Copy, Debug)]
pub struct BoxSolveOpts {
    /// Slabs per grid axis; `None` picks the per-kind default.
    pub g: Option<usize>,
    pub exhaustive: bool,
    pub cap: usize,
}

impl Default for BoxSolveOpts {
    fn default() -> Self {
        BoxSolveOpts {
            g: None,
            exhaustive: false,
            cap: 1024,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoxDecision {
    pub ok: bool,
    pub violations: Vec<(u32, u32)>,
    pub truncated: bool,
}

/// Inscribed grid box of one input box, by breakpoint values.
#[derive(Clone, Debug)]
struct HatBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

struct Group {
    /// Reachable opposite-side boxes through witnesses touching the
    /// (bottomless) inscribed box, sorted by id.
    r_ids: Vec<u32>,
    /// Bottomless mode: best witness reach along the last axis per r_id.
    weights: Vec<f64>,
    index: RangeIndex,
}

/// Case engine for one role orientation (`a` plays the restricted-lower
/// side, `b` the restricted-upper side).
pub struct ProjectionEngine<'a> {
    dim: usize,
    a_boxes: &'a [BoxF],
    q_boxes: &'a [BoxF],
    bottomless: bool,
    upper_a: Vec<Vec<f64>>,
    lower_q: Vec<Vec<f64>>,
    b_index: RangeIndex,
    q_index: RangeIndex,
    hats: Vec<Option<HatBox>>,
    group_of: Vec<i32>,
    groups: Vec<Group>,
    distinct_hats: usize,
}

impl<'a> ProjectionEngine<'a> {
    pub fn build(
        a_boxes: &'a [BoxF],
        q_boxes: &'a [BoxF],
        b_boxes: &'a [BoxF],
        g: usize,
        bottomless: bool,
    ) -> Self {
        let dim = a_boxes
            .first()
            .or(q_boxes.first())
            .or(b_boxes.first())
            .map_or(2, BoxF::dim);
        let last = dim - 1;

        // Grid over the endpoint multiset of every input box.
        let mut per_axis = vec![Vec::new(); dim];
        for set in [a_boxes, q_boxes, b_boxes] {
            for b in set {
                for a in 0..dim {
                    per_axis[a].push(b.lo[a]);
                    per_axis[a].push(b.hi[a]);
                }
            }
        }
        let grid = NonuniformGrid::build(&per_axis, g);

        let upper_b: Vec<Vec<f64>> = b_boxes.iter().map(box_code_upper).collect();
        let flat_b: Vec<f64> = upper_b.iter().flatten().copied().collect();
        let b_index = RangeIndex::build(2 * dim, &flat_b, None);
        let lower_q: Vec<Vec<f64>> = q_boxes.iter().map(box_code_lower).collect();
        let flat_q: Vec<f64> = lower_q.iter().flatten().copied().collect();
        let q_index = RangeIndex::build(2 * dim, &flat_q, None);
        let upper_a: Vec<Vec<f64>> = a_boxes.iter().map(box_code_upper).collect();

        // Inscribed grid boxes and grouping keys. Bottomless mode drops the
        // last axis's lower side from the key.
        let mut hats = Vec::with_capacity(a_boxes.len());
        let mut keys: Vec<Option<Vec<i64>>> = Vec::with_capacity(a_boxes.len());
        let mut distinct: BTreeSet<Vec<i64>> = BTreeSet::new();
        for bx in a_boxes {
            let mut hat_lo = Vec::with_capacity(dim);
            let mut hat_hi = Vec::with_capacity(dim);
            let mut key = Vec::new();
            let mut ok = true;
            for a in 0..dim {
                match grid.inscribe_axis(a, bx.lo[a], bx.hi[a]) {
                    Some((i, j)) => {
                        hat_lo.push(grid.breakpoints(a)[i]);
                        hat_hi.push(grid.breakpoints(a)[j]);
                        if !(bottomless && a == last) {
                            key.push(i as i64);
                        }
                        key.push(j as i64);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let mut full_key = key.clone();
                // Track distinct inscribed boxes including the dropped side.
                full_key.push(grid.inscribe_axis(last, bx.lo[last], bx.hi[last]).unwrap().0 as i64);
                distinct.insert(full_key);
                hats.push(Some(HatBox {
                    lo: hat_lo,
                    hi: hat_hi,
                }));
                keys.push(Some(key));
            } else {
                hats.push(None);
                keys.push(None);
            }
        }
        let distinct_hats = distinct.len();

        // One group per distinct (bottomless) inscribed box.
        let mut group_ids: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
        let mut group_of = vec![-1i32; a_boxes.len()];
        let mut reps: Vec<usize> = Vec::new();
        for (i, key) in keys.iter().enumerate() {
            if let Some(k) = key {
                let next = group_ids.len();
                let gid = *group_ids.entry(k.clone()).or_insert(next);
                if gid == reps.len() {
                    reps.push(i);
                }
                group_of[i] = gid as i32;
            }
        }

        let mut groups = Vec::with_capacity(reps.len());
        let mut weight_buf: Vec<f64> = vec![f64::NEG_INFINITY; b_boxes.len()];
        for &rep in &reps {
            let hat = hats[rep].as_ref().unwrap();
            // The reach region: the inscribed box, opened downward on the
            // last axis in bottomless mode.
            let mut probe = BoxF::new(hat.lo.clone(), hat.hi.clone());
            if bottomless {
                probe.lo[last] = f64::NEG_INFINITY;
            }
            let mut touched: Vec<u32> = Vec::new();
            for (qi, qb) in q_boxes.iter().enumerate() {
                if !qb.intersects(&probe) {
                    continue;
                }
                let w = qb.hi[last].min(hat.hi[last]);
                // Everything q reaches gets the best available weight.
                let mut range = QueryBox::all(2 * dim);
                for (j, &c) in lower_q[qi].iter().enumerate() {
                    range = range.above(j, c, false);
                }
                b_index.for_each_in(&range, &mut |rid, _| {
                    let r = rid as usize;
                    if weight_buf[r] == f64::NEG_INFINITY {
                        touched.push(rid);
                    }
                    if w > weight_buf[r] {
                        weight_buf[r] = w;
                    }
                    true
                });
            }
            touched.sort_unstable();
            let weights: Vec<f64> = touched.iter().map(|&r| weight_buf[r as usize]).collect();
            let flat: Vec<f64> = touched
                .iter()
                .flat_map(|&r| upper_b[r as usize].iter().copied())
                .collect();
            let index = RangeIndex::build(2 * dim, &flat, Some(&weights));
            for &r in &touched {
                weight_buf[r as usize] = f64::NEG_INFINITY;
            }
            groups.push(Group {
                r_ids: touched,
                weights,
                index,
            });
        }

        ProjectionEngine {
            dim,
            a_boxes,
            q_boxes,
            bottomless,
            upper_a,
            lower_q,
            b_index,
            q_index,
            hats,
            group_of,
            groups,
            distinct_hats,
        }
    }

    /// Number of distinct inscribed grid boxes over the `a` side.
    pub fn distinct_inscribed_count(&self) -> usize {
        self.distinct_hats
    }

    /// Witnesses intersecting `a` but not its inscribed box.
    fn boundary_witnesses(&self, ai: usize) -> Vec<u32> {
        let mut range = QueryBox::all(2 * self.dim);
        for (j, &c) in self.upper_a[ai].iter().enumerate() {
            range = range.below(j, c, false);
        }
        let hat = self.hats[ai].as_ref();
        let mut out = Vec::new();
        self.q_index.for_each_in(&range, &mut |qi, _| {
            let keep = match hat {
                Some(h) => {
                    let hb = BoxF::new(h.lo.clone(), h.hi.clone());
                    !self.q_boxes[qi as usize].intersects(&hb)
                }
                None => true,
            };
            if keep {
                out.push(qi);
            }
            true
        });
        out.sort_unstable();
        out
    }

    /// Run the case for index set `I` (size `d`), reporting violating
    /// `(a index, b index)` pairs. Returns false when the callback stops
    /// the scan.
    pub fn solve_case(&self, index_set: &[usize], on_violation: &mut impl FnMut(u32, u32) -> bool) -> bool {
        let comp: Vec<usize> = (0..2 * self.dim)
            .filter(|j| !index_set.contains(j))
            .collect();
        for ai in 0..self.a_boxes.len() {
            let lp = self.boundary_witnesses(ai);
            if !self.solve_case_for(ai, &lp, index_set, &comp, on_violation) {
                return false;
            }
        }
        true
    }

    fn solve_case_for(
        &self,
        ai: usize,
        boundary: &[u32],
        index_set: &[usize],
        comp: &[usize],
        on_violation: &mut impl FnMut(u32, u32) -> bool,
    ) -> bool {
        let gid = self.group_of[ai];
        let group = if gid >= 0 {
            Some(&self.groups[gid as usize])
        } else {
            None
        };
        let tau = self.hats[ai]
            .as_ref()
            .map(|h| h.lo[self.dim - 1])
            .unwrap_or(f64::INFINITY);

        let apexes: Vec<Vec<f64>> = boundary
            .iter()
            .map(|&qi| comp.iter().map(|&j| self.lower_q[qi as usize][j]).collect())
            .collect();
        let cells = staircase_complement_decompose(self.dim, &apexes);
        for cell in &cells {
            let mut range = QueryBox::all(2 * self.dim);
            for &j in index_set {
                range = range.above(j, self.upper_a[ai][j], false);
            }
            for (k, &j) in comp.iter().enumerate() {
                range = range.above(j, cell.lo[k], false).below(j, cell.hi[k], true);
            }
            // A violating b-box sits in the range and escapes both the
            // precomputed reach set and the boundary staircase.
            let total = self.b_index.count_in(&range);
            if total == 0 {
                continue;
            }
            match group {
                None => {
                    // No inscribed box: the staircase alone must cover.
                    let ok = self.b_index.for_each_in(&range, &mut |rid, _| {
                        on_violation(ai as u32, rid)
                    });
                    if !ok {
                        return false;
                    }
                }
                Some(g) => {
                    let in_group = g.index.count_in(&range);
                    if total > in_group {
                        // Some b-box is not reachable through the inscribed
                        // box at all; enumerate and report those.
                        let ok = self.b_index.for_each_in(&range, &mut |rid, _| {
                            if g.r_ids.binary_search(&rid).is_err() {
                                return on_violation(ai as u32, rid);
                            }
                            true
                        });
                        if !ok {
                            return false;
                        }
                    }
                    if self.bottomless {
                        // Members of the reach set whose best witness tops
                        // out below the inscribed box's floor are not
                        // reachable through it after all.
                        if matches!(g.index.weight_min_in(&range), Some((w, _)) if w < tau) {
                            let ok = g.index.for_each_in(&range, &mut |mid, _| {
                                let m = mid as usize;
                                if g.weights[m] < tau {
                                    return on_violation(ai as u32, g.r_ids[m]);
                                }
                                true
                            });
                            if !ok {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }
}

/// Decide the restricted case for one index set: does every `(p, r)` with
/// `upper(p) <_I upper(r)` have a common witness in `Q`?
pub fn solve_projection_case(
    p_boxes: &[BoxF],
    q_boxes: &[BoxF],
    r_boxes: &[BoxF],
    index_set: &[usize],
    g: usize,
    bottomless: bool,
) -> bool {
    let engine = ProjectionEngine::build(p_boxes, q_boxes, r_boxes, g, bottomless);
    let mut ok = true;
    engine.solve_case(index_set, &mut |_, _| {
        ok = false;
        false
    });
    ok
}

fn default_g(n: usize, exponent: f64) -> usize {
    ((n.max(2) as f64).powf(exponent).round() as usize).max(2)
}

fn run_all_cases(
    p_boxes: &[BoxF],
    q_boxes: &[BoxF],
    r_boxes: &[BoxF],
    g: usize,
    bottomless: bool,
    opts: &BoxSolveOpts,
) -> BoxDecision {
    let dim = p_boxes
        .first()
        .or(q_boxes.first())
        .or(r_boxes.first())
        .map_or(2, BoxF::dim);
    let cases = projection_indices(dim);
    let mut found: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut truncated = false;

    'orients: for swap in [false, true] {
        let (a, b) = if swap {
            (r_boxes, p_boxes)
        } else {
            (p_boxes, r_boxes)
        };
        let engine = ProjectionEngine::build(a, q_boxes, b, g, bottomless);
        for index_set in &cases {
            let keep_going = engine.solve_case(index_set, &mut |ai, bi| {
                let pair = if swap { (bi, ai) } else { (ai, bi) };
                if found.len() >= opts.cap && !found.contains(&pair) {
                    truncated = true;
                    return false;
                }
                found.insert(pair);
                opts.exhaustive
            });
            if !keep_going && !opts.exhaustive {
                break 'orients;
            }
            if truncated {
                break 'orients;
            }
        }
    }
    BoxDecision {
        ok: found.is_empty() && !truncated,
        violations: found.into_iter().collect(),
        truncated,
    }
}

/// Every `(p, r)` pair has a common box witness in `Q` (3D boxes).
pub fn diam2_boxes(p: &[BoxF], q: &[BoxF], r: &[BoxF], opts: &BoxSolveOpts) -> BoxDecision {
    let n = p.len() + q.len() + r.len();
    let g = opts.g.unwrap_or_else(|| default_g(n, 1.0 / 6.0));
    run_all_cases(p, q, r, g, true, opts)
}

/// Every `(p, r)` pair has a common rectangle witness in `Q` (2D).
pub fn diam2_rectangles(p: &[BoxF], q: &[BoxF], r: &[BoxF], opts: &BoxSolveOpts) -> BoxDecision {
    let n = p.len() + q.len() + r.len();
    let g = opts.g.unwrap_or_else(|| default_g(n, 0.25));
    run_all_cases(p, q, r, g, true, opts)
}

/// Every `(p, r)` pair has a common cube witness in `Q` (3D cubes; the
/// inscribed-box reach sets are materialized per full grid box).
pub fn diam2_cubes3d(p: &[BoxF], q: &[BoxF], r: &[BoxF], opts: &BoxSolveOpts) -> BoxDecision {
    let n = p.len() + q.len() + r.len();
    let g = opts.g.unwrap_or_else(|| default_g(n, 0.2));
    run_all_cases(p, q, r, g, false, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rand_box(rng: &mut StdRng, dim: usize, span: f64, max_side: f64) -> BoxF {
        let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..span)).collect();
        let hi: Vec<f64> = lo
            .iter()
            .map(|v| {
                // Log-uniform side lengths.
                let s = max_side * (2.0f64).powf(rng.gen_range(-6.0..0.0));
                v + s
            })
            .collect();
        BoxF::new(lo, hi)
    }

    fn rand_cube(rng: &mut StdRng, span: f64, max_side: f64) -> BoxF {
        let s = max_side * (2.0f64).powf(rng.gen_range(-4.0..0.0));
        let lo: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..span)).collect();
        let hi = lo.iter().map(|v| v + s).collect();
        BoxF::new(lo, hi)
    }

    #[test]
    fn code_biconditional_matches_intersection() {
        let mut rng = StdRng::seed_from_u64(71);
        for dim in [2usize, 3] {
            for _ in 0..5000 {
                let a = rand_box(&mut rng, dim, 3.0, 2.0);
                let b = rand_box(&mut rng, dim, 3.0, 2.0);
                assert_eq!(
                    code_dominated(&box_code_lower(&a), &box_code_upper(&b)),
                    a.intersects(&b)
                );
                // A nondegenerate box always intersects itself.
                assert!(code_dominated(&box_code_lower(&a), &box_code_upper(&a)));
            }
        }
    }

    #[test]
    fn case_split_covers_every_pair() {
        let mut rng = StdRng::seed_from_u64(72);
        for dim in [2usize, 3] {
            let cases = projection_indices(dim);
            assert_eq!(cases.len(), if dim == 2 { 6 } else { 20 });
            for _ in 0..5000 {
                let a = rand_box(&mut rng, dim, 3.0, 2.0);
                let b = rand_box(&mut rng, dim, 3.0, 2.0);
                let ua = box_code_upper(&a);
                let ub = box_code_upper(&b);
                let covered = cases.iter().any(|i| {
                    i.iter().all(|&j| ua[j] < ub[j]) || i.iter().all(|&j| ub[j] < ua[j])
                });
                assert!(covered, "pair escaped every (I, orientation) case");
            }
        }
    }

    /// Brute force for the restricted case.
    fn brute_case(p: &[BoxF], q: &[BoxF], r: &[BoxF], index_set: &[usize]) -> bool {
        for pb in p {
            let up = box_code_upper(pb);
            for rb in r {
                let ur = box_code_upper(rb);
                if index_set.iter().all(|&j| up[j] < ur[j])
                    && !q.iter().any(|qb| qb.intersects(pb) && qb.intersects(rb))
                {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn projection_case_matches_restricted_brute_force() {
        let mut rng = StdRng::seed_from_u64(73);
        for trial in 0..300 {
            let dim = if trial % 2 == 0 { 3 } else { 2 };
            let n = rng.gen_range(1..25);
            let span = rng.gen_range(1.0..4.0);
            let p: Vec<BoxF> = (0..n).map(|_| rand_box(&mut rng, dim, span, 1.5)).collect();
            let nq = rng.gen_range(0..25);
            let q: Vec<BoxF> = (0..nq).map(|_| rand_box(&mut rng, dim, span, 1.5)).collect();
            let r: Vec<BoxF> = (0..n).map(|_| rand_box(&mut rng, dim, span, 1.5)).collect();
            let cases = projection_indices(dim);
            let index_set = &cases[rng.gen_range(0..cases.len())];
            for bottomless in [true, false] {
                let g = rng.gen_range(1..8);
                assert_eq!(
                    solve_projection_case(&p, &q, &r, index_set, g, bottomless),
                    brute_case(&p, &q, &r, index_set),
                    "trial {trial} dim {dim} I {index_set:?} bottomless {bottomless}"
                );
            }
        }
    }

    #[test]
    fn reach_set_reconstruction_matches_direct() {
        // The weight filter over the bottomless reach set must reproduce
        // the per-inscribed-box reach set exactly.
        let mut rng = StdRng::seed_from_u64(74);
        for _ in 0..40 {
            let n = rng.gen_range(5..40);
            let span = 3.0;
            let p: Vec<BoxF> = (0..n).map(|_| rand_box(&mut rng, 3, span, 1.5)).collect();
            let q: Vec<BoxF> = (0..n).map(|_| rand_box(&mut rng, 3, span, 1.5)).collect();
            let r: Vec<BoxF> = (0..n).map(|_| rand_box(&mut rng, 3, span, 1.5)).collect();
            let engine = ProjectionEngine::build(&p, &q, &r, 5, true);
            for (ai, hat) in engine.hats.iter().enumerate() {
                let Some(hat) = hat else { continue };
                let hb = BoxF::new(hat.lo.clone(), hat.hi.clone());
                let tau = hat.lo[2];
                let gid = engine.group_of[ai];
                assert!(gid >= 0);
                let group = &engine.groups[gid as usize];
                let filtered: Vec<u32> = group
                    .r_ids
                    .iter()
                    .zip(&group.weights)
                    .filter(|(_, w)| **w >= tau)
                    .map(|(id, _)| *id)
                    .collect();
                let mut direct: Vec<u32> = (0..r.len() as u32)
                    .filter(|&ri| {
                        q.iter()
                            .any(|qb| qb.intersects(&hb) && qb.intersects(&r[ri as usize]))
                    })
                    .collect();
                direct.sort_unstable();
                assert_eq!(filtered, direct);
            }
        }
    }

    fn brute_all(p: &[BoxF], q: &[BoxF], r: &[BoxF]) -> Vec<(u32, u32)> {
        let mut v = Vec::new();
        for (pi, pb) in p.iter().enumerate() {
            for (ri, rb) in r.iter().enumerate() {
                if !q.iter().any(|qb| qb.intersects(pb) && qb.intersects(rb)) {
                    v.push((pi as u32, ri as u32));
                }
            }
        }
        v
    }

    #[test]
    fn deciders_match_oracle_on_random_instances() {
        let mut rng = StdRng::seed_from_u64(75);
        for trial in 0..120 {
            let n = rng.gen_range(2..30);
            let span = rng.gen_range(1.0..3.5);
            let kind = trial % 3;
            let (dim, mk): (usize, fn(&mut StdRng, f64) -> BoxF) = match kind {
                0 => (3, |rng, span| rand_box(rng, 3, span, 1.5)),
                1 => (2, |rng, span| rand_box(rng, 2, span, 1.5)),
                _ => (3, |rng, span| rand_cube(rng, span, 1.5)),
            };
            let _ = dim;
            let p: Vec<BoxF> = (0..n).map(|_| mk(&mut rng, span)).collect();
            let nq = rng.gen_range(0..30);
            let q: Vec<BoxF> = (0..nq).map(|_| mk(&mut rng, span)).collect();
            let r: Vec<BoxF> = (0..n).map(|_| mk(&mut rng, span)).collect();
            let opts = BoxSolveOpts {
                g: Some(rng.gen_range(1..6)),
                exhaustive: true,
                cap: usize::MAX,
            };
            let dec = match kind {
                0 => diam2_boxes(&p, &q, &r, &opts),
                1 => diam2_rectangles(&p, &q, &r, &opts),
                _ => diam2_cubes3d(&p, &q, &r, &opts),
            };
            let expect = brute_all(&p, &q, &r);
            assert_eq!(dec.ok, expect.is_empty(), "trial {trial}");
            assert_eq!(dec.violations, expect, "trial {trial} kind {kind}");
        }
    }

    #[test]
    fn trivial_cases() {
        let b = BoxF::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]);
        let one = vec![b.clone()];
        let d = diam2_boxes(&one, &one, &one, &BoxSolveOpts::default());
        assert!(d.ok);
        let empty: Vec<BoxF> = Vec::new();
        let far = vec![BoxF::new(vec![9.0, 9.0, 9.0], vec![10.0, 10.0, 10.0])];
        let d = diam2_boxes(&one, &empty, &far, &BoxSolveOpts::default());
        assert!(!d.ok);
        assert_eq!(d.violations, vec![(0, 0)]);
    }

    #[test]
    fn cube_inscribed_box_count_stays_small() {
        // Equal-side boxes occupy a lower-dimensional slice of code space:
        // the number of distinct inscribed grid boxes grows like g^4 rather
        // than g^6.
        let mut rng = StdRng::seed_from_u64(76);
        let n = 4000;
        let cubes: Vec<BoxF> = (0..n).map(|_| rand_cube(&mut rng, 12.0, 2.0)).collect();
        let mk_box = |rng: &mut StdRng| {
            let lo: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..12.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|v| v + rng.gen_range(0.5..2.5)).collect();
            BoxF::new(lo, hi)
        };
        let boxes: Vec<BoxF> = (0..n).map(|_| mk_box(&mut rng)).collect();
        let g = 12usize;
        let e_cubes = ProjectionEngine::build(&cubes, &[], &[], g, false);
        let e_boxes = ProjectionEngine::build(&boxes, &[], &[], g, false);
        let g4 = (g as f64).powi(4);
        let cube_count = e_cubes.distinct_inscribed_count() as f64;
        assert!(
            cube_count <= 4.0 * g4,
            "cubes produced {cube_count} inscribed boxes vs budget {}",
            4.0 * g4
        );
        // Sanity: general boxes use the extra freedom.
        assert!(e_boxes.distinct_inscribed_count() >= e_cubes.distinct_inscribed_count());
    }
}
