//! Diameter-2 decider for 3D unit cubes.
//!
//! Decides, for point sets `P`, `Q`, `R` of unit-cube centers, whether every
//! pair `(p, r)` has a common witness `q` whose cube intersects both. The
//! strategy: bucket centers into the unit grid; inside a cell pair, cube
//! intersection against a neighboring cell is a generalized dominance
//! relation on cell-local coordinates; a three-level median divide and
//! conquer reduces to configurations separated on all three axes, where
//! witness existence is encoded per candidate q-cell as six scalar
//! coordinates ("does a witness exist in this quadrant of the separating
//! corner") and pair checking becomes vector-dominance search.
//!
//! Cell pairs farther than 2 in L-infinity admit no witness: a unit cube
//! would have to reach within distance 1 of both sides. Populated far pairs
//! fail immediately.

use std::collections::BTreeMap;

use crate::geom::{dominance_rel_for_cells, AxisRel, GeneralizedDominance};
use crate::range_index::{Bound, QueryBox, RangeIndex};
use crate::scalar::ExtVal;

pub type P3 = [f64; 3];
pub type Cell3 = [i64; 3];

#[inline]
pub fn cell_of(p: &P3) -> Cell3 {
    [
        p[0].floor() as i64,
        p[1].floor() as i64,
        p[2].floor() as i64,
    ]
}

#[inline]
fn local_of(p: &P3, cell: &Cell3) -> P3 {
    [
        p[0] - cell[0] as f64,
        p[1] - cell[1] as f64,
        p[2] - cell[2] as f64,
    ]
}

#[inline]
fn linf(a: &Cell3, b: &Cell3) -> i64 {
    (a[0] - b[0])
        .abs()
        .max((a[1] - b[1]).abs())
        .max((a[2] - b[2]).abs())
}

#[inline]
fn cubes_touch(a: &P3, b: &P3) -> bool {
    (a[0] - b[0]).abs() <= 1.0 && (a[1] - b[1]).abs() <= 1.0 && (a[2] - b[2]).abs() <= 1.0
}

#[cfg(test)]
#[inline]
fn rel_holds(a: &P3, b: &P3, rel: &GeneralizedDominance) -> bool {
    (0..3).all(|i| match rel.axis(i) {
        AxisRel::Lt => a[i] < b[i],
        AxisRel::Gt => a[i] > b[i],
        AxisRel::Any => true,
    })
}

/// Signed axis permutation: frame coordinate `j` reads original axis
/// `axes[j]`, negated when `neg[j]`.
#[derive(Clone, Copy, Debug)]
pub struct Frame3 {
    pub axes: [usize; 3],
    pub neg: [bool; 3],
}

impl Frame3 {
    pub fn identity() -> Self {
        Frame3 {
            axes: [0, 1, 2],
            neg: [false; 3],
        }
    }

    #[inline]
    pub fn coord(&self, p: &P3, j: usize) -> f64 {
        let v = p[self.axes[j]];
        if self.neg[j] {
            -v
        } else {
            v
        }
    }

    /// `outer` permutes/negates the axes of `self`'s frame.
    pub fn compose(&self, outer_axes: [usize; 3], outer_neg: [bool; 3]) -> Frame3 {
        let mut axes = [0usize; 3];
        let mut neg = [false; 3];
        for j in 0..3 {
            axes[j] = self.axes[outer_axes[j]];
            neg[j] = self.neg[outer_axes[j]] ^ outer_neg[j];
        }
        Frame3 { axes, neg }
    }

    /// The relation as seen in frame coordinates (argument order kept).
    pub fn rel(&self, rel: &GeneralizedDominance) -> GeneralizedDominance {
        let mut out = Vec::with_capacity(3);
        for j in 0..3 {
            let r = rel.axis(self.axes[j]);
            out.push(if self.neg[j] { r.flip() } else { r });
        }
        GeneralizedDominance::new(out)
    }

    /// Tighten `q` with "frame coord j > v" (strict).
    fn constrain_above(&self, q: &mut QueryBox, j: usize, v: f64) {
        let axis = self.axes[j];
        if self.neg[j] {
            tighten_hi(&mut q.hi[axis], -v);
        } else {
            tighten_lo(&mut q.lo[axis], v);
        }
    }

    /// Tighten `q` with "frame coord j < v" (strict).
    fn constrain_below(&self, q: &mut QueryBox, j: usize, v: f64) {
        let axis = self.axes[j];
        if self.neg[j] {
            tighten_lo(&mut q.lo[axis], -v);
        } else {
            tighten_hi(&mut q.hi[axis], v);
        }
    }

    /// Max of frame coordinate `j` over points of `idx` in `q`.
    fn coord_max(&self, idx: &RangeIndex, q: &QueryBox, j: usize) -> ExtVal {
        let r = if self.neg[j] {
            idx.coord_min_in(q, self.axes[j]).map(|(v, _)| -v)
        } else {
            idx.coord_max_in(q, self.axes[j]).map(|(v, _)| v)
        };
        match r {
            Some(v) => ExtVal::Fin(v),
            None => ExtVal::NegInf,
        }
    }
}

fn tighten_lo(b: &mut Bound, v: f64) {
    if v > b.v || (v == b.v && b.incl) {
        *b = Bound { v, incl: false };
    }
}

fn tighten_hi(b: &mut Bound, v: f64) {
    if v < b.v || (v == b.v && b.incl) {
        *b = Bound { v, incl: false };
    }
}

/// Scalar witness map for the doubly-separated case.
///
/// Given that every `pts_a` point is below `mu[0]`/`mu[1]` on frame axes 0
/// and 1, and witnesses are restricted to the open quadrant above both
/// thresholds, computes `phi` over `pts_a` and `psi` over `pts_b` such that
/// a witness `q` with `a relA q` and `q relB b` exists iff
/// `phi(a) < psi(b)`.
///
/// Relations are given in frame coordinates with argument order
/// `(a, q)` and `(q, b)`. `Any` on the frame z-axis is eliminated by the
/// symbolic bottom tier; `Gt` by flipping the frame's z-axis.
pub fn scalar_witness_map(
    frame: &Frame3,
    pts_a: &[P3],
    pts_b: &[P3],
    q_index: &RangeIndex,
    rel_a: &GeneralizedDominance,
    rel_b: &GeneralizedDominance,
    mu: [f64; 2],
) -> (Vec<ExtVal>, Vec<ExtVal>) {
    // On the two separated axes the first relation is automatic when it
    // points the right way and impossible otherwise.
    if rel_a.axis(0) == AxisRel::Gt || rel_a.axis(1) == AxisRel::Gt {
        return (
            vec![ExtVal::Fin(1.0); pts_a.len()],
            vec![ExtVal::Fin(0.0); pts_b.len()],
        );
    }
    let mut frame = *frame;
    let mut rel_a = rel_a.clone();
    let mut rel_b = rel_b.clone();
    if rel_a.axis(2) == AxisRel::Gt {
        frame.neg[2] = !frame.neg[2];
        rel_a.set_axis(2, AxisRel::Lt);
        rel_b.set_axis(2, rel_b.axis(2).flip());
    }

    let phi: Vec<ExtVal> = match rel_a.axis(2) {
        // Symbolic "sufficiently small" replacement for the trivial z-relation.
        AxisRel::Any => vec![ExtVal::NegInf; pts_a.len()],
        AxisRel::Lt => pts_a
            .iter()
            .map(|p| ExtVal::Fin(frame.coord(p, 2)))
            .collect(),
        AxisRel::Gt => unreachable!(),
    };

    let mut psi = Vec::with_capacity(pts_b.len());
    for b in pts_b {
        let mut q = QueryBox::all(3);
        frame.constrain_above(&mut q, 0, mu[0]);
        frame.constrain_above(&mut q, 1, mu[1]);
        for j in 0..3 {
            match rel_b.axis(j) {
                AxisRel::Lt => frame.constrain_below(&mut q, j, frame.coord(b, j)),
                AxisRel::Gt => frame.constrain_above(&mut q, j, frame.coord(b, j)),
                AxisRel::Any => {}
            }
        }
        psi.push(frame.coord_max(q_index, &q, 2));
    }
    (phi, psi)
}

const OCTANT_CASES: [([usize; 3], bool); 6] = [
    ([0, 1, 2], false),
    ([1, 2, 0], false),
    ([0, 2, 1], false),
    ([0, 1, 2], true),
    ([1, 2, 0], true),
    ([0, 2, 1], true),
];

/// Six-coordinate witness map for the fully separated case.
///
/// `dir_p_low[i]` says the P side lies below `mu[i]` on axis `i` (and R
/// above); otherwise mirrored. A witness with `p rel1 q` and `q rel2 r`
/// exists iff some coordinate `j` has `phi_j(p) < psi_j(r)`, equivalently
/// iff `phi(p)` does not dominate `psi(r)` componentwise. Each coordinate
/// covers one quadrant of the separating corner; every witness has two
/// coordinates on a common side, so the six quadrant slabs cover all of
/// space.
#[allow(clippy::too_many_arguments)]
pub fn octant_witness_maps(
    pts_p: &[P3],
    pts_r: &[P3],
    q_index: &RangeIndex,
    rel1: &GeneralizedDominance,
    rel2: &GeneralizedDominance,
    mu: [f64; 3],
    dir_p_low: [bool; 3],
    phi_out: &mut [Vec<ExtVal>],
    psi_out: &mut [Vec<ExtVal>],
    slot0: usize,
) {
    // Canonical frame: P below mu on every axis.
    let base = Frame3 {
        axes: [0, 1, 2],
        neg: [!dir_p_low[0], !dir_p_low[1], !dir_p_low[2]],
    };
    let rel1_c = base.rel(rel1);
    let rel2_c = base.rel(rel2);
    let mu_c = [
        base.coord(&mu, 0),
        base.coord(&mu, 1),
        base.coord(&mu, 2),
    ];

    for (k, (perm, swapped)) in OCTANT_CASES.iter().enumerate() {
        let neg_all = [*swapped; 3];
        let frame = base.compose(*perm, neg_all);
        let sign = if *swapped { -1.0 } else { 1.0 };
        let mu_l = [sign * mu_c[perm[0]], sign * mu_c[perm[1]]];
        let permute = |rel: &GeneralizedDominance| {
            GeneralizedDominance::new(vec![
                rel.axis(perm[0]),
                rel.axis(perm[1]),
                rel.axis(perm[2]),
            ])
        };
        let slot = slot0 + k;
        if !*swapped {
            let (phi, psi) = scalar_witness_map(
                &frame,
                pts_p,
                pts_r,
                q_index,
                &permute(&rel1_c),
                &permute(&rel2_c),
                mu_l,
            );
            for (p, v) in phi.into_iter().enumerate() {
                phi_out[p][slot] = v;
            }
            for (r, v) in psi.into_iter().enumerate() {
                psi_out[r][slot] = v;
            }
        } else {
            // Reversed chain: the R side plays the constrained role. Under
            // joint negation and argument swap the relation symbols carry
            // over unchanged.
            let (phi_role, psi_role) = scalar_witness_map(
                &frame,
                pts_r,
                pts_p,
                q_index,
                &permute(&rel2_c),
                &permute(&rel1_c),
                mu_l,
            );
            for (p, v) in psi_role.into_iter().enumerate() {
                phi_out[p][slot] = v.neg();
            }
            for (r, v) in phi_role.into_iter().enumerate() {
                psi_out[r][slot] = v.neg();
            }
        }
    }
}

/// One candidate q-cell in a cell-pair subproblem.
pub struct QBucket {
    pub cell: Cell3,
    pub rel1: GeneralizedDominance,
    pub rel2: GeneralizedDominance,
    pub local: Vec<P3>,
    pub index: RangeIndex,
}

/// Q-side context shared across one cell pair: at most 27 buckets, each a
/// q-cell adjacent to both the P cell and the R cell.
pub struct CellPairCtx {
    pub cell_p: Cell3,
    pub cell_r: Cell3,
    pub buckets: Vec<QBucket>,
}

impl CellPairCtx {
    /// `q_cells` maps q-cell to center list (global coordinates).
    pub fn build(cell_p: Cell3, cell_r: Cell3, q_cells: &BTreeMap<Cell3, Vec<P3>>) -> Self {
        let mut buckets = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let cq = [cell_p[0] + dx, cell_p[1] + dy, cell_p[2] + dz];
                    if linf(&cq, &cell_r) > 1 {
                        continue;
                    }
                    let Some(pts) = q_cells.get(&cq) else { continue };
                    if pts.is_empty() {
                        continue;
                    }
                    let local: Vec<P3> = pts.iter().map(|p| local_of(p, &cq)).collect();
                    let flat: Vec<f64> = local.iter().flatten().copied().collect();
                    buckets.push(QBucket {
                        cell: cq,
                        rel1: dominance_rel_for_cells(&cell_p, &cq).unwrap(),
                        rel2: dominance_rel_for_cells(&cq, &cell_r).unwrap(),
                        local,
                        index: RangeIndex::build(3, &flat, None),
                    });
                }
            }
        }
        CellPairCtx {
            cell_p,
            cell_r,
            buckets,
        }
    }

    pub fn map_dim(&self) -> usize {
        6 * self.buckets.len()
    }
}

/// Full witness maps for a separated cell-pair configuration: six
/// coordinates per candidate q-cell, concatenated in bucket order. A pair
/// is connected iff some coordinate has `phi < psi`.
pub fn cell_pair_maps(
    ctx: &CellPairCtx,
    pts_p: &[P3],
    pts_r: &[P3],
    mu: [f64; 3],
    dir_p_low: [bool; 3],
) -> (Vec<Vec<ExtVal>>, Vec<Vec<ExtVal>>) {
    let dim = ctx.map_dim();
    // Unused slots never certify a connection: phi at top, psi at bottom.
    let mut phis = vec![vec![ExtVal::PosInf; dim]; pts_p.len()];
    let mut psis = vec![vec![ExtVal::NegInf; dim]; pts_r.len()];
    for (bi, bucket) in ctx.buckets.iter().enumerate() {
        octant_witness_maps(
            pts_p,
            pts_r,
            &bucket.index,
            &bucket.rel1,
            &bucket.rel2,
            mu,
            dir_p_low,
            &mut phis,
            &mut psis,
            6 * bi,
        );
    }
    (phis, psis)
}

/// Reference implementation: quadratic scan for a pair with `phi(p)`
/// dominating `psi(r)` (componentwise `>=`) that also passes `filter`.
pub fn dominance_pair_exists_scan(
    phis: &[Vec<ExtVal>],
    psis: &[Vec<ExtVal>],
    mut filter: impl FnMut(usize, usize) -> bool,
) -> Option<(usize, usize)> {
    for (pi, phi) in phis.iter().enumerate() {
        for (ri, psi) in psis.iter().enumerate() {
            if phi.iter().zip(psi).all(|(a, b)| a.ge(b)) && filter(pi, ri) {
                return Some((pi, ri));
            }
        }
    }
    None
}

/// Pruning-tree search for a dominating pair.
///
/// Recursively partitions the psi vectors, keeping per-subtree componentwise
/// minima; a subtree can be skipped as soon as one coordinate of `phi` drops
/// below the subtree minimum. Dominating pairs are produced lazily and
/// checked against `filter` with early exit, so callers can reject pairs
/// (for example, pairs whose cubes intersect directly) without paying for a
/// full enumeration.
pub fn dominance_pair_exists(
    phis: &[Vec<ExtVal>],
    psis: &[Vec<ExtVal>],
    filter: impl FnMut(usize, usize) -> bool,
) -> Option<(usize, usize)> {
    if phis.is_empty() || psis.is_empty() {
        return None;
    }
    let dim = phis[0].len();
    let tree = PsiTree::build(psis, dim);
    let mut filter = filter;
    for (pi, phi) in phis.iter().enumerate() {
        if let Some(ri) = tree.find_dominated(phi, psis, &mut |ri| filter(pi, ri)) {
            return Some((pi, ri));
        }
    }
    None
}

struct PsiNode {
    min: Vec<ExtVal>,
    members: Vec<u32>,
    children: Option<(usize, usize)>,
}

struct PsiTree {
    nodes: Vec<PsiNode>,
    root: usize,
}

impl PsiTree {
    fn build(psis: &[Vec<ExtVal>], dim: usize) -> Self {
        let mut tree = PsiTree {
            nodes: Vec::new(),
            root: 0,
        };
        let all: Vec<u32> = (0..psis.len() as u32).collect();
        tree.root = tree.build_rec(psis, dim, all, 0);
        tree
    }

    fn build_rec(&mut self, psis: &[Vec<ExtVal>], dim: usize, members: Vec<u32>, depth: usize) -> usize {
        let mut min = vec![ExtVal::PosInf; dim];
        for &m in &members {
            for (j, v) in psis[m as usize].iter().enumerate() {
                min[j] = min[j].min(*v);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(PsiNode {
            min,
            members: Vec::new(),
            children: None,
        });
        if members.len() <= 8 || depth > 48 {
            self.nodes[id].members = members;
            return id;
        }
        // Split on the axis cycling with depth; fall back to a leaf when
        // the chosen coordinate no longer separates anything.
        let mut sorted = members.clone();
        let mut split_ok = false;
        for probe in 0..dim {
            let axis = (depth + probe) % dim;
            sorted.sort_by(|&a, &b| {
                psis[a as usize][axis]
                    .cmp_e(&psis[b as usize][axis])
                    .then(a.cmp(&b))
            });
            let mid = sorted.len() / 2;
            if psis[sorted[0] as usize][axis].cmp_e(&psis[*sorted.last().unwrap() as usize][axis])
                == std::cmp::Ordering::Less
            {
                let lo = sorted[..mid].to_vec();
                let hi = sorted[mid..].to_vec();
                if !lo.is_empty() && !hi.is_empty() {
                    let l = self.build_rec(psis, dim, lo, depth + 1);
                    let r = self.build_rec(psis, dim, hi, depth + 1);
                    self.nodes[id].children = Some((l, r));
                    split_ok = true;
                }
                break;
            }
        }
        if !split_ok && self.nodes[id].children.is_none() {
            self.nodes[id].members = members;
        }
        id
    }

    fn find_dominated(
        &self,
        phi: &[ExtVal],
        psis: &[Vec<ExtVal>],
        accept: &mut impl FnMut(usize) -> bool,
    ) -> Option<usize> {
        self.search(self.root, phi, psis, accept)
    }

    fn search(
        &self,
        node: usize,
        phi: &[ExtVal],
        psis: &[Vec<ExtVal>],
        accept: &mut impl FnMut(usize) -> bool,
    ) -> Option<usize> {
        let nd = &self.nodes[node];
        // phi must stay >= psi on every coordinate; below the subtree
        // minimum anywhere means nothing below can be dominated.
        if phi.iter().zip(&nd.min).any(|(a, b)| a.lt(b)) {
            return None;
        }
        if let Some((l, r)) = nd.children {
            return self
                .search(l, phi, psis, accept)
                .or_else(|| self.search(r, phi, psis, accept));
        }
        for &m in &nd.members {
            let psi = &psis[m as usize];
            if phi.iter().zip(psi).all(|(a, b)| a.ge(b)) && accept(m as usize) {
                return Some(m as usize);
            }
        }
        None
    }
}

/// Instrumentation for the divide-and-conquer.
#[derive(Clone, Copy, Debug, Default)]
pub struct Counters {
    pub nodes: u64,
    pub base_cases: u64,
    pub map_calls: u64,
    pub map_points: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOpts {
    /// Below this many (p, r) pairs a subproblem is solved by direct scan.
    pub base_pairs: usize,
    /// Keep collecting violations instead of stopping at the first.
    pub exhaustive: bool,
    /// Reporting cap on collected violations.
    pub cap: usize,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            base_pairs: 128,
            exhaustive: false,
            cap: 1024,
        }
    }
}

/// Decide one cell pair: do all pairs `(p, r)` between the two cells have a
/// common q-neighbor? Returns the first violating pair (indices into
/// `pts_p` / `pts_r`) or `None` when every pair is connected.
pub fn solve_cell_pair(
    ctx: &CellPairCtx,
    pts_p: &[P3],
    pts_r: &[P3],
    opts: &SolveOpts,
    counters: &mut Counters,
) -> Option<(usize, usize)> {
    if pts_p.is_empty() || pts_r.is_empty() {
        return None;
    }
    let loc_p: Vec<P3> = pts_p.iter().map(|p| local_of(p, &ctx.cell_p)).collect();
    let loc_r: Vec<P3> = pts_r.iter().map(|r| local_of(r, &ctx.cell_r)).collect();
    let idx_p: Vec<u32> = (0..pts_p.len() as u32).collect();
    let idx_r: Vec<u32> = (0..pts_r.len() as u32).collect();
    let mut rec = Rec {
        ctx,
        glob_p: pts_p,
        glob_r: pts_r,
        loc_p: &loc_p,
        loc_r: &loc_r,
        opts,
        counters,
    };
    rec.split_level(&idx_p, &idx_r, 0, [0.0; 3], [true; 3])
}

struct Rec<'a> {
    ctx: &'a CellPairCtx,
    glob_p: &'a [P3],
    glob_r: &'a [P3],
    loc_p: &'a [P3],
    loc_r: &'a [P3],
    opts: &'a SolveOpts,
    counters: &'a mut Counters,
}

impl<'a> Rec<'a> {
    /// Median divide and conquer on axis `level` (0 then 1 then 2); once a
    /// level separates P from R it recurses into the next axis, so fully
    /// dispatched subproblems are separated on all three.
    fn split_level(
        &mut self,
        ip: &[u32],
        ir: &[u32],
        level: usize,
        mu: [f64; 3],
        dir: [bool; 3],
    ) -> Option<(usize, usize)> {
        if ip.is_empty() || ir.is_empty() {
            return None;
        }
        self.counters.nodes += 1;
        if level == 3 {
            return self.separated_case(ip, ir, mu, dir);
        }
        if ip.len() * ir.len() <= self.opts.base_pairs {
            return self.brute(ip, ir);
        }
        let axis = level;
        let mut vals: Vec<f64> = ip
            .iter()
            .map(|&i| self.loc_p[i as usize][axis])
            .chain(ir.iter().map(|&i| self.loc_r[i as usize][axis]))
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let Some(split) = split_value(&vals) else {
            // All coordinates equal on this axis; no strict separator exists.
            return self.brute(ip, ir);
        };

        let (p_lo, p_hi): (Vec<u32>, Vec<u32>) = ip
            .iter()
            .partition(|&&i| self.loc_p[i as usize][axis] < split);
        let (r_lo, r_hi): (Vec<u32>, Vec<u32>) = ir
            .iter()
            .partition(|&&i| self.loc_r[i as usize][axis] < split);

        let mut mu_lo = mu;
        mu_lo[axis] = split;
        let mut dir_lo = dir;
        dir_lo[axis] = true; // P below the separator
        if let Some(v) = self.split_level(&p_lo, &r_hi, level + 1, mu_lo, dir_lo) {
            return Some(v);
        }
        let mut dir_hi = dir;
        dir_hi[axis] = false;
        if let Some(v) = self.split_level(&p_hi, &r_lo, level + 1, mu_lo, dir_hi) {
            return Some(v);
        }
        if let Some(v) = self.split_level(&p_lo, &r_lo, level, mu, dir) {
            return Some(v);
        }
        self.split_level(&p_hi, &r_hi, level, mu, dir)
    }

    fn separated_case(
        &mut self,
        ip: &[u32],
        ir: &[u32],
        mu: [f64; 3],
        dir: [bool; 3],
    ) -> Option<(usize, usize)> {
        if ip.len() * ir.len() <= self.opts.base_pairs {
            return self.brute(ip, ir);
        }
        self.counters.map_calls += 1;
        self.counters.map_points += (ip.len() + ir.len()) as u64;
        let sel_p: Vec<P3> = ip.iter().map(|&i| self.loc_p[i as usize]).collect();
        let sel_r: Vec<P3> = ir.iter().map(|&i| self.loc_r[i as usize]).collect();
        let (phis, psis) = cell_pair_maps(self.ctx, &sel_p, &sel_r, mu, dir);
        dominance_pair_exists(&phis, &psis, |_, _| true)
            .map(|(pi, ri)| (ip[pi] as usize, ir[ri] as usize))
    }

    fn brute(&mut self, ip: &[u32], ir: &[u32]) -> Option<(usize, usize)> {
        self.counters.base_cases += 1;
        for &pi in ip {
            let p = &self.glob_p[pi as usize];
            'pair: for &ri in ir {
                let r = &self.glob_r[ri as usize];
                for b in &self.ctx.buckets {
                    for (qi, ql) in b.local.iter().enumerate() {
                        let q = [
                            ql[0] + b.cell[0] as f64,
                            ql[1] + b.cell[1] as f64,
                            ql[2] + b.cell[2] as f64,
                        ];
                        let _ = qi;
                        if cubes_touch(p, &q) && cubes_touch(r, &q) {
                            continue 'pair;
                        }
                    }
                }
                return Some((pi as usize, ri as usize));
            }
        }
        None
    }
}

/// Strict separator between two distinct consecutive values nearest the
/// median position, or `None` when all values coincide.
fn split_value(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    let mid = n / 2;
    for d in 0..n {
        for pos in [mid.checked_sub(d), Some(mid + d)].into_iter().flatten() {
            if pos >= 1 && pos < n && sorted[pos - 1] < sorted[pos] {
                return Some(0.5 * (sorted[pos - 1] + sorted[pos]));
            }
        }
    }
    None
}

/// Outcome of a top-level decision.
#[derive(Clone, Debug)]
pub struct Decision {
    pub ok: bool,
    /// Violating `(p index, r index)` pairs in input order, up to the cap.
    pub violations: Vec<(u32, u32)>,
    pub truncated: bool,
    pub counters: Counters,
}

/// Decide whether every `(p, r)` in `P x R` has a common unit-cube witness
/// in `Q`.
pub fn decide(pts_p: &[P3], pts_q: &[P3], pts_r: &[P3], opts: &SolveOpts) -> Decision {
    let mut counters = Counters::default();
    let mut violations: Vec<(u32, u32)> = Vec::new();
    let mut truncated = false;

    let bucket = |pts: &[P3]| {
        let mut cells: BTreeMap<Cell3, Vec<u32>> = BTreeMap::new();
        for (i, p) in pts.iter().enumerate() {
            cells.entry(cell_of(p)).or_default().push(i as u32);
        }
        cells
    };
    let p_cells = bucket(pts_p);
    let r_cells = bucket(pts_r);
    let mut q_cells: BTreeMap<Cell3, Vec<P3>> = BTreeMap::new();
    for q in pts_q {
        q_cells.entry(cell_of(q)).or_default().push(*q);
    }

    let push_violation = |violations: &mut Vec<(u32, u32)>,
                              truncated: &mut bool,
                              pair: (u32, u32)|
     -> bool {
        if violations.len() >= opts.cap {
            *truncated = true;
            return false;
        }
        violations.push(pair);
        true
    };

    'cells: for (cp, p_members) in &p_cells {
        for (cr, r_members) in &r_cells {
            if linf(cp, cr) > 2 {
                // No unit cube can touch both sides: every pair violates.
                for &pi in p_members {
                    for &ri in r_members {
                        if !push_violation(&mut violations, &mut truncated, (pi, ri)) {
                            break 'cells;
                        }
                    }
                }
                if !opts.exhaustive {
                    break 'cells;
                }
                continue;
            }
            let ctx = CellPairCtx::build(*cp, *cr, &q_cells);
            if ctx.buckets.is_empty() {
                for &pi in p_members {
                    for &ri in r_members {
                        if !push_violation(&mut violations, &mut truncated, (pi, ri)) {
                            break 'cells;
                        }
                    }
                }
                if !opts.exhaustive {
                    break 'cells;
                }
                continue;
            }
            let sel_p: Vec<P3> = p_members.iter().map(|&i| pts_p[i as usize]).collect();
            let sel_r: Vec<P3> = r_members.iter().map(|&i| pts_r[i as usize]).collect();
            if opts.exhaustive {
                // Enumerate all violating pairs in this cell pair.
                for (k, &pi) in p_members.iter().enumerate() {
                    for (l, &ri) in r_members.iter().enumerate() {
                        let one_p = [sel_p[k]];
                        let one_r = [sel_r[l]];
                        if solve_cell_pair(&ctx, &one_p, &one_r, opts, &mut counters).is_some()
                            && !push_violation(&mut violations, &mut truncated, (pi, ri))
                        {
                            break 'cells;
                        }
                    }
                }
            } else if let Some((pi, ri)) =
                solve_cell_pair(&ctx, &sel_p, &sel_r, opts, &mut counters)
            {
                push_violation(
                    &mut violations,
                    &mut truncated,
                    (p_members[pi], r_members[ri]),
                );
                break 'cells;
            }
        }
    }

    Decision {
        ok: violations.is_empty() && !truncated,
        violations,
        truncated,
        counters,
    }
}
