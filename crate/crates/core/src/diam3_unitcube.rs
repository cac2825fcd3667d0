//! Diameter-3 decider for 3D unit cubes.
//!
//! Decides, for center sets `P, Q, R, S`, whether every pair `(p, s)` is
//! linked by a chain `cube(p) ~ cube(q) ~ cube(r) ~ cube(s)` with `q` from
//! `Q` and `r` from `R`.
//!
//! Outer structure: unit-grid bucketing with expanded neighborhoods (a
//! chain cannot leave L-infinity distance 3). Per populated P-cell, a
//! nonuniform sub-grid splits the cell; for each sub-cell, chains that stay
//! inside the sub-cell's three axis slabs (modulo 1) are few and handled by
//! direct scans, while all remaining chains fall into finitely many
//! cell-offset/slab-sector configurations. Each configuration yields either
//! a scalar comparison system or an ordered set system realizable as
//! pseudolines: on every axis some chain link is separated, so either one
//! link absorbs two axes (scalar maps via staged range extrema) or the
//! links match the axes one-to-one (the pseudoline case, with the curve
//! order derived mechanically from the relation signs).
//!
//! Trivial per-axis relations are eliminated symbolically: shifting the
//! chain tail up by one tier preserves every other link and turns the
//! relation into a strict comparison, with no finite magic constants.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::Bits;
use crate::cutting::{cutting_search, CutError, CutStats, CuttingParams, Level};
use crate::geom::{dominance_rel_for_cells, AxisRel, GeneralizedDominance};
use crate::nonuniform_grid::NonuniformGrid;
use crate::pseudoline::{IntervalRepr, IntervalSystem, PseudoOracle};
use crate::scalar::ExtVal;

pub type P3 = [f64; 3];
pub type Cell3 = [i64; 3];

#[inline]
fn cell_of(p: &P3) -> Cell3 {
    [
        p[0].floor() as i64,
        p[1].floor() as i64,
        p[2].floor() as i64,
    ]
}

#[inline]
fn frac_of(p: &P3) -> P3 {
    [
        p[0] - p[0].floor(),
        p[1] - p[1].floor(),
        p[2] - p[2].floor(),
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

/// Tier-aware strict comparison: tiers order first, values break ties.
#[inline]
fn tiered_less(tu: i8, u: f64, tv: i8, v: f64) -> bool {
    match tu.cmp(&tv) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => u < v,
    }
}

/// One concrete chain link predicate over tiered coordinates.
fn link_holds(
    rel: &GeneralizedDominance,
    tier_u: &[i8; 3],
    u: &P3,
    tier_v: &[i8; 3],
    v: &P3,
) -> bool {
    (0..3).all(|a| match rel.axis(a) {
        AxisRel::Lt => tiered_less(tier_u[a], u[a], tier_v[a], v[a]),
        AxisRel::Gt => tiered_less(tier_v[a], v[a], tier_u[a], u[a]),
        AxisRel::Any => true,
    })
}

/// Slab sector of a coordinate relative to one grid slab.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sector {
    Below,
    Mid,
    Above,
}

/// The derived curve direction for the pseudoline case: the sets, ordered
/// by this sign along the middle-link axis, satisfy the pseudoline order
/// condition whenever the ground is ordered by increasing middle-link
/// coordinate. Inputs are the three relations expressed in role coordinates
/// (axis 0 = first-link separation axis, 1 = middle, 2 = last), all
/// concrete.
pub fn derived_curve_direction(rels: &[GeneralizedDominance; 3]) -> AxisRel {
    let flip_if = |r: AxisRel, cond: bool| if cond { r.flip() } else { r };
    let b1z = flip_if(rels[0].axis(2), rels[0].axis(1) != AxisRel::Lt);
    let b2x = flip_if(rels[1].axis(0), rels[1].axis(2) != b1z);
    flip_if(rels[2].axis(1), rels[2].axis(0) != b2x)
}

/// Rank intervals of 3-step reach sets over a separated chain.
///
/// `p_sorted` must be ordered by increasing y. Sets are computed by staged
/// bitset sweeps: 1-step reach per q, unioned per r, unioned per s. Exact,
/// near-quadratic; the asymptotically faster interval machinery is not
/// reproduced here.
pub fn neighborhood_intervals(
    p_sorted: &[P3],
    q: &[P3],
    r: &[P3],
    s: &[P3],
    rels: &[GeneralizedDominance; 3],
) -> Vec<IntervalRepr> {
    let zt = [[0i8; 3]; 4];
    let bits = staged_reach_bits(p_sorted, q, r, s, rels, &zt)
        .unwrap_or_else(|| vec![Bits::new(p_sorted.len()); s.len()]);
    bits.iter().map(IntervalRepr::from_bits).collect()
}

/// Staged reach computation with tiers. Returns one bitset over P-ranks per
/// element of `s`, or `None` when `q` or `r` is empty (all sets empty).
fn staged_reach_bits(
    p_sorted: &[P3],
    q: &[P3],
    r: &[P3],
    s: &[P3],
    rels: &[GeneralizedDominance; 3],
    tiers: &[[i8; 3]; 4],
) -> Option<Vec<Bits>> {
    if q.is_empty() || r.is_empty() {
        return None;
    }
    let n = p_sorted.len();
    let reach_q: Vec<Bits> = q
        .iter()
        .map(|qq| {
            let mut b = Bits::new(n);
            for (pi, pp) in p_sorted.iter().enumerate() {
                if link_holds(&rels[0], &tiers[0], pp, &tiers[1], qq) {
                    b.set(pi);
                }
            }
            b
        })
        .collect();
    let reach_r: Vec<Bits> = r
        .iter()
        .map(|rr| {
            let mut b = Bits::new(n);
            for (qi, qq) in q.iter().enumerate() {
                if link_holds(&rels[1], &tiers[1], qq, &tiers[2], rr) {
                    b.or_assign(&reach_q[qi]);
                }
            }
            b
        })
        .collect();
    Some(
        s.iter()
            .map(|ss| {
                let mut b = Bits::new(n);
                for (ri, rr) in r.iter().enumerate() {
                    if link_holds(&rels[2], &tiers[2], rr, &tiers[3], ss) {
                        b.or_assign(&reach_r[ri]);
                    }
                }
                b
            })
            .collect(),
    )
}

/// One sector configuration compiled to a checkable system.
enum SystemMaps {
    /// Connected iff `phi[p] < psi[s]`.
    Scalar { phi: Vec<ExtVal>, psi: Vec<ExtVal> },
    /// Connected iff the p-rank lies in the reach set of s. `rank_of[p]`
    /// maps local P index to ground rank; `sets` are indexed by the curve
    /// order; `curve_of_s` maps bucket position to curve index.
    Curves {
        rank_of: Vec<u32>,
        curve_of_s: Vec<u32>,
        rows: Vec<Bits>,
    },
}

/// Chain configuration for one (cell offset, sector) choice per group.
struct ChainConfig<'a> {
    pts: [&'a [P3]; 4],
    rels: [GeneralizedDominance; 3],
    tiers: [[i8; 3]; 4],
    /// Per link, axes on which the two endpoint groups occupy different
    /// sectors, with the sign: `Lt` when the earlier group sits below.
    sep: [Vec<(usize, AxisRel)>; 3],
}

impl<'a> ChainConfig<'a> {
    /// Concretize: on separated axes the relation must point with the
    /// separation or be trivial (dead configs return `None`); trivial
    /// relations on shared axes shift the chain tail up one tier.
    fn reduce(mut self) -> Option<Self> {
        for li in 0..3 {
            for a in 0..3 {
                let sep_sign = self.sep[li].iter().find(|(ax, _)| *ax == a).map(|(_, s)| *s);
                match (self.rels[li].axis(a), sep_sign) {
                    (AxisRel::Any, Some(sign)) => self.rels[li].set_axis(a, sign),
                    (r, Some(sign)) if r != sign => return None,
                    (AxisRel::Any, None) => {
                        self.rels[li].set_axis(a, AxisRel::Lt);
                        for t in &mut self.tiers[li + 1..] {
                            t[a] += 1;
                        }
                    }
                    _ => {}
                }
            }
        }
        Some(self)
    }

    fn build(self) -> Option<SystemMaps> {
        if self.pts.iter().any(|s| s.is_empty()) {
            return None;
        }
        // A link separated on two axes collapses to a scalar system.
        for li in 0..3 {
            if self.sep[li].len() >= 2 {
                return self.build_scalar(li);
            }
        }
        // Otherwise all three axes are covered one per link.
        self.build_curves()
    }

    /// Scalar maps when link `li` is separated on (at least) two axes: the
    /// conjunction on that link reduces to one coordinate comparison, which
    /// staged extrema push across the remaining links.
    fn build_scalar(self, li: usize) -> Option<SystemMaps> {
        let sep_axes: Vec<usize> = self.sep[li].iter().map(|(a, _)| *a).collect();
        let value_axis = (0..3).find(|a| !sep_axes.contains(a)).unwrap_or(2);
        match li {
            0 => Some(self.scalar_first(value_axis, false)),
            2 => Some(self.scalar_first(value_axis, true)),
            _ => Some(self.scalar_middle(value_axis)),
        }
    }

    /// First-link scalar case (`reversed` runs the chain backwards for the
    /// symmetric last-link case). With the separated axes automatic, a
    /// chain exists iff `sign * c(p)` is below the best `sign * c(q)`
    /// reachable backwards from `s`.
    fn scalar_first(&self, c: usize, reversed: bool) -> SystemMaps {
        let (sets, tiers, rels): ([&[P3]; 4], [[i8; 3]; 4], [GeneralizedDominance; 3]) =
            if reversed {
                (
                    [self.pts[3], self.pts[2], self.pts[1], self.pts[0]],
                    [self.tiers[3], self.tiers[2], self.tiers[1], self.tiers[0]],
                    [
                        self.rels[2].flip(),
                        self.rels[1].flip(),
                        self.rels[0].flip(),
                    ],
                )
            } else {
                (
                    self.pts,
                    self.tiers,
                    [
                        self.rels[0].clone(),
                        self.rels[1].clone(),
                        self.rels[2].clone(),
                    ],
                )
            };
        let (a, b, cc, d) = (sets[0], sets[1], sets[2], sets[3]);

        // phi over A: the first link's value-axis comparison.
        let t_ab = (tiers[0][c], tiers[1][c]);
        let sign = match rels[0].axis(c) {
            AxisRel::Lt => 1.0,
            AxisRel::Gt => -1.0,
            AxisRel::Any => unreachable!("relations are concrete after reduction"),
        };
        // With a tier gap the comparison is decided outright.
        let tier_auto = match (sign > 0.0, t_ab.0.cmp(&t_ab.1)) {
            (_, Ordering::Equal) => None,
            (true, Ordering::Less) | (false, Ordering::Greater) => Some(true),
            _ => Some(false),
        };
        let phi: Vec<ExtVal> = a
            .iter()
            .map(|p| match tier_auto {
                Some(true) => ExtVal::NegInf,
                Some(false) => ExtVal::PosInf,
                None => ExtVal::Fin(sign * p[c]),
            })
            .collect();

        // Best attainable witness value per middle element, then per far
        // element. Only the remaining two links constrain the chain tail.
        let w_b: Vec<ExtVal> = b.iter().map(|q| ExtVal::Fin(sign * q[c])).collect();
        let w_c: Vec<ExtVal> = cc
            .iter()
            .map(|r| {
                let mut best = ExtVal::NegInf;
                for (qi, q) in b.iter().enumerate() {
                    if link_holds(&rels[1], &tiers[1], q, &tiers[2], r) {
                        best = best.max(w_b[qi]);
                    }
                }
                best
            })
            .collect();
        let psi: Vec<ExtVal> = d
            .iter()
            .map(|s| {
                let mut best = ExtVal::NegInf;
                for (ri, r) in cc.iter().enumerate() {
                    if link_holds(&rels[2], &tiers[2], r, &tiers[3], s) {
                        best = best.max(w_c[ri]);
                    }
                }
                best
            })
            .collect();

        if reversed {
            // phi' on S, psi' on P; swap roles and negate to restore the
            // forward comparison.
            SystemMaps::Scalar {
                phi: psi.into_iter().map(ExtVal::neg).collect(),
                psi: phi.into_iter().map(ExtVal::neg).collect(),
            }
        } else {
            SystemMaps::Scalar { phi, psi }
        }
    }

    /// Middle-link scalar case: a chain exists iff the least reachable
    /// witness value from `p` is below the largest offered by `s`.
    fn scalar_middle(&self, c: usize) -> SystemMaps {
        let (p, q, r, s) = (self.pts[0], self.pts[1], self.pts[2], self.pts[3]);
        let sign = match self.rels[1].axis(c) {
            AxisRel::Lt => 1.0,
            AxisRel::Gt => -1.0,
            AxisRel::Any => unreachable!("relations are concrete after reduction"),
        };
        let t_qr = (self.tiers[1][c], self.tiers[2][c]);
        let tier_auto = match (sign > 0.0, t_qr.0.cmp(&t_qr.1)) {
            (_, Ordering::Equal) => None,
            (true, Ordering::Less) | (false, Ordering::Greater) => Some(true),
            _ => Some(false),
        };
        let phi: Vec<ExtVal> = p
            .iter()
            .map(|pp| {
                let mut best = ExtVal::PosInf;
                for qq in q {
                    if link_holds(&self.rels[0], &self.tiers[0], pp, &self.tiers[1], qq) {
                        best = best.min(match tier_auto {
                            Some(true) => ExtVal::NegInf,
                            Some(false) => ExtVal::PosInf,
                            None => ExtVal::Fin(sign * qq[c]),
                        });
                    }
                }
                best
            })
            .collect();
        let psi: Vec<ExtVal> = s
            .iter()
            .map(|ss| {
                let mut best = ExtVal::NegInf;
                for rr in r {
                    if link_holds(&self.rels[2], &self.tiers[2], rr, &self.tiers[3], ss) {
                        best = best.max(match tier_auto {
                            Some(true) => ExtVal::Fin(0.0),
                            Some(false) => ExtVal::NegInf,
                            None => ExtVal::Fin(sign * rr[c]),
                        });
                    }
                }
                best
            })
            .collect();
        // With a decided tier comparison the values above degenerate to
        // "does any witness pair exist": NegInf < Fin(0) on success.
        SystemMaps::Scalar { phi, psi }
    }

    /// Pseudoline case: the three links are separated on three distinct
    /// axes. Order P by the middle-link axis, order S by the derived sign,
    /// and compute reach-set rows over P-ranks.
    fn build_curves(&self) -> Option<SystemMaps> {
        let axis_of_link: Vec<usize> = (0..3)
            .map(|li| self.sep[li].first().map(|(a, _)| *a))
            .collect::<Option<Vec<_>>>()?;
        let perm = [axis_of_link[0], axis_of_link[1], axis_of_link[2]];
        let role_rels: [GeneralizedDominance; 3] = std::array::from_fn(|li| {
            GeneralizedDominance::new(vec![
                self.rels[li].axis(perm[0]),
                self.rels[li].axis(perm[1]),
                self.rels[li].axis(perm[2]),
            ])
        });
        let y = perm[1];

        let (p, q, r, s) = (self.pts[0], self.pts[1], self.pts[2], self.pts[3]);
        let mut p_order: Vec<u32> = (0..p.len() as u32).collect();
        p_order.sort_by(|&i, &j| {
            p[i as usize][y]
                .partial_cmp(&p[j as usize][y])
                .unwrap()
                .then(i.cmp(&j))
        });
        let mut rank_of = vec![0u32; p.len()];
        let p_sorted: Vec<P3> = p_order
            .iter()
            .enumerate()
            .map(|(rank, &pi)| {
                rank_of[pi as usize] = rank as u32;
                p[pi as usize]
            })
            .collect();

        let dir = derived_curve_direction(&role_rels);
        let mut s_order: Vec<u32> = (0..s.len() as u32).collect();
        s_order.sort_by(|&i, &j| {
            let (a, b) = (s[i as usize][y], s[j as usize][y]);
            let ord = a.partial_cmp(&b).unwrap().then(i.cmp(&j));
            if dir == AxisRel::Gt {
                ord.reverse()
            } else {
                ord
            }
        });
        let mut curve_of_s = vec![0u32; s.len()];
        for (pos, &si) in s_order.iter().enumerate() {
            curve_of_s[si as usize] = pos as u32;
        }
        let s_sorted: Vec<P3> = s_order.iter().map(|&si| s[si as usize]).collect();

        let rows = staged_reach_bits(&p_sorted, q, r, &s_sorted, &self.rels, &self.tiers)?;
        Some(SystemMaps::Curves {
            rank_of,
            curve_of_s,
            rows,
        })
    }
}

/// Shadow-avoiding violations for one sub-cell: the pairs `(p, s)` with no
/// chain whose `q`, `r`, `s` all avoid being confined to the sub-cell's
/// axis slabs (modulo 1).
pub struct ShadowCaseInput<'a> {
    /// P points inside the sub-cell (fractional coordinates) with their
    /// local ids.
    pub p_frac: &'a [P3],
    /// Chain sets: fractional coordinates, unit-cell offset relative to the
    /// P cell, per point.
    pub q: &'a [(P3, Cell3)],
    pub r: &'a [(P3, Cell3)],
    pub s: &'a [(P3, Cell3)],
    /// Per-axis slab index of the sub-cell and the slab assignment of any
    /// fractional coordinate.
    pub grid: &'a NonuniformGrid,
    pub gamma_slab: [usize; 3],
}

pub struct ShadowCaseOutput {
    /// One bitset per P point over the s-universe: pairs *violating* the
    /// shadow-avoiding reachability.
    pub violating: Vec<Bits>,
    pub systems_built: u64,
}

fn sector_of(grid: &NonuniformGrid, gamma: usize, axis: usize, v: f64) -> Sector {
    match grid.slab_of(axis, v).cmp(&gamma) {
        Ordering::Less => Sector::Below,
        Ordering::Equal => Sector::Mid,
        Ordering::Greater => Sector::Above,
    }
}

fn in_shadow(sec: &[Sector; 3]) -> bool {
    sec.iter().any(|s| *s == Sector::Mid)
}

fn sep_sign(a: Sector, b: Sector) -> Option<AxisRel> {
    match a.cmp(&b) {
        Ordering::Less => Some(AxisRel::Lt),
        Ordering::Greater => Some(AxisRel::Gt),
        Ordering::Equal => None,
    }
}

/// Group points by (cell offset, sector triple).
type GroupKey = (Cell3, [Sector; 3]);

fn group_points(
    pts: &[(P3, Cell3)],
    grid: &NonuniformGrid,
    gamma: &[usize; 3],
) -> BTreeMap<GroupKey, Vec<u32>> {
    let mut map: BTreeMap<GroupKey, Vec<u32>> = BTreeMap::new();
    for (i, (f, cell)) in pts.iter().enumerate() {
        let sec = [
            sector_of(grid, gamma[0], 0, f[0]),
            sector_of(grid, gamma[1], 1, f[1]),
            sector_of(grid, gamma[2], 2, f[2]),
        ];
        map.entry((*cell, sec)).or_default().push(i as u32);
    }
    map
}

/// Solve the shadow-avoiding case by enumerating sector configurations.
/// `mode` selects the direct-clearing scan or the sampling search.
pub fn shadow_case_solve(
    input: &ShadowCaseInput<'_>,
    params: &CuttingParams,
    rng: &mut ChaCha8Rng,
    stats: &mut CutStats,
    force_cutting: bool,
) -> Result<ShadowCaseOutput, CutError> {
    let np = input.p_frac.len();
    let ns = input.s.len();
    let mut violating: Vec<Bits> = (0..np)
        .map(|_| {
            let mut b = Bits::new(ns);
            for e in 0..ns {
                b.set(e);
            }
            b
        })
        .collect();
    if np == 0 || ns == 0 {
        return Ok(ShadowCaseOutput {
            violating,
            systems_built: 0,
        });
    }

    let q_groups = group_points(input.q, input.grid, &input.gamma_slab);
    let r_groups = group_points(input.r, input.grid, &input.gamma_slab);
    let s_groups = group_points(input.s, input.grid, &input.gamma_slab);

    // Materialize group coordinate arrays once.
    let gather = |pts: &[(P3, Cell3)], ids: &[u32]| -> Vec<P3> {
        ids.iter().map(|&i| pts[i as usize].0).collect()
    };

    let mut systems_built = 0u64;
    let mut remaining: usize = np * ns;

    let use_cutting = force_cutting || np > params.m0;
    let mut cut_systems: Vec<(SystemMaps, Vec<u32>)> = Vec::new();

    for ((cq, sq), q_ids) in &q_groups {
        if linf(cq, &[0, 0, 0]) > 1 {
            continue;
        }
        let rel1 = dominance_rel_for_cells(&[0, 0, 0], cq).unwrap();
        let q_pts = gather(input.q, q_ids);
        for ((cr, sr), r_ids) in &r_groups {
            if linf(cr, cq) > 1 {
                continue;
            }
            let rel2 = dominance_rel_for_cells(cq, cr).unwrap();
            let r_pts = gather(input.r, r_ids);
            for ((cs, ss), s_ids) in &s_groups {
                if linf(cs, cr) > 1 {
                    continue;
                }
                // Keep only configurations escaping the shadow slabs.
                if in_shadow(sq) && in_shadow(sr) && in_shadow(ss) {
                    continue;
                }
                let rel3 = dominance_rel_for_cells(cr, cs).unwrap();
                let s_pts = gather(input.s, s_ids);

                let mid = [Sector::Mid; 3];
                let mk_sep = |a: &[Sector; 3], b: &[Sector; 3]| -> Vec<(usize, AxisRel)> {
                    (0..3)
                        .filter_map(|i| sep_sign(a[i], b[i]).map(|s| (i, s)))
                        .collect()
                };
                let config = ChainConfig {
                    pts: [input.p_frac, &q_pts, &r_pts, &s_pts],
                    rels: [rel1.clone(), rel2.clone(), rel3.clone()],
                    tiers: [[0; 3]; 4],
                    sep: [mk_sep(&mid, sq), mk_sep(sq, sr), mk_sep(sr, ss)],
                };
                let Some(config) = config.reduce() else { continue };
                let Some(maps) = config.build() else { continue };
                systems_built += 1;

                if use_cutting {
                    cut_systems.push((maps, s_ids.clone()));
                    continue;
                }
                // Direct clearing: drop every pair the system connects.
                match &maps {
                    SystemMaps::Scalar { phi, psi } => {
                        for (pi, ph) in phi.iter().enumerate() {
                            for (k, &sid) in s_ids.iter().enumerate() {
                                if ph.lt(&psi[k]) && violating[pi].get(sid as usize) {
                                    violating[pi].clear(sid as usize);
                                    remaining -= 1;
                                }
                            }
                        }
                    }
                    SystemMaps::Curves {
                        rank_of,
                        curve_of_s,
                        rows,
                    } => {
                        for (pi, &rank) in rank_of.iter().enumerate() {
                            for (k, &sid) in s_ids.iter().enumerate() {
                                let row = &rows[curve_of_s[k] as usize];
                                if row.get(rank as usize) && violating[pi].get(sid as usize) {
                                    violating[pi].clear(sid as usize);
                                    remaining -= 1;
                                }
                            }
                        }
                    }
                }
                if remaining == 0 {
                    return Ok(ShadowCaseOutput {
                        violating,
                        systems_built,
                    });
                }
            }
        }
    }

    if use_cutting {
        // Assemble one level per system; absent curves are bottom curves.
        let mut scalar_oracles: Vec<ScalarCurves> = Vec::new();
        let mut interval_oracles: Vec<IntervalSystem> = Vec::new();
        let mut meta: Vec<(bool, usize, Vec<usize>, Vec<Option<usize>>)> = Vec::new();
        for (maps, s_ids) in &cut_systems {
            match maps {
                SystemMaps::Scalar { phi, psi } => {
                    let mut curve_of = vec![None; ns];
                    for (k, &sid) in s_ids.iter().enumerate() {
                        curve_of[sid as usize] = Some(k);
                    }
                    scalar_oracles.push(ScalarCurves {
                        phi: phi.clone(),
                        psi: psi.clone(),
                    });
                    meta.push((true, scalar_oracles.len() - 1, (0..np).collect(), curve_of));
                }
                SystemMaps::Curves {
                    rank_of,
                    curve_of_s,
                    rows,
                } => {
                    let mut curve_of = vec![None; ns];
                    for (k, &sid) in s_ids.iter().enumerate() {
                        curve_of[sid as usize] = Some(curve_of_s[k] as usize);
                    }
                    let sets: Vec<Option<IntervalRepr>> =
                        rows.iter().map(|b| Some(IntervalRepr::from_bits(b))).collect();
                    interval_oracles.push(IntervalSystem::new(np, sets));
                    meta.push((
                        false,
                        interval_oracles.len() - 1,
                        rank_of.iter().map(|&r| r as usize).collect(),
                        curve_of,
                    ));
                }
            }
        }
        let levels: Vec<Level> = meta
            .iter()
            .map(|(is_scalar, idx, point_of, curve_of)| Level {
                oracle: if *is_scalar {
                    &scalar_oracles[*idx] as &dyn PseudoOracle
                } else {
                    &interval_oracles[*idx] as &dyn PseudoOracle
                },
                point_of,
                curve_of,
            })
            .collect();
        for b in &mut violating {
            for e in 0..ns {
                b.clear(e);
            }
        }
        let pids: Vec<u32> = (0..np as u32).collect();
        let sids: Vec<u32> = (0..ns as u32).collect();
        cutting_search(&levels, &pids, &sids, params, rng, stats, &mut |p, s| {
            violating[p as usize].set(s as usize);
            true
        })?;
    }

    Ok(ShadowCaseOutput {
        violating,
        systems_built,
    })
}

/// Horizontal-line pseudoline family for scalar systems: points at height
/// `phi`, curves at height `psi`.
struct ScalarCurves {
    phi: Vec<ExtVal>,
    psi: Vec<ExtVal>,
}

impl PseudoOracle for ScalarCurves {
    fn points(&self) -> usize {
        self.phi.len()
    }
    fn curves(&self) -> usize {
        self.psi.len()
    }
    fn below(&self, e: usize, c: usize) -> bool {
        self.phi[e].lt(&self.psi[c])
    }
    fn order_at(&self, _e: usize, c1: usize, c2: usize) -> Ordering {
        self.psi[c1].cmp_e(&self.psi[c2]).then(c1.cmp(&c2))
    }
}

#[derive(Clone, Debug)]
pub struct Diam3Opts {
    /// Sub-grid resolution override; default n^(1/13).
    pub g: Option<usize>,
    pub seed: u64,
    pub exhaustive: bool,
    pub cap: usize,
    pub cut: CuttingParams,
    /// Route every sub-cell through the sampling search (test hook).
    pub force_cutting: bool,
}

impl Default for Diam3Opts {
    fn default() -> Self {
        Diam3Opts {
            g: None,
            seed: 0,
            exhaustive: false,
            cap: 1024,
            cut: CuttingParams::default(),
            force_cutting: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Decision3 {
    pub ok: bool,
    pub violations: Vec<(u32, u32)>,
    pub truncated: bool,
    pub stats: CutStats,
    pub systems_built: u64,
}

/// Decide whether every `(p, s)` pair is linked by a `p ~ q ~ r ~ s` chain
/// of intersecting unit cubes.
pub fn decide(
    pts_p: &[P3],
    pts_q: &[P3],
    pts_r: &[P3],
    pts_s: &[P3],
    opts: &Diam3Opts,
) -> Result<Decision3, CutError> {
    let mut stats = CutStats::default();
    let mut systems_built = 0u64;
    let mut violations: Vec<(u32, u32)> = Vec::new();
    let mut truncated = false;

    let n_total = pts_p.len() + pts_q.len() + pts_r.len() + pts_s.len();
    let g = opts
        .g
        .unwrap_or_else(|| ((n_total.max(2) as f64).powf(1.0 / 13.0).round() as usize).max(1));

    let mut p_cells: BTreeMap<Cell3, Vec<u32>> = BTreeMap::new();
    for (i, p) in pts_p.iter().enumerate() {
        p_cells.entry(cell_of(p)).or_default().push(i as u32);
    }
    let mut s_cells: BTreeMap<Cell3, Vec<u32>> = BTreeMap::new();
    for (i, s) in pts_s.iter().enumerate() {
        s_cells.entry(cell_of(s)).or_default().push(i as u32);
    }

    let mut push = |violations: &mut Vec<(u32, u32)>, truncated: &mut bool, pair: (u32, u32)| {
        if violations.len() >= opts.cap {
            *truncated = true;
            false
        } else {
            violations.push(pair);
            true
        }
    };

    'outer: for (cp, p_ids) in &p_cells {
        // Pairs with S-cells beyond reach are violations outright.
        for (cs, s_ids) in &s_cells {
            if linf(cp, cs) > 3 {
                for &pi in p_ids {
                    for &si in s_ids {
                        if !push(&mut violations, &mut truncated, (pi, si)) {
                            break 'outer;
                        }
                    }
                }
                if !opts.exhaustive {
                    break 'outer;
                }
            }
        }

        // Localize the chain sets to the reachable neighborhoods.
        let collect = |pts: &[P3], dist: i64| -> Vec<(u32, P3, Cell3)> {
            pts.iter()
                .enumerate()
                .filter_map(|(i, p)| {
                    let c = cell_of(p);
                    (linf(&c, cp) <= dist).then(|| {
                        (
                            i as u32,
                            frac_of(p),
                            [c[0] - cp[0], c[1] - cp[1], c[2] - cp[2]],
                        )
                    })
                })
                .collect()
        };
        let q_loc = collect(pts_q, 1);
        let r_loc = collect(pts_r, 2);
        let s_loc = collect(pts_s, 3);

        // Sub-grid over fractional coordinates of every participating point.
        let mut per_axis = vec![Vec::new(); 3];
        for &pi in p_ids {
            let f = frac_of(&pts_p[pi as usize]);
            for a in 0..3 {
                per_axis[a].push(f[a]);
            }
        }
        for (_, f, _) in q_loc.iter().chain(&r_loc).chain(&s_loc) {
            for a in 0..3 {
                per_axis[a].push(f[a]);
            }
        }
        let grid = NonuniformGrid::build(&per_axis, g);

        // Bucket the cell's P points by sub-cell.
        let mut sub_cells: BTreeMap<[usize; 3], Vec<u32>> = BTreeMap::new();
        for &pi in p_ids {
            let f = frac_of(&pts_p[pi as usize]);
            sub_cells
                .entry([
                    grid.slab_of(0, f[0]),
                    grid.slab_of(1, f[1]),
                    grid.slab_of(2, f[2]),
                ])
                .or_default()
                .push(pi);
        }

        let q_pairs: Vec<(P3, Cell3)> = q_loc.iter().map(|(_, f, c)| (*f, *c)).collect();
        let r_pairs: Vec<(P3, Cell3)> = r_loc.iter().map(|(_, f, c)| (*f, *c)).collect();
        let s_pairs: Vec<(P3, Cell3)> = s_loc.iter().map(|(_, f, c)| (*f, *c)).collect();

        for (gamma, members) in &sub_cells {
            let p_frac: Vec<P3> = members
                .iter()
                .map(|&pi| frac_of(&pts_p[pi as usize]))
                .collect();

            // Step 1: violations of shadow-avoiding reachability.
            let mut cell_rng = ChaCha8Rng::seed_from_u64(mix_seed(opts.seed, cp, gamma));
            let input = ShadowCaseInput {
                p_frac: &p_frac,
                q: &q_pairs,
                r: &r_pairs,
                s: &s_pairs,
                grid: &grid,
                gamma_slab: *gamma,
            };
            let out = shadow_case_solve(&input, &opts.cut, &mut cell_rng, &mut stats, opts.force_cutting)?;
            systems_built += out.systems_built;

            // Step 2: chains confined to the sub-cell's shadow slabs; the
            // slab construction keeps these sets small.
            let in_sh = |f: &P3| -> bool {
                (0..3).any(|a| grid.slab_of(a, f[a]) == gamma[a])
            };
            let q_sh: Vec<u32> = q_loc
                .iter()
                .enumerate()
                .filter(|(_, (_, f, _))| in_sh(f))
                .map(|(k, _)| k as u32)
                .collect();
            let r_sh: Vec<u32> = r_loc
                .iter()
                .enumerate()
                .filter(|(_, (_, f, _))| in_sh(f))
                .map(|(k, _)| k as u32)
                .collect();
            let s_sh: Vec<u32> = s_loc
                .iter()
                .enumerate()
                .filter(|(_, (_, f, _))| in_sh(f))
                .map(|(k, _)| k as u32)
                .collect();

            // Adjacency rows between consecutive shadow sets.
            let qr_rows: Vec<Bits> = q_sh
                .iter()
                .map(|&qk| {
                    let qg = &pts_q[q_loc[qk as usize].0 as usize];
                    let mut row = Bits::new(r_sh.len());
                    for (idx, &rk) in r_sh.iter().enumerate() {
                        if cubes_touch(qg, &pts_r[r_loc[rk as usize].0 as usize]) {
                            row.set(idx);
                        }
                    }
                    row
                })
                .collect();
            let sr_rows: Vec<Bits> = s_sh
                .iter()
                .map(|&sk| {
                    let sg = &pts_s[s_loc[sk as usize].0 as usize];
                    let mut row = Bits::new(r_sh.len());
                    for (idx, &rk) in r_sh.iter().enumerate() {
                        if cubes_touch(sg, &pts_r[r_loc[rk as usize].0 as usize]) {
                            row.set(idx);
                        }
                    }
                    row
                })
                .collect();

            // Step 3: containment with early abort at the first escapee.
            for (local_pi, &pi) in members.iter().enumerate() {
                let pg = &pts_p[pi as usize];
                let mut p_reach_r: Option<Bits> = None;
                for s_local in out.violating[local_pi].iter_ones() {
                    // Does an all-in-shadow chain rescue this pair?
                    let si_global = s_loc[s_local].0;
                    let rescued = match s_sh.iter().position(|&sk| sk as usize == s_local) {
                        None => false,
                        Some(s_pos) => {
                            let reach = p_reach_r.get_or_insert_with(|| {
                                let mut acc = Bits::new(r_sh.len());
                                for (qi, &qk) in q_sh.iter().enumerate() {
                                    if cubes_touch(
                                        pg,
                                        &pts_q[q_loc[qk as usize].0 as usize],
                                    ) {
                                        acc.or_assign(&qr_rows[qi]);
                                    }
                                }
                                acc
                            });
                            reach.intersects(&sr_rows[s_pos])
                        }
                    };
                    if !rescued {
                        if !push(&mut violations, &mut truncated, (pi, si_global)) {
                            break 'outer;
                        }
                        if !opts.exhaustive {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    Ok(Decision3 {
        ok: violations.is_empty() && !truncated,
        violations,
        truncated,
        stats,
        systems_built,
    })
}

fn mix_seed(seed: u64, cell: &Cell3, gamma: &[usize; 3]) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in cell
        .iter()
        .map(|&c| c as u64)
        .chain(gamma.iter().map(|&g| g as u64))
    {
        h ^= v.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = h.rotate_left(23).wrapping_mul(0x94d0_49bb_1331_11eb);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudoline::{check_star_property, MembershipSystem};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rand_rel(rng: &mut StdRng, allow_any: bool) -> GeneralizedDominance {
        GeneralizedDominance::new(
            (0..3)
                .map(|_| match rng.gen_range(0..if allow_any { 3 } else { 2 }) {
                    0 => AxisRel::Lt,
                    1 => AxisRel::Gt,
                    _ => AxisRel::Any,
                })
                .collect(),
        )
    }

    fn rand_pts(rng: &mut StdRng, n: usize, lo: [f64; 3], hi: [f64; 3]) -> Vec<P3> {
        (0..n)
            .map(|_| {
                [
                    rng.gen_range(lo[0]..hi[0]),
                    rng.gen_range(lo[1]..hi[1]),
                    rng.gen_range(lo[2]..hi[2]),
                ]
            })
            .collect()
    }

    #[test]
    fn neighborhood_intervals_match_brute_force() {
        let mut rng = StdRng::seed_from_u64(101);
        for trial in 0..300 {
            // Canonical separations: P/Q on x, Q/R on y, R/S on z.
            let (np, nq, nr, ns) = (
                rng.gen_range(1..14),
                rng.gen_range(0..14),
                rng.gen_range(0..14),
                rng.gen_range(1..14),
            );
            let p = rand_pts(&mut rng, np, [0.0; 3], [0.4, 1.0, 1.0]);
            let q = rand_pts(&mut rng, nq, [0.6, 0.0, 0.0], [1.0, 0.4, 1.0]);
            let r = rand_pts(&mut rng, nr, [0.0, 0.6, 0.0], [1.0, 1.0, 0.4]);
            let s = rand_pts(&mut rng, ns, [0.0, 0.0, 0.6], [1.0; 3]);
            let mut p_sorted = p.clone();
            p_sorted.sort_by(|a, b| a[1].partial_cmp(&b[1]).unwrap());
            let rels = [
                rand_rel(&mut rng, true),
                rand_rel(&mut rng, true),
                rand_rel(&mut rng, true),
            ];
            let reprs = neighborhood_intervals(&p_sorted, &q, &r, &s, &rels);
            for (si, ss) in s.iter().enumerate() {
                for (rank, pp) in p_sorted.iter().enumerate() {
                    let brute = q.iter().any(|qq| {
                        link_holds(&rels[0], &[0; 3], pp, &[0; 3], qq)
                            && r.iter().any(|rr| {
                                link_holds(&rels[1], &[0; 3], qq, &[0; 3], rr)
                                    && link_holds(&rels[2], &[0; 3], rr, &[0; 3], ss)
                            })
                    });
                    assert_eq!(
                        reprs[si].contains(rank as u32),
                        brute,
                        "trial {trial} s {si} rank {rank}"
                    );
                }
            }
            // Trivial cases: empty witness sets produce empty intervals.
            let empty = neighborhood_intervals(&p_sorted, &[], &r, &s, &rels);
            assert!(empty.iter().all(|r| r.intervals.is_empty()));
        }
    }

    #[test]
    fn star_property_holds_for_derived_orders() {
        // The membership systems arising from separated chains, ordered by
        // the middle axis and the derived direction, must always satisfy
        // the pseudoline order condition.
        let mut rng = StdRng::seed_from_u64(102);
        for trial in 0..600 {
            let (np, nq, nr, ns) = (
                rng.gen_range(1..12),
                rng.gen_range(1..12),
                rng.gen_range(1..12),
                rng.gen_range(1..12),
            );
            let p = rand_pts(&mut rng, np, [0.0; 3], [0.4, 1.0, 1.0]);
            let q = rand_pts(&mut rng, nq, [0.6, 0.0, 0.0], [1.0, 0.4, 1.0]);
            let r = rand_pts(&mut rng, nr, [0.0, 0.6, 0.0], [1.0, 1.0, 0.4]);
            let s = rand_pts(&mut rng, ns, [0.0, 0.0, 0.6], [1.0; 3]);
            // Concrete relations compatible with the separations on the
            // separated axes; free otherwise.
            let mut rels = [
                rand_rel(&mut rng, false),
                rand_rel(&mut rng, false),
                rand_rel(&mut rng, false),
            ];
            rels[0].set_axis(0, AxisRel::Lt);
            rels[1].set_axis(1, AxisRel::Lt);
            rels[2].set_axis(2, AxisRel::Lt);

            let mut p_sorted = p.clone();
            p_sorted.sort_by(|a, b| a[1].partial_cmp(&b[1]).unwrap());
            let dir = derived_curve_direction(&rels);
            let mut s_sorted = s.clone();
            s_sorted.sort_by(|a, b| {
                let ord = a[1].partial_cmp(&b[1]).unwrap();
                if dir == AxisRel::Gt {
                    ord.reverse()
                } else {
                    ord
                }
            });
            let rows =
                staged_reach_bits(&p_sorted, &q, &r, &s_sorted, &rels, &[[0; 3]; 4]).unwrap();
            let sys = MembershipSystem::new(p_sorted.len(), rows);
            assert!(
                check_star_property(&sys).is_ok(),
                "trial {trial}: derived order violates the condition"
            );
        }
    }

    fn brute_violations(p: &[P3], q: &[P3], r: &[P3], s: &[P3]) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (pi, pp) in p.iter().enumerate() {
            for (si, ss) in s.iter().enumerate() {
                let linked = q.iter().any(|qq| {
                    cubes_touch(pp, qq)
                        && r.iter()
                            .any(|rr| cubes_touch(qq, rr) && cubes_touch(rr, ss))
                });
                if !linked {
                    out.push((pi as u32, si as u32));
                }
            }
        }
        out
    }

    #[test]
    fn decide_trivial_cases() {
        let one = [[0.5f64, 0.5, 0.5]];
        let d = decide(&one, &one, &one, &one, &Diam3Opts::default()).unwrap();
        assert!(d.ok);
        let far = [[9.5f64, 0.5, 0.5]];
        let d = decide(&one, &one, &one, &far, &Diam3Opts::default()).unwrap();
        assert!(!d.ok);
        assert_eq!(d.violations, vec![(0, 0)]);
    }

    #[test]
    fn decide_matches_oracle_on_random_instances() {
        let mut rng = StdRng::seed_from_u64(103);
        for trial in 0..150 {
            let n = rng.gen_range(2..30);
            let side = rng.gen_range(1.5..4.5);
            let mk = |rng: &mut StdRng, n: usize| -> Vec<P3> {
                (0..n)
                    .map(|_| {
                        [
                            rng.gen_range(0.0..side),
                            rng.gen_range(0.0..side),
                            rng.gen_range(0.0..side),
                        ]
                    })
                    .collect()
            };
            let p = mk(&mut rng, n);
            let nq = rng.gen_range(1..n + 4);
            let q = mk(&mut rng, nq);
            let nr = rng.gen_range(1..n + 4);
            let r = mk(&mut rng, nr);
            let s = mk(&mut rng, n);
            let opts = Diam3Opts {
                seed: trial,
                exhaustive: true,
                cap: usize::MAX,
                g: Some(rng.gen_range(1..4)),
                ..Default::default()
            };
            let d = decide(&p, &q, &r, &s, &opts).unwrap();
            let mut got = d.violations.clone();
            got.sort_unstable();
            let expect = brute_violations(&p, &q, &r, &s);
            assert_eq!(got, expect, "trial {trial}");
        }
    }

    #[test]
    fn decide_with_forced_cutting_matches_oracle() {
        let mut rng = StdRng::seed_from_u64(104);
        for trial in 0..40 {
            let n = rng.gen_range(2..20);
            let side = rng.gen_range(1.5..3.5);
            let mk = |rng: &mut StdRng, n: usize| -> Vec<P3> {
                (0..n)
                    .map(|_| {
                        [
                            rng.gen_range(0.0..side),
                            rng.gen_range(0.0..side),
                            rng.gen_range(0.0..side),
                        ]
                    })
                    .collect()
            };
            let p = mk(&mut rng, n);
            let q = mk(&mut rng, n);
            let r = mk(&mut rng, n);
            let s = mk(&mut rng, n);
            let opts = Diam3Opts {
                seed: 1000 + trial,
                exhaustive: true,
                cap: usize::MAX,
                force_cutting: true,
                cut: CuttingParams {
                    m0: 2,
                    ..Default::default()
                },
                ..Default::default()
            };
            let d = decide(&p, &q, &r, &s, &opts).unwrap();
            let mut got = d.violations.clone();
            got.sort_unstable();
            assert_eq!(got, brute_violations(&p, &q, &r, &s), "trial {trial}");
        }
    }

    #[test]
    fn deterministic_across_reruns() {
        let mut rng = StdRng::seed_from_u64(105);
        let mk = |rng: &mut StdRng| -> Vec<P3> {
            (0..40)
                .map(|_| {
                    [
                        rng.gen_range(0.0..3.0),
                        rng.gen_range(0.0..3.0),
                        rng.gen_range(0.0..3.0),
                    ]
                })
                .collect()
        };
        let (p, q, r, s) = (mk(&mut rng), mk(&mut rng), mk(&mut rng), mk(&mut rng));
        let opts = Diam3Opts {
            seed: 42,
            exhaustive: true,
            cap: usize::MAX,
            ..Default::default()
        };
        let a = decide(&p, &q, &r, &s, &opts).unwrap();
        let b = decide(&p, &q, &r, &s, &opts).unwrap();
        assert_eq!(a.violations, b.violations);
        assert_eq!(a.ok, b.ok);
    }
}
