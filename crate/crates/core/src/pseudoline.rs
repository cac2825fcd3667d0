//! Ordered set systems, the pseudoline order condition, and curve
//! construction.
//!
//! A membership system is a fixed ground sequence `p_0..p_{n-1}` together
//! with ordered sets `S_0..S_{m-1}`. The order condition checked here says:
//! whenever `p_k` belongs to `S_j` but not `S_i`, `p_h` belongs to `S_i`
//! but not `S_j`, and `k < h`, the set indices must satisfy `i < j`.
//! Systems passing it embed as an abstract point-pseudoline family - one
//! curve per set, one point per ground element, membership becoming
//! "point below curve", with every curve pair crossing at most once.
//!
//! Two independent checkers are provided (a bitset pair scan and an
//! incremental sweep that simulates the curve construction), plus the
//! explicit construction itself with exact crossing counting, and oracle
//! backends for implicit systems represented by rank intervals.

use std::cmp::Ordering;

use crate::bits::Bits;

/// Ordered ground sequence with ordered sets, membership as bitsets.
#[derive(Clone, Debug)]
pub struct MembershipSystem {
    pub ground: usize,
    pub sets: Vec<Bits>,
}

impl MembershipSystem {
    pub fn new(ground: usize, sets: Vec<Bits>) -> Self {
        assert!(sets.iter().all(|s| s.len() == ground));
        MembershipSystem { ground, sets }
    }

    pub fn from_rows(ground: usize, rows: &[Vec<usize>]) -> Self {
        let sets = rows
            .iter()
            .map(|row| {
                let mut b = Bits::new(ground);
                for &e in row {
                    b.set(e);
                }
                b
            })
            .collect();
        MembershipSystem { ground, sets }
    }

    pub fn contains(&self, set: usize, elem: usize) -> bool {
        self.sets[set].get(elem)
    }
}

/// Witness against the order condition: `p_k` in `S_j` only, `p_h` in
/// `S_i` only, `k < h`, yet `i > j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StarViolation {
    pub k: usize,
    pub h: usize,
    pub i: usize,
    pub j: usize,
}

/// Reference checker: for every set pair, the last exclusive element of the
/// higher-indexed set must not come after the first exclusive element of
/// the lower-indexed one.
pub fn check_star_property(sys: &MembershipSystem) -> Result<(), StarViolation> {
    let m = sys.sets.len();
    for j in 0..m {
        for i in j + 1..m {
            // Violation iff min(S_j \ S_i) < max(S_i \ S_j).
            if let (Some(k), Some(h)) = (
                sys.sets[j].first_diff(&sys.sets[i]),
                sys.sets[i].last_diff(&sys.sets[j]),
            ) {
                if k < h {
                    return Err(StarViolation { k, h, i, j });
                }
            }
        }
    }
    Ok(())
}

/// Sweep checker: simulate the left-to-right curve construction and watch
/// for a pair forced to cross twice. Linear in `n * m`.
pub fn check_star_property_sweep(sys: &MembershipSystem) -> Result<(), StarViolation> {
    construct_orders(sys).map(|_| ())
}

/// Vertical curve orders at integer x-positions.
///
/// `orders[x]` lists curve indices bottom to top after processing the first
/// `x` ground elements; `split[x]` counts how many lie below the zero line.
pub struct CurveOrders {
    pub orders: Vec<Vec<u32>>,
    pub split: Vec<usize>,
}

fn construct_orders(sys: &MembershipSystem) -> Result<CurveOrders, StarViolation> {
    let m = sys.sets.len();
    let n = sys.ground;
    let mut order: Vec<u32> = (0..m as u32).collect();
    let mut split = m;
    let mut orders = vec![order.clone()];
    let mut splits = vec![split];

    for e in 0..n {
        let member = |c: u32| sys.sets[c as usize].get(e);
        let neg = &order[..split];
        let pos = &order[split..];

        // Second-crossing detection between curves entering and leaving the
        // positive side. A leaving curve below-seeded (smaller index) than
        // an entering one has crossed it before and would cross again.
        let min_leaving = pos.iter().copied().filter(|&c| !member(c)).min();
        let max_entering = neg.iter().copied().filter(|&c| member(c)).max();
        if let (Some(b), Some(c)) = (min_leaving, max_entering) {
            if b < c {
                let k = sys.sets[b as usize]
                    .first_diff(&sys.sets[c as usize])
                    .expect("crossed curves must differ");
                return Err(StarViolation {
                    k,
                    h: e,
                    i: c as usize,
                    j: b as usize,
                });
            }
        }
        // A leaving curve drops below every staying curve under it; if one
        // of those started above it, they have crossed before.
        let mut best_staying: Option<u32> = None;
        for &c in pos {
            if member(c) {
                best_staying = Some(best_staying.map_or(c, |b| b.max(c)));
            } else if let Some(a) = best_staying {
                if a > c {
                    let k = sys.sets[c as usize]
                        .first_diff(&sys.sets[a as usize])
                        .expect("crossed curves must differ");
                    return Err(StarViolation {
                        k,
                        h: e,
                        i: a as usize,
                        j: c as usize,
                    });
                }
            }
        }
        // Symmetric: an entering curve rises above every absent curve over
        // it; one seeded below it must have crossed it before.
        let mut best_absent: Option<u32> = None;
        for &c in neg.iter().rev() {
            if !member(c) {
                best_absent = Some(best_absent.map_or(c, |b| b.min(c)));
            } else if let Some(d) = best_absent {
                if d < c {
                    let k = sys.sets[d as usize]
                        .first_diff(&sys.sets[c as usize])
                        .expect("crossed curves must differ");
                    return Err(StarViolation {
                        k,
                        h: e,
                        i: c as usize,
                        j: d as usize,
                    });
                }
            }
        }

        // New order: absent-stay, leave | zero | enter, present-stay.
        let mut next = Vec::with_capacity(m);
        next.extend(neg.iter().copied().filter(|&c| !member(c)));
        next.extend(pos.iter().copied().filter(|&c| !member(c)));
        let new_split = next.len();
        next.extend(neg.iter().copied().filter(|&c| member(c)));
        next.extend(pos.iter().copied().filter(|&c| member(c)));
        order = next;
        split = new_split;
        orders.push(order.clone());
        splits.push(split);
    }
    Ok(CurveOrders {
        orders,
        split: splits,
    })
}

/// Explicitly constructed pseudoline family for a system satisfying the
/// order condition.
pub struct ExplicitPseudolines {
    pub n: usize,
    pub m: usize,
    split: Vec<usize>,
    ///
    rank: Vec<Vec<u32>>,
}

/// Build curves for `sys`; rejects systems violating the order condition
/// with the offending quadruple.
pub fn build_pseudoline_system(
    sys: &MembershipSystem,
) -> Result<ExplicitPseudolines, StarViolation> {
    let co = construct_orders(sys)?;
    let m = sys.sets.len();
    let rank = co
        .orders
        .iter()
        .map(|ord| {
            let mut r = vec![0u32; m];
            for (pos, &c) in ord.iter().enumerate() {
                r[c as usize] = pos as u32;
            }
            r
        })
        .collect();
    Ok(ExplicitPseudolines {
        n: sys.ground,
        m,
        split: co.split,
        rank,
    })
}

impl ExplicitPseudolines {
    /// Is curve `c` on the positive side at integer position `x`?
    pub fn positive_at(&self, x: usize, c: usize) -> bool {
        self.rank[x][c] as usize >= self.split[x]
    }

    /// Membership of ground element `e` (the point at `x = e + 1`).
    pub fn point_below(&self, e: usize, c: usize) -> bool {
        self.positive_at(e + 1, c)
    }

    /// Vertical order of two curves at integer position `x`.
    pub fn order_at_x(&self, x: usize, c1: usize, c2: usize) -> Ordering {
        self.rank[x][c1].cmp(&self.rank[x][c2])
    }

    /// Number of order swaps of the pair across the sweep. At most one for
    /// a valid family.
    pub fn crossing_count(&self, c1: usize, c2: usize) -> usize {
        let mut crossings = 0;
        let mut below = self.rank[0][c1] < self.rank[0][c2];
        for x in 1..=self.n {
            let now = self.rank[x][c1] < self.rank[x][c2];
            if now != below {
                crossings += 1;
                below = now;
            }
        }
        crossings
    }
}

/// Oracle surface over an abstract point-pseudoline system: membership
/// probes and the vertical order of two curves at a point's x-coordinate.
pub trait PseudoOracle {
    fn points(&self) -> usize;
    fn curves(&self) -> usize;
    /// Is the point of ground element `e` below curve `c`?
    fn below(&self, e: usize, c: usize) -> bool;
    /// Order of curves `c1`, `c2` on the vertical line through point `e`.
    fn order_at(&self, e: usize, c1: usize, c2: usize) -> Ordering;
}

impl PseudoOracle for ExplicitPseudolines {
    fn points(&self) -> usize {
        self.n
    }
    fn curves(&self) -> usize {
        self.m
    }
    fn below(&self, e: usize, c: usize) -> bool {
        self.point_below(e, c)
    }
    fn order_at(&self, e: usize, c1: usize, c2: usize) -> Ordering {
        self.order_at_x(e + 1, c1, c2)
    }
}

/// Sorted, disjoint, maximal rank intervals (inclusive ends) representing a
/// subset of the ground sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntervalRepr {
    pub intervals: Vec<(u32, u32)>,
}

impl IntervalRepr {
    pub fn from_bits(b: &Bits) -> Self {
        let mut intervals = Vec::new();
        let mut cur: Option<(u32, u32)> = None;
        for e in b.iter_ones() {
            let e = e as u32;
            match cur {
                Some((s, t)) if t + 1 == e => cur = Some((s, e)),
                Some(iv) => {
                    intervals.push(iv);
                    cur = Some((e, e));
                }
                None => cur = Some((e, e)),
            }
        }
        if let Some(iv) = cur {
            intervals.push(iv);
        }
        IntervalRepr { intervals }
    }

    pub fn contains(&self, rank: u32) -> bool {
        match self.intervals.binary_search_by(|&(s, _)| s.cmp(&rank)) {
            Ok(_) => true,
            Err(0) => false,
            Err(i) => self.intervals[i - 1].1 >= rank,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.intervals
            .iter()
            .map(|&(s, t)| (t - s + 1) as usize)
            .sum()
    }

    /// Smallest rank in `self` but not in `other`, by a merge walk.
    pub fn first_exclusive(&self, other: &IntervalRepr) -> Option<u32> {
        let mut oi = 0;
        for &(s, t) in &self.intervals {
            let mut pos = s;
            while pos <= t {
                while oi < other.intervals.len() && other.intervals[oi].1 < pos {
                    oi += 1;
                }
                match other.intervals.get(oi) {
                    Some(&(os, ot)) if os <= pos => {
                        // Covered through ot; jump past it.
                        if ot >= t {
                            break;
                        }
                        pos = ot + 1;
                    }
                    _ => return Some(pos),
                }
            }
        }
        None
    }
}

/// Point-pseudoline oracle backed by rank-interval set representations.
///
/// Curve indices follow the system's set order, which the caller must have
/// arranged to satisfy the order condition. Sets marked absent behave as
/// bottom curves: below every point and every real curve, mutually ordered
/// by index and crossing nothing.
pub struct IntervalSystem {
    pub ground: usize,
    pub sets: Vec<Option<IntervalRepr>>,
    /// Interval-count threshold splitting cheap ("good") sets from
    /// expensive ones; informational, derived as the median count.
    pub good_threshold: usize,
}

impl IntervalSystem {
    pub fn new(ground: usize, sets: Vec<Option<IntervalRepr>>) -> Self {
        let mut counts: Vec<usize> = sets
            .iter()
            .flatten()
            .map(|r| r.intervals.len())
            .collect();
        counts.sort_unstable();
        let good_threshold = counts.get(counts.len() / 2).copied().unwrap_or(0);
        IntervalSystem {
            ground,
            sets,
            good_threshold,
        }
    }

    pub fn is_good(&self, c: usize) -> bool {
        self.sets[c]
            .as_ref()
            .map_or(true, |r| r.intervals.len() <= self.good_threshold)
    }
}

impl PseudoOracle for IntervalSystem {
    fn points(&self) -> usize {
        self.ground
    }
    fn curves(&self) -> usize {
        self.sets.len()
    }

    fn below(&self, e: usize, c: usize) -> bool {
        match &self.sets[c] {
            Some(r) => r.contains(e as u32),
            None => false,
        }
    }

    fn order_at(&self, e: usize, c1: usize, c2: usize) -> Ordering {
        if c1 == c2 {
            return Ordering::Equal;
        }
        let (lo, hi, flip) = if c1 < c2 {
            (c1, c2, false)
        } else {
            (c2, c1, true)
        };
        // Bottom curves sit under everything, ordered by index.
        let below = match (&self.sets[lo], &self.sets[hi]) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => {
                // The lower-indexed curve stays below until its first
                // exclusive element, then stays above.
                match a.first_exclusive(b) {
                    Some(k) => (e as u32) < k,
                    None => true,
                }
            }
        };
        let ord = if below {
            Ordering::Less
        } else {
            Ordering::Greater
        };
        if flip {
            ord.reverse()
        } else {
            ord
        }
    }
}
