//! Equal-frequency nonuniform grids.
//!
//! Breakpoints sit on order statistics of the input coordinate multiset, so
//! between two consecutive grid planes there are at most `ceil(n/g)` values
//! strictly inside the open slab, duplicates included.

/// Per-axis sorted breakpoint lists. `g` slabs per axis means `g - 1`
/// breakpoints; axes may end up with fewer when duplicates collapse.
#[derive(Clone, Debug)]
pub struct NonuniformGrid {
    axes: Vec<Vec<f64>>,
}

impl NonuniformGrid {
    /// Build from per-axis value multisets with `g` target slabs per axis.
    pub fn build(values_per_axis: &[Vec<f64>], g: usize) -> Self {
        let g = g.max(1);
        let axes = values_per_axis
            .iter()
            .map(|vals| {
                let mut v = vals.clone();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = v.len();
                let mut brk = Vec::new();
                if n > 0 {
                    for k in 1..g {
                        let pos = k * n / g;
                        if pos < n {
                            let b = v[pos];
                            if brk.last() != Some(&b) {
                                brk.push(b);
                            }
                        }
                    }
                }
                brk
            })
            .collect();
        NonuniformGrid { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn breakpoints(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    pub fn slab_count(&self, axis: usize) -> usize {
        self.axes[axis].len() + 1
    }

    /// Slab index of `v`: values equal to a breakpoint land in the slab
    /// above it, deterministically.
    pub fn slab_of(&self, axis: usize, v: f64) -> usize {
        self.axes[axis].partition_point(|b| *b <= v)
    }

    /// Open slab interval `(lo, hi)` around `v`'s slab.
    pub fn slab_bounds(&self, axis: usize, slab: usize) -> (f64, f64) {
        let brk = &self.axes[axis];
        let lo = if slab == 0 {
            f64::NEG_INFINITY
        } else {
            brk[slab - 1]
        };
        let hi = if slab >= brk.len() {
            f64::INFINITY
        } else {
            brk[slab]
        };
        (lo, hi)
    }

    /// Largest grid-aligned interval `[brk[i], brk[j]]` inside `[lo, hi]`,
    /// as breakpoint indices. `None` when no grid plane crosses the
    /// interval.
    pub fn inscribe_axis(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let brk = &self.axes[axis];
        let i = brk.partition_point(|b| *b < lo);
        let j = brk.partition_point(|b| *b <= hi);
        if i < j {
            Some((i, j - 1))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_slab_when_g_is_one() {
        let grid = NonuniformGrid::build(&[vec![1.0, 2.0, 3.0]], 1);
        assert_eq!(grid.slab_count(0), 1);
        assert_eq!(grid.slab_of(0, -100.0), 0);
        assert_eq!(grid.slab_of(0, 100.0), 0);
    }

    #[test]
    fn equal_values_collapse_but_occupancy_holds() {
        let vals = vec![5.0; 64];
        let grid = NonuniformGrid::build(&[vals.clone()], 8);
        // All breakpoints collapse to the shared value; every open slab
        // strictly between planes is empty of input values.
        for slab in 0..grid.slab_count(0) {
            let (lo, hi) = grid.slab_bounds(0, slab);
            let inside = vals.iter().filter(|&&v| v > lo && v < hi).count();
            assert_eq!(inside, 0);
        }
    }

    #[test]
    fn occupancy_bound_on_random_values() {
        let mut rng = StdRng::seed_from_u64(51);
        for _ in 0..50 {
            let n: usize = rng.gen_range(10..500);
            let g = rng.gen_range(1..20usize);
            let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let grid = NonuniformGrid::build(&[vals.clone()], g);
            for slab in 0..grid.slab_count(0) {
                let (lo, hi) = grid.slab_bounds(0, slab);
                let inside = vals.iter().filter(|&&v| v > lo && v < hi).count();
                assert!(inside <= n.div_ceil(g), "n={n} g={g} inside={inside}");
            }
            // Every value maps into the slab holding it: breakpoint hits go
            // to the slab just above, so membership is lo <= v < hi.
            for &v in &vals {
                let s = grid.slab_of(0, v);
                let (lo, hi) = grid.slab_bounds(0, s);
                assert!(v >= lo || lo == f64::NEG_INFINITY);
                assert!(v < hi || hi == f64::INFINITY);
            }
        }
    }

    #[test]
    fn inscribe_axis_is_maximal() {
        let mut rng = StdRng::seed_from_u64(52);
        for _ in 0..200 {
            let n = rng.gen_range(4..100);
            let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            let grid = NonuniformGrid::build(&[vals], rng.gen_range(2..12));
            let lo = rng.gen_range(0.0..9.0);
            let hi = lo + rng.gen_range(0.0..4.0);
            match grid.inscribe_axis(0, lo, hi) {
                Some((i, j)) => {
                    let brk = grid.breakpoints(0);
                    assert!(brk[i] >= lo && brk[j] <= hi && i <= j);
                    // One-plane expansions must leave the interval.
                    if i > 0 {
                        assert!(brk[i - 1] < lo);
                    }
                    if j + 1 < brk.len() {
                        assert!(brk[j + 1] > hi);
                    }
                }
                None => {
                    // No plane inside [lo, hi] at all.
                    assert!(grid.breakpoints(0).iter().all(|b| *b < lo || *b > hi));
                }
            }
        }
    }
}
