//! Staircase unions of dominance orthants and the box decomposition of
//! their complement.
//!
//! The union is `U = ⋃_a { x : a < x componentwise (strict) }` over a set
//! of apex points. Its complement decomposes into linearly many axis boxes
//! via a sweep along the first axis that maintains the Pareto frontier of
//! the remaining coordinates; a cell is emitted whenever the frontier step
//! that defines it disappears. Cells use per-axis half-open semantics
//! `(lo, hi]` (infinities allowed), are pairwise disjoint, and cover the
//! complement exactly - including all boundary points, since the orthants
//! are open.

/// One complement cell: `lo[i] < x[i] <= hi[i]` on every axis.
#[derive(Clone, Debug, PartialEq)]
pub struct CompCell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CompCell {
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(i, &x)| x > self.lo[i] && x <= self.hi[i])
    }
}

/// Is `p` strictly dominated by some apex (i.e., inside the union)?
pub fn in_orthant_union(apexes: &[Vec<f64>], p: &[f64]) -> bool {
    apexes
        .iter()
        .any(|a| a.iter().zip(p).all(|(av, pv)| av < pv))
}

/// Decompose the complement of the orthant union into axis boxes.
/// Supports 2 and 3 dimensions; the cell count is at most `3k + 1` for `k`
/// apexes.
pub fn staircase_complement_decompose(dim: usize, apexes: &[Vec<f64>]) -> Vec<CompCell> {
    match dim {
        2 => decompose_2d(apexes),
        3 => decompose_3d(apexes),
        d => panic!("staircase decomposition supports dim 2 or 3, got {d}"),
    }
}

fn decompose_2d(apexes: &[Vec<f64>]) -> Vec<CompCell> {
    let mut order: Vec<usize> = (0..apexes.len()).collect();
    order.sort_by(|&a, &b| {
        apexes[a][0]
            .partial_cmp(&apexes[b][0])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut cells = Vec::new();
    let mut min_y = f64::INFINITY;
    let mut start_x = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let x = apexes[order[i]][0];
        // Close the running cell at this plane when the frontier drops.
        let mut new_min = min_y;
        while i < order.len() && apexes[order[i]][0] == x {
            new_min = new_min.min(apexes[order[i]][1]);
            i += 1;
        }
        if new_min < min_y {
            cells.push(CompCell {
                lo: vec![start_x, f64::NEG_INFINITY],
                hi: vec![x, min_y],
            });
            start_x = x;
            min_y = new_min;
        }
    }
    cells.push(CompCell {
        lo: vec![start_x, f64::NEG_INFINITY],
        hi: vec![f64::INFINITY, min_y],
    });
    cells
}

/// Frontier entry for the 3D sweep: `(y, z)` Pareto-minimal among active
/// apexes, plus the x-coordinate where the cell left of this entry opened.
#[derive(Clone, Copy, Debug)]
struct Step {
    y: f64,
    z: f64,
    cell_start: f64,
}

fn decompose_3d(apexes: &[Vec<f64>]) -> Vec<CompCell> {
    let mut order: Vec<usize> = (0..apexes.len()).collect();
    order.sort_by(|&a, &b| {
        apexes[a][0]
            .partial_cmp(&apexes[b][0])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut cells = Vec::new();
    // Frontier sorted by y ascending (z strictly descending).
    let mut frontier: Vec<Step> = Vec::new();
    let mut trailing_start = f64::NEG_INFINITY;

    // The cell left of frontier[j]; j == frontier.len() is the trailing
    // cell right of the last step (or the whole plane when empty).
    let close_cell = |cells: &mut Vec<CompCell>, frontier: &[Step], j: usize, x_end: f64,
                      start: f64, trailing_start: f64| {
        if j == frontier.len() {
            let (y_lo, z_hi) = match frontier.last() {
                Some(s) => (s.y, s.z),
                None => (f64::NEG_INFINITY, f64::INFINITY),
            };
            cells.push(CompCell {
                lo: vec![trailing_start, y_lo, f64::NEG_INFINITY],
                hi: vec![x_end, f64::INFINITY, z_hi],
            });
        } else {
            let (y_lo, z_hi) = if j == 0 {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                (frontier[j - 1].y, frontier[j - 1].z)
            };
            cells.push(CompCell {
                lo: vec![start, y_lo, f64::NEG_INFINITY],
                hi: vec![x_end, frontier[j].y, z_hi],
            });
        }
    };

    let mut i = 0;
    while i < order.len() {
        let x = apexes[order[i]][0];
        while i < order.len() && apexes[order[i]][0] == x {
            let (ay, az) = (apexes[order[i]][1], apexes[order[i]][2]);
            i += 1;
            // Skip apexes whose orthant is contained in an existing one.
            let pos = frontier.partition_point(|s| s.y < ay);
            let dominated = (pos > 0 && frontier[pos - 1].z <= az)
                || (pos < frontier.len() && frontier[pos].y == ay && frontier[pos].z <= az);
            if dominated {
                continue;
            }
            // Remove steps the new apex dominates: y >= ay and z >= az form
            // a contiguous run starting at `pos`.
            let mut end = pos;
            while end < frontier.len() && frontier[end].z >= az {
                end += 1;
            }
            // Close cells whose defining steps change: the left-cells of
            // removed steps, the left-cell of the survivor after the run,
            // and the trailing cell when the run reaches the end.
            for j in pos..end {
                close_cell(&mut cells, &frontier, j, x, frontier[j].cell_start, trailing_start);
            }
            if end < frontier.len() {
                close_cell(
                    &mut cells,
                    &frontier,
                    end,
                    x,
                    frontier[end].cell_start,
                    trailing_start,
                );
            } else {
                close_cell(&mut cells, &frontier, frontier.len(), x, 0.0, trailing_start);
                trailing_start = x;
            }
            frontier.drain(pos..end);
            frontier.insert(
                pos,
                Step {
                    y: ay,
                    z: az,
                    cell_start: x,
                },
            );
            if pos + 1 < frontier.len() {
                frontier[pos + 1].cell_start = x;
            }
        }
    }
    // Flush everything still open.
    let f = frontier.clone();
    for j in 0..f.len() {
        close_cell(&mut cells, &f, j, f64::INFINITY, f[j].cell_start, trailing_start);
    }
    close_cell(&mut cells, &f, f.len(), f64::INFINITY, 0.0, trailing_start);
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn no_apexes_is_one_full_cell() {
        for dim in [2usize, 3] {
            let cells = staircase_complement_decompose(dim, &[]);
            assert_eq!(cells.len(), 1);
            assert!(cells[0].lo.iter().all(|v| *v == f64::NEG_INFINITY));
            assert!(cells[0].hi.iter().all(|v| *v == f64::INFINITY));
        }
    }

    #[test]
    fn one_apex_at_origin_gives_three_cells() {
        let cells = staircase_complement_decompose(3, &[vec![0.0, 0.0, 0.0]]);
        assert_eq!(cells.len(), 3);
        // The scheme is pinned: x-slab first, then y, then z.
        assert!(cells.iter().any(|c| c.hi[0] == 0.0));
        assert!(cells
            .iter()
            .any(|c| c.lo[0] == 0.0 && c.hi[1] == 0.0 && c.hi[2] == f64::INFINITY));
        assert!(cells
            .iter()
            .any(|c| c.lo[0] == 0.0 && c.lo[1] == 0.0 && c.hi[2] == 0.0));
    }

    fn check_cover(dim: usize, apexes: &[Vec<f64>], cells: &[CompCell], rng: &mut StdRng) {
        for _ in 0..500 {
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.5..2.5)).collect();
            let inside_union = in_orthant_union(apexes, &p);
            let holding: Vec<usize> = cells
                .iter()
                .enumerate()
                .filter(|(_, c)| c.contains(&p))
                .map(|(i, _)| i)
                .collect();
            if inside_union {
                assert!(holding.is_empty(), "union point inside a cell {p:?}");
            } else {
                assert_eq!(holding.len(), 1, "complement point in {holding:?} {p:?}");
            }
        }
    }

    #[test]
    fn cells_cover_complement_disjointly() {
        let mut rng = StdRng::seed_from_u64(61);
        for dim in [2usize, 3] {
            for _ in 0..100 {
                let k = rng.gen_range(0..40);
                let apexes: Vec<Vec<f64>> = (0..k)
                    .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
                    .collect();
                let cells = staircase_complement_decompose(dim, &apexes);
                assert!(
                    cells.len() <= 3 * k + 1,
                    "dim={dim} k={k} cells={}",
                    cells.len()
                );
                check_cover(dim, &apexes, &cells, &mut rng);
            }
        }
    }

    #[test]
    fn heavy_probe_suite() {
        // Larger apex sets, many probes, including boundary-aligned ones.
        let mut rng = StdRng::seed_from_u64(62);
        for _ in 0..20 {
            let k = rng.gen_range(50..200);
            let apexes: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let cells = staircase_complement_decompose(3, &apexes);
            assert!(cells.len() <= 3 * k + 1);
            for _ in 0..2500 {
                // Half the probes reuse apex coordinates to hit boundaries.
                let p: Vec<f64> = (0..3)
                    .map(|a| {
                        if rng.gen_bool(0.5) {
                            apexes[rng.gen_range(0..k)][a]
                        } else {
                            rng.gen_range(-1.2..1.2)
                        }
                    })
                    .collect();
                let inside = in_orthant_union(&apexes, &p);
                let count = cells.iter().filter(|c| c.contains(&p)).count();
                assert_eq!(count, usize::from(!inside), "probe {p:?}");
            }
        }
    }
}
