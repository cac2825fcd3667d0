//! Multi-level search over abstract point-pseudoline systems via random
//! sampling and vertical decomposition.
//!
//! The driver decides (or reports) the pairs `(p, s)` whose point lies
//! strictly above the curve of `s` in *every* level. Per level: sample a
//! few curves, split the points into pseudo-trapezoids of the sample's
//! arrangement (keyed by below-set and the two bounding sample curves,
//! which is exact because curves pair-cross at most once), verify the
//! sample quality by direct count - every cell may meet at most `|S|/rho`
//! curves, else resample - and recurse: crossing curves stay on this
//! level, curves below a cell are resolved and descend a level, curves
//! above connect and drop out.
//!
//! Curves may be absent from a level (`curve_of` = `None`): they behave as
//! bottom curves, resolved immediately. Below the `m0` cutoff the search
//! switches to a direct scan across the remaining levels.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pseudoline::PseudoOracle;

#[derive(Debug, Error)]
pub enum CutError {
    #[error("resampling cap of {0} exceeded; oracle inconsistent or input not a pseudoline family")]
    ResampleCapExceeded(usize),
}

/// Sampling parameters.
#[derive(Clone, Copy, Debug)]
pub struct CuttingParams {
    pub c0: usize,
    pub rho: usize,
    pub m0: usize,
    pub max_resample: usize,
}

impl Default for CuttingParams {
    fn default() -> Self {
        CuttingParams {
            c0: 8,
            rho: 4,
            m0: 64,
            max_resample: 50,
        }
    }
}

impl CuttingParams {
    pub fn sample_size(&self) -> usize {
        let rho = self.rho.max(2) as f64;
        (self.c0.max(1) as f64 * rho * rho.log2()).ceil() as usize
    }
}

/// Instrumentation collected across one search.
#[derive(Clone, Debug, Default)]
pub struct CutStats {
    pub resamples: u64,
    pub accepted_samples: u64,
    /// Per accepted sample: worst cell crossing count and the bound it had
    /// to meet.
    pub quality: Vec<(usize, usize)>,
    pub naive_pairs: u64,
}

/// One level: an oracle plus the embeddings of the shared point and curve
/// universes into it.
pub struct Level<'a> {
    pub oracle: &'a dyn PseudoOracle,
    /// Ground element of each point id.
    pub point_of: &'a [usize],
    /// Curve of each curve id; `None` marks a bottom curve (below
    /// everything, never connects).
    pub curve_of: &'a [Option<usize>],
}

impl<'a> Level<'a> {
    fn below(&self, p: usize, s: usize) -> bool {
        match self.curve_of[s] {
            Some(c) => self.oracle.below(self.point_of[p], c),
            None => false,
        }
    }

    /// Vertical order of two curve ids at the x of point `p`; bottom curves
    /// sit under real ones and follow id order among themselves.
    fn order(&self, p: usize, s1: usize, s2: usize) -> std::cmp::Ordering {
        match (self.curve_of[s1], self.curve_of[s2]) {
            (Some(c1), Some(c2)) => self.oracle.order_at(self.point_of[p], c1, c2),
            (None, Some(_)) => std::cmp::Ordering::Less,
            (Some(_), None) => std::cmp::Ordering::Greater,
            (None, None) => s1.cmp(&s2),
        }
    }
}

/// Decide or report all pairs above every level.
///
/// `on_pair` receives each qualifying `(point id, curve id)`; returning
/// `false` aborts the search (used by decision mode after the first hit).
/// The overall return is whether any qualifying pair exists (when aborted
/// early, `true`).
pub fn cutting_search(
    levels: &[Level<'_>],
    point_ids: &[u32],
    curve_ids: &[u32],
    params: &CuttingParams,
    rng: &mut ChaCha8Rng,
    stats: &mut CutStats,
    on_pair: &mut dyn FnMut(u32, u32) -> bool,
) -> Result<bool, CutError> {
    let mut found = false;
    let mut cb = |p: u32, s: u32| -> bool {
        found = true;
        on_pair(p, s)
    };
    search(
        levels,
        levels.len(),
        point_ids,
        curve_ids,
        params,
        rng,
        stats,
        &mut cb,
    )?;
    Ok(found)
}

#[allow(clippy::too_many_arguments)]
fn search(
    levels: &[Level<'_>],
    depth: usize,
    point_ids: &[u32],
    curve_ids: &[u32],
    params: &CuttingParams,
    rng: &mut ChaCha8Rng,
    stats: &mut CutStats,
    on_pair: &mut dyn FnMut(u32, u32) -> bool,
) -> Result<bool, CutError> {
    if point_ids.is_empty() || curve_ids.is_empty() {
        return Ok(true);
    }
    if depth == 0 {
        // Every remaining condition has been resolved.
        for &p in point_ids {
            for &s in curve_ids {
                if !on_pair(p, s) {
                    return Ok(false);
                }
            }
        }
        return Ok(true);
    }
    let level = &levels[depth - 1];

    // Bottom curves resolve this level for free.
    let (real, bottom): (Vec<u32>, Vec<u32>) = curve_ids
        .iter()
        .partition(|&&s| level.curve_of[s as usize].is_some());
    if !bottom.is_empty()
        && !search(levels, depth - 1, point_ids, &bottom, params, rng, stats, on_pair)?
    {
        return Ok(false);
    }
    if real.is_empty() {
        return Ok(true);
    }

    let sample_size = params.sample_size();
    if point_ids.len() <= params.m0 || real.len() <= sample_size.max(2 * params.rho) {
        return naive(levels, depth, point_ids, &real, stats, on_pair);
    }

    // Clarkson-Shor sampling with direct quality verification.
    let mut attempt = 0;
    loop {
        if attempt > params.max_resample {
            return Err(CutError::ResampleCapExceeded(params.max_resample));
        }
        attempt += 1;
        let mut pool: Vec<u32> = real.clone();
        pool.shuffle(rng);
        pool.truncate(sample_size);
        pool.sort_unstable();
        let sample = pool;

        // Assign points to pseudo-trapezoids: same below-set, same curve
        // immediately below, same curve immediately above.
        let mut cells: BTreeMap<(Vec<u64>, i64, i64), Vec<u32>> = BTreeMap::new();
        for &p in point_ids {
            let p = p as usize;
            let mut below_mask = vec![0u64; sample.len().div_ceil(64)];
            let mut imm_below: i64 = -1;
            let mut imm_above: i64 = -1;
            for (si, &s) in sample.iter().enumerate() {
                if level.below(p, s as usize) {
                    // s is above the point.
                    if imm_above < 0
                        || level.order(p, s as usize, sample[imm_above as usize] as usize)
                            == std::cmp::Ordering::Less
                    {
                        imm_above = si as i64;
                    }
                } else {
                    below_mask[si / 64] |= 1 << (si % 64);
                    if imm_below < 0
                        || level.order(p, s as usize, sample[imm_below as usize] as usize)
                            == std::cmp::Ordering::Greater
                    {
                        imm_below = si as i64;
                    }
                }
            }
            cells
                .entry((below_mask, imm_below, imm_above))
                .or_default()
                .push(p as u32);
        }

        // Classify every curve against every cell and verify quality.
        let bound = real.len() / params.rho;
        let mut ok = true;
        let mut cell_data: Vec<(Vec<u32>, Vec<u32>, Vec<u32>)> = Vec::new();
        for ((_, imm_below, imm_above), members) in &cells {
            // Horizontal extent: the extreme member points.
            let (e1, e2) = {
                let mut lo = members[0];
                let mut hi = members[0];
                for &p in members {
                    if level.point_of[p as usize] < level.point_of[lo as usize] {
                        lo = p;
                    }
                    if level.point_of[p as usize] > level.point_of[hi as usize] {
                        hi = p;
                    }
                }
                (lo as usize, hi as usize)
            };
            let floor = (*imm_below >= 0).then(|| sample[*imm_below as usize] as usize);
            let ceil = (*imm_above >= 0).then(|| sample[*imm_above as usize] as usize);
            let mut below_cell = Vec::new();
            let mut above_cell = Vec::new();
            let mut crossing = Vec::new();
            for &s in &real {
                let su = s as usize;
                if Some(su) == floor {
                    below_cell.push(s);
                    continue;
                }
                if Some(su) == ceil {
                    above_cell.push(s);
                    continue;
                }
                let is_below = floor.is_some_and(|f| {
                    level.order(e1, su, f) == std::cmp::Ordering::Less
                        && level.order(e2, su, f) == std::cmp::Ordering::Less
                });
                let is_above = ceil.is_some_and(|c| {
                    level.order(e1, su, c) == std::cmp::Ordering::Greater
                        && level.order(e2, su, c) == std::cmp::Ordering::Greater
                });
                if is_below {
                    below_cell.push(s);
                } else if is_above {
                    above_cell.push(s);
                } else {
                    crossing.push(s);
                }
            }
            if crossing.len() > bound {
                ok = false;
                break;
            }
            cell_data.push((members.clone(), below_cell, crossing));
        }
        if !ok {
            stats.resamples += 1;
            continue;
        }
        stats.accepted_samples += 1;
        let worst = cell_data.iter().map(|(_, _, c)| c.len()).max().unwrap_or(0);
        stats.quality.push((worst, bound));

        // Balance: cap cell populations with extra vertical cuts.
        let chunk = (point_ids.len() / (params.rho * params.rho)).max(1);
        for (mut members, below_cell, crossing) in cell_data {
            members.sort_by_key(|&p| (level.point_of[p as usize], p));
            for part in members.chunks(chunk) {
                if !below_cell.is_empty()
                    && !search(levels, depth - 1, part, &below_cell, params, rng, stats, on_pair)?
                {
                    return Ok(false);
                }
                if !crossing.is_empty()
                    && !search(levels, depth, part, &crossing, params, rng, stats, on_pair)?
                {
                    return Ok(false);
                }
            }
        }
        return Ok(true);
    }
}

fn naive(
    levels: &[Level<'_>],
    depth: usize,
    point_ids: &[u32],
    curve_ids: &[u32],
    stats: &mut CutStats,
    on_pair: &mut dyn FnMut(u32, u32) -> bool,
) -> Result<bool, CutError> {
    for &p in point_ids {
        's_loop: for &s in curve_ids {
            stats.naive_pairs += 1;
            for lv in &levels[..depth] {
                if lv.below(p as usize, s as usize) {
                    continue 's_loop;
                }
            }
            if !on_pair(p, s) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
