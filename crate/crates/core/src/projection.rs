//! Euclidean projection onto the capped simplex `{ y in [0,1]^N : sum(y) <= C }`.
//!
//! At the optimum every coordinate falls in one of three sets: `M1` (pinned at
//! 1), `M2` (`y = z - rho/2`) or `M3` (pinned at 0). Sorting `z` once makes each
//! set a contiguous run of the sorted order, so the search is over two cut
//! points. [`project_capped_simplex`] finds them with the water-level loop,
//! [`project_oracle`] by brute force over every pair of cut points.

use crate::error::{Error, Result};
use crate::model::{check_capacity, CacheVector, FEAS_TOL};

/// Largest input accepted by [`project_oracle`].
pub const ORACLE_MAX_LEN: usize = 16;

/// The KKT partition found by the projection.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionState {
    /// Coordinates pinned at 1.
    pub m1: Vec<usize>,
    /// Interior coordinates, `y = z - rho/2`.
    pub m2: Vec<usize>,
    /// Coordinates pinned at 0.
    pub m3: Vec<usize>,
    /// Multiplier of the capacity constraint; zero when the constraint is slack.
    pub rho: f64,
    /// Passes through the remove-negatives loop, summed over every `M1` guess.
    pub loop_passes: usize,
}

/// Projects `z` onto the capped simplex of capacity `capacity`.
///
/// Fast path for inputs where at most one coordinate exceeds 1 (every OGA and
/// BSA iterate); other inputs are still projected exactly.
pub fn project_capped_simplex(z: &[f64], capacity: f64) -> Result<CacheVector> {
    project_with_partition(z, capacity).map(|(y, _)| y)
}

/// Same as [`project_capped_simplex`], also returning the KKT partition.
pub fn project_with_partition(z: &[f64], capacity: f64) -> Result<(CacheVector, PartitionState)> {
    validate(z, capacity)?;
    let n = z.len();

    let clipped: Vec<f64> = z.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    if clipped.iter().sum::<f64>() <= capacity {
        let state = PartitionState {
            m1: (0..n).filter(|&i| z[i] >= 1.0).collect(),
            m2: (0..n).filter(|&i| z[i] > 0.0 && z[i] < 1.0).collect(),
            m3: (0..n).filter(|&i| z[i] <= 0.0).collect(),
            rho: 0.0,
            loop_passes: 0,
        };
        return Ok((CacheVector::from_raw(clipped, capacity), state));
    }

    let order = sort_descending(z);
    let sorted: Vec<f64> = order.iter().map(|&i| z[i]).collect();

    let mut passes = 0;
    let mut accepted = None;
    // Algorithm order: M1 = {} first, then M1 = {top}; further prefixes are
    // only reached when more than one coordinate exceeds 1.
    for pinned in 0..=n {
        if pinned > 0 && sorted[pinned - 1] < 1.0 {
            break;
        }
        let level = water_level(&sorted, pinned, capacity);
        passes += level.passes;
        if kkt_holds(&sorted, pinned, &level, capacity) {
            accepted = Some((pinned, level));
            break;
        }
    }
    let (pinned, level) = accepted.ok_or_else(|| {
        Error::Numeric(format!(
            "no KKT partition found for capped-simplex projection (N = {n}, C = {capacity})"
        ))
    })?;

    let mut y = vec![0.0; n];
    for (rank, &idx) in order.iter().enumerate() {
        y[idx] = if rank < pinned {
            1.0
        } else if rank < level.m2_end {
            (sorted[rank] - level.half_rho).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
    let state = PartitionState {
        m1: order[..pinned].to_vec(),
        m2: order[pinned..level.m2_end].to_vec(),
        m3: order[level.m2_end..].to_vec(),
        rho: 2.0 * level.half_rho,
        loop_passes: passes,
    };
    Ok((CacheVector::from_raw(y, capacity), state))
}

struct WaterLevel {
    half_rho: f64,
    /// `M2` is `sorted[pinned..m2_end]`, `M3` is `sorted[m2_end..]`.
    m2_end: usize,
    passes: usize,
}

/// The repeat-loop: with the first `pinned` coordinates at 1, compute `rho`
/// from a tight capacity constraint, move every negative coordinate to `M3`,
/// and repeat until none is negative.
fn water_level(sorted: &[f64], pinned: usize, capacity: f64) -> WaterLevel {
    let mut m2_end = sorted.len();
    let mut m2_sum: f64 = sorted[pinned..].iter().sum();
    let mut passes = 0;
    loop {
        passes += 1;
        if m2_end == pinned {
            return WaterLevel {
                half_rho: 0.0,
                m2_end,
                passes,
            };
        }
        let half_rho = (pinned as f64 - capacity + m2_sum) / (m2_end - pinned) as f64;
        // sorted descending, so the negative coordinates form a suffix of M2
        let mut end = m2_end;
        while end > pinned && sorted[end - 1] - half_rho < 0.0 {
            end -= 1;
            m2_sum -= sorted[end];
        }
        if end == m2_end {
            return WaterLevel {
                half_rho,
                m2_end,
                passes,
            };
        }
        m2_end = end;
    }
}

fn kkt_holds(sorted: &[f64], pinned: usize, level: &WaterLevel, capacity: f64) -> bool {
    if level.m2_end == pinned {
        return pinned as f64 <= capacity + FEAS_TOL;
    }
    if level.half_rho < -FEAS_TOL {
        return false;
    }
    let pinned_ok = pinned == 0 || sorted[pinned - 1] - level.half_rho >= 1.0 - FEAS_TOL;
    let interior_ok = sorted[pinned] - level.half_rho <= 1.0 + FEAS_TOL;
    pinned_ok && interior_ok
}

/// Indices of `z` ordered by value descending, ties by index ascending.
fn sort_descending(z: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]));
    order
}

fn validate(z: &[f64], capacity: f64) -> Result<()> {
    check_capacity(capacity)?;
    if z.is_empty() {
        return Err(Error::input("cannot project an empty vector"));
    }
    if let Some(i) = z.iter().position(|v| !v.is_finite()) {
        return Err(Error::input(format!(
            "non-finite coordinate z[{i}] = {}",
            z[i]
        )));
    }
    Ok(())
}

/// Reference projection by exhaustive search over ordered partitions of the
/// sorted coordinates. Test-scale only: refuses `z.len() > ORACLE_MAX_LEN`.
pub fn project_oracle(z: &[f64], capacity: f64) -> Result<CacheVector> {
    validate(z, capacity)?;
    let n = z.len();
    if n > ORACLE_MAX_LEN {
        return Err(Error::input(format!(
            "oracle projection limited to {ORACLE_MAX_LEN} coordinates, got {n}"
        )));
    }

    // rho = 0: the capacity constraint is inactive and y is the box clip.
    let clipped: Vec<f64> = z.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    if clipped.iter().sum::<f64>() <= capacity {
        return Ok(CacheVector::from_raw(clipped, capacity));
    }

    let order = sort_descending(z);
    let s: Vec<f64> = order.iter().map(|&i| z[i]).collect();
    let tol = 1e-12 * (1.0 + s.iter().fold(0.0f64, |m, v| m.max(v.abs())));

    for a in 0..=n {
        for b in 0..=(n - a) {
            let (m1, rest) = s.split_at(a);
            let (m2, m3) = rest.split_at(b);
            let half = if b == 0 {
                if (a as f64 - capacity).abs() > FEAS_TOL {
                    continue;
                }
                m3.iter().fold(0.0f64, |m, &v| m.max(v))
            } else {
                (a as f64 - capacity + m2.iter().sum::<f64>()) / b as f64
            };
            let valid = half >= -tol
                && m1.iter().all(|&v| v - half >= 1.0 - tol)
                && m2
                    .iter()
                    .all(|&v| v - half >= -tol && v - half <= 1.0 + tol)
                && m3.iter().all(|&v| v - half <= tol);
            if valid {
                let mut y = vec![0.0; n];
                for (rank, &idx) in order.iter().enumerate() {
                    y[idx] = if rank < a {
                        1.0
                    } else if rank < a + b {
                        (s[rank] - half).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                }
                return Ok(CacheVector::from_raw(y, capacity));
            }
        }
    }
    Err(Error::Numeric("oracle found no KKT partition".into()))
}
