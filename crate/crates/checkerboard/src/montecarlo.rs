//! Monte Carlo estimation of the dual events and of boundary correlations.
//!
//! Every Bernoulli choice is a pure function of (seed, sample index, vertex),
//! the same derivation `forests::sample_choices` uses, so the tight walkers
//! here reproduce that reference bit for bit on shared streams while skipping
//! its per-sample maps. Sample indicators are summed as integers, which makes
//! every estimate independent of thread count and iteration order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forests::{vertex_on_diagonal, EventKind, IntervalSpec};
use crate::lattice::{Coord, WeightField};
use crate::pointprocess::SiteSet;
use crate::rng;

/// A Bernoulli mean with its standard error, out of `samples` indicators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorResult {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl EstimatorResult {
    fn from_hits(hits: u64, samples: u64) -> Self {
        let mean = hits as f64 / samples as f64;
        let stderr = (mean * (1.0 - mean) / samples as f64).sqrt();
        EstimatorResult {
            mean,
            stderr,
            samples,
        }
    }

    /// Distance to a reference value in standard errors; infinite when the
    /// spread is zero but the means still differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.mean - reference;
        if diff == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY
        } else {
            (diff / self.stderr).abs()
        }
    }
}

/// Stream seed for sample `index` of a run started from `seed`, exposed so
/// callers can replay or cross-check single samples.
pub fn sample_stream(seed: u64, index: u64) -> u64 {
    rng::sample_seed(seed, index)
}

/// Bernoulli thresholds for every vertex a walk may consult, resolved before
/// the sample loop so the loop itself is pure integer work.
struct ThresholdGrid {
    lo: i64,
    horizon: i64,
    constant: Option<u128>,
    /// rows[m - 1][p - lo] is the threshold at (p + 1/2) on diagonal m.
    rows: Vec<Vec<u128>>,
}

impl ThresholdGrid {
    /// `widen` extends row m to lo..=hi + m - 1, the positions a forward
    /// boundary can reach; backward walks stay within lo..=hi.
    fn build(field: &WeightField, lo: i64, hi: i64, horizon: i64, widen: bool) -> Result<Self> {
        if let Some(p) = field.constant_value() {
            let r = p.as_ratio();
            return Ok(ThresholdGrid {
                lo,
                horizon,
                constant: Some(rng::bernoulli_threshold(
                    r.numer().magnitude(),
                    r.denom().magnitude(),
                )),
                rows: Vec::new(),
            });
        }
        let mut rows = Vec::with_capacity(horizon.max(0) as usize);
        for m in 1..=horizon {
            let hi_m = if widen { hi + m - 1 } else { hi };
            let mut row = Vec::with_capacity((hi_m - lo + 1).max(0) as usize);
            for pos in lo..=hi_m {
                let vertex = vertex_on_diagonal(Coord::half_odd(pos), m);
                let p = field.weight_at(&vertex.weight_anchor()?)?;
                let r = p.as_ratio();
                row.push(rng::bernoulli_threshold(
                    r.numer().magnitude(),
                    r.denom().magnitude(),
                ));
            }
            rows.push(row);
        }
        Ok(ThresholdGrid {
            lo,
            horizon,
            constant: None,
            rows,
        })
    }

    /// West choice of the vertex at (pos + 1/2) on diagonal m, matching
    /// `forests::sample_choices` word for word.
    #[inline]
    fn west(&self, stream: u64, pos: i64, m: i64) -> bool {
        let threshold = match self.constant {
            Some(t) => t,
            None => self.rows[(m - 1) as usize][(pos - self.lo) as usize],
        };
        let vertex = vertex_on_diagonal(Coord::half_odd(pos), m);
        (rng::vertex_word_at(stream, &vertex) as u128) < threshold
    }
}

/// Forward boundary dynamics from every window site occupied: boundaries step
/// east on west choices and coalesce on contact. True when no survivor sits
/// strictly inside any of the `inside` integer ranges.
fn forward_pass(
    grid: &ThresholdGrid,
    lo: i64,
    hi: i64,
    inside: &[(i64, i64)],
    buffers: &mut (Vec<i64>, Vec<i64>),
    stream: u64,
) -> bool {
    let (positions, next) = buffers;
    positions.clear();
    positions.extend(lo..=hi);
    for m in 1..=grid.horizon {
        next.clear();
        for &p in positions.iter() {
            let moved = if grid.west(stream, p, m) { p + 1 } else { p };
            if next.last() != Some(&moved) {
                next.push(moved);
            }
        }
        std::mem::swap(positions, next);
    }
    !positions
        .iter()
        .any(|&p| inside.iter().any(|&(a, b)| a <= p && p <= b))
}

/// Backward lineage walk from the given floor positions down to diagonal 0.
/// Walkers sharing a vertex read the same word, so merged lineages stay
/// merged and the order never flips.
fn backward_pass(grid: &ThresholdGrid, starts: &[i64], positions: &mut Vec<i64>, stream: u64) {
    positions.clear();
    positions.extend_from_slice(starts);
    for m in (1..=grid.horizon).rev() {
        for p in positions.iter_mut() {
            if grid.west(stream, *p, m) {
                *p -= 1;
            }
        }
    }
}

fn pairwise_hit(ends: &[i64]) -> bool {
    ends.chunks(2).all(|pair| pair[0] == pair[1])
}

fn annihilation_hit(ends: &[i64]) -> bool {
    // ends arrive sorted because the walk preserves order
    let mut run = 0usize;
    for i in 0..ends.len() {
        run += 1;
        if i + 1 == ends.len() || ends[i + 1] != ends[i] {
            if run % 2 != 0 {
                return false;
            }
            run = 0;
        }
    }
    true
}

/// Runs `f` on a pool sized by CHECKERBOARD_THREADS when that variable holds
/// a positive number, otherwise on the global pool. Results never depend on
/// the thread count, only the wall clock does.
fn run_parallel<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("CHECKERBOARD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

fn strictly_inside_ranges(spec: &IntervalSpec) -> Vec<(i64, i64)> {
    spec.pairs().map(|(a, b)| (a.ceil(), b.floor())).collect()
}

fn endpoint_floors(spec: &IntervalSpec) -> Vec<i64> {
    spec.endpoints().iter().map(|e| e.floor()).collect()
}

/// Indicator of one event on one sample stream. The batched estimator below
/// reproduces exactly this value for stream `sample_stream(seed, k)`.
pub fn sample_event(
    field: &WeightField,
    spec: &IntervalSpec,
    event: EventKind,
    stream: u64,
) -> Result<bool> {
    let window = spec.required_window();
    let (lo, hi) = (*window.start(), *window.end());
    let forward = matches!(event, EventKind::EmptyInterval);
    let grid = ThresholdGrid::build(field, lo, hi, spec.diagonal(), forward)?;
    Ok(match event {
        EventKind::EmptyInterval => {
            let inside = strictly_inside_ranges(spec);
            forward_pass(&grid, lo, hi, &inside, &mut Default::default(), stream)
        }
        EventKind::PairwiseCoalescence | EventKind::TotalAnnihilation => {
            let starts = endpoint_floors(spec);
            let mut ends = Vec::new();
            backward_pass(&grid, &starts, &mut ends, stream);
            if event == EventKind::PairwiseCoalescence {
                pairwise_hit(&ends)
            } else {
                annihilation_hit(&ends)
            }
        }
    })
}

/// Monte Carlo estimate of one event probability over `samples` independent
/// configurations.
pub fn estimate_event(
    field: &WeightField,
    spec: &IntervalSpec,
    event: EventKind,
    samples: u64,
    seed: u64,
) -> Result<EstimatorResult> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let window = spec.required_window();
    let (lo, hi) = (*window.start(), *window.end());
    let forward = matches!(event, EventKind::EmptyInterval);
    let grid = ThresholdGrid::build(field, lo, hi, spec.diagonal(), forward)?;
    let hits: u64 = match event {
        EventKind::EmptyInterval => {
            let inside = strictly_inside_ranges(spec);
            run_parallel(|| {
                (0..samples)
                    .into_par_iter()
                    .map_init(Default::default, |buffers, k| {
                        let stream = rng::sample_seed(seed, k);
                        forward_pass(&grid, lo, hi, &inside, buffers, stream) as u64
                    })
                    .sum()
            })
        }
        EventKind::PairwiseCoalescence | EventKind::TotalAnnihilation => {
            let starts = endpoint_floors(spec);
            let pairwise = event == EventKind::PairwiseCoalescence;
            run_parallel(|| {
                (0..samples)
                    .into_par_iter()
                    .map_init(Vec::new, |ends, k| {
                        let stream = rng::sample_seed(seed, k);
                        backward_pass(&grid, &starts, ends, stream);
                        let hit = if pairwise {
                            pairwise_hit(ends)
                        } else {
                            annihilation_hit(ends)
                        };
                        hit as u64
                    })
                    .sum()
            })
        }
    };
    Ok(EstimatorResult::from_hits(hits, samples))
}

/// Indicator of "a boundary sits at every site" on one sample stream.
pub fn sample_correlation(field: &WeightField, sites: &SiteSet, stream: u64) -> Result<bool> {
    let (grid, starts, checks) = correlation_setup(field, sites)?;
    let mut ends = Vec::new();
    backward_pass(&grid, &starts, &mut ends, stream);
    Ok(checks.iter().all(|&(i, j)| ends[i] != ends[j]))
}

/// Monte Carlo estimate of the n-point correlation rho(y_1, ..., y_n).
pub fn estimate_correlation(
    field: &WeightField,
    sites: &SiteSet,
    samples: u64,
    seed: u64,
) -> Result<EstimatorResult> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let (grid, starts, checks) = correlation_setup(field, sites)?;
    let hits: u64 = run_parallel(|| {
        (0..samples)
            .into_par_iter()
            .map_init(Vec::new, |ends, k| {
                let stream = rng::sample_seed(seed, k);
                backward_pass(&grid, &starts, ends, stream);
                checks.iter().all(|&(i, j)| ends[i] != ends[j]) as u64
            })
            .sum()
    });
    Ok(EstimatorResult::from_hits(hits, samples))
}

/// Site y holds a boundary exactly when the lineages of y - 1/2 and y + 1/2
/// end apart, so each site contributes the walker pair (y - 1, y) in floor
/// coordinates; shared walkers between adjacent sites are deduplicated.
fn correlation_setup(
    field: &WeightField,
    sites: &SiteSet,
) -> Result<(ThresholdGrid, Vec<i64>, Vec<(usize, usize)>)> {
    let spec = sites.unit_intervals();
    let window = spec.required_window();
    let (lo, hi) = (*window.start(), *window.end());
    let grid = ThresholdGrid::build(field, lo, hi, sites.diagonal(), false)?;
    let mut starts: Vec<i64> = sites
        .sites()
        .iter()
        .flat_map(|&y| [y - 1, y])
        .collect();
    starts.sort_unstable();
    starts.dedup();
    let checks: Vec<(usize, usize)> = sites
        .sites()
        .iter()
        .map(|&y| {
            (
                starts.binary_search(&(y - 1)).expect("walker present"),
                starts.binary_search(&y).expect("walker present"),
            )
        })
        .collect();
    Ok((grid, starts, checks))
}
