//! Exact rational evaluation of the dual events.
//!
//! Two independent routes live here. `enumerate_event_probability` walks every
//! choice configuration of the forward funnel (Gray-coded so each step flips a
//! single bit) and adds up the weights of the satisfying ones.
//! `lineage_dp` never touches configurations: it pushes the joint law of the
//! endpoint lineages down one diagonal at a time, tracking only the cluster
//! structure. Agreement between the two is one of the core consistency checks.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::forests::{vertex_on_diagonal, EventKind, IntervalSpec};
use crate::lattice::{Coord, LatticeVertex, Sublattice, WeightField};

/// Largest number of undetermined choice vertices the enumerator accepts;
/// 2^24 configurations take on the order of a second per event at opt-level 2.
pub const ENUMERATION_BIT_CAP: u32 = 24;

/// Most endpoints the per-configuration lineage walk tracks.
const ENDPOINT_CAP: usize = 16;

/// A rational number checked to lie in [0, 1].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RationalProbability(BigRational);

impl RationalProbability {
    pub fn new(value: BigRational) -> Result<Self> {
        if value < BigRational::zero() || value > BigRational::one() {
            return Err(Error::ProbabilityRange(value.to_string()));
        }
        Ok(RationalProbability(value))
    }

    pub fn from_ints(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::ProbabilityRange(format!("{numer}/{denom}")));
        }
        RationalProbability::new(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn zero() -> Self {
        RationalProbability(BigRational::zero())
    }

    pub fn one() -> Self {
        RationalProbability(BigRational::one())
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn complement(&self) -> Self {
        RationalProbability(BigRational::one() - &self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn to_f64(&self) -> f64 {
        self.0
            .to_f64()
            .expect("a reduced rational in [0, 1] always converts")
    }
}

impl fmt::Display for RationalProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

fn complement(r: &BigRational) -> BigRational {
    BigRational::one() - r
}

/// One free (genuinely random) choice vertex in the funnel.
struct FreeBit {
    /// index into the per-diagonal mask vector (diagonal = index + 1)
    diag: usize,
    bit: u32,
    west: BigRational,
    /// west / (1 - west), applied when the Gray flip turns the bit on
    up: BigRational,
    /// (1 - west) / west, applied when it turns off
    down: BigRational,
}

/// Precomputed data for evaluating one event from the per-diagonal West masks.
struct EventTable {
    start_occ: u128,
    inside: u128,
    /// endpoint positions as bit offsets from the window's west edge
    offsets: Vec<i64>,
}

impl EventTable {
    fn new(spec: &IntervalSpec, lo: i64, occ_width: usize) -> Result<Self> {
        if spec.endpoints().len() > ENDPOINT_CAP {
            return Err(Error::SizeCap(spec.endpoints().len(), ENDPOINT_CAP));
        }
        let window_width = occ_width - spec.diagonal() as usize;
        let start_occ = low_bits(window_width);
        let mut inside = 0u128;
        for (a, b) in spec.pairs() {
            for p in a.ceil()..=b.floor() {
                inside |= 1u128 << (p - lo);
            }
        }
        let offsets = spec.endpoints().iter().map(|e| e.floor() - lo).collect();
        Ok(EventTable {
            start_occ,
            inside,
            offsets,
        })
    }

    fn evaluate(&self, masks: &[u128], event: EventKind) -> bool {
        match event {
            EventKind::EmptyInterval => self.stays_empty(masks),
            EventKind::PairwiseCoalescence => self.pairs_met(&self.walk_lineages(masks)),
            EventKind::TotalAnnihilation => self.runs_even(&self.walk_lineages(masks)),
        }
    }

    /// All three indicators at once, in [`EventKind::ALL`] order; the lineage
    /// walk is shared between the two backward events.
    fn evaluate_all(&self, masks: &[u128]) -> [bool; 3] {
        let ends = self.walk_lineages(masks);
        [
            self.stays_empty(masks),
            self.pairs_met(&ends),
            self.runs_even(&ends),
        ]
    }

    fn stays_empty(&self, masks: &[u128]) -> bool {
        let mut occ = self.start_occ;
        for w in masks {
            occ = ((occ & w) << 1) | (occ & !w);
        }
        occ & self.inside == 0
    }

    fn pairs_met(&self, ends: &[i64]) -> bool {
        (0..self.offsets.len() / 2).all(|i| ends[2 * i] == ends[2 * i + 1])
    }

    fn runs_even(&self, ends: &[i64]) -> bool {
        let k = self.offsets.len();
        let mut run = 0usize;
        for i in 0..k {
            run += 1;
            if i + 1 == k || ends[i + 1] != ends[i] {
                if run % 2 != 0 {
                    return false;
                }
                run = 0;
            }
        }
        true
    }

    fn walk_lineages(&self, masks: &[u128]) -> [i64; ENDPOINT_CAP] {
        let mut pos = [0i64; ENDPOINT_CAP];
        pos[..self.offsets.len()].copy_from_slice(&self.offsets);
        for w in masks.iter().rev() {
            for p in pos[..self.offsets.len()].iter_mut() {
                debug_assert!(*p >= 0);
                *p -= (w >> *p & 1) as i64;
            }
        }
        pos
    }
}

fn low_bits(n: usize) -> u128 {
    if n >= 128 {
        !0
    } else {
        (1u128 << n) - 1
    }
}

/// The enumerable part of a spec's forward funnel: per-diagonal West masks
/// with the forced (weight 0 or 1) vertices preset, the free vertices, and
/// the indicator table.
struct Funnel {
    masks: Vec<u128>,
    free: Vec<FreeBit>,
    table: EventTable,
}

fn build_funnel(field: &WeightField, spec: &IntervalSpec) -> Result<Funnel> {
    let t = spec.diagonal();
    let window = spec.required_window();
    let (lo, hi) = (*window.start(), *window.end());
    let occ_width = (hi - lo + 1 + t) as usize;
    if occ_width > 128 {
        return Err(Error::SizeCap(occ_width, 128));
    }

    let mut masks: Vec<u128> = vec![0; t as usize];
    let mut free: Vec<FreeBit> = Vec::new();
    for m in 1..=t {
        for p in lo..=(hi + m - 1) {
            let vertex = vertex_on_diagonal(Coord::half_odd(p), m);
            let west = field.weight_at(&vertex.weight_anchor()?)?;
            let bit = (p - lo) as u32;
            if west.is_one() {
                masks[(m - 1) as usize] |= 1u128 << bit;
            } else if !west.is_zero() {
                let w = west.into_ratio();
                let q = complement(&w);
                free.push(FreeBit {
                    diag: (m - 1) as usize,
                    bit,
                    up: &w / &q,
                    down: &q / &w,
                    west: w,
                });
            }
        }
    }
    if free.len() > ENUMERATION_BIT_CAP as usize {
        return Err(Error::ConeTooLarge(free.len(), ENUMERATION_BIT_CAP));
    }

    let table = EventTable::new(spec, lo, occ_width)?;
    Ok(Funnel { masks, free, table })
}

/// The common West weight when every free vertex carries the same one, or
/// None when the weights are mixed. With no free vertices the value is never
/// looked at, so any placeholder does.
fn uniform_weight(free: &[FreeBit]) -> Option<BigRational> {
    match free.first() {
        Some(f0) if free.iter().all(|f| f.west == f0.west) => Some(f0.west.clone()),
        Some(_) => None,
        None => Some(BigRational::zero()),
    }
}

/// Tables of p^j and (1-p)^j for j = 0..=k.
fn west_power_tables(p: &BigRational, k: usize) -> (Vec<BigRational>, Vec<BigRational>) {
    let q = complement(p);
    let mut p_pow = vec![BigRational::one()];
    let mut q_pow = vec![BigRational::one()];
    for j in 1..=k {
        p_pow.push(&p_pow[j - 1] * p);
        q_pow.push(&q_pow[j - 1] * &q);
    }
    (p_pow, q_pow)
}

/// Probability of `event` for `spec`, by exhaustive enumeration of the choice
/// configurations in the forward funnel. Vertices whose weight is 0 or 1 are
/// fixed up front; when every remaining vertex carries the same weight the
/// satisfying configurations are only counted by their number of West picks,
/// which keeps big-rational work out of the hot loop.
pub fn enumerate_event_probability(
    field: &WeightField,
    spec: &IntervalSpec,
    event: EventKind,
) -> Result<RationalProbability> {
    let Funnel {
        mut masks,
        free,
        table,
    } = build_funnel(field, spec)?;
    let k = free.len();
    let configs: u64 = 1 << k;

    let total = if let Some(p) = uniform_weight(&free) {
        let mut counts = vec![0u64; k + 1];
        if table.evaluate(&masks, event) {
            counts[0] += 1;
        }
        for i in 1..configs {
            let fb = &free[i.trailing_zeros() as usize];
            masks[fb.diag] ^= 1u128 << fb.bit;
            if table.evaluate(&masks, event) {
                counts[(i ^ (i >> 1)).count_ones() as usize] += 1;
            }
        }
        let (p_pow, q_pow) = west_power_tables(&p, k);
        let mut sum = BigRational::zero();
        for (j, &c) in counts.iter().enumerate() {
            if c > 0 {
                sum += BigRational::from_integer(BigInt::from(c)) * &p_pow[j] * &q_pow[k - j];
            }
        }
        sum
    } else {
        let mut weight = BigRational::one();
        for f in &free {
            weight *= complement(&f.west);
        }
        let mut sum = BigRational::zero();
        if table.evaluate(&masks, event) {
            sum += weight.clone();
        }
        for i in 1..configs {
            let fb = &free[i.trailing_zeros() as usize];
            masks[fb.diag] ^= 1u128 << fb.bit;
            let now_west = masks[fb.diag] >> fb.bit & 1 == 1;
            weight *= if now_west { &fb.up } else { &fb.down };
            if table.evaluate(&masks, event) {
                sum += weight.clone();
            }
        }
        sum
    };

    RationalProbability::new(total)
}

/// Probabilities of all three dual events from a single sweep over the choice
/// configurations, returned in [`EventKind::ALL`] order. The lineage walk is
/// shared between the backward events, and on the mixed-weight path the
/// running weight is kept as an integer numerator over the fixed product of
/// the free vertices' denominators, so each Gray flip is one exact small
/// division and one multiplication instead of a rational renormalization.
/// Sweeping once here costs roughly the same as a single call to
/// `enumerate_event_probability`.
pub fn enumerate_all_events(
    field: &WeightField,
    spec: &IntervalSpec,
) -> Result<[RationalProbability; 3]> {
    let Funnel {
        mut masks,
        free,
        table,
    } = build_funnel(field, spec)?;
    let k = free.len();
    let configs: u64 = 1 << k;

    if let Some(p) = uniform_weight(&free) {
        let mut counts = vec![[0u64; 3]; k + 1];
        let hits = table.evaluate_all(&masks);
        for e in 0..3 {
            counts[0][e] += hits[e] as u64;
        }
        for i in 1..configs {
            let fb = &free[i.trailing_zeros() as usize];
            masks[fb.diag] ^= 1u128 << fb.bit;
            let j = (i ^ (i >> 1)).count_ones() as usize;
            let hits = table.evaluate_all(&masks);
            for e in 0..3 {
                counts[j][e] += hits[e] as u64;
            }
        }
        let (p_pow, q_pow) = west_power_tables(&p, k);
        let mut sums = [
            BigRational::zero(),
            BigRational::zero(),
            BigRational::zero(),
        ];
        for (j, slot) in counts.iter().enumerate() {
            for (sum, &c) in sums.iter_mut().zip(slot) {
                if c > 0 {
                    *sum += BigRational::from_integer(BigInt::from(c)) * &p_pow[j] * &q_pow[k - j];
                }
            }
        }
        let [a, b, c] = sums;
        Ok([
            RationalProbability::new(a)?,
            RationalProbability::new(b)?,
            RationalProbability::new(c)?,
        ])
    } else {
        // numerator factors per free bit: West picks contribute the weight's
        // numerator, South picks the complement's, over a common denominator
        let mut denom = BigUint::one();
        let mut factors: Vec<(BigUint, BigUint)> = Vec::with_capacity(k);
        for f in &free {
            let d = f
                .west
                .denom()
                .to_biguint()
                .expect("reduced probabilities keep positive denominators");
            let n = f
                .west
                .numer()
                .to_biguint()
                .expect("free weights lie strictly between 0 and 1");
            let off = &d - &n;
            denom *= &d;
            factors.push((n, off));
        }
        let mut weight = BigUint::one();
        for (_, off) in &factors {
            weight *= off;
        }
        let mut sums = [BigUint::zero(), BigUint::zero(), BigUint::zero()];
        let hits = table.evaluate_all(&masks);
        for e in 0..3 {
            if hits[e] {
                sums[e] += &weight;
            }
        }
        for i in 1..configs {
            let b = i.trailing_zeros() as usize;
            let fb = &free[b];
            masks[fb.diag] ^= 1u128 << fb.bit;
            let now_west = masks[fb.diag] >> fb.bit & 1 == 1;
            let (on, off) = &factors[b];
            if now_west {
                weight /= off;
                weight *= on;
            } else {
                weight /= on;
                weight *= off;
            }
            let hits = table.evaluate_all(&masks);
            for e in 0..3 {
                if hits[e] {
                    sums[e] += &weight;
                }
            }
        }
        let denom = BigInt::from(denom);
        let [a, b, c] = sums;
        Ok([
            RationalProbability::new(BigRational::new(BigInt::from(a), denom.clone()))?,
            RationalProbability::new(BigRational::new(BigInt::from(b), denom.clone()))?,
            RationalProbability::new(BigRational::new(BigInt::from(c), denom))?,
        ])
    }
}

/// Shared probability of the three dual events, computed by evolving the
/// endpoint lineages jointly down to diagonal 0. The state only keeps the
/// ordered distinct positions with their cluster sizes; the events coincide
/// pathwise, and all three reduce to "every final cluster has even size"
/// (cluster contents are contiguous runs of the ordered endpoints, so no odd
/// cluster is exactly the same statement as no pair split across clusters).
pub fn lineage_dp(field: &WeightField, spec: &IntervalSpec) -> Result<RationalProbability> {
    type State = Vec<(Coord, u32)>;
    let t = spec.diagonal();

    let mut initial: State = Vec::new();
    for &e in spec.endpoints() {
        match initial.last_mut() {
            Some(last) if last.0 == e => last.1 += 1,
            _ => initial.push((e, 1)),
        }
    }

    let mut dist: BTreeMap<State, BigRational> = BTreeMap::new();
    dist.insert(initial, BigRational::one());

    for m in (1..=t).rev() {
        let mut next: BTreeMap<State, BigRational> = BTreeMap::new();
        for (state, prob) in &dist {
            let d = state.len();
            let mut west_w = Vec::with_capacity(d);
            for (u, _) in state {
                let vertex = vertex_on_diagonal(*u, m);
                west_w.push(field.weight_at(&vertex.weight_anchor()?)?.into_ratio());
            }
            for combo in 0u32..(1 << d) {
                let mut factor = prob.clone();
                let mut moved: State = Vec::with_capacity(d);
                for (i, &(u, size)) in state.iter().enumerate() {
                    let west = combo >> i & 1 == 1;
                    factor *= if west {
                        west_w[i].clone()
                    } else {
                        complement(&west_w[i])
                    };
                    if factor.is_zero() {
                        break;
                    }
                    let nu = if west { u - 1 } else { u };
                    match moved.last_mut() {
                        Some(last) if last.0 == nu => last.1 += size,
                        _ => moved.push((nu, size)),
                    }
                }
                if factor.is_zero() {
                    continue;
                }
                *next.entry(moved).or_insert_with(BigRational::zero) += factor;
            }
        }
        dist = next;
    }

    let mut total = BigRational::zero();
    for (state, prob) in dist {
        if state.iter().all(|&(_, size)| size % 2 == 0) {
            total += prob;
        }
    }
    RationalProbability::new(total)
}

/// Law of a single backward lineage's position after `steps` diagonals,
/// keyed by the (half-integer) linear coordinate it ends on.
pub fn backward_transition_weights(
    field: &WeightField,
    start: &LatticeVertex,
    steps: i64,
) -> Result<BTreeMap<Coord, RationalProbability>> {
    if start.sublattice() != Sublattice::Half {
        return Err(Error::WrongSublattice {
            expected: "half-integer",
            u: start.u().to_string(),
            v: start.v().to_string(),
        });
    }
    if steps < 0 {
        return Err(Error::BadHorizon {
            horizon: steps,
            diagonal: start.diagonal(),
        });
    }
    let mut dist: BTreeMap<Coord, BigRational> = BTreeMap::new();
    dist.insert(start.u(), BigRational::one());
    let mut diag = start.diagonal();
    for _ in 0..steps {
        let mut next: BTreeMap<Coord, BigRational> = BTreeMap::new();
        for (u, prob) in &dist {
            let vertex = vertex_on_diagonal(*u, diag);
            let w = field.weight_at(&vertex.weight_anchor()?)?.into_ratio();
            let west = prob * &w;
            if !west.is_zero() {
                *next.entry(*u - 1).or_insert_with(BigRational::zero) += west;
            }
            let south = prob * complement(&w);
            if !south.is_zero() {
                *next.entry(*u).or_insert_with(BigRational::zero) += south;
            }
        }
        dist = next;
        diag -= 1;
    }
    dist.into_iter()
        .map(|(u, p)| Ok((u, RationalProbability::new(p)?)))
        .collect()
}
