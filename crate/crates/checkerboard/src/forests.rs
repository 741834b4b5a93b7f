//! The sampled two-forest construction and the three events tied together by
//! duality.
//!
//! Each half-integer vertex picks West or South; the pick simultaneously
//! defines the backward opinion edge at that vertex and the forward boundary
//! edge (East for West, North for South) at the integer vertex one diagonal
//! below it. Because both forests read the same choices, the equalities
//! "interval empty of boundaries" == "endpoint lineages pairwise coalesced" ==
//! "endpoint particles totally annihilated" hold sample by sample, not just
//! in expectation.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::lattice::{Coord, LatticeVertex, Sublattice, WeightField};
use crate::rng;

/// One resolved West-or-South pick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Choice {
    West,
    South,
}

/// The three events the duality identifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    EmptyInterval,
    PairwiseCoalescence,
    TotalAnnihilation,
}

impl EventKind {
    /// All three events, in the order array-valued results use.
    pub const ALL: [EventKind; 3] = [
        EventKind::EmptyInterval,
        EventKind::PairwiseCoalescence,
        EventKind::TotalAnnihilation,
    ];
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::EmptyInterval => write!(f, "empty-interval"),
            EventKind::PairwiseCoalescence => write!(f, "pairwise-coalescence"),
            EventKind::TotalAnnihilation => write!(f, "total-annihilation"),
        }
    }
}

/// Disjoint observation intervals on one diagonal. Endpoints are half-integer
/// positions a_1 < b_1 <= a_2 < b_2 <= ...; consecutive intervals may touch
/// (b_i = a_{i+1}) but never overlap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalSpec {
    diagonal: i64,
    endpoints: Vec<Coord>,
}

impl IntervalSpec {
    pub fn new(diagonal: i64, pairs: &[(Coord, Coord)]) -> Result<Self> {
        if diagonal < 0 {
            return Err(Error::BadHorizon {
                horizon: diagonal,
                diagonal: 0,
            });
        }
        if pairs.is_empty() {
            return Err(Error::EmptyEndpoints);
        }
        let mut endpoints = Vec::with_capacity(2 * pairs.len());
        for &(a, b) in pairs {
            if a.is_integer() || b.is_integer() {
                return Err(Error::InvalidIntervals(format!(
                    "endpoints must be half-integers, got ({a}, {b})"
                )));
            }
            if a >= b {
                return Err(Error::InvalidIntervals(format!(
                    "interval ({a}, {b}) is empty or reversed"
                )));
            }
            if let Some(&prev) = endpoints.last() {
                if a < prev {
                    return Err(Error::InvalidIntervals(format!(
                        "interval starting at {a} overlaps the one ending at {prev}"
                    )));
                }
            }
            endpoints.push(a);
            endpoints.push(b);
        }
        Ok(IntervalSpec { diagonal, endpoints })
    }

    /// Unit intervals (y - 1/2, y + 1/2) around each listed integer site.
    pub fn units(diagonal: i64, sites: &[i64]) -> Result<Self> {
        let pairs: Vec<_> = sites
            .iter()
            .map(|&y| (Coord::half_odd(y - 1), Coord::half_odd(y)))
            .collect();
        IntervalSpec::new(diagonal, &pairs)
    }

    pub fn diagonal(&self) -> i64 {
        self.diagonal
    }

    /// All 2n endpoints in order a_1, b_1, a_2, b_2, ...
    pub fn endpoints(&self) -> &[Coord] {
        &self.endpoints
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Coord, Coord)> + '_ {
        self.endpoints.chunks(2).map(|c| (c[0], c[1]))
    }

    /// The half-integer vertices on the observation diagonal.
    pub fn endpoint_vertices(&self) -> Vec<LatticeVertex> {
        self.endpoints
            .iter()
            .map(|&u| vertex_on_diagonal(u, self.diagonal))
            .collect()
    }

    /// Integer positions whose diagonal-0 ancestors must be simulated so every
    /// site between the outer endpoints is window-determined.
    pub fn required_window(&self) -> RangeInclusive<i64> {
        let lo = self.endpoints.first().unwrap().ceil() - self.diagonal;
        let hi = self.endpoints.last().unwrap().floor();
        lo..=hi
    }
}

/// Half-integer vertex with the given linear (u) position on a diagonal.
pub fn vertex_on_diagonal(u: Coord, diagonal: i64) -> LatticeVertex {
    let v = Coord::from_doubled(2 * diagonal - u.doubled());
    LatticeVertex::new(u, v).expect("u and v = diagonal - u always share parity")
}

/// A resolved assignment of choices on a finite region.
#[derive(Clone, Debug)]
pub struct ChoiceConfiguration {
    choices: HashMap<LatticeVertex, Choice>,
    /// Seed the configuration was sampled from, when it was sampled.
    pub seed: Option<u64>,
}

impl ChoiceConfiguration {
    pub fn from_choices(choices: HashMap<LatticeVertex, Choice>) -> Self {
        ChoiceConfiguration {
            choices,
            seed: None,
        }
    }

    pub fn get(&self, vertex: &LatticeVertex) -> Result<Choice> {
        self.choices.get(vertex).copied().ok_or_else(|| {
            Error::ConeNotCovered(vertex.u().to_string(), vertex.v().to_string())
        })
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn region(&self) -> impl Iterator<Item = &LatticeVertex> {
        self.choices.keys()
    }
}

/// Samples one choice per half-integer vertex of `region`. Each choice is a
/// pure function of (seed, vertex), so two calls with overlapping regions
/// agree on the overlap.
pub fn sample_choices(
    field: &WeightField,
    region: &BTreeSet<LatticeVertex>,
    seed: u64,
) -> Result<ChoiceConfiguration> {
    let constant_threshold = match field.constant_value() {
        Some(p) => {
            let r = p.as_ratio();
            Some(rng::bernoulli_threshold(
                r.numer().magnitude(),
                r.denom().magnitude(),
            ))
        }
        None => None,
    };
    let mut choices = HashMap::with_capacity(region.len());
    for vertex in region {
        let threshold = match constant_threshold {
            Some(t) => t,
            None => {
                let p = field.weight_at(&vertex.weight_anchor()?)?;
                let r = p.as_ratio();
                rng::bernoulli_threshold(r.numer().magnitude(), r.denom().magnitude())
            }
        };
        let word = rng::vertex_word_at(seed, vertex) as u128;
        let choice = if word < threshold {
            Choice::West
        } else {
            Choice::South
        };
        choices.insert(*vertex, choice);
    }
    Ok(ChoiceConfiguration {
        choices,
        seed: Some(seed),
    })
}

/// Every half-integer vertex whose choice the forward evolution from `window`
/// can consume up to `diagonal`: boundaries starting in [lo, hi] on diagonal 0
/// spread east by at most one per step, and the edge of the boundary at
/// integer position p on diagonal n is decided at (p + 1/2, n - p + 1/2).
pub fn forward_choice_region(
    window: RangeInclusive<i64>,
    diagonal: i64,
) -> BTreeSet<LatticeVertex> {
    let (lo, hi) = (*window.start(), *window.end());
    let mut region = BTreeSet::new();
    for m in 1..=diagonal {
        for p in lo..=(hi + m - 1) {
            let u = Coord::half_odd(p);
            region.insert(vertex_on_diagonal(u, m));
        }
    }
    region
}

/// Runs the boundary dynamics from every integer site of `window` occupied on
/// diagonal 0 and reports the sorted occupied positions on `diagonal`.
/// Colliding boundaries coalesce (the list is deduplicated).
pub fn forward_boundaries(
    choices: &ChoiceConfiguration,
    window: RangeInclusive<i64>,
    diagonal: i64,
) -> Result<Vec<i64>> {
    if diagonal < 0 {
        return Err(Error::BadHorizon {
            horizon: diagonal,
            diagonal: 0,
        });
    }
    let mut positions: Vec<i64> = window.collect();
    for n in 0..diagonal {
        let mut next = Vec::with_capacity(positions.len());
        for &p in &positions {
            let controller = vertex_on_diagonal(Coord::half_odd(p), n + 1);
            let moved = match choices.get(&controller)? {
                Choice::West => p + 1, // the complementary forward edge points East
                Choice::South => p,    // and this one points North
            };
            if next.last() != Some(&moved) {
                next.push(moved);
            }
        }
        positions = next;
    }
    Ok(positions)
}

/// Backward opinion path from a half-integer vertex, one vertex per diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackwardLineage {
    pub start: LatticeVertex,
    /// path[0] is the start; path[k] sits k diagonals below it.
    pub path: Vec<LatticeVertex>,
}

impl BackwardLineage {
    pub fn end(&self) -> &LatticeVertex {
        self.path.last().unwrap()
    }
}

pub fn backward_lineage(
    choices: &ChoiceConfiguration,
    start: &LatticeVertex,
    steps: i64,
) -> Result<BackwardLineage> {
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
    let mut path = Vec::with_capacity(steps as usize + 1);
    let mut current = *start;
    path.push(current);
    for _ in 0..steps {
        current = match choices.get(&current)? {
            Choice::West => current.west(),
            Choice::South => current.south(),
        };
        path.push(current);
    }
    Ok(BackwardLineage {
        start: *start,
        path,
    })
}

/// True when, for every pair, the lineages of a_i and b_i share a vertex by
/// diagonal 0. Lineages through shared choices merge permanently, so it is
/// enough to compare where they land.
pub fn pairwise_coalescence(
    choices: &ChoiceConfiguration,
    spec: &IntervalSpec,
) -> Result<bool> {
    let steps = spec.diagonal();
    for (a, b) in spec.pairs() {
        let la = backward_lineage(choices, &vertex_on_diagonal(a, steps), steps)?;
        let lb = backward_lineage(choices, &vertex_on_diagonal(b, steps), steps)?;
        if la.end() != lb.end() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True when the 2n endpoint lineages end in clusters of even sizes, i.e. the
/// mod-2 cancellative labelling wipes every particle out.
pub fn total_annihilation(choices: &ChoiceConfiguration, spec: &IntervalSpec) -> Result<bool> {
    let steps = spec.diagonal();
    let mut ends: Vec<Coord> = Vec::with_capacity(spec.endpoints().len());
    for &e in spec.endpoints() {
        let lineage = backward_lineage(choices, &vertex_on_diagonal(e, steps), steps)?;
        ends.push(lineage.end().u());
    }
    ends.sort();
    let mut run = 0usize;
    for i in 0..ends.len() {
        run += 1;
        if i + 1 == ends.len() || ends[i + 1] != ends[i] {
            if run % 2 != 0 {
                return Ok(false);
            }
            run = 0;
        }
    }
    Ok(true)
}

/// True when no boundary sits strictly inside any of the intervals on the
/// observation diagonal, starting from every window site occupied. The window
/// must cover the backward funnel of the outer endpoints so occupancy between
/// them is exact, not truncated.
pub fn empty_interval_indicator(
    choices: &ChoiceConfiguration,
    spec: &IntervalSpec,
    window: RangeInclusive<i64>,
) -> Result<bool> {
    let need = spec.required_window();
    if window.start() > need.start() || window.end() < need.end() {
        return Err(Error::WindowTooNarrow {
            lo: *window.start(),
            hi: *window.end(),
            need_lo: *need.start(),
            need_hi: *need.end(),
        });
    }
    let occupied = forward_boundaries(choices, window, spec.diagonal())?;
    for (a, b) in spec.pairs() {
        let inside = occupied
            .iter()
            .any(|&p| a < Coord::from_int(p) && Coord::from_int(p) < b);
        if inside {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Evaluates one of the three dual events on a shared configuration.
pub fn event_indicator(
    choices: &ChoiceConfiguration,
    spec: &IntervalSpec,
    event: EventKind,
) -> Result<bool> {
    match event {
        EventKind::EmptyInterval => {
            empty_interval_indicator(choices, spec, spec.required_window())
        }
        EventKind::PairwiseCoalescence => pairwise_coalescence(choices, spec),
        EventKind::TotalAnnihilation => total_annihilation(choices, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::RationalProbability;

    fn prob(n: i64, d: i64) -> RationalProbability {
        RationalProbability::from_ints(n, d).unwrap()
    }

    fn config(entries: &[(LatticeVertex, Choice)]) -> ChoiceConfiguration {
        ChoiceConfiguration::from_choices(entries.iter().copied().collect())
    }

    /// Fill a whole funnel with one fixed choice, then override some vertices.
    fn filled(
        window: RangeInclusive<i64>,
        diagonal: i64,
        default: Choice,
        overrides: &[(LatticeVertex, Choice)],
    ) -> ChoiceConfiguration {
        let mut map: HashMap<LatticeVertex, Choice> = forward_choice_region(window, diagonal)
            .into_iter()
            .map(|v| (v, default))
            .collect();
        for &(v, c) in overrides {
            map.insert(v, c);
        }
        ChoiceConfiguration::from_choices(map)
    }

    #[test]
    fn interval_spec_validation() {
        let h = Coord::half_odd;
        assert!(IntervalSpec::new(3, &[(h(0), h(1))]).is_ok());
        // touching pairs allowed
        assert!(IntervalSpec::new(3, &[(h(0), h(1)), (h(1), h(3))]).is_ok());
        // overlap rejected
        assert!(IntervalSpec::new(3, &[(h(0), h(2)), (h(1), h(3))]).is_err());
        // reversed rejected
        assert!(IntervalSpec::new(3, &[(h(1), h(0))]).is_err());
        // integer endpoint rejected
        assert!(IntervalSpec::new(3, &[(Coord::from_int(0), h(1))]).is_err());
        assert!(IntervalSpec::new(3, &[]).is_err());
    }

    #[test]
    fn forced_merge_of_two_boundaries() {
        // window {0, 1} on diagonal 0; boundary at 0 pushed East, boundary at 1
        // pushed North: both land on site 1.
        let cfg = config(&[
            (LatticeVertex::half(0, 0), Choice::West),
            (LatticeVertex::half(1, -1), Choice::South),
        ]);
        let survivors = forward_boundaries(&cfg, 0..=1, 1).unwrap();
        assert_eq!(survivors, vec![1]);
    }

    #[test]
    fn lineage_follows_choices() {
        // start (1/2, 5/2) on diagonal 3, go West then South then West
        let s = LatticeVertex::half(0, 2);
        let cfg = config(&[
            (s, Choice::West),
            (s.west(), Choice::South),
            (s.west().south(), Choice::West),
        ]);
        let lineage = backward_lineage(&cfg, &s, 3).unwrap();
        assert_eq!(
            lineage.path,
            vec![s, s.west(), s.west().south(), s.west().south().west()]
        );
        // missing choice surfaces as an uncovered-cone error
        assert!(matches!(
            backward_lineage(&cfg, &s, 4),
            Err(Error::ConeNotCovered(_, _))
        ));
    }

    #[test]
    fn annihilation_patterns_for_two_pairs() {
        let h = Coord::half_odd;
        let spec = IntervalSpec::new(2, &[(h(0), h(1)), (h(2), h(3))]).unwrap();
        let at = |u: i64, d: i64| vertex_on_diagonal(h(u), d);

        // each pair meets separately: West/South picks funnel a1,b1 to 1/2 and
        // a2,b2 to 5/2 after one step
        let merged = filled(
            *spec.required_window().start()..=*spec.required_window().end(),
            2,
            Choice::South,
            &[
                (at(1, 2), Choice::West),
                (at(3, 2), Choice::West),
            ],
        );
        assert!(total_annihilation(&merged, &spec).unwrap());
        assert!(pairwise_coalescence(&merged, &spec).unwrap());

        // b1 meets a2 instead: cluster sizes 1,2,1
        let crossed = filled(
            *spec.required_window().start()..=*spec.required_window().end(),
            2,
            Choice::South,
            &[(at(2, 2), Choice::West)],
        );
        assert!(!total_annihilation(&crossed, &spec).unwrap());
        assert!(!pairwise_coalescence(&crossed, &spec).unwrap());
    }

    #[test]
    fn horizon_zero_interval_never_empty() {
        let h = Coord::half_odd;
        let spec = IntervalSpec::new(0, &[(h(0), h(2))]).unwrap();
        let cfg = config(&[]);
        assert!(!empty_interval_indicator(&cfg, &spec, spec.required_window()).unwrap());
    }

    #[test]
    fn window_narrower_than_funnel_rejected() {
        let h = Coord::half_odd;
        let spec = IntervalSpec::new(2, &[(h(0), h(1))]).unwrap();
        let cfg = config(&[]);
        assert!(matches!(
            empty_interval_indicator(&cfg, &spec, 0..=1),
            Err(Error::WindowTooNarrow { .. })
        ));
    }

    #[test]
    fn degenerate_field_all_west() {
        let field = WeightField::constant(prob(1, 1));
        let region = forward_choice_region(0..=0, 4);
        let cfg = sample_choices(&field, &region, 99).unwrap();
        assert!(region.iter().all(|v| cfg.get(v).unwrap() == Choice::West));
        // a single boundary drifts East forever
        assert_eq!(forward_boundaries(&cfg, 0..=0, 4).unwrap(), vec![4]);
    }

    #[test]
    fn choices_are_reproducible_and_overlap_consistent() {
        let field = WeightField::constant(prob(2, 5));
        let region = forward_choice_region(-3..=3, 5);
        let a = sample_choices(&field, &region, 7).unwrap();
        let b = sample_choices(&field, &region, 7).unwrap();
        for v in &region {
            assert_eq!(a.get(v).unwrap(), b.get(v).unwrap());
        }
        let sub = forward_choice_region(-1..=1, 3);
        let c = sample_choices(&field, &sub, 7).unwrap();
        for v in &sub {
            assert_eq!(a.get(v).unwrap(), c.get(v).unwrap());
        }
        assert!(sub.iter().all(|v| region.contains(v)));
    }

    #[test]
    fn per_sample_duality_over_random_seeds() {
        let h = Coord::half_odd;
        for (field, diag, pairs) in [
            (WeightField::constant(prob(1, 2)), 3, vec![(h(0), h(1))]),
            (WeightField::constant(prob(1, 3)), 4, vec![(h(-1), h(0)), (h(1), h(3))]),
            (WeightField::constant(prob(9, 10)), 2, vec![(h(0), h(1)), (h(1), h(2))]),
        ] {
            let spec = IntervalSpec::new(diag, &pairs).unwrap();
            let region = forward_choice_region(spec.required_window(), diag);
            for seed in 0..200u64 {
                let cfg = sample_choices(&field, &region, seed).unwrap();
                let empty =
                    empty_interval_indicator(&cfg, &spec, spec.required_window()).unwrap();
                let coal = pairwise_coalescence(&cfg, &spec).unwrap();
                let annih = total_annihilation(&cfg, &spec).unwrap();
                assert_eq!(empty, coal, "seed {seed}");
                assert_eq!(empty, annih, "seed {seed}");
            }
        }
    }

    #[test]
    fn lineages_preserve_order_and_stay_merged() {
        let field = WeightField::constant(prob(1, 2));
        let diag = 6;
        let starts: Vec<LatticeVertex> = (0..4)
            .map(|k| vertex_on_diagonal(Coord::half_odd(k), diag))
            .collect();
        let region = crate::lattice::cone_of_dependence(&starts, diag).unwrap();
        for seed in 0..300u64 {
            let cfg = sample_choices(&field, &region, seed).unwrap();
            let paths: Vec<_> = starts
                .iter()
                .map(|s| backward_lineage(&cfg, s, diag).unwrap().path)
                .collect();
            for step in 0..=(diag as usize) {
                for w in paths.windows(2) {
                    assert!(w[0][step].u() <= w[1][step].u(), "order broke at {step}");
                }
            }
            for w in paths.windows(2) {
                if let Some(first_meet) =
                    (0..=(diag as usize)).find(|&s| w[0][s] == w[1][s])
                {
                    for s in first_meet..=(diag as usize) {
                        assert_eq!(w[0][s], w[1][s], "merged lineages separated");
                    }
                }
            }
        }
    }
}
