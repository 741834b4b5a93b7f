//! Geometry of the two interleaved sublattices.
//!
//! The system lives on the union of the integer grid Z^2 and its half-shifted
//! copy (Z + 1/2)^2, plotted in the (u, v) plane. Diagonals u + v = n carry
//! the dynamics: boundaries sit on integer vertices, opinions on half-integer
//! vertices, and both move one diagonal per step. Coordinates are stored as
//! doubled integers so half-integers stay exact.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::exact::RationalProbability;

/// An integer or half-odd-integer coordinate, stored as twice its value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord(i64);

impl Coord {
    pub const fn from_int(n: i64) -> Self {
        Coord(2 * n)
    }

    /// The value k + 1/2.
    pub const fn half_odd(k: i64) -> Self {
        Coord(2 * k + 1)
    }

    /// Builds from a doubled value: `from_doubled(5)` is 5/2.
    pub const fn from_doubled(d: i64) -> Self {
        Coord(d)
    }

    pub const fn doubled(self) -> i64 {
        self.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn is_half_odd(self) -> bool {
        self.0 % 2 != 0
    }

    pub fn as_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.0 / 2)
    }

    /// Greatest integer <= self.
    pub const fn floor(self) -> i64 {
        self.0.div_euclid(2)
    }

    /// Least integer >= self.
    pub const fn ceil(self) -> i64 {
        -((-self.0).div_euclid(2))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Difference in whole units, defined only when both sit on the same
    /// half-integer grid offset.
    pub fn int_diff(self, other: Coord) -> Option<i64> {
        let d = self.0 - other.0;
        (d % 2 == 0).then_some(d / 2)
    }
}

impl std::ops::Add<i64> for Coord {
    type Output = Coord;
    fn add(self, n: i64) -> Coord {
        Coord(self.0 + 2 * n)
    }
}

impl std::ops::Sub<i64> for Coord {
    type Output = Coord;
    fn sub(self, n: i64) -> Coord {
        Coord(self.0 - 2 * n)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Coord {
    type Err = Error;

    /// Accepts "3", "-1/2", "5/2", "2.5", "-0.5".
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidIntervals(format!("cannot parse coordinate {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let n: i64 = num.trim().parse().map_err(|_| bad())?;
            let d: i64 = den.trim().parse().map_err(|_| bad())?;
            return match d {
                1 => Ok(Coord::from_int(n)),
                2 => Ok(Coord::from_doubled(n)),
                _ => Err(bad()),
            };
        }
        if let Some(whole) = s.strip_suffix(".5").or_else(|| s.strip_suffix(".50")) {
            let k: i64 = if whole.is_empty() || whole == "-" {
                0
            } else {
                whole.parse().map_err(|_| bad())?
            };
            let d = 2 * k + if s.starts_with('-') { -1 } else { 1 };
            return Ok(Coord::from_doubled(d));
        }
        if let Some(whole) = s.strip_suffix(".0") {
            let n: i64 = whole.parse().map_err(|_| bad())?;
            return Ok(Coord::from_int(n));
        }
        let n: i64 = s.trim().parse().map_err(|_| bad())?;
        Ok(Coord::from_int(n))
    }
}

/// Which of the two interleaved grids a vertex belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sublattice {
    /// Z^2, carries boundaries.
    Integer,
    /// (Z + 1/2)^2, carries opinions.
    Half,
}

/// A vertex of either sublattice. Both coordinates must be integers or both
/// half-odd; mixed parity does not name a lattice point.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeVertex {
    u: Coord,
    v: Coord,
}

impl LatticeVertex {
    pub fn new(u: Coord, v: Coord) -> Result<Self> {
        if u.is_integer() != v.is_integer() {
            return Err(Error::MixedParity(u.to_string(), v.to_string()));
        }
        Ok(LatticeVertex { u, v })
    }

    /// The integer vertex (u, v).
    pub const fn integer(u: i64, v: i64) -> Self {
        LatticeVertex {
            u: Coord::from_int(u),
            v: Coord::from_int(v),
        }
    }

    /// The half-integer vertex (u + 1/2, v + 1/2).
    pub const fn half(u: i64, v: i64) -> Self {
        LatticeVertex {
            u: Coord::half_odd(u),
            v: Coord::half_odd(v),
        }
    }

    pub const fn u(&self) -> Coord {
        self.u
    }

    pub const fn v(&self) -> Coord {
        self.v
    }

    /// u + v, an integer on both sublattices.
    pub const fn diagonal(&self) -> i64 {
        (self.u.doubled() + self.v.doubled()) / 2
    }

    pub const fn sublattice(&self) -> Sublattice {
        if self.u.is_integer() {
            Sublattice::Integer
        } else {
            Sublattice::Half
        }
    }

    pub fn west(&self) -> Self {
        LatticeVertex {
            u: self.u - 1,
            v: self.v,
        }
    }

    pub fn south(&self) -> Self {
        LatticeVertex {
            u: self.u,
            v: self.v - 1,
        }
    }

    pub fn east(&self) -> Self {
        LatticeVertex {
            u: self.u + 1,
            v: self.v,
        }
    }

    pub fn north(&self) -> Self {
        LatticeVertex {
            u: self.u,
            v: self.v + 1,
        }
    }

    /// For a half-integer vertex (u + 1/2, v + 1/2), the integer vertex (u, v)
    /// whose weight drives its West-or-South choice.
    pub fn weight_anchor(&self) -> Result<Self> {
        if self.sublattice() != Sublattice::Half {
            return Err(Error::WrongSublattice {
                expected: "half-integer",
                u: self.u.to_string(),
                v: self.v.to_string(),
            });
        }
        Ok(LatticeVertex {
            u: Coord::from_doubled(self.u.doubled() - 1),
            v: Coord::from_doubled(self.v.doubled() - 1),
        })
    }
}

impl fmt::Debug for LatticeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

impl fmt::Display for LatticeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

/// Finite rectangle of integer vertices, bounds inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub u_min: i64,
    pub u_max: i64,
    pub v_min: i64,
    pub v_max: i64,
}

impl Rect {
    pub fn contains(&self, u: i64, v: i64) -> bool {
        self.u_min <= u && u <= self.u_max && self.v_min <= v && v <= self.v_max
    }
}

#[derive(Clone, Debug, PartialEq)]
enum FieldKind {
    Constant(RationalProbability),
    Alternating {
        lambda_plus: BigRational,
        lambda_minus: BigRational,
        epsilon: BigRational,
    },
    Polya { u_shift: i64, v_shift: i64 },
    Table(BTreeMap<(i64, i64), RationalProbability>),
}

/// Assignment of a West-probability to each integer vertex. The choice made at
/// a half-integer vertex (u + 1/2, v + 1/2) is West with the weight at (u, v).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField {
    kind: FieldKind,
    domain: Option<Rect>,
}

impl WeightField {
    /// The same weight everywhere.
    pub fn constant(p: RationalProbability) -> Self {
        WeightField {
            kind: FieldKind::Constant(p),
            domain: None,
        }
    }

    /// lambda_plus * epsilon on even diagonals, 1 - lambda_minus * epsilon on
    /// odd ones. Both values must land in [0, 1].
    pub fn alternating(
        lambda_plus: BigRational,
        lambda_minus: BigRational,
        epsilon: BigRational,
    ) -> Result<Self> {
        let even = &lambda_plus * &epsilon;
        let odd = BigRational::one() - &lambda_minus * &epsilon;
        for w in [&even, &odd] {
            if w.is_negative() || w > &BigRational::one() {
                return Err(Error::WeightOutOfRange(
                    w.to_string(),
                    "even/odd".into(),
                    "diagonal".into(),
                ));
            }
        }
        Ok(WeightField {
            kind: FieldKind::Alternating {
                lambda_plus,
                lambda_minus,
                epsilon,
            },
            domain: None,
        })
    }

    /// The ratio weight u/(u+v), defined on the strictly positive quadrant.
    pub fn polya() -> Self {
        WeightField::polya_shifted(0, 0)
    }

    /// The ratio weight in a translated frame: (u + a) / ((u + a) + (v + b)),
    /// defined wherever both shifted coordinates are strictly positive. Large
    /// shifts push the singular quadrant edges out of a funnel's reach.
    pub fn polya_shifted(u_shift: i64, v_shift: i64) -> Self {
        WeightField {
            kind: FieldKind::Polya { u_shift, v_shift },
            domain: None,
        }
    }

    /// Explicit per-vertex weights; the key set is the domain.
    pub fn table(weights: BTreeMap<(i64, i64), RationalProbability>) -> Self {
        WeightField {
            kind: FieldKind::Table(weights),
            domain: None,
        }
    }

    /// Restricts evaluation to a rectangle; lookups outside it fail.
    pub fn with_domain(mut self, rect: Rect) -> Self {
        self.domain = Some(rect);
        self
    }

    /// Some(p) when the field takes the same value everywhere.
    pub fn constant_value(&self) -> Option<&RationalProbability> {
        match &self.kind {
            FieldKind::Constant(p) => Some(p),
            _ => None,
        }
    }

    /// West-probability at an integer vertex.
    pub fn weight_at(&self, vertex: &LatticeVertex) -> Result<RationalProbability> {
        if vertex.sublattice() != Sublattice::Integer {
            return Err(Error::WrongSublattice {
                expected: "integer",
                u: vertex.u().to_string(),
                v: vertex.v().to_string(),
            });
        }
        let (u, v) = (
            vertex.u().as_integer().unwrap(),
            vertex.v().as_integer().unwrap(),
        );
        if let Some(rect) = &self.domain {
            if !rect.contains(u, v) {
                return Err(Error::OutOfDomain(u.to_string(), v.to_string()));
            }
        }
        match &self.kind {
            FieldKind::Constant(p) => Ok(p.clone()),
            FieldKind::Alternating {
                lambda_plus,
                lambda_minus,
                epsilon,
            } => {
                let w = if (u + v).rem_euclid(2) == 0 {
                    lambda_plus * epsilon
                } else {
                    BigRational::one() - lambda_minus * epsilon
                };
                RationalProbability::new(w)
            }
            FieldKind::Polya { u_shift, v_shift } => {
                let (a, b) = (u + u_shift, v + v_shift);
                if a <= 0 || b <= 0 {
                    return Err(Error::PolyaAtBoundary(a.to_string(), b.to_string()));
                }
                RationalProbability::new(BigRational::new(BigInt::from(a), BigInt::from(a + b)))
            }
            FieldKind::Table(map) => map
                .get(&(u, v))
                .cloned()
                .ok_or_else(|| Error::OutOfDomain(u.to_string(), v.to_string())),
        }
    }

    /// weight_at as f64, for the sampling paths.
    pub fn weight_f64(&self, vertex: &LatticeVertex) -> Result<f64> {
        Ok(self.weight_at(vertex)?.as_ratio().to_f64().unwrap_or(0.0))
    }
}

/// Space-time charts for the diagonal dynamics. Time is always the diagonal
/// index t = u + v; they differ in the spatial coordinate:
/// arratia uses x = u - v (steps are +-1), asymmetric uses x = u (steps are
/// -1 or 0 backward), bidirectional recenters asymmetric by floor(t/2).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordinateSystem {
    Arratia,
    Asymmetric,
    Bidirectional,
}

impl CoordinateSystem {
    pub fn to_spacetime(&self, vertex: &LatticeVertex) -> (i64, Coord) {
        let t = vertex.diagonal();
        let du = vertex.u().doubled();
        let dv = vertex.v().doubled();
        let x = match self {
            CoordinateSystem::Arratia => Coord::from_doubled(du - dv),
            CoordinateSystem::Asymmetric => vertex.u(),
            CoordinateSystem::Bidirectional => Coord::from_doubled(du - 2 * t.div_euclid(2)),
        };
        (t, x)
    }

    pub fn from_spacetime(&self, t: i64, x: Coord) -> Result<LatticeVertex> {
        // Doubled u and v: from 2u = t + x (arratia), 2u = 2x (asymmetric),
        // 2u = 2x + 2*floor(t/2) (bidirectional), and 2v = 2t - 2u.
        let (du, dv) = match self {
            CoordinateSystem::Arratia => {
                let xi = x
                    .as_integer()
                    .ok_or_else(|| Error::MixedParity(t.to_string(), x.to_string()))?;
                (t + xi, t - xi)
            }
            CoordinateSystem::Asymmetric => (x.doubled(), 2 * t - x.doubled()),
            CoordinateSystem::Bidirectional => {
                let du = x.doubled() + 2 * t.div_euclid(2);
                (du, 2 * t - du)
            }
        };
        LatticeVertex::new(Coord::from_doubled(du), Coord::from_doubled(dv))
    }
}

/// Every half-integer vertex a backward path from one of the endpoints can
/// visit within `horizon` steps: on diagonal T - k the interval [a - k, a]
/// for each endpoint at position a, unioned over endpoints.
pub fn cone_of_dependence(
    endpoints: &[LatticeVertex],
    horizon: i64,
) -> Result<BTreeSet<LatticeVertex>> {
    if endpoints.is_empty() {
        return Err(Error::EmptyEndpoints);
    }
    let diagonal = endpoints[0].diagonal();
    for e in endpoints {
        if e.sublattice() != Sublattice::Half {
            return Err(Error::WrongSublattice {
                expected: "half-integer",
                u: e.u().to_string(),
                v: e.v().to_string(),
            });
        }
        if e.diagonal() != diagonal {
            return Err(Error::DifferentDiagonals(diagonal, e.diagonal()));
        }
    }
    if horizon < 0 {
        return Err(Error::BadHorizon { horizon, diagonal });
    }
    let mut cone = BTreeSet::new();
    for e in endpoints {
        for k in 0..=horizon {
            for j in 0..=k {
                let u = e.u() - j;
                let v = Coord::from_doubled(2 * (diagonal - k) - u.doubled());
                cone.insert(LatticeVertex::new(u, v)?);
            }
        }
    }
    Ok(cone)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::RationalProbability;

    fn prob(n: i64, d: i64) -> RationalProbability {
        RationalProbability::from_ints(n, d).unwrap()
    }

    #[test]
    fn coord_parse_display() {
        for s in ["3", "-4", "1/2", "-1/2", "5/2"] {
            let c: Coord = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert_eq!("2.5".parse::<Coord>().unwrap(), Coord::half_odd(2));
        assert_eq!("-0.5".parse::<Coord>().unwrap(), Coord::half_odd(-1));
        assert_eq!("7".parse::<Coord>().unwrap().as_integer(), Some(7));
        assert!("1/3".parse::<Coord>().is_err());
    }

    #[test]
    fn mixed_parity_rejected() {
        let r = LatticeVertex::new(Coord::from_int(1), Coord::half_odd(0));
        assert!(matches!(r, Err(Error::MixedParity(_, _))));
    }

    #[test]
    fn diagonal_and_sublattice() {
        let z = LatticeVertex::integer(3, -1);
        assert_eq!(z.diagonal(), 2);
        assert_eq!(z.sublattice(), Sublattice::Integer);
        let h = LatticeVertex::half(3, -1); // (7/2, -1/2)
        assert_eq!(h.diagonal(), 3);
        assert_eq!(h.sublattice(), Sublattice::Half);
        assert_eq!(h.weight_anchor().unwrap(), LatticeVertex::integer(3, -1));
        assert!(z.weight_anchor().is_err());
    }

    #[test]
    fn constant_weight_everywhere() {
        let f = WeightField::constant(prob(1, 2));
        assert_eq!(
            f.weight_at(&LatticeVertex::integer(3, 7)).unwrap(),
            prob(1, 2)
        );
    }

    #[test]
    fn polya_weights() {
        let f = WeightField::polya();
        assert_eq!(f.weight_at(&LatticeVertex::integer(1, 1)).unwrap(), prob(1, 2));
        assert_eq!(f.weight_at(&LatticeVertex::integer(2, 1)).unwrap(), prob(2, 3));
        assert!(matches!(
            f.weight_at(&LatticeVertex::integer(0, 5)),
            Err(Error::PolyaAtBoundary(_, _))
        ));
    }

    #[test]
    fn shifted_polya_translates_the_frame() {
        let f = WeightField::polya_shifted(2, 5);
        // (2+2) / ((2+2) + (-4+5)) = 4/5
        assert_eq!(f.weight_at(&LatticeVertex::integer(2, -4)).unwrap(), prob(4, 5));
        assert!(f.weight_at(&LatticeVertex::integer(-2, 0)).is_err());
    }

    #[test]
    fn alternating_weights_by_diagonal_parity() {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let f = WeightField::alternating(r(1, 1), r(2, 1), r(1, 10)).unwrap();
        // (1,1) sits on diagonal 2 (even), (2,1) on 3 (odd)
        assert_eq!(f.weight_at(&LatticeVertex::integer(1, 1)).unwrap(), prob(1, 10));
        assert_eq!(f.weight_at(&LatticeVertex::integer(2, 1)).unwrap(), prob(4, 5));
        // epsilon too large pushes the even weight past 1
        assert!(WeightField::alternating(r(3, 1), r(1, 1), r(1, 2)).is_err());
    }

    #[test]
    fn table_and_domain() {
        let mut m = BTreeMap::new();
        m.insert((0, 0), prob(1, 3));
        let f = WeightField::table(m);
        assert_eq!(f.weight_at(&LatticeVertex::integer(0, 0)).unwrap(), prob(1, 3));
        assert!(matches!(
            f.weight_at(&LatticeVertex::integer(1, 0)),
            Err(Error::OutOfDomain(_, _))
        ));
        let g = WeightField::constant(prob(1, 2)).with_domain(Rect {
            u_min: 0,
            u_max: 4,
            v_min: 0,
            v_max: 4,
        });
        assert!(g.weight_at(&LatticeVertex::integer(5, 0)).is_err());
    }

    #[test]
    fn weight_requires_integer_vertex() {
        let f = WeightField::constant(prob(1, 2));
        assert!(matches!(
            f.weight_at(&LatticeVertex::half(0, 0)),
            Err(Error::WrongSublattice { .. })
        ));
    }

    #[test]
    fn arratia_chart() {
        let v = LatticeVertex::integer(5, 3);
        let (t, x) = CoordinateSystem::Arratia.to_spacetime(&v);
        assert_eq!((t, x.as_integer().unwrap()), (8, 2));
        assert_eq!(
            CoordinateSystem::Arratia.from_spacetime(t, x).unwrap(),
            v
        );
    }

    #[test]
    fn charts_round_trip_on_block() {
        for cs in [
            CoordinateSystem::Arratia,
            CoordinateSystem::Asymmetric,
            CoordinateSystem::Bidirectional,
        ] {
            for du in -10..10 {
                for dv in -10..10 {
                    for half in [0, 1] {
                        let v = LatticeVertex::new(
                            Coord::from_doubled(2 * du + half),
                            Coord::from_doubled(2 * dv + half),
                        )
                        .unwrap();
                        let (t, x) = cs.to_spacetime(&v);
                        assert_eq!(cs.from_spacetime(t, x).unwrap(), v, "{cs:?} {v:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn arratia_parity_per_sublattice() {
        // On diagonal t, integer vertices have x = t mod 2, half vertices the other one.
        let z = LatticeVertex::integer(2, 1);
        let (t, x) = CoordinateSystem::Arratia.to_spacetime(&z);
        assert_eq!((t + x.as_integer().unwrap()).rem_euclid(2), 0);
        let h = LatticeVertex::half(2, 0); // (5/2, 1/2), diagonal 3
        let (t, x) = CoordinateSystem::Arratia.to_spacetime(&h);
        assert_eq!((t + x.as_integer().unwrap()).rem_euclid(2), 1);
    }

    #[test]
    fn cone_single_endpoint() {
        // one endpoint, horizon 2: 1 + 2 + 3 vertices
        let e = LatticeVertex::half(0, 4);
        let cone = cone_of_dependence(&[e], 2).unwrap();
        assert_eq!(cone.len(), 6);
        assert!(cone.contains(&e));
    }

    #[test]
    fn cone_two_endpoints_overlap_threshold() {
        // positions 1/2 and 5/2 (two apart): disjoint at horizon 1, so 2 + 4
        let t = 5;
        let a = LatticeVertex::half(0, t - 1);
        let b = LatticeVertex::half(2, t - 3);
        assert_eq!(cone_of_dependence(&[a, b], 1).unwrap().len(), 6);
        // positions one apart share a vertex already at horizon 1: 2 + 3
        let c = LatticeVertex::half(1, t - 2);
        assert_eq!(cone_of_dependence(&[a, c], 1).unwrap().len(), 5);
    }

    #[test]
    fn cone_validation() {
        assert!(matches!(cone_of_dependence(&[], 1), Err(Error::EmptyEndpoints)));
        let a = LatticeVertex::half(0, 0);
        let b = LatticeVertex::half(0, 1);
        assert!(matches!(
            cone_of_dependence(&[a, b], 1),
            Err(Error::DifferentDiagonals(_, _))
        ));
        assert!(cone_of_dependence(&[a], -1).is_err());
        assert!(cone_of_dependence(&[LatticeVertex::integer(0, 0)], 1).is_err());
    }
}
