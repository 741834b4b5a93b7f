//! Closed-form crossing probabilities for pairs of backward lineages.
//!
//! A single lineage is a random walk, and the empty-interval probability of
//! one interval is the probability that two such walkers, started at the
//! endpoints, cross or meet before diagonal 0. Because the difference of the
//! two walkers is a symmetric skip-free walk, reflection turns that hitting
//! probability into a functional of the two terminal laws alone:
//!
//! A = 2 P(I_T > J_T) + P(I_T = J_T)         (terminal form)
//!   = 1 - sum_{y1 < y2} det [w_I(y1) w_I(y2); w_J(y1) w_J(y2)]
//!                                            (determinant complement)
//!
//! The two forms are equal for every pair of terminal laws (the determinant
//! sum telescopes to P(I < J) - P(I > J)); computing both through different
//! code paths is one of the crate's consistency checks. Discrete kernels are
//! exact rationals; continuum kernels go through the scaled Bessel functions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::RationalProbability;
use crate::forests::vertex_on_diagonal;
use crate::lattice::{Coord, LatticeVertex, Sublattice, WeightField};
use crate::special::{bessel_ie_scan, erfc};
use crate::ProbabilityValue;

/// A family of pair-crossing kernels, the unit the CLI and the Pfaffian
/// assembly both consume. Discrete variants evaluate exactly; continuum ones
/// in floating point.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    /// Lattice walk in the centered chart: steps are -1 with probability p
    /// and +1 otherwise. Separations are measured in that chart, so two
    /// lattice endpoints k sites apart are at separation 2k.
    Biased { horizon: i64, p: RationalProbability },
    /// Lattice walk in the resting chart: steps are -1 with probability p and
    /// 0 otherwise. Separations count lattice sites directly.
    Asymmetric { horizon: i64, p: RationalProbability },
    /// Continuum symmetric walker jumping at total rate `rate`, split evenly
    /// between +1 and -1.
    Poisson { rate: f64, time: f64 },
    /// Continuum walker with independent up and down rates. The crossing
    /// probability only feels the sum of the rates; the split cancels in the
    /// difference walk, which the tests exploit.
    Bidirectional { rate_up: f64, rate_down: f64, time: f64 },
    /// Diffusive limit of the biased kernel at p = 1/2: A = erfc(d / 2 sqrt(T)).
    ScalingLimit { horizon: f64 },
}

impl KernelSpec {
    /// Crossing probability at the given separation, in the variant's own
    /// units (see the variant docs).
    pub fn a_crossing(&self, separation: i64) -> Result<ProbabilityValue> {
        match self {
            KernelSpec::Biased { horizon, p } => Ok(ProbabilityValue::Exact(
                a_crossing_terminal(*horizon, p, separation)?,
            )),
            KernelSpec::Asymmetric { horizon, p } => Ok(ProbabilityValue::Exact(
                a_crossing_asymmetric(*horizon, p, separation)?,
            )),
            KernelSpec::Poisson { rate, time } => Ok(ProbabilityValue::Float(
                a_crossing_poisson(*rate, *time, separation)?,
            )),
            KernelSpec::Bidirectional {
                rate_up,
                rate_down,
                time,
            } => Ok(ProbabilityValue::Float(a_crossing_bidirectional(
                *rate_up, *rate_down, *time, separation,
            )?)),
            KernelSpec::ScalingLimit { horizon } => {
                if !(*horizon > 0.0) {
                    return Err(Error::NonPositiveParameter {
                        name: "horizon".into(),
                        value: *horizon,
                    });
                }
                Ok(ProbabilityValue::Float(a_crossing_erfc(
                    separation as f64,
                    *horizon,
                )))
            }
        }
    }

    /// Crossing probability for endpoints the given number of lattice sites
    /// apart. Variants whose chart doubles distances (centered chart, and the
    /// diffusive limit expressed in it) get the separation scaled before
    /// dispatch; the rest take site units directly.
    pub fn a_crossing_sites(&self, site_separation: i64) -> Result<ProbabilityValue> {
        match self {
            KernelSpec::Biased { .. } | KernelSpec::ScalingLimit { .. } => {
                self.a_crossing(2 * site_separation)
            }
            _ => self.a_crossing(site_separation),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(
            self,
            KernelSpec::Biased { .. } | KernelSpec::Asymmetric { .. }
        )
    }

    /// Discrete horizon, when the variant has one.
    pub fn horizon(&self) -> Option<i64> {
        match self {
            KernelSpec::Biased { horizon, .. } | KernelSpec::Asymmetric { horizon, .. } => {
                Some(*horizon)
            }
            _ => None,
        }
    }
}

fn check_horizon(horizon: i64) -> Result<()> {
    if horizon < 0 {
        return Err(Error::BadHorizon {
            horizon,
            diagonal: 0,
        });
    }
    Ok(())
}

/// Terminal law of the centered-chart walk: probability of displacement
/// `to - from = displacement` after `horizon` steps of -1 (probability p)
/// or +1. Zero off the reachable parity class.
pub fn w_biased(horizon: i64, p: &RationalProbability, displacement: i64) -> BigRational {
    if horizon < 0 {
        return BigRational::zero();
    }
    let grid = biased_grid(horizon, p, 0);
    let denom = p.as_ratio().denom().pow(horizon as u32);
    grid.into_iter()
        .find(|(y, _)| *y == displacement)
        .map(|(_, n)| BigRational::new(n, denom))
        .unwrap_or_else(BigRational::zero)
}

/// Terminal law of the resting-chart walk: displacement is -k with
/// probability C(horizon, k) p^k q^(horizon - k).
pub fn w_asymmetric(horizon: i64, p: &RationalProbability, displacement: i64) -> BigRational {
    if horizon < 0 {
        return BigRational::zero();
    }
    let grid = asymmetric_grid(horizon, p, 0);
    let denom = p.as_ratio().denom().pow(horizon as u32);
    grid.into_iter()
        .find(|(y, _)| *y == displacement)
        .map(|(_, n)| BigRational::new(n, denom))
        .unwrap_or_else(BigRational::zero)
}

/// Floating-point resting-chart law through log-gamma, usable at horizons far
/// beyond what exact binomials should be asked to do.
pub fn w_asymmetric_f64(horizon: i64, p: f64, displacement: i64) -> f64 {
    if horizon < 0 || displacement > 0 || displacement < -horizon {
        return 0.0;
    }
    let k = -displacement;
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == horizon { 1.0 } else { 0.0 };
    }
    let (t, k) = (horizon as f64, k as f64);
    let log_pmf = libm::lgamma(t + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(t - k + 1.0)
        + k * p.ln()
        + (t - k) * (1.0 - p).ln();
    log_pmf.exp()
}

/// Exact crossing probability in the centered chart via the terminal form.
/// The two terminal laws share the denominator d^horizon, so the double sum
/// runs over integer numerators with prefix sums and reduces once at the end.
pub fn a_crossing_terminal(
    horizon: i64,
    p: &RationalProbability,
    separation: i64,
) -> Result<RationalProbability> {
    check_horizon(horizon)?;
    let sep = separation.abs();
    let grid_i = biased_grid(horizon, p, 0);
    let grid_j = biased_grid(horizon, p, sep);
    let numer = terminal_sum_exact(&grid_i, &grid_j);
    let denom = p.as_ratio().denom().pow(2 * horizon as u32);
    RationalProbability::new(BigRational::new(numer, denom))
}

/// Exact crossing probability in the centered chart via the determinant
/// complement. Algebraically identical to the terminal form; implemented
/// separately so the equality is a real check of both code paths.
pub fn a_crossing_determinant(
    horizon: i64,
    p: &RationalProbability,
    separation: i64,
) -> Result<RationalProbability> {
    check_horizon(horizon)?;
    let sep = separation.abs();
    let grid_i = biased_grid(horizon, p, 0);
    let grid_j = biased_grid(horizon, p, sep);
    let det = det_sum_exact(&grid_i, &grid_j);
    let denom: BigInt = p.as_ratio().denom().pow(2 * horizon as u32);
    RationalProbability::new(BigRational::new(&denom - det, denom.clone()))
}

/// Exact crossing probability in the resting chart. Two endpoints k sites
/// apart here correspond to separation 2k in the centered chart, and the two
/// kernels agree on such pairs; the tests pin that down.
pub fn a_crossing_asymmetric(
    horizon: i64,
    p: &RationalProbability,
    separation: i64,
) -> Result<RationalProbability> {
    check_horizon(horizon)?;
    let sep = separation.abs();
    let grid_i = asymmetric_grid(horizon, p, 0);
    let grid_j = asymmetric_grid(horizon, p, sep);
    let numer = terminal_sum_exact(&grid_i, &grid_j);
    let denom = p.as_ratio().denom().pow(2 * horizon as u32);
    RationalProbability::new(BigRational::new(numer, denom))
}

fn check_continuum(rate: f64, time: f64) -> Result<()> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::NonPositiveParameter {
            name: "rate".into(),
            value: rate,
        });
    }
    if time < 0.0 || !time.is_finite() {
        return Err(Error::NonPositiveParameter {
            name: "time".into(),
            value: time,
        });
    }
    Ok(())
}

/// Continuum symmetric crossing probability in closed form:
/// A = 1 - [ie_0 + 2 (ie_1 + .. + ie_{d-1}) + ie_d](2 rate t).
/// The difference of the two walkers jumps +-1 at rate `rate` each way, so
/// its displacement is Skellam with both parameters `rate * time`.
pub fn a_crossing_poisson(rate: f64, time: f64, separation: i64) -> Result<f64> {
    check_continuum(rate, time)?;
    let d = separation.unsigned_abs() as usize;
    if d == 0 {
        return Ok(1.0);
    }
    let scan = bessel_ie_scan(d, 2.0 * rate * time);
    let mut a = 1.0 - scan[0] - scan[d];
    for v in &scan[1..d] {
        a -= 2.0 * v;
    }
    Ok(a.max(0.0))
}

/// Same quantity summed from the other end: the reflection identity gives
/// A = ie_d + 2 sum_{k > d} ie_k, a truncated tail over the difference-walk
/// law. The truncation must visibly die out or the call fails.
pub fn a_crossing_skellam(rate: f64, time: f64, separation: i64) -> Result<f64> {
    check_continuum(rate, time)?;
    let d = separation.unsigned_abs() as usize;
    let z = 2.0 * rate * time;
    let kmax = d + z.ceil() as usize + 120;
    let scan = bessel_ie_scan(kmax, z);
    if scan[kmax] > 1e-18 {
        return Err(Error::NumericalCheck(format!(
            "difference-walk tail not exhausted: ie_{kmax}({z}) = {}",
            scan[kmax]
        )));
    }
    let mut a = scan[d];
    for v in &scan[d + 1..] {
        a += 2.0 * v;
    }
    Ok(a.min(1.0))
}

/// Terminal law of one continuum walker with up rate a and down rate b:
/// Skellam(a t, b t), written with the scaled Bessel so nothing overflows:
/// w(k) = e^{-t (sqrt a - sqrt b)^2} (a/b)^{k/2} ie_|k|(2 sqrt(ab) t).
pub fn w_bidirectional(rate_up: f64, rate_down: f64, time: f64, displacement: i64) -> Result<f64> {
    check_continuum(rate_up, time)?;
    check_continuum(rate_down, time)?;
    let z = 2.0 * (rate_up * rate_down).sqrt() * time;
    let front = (-time * (rate_up.sqrt() - rate_down.sqrt()).powi(2)).exp();
    let tilt = (0.5 * displacement as f64 * (rate_up / rate_down).ln()).exp();
    Ok(front * tilt * crate::special::bessel_ie(displacement, z))
}

/// Continuum crossing probability by the terminal double sum over two
/// truncated one-walker laws. No cancellation tricks: the value must agree
/// with the symmetric closed forms whenever rate_up + rate_down matches,
/// which is exactly what the rate-split checks assert.
pub fn a_crossing_bidirectional(
    rate_up: f64,
    rate_down: f64,
    time: f64,
    separation: i64,
) -> Result<f64> {
    check_continuum(rate_up, time)?;
    check_continuum(rate_down, time)?;
    let sep = separation.abs();
    let total = rate_up + rate_down;
    let reach = (total * time).ceil() as i64 + 80;
    let mut grid_i = Vec::with_capacity(2 * reach as usize + 1);
    let mut mass = 0.0;
    for k in -reach..=reach {
        let w = w_bidirectional(rate_up, rate_down, time, k)?;
        mass += w;
        grid_i.push((k, w));
    }
    if !mass.is_finite() || (mass - 1.0).abs() > 1e-10 {
        return Err(Error::NumericalCheck(format!(
            "truncated walker law sums to {mass}, not 1"
        )));
    }
    let grid_j: Vec<(i64, f64)> = grid_i.iter().map(|&(k, w)| (k + sep, w)).collect();
    Ok(terminal_sum_f64(&grid_i, &grid_j).clamp(0.0, 1.0))
}

/// Diffusive limit of the fair centered-chart kernel:
/// A(horizon, separation) -> erfc(separation / (2 sqrt(horizon))).
pub fn a_crossing_erfc(separation: f64, horizon: f64) -> f64 {
    scaling_limit_gap(separation / horizon.sqrt())
}

/// The limit shape F(z) = erfc(z/2) in the rescaled variable
/// z = separation / sqrt(horizon).
pub fn scaling_limit_gap(z: f64) -> f64 {
    erfc(z / 2.0)
}

/// 2x2 block of the rescaled two-point matrix kernel, expressed through
/// F = erfc(z/2) and its derivatives:
///
/// [ -F''(z)        -F'(z)          ]
/// [  F'(z)     sign(z) F(|z|)      ]
///
/// F' is even and F'' is odd, so the block satisfies the same antisymmetry
/// as its discrete counterpart: K(z) = -K(-z)^T.
pub fn scaling_limit_kernel(z: f64) -> [[f64; 2]; 2] {
    let gauss = (-z * z / 4.0).exp() / std::f64::consts::PI.sqrt();
    let f = scaling_limit_gap(z.abs());
    let fp = -gauss;
    let fpp = z / 2.0 * gauss;
    [[-fpp, -fp], [fp, z.signum() * f]]
}

/// Exact crossing probability of two lineages in an arbitrary weight field,
/// by an absorbing two-walker dynamic program. Strictly ordered pairs never
/// share a vertex, so independent per-walker coins give the same law as the
/// shared environment; the pair is absorbed the first time the order becomes
/// weak, which is exactly the coalescence event.
pub fn a_crossing_inhomogeneous(
    field: &WeightField,
    a: &LatticeVertex,
    b: &LatticeVertex,
) -> Result<RationalProbability> {
    if a.sublattice() != Sublattice::Half || b.sublattice() != Sublattice::Half {
        let off = if a.sublattice() != Sublattice::Half { a } else { b };
        return Err(Error::WrongSublattice {
            expected: "half-integer",
            u: off.u().to_string(),
            v: off.v().to_string(),
        });
    }
    if a.diagonal() != b.diagonal() {
        return Err(Error::DifferentDiagonals(a.diagonal(), b.diagonal()));
    }
    check_horizon(a.diagonal())?;
    if a.u() >= b.u() {
        return Err(Error::InvalidIntervals(format!(
            "left walker at {} must start strictly west of the right one at {}",
            a.u(),
            b.u()
        )));
    }

    let t = a.diagonal();
    let mut alive: BTreeMap<(Coord, Coord), BigRational> = BTreeMap::new();
    alive.insert((a.u(), b.u()), BigRational::one());
    let mut absorbed = BigRational::zero();
    for m in (1..=t).rev() {
        let mut next: BTreeMap<(Coord, Coord), BigRational> = BTreeMap::new();
        for ((ui, uj), prob) in &alive {
            let pi = field
                .weight_at(&vertex_on_diagonal(*ui, m).weight_anchor()?)?
                .into_ratio();
            let pj = field
                .weight_at(&vertex_on_diagonal(*uj, m).weight_anchor()?)?
                .into_ratio();
            for (west_i, west_j) in [(false, false), (false, true), (true, false), (true, true)] {
                let fi = if west_i {
                    pi.clone()
                } else {
                    BigRational::one() - &pi
                };
                let fj = if west_j {
                    pj.clone()
                } else {
                    BigRational::one() - &pj
                };
                let factor = prob * fi * fj;
                if factor.is_zero() {
                    continue;
                }
                let ni = if west_i { *ui - 1 } else { *ui };
                let nj = if west_j { *uj - 1 } else { *uj };
                if ni >= nj {
                    absorbed += factor;
                } else {
                    *next.entry((ni, nj)).or_insert_with(BigRational::zero) += factor;
                }
            }
        }
        alive = next;
    }
    RationalProbability::new(absorbed)
}

/// Terminal numerators of the centered-chart walk started at `x`:
/// (position, numerator) pairs ascending, over the common denominator
/// denom(p)^horizon. Degenerate weights collapse to a single point.
fn biased_grid(horizon: i64, p: &RationalProbability, x: i64) -> Vec<(i64, BigInt)> {
    let n = p.as_ratio().numer().clone();
    let d = p.as_ratio().denom().clone();
    let q = &d - &n;
    let full = d.pow(horizon as u32);
    if n.is_zero() {
        return vec![(x + horizon, full)];
    }
    if q.is_zero() {
        return vec![(x - horizon, full)];
    }
    let mut out = Vec::with_capacity(horizon as usize + 1);
    let mut val = n.pow(horizon as u32);
    out.push((x - horizon, val.clone()));
    for i in 0..horizon {
        val = val * (horizon - i) * &q / ((i + 1) * &n);
        out.push((x - horizon + 2 * (i + 1), val.clone()));
    }
    out
}

/// Terminal numerators of the resting-chart walk started at `x`.
fn asymmetric_grid(horizon: i64, p: &RationalProbability, x: i64) -> Vec<(i64, BigInt)> {
    let n = p.as_ratio().numer().clone();
    let d = p.as_ratio().denom().clone();
    let q = &d - &n;
    let full = d.pow(horizon as u32);
    if n.is_zero() {
        return vec![(x, full)];
    }
    if q.is_zero() {
        return vec![(x - horizon, full)];
    }
    // ascending y = x - k for k = horizon .. 0
    let mut out = Vec::with_capacity(horizon as usize + 1);
    let mut val = n.pow(horizon as u32); // k = horizon
    out.push((x - horizon, val.clone()));
    for k in (1..=horizon).rev() {
        val = val * k * &q / ((horizon - k + 1) * &n);
        out.push((x - (k - 1), val.clone()));
    }
    out
}

/// 2 sum_{y_j < y_i} N_I(y_i) N_J(y_j) + sum_{y} N_I(y) N_J(y), merged over
/// the two ascending grids with a running prefix of N_J.
fn terminal_sum_exact(grid_i: &[(i64, BigInt)], grid_j: &[(i64, BigInt)]) -> BigInt {
    let mut acc = BigInt::zero();
    let mut prefix_j = BigInt::zero();
    let (mut ii, mut jj) = (0usize, 0usize);
    while ii < grid_i.len() || jj < grid_j.len() {
        let yi = grid_i.get(ii).map(|g| g.0);
        let yj = grid_j.get(jj).map(|g| g.0);
        let y = match (yi, yj) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!(),
        };
        let a = if yi == Some(y) {
            ii += 1;
            grid_i[ii - 1].1.clone()
        } else {
            BigInt::zero()
        };
        let b = if yj == Some(y) {
            jj += 1;
            grid_j[jj - 1].1.clone()
        } else {
            BigInt::zero()
        };
        if !a.is_zero() {
            acc += &a * (2 * &prefix_j + &b);
        }
        prefix_j += b;
    }
    acc
}

/// sum_{y1 < y2} [N_I(y1) N_J(y2) - N_I(y2) N_J(y1)], merged with running
/// prefixes of both laws.
fn det_sum_exact(grid_i: &[(i64, BigInt)], grid_j: &[(i64, BigInt)]) -> BigInt {
    let mut acc = BigInt::zero();
    let mut prefix_i = BigInt::zero();
    let mut prefix_j = BigInt::zero();
    let (mut ii, mut jj) = (0usize, 0usize);
    while ii < grid_i.len() || jj < grid_j.len() {
        let yi = grid_i.get(ii).map(|g| g.0);
        let yj = grid_j.get(jj).map(|g| g.0);
        let y = match (yi, yj) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!(),
        };
        let a = if yi == Some(y) {
            ii += 1;
            grid_i[ii - 1].1.clone()
        } else {
            BigInt::zero()
        };
        let b = if yj == Some(y) {
            jj += 1;
            grid_j[jj - 1].1.clone()
        } else {
            BigInt::zero()
        };
        acc += &b * &prefix_i - &a * &prefix_j;
        prefix_i += a;
        prefix_j += b;
    }
    acc
}

/// Floating-point counterpart of `terminal_sum_exact` for continuum laws.
fn terminal_sum_f64(grid_i: &[(i64, f64)], grid_j: &[(i64, f64)]) -> f64 {
    let mut acc = 0.0f64;
    let mut prefix_j = 0.0f64;
    let (mut ii, mut jj) = (0usize, 0usize);
    while ii < grid_i.len() || jj < grid_j.len() {
        let yi = grid_i.get(ii).map(|g| g.0);
        let yj = grid_j.get(jj).map(|g| g.0);
        let y = match (yi, yj) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!(),
        };
        let a = if yi == Some(y) {
            ii += 1;
            grid_i[ii - 1].1
        } else {
            0.0
        };
        let b = if yj == Some(y) {
            jj += 1;
            grid_j[jj - 1].1
        } else {
            0.0
        };
        acc += a * (2.0 * prefix_j + b);
        prefix_j += b;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::enumerate_event_probability;
    use crate::forests::{EventKind, IntervalSpec};

    fn prob(n: i64, d: i64) -> RationalProbability {
        RationalProbability::from_ints(n, d).unwrap()
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        prob(n, d).into_ratio()
    }

    #[test]
    fn biased_law_normalizes_and_obeys_parity() {
        for (t, p) in [(1i64, prob(1, 2)), (7, prob(2, 5)), (12, prob(9, 10))] {
            let mut total = BigRational::zero();
            for y in -t..=t {
                total += w_biased(t, &p, y);
            }
            assert!(total.is_one());
            // displacements with the wrong parity carry no mass
            assert!(w_biased(t, &p, 1 - (t % 2)).is_zero());
            assert!(w_biased(t, &p, t + 2).is_zero());
        }
        assert_eq!(w_biased(2, &prob(1, 2), 0), ratio(1, 2));
        assert_eq!(w_biased(1, &prob(1, 3), -1), ratio(1, 3));
    }

    #[test]
    fn resting_law_normalizes_and_matches_float_route() {
        for (t, p) in [(5i64, prob(1, 3)), (9, prob(9, 10))] {
            let mut total = BigRational::zero();
            for y in -t..=0 {
                let w = w_asymmetric(t, &p, y);
                total += &w;
                let f = w_asymmetric_f64(t, p.to_f64(), y);
                let exact = crate::exact::RationalProbability::new(w).unwrap().to_f64();
                assert!((f - exact).abs() <= 1e-13 * exact.max(1e-300), "t={t} y={y}");
            }
            assert!(total.is_one());
        }
        assert_eq!(w_asymmetric_f64(5, 0.0, 0), 1.0);
        assert_eq!(w_asymmetric_f64(5, 1.0, -5), 1.0);
        assert_eq!(w_asymmetric_f64(5, 0.5, 1), 0.0);
    }

    // The two exact evaluation routes are algebraically identical; equality on
    // every separation (odd ones included) checks both implementations.
    #[test]
    fn terminal_equals_determinant_complement() {
        for p in [prob(1, 2), prob(2, 5)] {
            for t in 0..=6 {
                for sep in 0..=(2 * t + 1) {
                    let a = a_crossing_terminal(t, &p, sep).unwrap();
                    let b = a_crossing_determinant(t, &p, sep).unwrap();
                    assert_eq!(a, b, "t={t} sep={sep}");
                }
            }
        }
    }

    // The kernel at separation 2 is the empty-unit-interval probability; the
    // frozen values are shared with the enumeration tests.
    #[test]
    fn kernel_matches_enumeration_on_unit_intervals() {
        assert_eq!(a_crossing_terminal(2, &prob(1, 2), 2).unwrap(), prob(3, 8));
        assert_eq!(a_crossing_terminal(2, &prob(1, 3), 2).unwrap(), prob(28, 81));
        assert_eq!(a_crossing_terminal(3, &prob(1, 2), 2).unwrap(), prob(29, 64));
        for (t, p) in [(1i64, prob(1, 2)), (2, prob(1, 3)), (3, prob(2, 5))] {
            let spec = IntervalSpec::units(t, &[0]).unwrap();
            let field = WeightField::constant(p.clone());
            let en =
                enumerate_event_probability(&field, &spec, EventKind::EmptyInterval).unwrap();
            assert_eq!(a_crossing_terminal(t, &p, 2).unwrap(), en);
        }
    }

    // Same walkers, two charts: a site separation of s is a centered-chart
    // separation of 2s, and both exact kernels must give the same number.
    #[test]
    fn resting_and_centered_charts_agree() {
        for p in [prob(1, 3), prob(9, 10), prob(0, 1), prob(1, 1)] {
            for t in 0..=6 {
                for s in 0..=4 {
                    let a = a_crossing_asymmetric(t, &p, s).unwrap();
                    let b = a_crossing_terminal(t, &p, 2 * s).unwrap();
                    assert_eq!(a, b, "p={p:?} t={t} s={s}");
                }
            }
        }
    }

    #[test]
    fn continuum_routes_agree_spot_checks() {
        for (rate, time) in [(2.0, 0.15), (1.0, 3.0), (4.0, 5.0)] {
            for sep in [1i64, 2, 7] {
                let a = a_crossing_poisson(rate, time, sep).unwrap();
                let b = a_crossing_skellam(rate, time, sep).unwrap();
                let c = a_crossing_bidirectional(rate / 2.0, rate / 2.0, time, sep).unwrap();
                assert!((a - b).abs() < 1e-13, "closed {a} vs tail {b}");
                assert!((a - c).abs() < 1e-12, "closed {a} vs double sum {c}");
            }
        }
    }

    #[test]
    fn crossing_from_zero_separation_is_certain() {
        assert!(a_crossing_terminal(4, &prob(1, 3), 0).unwrap().is_one());
        assert!(a_crossing_determinant(4, &prob(1, 3), 0).unwrap().is_one());
        assert!(a_crossing_asymmetric(4, &prob(1, 3), 0).unwrap().is_one());
        assert_eq!(a_crossing_poisson(1.5, 2.0, 0).unwrap(), 1.0);
        assert!((a_crossing_skellam(1.5, 2.0, 0).unwrap() - 1.0).abs() < 1e-13);
        assert!(
            (a_crossing_bidirectional(1.0, 0.5, 2.0, 0).unwrap() - 1.0).abs() < 1e-12
        );
    }

    #[test]
    fn bidirectional_law_normalizes_with_correct_drift() {
        let (up, down, time) = (1.5, 0.5, 2.0);
        let reach = 60i64;
        let mut mass = 0.0;
        let mut mean = 0.0;
        for k in -reach..=reach {
            let w = w_bidirectional(up, down, time, k).unwrap();
            assert!(w >= 0.0);
            mass += w;
            mean += k as f64 * w;
        }
        assert!((mass - 1.0).abs() < 1e-12);
        assert!((mean - (up - down) * time).abs() < 1e-9);
        // equal rates reduce to the scaled Bessel law directly
        for k in 0..6 {
            let w = w_bidirectional(0.75, 0.75, 2.0, k).unwrap();
            assert!((w - crate::special::bessel_ie(k, 3.0)).abs() < 1e-15);
        }
    }

    // Coarse convergence smoke; the sharp version at horizon 10^4 lives in the
    // acceptance suite. A chart mix-up (site vs centered separations) would
    // miss by a factor around 3 here, far outside the bound.
    #[test]
    fn diffusive_limit_is_approached() {
        let t = 400i64;
        for sep in [20i64, 40] {
            let exact = a_crossing_terminal(t, &prob(1, 2), sep).unwrap().to_f64();
            let limit = a_crossing_erfc(sep as f64, t as f64);
            let rel = (exact - limit).abs() / limit;
            assert!(rel < 0.1, "sep={sep}: exact {exact} vs limit {limit}");
        }
        assert!(a_crossing_erfc(10.0, 100.0) > a_crossing_erfc(20.0, 100.0));
        assert!((a_crossing_erfc(30.0, 225.0) - scaling_limit_gap(2.0)).abs() < 1e-15);
    }

    #[test]
    fn scaling_limit_block_symmetries() {
        for z in [0.3f64, 1.0, 2.7] {
            let k = scaling_limit_kernel(z);
            let km = scaling_limit_kernel(-z);
            // K(-z) = -K(z)^T entrywise
            for r in 0..2 {
                for c in 0..2 {
                    assert!((km[r][c] + k[c][r]).abs() < 1e-15, "z={z} r={r} c={c}");
                }
            }
            // derivative structure against central differences of the gap
            // shape; the second difference needs a wider step or roundoff in
            // the numerator swamps it after the 1/h^2
            let h = 1e-5;
            let d1 = (scaling_limit_gap(z + h) - scaling_limit_gap(z - h)) / (2.0 * h);
            let h2 = 1e-3;
            let d2 = (scaling_limit_gap(z + h2) - 2.0 * scaling_limit_gap(z)
                + scaling_limit_gap(z - h2))
                / (h2 * h2);
            assert!((k[1][0] - d1).abs() < 1e-9);
            assert!((-k[0][0] - d2).abs() < 1e-6);
            assert!((k[1][1] - scaling_limit_gap(z)).abs() < 1e-15);
            assert!((k[0][1] + k[1][0]).abs() < 1e-15);
        }
    }

    // Free-field DP against the constant-field kernels, and against a raw
    // 16-outcome path enumeration in a genuinely inhomogeneous field.
    #[test]
    fn inhomogeneous_dp_reduces_to_constant_kernels() {
        for p in [prob(1, 2), prob(2, 5)] {
            let field = WeightField::constant(p.clone());
            for t in 1..=5 {
                for s in 1..=3 {
                    let a = vertex_on_diagonal(Coord::half_odd(0), t);
                    let b = vertex_on_diagonal(Coord::half_odd(s), t);
                    let dp = a_crossing_inhomogeneous(&field, &a, &b).unwrap();
                    let kn = a_crossing_asymmetric(t, &p, s).unwrap();
                    assert_eq!(dp, kn, "t={t} s={s}");
                }
            }
        }
    }

    #[test]
    fn inhomogeneous_dp_matches_direct_path_enumeration() {
        let field = WeightField::polya_shifted(5, 9);
        let a = vertex_on_diagonal(Coord::half_odd(0), 2);
        let b = vertex_on_diagonal(Coord::half_odd(1), 2);

        let path_and_weight = |start: &LatticeVertex, bits: [bool; 2]| {
            let mut u = start.u();
            let mut diag = start.diagonal();
            let mut weight = BigRational::one();
            let mut path = vec![u];
            for &west in &bits {
                let w = field
                    .weight_at(&vertex_on_diagonal(u, diag).weight_anchor().unwrap())
                    .unwrap()
                    .into_ratio();
                weight *= if west { w } else { BigRational::one() - w };
                if west {
                    u = u - 1;
                }
                diag -= 1;
                path.push(u);
            }
            (path, weight)
        };

        let mut reference = BigRational::zero();
        for mask in 0u32..16 {
            let bits_a = [mask & 1 != 0, mask & 2 != 0];
            let bits_b = [mask & 4 != 0, mask & 8 != 0];
            let (pa, wa) = path_and_weight(&a, bits_a);
            let (pb, wb) = path_and_weight(&b, bits_b);
            let met = pa.iter().zip(&pb).any(|(x, y)| x >= y);
            if met {
                reference += wa * wb;
            }
        }
        let dp = a_crossing_inhomogeneous(&field, &a, &b).unwrap();
        assert_eq!(dp.as_ratio(), &reference);
    }

    #[test]
    fn inhomogeneous_dp_validates_inputs() {
        let field = WeightField::constant(prob(1, 2));
        let a = vertex_on_diagonal(Coord::half_odd(0), 3);
        let b = vertex_on_diagonal(Coord::half_odd(2), 3);
        let c = vertex_on_diagonal(Coord::half_odd(2), 2);
        assert!(a_crossing_inhomogeneous(&field, &b, &a).is_err());
        assert!(a_crossing_inhomogeneous(&field, &a, &c).is_err());
        assert!(
            a_crossing_inhomogeneous(&field, &LatticeVertex::integer(0, 3), &b).is_err()
        );
    }

    #[test]
    fn kernel_spec_dispatch() {
        let biased = KernelSpec::Biased {
            horizon: 2,
            p: prob(1, 2),
        };
        assert!(biased.is_exact());
        assert_eq!(biased.horizon(), Some(2));
        match biased.a_crossing(2).unwrap() {
            ProbabilityValue::Exact(r) => assert_eq!(r, prob(3, 8)),
            ProbabilityValue::Float(_) => panic!("biased kernel must be exact"),
        }
        let poisson = KernelSpec::Poisson {
            rate: 2.0,
            time: 1.0,
        };
        assert!(!poisson.is_exact());
        assert!(poisson.a_crossing(1).unwrap().exact().is_none());
        assert!(KernelSpec::Poisson {
            rate: -1.0,
            time: 1.0
        }
        .a_crossing(1)
        .is_err());
        assert!(KernelSpec::ScalingLimit { horizon: 0.0 }.a_crossing(1).is_err());
    }
}
