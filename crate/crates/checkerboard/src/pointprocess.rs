//! The boundary set on one diagonal, viewed as a point process.
//!
//! A site y holds a boundary exactly when the backward lineages of y - 1/2
//! and y + 1/2 stay apart, so the pair-crossing function C(y, z), the chance
//! that the lineages of y - 1/2 and z - 1/2 have met, determines everything.
//! Correlations rho(y_1, ..., y_n) = P(boundary at every y_i) come out two
//! independent ways:
//!
//! * a 2n x 2n Pfaffian whose off-diagonal blocks are forward differences of
//!   C and whose diagonal blocks carry the one-point densities, and
//! * inclusion-exclusion over gap probabilities of subsets, each gap being an
//!   empty-interval Pfaffian in its own right.
//!
//! The two routes agree entry for entry in exact arithmetic; the tests and
//! the verification suite lean on that.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::RationalProbability;
use crate::forests::IntervalSpec;
use crate::kernels::KernelSpec;
use crate::lattice::{Coord, WeightField};
use crate::pfaffian::{
    crossing_entry_exact, empty_interval_probability, pfaffian_exact, pfaffian_float, SkewMatrix,
    PFAFFIAN_EXACT_CAP,
};
use crate::ProbabilityValue;

/// Subset cap for the inclusion-exclusion route, which walks 2^n subsets.
pub const MOBIUS_SITE_CAP: usize = 20;

/// Strictly increasing integer sites on one diagonal, the argument every
/// correlation function takes.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteSet {
    diagonal: i64,
    sites: Vec<i64>,
}

impl SiteSet {
    pub fn new(diagonal: i64, sites: &[i64]) -> Result<Self> {
        if diagonal < 0 {
            return Err(Error::BadHorizon {
                horizon: diagonal,
                diagonal,
            });
        }
        if sites.is_empty() {
            return Err(Error::InvalidSites("site list is empty".into()));
        }
        if !sites.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidSites(format!(
                "sites must be strictly increasing, got {sites:?}"
            )));
        }
        Ok(SiteSet {
            diagonal,
            sites: sites.to_vec(),
        })
    }

    pub fn diagonal(&self) -> i64 {
        self.diagonal
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// One unit interval (y - 1/2, y + 1/2) per site; adjacent sites touch
    /// and the coincident-endpoint convention absorbs that.
    pub fn unit_intervals(&self) -> IntervalSpec {
        IntervalSpec::units(self.diagonal, &self.sites).expect("validated sites")
    }

    /// Maximal runs of consecutive sites merged into single intervals, which
    /// keeps the empty-interval matrix at two endpoints per run.
    pub fn clustered_intervals(&self) -> IntervalSpec {
        let mut pairs = Vec::new();
        let mut run_start = self.sites[0];
        let mut prev = self.sites[0];
        for &site in &self.sites[1..] {
            if site != prev + 1 {
                pairs.push((Coord::half_odd(run_start - 1), Coord::half_odd(prev)));
                run_start = site;
            }
            prev = site;
        }
        pairs.push((Coord::half_odd(run_start - 1), Coord::half_odd(prev)));
        IntervalSpec::new(self.diagonal, &pairs).expect("runs are disjoint")
    }
}

/// C(a, b) for integer sites a <= b: the chance the lineages of a - 1/2 and
/// b - 1/2 have met by the base diagonal. Exact route.
fn crossing_c(field: &WeightField, diagonal: i64, a: i64, b: i64) -> Result<BigRational> {
    crossing_entry_exact(
        field,
        diagonal,
        Coord::half_odd(a - 1),
        Coord::half_odd(b - 1),
    )
}

/// Same through a crossing kernel, in floating point.
fn crossing_c_kernel(kernel: &KernelSpec, a: i64, b: i64) -> Result<f64> {
    if a == b {
        return Ok(1.0);
    }
    Ok(kernel.a_crossing_sites(b - a)?.to_f64())
}

/// The 2n x 2n skew matrix whose Pfaffian is rho(y_1, ..., y_n). Block (i, j)
/// with i < j reads
///
/// ```text
/// [  C(y_i, y_j)      -D_z C(y_i, y_j) ]
/// [ -D_y C(y_i, y_j)  D_y D_z C(y_i, y_j) ]
/// ```
///
/// with D the forward difference in the marked argument, and the diagonal
/// block's upper entry is the density 1 - C(y_i, y_i + 1).
pub fn correlation_matrix(
    field: &WeightField,
    sites: &SiteSet,
) -> Result<SkewMatrix<BigRational>> {
    let y = sites.sites();
    let t = sites.diagonal();
    SkewMatrix::try_from_upper(2 * y.len(), |row, col| {
        let (i, j) = (row / 2, col / 2);
        if i == j {
            return Ok(BigRational::one() - crossing_c(field, t, y[i], y[i] + 1)?);
        }
        let base = crossing_c(field, t, y[i], y[j])?;
        Ok(match (row % 2, col % 2) {
            (0, 0) => base,
            (0, 1) => base - crossing_c(field, t, y[i], y[j] + 1)?,
            (1, 0) => base - crossing_c(field, t, y[i] + 1, y[j])?,
            _ => {
                crossing_c(field, t, y[i] + 1, y[j] + 1)? - crossing_c(field, t, y[i] + 1, y[j])?
                    - crossing_c(field, t, y[i], y[j] + 1)?
                    + base
            }
        })
    })
}

/// Kernel-entry variant of [`correlation_matrix`]. Discrete kernels must
/// carry the site set's diagonal as their horizon.
pub fn correlation_matrix_kernel(
    kernel: &KernelSpec,
    sites: &SiteSet,
) -> Result<SkewMatrix<f64>> {
    if let Some(h) = kernel.horizon() {
        if h != sites.diagonal() {
            return Err(Error::HorizonMismatch {
                kernel: h,
                spec: sites.diagonal(),
            });
        }
    }
    let y = sites.sites();
    SkewMatrix::try_from_upper(2 * y.len(), |row, col| {
        let (i, j) = (row / 2, col / 2);
        if i == j {
            return Ok(1.0 - crossing_c_kernel(kernel, y[i], y[i] + 1)?);
        }
        let base = crossing_c_kernel(kernel, y[i], y[j])?;
        Ok(match (row % 2, col % 2) {
            (0, 0) => base,
            (0, 1) => base - crossing_c_kernel(kernel, y[i], y[j] + 1)?,
            (1, 0) => base - crossing_c_kernel(kernel, y[i] + 1, y[j])?,
            _ => {
                crossing_c_kernel(kernel, y[i] + 1, y[j] + 1)?
                    - crossing_c_kernel(kernel, y[i] + 1, y[j])?
                    - crossing_c_kernel(kernel, y[i], y[j] + 1)?
                    + base
            }
        })
    })
}

/// rho(y_1, ..., y_n) through the block Pfaffian: exact while the matrix
/// stays within [`PFAFFIAN_EXACT_CAP`], floating point past it.
pub fn correlation_pfaffian(field: &WeightField, sites: &SiteSet) -> Result<ProbabilityValue> {
    let matrix = correlation_matrix(field, sites)?;
    if matrix.order() <= PFAFFIAN_EXACT_CAP {
        let value = pfaffian_exact(&matrix)?;
        Ok(ProbabilityValue::Exact(RationalProbability::new(value)?))
    } else {
        Ok(ProbabilityValue::Float(pfaffian_float(&matrix.to_float())?))
    }
}

/// Kernel-entry variant of [`correlation_pfaffian`], always floating point.
pub fn correlation_pfaffian_kernel(
    kernel: &KernelSpec,
    sites: &SiteSet,
) -> Result<ProbabilityValue> {
    let matrix = correlation_matrix_kernel(kernel, sites)?;
    Ok(ProbabilityValue::Float(pfaffian_float(&matrix)?))
}

/// Probability that none of the sites holds a boundary: the empty-interval
/// probability of the clustered unit intervals around them.
pub fn gap_probability(field: &WeightField, sites: &SiteSet) -> Result<ProbabilityValue> {
    empty_interval_probability(field, &sites.clustered_intervals())
}

/// rho(y_1, ..., y_n) by inclusion-exclusion over gap probabilities:
/// rho(Y) = sum over S subset of Y of (-1)^|S| G(S). Stays exact when every
/// gap does, otherwise falls back to the floating-point total.
pub fn correlation_mobius(field: &WeightField, sites: &SiteSet) -> Result<ProbabilityValue> {
    let y = sites.sites();
    if y.len() > MOBIUS_SITE_CAP {
        return Err(Error::SizeCap(y.len(), MOBIUS_SITE_CAP));
    }
    let mut exact_sum = Some(BigRational::zero());
    let mut float_sum = 0.0;
    for mask in 0u32..(1u32 << y.len()) {
        let subset: Vec<i64> = (0..y.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| y[i])
            .collect();
        let negative = subset.len() % 2 == 1;
        let gap = if subset.is_empty() {
            ProbabilityValue::Exact(RationalProbability::one())
        } else {
            gap_probability(field, &SiteSet::new(sites.diagonal(), &subset)?)?
        };
        float_sum += if negative { -gap.to_f64() } else { gap.to_f64() };
        match (&mut exact_sum, gap.exact()) {
            (Some(total), Some(g)) => {
                if negative {
                    *total -= g.as_ratio();
                } else {
                    *total += g.as_ratio();
                }
            }
            _ => exact_sum = None,
        }
    }
    match exact_sum {
        Some(total) => Ok(ProbabilityValue::Exact(RationalProbability::new(total)?)),
        None => Ok(ProbabilityValue::Float(float_sum)),
    }
}
