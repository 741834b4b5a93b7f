//! Pfaffians of skew-symmetric matrices and the gap probabilities they
//! package.
//!
//! For ordered endpoints e_1 <= ... <= e_2n on one diagonal, the chance that
//! every interval (e_1, e_2), ..., (e_{2n-1}, e_2n) is free of boundaries is
//! the Pfaffian of the skew matrix with upper entries A(e_k, e_l), the
//! pair-crossing probabilities from the kernel module; coincident endpoints
//! count as already crossed, so touching intervals collapse to their union.
//!
//! Two evaluation routes: an exact first-row expansion, affordable up to
//! [`PFAFFIAN_EXACT_CAP`] endpoints, and a floating-point Parlett-Reid
//! reduction with no order cap.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::RationalProbability;
use crate::forests::{vertex_on_diagonal, IntervalSpec};
use crate::kernels::{a_crossing_inhomogeneous, a_crossing_terminal, KernelSpec};
use crate::lattice::{Coord, WeightField};
use crate::ProbabilityValue;

/// Largest order `pfaffian_exact` accepts. The expansion touches
/// (order - 1)!! leaves; order 12 means 10395 of them, which rational
/// arithmetic absorbs easily, while every two further rows multiply the count
/// by the next odd number.
pub const PFAFFIAN_EXACT_CAP: usize = 12;

/// Dense skew-symmetric matrix, stored in full so both evaluation routes can
/// index rows and columns directly. Constructors only ask for the strict
/// upper triangle; the diagonal is zero and the lower half is the negated
/// mirror.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix<T> {
    order: usize,
    entries: Vec<T>,
}

impl<T> SkewMatrix<T>
where
    T: Clone + Zero + std::ops::Neg<Output = T>,
{
    /// Build from a callback giving the entry at (row, col) for row < col.
    pub fn from_upper<F>(order: usize, mut upper: F) -> Self
    where
        F: FnMut(usize, usize) -> T,
    {
        Self::try_from_upper(order, |row, col| Ok(upper(row, col)))
            .expect("infallible entries")
    }

    /// Same, for entries that come out of fallible kernel evaluations.
    pub fn try_from_upper<F>(order: usize, mut upper: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<T>,
    {
        let mut entries = vec![T::zero(); order * order];
        for row in 0..order {
            for col in row + 1..order {
                let value = upper(row, col)?;
                entries[row * order + col] = value.clone();
                entries[col * order + row] = -value;
            }
        }
        Ok(SkewMatrix { order, entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.entries[row * self.order + col]
    }
}

impl SkewMatrix<BigRational> {
    /// Entry-wise conversion for handing an exact matrix to the float route.
    pub fn to_float(&self) -> SkewMatrix<f64> {
        SkewMatrix {
            order: self.order,
            entries: self
                .entries
                .iter()
                .map(|e| e.to_f64().expect("rational fits in f64"))
                .collect(),
        }
    }
}

/// Exact Pfaffian by expansion along the first remaining row. Errors on odd
/// orders and on orders past [`PFAFFIAN_EXACT_CAP`]; use [`pfaffian_float`]
/// beyond the cap.
pub fn pfaffian_exact(matrix: &SkewMatrix<BigRational>) -> Result<BigRational> {
    if matrix.order() % 2 == 1 {
        return Err(Error::OddOrder(matrix.order()));
    }
    if matrix.order() > PFAFFIAN_EXACT_CAP {
        return Err(Error::OrderCap(matrix.order(), PFAFFIAN_EXACT_CAP));
    }
    let active: Vec<usize> = (0..matrix.order()).collect();
    let mut leaves = 0u64;
    Ok(expand(matrix, &active, &mut leaves))
}

/// Recursive step: pair the first active index with each later one, weight by
/// the matrix entry with alternating sign, and contract the pair away. No
/// zero-skipping, so `leaves` always ends at (order - 1)!!, which the tests
/// pin down.
fn expand(matrix: &SkewMatrix<BigRational>, active: &[usize], leaves: &mut u64) -> BigRational {
    if active.is_empty() {
        *leaves += 1;
        return BigRational::one();
    }
    let first = active[0];
    let mut total = BigRational::zero();
    for (position, &partner) in active.iter().enumerate().skip(1) {
        let rest: Vec<usize> = active[1..]
            .iter()
            .copied()
            .filter(|&i| i != partner)
            .collect();
        let term = matrix.get(first, partner) * expand(matrix, &rest, leaves);
        if position % 2 == 1 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Floating-point Pfaffian via the Parlett-Reid reduction to tridiagonal
/// form, pivoting the largest entry of each working row onto the
/// superdiagonal. O(order^3) and cap-free. A zero pivot after pivoting means
/// a zero row, hence a singular matrix and a zero Pfaffian.
pub fn pfaffian_float(matrix: &SkewMatrix<f64>) -> Result<f64> {
    let n = matrix.order();
    if n % 2 == 1 {
        return Err(Error::OddOrder(n));
    }
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|row| (0..n).map(|col| *matrix.get(row, col)).collect())
        .collect();
    let mut pf = 1.0;
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let mut pivot_col = k + 1;
        for j in k + 2..n {
            if a[k][j].abs() > a[k][pivot_col].abs() {
                pivot_col = j;
            }
        }
        if pivot_col != k + 1 {
            // a simultaneous row and column swap is an even permutation of
            // det but flips the Pfaffian's sign once
            a.swap(k + 1, pivot_col);
            for row in a.iter_mut() {
                row.swap(k + 1, pivot_col);
            }
            pf = -pf;
        }
        let pivot = a[k][k + 1];
        if pivot == 0.0 {
            return Ok(0.0);
        }
        pf *= pivot;
        if k + 2 >= n {
            break;
        }
        // rank-two update clearing row k right of the superdiagonal; it
        // keeps the trailing block skew-symmetric
        let tau: Vec<f64> = (k + 2..n).map(|i| a[k][i] / pivot).collect();
        let col: Vec<f64> = (k + 2..n).map(|i| a[i][k + 1]).collect();
        for i in k + 2..n {
            let ti = tau[i - k - 2];
            let ci = col[i - k - 2];
            for j in k + 2..n {
                a[i][j] += ti * col[j - k - 2] - ci * tau[j - k - 2];
            }
        }
    }
    Ok(pf)
}

/// Upper-triangle entry for two endpoints on the given diagonal: one when
/// they coincide, otherwise the exact crossing probability of their backward
/// walkers. Constant fields take the translation-invariant closed form; any
/// other field goes through the absorbing pair walk.
pub(crate) fn crossing_entry_exact(
    field: &WeightField,
    diagonal: i64,
    a: Coord,
    b: Coord,
) -> Result<BigRational> {
    if a == b {
        return Ok(BigRational::one());
    }
    if let Some(p) = field.constant_value() {
        let sites = b.int_diff(a).expect("endpoints share parity");
        return Ok(a_crossing_terminal(diagonal, p, 2 * sites)?.into_ratio());
    }
    let start_a = vertex_on_diagonal(a, diagonal);
    let start_b = vertex_on_diagonal(b, diagonal);
    Ok(a_crossing_inhomogeneous(field, &start_a, &start_b)?.into_ratio())
}

/// Skew matrix whose Pfaffian is the empty-interval probability of `spec`
/// under `field`, entries evaluated exactly.
pub fn empty_interval_matrix(
    field: &WeightField,
    spec: &IntervalSpec,
) -> Result<SkewMatrix<BigRational>> {
    let endpoints = spec.endpoints();
    SkewMatrix::try_from_upper(endpoints.len(), |k, l| {
        crossing_entry_exact(field, spec.diagonal(), endpoints[k], endpoints[l])
    })
}

/// Same matrix with entries drawn from a crossing kernel instead of a weight
/// field. Discrete kernels must carry the spec's diagonal as their horizon;
/// separations are handed over in lattice sites and converted per variant.
pub fn empty_interval_matrix_kernel(
    kernel: &KernelSpec,
    spec: &IntervalSpec,
) -> Result<SkewMatrix<f64>> {
    if let Some(h) = kernel.horizon() {
        if h != spec.diagonal() {
            return Err(Error::HorizonMismatch {
                kernel: h,
                spec: spec.diagonal(),
            });
        }
    }
    let endpoints = spec.endpoints();
    SkewMatrix::try_from_upper(endpoints.len(), |k, l| {
        if endpoints[k] == endpoints[l] {
            return Ok(1.0);
        }
        let sites = endpoints[l]
            .int_diff(endpoints[k])
            .expect("endpoints share parity");
        Ok(kernel.a_crossing_sites(sites)?.to_f64())
    })
}

/// Empty-interval probability through the Pfaffian identity: exact up to
/// [`PFAFFIAN_EXACT_CAP`] endpoints, after which the float reduction takes
/// over on the same exact entries.
pub fn empty_interval_probability(
    field: &WeightField,
    spec: &IntervalSpec,
) -> Result<ProbabilityValue> {
    let matrix = empty_interval_matrix(field, spec)?;
    if matrix.order() <= PFAFFIAN_EXACT_CAP {
        let value = pfaffian_exact(&matrix)?;
        Ok(ProbabilityValue::Exact(RationalProbability::new(value)?))
    } else {
        Ok(ProbabilityValue::Float(pfaffian_float(&matrix.to_float())?))
    }
}

/// Kernel-driven variant of [`empty_interval_probability`]. Always floating
/// point: the continuum kernels have no exact values to offer, and the
/// discrete ones are better served by the field route when exactness matters.
pub fn empty_interval_probability_kernel(
    kernel: &KernelSpec,
    spec: &IntervalSpec,
) -> Result<ProbabilityValue> {
    let matrix = empty_interval_matrix_kernel(kernel, spec)?;
    Ok(ProbabilityValue::Float(pfaffian_float(&matrix)?))
}
