//! Complex matrix kernel: eigendecomposition of unitary matrices and the
//! alcove (spectral) coordinates of SU(n) elements.
//!
//! A unitary matrix is normal, so it is diagonalized by decomposing the
//! commuting Hermitian pair `X = (U + U†)/2`, `Y = (U - U†)/(2i)`.  We
//! eigendecompose the Hermitian combination `cos(t) X + sin(t) Y` for a fixed
//! probe angle `t`; the combination separates all eigenphases unless two of
//! them are symmetric about `t`, in which case the next angle from a fixed
//! list is tried.  Every candidate basis is accepted only after the residual
//! `max |U v - lambda v|` passes the reconstruction tolerance.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::tol;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Probe angles for the Hermitian combination; spread over [0, pi) and away
/// from 0 and pi/2 so determinant-one phase symmetries do not collide on the
/// first try.
const PROBE_ANGLES: [f64; 8] = [
    0.8121003371904157,
    2.0137519265359123,
    0.3151624193741137,
    2.742001051911513,
    1.3456790123151617,
    2.3171011001100137,
    0.0912873590127531,
    1.7893213217653197,
];

/// Iteration cap handed to the Hermitian eigensolver per probe angle.
const EIG_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimension {dim} is too small (need at least {min})")]
    DimensionTooSmall { dim: usize, min: usize },
    #[error("matrix is not unitary: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotUnitary { defect: f64, tol: f64 },
    #[error("determinant is not 1: |det - 1| = {defect:.3e} exceeds tolerance {tol:.3e}")]
    DeterminantNotOne { defect: f64, tol: f64 },
    #[error(
        "unitary eigensolver failed after {iterations} total iterations \
         (best residual {best_residual:.3e})"
    )]
    EigenSolverFailed {
        iterations: usize,
        best_residual: f64,
    },
    #[error("alcove component {index} is negative: {value:.3e}")]
    NegativeAlcoveComponent { index: usize, value: f64 },
    #[error("alcove components sum to {sum} instead of pi")]
    AlcoveSumNotPi { sum: f64 },
    #[error("no cyclic shift anchors the alcove form (best mismatch {best:.3e})")]
    AlcoveAnchorMismatch { best: f64 },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
}

pub(crate) fn c_re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise difference `max |x_ij - y_ij|`.
pub fn max_abs_diff(x: &CMat, y: &CMat) -> f64 {
    assert_eq!(x.shape(), y.shape(), "shape mismatch in max_abs_diff");
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// `max |U†U - I|`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &CMat::identity(n, n))
}

/// Distance of two phases on the circle, in [0, pi].
pub fn circular_distance(p: f64, q: f64) -> f64 {
    let d = (p - q).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Deviation of `z` from the Lie algebra su(n): anti-Hermiticity plus
/// tracelessness defect, measured entrywise.
pub fn su_algebra_defect(z: &CMat) -> f64 {
    let anti = max_abs(&(z + z.adjoint())) * 0.5;
    let trace = z.trace().norm() / z.nrows() as f64;
    anti.max(trace)
}

/// Deviation of the ambient tangent `x` at the unitary point `u` from the
/// tangent space of SU(n): `u⁻¹ x` must be anti-Hermitian and traceless.
pub fn su_tangent_defect(u: &UnitaryMatrix, x: &CMat) -> f64 {
    su_algebra_defect(&(u.matrix().adjoint() * x))
}

/// Exponential of an anti-Hermitian matrix through the eigendecomposition of
/// the Hermitian matrix `-i z`; the result is unitary to roundoff.
pub fn exp_antihermitian(z: &CMat) -> Result<CMat, MatError> {
    let n = z.nrows();
    if z.ncols() != n {
        return Err(MatError::NotSquare {
            rows: z.nrows(),
            cols: z.ncols(),
        });
    }
    let h = z * Complex64::new(0.0, -1.0);
    let se =
        SymmetricEigen::try_new(h, 1e-14, EIG_MAX_ITER).ok_or(MatError::EigenSolverFailed {
            iterations: EIG_MAX_ITER,
            best_residual: f64::INFINITY,
        })?;
    let v = &se.eigenvectors;
    let phases = CVec::from_iterator(n, se.eigenvalues.iter().map(|&l| Complex64::cis(l)));
    Ok(v * CMat::from_diagonal(&phases) * v.adjoint())
}

/// An n x n complex matrix checked to be unitary at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    m: CMat,
}

impl UnitaryMatrix {
    /// Wraps `m` after checking `max |U†U - I| < tol`.
    pub fn try_new(m: CMat, tol: f64) -> Result<Self, MatError> {
        if m.nrows() != m.ncols() {
            return Err(MatError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(MatError::DimensionTooSmall { dim: 0, min: 1 });
        }
        let defect = unitarity_defect(&m);
        if defect >= tol {
            return Err(MatError::NotUnitary { defect, tol });
        }
        Ok(Self { m })
    }

    /// [`Self::try_new`] with the default unitarity tolerance.
    pub fn try_new_default(m: CMat) -> Result<Self, MatError> {
        Self::try_new(m, tol::UNITARITY)
    }

    /// Wraps a matrix known to be unitary by construction.
    pub(crate) fn new_unchecked(m: CMat) -> Self {
        debug_assert!(
            unitarity_defect(&m) < 1e-7,
            "new_unchecked on a non-unitary matrix"
        );
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    /// The adjoint, which is also the exact inverse.
    pub fn inverse(&self) -> UnitaryMatrix {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.m.determinant()
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.m)
    }

    /// `|det - 1|`, the deviation from SU(n).
    pub fn det_one_defect(&self) -> f64 {
        (self.determinant() - c_re(1.0)).norm()
    }

    /// Checks membership in SU(n) within `det_tol` on top of unitarity.
    pub fn require_special(&self, det_tol: f64) -> Result<(), MatError> {
        let defect = self.det_one_defect();
        if defect >= det_tol {
            return Err(MatError::DeterminantNotOne {
                defect,
                tol: det_tol,
            });
        }
        Ok(())
    }
}

/// A point of the Weyl alcove: xi_j >= 0 with sum(xi) = pi.  Component `j`
/// is half the circular gap between neighbouring eigenphases of the SU(n)
/// element the point describes.
#[derive(Debug, Clone, PartialEq)]
pub struct AlcovePoint {
    xi: Vec<f64>,
}

impl AlcovePoint {
    pub fn try_new(xi: Vec<f64>, tol: f64) -> Result<Self, MatError> {
        if xi.len() < 2 {
            return Err(MatError::DimensionTooSmall {
                dim: xi.len(),
                min: 2,
            });
        }
        let mut xi = xi;
        for (index, x) in xi.iter_mut().enumerate() {
            if *x < -tol {
                return Err(MatError::NegativeAlcoveComponent { index, value: *x });
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let sum: f64 = xi.iter().sum();
        if (sum - PI).abs() > tol {
            return Err(MatError::AlcoveSumNotPi { sum });
        }
        Ok(Self { xi })
    }

    /// [`Self::try_new`] with the default tolerance.
    pub fn try_new_default(xi: Vec<f64>) -> Result<Self, MatError> {
        Self::try_new(xi, tol::ALCOVE_POINT)
    }

    pub(crate) fn new_unchecked(xi: Vec<f64>) -> Self {
        Self { xi }
    }

    /// Number of components, equal to the matrix dimension n.
    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.xi
    }

    /// Smallest component; zero means a boundary (degenerate-spectrum) point.
    pub fn min_component(&self) -> f64 {
        self.xi.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Eigendecomposition of a unitary matrix: `U = V diag(e^{i phase}) V†`
/// with phases ascending in [0, 2pi) and orthonormal columns in `V`.
#[derive(Debug, Clone)]
pub struct UnitaryEig {
    pub phases: Vec<f64>,
    pub vectors: UnitaryMatrix,
}

/// Diagonalizes a unitary matrix.  See the module docs for the method.
pub fn eig_unitary(u: &UnitaryMatrix) -> Result<UnitaryEig, MatError> {
    eig_unitary_tol(u, tol::EIG_RECONSTRUCTION)
}

pub fn eig_unitary_tol(u: &UnitaryMatrix, accept_tol: f64) -> Result<UnitaryEig, MatError> {
    let n = u.dim();
    let m = u.matrix();
    let x = (m + m.adjoint()) * c_re(0.5);
    let y = (m - m.adjoint()) * Complex64::new(0.0, -0.5);

    let mut best_residual = f64::INFINITY;
    let mut iterations = 0;
    for &t in PROBE_ANGLES.iter() {
        iterations += EIG_MAX_ITER;
        let h = &x * c_re(t.cos()) + &y * c_re(t.sin());
        let Some(se) = SymmetricEigen::try_new(h, 1e-15, EIG_MAX_ITER) else {
            continue;
        };
        let v = se.eigenvectors;

        // Rayleigh quotients against U itself, normalized to the unit circle.
        let uv = m * &v;
        let mut lambdas = Vec::with_capacity(n);
        for k in 0..n {
            let lam: Complex64 = v
                .column(k)
                .iter()
                .zip(uv.column(k).iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            lambdas.push(lam / c_re(lam.norm().max(f64::MIN_POSITIVE)));
        }
        let mut residual = 0.0_f64;
        for k in 0..n {
            for i in 0..n {
                residual = residual.max((uv[(i, k)] - lambdas[k] * v[(i, k)]).norm());
            }
        }
        if residual < accept_tol {
            let mut order: Vec<usize> = (0..n).collect();
            let phases: Vec<f64> = lambdas
                .iter()
                .map(|l| {
                    let mut p = l.arg();
                    if p < 0.0 {
                        p += TAU;
                    }
                    if p >= TAU {
                        p = 0.0;
                    }
                    p
                })
                .collect();
            order.sort_by(|&i, &j| phases[i].partial_cmp(&phases[j]).unwrap());
            let sorted_phases: Vec<f64> = order.iter().map(|&i| phases[i]).collect();
            let mut vectors = CMat::zeros(n, n);
            for (dst, &src) in order.iter().enumerate() {
                vectors.set_column(dst, &v.column(src));
            }
            return Ok(UnitaryEig {
                phases: sorted_phases,
                vectors: UnitaryMatrix::new_unchecked(vectors),
            });
        }
        best_residual = best_residual.min(residual);
    }
    Err(MatError::EigenSolverFailed {
        iterations,
        best_residual,
    })
}

/// The diagonal SU(n) element parameterized by an alcove point:
/// `d_11 = e^{(2i/n) sum_j j xi_j}`, `d_kk = e^{2i sum_{j<k} xi_j} d_11`.
pub fn delta_of_xi(xi: &AlcovePoint) -> UnitaryMatrix {
    let n = xi.dim();
    let comps = xi.components();
    let phase11 = (2.0 / n as f64)
        * comps
            .iter()
            .enumerate()
            .map(|(j, &x)| (j + 1) as f64 * x)
            .sum::<f64>();
    let mut partial = 0.0;
    let diag = CVec::from_iterator(
        n,
        (0..n).map(|k| {
            if k > 0 {
                partial += comps[k - 1];
            }
            Complex64::cis(phase11 + 2.0 * partial)
        }),
    );
    UnitaryMatrix::new_unchecked(CMat::from_diagonal(&diag))
}

/// The fundamental weight of su(n) with index `k`, as a real diagonal matrix:
/// the first `k` diagonal entries are `1 - k/n`, the rest `-k/n`.
pub fn fundamental_weight(n: usize, k: usize) -> Result<CMat, MatError> {
    if n < 2 {
        return Err(MatError::DimensionTooSmall { dim: n, min: 2 });
    }
    if k < 1 || k > n - 1 {
        return Err(MatError::IndexOutOfRange {
            index: k,
            max: n - 1,
        });
    }
    let ratio = k as f64 / n as f64;
    let diag = CVec::from_iterator(
        n,
        (0..n).map(|j| c_re(if j < k { 1.0 - ratio } else { -ratio })),
    );
    Ok(CMat::from_diagonal(&diag))
}

/// Alcove form of a special-unitary matrix: `eta C eta⁻¹ = delta(xi)`.
#[derive(Debug, Clone)]
pub struct AlcoveForm {
    pub xi: AlcovePoint,
    pub eta: UnitaryMatrix,
    /// Index (0-based) of the sorted eigenphase the first alcove slot anchors to.
    pub shift: usize,
}

/// Brings `C` in SU(n) to the alcove form `C = eta⁻¹ delta(xi) eta` with the
/// unique alcove point `xi`.
///
/// The sorted eigenphases determine the circular half-gaps; each cyclic shift
/// of the gap vector is a candidate alcove point, and the accepted shift is
/// the (smallest) one whose `delta` reproduces the eigenphase sequence with
/// the first diagonal entry anchored correctly.  Degenerate spectra land on
/// the alcove boundary with an arbitrary orthonormal diagonalizer; callers
/// that need distinct eigenvalues must check [`is_regular`] themselves.
pub fn alcove_reduce(c: &UnitaryMatrix) -> Result<AlcoveForm, MatError> {
    alcove_reduce_tol(c, tol::SU_DET, tol::ALCOVE_MATCH, tol::EIG_RECONSTRUCTION)
}

pub fn alcove_reduce_tol(
    c: &UnitaryMatrix,
    det_tol: f64,
    match_tol: f64,
    eig_tol: f64,
) -> Result<AlcoveForm, MatError> {
    c.require_special(det_tol)?;
    let n = c.dim();
    let eig = eig_unitary_tol(c, eig_tol)?;
    let p = &eig.phases;

    // Circular half-gaps between consecutive sorted phases.
    let mut gaps = Vec::with_capacity(n);
    for j in 0..n {
        let next = if j + 1 < n { p[j + 1] } else { p[0] + TAU };
        gaps.push(0.5 * (next - p[j]));
    }

    let mut best_mismatch = f64::INFINITY;
    for shift in 0..n {
        let xi: Vec<f64> = (0..n).map(|j| gaps[(shift + j) % n]).collect();
        let anchor = (2.0 / n as f64)
            * xi.iter()
                .enumerate()
                .map(|(j, &x)| (j + 1) as f64 * x)
                .sum::<f64>();
        // The anchor must hit the eigenphase the shift starts from, and the
        // remaining entries then reproduce the phase sequence by construction
        // of the gaps; check the whole sequence anyway.
        let mut mismatch = circular_distance(anchor, p[shift]);
        let mut partial = 0.0;
        for k in 1..n {
            partial += xi[k - 1];
            mismatch = mismatch.max(circular_distance(
                anchor + 2.0 * partial,
                p[(shift + k) % n],
            ));
        }
        if mismatch < match_tol {
            let mut rows = CMat::zeros(n, n);
            for k in 0..n {
                rows.set_column(k, &eig.vectors.matrix().column((shift + k) % n));
            }
            let mut eta = rows.adjoint();
            // Normalize det(eta) to 1 by rescaling the first row; this keeps
            // eta C eta⁻¹ diagonal because the rescaling is diagonal.
            let det = eta.determinant();
            let scale = det.conj() / c_re(det.norm().max(f64::MIN_POSITIVE));
            for j in 0..n {
                eta[(0, j)] *= scale;
            }
            return Ok(AlcoveForm {
                xi: AlcovePoint::new_unchecked(xi),
                eta: UnitaryMatrix::new_unchecked(eta),
                shift,
            });
        }
        best_mismatch = best_mismatch.min(mismatch);
    }
    Err(MatError::AlcoveAnchorMismatch {
        best: best_mismatch,
    })
}

/// The j-th spectral function (1-based) of a special-unitary matrix: the j-th
/// component of its alcove point.  Conjugation-invariant.
pub fn spectral_function(c: &UnitaryMatrix, j: usize) -> Result<f64, MatError> {
    let n = c.dim();
    if j < 1 || j > n {
        return Err(MatError::IndexOutOfRange { index: j, max: n });
    }
    Ok(alcove_reduce(c)?.xi.components()[j - 1])
}

/// True iff all pairwise circular distances between eigenphases exceed `gap_tol`.
///
/// An eigensolver failure means regularity cannot be certified, so `false`
/// is returned.
pub fn is_regular(c: &UnitaryMatrix, gap_tol: f64) -> bool {
    let Ok(eig) = eig_unitary(c) else {
        return false;
    };
    let p = &eig.phases;
    let n = p.len();
    if n < 2 {
        return true;
    }
    // Phases are sorted, so the minimal pairwise circular distance is the
    // minimal adjacent gap including the wrap-around.
    let mut min_gap = p[0] + TAU - p[n - 1];
    for j in 0..n - 1 {
        min_gap = min_gap.min(p[j + 1] - p[j]);
    }
    min_gap > gap_tol
}
