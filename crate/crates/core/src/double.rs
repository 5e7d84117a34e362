//! The internally fused double SU(n) x SU(n): group-valued moment map,
//! invariant 2-form, torus flows generated by the spectral Hamiltonians, and
//! the explicit lift of a local phase-space point onto the moment-map
//! constraint surface.
//!
//! Reduced-space objects (the quotient by the isotropy group) are never
//! materialized; every identity is checked upstairs through expressions that
//! are invariant under the residual freedom of the construction.

use num_complex::Complex64;

use crate::classical::{
    delta_of_gamma, lax_matrix, w_factors, ClassicalError, CouplingParams, DarbouxPoint,
    SpherePoint,
};
use crate::matkernel::{
    self, alcove_reduce, c_re, is_regular, su_algebra_defect, su_tangent_defect, CMat, CVec,
    MatError, UnitaryMatrix,
};
use crate::tol;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DoubleError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error("tangents live at different base points (deviation {deviation:.3e})")]
    MismatchedBasePoints { deviation: f64 },
    #[error("factor dimensions differ: {a}x{a} vs {b}x{b}")]
    FactorDimensionMismatch { a: usize, b: usize },
    #[error("matrix is not regular: an eigenphase pair is closer than {gap_tol:.3e}")]
    NotRegular { gap_tol: f64 },
    #[error("sin(y)/sin(ny) = {value:.6e} is not positive")]
    NonPositiveRatio { value: f64 },
    #[error("Lie algebra element has su(n) defect {defect:.3e}")]
    InvalidLieElement { defect: f64 },
    #[error("tangent component {which} has su(n) defect {defect:.3e}")]
    InvalidTangent { which: &'static str, defect: f64 },
}

/// A point (A, B) of the double, both factors special-unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublePoint {
    a: UnitaryMatrix,
    b: UnitaryMatrix,
}

impl DoublePoint {
    pub fn try_new(a: UnitaryMatrix, b: UnitaryMatrix) -> Result<Self, DoubleError> {
        if a.dim() != b.dim() {
            return Err(DoubleError::FactorDimensionMismatch {
                a: a.dim(),
                b: b.dim(),
            });
        }
        a.require_special(tol::SU_DET)?;
        b.require_special(tol::SU_DET)?;
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.dim()
    }

    pub fn a(&self) -> &UnitaryMatrix {
        &self.a
    }

    pub fn b(&self) -> &UnitaryMatrix {
        &self.b
    }

    fn deviation_from(&self, other: &DoublePoint) -> f64 {
        matkernel::max_abs_diff(self.a.matrix(), other.a.matrix())
            .max(matkernel::max_abs_diff(self.b.matrix(), other.b.matrix()))
    }
}

/// Ambient tangent (X_A, X_B) at a double point; both translated components
/// `A⁻¹ X_A`, `B⁻¹ X_B` are anti-Hermitian and traceless.
#[derive(Debug, Clone)]
pub struct DoubleTangent {
    base: DoublePoint,
    xa: CMat,
    xb: CMat,
}

impl DoubleTangent {
    pub fn try_new(base: DoublePoint, xa: CMat, xb: CMat) -> Result<Self, DoubleError> {
        let da = su_tangent_defect(base.a(), &xa);
        if da > tol::TANGENT_DEFECT {
            return Err(DoubleError::InvalidTangent {
                which: "X_A",
                defect: da,
            });
        }
        let db = su_tangent_defect(base.b(), &xb);
        if db > tol::TANGENT_DEFECT {
            return Err(DoubleError::InvalidTangent {
                which: "X_B",
                defect: db,
            });
        }
        Ok(Self { base, xa, xb })
    }

    /// Tangent from Lie algebra data by left translation: `X_A = A zeta_a`,
    /// `X_B = B zeta_b`.
    pub fn from_lie(base: DoublePoint, zeta_a: &CMat, zeta_b: &CMat) -> Result<Self, DoubleError> {
        for z in [zeta_a, zeta_b] {
            let defect = su_algebra_defect(z);
            if defect > tol::TANGENT_DEFECT {
                return Err(DoubleError::InvalidLieElement { defect });
            }
        }
        let xa = base.a().matrix() * zeta_a;
        let xb = base.b().matrix() * zeta_b;
        Ok(Self { base, xa, xb })
    }

    pub fn base(&self) -> &DoublePoint {
        &self.base
    }

    pub fn xa(&self) -> &CMat {
        &self.xa
    }

    pub fn xb(&self) -> &CMat {
        &self.xb
    }
}

/// The group-valued moment map `mu(A, B) = A B A⁻¹ B⁻¹`.
pub fn moment_map(p: &DoublePoint) -> UnitaryMatrix {
    let a = p.a().matrix();
    let b = p.b().matrix();
    UnitaryMatrix::new_unchecked(a * b * a.adjoint() * b.adjoint())
}

/// The distinguished moment-map value
/// `mu_0 = diag(e^{2iy}, ..., e^{2iy}, e^{2(1-n)iy})`, strongly regular for
/// `0 < |y| < pi/n`.
#[derive(Debug, Clone)]
pub struct Mu0 {
    n: usize,
    y: f64,
    value: UnitaryMatrix,
}

impl Mu0 {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn value(&self) -> &UnitaryMatrix {
        &self.value
    }

    /// Expected eigenphases in [0, 2pi), ascending: `2y` with multiplicity
    /// n-1 and `2(1-n)y` (mod 2pi).
    pub fn eigenphases(&self) -> Vec<f64> {
        let tau = std::f64::consts::TAU;
        let mut phases: Vec<f64> = (0..self.n - 1)
            .map(|_| (2.0 * self.y).rem_euclid(tau))
            .collect();
        phases.push((2.0 * (1.0 - self.n as f64) * self.y).rem_euclid(tau));
        phases.sort_by(|x, y| x.partial_cmp(y).unwrap());
        phases
    }
}

pub fn mu0(n: usize, y: f64) -> Result<Mu0, DoubleError> {
    if n < 2 {
        return Err(DoubleError::Mat(MatError::DimensionTooSmall {
            dim: n,
            min: 2,
        }));
    }
    if !(y.abs() > 0.0 && y.abs() < std::f64::consts::PI / n as f64) {
        return Err(DoubleError::Classical(ClassicalError::CouplingOutOfRange {
            y,
            n,
        }));
    }
    let mut diag: Vec<Complex64> = vec![Complex64::cis(2.0 * y); n - 1];
    diag.push(Complex64::cis(2.0 * (1.0 - n as f64) * y));
    let value = UnitaryMatrix::new_unchecked(CMat::from_diagonal(&CVec::from_vec(diag)));
    Ok(Mu0 { n, y, value })
}

/// Invariant pairing `<P, Q> = -(1/a) Re tr(P Q)` on su(n).
fn pairing(a_const: f64, p: &CMat, q: &CMat) -> f64 {
    -(p * q).trace().re / a_const
}

/// The invariant 2-form of the double evaluated on two tangents at the same
/// point, with the wedge convention `<alpha ^ beta>(X, Y) = <alpha(X),
/// beta(Y)> - <alpha(Y), beta(X)>`:
///
/// `omega = (1/a) <A⁻¹dA ^ dB B⁻¹> + (1/a) <dA A⁻¹ ^ B⁻¹dB>
///          - (1/a) <(AB)⁻¹d(AB) ^ (BA)⁻¹d(BA)>`.
pub fn omega_eval(
    a_const: f64,
    t1: &DoubleTangent,
    t2: &DoubleTangent,
) -> Result<f64, DoubleError> {
    let deviation = t1.base().deviation_from(t2.base());
    if deviation > tol::BASE_POINT_MATCH {
        return Err(DoubleError::MismatchedBasePoints { deviation });
    }
    let a = t1.base().a().matrix();
    let b = t1.base().b().matrix();
    let a_inv = a.adjoint();
    let b_inv = b.adjoint();
    let ab_inv = &b_inv * &a_inv;
    let ba_inv = &a_inv * &b_inv;

    let term = |x: &DoubleTangent, y: &DoubleTangent| -> f64 {
        let alpha1 = &a_inv * x.xa(); // A⁻¹ dA
        let beta1 = y.xb() * &b_inv; // dB B⁻¹
        let alpha2 = x.xa() * &a_inv; // dA A⁻¹
        let beta2 = &b_inv * y.xb(); // B⁻¹ dB
        let alpha3 = &ab_inv * (x.xa() * b + a * x.xb()); // (AB)⁻¹ d(AB)
        let beta3 = &ba_inv * (y.xb() * a + b * y.xa()); // (BA)⁻¹ d(BA)
        (pairing(a_const, &alpha1, &beta1) + pairing(a_const, &alpha2, &beta2)
            - pairing(a_const, &alpha3, &beta3))
            / a_const
    };
    Ok(term(t1, t2) - term(t2, t1))
}

/// The vector field of the conjugation action: `zeta_D(A, B) =
/// (zeta A - A zeta, zeta B - B zeta)`.
pub fn conjugation_field(p: &DoublePoint, zeta: &CMat) -> Result<DoubleTangent, DoubleError> {
    let defect = su_algebra_defect(zeta);
    if defect > tol::TANGENT_DEFECT {
        return Err(DoubleError::InvalidLieElement { defect });
    }
    let a = p.a().matrix();
    let b = p.b().matrix();
    Ok(DoubleTangent {
        base: p.clone(),
        xa: zeta * a - a * zeta,
        xb: zeta * b - b * zeta,
    })
}

/// Differential of the moment map by the product rule on `A B A⁻¹ B⁻¹`.
pub fn mu_differential(p: &DoublePoint, x: &DoubleTangent) -> CMat {
    let a = p.a().matrix();
    let b = p.b().matrix();
    let a_inv = a.adjoint();
    let b_inv = b.adjoint();
    x.xa() * b * &a_inv * &b_inv + a * x.xb() * &a_inv * &b_inv
        - a * b * &a_inv * x.xa() * &a_inv * &b_inv
        - a * b * &a_inv * &b_inv * x.xb() * &b_inv
}

/// Both sides of the infinitesimal moment-map identity
/// `omega(zeta_D, X) = (1/2) <mu⁻¹ Dmu(X) + Dmu(X) mu⁻¹, zeta>`,
/// evaluated with the literal normalizations of the 2-form and the pairing.
/// The two sides may differ by a constant overall factor depending on the
/// normalization convention; [`A2Evaluation::ratio`] exposes it per sample.
#[derive(Debug, Clone, Copy)]
pub struct A2Evaluation {
    pub omega_side: f64,
    pub pairing_side: f64,
}

impl A2Evaluation {
    pub fn residual(&self) -> f64 {
        (self.omega_side - self.pairing_side).abs()
    }

    pub fn ratio(&self) -> f64 {
        self.omega_side / self.pairing_side
    }
}

pub fn axiom_a2_eval(
    a_const: f64,
    p: &DoublePoint,
    zeta: &CMat,
    x: &DoubleTangent,
) -> Result<A2Evaluation, DoubleError> {
    let zeta_d = conjugation_field(p, zeta)?;
    let omega_side = omega_eval(a_const, &zeta_d, x)?;
    let mu = moment_map(p);
    let dmu = mu_differential(p, x);
    let mu_inv = mu.matrix().adjoint();
    let combined = &mu_inv * &dmu + &dmu * &mu_inv;
    let pairing_side = 0.5 * pairing(a_const, &combined, zeta);
    Ok(A2Evaluation {
        omega_side,
        pairing_side,
    })
}

/// Deterministic unitary completion: the last column is `v_hat`, the others
/// orthonormalize the standard basis vectors (dropping the one most parallel
/// to `v_hat`) in index order.
pub(crate) fn complete_with_last_column(v_hat: &CVec) -> CMat {
    let n = v_hat.len();
    let mut k_star = 0;
    for j in 1..n {
        if v_hat[j].norm() > v_hat[k_star].norm() {
            k_star = j;
        }
    }
    let mut cols: Vec<CVec> = Vec::with_capacity(n - 1);
    for j in 0..n {
        if j == k_star {
            continue;
        }
        let mut w = CVec::zeros(n);
        w[j] = c_re(1.0);
        // Two Gram-Schmidt sweeps against v_hat and the accepted columns.
        for _ in 0..2 {
            let overlap: Complex64 = v_hat.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            w -= CVec::from_iterator(n, v_hat.iter().map(|&a| a * overlap));
            for col in &cols {
                let overlap: Complex64 = col.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
                w -= CVec::from_iterator(n, col.iter().map(|&a| a * overlap));
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        w /= c_re(norm);
        cols.push(w);
    }
    let mut eta = CMat::zeros(n, n);
    for (idx, col) in cols.iter().enumerate() {
        eta.set_column(idx, col);
    }
    eta.set_column(n - 1, v_hat);
    eta
}

/// The constraint-surface lift of a local phase-space point:
/// `(A, B) = (eta⁻¹ L eta, eta⁻¹ delta eta)` where `eta` is a unitary whose
/// last column is the normalized vector `v_j = sqrt(sin y / sin ny) W_j`.
#[derive(Debug, Clone)]
pub struct Lift {
    pub point: DoublePoint,
    pub v_hat: CVec,
}

pub fn lift_to_double(p: &DarbouxPoint, params: &CouplingParams) -> Result<Lift, DoubleError> {
    let (l, delta, v_hat) = lift_ingredients(p, params)?;
    let eta = complete_with_last_column(&v_hat);
    let eta_inv = eta.adjoint();
    let a = UnitaryMatrix::try_new(&eta_inv * l.matrix() * &eta, tol::UNITARITY)?;
    let b = UnitaryMatrix::try_new(&eta_inv * delta.matrix() * &eta, tol::UNITARITY)?;
    Ok(Lift {
        point: DoublePoint::try_new(a, b)?,
        v_hat,
    })
}

fn lift_ingredients(
    p: &DarbouxPoint,
    params: &CouplingParams,
) -> Result<(UnitaryMatrix, UnitaryMatrix, CVec), DoubleError> {
    let n = params.n();
    let y = params.y();
    let ratio = y.sin() / (n as f64 * y).sin();
    if ratio.is_nan() || ratio <= 0.0 {
        return Err(DoubleError::NonPositiveRatio { value: ratio });
    }
    let l = lax_matrix(p, params)?;
    let delta = delta_of_gamma(p.gamma(), params);
    let w = w_factors(&delta, y)?;
    let mut v: Vec<f64> = w.iter().map(|wj| ratio.sqrt() * wj).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    let v_hat = CVec::from_iterator(n, v.iter().map(|&x| c_re(x)));
    Ok((l, delta, v_hat))
}

/// Max-norm residual of the rank-one form of the moment-map constraint,
/// `L delta L⁻¹ delta⁻¹ = e^{2iy} (I - (1 - e^{-2niy}) v_hat v_hat†)`.
/// The expression involves only `v_hat`, so it is independent of how the
/// completion of `eta` is chosen.
pub fn constraint_residual(p: &DarbouxPoint, params: &CouplingParams) -> Result<f64, DoubleError> {
    let (l, delta, v_hat) = lift_ingredients(p, params)?;
    let n = params.n();
    let y = params.y();
    let lhs = l.matrix() * delta.matrix() * l.matrix().adjoint() * delta.matrix().adjoint();
    let coeff = c_re(1.0) - Complex64::cis(-2.0 * n as f64 * y);
    let mut target = CMat::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            target[(i, j)] -= coeff * v_hat[i] * v_hat[j].conj();
        }
    }
    target *= Complex64::cis(2.0 * y);
    Ok(matkernel::max_abs_diff(&lhs, &target))
}

fn phase_pair_diag(n: usize, j: usize, t: f64, sign: f64) -> CMat {
    let mut diag = vec![c_re(1.0); n];
    diag[j - 1] = Complex64::cis(sign * t);
    diag[j] = Complex64::cis(-sign * t);
    CMat::from_diagonal(&CVec::from_vec(diag))
}

fn torus_flow(
    point: &DoublePoint,
    j: usize,
    t: f64,
    alpha: bool,
) -> Result<DoublePoint, DoubleError> {
    let n = point.n();
    if j < 1 || j > n - 1 {
        return Err(DoubleError::Mat(MatError::IndexOutOfRange {
            index: j,
            max: n - 1,
        }));
    }
    let anchor = if alpha { point.a() } else { point.b() };
    if !is_regular(anchor, tol::REGULAR_GAP) {
        return Err(DoubleError::NotRegular {
            gap_tol: tol::REGULAR_GAP,
        });
    }
    let eta = alcove_reduce(anchor)?.eta;
    // The alpha flow rotates B with phases (e^{it}, e^{-it}) at slots
    // (j, j+1); the beta flow rotates A with the opposite signs.
    let sign = if alpha { 1.0 } else { -1.0 };
    let d = phase_pair_diag(n, j, t, sign);
    let rotation = eta.matrix().adjoint() * d * eta.matrix();
    if alpha {
        let b = UnitaryMatrix::new_unchecked(point.b().matrix() * rotation);
        Ok(DoublePoint {
            a: point.a().clone(),
            b,
        })
    } else {
        let a = UnitaryMatrix::new_unchecked(point.a().matrix() * rotation);
        Ok(DoublePoint {
            a,
            b: point.b().clone(),
        })
    }
}

/// Integral curve of the j-th spectral Hamiltonian of the A factor: A is
/// unchanged and B is right-multiplied by `eta(A)⁻¹ diag(..., e^{it},
/// e^{-it}, ...) eta(A)` with the phase pair at slots (j, j+1).  2pi-periodic.
pub fn torus_flow_alpha(p: &DoublePoint, j: usize, t: f64) -> Result<DoublePoint, DoubleError> {
    torus_flow(p, j, t, true)
}

/// Mirror flow for the B factor: B is unchanged and A is right-multiplied by
/// `eta(B)⁻¹ diag(..., e^{-it}, e^{it}, ...) eta(B)`.
pub fn torus_flow_beta(p: &DoublePoint, j: usize, t: f64) -> Result<DoublePoint, DoubleError> {
    torus_flow(p, j, t, false)
}

/// The anti-automorphism `m(A, B) = (conj(B), conj(A))`; an involution.
pub fn involution_m(p: &DoublePoint) -> DoublePoint {
    DoublePoint {
        a: UnitaryMatrix::new_unchecked(p.b().matrix().map(|z| z.conj())),
        b: UnitaryMatrix::new_unchecked(p.a().matrix().map(|z| z.conj())),
    }
}

/// The anti-symplectic involution of the oscillator space:
/// `Gamma(u_1, ..., u_{n-1}, u_n) = (conj(u_{n-1}), ..., conj(u_1), conj(u_n))`.
pub fn involution_gamma(u: &SpherePoint) -> SpherePoint {
    let c = u.components();
    let n = c.len();
    let mut out = Vec::with_capacity(n);
    for j in (0..n - 1).rev() {
        out.push(c[j].conj());
    }
    out.push(c[n - 1].conj());
    SpherePoint::from_components(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{action_map, derive_params, embed_sphere};
    use crate::matkernel::max_abs_diff;
    use crate::sample;
    use std::f64::consts::{PI, TAU};

    fn params_n(n: usize) -> CouplingParams {
        derive_params(n, 2, 1.0).unwrap()
    }

    #[test]
    fn moment_map_trivial_cases() {
        let mut rng = sample::rng_for(31, 0);
        let a = sample::random_special_unitary(&mut rng, 3);
        let p = DoublePoint::try_new(a.clone(), a.clone()).unwrap();
        assert!(max_abs_diff(moment_map(&p).matrix(), &CMat::identity(3, 3)) < 1e-13);

        let id = UnitaryMatrix::try_new_default(CMat::identity(3, 3)).unwrap();
        let b = sample::random_special_unitary(&mut rng, 3);
        let p = DoublePoint::try_new(id, b).unwrap();
        assert!(max_abs_diff(moment_map(&p).matrix(), &CMat::identity(3, 3)) < 1e-13);
    }

    #[test]
    fn moment_map_equivariance() {
        let mut rng = sample::rng_for(31, 1);
        let p = sample::random_double_point(&mut rng, 3);
        let eta = sample::random_special_unitary(&mut rng, 3);
        let e = eta.matrix();
        let conj = DoublePoint::try_new(
            UnitaryMatrix::new_unchecked(e * p.a().matrix() * e.adjoint()),
            UnitaryMatrix::new_unchecked(e * p.b().matrix() * e.adjoint()),
        )
        .unwrap();
        let lhs = moment_map(&conj);
        let rhs = e * moment_map(&p).matrix() * e.adjoint();
        assert!(max_abs_diff(lhs.matrix(), &rhs) < 1e-12);
    }

    #[test]
    fn mu0_examples() {
        let m = mu0(2, PI / 4.0).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let expect = CMat::from_diagonal(&CVec::from_row_slice(&[i, -i]));
        assert!(max_abs_diff(m.value().matrix(), &expect) < 1e-14);

        let m = mu0(3, PI / 6.0).unwrap();
        let expect = CMat::from_diagonal(&CVec::from_row_slice(&[
            Complex64::cis(PI / 3.0),
            Complex64::cis(PI / 3.0),
            Complex64::cis(-2.0 * PI / 3.0),
        ]));
        assert!(max_abs_diff(m.value().matrix(), &expect) < 1e-14);
        assert!(m.value().det_one_defect() < 1e-14);

        assert!(mu0(3, PI / 3.0).is_err());
        assert!(mu0(3, 0.0).is_err());
    }

    #[test]
    fn omega_is_antisymmetric() {
        let mut rng = sample::rng_for(37, 0);
        let p = sample::random_double_point(&mut rng, 3);
        let za = sample::random_su_algebra(&mut rng, 3);
        let zb = sample::random_su_algebra(&mut rng, 3);
        let x = DoubleTangent::from_lie(p.clone(), &za, &zb).unwrap();
        let za2 = sample::random_su_algebra(&mut rng, 3);
        let zb2 = sample::random_su_algebra(&mut rng, 3);
        let y = DoubleTangent::from_lie(p.clone(), &za2, &zb2).unwrap();
        let a_const = params_n(3).a();
        assert!(omega_eval(a_const, &x, &x).unwrap().abs() < 1e-12);
        let xy = omega_eval(a_const, &x, &y).unwrap();
        let yx = omega_eval(a_const, &y, &x).unwrap();
        assert!((xy + yx).abs() < 1e-12);
    }

    #[test]
    fn omega_is_conjugation_invariant() {
        let mut rng = sample::rng_for(37, 1);
        let p = sample::random_double_point(&mut rng, 3);
        let za = sample::random_su_algebra(&mut rng, 3);
        let zb = sample::random_su_algebra(&mut rng, 3);
        let x = DoubleTangent::from_lie(p.clone(), &za, &zb).unwrap();
        let za2 = sample::random_su_algebra(&mut rng, 3);
        let zb2 = sample::random_su_algebra(&mut rng, 3);
        let y = DoubleTangent::from_lie(p.clone(), &za2, &zb2).unwrap();
        let a_const = params_n(3).a();
        let before = omega_eval(a_const, &x, &y).unwrap();

        let eta = sample::random_special_unitary(&mut rng, 3);
        let e = eta.matrix();
        let moved = DoublePoint::try_new(
            UnitaryMatrix::new_unchecked(e * p.a().matrix() * e.adjoint()),
            UnitaryMatrix::new_unchecked(e * p.b().matrix() * e.adjoint()),
        )
        .unwrap();
        let push = |t: &DoubleTangent| {
            DoubleTangent::try_new(
                moved.clone(),
                e * t.xa() * e.adjoint(),
                e * t.xb() * e.adjoint(),
            )
            .unwrap()
        };
        let after = omega_eval(a_const, &push(&x), &push(&y)).unwrap();
        assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn omega_rejects_mismatched_bases() {
        let mut rng = sample::rng_for(37, 2);
        let p = sample::random_double_point(&mut rng, 3);
        let q = sample::random_double_point(&mut rng, 3);
        let z = sample::random_su_algebra(&mut rng, 3);
        let x = DoubleTangent::from_lie(p, &z, &z).unwrap();
        let y = DoubleTangent::from_lie(q, &z, &z).unwrap();
        assert!(matches!(
            omega_eval(1.0, &x, &y),
            Err(DoubleError::MismatchedBasePoints { .. })
        ));
    }

    #[test]
    fn lift_hits_the_constraint_surface() {
        for n in 2..=5 {
            let params = params_n(n);
            let mut rng = sample::rng_for(41, n as u64);
            let p = sample::random_interior_darboux(&mut rng, &params);
            let residual = constraint_residual(&p, &params).unwrap();
            assert!(residual < 1e-8, "n={n} residual={residual:.3e}");

            // Moment-map value of the lifted point matches mu0 exactly.
            let lift = lift_to_double(&p, &params).unwrap();
            let mu = moment_map(&lift.point);
            let target = mu0(n, params.y()).unwrap();
            assert!(
                max_abs_diff(mu.matrix(), target.value().matrix()) < 1e-8,
                "n={n}"
            );
        }
    }

    #[test]
    fn lift_moment_map_spectrum() {
        let params = params_n(3);
        let mut rng = sample::rng_for(41, 17);
        let p = sample::random_interior_darboux(&mut rng, &params);
        let lift = lift_to_double(&p, &params).unwrap();
        let mu = moment_map(&lift.point);
        let eig = matkernel::eig_unitary(&mu).unwrap();
        let expected = mu0(3, params.y()).unwrap().eigenphases();
        for (observed, expect) in eig.phases.iter().zip(&expected) {
            assert!(
                matkernel::circular_distance(*observed, *expect) < 1e-8,
                "{observed} vs {expect}"
            );
        }
    }

    #[test]
    fn lift_recovers_actions_and_positions() {
        let params = params_n(3);
        let mut rng = sample::rng_for(43, 0);
        let p = sample::random_interior_darboux(&mut rng, &params);
        let lift = lift_to_double(&p, &params).unwrap();
        let scale = 2.0 / params.a();

        let actions = action_map(&p, &params).unwrap();
        let xi_a = alcove_reduce(lift.point.a()).unwrap().xi;
        for (k, expect) in actions.iter().enumerate() {
            assert!((scale * xi_a.components()[k] - expect).abs() < 1e-9);
        }
        let xi_b = alcove_reduce(lift.point.b()).unwrap().xi;
        for (k, expect) in p.gamma().iter().enumerate() {
            assert!((scale * xi_b.components()[k] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn constraint_residual_ignores_completion_choice() {
        let params = params_n(3);
        let mut rng = sample::rng_for(43, 1);
        let p = sample::random_interior_darboux(&mut rng, &params);
        let direct = constraint_residual(&p, &params).unwrap();

        // Re-complete eta through a different deterministic scheme (Fourier
        // column seeds instead of standard basis vectors) and compare the
        // through-the-lift residual.
        let (l, delta, v_hat) = lift_ingredients(&p, &params).unwrap();
        let n = params.n();
        let mut residuals = Vec::new();
        for alt in [false, true] {
            let eta = if alt {
                let mut seeds = CMat::zeros(n, n);
                for j in 0..n {
                    for k in 0..n {
                        seeds[(j, k)] = Complex64::cis(TAU * (j * k) as f64 / n as f64)
                            / c_re((n as f64).sqrt());
                    }
                }
                // Orthonormalize seed columns against v_hat, dropping the
                // most parallel one, mirroring the production scheme.
                let mut k_star = 0;
                let mut best = 0.0;
                for k in 0..n {
                    let overlap: Complex64 = v_hat
                        .iter()
                        .zip(seeds.column(k).iter())
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    if overlap.norm() > best {
                        best = overlap.norm();
                        k_star = k;
                    }
                }
                let mut cols: Vec<CVec> = Vec::new();
                for k in 0..n {
                    if k == k_star {
                        continue;
                    }
                    let mut w = CVec::from_column_slice(seeds.column(k).as_slice());
                    for _ in 0..2 {
                        let ov: Complex64 =
                            v_hat.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
                        w -= CVec::from_iterator(n, v_hat.iter().map(|&a| a * ov));
                        for col in &cols {
                            let ov: Complex64 =
                                col.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
                            w -= CVec::from_iterator(n, col.iter().map(|&a| a * ov));
                        }
                    }
                    let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    w /= c_re(norm);
                    cols.push(w);
                }
                let mut eta = CMat::zeros(n, n);
                for (idx, col) in cols.iter().enumerate() {
                    eta.set_column(idx, col);
                }
                eta.set_column(n - 1, &v_hat);
                eta
            } else {
                complete_with_last_column(&v_hat)
            };
            let a = eta.adjoint() * l.matrix() * &eta;
            let b = eta.adjoint() * delta.matrix() * &eta;
            let mu = &a * &b * a.adjoint() * b.adjoint();
            let target = mu0(n, params.y()).unwrap();
            residuals.push(max_abs_diff(&mu, target.value().matrix()));
        }
        assert!((residuals[0] - residuals[1]).abs() < 1e-12);
        assert!(direct < 1e-8);
    }

    #[test]
    fn constraint_residual_grows_off_mu0() {
        let params = params_n(3);
        let mut rng = sample::rng_for(43, 2);
        let p = sample::random_interior_darboux(&mut rng, &params);
        let lift = lift_to_double(&p, &params).unwrap();
        let mu = moment_map(&lift.point);
        let base = max_abs_diff(mu.matrix(), mu0(3, params.y()).unwrap().value().matrix());
        let r1 = max_abs_diff(
            mu.matrix(),
            mu0(3, params.y() + 1e-4).unwrap().value().matrix(),
        );
        let r2 = max_abs_diff(
            mu.matrix(),
            mu0(3, params.y() + 2e-4).unwrap().value().matrix(),
        );
        assert!(base < 1e-10);
        assert!(r1 > 1e-5 && r2 > r1);
        // Linear growth: doubling the offset doubles the residual.
        assert!((r2 / r1 - 2.0).abs() < 0.05);
    }

    #[test]
    fn torus_flows_are_periodic_and_preserve_mu() {
        let params = params_n(3);
        let mut rng = sample::rng_for(47, 0);
        let p = sample::random_interior_darboux(&mut rng, &params);
        let point = lift_to_double(&p, &params).unwrap().point;
        let mu_before = moment_map(&point);

        for j in 1..=2 {
            let cycled = torus_flow_alpha(&point, j, TAU).unwrap();
            assert!(cycled.deviation_from(&point) < 1e-12, "alpha j={j}");
            let cycled = torus_flow_beta(&point, j, TAU).unwrap();
            assert!(cycled.deviation_from(&point) < 1e-12, "beta j={j}");

            let moved = torus_flow_alpha(&point, j, 0.7).unwrap();
            assert!(
                max_abs_diff(moment_map(&moved).matrix(), mu_before.matrix()) < 1e-10,
                "alpha mu j={j}"
            );
            // The anchor factor is untouched, so its spectrum is trivially
            // preserved; check the flow really moved the other factor.
            assert!(max_abs_diff(moved.a().matrix(), point.a().matrix()) < 1e-15);
            assert!(max_abs_diff(moved.b().matrix(), point.b().matrix()) > 1e-3);

            let moved = torus_flow_beta(&point, j, 0.7).unwrap();
            assert!(
                max_abs_diff(moment_map(&moved).matrix(), mu_before.matrix()) < 1e-10,
                "beta mu j={j}"
            );
        }
    }

    #[test]
    fn torus_flows_commute_within_a_family() {
        let params = params_n(4);
        let mut rng = sample::rng_for(47, 1);
        let p = sample::random_interior_darboux(&mut rng, &params);
        let point = lift_to_double(&p, &params).unwrap().point;
        let ab = torus_flow_alpha(&torus_flow_alpha(&point, 1, 0.4).unwrap(), 3, 1.1).unwrap();
        let ba = torus_flow_alpha(&torus_flow_alpha(&point, 3, 1.1).unwrap(), 1, 0.4).unwrap();
        assert!(ab.deviation_from(&ba) < 1e-10);
        let ab = torus_flow_beta(&torus_flow_beta(&point, 2, 0.4).unwrap(), 1, 1.1).unwrap();
        let ba = torus_flow_beta(&torus_flow_beta(&point, 1, 1.1).unwrap(), 2, 0.4).unwrap();
        assert!(ab.deviation_from(&ba) < 1e-10);
    }

    #[test]
    fn torus_flow_requires_regular_anchor() {
        let id = UnitaryMatrix::try_new_default(CMat::identity(3, 3)).unwrap();
        let mut rng = sample::rng_for(47, 2);
        let b = sample::random_special_unitary(&mut rng, 3);
        let p = DoublePoint::try_new(id, b).unwrap();
        assert!(matches!(
            torus_flow_alpha(&p, 1, 0.5),
            Err(DoubleError::NotRegular { .. })
        ));
    }

    #[test]
    fn a2_zero_zeta_gives_zero() {
        let mut rng = sample::rng_for(53, 0);
        let p = sample::random_double_point(&mut rng, 2);
        let z = CMat::zeros(2, 2);
        let za = sample::random_su_algebra(&mut rng, 2);
        let zb = sample::random_su_algebra(&mut rng, 2);
        let x = DoubleTangent::from_lie(p.clone(), &za, &zb).unwrap();
        let eval = axiom_a2_eval(1.3, &p, &z, &x).unwrap();
        assert_eq!(eval.omega_side, 0.0);
        assert_eq!(eval.pairing_side, 0.0);
    }

    #[test]
    fn a2_ratio_is_constant_across_samples() {
        let params = params_n(2);
        let mut ratios = Vec::new();
        for idx in 0..6 {
            let mut rng = sample::rng_for(53, idx + 1);
            let p = sample::random_double_point(&mut rng, 2);
            let zeta = sample::random_su_algebra(&mut rng, 2);
            let za = sample::random_su_algebra(&mut rng, 2);
            let zb = sample::random_su_algebra(&mut rng, 2);
            let x = DoubleTangent::from_lie(p.clone(), &za, &zb).unwrap();
            let eval = axiom_a2_eval(params.a(), &p, &zeta, &x).unwrap();
            if eval.pairing_side.abs() > 1e-6 {
                ratios.push(eval.ratio());
            }
        }
        assert!(ratios.len() >= 3);
        let first = ratios[0];
        for r in &ratios {
            assert!((r - first).abs() < 1e-9, "ratios {ratios:?}");
        }
        // Self-pairing: X = zeta_D makes the omega side vanish by
        // antisymmetry only when zeta_D pairs with itself.
        let mut rng = sample::rng_for(53, 99);
        let p = sample::random_double_point(&mut rng, 2);
        let zeta = sample::random_su_algebra(&mut rng, 2);
        let zd = conjugation_field(&p, &zeta).unwrap();
        let eval = axiom_a2_eval(params.a(), &p, &zeta, &zd).unwrap();
        assert!(eval.omega_side.abs() < 1e-12);
    }

    #[test]
    fn mu_differential_matches_finite_differences() {
        let mut rng = sample::rng_for(59, 0);
        let p = sample::random_double_point(&mut rng, 3);
        let za = sample::random_su_algebra(&mut rng, 3);
        let zb = sample::random_su_algebra(&mut rng, 3);
        let x = DoubleTangent::from_lie(p.clone(), &za, &zb).unwrap();
        let analytic = mu_differential(&p, &x);

        let h = 1e-6;
        let curve = |s: f64| -> CMat {
            let ea = matkernel::exp_antihermitian(&(&za * c_re(s))).unwrap();
            let eb = matkernel::exp_antihermitian(&(&zb * c_re(s))).unwrap();
            let a = p.a().matrix() * ea;
            let b = p.b().matrix() * eb;
            &a * &b * a.adjoint() * b.adjoint()
        };
        let fd = (curve(h) - curve(-h)) / c_re(2.0 * h);
        assert!(max_abs_diff(&analytic, &fd) < 1e-8);
    }

    #[test]
    fn involutions_square_to_identity() {
        let mut rng = sample::rng_for(61, 0);
        let p = sample::random_double_point(&mut rng, 3);
        let twice = involution_m(&involution_m(&p));
        assert_eq!(twice.a().matrix(), p.a().matrix());
        assert_eq!(twice.b().matrix(), p.b().matrix());

        let params = params_n(3);
        let dp = sample::random_interior_darboux(&mut rng, &params);
        let u = embed_sphere(&dp, &params).unwrap();
        let twice = involution_gamma(&involution_gamma(&u));
        assert_eq!(twice.components(), u.components());
        assert!((involution_gamma(&u).chi() - u.chi()).abs() < 1e-15);
    }
}
