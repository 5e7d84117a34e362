//! Deterministic seeded samplers for randomized verification sweeps.
//!
//! Every sweep derives one sub-seed per sample from the master seed, so
//! samples are independent and the sweep order (or a parallel fan-out) does
//! not change the stream any sample sees.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::classical::{CouplingParams, DarbouxPoint};
use crate::double::DoublePoint;
use crate::matkernel::{AlcovePoint, CMat, UnitaryMatrix};

/// SplitMix64 finalizer over (master, index); the documented sub-seed scheme.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for sample `index` of a sweep seeded with `master`.
pub fn rng_for(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(master, index))
}

/// Dense complex matrix with entries uniform in the unit square.
pub fn random_complex_matrix<R: Rng>(rng: &mut R, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Unitary matrix from the QR factorization of a random complex matrix, with
/// the R-diagonal phases absorbed into the columns.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> UnitaryMatrix {
    let m = random_complex_matrix(rng, n);
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / Complex64::new(d.norm(), 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::try_new(q, 1e-10).expect("QR produced a non-unitary Q")
}

/// Special-unitary matrix: a random unitary with the determinant phase spread
/// evenly over all columns.
pub fn random_special_unitary<R: Rng>(rng: &mut R, n: usize) -> UnitaryMatrix {
    let u = random_unitary(rng, n);
    let det = u.determinant();
    let correction = Complex64::cis(-det.arg() / n as f64);
    UnitaryMatrix::try_new(u.into_matrix() * correction, 1e-10)
        .expect("determinant correction broke unitarity")
}

/// Random element of su(n): anti-Hermitian and traceless.
pub fn random_su_algebra<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let g = random_complex_matrix(rng, n);
    let mut z = (&g - g.adjoint()) * Complex64::new(0.5, 0.0);
    let t = z.trace() / Complex64::new(n as f64, 0.0);
    for i in 0..n {
        z[(i, i)] -= t;
    }
    z
}

/// Random pair of special-unitary matrices.
pub fn random_double_point<R: Rng>(rng: &mut R, n: usize) -> DoublePoint {
    let a = random_special_unitary(rng, n);
    let b = random_special_unitary(rng, n);
    DoublePoint::try_new(a, b).expect("sampled factors are special unitary")
}

/// Interior alcove point: circular half-gaps built from floored exponential
/// weights, so every component stays well away from the boundary.
pub fn random_alcove_interior<R: Rng>(rng: &mut R, n: usize) -> AlcovePoint {
    let weights: Vec<f64> = (0..n)
        .map(|_| 0.05 - (1.0 - rng.gen_range(0.0..1.0_f64)).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    let xi: Vec<f64> = weights
        .iter()
        .map(|w| std::f64::consts::PI * w / total)
        .collect();
    AlcovePoint::try_new_default(xi).expect("normalized gaps form an alcove point")
}

/// Interior Darboux point: the simplex coordinates `gamma_j - g` are a random
/// positive partition filling between 20% and 80% of the available sum `M`,
/// and the angles are uniform on the torus.
pub fn random_interior_darboux<R: Rng>(rng: &mut R, params: &CouplingParams) -> DarbouxPoint {
    let n = params.n();
    let g = params.g();
    let m = params.big_m();
    let weights: Vec<f64> = (0..n)
        .map(|_| 0.05 - (1.0 - rng.gen_range(0.0..1.0_f64)).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    let fill = rng.gen_range(0.2..0.8);
    let gamma: Vec<f64> = weights[..n - 1]
        .iter()
        .map(|w| g + m * fill * w / total)
        .collect();
    let theta: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..TAU)).collect();
    DarbouxPoint::new(gamma, theta).expect("sampled point is interior")
}

/// Like [`random_interior_darboux`] but with bounded simplex weights, so the
/// point keeps a guaranteed distance of at least `0.1 M / n` from every
/// facet.  Finite-difference checks use this: their truncation error grows
/// with an inverse power of the facet distance.
pub fn random_interior_darboux_safe<R: Rng>(rng: &mut R, params: &CouplingParams) -> DarbouxPoint {
    let n = params.n();
    let g = params.g();
    let m = params.big_m();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = weights.iter().sum();
    let fill = rng.gen_range(0.3..0.7);
    let gamma: Vec<f64> = weights[..n - 1]
        .iter()
        .map(|w| g + m * fill * w / total)
        .collect();
    let theta: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..TAU)).collect();
    DarbouxPoint::new(gamma, theta).expect("sampled point is interior")
}

/// Random real tangent components (d gamma, d theta) with entries in [-1, 1].
pub fn random_darboux_tangent<R: Rng>(rng: &mut R, dim: usize) -> (Vec<f64>, Vec<f64>) {
    (
        (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}
