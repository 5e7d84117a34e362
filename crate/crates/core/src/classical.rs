//! The local III_b system: coupling parameters, Darboux coordinates, the
//! unitary Lax matrix and its Hamiltonian, the sphere embedding, the action
//! map into the Delzant polytope, and finite-difference Poisson-bracket /
//! RK4 flow harnesses.
//!
//! Conventions.  A point carries coordinates `(gamma, theta)` with `gamma`
//! strictly inside the scaled polytope `gamma_j >= g`, `sum gamma <= M +
//! (n-1) g`.  The position matrix is the diagonal `delta(a gamma / 2) =
//! exp(-i a sum_k gamma_k Lambda_k)` (so `gamma` is minus the particle
//! positions up to the traceless shift), and the angle matrix is
//! `Theta(tau) = exp(-i sum_k theta_k (E_kk - E_{k+1,k+1}))` with
//! `tau_k = e^{i theta_k}`.  The symplectic form is `sum d theta_k ^ d
//! gamma_k`, giving the bracket `{F,G} = sum_k (dF/dtheta_k dG/dgamma_k -
//! dF/dgamma_k dG/dtheta_k)` and Hamilton's equations `dgamma/dt =
//! dh/dtheta`, `dtheta/dt = -dh/dgamma`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::matkernel::{self, c_re, CMat, CVec, MatError, UnitaryMatrix};
use crate::tol;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassicalError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("particle number n={n} must be at least 2")]
    ParticleNumberTooSmall { n: usize },
    #[error("coupling y={y} outside the admissible range 0 < |y| < pi/{n}")]
    CouplingOutOfRange { y: f64, n: usize },
    #[error("coordinate vectors must both have length n-1={expected}, got {got}")]
    CoordinateLength { expected: usize, got: usize },
    #[error("point is outside the closed polytope (facet {facet}, violation {violation:.3e})")]
    OutsidePolytope { facet: usize, violation: f64 },
    #[error("point is within {distance:.3e} of facet {facet} (refusal radius {margin:.3e})")]
    FacetTooClose {
        facet: usize,
        distance: f64,
        margin: f64,
    },
    #[error("diagonal entries {j} and {k} coincide within {separation:.3e}")]
    SingularConfiguration { j: usize, k: usize, separation: f64 },
    #[error("W-factor bracket ({j},{k}) is not a positive real: {re:.6e} + {im:.6e} i")]
    NonPositiveFactor {
        j: usize,
        k: usize,
        re: f64,
        im: f64,
    },
    #[error("Lax denominator ({j},{l}) vanishes within {value:.3e}")]
    DenominatorSingular { j: usize, l: usize, value: f64 },
    #[error("Hamiltonian radicand ({j},{k}) is negative: {value:.6e}")]
    NegativeRadicand { j: usize, k: usize, value: f64 },
}

/// Coupling data of the III_b system.  Stores `(n, a, y)`; the dual pair
/// `(g, M)` with `g = 2|y|/a` and `M = (2/a)(pi - n |y|)` is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    n: usize,
    a: f64,
    y: f64,
}

/// Derives `(a, y)` from integer `M` and positive `g`:
/// `a = 2 pi / (M + n g)`, `y = pi g / (M + n g)` (positive sign).
pub fn derive_params(n: usize, big_m: u32, g: f64) -> Result<CouplingParams, ClassicalError> {
    derive_params_signed(n, big_m, g, false)
}

/// [`derive_params`] with an explicit sign choice for `y`.
pub fn derive_params_signed(
    n: usize,
    big_m: u32,
    g: f64,
    negative_y: bool,
) -> Result<CouplingParams, ClassicalError> {
    if n < 2 {
        return Err(ClassicalError::ParticleNumberTooSmall { n });
    }
    if big_m == 0 {
        return Err(ClassicalError::NonPositiveParameter {
            name: "M",
            value: 0.0,
        });
    }
    if g.is_nan() || g <= 0.0 {
        return Err(ClassicalError::NonPositiveParameter {
            name: "g",
            value: g,
        });
    }
    let denom = big_m as f64 + n as f64 * g;
    let a = 2.0 * PI / denom;
    let y = PI * g / denom * if negative_y { -1.0 } else { 1.0 };
    Ok(CouplingParams { n, a, y })
}

impl CouplingParams {
    /// Raw constructor from `(n, a, y)` for classical-only work.
    pub fn from_ay(n: usize, a: f64, y: f64) -> Result<Self, ClassicalError> {
        if n < 2 {
            return Err(ClassicalError::ParticleNumberTooSmall { n });
        }
        if a.is_nan() || a <= 0.0 {
            return Err(ClassicalError::NonPositiveParameter {
                name: "a",
                value: a,
            });
        }
        if !(y.abs() > 0.0 && y.abs() < PI / n as f64) {
            return Err(ClassicalError::CouplingOutOfRange { y, n });
        }
        Ok(Self { n, a, y })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Signed coupling.
    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn abs_y(&self) -> f64 {
        self.y.abs()
    }

    /// `g = 2 |y| / a`.
    pub fn g(&self) -> f64 {
        2.0 * self.y.abs() / self.a
    }

    /// `M = (2/a)(pi - n |y|)`, as a real number.
    pub fn big_m(&self) -> f64 {
        2.0 / self.a * (PI - self.n as f64 * self.y.abs())
    }

    pub fn polytope(&self) -> Polytope {
        Polytope::new(self.n, self.g(), self.big_m())
    }
}

/// The scaled Delzant polytope `gamma_j >= g`, `sum gamma <= M + (n-1) g`
/// in R^{n-1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polytope {
    n: usize,
    g: f64,
    big_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

impl Polytope {
    pub fn new(n: usize, g: f64, big_m: f64) -> Self {
        Self { n, g, big_m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    /// Nonempty iff `M > 0`.
    pub fn is_empty(&self) -> bool {
        self.big_m.is_nan() || self.big_m <= 0.0
    }

    /// Upper bound of the sum facet, `M + (n-1) g`.
    pub fn sum_upper(&self) -> f64 {
        self.big_m + (self.n as f64 - 1.0) * self.g
    }

    /// Signed distances to all facets (positive inside): `gamma_j - g` for
    /// each coordinate, then `M + (n-1) g - sum gamma`.
    pub fn facet_distances(&self, point: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = point.iter().map(|&x| x - self.g).collect();
        d.push(self.sum_upper() - point.iter().sum::<f64>());
        d
    }

    /// Classification with a tolerance band of width `tol` around the facets.
    pub fn membership(&self, point: &[f64], tol: f64) -> Membership {
        let d = self.facet_distances(point);
        if d.iter().any(|&x| x < -tol) {
            Membership::Outside
        } else if d.iter().any(|&x| x.abs() <= tol) {
            Membership::Boundary
        } else {
            Membership::Interior
        }
    }

    /// Barycenter-like interior point: `gamma_j = g + M/n`.
    pub fn centroid(&self) -> Vec<f64> {
        vec![self.g + self.big_m / self.n as f64; self.n - 1]
    }
}

/// A point of the local phase space in Darboux coordinates.  `gamma` and
/// `theta` have length n-1; angles are understood mod 2 pi but stored as
/// given so flows stay continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxPoint {
    gamma: Vec<f64>,
    theta: Vec<f64>,
}

impl DarbouxPoint {
    pub fn new(gamma: Vec<f64>, theta: Vec<f64>) -> Result<Self, ClassicalError> {
        if gamma.is_empty() || gamma.len() != theta.len() {
            return Err(ClassicalError::CoordinateLength {
                expected: gamma.len().max(1),
                got: theta.len(),
            });
        }
        Ok(Self { gamma, theta })
    }

    pub fn n(&self) -> usize {
        self.gamma.len() + 1
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

/// Diagonal position matrix `delta(a gamma / 2) = exp(-i a sum gamma_k Lambda_k)`.
pub fn delta_of_gamma(gamma: &[f64], params: &CouplingParams) -> UnitaryMatrix {
    let n = params.n();
    assert_eq!(gamma.len(), n - 1, "gamma must have length n-1");
    let a = params.a();
    let weighted: f64 = gamma
        .iter()
        .enumerate()
        .map(|(k, &x)| (k + 1) as f64 * x)
        .sum();
    let mut tail: f64 = gamma.iter().sum();
    let diag = CVec::from_iterator(
        n,
        (0..n).map(|m| {
            if m > 0 {
                tail -= gamma[m - 1];
            }
            Complex64::cis(-a * (tail - weighted / n as f64))
        }),
    );
    UnitaryMatrix::new_unchecked(CMat::from_diagonal(&diag))
}

/// Diagonal angle matrix `Theta(tau)`; entry m is `e^{-i p_m}` for the
/// momenta of [`momenta`].
pub fn theta_matrix(theta: &[f64]) -> UnitaryMatrix {
    let p = momenta(theta);
    let diag = CVec::from_iterator(p.len(), p.iter().map(|&pm| Complex64::cis(-pm)));
    UnitaryMatrix::new_unchecked(CMat::from_diagonal(&diag))
}

/// Momenta `p` encoded by the angle coordinates: `p_1 = theta_1`,
/// `p_m = theta_m - theta_{m-1}`, `p_n = -theta_{n-1}`; they sum to zero.
pub fn momenta(theta: &[f64]) -> Vec<f64> {
    let n = theta.len() + 1;
    (0..n)
        .map(|m| {
            let lead = if m < n - 1 { theta[m] } else { 0.0 };
            let trail = if m > 0 { theta[m - 1] } else { 0.0 };
            lead - trail
        })
        .collect()
}

/// All W-factors of a regular diagonal unitary at coupling `y`:
/// `W_j = prod_{k != j} sqrt((e^{iy} d_j - e^{-iy} d_k) / (d_j - d_k))`.
///
/// Each bracket factor must be a positive real; a violation means the input
/// left the domain where the factors are defined.
pub fn w_factors(delta: &UnitaryMatrix, y: f64) -> Result<Vec<f64>, ClassicalError> {
    let n = delta.dim();
    let d: Vec<Complex64> = (0..n).map(|j| delta.matrix()[(j, j)]).collect();
    let ep = Complex64::cis(y);
    let em = Complex64::cis(-y);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut w = 1.0_f64;
        for k in 0..n {
            if k == j {
                continue;
            }
            let denom = d[j] - d[k];
            if denom.norm() < tol::SINGULAR_SEPARATION {
                return Err(ClassicalError::SingularConfiguration {
                    j: j + 1,
                    k: k + 1,
                    separation: denom.norm(),
                });
            }
            let bracket = (ep * d[j] - em * d[k]) / denom;
            if bracket.re <= 0.0 || bracket.im.abs() > tol::BRACKET_IMAG {
                return Err(ClassicalError::NonPositiveFactor {
                    j: j + 1,
                    k: k + 1,
                    re: bracket.re,
                    im: bracket.im,
                });
            }
            w *= bracket.re.sqrt();
        }
        out.push(w);
    }
    Ok(out)
}

/// Single W-factor, 1-based index `j`.
pub fn w_factor(delta: &UnitaryMatrix, y: f64, j: usize) -> Result<f64, ClassicalError> {
    let n = delta.dim();
    if j < 1 || j > n {
        return Err(ClassicalError::Mat(MatError::IndexOutOfRange {
            index: j,
            max: n,
        }));
    }
    Ok(w_factors(delta, y)?[j - 1])
}

fn require_interior(
    p: &DarbouxPoint,
    params: &CouplingParams,
    margin: f64,
) -> Result<(), ClassicalError> {
    let poly = params.polytope();
    for (facet, dist) in poly.facet_distances(p.gamma()).into_iter().enumerate() {
        if dist < 0.0 {
            return Err(ClassicalError::OutsidePolytope {
                facet: facet + 1,
                violation: -dist,
            });
        }
        if dist < margin {
            return Err(ClassicalError::FacetTooClose {
                facet: facet + 1,
                distance: dist,
                margin,
            });
        }
    }
    Ok(())
}

/// Tolerances threaded through operator evaluation; each field defaults to
/// the corresponding [`crate::tol`] constant.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub unitarity_tol: f64,
    pub eig_tol: f64,
    pub alcove_match_tol: f64,
    pub facet_margin: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            unitarity_tol: tol::UNITARITY,
            eig_tol: tol::EIG_RECONSTRUCTION,
            alcove_match_tol: tol::ALCOVE_MATCH,
            facet_margin: tol::FACET_MARGIN,
        }
    }
}

/// The unitary Lax matrix
/// `L_jl = (e^{iy} - e^{-iy}) / (e^{iy} d_j / d_l - e^{-iy}) W_j(d, y) W_l(d, -y) Theta_l`
/// evaluated at `delta(a gamma / 2)` and `Theta(tau)`.
///
/// Refuses points within [`tol::FACET_MARGIN`] of a polytope facet; see
/// [`lax_matrix_opts`] for configurable tolerances.
pub fn lax_matrix(
    p: &DarbouxPoint,
    params: &CouplingParams,
) -> Result<UnitaryMatrix, ClassicalError> {
    lax_matrix_opts(p, params, &EvalOptions::default())
}

pub fn lax_matrix_opts(
    p: &DarbouxPoint,
    params: &CouplingParams,
    opts: &EvalOptions,
) -> Result<UnitaryMatrix, ClassicalError> {
    let margin = opts.facet_margin;
    let n = params.n();
    if p.n() != n {
        return Err(ClassicalError::CoordinateLength {
            expected: n - 1,
            got: p.gamma().len(),
        });
    }
    require_interior(p, params, margin)?;

    let y = params.y();
    let delta = delta_of_gamma(p.gamma(), params);
    let w_plus = w_factors(&delta, y)?;
    let w_minus = w_factors(&delta, -y)?;
    let theta = theta_matrix(p.theta());

    let d: Vec<Complex64> = (0..n).map(|j| delta.matrix()[(j, j)]).collect();
    let t: Vec<Complex64> = (0..n).map(|l| theta.matrix()[(l, l)]).collect();
    let ep = Complex64::cis(y);
    let em = Complex64::cis(-y);
    let num = ep - em;

    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        for col in 0..n {
            let denom = ep * d[j] / d[col] - em;
            if denom.norm() < tol::SINGULAR_SEPARATION {
                return Err(ClassicalError::DenominatorSingular {
                    j: j + 1,
                    l: col + 1,
                    value: denom.norm(),
                });
            }
            l[(j, col)] = num / denom * c_re(w_plus[j] * w_minus[col]) * t[col];
        }
    }
    UnitaryMatrix::try_new(l, opts.unitarity_tol).map_err(ClassicalError::from)
}

/// The local Hamiltonian
/// `H = sum_j cos(p_j) prod_{k != j} sqrt(1 - sin^2 y / sin^2((x_j - x_k) a / 2))`,
/// evaluated directly from the coordinates (independently of the Lax matrix).
pub fn local_hamiltonian(p: &DarbouxPoint, params: &CouplingParams) -> Result<f64, ClassicalError> {
    let n = params.n();
    if p.n() != n {
        return Err(ClassicalError::CoordinateLength {
            expected: n - 1,
            got: p.gamma().len(),
        });
    }
    let a = params.a();
    let sin2y = params.y().sin().powi(2);

    // a(x_j - x_l) = -a sum_{k=j..l-1} gamma_k for j < l; prefix sums of gamma.
    let mut prefix = vec![0.0_f64; n];
    for (k, &gk) in p.gamma().iter().enumerate() {
        prefix[k + 1] = prefix[k] + gk;
    }
    let momenta = momenta(p.theta());

    let mut h = 0.0;
    for j in 0..n {
        let mut product = 1.0;
        for k in 0..n {
            if k == j {
                continue;
            }
            let half_diff = 0.5 * a * (prefix[j.max(k)] - prefix[j.min(k)]);
            let radicand = 1.0 - sin2y / half_diff.sin().powi(2);
            if radicand < 0.0 {
                return Err(ClassicalError::NegativeRadicand {
                    j: j + 1,
                    k: k + 1,
                    value: radicand,
                });
            }
            product *= radicand.sqrt();
        }
        h += momenta[j].cos() * product;
    }
    Ok(h)
}

/// A vector on the level set `sum |u_k|^2 = M` of the oscillator moment map.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    u: Vec<Complex64>,
}

impl SpherePoint {
    pub fn from_components(u: Vec<Complex64>) -> Self {
        Self { u }
    }

    pub fn components(&self) -> &[Complex64] {
        &self.u
    }

    /// The moment-map value `chi = sum |u_k|^2`.
    pub fn chi(&self) -> f64 {
        self.u.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// The embedding `u_j = e^{i theta_j} sqrt(gamma_j - g)` (j < n),
/// `u_n = sqrt(M + (n-1) g - sum gamma)`; the closed polytope is allowed.
pub fn embed_sphere(
    p: &DarbouxPoint,
    params: &CouplingParams,
) -> Result<SpherePoint, ClassicalError> {
    let n = params.n();
    if p.n() != n {
        return Err(ClassicalError::CoordinateLength {
            expected: n - 1,
            got: p.gamma().len(),
        });
    }
    let poly = params.polytope();
    let dist = poly.facet_distances(p.gamma());
    // Clamp roundoff-level negatives on the closed polytope; reject beyond.
    let clamp = |d: f64, facet: usize| -> Result<f64, ClassicalError> {
        if d < -1e-12 {
            Err(ClassicalError::OutsidePolytope {
                facet,
                violation: -d,
            })
        } else {
            Ok(d.max(0.0))
        }
    };
    let mut u = Vec::with_capacity(n);
    for (j, (&d, &angle)) in dist.iter().zip(p.theta()).enumerate() {
        let r = clamp(d, j + 1)?.sqrt();
        u.push(Complex64::cis(angle) * c_re(r));
    }
    u.push(c_re(clamp(dist[n - 1], n)?.sqrt()));
    Ok(SpherePoint::from_components(u))
}

/// The action map `alpha_k = (2/a) xi_k(L(p))` for `k = 1..n-1`; its image
/// lies in the closed polytope.
pub fn action_map(p: &DarbouxPoint, params: &CouplingParams) -> Result<Vec<f64>, ClassicalError> {
    action_map_opts(p, params, &EvalOptions::default())
}

pub fn action_map_opts(
    p: &DarbouxPoint,
    params: &CouplingParams,
    opts: &EvalOptions,
) -> Result<Vec<f64>, ClassicalError> {
    let l = lax_matrix_opts(p, params, opts)?;
    let form = matkernel::alcove_reduce_tol(&l, tol::SU_DET, opts.alcove_match_tol, opts.eig_tol)?;
    let scale = 2.0 / params.a();
    Ok(form.xi.components()[..params.n() - 1]
        .iter()
        .map(|&x| scale * x)
        .collect())
}

#[derive(Debug, Clone, Copy)]
enum Coord {
    Gamma,
    Theta,
}

fn shifted(p: &DarbouxPoint, coord: Coord, k: usize, delta: f64) -> DarbouxPoint {
    let mut gamma = p.gamma().to_vec();
    let mut theta = p.theta().to_vec();
    match coord {
        Coord::Gamma => gamma[k] += delta,
        Coord::Theta => theta[k] += delta,
    }
    DarbouxPoint { gamma, theta }
}

fn fd_partial<F>(
    f: &F,
    p: &DarbouxPoint,
    coord: Coord,
    k: usize,
    step: f64,
) -> Result<f64, ClassicalError>
where
    F: Fn(&DarbouxPoint) -> Result<f64, ClassicalError>,
{
    let plus = f(&shifted(p, coord, k, step))?;
    let minus = f(&shifted(p, coord, k, -step))?;
    Ok((plus - minus) / (2.0 * step))
}

/// Central-difference Poisson bracket
/// `{f,g} = sum_k (df/dtheta_k dg/dgamma_k - df/dgamma_k dg/dtheta_k)`.
pub fn poisson_bracket_fd<F, G>(
    f: F,
    g: G,
    p: &DarbouxPoint,
    step: f64,
) -> Result<f64, ClassicalError>
where
    F: Fn(&DarbouxPoint) -> Result<f64, ClassicalError>,
    G: Fn(&DarbouxPoint) -> Result<f64, ClassicalError>,
{
    let dim = p.gamma().len();
    let mut bracket = 0.0;
    for k in 0..dim {
        let f_theta = fd_partial(&f, p, Coord::Theta, k, step)?;
        let g_gamma = fd_partial(&g, p, Coord::Gamma, k, step)?;
        let f_gamma = fd_partial(&f, p, Coord::Gamma, k, step)?;
        let g_theta = fd_partial(&g, p, Coord::Theta, k, step)?;
        bracket += f_theta * g_gamma - f_gamma * g_theta;
    }
    Ok(bracket)
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Central-difference step for the Hamiltonian gradient.
    pub grad_step: f64,
    /// Interior margin at which the trajectory is truncated.
    pub facet_margin: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            grad_step: tol::FLOW_GRAD_STEP,
            facet_margin: tol::FACET_MARGIN,
        }
    }
}

/// RK4 trajectory; `exited` marks truncation at the polytope boundary.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<DarbouxPoint>,
    pub exited: bool,
}

/// Classical RK4 on Hamilton's equations `dgamma/dt = dh/dtheta`,
/// `dtheta/dt = -dh/dgamma` with central-difference gradients.
///
/// The trajectory is truncated (with `exited = true`) as soon as a step
/// leaves the interior margin or a stage evaluation fails.
pub fn flow_rk4<H>(
    h: H,
    p0: &DarbouxPoint,
    params: &CouplingParams,
    t_final: f64,
    dt: f64,
    opts: &FlowOptions,
) -> Result<Trajectory, ClassicalError>
where
    H: Fn(&DarbouxPoint) -> Result<f64, ClassicalError>,
{
    let dim = p0.gamma().len();
    require_interior(p0, params, opts.facet_margin)?;

    let field = |p: &DarbouxPoint| -> Result<(Vec<f64>, Vec<f64>), ClassicalError> {
        let mut dgamma = Vec::with_capacity(dim);
        let mut dtheta = Vec::with_capacity(dim);
        for k in 0..dim {
            dgamma.push(fd_partial(&h, p, Coord::Theta, k, opts.grad_step)?);
            dtheta.push(-fd_partial(&h, p, Coord::Gamma, k, opts.grad_step)?);
        }
        Ok((dgamma, dtheta))
    };

    let poly = params.polytope();
    let steps = (t_final / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    times.push(0.0);
    points.push(p0.clone());
    let mut current = p0.clone();
    let mut exited = false;

    'steps: for step_idx in 0..steps {
        let mut stage_points = [
            current.clone(),
            current.clone(),
            current.clone(),
            current.clone(),
        ];
        let mut k: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(4);
        let offsets = [0.0, 0.5 * dt, 0.5 * dt, dt];
        for s in 0..4 {
            if s > 0 {
                let (kg, kt) = &k[s - 1];
                let mut gamma = current.gamma().to_vec();
                let mut theta = current.theta().to_vec();
                for i in 0..dim {
                    gamma[i] += offsets[s] * kg[i];
                    theta[i] += offsets[s] * kt[i];
                }
                stage_points[s] = DarbouxPoint { gamma, theta };
            }
            match field(&stage_points[s]) {
                Ok(v) => k.push(v),
                Err(_) => {
                    exited = true;
                    break 'steps;
                }
            }
        }
        let mut gamma = current.gamma().to_vec();
        let mut theta = current.theta().to_vec();
        for i in 0..dim {
            gamma[i] += dt / 6.0 * (k[0].0[i] + 2.0 * k[1].0[i] + 2.0 * k[2].0[i] + k[3].0[i]);
            theta[i] += dt / 6.0 * (k[0].1[i] + 2.0 * k[1].1[i] + 2.0 * k[2].1[i] + k[3].1[i]);
        }
        let next = DarbouxPoint { gamma, theta };
        if poly
            .facet_distances(next.gamma())
            .iter()
            .any(|&d| d < opts.facet_margin)
        {
            exited = true;
            break;
        }
        current = next;
        times.push(dt * (step_idx + 1) as f64);
        points.push(current.clone());
    }

    Ok(Trajectory {
        times,
        points,
        exited,
    })
}
