//! Quantization lattice and closed-form joint spectra.
//!
//! The reduced Hilbert space is spanned by lattice points `nu` in Z_{>=0}^{n-1}
//! with `sum nu <= M`; the quantized action operators have joint spectrum
//! `nu + g` componentwise, and the commuting Hamiltonians take the values of
//! the elementary symmetric functions of the diagonal matrix
//! `exp(-i a sum_k (nu_k + g) Lambda_k)`.

use num_complex::Complex64;

use crate::classical::{derive_params, ClassicalError, CouplingParams, Polytope};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantumError {
    #[error(transparent)]
    Params(#[from] ClassicalError),
    #[error("state sum {sum} exceeds M = {big_m}")]
    StateSumTooLarge { sum: u32, big_m: u32 },
    #[error("state has {got} components, expected n-1 = {expected}")]
    StateLength { expected: usize, got: usize },
}

/// Coupling data with the quantization condition `M` a positive integer
/// built in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationData {
    n: usize,
    big_m: u32,
    g: f64,
    params: CouplingParams,
}

impl QuantizationData {
    pub fn new(n: usize, big_m: u32, g: f64) -> Result<Self, QuantumError> {
        let params = derive_params(n, big_m, g)?;
        Ok(Self {
            n,
            big_m,
            g,
            params,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn big_m(&self) -> u32 {
        self.big_m
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn params(&self) -> &CouplingParams {
        &self.params
    }

    pub fn polytope(&self) -> Polytope {
        self.params.polytope()
    }
}

/// A lattice state `nu` with `sum nu <= M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateIndex {
    nu: Vec<u32>,
}

impl StateIndex {
    pub fn try_new(nu: Vec<u32>, big_m: u32) -> Result<Self, QuantumError> {
        if nu.is_empty() {
            return Err(QuantumError::StateLength {
                expected: 1,
                got: 0,
            });
        }
        let sum: u32 = nu.iter().sum();
        if sum > big_m {
            return Err(QuantumError::StateSumTooLarge { sum, big_m });
        }
        Ok(Self { nu })
    }

    pub fn nu(&self) -> &[u32] {
        &self.nu
    }

    pub fn sum(&self) -> u32 {
        self.nu.iter().sum()
    }
}

/// All lattice states for given `(n, M)` in lexicographic order.
///
/// The count is the binomial coefficient `C(M + n - 1, n - 1)`.
pub fn enumerate_states(n: usize, big_m: u32) -> Vec<StateIndex> {
    assert!(n >= 2, "need n >= 2");
    assert!(big_m >= 1, "need M >= 1");
    let dim = n - 1;
    let mut out = Vec::new();
    let mut current = vec![0u32; dim];
    loop {
        out.push(StateIndex {
            nu: current.clone(),
        });
        // Lexicographic successor under the budget sum <= M.
        let mut pos = dim;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            current[pos] += 1;
            let sum: u32 = current.iter().sum();
            if sum <= big_m {
                break;
            }
            current[pos] = 0;
        }
    }
}

/// Exact binomial coefficient, used as the counting oracle.
pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut result: u64 = 1;
    for i in 0..k {
        result = result * (n - i) / (i + 1);
    }
    result
}

/// Joint spectrum of the quantized action operators at state `nu`:
/// componentwise `nu_k + g`.
pub fn action_spectrum(s: &StateIndex, g: f64) -> Vec<f64> {
    s.nu().iter().map(|&v| v as f64 + g).collect()
}

/// Elementary symmetric polynomials `e_1 .. e_n` of `values` through the
/// stable one-pass recurrence `e_r += v * e_{r-1}`.
pub fn elementary_symmetric(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut e = vec![Complex64::new(0.0, 0.0); n + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (count, &v) in values.iter().enumerate() {
        for r in (1..=count + 1).rev() {
            let prev = e[r - 1];
            e[r] += v * prev;
        }
    }
    e.remove(0);
    e
}

/// Diagonal entries of the spectral matrix
/// `exp(-i a sum_k (nu_k + g) Lambda_k)` for state `nu`.
pub fn spectral_matrix_diagonal(s: &StateIndex, q: &QuantizationData) -> Vec<Complex64> {
    let n = q.n();
    let a = q.params().a();
    let c: Vec<f64> = s.nu().iter().map(|&v| v as f64 + q.g()).collect();
    let weighted: f64 = c.iter().enumerate().map(|(k, &x)| (k + 1) as f64 * x).sum();
    let mut tail: f64 = c.iter().sum();
    (0..n)
        .map(|m| {
            if m > 0 {
                tail -= c[m - 1];
            }
            Complex64::cis(-a * (tail - weighted / n as f64))
        })
        .collect()
}

/// Eigenvalues of the commuting Hamiltonians at state `nu`: the elementary
/// symmetric functions `e_1 .. e_{n-1}` of the spectral matrix, with their
/// real parts alongside.
#[derive(Debug, Clone)]
pub struct HamiltonianEigenvalues {
    pub e: Vec<Complex64>,
    pub h_real: Vec<f64>,
}

pub fn hamiltonian_eigenvalues(s: &StateIndex, q: &QuantizationData) -> HamiltonianEigenvalues {
    let diag = spectral_matrix_diagonal(s, q);
    let mut e = elementary_symmetric(&diag);
    e.truncate(q.n() - 1);
    let h_real = e.iter().map(|z| z.re).collect();
    HamiltonianEigenvalues { e, h_real }
}

/// One row of the joint spectrum table.
#[derive(Debug, Clone)]
pub struct SpectrumRow {
    pub nu: Vec<u32>,
    pub actions: Vec<f64>,
    pub e: Vec<Complex64>,
    pub h_real: Vec<f64>,
}

/// Degeneracy statistics of a spectrum table.  Action tuples are exactly
/// injective; for the Hamiltonian tuples only the minimal pairwise distance
/// is reported, since their non-degeneracy is generic rather than guaranteed.
#[derive(Debug, Clone, Copy)]
pub struct DegeneracyReport {
    pub action_tuples_distinct: bool,
    pub min_h_distance: f64,
}

pub fn spectrum_table(q: &QuantizationData) -> (Vec<SpectrumRow>, DegeneracyReport) {
    let states = enumerate_states(q.n(), q.big_m());
    let rows: Vec<SpectrumRow> = states
        .iter()
        .map(|s| {
            let h = hamiltonian_eigenvalues(s, q);
            SpectrumRow {
                nu: s.nu().to_vec(),
                actions: action_spectrum(s, q.g()),
                e: h.e,
                h_real: h.h_real,
            }
        })
        .collect();

    // nu -> nu + g is injective, so distinctness of the integer tuples is
    // equivalent to distinctness of the action tuples.
    let mut sorted: Vec<&Vec<u32>> = rows.iter().map(|r| &r.nu).collect();
    sorted.sort();
    let action_tuples_distinct = sorted.windows(2).all(|w| w[0] != w[1]);

    let mut min_h_distance = f64::INFINITY;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let dist = rows[i]
                .h_real
                .iter()
                .zip(&rows[j].h_real)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            min_h_distance = min_h_distance.min(dist);
        }
    }
    (
        rows,
        DegeneracyReport {
            action_tuples_distinct,
            min_h_distance,
        },
    )
}

/// Exact lattice-side polytope containment: `nu_k + g >= g` always, and
/// `sum (nu_k + g) <= M + (n-1) g` iff `sum nu <= M`, which holds by
/// construction.  Integer comparison, no floating point.
pub fn state_in_closed_polytope(s: &StateIndex, big_m: u32) -> bool {
    s.sum() <= big_m
}

/// Strict interior on the lattice side: every `nu_k >= 1` and `sum nu <= M-1`.
pub fn state_in_open_polytope(s: &StateIndex, big_m: u32) -> bool {
    s.nu().iter().all(|&v| v >= 1) && s.sum() < big_m
}
