//! Slow reference implementations used by the test suites as independent
//! oracles: dense Kronecker-product Pauli matrices, naive signed marginal
//! sums, and simple Ginibre-style random states.
//!
//! Nothing here shares code with the fast paths it cross-checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::quantum::{DensityMatrix, Pauli, PauliString, StateVector};

/// Seeded generator for test code.
pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Kronecker product of two complex matrices.
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

fn single_pauli(p: Pauli) -> DMatrix<Complex64> {
    let z = Complex64::ZERO;
    let one = Complex64::ONE;
    let i = Complex64::new(0.0, 1.0);
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[one, z, z, one]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    }
}

/// Dense 2^n x 2^n matrix of an n-qubit Pauli string, leftmost letter first.
pub fn dense_pauli(p: &PauliString) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(1, 1, Complex64::ONE);
    for letter in p.letters() {
        m = kron(&m, &single_pauli(*letter));
    }
    m
}

/// tr(rho W_p) via the dense matrix product.
pub fn expectation_dense(rho: &DensityMatrix, p: &PauliString) -> f64 {
    let w = dense_pauli(p);
    let prod = rho.matrix() * w;
    let tr: Complex64 = (0..prod.nrows()).map(|i| prod[(i, i)]).sum();
    tr.re
}

/// Signed marginal of an outcome distribution over the qubit subset `mask`
/// (bit n-1-q set means qubit q is kept), by direct summation.
pub fn subset_marginal(probs: &[f64], mask: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let sign = if (j & mask).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            sign * p
        })
        .sum()
}

/// Outcome probabilities of a local Pauli setting by explicit projector
/// construction: p_j = <v_j| rho |v_j> with |v_j> the Kronecker product of
/// single-qubit eigenvectors (outcome bit 0 selects the +1 eigenvector).
pub fn outcome_probs_dense(rho: &DensityMatrix, letters: &[Pauli]) -> Vec<f64> {
    let n = letters.len();
    let d = 1usize << n;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let eigvec = |p: Pauli, outcome: usize| -> [Complex64; 2] {
        let z = Complex64::ZERO;
        let one = Complex64::ONE;
        let i = Complex64::new(0.0, 1.0);
        match (p, outcome) {
            (Pauli::X, 0) => [one * s, one * s],
            (Pauli::X, _) => [one * s, -one * s],
            (Pauli::Y, 0) => [one * s, i * s],
            (Pauli::Y, _) => [one * s, -i * s],
            (Pauli::Z, 0) => [one, z],
            (Pauli::Z, _) => [z, one],
            (Pauli::I, _) => unreachable!(),
        }
    };
    (0..d)
        .map(|j| {
            let mut v = vec![Complex64::ONE];
            for (q, p) in letters.iter().enumerate() {
                let bit = (j >> (n - 1 - q)) & 1;
                let e = eigvec(*p, bit);
                let mut next = Vec::with_capacity(v.len() * 2);
                for a in &v {
                    next.push(a * e[0]);
                    next.push(a * e[1]);
                }
                v = next;
            }
            let mut acc = Complex64::ZERO;
            for r in 0..d {
                for c in 0..d {
                    acc += v[r].conj() * rho.matrix()[(r, c)] * v[c];
                }
            }
            acc.re
        })
        .collect()
}

/// Random pure state with Gaussian amplitudes, normalized.
pub fn random_pure(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let d = 1 << n;
    let mut amp: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm: f64 = amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amp {
        *a /= norm;
    }
    StateVector::new(n, amp).unwrap()
}

/// Random full-rank density matrix from a plain Ginibre draw, G G^dag
/// normalized to unit trace.
pub fn random_density(n: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let d = 1 << n;
    let g = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let gg = &g * g.adjoint();
    let tr: Complex64 = (0..d).map(|i| gg[(i, i)]).sum();
    let mat = gg / Complex64::new(tr.re, 0.0);
    // Symmetrize away the last-bit float dust so the constructor accepts it.
    let herm = (&mat + mat.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::new(n, herm).unwrap()
}
