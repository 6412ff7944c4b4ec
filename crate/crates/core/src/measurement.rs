//! Local Pauli measurement settings: outcome distributions, Poisson shot
//! noise, and extraction of every sub-Pauli expectation from one setting.
//!
//! A setting assigns one of X, Y, Z to each qubit. Outcome index bit
//! n-1-q is 0 when qubit q lands on the +1 eigenvalue, matching the Pauli
//! index convention (qubit 0 most significant). All 2^n - 1 sub-Pauli
//! expectations of a setting are signed marginals of its outcome
//! distribution and come out of one parity (Walsh) transform in O(n 2^n).

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{Pauli, PauliString, QuantumState};

/// A length-n word over {X, Y, Z} (no identity) naming one local basis
/// choice per qubit. Serializes as its letter string, e.g. "XYZ".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MeasurementSetting {
    letters: Vec<Pauli>,
}

impl Serialize for MeasurementSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MeasurementSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        MeasurementSetting::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl MeasurementSetting {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() || letters.contains(&Pauli::I) {
            return Err(Error::InvalidState(
                "measurement settings use X, Y, Z on every qubit".into(),
            ));
        }
        Ok(MeasurementSetting { letters })
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(PauliString::parse(s)?.letters().to_vec())
    }

    /// Reconstruct from the canonical base-3 index (X=0, Y=1, Z=2,
    /// leftmost qubit most significant).
    pub fn from_index(n: usize, mut index: usize) -> Self {
        let mut letters = vec![Pauli::X; n];
        for q in (0..n).rev() {
            letters[q] = match index % 3 {
                0 => Pauli::X,
                1 => Pauli::Y,
                _ => Pauli::Z,
            };
            index /= 3;
        }
        MeasurementSetting { letters }
    }

    /// Canonical base-3 index; the tie-breaking order for setting selection.
    pub fn index(&self) -> usize {
        self.letters
            .iter()
            .fold(0, |acc, p| acc * 3 + (p.digit() - 1))
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    /// The full-weight Pauli string spelled by this setting.
    pub fn as_pauli(&self) -> PauliString {
        PauliString::new(self.letters.clone())
    }

    /// Sub-Pauli keeping this setting's letters on the qubits of `mask`
    /// (bit n-1-q selects qubit q) and identity elsewhere.
    pub fn sub_pauli(&self, mask: usize) -> PauliString {
        let n = self.n();
        let letters = (0..n)
            .map(|q| {
                if mask >> (n - 1 - q) & 1 == 1 {
                    self.letters[q]
                } else {
                    Pauli::I
                }
            })
            .collect();
        PauliString::new(letters)
    }
}

impl std::fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// Exact outcome probabilities of one setting on one state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub setting: MeasurementSetting,
    pub p: Vec<f64>,
}

/// Poisson-sampled counts for one setting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountVector {
    pub setting: MeasurementSetting,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl CountVector {
    /// Empirical probabilities counts / total.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::ZeroTotal);
        }
        Ok(self
            .counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect())
    }
}

/// Apply the basis rotation that maps `letter`'s eigenbasis onto the
/// computational basis, acting on qubit `q` of an amplitude vector.
fn rotate_qubit(amp: &mut [Complex64], n: usize, q: usize, letter: Pauli) {
    let bit = 1usize << (n - 1 - q);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    match letter {
        Pauli::Z => {}
        Pauli::X => {
            for j in 0..amp.len() {
                if j & bit == 0 {
                    let a = amp[j];
                    let b = amp[j | bit];
                    amp[j] = (a + b) * inv_sqrt2;
                    amp[j | bit] = (a - b) * inv_sqrt2;
                }
            }
        }
        Pauli::Y => {
            // rows <+i| = (1, -i)/sqrt2 and <-i| = (1, i)/sqrt2.
            let i = Complex64::new(0.0, 1.0);
            for j in 0..amp.len() {
                if j & bit == 0 {
                    let a = amp[j];
                    let b = amp[j | bit];
                    amp[j] = (a - i * b) * inv_sqrt2;
                    amp[j | bit] = (a + i * b) * inv_sqrt2;
                }
            }
        }
        Pauli::I => unreachable!("settings exclude I"),
    }
}

/// p_j = tr(rho P_j) for every outcome j of the setting, computed by
/// rotating each qubit into the Z basis and reading populations.
pub fn outcome_probabilities(
    state: &QuantumState,
    setting: &MeasurementSetting,
) -> Result<OutcomeDistribution> {
    if state.n() != setting.n() {
        return Err(Error::DimensionMismatch {
            left: state.n(),
            right: setting.n(),
        });
    }
    let n = state.n();
    let p = match state {
        QuantumState::Pure(s) => {
            let mut amp = s.amplitudes().to_vec();
            for (q, letter) in setting.letters().iter().enumerate() {
                rotate_qubit(&mut amp, n, q, *letter);
            }
            amp.iter().map(|a| a.norm_sqr()).collect::<Vec<f64>>()
        }
        QuantumState::Mixed(r) => {
            // Rotate rows (U rho) then columns (.. U^dag), column by column.
            let d = r.dim();
            let mut m = r.matrix().clone();
            for (q, letter) in setting.letters().iter().enumerate() {
                for c in 0..d {
                    let mut col: Vec<Complex64> = (0..d).map(|r_i| m[(r_i, c)]).collect();
                    rotate_qubit(&mut col, n, q, *letter);
                    for (r_i, v) in col.into_iter().enumerate() {
                        m[(r_i, c)] = v;
                    }
                }
                for r_i in 0..d {
                    let mut row: Vec<Complex64> =
                        (0..d).map(|c| m[(r_i, c)].conj()).collect();
                    rotate_qubit(&mut row, n, q, *letter);
                    for (c, v) in row.into_iter().enumerate() {
                        m[(r_i, c)] = v.conj();
                    }
                }
            }
            (0..d).map(|j| m[(j, j)].re.max(0.0)).collect()
        }
    };
    debug_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    Ok(OutcomeDistribution {
        setting: setting.clone(),
        p,
    })
}

/// counts_j ~ Poisson(shots * p_j), independently per outcome. The all-zero
/// event (possible only for tiny shot counts) triggers a resample.
pub fn sample_counts_poisson(
    dist: &OutcomeDistribution,
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> CountVector {
    debug_assert!(shots >= 1);
    loop {
        let counts: Vec<u64> = dist
            .p
            .iter()
            .map(|&p| {
                let lambda = shots as f64 * p;
                if lambda > 0.0 {
                    Poisson::new(lambda).unwrap().sample(rng) as u64
                } else {
                    0
                }
            })
            .collect();
        let total: u64 = counts.iter().sum();
        if total > 0 {
            return CountVector {
                setting: dist.setting.clone(),
                counts,
                total,
            };
        }
    }
}

/// Exact "counts": the distribution itself, for noiseless feature builds.
pub fn exact_frequencies(dist: &OutcomeDistribution) -> Vec<f64> {
    dist.p.clone()
}

/// In-place Walsh (parity) transform: out[m] = sum_j (-1)^popcount(j & m) in[j].
fn walsh_transform(values: &mut [f64]) {
    let len = values.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in (0..len).step_by(2 * h) {
            for j in block..block + h {
                let a = values[j];
                let b = values[j + h];
                values[j] = a + b;
                values[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Signed marginals of an outcome distribution, indexed by kept-qubit mask.
/// Entry 0 is the total mass (1 for normalized input); entry m is the
/// expectation of the setting's sub-Pauli on mask m.
pub fn marginals_from_frequencies(freqs: &[f64]) -> Vec<f64> {
    let mut t = freqs.to_vec();
    walsh_transform(&mut t);
    t
}

/// Expectations of all 2^n - 1 sub-Paulis of the setting, from normalized
/// frequencies. Returned in ascending mask order.
pub fn expectations_from_frequencies(
    setting: &MeasurementSetting,
    freqs: &[f64],
) -> Vec<(PauliString, f64)> {
    let marg = marginals_from_frequencies(freqs);
    (1..freqs.len())
        .map(|mask| (setting.sub_pauli(mask), marg[mask]))
        .collect()
}

/// Expectations from sampled counts. The parity transform runs on the raw
/// integer counts (exact in f64 below 2^53); the single division by the
/// total normalizes afterwards.
pub fn expectations_from_counts(counts: &CountVector) -> Result<Vec<(PauliString, f64)>> {
    if counts.total == 0 {
        return Err(Error::ZeroTotal);
    }
    let raw: Vec<f64> = counts.counts.iter().map(|&c| c as f64).collect();
    let marg = marginals_from_frequencies(&raw);
    let inv = 1.0 / counts.total as f64;
    Ok((1..raw.len())
        .map(|mask| (counts.setting.sub_pauli(mask), marg[mask] * inv))
        .collect())
}
