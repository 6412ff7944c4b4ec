//! Random pure and mixed states at an exactly specified fidelity to
//! |0...0>, with purity control, plus the uniformity and purity reports.
//!
//! The pure construction writes the fidelity f straight into the |0...0>
//! amplitude and fills the rest with a (2^n - 1)-dimensional random ket.
//! The mixed construction assembles a 2^n-column Ginibre-style matrix G
//! whose column b carries weight m_b and first-entry fraction x_b, solving
//! the x_b sequentially so that <0|rho|0> = f^2 holds exactly; rho =
//! G G^dag / tr(G G^dag).
//!
//! All randomness is drawn from [`RngStream`]: ChaCha8 keyed by a root seed,
//! one independent stream per 64-bit index. Draw order inside each
//! operation is part of the contract; changing it changes every generated
//! artifact.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    fidelity_general, fidelity_to_pure, DensityMatrix, QuantumState, StateVector, Unitary,
};

/// A reproducible, splittable random source: (root seed, stream index)
/// selects one independent ChaCha8 keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub root_seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(root_seed: u64, stream: u64) -> Self {
        RngStream { root_seed, stream }
    }

    /// Instantiate the generator for this (seed, index) pair.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Whether a generated state is a ket or a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Mixed,
}

/// The nine m1 purity-controller distributions, plus a constant override
/// used by the purity report. `rand` below is uniform on [0, 1); draws are
/// independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum M1Distribution {
    /// 1 - rand*rand
    A,
    /// 1 - sqrt(rand)*rand
    B,
    /// uniform on (0, 1)
    C,
    /// |standard normal| clamped to [0, 1]
    D,
    /// pure states (no m1; only valid with `StateKind::Pure`)
    E,
    /// 1 - rand*rand*rand
    F,
    /// 1 - rand*rand*rand*rand
    G,
    /// 1 - rand^3
    H,
    /// 1 - rand*rand^3
    I,
    /// fixed value, for purity sweeps
    Constant(f64),
}

impl M1Distribution {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut u = || rng.gen::<f64>();
        match self {
            M1Distribution::A => 1.0 - u() * u(),
            M1Distribution::B => {
                let a = u();
                1.0 - a.sqrt() * u()
            }
            M1Distribution::C => u(),
            M1Distribution::D => {
                let g: f64 = rng.sample(StandardNormal);
                g.abs().min(1.0)
            }
            M1Distribution::E => 1.0,
            M1Distribution::F => 1.0 - u() * u() * u(),
            M1Distribution::G => 1.0 - u() * u() * u() * u(),
            M1Distribution::H => {
                let a = u();
                1.0 - a * a * a
            }
            M1Distribution::I => {
                let a = u();
                let b = u();
                1.0 - a * b * b * b
            }
            M1Distribution::Constant(c) => c.clamp(0.0, 1.0),
        }
    }

    pub fn label(&self) -> String {
        match self {
            M1Distribution::Constant(c) => format!("const{c}"),
            other => format!("{other:?}"),
        }
    }

    pub fn parse(s: &str) -> Option<M1Distribution> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Some(M1Distribution::A),
            "B" => Some(M1Distribution::B),
            "C" => Some(M1Distribution::C),
            "D" => Some(M1Distribution::D),
            "E" => Some(M1Distribution::E),
            "F" => Some(M1Distribution::F),
            "G" => Some(M1Distribution::G),
            "H" => Some(M1Distribution::H),
            "I" => Some(M1Distribution::I),
            _ => s
                .strip_prefix("const")
                .and_then(|v| v.parse().ok())
                .map(M1Distribution::Constant),
        }
    }
}

/// Full recipe for one random state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub fidelity: f64,
    pub kind: StateKind,
    pub m1_dist: M1Distribution,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(
        n: usize,
        fidelity: f64,
        kind: StateKind,
        m1_dist: M1Distribution,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&fidelity) {
            return Err(Error::InfeasibleSpec(format!(
                "fidelity {fidelity} outside [0, 1]"
            )));
        }
        if matches!(m1_dist, M1Distribution::E) && kind != StateKind::Pure {
            return Err(Error::InfeasibleSpec(
                "m1 distribution E means pure states".into(),
            ));
        }
        Ok(GeneratorSpec {
            n,
            fidelity,
            kind,
            m1_dist,
            seed,
        })
    }

    /// Generate the state for one stream index of this spec's root seed.
    pub fn generate(&self, stream: u64) -> Result<QuantumState> {
        let mut rng = RngStream::new(self.seed, stream).rng();
        self.generate_with(&mut rng)
    }

    pub fn generate_with(&self, rng: &mut ChaCha8Rng) -> Result<QuantumState> {
        match self.kind {
            StateKind::Pure => Ok(gen_pure_with_fidelity(self.n, self.fidelity, rng).into()),
            StateKind::Mixed => {
                Ok(gen_mixed_with_fidelity(self.n, self.fidelity, self.m1_dist, rng)?.into())
            }
        }
    }
}

/// Uniform point on the probability simplex: sort d-1 uniforms, take gaps.
pub fn random_simplex(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    debug_assert!(d >= 1);
    let mut cuts: Vec<f64> = (0..d - 1).map(|_| rng.gen::<f64>()).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(d);
    let mut prev = 0.0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(1.0 - prev);
    out
}

/// Random d-dimensional ket: amplitudes sqrt(simplex), phases uniform with
/// the first fixed to 1.
pub fn random_ket(d: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let p = random_simplex(d, rng);
    let mut out = Vec::with_capacity(d);
    for (i, w) in p.into_iter().enumerate() {
        let phase = if i == 0 {
            Complex64::ONE
        } else {
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            Complex64::from_polar(1.0, theta)
        };
        out.push(phase * w.sqrt());
    }
    out
}

/// Pure state with fidelity exactly f to |0...0>: amplitude f on the zero
/// ket, sqrt(1 - f^2) times a random (2^n - 1)-dimensional ket elsewhere.
pub fn gen_pure_with_fidelity(n: usize, f: f64, rng: &mut ChaCha8Rng) -> StateVector {
    debug_assert!((0.0..=1.0).contains(&f));
    let d = 1usize << n;
    let tail = random_ket(d - 1, rng);
    let scale = (1.0 - f * f).max(0.0).sqrt();
    let mut amp = Vec::with_capacity(d);
    amp.push(Complex64::new(f, 0.0));
    amp.extend(tail.into_iter().map(|a| a * scale));
    StateVector::new(n, amp).expect("construction is normalized")
}

const ZERO_WEIGHT: f64 = 1e-15;

/// Mixed state with <0...0| rho |0...0> = f^2, purity steered by the m1
/// distribution.
pub fn gen_mixed_with_fidelity(
    n: usize,
    f: f64,
    m1_dist: M1Distribution,
    rng: &mut ChaCha8Rng,
) -> Result<DensityMatrix> {
    debug_assert!((0.0..=1.0).contains(&f));
    let d = 1usize << n;

    // Column weights: m1 from its distribution, the remaining mass split
    // over the other columns proportionally to squared standard normals.
    let m1 = m1_dist.sample(rng).clamp(0.0, 1.0);
    let mut weights = vec![m1];
    let raw: Vec<f64> = (0..d - 1)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            g * g
        })
        .collect();
    let raw_sum: f64 = raw.iter().sum();
    let rest = 1.0 - m1;
    for r in &raw {
        weights.push(if raw_sum > 0.0 { rest * r / raw_sum } else { 0.0 });
    }

    let active: Vec<usize> = (0..d).filter(|&b| weights[b] > ZERO_WEIGHT).collect();
    if active.is_empty() {
        return Err(Error::InfeasibleSpec("all column weights vanish".into()));
    }

    // Sequential solve: x_b^2 feasible in
    // [max(0, (R - tail_b)/m_b), min(1, R/m_b)] with R the residual of f^2;
    // sample x_b uniformly over the root interval, last active column exact.
    let mut x = vec![0.0f64; d];
    let mut residual = f * f;
    let mut tail: f64 = active.iter().map(|&b| weights[b]).sum();
    for (pos, &b) in active.iter().enumerate() {
        let m_b = weights[b];
        tail -= m_b;
        if pos + 1 == active.len() {
            let xsq = residual / m_b;
            if !(-1e-9..=1.0 + 1e-9).contains(&xsq) {
                return Err(Error::InfeasibleSpec(format!(
                    "final column solve out of range: x^2 = {xsq}"
                )));
            }
            x[b] = xsq.clamp(0.0, 1.0).sqrt();
        } else {
            let lo_sq = ((residual - tail) / m_b).max(0.0);
            let hi_sq = (residual / m_b).min(1.0);
            if lo_sq > hi_sq + 1e-9 {
                return Err(Error::InfeasibleSpec(format!(
                    "empty feasible interval [{lo_sq}, {hi_sq}]"
                )));
            }
            let lo = lo_sq.clamp(0.0, 1.0).sqrt();
            let hi = hi_sq.clamp(lo_sq.min(1.0), 1.0).sqrt();
            x[b] = lo + (hi - lo) * rng.gen::<f64>();
        }
        residual = (residual - weights[b] * x[b] * x[b]).clamp(0.0, tail.max(0.0));
    }

    // Assemble G column by column: sqrt(m_b) (x_b e^{-2 pi i u1};
    // sqrt(1 - x_b^2) e^{-2 pi i u2} |phi_b>).
    let mut g = DMatrix::<Complex64>::zeros(d, d);
    for b in 0..d {
        let u1 = rng.gen::<f64>();
        let u2 = rng.gen::<f64>();
        let phi = random_ket(d - 1, rng);
        if weights[b] <= ZERO_WEIGHT {
            continue;
        }
        let root_m = weights[b].sqrt();
        let head = Complex64::from_polar(1.0, -std::f64::consts::TAU * u1);
        let body = Complex64::from_polar(1.0, -std::f64::consts::TAU * u2);
        let x_b = x[b];
        let rest = (1.0 - x_b * x_b).max(0.0).sqrt();
        g[(0, b)] = head * (root_m * x_b);
        for (row, phi_a) in phi.iter().enumerate() {
            g[(row + 1, b)] = body * phi_a * (root_m * rest);
        }
    }

    let gg = &g * g.adjoint();
    let tr: f64 = (0..d).map(|i| gg[(i, i)].re).sum();
    let normed = gg / Complex64::new(tr, 0.0);
    let herm = (&normed + normed.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::new(n, herm)
}

/// sigma' = U sigma U^dag (or U|psi> for kets).
pub fn transport_state(u: &Unitary, state: &QuantumState) -> Result<QuantumState> {
    Ok(match state {
        QuantumState::Pure(s) => u.apply(s)?.into(),
        QuantumState::Mixed(r) => u.conjugate(r)?.into(),
    })
}

/// tr(rho^2).
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Fidelity between two generated states of the same kind.
pub fn pairwise_fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    match (a, b) {
        (QuantumState::Pure(x), QuantumState::Pure(y)) => fidelity_to_pure(x, &y.clone().into()),
        (QuantumState::Pure(x), QuantumState::Mixed(y)) => fidelity_to_pure(x, &y.clone().into()),
        (QuantumState::Mixed(x), QuantumState::Pure(y)) => fidelity_to_pure(y, &x.clone().into()),
        (QuantumState::Mixed(x), QuantumState::Mixed(y)) => fidelity_general(x, y),
    }
}

/// Histogram of one anchor state's fidelities to every other state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorHistogram {
    pub anchor: usize,
    pub counts: Vec<usize>,
    /// Raw fidelity samples behind the counts (kept for KS comparisons).
    pub samples: Vec<f64>,
}

/// Uniformity report: per-anchor histograms of pairwise fidelities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformityReport {
    pub edges: Vec<f64>,
    pub anchors: Vec<AnchorHistogram>,
}

fn histogram_counts(samples: &[f64], edges: &[f64]) -> Vec<usize> {
    let bins = edges.len() - 1;
    let mut counts = vec![0usize; bins];
    for &s in samples {
        let mut idx = edges.partition_point(|e| *e <= s);
        idx = idx.saturating_sub(1).min(bins - 1);
        counts[idx] += 1;
    }
    counts
}

/// For `anchors` randomly chosen states, the histogram of fidelities to all
/// other states in the batch.
pub fn uniformity_report(
    states: &[QuantumState],
    anchors: usize,
    bins: usize,
    rng: &mut ChaCha8Rng,
) -> Result<UniformityReport> {
    if states.len() < anchors + 1 {
        return Err(Error::TooFewStates {
            need: anchors + 1,
            got: states.len(),
        });
    }
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let mut picked: Vec<usize> = Vec::with_capacity(anchors);
    while picked.len() < anchors {
        let i = rng.gen_range(0..states.len());
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    let mut report = UniformityReport {
        edges,
        anchors: Vec::with_capacity(anchors),
    };
    for anchor in picked {
        let mut samples = Vec::with_capacity(states.len() - 1);
        for (j, other) in states.iter().enumerate() {
            if j == anchor {
                continue;
            }
            samples.push(pairwise_fidelity(&states[anchor], other)?);
        }
        let counts = histogram_counts(&samples, &report.edges);
        report.anchors.push(AnchorHistogram {
            anchor,
            counts,
            samples,
        });
    }
    Ok(report)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xb.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        if xa[i] <= xb[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / xa.len() as f64;
        let fb = j as f64 / xb.len() as f64;
        sup = sup.max((fa - fb).abs());
    }
    sup
}

/// Purity histogram for one m1 distribution at fixed fidelity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PurityRow {
    pub dist: String,
    pub counts: Vec<usize>,
    pub mean_purity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PurityReport {
    pub n: usize,
    pub fidelity: f64,
    pub edges: Vec<f64>,
    pub rows: Vec<PurityRow>,
}

/// Sweep the given m1 distributions at fixed (n, f): `count` states each,
/// purity histogram per distribution. Distribution E contributes pure
/// states (purity identically 1).
pub fn purity_report(
    n: usize,
    f: f64,
    dists: &[M1Distribution],
    count: usize,
    bins: usize,
    seed: u64,
) -> Result<PurityReport> {
    debug_assert!(count >= 100, "purity histograms need at least 100 states");
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let mut rows = Vec::with_capacity(dists.len());
    for (d_i, dist) in dists.iter().enumerate() {
        let kind = if matches!(dist, M1Distribution::E) {
            StateKind::Pure
        } else {
            StateKind::Mixed
        };
        let spec = GeneratorSpec::new(n, f, kind, *dist, seed.wrapping_add(d_i as u64))?;
        let mut purities = Vec::with_capacity(count);
        for rec in 0..count {
            let state = spec.generate(rec as u64)?;
            purities.push(match &state {
                QuantumState::Pure(_) => 1.0,
                QuantumState::Mixed(rho) => rho.purity(),
            });
        }
        let counts = histogram_counts(&purities, &edges);
        let mean_purity = purities.iter().sum::<f64>() / purities.len() as f64;
        rows.push(PurityRow {
            dist: dist.label(),
            counts,
            mean_purity,
        });
    }
    Ok(PurityReport {
        n,
        fidelity: f,
        edges,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{householder_target_unitary, named_state, NamedState};

    fn rng(seed: u64) -> ChaCha8Rng {
        RngStream::new(seed, 0).rng()
    }

    #[test]
    fn simplex_basics() {
        let mut r = rng(1);
        assert_eq!(random_simplex(1, &mut r), vec![1.0]);
        for _ in 0..50 {
            let s = random_simplex(4, &mut r);
            assert!(s.iter().all(|v| *v >= 0.0));
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_coordinates_have_symmetric_means() {
        let mut r = rng(2);
        let mut sums = [0.0f64; 3];
        let draws = 100_000;
        for _ in 0..draws {
            let s = random_simplex(3, &mut r);
            for (acc, v) in sums.iter_mut().zip(&s) {
                *acc += v;
            }
        }
        for acc in sums {
            assert!((acc / draws as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn random_ket_conventions() {
        let mut r = rng(3);
        let k1 = random_ket(1, &mut r);
        assert!((k1[0] - Complex64::ONE).norm() < 1e-15);

        for _ in 0..20 {
            let k = random_ket(8, &mut r);
            assert!(k[0].im.abs() < 1e-15, "first phase fixed to 1");
            let norm2: f64 = k.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_ket_zero_component_mean() {
        let mut r = rng(4);
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            acc += random_ket(8, &mut r)[0].norm_sqr();
        }
        assert!((acc / draws as f64 - 0.125).abs() < 0.01);
    }

    #[test]
    fn pure_generation_hits_fidelity_exactly() {
        let mut r = rng(5);
        let s = gen_pure_with_fidelity(3, 1.0, &mut r);
        assert!((s.amplitudes()[0] - Complex64::ONE).norm() < 1e-15);
        for a in &s.amplitudes()[1..] {
            assert_eq!(*a, Complex64::ZERO);
        }

        let s = gen_pure_with_fidelity(3, 0.0, &mut r);
        assert_eq!(s.amplitudes()[0], Complex64::ZERO);

        for f in [0.25, 0.5, 0.99] {
            let s = gen_pure_with_fidelity(4, f, &mut r);
            let target = StateVector::basis0(4);
            let measured = fidelity_to_pure(&target, &s.into()).unwrap();
            assert!((measured - f).abs() < 1e-12, "f={f}: {measured}");
        }
    }

    #[test]
    fn mixed_generation_hits_fidelity() {
        let mut r = rng(6);
        let rho = gen_mixed_with_fidelity(2, 1.0, M1Distribution::C, &mut r).unwrap();
        let zero = StateVector::basis0(2);
        let f = fidelity_to_pure(&zero, &rho.into()).unwrap();
        assert!((f - 1.0).abs() < 1e-9);

        let rho = gen_mixed_with_fidelity(2, 0.8, M1Distribution::C, &mut r).unwrap();
        let f = fidelity_to_pure(&zero, &rho.into()).unwrap();
        assert!((f - 0.8).abs() < 1e-9);
    }

    #[test]
    fn mixed_generation_valid_density_matrices() {
        let mut r = rng(7);
        for f in [0.0, 0.3, 0.8, 1.0] {
            for dist in [M1Distribution::A, M1Distribution::H, M1Distribution::D] {
                let rho = gen_mixed_with_fidelity(3, f, dist, &mut r).unwrap();
                assert!(rho.min_eigenvalue() >= -1e-9);
                let zero = StateVector::basis0(3);
                let got = fidelity_to_pure(&zero, &rho.into()).unwrap();
                assert!((got - f).abs() < 1e-9, "f={f}: {got}");
            }
        }
    }

    #[test]
    fn forced_m1_gives_pure_column() {
        let mut r = rng(8);
        let rho =
            gen_mixed_with_fidelity(2, 0.6, M1Distribution::Constant(1.0), &mut r).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn purity_matches_eigenvalue_oracle() {
        let mut r = rng(9);
        let rho = gen_mixed_with_fidelity(3, 0.5, M1Distribution::C, &mut r).unwrap();
        let eig_sum: f64 = rho.eigenvalues().iter().map(|l| l * l).sum();
        assert!((rho.purity() - eig_sum).abs() < 1e-10);

        assert!((purity(&DensityMatrix::maximally_mixed(2)) - 0.25).abs() < 1e-12);
        let pure = named_state(NamedState::Ghz, 3).unwrap().to_density();
        assert!((purity(&pure) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transport_preserves_fidelity() {
        let mut r = rng(10);
        let ghz = named_state(NamedState::Ghz, 3).unwrap();
        let u = householder_target_unitary(&ghz);

        let sigma = gen_mixed_with_fidelity(3, 0.6, M1Distribution::C, &mut r).unwrap();
        let moved = transport_state(&u, &sigma.into()).unwrap();
        let f = fidelity_to_pure(&ghz, &moved).unwrap();
        assert!((f - 0.6).abs() < 1e-10);

        let psi = gen_pure_with_fidelity(3, 0.9, &mut r);
        let moved = transport_state(&Unitary::identity(3), &psi.clone().into()).unwrap();
        match moved {
            QuantumState::Pure(s) => assert_eq!(s.amplitudes(), psi.amplitudes()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn generation_is_deterministic_per_stream() {
        let spec =
            GeneratorSpec::new(3, 0.4, StateKind::Mixed, M1Distribution::H, 99).unwrap();
        let a = spec.generate(7).unwrap();
        let b = spec.generate(7).unwrap();
        let c = spec.generate(8).unwrap();
        match (&a, &b, &c) {
            (QuantumState::Mixed(x), QuantumState::Mixed(y), QuantumState::Mixed(z)) => {
                assert_eq!(x.matrix(), y.matrix());
                assert_ne!(x.matrix(), z.matrix());
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn uniformity_report_counts() {
        let spec = GeneratorSpec::new(4, 0.25, StateKind::Pure, M1Distribution::E, 5).unwrap();
        let states: Vec<QuantumState> =
            (0..100).map(|i| spec.generate(i).unwrap()).collect();
        let mut r = rng(11);
        let report = uniformity_report(&states, 2, 20, &mut r).unwrap();
        assert_eq!(report.anchors.len(), 2);
        for a in &report.anchors {
            assert_eq!(a.counts.iter().sum::<usize>(), 99);
        }

        let identical: Vec<QuantumState> = (0..10)
            .map(|_| named_state(NamedState::Bell, 2).unwrap().into())
            .collect();
        let rep = uniformity_report(&identical, 1, 10, &mut r).unwrap();
        assert_eq!(rep.anchors[0].counts[9], 9);

        assert!(matches!(
            uniformity_report(&identical[..2], 2, 10, &mut r),
            Err(Error::TooFewStates { .. })
        ));
    }

    #[test]
    fn uniformity_anchors_agree_in_distribution() {
        let spec = GeneratorSpec::new(4, 0.25, StateKind::Pure, M1Distribution::E, 12).unwrap();
        let states: Vec<QuantumState> =
            (0..1000).map(|i| spec.generate(i).unwrap()).collect();
        let mut r = rng(13);
        let report = uniformity_report(&states, 2, 20, &mut r).unwrap();
        let ks = ks_statistic(&report.anchors[0].samples, &report.anchors[1].samples);
        assert!(ks < 0.1, "KS statistic {ks}");
    }

    #[test]
    fn purity_report_rows() {
        let dists = [
            M1Distribution::E,
            M1Distribution::C,
            M1Distribution::H,
            M1Distribution::Constant(0.01),
        ];
        let report = purity_report(4, 0.25, &dists, 200, 20, 21).unwrap();
        // E: everything pure.
        assert!((report.rows[0].mean_purity - 1.0).abs() < 1e-12);
        assert_eq!(report.rows[0].counts[19], 200);
        // H concentrates closer to pure states than uniform C.
        assert!(report.rows[2].mean_purity > report.rows[1].mean_purity);
        // A constant m1 of 0.01 keeps states far from pure.
        assert!(report.rows[3].mean_purity < 0.5);
    }
}
