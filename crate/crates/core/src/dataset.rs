//! Fidelity binning schemes, feature assembly, and persistent labeled
//! datasets.
//!
//! A dataset is built per target: states are generated at bin-uniform
//! fidelities to |0...0>, transported by the target's Householder unitary,
//! measured under the setting plan (exactly, or with Poisson shot noise),
//! and the outcome frequencies or sub-Pauli expectations become the feature
//! vector. Record r draws everything from stream r of the root seed, so a
//! manifest fully determines its records.
//!
//! On disk a dataset is the pair `<name>.manifest.json` / `<name>.csv`
//! (records with 17-significant-digit reals, which round-trip f64 exactly).

use std::io::Write;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measurement::{
    marginals_from_frequencies, outcome_probabilities, sample_counts_poisson, MeasurementSetting,
};
use crate::quantum::{householder_target_unitary, QuantumState, StateVector};
use crate::select::{SelectionStrategy, SettingPlan};
use crate::stategen::{
    gen_mixed_with_fidelity, gen_pure_with_fidelity, transport_state, M1Distribution, RngStream,
    StateKind,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Partition of [0, 1] into fidelity intervals. Half-open on the left edge
/// of each interval; the last interval is closed at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub id: String,
    pub edges: Vec<f64>,
}

/// The shipped two-band presets: a coarse band on [0, 0.55) and a fine band
/// on [0.55, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinningPreset {
    L66,
    L122,
    L234,
}

impl BinningPreset {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l66" | "66" => Some(BinningPreset::L66),
            "l122" | "122" => Some(BinningPreset::L122),
            "l234" | "234" => Some(BinningPreset::L234),
            _ => None,
        }
    }

    fn band_counts(self) -> (usize, usize) {
        match self {
            BinningPreset::L66 => (11, 55),
            BinningPreset::L122 => (22, 100),
            BinningPreset::L234 => (34, 200),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            BinningPreset::L66 => "L66",
            BinningPreset::L122 => "L122",
            BinningPreset::L234 => "L234",
        }
    }
}

/// Build one of the preset label ladders.
pub fn make_binning(preset: BinningPreset) -> BinningScheme {
    let (coarse, fine) = preset.band_counts();
    let mut edges = Vec::with_capacity(coarse + fine + 1);
    for i in 0..=coarse {
        edges.push(0.55 * i as f64 / coarse as f64);
    }
    for j in 1..=fine {
        edges.push(0.55 + 0.45 * j as f64 / fine as f64);
    }
    *edges.last_mut().unwrap() = 1.0;
    BinningScheme {
        id: preset.id().to_string(),
        edges,
    }
}

/// Wrap an explicit edge list (first edge 0, last edge 1, strictly
/// increasing).
pub fn make_binning_explicit(id: &str, edges: Vec<f64>) -> Result<BinningScheme> {
    if edges.len() < 2 {
        return Err(Error::BadEdges("need at least two edges".into()));
    }
    if edges[0] != 0.0 || *edges.last().unwrap() != 1.0 {
        return Err(Error::BadEdges("edges must start at 0 and end at 1".into()));
    }
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadEdges("edges must be strictly increasing".into()));
    }
    Ok(BinningScheme {
        id: id.to_string(),
        edges,
    })
}

impl BinningScheme {
    pub fn count(&self) -> usize {
        self.edges.len() - 1
    }

    /// Bin index of a fidelity in [0, 1]; boundaries map to the right-hand
    /// bin, 1.0 to the last.
    pub fn bin_of(&self, f: f64) -> usize {
        debug_assert!((0.0..=1.0).contains(&f));
        let idx = self.edges.partition_point(|e| *e <= f);
        idx.saturating_sub(1).min(self.count() - 1)
    }

    /// Midpoint of bin i, the classifier's point estimate for that label.
    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.edges[i] + self.edges[i + 1])
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }
}

/// What one setting's measurement contributes to the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// All 2^n outcome frequencies per setting.
    OutcomeProbs,
    /// Expectations of the filtered sub-Paulis per setting.
    PauliExpectations,
}

impl FeatureMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "outcome-probs" | "probs" => Some(FeatureMode::OutcomeProbs),
            "pauli-expectations" | "expectations" => Some(FeatureMode::PauliExpectations),
            _ => None,
        }
    }
}

/// Kept-qubit masks of the sub-Paulis used as features, ascending.
pub fn feature_masks(n: usize, max_identities: usize) -> Vec<usize> {
    (1..1usize << n)
        .filter(|mask| n - (*mask as u32).count_ones() as usize <= max_identities)
        .collect()
}

/// Full description of the feature vector: plan, mode, shots, and the
/// recorded per-feature layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub mode: FeatureMode,
    pub strategy: SelectionStrategy,
    pub settings: Vec<MeasurementSetting>,
    pub max_identities: usize,
    /// None means exact probabilities (noiseless mode).
    pub shots: Option<u64>,
    pub layout: Vec<String>,
}

impl FeatureSpec {
    pub fn new(
        plan: &SettingPlan,
        mode: FeatureMode,
        max_identities: usize,
        shots: Option<u64>,
    ) -> Self {
        let n = plan.n();
        let mut layout = Vec::new();
        for setting in &plan.settings {
            match mode {
                FeatureMode::OutcomeProbs => {
                    for outcome in 0..1usize << n {
                        layout.push(format!("{setting}:{outcome}"));
                    }
                }
                FeatureMode::PauliExpectations => {
                    for mask in feature_masks(n, max_identities) {
                        layout.push(format!("{setting}:{}", setting.sub_pauli(mask)));
                    }
                }
            }
        }
        FeatureSpec {
            mode,
            strategy: plan.strategy,
            settings: plan.settings.clone(),
            max_identities,
            shots,
            layout,
        }
    }

    pub fn k(&self) -> usize {
        self.settings.len()
    }

    /// Features contributed per setting.
    pub fn block_len(&self) -> usize {
        self.layout.len() / self.settings.len()
    }

    /// Hash of the layout ids; models record it to refuse foreign features.
    pub fn layout_hash(&self) -> String {
        sha256_hex(self.layout.join(",").as_bytes())
    }
}

/// Measure a state under an ordered list of settings and assemble the
/// feature block for each. Poisson draws consume `rng` in setting order.
pub fn measure_features(
    state: &QuantumState,
    settings: &[MeasurementSetting],
    mode: FeatureMode,
    max_identities: usize,
    shots: Option<u64>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let n = state.n();
    let mut out = Vec::new();
    for setting in settings {
        let dist = outcome_probabilities(state, setting)?;
        let freqs: Vec<f64> = match shots {
            Some(budget) => sample_counts_poisson(&dist, budget, rng).frequencies()?,
            None => dist.p.clone(),
        };
        match mode {
            FeatureMode::OutcomeProbs => out.extend(freqs),
            FeatureMode::PauliExpectations => {
                let marg = marginals_from_frequencies(&freqs);
                for mask in feature_masks(n, max_identities) {
                    out.push(marg[mask]);
                }
            }
        }
    }
    Ok(out)
}

/// One labeled example.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub features: Vec<f64>,
    pub label: usize,
    pub true_fidelity: f64,
    pub record_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub kind: StateKind,
    pub m1_dist: M1Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub description: String,
    pub amplitude_hash: String,
}

/// Everything needed to regenerate a dataset bit-exactly (same build).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub n: usize,
    pub target: TargetInfo,
    pub feature: FeatureSpec,
    pub binning: BinningScheme,
    pub generator: GeneratorInfo,
    pub per_label_train: usize,
    pub per_label_val: usize,
    pub root_seed: u64,
    pub record_count: usize,
    /// SHA-256 over the manifest with this field empty.
    pub manifest_hash: String,
}

impl DatasetManifest {
    fn compute_hash(&self) -> String {
        let mut clone = self.clone();
        clone.manifest_hash = String::new();
        sha256_hex(
            serde_json::to_string(&clone)
                .expect("manifest serializes")
                .as_bytes(),
        )
    }

    pub fn seal(&mut self) {
        self.manifest_hash = self.compute_hash();
    }

    pub fn verify_hash(&self) -> Result<()> {
        if self.manifest_hash != self.compute_hash() {
            return Err(Error::SchemaMismatch(
                "manifest hash does not match its contents".into(),
            ));
        }
        Ok(())
    }

    pub fn per_label_total(&self) -> usize {
        self.per_label_train + self.per_label_val
    }
}

/// In-memory dataset: manifest plus records in index order (for each bin,
/// the train records come first, then the validation records).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn is_train(&self, index: usize) -> bool {
        index % self.manifest.per_label_total() < self.manifest.per_label_train
    }

    pub fn train_records(&self) -> Vec<&DatasetRecord> {
        self.records
            .iter()
            .enumerate()
            .filter(|(i, _)| self.is_train(*i))
            .map(|(_, r)| r)
            .collect()
    }

    pub fn val_records(&self) -> Vec<&DatasetRecord> {
        self.records
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.is_train(*i))
            .map(|(_, r)| r)
            .collect()
    }

    /// Restrict every record to the feature blocks of the first k settings.
    /// Valid because plans are prefix-consistent: the k-setting dataset is
    /// a column prefix of the k_max one.
    pub fn feature_prefix(&self, k: usize) -> Dataset {
        assert!(k >= 1 && k <= self.manifest.feature.k());
        let block = self.manifest.feature.block_len();
        let keep = k * block;
        let mut manifest = self.manifest.clone();
        manifest.feature.settings.truncate(k);
        manifest.feature.layout.truncate(keep);
        manifest.seal();
        let records = self
            .records
            .iter()
            .map(|r| DatasetRecord {
                features: r.features[..keep].to_vec(),
                label: r.label,
                true_fidelity: r.true_fidelity,
                record_seed: r.record_seed,
            })
            .collect();
        Dataset { manifest, records }
    }
}

/// Inputs for one dataset build.
#[derive(Debug, Clone)]
pub struct DatasetBuild {
    pub target: StateVector,
    pub target_id: String,
    pub plan: SettingPlan,
    pub mode: FeatureMode,
    pub max_identities: usize,
    pub shots: Option<u64>,
    pub binning: BinningScheme,
    pub kind: StateKind,
    pub m1_dist: M1Distribution,
    pub per_label_train: usize,
    pub per_label_val: usize,
    pub root_seed: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn amplitude_hash(target: &StateVector) -> String {
    let text: String = target
        .amplitudes()
        .iter()
        .map(|a| format!("{:.16e}:{:.16e};", a.re, a.im))
        .collect();
    sha256_hex(text.as_bytes())
}

impl DatasetBuild {
    fn manifest(&self) -> DatasetManifest {
        let bins = self.binning.count();
        let mut manifest = DatasetManifest {
            schema_version: SCHEMA_VERSION,
            n: self.target.n(),
            target: TargetInfo {
                description: self.target_id.clone(),
                amplitude_hash: amplitude_hash(&self.target),
            },
            feature: FeatureSpec::new(&self.plan, self.mode, self.max_identities, self.shots),
            binning: self.binning.clone(),
            generator: GeneratorInfo {
                kind: self.kind,
                m1_dist: self.m1_dist,
            },
            per_label_train: self.per_label_train,
            per_label_val: self.per_label_val,
            root_seed: self.root_seed,
            record_count: bins * (self.per_label_train + self.per_label_val),
            manifest_hash: String::new(),
        };
        manifest.seal();
        manifest
    }

    fn build_record(&self, u: &crate::quantum::Unitary, index: usize) -> Result<DatasetRecord> {
        let per_label = self.per_label_train + self.per_label_val;
        let bin = index / per_label;
        let mut rng = RngStream::new(self.root_seed, index as u64).rng();

        // Draw order: fidelity, state, then per-setting shot noise.
        let lo = self.binning.edges[bin];
        let hi = self.binning.edges[bin + 1];
        let mut f = lo + (hi - lo) * rand::Rng::gen::<f64>(&mut rng);
        if f >= hi {
            f = lo; // guards the half-open interval against rounding
        }

        let n = self.target.n();
        let state: QuantumState = match self.kind {
            StateKind::Pure => gen_pure_with_fidelity(n, f, &mut rng).into(),
            StateKind::Mixed => {
                gen_mixed_with_fidelity(n, f, self.m1_dist, &mut rng)?.into()
            }
        };
        let moved = transport_state(u, &state)?;
        let features = measure_features(
            &moved,
            &self.plan.settings,
            self.mode,
            self.max_identities,
            self.shots,
            &mut rng,
        )?;
        debug_assert_eq!(self.binning.bin_of(f), bin);
        Ok(DatasetRecord {
            features,
            label: bin,
            true_fidelity: f,
            record_seed: index as u64,
        })
    }

    /// Generate every record. Parallel over records; deterministic because
    /// each record owns stream `index` of the root seed.
    pub fn build(&self) -> Result<Dataset> {
        let manifest = self.manifest();
        let u = householder_target_unitary(&self.target);
        let records: Result<Vec<DatasetRecord>> = (0..manifest.record_count)
            .into_par_iter()
            .map(|i| self.build_record(&u, i))
            .collect();
        Ok(Dataset {
            manifest,
            records: records?,
        })
    }
}

fn dataset_paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{name}.manifest.json")),
        dir.join(format!("{name}.csv")),
    )
}

/// Write `<name>.manifest.json` and `<name>.csv` under `dir`.
pub fn save_dataset(dataset: &Dataset, dir: &Path, name: &str) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let (manifest_path, csv_path) = dataset_paths(dir, name);

    let mut file = std::fs::File::create(&manifest_path)?;
    file.write_all(serde_json::to_string_pretty(&dataset.manifest)?.as_bytes())?;
    file.write_all(b"\n")?;

    let mut writer = csv::Writer::from_path(&csv_path)?;
    let mut header: Vec<String> = dataset.manifest.feature.layout.clone();
    header.extend([
        "label".to_string(),
        "true_fidelity".to_string(),
        "record_seed".to_string(),
    ]);
    writer
        .write_record(&header)
        .map_err(|e| Error::CorruptRecord(e.to_string()))?;
    for rec in &dataset.records {
        let mut row: Vec<String> = rec.features.iter().map(|v| format!("{v:.16e}")).collect();
        row.push(rec.label.to_string());
        row.push(format!("{:.16e}", rec.true_fidelity));
        row.push(rec.record_seed.to_string());
        writer
            .write_record(&row)
            .map_err(|e| Error::CorruptRecord(e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| Error::CorruptRecord(e.to_string()))?;
    Ok((manifest_path, csv_path))
}

/// Load a dataset pair, verifying the manifest hash, the header layout,
/// the record count, and the per-record invariants.
pub fn load_dataset(dir: &Path, name: &str) -> Result<Dataset> {
    let (manifest_path, csv_path) = dataset_paths(dir, name);
    let manifest: DatasetManifest =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaMismatch(format!(
            "schema version {} (expected {SCHEMA_VERSION})",
            manifest.schema_version
        )));
    }
    manifest.verify_hash()?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&csv_path)
        .map_err(|e| Error::CorruptRecord(e.to_string()))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::CorruptRecord(e.to_string()))?;
        let expected: Vec<&str> = manifest
            .feature
            .layout
            .iter()
            .map(String::as_str)
            .chain(["label", "true_fidelity", "record_seed"])
            .collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::SchemaMismatch(
                "csv header does not match the manifest layout".into(),
            ));
        }
    }

    let width = manifest.feature.layout.len();
    let mut records = Vec::with_capacity(manifest.record_count);
    for row in reader.records() {
        let row = row.map_err(|e| Error::CorruptRecord(e.to_string()))?;
        if row.len() != width + 3 {
            return Err(Error::CorruptRecord(format!(
                "row has {} fields, expected {}",
                row.len(),
                width + 3
            )));
        }
        let parse_f64 = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::CorruptRecord(format!("bad real {s:?}")))
        };
        let features: Vec<f64> = row
            .iter()
            .take(width)
            .map(parse_f64)
            .collect::<Result<_>>()?;
        let label: usize = row[width]
            .parse()
            .map_err(|_| Error::CorruptRecord(format!("bad label {:?}", &row[width])))?;
        let true_fidelity = parse_f64(&row[width + 1])?;
        let record_seed: u64 = row[width + 2]
            .parse()
            .map_err(|_| Error::CorruptRecord("bad record seed".into()))?;

        if label != manifest.binning.bin_of(true_fidelity) {
            return Err(Error::CorruptRecord(format!(
                "label {label} does not match fidelity {true_fidelity}"
            )));
        }
        let in_range = match manifest.feature.mode {
            FeatureMode::OutcomeProbs => features.iter().all(|v| (0.0..=1.0).contains(v)),
            FeatureMode::PauliExpectations => {
                features.iter().all(|v| (-1.0..=1.0).contains(v))
            }
        };
        if !in_range || features.iter().any(|v| !v.is_finite()) {
            return Err(Error::CorruptRecord("feature out of range".into()));
        }
        records.push(DatasetRecord {
            features,
            label,
            true_fidelity,
            record_seed,
        });
    }
    if records.len() != manifest.record_count {
        return Err(Error::CorruptRecord(format!(
            "{} records on disk, manifest says {}",
            records.len(),
            manifest.record_count
        )));
    }
    Ok(Dataset { manifest, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{named_state, pauli_expectation, NamedState};
    use crate::select::{select_settings, SelectionStrategy};

    fn small_build(shots: Option<u64>, mode: FeatureMode) -> DatasetBuild {
        let target = named_state(NamedState::Bell, 2).unwrap();
        let plan = select_settings(&target, 3, SelectionStrategy::GreedyCoverage, "bell").unwrap();
        DatasetBuild {
            target,
            target_id: "bell".into(),
            plan,
            mode,
            max_identities: 4,
            shots,
            binning: make_binning(BinningPreset::L66),
            kind: StateKind::Mixed,
            m1_dist: M1Distribution::H,
            per_label_train: 2,
            per_label_val: 1,
            root_seed: 7,
        }
    }

    #[test]
    fn preset_shapes() {
        let b66 = make_binning(BinningPreset::L66);
        let b122 = make_binning(BinningPreset::L122);
        let b234 = make_binning(BinningPreset::L234);
        assert_eq!(b66.count(), 66);
        assert_eq!(b122.count(), 122);
        assert_eq!(b234.count(), 234);
        for b in [&b66, &b122, &b234] {
            assert_eq!(b.edges[0], 0.0);
            assert_eq!(*b.edges.last().unwrap(), 1.0);
            assert!(b.edges.windows(2).all(|w| w[1] > w[0]));
        }
        // L122 fine band width.
        assert!((b122.width(30) - 0.0045).abs() < 1e-12);
    }

    #[test]
    fn bin_lookup() {
        let b = make_binning(BinningPreset::L122);
        assert_eq!(b.bin_of(0.0), 0);
        assert_eq!(b.bin_of(1.0), 121);
        assert_eq!(b.bin_of(0.97), 115); // 22 + floor((0.97-0.55)/0.0045)
        // Boundaries map to the right-hand bin.
        for i in [1usize, 21, 22, 60, 121] {
            assert_eq!(b.bin_of(b.edges[i]), i);
        }
        // Every fidelity lands in exactly one bin whose edges bracket it.
        for step in 0..=1000 {
            let f = step as f64 / 1000.0;
            let i = b.bin_of(f);
            assert!(b.edges[i] <= f);
            assert!(f < b.edges[i + 1] || (i == 121 && f == 1.0));
        }
    }

    #[test]
    fn explicit_edges_validation() {
        assert!(make_binning_explicit("ok", vec![0.0, 0.5, 1.0]).is_ok());
        assert!(matches!(
            make_binning_explicit("bad", vec![0.1, 1.0]),
            Err(Error::BadEdges(_))
        ));
        assert!(matches!(
            make_binning_explicit("bad", vec![0.0, 0.5, 0.5, 1.0]),
            Err(Error::BadEdges(_))
        ));
    }

    #[test]
    fn build_labels_and_counts() {
        let build = small_build(Some(2000), FeatureMode::OutcomeProbs);
        let ds = build.build().unwrap();
        assert_eq!(ds.records.len(), 66 * 3);
        assert_eq!(ds.train_records().len(), 66 * 2);
        assert_eq!(ds.val_records().len(), 66);
        for rec in &ds.records {
            assert_eq!(rec.label, ds.manifest.binning.bin_of(rec.true_fidelity));
            assert!(rec.features.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert_eq!(ds.manifest.feature.layout.len(), 3 * 4);
    }

    #[test]
    fn build_is_deterministic() {
        let build = small_build(Some(1000), FeatureMode::PauliExpectations);
        let a = build.build().unwrap();
        let b = build.build().unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.manifest.manifest_hash, b.manifest.manifest_hash);
    }

    #[test]
    fn noiseless_features_are_analytic_expectations() {
        let build = small_build(None, FeatureMode::PauliExpectations);
        let ds = build.build().unwrap();
        // Regenerate one record's state and compare features against exact
        // Pauli expectations of the transported state.
        let rec = &ds.records[100];
        let mut rng = RngStream::new(build.root_seed, rec.record_seed).rng();
        let bin = rec.label;
        let lo = build.binning.edges[bin];
        let hi = build.binning.edges[bin + 1];
        let f = lo + (hi - lo) * rand::Rng::gen::<f64>(&mut rng);
        assert_eq!(f, rec.true_fidelity);
        let state = gen_mixed_with_fidelity(2, f, build.m1_dist, &mut rng).unwrap();
        let u = householder_target_unitary(&build.target);
        let moved = transport_state(&u, &state.into()).unwrap();
        let mut idx = 0;
        for setting in &build.plan.settings {
            for mask in feature_masks(2, build.max_identities) {
                let exact = pauli_expectation(&moved, &setting.sub_pauli(mask)).unwrap();
                assert!(
                    (rec.features[idx] - exact).abs() < 1e-10,
                    "feature {idx}: {} vs {exact}",
                    rec.features[idx]
                );
                idx += 1;
            }
        }
    }

    #[test]
    fn feature_prefix_slices_blocks() {
        let build = small_build(Some(500), FeatureMode::OutcomeProbs);
        let ds = build.build().unwrap();
        let two = ds.feature_prefix(2);
        assert_eq!(two.manifest.feature.k(), 2);
        assert_eq!(two.records[5].features, ds.records[5].features[..8].to_vec());
        two.manifest.verify_hash().unwrap();
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let build = small_build(Some(1000), FeatureMode::OutcomeProbs);
        let ds = build.build().unwrap();
        save_dataset(&ds, dir.path(), "roundtrip").unwrap();
        let loaded = load_dataset(dir.path(), "roundtrip").unwrap();
        assert_eq!(loaded.records, ds.records);
        assert_eq!(loaded.manifest.manifest_hash, ds.manifest.manifest_hash);
    }

    #[test]
    fn truncated_csv_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let build = small_build(Some(1000), FeatureMode::OutcomeProbs);
        let ds = build.build().unwrap();
        let (_, csv_path) = save_dataset(&ds, dir.path(), "trunc").unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        let keep: Vec<&str> = text.lines().take(50).collect();
        std::fs::write(&csv_path, keep.join("\n")).unwrap();
        assert!(matches!(
            load_dataset(dir.path(), "trunc"),
            Err(Error::CorruptRecord(_))
        ));
    }

    #[test]
    fn edited_manifest_is_schema_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let build = small_build(Some(1000), FeatureMode::OutcomeProbs);
        let ds = build.build().unwrap();
        let (manifest_path, _) = save_dataset(&ds, dir.path(), "edited").unwrap();
        let text = std::fs::read_to_string(&manifest_path).unwrap();
        std::fs::write(&manifest_path, text.replace("\"L66\"", "\"L122\"")).unwrap();
        assert!(matches!(
            load_dataset(dir.path(), "edited"),
            Err(Error::SchemaMismatch(_))
        ));
    }
}
