//! Implementations of the CLI subcommands. Each resolves its arguments
//! (flags override --config file values override defaults), echoes the
//! resolved configuration into the output directory, and writes plain CSV
//! and JSON artifacts.

use std::path::Path;

use serde::Serialize;

use qfe_core::dataset::{
    load_dataset, make_binning, save_dataset, BinningPreset, BinningScheme, DatasetBuild,
    FeatureMode,
};
use qfe_core::estimator::{
    adaptive_certify, calibrate, dfe_baseline, dfe_sample_count, estimate, load_registry,
    qst_settings_count, save_registry, SimulatedMeasurable,
};
use qfe_core::nn::{load_model, save_model, train, TrainConfig};
use qfe_core::pipeline::{accuracy_by_k, build_registry, mean_band_eps, DeskParams};
use qfe_core::quantum::{
    fidelity_to_pure, householder_target_unitary, named_state, NamedState, QuantumState,
    StateVector,
};
use qfe_core::select::{
    pauli_weights, reference_plan, select_settings, SelectionStrategy,
};
use qfe_core::stategen::{
    purity_report, transport_state, uniformity_report, GeneratorSpec, M1Distribution, RngStream,
    StateKind,
};

use crate::args::*;
use crate::common::*;

fn parse_strategy(s: &str) -> CliResult<SelectionStrategy> {
    SelectionStrategy::parse(s)
        .ok_or_else(|| CliError::Config(format!("unknown strategy {s:?} (greedy | top-abs)")))
}

fn parse_mode(s: &str) -> CliResult<FeatureMode> {
    FeatureMode::parse(s)
        .ok_or_else(|| CliError::Config(format!("unknown feature mode {s:?}")))
}

fn parse_binning(s: &str) -> CliResult<BinningScheme> {
    BinningPreset::parse(s)
        .map(make_binning)
        .ok_or_else(|| CliError::Config(format!("unknown binning preset {s:?}")))
}

fn parse_kind(s: &str) -> CliResult<StateKind> {
    match s.to_ascii_lowercase().as_str() {
        "pure" => Ok(StateKind::Pure),
        "mixed" => Ok(StateKind::Mixed),
        _ => Err(CliError::Config(format!("unknown state kind {s:?}"))),
    }
}

fn parse_m1(s: &str) -> CliResult<M1Distribution> {
    M1Distribution::parse(s)
        .ok_or_else(|| CliError::Config(format!("unknown m1 distribution {s:?}")))
}

fn parse_hidden(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad hidden size {tok:?}")))
        })
        .collect()
}

fn parse_deltas(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad delta {tok:?}")))
        })
        .collect()
}

fn parse_named_target_id(id: &str) -> CliResult<StateVector> {
    let digits_at = id.find(|c: char| c.is_ascii_digit()).ok_or_else(|| {
        CliError::Config(format!(
            "registry target {id:?} is not a named state; pass --state-file"
        ))
    })?;
    let (name, n_str) = id.split_at(digits_at);
    let kind = NamedState::parse(name)
        .ok_or_else(|| CliError::Config(format!("unknown registry target {id:?}")))?;
    let n: usize = n_str
        .parse()
        .map_err(|_| CliError::Config(format!("bad qubit count in target id {id:?}")))?;
    Ok(named_state(kind, n)?)
}

// ---------------------------------------------------------------------------
// select

pub fn run_select(args: SelectArgs) -> CliResult<()> {
    let file: SelectArgs = match &args.config {
        Some(p) => load_config_file(p)?,
        None => SelectArgs::default(),
    };
    let (target, target_id) = resolve_target(
        pick_opt(args.target.clone(), file.target).as_deref(),
        pick_opt(args.n, file.n),
        pick_opt(args.target_file.clone(), file.target_file).as_deref(),
    )?;
    let k = pick_opt(args.k, file.k)
        .ok_or_else(|| CliError::Config("--k is required".into()))?;
    let strategy = parse_strategy(&pick(
        args.strategy.clone(),
        file.strategy,
        "greedy".into(),
    ))?;
    let dir = resolve_out_dir(args.out.as_deref(), "select");

    let plan = select_settings(&target, k, strategy, &target_id)?;

    let plan_path = dir.join(format!("{target_id}.plan.json"));
    let report_path = dir.join(format!("{target_id}.select-report.csv"));
    guard_outputs(&[plan_path.clone(), report_path.clone()], args.force)?;
    std::fs::create_dir_all(&dir)?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        target: &'a str,
        n: usize,
        k: usize,
        strategy: SelectionStrategy,
    }
    write_config_echo(
        &dir,
        "select",
        &Resolved {
            target: &target_id,
            n: target.n(),
            k,
            strategy,
        },
    )?;

    std::fs::write(
        &plan_path,
        serde_json::to_string_pretty(&plan).map_err(|e| CliError::Runtime(e.to_string()))?,
    )?;

    // Side-by-side captured-weight report against the published plan for
    // this state, when one was printed.
    let weights = pauli_weights(&target);
    let fixture = reference_plan(
        target_id.trim_end_matches(|c: char| c.is_ascii_digit()),
        target.n(),
    );
    let fixture_ledger = fixture.as_ref().map(|settings| {
        let mut covered = vec![false; weights.len()];
        covered[0] = true;
        let mut running = 0.0;
        settings
            .iter()
            .map(|s| {
                for mask in 1..1usize << target.n() {
                    let idx = s.sub_pauli(mask).index();
                    if !covered[idx] {
                        covered[idx] = true;
                        running += weights[idx];
                    }
                }
                running
            })
            .collect::<Vec<f64>>()
    });

    let mut report = String::from(
        "round,setting,captured_weight,reference_setting,reference_captured_weight\n",
    );
    let rows = plan
        .settings
        .len()
        .max(fixture.as_ref().map_or(0, |f| f.len()));
    for i in 0..rows {
        let (s, w) = match plan.settings.get(i) {
            Some(s) => (s.to_string(), format!("{:.6}", plan.captured_weight[i])),
            None => (String::new(), String::new()),
        };
        let (fs, fw) = match (&fixture, &fixture_ledger) {
            (Some(f), Some(l)) if i < f.len() => {
                (f[i].to_string(), format!("{:.6}", l[i]))
            }
            _ => (String::new(), String::new()),
        };
        report.push_str(&format!("{},{s},{w},{fs},{fw}\n", i + 1));
    }
    std::fs::write(&report_path, report)?;

    println!(
        "plan for {target_id} (k = {k}, {strategy:?}): {}",
        plan.settings
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(";")
    );
    println!(
        "captured weight {:.6} of {:.6} nonidentity total",
        plan.captured_weight.last().copied().unwrap_or(0.0),
        weights[1..].iter().sum::<f64>()
    );
    println!("wrote {} and {}", plan_path.display(), report_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// gen-data

pub fn run_gen_data(args: GenDataArgs) -> CliResult<()> {
    let file: GenDataArgs = match &args.config {
        Some(p) => load_config_file(p)?,
        None => GenDataArgs::default(),
    };
    let (target, target_id) = resolve_target(
        pick_opt(args.target.clone(), file.target).as_deref(),
        pick_opt(args.n, file.n),
        pick_opt(args.target_file.clone(), file.target_file).as_deref(),
    )?;
    let k = pick(args.k, file.k, 3);
    let strategy = parse_strategy(&pick(args.strategy.clone(), file.strategy, "greedy".into()))?;
    let mode = parse_mode(&pick(args.mode.clone(), file.mode, "outcome-probs".into()))?;
    let max_identities = pick(args.max_identities, file.max_identities, 4);
    let shots = pick(args.shots, file.shots, 10_000);
    let binning = parse_binning(&pick(args.binning.clone(), file.binning, "l122".into()))?;
    let kind = parse_kind(&pick(args.kind.clone(), file.kind, "mixed".into()))?;
    let m1_dist = parse_m1(&pick(args.m1_dist.clone(), file.m1_dist, "H".into()))?;
    let per_label_train = pick(args.per_label_train, file.per_label_train, 200);
    let per_label_val = pick(args.per_label_val, file.per_label_val, 50);
    let seed = pick(args.seed, file.seed, 42);
    let name = pick(args.name.clone(), file.name, target_id.clone());
    let dir = resolve_out_dir(args.out.as_deref(), "datasets");

    let plan = select_settings(&target, k, strategy, &target_id)?;
    let build = DatasetBuild {
        target,
        target_id: target_id.clone(),
        plan,
        mode,
        max_identities,
        shots: if shots == 0 { None } else { Some(shots) },
        binning,
        kind,
        m1_dist,
        per_label_train,
        per_label_val,
        root_seed: seed,
    };

    let manifest_path = dir.join(format!("{name}.manifest.json"));
    let csv_path = dir.join(format!("{name}.csv"));
    guard_outputs(&[manifest_path, csv_path], args.force)?;

    let dataset = build.build()?;
    let (mpath, cpath) = save_dataset(&dataset, &dir, &name)?;
    write_config_echo(&dir, &format!("{name}.gen-data"), &dataset.manifest)?;

    println!(
        "dataset {name}: {} records ({} train / {} val per label, {} bins), {} features",
        dataset.records.len(),
        per_label_train,
        per_label_val,
        dataset.manifest.binning.count(),
        dataset.manifest.feature.layout.len()
    );
    println!("wrote {} and {}", mpath.display(), cpath.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train

fn resolved_train_config(args: &TrainArgs, file: &TrainArgs, seed: u64) -> CliResult<TrainConfig> {
    let mut config = TrainConfig::desk(seed);
    config.epochs = pick(args.epochs, file.epochs, config.epochs);
    config.batch_size = pick(args.batch, file.batch, config.batch_size);
    config.learning_rate = pick(args.lr, file.lr, config.learning_rate);
    config.patience = pick(args.patience, file.patience, config.patience);
    if let Some(h) = pick_opt(args.hidden.clone(), file.hidden.clone()) {
        config.hidden = parse_hidden(&h)?;
    }
    Ok(config)
}

pub fn run_train(args: TrainArgs) -> CliResult<()> {
    let file: TrainArgs = match &args.config {
        Some(p) => load_config_file(p)?,
        None => TrainArgs::default(),
    };
    let data_dir = pick_opt(args.data_dir.clone(), file.data_dir.clone())
        .ok_or_else(|| CliError::Config("--data-dir is required".into()))?;
    let data_name = pick_opt(args.data_name.clone(), file.data_name.clone())
        .ok_or_else(|| CliError::Config("--data-name is required".into()))?;
    let seed = pick(args.train_seed, file.train_seed, 7);
    let config = resolved_train_config(&args, &file, seed)?;
    let dir = resolve_out_dir(args.out.as_deref(), "models");

    let dataset = load_dataset(&data_dir, &data_name)?;
    let k_max_data = dataset.manifest.feature.k();

    if args.registry || file.registry {
        // Train one model per k and assemble a registry directory.
        let k_min = pick(args.k_min, file.k_min, 2.min(k_max_data));
        let k_max = pick(args.k_max, file.k_max, k_max_data);
        if k_max > k_max_data || k_min < 1 || k_min > k_max {
            return Err(CliError::Config(format!(
                "k range {k_min}..{k_max} outside the dataset's 1..{k_max_data}"
            )));
        }
        let deltas = parse_deltas(&pick(args.deltas.clone(), file.deltas, "0.05,0.01".into()))?;
        let registry_dir = dir.join(format!("{data_name}-registry"));
        guard_outputs(&[registry_dir.join("registry.json")], args.force)?;

        let params = DeskParams {
            target: parse_named_target_id(&dataset.manifest.target.description)?,
            target_id: dataset.manifest.target.description.clone(),
            strategy: dataset.manifest.feature.strategy,
            k_min,
            k_max,
            binning: dataset.manifest.binning.clone(),
            mode: dataset.manifest.feature.mode,
            max_identities: dataset.manifest.feature.max_identities,
            shots: dataset.manifest.feature.shots,
            kind: dataset.manifest.generator.kind,
            m1_dist: dataset.manifest.generator.m1_dist,
            per_label_train: dataset.manifest.per_label_train,
            per_label_val: dataset.manifest.per_label_val,
            data_seed: dataset.manifest.root_seed,
            calib_seed: dataset.manifest.root_seed.wrapping_add(0x5EED),
            train: config.clone(),
            deltas: deltas.clone(),
        };
        let built = build_registry(&params, &dataset)?;
        save_registry(&built.registry, &dataset.manifest.feature, &registry_dir)?;
        for (k, history) in &built.histories {
            std::fs::write(
                registry_dir.join(format!("k{k}.history.csv")),
                history.to_csv(),
            )?;
        }
        write_config_echo(&registry_dir, "train-registry", &config)?;
        let acc = accuracy_by_k(&built.registry, &dataset, 0.01)?;
        for k in built.registry.ks() {
            let eps = mean_band_eps(&built.registry.get(k)?.calibration, deltas[0])?;
            println!(
                "k={k}: val +-1% accuracy {:.3}, mean band eps({}) {:.4}",
                acc[&k], deltas[0], eps
            );
        }
        println!("wrote registry {}", registry_dir.display());
        return Ok(());
    }

    let k = pick(args.k, file.k, k_max_data);
    if k < 1 || k > k_max_data {
        return Err(CliError::Config(format!(
            "--k {k} outside the dataset's 1..{k_max_data}"
        )));
    }
    let sliced = dataset.feature_prefix(k);
    let model_path = dir.join(format!("{data_name}.k{k}.model.json"));
    let history_path = dir.join(format!("{data_name}.k{k}.history.csv"));
    guard_outputs(&[model_path.clone(), history_path.clone()], args.force)?;

    let (model, history) = train(&sliced, &config)?;
    save_model(&model, &model_path)?;
    std::fs::write(&history_path, history.to_csv())?;
    write_config_echo(&dir, &format!("{data_name}.k{k}.train"), &config)?;

    println!(
        "trained k={k}: best val +-1% accuracy {:.3} at epoch {} ({} epochs run)",
        history.best_val_acc,
        history.best_epoch,
        history.epochs.len()
    );
    println!("wrote {}", model_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// calibrate

pub fn run_calibrate(args: CalibrateArgs) -> CliResult<()> {
    let data_dir = args
        .data_dir
        .ok_or_else(|| CliError::Config("--data-dir is required".into()))?;
    let data_name = args
        .data_name
        .ok_or_else(|| CliError::Config("--data-name is required".into()))?;
    let model_path = args
        .model
        .ok_or_else(|| CliError::Config("--model is required".into()))?;
    let deltas = parse_deltas(args.deltas.as_deref().unwrap_or("0.05,0.01"))?;

    let dataset = load_dataset(&data_dir, &data_name)?;
    let model = load_model(&model_path)?;
    let k = model.input_size() / dataset.manifest.feature.block_len();
    if k * dataset.manifest.feature.block_len() != model.input_size()
        || k > dataset.manifest.feature.k()
    {
        return Err(CliError::Integrity(
            "model input size does not match the dataset layout".into(),
        ));
    }
    let sliced = dataset.feature_prefix(k);
    if sliced.manifest.feature.layout_hash() != model.layout_hash {
        return Err(CliError::Integrity(
            "model layout hash does not match this dataset".into(),
        ));
    }
    let val = qfe_core::nn::Examples::from_records(&sliced.val_records())?;
    let model_id = model_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let table = calibrate(&model, &val, &deltas, &model_id)?;

    let out_path = args
        .out
        .unwrap_or_else(|| model_path.with_extension("calib.json"));
    guard_outputs(&[out_path.clone()], args.force)?;
    std::fs::write(
        &out_path,
        serde_json::to_string_pretty(&table).map_err(|e| CliError::Runtime(e.to_string()))?,
    )?;
    for (i, d) in deltas.iter().enumerate() {
        let vals: Vec<f64> = table.bands.iter().filter_map(|b| b.eps[i]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
        println!("delta {d}: mean band eps {mean:.4} over {} populated bands", vals.len());
    }
    println!("wrote {}", out_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// predict / certify state sourcing

fn resolve_input_state(
    registry_target: &str,
    state_file: Option<&Path>,
    true_f: Option<f64>,
    kind: StateKind,
    m1_dist: M1Distribution,
    gen_seed: u64,
) -> CliResult<(QuantumState, Option<f64>)> {
    if let Some(path) = state_file {
        let psi = load_state_file(path)?;
        return Ok((psi.into(), None));
    }
    let f = true_f.ok_or_else(|| {
        CliError::Config("provide --state-file or --true-f to generate one".into())
    })?;
    let target = parse_named_target_id(registry_target)?;
    let spec = GeneratorSpec::new(target.n(), f, kind, m1_dist, gen_seed)?;
    let raw = spec.generate(0)?;
    let u = householder_target_unitary(&target);
    let state = transport_state(&u, &raw)?;
    let achieved = fidelity_to_pure(&target, &state)?;
    Ok((state, Some(achieved)))
}

pub fn run_predict(args: PredictArgs) -> CliResult<()> {
    let registry_dir = args
        .registry
        .ok_or_else(|| CliError::Config("--registry is required".into()))?;
    let (registry, feature) = load_registry(&registry_dir)?;
    let k = args
        .k
        .or_else(|| registry.k_max())
        .ok_or_else(|| CliError::Config("registry is empty".into()))?;
    let delta = args.delta.unwrap_or(0.05);
    let kind = parse_kind(args.kind.as_deref().unwrap_or("mixed"))?;
    let m1 = parse_m1(args.m1_dist.as_deref().unwrap_or("H"))?;

    let (state, achieved) = resolve_input_state(
        &registry.target_id,
        args.state_file.as_deref(),
        args.true_f,
        kind,
        m1,
        args.gen_seed.unwrap_or(1),
    )?;

    let entry = registry.get(k)?;
    let mut measurable = SimulatedMeasurable {
        state,
        mode: feature.mode,
        max_identities: feature.max_identities,
        shots: args.shots.or(feature.shots),
        rng: RngStream::new(args.seed.unwrap_or(0), 0).rng(),
    };
    let mut features = Vec::new();
    for setting in &entry.plan.settings {
        features.extend(measurable.measure(setting)?);
    }
    let est = estimate(&registry, k, &features, delta)?;
    println!(
        "F~ = {:.4} +- {:.4} at confidence {:.0}% (k = {k}{})",
        est.f_tilde,
        est.eps,
        (1.0 - delta) * 100.0,
        match achieved {
            Some(f) => format!(", true F = {f:.4}"),
            None => String::new(),
        }
    );
    if !est.band_reliable {
        println!("note: the calibration band for this estimate is under-sampled");
    }
    Ok(())
}

pub fn run_certify(args: CertifyArgs) -> CliResult<()> {
    let registry_dir = args
        .registry
        .ok_or_else(|| CliError::Config("--registry is required".into()))?;
    let (registry, feature) = load_registry(&registry_dir)?;
    let ks = registry.ks();
    let k_min = args.k_min.or(ks.first().copied()).unwrap();
    let k_max = args.k_max.or(ks.last().copied()).unwrap();
    let threshold = args.threshold.unwrap_or(0.96);
    let delta = args.delta.unwrap_or(0.05);
    let epsilon_target = args.epsilon_target.unwrap_or(0.01);
    let kind = parse_kind(args.kind.as_deref().unwrap_or("mixed"))?;
    let m1 = parse_m1(args.m1_dist.as_deref().unwrap_or("H"))?;

    let (state, achieved) = resolve_input_state(
        &registry.target_id,
        args.state_file.as_deref(),
        args.true_f,
        kind,
        m1,
        args.gen_seed.unwrap_or(1),
    )?;
    let mut measurable = SimulatedMeasurable {
        state,
        mode: feature.mode,
        max_identities: feature.max_identities,
        shots: args.shots.or(feature.shots),
        rng: RngStream::new(args.seed.unwrap_or(0), 0).rng(),
    };
    let decision = adaptive_certify(
        &registry,
        &mut measurable,
        threshold,
        delta,
        epsilon_target,
        k_min,
        k_max,
    )?;

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        let transcript = dir.join("certify.transcript.jsonl");
        let decision_path = dir.join("certify.decision.json");
        guard_outputs(&[transcript.clone(), decision_path.clone()], args.force)?;
        std::fs::write(&transcript, decision.transcript_jsonl())?;
        std::fs::write(
            &decision_path,
            serde_json::to_string_pretty(&decision)
                .map_err(|e| CliError::Runtime(e.to_string()))?,
        )?;
        println!("wrote {} and {}", transcript.display(), decision_path.display());
    }

    for round in &decision.rounds {
        println!(
            "k={}: F~ {:.4} +- {:.4}{}{}",
            round.k,
            round.f_tilde,
            round.eps,
            if round.straddle_rule { " [straddle rule]" } else { "" },
            match round.verdict {
                Some(v) => format!(" -> {v:?}"),
                None => " -> continue".into(),
            }
        );
    }
    println!(
        "verdict: {:?} (threshold {threshold}, delta {delta}{})",
        decision.verdict,
        match achieved {
            Some(f) => format!(", true F = {f:.4}"),
            None => String::new(),
        }
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// benchmark

/// Wilcoxon signed-rank statistic and a one-sided normal-approximation
/// p-value for "the second member of each pair is larger".
fn wilcoxon_increase(pairs: &[(f64, f64)]) -> (f64, f64) {
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| b - a)
        .filter(|d| d.abs() > 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mut ranked: Vec<(f64, f64)> = diffs.iter().map(|d| (d.abs(), *d)).collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut w_plus = 0.0;
    for (i, (_, d)) in ranked.iter().enumerate() {
        if *d > 0.0 {
            w_plus += (i + 1) as f64;
        }
    }
    let mean = n as f64 * (n + 1) as f64 / 4.0;
    let sd = (n as f64 * (n + 1) as f64 * (2 * n + 1) as f64 / 24.0).sqrt();
    let z = (w_plus - mean) / sd;
    let p = 0.5 * (1.0 - erf_approx(z / std::f64::consts::SQRT_2));
    (w_plus, p)
}

fn erf_approx(x: f64) -> f64 {
    // Abramowitz-Stegun 7.1.26.
    let sign = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn desk_params_from(args: &BenchmarkArgs, seed_offset: u64) -> CliResult<DeskParams> {
    let mut p = DeskParams::bell_desk(
        args.seed.unwrap_or(40) + seed_offset,
        args.train_seed.unwrap_or(400) + seed_offset,
    );
    if let (Some(t), n) = (&args.target, args.n) {
        let (target, target_id) = resolve_target(Some(t), n, None)?;
        p.target = target;
        p.target_id = target_id;
    }
    if let Some(b) = &args.binning {
        p.binning = parse_binning(b)?;
    }
    if let Some(t) = args.per_label_train {
        p.per_label_train = t;
    }
    if let Some(v) = args.per_label_val {
        p.per_label_val = v;
    }
    if let Some(s) = args.shots {
        p.shots = if s == 0 { None } else { Some(s) };
    }
    if let Some(k) = args.k_min {
        p.k_min = k;
    }
    if let Some(k) = args.k_max {
        p.k_max = k;
    }
    if let Some(e) = args.epochs {
        p.train.epochs = e;
    }
    Ok(p)
}

pub fn run_benchmark(args: BenchmarkArgs) -> CliResult<()> {
    let suite = args
        .suite
        .clone()
        .ok_or_else(|| CliError::Config("--suite is required".into()))?;
    let dir = resolve_out_dir(args.out.as_deref(), "benchmarks");
    std::fs::create_dir_all(&dir)?;
    let seeds = args.seeds.unwrap_or(3) as u64;
    let out = dir.join(format!("{suite}.csv"));
    guard_outputs(&[out.clone()], args.force)?;
    write_config_echo(&dir, &format!("benchmark-{suite}"), &args)?;

    match suite.as_str() {
        "acc_vs_k" => {
            let mut csv = String::from("k,seed,val_acc_pm1,mean_band_eps,runtime_s\n");
            let mut by_k: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
            for s in 0..seeds {
                let p = desk_params_from(&args, s)?;
                let t0 = std::time::Instant::now();
                let dataset = p.build_dataset()?;
                let built = build_registry(&p, &dataset)?;
                let runtime = t0.elapsed().as_secs_f64();
                let acc = accuracy_by_k(&built.registry, &dataset, 0.01)?;
                for k in built.registry.ks() {
                    let eps = mean_band_eps(&built.registry.get(k)?.calibration, p.deltas[0])?;
                    csv.push_str(&format!(
                        "{k},{s},{:.6},{:.6},{runtime:.1}\n",
                        acc[&k], eps
                    ));
                    by_k.entry(k).or_default().push(acc[&k]);
                }
            }
            // Wilcoxon trend over adjacent-k accuracy pairs, pooled seeds.
            let ks: Vec<usize> = by_k.keys().copied().collect();
            let mut pairs = Vec::new();
            for w in ks.windows(2) {
                for s in 0..seeds as usize {
                    pairs.push((by_k[&w[0]][s], by_k[&w[1]][s]));
                }
            }
            let (w_plus, p_value) = wilcoxon_increase(&pairs);
            csv.push_str(&format!(
                "# wilcoxon increasing-accuracy trend: W+ = {w_plus}, one-sided p = {p_value:.4}\n"
            ));
            std::fs::write(&out, csv)?;
        }
        "eps_vs_F" => {
            let mut csv = String::from("k,seed,band_lo,band_hi,samples,eps_delta05\n");
            for s in 0..seeds {
                let p = desk_params_from(&args, s)?;
                let dataset = p.build_dataset()?;
                let built = build_registry(&p, &dataset)?;
                for k in built.registry.ks() {
                    for band in &built.registry.get(k)?.calibration.bands {
                        if let Some(eps) = band.eps[0] {
                            csv.push_str(&format!(
                                "{k},{s},{:.2},{:.2},{},{:.6}\n",
                                band.lo, band.hi, band.samples, eps
                            ));
                        }
                    }
                }
            }
            std::fs::write(&out, csv)?;
        }
        "noise_sweep" => {
            let mut csv = String::from("shots,seed,val_acc_pm1\n");
            for s in 0..seeds {
                for shots in [1_000u64, 4_000, 7_000, 10_000, 100_000, 1_000_000] {
                    let mut p = desk_params_from(&args, s)?;
                    p.k_min = p.k_max.min(3);
                    p.k_max = p.k_min;
                    p.shots = Some(shots);
                    let dataset = p.build_dataset()?;
                    let built = build_registry(&p, &dataset)?;
                    let acc = accuracy_by_k(&built.registry, &dataset, 0.01)?;
                    csv.push_str(&format!("{shots},{s},{:.6}\n", acc[&p.k_min]));
                }
            }
            std::fs::write(&out, csv)?;
        }
        "label_sweep" => {
            let mut csv = String::from("labels,seed,val_acc_pm1\n");
            for s in 0..seeds {
                for preset in ["l66", "l122", "l234"] {
                    let mut p = desk_params_from(&args, s)?;
                    p.binning = parse_binning(preset)?;
                    p.k_min = p.k_max;
                    let dataset = p.build_dataset()?;
                    let built = build_registry(&p, &dataset)?;
                    let acc = accuracy_by_k(&built.registry, &dataset, 0.01)?;
                    csv.push_str(&format!(
                        "{},{s},{:.6}\n",
                        p.binning.count(),
                        acc[&p.k_max]
                    ));
                }
            }
            std::fs::write(&out, csv)?;
        }
        "scaling" => {
            let mut csv = String::from("n,target,seed,k,val_acc_pm1,mean_band_eps\n");
            let targets: &[(&str, usize)] = &[("bell", 2), ("ghz", 3), ("ghz", 4)];
            for s in 0..seeds {
                for (t, n) in targets {
                    let mut p = desk_params_from(&args, s)?;
                    let (target, target_id) = resolve_target(Some(t), Some(*n), None)?;
                    p.target = target;
                    p.target_id = target_id;
                    p.k_min = 3;
                    p.k_max = 3;
                    let dataset = p.build_dataset()?;
                    let built = build_registry(&p, &dataset)?;
                    let acc = accuracy_by_k(&built.registry, &dataset, 0.01)?;
                    let eps = mean_band_eps(&built.registry.get(3)?.calibration, p.deltas[0])?;
                    csv.push_str(&format!("{n},{t},{s},3,{:.6},{:.6}\n", acc[&3], eps));
                }
            }
            std::fs::write(&out, csv)?;
        }
        "uniformity" => {
            let p = desk_params_from(&args, 0)?;
            let spec = GeneratorSpec::new(
                4,
                0.25,
                StateKind::Pure,
                M1Distribution::E,
                p.data_seed,
            )?;
            let states: Vec<QuantumState> = (0..1000)
                .map(|i| spec.generate(i))
                .collect::<Result<_, _>>()?;
            let mut rng = RngStream::new(p.data_seed, 999).rng();
            let report = uniformity_report(&states, 4, 20, &mut rng)?;
            let mut csv = String::from("anchor,bin_lo,bin_hi,count\n");
            for a in &report.anchors {
                for (i, c) in a.counts.iter().enumerate() {
                    csv.push_str(&format!(
                        "{},{:.3},{:.3},{c}\n",
                        a.anchor,
                        report.edges[i],
                        report.edges[i + 1]
                    ));
                }
            }
            for i in 0..report.anchors.len() {
                for j in (i + 1)..report.anchors.len() {
                    let ks = qfe_core::stategen::ks_statistic(
                        &report.anchors[i].samples,
                        &report.anchors[j].samples,
                    );
                    csv.push_str(&format!(
                        "# ks anchors {} vs {}: {ks:.4}\n",
                        report.anchors[i].anchor, report.anchors[j].anchor
                    ));
                }
            }
            std::fs::write(&out, csv)?;
        }
        "purity" => {
            let p = desk_params_from(&args, 0)?;
            let dists = [
                M1Distribution::A,
                M1Distribution::B,
                M1Distribution::C,
                M1Distribution::D,
                M1Distribution::E,
                M1Distribution::F,
                M1Distribution::G,
                M1Distribution::H,
                M1Distribution::I,
            ];
            let report = purity_report(4, 0.25, &dists, 500, 20, p.data_seed)?;
            let mut csv = String::from("dist,bin_lo,bin_hi,count,mean_purity\n");
            for row in &report.rows {
                for (i, c) in row.counts.iter().enumerate() {
                    csv.push_str(&format!(
                        "{},{:.3},{:.3},{c},{:.6}\n",
                        row.dist,
                        report.edges[i],
                        report.edges[i + 1],
                        row.mean_purity
                    ));
                }
            }
            std::fs::write(&out, csv)?;
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown suite {other:?} (acc_vs_k | eps_vs_F | noise_sweep | label_sweep | scaling | uniformity | purity)"
            )));
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// baseline

pub fn run_baseline(args: BaselineArgs) -> CliResult<()> {
    let method = args
        .method
        .clone()
        .ok_or_else(|| CliError::Config("--method dfe|qst is required".into()))?;
    match method.as_str() {
        "qst" => {
            let n = args
                .n
                .ok_or_else(|| CliError::Config("--n is required for qst".into()))?;
            println!("qst settings for n = {n}: {}", qst_settings_count(n));
        }
        "dfe" => {
            let epsilon = args.epsilon.unwrap_or(0.01);
            let delta = args.delta.unwrap_or(0.05);
            let required = dfe_sample_count(epsilon, delta);
            println!(
                "dfe requires ceil(8/(eps^2 delta)) = {required} sampled Pauli settings \
                 for eps = {epsilon}, delta = {delta}"
            );
            if let Some(true_f) = args.true_f {
                let (target, target_id) = resolve_target(
                    args.target.as_deref().or(Some("ghz")),
                    args.n.or(Some(3)),
                    None,
                )?;
                let cap = args.cap.unwrap_or(10_000);
                let seeds = args.seeds.unwrap_or(50) as u64;
                let state: QuantumState = if (true_f - 1.0).abs() < 1e-12 {
                    target.clone().into()
                } else {
                    let spec = GeneratorSpec::new(
                        target.n(),
                        true_f,
                        StateKind::Mixed,
                        M1Distribution::H,
                        args.seed.unwrap_or(5001),
                    )?;
                    let raw = spec.generate(0)?;
                    transport_state(&householder_target_unitary(&target), &raw)?
                };
                let truth = fidelity_to_pure(&target, &state)?;
                let mut estimates = Vec::new();
                for s in 0..seeds {
                    let mut rng = RngStream::new(args.seed.unwrap_or(5001) + 1 + s, 0).rng();
                    let out = dfe_baseline(&target, &state, epsilon, delta, Some(cap), &mut rng)?;
                    estimates.push(out.estimate);
                }
                let mean: f64 = estimates.iter().sum::<f64>() / estimates.len() as f64;
                let var: f64 = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
                    / (estimates.len() - 1).max(1) as f64;
                println!(
                    "desk run on {target_id} (true F {truth:.4}, cap {cap}, {seeds} seeds): \
                     mean F^ = {mean:.4}, std {:.4}",
                    var.sqrt()
                );
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown baseline method {other:?}"
            )))
        }
    }
    Ok(())
}
