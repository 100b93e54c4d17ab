use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use hqnet::data::{
    load_table, split_dataset, split_from_labels, synth_lognormal_regression, LoadedTable, Split, SplitManifest,
    TableSpec,
};
use hqnet::decision::simulate_portfolio;
use hqnet::evaluation::{
    default_theta_grid, evaluate, functional_ratio_table, linspace, murphy_curve, write_murphy_csv,
    DEFAULT_THETA_NODES,
};
use hqnet::functionals::{
    distribution_huber_quantile, empirical_huber_quantile, lognormal_fit_mle, FunctionalKind, FunctionalRequest,
};
use hqnet::network::{ArchitectureSpec, Preset, TrainConfig};
use hqnet::pipeline::{fit_two_phase, predict_labeled};
use hqnet::{DecisionPolicy, EmpiricalSample, LogNormalParams, NetworkModel, PredictionSet, ScoreParams};

use crate::config::{require, sibling, with_level, Cap};
use crate::error::{CliError, CliResult};

pub const DEFAULT_A_GRID: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
pub const DEFAULT_B_GRID: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn score_params(tau: Option<f64>, a: Cap, b: Cap) -> CliResult<ScoreParams> {
    Ok(ScoreParams::new(require(tau, "tau")?, a.0, b.0)?)
}

fn fractions(v: &[f64]) -> CliResult<[f64; 3]> {
    <[f64; 3]>::try_from(v).map_err(|_| CliError::usage(format!("expected three split fractions, got {}", v.len())))
}

fn read_predictions(path: &Path) -> CliResult<PredictionSet> {
    let file = File::open(path).map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    PredictionSet::read_csv(file).map_err(|e| CliError::from(e).context(path))
}

impl CliError {
    fn context(mut self, path: &Path) -> Self {
        self.message = format!("{} ({})", self.message, path.display());
        self
    }
}

// ---------------------------------------------------------------- synth

#[derive(Serialize, Deserialize, Debug)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    /// Intercept then slopes; defaults to intercept 0 and every slope 0.5.
    pub coefficients: Option<Vec<f64>>,
    pub sigma: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { n: 1000, d: 5, coefficients: None, sigma: 0.5, seed: 0, out: None }
    }
}

pub fn synth(c: SynthConfig) -> CliResult<()> {
    let out = require(c.out, "out")?;
    let coefficients = c.coefficients.unwrap_or_else(|| {
        let mut v = vec![0.0];
        v.extend(std::iter::repeat_n(0.5, c.d));
        v
    });
    if coefficients.len() != c.d + 1 {
        return Err(CliError::usage(format!("--coefficients needs {} values (intercept and {} slopes)", c.d + 1, c.d)));
    }
    let syn = synth_lognormal_regression(c.n, c.d, &coefficients, c.sigma, c.seed)?;
    syn.dataset.write_csv(create(&out)?, None)?;
    eprintln!("wrote {} rows to {}", c.n, out.display());
    Ok(())
}

// ---------------------------------------------------------------- prepare

#[derive(Serialize, Deserialize, Debug)]
#[serde(default)]
pub struct PrepareConfig {
    pub data: Option<PathBuf>,
    pub features: Option<Vec<String>>,
    pub target: String,
    pub target_scale: Option<f64>,
    pub fractions: Vec<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            data: None,
            features: None,
            target: "y".into(),
            target_scale: None,
            fractions: vec![0.4, 0.3, 0.3],
            seed: 0,
            out: None,
            manifest: None,
        }
    }
}

fn load(path: &Path, features: Option<Vec<String>>, target: Option<String>, scale: Option<f64>) -> CliResult<LoadedTable<f64>> {
    let spec = TableSpec { features, target, target_scale: scale };
    load_table(path, &spec).map_err(|e| CliError::from(e).context(path))
}

pub fn prepare(c: PrepareConfig) -> CliResult<()> {
    let data = require(c.data, "data")?;
    let out = require(c.out, "out")?;
    let fr = fractions(&c.fractions)?;
    let table = load(&data, c.features, Some(c.target), c.target_scale)?;
    let split = split_dataset(&table.dataset, fr, c.seed)?;
    split.write_csv(create(&out)?)?;
    let manifest = SplitManifest {
        total_rows: table.total_rows,
        dropped_rows: table.dropped,
        seed: c.seed,
        fractions: fr,
        train_rows: split.train.n_rows(),
        val_rows: split.val.n_rows(),
        test_rows: split.test.n_rows(),
        normalization: "zscore fitted at training time on train, refitted on train+val".into(),
    };
    let manifest_path = c.manifest.unwrap_or_else(|| sibling(&out, "manifest.json"));
    write_text(&manifest_path, &serde_json::to_string_pretty(&manifest)?)?;
    eprintln!(
        "kept {} of {} rows ({} dropped): train {}, val {}, test {}",
        table.dataset.n_rows(),
        table.total_rows,
        table.dropped,
        manifest.train_rows,
        manifest.val_rows,
        manifest.test_rows
    );
    Ok(())
}

// ---------------------------------------------------------------- fit

#[derive(Serialize, Deserialize, Debug)]
#[serde(default)]
pub struct FitConfig {
    pub data: Option<PathBuf>,
    pub features: Option<Vec<String>>,
    pub target: String,
    pub target_scale: Option<f64>,
    pub arch: String,
    pub tau: Option<f64>,
    pub a: Cap,
    pub b: Cap,
    pub tau_list: Option<Vec<f64>>,
    pub seed: u64,
    pub split_seed: Option<u64>,
    pub fractions: Vec<f64>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
}

impl Default for FitConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        FitConfig {
            data: None,
            features: None,
            target: "y".into(),
            target_scale: None,
            arch: "model3".into(),
            tau: None,
            a: Cap::default(),
            b: Cap::default(),
            tau_list: None,
            seed: 0,
            split_seed: None,
            fractions: vec![0.4, 0.3, 0.3],
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            out: None,
            report: None,
            predictions: None,
        }
    }
}

struct FitJob {
    params: ScoreParams,
    model: PathBuf,
    report: PathBuf,
    predictions: Option<PathBuf>,
}

pub fn fit(c: FitConfig) -> CliResult<()> {
    let out = require(c.out.clone(), "out")?;
    let preset: Preset = c.arch.parse()?;
    let taus = match &c.tau_list {
        Some(list) if list.is_empty() => return Err(CliError::usage("--tau-list is empty")),
        Some(list) => list.clone(),
        None => vec![require(c.tau, "tau")?],
    };
    let leveled = c.tau_list.is_some();
    let jobs = taus
        .iter()
        .map(|&tau| {
            let name = |p: &Path| if leveled { with_level(p, tau) } else { p.to_path_buf() };
            Ok(FitJob {
                params: ScoreParams::new(tau, c.a.0, c.b.0)?,
                model: name(&out),
                report: name(&c.report.clone().unwrap_or_else(|| sibling(&out, "report.csv"))),
                predictions: c.predictions.as_deref().map(name),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let cfg = TrainConfig {
        learning_rate: c.learning_rate,
        batch_size: c.batch_size,
        max_epochs: c.max_epochs,
        patience: c.patience,
        seed: c.seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let fr = fractions(&c.fractions)?;

    let data = require(c.data, "data")?;
    let table = load(&data, c.features, Some(c.target), c.target_scale)?;
    let split = match &table.split_labels {
        Some(labels) => split_from_labels(&table.dataset, labels)?,
        None => split_dataset(&table.dataset, fr, c.split_seed.unwrap_or(c.seed))?,
    };
    let arch = ArchitectureSpec::preset(preset, table.dataset.n_features());

    // independent single-threaded runs; results are collected in level order
    let results: Vec<CliResult<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.iter().map(|job| scope.spawn(|| fit_one(job, &split, &arch, &cfg))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(CliError::data("training thread panicked")))).collect()
    });
    results.into_iter().collect()
}

fn fit_one(job: &FitJob, split: &Split<f64>, arch: &ArchitectureSpec, cfg: &TrainConfig) -> CliResult<()> {
    let outcome = fit_two_phase(split, arch, &job.params, cfg)?;
    outcome.model.save(&job.model).map_err(|e| CliError::from(e).context(&job.model))?;
    outcome.report.write_csv(create(&job.report)?)?;
    if let Some(path) = &job.predictions {
        if split.test.is_empty() {
            return Err(CliError::data("the split has no test rows to predict"));
        }
        predict_labeled(&outcome.model, &split.test)?.write_csv(create(path)?)?;
    }
    let best = outcome.report.best_epoch;
    println!(
        "tau={} best_epoch={} stopped_at={} val_score={} model={}",
        job.params.tau(),
        best,
        outcome.report.stopped_at,
        outcome.report.val_scores[best - 1],
        job.model.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- predict

#[derive(Serialize, Deserialize, Debug)]
#[serde(default)]
pub struct PredictConfig {
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub features: Option<Vec<String>>,
    /// Observation column (default: the model's target); omitted from the output if absent.
    pub target: Option<String>,
    pub target_scale: Option<f64>,
    pub split: String,
    pub out: Option<PathBuf>,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig { model: None, data: None, features: None, target: None, target_scale: None, split: "all".into(), out: None }
    }
}

pub fn predict(c: PredictConfig) -> CliResult<()> {
    let model_path = require(c.model, "model")?;
    let data = require(c.data, "data")?;
    let out = require(c.out, "out")?;
    let model = NetworkModel::load(&model_path).map_err(|e| CliError::from(e).context(&model_path))?;
    let features = match (c.features, model.feature_names.is_empty()) {
        (Some(f), _) => Some(f),
        (None, false) => Some(model.feature_names.clone()),
        (None, true) => return Err(CliError::usage("the model does not record its feature columns; pass --features")),
    };
    let target = c.target.or_else(|| (!model.target_name.is_empty()).then(|| model.target_name.clone()));
    let table = match load(&data, features.clone(), target.clone(), c.target_scale) {
        Err(e) if target.is_some() && e.message.contains("missing column") && e.message.contains(target.as_deref().unwrap()) => {
            load(&data, features, None, None)?
        }
        other => other?,
    };
    let dataset = match c.split.as_str() {
        "all" => table.dataset,
        which => {
            let labels = table
                .split_labels
                .as_ref()
                .ok_or_else(|| CliError::data(format!("--split {which} needs a `split` column in {}", data.display())))?;
            let split = split_from_labels(&table.dataset, labels)?;
            match which {
                "train" => split.train,
                "val" | "validation" => split.val,
                "test" => split.test,
                other => return Err(CliError::usage(format!("unknown --split {other:?} (train, val, test or all)"))),
            }
        }
    };
    if dataset.is_empty() {
        return Err(CliError::data("no rows selected for prediction"));
    }
    if dataset.is_labeled() {
        predict_labeled(&model, &dataset)?.write_csv(create(&out)?)?;
    } else {
        let preds = model.predict_batch(dataset.features())?;
        let mut w = csv::Writer::from_writer(create(&out)?);
        w.write_record(["id", "prediction"])?;
        for (id, x) in dataset.row_ids().iter().zip(preds) {
            w.write_record([id.to_string(), x.to_string()])?;
        }
        w.flush()?;
    }
    eprintln!("wrote {} predictions to {}", dataset.n_rows(), out.display());
    Ok(())
}

// ---------------------------------------------------------------- evaluate

#[derive(Serialize, Deserialize, Debug, Default)]
#[serde(default)]
pub struct EvaluateConfig {
    pub predictions: Vec<String>,
    pub reference: Option<String>,
    pub tau: Option<f64>,
    pub a: Cap,
    pub b: Cap,
    pub out: Option<PathBuf>,
    pub json: Option<PathBuf>,
}


fn labeled_path(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((label, path)) => (label.to_string(), PathBuf::from(path)),
        None => {
            let path = PathBuf::from(spec);
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_string());
            (label, path)
        }
    }
}

pub fn evaluate_cmd(c: EvaluateConfig) -> CliResult<()> {
    if c.predictions.len() < 2 {
        return Err(CliError::usage("evaluate needs at least two --predictions label=path entries"));
    }
    let reference = require(c.reference, "reference")?;
    let p = score_params(c.tau, c.a, c.b)?;
    let mut sets = Vec::with_capacity(c.predictions.len());
    for spec in &c.predictions {
        let (label, path) = labeled_path(spec);
        if sets.iter().any(|s: &PredictionSet| s.label.as_deref() == Some(label.as_str())) {
            return Err(CliError::usage(format!("duplicate method label {label:?}")));
        }
        sets.push(read_predictions(&path)?.labeled(label));
    }
    let report = evaluate(&sets, &reference, &p)?;
    report.write_csv(output(c.out.as_deref())?)?;
    if let Some(path) = &c.json {
        write_text(path, &report.to_json()?)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- murphy

#[derive(Serialize, Deserialize, Debug)]
#[serde(default)]
pub struct MurphyConfig {
    pub predictions: Option<PathBuf>,
    pub tau: Option<f64>,
    pub a: Cap,
    pub b: Cap,
    pub nodes: usize,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for MurphyConfig {
    fn default() -> Self {
        MurphyConfig {
            predictions: None,
            tau: None,
            a: Cap::default(),
            b: Cap::default(),
            nodes: DEFAULT_THETA_NODES,
            theta_min: None,
            theta_max: None,
            out: None,
        }
    }
}

pub fn murphy(c: MurphyConfig) -> CliResult<()> {
    let p = score_params(c.tau, c.a, c.b)?;
    let ps = read_predictions(&require(c.predictions, "predictions")?)?;
    if c.nodes < 2 {
        return Err(CliError::usage("--nodes must be at least 2"));
    }
    let grid = match (c.theta_min, c.theta_max) {
        (None, None) => default_theta_grid(&ps, c.nodes),
        (Some(lo), Some(hi)) if lo < hi => linspace(lo, hi, c.nodes),
        (Some(_), Some(_)) => return Err(CliError::usage("--theta-min must be below --theta-max")),
        _ => return Err(CliError::usage("give both --theta-min and --theta-max, or neither")),
    };
    write_murphy_csv(&murphy_curve(&ps, &p, &grid), output(c.out.as_deref())?)?;
    Ok(())
}

// ---------------------------------------------------------------- functional

#[derive(Serialize, Deserialize, Debug)]
#[serde(default)]
pub struct FunctionalConfig {
    pub kind: String,
    pub tau: Option<f64>,
    pub a: Cap,
    pub b: Cap,
    pub sample: Option<PathBuf>,
    pub column: String,
    pub group: Option<String>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub ratio_grid: bool,
    pub a_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    pub out: Option<PathBuf>,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        FunctionalConfig {
            kind: "huber".into(),
            tau: None,
            a: Cap::default(),
            b: Cap::default(),
            sample: None,
            column: "y".into(),
            group: None,
            mu: None,
            sigma: None,
            ratio_grid: false,
            a_grid: DEFAULT_A_GRID.to_vec(),
            b_grid: DEFAULT_B_GRID.to_vec(),
            out: None,
        }
    }
}

/// Values of `column`, grouped by `group` in order of first appearance.
/// Rows whose value does not parse as a finite number are skipped.
pub fn read_grouped_sample(path: &Path, column: &str, group: Option<&str>) -> CliResult<Vec<(String, EmpiricalSample)>> {
    let file = File::open(path).map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::data(format!("missing column: {name} ({})", path.display())))
    };
    let vi = find(column)?;
    let gi = group.map(find).transpose()?;
    let mut order: Vec<String> = Vec::new();
    let mut values: HashMap<String, Vec<f64>> = HashMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let Some(v) = rec.get(vi).and_then(|s| s.trim().parse::<f64>().ok()).filter(|v| v.is_finite()) else {
            continue;
        };
        let key = gi.and_then(|i| rec.get(i)).unwrap_or("all").trim().to_string();
        values
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(v);
    }
    if order.is_empty() {
        return Err(CliError::data(format!("no numeric values in column {column} of {}", path.display())));
    }
    order
        .into_iter()
        .map(|k| {
            let v = values.remove(&k).unwrap();
            Ok((k, EmpiricalSample::new(v)?))
        })
        .collect()
}

pub fn functional(c: FunctionalConfig) -> CliResult<()> {
    let kind: FunctionalKind = c.kind.parse()?;
    let p = score_params(c.tau, c.a, c.b)?;
    let req = FunctionalRequest { kind, params: p };
    let mut out = output(c.out.as_deref())?;

    match (&c.sample, c.mu, c.sigma) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(CliError::usage("give either --sample or --mu/--sigma, not both")),
        (Some(path), None, None) => {
            let groups = read_grouped_sample(path, &c.column, c.group.as_deref())?;
            if c.ratio_grid {
                return ratio_grid(&groups, &p, &c.a_grid, &c.b_grid, out);
            }
            if c.group.is_some() {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(["group", "n", "value"])?;
                for (g, s) in &groups {
                    w.write_record([g.clone(), s.len().to_string(), req.on_sample(s)?.to_string()])?;
                }
                w.flush()?;
                return Ok(());
            }
            let s = &groups[0].1;
            let mut doc = json!({"source": "sample", "n": s.len(), "kind": kind, "params": p});
            if kind == FunctionalKind::Huber {
                let est = empirical_huber_quantile(s, p.tau(), p.a(), p.b())?;
                doc["value"] = json!(est.value);
                doc["root_interval"] = json!([est.lower, est.upper]);
            } else {
                doc["value"] = json!(req.on_sample(s)?);
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            Ok(())
        }
        (None, Some(mu), Some(sigma)) => {
            if c.ratio_grid {
                return Err(CliError::usage("--ratio-grid needs --sample"));
            }
            let d = LogNormalParams::new(mu, sigma)?;
            let value = distribution_huber_quantile(&d, &req)?;
            let doc = json!({"source": "lognormal", "mu": mu, "sigma": sigma, "kind": kind, "params": p, "value": value});
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            Ok(())
        }
        _ => Err(CliError::usage("functional needs --sample FILE or both --mu and --sigma")),
    }
}

/// Writes `denominator,a,b,ratio,excluded` rows: mean Huber quantile to
/// expectile and to quantile ratios across groups, per cap pair.
fn ratio_grid(groups: &[(String, EmpiricalSample)], p: &ScoreParams, a_grid: &[f64], b_grid: &[f64], out: Box<dyn Write>) -> CliResult<()> {
    if a_grid.is_empty() || b_grid.is_empty() || a_grid.iter().chain(b_grid).any(|c| !(*c > 0.0)) {
        return Err(CliError::usage("cap grids must be nonempty and positive"));
    }
    let tau = p.tau();
    let expectiles = groups.iter().map(|(_, s)| s.expectile(tau)).collect::<hqnet::Result<Vec<f64>>>()?;
    let quantiles = groups.iter().map(|(_, s)| s.quantile(tau)).collect::<hqnet::Result<Vec<f64>>>()?;
    let huber = |a: f64, b: f64| -> hqnet::Result<Vec<f64>> {
        groups.iter().map(|(_, s)| Ok(empirical_huber_quantile(s, tau, a, b)?.value)).collect()
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["denominator", "a", "b", "ratio", "excluded"])?;
    for (name, reference) in [("expectile", &expectiles), ("quantile", &quantiles)] {
        let table = functional_ratio_table(a_grid, b_grid, reference, huber)?;
        for (a, row) in table.a_grid.iter().zip(&table.ratios) {
            for (b, r) in table.b_grid.iter().zip(row) {
                w.write_record([name.to_string(), a.to_string(), b.to_string(), r.to_string(), table.excluded.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- distfit

#[derive(Serialize, Deserialize, Debug)]
#[serde(default)]
pub struct DistfitConfig {
    pub sample: Option<PathBuf>,
    pub column: String,
    pub draws: Option<usize>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for DistfitConfig {
    fn default() -> Self {
        DistfitConfig { sample: None, column: "y".into(), draws: None, mu: None, sigma: None, seed: 0, out: None }
    }
}

pub fn distfit(c: DistfitConfig) -> CliResult<()> {
    let sample = match (&c.sample, c.draws) {
        (Some(path), None) => {
            let mut groups = read_grouped_sample(path, &c.column, None)?;
            groups.remove(0).1
        }
        (None, Some(n)) => {
            let d = LogNormalParams::new(require(c.mu, "mu")?, require(c.sigma, "sigma")?)?;
            EmpiricalSample::new(d.sample(n, c.seed))?
        }
        _ => return Err(CliError::usage("distfit needs exactly one of --sample FILE or --draws N")),
    };
    let fit = lognormal_fit_mle(&sample)?;
    let doc = json!({
        "n": sample.len(),
        "mu": fit.mu,
        "sigma": fit.sigma,
        "median": fit.median(),
        "mean": fit.mean(),
    });
    writeln!(output(c.out.as_deref())?, "{}", serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

// ---------------------------------------------------------------- decide

#[derive(Serialize, Deserialize, Debug)]
#[serde(default)]
pub struct DecideConfig {
    pub predictions: Option<PathBuf>,
    pub theta: Option<f64>,
    pub a: Cap,
    pub b: Cap,
    pub r_l: f64,
    pub r_g: f64,
    pub out: Option<PathBuf>,
    pub totals: Option<PathBuf>,
}

impl Default for DecideConfig {
    fn default() -> Self {
        DecideConfig { predictions: None, theta: None, a: Cap::default(), b: Cap::default(), r_l: 0.0, r_g: 0.0, out: None, totals: None }
    }
}

pub fn decide(c: DecideConfig) -> CliResult<()> {
    let pol = DecisionPolicy::new(require(c.theta, "theta")?, c.a.0, c.b.0, c.r_l, c.r_g)?;
    let ps = read_predictions(&require(c.predictions, "predictions")?)?;
    let outcome = simulate_portfolio(&ps, &pol);
    if let Some(path) = &c.out {
        outcome.write_csv(create(path)?)?;
    }
    let totals = outcome.totals_json()?;
    if let Some(path) = &c.totals {
        write_text(path, &totals)?;
    }
    println!("implied tau = {}", pol.tau());
    println!("{totals}");
    Ok(())
}
