//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints a PASS/FAIL line; the process fails if any criterion does.
//!
//! Pass criterion numbers as arguments to run a subset.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hqnet::functionals::{
    empirical_expectile, empirical_huber_quantile, empirical_quantile, lognormal_fit_mle,
};
use hqnet::network::{init_network, loss_and_gradients, ArchitectureSpec, Batch, DenseLayer, Mode};
use hqnet::scoring::{elementary_score, expectile_score, huber_quantile_score, quantile_score, score_subgradient, ElementaryKind};
use hqnet::{EmpiricalSample, LogNormalParams, NetworkModel, PredictionSet, ScoreParams};
use hqnet_cli::config::with_level;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ------------------------------------------------------------------ oracles

/// The score written exactly as defined, with no algebraic rearrangement.
fn oracle_score(x: f64, y: f64, tau: f64, a: f64, b: f64) -> f64 {
    let k = (x - y).min(b).max(-a);
    let w = (if x >= y { 1.0 } else { 0.0 } - tau).abs();
    w * (y * y - (k + y) * (k + y) + 2.0 * x * k)
}

fn oracle_pinball(x: f64, y: f64, tau: f64) -> f64 {
    let w = (if x >= y { 1.0 } else { 0.0 } - tau).abs();
    2.0 * w * (x - y).abs()
}

fn oracle_squared(x: f64, y: f64, tau: f64) -> f64 {
    let w = (if x >= y { 1.0 } else { 0.0 } - tau).abs();
    w * (x - y) * (x - y)
}

/// Grid point minimizing `f`; the first one wins ties.
fn grid_argmin(lo: f64, hi: f64, step: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = ((hi - lo) / step).ceil() as usize;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=n {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best.0
}

/// Level estimate from capped deviation sums.
fn oracle_level(ps: &PredictionSet, a: f64, b: f64) -> f64 {
    let (mut over, mut under) = (0.0, 0.0);
    for (&x, &y) in ps.predictions().iter().zip(ps.observations()) {
        over += (x - y).max(0.0).min(b);
        under += (y - x).max(0.0).min(a);
    }
    over / (over + under)
}

/// Plain inference pass; also reports the smallest hidden pre-activation magnitude.
fn oracle_forward(m: &NetworkModel, x: &[f64]) -> (f64, f64) {
    let mut act = x.to_vec();
    let mut closest = f64::INFINITY;
    let last = m.layers.len() - 1;
    for (li, l) in m.layers.iter().enumerate() {
        let mut next = vec![0.0; l.outputs];
        for (o, slot) in next.iter_mut().enumerate() {
            let z = l.bias[o] + (0..l.inputs).map(|i| l.weights[o * l.inputs + i] * act[i]).sum::<f64>();
            if li < last {
                closest = closest.min(z.abs());
                *slot = z.max(0.0);
            } else {
                *slot = z;
            }
        }
        act = next;
    }
    (act[0], closest)
}

fn param_mut(layers: &mut [DenseLayer<f64>], mut k: usize) -> &mut f64 {
    for l in layers {
        if k < l.weights.len() {
            return &mut l.weights[k];
        }
        k -= l.weights.len();
        if k < l.bias.len() {
            return &mut l.bias[k];
        }
        k -= l.bias.len();
    }
    panic!("parameter index out of range")
}

// ------------------------------------------------------------------ CLI helpers

fn cli(args: &[&str]) -> Result<(), String> {
    let mut full = vec!["hqnet"];
    full.extend_from_slice(args);
    hqnet_cli::run(full).map_err(|e| format!("`hqnet {}` failed with exit {}: {}", args.join(" "), e.code, e.message))
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn read_preds(path: &Path) -> Result<PredictionSet, String> {
    let f = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    PredictionSet::read_csv(f).map_err(|e| format!("{}: {e}", path.display()))
}

struct Ctx {
    dir: tempfile::TempDir,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Synthetic table shared by the training criteria: n = 8000, d = 5.
    fn desk_data(&self) -> Result<PathBuf, String> {
        let p = self.path("desk.csv");
        if !p.exists() {
            cli(&[
                "synth", "--n", "8000", "--d", "5", "--coefficients", "-0.3,0.4,-0.2,0.3,0.1,0.2", "--sigma", "0.534",
                "--seed", "11", "--out", s(&p),
            ])?;
        }
        Ok(p)
    }
}

// ------------------------------------------------------------------ criteria

fn c1_scoring_identities(_: &Ctx) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_e, mut worst_q, mut quantile_cases) = (0.0f64, 0.0f64, 0);
    for _ in 0..1000 {
        let (x, y, tau): (f64, f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(0.01..0.99));
        let cap = (x - y).abs() * rng.random_range(1.0..3.0) + 1e-6;
        let p = ScoreParams::new(tau, cap, cap * rng.random_range(1.0..2.0)).unwrap();
        let h = huber_quantile_score(x, y, &p).unwrap();
        worst_e = worst_e.max((h - expectile_score(x, y, tau).unwrap()).abs());

        if (x - y).abs() >= 1e-3 {
            let c = 1e-8;
            let hq = huber_quantile_score(x, y, &ScoreParams::new(tau, c, c).unwrap()).unwrap() / c;
            worst_q = worst_q.max((hq - quantile_score(x, y, tau).unwrap()).abs());
            quantile_cases += 1;
        }
    }
    ensure!(worst_e <= 1e-12, "large caps: |H - E| up to {worst_e:e}");
    ensure!(worst_q <= 1e-6, "small caps: |H/a - Q| up to {worst_q:e}");
    Ok(format!("max |H-E| {worst_e:.1e}, max |H/a-Q| {worst_q:.1e} over {quantile_cases} cases"))
}

fn c2_finite_differences(_: &Ctx) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // pointwise: the score is piecewise quadratic, so central differences
    // with a step below the kink margin carry rounding error only
    let (h, margin) = (2.5e-4, 1e-3);
    let (mut worst, mut checked) = (0.0f64, 0);
    while checked < 1000 {
        let (x, y): (f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let (tau, a, b): (f64, f64, f64) = (rng.random_range(0.05..0.95), rng.random_range(0.05..3.0), rng.random_range(0.05..3.0));
        let u = x - y;
        if u.abs() < margin || (u - b).abs() < margin || (u + a).abs() < margin {
            continue;
        }
        let p = ScoreParams::new(tau, a, b).unwrap();
        let fd = (oracle_score(x + h, y, tau, a, b) - oracle_score(x - h, y, tau, a, b)) / (2.0 * h);
        let g = score_subgradient(x, y, &p);
        worst = worst.max((g - fd).abs() / g.abs());
        checked += 1;
    }
    ensure!(worst < 1e-6, "pointwise relative error {worst:e}");

    // network: analytic gradients against differences of an independent loss
    let (d, n) = (4, 8);
    let (mut net_worst, mut trials) = (0.0f64, 0);
    for seed in 0..40u64 {
        let m: NetworkModel = init_network(&ArchitectureSpec::dense(d, &[8, 6]), seed).unwrap();
        let (tau, a, b) = (rng.random_range(0.1..0.9), rng.random_range(0.2..1.5), rng.random_range(0.2..1.5));
        let p = ScoreParams::new(tau, a, b).unwrap();
        let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let near_kink = x.chunks(d).zip(&y).any(|(row, &t)| {
            let (pred, closest) = oracle_forward(&m, row);
            let u = pred - t;
            closest < margin || u.abs() < margin || (u - b).abs() < margin || (u + a).abs() < margin
        });
        if near_kink {
            continue;
        }
        let loss = |m: &NetworkModel| {
            x.chunks(d).zip(&y).map(|(r, &t)| oracle_score(oracle_forward(m, r).0, t, tau, a, b)).sum::<f64>() / n as f64
        };
        let (_, grads) = loss_and_gradients(&m, Batch::new(&x, &y), &p, Mode::Infer, 0).unwrap();
        let analytic = grads.flatten();
        let step = 1e-6;
        let numeric: Vec<f64> = (0..analytic.len())
            .map(|k| {
                let (mut plus, mut minus) = (m.clone(), m.clone());
                *param_mut(&mut plus.layers, k) += step;
                *param_mut(&mut minus.layers, k) -= step;
                (loss(&plus) - loss(&minus)) / (2.0 * step)
            })
            .collect();
        let diff = analytic.iter().zip(&numeric).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let scale = numeric.iter().map(|v| v * v).sum::<f64>().sqrt();
        net_worst = net_worst.max(diff / scale);
        trials += 1;
        if trials == 10 {
            break;
        }
    }
    ensure!(trials >= 5, "only {trials} kink-free network configurations");
    ensure!(net_worst < 1e-4, "network relative error {net_worst:e}");
    Ok(format!("pointwise max rel err {worst:.1e}; network max rel err {net_worst:.1e} over {trials} nets"))
}

fn c3_minimizer_consistency(_: &Ctx) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let step = 1e-3;
    let mut worst = [0.0f64; 3];
    for i in 0..50u64 {
        let law = LogNormalParams::new(rng.random_range(-0.5..0.5), rng.random_range(0.2..0.8)).unwrap();
        let ys = law.sample(200, 100 + i);
        let (tau, a, b): (f64, f64, f64) = (rng.random_range(0.1..0.9), rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
        let sample = EmpiricalSample::new(ys.clone()).unwrap();
        let (lo, hi) = (sample.min(), sample.max());
        let mean = |f: &dyn Fn(f64, f64) -> f64, x: f64| ys.iter().map(|&y| f(x, y)).sum::<f64>();

        let h = empirical_huber_quantile(&sample, tau, a, b).unwrap().value;
        let q = empirical_quantile(&sample, tau).unwrap();
        let e = empirical_expectile(&sample, tau).unwrap();
        let gh = grid_argmin(lo, hi, step, |x| mean(&|x, y| oracle_score(x, y, tau, a, b), x));
        let gq = grid_argmin(lo, hi, step, |x| mean(&|x, y| oracle_pinball(x, y, tau), x));
        let ge = grid_argmin(lo, hi, step, |x| mean(&|x, y| oracle_squared(x, y, tau), x));
        for (k, (est, grid)) in [(h, gh), (q, gq), (e, ge)].into_iter().enumerate() {
            worst[k] = worst[k].max((est - grid).abs());
        }
    }
    let names = ["huber", "quantile", "expectile"];
    for (k, w) in worst.iter().enumerate() {
        ensure!(*w <= step + 1e-12, "{}: estimate and grid argmin differ by {w:e}", names[k]);
    }
    Ok(format!("max gaps huber {:.1e}, quantile {:.1e}, expectile {:.1e} (step 1e-3)", worst[0], worst[1], worst[2]))
}

fn c4_mixture(_: &Ctx) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let nodes = 100_000;
    let mut worst = 0.0f64;
    let mut cases = 0;
    while cases < 100 {
        let (x, y): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        if (x - y).abs() < 1e-3 {
            continue;
        }
        let (tau, a, b) = (rng.random_range(0.01..0.99), rng.random_range(0.05..3.0), rng.random_range(0.05..3.0));
        let p = ScoreParams::new(tau, a, b).unwrap();
        let (lo, hi) = (x.min(y), x.max(y));
        let h = (hi - lo) / (nodes - 1) as f64;
        let f = |i: usize| elementary_score(ElementaryKind::Huber, x, y, lo + h * i as f64, &p);
        let inner: f64 = (1..nodes - 1).map(f).sum();
        let mix = 2.0 * h * (inner + 0.5 * (f(0) + f(nodes - 1)));
        let exact = oracle_score(x, y, tau, a, b);
        worst = worst.max((mix - exact).abs() / exact);
        cases += 1;
    }
    ensure!(worst <= 1e-4, "relative error {worst:e}");
    Ok(format!("max relative error {worst:.1e} over {cases} cases"))
}

fn c5_regret(_: &Ctx) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let theta: f64 = rng.random_range(0.0..3.0);
        // every tenth case puts the prediction or the price exactly on theta
        let x = if i % 10 == 0 { theta } else { rng.random_range(0.0..3.0) };
        let y = if i % 10 == 5 { theta } else { rng.random_range(0.0..3.0) };
        let (r_l, r_g) = (rng.random_range(0.0..0.9), rng.random_range(0.0..0.9));
        let (a, b) = (rng.random_range(0.05..2.0), rng.random_range(0.05..2.0));
        let pol = hqnet::DecisionPolicy::new(theta, a, b, r_l, r_g).unwrap();
        let tau = (1.0 - r_g) / (2.0 - r_l - r_g);
        let e = elementary_score(ElementaryKind::Huber, x, y, theta, &ScoreParams::new(tau, a, b).unwrap());
        let r = hqnet::decision::regret(x, y, &pol);
        worst = worst.max((r - (2.0 - r_l - r_g) * e).abs());
    }
    ensure!(worst <= 1e-12, "regret differs by {worst:e}");
    Ok(format!("max |regret - (2-rL-rG) S_theta| {worst:.1e}"))
}

fn c6_lognormal_fit(ctx: &Ctx) -> Check {
    let (mu, sigma) = (-0.063, 0.534);
    let draws = LogNormalParams::new(mu, sigma).unwrap().sample(100_000, 6);
    let fit = lognormal_fit_mle(&EmpiricalSample::new(draws.clone()).unwrap()).map_err(|e| e.to_string())?;
    // closed-form MLE: mean and population standard deviation of the logs
    let logs: Vec<f64> = draws.iter().map(|v| v.ln()).collect();
    let m = logs.iter().sum::<f64>() / logs.len() as f64;
    let sd = (logs.iter().map(|l| (l - m).powi(2)).sum::<f64>() / logs.len() as f64).sqrt();
    ensure!((fit.mu - m).abs() < 1e-12 && (fit.sigma - sd).abs() < 1e-12, "MLE ({}, {}) vs closed form ({m}, {sd})", fit.mu, fit.sigma);
    ensure!((fit.mu - mu).abs() <= 0.01 && (fit.sigma - sigma).abs() <= 0.01, "fit ({}, {})", fit.mu, fit.sigma);

    let out = ctx.path("distfit.json");
    cli(&["distfit", "--draws", "100000", "--mu", "-0.063", "--sigma", "0.534", "--seed", "9", "--out", s(&out)])?;
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).map_err(|e| e.to_string())?;
    let (cmu, csig) = (doc["mu"].as_f64().unwrap_or(f64::NAN), doc["sigma"].as_f64().unwrap_or(f64::NAN));
    ensure!((cmu - mu).abs() <= 0.01 && (csig - sigma).abs() <= 0.01, "distfit ({cmu}, {csig})");
    Ok(format!("library mu {:.4} sigma {:.4}; distfit mu {cmu:.4} sigma {csig:.4}", fit.mu, fit.sigma))
}

fn c7_hand_values(_: &Ctx) -> Check {
    let p = ScoreParams::new(0.6, 0.5, 0.4).unwrap();
    let s1 = huber_quantile_score(1.0, 0.2, &p).unwrap();
    let s2 = huber_quantile_score(0.2, 1.0, &p).unwrap();
    let (o1, o2) = (oracle_score(1.0, 0.2, 0.6, 0.5, 0.4), oracle_score(0.2, 1.0, 0.6, 0.5, 0.4));
    ensure!((s1 - o1).abs() <= 1e-15 && (s2 - o2).abs() <= 1e-15, "library ({s1}, {s2}) vs oracle ({o1}, {o2})");
    ensure!((s1 - 0.192).abs() <= 1e-15 && (s2 - 0.33).abs() <= 1e-15, "values ({s1}, {s2})");
    Ok(format!("S(1.0, 0.2) = {s1}, S(0.2, 1.0) = {s2}"))
}

fn c8_empirical_functionals(_: &Ctx) -> Check {
    let ys = [0.0, 1.0, 2.0, 3.0];
    let sample = EmpiricalSample::new(ys.to_vec()).unwrap();
    let h = empirical_huber_quantile(&sample, 0.6, 0.5, 0.4).map_err(|e| e.to_string())?.value;
    let grid = grid_argmin(0.0, 3.0, 1e-5, |x| ys.iter().map(|&y| oracle_score(x, y, 0.6, 0.5, 0.4)).sum());
    ensure!((h - grid).abs() <= 1e-4, "Huber quantile {h} vs grid argmin {grid}");
    ensure!((h - 1.9667).abs() <= 1e-4, "Huber quantile {h}");
    let e = empirical_expectile(&sample, 0.6).map_err(|e| e.to_string())?;
    ensure!((e - 1.7).abs() <= 1e-9, "expectile {e}");
    Ok(format!("H = {h:.6} (grid {grid:.5}), E = {e}"))
}

fn c9_calibration(ctx: &Ctx) -> Check {
    let data = ctx.desk_data()?;
    let model = ctx.path("model3.json");
    let preds = ctx.path("model3_test.csv");
    cli(&[
        "fit", "--data", s(&data), "--arch", "model3", "--tau-list", "0.4,0.5,0.6,0.7,0.8", "--a", "0.5", "--b", "0.4",
        "--seed", "5", "--learning-rate", "0.005", "--batch-size", "32", "--patience", "10", "--max-epochs", "200",
        "--out", s(&model), "--predictions", s(&preds),
    ])?;
    let mut levels = Vec::new();
    let mut ok = true;
    for tau in [0.4, 0.5, 0.6, 0.7, 0.8] {
        let ps = read_preds(&with_level(&preds, tau))?;
        ensure!(ps.len() == 2400, "expected 2400 test rows, got {}", ps.len());
        let lvl = oracle_level(&ps, 0.5, 0.4);
        let lib = hqnet::evaluation::huber_level_estimate(&ps, 0.5, 0.4).map_err(|e| e.to_string())?;
        ensure!((lvl - lib).abs() < 1e-12, "library level {lib} vs oracle {lvl}");
        ok &= (lvl - tau).abs() <= 0.07;
        levels.push(format!("{tau}->{lvl:.3}"));
    }
    let summary = levels.join(", ");
    ensure!(ok, "level estimates off by more than 0.07: {summary}");
    Ok(summary)
}

fn c10_skill_table(ctx: &Ctx) -> Check {
    let data = ctx.desk_data()?;
    let mut files = BTreeMap::new();
    for arch in ["model1", "model2", "model3"] {
        let preds = ctx.path(&format!("{arch}_test.csv"));
        let from_c9 = with_level(&preds, 0.4);
        if from_c9.exists() {
            files.insert(arch, from_c9);
            continue;
        }
        cli(&[
            "fit", "--data", s(&data), "--arch", arch, "--tau", "0.4", "--a", "0.5", "--b", "0.4", "--seed", "5",
            "--out", s(&ctx.path(&format!("{arch}.json"))), "--predictions", s(&preds),
        ])?;
        files.insert(arch, preds);
    }
    let specs: Vec<String> = files.iter().map(|(k, v)| format!("{k}={}", v.display())).collect();
    let report = ctx.path("skill.csv");
    let mut args = vec!["evaluate", "--reference", "model3", "--tau", "0.4", "--a", "0.5", "--b", "0.4", "--out", s(&report), "--predictions"];
    args.extend(specs.iter().map(String::as_str));
    cli(&args)?;

    let mut rdr = csv::Reader::from_path(&report).map_err(|e| e.to_string())?;
    let header: Vec<String> = rdr.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    ensure!(header == ["metric", "method", "reference", "tau", "a", "b", "value"], "header {header:?}");
    let mut skills = BTreeMap::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        ensure!(rec.len() == 7, "malformed row {rec:?}");
        rows += 1;
        if &rec[0] == "skill" {
            ensure!(&rec[2] == "model3", "skill row without the reference label: {rec:?}");
            let v: f64 = rec[6].parse().map_err(|_| format!("unparsable skill {:?}", &rec[6]))?;
            skills.insert(rec[1].to_string(), v);
        } else if &rec[6] != "NA" {
            rec[6].parse::<f64>().map_err(|_| format!("unparsable value in {rec:?}"))?;
        }
    }
    ensure!(rows == 12 && skills.len() == 3, "{rows} rows, {} skill rows", skills.len());
    ensure!(skills.values().all(|&v| v <= 1.0), "skill above 1: {skills:?}");
    ensure!(skills["model3"] == 0.0, "self skill {}", skills["model3"]);
    Ok(format!("skill vs model3: model1 {:.3}, model2 {:.3}, model3 {}", skills["model1"], skills["model2"], skills["model3"]))
}

fn c11_ratio_grid(ctx: &Ctx) -> Check {
    // one right-skewed price sample per group, used as in-sample predictions
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let groups: Vec<EmpiricalSample> = (0..40u64)
        .map(|g| {
            let law = LogNormalParams::new(rng.random_range(-0.4..0.6), 0.534).unwrap();
            EmpiricalSample::new(law.sample(250, 1000 + g)).unwrap()
        })
        .collect();
    let sample_path = ctx.path("groups.csv");
    let mut w = csv::Writer::from_path(&sample_path).map_err(|e| e.to_string())?;
    w.write_record(["group", "y"]).unwrap();
    for (g, s) in groups.iter().enumerate() {
        for v in s.sorted() {
            w.write_record([g.to_string(), v.to_string()]).unwrap();
        }
    }
    w.flush().unwrap();
    drop(w);

    let tau = 0.5;
    let out = ctx.path("ratios.csv");
    cli(&["functional", "--kind", "huber", "--tau", "0.5", "--sample", s(&sample_path), "--column", "y", "--group", "group", "--ratio-grid", "--out", s(&out)])?;
    let mut table: BTreeMap<(String, String, String), f64> = BTreeMap::new();
    for rec in csv::Reader::from_path(&out).map_err(|e| e.to_string())?.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        table.insert((rec[0].to_string(), rec[1].to_string(), rec[2].to_string()), rec[3].parse().map_err(|_| "bad ratio")?);
    }
    ensure!(table.len() == 2 * 6 * 4, "{} ratio rows", table.len());

    let mean_ratio = |a: f64, b: f64, den: &dyn Fn(&EmpiricalSample) -> f64| {
        groups.iter().map(|s| empirical_huber_quantile(s, tau, a, b).unwrap().value / den(s)).sum::<f64>() / groups.len() as f64
    };
    let expectile = |s: &EmpiricalSample| empirical_expectile(s, tau).unwrap();
    let quantile = |s: &EmpiricalSample| empirical_quantile(s, tau).unwrap();

    // table entries agree with direct computation
    for (a, b) in [(0.5, 0.5), (3.0, 2.0), (1.5, 1.0)] {
        let key = |d: &str| (d.to_string(), a.to_string(), b.to_string());
        ensure!((table[&key("expectile")] - mean_ratio(a, b, &expectile)).abs() < 1e-12, "H/E table mismatch at ({a}, {b})");
        ensure!((table[&key("quantile")] - mean_ratio(a, b, &quantile)).abs() < 1e-12, "H/Q table mismatch at ({a}, {b})");
    }

    // H/E along growing caps: the default grid diagonal, then far beyond the data range
    let grow = [0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0];
    let he: Vec<f64> = grow.iter().map(|&c| mean_ratio(c, c, &expectile)).collect();
    let gaps: Vec<f64> = he.iter().map(|r| (r - 1.0).abs()).collect();
    ensure!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "H/E does not approach 1 monotonically: {he:?}");
    ensure!(gaps[gaps.len() - 1] < 1e-9, "H/E at huge caps {}", he[he.len() - 1]);

    // H/Q along shrinking caps toward the small-cap limit
    let limit = mean_ratio(1e-9, 1e-9, &quantile);
    let shrink = [2.0, 1.0, 0.5, 0.1, 0.01, 0.001];
    let hq: Vec<f64> = shrink.iter().map(|&c| mean_ratio(c, c, &quantile)).collect();
    let dist: Vec<f64> = hq.iter().map(|r| (r - limit).abs()).collect();
    ensure!(dist.windows(2).all(|w| w[1] <= w[0] + 1e-12), "H/Q does not approach {limit} monotonically: {hq:?}");
    ensure!(dist[dist.len() - 1] < 1e-3, "H/Q at caps 1e-3 is {} vs limit {limit}", hq[hq.len() - 1]);
    Ok(format!(
        "H/E {:.4} -> {:.4} -> 1 as caps grow; H/Q {:.4} -> {:.4} (limit {limit:.4}) as caps shrink",
        he[0], he[3], hq[0], hq[hq.len() - 1]
    ))
}

fn pipeline_run(dir: &Path) -> Result<(), String> {
    let p = |n: &str| dir.join(n);
    cli(&["synth", "--n", "1200", "--d", "3", "--sigma", "0.4", "--seed", "21", "--out", s(&p("raw.csv"))])?;
    cli(&["prepare", "--data", s(&p("raw.csv")), "--seed", "4", "--out", s(&p("split.csv"))])?;
    cli(&[
        "fit", "--data", s(&p("split.csv")), "--arch", "model3", "--tau", "0.6", "--a", "0.5", "--b", "0.4", "--seed", "7",
        "--max-epochs", "30", "--out", s(&p("model.json")), "--predictions", s(&p("fit_test.csv")),
    ])?;
    cli(&["predict", "--model", s(&p("model.json")), "--data", s(&p("split.csv")), "--split", "test", "--out", s(&p("test.csv"))])?;
    let (a, b) = (format!("fit={}", s(&p("fit_test.csv"))), format!("net={}", s(&p("test.csv"))));
    cli(&["evaluate", "--predictions", &a, &b, "--reference", "fit", "--tau", "0.6", "--a", "0.5", "--b", "0.4", "--out", s(&p("eval.csv")), "--json", s(&p("eval.json"))])?;
    cli(&["murphy", "--predictions", s(&p("test.csv")), "--tau", "0.6", "--a", "0.5", "--b", "0.4", "--out", s(&p("murphy.csv"))])?;
    cli(&["decide", "--predictions", s(&p("test.csv")), "--theta", "1.0", "--a", "0.5", "--b", "0.4", "--r-l", "0.2", "--r-g", "0.3", "--out", s(&p("decide.csv")), "--totals", s(&p("totals.json"))])
}

fn c12_persistence(ctx: &Ctx) -> Check {
    let (d1, d2) = (ctx.path("run1"), ctx.path("run2"));
    for d in [&d1, &d2] {
        fs::create_dir_all(d).unwrap();
        pipeline_run(d)?;
    }
    let mut names: Vec<String> = fs::read_dir(&d1).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    for n in &names {
        let (x, y) = (fs::read(d1.join(n)).unwrap(), fs::read(d2.join(n)).map_err(|_| format!("{n} missing in second run"))?);
        ensure!(x == y, "{n} differs between runs");
    }

    // save -> load -> predict is bitwise identical to the in-memory model
    let model = NetworkModel::load(d1.join("model.json")).map_err(|e| e.to_string())?;
    let copy = ctx.path("model_copy.json");
    model.save(&copy).map_err(|e| e.to_string())?;
    let reloaded = NetworkModel::load(&copy).map_err(|e| e.to_string())?;
    ensure!(fs::read(&copy).unwrap() == fs::read(d1.join("model.json")).unwrap(), "re-saved model JSON differs");
    let same_bits = |a: &NetworkModel, b: &NetworkModel| {
        a.layers.iter().zip(&b.layers).all(|(l, m)| {
            l.weights.iter().zip(&m.weights).chain(l.bias.iter().zip(&m.bias)).all(|(u, v)| u.to_bits() == v.to_bits())
        })
    };
    ensure!(same_bits(&model, &reloaded), "weights changed across save/load");
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x: Vec<f64> = (0..300 * model.input_dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
    let (p1, p2) = (model.predict_batch(&x).unwrap(), reloaded.predict_batch(&x).unwrap());
    ensure!(p1.iter().zip(&p2).all(|(u, v)| u.to_bits() == v.to_bits()), "predictions differ after reload");

    // fit's own test predictions and predict's output are the same bytes
    ensure!(fs::read(d1.join("fit_test.csv")).unwrap() == fs::read(d1.join("test.csv")).unwrap(), "fit and predict outputs differ");
    Ok(format!("{} output files byte-identical across runs; reload bitwise identical", names.len()))
}

fn main() {
    let criteria: [(&str, fn(&Ctx) -> Check); 12] = [
        ("scoring identities", c1_scoring_identities),
        ("subgradients vs finite differences", c2_finite_differences),
        ("minimizer consistency", c3_minimizer_consistency),
        ("mixture identity", c4_mixture),
        ("regret proportionality", c5_regret),
        ("log-normal fit", c6_lognormal_fit),
        ("hand values", c7_hand_values),
        ("empirical functional oracle", c8_empirical_functionals),
        ("desk-scale calibration", c9_calibration),
        ("skill-score pipeline", c10_skill_table),
        ("ratio grid", c11_ratio_grid),
        ("persistence and determinism", c12_persistence),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ctx = Ctx { dir: tempfile::tempdir().expect("temp dir") };
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| check(&ctx)))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                println!("criterion {id:>2} FAIL  {name} [{secs:.1}s]: {detail}");
                failed.push(id);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
