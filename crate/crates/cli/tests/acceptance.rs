//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero when any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Instant;

use ndarray::Array2;
use noniid_core::baseline::{
    mf_gradient, mf_objective, predict_ubcf, train_mf, MfConfig, NeighborhoodParams, PearsonCache,
    RatingMatrixView,
};
use noniid_core::coupled::{
    build_cell_couplings, cmf_gradient, cmf_objective, kmodes_fit, train_cmf, CmfConfig, CouplingGraph,
    KModesConfig,
};
use noniid_core::similarity::{build_object_sim_matrix, CoupledSimilarity, ObjectSimMatrix};
use noniid_core::store::{Attribute, AttributeTable, Dataset, Rating, RatingScale, RatingTable, Side, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scale() -> RatingScale {
    RatingScale::new(1.0, 5.0).unwrap()
}

type Codes = Vec<Vec<Option<u8>>>;

/// `rows` objects, 1..=max_attrs attributes with 1..=max_values values each,
/// about 15 % of cells missing.
fn random_codes(rng: &mut ChaCha8Rng, rows: usize, max_attrs: usize, max_values: u8) -> Codes {
    let cards: Vec<u8> = (0..rng.random_range(1..=max_attrs))
        .map(|_| rng.random_range(1..=max_values))
        .collect();
    (0..rows)
        .map(|_| {
            cards
                .iter()
                .map(|&c| (!rng.random_bool(0.15)).then(|| rng.random_range(0..c)))
                .collect()
        })
        .collect()
}

fn table_from_codes(prefix: &str, codes: &Codes) -> AttributeTable {
    AttributeTable::new(
        (0..codes.len()).map(|i| format!("{prefix}{i}")).collect(),
        (0..codes[0].len()).map(|j| Attribute::categorical(format!("a{j}"))).collect(),
        codes
            .iter()
            .map(|row| row.iter().map(|c| c.map(|c| Value::cat(format!("v{c}")))).collect())
            .collect(),
    )
    .unwrap()
}

/// Each (user, item) pair rated with probability `density`; never empty.
fn random_ratings(rng: &mut ChaCha8Rng, users: usize, items: usize, density: f64) -> Vec<Rating> {
    let mut out: Vec<Rating> = Vec::new();
    for u in 0..users {
        for i in 0..items {
            if rng.random_bool(density) || (out.is_empty() && u + 1 == users && i + 1 == items) {
                out.push(Rating::new(format!("u{u}"), format!("i{i}"), rng.random_range(1..=5) as f64));
            }
        }
    }
    out
}

fn random_view(rng: &mut ChaCha8Rng, users: usize, items: usize, density: f64) -> RatingMatrixView {
    let table = RatingTable::new(random_ratings(rng, users, items, density), scale()).unwrap();
    RatingMatrixView::from_table(&table).unwrap()
}

fn random_sims(rng: &mut ChaCha8Rng, side: Side, ids: &[String]) -> ObjectSimMatrix {
    let n = ids.len();
    let mut values = vec![0.0; n * n];
    for a in 0..n {
        values[a * n + a] = 1.0;
        for b in a + 1..n {
            let s = if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() };
            values[a * n + b] = s;
            values[b * n + a] = s;
        }
    }
    ObjectSimMatrix::from_dense(side, ids.to_vec(), values).unwrap()
}

// 1 -------------------------------------------------------------------------

fn directional_reproduction() -> Outcome {
    let data = std::env::var_os("ML100K_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace().join("data/ml-100k"));
    ensure(data.join("u.data").is_file(), || {
        format!("MovieLens 100K not found at {} (set ML100K_DIR)", data.display())
    })?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(workspace().join("configs/ml100k.toml")).map_err(|e| e.to_string())?;
    let mut config: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    config["dataset"]["path"] = toml::Value::String(data.canonicalize().unwrap().display().to_string());
    let config_path = tmp.path().join("ml100k.toml");
    std::fs::write(&config_path, toml::to_string(&config).unwrap()).map_err(|e| e.to_string())?;

    let out = tmp.path().join("run");
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_noniid"))
        .args(["run", "--config"])
        .arg(&config_path)
        .env("NONIID_OUT_DIR", &out)
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(status.success(), || format!("noniid run exited with {status}"))?;
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    let mae = |model: &str| -> Result<f64, String> {
        metrics["rows"]
            .as_array()
            .and_then(|rows| rows.iter().find(|r| r["model"] == model))
            .and_then(|r| r["mae"].as_f64())
            .ok_or_else(|| format!("no MAE for {model}"))
    };
    let (cmf, ubcf, ibcf, mf) = (mae("cmf")?, mae("ubcf")?, mae("ibcf")?, mae("mf")?);
    let summary = format!("CMF {cmf:.4}, UBCF {ubcf:.4}, IBCF {ibcf:.4}, MF {mf:.4}, {elapsed:.0}s");
    ensure(cmf < ubcf && cmf < ibcf, || format!("ordering violated: {summary}"))?;
    ensure((0.85..=1.00).contains(&cmf), || format!("CMF outside [0.85, 1.00]: {summary}"))?;
    ensure((0.88..=0.97).contains(&ubcf), || format!("UBCF outside [0.88, 0.97]: {summary}"))?;
    ensure(elapsed < 900.0, || format!("too slow: {summary}"))?;
    Ok(summary)
}

// 2 -------------------------------------------------------------------------

fn reduction_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..5 {
        let view = random_view(&mut rng, 30, 40, 0.3);
        let users = random_sims(&mut rng, Side::User, view.user_ids());
        let items = random_sims(&mut rng, Side::Item, view.item_ids());
        let mf = MfConfig {
            factors: 8,
            epochs: 30,
            seed: 42 + case,
            ..MfConfig::default()
        };
        let plain = train_mf(&view, &mf).unwrap();
        let coupled = train_cmf(&view, &users, &items, &CmfConfig { mf, alpha: 0.0, beta: 0.0, top_m: 10 }).unwrap();
        let bits = |a: ndarray::ArrayView2<f64>| a.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        ensure(bits(plain.p()) == bits(coupled.core().p()), || format!("case {case}: P differs"))?;
        ensure(bits(plain.q()) == bits(coupled.core().q()), || format!("case {case}: Q differs"))?;
        for u in 0..view.n_users() {
            for i in 0..view.n_items() {
                ensure(plain.predict_at(u, i).to_bits() == coupled.predict_at(u, i).to_bits(), || {
                    format!("case {case}: prediction ({u}, {i}) differs")
                })?;
            }
        }
    }
    Ok("5 seeds, P, Q and all predictions bit-identical".into())
}

// 3 -------------------------------------------------------------------------

fn numeric_gradient(x: &Array2<f64>, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let h = 1e-5;
    let mut g = Array2::zeros(x.raw_dim());
    let mut probe = x.clone();
    for idx in ndarray::indices(x.raw_dim()) {
        let orig = probe[idx];
        probe[idx] = orig + h;
        let up = f(&probe);
        probe[idx] = orig - h;
        let down = f(&probe);
        probe[idx] = orig;
        g[idx] = (up - down) / (2.0 * h);
    }
    g
}

fn relative_error(analytic: &Array2<f64>, numeric: &Array2<f64>) -> f64 {
    let norm = |a: &Array2<f64>| a.mapv(|d| d * d).sum().sqrt();
    norm(&(analytic - numeric)) / norm(numeric).max(norm(analytic)).max(f64::MIN_POSITIVE)
}

fn gradient_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = (0.0f64, 0.0f64);
    let points = 12;
    for _ in 0..points {
        let view = random_view(&mut rng, 6, 7, 0.5);
        let k = rng.random_range(1..=4);
        let mut cfg = CmfConfig::default();
        cfg.mf.regularization = rng.random_range(0.0..2.0);
        cfg.alpha = rng.random_range(0.0..3.0);
        cfg.beta = rng.random_range(0.0..3.0);
        cfg.top_m = rng.random_range(1..=5);
        let ug = CouplingGraph::build(&view, &random_sims(&mut rng, Side::User, view.user_ids()), cfg.top_m).unwrap();
        let ig = CouplingGraph::build(&view, &random_sims(&mut rng, Side::Item, view.item_ids()), cfg.top_m).unwrap();
        let p = Array2::from_shape_simple_fn((view.n_users(), k), || rng.random_range(-1.0..1.0));
        let q = Array2::from_shape_simple_fn((view.n_items(), k), || rng.random_range(-1.0..1.0));

        let lambda = cfg.mf.regularization;
        let (gp, gq) = mf_gradient(&view, &p, &q, lambda);
        let e = relative_error(&gp, &numeric_gradient(&p, |p| mf_objective(&view, p, &q, lambda)))
            .max(relative_error(&gq, &numeric_gradient(&q, |q| mf_objective(&view, &p, q, lambda))));
        worst.0 = worst.0.max(e);

        let (gp, gq) = cmf_gradient(&view, &p, &q, &cfg, &ug, &ig).unwrap();
        let obj = |p: &Array2<f64>, q: &Array2<f64>| cmf_objective(&view, p, q, &cfg, &ug, &ig).unwrap();
        let e = relative_error(&gp, &numeric_gradient(&p, |p| obj(p, &q)))
            .max(relative_error(&gq, &numeric_gradient(&q, |q| obj(&p, q))));
        worst.1 = worst.1.max(e);
    }
    let summary = format!("{points} points each, worst relative error MF {:.1e}, CMF {:.1e}", worst.0, worst.1);
    ensure(worst.0 < 1e-4 && worst.1 < 1e-4, || summary.clone())?;
    Ok(summary)
}

// 4 -------------------------------------------------------------------------

/// Coupled similarities straight from raw rows.
struct BruteForce<'a>(&'a Codes);

impl BruteForce<'_> {
    fn domain(&self, j: usize) -> Vec<u8> {
        let mut vals: Vec<u8> = self.0.iter().filter_map(|r| r[j]).collect();
        vals.sort_unstable();
        vals.dedup();
        vals
    }

    fn intra(&self, j: usize, x: u8, y: u8) -> f64 {
        let f = |v| self.0.iter().filter(|r| r[j] == Some(v)).count() as f64;
        let (fx, fy) = (f(x), f(y));
        fx * fy / (fx + fy + fx * fy)
    }

    fn conditional(&self, j: usize, x: u8, k: usize) -> Option<Vec<f64>> {
        let with_x: Vec<_> = self.0.iter().filter(|r| r[j] == Some(x) && r[k].is_some()).collect();
        (!with_x.is_empty()).then(|| {
            self.domain(k)
                .into_iter()
                .map(|w| with_x.iter().filter(|r| r[k] == Some(w)).count() as f64 / with_x.len() as f64)
                .collect()
        })
    }

    fn inter(&self, j: usize, x: u8, y: u8) -> f64 {
        let overlaps: Vec<f64> = (0..self.0[0].len())
            .filter(|&k| k != j)
            .filter_map(|k| {
                let (px, py) = (self.conditional(j, x, k)?, self.conditional(j, y, k)?);
                Some(px.iter().zip(&py).map(|(a, b)| a.min(*b)).sum())
            })
            .collect();
        if overlaps.is_empty() {
            1.0
        } else {
            overlaps.iter().sum::<f64>() / overlaps.len() as f64
        }
    }

    fn object(&self, a: usize, b: usize) -> f64 {
        let sims: Vec<f64> = (0..self.0[0].len())
            .filter_map(|j| {
                let (x, y) = (self.0[a][j]?, self.0[b][j]?);
                Some(self.intra(j, x, y) * self.inter(j, x, y))
            })
            .collect();
        if sims.is_empty() {
            0.0
        } else {
            sims.iter().sum::<f64>() / sims.len() as f64
        }
    }
}

fn similarity_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0usize;
    for t in 0..200 {
        let rows = rng.random_range(1..=8);
        let codes = random_codes(&mut rng, rows, 3, 3);
        let table = table_from_codes("o", &codes);
        let sim = CoupledSimilarity::fit(&table).unwrap();
        let oracle = BruteForce(&codes);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        for j in 0..codes[0].len() {
            let attr = format!("a{j}");
            for x in oracle.domain(j) {
                for y in oracle.domain(j) {
                    let (xs, ys) = (format!("v{x}"), format!("v{y}"));
                    let intra = sim.intra(&attr, &xs, &ys).unwrap();
                    let inter = sim.inter(&attr, &xs, &ys).unwrap();
                    let value = sim.value_sim(&attr, &xs, &ys).unwrap();
                    let expect = (oracle.intra(j, x, y), oracle.inter(j, x, y));
                    ensure(close(intra, expect.0) && close(inter, expect.1) && close(value, expect.0 * expect.1), || {
                        format!("table {t}: {attr} ({xs}, {ys}) disagrees with the oracle")
                    })?;
                    ensure(intra > 0.0 && intra < 1.0 && (0.0..=1.0).contains(&inter) && (0.0..=1.0).contains(&value), || {
                        format!("table {t}: out of range")
                    })?;
                    ensure(value.to_bits() == sim.value_sim(&attr, &ys, &xs).unwrap().to_bits(), || {
                        format!("table {t}: value similarity asymmetric")
                    })?;
                    ensure(x != y || inter == 1.0, || format!("table {t}: inter({xs}, {xs}) = {inter}"))?;
                    checked += 1;
                }
            }
        }
        let matrix = build_object_sim_matrix(&table, Side::User).unwrap();
        for a in 0..rows {
            for b in 0..rows {
                let s = matrix.get(a, b);
                ensure(close(s, oracle.object(a, b)) && (0.0..=1.0).contains(&s), || {
                    format!("table {t}: COS({a}, {b}) = {s}, oracle {}", oracle.object(a, b))
                })?;
                ensure(s.to_bits() == matrix.get(b, a).to_bits(), || format!("table {t}: COS asymmetric"))?;
            }
        }
    }
    Ok(format!("200 tables, {checked} value pairs and all object pairs match"))
}

// 5 -------------------------------------------------------------------------

fn tensor_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let taus = [0.0, 0.5, 1.0, 3.0, 10.0, 100.0, f64::INFINITY];
    let mut cells = 0usize;
    for t in 0..50 {
        let (nu, ni) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let users = random_codes(&mut rng, nu, 3, 3);
        let items = random_codes(&mut rng, ni, 3, 3);
        let ratings = random_ratings(&mut rng, nu, ni, 0.6);
        let ds = Dataset::assemble(
            RatingTable::new(ratings.clone(), scale()).unwrap(),
            table_from_codes("u", &users),
            table_from_codes("i", &items),
            BTreeMap::new(),
            true,
        )
        .unwrap();
        let tensors: Vec<_> = taus.iter().map(|&tau| build_cell_couplings(&ds, &ratings, tau).unwrap()).collect();
        let exact = &tensors[0];
        let mu = exact.global_mean();
        let pos = |id: &str| id[1..].parse::<usize>().unwrap();
        let code = |v: &str| v[1..].parse::<u8>().unwrap();
        for (p, pname) in exact.user_attributes().iter().enumerate() {
            for (q, qname) in exact.item_attributes().iter().enumerate() {
                for x in exact.user_domain(p) {
                    for w in exact.item_domain(q) {
                        let cell: Vec<f64> = ratings
                            .iter()
                            .filter(|r| users[pos(&r.user)][p] == Some(code(x)) && items[pos(&r.item)][q] == Some(code(w)))
                            .map(|r| r.rating)
                            .collect();
                        let (d, n) = exact.entry(pname, x, qname, w).unwrap();
                        ensure(n as usize == cell.len(), || format!("dataset {t}: support mismatch"))?;
                        if cell.is_empty() {
                            ensure(d == 0.0, || format!("dataset {t}: unsupported cell is {d}"))?;
                        } else {
                            let mean = cell.iter().sum::<f64>() / cell.len() as f64;
                            ensure((mu + d - mean).abs() <= 1e-12, || {
                                format!("dataset {t}: mu + D = {}, conditional mean {mean}", mu + d)
                            })?;
                            cells += 1;
                        }
                    }
                }
                for pair in tensors.windows(2) {
                    let (lo, hi) = (&pair[0].cell(p, q).residuals, &pair[1].cell(p, q).residuals);
                    ensure(lo.iter().zip(hi).all(|(a, b)| b.abs() <= a.abs()), || {
                        format!("dataset {t}: shrinkage from tau {} to {} grew an entry", pair[0].tau(), pair[1].tau())
                    })?;
                }
            }
        }
    }
    Ok(format!("50 datasets, {cells} supported cells exact, shrinkage monotone over {} taus", taus.len()))
}

// 6 -------------------------------------------------------------------------

fn kmodes_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut max_iter_seen = 0;
    for t in 0..50 {
        let n = rng.random_range(1..=40);
        let codes = random_codes(&mut rng, n, 3, 3);
        let sim = CoupledSimilarity::fit(&table_from_codes("i", &codes)).unwrap();
        let config = KModesConfig {
            clusters: rng.random_range(1..=n.min(8)),
            seed: rng.random(),
            max_iter: 50,
        };
        let fit = kmodes_fit(&sim, &config).unwrap();
        ensure(fit.objective_trace().windows(2).all(|w| w[1] >= w[0]), || {
            format!("table {t}: objective fell: {:?}", fit.objective_trace())
        })?;
        ensure(fit.iterations() <= 50 && fit.converged(), || {
            format!("table {t}: {} passes, converged {}", fit.iterations(), fit.converged())
        })?;
        ensure(fit == kmodes_fit(&sim, &config).unwrap(), || format!("table {t}: not deterministic"))?;
        max_iter_seen = max_iter_seen.max(fit.iterations());
    }
    Ok(format!("50 tables, objective non-decreasing, at most {max_iter_seen} passes, deterministic"))
}

// 7 -------------------------------------------------------------------------

fn ubcf_scale_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut predictions, mut fallbacks) = (0usize, 0usize);
    for t in 0..100 {
        let (users, items) = (rng.random_range(2..=10), rng.random_range(2..=10));
        let view = random_view(&mut rng, users, items, 0.6);
        let n = view.n_users();
        // the last user never gets a weight, so every query for it falls back
        let mut weights = Vec::new();
        for a in 0..n - 1 {
            for b in a + 1..n - 1 {
                if rng.random_bool(0.7) {
                    weights.push((a, b, rng.random_range(-1.0..1.0)));
                }
            }
        }
        let c = rng.random_range(0.01..100.0);
        let scaled: Vec<_> = weights.iter().map(|&(a, b, w)| (a, b, c * w)).collect();
        let base = PearsonCache::from_weights(Side::User, n, &weights).unwrap();
        let rescaled = PearsonCache::from_weights(Side::User, n, &scaled).unwrap();
        let params = NeighborhoodParams {
            n_neighbors: rng.random_range(1..=5),
            ..NeighborhoodParams::default()
        };
        for a in 0..n {
            for j in 0..view.n_items() {
                let p = predict_ubcf(&view, &base, a, j, &params).unwrap();
                let r = predict_ubcf(&view, &rescaled, a, j, &params).unwrap();
                ensure((p.value - r.value).abs() <= 1e-12 && p.fallback == r.fallback, || {
                    format!("neighbourhood {t}: ({a}, {j}) {} vs {} after scaling by {c}", p.value, r.value)
                })?;
                if p.fallback {
                    ensure(p.value == view.user_mean(a).clamp(1.0, 5.0), || {
                        format!("neighbourhood {t}: fallback {} is not the user mean", p.value)
                    })?;
                    fallbacks += 1;
                }
                ensure(a != n - 1 || p.fallback, || format!("neighbourhood {t}: isolated user did not fall back"))?;
                predictions += 1;
            }
        }
    }
    ensure(fallbacks > 0, || "fallback chain never reached".into())?;
    Ok(format!("100 neighbourhoods, {predictions} predictions invariant, {fallbacks} fallbacks"))
}

// 8 -------------------------------------------------------------------------

fn write_synthetic_csv(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (nu, ni) = (40, 50);
    let mut users = String::from("id,gender,band\n");
    for u in 0..nu {
        users += &format!("u{u},{},b{}\n", ["F", "M"][rng.random_range(0..2)], rng.random_range(0..3));
    }
    let mut items = String::from("id,genre,decade\n");
    for i in 0..ni {
        items += &format!("i{i},g{},d{}\n", rng.random_range(0..4), rng.random_range(0..3));
    }
    let mut ratings = String::from("user,item,rating\n");
    for r in random_ratings(&mut rng, nu, ni, 0.3) {
        ratings += &format!("{},{},{}\n", r.user, r.item, r.rating);
    }
    std::fs::write(dir.join("users.csv"), users).unwrap();
    std::fs::write(dir.join("items.csv"), items).unwrap();
    std::fs::write(dir.join("ratings.csv"), ratings).unwrap();
}

const SYNTHETIC_CONFIG: &str = r#"
[dataset]
format = "csv"
path = "data"
user_schema = "gender,band"
item_schema = "genre,decade"

[split]
seed = 7

[models.ubcf]
n_neighbors = [5, 10]

[models.ibcf]
n_neighbors = 10

[models.mf]
factors = 5
epochs = [10, 20]
regularization = 1.0

[models.cmf]
factors = 5
epochs = 20
regularization = 1.0
alpha = [0.1, 1.0]
beta = 0.5
top_m = 5

[models.kmodes]
clusters = [2, 4]

[models.ensemble]
factors = 5
epochs = 10
regularization = 1.0
"#;

fn end_to_end_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::create_dir(tmp.path().join("data")).unwrap();
    write_synthetic_csv(&tmp.path().join("data"));
    let config = tmp.path().join("synthetic.toml");
    std::fs::write(&config, SYNTHETIC_CONFIG).unwrap();
    let mut outputs = Vec::new();
    for run in ["first", "second"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_noniid"))
            .args(["run", "--config"])
            .arg(&config)
            .env("NONIID_OUT_DIR", &out)
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("{run} run exited with {status}"))?;
        outputs.push(std::fs::read(out.join("metrics.json")).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], || "metrics.json differs between runs".into())?;
    Ok(format!("six models, metrics.json identical ({} bytes)", outputs[0].len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("directional MovieLens 100K comparison", directional_reproduction),
        ("CMF with zero coupling equals MF", reduction_identity),
        ("analytic gradients", gradient_suite),
        ("coupled similarity oracle", similarity_oracle),
        ("cell coupling oracle", tensor_oracle),
        ("k-modes invariants", kmodes_suite),
        ("UBCF weight-scale invariance", ubcf_scale_invariance),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", n + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
