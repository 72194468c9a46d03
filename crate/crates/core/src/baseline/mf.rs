use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::RatingMatrixView;
use crate::codec::{Decoder, Encoder};
use crate::store::RatingScale;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"NIIDLFM1";
const INIT_STDEV: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfConfig {
    pub factors: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MfConfig {
    fn default() -> Self {
        MfConfig {
            factors: 20,
            learning_rate: 0.01,
            regularization: 0.05,
            epochs: 50,
            seed: 42,
        }
    }
}

impl MfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 {
            return Err(Error::Config("factors must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::Config(format!(
                "regularization must be non-negative, got {}",
                self.regularization
            )));
        }
        Ok(())
    }
}

/// Smoothness penalty `(strength / 2) Σ_{a<b} c_ab ‖x_a − x_b‖²` over the
/// rows of one factor matrix. `neighbours[a]` lists `(b, c_ab)` and must be
/// symmetric.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Penalty {
    pub strength: f64,
    pub neighbours: Vec<Vec<(u32, f64)>>,
}

impl Penalty {
    fn active(this: Option<&Self>) -> Option<&Self> {
        this.filter(|g| g.strength > 0.0)
    }

    fn value(&self, x: &Array2<f64>) -> f64 {
        let mut total = 0.0;
        for (a, list) in self.neighbours.iter().enumerate() {
            let xa = x.row(a);
            for &(b, c) in list.iter().filter(|e| (e.0 as usize) > a) {
                let xb = x.row(b as usize);
                let d2: f64 = xa.iter().zip(xb).map(|(p, q)| (p - q) * (p - q)).sum();
                total += c * d2;
            }
        }
        self.strength / 2.0 * total
    }

    /// Adds `scale · strength · Σ_b c_ab (x_a − x_b)` to `out`.
    fn add_row_gradient(&self, x: &Array2<f64>, a: usize, scale: f64, out: &mut [f64]) {
        let xa = x.row(a);
        let s = scale * self.strength;
        for &(b, c) in &self.neighbours[a] {
            let xb = x.row(b as usize);
            for ((o, p), q) in out.iter_mut().zip(xa).zip(xb) {
                *o += s * c * (p - q);
            }
        }
    }
}

/// Trained factor matrices: users x K and items x K.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factors {
    pub p: Array2<f64>,
    pub q: Array2<f64>,
    pub loss_trace: Vec<f64>,
}

pub(crate) fn objective(
    view: &RatingMatrixView,
    p: &Array2<f64>,
    q: &Array2<f64>,
    lambda: f64,
    users: Option<&Penalty>,
    items: Option<&Penalty>,
) -> f64 {
    let mut loss = 0.0;
    for &(u, i, r) in view.observations() {
        let e = r - p.row(u as usize).dot(&q.row(i as usize));
        loss += e * e;
    }
    loss += lambda * (p.iter().map(|v| v * v).sum::<f64>() + q.iter().map(|v| v * v).sum::<f64>());
    if let Some(g) = Penalty::active(users) {
        loss += g.value(p);
    }
    if let Some(g) = Penalty::active(items) {
        loss += g.value(q);
    }
    loss
}

pub(crate) fn gradient(
    view: &RatingMatrixView,
    p: &Array2<f64>,
    q: &Array2<f64>,
    lambda: f64,
    users: Option<&Penalty>,
    items: Option<&Penalty>,
) -> (Array2<f64>, Array2<f64>) {
    let mut gp = p * (2.0 * lambda);
    let mut gq = q * (2.0 * lambda);
    for &(u, i, r) in view.observations() {
        let (u, i) = (u as usize, i as usize);
        let e = r - p.row(u).dot(&q.row(i));
        gp.row_mut(u).scaled_add(-2.0 * e, &q.row(i));
        gq.row_mut(i).scaled_add(-2.0 * e, &p.row(u));
    }
    for (g, x, pen) in [(&mut gp, p, users), (&mut gq, q, items)] {
        if let Some(pen) = Penalty::active(pen) {
            for (a, mut row) in g.axis_iter_mut(Axis(0)).enumerate() {
                pen.add_row_gradient(x, a, 1.0, row.as_slice_mut().expect("row-major"));
            }
        }
    }
    (gp, gq)
}

/// Gaussian initialisation, users' matrix first, from a seeded stream that
/// then drives the per-epoch shuffles.
fn initialise(n_users: usize, n_items: usize, k: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Array2<f64>) {
    let normal = Normal::new(0.0, INIT_STDEV).expect("valid stdev");
    let p = Array2::from_shape_simple_fn((n_users, k), || normal.sample(rng));
    let q = Array2::from_shape_simple_fn((n_items, k), || normal.sample(rng));
    (p, q)
}

/// SGD over the observed ratings. Each sample carries its share of the
/// regularisers: an object with `n` training ratings receives `1/n` of its
/// L2 and smoothness gradient per sample, so one epoch's summed gradients
/// equal the full objective's.
pub(crate) fn train_factors(
    view: &RatingMatrixView,
    config: &MfConfig,
    users: Option<&Penalty>,
    items: Option<&Penalty>,
) -> Result<Factors> {
    config.validate()?;
    if view.is_empty() {
        return Err(Error::Empty("training ratings"));
    }
    let users = Penalty::active(users);
    let items = Penalty::active(items);
    let k = config.factors;
    let (eta, lambda) = (config.learning_rate, config.regularization);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut p, mut q) = initialise(view.n_users(), view.n_items(), k, &mut rng);
    let user_share: Vec<f64> = (0..view.n_users())
        .map(|u| 1.0 / view.user_ratings(u).len().max(1) as f64)
        .collect();
    let item_share: Vec<f64> = (0..view.n_items())
        .map(|i| 1.0 / view.item_ratings(i).len().max(1) as f64)
        .collect();

    let obs = view.observations();
    let mut order: Vec<usize> = (0..obs.len()).collect();
    let mut gu = vec![0.0; k];
    let mut gi = vec![0.0; k];
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &s in &order {
            let (u, i, r) = obs[s];
            let (u, i) = (u as usize, i as usize);
            {
                let pu = p.row(u);
                let qi = q.row(i);
                let e = r - pu.dot(&qi);
                let (ru, ri) = (2.0 * lambda * user_share[u], 2.0 * lambda * item_share[i]);
                for f in 0..k {
                    gu[f] = -2.0 * e * qi[f] + ru * pu[f];
                    gi[f] = -2.0 * e * pu[f] + ri * qi[f];
                }
            }
            if let Some(g) = users {
                g.add_row_gradient(&p, u, user_share[u], &mut gu);
            }
            if let Some(g) = items {
                g.add_row_gradient(&q, i, item_share[i], &mut gi);
            }
            for (x, g) in p.row_mut(u).iter_mut().zip(&gu) {
                *x -= eta * g;
            }
            for (x, g) in q.row_mut(i).iter_mut().zip(&gi) {
                *x -= eta * g;
            }
        }
        let loss = objective(view, &p, &q, lambda, users, items);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch: epoch + 1,
                last_finite_epoch: (epoch > 0).then_some(epoch),
            });
        }
        log::debug!("epoch {} loss {loss:.6}", epoch + 1);
        loss_trace.push(loss);
    }
    Ok(Factors { p, q, loss_trace })
}

/// Value of `Σ (r − p_u·q_i)² + λ(‖P‖² + ‖Q‖²)` with `q` stored items x K.
pub fn mf_objective(view: &RatingMatrixView, p: &Array2<f64>, q: &Array2<f64>, lambda: f64) -> f64 {
    objective(view, p, q, lambda, None, None)
}

/// Analytic gradient of [`mf_objective`] with respect to `p` and `q`.
pub fn mf_gradient(
    view: &RatingMatrixView,
    p: &Array2<f64>,
    q: &Array2<f64>,
    lambda: f64,
) -> (Array2<f64>, Array2<f64>) {
    gradient(view, p, q, lambda, None, None)
}

/// Plain latent-factor model: a rating is the clamped dot product of a user
/// row and an item row.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentFactorModel {
    config: MfConfig,
    scale: RatingScale,
    global_mean: f64,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    p: Array2<f64>,
    item_factors: Array2<f64>,
    loss_trace: Vec<f64>,
}

fn index(ids: &[String]) -> HashMap<String, usize> {
    ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect()
}

impl LatentFactorModel {
    pub(crate) fn from_factors(view: &RatingMatrixView, config: MfConfig, factors: Factors) -> Self {
        LatentFactorModel {
            config,
            scale: view.scale(),
            global_mean: view.global_mean(),
            user_ids: view.user_ids().to_vec(),
            item_ids: view.item_ids().to_vec(),
            user_index: index(view.user_ids()),
            item_index: index(view.item_ids()),
            p: factors.p,
            item_factors: factors.q,
            loss_trace: factors.loss_trace,
        }
    }

    pub fn config(&self) -> &MfConfig {
        &self.config
    }

    pub fn factors(&self) -> usize {
        self.config.factors
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    /// Users x K.
    pub fn p(&self) -> ArrayView2<'_, f64> {
        self.p.view()
    }

    /// K x items.
    pub fn q(&self) -> ArrayView2<'_, f64> {
        self.item_factors.t()
    }

    /// Items x K, the layout used in training.
    pub fn item_factors(&self) -> ArrayView2<'_, f64> {
        self.item_factors.view()
    }

    /// Training objective after each epoch.
    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    pub fn user_position(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn item_position(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    pub fn raw_at(&self, u: usize, i: usize) -> f64 {
        self.p.row(u).dot(&self.item_factors.row(i))
    }

    pub fn predict_at(&self, u: usize, i: usize) -> f64 {
        self.scale.clamp(self.raw_at(u, i))
    }

    pub fn predict(&self, user: &str, item: &str) -> Result<f64> {
        let u = self.user_position(user).ok_or_else(|| Error::NotFound {
            kind: "user",
            id: user.to_owned(),
        })?;
        let i = self.item_position(item).ok_or_else(|| Error::NotFound {
            kind: "item",
            id: item.to_owned(),
        })?;
        Ok(self.predict_at(u, i))
    }

    pub(crate) fn encode<W: Write>(&self, enc: &mut Encoder<W>) -> std::io::Result<()> {
        let c = &self.config;
        enc.u64(c.factors as u64)?;
        enc.u64(self.user_ids.len() as u64)?;
        enc.u64(self.item_ids.len() as u64)?;
        enc.u64(c.seed)?;
        enc.u64(c.epochs as u64)?;
        enc.f64(c.learning_rate)?;
        enc.f64(c.regularization)?;
        enc.f64(self.scale.min)?;
        enc.f64(self.scale.max)?;
        enc.f64(self.global_mean)?;
        enc.strs(&self.user_ids)?;
        enc.strs(&self.item_ids)?;
        enc.f64s(self.p.iter())?;
        enc.f64s(self.item_factors.iter())?;
        enc.u64(self.loss_trace.len() as u64)?;
        enc.f64s(&self.loss_trace)
    }

    pub(crate) fn decode<R: Read>(dec: &mut Decoder<R>) -> Result<Self> {
        let k = dec.len(1 << 16)?;
        let n_users = dec.len(1 << 32)?;
        let n_items = dec.len(1 << 32)?;
        let seed = dec.u64()?;
        let epochs = dec.len(1 << 32)?;
        let learning_rate = dec.f64()?;
        let regularization = dec.f64()?;
        let scale = RatingScale::new(dec.f64()?, dec.f64()?)
            .map_err(|e| Error::Artifact(e.to_string()))?;
        let global_mean = dec.f64()?;
        let user_ids = dec.strs()?;
        let item_ids = dec.strs()?;
        if user_ids.len() != n_users || item_ids.len() != n_items {
            return Err(Error::Artifact("id count disagrees with header".into()));
        }
        let shape = |rows: usize, values: Vec<f64>| {
            Array2::from_shape_vec((rows, k), values).map_err(|e| Error::Artifact(e.to_string()))
        };
        let p = shape(n_users, dec.f64s(n_users * k)?)?;
        let item_factors = shape(n_items, dec.f64s(n_items * k)?)?;
        let n_trace = dec.len(1 << 32)?;
        let loss_trace = dec.f64s(n_trace)?;
        Ok(LatentFactorModel {
            config: MfConfig {
                factors: k,
                learning_rate,
                regularization,
                epochs,
                seed,
            },
            scale,
            global_mean,
            user_index: index(&user_ids),
            item_index: index(&item_ids),
            user_ids,
            item_ids,
            p,
            item_factors,
            loss_trace,
        })
    }

    /// Binary layout: magic, header (K, user and item counts, seed, epochs,
    /// learning rate, regularization, scale, global mean), ids, row-major P
    /// (users x K) and item factors (items x K), then the loss trace.
    pub fn write_binary<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut enc = Encoder(w);
        enc.bytes(MAGIC)?;
        self.encode(&mut enc)
    }

    pub fn read_binary<R: Read>(r: R) -> Result<Self> {
        let mut dec = Decoder(r);
        dec.magic(MAGIC, "latent factor model")?;
        LatentFactorModel::decode(&mut dec)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_binary(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        LatentFactorModel::read_binary(std::io::BufReader::new(file))
    }
}

pub fn train_mf(view: &RatingMatrixView, config: &MfConfig) -> Result<LatentFactorModel> {
    let factors = train_factors(view, config, None, None)?;
    Ok(LatentFactorModel::from_factors(view, *config, factors))
}

pub fn predict_mf(model: &LatentFactorModel, user: &str, item: &str) -> Result<f64> {
    model.predict(user, item)
}
