use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::baseline::{train_factors, LatentFactorModel, MfConfig, Penalty, RatingMatrixView};
use crate::codec::{Decoder, Encoder};
use crate::similarity::ObjectSimMatrix;
use crate::store::Side;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"NIIDCMF1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmfConfig {
    pub mf: MfConfig,
    /// Weight of the user-similarity smoothness term.
    pub alpha: f64,
    /// Weight of the item-similarity smoothness term.
    pub beta: f64,
    /// Similarity neighbours kept per object.
    pub top_m: usize,
}

impl Default for CmfConfig {
    fn default() -> Self {
        CmfConfig {
            mf: MfConfig::default(),
            alpha: 0.1,
            beta: 0.1,
            top_m: 20,
        }
    }
}

impl CmfConfig {
    pub fn validate(&self) -> Result<()> {
        self.mf.validate()?;
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.top_m == 0 {
            return Err(Error::Config("top_m must be at least 1".into()));
        }
        Ok(())
    }
}

/// The `top_m` most similar objects of every user (or item) of a rating
/// view, with their similarity scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    side: Side,
    top_m: usize,
    out: Vec<Vec<(u32, f64)>>,
    sim_digest: String,
}

impl CouplingGraph {
    /// Every id of `view` on `side` must appear in `sims`. Neighbours that
    /// are not part of the view, and zero scores, are dropped.
    pub fn build(view: &RatingMatrixView, sims: &ObjectSimMatrix, top_m: usize) -> Result<Self> {
        if top_m == 0 {
            return Err(Error::Config("top_m must be at least 1".into()));
        }
        let side = sims.side();
        let ids = view.ids(side);
        let mut sim_pos = Vec::with_capacity(ids.len());
        for id in ids {
            sim_pos.push(sims.position(id).ok_or_else(|| Error::Coverage {
                side: match side {
                    Side::User => "user",
                    Side::Item => "item",
                },
                id: id.clone(),
            })?);
        }
        let out = sim_pos
            .iter()
            .map(|&s| {
                sims.top_k_positions(s, top_m)
                    .into_iter()
                    .filter(|&(_, w)| w > 0.0)
                    .filter_map(|(b, w)| {
                        let b = view.position(side, &sims.ids()[b]).ok()?;
                        Some((b as u32, w))
                    })
                    .collect()
            })
            .collect();
        Ok(CouplingGraph {
            side,
            top_m,
            out,
            sim_digest: sims.digest(),
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn top_m(&self) -> usize {
        self.top_m
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    /// Retained neighbours of `a`, most similar first.
    pub fn neighbours(&self, a: usize) -> &[(u32, f64)] {
        &self.out[a]
    }

    pub fn sim_digest(&self) -> &str {
        &self.sim_digest
    }

    /// `Σ_a Σ_{b ∈ top(a)} S_ab ‖x_a − x_b‖²` over the rows of `x`.
    pub fn smoothness(&self, x: ArrayView2<'_, f64>) -> f64 {
        let mut total = 0.0;
        for (a, list) in self.out.iter().enumerate() {
            for &(b, s) in list {
                let d = &x.row(a) - &x.row(b as usize);
                total += s * d.dot(&d);
            }
        }
        total
    }

    /// Symmetrised weights `c_ab = S_ab [b ∈ top(a)] + S_ba [a ∈ top(b)]`,
    /// under which the directed sum above equals `Σ_{a<b} c_ab ‖x_a − x_b‖²`.
    pub(crate) fn penalty(&self, strength: f64) -> Penalty {
        let mut neighbours: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.out.len()];
        for (a, list) in self.out.iter().enumerate() {
            for &(b, s) in list {
                neighbours[a].push((b, s));
                neighbours[b as usize].push((a as u32, s));
            }
        }
        for list in &mut neighbours {
            list.sort_by_key(|e| e.0);
            list.dedup_by(|next, kept| {
                if next.0 == kept.0 {
                    kept.1 += next.1;
                    true
                } else {
                    false
                }
            });
        }
        Penalty {
            strength,
            neighbours,
        }
    }
}

fn check_sides(users: &CouplingGraph, items: &CouplingGraph) -> Result<()> {
    if users.side != Side::User || items.side != Side::Item {
        return Err(Error::Precondition("coupling graphs passed for the wrong sides".into()));
    }
    Ok(())
}

/// Latent-factor model whose training objective adds similarity smoothness
/// over user rows and item rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CmfModel {
    core: LatentFactorModel,
    alpha: f64,
    beta: f64,
    top_m: usize,
    user_sim_digest: String,
    item_sim_digest: String,
}

impl CmfModel {
    pub fn core(&self) -> &LatentFactorModel {
        &self.core
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn top_m(&self) -> usize {
        self.top_m
    }

    pub fn user_sim_digest(&self) -> &str {
        &self.user_sim_digest
    }

    pub fn item_sim_digest(&self) -> &str {
        &self.item_sim_digest
    }

    pub fn predict_at(&self, u: usize, i: usize) -> f64 {
        self.core.predict_at(u, i)
    }

    pub fn predict(&self, user: &str, item: &str) -> Result<f64> {
        self.core.predict(user, item)
    }

    /// The latent-factor artifact followed by alpha, beta, top_m and the
    /// digests of both similarity matrices.
    pub fn write_binary<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut enc = Encoder(w);
        enc.bytes(MAGIC)?;
        self.core.encode(&mut enc)?;
        enc.f64(self.alpha)?;
        enc.f64(self.beta)?;
        enc.u64(self.top_m as u64)?;
        enc.str(&self.user_sim_digest)?;
        enc.str(&self.item_sim_digest)
    }

    pub fn read_binary<R: Read>(r: R) -> Result<Self> {
        let mut dec = Decoder(r);
        dec.magic(MAGIC, "coupled factor model")?;
        Ok(CmfModel {
            core: LatentFactorModel::decode(&mut dec)?,
            alpha: dec.f64()?,
            beta: dec.f64()?,
            top_m: dec.len(1 << 32)?,
            user_sim_digest: dec.str()?,
            item_sim_digest: dec.str()?,
        })
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
        CmfModel::read_binary(std::io::BufReader::new(file))
    }
}

/// Trains from prebuilt graphs, letting a grid over alpha and beta share
/// neighbour selection.
pub fn train_cmf_with_graphs(
    view: &RatingMatrixView,
    users: &CouplingGraph,
    items: &CouplingGraph,
    config: &CmfConfig,
) -> Result<CmfModel> {
    config.validate()?;
    check_sides(users, items)?;
    if users.len() != view.n_users() || items.len() != view.n_items() {
        return Err(Error::Precondition("coupling graph built for another view".into()));
    }
    let factors = train_factors(
        view,
        &config.mf,
        Some(&users.penalty(config.alpha)),
        Some(&items.penalty(config.beta)),
    )?;
    Ok(CmfModel {
        core: LatentFactorModel::from_factors(view, config.mf, factors),
        alpha: config.alpha,
        beta: config.beta,
        top_m: users.top_m,
        user_sim_digest: users.sim_digest.clone(),
        item_sim_digest: items.sim_digest.clone(),
    })
}

pub fn train_cmf(
    view: &RatingMatrixView,
    user_sims: &ObjectSimMatrix,
    item_sims: &ObjectSimMatrix,
    config: &CmfConfig,
) -> Result<CmfModel> {
    config.validate()?;
    let users = CouplingGraph::build(view, user_sims, config.top_m)?;
    let items = CouplingGraph::build(view, item_sims, config.top_m)?;
    train_cmf_with_graphs(view, &users, &items, config)
}

pub fn predict_cmf(model: &CmfModel, user: &str, item: &str) -> Result<f64> {
    model.predict(user, item)
}

/// Full training objective: squared error, L2, and both smoothness terms
/// `(alpha/2) Σ_u Σ_{v ∈ top(u)} S_uv ‖p_u − p_v‖²` and its item analogue.
/// `q` is items x K.
pub fn cmf_objective(
    view: &RatingMatrixView,
    p: &Array2<f64>,
    q: &Array2<f64>,
    config: &CmfConfig,
    users: &CouplingGraph,
    items: &CouplingGraph,
) -> Result<f64> {
    check_sides(users, items)?;
    Ok(crate::baseline::objective(
        view,
        p,
        q,
        config.mf.regularization,
        Some(&users.penalty(config.alpha)),
        Some(&items.penalty(config.beta)),
    ))
}

/// Analytic gradient of [`cmf_objective`].
pub fn cmf_gradient(
    view: &RatingMatrixView,
    p: &Array2<f64>,
    q: &Array2<f64>,
    config: &CmfConfig,
    users: &CouplingGraph,
    items: &CouplingGraph,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_sides(users, items)?;
    Ok(crate::baseline::gradient(
        view,
        p,
        q,
        config.mf.regularization,
        Some(&users.penalty(config.alpha)),
        Some(&items.penalty(config.beta)),
    ))
}
