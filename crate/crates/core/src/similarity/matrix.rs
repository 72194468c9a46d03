use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::value::CoupledSimilarity;
use crate::store::{compare_ids, AttributeTable, Side};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"NIIDSIM1";

/// Post-processing applied to a freshly computed object similarity matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarityOptions {
    /// Off-diagonal entries below this value are stored as 0.
    pub threshold: Option<f64>,
    /// Rescale to `S(a,b) / sqrt(S(a,a) S(b,b))`, clamped to [0, 1], so
    /// self-similarity is 1.
    pub normalize_self: bool,
}

/// Dense symmetric similarity matrix over the objects of one table.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSimMatrix {
    side: Side,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<f64>,
}

impl ObjectSimMatrix {
    /// Builds from a row-major `n x n` buffer, which must be symmetric.
    pub fn from_dense(side: Side, ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::Artifact(format!(
                "{} entries for {n} objects",
                values.len()
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                if values[i * n + j].to_bits() != values[j * n + i].to_bits() {
                    return Err(Error::Artifact(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Duplicate(format!("object id `{id}`")));
            }
        }
        Ok(ObjectSimMatrix {
            side,
            ids,
            index,
            values,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.ids.len() + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        let n = self.ids.len();
        &self.values[a * n..(a + 1) * n]
    }

    pub fn get_by_id(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.get(self.require(a)?, self.require(b)?))
    }

    fn require(&self, id: &str) -> Result<usize> {
        self.position(id).ok_or_else(|| Error::NotFound {
            kind: "object",
            id: id.to_owned(),
        })
    }

    /// Positions of the `k` most similar other objects, by descending score
    /// with ties broken by ascending id.
    pub fn top_k_positions(&self, a: usize, k: usize) -> Vec<(usize, f64)> {
        let mut others: Vec<(usize, f64)> = self
            .row(a)
            .iter()
            .copied()
            .enumerate()
            .filter(|&(b, _)| b != a)
            .collect();
        let by_rank = |x: &(usize, f64), y: &(usize, f64)| {
            y.1.total_cmp(&x.1)
                .then_with(|| compare_ids(&self.ids[x.0], &self.ids[y.0]))
        };
        if k < others.len() {
            others.select_nth_unstable_by(k, by_rank);
            others.truncate(k);
        }
        others.sort_by(by_rank);
        others
    }

    pub fn top_k_neighbors(&self, a: &str, k: usize) -> Result<Vec<(String, f64)>> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let pos = self.require(a)?;
        Ok(self
            .top_k_positions(pos, k)
            .into_iter()
            .map(|(b, s)| (self.ids[b].clone(), s))
            .collect())
    }

    /// Binary layout: magic, side byte, object count (u64), length-prefixed
    /// ids, then row-major little-endian f64 entries.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[match self.side {
            Side::User => 0,
            Side::Item => 1,
        }])?;
        w.write_all(&(self.ids.len() as u64).to_le_bytes())?;
        for id in &self.ids {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Artifact(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::Artifact("not a similarity matrix".into()));
        }
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b1).map_err(io)?;
        let side = match b1[0] {
            0 => Side::User,
            1 => Side::Item,
            other => return Err(Error::Artifact(format!("bad side tag {other}"))),
        };
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(io)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            let mut b4 = [0u8; 4];
            r.read_exact(&mut b4).map_err(io)?;
            let mut buf = vec![0u8; u32::from_le_bytes(b4) as usize];
            r.read_exact(&mut buf).map_err(io)?;
            ids.push(String::from_utf8(buf).map_err(|e| Error::Artifact(e.to_string()))?);
        }
        let mut values = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            r.read_exact(&mut b8).map_err(io)?;
            values.push(f64::from_le_bytes(b8));
        }
        ObjectSimMatrix::from_dense(side, ids, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_binary(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        ObjectSimMatrix::read_binary(std::io::BufReader::new(file))
    }

    /// Tab-separated text export: a header of ids, then one row per object.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\t{}\n", self.side, self.ids.join("\t"));
        for (i, id) in self.ids.iter().enumerate() {
            s.push_str(id);
            for v in self.row(i) {
                s.push('\t');
                s.push_str(&v.to_string());
            }
            s.push('\n');
        }
        s
    }

    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        self.write_binary(&mut buf).expect("in-memory write");
        Sha256::digest(&buf).iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub(crate) fn from_coupled(
    sim: &CoupledSimilarity,
    side: Side,
    options: &SimilarityOptions,
) -> Result<ObjectSimMatrix> {
    let coded = sim.coded();
    let n = coded.len();
    if n == 0 {
        return Err(Error::Empty("attribute table"));
    }
    // upper triangle, one row per task
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (a..n)
                .map(|b| sim.row_sim(coded.row(a), coded.row(b)))
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (a, row) in upper.iter().enumerate() {
        for (off, &s) in row.iter().enumerate() {
            let b = a + off;
            values[a * n + b] = s;
            values[b * n + a] = s;
        }
    }
    if options.normalize_self {
        let diag: Vec<f64> = (0..n).map(|a| values[a * n + a]).collect();
        for a in 0..n {
            for b in 0..n {
                let denom = (diag[a] * diag[b]).sqrt();
                values[a * n + b] = if a == b {
                    1.0
                } else if denom > 0.0 {
                    (values[a * n + b] / denom).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
    }
    if let Some(t) = options.threshold {
        for a in 0..n {
            for b in 0..n {
                if a != b && values[a * n + b] < t {
                    values[a * n + b] = 0.0;
                }
            }
        }
    }
    ObjectSimMatrix::from_dense(side, coded.object_ids().to_vec(), values)
}

/// Full coupled object similarity matrix of a categorical table.
pub fn build_object_sim_matrix(table: &AttributeTable, side: Side) -> Result<ObjectSimMatrix> {
    if table.is_empty() {
        return Err(Error::Empty("attribute table"));
    }
    CoupledSimilarity::fit(table)?.object_matrix(side, &SimilarityOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::index::tests::t6;
    use crate::store::{Attribute, Value};
    use approx::assert_abs_diff_eq;

    #[test]
    fn t6_matrix() {
        let m = build_object_sim_matrix(&t6(), Side::User).unwrap();
        assert_eq!(m.len(), 6);
        assert_abs_diff_eq!(m.get_by_id("u1", "u5").unwrap(), 0.4762, epsilon = 1e-4);
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(m.get(a, b).to_bits(), m.get(b, a).to_bits());
            }
        }
    }

    #[test]
    fn single_object_and_empty() {
        let t = AttributeTable::new(
            vec!["a".into()],
            vec![Attribute::categorical("c")],
            vec![vec![Some(Value::cat("x"))]],
        )
        .unwrap();
        let m = build_object_sim_matrix(&t, Side::Item).unwrap();
        assert_eq!(m.len(), 1);
        let empty = AttributeTable::new(vec![], vec![Attribute::categorical("c")], vec![]).unwrap();
        assert!(matches!(build_object_sim_matrix(&empty, Side::Item), Err(Error::Empty(_))));
    }

    #[test]
    fn permutation_relabels() {
        let t = t6();
        let order = [3usize, 0, 5, 1, 4, 2];
        let permuted = AttributeTable::new(
            order.iter().map(|&i| t.object_ids()[i].clone()).collect(),
            t.attributes().to_vec(),
            order.iter().map(|&i| t.row(i).to_vec()).collect(),
        )
        .unwrap();
        let m = build_object_sim_matrix(&t, Side::User).unwrap();
        let p = build_object_sim_matrix(&permuted, Side::User).unwrap();
        for a in t.object_ids() {
            for b in t.object_ids() {
                assert_eq!(m.get_by_id(a, b).unwrap(), p.get_by_id(a, b).unwrap());
            }
        }
    }

    #[test]
    fn top_k_rules() {
        let m = build_object_sim_matrix(&t6(), Side::User).unwrap();
        let all = m.top_k_neighbors("u1", 10).unwrap();
        assert_eq!(all.len(), 5);
        assert!(all.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(all.iter().all(|(id, _)| id != "u1"));
        // brute-force argmax over the five other users, lowest id on ties
        let mut best = ("".to_string(), f64::NEG_INFINITY);
        for id in ["u2", "u3", "u4", "u5", "u6"] {
            let s = m.get_by_id("u1", id).unwrap();
            if s > best.1 {
                best = (id.to_string(), s);
            }
        }
        assert_eq!(m.top_k_neighbors("u1", 1).unwrap(), vec![best]);
        assert!(m.top_k_neighbors("u1", 0).is_err());
        assert!(m.top_k_neighbors("zz", 1).is_err());
    }

    #[test]
    fn ties_break_by_id() {
        let ids = vec!["c".to_string(), "b".into(), "a".into()];
        let values = vec![1.0, 0.5, 0.5, 0.5, 1.0, 0.2, 0.5, 0.2, 1.0];
        let m = ObjectSimMatrix::from_dense(Side::Item, ids, values).unwrap();
        let top = m.top_k_neighbors("c", 2).unwrap();
        assert_eq!(top[0].0, "a");
        assert_eq!(top[1].0, "b");
    }

    #[test]
    fn binary_round_trip() {
        let m = build_object_sim_matrix(&t6(), Side::User).unwrap();
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        let back = ObjectSimMatrix::read_binary(&buf[..]).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.digest(), m.digest());
        assert!(m.to_text().lines().count() == 7);
    }

    #[test]
    fn options() {
        let sim = CoupledSimilarity::fit(&t6()).unwrap();
        let norm = sim
            .object_matrix(
                Side::User,
                &SimilarityOptions {
                    normalize_self: true,
                    threshold: None,
                },
            )
            .unwrap();
        assert!((0..6).all(|a| norm.get(a, a) == 1.0));
        let sparse = sim
            .object_matrix(
                Side::User,
                &SimilarityOptions {
                    normalize_self: false,
                    threshold: Some(0.5),
                },
            )
            .unwrap();
        assert!(sparse.row(0)[1..].iter().all(|&v| v == 0.0 || v >= 0.5));
    }
}
