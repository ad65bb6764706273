//! Model file format: a versioned binary container with little-endian
//! 64-bit floats, plus a JSON sidecar for human-readable metadata. The
//! binary payload stores raw cluster member parameters so the KDEs are
//! reconstructed exactly; round-trips are bit-exact.

use crate::error::{Error, Result};
use crate::proposal::forest::{ForestParams, Node, RegressionForest, Tree};
use crate::proposal::kde::Kde;
use crate::proposal::{BlockEstimator, ClusterModel, TrainedProposal};
use crate::space::{DimSpec, ParamSpace};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

const MAGIC: &[u8; 4] = b"ISPM";
const VERSION: u32 = 1;

struct Writer<W: Write> {
    out: W,
}

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        self.out.write_all(&[v])?;
        Ok(())
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        self.out.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.out.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.out.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        for &v in vs {
            self.f64(v)?;
        }
        Ok(())
    }
    fn str(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.out.write_all(s.as_bytes())?;
        Ok(())
    }
}

struct Reader<R: Read> {
    inp: R,
}

impl<R: Read> Reader<R> {
    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.inp.read_exact(&mut b)?;
        Ok(b[0])
    }
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.inp.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.inp.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.inp.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let mut b = vec![0u8; n];
        self.inp.read_exact(&mut b)?;
        String::from_utf8(b).map_err(|_| Error::Io("invalid utf8 in model file".into()))
    }
}

fn write_space<W: Write>(w: &mut Writer<W>, space: &ParamSpace) -> Result<()> {
    w.u32(space.dims() as u32)?;
    for d in space.dim_specs() {
        w.f64(d.lower)?;
        w.f64(d.upper)?;
        w.u8(u8::from(d.wrapped))?;
    }
    w.u32(space.blocks().len() as u32)?;
    for b in space.blocks() {
        w.u32(b.len() as u32)?;
        for &i in b {
            w.u32(i as u32)?;
        }
    }
    Ok(())
}

fn read_space<R: Read>(r: &mut Reader<R>) -> Result<ParamSpace> {
    let dims = r.u32()? as usize;
    let mut specs = Vec::with_capacity(dims);
    for _ in 0..dims {
        let lower = r.f64()?;
        let upper = r.f64()?;
        let wrapped = r.u8()? != 0;
        specs.push(DimSpec { lower, upper, wrapped });
    }
    let nblocks = r.u32()? as usize;
    let mut blocks = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let len = r.u32()? as usize;
        let mut b = Vec::with_capacity(len);
        for _ in 0..len {
            b.push(r.u32()? as usize);
        }
        blocks.push(b);
    }
    ParamSpace::new(specs, blocks)
}

fn write_kde<W: Write>(w: &mut Writer<W>, kde: &Kde) -> Result<()> {
    w.u32(kde.len() as u32)?;
    w.f64s(kde.bandwidth())?;
    for p in kde.points() {
        w.f64s(p)?;
    }
    Ok(())
}

fn read_kde<R: Read>(r: &mut Reader<R>, space: &ParamSpace) -> Result<Kde> {
    let m = r.u32()? as usize;
    let bd = space.dims();
    let bandwidth = r.f64s(bd)?;
    let mut points = Vec::with_capacity(m);
    for _ in 0..m {
        points.push(r.f64s(bd)?);
    }
    Kde::from_parts(points, bandwidth, space.clone())
}

/// Serializes a trained proposal to `path` and writes a JSON sidecar at
/// `path + ".json"`.
pub fn save_model(path: &Path, model: &TrainedProposal) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = Writer { out: std::io::BufWriter::new(file) };
    w.out.write_all(MAGIC)?;
    w.u32(VERSION)?;
    w.str(&model.extractor_id)?;
    write_space(&mut w, &model.space)?;
    w.u64(model.train_n)?;
    w.u64(model.train_seed)?;
    w.u32(model.entries.len() as u32)?;
    for (block, frange, est) in &model.entries {
        w.u32(*block as u32)?;
        w.u32(frange.start as u32)?;
        w.u32(frange.end as u32)?;
        let block_space = model.space.block_space(*block)?;
        match est {
            BlockEstimator::Clusters(cm) => {
                w.u8(0)?;
                w.u32(cm.len() as u32)?;
                w.u32(cm.centroids()[0].len() as u32)?;
                for (centroid, kde) in cm.centroids().iter().zip(cm.kdes()) {
                    w.f64s(centroid)?;
                    write_kde(&mut w, kde)?;
                }
                let _ = block_space;
            }
            BlockEstimator::Forest(f) => {
                w.u8(1)?;
                w.u32(f.params.trees as u32)?;
                w.u32(f.params.max_depth as u32)?;
                w.u32(f.params.min_leaf as u32)?;
                w.u32(f.trees.len() as u32)?;
                for tree in &f.trees {
                    w.u32(tree.nodes.len() as u32)?;
                    for node in &tree.nodes {
                        match node {
                            Node::Split { dim, threshold, left, right } => {
                                w.u8(0)?;
                                w.u32(*dim as u32)?;
                                w.f64(*threshold)?;
                                w.u32(*left as u32)?;
                                w.u32(*right as u32)?;
                            }
                            Node::Leaf { kde } => {
                                w.u8(1)?;
                                write_kde(&mut w, kde)?;
                            }
                        }
                    }
                }
            }
        }
    }
    w.out.flush()?;

    let sidecar = SidecarMeta::from_model(model);
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Io(format!("sidecar serialization: {e}")))?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Deserializes a trained proposal.
pub fn load_model(path: &Path) -> Result<TrainedProposal> {
    let file = std::fs::File::open(path)?;
    let mut r = Reader { inp: std::io::BufReader::new(file) };
    let mut magic = [0u8; 4];
    r.inp.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Io(format!("unsupported model version {version}")));
    }
    let extractor_id = r.str()?;
    let space = read_space(&mut r)?;
    let train_n = r.u64()?;
    let train_seed = r.u64()?;
    let n_entries = r.u32()? as usize;
    let mut entries = Vec::with_capacity(n_entries);
    for _ in 0..n_entries {
        let block = r.u32()? as usize;
        let fstart = r.u32()? as usize;
        let fend = r.u32()? as usize;
        let block_space = space.block_space(block)?;
        let kind = r.u8()?;
        let est = match kind {
            0 => {
                let k = r.u32()? as usize;
                let feat_dim = r.u32()? as usize;
                let mut centroids = Vec::with_capacity(k);
                let mut kdes = Vec::with_capacity(k);
                for _ in 0..k {
                    centroids.push(r.f64s(feat_dim)?);
                    kdes.push(Arc::new(read_kde(&mut r, &block_space)?));
                }
                BlockEstimator::Clusters(ClusterModel::from_parts(centroids, kdes)?)
            }
            1 => {
                let trees_cfg = r.u32()? as usize;
                let max_depth = r.u32()? as usize;
                let min_leaf = r.u32()? as usize;
                let n_trees = r.u32()? as usize;
                let mut trees = Vec::with_capacity(n_trees);
                for _ in 0..n_trees {
                    let n_nodes = r.u32()? as usize;
                    let mut nodes = Vec::with_capacity(n_nodes);
                    for _ in 0..n_nodes {
                        match r.u8()? {
                            0 => {
                                let dim = r.u32()? as usize;
                                let threshold = r.f64()?;
                                let left = r.u32()? as usize;
                                let right = r.u32()? as usize;
                                nodes.push(Node::Split { dim, threshold, left, right });
                            }
                            1 => {
                                nodes.push(Node::Leaf {
                                    kde: Arc::new(read_kde(&mut r, &block_space)?),
                                });
                            }
                            other => {
                                return Err(Error::Io(format!("bad node tag {other}")));
                            }
                        }
                    }
                    trees.push(Tree { nodes });
                }
                BlockEstimator::Forest(RegressionForest {
                    trees,
                    params: ForestParams { trees: trees_cfg, max_depth, min_leaf },
                })
            }
            other => return Err(Error::Io(format!("bad estimator tag {other}"))),
        };
        entries.push((block, fstart..fend, est));
    }
    Ok(TrainedProposal { extractor_id, space, entries, train_n, train_seed })
}

pub fn sidecar_path(model_path: &Path) -> std::path::PathBuf {
    let mut s = model_path.as_os_str().to_os_string();
    s.push(".json");
    std::path::PathBuf::from(s)
}

/// Human-readable companion to the binary model file.
#[derive(Debug, Serialize, Deserialize)]
pub struct SidecarMeta {
    pub format_version: u32,
    pub extractor: String,
    pub train_n: u64,
    pub train_seed: u64,
    pub blocks: usize,
    pub entries: Vec<SidecarEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SidecarEntry {
    pub block: usize,
    pub estimator: String,
    /// cluster count or tree count
    pub components: usize,
    pub min_occupancy: usize,
    pub max_occupancy: usize,
}

impl SidecarMeta {
    pub fn from_model(model: &TrainedProposal) -> Self {
        let entries = model
            .entries
            .iter()
            .map(|(block, _, est)| {
                let (components, min_occ, max_occ) = match est {
                    BlockEstimator::Clusters(cm) => {
                        let occ = cm.occupancy();
                        (
                            cm.len(),
                            occ.iter().copied().min().unwrap_or(0),
                            occ.iter().copied().max().unwrap_or(0),
                        )
                    }
                    BlockEstimator::Forest(f) => {
                        let sizes: Vec<usize> =
                            f.trees.iter().flat_map(|t| t.leaf_sizes()).collect();
                        (
                            f.trees.len(),
                            sizes.iter().copied().min().unwrap_or(0),
                            sizes.iter().copied().max().unwrap_or(0),
                        )
                    }
                };
                SidecarEntry {
                    block: *block,
                    estimator: est.kind().name().to_string(),
                    components,
                    min_occupancy: min_occ,
                    max_occupancy: max_occ,
                }
            })
            .collect();
        SidecarMeta {
            format_version: VERSION,
            extractor: model.extractor_id.clone(),
            train_n: model.train_n,
            train_seed: model.train_seed,
            blocks: model.space.blocks().len(),
            entries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureExtractor;
    use crate::proposal::{train_proposal, EstimatorKind, TrainConfig};
    use crate::renderers::{RoomModel, TilesModel};

    fn roundtrip(model: &TrainedProposal) -> TrainedProposal {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ispm");
        save_model(&path, model).unwrap();
        let bytes_a = std::fs::read(&path).unwrap();
        let loaded = load_model(&path).unwrap();
        // resave and compare bytes: bit-exact round trip
        let path2 = dir.path().join("model2.ispm");
        save_model(&path2, &loaded).unwrap();
        let bytes_b = std::fs::read(&path2).unwrap();
        assert_eq!(bytes_a, bytes_b);
        assert!(sidecar_path(&path).exists());
        loaded
    }

    #[test]
    fn cluster_model_round_trips_bit_exact() {
        let model = RoomModel::new(32, 32, 0.02);
        let hog = crate::features::HogExtractor::new(9, 16, 32, 32).unwrap();
        let cfg = TrainConfig {
            n: 60,
            k: 5,
            estimator: EstimatorKind::KmeansKde,
            seed: 9,
            forest: Default::default(),
        };
        let trained = train_proposal(&model, &hog, &cfg).unwrap();
        let loaded = roundtrip(&trained);
        assert_eq!(loaded.extractor_id, trained.extractor_id);
        assert_eq!(loaded.space, trained.space);
        // selection agrees on a probe feature
        let probe = vec![0.1; hog.len()];
        let a = trained.select_full(&probe).unwrap();
        let b = loaded.select_full(&probe).unwrap();
        let x = vec![0.0; 6];
        assert_eq!(a.log_density(&x), b.log_density(&x));
    }

    #[test]
    fn per_block_and_forest_models_round_trip() {
        let model = TilesModel::new(32, 32, 0.02);
        let rects = crate::features::RectExtractor::new(32, 32);
        let cfg = TrainConfig {
            n: 200,
            k: 4,
            estimator: EstimatorKind::Forest,
            seed: 10,
            forest: ForestParams { trees: 3, max_depth: 4, min_leaf: 20 },
        };
        let trained = train_proposal(&model, &rects, &cfg).unwrap();
        assert_eq!(trained.entries.len(), 6);
        let loaded = roundtrip(&trained);
        let probe = vec![0.5; rects.len()];
        let a = trained.select_block(2, &probe).unwrap();
        let b = loaded.select_block(2, &probe).unwrap();
        let x = vec![0.0, 0.0, 0.0, 0.1];
        assert_eq!(a.log_density(&x), b.log_density(&x));
    }
}
