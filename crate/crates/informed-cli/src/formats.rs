//! On-disk formats: raw float observation files, trace CSVs, manifests,
//! report CSVs, and 8-bit preview images (debug only; inference never
//! reads previews).

use informed_mcmc::samplers::Trace;
use informed_mcmc::space::ParamVector;
use informed_mcmc::{Error, ImageGrid};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Read, Write};
use std::path::Path;

pub type Result<T> = std::result::Result<T, Error>;

const OBS_MAGIC: &[u8; 4] = b"ISOB";
const OBS_VERSION: u32 = 1;

/// Writes an observation as a small header plus little-endian f64s;
/// lossless, unlike the 8-bit previews.
pub fn write_observation(path: &Path, img: &ImageGrid) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(OBS_MAGIC)?;
    out.write_all(&OBS_VERSION.to_le_bytes())?;
    for v in [img.width as u32, img.height as u32, img.channels as u32] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in &img.data {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_observation(path: &Path) -> Result<ImageGrid> {
    let mut inp = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    inp.read_exact(&mut magic)?;
    if &magic != OBS_MAGIC {
        return Err(Error::Io("not an observation file (bad magic)".into()));
    }
    let mut u32buf = [0u8; 4];
    inp.read_exact(&mut u32buf)?;
    if u32::from_le_bytes(u32buf) != OBS_VERSION {
        return Err(Error::Io("unsupported observation version".into()));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        inp.read_exact(&mut u32buf)?;
        *d = u32::from_le_bytes(u32buf) as usize;
    }
    let n = dims[0] * dims[1] * dims[2];
    let mut data = Vec::with_capacity(n);
    let mut f64buf = [0u8; 8];
    for _ in 0..n {
        inp.read_exact(&mut f64buf)?;
        data.push(f64::from_le_bytes(f64buf));
    }
    ImageGrid::from_data(dims[0], dims[1], dims[2], data)
}

/// Ground-truth test set description; parameter values survive the JSON
/// round trip at full precision.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestsetManifest {
    pub problem: String,
    pub seed: u64,
    pub count: usize,
    pub cases: Vec<TestCase>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestCase {
    pub index: usize,
    pub observation: String,
    pub theta_star: Vec<f64>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Io(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Io(format!("parsing {}: {e}", path.display())))
}

/// Per-run provenance: configuration echo, seeds, and the content hash of
/// the model file the run used (if any).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub problem: String,
    pub sampler: String,
    pub case: usize,
    pub master_seed: u64,
    pub n_iter: usize,
    pub n_chains: usize,
    pub sigma_local: f64,
    pub alpha: f64,
    pub temperatures: Vec<f64>,
    pub model_sha256: Option<String>,
    pub observation: String,
    pub renders: u64,
}

/// Writes all chains of a run into one CSV:
/// `iter,chain,accepted,logp,theta_0..theta_{D-1}`.
pub fn write_trace_csv(path: &Path, chains: &[Trace], dims: usize) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = String::from("iter,chain,accepted,logp");
    for d in 0..dims {
        header.push_str(&format!(",theta_{d}"));
    }
    writeln!(out, "{header}")?;
    for (c, trace) in chains.iter().enumerate() {
        for i in 0..trace.len() {
            let mut line = format!(
                "{},{},{},{}",
                i,
                c,
                u8::from(trace.accepted[i]),
                trace.logps[i]
            );
            for d in 0..dims {
                line.push_str(&format!(",{}", trace.thetas[i][d]));
            }
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a trace CSV back into per-chain traces.
pub fn read_trace_csv(path: &Path) -> Result<Vec<Trace>> {
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Io("empty trace file".into()))?
        .map_err(Error::from)?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 5 || cols[0] != "iter" || cols[1] != "chain" {
        return Err(Error::Io("unrecognized trace header".into()));
    }
    let dims = cols.len() - 4;
    let mut chains: Vec<Trace> = Vec::new();
    for line in lines {
        let line = line.map_err(Error::from)?;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != dims + 4 {
            return Err(Error::Io("ragged trace row".into()));
        }
        let chain: usize = parts[1].parse().map_err(|_| Error::Io("bad chain index".into()))?;
        while chains.len() <= chain {
            chains.push(Trace::default());
        }
        let accepted = parts[2] == "1";
        let logp: f64 = parts[3].parse().map_err(|_| Error::Io("bad logp".into()))?;
        let mut values = Vec::with_capacity(dims);
        for p in &parts[4..] {
            values.push(p.parse().map_err(|_| Error::Io("bad theta value".into()))?);
        }
        chains[chain].push(ParamVector::new(values), logp, accepted);
    }
    if chains.is_empty() {
        return Err(Error::Io("trace file holds no rows".into()));
    }
    Ok(chains)
}

/// One row per metric per checkpoint.
pub struct MetricRow {
    pub metric: &'static str,
    pub checkpoint: usize,
    pub value: f64,
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "metric,checkpoint,value")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.metric, r.checkpoint, r.value)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_acf_csv(path: &Path, acf: &[(usize, Vec<f64>)]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "dim,lag,value")?;
    for (dim, values) in acf {
        for (lag, v) in values.iter().enumerate() {
            writeln!(out, "{dim},{lag},{v}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// 8-bit preview: PGM (P5) for single-channel, PPM (P6) for color.
/// Quantized; never used by inference.
pub fn write_preview(path: &Path, img: &ImageGrid) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let quantize = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    match img.channels {
        1 => {
            write!(out, "P5\n{} {}\n255\n", img.width, img.height)?;
            let bytes: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
            out.write_all(&bytes)?;
        }
        3 => {
            write!(out, "P6\n{} {}\n255\n", img.width, img.height)?;
            let bytes: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
            out.write_all(&bytes)?;
        }
        c => return Err(Error::Config(format!("cannot preview {c}-channel image"))),
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_round_trips_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("case.isob");
        let img = ImageGrid::from_data(3, 2, 1, vec![0.0, 0.25, -0.01, 1.02, 0.5, 0.75]).unwrap();
        write_observation(&path, &img).unwrap();
        let back = read_observation(&path).unwrap();
        assert_eq!(img.data, back.data);
        assert_eq!((img.width, img.height, img.channels), (back.width, back.height, back.channels));
    }

    #[test]
    fn trace_csv_round_trips_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let mut t0 = Trace::default();
        t0.push(ParamVector::new(vec![0.1, -0.25]), -1234.567890123456, false);
        t0.push(ParamVector::new(vec![std::f64::consts::PI, 1e-17]), -0.1, true);
        let mut t1 = Trace::default();
        t1.push(ParamVector::new(vec![0.5, 0.5]), -2.0, false);
        t1.push(ParamVector::new(vec![0.5, 0.75]), -1.5, true);
        write_trace_csv(&path, &[t0.clone(), t1.clone()], 2).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (orig, read) in [&t0, &t1].iter().zip(&back) {
            assert_eq!(orig.logps, read.logps);
            assert_eq!(orig.accepted, read.accepted);
            for (a, b) in orig.thetas.iter().zip(&read.thetas) {
                assert_eq!(a.values, b.values);
            }
        }
    }

    #[test]
    fn manifest_theta_round_trips_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let manifest = TestsetManifest {
            problem: "room".into(),
            seed: 7,
            count: 1,
            cases: vec![TestCase {
                index: 0,
                observation: "case_000.isob".into(),
                theta_star: vec![0.1 + 0.2, std::f64::consts::PI, -1e-300, 0.3333333333333333],
            }],
        };
        write_json(&path, &manifest).unwrap();
        let back: TestsetManifest = read_json(&path).unwrap();
        for (a, b) in manifest.cases[0].theta_star.iter().zip(&back.cases[0].theta_star) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
