//! Scene and measurement files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::Instance;
use crate::sstress::SstressProblem;
use crate::types::SamplingScheme;
use crate::{Edm, Error, Mat, PointSet, Result, SampleMask, Scene, WeightMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub n: usize,
    pub d: usize,
    pub side: f64,
    pub seed: u64,
    pub anchor_indices: Vec<usize>,
    pub positions: Vec<Vec<f64>>,
}

impl From<&Scene> for SceneFile {
    fn from(s: &Scene) -> Self {
        Self {
            n: s.n(),
            d: s.dim(),
            side: s.side,
            seed: s.seed,
            anchor_indices: s.anchor_indices.clone(),
            positions: s.positions.rows(),
        }
    }
}

impl SceneFile {
    pub fn into_scene(self) -> Result<Scene> {
        if self.positions.len() != self.n || self.positions.iter().any(|r| r.len() != self.d) {
            return Err(Error::Parse(
                "scene file dimensions disagree with its header".into(),
            ));
        }
        Scene::new(
            PointSet::from_rows(&self.positions)?,
            self.anchor_indices,
            self.side,
            self.seed,
        )
    }
}

/// Observed squared distances as `(i, j, d²)` triples with `i < j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub n: usize,
    pub scheme: SamplingScheme,
    pub sigma: f64,
    pub gamma: f64,
    pub p_out: f64,
    pub v_out: f64,
    pub seed: u64,
    pub anchor_clique: bool,
    pub entries: Vec<(usize, usize, f64)>,
}

impl MeasurementFile {
    pub fn from_instance(inst: &Instance, sigma: f64, gamma: f64, p_out: f64, v_out: f64) -> Self {
        Self {
            n: inst.mask.n(),
            scheme: inst.mask.scheme,
            sigma,
            gamma,
            p_out,
            v_out,
            seed: inst.seed,
            anchor_clique: inst.mask.anchor_clique,
            entries: inst
                .mask
                .pairs()
                .iter()
                .map(|&(i, j)| (i, j, inst.measured.get(i, j)))
                .collect(),
        }
    }

    pub fn mask(&self) -> Result<SampleMask> {
        SampleMask::new(
            self.n,
            self.entries.iter().map(|&(i, j, _)| (i, j)),
            self.scheme,
            self.anchor_clique,
        )
    }

    /// Symmetric matrix holding the observed entries; unobserved entries are 0.
    pub fn edm(&self) -> Result<Edm> {
        let mut m = Mat::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            if i >= self.n || j >= self.n || i == j {
                return Err(Error::Parse(format!("bad measurement index ({i},{j})")));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parse(format!(
                    "bad squared distance {v} at ({i},{j})"
                )));
            }
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        Ok(Edm::new_unchecked(m))
    }

    /// Unweighted s-stress problem over the stored entries.
    pub fn problem(&self) -> Result<SstressProblem> {
        SstressProblem::new(&self.edm()?, &self.mask()?, &WeightMatrix::ones(self.n))
    }
}

pub fn write_scene(path: &Path, scene: &Scene) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&SceneFile::from(scene))?)?;
    Ok(())
}

pub fn read_scene(path: &Path) -> Result<Scene> {
    let file: SceneFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.into_scene()
}

pub fn write_measurements_json(path: &Path, m: &MeasurementFile) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(m)?)?;
    Ok(())
}

/// CSV with columns `i,j,d2`, preceded by one `#`-comment line carrying the
/// header as JSON.
pub fn write_measurements_csv(path: &Path, m: &MeasurementFile) -> Result<()> {
    let header = MeasurementFile {
        entries: vec![],
        ..m.clone()
    };
    let mut f = fs::File::create(path)?;
    writeln!(f, "# {}", serde_json::to_string(&header)?)?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["i", "j", "d2"])?;
    for &(i, j, v) in &m.entries {
        w.write_record([i.to_string(), j.to_string(), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads either format, chosen by the `.csv` extension.
pub fn read_measurements(path: &Path) -> Result<MeasurementFile> {
    let text = fs::read_to_string(path)?;
    if path.extension().and_then(|e| e.to_str()) != Some("csv") {
        return Ok(serde_json::from_str(&text)?);
    }
    let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
    let meta = first
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("measurement CSV lacks its header comment".into()))?;
    let mut file: MeasurementFile = serde_json::from_str(meta.trim())?;
    let mut r = csv::Reader::from_reader(body.as_bytes());
    for rec in r.deserialize() {
        file.entries.push(rec?);
    }
    file.mask()?;
    Ok(file)
}
