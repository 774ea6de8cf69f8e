use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::sampling::rng_from;
use crate::{Error, Mat, PointSet, Result, Scene};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    /// Unit square with anchors at the four corners and uniform sensors.
    CornerSquare,
    /// Standard-normal rows, no anchors.
    GaussianCloud,
    /// Uniform sensors inside a polygon, anchors at the first polygon vertices.
    IrregularScene,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub kind: SceneKind,
    /// Number of non-anchor nodes (all nodes for the Gaussian cloud).
    pub sensors: usize,
    pub dim: usize,
    pub side: f64,
    /// Polygon vertices of the irregular scene, counter-clockwise.
    pub polygon: Vec<[f64; 2]>,
    pub anchors: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            kind: SceneKind::CornerSquare,
            sensors: 100,
            dim: 2,
            side: 1.0,
            polygon: vec![],
            anchors: 4,
        }
    }
}

/// Generates a scene deterministically from `seed`.
pub fn gen_scene(spec: &SceneSpec, seed: u64) -> Result<Scene> {
    let mut rng = rng_from(seed);
    match spec.kind {
        SceneKind::CornerSquare => {
            if spec.dim != 2 {
                return Err(Error::InvalidArgument("the square scene is planar".into()));
            }
            let h = spec.side / 2.0;
            let corners = [[-h, -h], [-h, h], [h, h], [h, -h]];
            let n = 4 + spec.sensors;
            let mut y = Mat::zeros(n, 2);
            for (k, c) in corners.iter().enumerate() {
                y[(k, 0)] = c[0];
                y[(k, 1)] = c[1];
            }
            for i in 4..n {
                y[(i, 0)] = rng.gen_range(-h..h);
                y[(i, 1)] = rng.gen_range(-h..h);
            }
            Scene::new(PointSet::new(y)?, vec![0, 1, 2, 3], spec.side, seed)
        }
        SceneKind::GaussianCloud => {
            let y = Mat::from_fn(spec.sensors, spec.dim, |_, _| {
                rng.sample::<f64, _>(StandardNormal)
            });
            Scene::new(PointSet::new(y)?, vec![], spec.side, seed)
        }
        SceneKind::IrregularScene => {
            let poly = &spec.polygon;
            if poly.len() < 3 || spec.dim != 2 || spec.anchors > poly.len() {
                return Err(Error::InvalidArgument(
                    "irregular scene needs a planar polygon with at least as many vertices as anchors".into(),
                ));
            }
            let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
            for v in poly {
                for k in 0..2 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
            let n = spec.anchors + spec.sensors;
            let mut y = Mat::zeros(n, 2);
            for (k, v) in poly.iter().take(spec.anchors).enumerate() {
                y[(k, 0)] = v[0];
                y[(k, 1)] = v[1];
            }
            let mut i = spec.anchors;
            let mut tries = 0usize;
            while i < n {
                tries += 1;
                if tries > 1000 * n {
                    return Err(Error::InvalidArgument(
                        "polygon has (almost) no area".into(),
                    ));
                }
                let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
                if inside(poly, p) {
                    y[(i, 0)] = p[0];
                    y[(i, 1)] = p[1];
                    i += 1;
                }
            }
            Scene::new(
                PointSet::new(y)?,
                (0..spec.anchors).collect(),
                spec.side,
                seed,
            )
        }
    }
}

fn inside(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut c = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1])
            && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]
        {
            c = !c;
        }
        j = i;
    }
    c
}
