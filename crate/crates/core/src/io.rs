//! JSON loaders and writers for spaces, measures and index sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Cloud, MeasuredSpace, Norm, PointedSpace};

#[derive(Debug, Serialize, Deserialize)]
pub struct DistFile {
    pub n: usize,
    pub base: usize,
    pub dist: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CloudFile {
    pub dim: usize,
    pub norm: Norm,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub base: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnySpace {
    Dist(DistFile),
    Cloud(CloudFile),
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn weights_or_unit(w: Option<Vec<f64>>, n: usize) -> Vec<f64> {
    w.unwrap_or_else(|| vec![1.0; n])
}

pub fn space_from_dist(f: DistFile) -> Result<MeasuredSpace> {
    if f.dist.len() != f.n {
        return Err(Error::Parse(format!("n = {} but dist has {} rows", f.n, f.dist.len())));
    }
    let s = PointedSpace::from_matrix(&f.dist, f.base)?;
    MeasuredSpace::new(s, weights_or_unit(f.weights, f.n))
}

pub fn space_from_cloud(f: CloudFile) -> Result<MeasuredSpace> {
    let n = f.points.len();
    let s = PointedSpace::from_cloud(Cloud::new(f.dim, f.norm, &f.points)?, f.base)?;
    MeasuredSpace::new(s, weights_or_unit(f.weights, n))
}

/// Either file format. Missing weights default to unit atoms.
pub fn load_space(text: &str) -> Result<MeasuredSpace> {
    let probe: serde_json::Value = parse(text, "space")?;
    let is_cloud = probe.get("points").is_some();
    if is_cloud {
        space_from_cloud(parse(text, "point cloud")?)
    } else if probe.get("dist").is_some() {
        space_from_dist(parse(text, "distance matrix")?)
    } else {
        match parse::<AnySpace>(text, "space")? {
            AnySpace::Dist(f) => space_from_dist(f),
            AnySpace::Cloud(f) => space_from_cloud(f),
        }
    }
}

/// A weight vector: either a bare array or `{"weights": [...]}`.
pub fn load_weights(text: &str) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum W {
        Bare(Vec<f64>),
        Obj { weights: Vec<f64> },
    }
    Ok(match parse::<W>(text, "weights")? {
        W::Bare(v) | W::Obj { weights: v } => v,
    })
}

/// An index set: either a bare array or `{"indices": [...]}`.
pub fn load_indices(text: &str) -> Result<Vec<usize>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum I {
        Bare(Vec<usize>),
        Obj { indices: Vec<usize> },
    }
    Ok(match parse::<I>(text, "indices")? {
        I::Bare(v) | I::Obj { indices: v } => v,
    })
}

/// Serialize in the point-cloud format when coordinates exist, else as a matrix.
pub fn to_json(s: &MeasuredSpace) -> serde_json::Value {
    let weights = Some(s.weights());
    match s.space.cloud() {
        Some(c) => serde_json::to_value(CloudFile {
            dim: c.dim,
            norm: c.norm,
            points: (0..s.len()).map(|i| s.space.coords(i).unwrap()).collect(),
            weights,
            base: s.base(),
        }),
        None => serde_json::to_value(DistFile {
            n: s.len(),
            base: s.base(),
            dist: s.space.matrix(),
            weights,
        }),
    }
    .expect("space serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dist_roundtrip() {
        let text = r#"{"n":2,"base":0,"dist":[[0,1],[1,0]],"weights":[1,2]}"#;
        let s = load_space(text).unwrap();
        assert_eq!(s.weights(), vec![1.0, 2.0]);
        let back = load_space(&to_json(&s).to_string()).unwrap();
        assert_eq!(back.space.matrix(), s.space.matrix());
    }

    #[test]
    fn cloud_materializes_norm() {
        let text = r#"{"dim":2,"norm":"linf","points":[[0,0],[3,-4]],"weights":[1,1],"base":0}"#;
        let s = load_space(text).unwrap();
        assert_eq!(s.space.d(0, 1), 4.0);
        let text = text.replace("linf", "l2");
        assert_eq!(load_space(&text).unwrap().space.d(0, 1), 5.0);
    }

    #[test]
    fn malformed_is_parse_error() {
        assert!(matches!(load_space("{\"n\": 2,"), Err(Error::Parse(_))));
        assert!(matches!(load_space("{\"foo\": 1}"), Err(Error::Parse(_))));
        assert!(load_space(r#"{"n":2,"base":0,"dist":[[0,1],[2,0]]}"#).is_err());
    }

    #[test]
    fn weights_and_indices() {
        assert_eq!(load_weights("[1, 0.5]").unwrap(), vec![1.0, 0.5]);
        assert_eq!(load_weights(r#"{"weights":[2]}"#).unwrap(), vec![2.0]);
        assert_eq!(load_indices("[0, 3]").unwrap(), vec![0, 3]);
        assert_eq!(load_indices(r#"{"indices":[1]}"#).unwrap(), vec![1]);
    }
}
