//! Model files.
//!
//! A model is a single JSON document:
//!
//! ```text
//! {"format":"tstweak-shapelet-forest","version":1,
//!  "hyperparameters":{...},"labels":["-1","1"],
//!  "trees":[{"nodes":[{"split":{"shapelet":[..],"threshold":0.7,"le":1,"gt":2}},
//!                     {"leaf":{"class":0}}, ...]}, ...]}
//! ```
//!
//! `le`/`gt` are offsets into the tree's own `nodes` array, the root is node 0
//! and `class` indexes `labels`. Floats are written with shortest round-trip
//! formatting and parsed exactly, so save/load is bit-exact and the same
//! forest always serializes to the same bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{Hyperparameters, Node, ShapeletForest, ShapeletTree};
use crate::series::Shapelet;

pub const FORMAT_NAME: &str = "tstweak-shapelet-forest";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDto {
    format: String,
    version: u32,
    hyperparameters: Hyperparameters,
    labels: Vec<String>,
    trees: Vec<TreeDto>,
}

#[derive(Serialize, Deserialize)]
struct TreeDto {
    nodes: Vec<NodeDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NodeDto {
    Split {
        shapelet: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor: Option<usize>,
        threshold: f64,
        le: usize,
        gt: usize,
    },
    Leaf {
        class: usize,
    },
}

pub fn to_bytes(forest: &ShapeletForest) -> Result<Vec<u8>> {
    let dto = ModelDto {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        hyperparameters: forest.hyperparameters().clone(),
        labels: forest.labels().to_vec(),
        trees: forest
            .trees()
            .iter()
            .map(|t| TreeDto {
                nodes: t
                    .nodes()
                    .iter()
                    .map(|n| match n {
                        Node::Split {
                            shapelet,
                            threshold,
                            le,
                            gt,
                        } => NodeDto::Split {
                            shapelet: shapelet.values().to_vec(),
                            anchor: shapelet.anchor(),
                            threshold: *threshold,
                            le: *le,
                            gt: *gt,
                        },
                        Node::Leaf { class } => NodeDto::Leaf { class: *class },
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec(&dto)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn from_bytes(bytes: &[u8]) -> Result<ShapeletForest> {
    let dto: ModelDto = serde_json::from_slice(bytes)?;
    if dto.format != FORMAT_NAME {
        return Err(Error::Format(format!("unexpected format '{}'", dto.format)));
    }
    if dto.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {} (expected {FORMAT_VERSION})",
            dto.version
        )));
    }
    let n_classes = dto.labels.len();
    let trees = dto
        .trees
        .into_iter()
        .map(|t| {
            let nodes = t
                .nodes
                .into_iter()
                .map(|n| {
                    Ok(match n {
                        NodeDto::Split {
                            shapelet,
                            anchor,
                            threshold,
                            le,
                            gt,
                        } => Node::Split {
                            shapelet: match anchor {
                                Some(a) => Shapelet::anchored(shapelet, a)?,
                                None => Shapelet::new(shapelet)?,
                            },
                            threshold,
                            le,
                            gt,
                        },
                        NodeDto::Leaf { class } => Node::Leaf { class },
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ShapeletTree::from_nodes(nodes, n_classes)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Format(e.to_string()))?;
    let forest = ShapeletForest::from_trees(trees, dto.labels.clone(), dto.hyperparameters)
        .map_err(|e| Error::Format(e.to_string()))?;
    if forest.labels() != dto.labels.as_slice() {
        return Err(Error::Format("labels are not stored in canonical order".into()));
    }
    Ok(forest)
}

pub fn save(forest: &ShapeletForest, path: impl AsRef<Path>) -> Result<()> {
    crate::io::write_atomic(path.as_ref(), &to_bytes(forest)?)
}

pub fn load(path: impl AsRef<Path>) -> Result<ShapeletForest> {
    from_bytes(&std::fs::read(path)?)
}
