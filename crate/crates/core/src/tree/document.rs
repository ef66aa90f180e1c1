use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{LevelSetTree, TreeNode};

pub const TREE_FORMAT_VERSION: u32 = 1;

/// On-disk and over-the-wire form of a [`LevelSetTree`]. Nodes are sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct TreeDocument<T> {
    pub format_version: u32,
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub density_values: Vec<T>,
    pub nodes: Vec<NodeDocument<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct NodeDocument<T> {
    pub id: usize,
    pub start_level: T,
    pub end_level: T,
    pub start_mass: f64,
    pub end_mass: f64,
    pub size: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub members: Vec<usize>,
}

impl<T: Scalar> LevelSetTree<T> {
    pub fn to_document(&self) -> TreeDocument<T> {
        TreeDocument {
            format_version: TREE_FORMAT_VERSION,
            n: self.n(),
            k: self.k(),
            gamma: self.gamma(),
            density_values: self.density_values().to_vec(),
            nodes: self
                .nodes()
                .iter()
                .map(|node| NodeDocument {
                    id: node.id,
                    start_level: node.start_level,
                    end_level: node.end_level,
                    start_mass: node.start_mass,
                    end_mass: node.end_mass,
                    size: node.size(),
                    parent: node.parent,
                    children: node.children.clone(),
                    members: node.members.clone(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: TreeDocument<T>) -> Result<Self> {
        if doc.format_version != TREE_FORMAT_VERSION {
            return Err(Error::Unsupported(format!(
                "tree format version {} (expected {TREE_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        if doc.density_values.len() != doc.n {
            return Err(Error::invalid(format!(
                "{} density values for n = {}",
                doc.density_values.len(),
                doc.n
            )));
        }
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for (pos, nd) in doc.nodes.into_iter().enumerate() {
            if nd.id != pos {
                return Err(Error::invalid(format!("node at position {pos} has id {}", nd.id)));
            }
            if nd.size != nd.members.len() {
                return Err(Error::invalid(format!(
                    "node {} declares size {} but lists {} members",
                    nd.id,
                    nd.size,
                    nd.members.len()
                )));
            }
            nodes.push(TreeNode {
                id: nd.id,
                start_level: nd.start_level,
                end_level: nd.end_level,
                start_mass: nd.start_mass,
                end_mass: nd.end_mass,
                members: nd.members,
                parent: nd.parent,
                children: nd.children,
            });
        }
        LevelSetTree::from_parts(nodes, doc.k, doc.gamma, doc.density_values)
    }

    /// JSON tree document.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("tree documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDocument<T> = serde_json::from_str(text)?;
        Self::from_document(doc)
    }
}
