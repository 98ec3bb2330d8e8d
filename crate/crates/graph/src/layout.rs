use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// On-disk description of a skeleton layout.
///
/// Edges are undirected and listed once each; either endpoint order is
/// accepted and canonicalized on load.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutSpec {
    pub name: String,
    pub num_nodes: usize,
    pub center: usize,
    pub edges: Vec<(usize, usize)>,
}

/// A validated skeleton graph: node count, undirected edge set, and the
/// distinguished center node used by spatial-configuration partitioning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphLayout {
    name: String,
    num_nodes: usize,
    center: usize,
    edges: Vec<(usize, usize)>,
    neighbor_lists: Vec<Vec<usize>>,
}

impl GraphLayout {
    /// Builds a layout from a spec, rejecting out-of-range endpoints,
    /// self-loops, duplicate edges, and an out-of-range center.
    pub fn from_spec(spec: &LayoutSpec) -> Result<Self, GraphError> {
        if spec.num_nodes == 0 {
            return Err(GraphError::EmptyLayout);
        }
        if spec.center >= spec.num_nodes {
            return Err(GraphError::CenterOutOfRange(spec.center, spec.num_nodes));
        }
        let mut edges = Vec::with_capacity(spec.edges.len());
        for &(a, b) in &spec.edges {
            if a >= spec.num_nodes || b >= spec.num_nodes {
                return Err(GraphError::EdgeOutOfRange(a, b, spec.num_nodes));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        for pair in edges.windows(2) {
            if pair[0] == pair[1] {
                return Err(GraphError::DuplicateEdge(pair[0].0, pair[0].1));
            }
        }
        let mut neighbor_lists = vec![Vec::new(); spec.num_nodes];
        for &(a, b) in &edges {
            neighbor_lists[a].push(b);
            neighbor_lists[b].push(a);
        }
        for list in &mut neighbor_lists {
            list.sort_unstable();
        }
        Ok(GraphLayout {
            name: spec.name.clone(),
            num_nodes: spec.num_nodes,
            center: spec.center,
            edges,
            neighbor_lists,
        })
    }

    /// Parses a layout from its JSON spec text.
    pub fn from_json(json: &str) -> Result<Self, GraphError> {
        let spec: LayoutSpec = serde_json::from_str(json)?;
        Self::from_spec(&spec)
    }

    /// Returns a layout shipped with the library. Currently `"sign-27"`:
    /// neck, both shoulders and elbows, and 11 joints per hand.
    pub fn builtin(name: &str) -> Result<Self, GraphError> {
        match name {
            "sign-27" => Self::from_json(include_str!("../layouts/sign-27.json")),
            other => Err(GraphError::UnknownBuiltin(other.to_string())),
        }
    }

    /// Names of the layouts [`GraphLayout::builtin`] accepts.
    pub fn builtin_names() -> &'static [&'static str] {
        &["sign-27"]
    }

    /// Loads a layout from a JSON spec file.
    pub fn from_file(path: &std::path::Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|source| GraphError::LayoutFile {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Resolves a builtin name first, then a layout file path.
    pub fn resolve(name_or_path: &str) -> Result<Self, GraphError> {
        match Self::builtin(name_or_path) {
            Err(GraphError::UnknownBuiltin(_)) => {
                Self::from_file(std::path::Path::new(name_or_path))
            }
            other => other,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Canonicalized edge list, each pair `(lo, hi)` with `lo < hi`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Nodes adjacent to `node`, in ascending order.
    pub fn neighbors(&self, node: usize) -> Result<&[usize], GraphError> {
        self.neighbor_lists
            .get(node)
            .map(Vec::as_slice)
            .ok_or(GraphError::NodeOutOfRange(node, self.num_nodes))
    }

    pub fn degree(&self, node: usize) -> Result<usize, GraphError> {
        Ok(self.neighbors(node)?.len())
    }

    /// Whether every node can reach every other node.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &next in &self.neighbor_lists[node] {
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Spec form of this layout, suitable for embedding in serialized datasets.
    pub fn to_spec(&self) -> LayoutSpec {
        LayoutSpec {
            name: self.name.clone(),
            num_nodes: self.num_nodes,
            center: self.center,
            edges: self.edges.clone(),
        }
    }

    /// A simple chain `0 - 1 - ... - (n-1)` with the middle node as center.
    /// Used as the fallback layout for joint counts without a builtin.
    pub fn path(num_nodes: usize) -> Result<Self, GraphError> {
        let edges = (1..num_nodes).map(|i| (i - 1, i)).collect();
        Self::from_spec(&LayoutSpec {
            name: format!("path-{num_nodes}"),
            num_nodes,
            center: num_nodes / 2,
            edges,
        })
    }
}
