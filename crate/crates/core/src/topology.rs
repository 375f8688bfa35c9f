//! Switching-network graphs: 2D mesh, 2D diagonal mesh (king's graph) and
//! arbitrary user-defined graphs.
//!
//! Every node is a combined resource and router. Grid nodes are numbered
//! row-major, `id = row * width + col`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(index: usize) -> Self {
        NodeId(index)
    }
}

/// Physical parameters shared by every link of a generated grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Data-units per time-unit.
    pub bandwidth: f64,
    /// Time-units.
    pub propagation_delay: f64,
}

impl LinkParams {
    pub fn new(bandwidth: f64, propagation_delay: f64) -> Self {
        LinkParams { bandwidth, propagation_delay }
    }
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams { bandwidth: 1.0, propagation_delay: 1.0 }
    }
}

/// An undirected wire between two nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub endpoint_a: NodeId,
    pub endpoint_b: NodeId,
    pub bandwidth: f64,
    pub propagation_delay: f64,
}

impl LinkSpec {
    pub fn new(a: usize, b: usize, params: LinkParams) -> Self {
        LinkSpec {
            endpoint_a: NodeId(a),
            endpoint_b: NodeId(b),
            bandwidth: params.bandwidth,
            propagation_delay: params.propagation_delay,
        }
    }

    pub fn params(&self) -> LinkParams {
        LinkParams::new(self.bandwidth, self.propagation_delay)
    }

    /// Endpoints as `(low, high)`.
    pub fn pair(&self) -> (NodeId, NodeId) {
        let (a, b) = (self.endpoint_a, self.endpoint_b);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Mesh2D { width: usize, height: usize },
    DiagonalMesh2D { width: usize, height: usize },
    Custom,
}

impl TopologyKind {
    pub fn name(&self) -> &'static str {
        match self {
            TopologyKind::Mesh2D { .. } => "mesh",
            TopologyKind::DiagonalMesh2D { .. } => "diagonal_mesh",
            TopologyKind::Custom => "custom",
        }
    }

    /// `(width, height)` for grid kinds.
    pub fn grid(&self) -> Option<(usize, usize)> {
        match *self {
            TopologyKind::Mesh2D { width, height } | TopologyKind::DiagonalMesh2D { width, height } => {
                Some((width, height))
            }
            TopologyKind::Custom => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("grid dimensions must be positive, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("topology must have at least one node")]
    NoNodes,
    #[error("link #{index} ({a}-{b}) is a self-loop")]
    SelfLoop { index: usize, a: NodeId, b: NodeId },
    #[error("link #{index} ({a}-{b}) duplicates an earlier link between the same nodes")]
    DuplicateLink { index: usize, a: NodeId, b: NodeId },
    #[error("link #{index} ({a}-{b}) references a node outside 0..{node_count}")]
    EndpointOutOfRange { index: usize, a: NodeId, b: NodeId, node_count: usize },
    #[error("link #{index} ({a}-{b}) has non-positive bandwidth {bandwidth}")]
    InvalidBandwidth { index: usize, a: NodeId, b: NodeId, bandwidth: f64 },
    #[error("link #{index} ({a}-{b}) has negative or non-finite propagation delay {delay}")]
    InvalidDelay { index: usize, a: NodeId, b: NodeId, delay: f64 },
    #[error("node {node} is not in 0..{node_count}")]
    UnknownNode { node: NodeId, node_count: usize },
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Immutable undirected graph with per-link physical parameters.
#[derive(Debug, Clone)]
pub struct Topology {
    kind: TopologyKind,
    node_count: usize,
    links: Vec<LinkSpec>,
    // adjacency[u] = (neighbor, link index), ascending by neighbor
    adjacency: Vec<Vec<(NodeId, usize)>>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.node_count == other.node_count && self.links == other.links
    }
}

impl Topology {
    /// Grid with horizontal and vertical links only.
    pub fn mesh2d(width: usize, height: usize, params: LinkParams) -> Result<Self, TopologyError> {
        let links = grid_links(width, height, params, false)?;
        Self::assemble(TopologyKind::Mesh2D { width, height }, width * height, links)
    }

    /// Grid with horizontal, vertical and both diagonals of every unit cell.
    pub fn diagonal_mesh2d(width: usize, height: usize, params: LinkParams) -> Result<Self, TopologyError> {
        let links = grid_links(width, height, params, true)?;
        Self::assemble(TopologyKind::DiagonalMesh2D { width, height }, width * height, links)
    }

    /// Graph with exactly the given links. Errors identify the offending link by
    /// its position in `links`.
    pub fn custom(node_count: usize, links: Vec<LinkSpec>) -> Result<Self, TopologyError> {
        Self::assemble(TopologyKind::Custom, node_count, links)
    }

    /// Builds a grid topology from its kind. `Custom` is rejected since it
    /// carries no link list.
    pub fn from_kind(kind: TopologyKind, params: LinkParams) -> Result<Self, TopologyError> {
        match kind {
            TopologyKind::Mesh2D { width, height } => Self::mesh2d(width, height, params),
            TopologyKind::DiagonalMesh2D { width, height } => Self::diagonal_mesh2d(width, height, params),
            TopologyKind::Custom => Err(TopologyError::NoNodes),
        }
    }

    fn assemble(kind: TopologyKind, node_count: usize, links: Vec<LinkSpec>) -> Result<Self, TopologyError> {
        if node_count == 0 {
            return Err(TopologyError::NoNodes);
        }
        let mut adjacency = vec![Vec::new(); node_count];
        let mut seen = HashMap::with_capacity(links.len());
        for (index, link) in links.iter().enumerate() {
            let (a, b) = (link.endpoint_a, link.endpoint_b);
            if a.0 >= node_count || b.0 >= node_count {
                return Err(TopologyError::EndpointOutOfRange { index, a, b, node_count });
            }
            if a == b {
                return Err(TopologyError::SelfLoop { index, a, b });
            }
            if !(link.bandwidth > 0.0 && link.bandwidth.is_finite()) {
                return Err(TopologyError::InvalidBandwidth { index, a, b, bandwidth: link.bandwidth });
            }
            if !(link.propagation_delay >= 0.0 && link.propagation_delay.is_finite()) {
                return Err(TopologyError::InvalidDelay { index, a, b, delay: link.propagation_delay });
            }
            if seen.insert(link.pair(), index).is_some() {
                return Err(TopologyError::DuplicateLink { index, a, b });
            }
            adjacency[a.0].push((b, index));
            adjacency[b.0].push((a, index));
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(n, _)| n);
        }
        Ok(Topology { kind, node_count, links, adjacency })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count).map(NodeId)
    }

    pub fn check_node(&self, node: NodeId) -> Result<(), TopologyError> {
        if node.0 < self.node_count {
            Ok(())
        } else {
            Err(TopologyError::UnknownNode { node, node_count: self.node_count })
        }
    }

    /// Nodes sharing a link with `node`, strictly ascending.
    pub fn neighbors(&self, node: NodeId) -> Result<Vec<NodeId>, TopologyError> {
        self.check_node(node)?;
        Ok(self.adjacency[node.0].iter().map(|&(n, _)| n).collect())
    }

    /// Borrowing variant of [`Topology::neighbors`] for hot paths.
    pub(crate) fn neighbor_slice(&self, node: NodeId) -> &[(NodeId, usize)] {
        &self.adjacency[node.0]
    }

    pub fn degree(&self, node: NodeId) -> Result<usize, TopologyError> {
        self.check_node(node)?;
        Ok(self.adjacency[node.0].len())
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        a.0 < self.node_count && self.adjacency[a.0].binary_search_by_key(&b, |&(n, _)| n).is_ok()
    }

    /// The link joining `a` and `b`, if any.
    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<&LinkSpec> {
        if a.0 >= self.node_count {
            return None;
        }
        let list = &self.adjacency[a.0];
        list.binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| &self.links[list[i].1])
    }

    /// Unordered endpoint pairs, for comparing link sets regardless of order.
    pub fn link_pairs(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.links.iter().map(LinkSpec::pair).collect()
    }

    /// Maps degree to the number of nodes having it.
    pub fn degree_census(&self) -> std::collections::BTreeMap<usize, usize> {
        let mut census = std::collections::BTreeMap::new();
        for list in &self.adjacency {
            *census.entry(list.len()).or_insert(0) += 1;
        }
        census
    }

    /// Parses the plain-text edge-list format:
    ///
    /// ```text
    /// nodes <count>
    /// link <a> <b> <bandwidth> <delay>
    /// ```
    ///
    /// `#` starts a comment; blank lines are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut node_count = None;
        let mut links = Vec::new();
        let mut link_lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| TopologyError::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "nodes" => {
                    if node_count.is_some() {
                        return Err(parse_err("repeated `nodes` line".into()));
                    }
                    if fields.len() != 2 {
                        return Err(parse_err("expected `nodes <count>`".into()));
                    }
                    let n: usize =
                        fields[1].parse().map_err(|_| parse_err(format!("invalid node count `{}`", fields[1])))?;
                    node_count = Some(n);
                }
                "link" => {
                    if node_count.is_none() {
                        return Err(parse_err("`link` before `nodes`".into()));
                    }
                    if fields.len() != 5 {
                        return Err(parse_err("expected `link <a> <b> <bandwidth> <delay>`".into()));
                    }
                    let a: usize = fields[1].parse().map_err(|_| parse_err(format!("invalid node `{}`", fields[1])))?;
                    let b: usize = fields[2].parse().map_err(|_| parse_err(format!("invalid node `{}`", fields[2])))?;
                    let bandwidth: f64 =
                        fields[3].parse().map_err(|_| parse_err(format!("invalid bandwidth `{}`", fields[3])))?;
                    let delay: f64 =
                        fields[4].parse().map_err(|_| parse_err(format!("invalid delay `{}`", fields[4])))?;
                    links.push(LinkSpec::new(a, b, LinkParams::new(bandwidth, delay)));
                    link_lines.push(line_no);
                }
                other => return Err(parse_err(format!("unknown directive `{other}`"))),
            }
        }
        let node_count = node_count.ok_or(TopologyError::Parse { line: 0, message: "missing `nodes` line".into() })?;
        Self::custom(node_count, links).map_err(|e| match e {
            TopologyError::SelfLoop { index, .. }
            | TopologyError::DuplicateLink { index, .. }
            | TopologyError::EndpointOutOfRange { index, .. }
            | TopologyError::InvalidBandwidth { index, .. }
            | TopologyError::InvalidDelay { index, .. } => {
                TopologyError::Parse { line: link_lines[index], message: e.to_string() }
            }
            other => other,
        })
    }

    /// Serializes to the edge-list format accepted by [`Topology::parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("nodes {}\n", self.node_count);
        for link in &self.links {
            let _ = writeln!(
                out,
                "link {} {} {} {}",
                link.endpoint_a, link.endpoint_b, link.bandwidth, link.propagation_delay
            );
        }
        out
    }
}

fn grid_links(
    width: usize,
    height: usize,
    params: LinkParams,
    diagonals: bool,
) -> Result<Vec<LinkSpec>, TopologyError> {
    if width == 0 || height == 0 {
        return Err(TopologyError::ZeroDimension { width, height });
    }
    let id = |row: usize, col: usize| row * width + col;
    let mut links = Vec::new();
    for row in 0..height {
        for col in 0..width {
            if col + 1 < width {
                links.push(LinkSpec::new(id(row, col), id(row, col + 1), params));
            }
            if row + 1 < height {
                links.push(LinkSpec::new(id(row, col), id(row + 1, col), params));
            }
            if diagonals && row + 1 < height {
                if col + 1 < width {
                    links.push(LinkSpec::new(id(row, col), id(row + 1, col + 1), params));
                }
                if col > 0 {
                    links.push(LinkSpec::new(id(row, col), id(row + 1, col - 1), params));
                }
            }
        }
    }
    Ok(links)
}
