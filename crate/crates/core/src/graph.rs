//! The sparse topological graph: the only persistent scene representation.
//!
//! Nodes are either waypoints (visited, carrying a depth descriptor) or
//! frontiers (unvisited targets, no descriptor). Edges connect nodes with
//! verified line-of-sight and carry the Euclidean distance as traversal
//! cost. There is no occupancy grid and no point cloud behind this graph;
//! every spatial judgement is answered by waypoint descriptors.

use crate::descriptor::{DepthDescriptor, DescriptorConfig};
use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::spatial::SpatialGrid;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Opaque node identifier, assigned in creation order and never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeType {
    Waypoint,
    Frontier,
}

impl NodeType {
    fn as_str(&self) -> &'static str {
        match self {
            NodeType::Waypoint => "WAYPOINT",
            NodeType::Frontier => "FRONTIER",
        }
    }
}

/// One graph node: type, world position, optional descriptor, adjacency.
///
/// Waypoints always carry a descriptor; frontiers never do (they have not
/// been visited, so no scan was captured there).
#[derive(Debug, Clone)]
pub struct TopoNode {
    pub node_type: NodeType,
    pub position: Point3,
    pub descriptor: Option<DepthDescriptor>,
    /// Neighbor id -> traversal cost (Euclidean distance, kept exact).
    pub adjacency: BTreeMap<NodeId, f64>,
}

/// Memory accounting constants. `graph_memory_bytes` is a deterministic
/// model of the representation's footprint: it counts only what the graph
/// actually stores, so it is independent of world size and resolution.
pub const GRAPH_HEADER_BYTES: usize = 48;
pub const NODE_RECORD_BYTES: usize = 40; // id + type tag + 3D position
pub const DESCRIPTOR_FIXED_BYTES: usize = 40; // config snapshot + length
pub const ADJACENCY_ENTRY_BYTES: usize = 16; // neighbor id + cost

/// Adjacency-list topological graph with a spatial index for radius
/// queries. Single-writer: all mutation happens on the planning thread.
#[derive(Debug, Clone)]
pub struct TopoGraph {
    nodes: BTreeMap<NodeId, TopoNode>,
    frontier_index: BTreeSet<NodeId>,
    spatial: SpatialGrid<NodeId>,
    descriptor_config: DescriptorConfig,
    next_id: u64,
}

impl TopoGraph {
    pub fn new(descriptor_config: DescriptorConfig) -> Self {
        Self {
            nodes: BTreeMap::new(),
            frontier_index: BTreeSet::new(),
            spatial: SpatialGrid::new(descriptor_config.d_max.max(1e-6)),
            descriptor_config,
            next_id: 0,
        }
    }

    pub fn descriptor_config(&self) -> &DescriptorConfig {
        &self.descriptor_config
    }

    pub fn node(&self, id: NodeId) -> Option<&TopoNode> {
        self.nodes.get(&id)
    }

    fn node_ok(&self, id: NodeId) -> Result<&TopoNode> {
        self.nodes
            .get(&id)
            .ok_or_else(|| Error::Contract(format!("unknown node id {id}")))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.values().map(|n| n.adjacency.len()).sum::<usize>() / 2
    }

    pub fn frontier_count(&self) -> usize {
        self.frontier_index.len()
    }

    pub fn frontier_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.frontier_index.iter().copied()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &TopoNode)> + '_ {
        self.nodes.iter().map(|(id, n)| (*id, n))
    }

    fn alloc_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Insert a waypoint node directly. Exploration only does this once, for
    /// the start node; everything else enters as a frontier first. Exposed
    /// for scenario construction and deserialization.
    pub fn insert_waypoint(&mut self, position: Point3, descriptor: DepthDescriptor) -> NodeId {
        let id = self.alloc_id();
        self.nodes.insert(
            id,
            TopoNode {
                node_type: NodeType::Waypoint,
                position,
                descriptor: Some(descriptor),
                adjacency: BTreeMap::new(),
            },
        );
        self.spatial.insert(id, position);
        id
    }

    /// Insert a bare frontier node with no edges. Exploration inserts
    /// frontiers through `select_and_insert_frontiers`; this is the
    /// low-level hook for tests and deserialization.
    pub fn insert_frontier(&mut self, position: Point3) -> NodeId {
        let id = self.alloc_id();
        self.nodes.insert(
            id,
            TopoNode {
                node_type: NodeType::Frontier,
                position,
                descriptor: None,
                adjacency: BTreeMap::new(),
            },
        );
        self.frontier_index.insert(id);
        self.spatial.insert(id, position);
        id
    }

    /// Connect two nodes with the exact Euclidean cost.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> Result<f64> {
        if a == b {
            return Err(Error::Contract("self edges are not allowed".into()));
        }
        let pa = self.node_ok(a)?.position;
        let pb = self.node_ok(b)?.position;
        let cost = pa.distance(pb);
        self.nodes.get_mut(&a).unwrap().adjacency.insert(b, cost);
        self.nodes.get_mut(&b).unwrap().adjacency.insert(a, cost);
        Ok(cost)
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.nodes
            .get(&a)
            .map(|n| n.adjacency.contains_key(&b))
            .unwrap_or(false)
    }

    /// Descriptor-guided redundancy filtering and insertion of candidate
    /// frontier positions.
    ///
    /// A candidate is discarded when any historical waypoint other than
    /// `current` lies within sensing range of it and that waypoint's
    /// descriptor covers the candidate (it sits in already-observed free
    /// space). Survivors become frontier nodes connected to `current`.
    pub fn select_and_insert_frontiers(
        &mut self,
        current: NodeId,
        candidates: &[Point3],
    ) -> Result<Vec<NodeId>> {
        let cur = self.node_ok(current)?;
        if cur.node_type != NodeType::Waypoint || cur.descriptor.is_none() {
            return Err(Error::Contract(format!(
                "select_and_insert_frontiers requires a waypoint with a descriptor, got {current}"
            )));
        }
        let d_max = self.descriptor_config.d_max;
        let mut inserted = Vec::new();
        for &w in candidates {
            let mut covered = false;
            for id in self.spatial.query_within(w, d_max) {
                if id == current {
                    continue;
                }
                let n = &self.nodes[&id];
                if n.node_type != NodeType::Waypoint {
                    continue;
                }
                if let Some(desc) = &n.descriptor {
                    if desc.covers_point(n.position, w) {
                        covered = true;
                        break;
                    }
                }
            }
            if covered {
                continue;
            }
            let id = self.insert_frontier(w);
            self.add_edge(current, id)?;
            inserted.push(id);
        }
        Ok(inserted)
    }

    /// Convert an arrived-at frontier into a waypoint: attach the descriptor
    /// captured there, move the node to the observed arrival position, and
    /// recompute incident edge costs from the new position.
    pub fn convert_to_waypoint(
        &mut self,
        id: NodeId,
        descriptor: DepthDescriptor,
        observed_position: Point3,
    ) -> Result<()> {
        let node = self.node_ok(id)?;
        if node.node_type != NodeType::Frontier {
            return Err(Error::Contract(format!(
                "convert_to_waypoint requires a frontier node, got {id}"
            )));
        }
        let old_pos = node.position;
        let neighbors: Vec<NodeId> = node.adjacency.keys().copied().collect();
        {
            let node = self.nodes.get_mut(&id).unwrap();
            node.node_type = NodeType::Waypoint;
            node.position = observed_position;
            node.descriptor = Some(descriptor);
        }
        self.frontier_index.remove(&id);
        self.spatial.update(id, old_pos, observed_position);
        for nb in neighbors {
            let cost = observed_position.distance(self.nodes[&nb].position);
            self.nodes.get_mut(&id).unwrap().adjacency.insert(nb, cost);
            self.nodes.get_mut(&nb).unwrap().adjacency.insert(id, cost);
        }
        Ok(())
    }

    /// Line-of-sight connectivity update around the current waypoint.
    ///
    /// Every other node within sensing range whose direction window in the
    /// current descriptor is deeper than the node's distance gets an edge to
    /// `current`. Returns the edges added.
    pub fn update_connectivity(&mut self, current: NodeId) -> Result<Vec<(NodeId, NodeId)>> {
        let cur = self.node_ok(current)?;
        let (cur_pos, desc) = match (&cur.node_type, &cur.descriptor) {
            (NodeType::Waypoint, Some(d)) => (cur.position, d.clone()),
            _ => {
                return Err(Error::Contract(format!(
                    "update_connectivity requires a waypoint with a descriptor, got {current}"
                )))
            }
        };
        let d_max = self.descriptor_config.d_max;
        let mut added = Vec::new();
        for id in self.spatial.query_within(cur_pos, d_max) {
            if id == current || self.has_edge(current, id) {
                continue;
            }
            let target = self.nodes[&id].position;
            if desc.covers_point(cur_pos, target) {
                self.add_edge(current, id)?;
                added.push((current, id));
            }
        }
        Ok(added)
    }

    /// Remove an invalid frontier node and its incident edges. Waypoints are
    /// never removed; only frontiers are subject to correction.
    pub fn remove_invalid_node(&mut self, id: NodeId) -> Result<()> {
        let node = self.node_ok(id)?;
        if node.node_type != NodeType::Frontier {
            return Err(Error::Contract(format!(
                "remove_invalid_node requires a frontier node, got {id}"
            )));
        }
        let pos = node.position;
        let neighbors: Vec<NodeId> = node.adjacency.keys().copied().collect();
        for nb in neighbors {
            self.nodes.get_mut(&nb).unwrap().adjacency.remove(&id);
        }
        self.nodes.remove(&id);
        self.frontier_index.remove(&id);
        self.spatial.remove(id, pos);
        Ok(())
    }

    /// En-route validity check of a frontier target against the descriptor
    /// of the current frame. Targets beyond sensing range cannot be judged
    /// and count as valid; in-range targets are valid exactly when the
    /// current descriptor covers them.
    pub fn check_target_validity(
        &self,
        target: NodeId,
        current_desc: &DepthDescriptor,
        current_pos: Point3,
    ) -> Result<bool> {
        let node = self.node_ok(target)?;
        if current_pos.planar_distance(node.position) >= self.descriptor_config.d_max {
            return Ok(true);
        }
        Ok(current_desc.covers_point(current_pos, node.position))
    }

    /// Shortest path between two nodes by summed edge costs, using the
    /// straight-line distance to the goal as an admissible heuristic.
    /// Returns `None` when the goal is unreachable. Ties break on the lower
    /// node id, so results are deterministic.
    pub fn astar_cost(&self, a: NodeId, b: NodeId) -> Result<Option<(f64, Vec<NodeId>)>> {
        self.node_ok(a)?;
        let goal_pos = self.node_ok(b)?.position;
        if a == b {
            return Ok(Some((0.0, vec![a])));
        }

        #[derive(PartialEq)]
        struct Entry {
            f: f64,
            id: NodeId,
        }
        impl Eq for Entry {}
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                // Reversed: BinaryHeap is a max-heap, we want the smallest f.
                other
                    .f
                    .total_cmp(&self.f)
                    .then_with(|| other.id.cmp(&self.id))
            }
        }
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut open = std::collections::BinaryHeap::new();
        let mut g_score: BTreeMap<NodeId, f64> = BTreeMap::new();
        let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        g_score.insert(a, 0.0);
        open.push(Entry {
            f: self.nodes[&a].position.distance(goal_pos),
            id: a,
        });
        let mut closed: BTreeSet<NodeId> = BTreeSet::new();
        while let Some(Entry { id, .. }) = open.pop() {
            if id == b {
                let mut path = vec![b];
                let mut cur = b;
                while let Some(&p) = parent.get(&cur) {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Ok(Some((g_score[&b], path)));
            }
            if !closed.insert(id) {
                continue;
            }
            let base = g_score[&id];
            for (&nb, &cost) in &self.nodes[&id].adjacency {
                if closed.contains(&nb) {
                    continue;
                }
                let tentative = base + cost;
                let better = g_score.get(&nb).map_or(true, |&g| tentative < g);
                if better {
                    g_score.insert(nb, tentative);
                    parent.insert(nb, id);
                    open.push(Entry {
                        f: tentative + self.nodes[&nb].position.distance(goal_pos),
                        id: nb,
                    });
                }
            }
        }
        Ok(None)
    }

    /// Deterministic accounting of the representation's memory footprint.
    pub fn graph_memory_bytes(&self) -> usize {
        let mut bytes = GRAPH_HEADER_BYTES;
        for node in self.nodes.values() {
            bytes += NODE_RECORD_BYTES;
            if let Some(d) = &node.descriptor {
                bytes += d.memory_bytes();
            }
            bytes += ADJACENCY_ENTRY_BYTES * node.adjacency.len();
        }
        bytes += 8 * self.frontier_index.len();
        bytes
    }

    /// Full-structure audit: edge symmetry, exact Euclidean costs, frontier
    /// index exactness, and the waypoint-iff-descriptor rule. Used by tests
    /// after every mutating operation.
    pub fn audit(&self) -> Result<()> {
        for (id, node) in &self.nodes {
            match node.node_type {
                NodeType::Waypoint => {
                    if node.descriptor.is_none() {
                        return Err(Error::Contract(format!("waypoint {id} lacks a descriptor")));
                    }
                }
                NodeType::Frontier => {
                    if node.descriptor.is_some() {
                        return Err(Error::Contract(format!("frontier {id} has a descriptor")));
                    }
                    if !self.frontier_index.contains(id) {
                        return Err(Error::Contract(format!("frontier {id} missing from index")));
                    }
                }
            }
            for (nb, &cost) in &node.adjacency {
                let other = self
                    .nodes
                    .get(nb)
                    .ok_or_else(|| Error::Contract(format!("edge {id}-{nb} dangles")))?;
                let back = other.adjacency.get(id).copied().ok_or_else(|| {
                    Error::Contract(format!("edge {id}-{nb} is not symmetric"))
                })?;
                if back.to_bits() != cost.to_bits() {
                    return Err(Error::Contract(format!(
                        "edge {id}-{nb} costs disagree: {cost} vs {back}"
                    )));
                }
                let euclid = node.position.distance(other.position);
                if euclid.to_bits() != cost.to_bits() {
                    return Err(Error::Contract(format!(
                        "edge {id}-{nb} cost {cost} != distance {euclid}"
                    )));
                }
            }
        }
        for id in &self.frontier_index {
            match self.nodes.get(id) {
                Some(n) if n.node_type == NodeType::Frontier => {}
                _ => {
                    return Err(Error::Contract(format!(
                        "frontier index entry {id} is not a frontier node"
                    )))
                }
            }
        }
        Ok(())
    }

    /// True when every node is reachable from the lowest-id node.
    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.nodes.keys().next() else {
            return true;
        };
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            for nb in self.nodes[&id].adjacency.keys() {
                if !seen.contains(nb) {
                    stack.push(*nb);
                }
            }
        }
        seen.len() == self.nodes.len()
    }

    /// Plain-text serialization:
    ///
    /// ```text
    /// topograph v1 next_id=<k>
    /// config theta_deg=<f> delta_theta_deg=<f> d_max=<f> h=<f>
    /// node <id> <WAYPOINT|FRONTIER> <x> <y> <z> [descriptor: n theta d_max d1,...,dn]
    /// edge <i> <j> <cost>
    /// ```
    ///
    /// Floats use the shortest round-trip form, so serialize/deserialize is
    /// bit-exact.
    pub fn serialize(&self) -> String {
        let mut out = format!("topograph v1 next_id={}\n", self.next_id);
        let c = &self.descriptor_config;
        out.push_str(&format!(
            "config theta_deg={} delta_theta_deg={} d_max={} h={}\n",
            c.theta_deg, c.delta_theta_deg, c.d_max, c.h
        ));
        for (id, node) in &self.nodes {
            out.push_str(&format!(
                "node {} {} {} {} {}",
                id,
                node.node_type.as_str(),
                node.position.x,
                node.position.y,
                node.position.z
            ));
            if let Some(d) = &node.descriptor {
                out.push_str(&format!(" descriptor: {}", d.to_embedded()));
            }
            out.push('\n');
        }
        for (id, node) in &self.nodes {
            for (nb, cost) in &node.adjacency {
                if id < nb {
                    out.push_str(&format!("edge {id} {nb} {cost}\n"));
                }
            }
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::GraphParse { line, msg };
        let mut lines = text.lines().enumerate();

        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "empty graph file".into()))?;
        let mut toks = header.split_whitespace();
        if toks.next() != Some("topograph") || toks.next() != Some("v1") {
            return Err(err(1, "expected 'topograph v1' header".into()));
        }
        let next_id: u64 = toks
            .next()
            .and_then(|t| t.strip_prefix("next_id="))
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(1, "missing next_id".into()))?;

        let (_, cfg_line) = lines
            .next()
            .ok_or_else(|| err(2, "missing config line".into()))?;
        let mut field = |name: &str| -> Result<f64> {
            cfg_line
                .split_whitespace()
                .find_map(|t| t.strip_prefix(&format!("{name}=")))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err(2, format!("missing config field {name}")))
        };
        let config = DescriptorConfig {
            theta_deg: field("theta_deg")?,
            delta_theta_deg: field("delta_theta_deg")?,
            d_max: field("d_max")?,
            h: field("h")?,
        };

        let mut graph = TopoGraph::new(config);
        let mut max_seen: Option<u64> = None;
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            match toks.next() {
                Some("node") => {
                    let id: u64 = toks
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line_no, "bad node id".into()))?;
                    let ty = match toks.next() {
                        Some("WAYPOINT") => NodeType::Waypoint,
                        Some("FRONTIER") => NodeType::Frontier,
                        other => {
                            return Err(err(line_no, format!("bad node type {other:?}")))
                        }
                    };
                    let mut coord = |what: &str| -> Result<f64> {
                        toks.next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| err(line_no, format!("bad node {what}")))
                    };
                    let pos = Point3::new(coord("x")?, coord("y")?, coord("z")?);
                    let descriptor = match toks.next() {
                        None => None,
                        Some("descriptor:") => {
                            let rest: Vec<&str> = toks.collect();
                            let d = DepthDescriptor::parse_embedded(
                                &rest.join(" "),
                                config.h,
                                config.delta_theta_deg,
                            )
                            .map_err(|e| err(line_no, e.to_string()))?;
                            if *d.config() != config {
                                return Err(err(
                                    line_no,
                                    "node descriptor config differs from file config".into(),
                                ));
                            }
                            Some(d)
                        }
                        Some(other) => {
                            return Err(err(line_no, format!("unexpected token {other:?}")))
                        }
                    };
                    match (ty, &descriptor) {
                        (NodeType::Waypoint, None) => {
                            return Err(err(line_no, format!("waypoint {id} needs a descriptor")))
                        }
                        (NodeType::Frontier, Some(_)) => {
                            return Err(err(
                                line_no,
                                format!("frontier {id} must not carry a descriptor"),
                            ))
                        }
                        _ => {}
                    }
                    let nid = NodeId(id);
                    if graph.nodes.contains_key(&nid) {
                        return Err(err(line_no, format!("duplicate node id {id}")));
                    }
                    graph.nodes.insert(
                        nid,
                        TopoNode {
                            node_type: ty,
                            position: pos,
                            descriptor,
                            adjacency: BTreeMap::new(),
                        },
                    );
                    if ty == NodeType::Frontier {
                        graph.frontier_index.insert(nid);
                    }
                    graph.spatial.insert(nid, pos);
                    max_seen = Some(max_seen.map_or(id, |m| m.max(id)));
                }
                Some("edge") => {
                    let mut next_u64 = |what: &str| -> Result<u64> {
                        toks.next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| err(line_no, format!("bad edge {what}")))
                    };
                    let a = NodeId(next_u64("source")?);
                    let b = NodeId(next_u64("target")?);
                    let cost: f64 = toks
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line_no, "bad edge cost".into()))?;
                    if !graph.nodes.contains_key(&a) || !graph.nodes.contains_key(&b) {
                        return Err(err(line_no, format!("edge {a}-{b} references unknown node")));
                    }
                    graph.nodes.get_mut(&a).unwrap().adjacency.insert(b, cost);
                    graph.nodes.get_mut(&b).unwrap().adjacency.insert(a, cost);
                }
                Some(other) => {
                    return Err(err(line_no, format!("unknown record type {other:?}")))
                }
                None => {}
            }
        }
        if let Some(m) = max_seen {
            if next_id <= m {
                return Err(err(1, format!("next_id {next_id} collides with node id {m}")));
            }
        }
        graph.next_id = next_id;
        Ok(graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{build_descriptor, polar_point};

    fn dcfg() -> DescriptorConfig {
        DescriptorConfig::default()
    }

    fn open_descriptor() -> DepthDescriptor {
        build_descriptor(&[], &dcfg())
    }

    /// Descriptor with a wall at `wall_dist` across the given sector range.
    fn walled_descriptor(wall_dist: f64, sectors: std::ops::Range<usize>) -> DepthDescriptor {
        let mut depths = vec![dcfg().d_max; 72];
        for j in sectors {
            depths[j % 72] = wall_dist;
        }
        DepthDescriptor::from_depths(dcfg(), depths).unwrap()
    }

    #[test]
    fn insert_and_select_filters_covered_candidates() {
        let mut g = TopoGraph::new(dcfg());
        let root = g.insert_waypoint(Point3::new(0.0, 0.0, 1.0), open_descriptor());

        // Empty history: all candidates inserted.
        let cands = vec![Point3::new(2.0, 0.0, 1.0), Point3::new(0.0, 2.0, 1.0)];
        let inserted = g.select_and_insert_frontiers(root, &cands).unwrap();
        assert_eq!(inserted.len(), 2);
        g.audit().unwrap();
        assert_eq!(g.frontier_count(), 2);
        assert!(g.has_edge(root, inserted[0]));

        // Convert one frontier far away; its open descriptor now covers the
        // area around it.
        let f = inserted[0];
        g.convert_to_waypoint(f, open_descriptor(), Point3::new(2.0, 0.0, 1.0))
            .unwrap();
        g.audit().unwrap();

        // Candidate exactly at the old waypoint's position: discarded.
        let again = g
            .select_and_insert_frontiers(f, &[Point3::new(0.0, 0.0, 1.0)])
            .unwrap();
        assert!(again.is_empty());

        // Candidate outside every waypoint's range: inserted.
        let far = g
            .select_and_insert_frontiers(f, &[Point3::new(6.5, 0.0, 1.0)])
            .unwrap();
        assert_eq!(far.len(), 1);
        g.audit().unwrap();
    }

    #[test]
    fn select_requires_waypoint_current() {
        let mut g = TopoGraph::new(dcfg());
        let root = g.insert_waypoint(Point3::new(0.0, 0.0, 0.0), open_descriptor());
        let f = g
            .select_and_insert_frontiers(root, &[Point3::new(1.0, 0.0, 0.0)])
            .unwrap()[0];
        assert!(matches!(
            g.select_and_insert_frontiers(f, &[]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn convert_updates_costs_and_index() {
        let mut g = TopoGraph::new(dcfg());
        let root = g.insert_waypoint(Point3::new(0.0, 0.0, 0.0), open_descriptor());
        let f = g
            .select_and_insert_frontiers(root, &[Point3::new(3.0, 0.0, 0.0)])
            .unwrap()[0];
        assert_eq!(g.frontier_count(), 1);

        // Identity update keeps costs.
        let before = g.node(f).unwrap().adjacency[&root];
        g.convert_to_waypoint(f, open_descriptor(), Point3::new(3.0, 0.0, 0.0))
            .unwrap();
        assert!(g.frontier_ids().next().is_none());
        assert_eq!(g.node(f).unwrap().adjacency[&root], before);
        g.audit().unwrap();

        // Converting a waypoint again is a contract violation.
        assert!(matches!(
            g.convert_to_waypoint(f, open_descriptor(), Point3::new(3.0, 0.0, 0.0)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn convert_with_displacement_recomputes_costs() {
        let mut g = TopoGraph::new(dcfg());
        let root = g.insert_waypoint(Point3::new(0.0, 0.0, 0.0), open_descriptor());
        let f = g
            .select_and_insert_frontiers(root, &[Point3::new(3.0, 0.0, 0.0)])
            .unwrap()[0];
        let observed = Point3::new(3.0, 0.3, 0.0);
        g.convert_to_waypoint(f, open_descriptor(), observed).unwrap();
        let cost = g.node(f).unwrap().adjacency[&root];
        assert_eq!(cost.to_bits(), observed.distance(Point3::new(0.0, 0.0, 0.0)).to_bits());
        g.audit().unwrap();
    }

    #[test]
    fn connectivity_respects_descriptor_depths() {
        let mut g = TopoGraph::new(dcfg());
        // Wall one meter away toward +x (sectors around 0).
        let desc = walled_descriptor(1.0, 70..76); // sectors 70,71,0,1,2,3
        let a = g.insert_waypoint(Point3::new(0.0, 0.0, 0.0), desc);
        // Node beyond range: no edge.
        let far = g.insert_frontier(Point3::new(7.0, 0.0, 0.0));
        // Node in open space at r=2 toward +y: edge.
        let open = g.insert_frontier(Point3::new(0.0, 2.0, 0.0));
        // Node behind the wall at r=3 toward +x: no edge.
        let hidden = g.insert_frontier(Point3::new(3.0, 0.0, 0.0));

        let added = g.update_connectivity(a).unwrap();
        assert_eq!(added.len(), 1);
        assert!(g.has_edge(a, open));
        assert!(!g.has_edge(a, far));
        assert!(!g.has_edge(a, hidden));
        let cost = g.node(a).unwrap().adjacency[&open];
        assert_eq!(cost, 2.0);
        g.audit().unwrap();
    }

    #[test]
    fn remove_invalid_node_cleans_up() {
        let mut g = TopoGraph::new(dcfg());
        let root = g.insert_waypoint(Point3::new(0.0, 0.0, 0.0), open_descriptor());
        let f = g
            .select_and_insert_frontiers(root, &[Point3::new(1.0, 1.0, 0.0)])
            .unwrap()[0];
        assert_eq!(g.node(root).unwrap().adjacency.len(), 1);
        g.remove_invalid_node(f).unwrap();
        assert_eq!(g.node(root).unwrap().adjacency.len(), 0);
        assert_eq!(g.frontier_count(), 0);
        assert!(g.node(f).is_none());
        g.audit().unwrap();

        // Ids are never reused.
        let g2 = g.insert_frontier(Point3::new(2.0, 2.0, 0.0));
        assert!(g2.0 > f.0);

        // Waypoints cannot be removed.
        assert!(matches!(
            g.remove_invalid_node(root),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn target_validity_checks() {
        let mut g = TopoGraph::new(dcfg());
        let desc = walled_descriptor(1.0, 70..76);
        let pos = Point3::new(0.0, 0.0, 0.0);
        let _root = g.insert_waypoint(pos, desc.clone());
        let beyond = g.insert_frontier(Point3::new(9.0, 0.0, 0.0));
        let open = g.insert_frontier(Point3::new(0.0, 2.0, 0.0));
        let in_wall = g.insert_frontier(Point3::new(3.0, 0.0, 0.0));

        assert!(g.check_target_validity(beyond, &desc, pos).unwrap());
        assert!(g.check_target_validity(open, &desc, pos).unwrap());
        assert!(!g.check_target_validity(in_wall, &desc, pos).unwrap());
    }

    #[test]
    fn astar_basics_and_chain() {
        let mut g = TopoGraph::new(dcfg());
        let a = g.insert_waypoint(Point3::new(0.0, 0.0, 0.0), open_descriptor());
        let b = g.insert_frontier(Point3::new(1.0, 0.0, 0.0));
        let c = g.insert_frontier(Point3::new(3.0, 0.0, 0.0));
        g.add_edge(a, b).unwrap();
        g.add_edge(b, c).unwrap();

        let (cost, path) = g.astar_cost(a, a).unwrap().unwrap();
        assert_eq!((cost, path), (0.0, vec![a]));

        let (cost, path) = g.astar_cost(a, c).unwrap().unwrap();
        assert_eq!(cost, 3.0);
        assert_eq!(path, vec![a, b, c]);

        let lonely = g.insert_frontier(Point3::new(9.0, 9.0, 0.0));
        assert!(g.astar_cost(a, lonely).unwrap().is_none());
        assert!(g.astar_cost(a, NodeId(999)).is_err());
    }

    #[test]
    fn astar_matches_uniform_cost_search_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let mut g = TopoGraph::new(dcfg());
            let ids: Vec<NodeId> = (0..50)
                .map(|_| {
                    g.insert_frontier(Point3::new(
                        rng.gen::<f64>() * 30.0,
                        rng.gen::<f64>() * 30.0,
                        0.0,
                    ))
                })
                .collect();
            for i in 0..ids.len() {
                for j in (i + 1)..ids.len() {
                    if rng.gen::<f64>() < 0.12 {
                        g.add_edge(ids[i], ids[j]).unwrap();
                    }
                }
            }

            // Reference: Dijkstra without heuristic.
            let ucs = |g: &TopoGraph, s: NodeId, t: NodeId| -> Option<f64> {
                let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
                dist.insert(s, 0.0);
                let mut visited: BTreeSet<NodeId> = BTreeSet::new();
                loop {
                    let cur = dist
                        .iter()
                        .filter(|(id, _)| !visited.contains(*id))
                        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(b.0)))
                        .map(|(id, d)| (*id, *d));
                    let Some((id, d)) = cur else { return None };
                    if id == t {
                        return Some(d);
                    }
                    visited.insert(id);
                    for (nb, c) in &g.node(id).unwrap().adjacency {
                        let nd = d + c;
                        if dist.get(nb).map_or(true, |&old| nd < old) {
                            dist.insert(*nb, nd);
                        }
                    }
                }
            };

            for _ in 0..20 {
                let s = ids[rng.gen_range(0..ids.len())];
                let t = ids[rng.gen_range(0..ids.len())];
                let fast = g.astar_cost(s, t).unwrap().map(|(c, _)| c);
                let slow = ucs(&g, s, t);
                match (fast, slow) {
                    (None, None) => {}
                    (Some(f), Some(s)) => assert!((f - s).abs() < 1e-9, "{f} vs {s}"),
                    other => panic!("reachability mismatch: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn memory_accounting_arithmetic() {
        let mut g = TopoGraph::new(dcfg());
        let empty = g.graph_memory_bytes();
        assert_eq!(empty, GRAPH_HEADER_BYTES);

        g.insert_waypoint(Point3::new(0.0, 0.0, 0.0), open_descriptor());
        let one = g.graph_memory_bytes();
        assert_eq!(
            one - empty,
            NODE_RECORD_BYTES + DESCRIPTOR_FIXED_BYTES + 8 * 72
        );

        let f = g.insert_frontier(Point3::new(1.0, 0.0, 0.0));
        g.add_edge(NodeId(0), f).unwrap();
        let two = g.graph_memory_bytes();
        assert_eq!(
            two - one,
            NODE_RECORD_BYTES + 8 + 2 * ADJACENCY_ENTRY_BYTES
        );
    }

    #[test]
    fn serialization_round_trip() {
        let mut g = TopoGraph::new(dcfg());
        // Empty graph: header only, round-trips.
        let text = g.serialize();
        assert_eq!(text.lines().count(), 2);
        let back = TopoGraph::deserialize(&text).unwrap();
        assert_eq!(back.node_count(), 0);
        assert_eq!(back.next_id, 0);

        // Populated graph with awkward float values.
        let desc = build_descriptor(
            &[polar_point(1.234567890123, 0.3, 0.0), polar_point(4.9999, 2.0, 0.0)],
            &dcfg(),
        );
        let a = g.insert_waypoint(Point3::new(0.1, 0.2, 1.0), desc);
        let b = g
            .select_and_insert_frontiers(a, &[Point3::new(2.0 / 3.0, 0.1, 1.0)])
            .unwrap()[0];
        let c = g.insert_frontier(Point3::new(-1.5, 2.25, 1.0));
        g.add_edge(b, c).unwrap();
        g.remove_invalid_node(c).unwrap(); // retire an id so next_id > max id + 1

        let text = g.serialize();
        let back = TopoGraph::deserialize(&text).unwrap();
        assert_eq!(back.serialize(), text);
        assert_eq!(back.node_count(), g.node_count());
        assert_eq!(back.edge_count(), g.edge_count());
        assert_eq!(back.next_id, g.next_id);
        back.audit().unwrap();

        let na = back.node(a).unwrap();
        assert_eq!(na.position, g.node(a).unwrap().position);
        assert_eq!(
            na.descriptor.as_ref().unwrap().depths(),
            g.node(a).unwrap().descriptor.as_ref().unwrap().depths()
        );
        assert_eq!(back.node(b).unwrap().adjacency, g.node(b).unwrap().adjacency);
    }

    #[test]
    fn deserialize_reports_line_numbers() {
        let text = "topograph v1 next_id=1\nconfig theta_deg=5 delta_theta_deg=15 d_max=5 h=1\nnode 0 WAYPOINT 0 0 0\n";
        let err = TopoGraph::deserialize(text).unwrap_err();
        match err {
            Error::GraphParse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn frontier_index_matches_naive_recomputation_under_random_ops() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut g = TopoGraph::new(dcfg());
        let root = g.insert_waypoint(Point3::new(0.0, 0.0, 0.0), open_descriptor());
        let mut frontiers: Vec<NodeId> = Vec::new();
        let mut waypoints = vec![root];
        for step in 0..300 {
            match rng.gen_range(0..4) {
                0 => {
                    let p = Point3::new(
                        rng.gen::<f64>() * 100.0,
                        rng.gen::<f64>() * 100.0,
                        0.0,
                    );
                    let anchor = waypoints[rng.gen_range(0..waypoints.len())];
                    if let Ok(ins) = g.select_and_insert_frontiers(anchor, &[p]) {
                        frontiers.extend(ins);
                    }
                }
                1 if !frontiers.is_empty() => {
                    let idx = rng.gen_range(0..frontiers.len());
                    let id = frontiers.swap_remove(idx);
                    g.remove_invalid_node(id).unwrap();
                }
                2 if !frontiers.is_empty() => {
                    let idx = rng.gen_range(0..frontiers.len());
                    let id = frontiers.swap_remove(idx);
                    let pos = g.node(id).unwrap().position;
                    g.convert_to_waypoint(id, open_descriptor(), pos).unwrap();
                    waypoints.push(id);
                }
                _ => {
                    if waypoints.len() >= 2 {
                        let a = waypoints[rng.gen_range(0..waypoints.len())];
                        let b = waypoints[rng.gen_range(0..waypoints.len())];
                        if a != b && !g.has_edge(a, b) {
                            g.add_edge(a, b).unwrap();
                        }
                    }
                }
            }
            let naive: BTreeSet<NodeId> = g
                .nodes()
                .filter(|(_, n)| n.node_type == NodeType::Frontier)
                .map(|(id, _)| id)
                .collect();
            let index: BTreeSet<NodeId> = g.frontier_ids().collect();
            assert_eq!(naive, index, "step {step}");
            g.audit().unwrap();
        }
    }
}
