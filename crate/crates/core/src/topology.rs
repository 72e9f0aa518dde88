//! Rooted tree networks: per-node index sets, aggregation weights `beta`,
//! and per-node iteration schedules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Partition;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Node {
    pub id: usize,
    pub layer: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Rooted tree with the root at layer 0 and all leaves at layer `depth`.
#[derive(Clone, Debug)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub depth: usize,
}

impl Topology {
    /// Complete tree with the given fan-out per layer; ids are breadth-first
    /// (root = 0).
    pub fn from_fanout(fanout: &[usize]) -> Result<Topology> {
        if fanout.is_empty() {
            return Err(Error::Config("fanout spec must be nonempty".into()));
        }
        if fanout.contains(&0) {
            return Err(Error::Config("fanout counts must be >= 1".into()));
        }
        let mut nodes = vec![Node {
            id: 0,
            layer: 0,
            parent: None,
            children: Vec::new(),
        }];
        let mut frontier = vec![0usize];
        for (layer, &k) in fanout.iter().enumerate() {
            let mut next = Vec::new();
            for &p in &frontier {
                for _ in 0..k {
                    let id = nodes.len();
                    nodes.push(Node {
                        id,
                        layer: layer + 1,
                        parent: Some(p),
                        children: Vec::new(),
                    });
                    nodes[p].children.push(id);
                    next.push(id);
                }
            }
            frontier = next;
        }
        Ok(Topology {
            nodes,
            depth: fanout.len(),
        })
    }

    /// Tree from an explicit per-node child list; node ids are the list
    /// positions and node 0 is the root.
    pub fn from_children(children: &[Vec<usize>]) -> Result<Topology> {
        let n = children.len();
        if n == 0 {
            return Err(Error::Config("adjacency spec must be nonempty".into()));
        }
        let mut parent = vec![None; n];
        for (p, kids) in children.iter().enumerate() {
            for &c in kids {
                if c >= n {
                    return Err(Error::Config(format!("child id {c} out of range")));
                }
                if c == 0 {
                    return Err(Error::Config("root cannot have a parent".into()));
                }
                if parent[c].is_some() {
                    return Err(Error::Config(format!("node {c} has two parents")));
                }
                parent[c] = Some(p);
            }
        }
        for (id, p) in parent.iter().enumerate().skip(1) {
            if p.is_none() {
                return Err(Error::Config(format!("node {id} is unreachable")));
            }
        }
        let mut layer = vec![0usize; n];
        // parents appear before children is not guaranteed; walk from the root
        let mut stack = vec![0usize];
        let mut seen = 1usize;
        while let Some(p) = stack.pop() {
            for &c in &children[p] {
                layer[c] = layer[p] + 1;
                seen += 1;
                stack.push(c);
            }
        }
        if seen != n {
            return Err(Error::Config("adjacency spec contains a cycle".into()));
        }
        let depth = layer.iter().cloned().max().unwrap_or(0);
        for (id, kids) in children.iter().enumerate() {
            if kids.is_empty() && layer[id] != depth {
                return Err(Error::Config(format!(
                    "leaf {id} at layer {} but leaves must sit at layer {depth}",
                    layer[id]
                )));
            }
        }
        let nodes = (0..n)
            .map(|id| Node {
                id,
                layer: layer[id],
                parent: parent[id],
                children: children[id].clone(),
            })
            .collect();
        Ok(Topology { nodes, depth })
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> Result<&Node> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    /// Leaf ids in breadth-first order.
    pub fn leaves(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.children.is_empty())
            .map(|n| n.id)
            .collect()
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.nodes[id].children.is_empty()
    }
}

/// Sorted index set of a node: its own partition list for a leaf, the
/// disjoint union of the children's sets for an internal node.
pub fn node_index_set(
    topology: &Topology,
    partition: &Partition,
    node_id: usize,
) -> Result<Vec<usize>> {
    let node = topology.node(node_id)?;
    if node.children.is_empty() {
        return Ok(partition
            .leaf_indices(node_id)
            .map(<[usize]>::to_vec)
            .unwrap_or_default());
    }
    let mut out = Vec::new();
    for &c in &node.children {
        out.extend(node_index_set(topology, partition, c)?);
    }
    out.sort_unstable();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Uniform,
    DataProportional,
}

/// Aggregation weights per internal node, in child order. Each internal
/// node's weights sum to 1.
#[derive(Clone, Debug)]
pub struct WeightSchedule {
    pub beta: Vec<Vec<f64>>,
}

impl WeightSchedule {
    pub fn of(&self, parent: usize, child_ordinal: usize) -> f64 {
        self.beta[parent][child_ordinal]
    }
}

/// Uniform: `beta_k = 1/K`. DataProportional: `beta_k = |[Q;k]| / |Q|`.
pub fn compute_betas(
    topology: &Topology,
    partition: &Partition,
    mode: WeightMode,
) -> Result<WeightSchedule> {
    let sizes: Vec<usize> = (0..topology.nodes.len())
        .map(|id| node_index_set(topology, partition, id).map(|s| s.len()))
        .collect::<Result<_>>()?;
    let mut beta = vec![Vec::new(); topology.nodes.len()];
    for node in &topology.nodes {
        if node.children.is_empty() {
            continue;
        }
        beta[node.id] = match mode {
            WeightMode::Uniform => {
                vec![1.0 / node.children.len() as f64; node.children.len()]
            }
            WeightMode::DataProportional => {
                if sizes[node.id] == 0 {
                    return Err(Error::EmptyNode(node.id));
                }
                node.children
                    .iter()
                    .map(|&c| sizes[c] as f64 / sizes[node.id] as f64)
                    .collect()
            }
        };
    }
    Ok(WeightSchedule { beta })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationMode {
    Uniform,
    Delayed,
}

/// Which leaves the delayed schedule rescales.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayedScope {
    /// Every leaf gets `round(base * size / mean sibling size)`.
    AllLeaves,
    /// Only the largest leaf under each parent is rescaled; the rest keep the
    /// base count.
    BottleneckOnly,
}

/// Iteration counts per node id (`T_i` for internal nodes, `T_p` for leaves).
#[derive(Clone, Debug)]
pub struct IterationSchedule {
    pub t: Vec<usize>,
}

/// Assign per-node iteration counts from a per-layer base. In `Delayed` mode
/// leaf counts scale with the leaf's data share among its siblings; explicit
/// per-leaf pins override the computed count.
pub fn schedule_iterations(
    topology: &Topology,
    partition: &Partition,
    base_t: &[usize],
    mode: IterationMode,
    scope: DelayedScope,
    pins: &BTreeMap<usize, usize>,
) -> Result<IterationSchedule> {
    if base_t.len() != topology.depth + 1 {
        return Err(Error::Config(format!(
            "base iteration counts must cover layers 0..={}, got {} entries",
            topology.depth,
            base_t.len()
        )));
    }
    if base_t.contains(&0) {
        return Err(Error::Config("iteration counts must be >= 1".into()));
    }
    let mut t: Vec<usize> = topology.nodes.iter().map(|n| base_t[n.layer]).collect();

    if mode == IterationMode::Delayed {
        for node in &topology.nodes {
            let kids = &node.children;
            if kids.is_empty() || !topology.is_leaf(kids[0]) {
                continue;
            }
            let sizes: Vec<usize> = kids
                .iter()
                .map(|&c| partition.leaf_indices(c).map_or(0, <[usize]>::len))
                .collect();
            let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
            if mean == 0.0 {
                return Err(Error::EmptyNode(node.id));
            }
            let max_size = *sizes.iter().max().unwrap();
            for (&c, &sz) in kids.iter().zip(&sizes) {
                let scale_this = match scope {
                    DelayedScope::AllLeaves => true,
                    DelayedScope::BottleneckOnly => sz == max_size,
                };
                if scale_this {
                    let scaled = (base_t[topology.depth] as f64 * sz as f64 / mean).round();
                    t[c] = (scaled as usize).max(1);
                }
            }
        }
    }
    for (&leaf, &pin) in pins {
        let node = topology.node(leaf)?;
        if !node.children.is_empty() {
            return Err(Error::Config(format!("pin target {leaf} is not a leaf")));
        }
        if pin == 0 {
            return Err(Error::Config("pinned iteration counts must be >= 1".into()));
        }
        t[leaf] = pin;
    }
    Ok(IterationSchedule { t })
}
