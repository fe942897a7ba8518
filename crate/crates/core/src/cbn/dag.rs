//! Directed acyclic graph over named discrete variables.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variables::{self as vars, Cardinalities};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub cardinality: usize,
}

/// Nodes with their state counts plus parent -> child edges. Parent lists
/// follow node declaration order, not edge order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<(String, String)>,
}

impl DagSpec {
    pub fn new(nodes: &[(&str, usize)], edges: &[(&str, &str)]) -> Self {
        Self {
            nodes: nodes
                .iter()
                .map(|(n, c)| NodeSpec {
                    name: n.to_string(),
                    cardinality: *c,
                })
                .collect(),
            edges: edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn cardinality(&self, name: &str) -> Option<usize> {
        self.index_of(name).map(|i| self.nodes[i].cardinality)
    }

    /// Parent indices of every node, sorted by declaration order.
    /// Edges naming unknown nodes are skipped; [`validate_dag`] reports them.
    pub fn parent_indices(&self) -> Vec<Vec<usize>> {
        let mut parents = vec![Vec::new(); self.nodes.len()];
        for (a, b) in &self.edges {
            if let (Some(i), Some(j)) = (self.index_of(a), self.index_of(b)) {
                parents[j].push(i);
            }
        }
        for p in &mut parents {
            p.sort_unstable();
            p.dedup();
        }
        parents
    }

    pub fn parents(&self, name: &str) -> Option<Vec<String>> {
        let i = self.index_of(name)?;
        Some(
            self.parent_indices()[i]
                .iter()
                .map(|&p| self.nodes[p].name.clone())
                .collect(),
        )
    }

    /// Copy with cardinalities replaced for every node named in `cards`.
    pub fn with_cardinalities(&self, cards: &BTreeMap<String, usize>) -> DagSpec {
        let mut out = self.clone();
        for n in &mut out.nodes {
            if let Some(c) = cards.get(&n.name) {
                n.cardinality = *c;
            }
        }
        out
    }

    pub fn from_json(text: &str) -> Result<DagSpec> {
        let dag: DagSpec = serde_json::from_str(text)?;
        validate_dag(&dag)?;
        Ok(dag)
    }
}

/// Checks structure and returns node names in a topological order
/// (ties broken by declaration order).
pub fn validate_dag(dag: &DagSpec) -> Result<Vec<String>> {
    let order = topological_order(dag)?;
    Ok(order.into_iter().map(|i| dag.nodes[i].name.clone()).collect())
}

pub(crate) fn topological_order(dag: &DagSpec) -> Result<Vec<usize>> {
    let mut names = BTreeSet::new();
    for n in &dag.nodes {
        if !names.insert(n.name.as_str()) {
            return Err(Error::schema(format!("duplicate node `{}`", n.name)));
        }
        if n.cardinality == 0 {
            return Err(Error::schema(format!("node `{}` has no states", n.name)));
        }
    }
    let mut seen_edges = BTreeSet::new();
    for (a, b) in &dag.edges {
        for end in [a, b] {
            if !names.contains(end.as_str()) {
                return Err(Error::schema(format!("edge {a} -> {b} names undeclared node `{end}`")));
            }
        }
        if !seen_edges.insert((a, b)) {
            return Err(Error::schema(format!("duplicate edge {a} -> {b}")));
        }
    }

    let n = dag.nodes.len();
    let mut children = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for (a, b) in &dag.edges {
        let (i, j) = (dag.index_of(a).unwrap(), dag.index_of(b).unwrap());
        children[i].push(j);
        indegree[j] += 1;
    }
    for c in &mut children {
        c.sort_unstable();
    }

    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &j in &children[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.insert(j);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    let remaining: Vec<bool> = indegree.iter().map(|&d| d > 0).collect();
    let cycle = find_cycle(&children, &remaining).expect("nodes left after Kahn's algorithm lie on a cycle");
    Err(Error::Cycle(cycle.into_iter().map(|i| dag.nodes[i].name.clone()).collect()))
}

/// Depth-first search restricted to `active` nodes; returns the nodes of the
/// first cycle met, in edge order.
fn find_cycle(children: &[Vec<usize>], active: &[bool]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Gray,
        Black,
    }
    let n = children.len();
    let mut mark = vec![Mark::White; n];
    for root in (0..n).filter(|&i| active[i]) {
        if mark[root] != Mark::White {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::Gray;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&child) = children[node].get(*next) {
                *next += 1;
                if !active[child] {
                    continue;
                }
                match mark[child] {
                    Mark::Gray => {
                        let start = stack.iter().position(|(v, _)| *v == child).unwrap();
                        return Some(stack[start..].iter().map(|(v, _)| *v).collect());
                    }
                    Mark::White => {
                        mark[child] = Mark::Gray;
                        stack.push((child, 0));
                    }
                    Mark::Black => {}
                }
            } else {
                mark[node] = Mark::Black;
                stack.pop();
            }
        }
    }
    None
}

/// The robot-following graph with the given interval counts.
pub fn robot_following_dag(cards: &Cardinalities) -> DagSpec {
    use vars::*;
    let mut edges = vec![
        (INITIAL_ROBOT_ROTATION, ROBOT_ROTATION_CHANGE),
        (ROBOT_ROTATION_CHANGE, ROBOT_POS_CHANGE),
    ];
    for target in [COMPETENCE, INTENTION] {
        for parent in BEHAVIOR_PARENTS {
            edges.push((parent, target));
        }
    }
    for parent in [ROBOT_POS_CHANGE, COMPETENCE, INTENTION] {
        edges.push((parent, HUMAN_POS_CHANGE));
    }
    DagSpec::new(
        &[
            (INITIAL_ROBOT_ROTATION, cards.initial_robot_rotation),
            (TOTAL_ROBOT_ROTATION, cards.total_robot_rotation),
            (ROBOT_ROTATION_CHANGE, cards.robot_rotation_change),
            (ROBOT_POS_CHANGE, cards.robot_pos_change),
            (COMPETENCE, 2),
            (INTENTION, 2),
            (HUMAN_POS_CHANGE, cards.human_pos_change),
        ],
        &edges,
    )
}

pub fn default_dag() -> DagSpec {
    robot_following_dag(&Cardinalities::default())
}
