//! Minimal-change search over parent parameterizations.
//!
//! Nodes of the lattice are index tuples over the target's parents; an edge
//! changes exactly one variable by one canonical step. Breadth-first search
//! from the current behavior returns the closest parameterization whose
//! training support exceeds `min_count` and whose predicted probability of a
//! high rating exceeds `epsilon`. The first pass holds the initial rotation
//! fixed; only if it finds nothing is the full lattice searched.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cbn::{CbnModel, CptTable};
use crate::discretization::DiscreteSample;
use crate::error::{Error, Result};
use crate::variables::{self as vars, Target};

pub const DEFAULT_EPSILON: f64 = 0.9;
pub const DEFAULT_MIN_COUNT: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Success threshold on P(target = high | parents).
    pub epsilon: f64,
    /// A parameterization is eligible only when observed more than this many times.
    pub min_count: u64,
    /// Variables expanded first; parents not listed follow in graph order.
    pub priority: Vec<String>,
    /// Held fixed during the first pass, if it is a parent of the target.
    pub frozen_first: Option<String>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            min_count: DEFAULT_MIN_COUNT,
            priority: [
                vars::ROBOT_POS_CHANGE,
                vars::ROBOT_ROTATION_CHANGE,
                vars::TOTAL_ROBOT_ROTATION,
                vars::INITIAL_ROBOT_ROTATION,
            ]
            .map(String::from)
            .to_vec(),
            frozen_first: Some(vars::INITIAL_ROBOT_ROTATION.to_string()),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::domain(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    FixedInitialRotation,
    Relaxed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualSolution {
    pub target: Target,
    /// Parent variables, in the order used by `solution` and `path`.
    pub variables: Vec<String>,
    pub solution: Vec<usize>,
    pub p_solution: f64,
    /// Training support n(u) of the solution.
    pub count: u64,
    pub depth: usize,
    pub phase: Phase,
    pub path: Vec<Vec<usize>>,
}

impl CounterfactualSolution {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        let i = self.variables.iter().position(|v| v == name)?;
        Some(self.solution[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SearchOutcome {
    Found(CounterfactualSolution),
    NoSolution { target: Target, explored: usize },
}

impl SearchOutcome {
    pub fn solution(&self) -> Option<&CounterfactualSolution> {
        match self {
            SearchOutcome::Found(s) => Some(s),
            SearchOutcome::NoSolution { .. } => None,
        }
    }
}

/// Lattice neighbors of `node`: one non-frozen variable moved one step.
/// Variables are visited in `order`, and for each the lower neighbor comes
/// before the upper one.
pub fn neighbors_ordered(node: &[usize], cards: &[usize], frozen: &[bool], order: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(2 * order.len());
    for &v in order {
        if frozen[v] {
            continue;
        }
        if node[v] > 0 {
            let mut c = node.to_vec();
            c[v] -= 1;
            out.push(c);
        }
        if node[v] + 1 < cards[v] {
            let mut c = node.to_vec();
            c[v] += 1;
            out.push(c);
        }
    }
    out
}

/// Lattice neighbors in variable order.
pub fn neighbors(node: &[usize], cards: &[usize], frozen: &[bool]) -> Vec<Vec<usize>> {
    let order: Vec<usize> = (0..node.len()).collect();
    neighbors_ordered(node, cards, frozen, &order)
}

/// Solution cell, its count and probability, and the path from the start.
type Hit = (Vec<usize>, u64, f64, Vec<Vec<usize>>);

struct Lattice<'a> {
    table: &'a CptTable,
    cards: Vec<usize>,
    order: Vec<usize>,
    epsilon: f64,
    min_count: u64,
}

impl Lattice<'_> {
    fn eligible(&self, node: &[usize]) -> Option<(u64, f64)> {
        let n = self.table.count(node);
        (n > self.min_count).then(|| (n, self.table.prob(1, node)))
    }

    fn bfs(&self, start: &[usize], frozen: &[bool], explored: &mut usize) -> Option<Hit> {
        let mut came_from: HashMap<Vec<usize>, Option<Vec<usize>>> = HashMap::new();
        came_from.insert(start.to_vec(), None);
        let mut queue = VecDeque::from([start.to_vec()]);
        while let Some(node) = queue.pop_front() {
            *explored += 1;
            for child in neighbors_ordered(&node, &self.cards, frozen, &self.order) {
                if came_from.contains_key(&child) {
                    continue;
                }
                let Some((n, p)) = self.eligible(&child) else {
                    continue;
                };
                came_from.insert(child.clone(), Some(node.clone()));
                if p > self.epsilon {
                    let mut path = vec![child.clone()];
                    let mut cur = &node;
                    loop {
                        path.push(cur.clone());
                        match &came_from[cur] {
                            Some(prev) => cur = prev,
                            None => break,
                        }
                    }
                    path.reverse();
                    return Some((child, n, p, path));
                }
                queue.push_back(child);
            }
        }
        None
    }
}

/// Searches for the closest well-supported parameterization expected to
/// rate `target` as high. `start` lists indices for the target's parents in
/// graph order.
pub fn search(model: &CbnModel, start: &[usize], target: Target, config: &SearchConfig) -> Result<SearchOutcome> {
    config.validate()?;
    let name = target.name();
    let table = model
        .table(name)
        .ok_or_else(|| Error::domain(format!("model has no `{name}` node")))?;
    if table.cardinality < 2 {
        return Err(Error::domain(format!("`{name}` is not binary")));
    }
    let variables = table.parents.clone();
    let cards = table.parent_cardinalities.clone();
    if start.len() != cards.len() {
        return Err(Error::domain(format!(
            "start has {} indices, `{name}` has {} parents",
            start.len(),
            cards.len()
        )));
    }
    if let Some((i, _)) = start.iter().zip(&cards).enumerate().find(|(_, (s, c))| s >= c) {
        return Err(Error::domain(format!(
            "start index {} for `{}` exceeds {} intervals",
            start[i], variables[i], cards[i]
        )));
    }

    let mut order: Vec<usize> = config
        .priority
        .iter()
        .filter_map(|p| variables.iter().position(|v| v == p))
        .collect();
    for i in 0..variables.len() {
        if !order.contains(&i) {
            order.push(i);
        }
    }
    let lattice = Lattice {
        table,
        cards,
        order,
        epsilon: config.epsilon,
        min_count: config.min_count,
    };
    let found = |node: Vec<usize>, n, p, path: Vec<Vec<usize>>, phase| {
        SearchOutcome::Found(CounterfactualSolution {
            target,
            variables: variables.clone(),
            depth: path.len() - 1,
            solution: node,
            p_solution: p,
            count: n,
            phase,
            path,
        })
    };

    if let Some((n, p)) = lattice.eligible(start) {
        if p > config.epsilon {
            return Ok(found(start.to_vec(), n, p, vec![start.to_vec()], Phase::FixedInitialRotation));
        }
    }

    let frozen_index = config
        .frozen_first
        .as_ref()
        .and_then(|f| variables.iter().position(|v| v == f));
    let mut explored = 0;
    let mut frozen = vec![false; variables.len()];
    if let Some(f) = frozen_index {
        frozen[f] = true;
    }
    if let Some((node, n, p, path)) = lattice.bfs(start, &frozen, &mut explored) {
        return Ok(found(node, n, p, path, Phase::FixedInitialRotation));
    }
    if frozen_index.is_some() {
        let free = vec![false; variables.len()];
        if let Some((node, n, p, path)) = lattice.bfs(start, &free, &mut explored) {
            return Ok(found(node, n, p, path, Phase::Relaxed));
        }
    }
    Ok(SearchOutcome::NoSolution { target, explored })
}

/// Runs [`search`] from the parent indices of a discretized sample.
pub fn search_from_sample(model: &CbnModel, sample: &DiscreteSample, target: Target, config: &SearchConfig) -> Result<SearchOutcome> {
    let parents = model
        .dag
        .parents(target.name())
        .ok_or_else(|| Error::domain(format!("model has no `{}` node", target.name())))?;
    let start = parents
        .iter()
        .map(|p| {
            sample
                .get(p)
                .ok_or_else(|| Error::schema(format!("sample lacks `{p}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    search(model, &start, target, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbn::{fit_parameters, DagSpec};

    fn sample(values: &[(&str, usize)]) -> DiscreteSample {
        DiscreteSample {
            participant_id: "p".into(),
            scenario_id: "s".into(),
            values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn worked_transition_example() {
        // Two variables with four intervals each; node (x1, y4) is (0, 3).
        let n = neighbors(&[0, 3], &[4, 4], &[false, false]);
        assert_eq!(n, vec![vec![1, 3], vec![0, 2]]);
        assert!(!n.contains(&vec![2, 3]));
        assert!(n.iter().all(|c| c.iter().zip([0, 3]).filter(|(a, b)| **a != *b).count() == 1));
    }

    #[test]
    fn corner_has_one_neighbor_per_variable() {
        assert_eq!(neighbors(&[0, 0, 0, 0], &[4, 4, 11, 10], &[false; 4]).len(), 4);
        assert_eq!(neighbors(&[1, 1, 1, 1], &[4, 4, 11, 10], &[false; 4]).len(), 8);
        assert_eq!(neighbors(&[1, 1, 1, 1], &[4, 4, 11, 10], &[true, false, false, false]).len(), 6);
        assert!(neighbors(&[0], &[1], &[false]).is_empty());
    }

    /// Two parents x (4) and y (4) for competence. Cell (1, 3) is the only
    /// well-supported cell with a high rating; (0, 3) is the start.
    fn toy_model(extra_support: bool) -> CbnModel {
        let dag = DagSpec::new(&[("x", 4), ("y", 4), (vars::COMPETENCE, 2)], &[("x", vars::COMPETENCE), ("y", vars::COMPETENCE)]);
        let mut data = Vec::new();
        let mut add = |x, y, high, low| {
            for _ in 0..high {
                data.push(sample(&[("x", x), ("y", y), (vars::COMPETENCE, 1)]));
            }
            for _ in 0..low {
                data.push(sample(&[("x", x), ("y", y), (vars::COMPETENCE, 0)]));
            }
        };
        add(0, 3, 1, 9);
        add(1, 3, 19, 1);
        add(0, 2, 2, 8);
        // High rating but too little support.
        add(3, 3, 3, 0);
        if extra_support {
            add(2, 3, 10, 0);
        }
        fit_parameters(&dag, &data, 0.0).unwrap()
    }

    fn cfg() -> SearchConfig {
        SearchConfig {
            priority: vec!["x".into(), "y".into()],
            frozen_first: None,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn one_step_solution() {
        let m = toy_model(false);
        let out = search(&m, &[0, 3], Target::Competence, &cfg()).unwrap();
        let sol = out.solution().unwrap();
        assert_eq!(sol.solution, vec![1, 3]);
        assert_eq!(sol.depth, 1);
        assert_eq!(sol.path, vec![vec![0, 3], vec![1, 3]]);
        assert!((sol.p_solution - 0.95).abs() < 1e-12);
        assert_eq!(sol.count, 20);
    }

    #[test]
    fn already_satisfying_start_returns_depth_zero() {
        let m = toy_model(false);
        let sol = search(&m, &[1, 3], Target::Competence, &cfg()).unwrap();
        let sol = sol.solution().unwrap();
        assert_eq!((sol.depth, sol.solution.clone()), (0, vec![1, 3]));
    }

    #[test]
    fn low_support_cells_block_and_exhaustion_reports() {
        let m = toy_model(false);
        let strict = SearchConfig { min_count: 20, ..cfg() };
        assert!(matches!(
            search(&m, &[0, 3], Target::Competence, &strict).unwrap(),
            SearchOutcome::NoSolution { .. }
        ));
        let too_high = SearchConfig { epsilon: 0.99, ..cfg() };
        assert!(search(&m, &[0, 3], Target::Competence, &too_high).unwrap().solution().is_none());
    }

    #[test]
    fn invalid_inputs() {
        let m = toy_model(false);
        assert!(search(&m, &[4, 0], Target::Competence, &cfg()).is_err());
        assert!(search(&m, &[0], Target::Competence, &cfg()).is_err());
        assert!(search(&m, &[0, 0], Target::Intention, &cfg()).is_err());
        let bad = SearchConfig { epsilon: 1.0, ..cfg() };
        assert!(search(&m, &[0, 0], Target::Competence, &bad).is_err());
    }

    #[test]
    fn frozen_variable_phases() {
        let m = toy_model(true);
        // Freezing x forces a relaxed second pass: no y-only move helps.
        let frozen_x = SearchConfig { frozen_first: Some("x".into()), ..cfg() };
        let sol = search(&m, &[0, 3], Target::Competence, &frozen_x).unwrap();
        let sol = sol.solution().unwrap();
        assert_eq!(sol.phase, Phase::Relaxed);
        assert_eq!(sol.solution, vec![1, 3]);
        // Freezing y keeps the solution in the first pass.
        let frozen_y = SearchConfig { frozen_first: Some("y".into()), ..cfg() };
        let sol = search(&m, &[0, 3], Target::Competence, &frozen_y).unwrap();
        assert_eq!(sol.solution().unwrap().phase, Phase::FixedInitialRotation);
    }

    #[test]
    fn default_priorities_match_robot_variables() {
        let c = SearchConfig::default();
        assert_eq!(c.epsilon, 0.9);
        assert_eq!(c.min_count, 5);
        assert_eq!(c.priority[0], vars::ROBOT_POS_CHANGE);
        assert_eq!(c.frozen_first.as_deref(), Some(vars::INITIAL_ROBOT_ROTATION));
    }
}
