//! Discrete causal Bayesian network: multinomial CPTs over a fixed DAG and
//! exact inference by enumeration of the factorized joint
//! `P(X_1..X_N) = prod_i P(X_i | Pa(X_i))`.

mod cpt;
mod dag;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::discretization::{DiscreteSample, DiscretizationModel};
use crate::error::{Error, Result};
use crate::variables::Target;

pub use cpt::{CptRow, CptTable};
pub use dag::{default_dag, robot_following_dag, validate_dag, DagSpec, NodeSpec};

pub const FORMAT_VERSION: u32 = 1;

/// Default additive smoothing for prediction.
pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbnModel {
    pub format_version: u32,
    pub alpha: f64,
    pub dag: DagSpec,
    /// One table per node, in node declaration order.
    pub tables: Vec<CptTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discretization: Option<DiscretizationModel>,
    #[serde(skip)]
    topo: Vec<usize>,
    #[serde(skip)]
    parents: Vec<Vec<usize>>,
}

/// Normalized posterior of the query plus the probability of the evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Posterior {
    pub distribution: Vec<f64>,
    pub evidence_likelihood: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub p_competence_high: f64,
    pub p_intention_high: f64,
    pub competence: u8,
    pub intention: u8,
}

impl Prediction {
    pub fn label(&self, target: Target) -> u8 {
        match target {
            Target::Competence => self.competence,
            Target::Intention => self.intention,
        }
    }
}

/// Estimates every CPT from fully observed samples.
pub fn fit_parameters(dag: &DagSpec, data: &[DiscreteSample], alpha: f64) -> Result<CbnModel> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("smoothing alpha must be finite and >= 0, got {alpha}")));
    }
    if data.is_empty() {
        return Err(Error::domain("cannot fit parameters on an empty dataset"));
    }
    let topo = dag::topological_order(dag)?;
    let parents = dag.parent_indices();

    let rows = data
        .iter()
        .enumerate()
        .map(|(i, s)| {
            dag.nodes
                .iter()
                .map(|node| {
                    let v = s.get(&node.name).ok_or_else(|| {
                        Error::schema(format!("sample {i} has no value for `{}`", node.name))
                    })?;
                    if v >= node.cardinality {
                        return Err(Error::schema(format!(
                            "sample {i}: `{}` = {v} but the node has {} states",
                            node.name, node.cardinality
                        )));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let tables = dag
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let pa = &parents[i];
            let mut counts: BTreeMap<Vec<usize>, Vec<u64>> = BTreeMap::new();
            for row in &rows {
                let u: Vec<usize> = pa.iter().map(|&p| row[p]).collect();
                counts.entry(u).or_insert_with(|| vec![0; node.cardinality])[row[i]] += 1;
            }
            CptTable::from_counts(
                node.name.clone(),
                node.cardinality,
                pa.iter().map(|&p| dag.nodes[p].name.clone()).collect(),
                pa.iter().map(|&p| dag.nodes[p].cardinality).collect(),
                counts.into_iter().collect(),
                alpha,
            )
        })
        .collect();

    Ok(CbnModel {
        format_version: FORMAT_VERSION,
        alpha,
        dag: dag.clone(),
        tables,
        discretization: None,
        topo,
        parents,
    })
}

impl CbnModel {
    /// Rebuilds derived indices after deserialization and checks that the
    /// tables agree with the graph.
    pub fn from_json(text: &str) -> Result<CbnModel> {
        let model: CbnModel = serde_json::from_str(text)?;
        model.finish()
    }

    pub fn finish(mut self) -> Result<CbnModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        self.topo = dag::topological_order(&self.dag)?;
        self.parents = self.dag.parent_indices();
        if self.tables.len() != self.dag.len() {
            return Err(Error::schema("one CPT per node required"));
        }
        for (i, (t, node)) in self.tables.iter().zip(&self.dag.nodes).enumerate() {
            let expected: Vec<&str> = self.parents[i].iter().map(|&p| self.dag.nodes[p].name.as_str()).collect();
            if t.node != node.name || t.cardinality != node.cardinality || t.parents != expected {
                return Err(Error::schema(format!("CPT for `{}` does not match the graph", node.name)));
            }
            t.check_rows()?;
        }
        Ok(self)
    }

    /// Network with explicitly given tables, e.g. a known generator.
    pub fn from_tables(dag: DagSpec, tables: Vec<CptTable>, alpha: f64) -> Result<CbnModel> {
        CbnModel {
            format_version: FORMAT_VERSION,
            alpha,
            dag,
            tables,
            discretization: None,
            topo: Vec::new(),
            parents: Vec::new(),
        }
        .finish()
    }

    pub fn with_discretization(mut self, d: DiscretizationModel) -> Self {
        self.discretization = Some(d);
        self
    }

    pub fn table(&self, name: &str) -> Option<&CptTable> {
        self.dag.index_of(name).map(|i| &self.tables[i])
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.dag.nodes.iter().map(|n| n.cardinality).collect()
    }

    /// Node indices in topological order.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn parent_indices(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    /// Probability of a complete assignment (node declaration order).
    pub fn joint(&self, assignment: &[usize]) -> f64 {
        self.factor_product(assignment, 0..self.tables.len())
    }

    fn factor_product(&self, assignment: &[usize], nodes: impl IntoIterator<Item = usize>) -> f64 {
        let mut p = 1.0;
        let mut u = Vec::with_capacity(8);
        for i in nodes {
            u.clear();
            u.extend(self.parents[i].iter().map(|&q| assignment[q]));
            p *= self.tables[i].prob(assignment[i], &u);
            if p == 0.0 {
                break;
            }
        }
        p
    }

    fn resolve_evidence(&self, evidence: &[(&str, usize)]) -> Result<Vec<Option<usize>>> {
        let mut values = vec![None; self.dag.len()];
        for (name, v) in evidence {
            let i = self
                .dag
                .index_of(name)
                .ok_or_else(|| Error::domain(format!("unknown evidence variable `{name}`")))?;
            if *v >= self.dag.nodes[i].cardinality {
                return Err(Error::domain(format!(
                    "evidence `{name}` = {v} exceeds {} states",
                    self.dag.nodes[i].cardinality
                )));
            }
            if values[i].is_some_and(|old| old != *v) {
                return Err(Error::domain(format!("conflicting evidence for `{name}`")));
            }
            values[i] = Some(*v);
        }
        Ok(values)
    }

    /// Marks `seeds` and all their ancestors.
    fn ancestral_closure(&self, seeds: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut keep = vec![false; self.dag.len()];
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(i) = stack.pop() {
            if !keep[i] {
                keep[i] = true;
                stack.extend(self.parents[i].iter().copied());
            }
        }
        keep
    }

    fn is_descendant(&self, node: usize, of: usize) -> bool {
        let mut stack = vec![node];
        let mut seen = vec![false; self.dag.len()];
        while let Some(i) = stack.pop() {
            if i == of {
                return true;
            }
            if !seen[i] {
                seen[i] = true;
                stack.extend(self.parents[i].iter().copied());
            }
        }
        false
    }

    /// Sums the factor product over every completion of the free nodes in
    /// `relevant`, calling `sink` with each completed assignment's weight.
    fn enumerate(&self, relevant: &[bool], fixed: &[Option<usize>], mut sink: impl FnMut(&[usize], f64)) {
        let nodes: Vec<usize> = self.topo.iter().copied().filter(|&i| relevant[i]).collect();
        let free: Vec<usize> = nodes.iter().copied().filter(|&i| fixed[i].is_none()).collect();
        let mut assignment: Vec<usize> = fixed.iter().map(|v| v.unwrap_or(0)).collect();
        loop {
            let p = self.factor_product(&assignment, nodes.iter().copied());
            sink(&assignment, p);
            // Odometer over the free nodes.
            let mut k = 0;
            loop {
                if k == free.len() {
                    return;
                }
                let i = free[k];
                assignment[i] += 1;
                if assignment[i] < self.dag.nodes[i].cardinality {
                    break;
                }
                assignment[i] = 0;
                k += 1;
            }
        }
    }

    /// Exact posterior of `query` given `evidence`.
    ///
    /// Barren nodes (outside the ancestral set of query and evidence) are
    /// dropped before enumeration since they sum out to one. When the
    /// evidence fixes every parent of the query and none of its descendants,
    /// the posterior is returned straight from the CPT row.
    pub fn infer(&self, evidence: &[(&str, usize)], query: &str) -> Result<Posterior> {
        let q = self
            .dag
            .index_of(query)
            .ok_or_else(|| Error::domain(format!("unknown query variable `{query}`")))?;
        let fixed = self.resolve_evidence(evidence)?;
        if fixed[q].is_some() {
            return Err(Error::domain(format!("query `{query}` is also evidence")));
        }
        let observed: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_some()).collect();

        let parents_fixed = self.parents[q].iter().all(|&p| fixed[p].is_some());
        let no_descendant_evidence = observed.iter().all(|&e| !self.is_descendant(e, q));
        if parents_fixed && no_descendant_evidence {
            let relevant = self.ancestral_closure(observed.iter().copied());
            let mut likelihood = 0.0;
            if observed.is_empty() {
                likelihood = 1.0;
            } else {
                self.enumerate(&relevant, &fixed, |_, p| likelihood += p);
            }
            if likelihood <= 0.0 {
                return Err(Error::ImpossibleEvidence);
            }
            let u: Vec<usize> = self.parents[q].iter().map(|&p| fixed[p].unwrap()).collect();
            return Ok(Posterior {
                distribution: self.tables[q].distribution(&u),
                evidence_likelihood: likelihood,
            });
        }

        let relevant = self.ancestral_closure(observed.iter().copied().chain([q]));
        let mut mass = vec![0.0; self.dag.nodes[q].cardinality];
        self.enumerate(&relevant, &fixed, |a, p| mass[a[q]] += p);
        let likelihood: f64 = mass.iter().sum();
        if likelihood <= 0.0 {
            return Err(Error::ImpossibleEvidence);
        }
        Ok(Posterior {
            distribution: mass.iter().map(|m| m / likelihood).collect(),
            evidence_likelihood: likelihood,
        })
    }

    /// P(target = high | parents of target taken from `sample`).
    pub fn probability_high(&self, sample: &DiscreteSample, target: Target) -> Result<f64> {
        let name = target.name();
        let parents = self
            .dag
            .parents(name)
            .ok_or_else(|| Error::schema(format!("model has no `{name}` node")))?;
        let evidence = parents
            .iter()
            .map(|p| {
                sample
                    .get(p)
                    .map(|v| (p.as_str(), v))
                    .ok_or_else(|| Error::schema(format!("sample lacks parent `{p}` of `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let posterior = self.infer(&evidence, name)?;
        posterior
            .distribution
            .get(1)
            .copied()
            .ok_or_else(|| Error::schema(format!("`{name}` is not binary")))
    }

    pub fn predict(&self, sample: &DiscreteSample) -> Result<Prediction> {
        let pc = self.probability_high(sample, Target::Competence)?;
        let pi = self.probability_high(sample, Target::Intention)?;
        Ok(Prediction {
            p_competence_high: pc,
            p_intention_high: pi,
            competence: u8::from(pc >= 0.5),
            intention: u8::from(pi >= 0.5),
        })
    }
}
