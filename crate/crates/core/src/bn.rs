//! Binary Bayesian networks.
//!
//! A [`BayesNet`] is a DAG of Boolean nodes, each carrying a [`CpdTable`]
//! that stores `P(node = 1 | parents)` for every parent assignment. The net
//! is used as a data source (ancestral sampling), as an exact-inference
//! oracle (enumeration, capped at [`MAX_ENUMERATION_NODES`]) and as the
//! ground truth for Markov boundaries.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact enumeration refuses nets larger than this.
pub const MAX_ENUMERATION_NODES: usize = 20;

#[derive(Debug, Error)]
pub enum BnError {
    #[error("malformed network document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("node `{node}` references unknown parent `{parent}`")]
    UnknownParent { node: String, parent: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("network contains a cycle through `{0}`")]
    Cycle(String),
    #[error("node `{node}` has {found} CPD rows, expected {expected}")]
    RowCount {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("node `{node}` row {row}: probability {value} outside [0, 1]")]
    ProbabilityRange { node: String, row: usize, value: f64 },
    #[error("network has no nodes")]
    Empty,
    #[error("conditional undefined: evidence has zero probability")]
    ZeroProbabilityEvidence,
    #[error("exact enumeration limited to {limit} nodes, net has {nodes}")]
    TooManyNodes { nodes: usize, limit: usize },
    #[error("query node `{0}` is also part of the evidence")]
    QueryInEvidence(String),
    #[error("parameter {0} outside [0, 1]")]
    ParameterRange(f64),
}

/// Conditional probability table of one binary node.
///
/// `rows[r]` is `P(value = 1)` for the parent assignment whose bits, read
/// big-endian over `parents`, spell `r` (row 0 = all parents 0).
#[derive(Debug, Clone, PartialEq)]
pub struct CpdTable {
    parents: Vec<String>,
    rows: Vec<f64>,
}

impl CpdTable {
    pub fn new(parents: Vec<String>, rows: Vec<f64>) -> Result<Self, BnError> {
        let expected = 1usize << parents.len();
        if rows.len() != expected {
            return Err(BnError::RowCount {
                node: String::new(),
                expected,
                found: rows.len(),
            });
        }
        for (row, &value) in rows.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(BnError::ProbabilityRange {
                    node: String::new(),
                    row,
                    value,
                });
            }
        }
        Ok(Self { parents, rows })
    }

    pub fn root(p_one: f64) -> Result<Self, BnError> {
        Self::new(Vec::new(), vec![p_one])
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    /// `P(value | parent row)`; `P(0)` is `1 - P(1)`.
    pub fn prob(&self, row: usize, value: bool) -> f64 {
        let p = self.rows[row];
        if value {
            p
        } else {
            1.0 - p
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    name: String,
    parents: Vec<usize>,
    cpd: CpdTable,
}

/// One value per node, indexed like [`BayesNet::names`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, node: usize) -> bool {
        self.values[node]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Validated, immutable binary Bayesian network with a designated target.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    nodes: Vec<Node>,
    topo: Vec<usize>,
    target: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDoc {
    name: String,
    #[serde(default)]
    parents: Vec<String>,
    cpd: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetDoc {
    nodes: Vec<NodeDoc>,
    target: String,
}

impl BayesNet {
    /// Builds a net from `(name, cpd)` pairs in declaration order.
    pub fn new(nodes: Vec<(String, CpdTable)>, target: &str) -> Result<Self, BnError> {
        if nodes.is_empty() {
            return Err(BnError::Empty);
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, (name, _)) in nodes.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(BnError::DuplicateNode(name.clone()));
            }
        }
        let mut built = Vec::with_capacity(nodes.len());
        for (name, cpd) in nodes {
            let expected = 1usize << cpd.parents.len();
            if cpd.rows.len() != expected {
                return Err(BnError::RowCount {
                    node: name,
                    expected,
                    found: cpd.rows.len(),
                });
            }
            if let Some((row, &value)) = cpd
                .rows
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                return Err(BnError::ProbabilityRange {
                    node: name,
                    row,
                    value,
                });
            }
            let parents = cpd
                .parents
                .iter()
                .map(|p| {
                    index.get(p).copied().ok_or_else(|| BnError::UnknownParent {
                        node: name.clone(),
                        parent: p.clone(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            built.push(Node { name, parents, cpd });
        }
        let target = *index
            .get(target)
            .ok_or_else(|| BnError::UnknownNode(target.to_string()))?;
        let topo = topological_order(&built)?;
        Ok(Self {
            nodes: built,
            topo,
            target,
        })
    }

    /// Parses the JSON network document.
    pub fn from_json(text: &str) -> Result<Self, BnError> {
        let doc: NetDoc = serde_json::from_str(text)?;
        let nodes = doc
            .nodes
            .into_iter()
            .map(|n| {
                (
                    n.name,
                    CpdTable {
                        parents: n.parents,
                        rows: n.cpd,
                    },
                )
            })
            .collect();
        Self::new(nodes, &doc.target)
    }

    pub fn to_json(&self) -> String {
        let doc = NetDoc {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    name: n.name.clone(),
                    parents: n.cpd.parents.clone(),
                    cpd: n.cpd.rows.clone(),
                })
                .collect(),
            target: self.nodes[self.target].name.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("network document serializes")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.name.as_str())
    }

    pub fn name(&self, node: usize) -> &str {
        &self.nodes[node].name
    }

    pub fn index_of(&self, name: &str) -> Result<usize, BnError> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| BnError::UnknownNode(name.to_string()))
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn target_name(&self) -> &str {
        &self.nodes[self.target].name
    }

    pub fn cpd(&self, node: usize) -> &CpdTable {
        &self.nodes[node].cpd
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.nodes[node].parents
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&c| self.nodes[c].parents.contains(&node))
            .collect()
    }

    fn row_of(&self, node: usize, values: &[bool]) -> usize {
        self.nodes[node]
            .parents
            .iter()
            .fold(0, |row, &p| (row << 1) | usize::from(values[p]))
    }

    /// Product of the per-node CPD entries.
    pub fn joint_prob(&self, a: &Assignment) -> f64 {
        assert_eq!(a.len(), self.len(), "assignment must cover every node");
        self.joint_of(&a.values)
    }

    fn joint_of(&self, values: &[bool]) -> f64 {
        let mut p = 1.0;
        for (i, node) in self.nodes.iter().enumerate() {
            p *= node.cpd.prob(self.row_of(i, values), values[i]);
            if p == 0.0 {
                break;
            }
        }
        p
    }

    /// Exact `P(query = 1 | evidence)` by enumeration over unassigned nodes.
    pub fn conditional(&self, query: &str, evidence: &[(&str, bool)]) -> Result<f64, BnError> {
        let q = self.index_of(query)?;
        let ev = evidence
            .iter()
            .map(|&(n, v)| Ok((self.index_of(n)?, v)))
            .collect::<Result<Vec<_>, BnError>>()?;
        self.conditional_idx(q, &ev)
    }

    pub fn conditional_idx(&self, query: usize, evidence: &[(usize, bool)]) -> Result<f64, BnError> {
        if self.len() > MAX_ENUMERATION_NODES {
            return Err(BnError::TooManyNodes {
                nodes: self.len(),
                limit: MAX_ENUMERATION_NODES,
            });
        }
        if evidence.iter().any(|&(n, _)| n == query) {
            return Err(BnError::QueryInEvidence(self.name(query).to_string()));
        }
        let mut fixed = vec![None; self.len()];
        for &(n, v) in evidence {
            fixed[n] = Some(v);
        }
        let free: Vec<usize> = (0..self.len()).filter(|&i| fixed[i].is_none()).collect();
        let mut values: Vec<bool> = fixed.iter().map(|v| v.unwrap_or(false)).collect();
        let (mut num, mut den) = (0.0, 0.0);
        for bits in 0u64..(1u64 << free.len()) {
            for (k, &i) in free.iter().enumerate() {
                values[i] = (bits >> k) & 1 == 1;
            }
            let p = self.joint_of(&values);
            den += p;
            if values[query] {
                num += p;
            }
        }
        if den <= 0.0 {
            return Err(BnError::ZeroProbabilityEvidence);
        }
        Ok(num / den)
    }

    /// Exact marginal `P(node = 1)`.
    pub fn marginal(&self, node: &str) -> Result<f64, BnError> {
        self.conditional(node, &[])
    }

    /// Parents, children and co-parents of children, excluding `var`.
    pub fn markov_boundary(&self, var: &str) -> Result<BTreeSet<String>, BnError> {
        let v = self.index_of(var)?;
        Ok(self
            .markov_boundary_idx(v)
            .into_iter()
            .map(|i| self.nodes[i].name.clone())
            .collect())
    }

    pub fn markov_boundary_idx(&self, var: usize) -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = self.nodes[var].parents.iter().copied().collect();
        for child in self.children(var) {
            set.insert(child);
            set.extend(self.nodes[child].parents.iter().copied());
        }
        set.remove(&var);
        set
    }

    /// Ancestral sampling with a fresh generator seeded by `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Assignment> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample_with(&mut rng)).collect()
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Assignment {
        let mut values = vec![false; self.len()];
        self.sample_into(rng, &mut values);
        Assignment { values }
    }

    /// Allocation-free variant of [`BayesNet::sample_with`].
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, values: &mut [bool]) {
        for &i in &self.topo {
            let p = self.nodes[i].cpd.rows[self.row_of(i, values)];
            values[i] = rng.gen::<f64>() < p;
        }
    }
}

fn topological_order(nodes: &[Node]) -> Result<Vec<usize>, BnError> {
    // Kahn's algorithm; ties broken by declaration order.
    let n = nodes.len();
    let mut indegree: Vec<usize> = nodes.iter().map(|node| node.parents.len()).collect();
    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
    while let Some(i) = ready.pop() {
        order.push(i);
        for (c, child) in nodes.iter().enumerate().rev() {
            let edges = child.parents.iter().filter(|&&p| p == i).count();
            if edges > 0 {
                indegree[c] -= edges;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).expect("cycle member");
        return Err(BnError::Cycle(nodes[stuck].name.clone()));
    }
    Ok(order)
}

/// Nine-node toy network with target `Y`.
///
/// Roots X5, X6, X7, X8; `Y <- {X5, X6, X7}`; `X1, X2 <- Y`; `X4 <- X8`;
/// `X3 <- {Y, X4}`. Nodes are declared X1..X8 then Y, so dropping the
/// target leaves features in X1..X8 order.
pub fn builtin_toy() -> BayesNet {
    let node = |name: &str, parents: &[&str], cpd: &[f64]| {
        (
            name.to_string(),
            CpdTable {
                parents: parents.iter().map(|p| p.to_string()).collect(),
                rows: cpd.to_vec(),
            },
        )
    };
    BayesNet::new(
        vec![
            node("X1", &["Y"], &[0.1, 0.9]),
            node("X2", &["Y"], &[0.2, 0.4]),
            node("X3", &["Y", "X4"], &[0.2, 0.4, 0.8, 0.6]),
            node("X4", &["X8"], &[0.4, 0.6]),
            node("X5", &[], &[0.4]),
            node("X6", &[], &[0.3]),
            node("X7", &[], &[0.2]),
            node("X8", &[], &[0.1]),
            node(
                "Y",
                &["X5", "X6", "X7"],
                &[0.7, 0.6, 0.3, 0.4, 0.9, 0.2, 0.7, 0.6],
            ),
        ],
        "Y",
    )
    .expect("toy network is valid")
}

/// Three-node family `X2 <- X1 -> Y` used for the convergence analysis.
///
/// `p_x1 = P(X1=1)`, `p_y = P(Y=1|X1=1) = P(Y=0|X1=0)`,
/// `p_x2 = P(X2=1|X1=1) = P(X2=0|X1=0)`.
pub fn builtin_chain3(p_x1: f64, p_y: f64, p_x2: f64) -> Result<BayesNet, BnError> {
    for p in [p_x1, p_y, p_x2] {
        if !(0.0..=1.0).contains(&p) {
            return Err(BnError::ParameterRange(p));
        }
    }
    let x1 = vec!["X1".to_string()];
    BayesNet::new(
        vec![
            ("X1".into(), CpdTable::root(p_x1)?),
            ("X2".into(), CpdTable::new(x1.clone(), vec![1.0 - p_x2, p_x2])?),
            ("Y".into(), CpdTable::new(x1, vec![1.0 - p_y, p_y])?),
        ],
        "Y",
    )
}

/// Sample text format: header of node names, then one line of
/// space-separated bits per assignment.
pub fn format_samples(net: &BayesNet, samples: &[Assignment]) -> String {
    let mut out = net.names().collect::<Vec<_>>().join(" ");
    out.push('\n');
    for s in samples {
        let line: Vec<&str> = s.values.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
