//! Deterministic edge-labeled digraphs with a distinguished initial vertex.
//!
//! Vertices are 0-based internally; vertex 0 is the initial vertex. The JSON
//! document format uses 1-based indices so that the initial vertex is `1`.

use std::collections::{BTreeSet, VecDeque};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Letter};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::spectral::perron_root;

pub const INITIAL: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub label: Letter,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDigraph {
    alphabet: Alphabet,
    vertex_count: usize,
    edges: Vec<Edge>,
    /// Outgoing `(label, target)` pairs per vertex, sorted by label.
    out: Vec<Vec<(Letter, usize)>>,
}

/// The path traced from the initial vertex by an accepted word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DirectedPath {
    pub vertices: Vec<usize>,
    pub labels: Vec<Letter>,
}

impl DirectedPath {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("paths contain the start vertex")
    }
}

/// A word fell off the automaton after reading `index` letters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub index: usize,
}

impl LabeledDigraph {
    /// Validates and builds a digraph. `edges` use 0-based vertex indices.
    pub fn new(vertex_count: usize, edges: Vec<Edge>, alphabet: Alphabet) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::EmptyDigraph);
        }
        let mut out: Vec<Vec<(Letter, usize)>> = vec![Vec::new(); vertex_count];
        for e in &edges {
            for v in [e.source, e.target] {
                if v >= vertex_count {
                    return Err(Error::VertexOutOfRange {
                        index: v,
                        count: vertex_count,
                    });
                }
            }
            if e.label.index() >= alphabet.len() {
                return Err(Error::UnknownLetter(format!("#{}", e.label.0)));
            }
            if e.target == INITIAL {
                return Err(Error::IncomingEdgeToInitial);
            }
            if out[e.source].iter().any(|&(l, _)| l == e.label) {
                return Err(Error::NondeterministicLabel {
                    vertex: e.source + 1,
                    letter: alphabet.name(e.label).to_string(),
                });
            }
            out[e.source].push((e.label, e.target));
        }
        for o in &mut out {
            o.sort();
        }
        let g = LabeledDigraph {
            alphabet,
            vertex_count,
            edges,
            out,
        };
        let reach = g.reachable_from(&[INITIAL]);
        if let Some(v) = reach.iter().position(|r| !r) {
            return Err(Error::UnreachableVertex(v + 1));
        }
        Ok(g)
    }

    /// Convenience constructor from `(source, target, label name)` triples, 0-based.
    pub fn from_triples(
        vertex_count: usize,
        triples: &[(usize, usize, &str)],
        alphabet: Alphabet,
    ) -> Result<Self> {
        let edges = triples
            .iter()
            .map(|&(s, t, l)| {
                Ok(Edge {
                    source: s,
                    target: t,
                    label: alphabet.letter(l)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(vertex_count, edges, alphabet)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, v: usize) -> &[(Letter, usize)] {
        &self.out[v]
    }

    pub fn step(&self, v: usize, letter: Letter) -> Option<usize> {
        self.out[v]
            .binary_search_by_key(&letter, |&(l, _)| l)
            .ok()
            .map(|i| self.out[v][i].1)
    }

    /// Runs `word` from the initial vertex.
    pub fn accept(&self, word: &[Letter]) -> std::result::Result<DirectedPath, Rejection> {
        let mut vertices = Vec::with_capacity(word.len() + 1);
        let mut v = INITIAL;
        vertices.push(v);
        for (i, &l) in word.iter().enumerate() {
            v = self.step(v, l).ok_or(Rejection { index: i })?;
            vertices.push(v);
        }
        Ok(DirectedPath {
            vertices,
            labels: word.to_vec(),
        })
    }

    pub fn end_vertex(&self, word: &[Letter]) -> Option<usize> {
        word.iter().try_fold(INITIAL, |v, &l| self.step(v, l))
    }

    /// Integer transition matrix: entry `(i, j)` counts edges `i → j`.
    pub fn adjacency_counts(&self) -> Vec<Vec<u32>> {
        let mut m = vec![vec![0u32; self.vertex_count]; self.vertex_count];
        for e in &self.edges {
            m[e.source][e.target] += 1;
        }
        m
    }

    pub fn adjacency_matrix(&self) -> Matrix<f64> {
        let counts = self.adjacency_counts();
        Matrix::from_fn(self.vertex_count, self.vertex_count, |i, j| counts[i][j] as f64)
    }

    /// Number of directed paths of length `n` from `from` to `to`, or to any
    /// vertex when `to` is `None`. Exact.
    pub fn count_paths(&self, from: usize, to: Option<usize>, n: usize) -> BigUint {
        let counts = self.path_vector(from, n);
        match to {
            Some(t) => counts[t].clone(),
            None => counts.into_iter().sum(),
        }
    }

    /// Row `from` of `Mⁿ`, i.e. path counts by endpoint.
    pub fn path_vector(&self, from: usize, n: usize) -> Vec<BigUint> {
        let mut cur = vec![BigUint::zero(); self.vertex_count];
        cur[from] = BigUint::from(1u32);
        for _ in 0..n {
            let mut next = vec![BigUint::zero(); self.vertex_count];
            for e in &self.edges {
                if !cur[e.source].is_zero() {
                    next[e.target] += &cur[e.source];
                }
            }
            cur = next;
        }
        cur
    }

    /// `|(Mᵀ)ⁿ v₁|` for `n = 0..=n_max`.
    pub fn growth_counts(&self, n_max: usize) -> Vec<BigUint> {
        let mut out = Vec::with_capacity(n_max + 1);
        let mut cur = vec![BigUint::zero(); self.vertex_count];
        cur[INITIAL] = BigUint::from(1u32);
        out.push(BigUint::from(1u32));
        for _ in 0..n_max {
            let mut next = vec![BigUint::zero(); self.vertex_count];
            for e in &self.edges {
                if !cur[e.source].is_zero() {
                    next[e.target] += &cur[e.source];
                }
            }
            cur = next;
            out.push(cur.iter().sum());
        }
        out
    }

    pub fn reachable_from(&self, starts: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count];
        let mut queue: VecDeque<usize> = starts.iter().copied().collect();
        for &s in starts {
            seen[s] = true;
        }
        while let Some(v) = queue.pop_front() {
            for &(_, w) in &self.out[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Recurrent components, their condensation DAG and Perron roots.
    pub fn components(&self) -> ComponentDecomposition {
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(self.vertex_count, self.edges.len());
        for _ in 0..self.vertex_count {
            g.add_node(());
        }
        for e in &self.edges {
            g.add_edge(NodeIndex::new(e.source), NodeIndex::new(e.target), ());
        }
        let has_loop = |v: usize| self.out[v].iter().any(|&(_, w)| w == v);
        let mut components: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|scc| {
                let mut vs: Vec<usize> = scc.into_iter().map(|n| n.index()).collect();
                vs.sort_unstable();
                vs
            })
            .filter(|vs| vs.len() > 1 || has_loop(vs[0]))
            .collect();
        components.sort();

        let mut vertex_component = vec![None; self.vertex_count];
        for (ci, c) in components.iter().enumerate() {
            for &v in c {
                vertex_component[v] = Some(ci);
            }
        }

        // C → C' when some path leaves C and reaches C' without meeting a third component.
        let frontier = |starts: &[usize], own: Option<usize>| -> BTreeSet<usize> {
            let mut hit = BTreeSet::new();
            let mut seen = vec![false; self.vertex_count];
            let mut queue: VecDeque<usize> = starts.iter().copied().collect();
            for &s in starts {
                seen[s] = true;
            }
            while let Some(v) = queue.pop_front() {
                for &(_, w) in &self.out[v] {
                    match vertex_component[w] {
                        Some(c) if Some(c) != own => {
                            hit.insert(c);
                        }
                        _ => {
                            if !seen[w] {
                                seen[w] = true;
                                queue.push_back(w);
                            }
                        }
                    }
                }
            }
            hit
        };
        let dag: Vec<Vec<usize>> = components
            .iter()
            .enumerate()
            .map(|(ci, c)| frontier(c, Some(ci)).into_iter().collect())
            .collect();
        let initial_component = vertex_component[INITIAL];
        let initial_targets = match initial_component {
            Some(c) => vec![c],
            None => frontier(&[INITIAL], None).into_iter().collect(),
        };

        let counts = self.adjacency_counts();
        let xi = components
            .iter()
            .map(|c| {
                let sub = Matrix::from_fn(c.len(), c.len(), |i, j| counts[c[i]][c[j]] as f64);
                perron_root(&sub).unwrap_or(f64::NAN)
            })
            .collect();

        ComponentDecomposition {
            components,
            vertex_component,
            dag,
            initial_component,
            initial_targets,
            xi,
        }
    }

    /// Tests the two-sided exponential growth bound on `|(Mᵀ)ⁿ v₁|`, both by
    /// fitting growth curves and by the component criterion.
    pub fn check_almost_semisimple(&self, n_max: usize) -> Result<SemisimplicityReport> {
        if n_max < 16 {
            return Err(Error::InvalidArgument(format!(
                "n_max must be at least 16, got {n_max}"
            )));
        }
        let decomposition = self.components();
        let lambda = decomposition.xi.iter().copied().fold(0.0, f64::max);
        let counts = self.growth_counts(n_max);
        let growth_samples: Vec<GrowthSample> = counts
            .iter()
            .enumerate()
            .map(|(n, c)| GrowthSample {
                n,
                paths: c.to_string(),
            })
            .collect();
        let finite = counts.iter().skip(1).any(|c| c.is_zero());

        let mut report = SemisimplicityReport {
            lambda_estimate: lambda,
            fitted_lambda: f64::NAN,
            k_estimate: f64::NAN,
            verdict: SemisimplicityVerdict::InsufficientGrowth,
            growth_fit_pass: false,
            spectral_pass: false,
            rss_exponential: f64::NAN,
            rss_n_times_exponential: f64::NAN,
            connected_lambda_components: None,
            growth_samples,
        };
        if finite || lambda <= 1.0 + 1e-9 {
            return Ok(report);
        }

        let ln_counts: Vec<f64> = counts.iter().map(ln_biguint).collect();
        let window: Vec<usize> = (n_max / 2..=n_max).collect();
        let xs: Vec<f64> = window.iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = window.iter().map(|&n| ln_counts[n]).collect();
        let ys_shifted: Vec<f64> = window
            .iter()
            .map(|&n| ln_counts[n] - (n as f64).ln())
            .collect();
        let (_, slope, rss_a) = linear_fit(&xs, &ys);
        let (_, _, rss_b) = linear_fit(&xs, &ys_shifted);
        report.fitted_lambda = slope.exp();
        report.rss_exponential = rss_a;
        report.rss_n_times_exponential = rss_b;
        report.growth_fit_pass = rss_a <= rss_b;

        let ln_lambda = lambda.ln();
        report.k_estimate = (1..=n_max)
            .map(|n| (ln_counts[n] - n as f64 * ln_lambda).abs())
            .fold(0.0, f64::max)
            .exp();

        let connected = decomposition.connected_top_components(self, lambda, 1e-9);
        report.connected_lambda_components = connected;
        report.spectral_pass = connected.is_none();
        report.verdict = if report.spectral_pass && report.growth_fit_pass {
            SemisimplicityVerdict::Pass
        } else {
            SemisimplicityVerdict::NotSemisimple
        };
        Ok(report)
    }

    pub fn to_document(&self) -> DigraphDocument {
        DigraphDocument {
            alphabet: self.alphabet.names().to_vec(),
            vertices: self.vertex_count,
            initial: 1,
            edges: self
                .edges
                .iter()
                .map(|e| {
                    (
                        e.source + 1,
                        e.target + 1,
                        self.alphabet.name(e.label).to_string(),
                    )
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &DigraphDocument) -> Result<Self> {
        if doc.initial != 1 {
            return Err(Error::InvalidArgument(format!(
                "initial vertex must be 1, got {}",
                doc.initial
            )));
        }
        let alphabet = Alphabet::new(doc.alphabet.iter().cloned())?;
        let edges = doc
            .edges
            .iter()
            .map(|(s, t, l)| {
                for v in [*s, *t] {
                    if v == 0 || v > doc.vertices {
                        return Err(Error::VertexOutOfRange {
                            index: v,
                            count: doc.vertices,
                        });
                    }
                }
                Ok(Edge {
                    source: s - 1,
                    target: t - 1,
                    label: alphabet.letter(l)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.vertices, edges, alphabet)
    }
}

/// JSON form of a digraph; vertex indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigraphDocument {
    pub alphabet: Vec<String>,
    pub vertices: usize,
    pub initial: usize,
    pub edges: Vec<(usize, usize, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentDecomposition {
    pub components: Vec<Vec<usize>>,
    pub vertex_component: Vec<Option<usize>>,
    /// Edges of the condensation digraph, by component index.
    pub dag: Vec<Vec<usize>>,
    pub initial_component: Option<usize>,
    /// Components reached from the initial vertex without crossing another
    /// component (or the component of the initial vertex itself).
    pub initial_targets: Vec<usize>,
    /// Perron root of each component's adjacency matrix.
    pub xi: Vec<f64>,
}

impl ComponentDecomposition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Components whose Perron root is within `rel_tol · lambda` of `lambda`.
    pub fn top_components(&self, lambda: f64, rel_tol: f64) -> Vec<usize> {
        (0..self.components.len())
            .filter(|&c| (self.xi[c] - lambda).abs() <= rel_tol * lambda.max(1.0))
            .collect()
    }

    /// First pair of distinct top components joined by a directed path.
    pub fn connected_top_components(
        &self,
        graph: &LabeledDigraph,
        lambda: f64,
        rel_tol: f64,
    ) -> Option<(usize, usize)> {
        let top = self.top_components(lambda, rel_tol);
        for &c in &top {
            let reach = graph.reachable_from(&self.components[c]);
            for &d in &top {
                if d != c && reach[self.components[d][0]] {
                    return Some((c, d));
                }
            }
        }
        None
    }

    /// Kahn's algorithm over the condensation; `None` if a cycle exists.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.components.len();
        let mut indegree = vec![0usize; n];
        for targets in &self.dag {
            for &t in targets {
                indegree[t] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&c| indegree[c] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(c) = queue.pop_front() {
            order.push(c);
            for &t in &self.dag[c] {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    queue.push_back(t);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SemisimplicityVerdict {
    Pass,
    NotSemisimple,
    /// The path counts do not grow exponentially (`λ ≤ 1`).
    InsufficientGrowth,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthSample {
    pub n: usize,
    /// Exact count, decimal.
    pub paths: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemisimplicityReport {
    /// Largest Perron root over the recurrent components.
    pub lambda_estimate: f64,
    /// `exp` of the slope of `log |(Mᵀ)ⁿv₁|` over the fit window.
    pub fitted_lambda: f64,
    /// Smallest `K` with `K⁻¹λⁿ ≤ |(Mᵀ)ⁿv₁| ≤ Kλⁿ` over the sampled `n ≥ 1`.
    pub k_estimate: f64,
    pub verdict: SemisimplicityVerdict,
    pub growth_fit_pass: bool,
    pub spectral_pass: bool,
    pub rss_exponential: f64,
    pub rss_n_times_exponential: f64,
    pub connected_lambda_components: Option<(usize, usize)>,
    pub growth_samples: Vec<GrowthSample>,
}

pub(crate) fn ln_biguint(c: &BigUint) -> f64 {
    if c.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = c.bits();
    if bits < 1000 {
        c.to_f64().unwrap().ln()
    } else {
        let shift = bits - 64;
        (c >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Least squares `y ≈ a + b x`; returns `(a, b, residual sum of squares)`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - a - b * x;
            r * r
        })
        .sum();
    (a, b, rss)
}

#[cfg(test)]
pub(crate) mod strategies {
    use proptest::prelude::*;

    use super::{Edge, LabeledDigraph};
    use crate::alphabet::{Alphabet, Letter};

    /// Deterministic digraphs on `x, y, z` with a spanning tree from `v₁`.
    pub fn digraph(max_vertices: usize) -> impl Strategy<Value = LabeledDigraph> {
        (
            1..=max_vertices,
            proptest::collection::vec(any::<u8>(), max_vertices),
            proptest::collection::vec((any::<u8>(), 0..3u16, any::<u8>()), 0..3 * max_vertices),
        )
            .prop_map(|(n, parents, extra)| build(n, &parents, &extra))
    }

    fn build(n: usize, parents: &[u8], extra: &[(u8, u16, u8)]) -> LabeledDigraph {
        let mut slots = vec![[None::<usize>; 3]; n];
        for i in 1..n {
            let start = parents[i] as usize % i;
            let (p, l) = (0..i)
                .map(|k| (start + k) % i)
                .find_map(|p| slots[p].iter().position(Option::is_none).map(|l| (p, l)))
                .expect("a tree leaves free slots");
            slots[p][l] = Some(i);
        }
        if n > 1 {
            for &(s, l, t) in extra {
                let (s, l) = (s as usize % n, l as usize);
                if slots[s][l].is_none() {
                    slots[s][l] = Some(1 + t as usize % (n - 1));
                }
            }
        }
        let edges = slots
            .iter()
            .enumerate()
            .flat_map(|(s, row)| {
                row.iter().enumerate().filter_map(move |(l, t)| {
                    t.map(|t| Edge {
                        source: s,
                        target: t,
                        label: Letter(l as u16),
                    })
                })
            })
            .collect();
        LabeledDigraph::new(n, edges, Alphabet::new(["x", "y", "z"]).unwrap()).expect("valid by construction")
    }
}
