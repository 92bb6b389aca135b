//! Combings: prefix-closed regular languages of geodesics in bijection with a group.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::alphabet::Letter;
use crate::digraph::{DigraphDocument, Edge, LabeledDigraph, INITIAL};
use crate::error::{Error, Result};
use crate::group::{Element, GroupDescription, GroupOracle, OracleConfig};

#[derive(Clone, Debug)]
pub struct Combing {
    pub digraph: LabeledDigraph,
    pub oracle: Arc<GroupOracle>,
    pub genset: String,
    pub verified_radius: usize,
}

impl Combing {
    /// Pairs a digraph with a generating set. The digraph alphabet must list
    /// the generating set's letters in the same order.
    pub fn new(
        digraph: LabeledDigraph,
        oracle: Arc<GroupOracle>,
        genset: &str,
        verified_radius: usize,
    ) -> Result<Self> {
        let set = oracle.genset(genset)?;
        if set.alphabet != *digraph.alphabet() {
            return Err(Error::InvalidArgument(format!(
                "digraph alphabet {} does not match generating set {genset} = {}",
                digraph.alphabet(),
                set.alphabet
            )));
        }
        Ok(Combing {
            digraph,
            oracle,
            genset: genset.to_string(),
            verified_radius,
        })
    }

    pub fn evaluate(&self, word: &[Letter]) -> Result<Element> {
        self.oracle.evaluate(word, &self.genset)
    }

    /// All accepted words up to length `depth`, with their values.
    pub fn word_tree(&self, depth: usize) -> Result<WordTree> {
        WordTree::build(&self.digraph, &self.oracle, &self.genset, depth)
    }

    pub fn require_radius(&self, radius: usize) -> Result<()> {
        if radius > self.verified_radius {
            return Err(Error::OutsideVerifiedRadius {
                requested: radius,
                available: self.verified_radius,
            });
        }
        Ok(())
    }

    pub fn to_bundle(&self) -> CombingBundle {
        CombingBundle {
            digraph: self.digraph.to_document(),
            group: self.oracle.description().clone(),
            genset: self.genset.clone(),
            verified_radius: self.verified_radius,
        }
    }

    pub fn from_bundle(bundle: &CombingBundle, config: OracleConfig) -> Result<Self> {
        let oracle = Arc::new(GroupOracle::new(&bundle.group, config)?);
        let digraph = LabeledDigraph::from_document(&bundle.digraph)?;
        Combing::new(digraph, oracle, &bundle.genset, bundle.verified_radius)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombingBundle {
    pub digraph: DigraphDocument,
    pub group: GroupDescription,
    pub genset: String,
    pub verified_radius: usize,
}

/// The accepted words of a digraph up to some length, in breadth-first and
/// (within a length) lexicographic order.
#[derive(Clone, Debug)]
pub struct WordTree {
    pub depth: usize,
    pub parent: Vec<u32>,
    pub letter: Vec<Letter>,
    pub vertex: Vec<u32>,
    pub elements: Vec<Element>,
    child_start: Vec<u32>,
    layer_starts: Vec<usize>,
}

impl WordTree {
    pub fn build(
        digraph: &LabeledDigraph,
        oracle: &GroupOracle,
        genset: &str,
        depth: usize,
    ) -> Result<Self> {
        let set = oracle.genset(genset)?;
        let budget = oracle.config().element_budget;
        let mut t = WordTree {
            depth,
            parent: vec![u32::MAX],
            letter: vec![Letter(u16::MAX)],
            vertex: vec![INITIAL as u32],
            elements: vec![Element::identity()],
            child_start: Vec::new(),
            layer_starts: vec![0, 1],
        };
        for n in 0..depth {
            let (lo, hi) = (t.layer_starts[n], t.layer_starts[n + 1]);
            for i in lo..hi {
                t.child_start.push(t.parent.len() as u32);
                for &(l, w) in digraph.out_edges(t.vertex[i] as usize) {
                    if t.parent.len() >= budget {
                        return Err(Error::BallTooLarge {
                            radius: depth,
                            budget,
                        });
                    }
                    let g = oracle.mul(&t.elements[i], set.value(l));
                    t.parent.push(i as u32);
                    t.letter.push(l);
                    t.vertex.push(w as u32);
                    t.elements.push(g);
                }
            }
            t.layer_starts.push(t.parent.len());
        }
        while t.child_start.len() <= t.parent.len() {
            t.child_start.push(t.parent.len() as u32);
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn layer(&self, n: usize) -> std::ops::Range<usize> {
        self.layer_starts[n]..self.layer_starts[n + 1]
    }

    pub fn up_to(&self, n: usize) -> std::ops::Range<usize> {
        0..self.layer_starts[n.min(self.depth) + 1]
    }

    pub fn node_depth(&self, i: usize) -> usize {
        self.layer_starts.partition_point(|&s| s <= i) - 1
    }

    pub fn children(&self, i: usize) -> std::ops::Range<usize> {
        self.child_start[i] as usize..self.child_start[i + 1] as usize
    }

    pub fn word(&self, mut i: usize) -> Vec<Letter> {
        let mut w = Vec::new();
        while i != 0 {
            w.push(self.letter[i]);
            i = self.parent[i] as usize;
        }
        w.reverse();
        w
    }
}

/// Builds the last-letter automaton of reduced words for the standard letters
/// of a free group.
pub fn reduced_word_combing(oracle: Arc<GroupOracle>, genset: &str) -> Result<Combing> {
    if !oracle.is_free() {
        return Err(Error::WrongKind("reduced-word combing needs a free group".into()));
    }
    let set = oracle.genset(genset)?;
    let standard = oracle.standard_letter_names();
    if set.alphabet.names() != standard.as_slice() {
        return Err(Error::WrongKind(format!(
            "generating set {genset} is not the standard letter set"
        )));
    }
    let k = set.alphabet.len();
    let mut edges = Vec::new();
    for x in set.alphabet.letters() {
        edges.push(Edge {
            source: INITIAL,
            target: x.index() + 1,
            label: x,
        });
    }
    for x in set.alphabet.letters() {
        for y in set.alphabet.letters() {
            if set.inverses[x.index()] != Some(y) {
                edges.push(Edge {
                    source: x.index() + 1,
                    target: y.index() + 1,
                    label: y,
                });
            }
        }
    }
    let digraph = LabeledDigraph::new(k + 1, edges, set.alphabet.clone())?;
    let radius = oracle.config().max_radius;
    Combing::new(digraph, oracle, genset, radius)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// Two accepted words evaluate to the same element.
    NotInjective,
    /// An accepted word is longer than the element it represents.
    NotGeodesic,
    /// Some element of the ball has no accepted representative.
    NotSurjective,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationFailure {
    pub kind: FailureKind,
    /// Offending accepted word, or the missing element's normal form.
    pub witness: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub radius: usize,
    pub passed: bool,
    pub accepted_counts: Vec<usize>,
    pub sphere_sizes: Vec<usize>,
    pub failure: Option<ValidationFailure>,
}

/// Checks injectivity, geodesity and surjectivity of the evaluation map on
/// accepted words of length at most `radius`.
pub fn validate_combing(
    digraph: &LabeledDigraph,
    oracle: &GroupOracle,
    genset: &str,
    radius: usize,
) -> Result<ValidationReport> {
    let ball = oracle.ball(genset, radius)?;
    let set = oracle.genset(genset)?;
    let sphere_sizes: Vec<usize> = ball.sphere_sizes()[..=radius].to_vec();
    let mut report = ValidationReport {
        radius,
        passed: false,
        accepted_counts: vec![1],
        sphere_sizes,
        failure: None,
    };
    let mut seen: HashMap<Element, (u32, u32)> = HashMap::new();
    // (parent node, letter, vertex, element) per node of the current layer.
    let mut words: Vec<(u32, Letter)> = vec![(u32::MAX, Letter(0))];
    let mut layer: Vec<(usize, usize, Element)> = vec![(0, INITIAL, Element::identity())];
    seen.insert(Element::identity(), (0, 0));
    let spell = |words: &Vec<(u32, Letter)>, mut i: usize| {
        let mut w = Vec::new();
        while i != 0 {
            w.push(words[i].1);
            i = words[i].0 as usize;
        }
        w.reverse();
        set.alphabet.format(&w)
    };
    for n in 1..=radius {
        let mut next = Vec::new();
        for (node, v, g) in &layer {
            for &(l, w) in digraph.out_edges(*v) {
                let h = oracle.mul(g, set.value(l));
                words.push((*node as u32, l));
                let id = words.len() - 1;
                if let Some(&(other, _)) = seen.get(&h) {
                    report.failure = Some(ValidationFailure {
                        kind: FailureKind::NotInjective,
                        witness: spell(&words, id),
                        detail: format!(
                            "same element as accepted word {:?}",
                            spell(&words, other as usize)
                        ),
                    });
                    return Ok(report);
                }
                let len = ball.length(&h).unwrap_or(usize::MAX);
                if len != n {
                    report.failure = Some(ValidationFailure {
                        kind: FailureKind::NotGeodesic,
                        witness: spell(&words, id),
                        detail: format!("word length {n}, element length {len}"),
                    });
                    return Ok(report);
                }
                seen.insert(h.clone(), (id as u32, n as u32));
                next.push((id, w, h));
            }
        }
        report.accepted_counts.push(next.len());
        if next.len() != ball.sphere(n).len() {
            let missing = ball
                .sphere(n)
                .iter()
                .find(|g| !seen.contains_key(*g))
                .expect("a sphere element is unrepresented");
            report.failure = Some(ValidationFailure {
                kind: FailureKind::NotSurjective,
                witness: oracle.format(missing),
                detail: format!(
                    "{} accepted words of length {n} for {} elements",
                    next.len(),
                    ball.sphere(n).len()
                ),
            });
            return Ok(report);
        }
        layer = next;
    }
    report.passed = true;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct LexFirstReport {
    pub cone_depth: usize,
    pub states: usize,
    pub attempts: Vec<String>,
}

/// Automaton for the lexicographically first geodesics, built by quotienting
/// the geodesic tree on a ball by depth-`k` cone types and validated to `radius`.
/// `order` ranks the letters (defaults to alphabet order).
pub fn lex_first_combing(
    oracle: Arc<GroupOracle>,
    genset: &str,
    order: Option<&[Letter]>,
    cone_depth: usize,
    radius: usize,
    cap: usize,
) -> Result<(Combing, LexFirstReport)> {
    let set = oracle.genset(genset)?.clone();
    let letter_order: Vec<Letter> = match order {
        Some(o) => o.to_vec(),
        None => set.alphabet.letters().collect(),
    };
    let mut attempts = Vec::new();
    for k in cone_depth.max(1)..=cap {
        let ball = match oracle.ball(genset, radius + k) {
            Ok(b) => b,
            Err(e @ (Error::RadiusExceeded { .. } | Error::BallTooLarge { .. })) => {
                attempts.push(format!("k={k}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let depth = radius + k;
        // Lex-first tree: parent and letter per ball element, children in letter order.
        let mut parent = vec![u32::MAX; ball.len()];
        let mut via = vec![Letter(0); ball.len()];
        let mut children: Vec<Vec<(Letter, u32)>> = vec![Vec::new(); ball.len()];
        let mut ranked: Vec<Vec<usize>> = vec![vec![0]];
        for n in 1..=depth {
            let range = ball.sphere_range(n);
            let mut layer = Vec::with_capacity(range.len());
            for &p in &ranked[n - 1] {
                for &l in &letter_order {
                    let g = oracle.mul(&ball.elements()[p], set.value(l));
                    let Some(c) = ball.index_of(&g) else { continue };
                    if range.contains(&c) && parent[c] == u32::MAX {
                        parent[c] = p as u32;
                        via[c] = l;
                        children[p].push((l, c as u32));
                        layer.push(c);
                    }
                }
            }
            ranked.push(layer);
        }
        for c in children.iter_mut() {
            c.sort();
        }
        // cone[j][x]: depth-j cone type, defined for depth(x) ≤ depth − j.
        let mut cone = vec![0u32; ball.len()];
        for j in 1..=k {
            let mut intern: HashMap<Vec<(Letter, u32)>, u32> = HashMap::new();
            let mut next = vec![u32::MAX; ball.len()];
            for n in 0..=depth - j {
                for &x in &ranked[n] {
                    let key: Vec<(Letter, u32)> =
                        children[x].iter().map(|&(l, c)| (l, cone[c as usize])).collect();
                    let fresh = intern.len() as u32;
                    next[x] = *intern.entry(key).or_insert(fresh);
                }
            }
            cone = next;
        }
        // States: the root, then cone types in breadth-first order of appearance.
        let mut state_of_type: HashMap<u32, usize> = HashMap::new();
        let mut first_depth: Vec<usize> = vec![0];
        let mut state = vec![usize::MAX; ball.len()];
        state[0] = 0;
        for (n, layer) in ranked.iter().enumerate().take(radius + 1).skip(1) {
            for &x in layer {
                let next_id = first_depth.len();
                let s = *state_of_type.entry(cone[x]).or_insert(next_id);
                if s == next_id {
                    first_depth.push(n);
                }
                state[x] = s;
            }
        }
        let states = first_depth.len();
        let mut transitions: Vec<HashMap<Letter, usize>> = vec![HashMap::new(); states];
        let mut failure = None;
        'nodes: for layer in ranked.iter().take(radius) {
            for &x in layer {
                for &(l, c) in &children[x] {
                    let t = state[c as usize];
                    match transitions[state[x]].insert(l, t) {
                        Some(prev) if prev != t => {
                            failure = Some(format!("k={k}: cone type does not determine transitions"));
                            break 'nodes;
                        }
                        _ => {}
                    }
                }
            }
        }
        if failure.is_none() {
            if let Some(s) = (1..states).find(|&s| first_depth[s] == radius) {
                failure = Some(format!("k={k}: state {s} first appears at the verification radius"));
            }
        }
        if let Some(f) = failure {
            attempts.push(f);
            continue;
        }
        let mut edges = Vec::new();
        for (s, t) in transitions.iter().enumerate() {
            let mut out: Vec<(Letter, usize)> = t.iter().map(|(&l, &w)| (l, w)).collect();
            out.sort();
            edges.extend(out.into_iter().map(|(l, w)| Edge {
                source: s,
                target: w,
                label: l,
            }));
        }
        let digraph = LabeledDigraph::new(states, edges, set.alphabet.clone())?;
        let report = validate_combing(&digraph, &oracle, genset, radius)?;
        if report.passed {
            let combing = Combing::new(digraph, oracle, genset, radius)?;
            return Ok((
                combing,
                LexFirstReport {
                    cone_depth: k,
                    states,
                    attempts,
                },
            ));
        }
        attempts.push(format!("k={k}: validation failed: {:?}", report.failure));
    }
    Err(Error::ConeDepthExceeded {
        cap,
        reason: attempts.join("; "),
    })
}
