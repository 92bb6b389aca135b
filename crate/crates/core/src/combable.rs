//! Combable functions: vertex weightings `dφ` whose sums along accepted paths
//! recover a group function.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alphabet::Letter;
use crate::combing::{Combing, CombingBundle, WordTree};
use crate::digraph::{linear_fit, Edge, LabeledDigraph, INITIAL};
use crate::error::{Error, Result};
use crate::group::{Element, GroupOracle, OracleConfig};

/// An integer-valued function on a group.
pub trait GroupFunction: Sync {
    fn value(&self, g: &Element) -> Result<i64>;
}

impl<F> GroupFunction for F
where
    F: Fn(&Element) -> Result<i64> + Sync,
{
    fn value(&self, g: &Element) -> Result<i64> {
        self(g)
    }
}

impl GroupFunction for CombableFunction {
    fn value(&self, g: &Element) -> Result<i64> {
        self.evaluate(g)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    WordLength,
    Synthesized { depth: usize, verify_radius: usize },
    Combined { op: String },
    Manual,
}

#[derive(Clone, Debug)]
pub struct CombableFunction {
    /// Combing whose digraph carries the weighting (possibly a refinement).
    pub combing: Combing,
    pub dphi: Vec<i64>,
    /// Vertex of the unrefined digraph under each vertex.
    pub base_vertex: Vec<usize>,
    pub provenance: Provenance,
    pub verify_radius: usize,
    values: OnceLock<HashMap<Element, i64>>,
}

impl CombableFunction {
    pub fn new(
        combing: Combing,
        dphi: Vec<i64>,
        base_vertex: Vec<usize>,
        provenance: Provenance,
        verify_radius: usize,
    ) -> Result<Self> {
        let n = combing.digraph.vertex_count();
        if dphi.len() != n || base_vertex.len() != n {
            return Err(Error::InvalidArgument(format!(
                "weighting has {} entries for {n} vertices",
                dphi.len()
            )));
        }
        combing.require_radius(verify_radius)?;
        Ok(CombableFunction {
            combing,
            dphi,
            base_vertex,
            provenance,
            verify_radius,
            values: OnceLock::new(),
        })
    }

    pub fn digraph(&self) -> &LabeledDigraph {
        &self.combing.digraph
    }

    pub fn oracle(&self) -> &Arc<GroupOracle> {
        &self.combing.oracle
    }

    /// `Σ_{i=0}^{|w|} dφ(γ(i))` along the path of an accepted word.
    pub fn evaluate_word(&self, word: &[Letter]) -> Result<i64> {
        let path = self.digraph().accept(word).map_err(|r| Error::NotAccepted {
            word: self.digraph().alphabet().format(word),
            index: r.index,
        })?;
        Ok(path.vertices.iter().map(|&v| self.dphi[v]).sum())
    }

    /// Value at an element of the verified ball, through its accepted word.
    pub fn evaluate(&self, g: &Element) -> Result<i64> {
        let table = self.value_table()?;
        table.get(g).copied().ok_or_else(|| Error::OutsideVerifiedRadius {
            requested: self
                .oracle()
                .word_length(g, &self.combing.genset)
                .unwrap_or(self.verify_radius + 1),
            available: self.verify_radius,
        })
    }

    fn value_table(&self) -> Result<&HashMap<Element, i64>> {
        if let Some(t) = self.values.get() {
            return Ok(t);
        }
        let tree = self.combing.word_tree(self.verify_radius)?;
        let sums = path_sums(&tree, &self.dphi);
        let table = tree.elements.iter().cloned().zip(sums).collect();
        Ok(self.values.get_or_init(|| table))
    }

    /// Pointwise sum (`sign = 1`) or difference (`sign = −1`) over the
    /// product of the two digraphs.
    pub fn combine(&self, other: &CombableFunction, sign: i64) -> Result<CombableFunction> {
        if self.combing.genset != other.combing.genset
            || self.digraph().alphabet() != other.digraph().alphabet()
        {
            return Err(Error::MismatchedDigraph);
        }
        let (a, b) = (self.digraph(), other.digraph());
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut pairs = vec![(INITIAL, INITIAL)];
        index.insert((INITIAL, INITIAL), 0);
        let mut edges = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let (u, v) = pairs[i];
            let (ou, ov) = (a.out_edges(u), b.out_edges(v));
            if ou.len() != ov.len() {
                return Err(Error::MismatchedDigraph);
            }
            for (&(l, x), &(m, y)) in ou.iter().zip(ov) {
                if l != m {
                    return Err(Error::MismatchedDigraph);
                }
                let next = pairs.len();
                let t = *index.entry((x, y)).or_insert(next);
                if t == next {
                    pairs.push((x, y));
                }
                edges.push(Edge {
                    source: i,
                    target: t,
                    label: l,
                });
            }
            i += 1;
        }
        let digraph = LabeledDigraph::new(pairs.len(), edges, a.alphabet().clone())?;
        let dphi = pairs
            .iter()
            .map(|&(u, v)| self.dphi[u] + sign * other.dphi[v])
            .collect();
        let base_vertex = pairs.iter().map(|&(u, _)| self.base_vertex[u]).collect();
        let radius = self.verify_radius.min(other.verify_radius);
        let combing = Combing {
            digraph,
            ..self.combing.clone()
        };
        CombableFunction::new(
            combing,
            dphi,
            base_vertex,
            Provenance::Combined {
                op: if sign >= 0 { "sum" } else { "difference" }.into(),
            },
            radius,
        )
    }

    pub fn scaled(&self, c: i64) -> CombableFunction {
        CombableFunction {
            dphi: self.dphi.iter().map(|d| d * c).collect(),
            values: OnceLock::new(),
            provenance: Provenance::Manual,
            ..self.clone()
        }
    }

    pub fn to_bundle(&self) -> FunctionBundle {
        FunctionBundle {
            combing: self.combing.to_bundle(),
            dphi: self.dphi.clone(),
            base_vertex: self.base_vertex.iter().map(|v| v + 1).collect(),
            provenance: self.provenance.clone(),
            verify_radius: self.verify_radius,
        }
    }

    pub fn from_bundle(bundle: &FunctionBundle, config: OracleConfig) -> Result<Self> {
        let combing = Combing::from_bundle(&bundle.combing, config)?;
        CombableFunction::new(
            combing,
            bundle.dphi.clone(),
            bundle.base_vertex.iter().map(|v| v.saturating_sub(1)).collect(),
            bundle.provenance.clone(),
            bundle.verify_radius,
        )
    }
}

/// Refined digraph, weighting and provenance; vertex indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionBundle {
    pub combing: CombingBundle,
    pub dphi: Vec<i64>,
    pub base_vertex: Vec<usize>,
    pub provenance: Provenance,
    pub verify_radius: usize,
}

fn path_sums(tree: &WordTree, dphi: &[i64]) -> Vec<i64> {
    let mut sums = vec![0i64; tree.len()];
    sums[0] = dphi[tree.vertex[0] as usize];
    for i in 1..tree.len() {
        sums[i] = sums[tree.parent[i] as usize] + dphi[tree.vertex[i] as usize];
    }
    sums
}

/// `dφ = 1` off the initial vertex: the word length along the combing.
pub fn word_length_function(combing: &Combing) -> CombableFunction {
    let n = combing.digraph.vertex_count();
    let dphi = (0..n).map(|v| i64::from(v != INITIAL)).collect();
    CombableFunction::new(
        combing.clone(),
        dphi,
        (0..n).collect(),
        Provenance::WordLength,
        combing.verified_radius,
    )
    .expect("sizes agree")
}

/// Diagnostics for a weighting that could not be synthesized.
#[derive(Clone, Debug, Serialize)]
pub struct SynthesisFailure {
    pub depth: usize,
    pub verify_radius: usize,
    /// Smallest and largest increment over nonempty accepted words.
    pub increment_range: (i64, i64),
    /// Largest `|δ|` over accepted words of each length `1, 2, …`.
    pub shell_max_increment: Vec<i64>,
    /// Least-squares slope of `shell_max_increment` against length.
    pub increment_growth_slope: f64,
    /// Number of classes among words of length at most the radius, per round.
    pub classes_per_round: Vec<usize>,
    /// Two words that agree to the refinement depth but later see different
    /// increments, with those increments.
    pub witness: Option<SynthesisWitness>,
    /// A word one past the radius whose class never occurs within the radius.
    pub unclosed: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthesisWitness {
    pub first: String,
    pub second: String,
    pub first_continuation: String,
    pub second_continuation: String,
    pub increments: (i64, i64),
}

/// Refines the combing automaton until the increments `δ(w) = φ(w̄) − φ(w̄')`
/// (with `w'` the parent word) are a function of the state.
///
/// Signatures are refined Moore-style on the tree of accepted words of length
/// at most `radius + depth`; round `j` distinguishes words by increments up to
/// `j` letters ahead. A round is accepted when one more round splits no class
/// among words of length at most `radius`, and every child one past the radius
/// lands in an existing class.
pub fn synthesize_dphi(
    combing: &Combing,
    phi: &dyn GroupFunction,
    depth: usize,
    radius: usize,
) -> Result<CombableFunction> {
    let depth = depth.max(1);
    combing.require_radius(radius)?;
    let tree = combing.word_tree(radius + depth)?;
    let values: Vec<i64> = tree
        .elements
        .par_iter()
        .map(|g| phi.value(g))
        .collect::<Result<_>>()?;
    let mut delta = vec![values[0]; tree.len()];
    for i in 1..tree.len() {
        delta[i] = values[i] - values[tree.parent[i] as usize];
    }
    let core = tree.up_to(radius).end;
    let next = tree.layer(radius + 1);

    let mut sigs: Vec<Vec<u32>> = Vec::with_capacity(depth + 1);
    let mut intern0: HashMap<(u32, i64), u32> = HashMap::new();
    sigs.push(
        (0..tree.len())
            .map(|i| {
                let fresh = intern0.len() as u32;
                *intern0.entry((tree.vertex[i], delta[i])).or_insert(fresh)
            })
            .collect(),
    );
    let count = |sig: &[u32], range: std::ops::Range<usize>| {
        let mut seen: Vec<u32> = sig[range].to_vec();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    };
    let mut classes_per_round = vec![count(&sigs[0], 0..core)];
    for j in 1..=depth {
        let defined = tree.up_to(radius + depth - j).end;
        let mut intern: HashMap<(u32, Vec<(Letter, u32)>), u32> = HashMap::new();
        let prev = &sigs[j - 1];
        let mut sig = vec![u32::MAX; tree.len()];
        for i in 0..defined {
            let key = (
                sigs[0][i],
                tree.children(i).map(|c| (tree.letter[c], prev[c])).collect(),
            );
            let fresh = intern.len() as u32;
            sig[i] = *intern.entry(key).or_insert(fresh);
        }
        classes_per_round.push(count(&sig, 0..core));
        sigs.push(sig);
        let c = j - 1;
        let stable = classes_per_round[c] == classes_per_round[j];
        let closed = stable && {
            let mut inside: Vec<u32> = sigs[c][..core].to_vec();
            inside.sort_unstable();
            next.clone().all(|i| inside.binary_search(&sigs[c][i]).is_ok())
        };
        if closed {
            return build_refined(combing, &tree, &sigs[c], &delta, &values, depth, radius);
        }
    }
    Err(Error::NotWeaklyCombableAtDepth(Box::new(failure_report(
        combing,
        &tree,
        &sigs,
        &delta,
        classes_per_round,
        depth,
        radius,
    ))))
}

fn build_refined(
    combing: &Combing,
    tree: &WordTree,
    sig: &[u32],
    delta: &[i64],
    values: &[i64],
    depth: usize,
    radius: usize,
) -> Result<CombableFunction> {
    let core = tree.up_to(radius).end;
    let mut state_of: HashMap<u32, usize> = HashMap::new();
    let mut dphi = Vec::new();
    let mut base = Vec::new();
    for i in 0..core {
        let next = dphi.len();
        if *state_of.entry(sig[i]).or_insert(next) == next {
            dphi.push(delta[i]);
            base.push(tree.vertex[i] as usize);
        }
    }
    let mut transitions: Vec<Vec<(Letter, usize)>> = vec![Vec::new(); dphi.len()];
    let mut done = vec![false; dphi.len()];
    for i in 0..core {
        let s = state_of[&sig[i]];
        if done[s] {
            continue;
        }
        done[s] = true;
        transitions[s] = tree
            .children(i)
            .map(|c| (tree.letter[c], state_of[&sig[c]]))
            .collect();
    }
    let edges = transitions
        .iter()
        .enumerate()
        .flat_map(|(s, out)| {
            out.iter().map(move |&(l, t)| Edge {
                source: s,
                target: t,
                label: l,
            })
        })
        .collect();
    let digraph = LabeledDigraph::new(dphi.len(), edges, combing.digraph.alphabet().clone())?;
    let refined = Combing {
        digraph,
        ..combing.clone()
    };
    let f = CombableFunction::new(
        refined,
        dphi,
        base,
        Provenance::Synthesized {
            depth,
            verify_radius: radius,
        },
        radius,
    )?;
    let check = f.combing.word_tree(radius)?;
    let sums = path_sums(&check, &f.dphi);
    if let Some(i) = (0..check.len()).find(|&i| sums[i] != values[i]) {
        return Err(Error::InvalidArgument(format!(
            "refined weighting does not reproduce φ at {}",
            f.digraph().alphabet().format(&check.word(i))
        )));
    }
    Ok(f)
}

fn failure_report(
    combing: &Combing,
    tree: &WordTree,
    sigs: &[Vec<u32>],
    delta: &[i64],
    classes_per_round: Vec<usize>,
    depth: usize,
    radius: usize,
) -> SynthesisFailure {
    let alphabet = combing.digraph.alphabet();
    let spell = |i: usize| alphabet.format(&tree.word(i));
    let mut shell_max_increment = Vec::new();
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for n in 1..=tree.depth {
        let r = tree.layer(n);
        let m = r.clone().map(|i| delta[i].abs()).max().unwrap_or(0);
        for i in r {
            lo = lo.min(delta[i]);
            hi = hi.max(delta[i]);
        }
        shell_max_increment.push(m);
    }
    let xs: Vec<f64> = (1..=shell_max_increment.len()).map(|n| n as f64).collect();
    let ys: Vec<f64> = shell_max_increment.iter().map(|&m| m as f64).collect();
    let (_, slope, _) = linear_fit(&xs, &ys);

    // A pair equal at the last round but split by one more letter of lookahead.
    let core = tree.up_to(radius).end;
    let j = depth - 1;
    let mut witness = None;
    let mut first_seen: HashMap<u32, usize> = HashMap::new();
    for i in 0..core {
        match first_seen.get(&sigs[j][i]) {
            Some(&k) if sigs[j + 1][k] != sigs[j + 1][i] => {
                let (mut x, mut y, mut level) = (k, i, j + 1);
                while level > 0 && delta[x] == delta[y] {
                    let pair = tree
                        .children(x)
                        .zip(tree.children(y))
                        .find(|&(cx, cy)| sigs[level - 1][cx] != sigs[level - 1][cy]);
                    match pair {
                        Some((cx, cy)) => {
                            x = cx;
                            y = cy;
                            level -= 1;
                        }
                        None => break,
                    }
                }
                let suffix = |top: usize, node: usize| {
                    let full = tree.word(node);
                    alphabet.format(&full[tree.node_depth(top)..])
                };
                witness = Some(SynthesisWitness {
                    first: spell(k),
                    second: spell(i),
                    first_continuation: suffix(k, x),
                    second_continuation: suffix(i, y),
                    increments: (delta[x], delta[y]),
                });
                break;
            }
            Some(_) => {}
            None => {
                first_seen.insert(sigs[j][i], i);
            }
        }
    }
    let inside: std::collections::HashSet<u32> = sigs[j][..core].iter().copied().collect();
    let unclosed = tree
        .layer(radius + 1)
        .find(|&i| !inside.contains(&sigs[j][i]))
        .map(spell);
    SynthesisFailure {
        depth,
        verify_radius: radius,
        increment_range: (lo, hi),
        shell_max_increment,
        increment_growth_slope: slope,
        classes_per_round,
        witness,
        unclosed,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Stable,
    Growing,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub radius: usize,
    /// `max |φ(as) − φ(a)|`
    pub left_constant: i64,
    /// `max |φ(sa) − φ(a)|`
    pub right_constant: i64,
    /// Maxima over `a` of word length exactly `n`, for `n = 0..=radius`.
    pub left_by_shell: Vec<i64>,
    pub right_by_shell: Vec<i64>,
    pub left_trend: Trend,
    pub right_trend: Trend,
}

fn trend(shells: &[i64]) -> Trend {
    let half = shells.len() / 2;
    let lower = shells[..=half].iter().copied().max().unwrap_or(0);
    let upper = shells[half..].iter().copied().max().unwrap_or(0);
    let last = *shells.last().unwrap_or(&0);
    if upper > lower && last >= upper {
        Trend::Growing
    } else {
        Trend::Stable
    }
}

/// Exhaustive Lipschitz constants of `φ` in both invariant metrics over the ball.
pub fn check_lipschitz(
    phi: &dyn GroupFunction,
    oracle: &GroupOracle,
    genset: &str,
    radius: usize,
) -> Result<LipschitzReport> {
    let ball = oracle.ball(genset, radius)?;
    let set = oracle.genset(genset)?;
    let mut left_by_shell = Vec::new();
    let mut right_by_shell = Vec::new();
    for n in 0..=radius {
        let (l, r) = ball
            .sphere(n)
            .par_iter()
            .map(|a| -> Result<(i64, i64)> {
                let fa = phi.value(a)?;
                let (mut l, mut r) = (0, 0);
                for s in &set.values {
                    l = l.max((phi.value(&oracle.mul(a, s))? - fa).abs());
                    r = r.max((phi.value(&oracle.mul(s, a))? - fa).abs());
                }
                Ok((l, r))
            })
            .try_reduce(|| (0, 0), |x, y| Ok((x.0.max(y.0), x.1.max(y.1))))?;
        left_by_shell.push(l);
        right_by_shell.push(r);
    }
    Ok(LipschitzReport {
        radius,
        left_constant: left_by_shell.iter().copied().max().unwrap_or(0),
        right_constant: right_by_shell.iter().copied().max().unwrap_or(0),
        left_trend: trend(&left_by_shell),
        right_trend: trend(&right_by_shell),
        left_by_shell,
        right_by_shell,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubdivisionReport {
    pub radius: usize,
    pub max_defect: i64,
    /// Running maximum over words of length at most `n`.
    pub by_radius: Vec<i64>,
    pub witness: Option<(String, usize)>,
}

/// `max |φ(w̄) − φ(ū) − φ(v̄)|` over accepted `w = uv` of length at most `radius`.
pub fn check_subdivision(f: &CombableFunction, radius: usize) -> Result<SubdivisionReport> {
    if radius > f.verify_radius {
        return Err(Error::RadiusExceeded {
            requested: radius,
            max: f.verify_radius,
        });
    }
    let tree = f.combing.word_tree(radius)?;
    let sums = path_sums(&tree, &f.dphi);
    let oracle = f.oracle();
    let set = oracle.genset(&f.combing.genset)?;
    let mut by_radius = vec![0i64];
    let mut best = (0i64, None);
    for n in 1..=radius {
        for i in tree.layer(n) {
            // Walk up the prefixes, accumulating the suffix element.
            let mut suffix = Element::identity();
            let mut node = i;
            loop {
                let d = (sums[i] - sums[node] - f.evaluate(&suffix)?).abs();
                if d > best.0 {
                    best = (d, Some((f.digraph().alphabet().format(&tree.word(i)), tree.node_depth(node))));
                }
                if node == 0 {
                    break;
                }
                suffix = oracle.mul(set.value(tree.letter[node]), &suffix);
                node = tree.parent[node] as usize;
            }
        }
        by_radius.push(best.0);
    }
    Ok(SubdivisionReport {
        radius,
        max_defect: best.0,
        by_radius,
        witness: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combing::reduced_word_combing;
    use crate::fixtures::{self, F2_ENLARGED};
    use crate::group::STANDARD;

    fn f2() -> Combing {
        fixtures::fixture("F2_standard").unwrap().combing
    }

    fn s2_length(c: &Combing) -> impl Fn(&Element) -> Result<i64> + Sync + '_ {
        move |g: &Element| Ok(c.oracle.word_length(g, F2_ENLARGED)? as i64)
    }

    #[test]
    fn word_length_evaluation() {
        let c = f2();
        let f = word_length_function(&c);
        let al = c.digraph.alphabet().clone();
        assert_eq!(f.evaluate_word(&al.parse("abab").unwrap()).unwrap(), 4);
        assert_eq!(f.evaluate_word(&[]).unwrap(), 0);
        assert_eq!(f.evaluate(&Element::identity()).unwrap(), 0);
        assert!(matches!(
            f.evaluate_word(&al.parse("aA").unwrap()),
            Err(Error::NotAccepted { index: 1, .. })
        ));
        let p = fixtures::fixture("PSL2Z").unwrap().combing;
        let fp = word_length_function(&p);
        assert_eq!(fp.evaluate_word(&p.digraph.alphabet().parse("stst").unwrap()).unwrap(), 4);
    }

    #[test]
    fn synthesizes_enlarged_length() {
        let c = f2();
        let phi = s2_length(&c);
        let f = synthesize_dphi(&c, &phi, 4, 7).unwrap();
        assert!(f.dphi.iter().skip(1).all(|&d| d == 0 || d == 1));
        let al = c.digraph.alphabet().clone();
        assert_eq!(f.evaluate_word(&al.parse("abab").unwrap()).unwrap(), 2);
        assert_eq!(f.evaluate_word(&al.parse("aaaa").unwrap()).unwrap(), 4);
        let g = c.oracle.evaluate_str("BABA", STANDARD).unwrap();
        assert_eq!(f.evaluate(&g).unwrap(), 2);
    }

    #[test]
    fn synthesis_is_idempotent() {
        let c = f2();
        let phi = s2_length(&c);
        let f = synthesize_dphi(&c, &phi, 2, 8).unwrap();
        let again = |g: &Element| f.evaluate(g);
        let h = synthesize_dphi(&c, &again, 3, 5).unwrap();
        assert_eq!(h.digraph(), f.digraph());
        assert_eq!(h.dphi, f.dphi);
    }

    #[test]
    fn zxz2_weak_combability() {
        let phi = fixtures::zxz2_example_function;
        let l = fixtures::fixture("ZxZ2_L").unwrap().combing;
        let f = synthesize_dphi(&l, &phi, 2, 10).unwrap();
        assert!(f.dphi.iter().all(|d| d.abs() <= 1));
        let lp = fixtures::fixture("ZxZ2_Lprime").unwrap().combing;
        match synthesize_dphi(&lp, &phi, 3, 10) {
            Err(Error::NotWeaklyCombableAtDepth(fail)) => {
                assert!(fail.increment_growth_slope > 0.5);
                assert!(fail.increment_range.1 - fail.increment_range.0 >= 20);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn sums_and_differences() {
        let c = f2();
        let phi = s2_length(&c);
        let f = synthesize_dphi(&c, &phi, 3, 6).unwrap();
        let w = word_length_function(&c);
        let sum = f.combine(&w, 1).unwrap();
        let diff = f.combine(&w, -1).unwrap();
        let ball = c.oracle.ball(STANDARD, 6).unwrap();
        for g in ball.elements() {
            let (a, b) = (f.evaluate(g).unwrap(), w.evaluate(g).unwrap());
            assert_eq!(sum.evaluate(g).unwrap(), a + b);
            assert_eq!(diff.evaluate(g).unwrap(), a - b);
        }
    }

    #[test]
    fn lipschitz_constants() {
        let c = f2();
        let o = &c.oracle;
        let s2 = |g: &Element| Ok(o.word_length(g, F2_ENLARGED)? as i64);
        let r = check_lipschitz(&s2, o, F2_ENLARGED, 5).unwrap();
        assert_eq!((r.left_constant, r.right_constant), (1, 1));
        assert_eq!(r.right_trend, Trend::Stable);
        let hom = |g: &Element| {
            Ok(g.syllables().iter().filter(|s| s.gen == 0).map(|s| s.exp as i64).sum())
        };
        let r = check_lipschitz(&hom, o, STANDARD, 5).unwrap();
        assert_eq!((r.left_constant, r.right_constant), (1, 1));
        let starts_with_a = |g: &Element| {
            let s = g.syllables();
            Ok(if s.first().is_some_and(|x| x.gen == 0 && x.exp > 0) {
                o.word_length(g, STANDARD)? as i64
            } else {
                0
            })
        };
        let r = check_lipschitz(&starts_with_a, o, STANDARD, 6).unwrap();
        assert_eq!(r.left_constant, 1);
        assert_eq!(r.right_trend, Trend::Growing);
        assert_eq!(r.right_by_shell[6], 7);
    }

    #[test]
    fn subdivision_defects() {
        let c = f2();
        let w = word_length_function(&c);
        assert_eq!(check_subdivision(&w, 6).unwrap().max_defect, 0);
        let phi = s2_length(&c);
        let f = synthesize_dphi(&c, &phi, 3, 8).unwrap();
        let r = check_subdivision(&f, 8).unwrap();
        assert!(r.max_defect >= 1);
        assert_eq!(r.by_radius[6], r.by_radius[8]);
    }

    #[test]
    fn radius_guard() {
        let o = Arc::new(fixtures::f2_oracle(OracleConfig::default()).unwrap());
        let mut c = reduced_word_combing(o, STANDARD).unwrap();
        c.verified_radius = 4;
        let phi = |_: &Element| Ok(0);
        assert!(matches!(
            synthesize_dphi(&c, &phi, 2, 6),
            Err(Error::OutsideVerifiedRadius { .. })
        ));
    }
}
