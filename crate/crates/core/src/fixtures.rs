//! Named example groups together with their combing automata.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::alphabet::Alphabet;
use crate::combing::{lex_first_combing, reduced_word_combing, validate_combing, Combing};
use crate::digraph::LabeledDigraph;
use crate::error::{Error, Result};
use crate::group::{Element, GroupDescription, GroupKind, GroupOracle, OracleConfig, STANDARD};

pub const FIXTURE_NAMES: [&str; 6] = [
    "F2_standard",
    "F2_enlarged",
    "PSL2Z",
    "ZxZ2_L",
    "ZxZ2_Lprime",
    "F2xF2_concat",
];

/// Name of the enlarged generating set `S₁ ∪ {(ab), (BA)}` on `F₂`.
pub const F2_ENLARGED: &str = "S2";
/// Name of the `{b, (ab), (bA)}` generating set on `ℤ × ℤ/2`.
pub const ZXZ2_PRIME: &str = "Lprime";

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub combing: Combing,
}

impl Fixture {
    pub fn oracle(&self) -> &Arc<GroupOracle> {
        &self.combing.oracle
    }

    pub fn digraph(&self) -> &LabeledDigraph {
        &self.combing.digraph
    }
}

pub fn fixture(name: &str) -> Result<Fixture> {
    fixture_with(name, OracleConfig::default())
}

pub fn fixture_with(name: &str, config: OracleConfig) -> Result<Fixture> {
    let combing = match name {
        "F2_standard" => reduced_word_combing(Arc::new(f2_oracle(config)?), STANDARD)?,
        "F2_enlarged" => {
            let (c, _) = lex_first_combing(Arc::new(f2_oracle(config)?), F2_ENLARGED, None, 1, 6, 4)?;
            c
        }
        "PSL2Z" => checked(psl2z_oracle(config)?, STANDARD, psl2z_digraph(), 12)?,
        "ZxZ2_L" => checked(zxz2_oracle(config)?, STANDARD, zxz2_l_digraph(), 12)?,
        "ZxZ2_Lprime" => checked(zxz2_oracle(config)?, ZXZ2_PRIME, zxz2_lprime_digraph(), 12)?,
        "F2xF2_concat" => checked(f2xf2_oracle(config)?, STANDARD, f2xf2_digraph(), 8)?,
        _ => return Err(Error::UnknownFixture(name.to_string())),
    };
    Ok(Fixture {
        name: name.to_string(),
        combing,
    })
}

fn checked(oracle: GroupOracle, genset: &str, digraph: LabeledDigraph, radius: usize) -> Result<Combing> {
    let report = validate_combing(&digraph, &oracle, genset, radius)?;
    if let Some(f) = report.failure {
        return Err(Error::InvalidArgument(format!(
            "fixture combing fails validation: {:?} {}",
            f.kind, f.witness
        )));
    }
    Combing::new(digraph, Arc::new(oracle), genset, radius)
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub fn f2_oracle(config: OracleConfig) -> Result<GroupOracle> {
    let mut gensets = BTreeMap::new();
    gensets.insert(F2_ENLARGED.to_string(), strings(&["a", "A", "b", "B", "(ab)", "(BA)"]));
    GroupOracle::new(
        &GroupDescription {
            group: GroupKind::Free { rank: 2 },
            generators: None,
            gensets,
        },
        config,
    )
}

pub fn psl2z_oracle(config: OracleConfig) -> Result<GroupOracle> {
    GroupOracle::new(
        &GroupDescription {
            group: GroupKind::FreeProductCyclic { orders: vec![2, 3] },
            generators: Some(strings(&["s", "t"])),
            gensets: BTreeMap::new(),
        },
        config,
    )
}

pub fn zxz2_oracle(config: OracleConfig) -> Result<GroupOracle> {
    let mut gensets = BTreeMap::new();
    gensets.insert(ZXZ2_PRIME.to_string(), strings(&["b", "(ab)", "(bA)"]));
    GroupOracle::new(
        &GroupDescription {
            group: GroupKind::DirectProduct {
                factors: vec![
                    GroupKind::Free { rank: 1 },
                    GroupKind::FreeProductCyclic { orders: vec![2] },
                ],
            },
            generators: None,
            gensets,
        },
        config,
    )
}

pub fn f2xf2_oracle(config: OracleConfig) -> Result<GroupOracle> {
    GroupOracle::new(
        &GroupDescription {
            group: GroupKind::DirectProduct {
                factors: vec![GroupKind::Free { rank: 2 }, GroupKind::Free { rank: 2 }],
            },
            generators: None,
            gensets: BTreeMap::new(),
        },
        config,
    )
}

/// `φ(aⁿ) = n`, `φ(baⁿ) = 0` on `ℤ × ℤ/2`.
pub fn zxz2_example_function(g: &Element) -> Result<i64> {
    let s = g.syllables();
    if s.iter().any(|x| x.gen == 1) {
        return Ok(0);
    }
    Ok(s.iter().find(|x| x.gen == 0).map_or(0, |x| x.exp as i64))
}

fn build(names: &[&str], vertices: usize, edges: &[(usize, usize, &str)]) -> LabeledDigraph {
    LabeledDigraph::from_triples(vertices, edges, Alphabet::new(names.iter().copied()).unwrap())
        .expect("fixture digraphs are valid")
}

/// Vertices `v₁, v_a, v_A, v_b, v_B`.
pub fn f2_reduced_digraph() -> LabeledDigraph {
    let letters = ["a", "A", "b", "B"];
    let inverse = [1, 0, 3, 2];
    let mut edges = Vec::new();
    for (i, l) in letters.iter().enumerate() {
        edges.push((0, i + 1, *l));
    }
    for i in 0..4 {
        for (j, l) in letters.iter().enumerate() {
            if inverse[i] != j {
                edges.push((i + 1, j + 1, *l));
            }
        }
    }
    build(&letters, 5, &edges)
}

/// Alternating normal forms: vertices `v₁, v_s, v_t, v_T`.
pub fn psl2z_digraph() -> LabeledDigraph {
    build(
        &["s", "t", "T"],
        4,
        &[
            (0, 1, "s"),
            (0, 2, "t"),
            (0, 3, "T"),
            (1, 2, "t"),
            (1, 3, "T"),
            (2, 1, "s"),
            (3, 1, "s"),
        ],
    )
}

/// Words `aⁿ, Aⁿ, baⁿ, bAⁿ`.
pub fn zxz2_l_digraph() -> LabeledDigraph {
    build(
        &["a", "A", "b"],
        6,
        &[
            (0, 1, "a"),
            (1, 1, "a"),
            (0, 2, "A"),
            (2, 2, "A"),
            (0, 3, "b"),
            (3, 4, "a"),
            (4, 4, "a"),
            (3, 5, "A"),
            (5, 5, "A"),
        ],
    )
}

/// Words `(ab)ⁿ, b(ab)ⁿ, (bA)ⁿ, b(bA)ⁿ`.
pub fn zxz2_lprime_digraph() -> LabeledDigraph {
    build(
        &["b", "(ab)", "(bA)"],
        6,
        &[
            (0, 1, "(ab)"),
            (1, 1, "(ab)"),
            (0, 2, "(bA)"),
            (2, 2, "(bA)"),
            (0, 3, "b"),
            (3, 4, "(ab)"),
            (4, 4, "(ab)"),
            (3, 5, "(bA)"),
            (5, 5, "(bA)"),
        ],
    )
}

/// Words `u·v` with `u` reduced in `⟨a, b⟩` and `v` reduced in `⟨c, d⟩`.
pub fn f2xf2_digraph() -> LabeledDigraph {
    let letters = ["a", "A", "b", "B", "c", "C", "d", "D"];
    let inverse = [1, 0, 3, 2, 5, 4, 7, 6];
    let mut edges = Vec::new();
    for (i, l) in letters.iter().enumerate() {
        edges.push((0, i + 1, *l));
    }
    for i in 0..8 {
        for (j, l) in letters.iter().enumerate() {
            let same_factor = (i < 4) == (j < 4);
            let allowed = if same_factor { inverse[i] != j } else { i < 4 };
            if allowed {
                edges.push((i + 1, j + 1, *l));
            }
        }
    }
    build(&letters, 9, &edges)
}
