//! Exact arithmetic in direct products of free products of cyclic groups.
//!
//! This family covers free groups, `ℤ/2 * ℤ/3`, `ℤ × ℤ/2` and `F₂ × F₂`.
//! Elements are stored in a canonical syllable form: syllables are grouped by
//! direct factor, and inside a factor consecutive syllables use different
//! generators, with exponents reduced modulo the generator order.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::alphabet::{tokenize, Alphabet, Letter};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Syllable {
    pub gen: u16,
    pub exp: i32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element {
    syllables: Vec<Syllable>,
}

impl Element {
    pub fn identity() -> Self {
        Element::default()
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct GeneratorInfo {
    name: String,
    /// 0 for infinite order.
    order: u32,
    factor: usize,
}

/// Structure of a group in the supported family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKind {
    Free { rank: usize },
    /// Orders of the cyclic free factors; `0` means `ℤ`.
    FreeProductCyclic { orders: Vec<u32> },
    DirectProduct { factors: Vec<GroupKind> },
}

impl GroupKind {
    fn factor_orders(&self) -> Result<Vec<Vec<u32>>> {
        match self {
            GroupKind::Free { rank } => Ok(vec![vec![0; *rank]]),
            GroupKind::FreeProductCyclic { orders } => {
                if orders.contains(&1) {
                    return Err(Error::InvalidGroup("cyclic factor of order 1".into()));
                }
                Ok(vec![orders.clone()])
            }
            GroupKind::DirectProduct { factors } => {
                let mut out = Vec::new();
                for f in factors {
                    if matches!(f, GroupKind::DirectProduct { .. }) {
                        return Err(Error::InvalidGroup("nested direct products".into()));
                    }
                    out.extend(f.factor_orders()?);
                }
                Ok(out)
            }
        }
    }
}

/// JSON description of a group and its named generating sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDescription {
    pub group: GroupKind,
    /// Lowercase single-character generator names; defaults to `a, b, c, …`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<String>>,
    /// Extra generating sets. Letters are words in the standard letters,
    /// with compound letters written in parentheses, e.g. `(ab)`.
    #[serde(default)]
    pub gensets: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub max_radius: usize,
    pub element_budget: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_radius: 12,
            element_budget: 4_000_000,
        }
    }
}

/// A finite generating set, possibly not closed under inverses.
#[derive(Clone, Debug)]
pub struct GeneratingSet {
    pub name: String,
    pub alphabet: Alphabet,
    pub values: Vec<Element>,
    /// The letter evaluating to the inverse, when the set contains one.
    pub inverses: Vec<Option<Letter>>,
    standard_lengths: Vec<usize>,
    single_syllable: bool,
}

impl GeneratingSet {
    pub fn is_symmetric(&self) -> bool {
        self.inverses.iter().all(Option::is_some)
    }

    pub fn value(&self, letter: Letter) -> &Element {
        &self.values[letter.index()]
    }

    pub fn inverse_pairs(&self) -> Vec<(String, String)> {
        self.alphabet
            .letters()
            .filter_map(|l| {
                self.inverses[l.index()].map(|i| {
                    (
                        self.alphabet.name(l).to_string(),
                        self.alphabet.name(i).to_string(),
                    )
                })
            })
            .collect()
    }
}

/// Exhaustive ball in a Cayley graph, in breadth-first order.
#[derive(Debug)]
pub struct Ball {
    pub genset: String,
    pub radius: usize,
    elements: Vec<Element>,
    layer_starts: Vec<usize>,
    index: HashMap<Element, u32>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// Elements of word length exactly `n`.
    pub fn sphere(&self, n: usize) -> &[Element] {
        assert!(n <= self.radius, "sphere {n} outside ball of radius {}", self.radius);
        &self.elements[self.layer_starts[n]..self.layer_starts[n + 1]]
    }

    pub fn sphere_range(&self, n: usize) -> std::ops::Range<usize> {
        self.layer_starts[n]..self.layer_starts[n + 1]
    }

    /// Elements of word length at most `n`.
    pub fn up_to(&self, n: usize) -> &[Element] {
        &self.elements[..self.layer_starts[n.min(self.radius) + 1]]
    }

    pub fn sphere_sizes(&self) -> Vec<usize> {
        self.layer_starts.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn index_of(&self, g: &Element) -> Option<usize> {
        self.index.get(g).map(|&i| i as usize)
    }

    pub fn length(&self, g: &Element) -> Option<usize> {
        let i = self.index_of(g)?;
        Some(self.layer_starts.partition_point(|&s| s <= i) - 1)
    }
}

#[derive(Debug)]
pub struct GroupOracle {
    description: GroupDescription,
    kind: GroupKind,
    gens: Vec<GeneratorInfo>,
    factor_count: usize,
    gensets: BTreeMap<String, GeneratingSet>,
    config: OracleConfig,
    balls: Mutex<HashMap<String, Arc<Ball>>>,
}

pub const STANDARD: &str = "S1";

impl GroupOracle {
    pub fn new(description: &GroupDescription, config: OracleConfig) -> Result<Self> {
        let orders = description.group.factor_orders()?;
        let total: usize = orders.iter().map(Vec::len).sum();
        if total == 0 {
            return Err(Error::InvalidGroup("no generators".into()));
        }
        let names: Vec<String> = match &description.generators {
            Some(names) => names.clone(),
            None => (0..total).map(|i| ((b'a' + i as u8) as char).to_string()).collect(),
        };
        if names.len() != total {
            return Err(Error::InvalidGroup(format!(
                "{} generator names for {} generators",
                names.len(),
                total
            )));
        }
        for n in &names {
            let ok = n.len() == 1 && n.chars().all(|c| c.is_ascii_lowercase());
            if !ok {
                return Err(Error::InvalidGroup(format!(
                    "generator name {n:?} must be one lowercase letter"
                )));
            }
        }
        let mut gens = Vec::with_capacity(total);
        for (factor, fo) in orders.iter().enumerate() {
            for &order in fo {
                gens.push(GeneratorInfo {
                    name: names[gens.len()].clone(),
                    order,
                    factor,
                });
            }
        }
        let mut oracle = GroupOracle {
            description: GroupDescription {
                gensets: BTreeMap::new(),
                ..description.clone()
            },
            kind: description.group.clone(),
            gens,
            factor_count: orders.len(),
            gensets: BTreeMap::new(),
            config,
            balls: Mutex::new(HashMap::new()),
        };
        let standard = oracle.standard_letter_names();
        oracle.add_genset(STANDARD, &standard)?;
        for (name, letters) in &description.gensets {
            oracle.add_genset(name, letters)?;
        }
        Ok(oracle)
    }

    pub fn free(rank: usize) -> Result<Self> {
        Self::new(
            &GroupDescription {
                group: GroupKind::Free { rank },
                generators: None,
                gensets: BTreeMap::new(),
            },
            OracleConfig::default(),
        )
    }

    /// Description including every generating set added so far.
    pub fn description(&self) -> &GroupDescription {
        &self.description
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn config(&self) -> OracleConfig {
        self.config
    }

    pub fn is_free(&self) -> bool {
        self.factor_count == 1 && self.gens.iter().all(|g| g.order == 0)
    }

    /// Standard letters: `x, X` per infinite or order ≥ 3 generator, `x` alone for order 2.
    pub fn standard_letter_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for g in &self.gens {
            out.push(g.name.clone());
            if g.order != 2 {
                out.push(g.name.to_uppercase());
            }
        }
        out
    }

    /// Registers a generating set whose letters are words in the standard letters.
    pub fn add_genset(&mut self, name: &str, letters: &[String]) -> Result<()> {
        let alphabet = Alphabet::new(letters.iter().cloned())?;
        let mut values = Vec::with_capacity(letters.len());
        let mut standard_lengths = Vec::with_capacity(letters.len());
        for l in letters {
            let inner = l.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(l);
            let mut value = Element::identity();
            let mut len = 0;
            for token in tokenize(inner)? {
                value = self.mul(&value, &self.standard_letter_value(&token)?);
                len += 1;
            }
            if value.is_identity() {
                return Err(Error::InvalidGroup(format!("letter {l:?} is trivial")));
            }
            values.push(value);
            standard_lengths.push(len);
        }
        let inverses = values
            .iter()
            .map(|v| {
                let inv = self.inverse(v);
                values.iter().position(|w| *w == inv).map(|i| Letter(i as u16))
            })
            .collect();
        let single_syllable = values.iter().all(|v| v.syllables.len() == 1);
        let set = GeneratingSet {
            name: name.to_string(),
            alphabet,
            values,
            inverses,
            standard_lengths,
            single_syllable,
        };
        self.check_generates(&set)?;
        if name != STANDARD {
            self.description.gensets.insert(name.to_string(), letters.to_vec());
        }
        self.gensets.insert(name.to_string(), set);
        Ok(())
    }

    fn check_generates(&self, set: &GeneratingSet) -> Result<()> {
        // Every standard generator must be a positive word in the set.
        let mut targets: Vec<Element> = (0..self.gens.len())
            .map(|g| Element {
                syllables: vec![Syllable { gen: g as u16, exp: 1 }],
            })
            .collect();
        for g in 0..self.gens.len() {
            if self.gens[g].order != 2 {
                targets.push(Element {
                    syllables: vec![Syllable {
                        gen: g as u16,
                        exp: self.normalize(g as u16, -1),
                    }],
                });
            }
        }
        let mut seen: HashMap<Element, ()> = HashMap::new();
        seen.insert(Element::identity(), ());
        let mut frontier = vec![Element::identity()];
        for _ in 0..8 {
            let mut next = Vec::new();
            for x in &frontier {
                for v in &set.values {
                    let y = self.mul(x, v);
                    if seen.insert(y.clone(), ()).is_none() {
                        next.push(y);
                    }
                }
            }
            if targets.iter().all(|t| seen.contains_key(t)) {
                return Ok(());
            }
            frontier = next;
            if seen.len() > 200_000 {
                break;
            }
        }
        Err(Error::InvalidGroup(format!(
            "generating set {:?} does not generate the group as a semigroup",
            set.name
        )))
    }

    pub fn genset(&self, name: &str) -> Result<&GeneratingSet> {
        self.gensets
            .get(name)
            .ok_or_else(|| Error::UnknownGenset(name.to_string()))
    }

    pub fn genset_names(&self) -> Vec<&str> {
        self.gensets.keys().map(String::as_str).collect()
    }

    fn standard_letter_value(&self, token: &str) -> Result<Element> {
        for (i, g) in self.gens.iter().enumerate() {
            let exp = if token == g.name {
                1
            } else if g.order != 2 && token == g.name.to_uppercase() {
                -1
            } else {
                continue;
            };
            return Ok(Element {
                syllables: vec![Syllable {
                    gen: i as u16,
                    exp: self.normalize(i as u16, exp),
                }],
            });
        }
        Err(Error::UnknownLetter(token.to_string()))
    }

    fn normalize(&self, gen: u16, exp: i32) -> i32 {
        match self.gens[gen as usize].order {
            0 => exp,
            m => exp.rem_euclid(m as i32),
        }
    }

    fn factor_of(&self, gen: u16) -> usize {
        self.gens[gen as usize].factor
    }

    fn block<'a>(&self, x: &'a Element, factor: usize) -> &'a [Syllable] {
        let s = &x.syllables;
        let lo = s.partition_point(|y| self.factor_of(y.gen) < factor);
        let hi = s.partition_point(|y| self.factor_of(y.gen) <= factor);
        &s[lo..hi]
    }

    fn push_syllable(&self, stack: &mut Vec<Syllable>, s: Syllable) {
        if let Some(last) = stack.last_mut() {
            if last.gen == s.gen {
                let e = self.normalize(s.gen, last.exp + s.exp);
                if e == 0 {
                    stack.pop();
                } else {
                    last.exp = e;
                }
                return;
            }
        }
        stack.push(s);
    }

    pub fn mul(&self, x: &Element, y: &Element) -> Element {
        if y.is_identity() {
            return x.clone();
        }
        if x.is_identity() {
            return y.clone();
        }
        if self.factor_count == 1 {
            let mut out = x.syllables.clone();
            for &s in &y.syllables {
                self.push_syllable(&mut out, s);
            }
            return Element { syllables: out };
        }
        let mut out = Vec::with_capacity(x.syllables.len() + y.syllables.len());
        for f in 0..self.factor_count {
            let mut stack = self.block(x, f).to_vec();
            for &s in self.block(y, f) {
                self.push_syllable(&mut stack, s);
            }
            out.extend(stack);
        }
        Element { syllables: out }
    }

    pub fn inverse(&self, x: &Element) -> Element {
        let mut out = Vec::with_capacity(x.syllables.len());
        for f in 0..self.factor_count {
            out.extend(self.block(x, f).iter().rev().map(|s| Syllable {
                gen: s.gen,
                exp: self.normalize(s.gen, -s.exp),
            }));
        }
        Element { syllables: out }
    }

    /// Evaluates a word in the given generating set.
    pub fn evaluate(&self, word: &[Letter], genset: &str) -> Result<Element> {
        let set = self.genset(genset)?;
        let mut g = Element::identity();
        for &l in word {
            if l.index() >= set.values.len() {
                return Err(Error::UnknownLetter(format!("#{}", l.0)));
            }
            g = self.mul(&g, &set.values[l.index()]);
        }
        Ok(g)
    }

    pub fn evaluate_str(&self, text: &str, genset: &str) -> Result<Element> {
        let set = self.genset(genset)?;
        self.evaluate(&set.alphabet.parse(text)?, genset)
    }

    /// Canonical normal form spelled in the standard letters.
    pub fn format(&self, x: &Element) -> String {
        let mut out = String::new();
        for s in &x.syllables {
            let g = &self.gens[s.gen as usize];
            let upper = g.name.to_uppercase();
            let (name, count) = match g.order {
                0 if s.exp < 0 => (upper.as_str(), (-s.exp) as u32),
                0 => (g.name.as_str(), s.exp as u32),
                2 => (g.name.as_str(), 1),
                m => {
                    let e = s.exp as u32;
                    if m - e < e {
                        (upper.as_str(), m - e)
                    } else {
                        (g.name.as_str(), e)
                    }
                }
            };
            for _ in 0..count {
                out.push_str(name);
            }
        }
        out
    }

    /// Normal form of `x` as a word in the standard letters.
    pub fn standard_word(&self, x: &Element) -> Vec<Letter> {
        let mut first = Vec::with_capacity(self.gens.len());
        let mut next = 0u16;
        for g in &self.gens {
            first.push(next);
            next += if g.order == 2 { 1 } else { 2 };
        }
        let mut out = Vec::new();
        for s in &x.syllables {
            let g = &self.gens[s.gen as usize];
            let base = first[s.gen as usize];
            let (letter, count) = match g.order {
                0 if s.exp < 0 => (base + 1, (-s.exp) as u32),
                0 => (base, s.exp as u32),
                2 => (base, 1),
                m => {
                    let e = s.exp as u32;
                    if m - e < e {
                        (base + 1, m - e)
                    } else {
                        (base, e)
                    }
                }
            };
            out.extend(std::iter::repeat_n(Letter(letter), count as usize));
        }
        out
    }

    /// Word length of `x` over `genset`.
    ///
    /// Uses a closed form when every letter is a power of a single generator,
    /// a bounded search around the reduced word for free groups, and the
    /// cached ball otherwise.
    pub fn word_length(&self, x: &Element, genset: &str) -> Result<usize> {
        let set = self.genset(genset)?;
        if x.is_identity() {
            return Ok(0);
        }
        if set.single_syllable {
            return self.syllable_length(x, set);
        }
        if self.is_free() {
            return self.tube_length(x, set);
        }
        let radius = self.config.max_radius;
        let ball = self.ball(genset, radius)?;
        ball.length(x).ok_or(Error::RadiusExceeded {
            requested: radius + 1,
            max: radius,
        })
    }

    fn syllable_length(&self, x: &Element, set: &GeneratingSet) -> Result<usize> {
        let mut total = 0;
        for s in &x.syllables {
            let steps: Vec<i32> = set
                .values
                .iter()
                .filter(|v| v.syllables[0].gen == s.gen)
                .map(|v| v.syllables[0].exp)
                .collect();
            total += self
                .power_cost(s.gen, s.exp, &steps)
                .ok_or_else(|| Error::InvalidGroup("generator power unreachable".into()))?;
        }
        Ok(total)
    }

    /// Fewest steps from `0` to `exp` in `⟨gen⟩`, moving by the given exponents.
    fn power_cost(&self, gen: u16, exp: i32, steps: &[i32]) -> Option<usize> {
        let order = self.gens[gen as usize].order;
        let span = steps.iter().map(|s| s.abs()).max().unwrap_or(0);
        let (lo, hi) = if order == 0 {
            (-exp.abs() - 2 * span, exp.abs() + 2 * span)
        } else {
            (0, order as i32 - 1)
        };
        let width = (hi - lo + 1) as usize;
        let mut dist = vec![usize::MAX; width];
        let mut queue = VecDeque::new();
        dist[(0 - lo) as usize] = 0;
        queue.push_back(0i32);
        while let Some(v) = queue.pop_front() {
            let d = dist[(v - lo) as usize];
            if v == exp {
                return Some(d);
            }
            for &s in steps {
                let w = if order == 0 { v + s } else { (v + s).rem_euclid(order as i32) };
                if w < lo || w > hi {
                    continue;
                }
                let slot = &mut dist[(w - lo) as usize];
                if *slot == usize::MAX {
                    *slot = d + 1;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Letters of a free-group element as signed generator codes `1..=2r`.
    fn free_letters(&self, x: &Element) -> Vec<u8> {
        let mut out = Vec::new();
        for s in &x.syllables {
            let code = if s.exp > 0 { 2 * s.gen as u8 + 1 } else { 2 * s.gen as u8 + 2 };
            for _ in 0..s.exp.unsigned_abs() {
                out.push(code);
            }
        }
        out
    }

    /// Breadth-first search over points of the Cayley tree within bounded
    /// distance of the geodesic from the identity to `x`.
    fn tube_length(&self, x: &Element, set: &GeneratingSet) -> Result<usize> {
        let bound = set.standard_lengths.iter().copied().max().unwrap_or(1) + 1;
        let target = self.free_letters(x);
        let letters: Vec<Vec<u8>> = set.values.iter().map(|v| self.free_letters(v)).collect();
        tube_search(&target, &letters, 2 * self.gens.len() as u8, bound).ok_or(
            Error::BallTooLarge {
                radius: target.len(),
                budget: TUBE_BUDGET,
            },
        )
    }

    /// Exhaustive ball of at least the requested radius (cached per generating set).
    pub fn ball(&self, genset: &str, radius: usize) -> Result<Arc<Ball>> {
        if radius > self.config.max_radius {
            return Err(Error::RadiusExceeded {
                requested: radius,
                max: self.config.max_radius,
            });
        }
        let set = self.genset(genset)?;
        let cached = self.balls.lock().unwrap().get(genset).cloned();
        if let Some(b) = &cached {
            if b.radius >= radius {
                return Ok(b.clone());
            }
        }
        let ball = Arc::new(self.grow_ball(set, radius, cached.as_deref())?);
        self.balls
            .lock()
            .unwrap()
            .insert(genset.to_string(), ball.clone());
        Ok(ball)
    }

    fn grow_ball(&self, set: &GeneratingSet, radius: usize, from: Option<&Ball>) -> Result<Ball> {
        let (mut elements, mut layer_starts, mut index) = match from {
            Some(b) => (b.elements.clone(), b.layer_starts.clone(), b.index.clone()),
            None => {
                let mut index = HashMap::new();
                index.insert(Element::identity(), 0);
                (vec![Element::identity()], vec![0, 1], index)
            }
        };
        let mut current = layer_starts.len() - 2;
        while current < radius {
            let (lo, hi) = (layer_starts[current], layer_starts[current + 1]);
            for i in lo..hi {
                for v in &set.values {
                    let y = self.mul(&elements[i], v);
                    if !index.contains_key(&y) {
                        if elements.len() >= self.config.element_budget {
                            return Err(Error::BallTooLarge {
                                radius,
                                budget: self.config.element_budget,
                            });
                        }
                        index.insert(y.clone(), elements.len() as u32);
                        elements.push(y);
                    }
                }
            }
            layer_starts.push(elements.len());
            current += 1;
        }
        Ok(Ball {
            genset: set.name.clone(),
            radius,
            elements,
            layer_starts,
            index,
        })
    }

    /// `(x|y) = (|x| + |y| − |x⁻¹y|)/2`.
    pub fn gromov_product(&self, x: &Element, y: &Element, genset: &str) -> Result<f64> {
        let d = self.word_length(&self.mul(&self.inverse(x), y), genset)?;
        let s = self.word_length(x, genset)? + self.word_length(y, genset)?;
        Ok((s as f64 - d as f64) / 2.0)
    }
}

const TUBE_BUDGET: usize = 1 << 26;

/// Shortest path from the identity to `target` using `letters`, restricted to
/// points whose distance from the geodesic is at most `bound`. States are
/// `(i, e)`: the point `target[..i] · e` with `e` leaving the geodesic at `i`.
fn tube_search(target: &[u8], letters: &[Vec<u8>], codes: u8, bound: usize) -> Option<usize> {
    let base = codes as usize + 1;
    let per_index = base.checked_pow(bound as u32)?;
    let states = per_index.checked_mul(target.len() + 1)?;
    if states > TUBE_BUDGET {
        return None;
    }
    let inv = |c: u8| if c % 2 == 1 { c + 1 } else { c - 1 };
    let encode = |i: usize, e: &[u8]| i * per_index + e.iter().fold(0usize, |acc, &c| acc * base + c as usize);
    let mut seen = vec![false; states];
    let mut queue: VecDeque<(usize, [u8; 16], usize, usize)> = VecDeque::new();
    seen[encode(0, &[])] = true;
    queue.push_back((0, [0; 16], 0, 0));
    let n = target.len();
    while let Some((i, e, len, d)) = queue.pop_front() {
        if i == n && len == 0 {
            return Some(d);
        }
        'letters: for s in letters {
            let mut buf = [0u8; 32];
            let mut r = len;
            buf[..len].copy_from_slice(&e[..len]);
            for &c in s {
                if r > 0 && buf[r - 1] == inv(c) {
                    r -= 1;
                } else {
                    buf[r] = c;
                    r += 1;
                }
            }
            let mut j = i;
            let mut start = 0;
            while start < r {
                if j > 0 && buf[start] == inv(target[j - 1]) {
                    j -= 1;
                    start += 1;
                } else if j < n && buf[start] == target[j] {
                    j += 1;
                    start += 1;
                } else {
                    break;
                }
            }
            let rest = &buf[start..r];
            if rest.len() > bound {
                continue 'letters;
            }
            let key = encode(j, rest);
            if !seen[key] {
                seen[key] = true;
                let mut ne = [0u8; 16];
                ne[..rest.len()].copy_from_slice(rest);
                queue.push_back((j, ne, rest.len(), d + 1));
            }
        }
    }
    None
}
