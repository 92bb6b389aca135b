//! Counting quasimorphisms on free groups, defect estimates and the Hölder
//! diagnostic for `Δ_aψ(g) = ψ(g) − ψ(ag)`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alphabet::Letter;
use crate::combable::GroupFunction;
use crate::digraph::linear_fit;
use crate::error::{Error, Result};
use crate::group::{Element, GroupOracle, STANDARD};

/// A word `σ` in the standard letters together with `σ⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub sigma: Vec<Letter>,
    pub inverse: Vec<Letter>,
}

impl Pattern {
    pub fn new(oracle: &GroupOracle, sigma: Vec<Letter>) -> Result<Self> {
        if sigma.len() < 2 {
            return Err(Error::PatternTooShort);
        }
        let set = oracle.genset(STANDARD)?;
        let inverse = sigma
            .iter()
            .rev()
            .map(|&l| {
                set.inverses
                    .get(l.index())
                    .copied()
                    .flatten()
                    .ok_or_else(|| Error::UnknownLetter(format!("#{}", l.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Pattern { sigma, inverse })
    }

    pub fn parse(oracle: &GroupOracle, text: &str) -> Result<Self> {
        let sigma = oracle.genset(STANDARD)?.alphabet.parse(text)?;
        Self::new(oracle, sigma)
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// Leftmost-first scan for non-overlapping copies of `pattern`.
pub fn greedy_count(word: &[Letter], pattern: &[Letter]) -> usize {
    let k = pattern.len();
    if k == 0 {
        return 0;
    }
    let mut i = 0;
    let mut count = 0;
    while i + k <= word.len() {
        if word[i..i + k] == *pattern {
            count += 1;
            i += k;
        } else {
            i += 1;
        }
    }
    count
}

/// Largest number of pairwise disjoint copies of `pattern` in `word`.
pub fn max_disjoint_count(word: &[Letter], pattern: &[Letter]) -> usize {
    let k = pattern.len();
    if k == 0 || word.len() < k {
        return 0;
    }
    let n = word.len();
    let mut best = vec![0usize; n + 1];
    for i in (0..n).rev() {
        best[i] = best[i + 1];
        if i + k <= n && word[i..i + k] == *pattern {
            best[i] = best[i].max(1 + best[i + k]);
        }
    }
    best[0]
}

/// Every, possibly overlapping, copy of `pattern` in `word`.
pub fn overlapping_count(word: &[Letter], pattern: &[Letter]) -> usize {
    if pattern.is_empty() || word.len() < pattern.len() {
        return 0;
    }
    word.windows(pattern.len()).filter(|w| *w == pattern).count()
}

fn require_free(oracle: &GroupOracle) -> Result<()> {
    if oracle.is_free() {
        Ok(())
    } else {
        Err(Error::WrongKind("counting functions need a free group".into()))
    }
}

/// `c_σ(g) = |g| − inf_α (len α − k_σ(α))` over paths `α` from the identity
/// to `g` of length at most `|g| + slack`.
///
/// With `slack = 0` the only path is the reduced word and the value is the
/// greedy count.
pub fn counting_function(
    oracle: &GroupOracle,
    pattern: &[Letter],
    g: &Element,
    slack: usize,
    budget: usize,
) -> Result<i64> {
    require_free(oracle)?;
    let word = oracle.standard_word(g);
    if slack == 0 {
        return Ok(greedy_count(&word, pattern) as i64);
    }
    let set = oracle.genset(STANDARD)?;
    let target_len = word.len();
    let mut search = PathSearch {
        oracle,
        values: &set.values,
        pattern,
        target: g,
        target_len,
        max_len: target_len + slack,
        budget,
        visited: 0,
        path: Vec::with_capacity(target_len + slack),
        best: i64::MIN,
    };
    search.run(Element::identity())?;
    Ok(search.best)
}

struct PathSearch<'a> {
    oracle: &'a GroupOracle,
    values: &'a [Element],
    pattern: &'a [Letter],
    target: &'a Element,
    target_len: usize,
    max_len: usize,
    budget: usize,
    visited: usize,
    path: Vec<Letter>,
    best: i64,
}

impl PathSearch<'_> {
    fn run(&mut self, at: Element) -> Result<()> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(Error::SearchBudgetExceeded(self.budget));
        }
        let t = self.path.len();
        let rest = self.oracle.standard_word(&self.oracle.mul(&self.oracle.inverse(&at), self.target)).len();
        if rest > self.max_len - t {
            return Ok(());
        }
        if rest == 0 {
            let value = self.target_len as i64 - t as i64 + max_disjoint_count(&self.path, self.pattern) as i64;
            self.best = self.best.max(value);
        }
        if t == self.max_len {
            return Ok(());
        }
        for (i, v) in self.values.iter().enumerate() {
            let next = self.oracle.mul(&at, v);
            self.path.push(Letter(i as u16));
            self.run(next)?;
            self.path.pop();
        }
        Ok(())
    }
}

/// Small counting quasimorphism `φ_σ = c_σ − c_{σ⁻¹}`.
#[derive(Clone, Debug)]
pub struct CountingQuasimorphism {
    pub oracle: Arc<GroupOracle>,
    pub pattern: Pattern,
    pub slack: usize,
    pub budget: usize,
}

impl CountingQuasimorphism {
    pub fn new(oracle: Arc<GroupOracle>, pattern: Pattern) -> Result<Self> {
        require_free(&oracle)?;
        Ok(CountingQuasimorphism {
            oracle,
            pattern,
            slack: 0,
            budget: 1_000_000,
        })
    }

    pub fn with_slack(mut self, slack: usize, budget: usize) -> Self {
        self.slack = slack;
        self.budget = budget;
        self
    }
}

impl GroupFunction for CountingQuasimorphism {
    fn value(&self, g: &Element) -> Result<i64> {
        let c = counting_function(&self.oracle, &self.pattern.sigma, g, self.slack, self.budget)?;
        let d = counting_function(&self.oracle, &self.pattern.inverse, g, self.slack, self.budget)?;
        Ok(c - d)
    }
}

/// Big counting quasimorphism: overlapping copies of `σ` minus those of `σ⁻¹`
/// in the reduced word.
#[derive(Clone, Debug)]
pub struct BigCountingQuasimorphism {
    pub oracle: Arc<GroupOracle>,
    pub pattern: Pattern,
}

impl BigCountingQuasimorphism {
    pub fn new(oracle: Arc<GroupOracle>, pattern: Pattern) -> Result<Self> {
        require_free(&oracle)?;
        Ok(BigCountingQuasimorphism { oracle, pattern })
    }
}

impl GroupFunction for BigCountingQuasimorphism {
    fn value(&self, g: &Element) -> Result<i64> {
        let w = self.oracle.standard_word(g);
        Ok(overlapping_count(&w, &self.pattern.sigma) as i64 - overlapping_count(&w, &self.pattern.inverse) as i64)
    }
}

/// `ψ_S(g) = |g|_S − |g⁻¹|_S`.
#[derive(Clone, Debug)]
pub struct GensetQuasimorphism {
    pub oracle: Arc<GroupOracle>,
    pub genset: String,
}

impl GensetQuasimorphism {
    pub fn new(oracle: Arc<GroupOracle>, genset: &str) -> Result<Self> {
        oracle.genset(genset)?;
        Ok(GensetQuasimorphism {
            oracle,
            genset: genset.to_string(),
        })
    }
}

impl GroupFunction for GensetQuasimorphism {
    fn value(&self, g: &Element) -> Result<i64> {
        let fwd = self.oracle.word_length(g, &self.genset)?;
        let back = self.oracle.word_length(&self.oracle.inverse(g), &self.genset)?;
        Ok(fwd as i64 - back as i64)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectWitness {
    pub g: String,
    pub h: String,
    pub defect: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectReport {
    pub genset: String,
    pub radius: usize,
    pub lower_bound: i64,
    pub witness: Option<DefectWitness>,
    /// Largest defect over pairs with `max(|g|, |h|) = r`, indexed by `r`.
    pub by_radius: Vec<i64>,
}

/// Lower bound for `sup |φ(gh) − φ(g) − φ(h)|` over `g, h` in the ball of
/// radius `radius`.
pub fn defect_estimate(
    phi: &dyn GroupFunction,
    oracle: &GroupOracle,
    genset: &str,
    radius: usize,
) -> Result<DefectReport> {
    let ball = oracle.ball(genset, radius)?;
    let elements = ball.up_to(radius);
    let values: Vec<i64> = elements.iter().map(|g| phi.value(g)).collect::<Result<_>>()?;
    let lengths: Vec<usize> = elements.iter().map(|g| ball.length(g).unwrap_or(0)).collect();
    let rows: Vec<Vec<(i64, usize)>> = (0..elements.len())
        .into_par_iter()
        .map(|i| {
            (0..elements.len())
                .map(|j| {
                    let gh = oracle.mul(&elements[i], &elements[j]);
                    let d = (phi.value(&gh)? - values[i] - values[j]).abs();
                    Ok((d, j))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut by_radius = vec![0i64; radius + 1];
    let mut best: Option<(i64, usize, usize)> = None;
    for (i, row) in rows.iter().enumerate() {
        for &(d, j) in row {
            let r = lengths[i].max(lengths[j]);
            by_radius[r] = by_radius[r].max(d);
            if best.is_none_or(|b| d > b.0) {
                best = Some((d, i, j));
            }
        }
    }
    let (lower_bound, witness) = match best {
        Some((d, i, j)) if d > 0 => (
            d,
            Some(DefectWitness {
                g: oracle.format(&elements[i]),
                h: oracle.format(&elements[j]),
                defect: d,
            }),
        ),
        _ => (0, None),
    };
    Ok(DefectReport {
        genset: genset.to_string(),
        radius,
        lower_bound,
        witness,
        by_radius,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderSample {
    pub x: String,
    pub y: String,
    pub gromov_product: f64,
    pub difference: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderLevel {
    pub gromov_product: usize,
    pub pairs: usize,
    pub max_difference: i64,
    pub witness: Option<HolderSample>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderReport {
    pub genset: String,
    pub a: String,
    pub radius: usize,
    pub levels: Vec<HolderLevel>,
    /// Fit of `max_difference ≈ C e^{−c k}` over levels with nonzero maxima.
    pub fit_c_constant: Option<f64>,
    pub fit_c_rate: Option<f64>,
    pub violation: bool,
    pub violations: Vec<HolderSample>,
}

/// Maxima of `|Δ_aψ(x) − Δ_aψ(xs)|` over pairs with `|xs| = |x| + 1`, grouped
/// by `(x|xs) = |x|`.
///
/// The differences violate the Hölder bound when the largest value over the
/// upper half of the levels is positive and at least the largest value over
/// the lower half.
pub fn holder_diagnostic(
    psi: &dyn GroupFunction,
    oracle: &GroupOracle,
    genset: &str,
    a: &Element,
    radius: usize,
    pair_budget: usize,
) -> Result<HolderReport> {
    if radius < 2 {
        return Err(Error::InvalidArgument("Hölder diagnostic needs radius at least 2".into()));
    }
    let ball = oracle.ball(genset, radius)?;
    let set = oracle.genset(genset)?;
    let per_level = (pair_budget / radius).max(1);
    let delta = |x: &Element| -> Result<i64> { Ok(psi.value(x)? - psi.value(&oracle.mul(a, x))?) };
    let mut levels = Vec::with_capacity(radius);
    for k in 0..radius {
        let sphere = ball.sphere(k);
        let stride = (sphere.len() * set.values.len()).div_ceil(per_level).max(1);
        let chosen: Vec<&Element> = if stride == 1 {
            sphere.iter().collect()
        } else {
            let step = stride.div_ceil(set.values.len()).max(1);
            sphere.iter().step_by(step).collect()
        };
        let found: Vec<Vec<(i64, Element, Element)>> = chosen
            .par_iter()
            .map(|&x| {
                let dx = delta(x)?;
                let mut out = Vec::new();
                for v in &set.values {
                    let y = oracle.mul(x, v);
                    if ball.length(&y) != Some(k + 1) {
                        continue;
                    }
                    let dy = delta(&y)?;
                    out.push(((dx - dy).abs(), x.clone(), y));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut pairs = 0;
        let mut best: Option<(i64, Element, Element)> = None;
        for (d, x, y) in found.into_iter().flatten() {
            pairs += 1;
            if best.as_ref().is_none_or(|b| d > b.0) {
                best = Some((d, x, y));
            }
        }
        let max_difference = best.as_ref().map_or(0, |b| b.0);
        let witness = best.filter(|b| b.0 > 0).map(|(d, x, y)| HolderSample {
            x: oracle.format(&x),
            y: oracle.format(&y),
            gromov_product: k as f64,
            difference: d,
        });
        levels.push(HolderLevel {
            gromov_product: k,
            pairs,
            max_difference,
            witness,
        });
    }
    let half = radius / 2;
    let lower = levels[..half].iter().map(|l| l.max_difference).max().unwrap_or(0);
    let upper = levels[half..].iter().map(|l| l.max_difference).max().unwrap_or(0);
    let violation = upper > 0 && upper >= lower;
    let violations = if violation {
        levels[half..]
            .iter()
            .filter(|l| l.max_difference == upper)
            .filter_map(|l| l.witness.clone())
            .collect()
    } else {
        Vec::new()
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = levels
        .iter()
        .filter(|l| l.max_difference > 0)
        .map(|l| (l.gromov_product as f64, (l.max_difference as f64).ln()))
        .unzip();
    let (fit_c_constant, fit_c_rate) = if xs.len() >= 2 && !violation {
        let (intercept, slope, _) = linear_fit(&xs, &ys);
        (Some(intercept.exp()), Some(-slope))
    } else {
        (None, None)
    };
    Ok(HolderReport {
        genset: genset.to_string(),
        a: oracle.format(a),
        radius,
        levels,
        fit_c_constant,
        fit_c_rate,
        violation,
        violations,
    })
}

/// Values of `ψ` on a whole ball, keyed by element.
pub fn tabulate(psi: &dyn GroupFunction, oracle: &GroupOracle, genset: &str, radius: usize) -> Result<HashMap<Element, i64>> {
    let ball = oracle.ball(genset, radius)?;
    ball.up_to(radius)
        .par_iter()
        .map(|g| Ok((g.clone(), psi.value(g)?)))
        .collect()
}
