//! Drift and variance of combable functions, sampling from the Patterson–Sullivan
//! chain, empirical central limit checks and generating-set comparison.

use std::sync::Arc;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::alphabet::Letter;
use crate::combable::{synthesize_dphi, CombableFunction, GroupFunction};
use crate::combing::{lex_first_combing, reduced_word_combing, Combing};
use crate::digraph::INITIAL;
use crate::error::{Error, Result};
use crate::group::{Element, GroupOracle, STANDARD};
use crate::linalg::{dot, sum, Matrix, Scalar};
use crate::spectral::{analyze, SpectralData};
use crate::stats::{histogram, lattice_ks, moments, HistogramBin, LatticeKs, Moments};

/// Round-off allowance below zero for a computed variance.
pub const VARIANCE_CLAMP: f64 = 1e-10;
/// Tolerance for per-component agreement of drift and standard deviation.
pub const AGREEMENT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct ComponentClt {
    pub component: usize,
    pub vertices: Vec<usize>,
    pub drift: f64,
    pub variance: f64,
    pub sigma: f64,
    pub exact_drift: Option<String>,
    pub exact_variance: Option<String>,
    /// Solution `g` of `(I − Nⁱ)g = f̄` with `⟨μⁱ, g⟩ = 0`, on `vertices`.
    pub poisson_solution: Vec<f64>,
    /// A tiny negative variance was rounded to zero.
    pub clamped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CltReport {
    pub exact: bool,
    pub per_component: Vec<ComponentClt>,
    pub drift: f64,
    pub variance: f64,
    pub sigma: f64,
    pub exact_drift: Option<String>,
    pub exact_variance: Option<String>,
    pub agreement: bool,
    pub max_disagreement: f64,
    pub tolerance: f64,
}

struct Stats<T> {
    drift: T,
    variance: T,
    g: Vec<T>,
}

/// Stationary law of an irreducible stochastic matrix.
fn stationary<T: Scalar>(n: &Matrix<T>, tol: f64) -> Option<Vec<T>> {
    let k = n.rows();
    let a = Matrix::from_fn(k, k, |i, j| {
        if i == k - 1 {
            T::one()
        } else if i == j {
            n[(j, i)].clone() - T::one()
        } else {
            n[(j, i)].clone()
        }
    });
    let mut rhs = vec![T::zero(); k];
    rhs[k - 1] = T::one();
    a.solve_vec(&rhs, tol)
}

fn component_stats<T: Scalar>(n: &Matrix<T>, vertices: &[usize], dphi: &[i64], id: usize) -> Result<Stats<T>> {
    let k = vertices.len();
    let tol = if T::is_exact() { 0.0 } else { 1e-13 };
    let sub = Matrix::from_fn(k, k, |i, j| n[(vertices[i], vertices[j])].clone());
    let mu = stationary(&sub, tol).ok_or(Error::SingularPoisson(id))?;
    let f: Vec<T> = vertices.iter().map(|&v| T::from_i64(dphi[v])).collect();
    let drift = dot(&mu, &f);
    let fbar: Vec<T> = f.iter().map(|x| x.clone() - drift.clone()).collect();
    let system = Matrix::from_fn(k, k, |i, j| {
        let id = if i == j { T::one() } else { T::zero() };
        id - sub[(i, j)].clone() + mu[j].clone()
    });
    let g = system.solve_vec(&fbar, tol).ok_or(Error::SingularPoisson(id))?;
    let fg: Vec<T> = fbar.iter().zip(&g).map(|(a, b)| a.clone() * b.clone()).collect();
    let ff: Vec<T> = fbar.iter().map(|a| a.clone() * a.clone()).collect();
    let variance = T::from_i64(2) * dot(&mu, &fg) - dot(&mu, &ff);
    Ok(Stats { drift, variance, g })
}

fn check_weights(spectral: &SpectralData, dphi: &[i64]) -> Result<()> {
    if dphi.len() != spectral.vertex_count() {
        return Err(Error::MismatchedDigraph);
    }
    Ok(())
}

/// Drift `Eⁱ = ⟨μⁱ, dφ⟩` and variance `σⁱ²` on every `λ`-component.
///
/// `σⁱ² = 2⟨μⁱ, f̄g⟩ − ⟨μⁱ, f̄²⟩` where `g` solves the Poisson equation for the
/// centred weighting `f̄`. When `λ` is an integer everything is computed in
/// exact rational arithmetic.
pub fn drift_variance(spectral: &SpectralData, dphi: &[i64]) -> Result<CltReport> {
    check_weights(spectral, dphi)?;
    let mut per_component = Vec::new();
    for &c in &spectral.support.lambda_components {
        let vertices = spectral.components.components[c].clone();
        let (drift, variance, exact_drift, exact_variance, g) = match &spectral.exact {
            Some(chain) => {
                let s: Stats<BigRational> = component_stats(&chain.n, &vertices, dphi, c)?;
                if s.variance < BigRational::from_i64(0) {
                    return Err(Error::NegativeVariance(s.variance.to_f64()));
                }
                (
                    s.drift.to_f64(),
                    s.variance.to_f64(),
                    Some(s.drift.to_string()),
                    Some(s.variance.to_string()),
                    s.g.iter().map(Scalar::to_f64).collect(),
                )
            }
            None => {
                let s: Stats<f64> = component_stats(&spectral.n, &vertices, dphi, c)?;
                (s.drift, s.variance, None, None, s.g)
            }
        };
        let (variance, clamped) = if variance < 0.0 {
            if variance < -VARIANCE_CLAMP {
                return Err(Error::NegativeVariance(variance));
            }
            (0.0, true)
        } else {
            (variance, false)
        };
        per_component.push(ComponentClt {
            component: c,
            vertices,
            drift,
            variance,
            sigma: variance.sqrt(),
            exact_drift,
            exact_variance,
            poisson_solution: g,
            clamped,
        });
    }
    let first = per_component
        .first()
        .ok_or_else(|| Error::DegenerateEigenstructure("no λ-component".into()))?
        .clone();
    let max_disagreement = per_component
        .iter()
        .map(|c| f64::max((c.drift - first.drift).abs(), (c.sigma - first.sigma).abs()))
        .fold(0.0, f64::max);
    Ok(CltReport {
        exact: spectral.exact.is_some(),
        drift: first.drift,
        variance: first.variance,
        sigma: first.sigma,
        exact_drift: first.exact_drift.clone(),
        exact_variance: first.exact_variance.clone(),
        agreement: max_disagreement <= AGREEMENT_TOL,
        max_disagreement,
        tolerance: AGREEMENT_TOL,
        per_component,
    })
}

/// [`drift_variance`] for a function carried by the spectral digraph.
pub fn drift_variance_fn(spectral: &SpectralData, f: &CombableFunction) -> Result<CltReport> {
    if f.digraph() != &spectral.digraph {
        return Err(Error::MismatchedDigraph);
    }
    drift_variance(spectral, &f.dphi)
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub exact_mean: Option<String>,
    pub exact_variance: Option<String>,
}

fn propagate<T: Scalar>(n: &Matrix<T>, dphi: &[i64], steps: usize) -> (T, T) {
    let k = n.rows();
    let f: Vec<T> = dphi.iter().map(|&x| T::from_i64(x)).collect();
    let mut p = vec![T::zero(); k];
    p[INITIAL] = T::one();
    let mut m1: Vec<T> = (0..k).map(|v| f[v].clone() * p[v].clone()).collect();
    let mut m2: Vec<T> = (0..k).map(|v| f[v].clone() * m1[v].clone()).collect();
    let two = T::from_i64(2);
    for _ in 0..steps {
        let np = n.vec_mul(&p);
        let nm1 = n.vec_mul(&m1);
        let nm2 = n.vec_mul(&m2);
        m2 = (0..k)
            .map(|w| {
                nm2[w].clone()
                    + two.clone() * f[w].clone() * nm1[w].clone()
                    + f[w].clone() * f[w].clone() * np[w].clone()
            })
            .collect();
        m1 = (0..k).map(|w| nm1[w].clone() + f[w].clone() * np[w].clone()).collect();
        p = np;
    }
    let mean = sum(&m1);
    let second = sum(&m2);
    let variance = second - mean.clone() * mean.clone();
    (mean, variance)
}

/// Mean and variance of `Σ_{t=0}^{n} dφ(X_t)` for the chain started at `v₁`,
/// by propagating the law and the first two weighted moments through `N`.
pub fn moment_oracle(spectral: &SpectralData, dphi: &[i64], n: usize) -> Result<MomentReport> {
    check_weights(spectral, dphi)?;
    Ok(match &spectral.exact {
        Some(chain) => {
            let (m, v) = propagate(&chain.n, dphi, n);
            MomentReport {
                n,
                mean: m.to_f64(),
                variance: v.to_f64(),
                exact_mean: Some(m.to_string()),
                exact_variance: Some(v.to_string()),
            }
        }
        None => {
            let (mean, variance) = propagate(&spectral.n, dphi, n);
            MomentReport {
                n,
                mean,
                variance,
                exact_mean: None,
                exact_variance: None,
            }
        }
    })
}

const CHUNK: usize = 1024;

/// Per-vertex cumulative edge probabilities `ρ(1)_j / (λ ρ(1)_i)`.
pub struct Sampler<'a> {
    spectral: &'a SpectralData,
    table: Vec<Vec<(f64, Letter, usize)>>,
}

impl<'a> Sampler<'a> {
    pub fn new(spectral: &'a SpectralData) -> Self {
        let g = &spectral.digraph;
        let table = (0..g.vertex_count())
            .map(|i| {
                let rho = spectral.rho_one[i];
                if !spectral.rho_positive(i) {
                    return Vec::new();
                }
                let mut acc = 0.0;
                let mut row: Vec<(f64, Letter, usize)> = g
                    .out_edges(i)
                    .iter()
                    .filter(|&&(_, j)| spectral.rho_positive(j))
                    .map(|&(l, j)| {
                        acc += spectral.rho_one[j] / (spectral.lambda * rho);
                        (acc, l, j)
                    })
                    .collect();
                if let Some(last) = row.last_mut() {
                    last.0 = f64::INFINITY;
                }
                row
            })
            .collect();
        Sampler { spectral, table }
    }

    fn rng(seed: u64, chunk: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        rng
    }

    /// Walks `n` steps from `v₁`, reporting each edge.
    fn walk(&self, rng: &mut ChaCha8Rng, n: usize, mut visit: impl FnMut(Letter, usize)) -> Result<()> {
        let mut v = INITIAL;
        for _ in 0..n {
            let row = &self.table[v];
            if row.is_empty() {
                return Err(Error::DeadEnd(v));
            }
            let u: f64 = rng.random();
            let &(_, l, w) = row.iter().find(|e| u < e.0).expect("last threshold is infinite");
            visit(l, w);
            v = w;
        }
        Ok(())
    }

    fn chunks<R: Send>(
        &self,
        count: usize,
        seed: u64,
        job: impl Fn(&mut ChaCha8Rng) -> Result<R> + Sync,
    ) -> Result<Vec<R>> {
        let chunks: Vec<Vec<R>> = (0..count.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = Self::rng(seed, c);
                let size = CHUNK.min(count - c * CHUNK);
                (0..size).map(|_| job(&mut rng)).collect::<Result<Vec<R>>>()
            })
            .collect::<Result<_>>()?;
        Ok(chunks.into_iter().flatten().collect())
    }

    /// `Σ_{t=0}^{n} dφ(X_t)` for `count` independent walks.
    pub fn values(&self, dphi: &[i64], n: usize, count: usize, seed: u64) -> Result<Vec<i64>> {
        check_weights(self.spectral, dphi)?;
        self.chunks(count, seed, |rng| {
            let mut s = dphi[INITIAL];
            self.walk(rng, n, |_, w| s += dphi[w])?;
            Ok(s)
        })
    }

    /// Accepted words of length `n` and their end vertices.
    pub fn words(&self, n: usize, count: usize, seed: u64) -> Result<Vec<(Vec<Letter>, usize)>> {
        self.chunks(count, seed, |rng| {
            let mut word = Vec::with_capacity(n);
            let mut end = INITIAL;
            self.walk(rng, n, |l, w| {
                word.push(l);
                end = w;
            })?;
            Ok((word, end))
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleBatch {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub words: Vec<String>,
    pub end_vertices: Vec<usize>,
    pub phi_values: Vec<i64>,
}

/// Words of length `n` drawn from the chain `N` started at `v₁`, with the
/// values of `dφ` along them when weights are given.
pub fn sample(spectral: &SpectralData, dphi: Option<&[i64]>, n: usize, count: usize, seed: u64) -> Result<SampleBatch> {
    let sampler = Sampler::new(spectral);
    let walked = sampler.words(n, count, seed)?;
    let alphabet = spectral.digraph.alphabet();
    let phi_values = match dphi {
        Some(d) => {
            check_weights(spectral, d)?;
            walked
                .iter()
                .map(|(w, _)| {
                    let path = spectral.digraph.accept(w).expect("sampled words are accepted");
                    path.vertices.iter().map(|&v| d[v]).sum()
                })
                .collect()
        }
        None => Vec::new(),
    };
    Ok(SampleBatch {
        n,
        count,
        seed,
        words: walked.iter().map(|(w, _)| alphabet.format(w)).collect(),
        end_vertices: walked.iter().map(|&(_, e)| e).collect(),
        phi_values,
    })
}

/// One accepted word of the given length.
pub fn sample_ray(spectral: &SpectralData, length: usize, seed: u64) -> Result<Vec<Letter>> {
    let sampler = Sampler::new(spectral);
    let mut rng = Sampler::rng(seed, 0);
    let mut word = Vec::with_capacity(length);
    sampler.walk(&mut rng, length, |l, _| word.push(l))?;
    Ok(word)
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalReport {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub drift: f64,
    pub sigma: f64,
    /// `"normal"` or `"degenerate"` (σ = 0).
    pub mode: String,
    pub moments: Moments,
    pub ks: Option<LatticeKs>,
    pub max_abs_standardized: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Standardizes `(φ̄ₙ − nE)/√(nσ²)` over sampled words and compares with the
/// standard normal. With `σ = 0` the values are only centred and scaled by `√n`.
pub fn empirical_clt(
    spectral: &SpectralData,
    dphi: &[i64],
    drift: f64,
    sigma: f64,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<EmpiricalReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let values = Sampler::new(spectral).values(dphi, n, count, seed)?;
    let center = n as f64 * drift;
    let degenerate = sigma <= VARIANCE_CLAMP.sqrt();
    let scale = if degenerate {
        (n as f64).sqrt()
    } else {
        (n as f64).sqrt() * sigma
    };
    let z: Vec<f64> = values.iter().map(|&v| (v as f64 - center) / scale).collect();
    let max_abs_standardized = z.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(EmpiricalReport {
        n,
        count,
        seed,
        drift,
        sigma,
        mode: if degenerate { "degenerate" } else { "normal" }.into(),
        moments: moments(&z),
        ks: (!degenerate && !values.is_empty()).then(|| lattice_ks(&values, center, scale)),
        max_abs_standardized,
        histogram: histogram(&z, -5.0, 5.0, 40),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TypicalityProfile {
    pub length: usize,
    pub n: usize,
    pub m: usize,
    pub drift: f64,
    pub values: Vec<f64>,
    pub moments: Moments,
}

/// `(φ(γ_{i+n}) − φ(γ_i) − nE)/√n` for `i = 0, …, m − 1` along an accepted word.
pub fn typicality_profile(f: &CombableFunction, gamma: &[Letter], n: usize, m: usize, drift: f64) -> Result<TypicalityProfile> {
    typicality_from_weights(f.digraph(), &f.dphi, gamma, n, m, drift)
}

pub fn typicality_from_weights(
    digraph: &crate::digraph::LabeledDigraph,
    dphi: &[i64],
    gamma: &[Letter],
    n: usize,
    m: usize,
    drift: f64,
) -> Result<TypicalityProfile> {
    if gamma.len() < n + m {
        return Err(Error::TooShort {
            len: gamma.len(),
            needed: n + m,
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let path = digraph.accept(gamma).map_err(|r| Error::NotAccepted {
        word: digraph.alphabet().format(gamma),
        index: r.index,
    })?;
    let mut prefix = Vec::with_capacity(path.vertices.len());
    let mut s = 0i64;
    for &v in &path.vertices {
        s += dphi[v];
        prefix.push(s);
    }
    let root = (n as f64).sqrt();
    let values: Vec<f64> = (0..m)
        .map(|i| ((prefix[i + n] - prefix[i]) as f64 - n as f64 * drift) / root)
        .collect();
    Ok(TypicalityProfile {
        length: gamma.len(),
        n,
        m,
        drift,
        moments: moments(&values),
        values,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareConfig {
    /// Radius to which the synthesized `|·|_{S₂}` is verified.
    pub synthesis_radius: usize,
    pub max_depth: usize,
    /// Radius of the balls whose sphere ratios estimate `λ₁`, `λ₂`.
    pub growth_radius: usize,
    /// Lengths whose deviations fit `K`.
    pub fit_lengths: Vec<usize>,
    /// Length at which the fitted `K` is checked.
    pub check_length: Option<usize>,
    /// Fraction of geodesics kept, centred by `|·|_{S₂}` rank.
    pub central_fraction: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            synthesis_radius: 8,
            max_depth: 3,
            growth_radius: 8,
            fit_lengths: (6..=11).collect(),
            check_length: Some(12),
            central_fraction: 0.95,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviationRow {
    pub n: usize,
    pub count: usize,
    pub kept: usize,
    /// `max |n − λ₁,₂|g|_{S₂}|` over the kept geodesics.
    pub max_deviation: f64,
    /// Mean of `|n − λ₁,₂|g|_{S₂}|` over all geodesics of length `n`.
    pub mean_abs_deviation: f64,
    pub k_n: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub s1: String,
    pub s2: String,
    pub orientation: String,
    pub synthesis_depth: usize,
    pub drift: f64,
    pub exact_drift: Option<String>,
    pub sigma: f64,
    pub lambda_12: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
    /// `log λ₁ / log λ₂`.
    pub growth_ratio: f64,
    pub inequality_holds: bool,
    pub deviations: Vec<DeviationRow>,
    pub fitted_k: Option<f64>,
    pub check: Option<DeviationRow>,
    pub check_passed: Option<bool>,
}

fn combing_for(oracle: Arc<GroupOracle>, genset: &str, radius: usize) -> Result<Combing> {
    if oracle.is_free() && genset == STANDARD {
        reduced_word_combing(oracle, genset)
    } else {
        Ok(lex_first_combing(oracle, genset, None, 1, radius, 4)?.0)
    }
}

fn growth_rate(oracle: &GroupOracle, genset: &str, radius: usize) -> Result<f64> {
    let ball = oracle.ball(genset, radius)?;
    let sizes = ball.sphere_sizes();
    let r = radius.min(sizes.len() - 1);
    if r == 0 || sizes[r - 1] == 0 {
        return Err(Error::InsufficientGrowth(0.0));
    }
    Ok(sizes[r] as f64 / sizes[r - 1] as f64)
}

/// `|g|_{S₂}` for every accepted word of length `n`, by depth-first search.
fn layer_lengths(combing: &Combing, genset: &str, n: usize) -> Result<Vec<i64>> {
    let oracle = &combing.oracle;
    let set = oracle.genset(&combing.genset)?;
    let g = &combing.digraph;
    let split = n.min(3);
    let mut prefixes: Vec<(usize, Element)> = vec![(INITIAL, Element::identity())];
    for _ in 0..split {
        prefixes = prefixes
            .iter()
            .flat_map(|(v, x)| g.out_edges(*v).iter().map(move |&(l, w)| (w, oracle.mul(x, set.value(l)))))
            .collect();
    }
    let parts: Vec<Vec<i64>> = prefixes
        .par_iter()
        .map(|(v, x)| {
            let mut out = Vec::new();
            let mut stack = vec![(*v, x.clone(), split)];
            while let Some((v, x, d)) = stack.pop() {
                if d == n {
                    out.push(oracle.word_length(&x, genset)? as i64);
                    continue;
                }
                for &(l, w) in g.out_edges(v) {
                    stack.push((w, oracle.mul(&x, set.value(l)), d + 1));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn deviation_row(mut lengths: Vec<i64>, n: usize, lambda_12: f64, fraction: f64) -> DeviationRow {
    let count = lengths.len();
    let dev = |l: i64| (n as f64 - lambda_12 * l as f64).abs();
    let mean_abs_deviation = lengths.iter().map(|&l| dev(l)).sum::<f64>() / count.max(1) as f64;
    lengths.sort_unstable();
    let trim = ((1.0 - fraction) / 2.0 * count as f64).floor() as usize;
    let kept = &lengths[trim..count - trim];
    let max_deviation = kept.iter().map(|&l| dev(l)).fold(0.0, f64::max);
    DeviationRow {
        n,
        count,
        kept: kept.len(),
        max_deviation,
        mean_abs_deviation,
        k_n: max_deviation / (n as f64).sqrt(),
    }
}

/// Drift of `|·|_{S₂}` along `S₁`-geodesics and the constant `λ₁,₂ = 1/E`, so
/// that `|g|_{S₁} ≈ λ₁,₂ |g|_{S₂}` for typical `g`.
pub fn compare_gensets(oracle: Arc<GroupOracle>, s1: &str, s2: &str, config: &CompareConfig) -> Result<ComparisonReport> {
    oracle.genset(s2)?;
    let combing = combing_for(oracle.clone(), s1, config.synthesis_radius)?;
    let length = {
        let o = oracle.clone();
        let s2 = s2.to_string();
        move |g: &Element| -> Result<i64> { Ok(o.word_length(g, &s2)? as i64) }
    };
    let mut last = None;
    let mut found = None;
    for depth in 1..=config.max_depth.max(1) {
        match synthesize_dphi(&combing, &length as &dyn GroupFunction, depth, config.synthesis_radius) {
            Ok(f) => {
                found = Some((depth, f));
                break;
            }
            Err(e) => last = Some(e),
        }
    }
    let (synthesis_depth, f) = match found {
        Some(x) => x,
        None => return Err(last.expect("at least one depth tried")),
    };
    let spectral = analyze(f.digraph())?;
    let clt = drift_variance(&spectral, &f.dphi)?;
    if clt.drift <= 0.0 {
        return Err(Error::InvalidArgument(format!("nonpositive drift {}", clt.drift)));
    }
    let lambda_12 = 1.0 / clt.drift;
    let lambda_1 = growth_rate(&oracle, s1, config.growth_radius)?;
    let lambda_2 = growth_rate(&oracle, s2, config.growth_radius)?;
    let growth_ratio = lambda_1.ln() / lambda_2.ln();
    let deviations = config
        .fit_lengths
        .iter()
        .map(|&n| Ok(deviation_row(layer_lengths(&combing, s2, n)?, n, lambda_12, config.central_fraction)))
        .collect::<Result<Vec<_>>>()?;
    let fitted_k = deviations.iter().map(|r| r.k_n).reduce(f64::max);
    let check = config
        .check_length
        .map(|n| Ok::<_, Error>(deviation_row(layer_lengths(&combing, s2, n)?, n, lambda_12, config.central_fraction)))
        .transpose()?;
    let check_passed = match (&check, fitted_k) {
        (Some(row), Some(k)) => Some(row.max_deviation <= k * (row.n as f64).sqrt()),
        _ => None,
    };
    Ok(ComparisonReport {
        s1: s1.to_string(),
        s2: s2.to_string(),
        orientation: "lambda_12 = 1 / E, E the drift of |.|_S2 along S1-geodesics".into(),
        synthesis_depth,
        drift: clt.drift,
        exact_drift: clt.exact_drift,
        sigma: clt.sigma,
        lambda_12,
        lambda_1,
        lambda_2,
        growth_ratio,
        inequality_holds: lambda_12 > growth_ratio,
        deviations,
        fitted_k,
        check,
        check_passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::combable::word_length_function;
    use crate::digraph::LabeledDigraph;
    use crate::fixtures;

    /// `v₁ → x, y` and a complete two-vertex core with loops: fair coin flips.
    pub(crate) fn coin() -> LabeledDigraph {
        LabeledDigraph::from_triples(
            3,
            &[(0, 1, "p"), (0, 2, "q"), (1, 1, "p"), (1, 2, "q"), (2, 1, "p"), (2, 2, "q")],
            Alphabet::new(["p", "q"]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn coin_exact() {
        let s = analyze(&coin()).unwrap();
        let r = drift_variance(&s, &[0, 0, 1]).unwrap();
        assert!(r.exact);
        assert_eq!(r.exact_drift.as_deref(), Some("1/2"));
        assert_eq!(r.exact_variance.as_deref(), Some("1/4"));
        let m = moment_oracle(&s, &[0, 0, 1], 10).unwrap();
        assert_eq!(m.exact_variance.as_deref(), Some("5/2"));
        assert_eq!(m.exact_mean.as_deref(), Some("5"));
    }

    #[test]
    fn word_length_is_degenerate() {
        let f = word_length_function(&fixtures::fixture("F2_standard").unwrap().combing);
        let s = analyze(f.digraph()).unwrap();
        let r = drift_variance_fn(&s, &f).unwrap();
        assert_eq!(r.drift, 1.0);
        assert_eq!(r.sigma, 0.0);
        let m = moment_oracle(&s, &f.dphi, 7).unwrap();
        assert_eq!(m.exact_mean.as_deref(), Some("7"));
        assert_eq!(m.exact_variance.as_deref(), Some("0"));
        let e = empirical_clt(&s, &f.dphi, r.drift, r.sigma, 50, 100, 1).unwrap();
        assert_eq!(e.mode, "degenerate");
        assert_eq!(e.max_abs_standardized, 0.0);
    }

    #[test]
    fn mismatched_weights() {
        let s = analyze(&coin()).unwrap();
        assert!(matches!(drift_variance(&s, &[0, 1]), Err(Error::MismatchedDigraph)));
    }

    #[test]
    fn float_mode_matches_exact() {
        let s = analyze(&coin()).unwrap();
        let mut float = s.clone();
        float.exact = None;
        let a = drift_variance(&s, &[0, 3, -1]).unwrap();
        let b = drift_variance(&float, &[0, 3, -1]).unwrap();
        assert!((a.drift - b.drift).abs() < 1e-12);
        assert!((a.variance - b.variance).abs() < 1e-12);
        assert_eq!(a.exact_variance.as_deref(), Some("4"));
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = analyze(&fixtures::f2_reduced_digraph()).unwrap();
        let a = sample(&s, None, 12, 3000, 7).unwrap();
        let b = sample(&s, None, 12, 3000, 7).unwrap();
        assert_eq!(a.words, b.words);
        assert_ne!(a.words, sample(&s, None, 12, 3000, 8).unwrap().words);
        assert!(a.words.iter().all(|w| w.len() == 12));
        assert!(sample(&s, None, 5, 0, 1).unwrap().words.is_empty());
    }

    #[test]
    fn first_letter_uniform() {
        let s = analyze(&fixtures::f2_reduced_digraph()).unwrap();
        let count = 400_000;
        let batch = sample(&s, None, 1, count, 11).unwrap();
        let p = 0.25;
        let se = (p * (1.0 - p) / count as f64).sqrt();
        for l in ["a", "A", "b", "B"] {
            let freq = batch.words.iter().filter(|w| *w == l).count() as f64 / count as f64;
            assert!((freq - p).abs() < 3.0 * se, "{l} {freq}");
        }
    }

    #[test]
    fn dead_end() {
        let g = LabeledDigraph::from_triples(
            3,
            &[(0, 1, "x"), (1, 1, "x"), (1, 2, "y")],
            Alphabet::new(["x", "y"]).unwrap(),
        )
        .unwrap();
        let s = analyze(&g).unwrap();
        assert!(Sampler::new(&s).values(&[0, 1, 0], 5, 3, 0).is_ok());
        let mut broken = s.clone();
        broken.rho_one[1] = 0.0;
        assert!(matches!(Sampler::new(&broken).values(&[0, 1, 0], 5, 3, 0), Err(Error::DeadEnd(_))));
    }

    #[test]
    fn typicality_too_short() {
        let f = word_length_function(&fixtures::fixture("F2_standard").unwrap().combing);
        let s = analyze(f.digraph()).unwrap();
        let ray = sample_ray(&s, 50, 3).unwrap();
        let p = typicality_profile(&f, &ray, 10, 40, 1.0).unwrap();
        assert_eq!(p.values.len(), 40);
        assert!(p.values.iter().all(|&v| v == 0.0));
        assert!(matches!(typicality_profile(&f, &ray, 10, 41, 1.0), Err(Error::TooShort { .. })));
    }

    #[test]
    fn scale_equivariance() {
        let s = analyze(&coin()).unwrap();
        let a = drift_variance(&s, &[0, 1, -2]).unwrap();
        let b = drift_variance(&s, &[0, 3, -6]).unwrap();
        assert!((b.drift - 3.0 * a.drift).abs() < 1e-12);
        assert!((b.sigma - 3.0 * a.sigma).abs() < 1e-12);
    }

    #[test]
    fn identical_gensets() {
        let o = Arc::new(GroupOracle::free(2).unwrap());
        let config = CompareConfig {
            synthesis_radius: 5,
            growth_radius: 5,
            fit_lengths: vec![4, 5],
            check_length: None,
            ..CompareConfig::default()
        };
        let r = compare_gensets(o, STANDARD, STANDARD, &config).unwrap();
        assert_eq!(r.drift, 1.0);
        assert_eq!(r.lambda_12, 1.0);
        assert!(r.deviations.iter().all(|d| d.max_deviation == 0.0));
    }

    #[test]
    fn transition_frequencies_match_chain() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let g = fixtures::psl2z_digraph();
        let s = analyze(&g).unwrap();
        let batch = sample(&s, None, 8, 100_000, 21).unwrap();
        let k = g.vertex_count();
        let mut counts = vec![vec![0usize; k]; k];
        for w in &batch.words {
            let word = g.alphabet().parse(w).unwrap();
            let path = g.accept(&word).unwrap();
            for pair in path.vertices.windows(2) {
                counts[pair[0]][pair[1]] += 1;
            }
        }
        let (mut chi2, mut df) = (0.0, 0usize);
        for i in s.mu_support.iter().copied() {
            let total: usize = counts[i].iter().sum();
            let row = s.n.row(i);
            let cells: Vec<usize> = (0..k).filter(|&j| row[j] > 0.0).collect();
            for &j in &cells {
                let expected = total as f64 * row[j];
                chi2 += (counts[i][j] as f64 - expected).powi(2) / expected;
            }
            assert!((0..k).all(|j| row[j] > 0.0 || counts[i][j] == 0));
            df += cells.len() - 1;
        }
        let critical = ChiSquared::new(df as f64).unwrap().inverse_cdf(0.9999);
        assert!(chi2 < critical, "chi2 {chi2} df {df} critical {critical}");
    }

    #[test]
    fn moments_approach_drift_and_variance() {
        let g = fixtures::psl2z_digraph();
        let s = analyze(&g).unwrap();
        assert!(s.exact.is_none());
        let dphi = [0, 1, 0, -1];
        let r = drift_variance(&s, &dphi).unwrap();
        let gaps: Vec<(f64, f64)> = [10usize, 20, 40, 80, 160]
            .iter()
            .map(|&n| {
                let m = moment_oracle(&s, &dphi, n).unwrap();
                let nf = n as f64;
                ((m.mean / nf - r.drift).abs() * nf, (m.variance / nf - r.variance).abs() * nf)
            })
            .collect();
        let (c_mean, c_var) = (gaps[0].0 * 2.0 + 1.0, gaps[0].1 * 2.0 + 1.0);
        assert!(gaps.iter().all(|&(a, b)| a <= c_mean && b <= c_var), "{gaps:?}");
        assert!(r.variance > 0.0);
    }

    #[test]
    fn counting_quasimorphism_is_centred() {
        use crate::combable::synthesize_dphi;
        use crate::quasimorphism::{CountingQuasimorphism, Pattern};
        let f2 = fixtures::fixture("F2_standard").unwrap();
        let o = f2.oracle().clone();
        let phi = CountingQuasimorphism::new(o.clone(), Pattern::parse(&o, "ab").unwrap()).unwrap();
        let f = synthesize_dphi(&f2.combing, &phi, 1, 8).unwrap();
        let s = analyze(f.digraph()).unwrap();
        let n = 100;
        let count = 20_000;
        let values = Sampler::new(&s).values(&f.dphi, n, count, 4).unwrap();
        let scaled: Vec<f64> = values.iter().map(|&v| v as f64 / (n as f64).sqrt()).collect();
        let m = crate::stats::moments(&scaled);
        let se = (m.variance / count as f64).sqrt();
        assert!(m.mean.abs() < 5.0 * se, "{m:?}");
    }
}
