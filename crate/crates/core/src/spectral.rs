//! Perron–Frobenius data of a digraph: the growth rate `λ`, the eigenprojections
//! `ρ` and `ℓ`, the stochastic matrix `N` and its stationary measure `μ`.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Serialize, Serializer};

use crate::alphabet::Letter;
use crate::digraph::{ComponentDecomposition, LabeledDigraph, INITIAL};
use crate::error::{Error, Result};
use crate::linalg::{dot, sum, to_f64_vec, Matrix, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralConfig {
    /// Relative gap between the Collatz–Wielandt bounds at which power iteration stops.
    pub eigen_tol: f64,
    /// Relative tolerance for counting a component's Perron root as equal to `λ`.
    pub tie_tol: f64,
    /// Pivot tolerance for floating-point null spaces.
    pub null_tol: f64,
    /// Entries of `ρ(1)` at or below this count as zero.
    pub support_tol: f64,
    pub max_iterations: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            eigen_tol: 1e-12,
            tie_tol: 1e-9,
            null_tol: 1e-9,
            support_tol: 1e-12,
            max_iterations: 1_000_000,
        }
    }
}

/// Perron root of a nonnegative irreducible matrix.
///
/// Iterates with `A + I`, which is primitive, and brackets the root between the
/// Collatz–Wielandt bounds.
pub fn perron_root(a: &Matrix<f64>) -> Result<f64> {
    perron_root_with(a, SpectralConfig::default())
}

pub fn perron_root_with(a: &Matrix<f64>, config: SpectralConfig) -> Result<f64> {
    let n = a.rows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = vec![1.0; n];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..config.max_iterations {
        let mut y = a.mul_vec(&x);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += xi;
        }
        lo = f64::INFINITY;
        hi = 0.0f64;
        for (yi, xi) in y.iter().zip(&x) {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo <= config.eigen_tol * hi {
            return Ok((lo + hi) / 2.0 - 1.0);
        }
        let norm: f64 = y.iter().sum();
        x = y.into_iter().map(|v| v / norm).collect();
    }
    if hi - lo <= 1e-9 * hi {
        Ok((lo + hi) / 2.0 - 1.0)
    } else {
        Err(Error::NotConverged(config.max_iterations))
    }
}

/// Largest Perron root over the recurrent components (`0` if there are none).
pub fn perron(g: &LabeledDigraph) -> Result<f64> {
    let d = g.components();
    if d.xi.iter().any(|x| x.is_nan()) {
        return Err(Error::NotConverged(SpectralConfig::default().max_iterations));
    }
    Ok(d.xi.iter().copied().fold(0.0, f64::max))
}

pub fn transition_matrix<T: Scalar>(g: &LabeledDigraph) -> Matrix<T> {
    let counts = g.adjacency_counts();
    Matrix::from_fn(g.vertex_count(), g.vertex_count(), |i, j| T::from_i64(counts[i][j] as i64))
}

/// Projections onto the right and left `λ`-eigenspaces along the range of
/// `M − λI` (respectively `Mᵀ − λI`).
#[derive(Clone, Debug)]
pub struct Projector<T> {
    /// Right eigenvectors as columns of an `n × k` matrix.
    kernel: Matrix<T>,
    /// Left eigenvectors as columns of an `n × k` matrix.
    cokernel: Matrix<T>,
    /// `(WᵀK)⁻¹`
    inverse_pairing: Matrix<T>,
}

impl<T: Scalar> Projector<T> {
    pub fn new(m: &Matrix<T>, lambda: T, tol: f64) -> Result<Self> {
        let n = m.rows();
        let a = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                m[(i, j)].clone() - lambda.clone()
            } else {
                m[(i, j)].clone()
            }
        });
        let ks = a.null_space(tol);
        let ws = a.transpose().null_space(tol);
        if ks.is_empty() || ks.len() != ws.len() {
            return Err(Error::DegenerateEigenstructure(format!(
                "right and left eigenspaces have dimensions {} and {}",
                ks.len(),
                ws.len()
            )));
        }
        let k = ks.len();
        let kernel = Matrix::from_fn(n, k, |i, j| ks[j][i].clone());
        let cokernel = Matrix::from_fn(n, k, |i, j| ws[j][i].clone());
        let pairing = cokernel.transpose().matmul(&kernel);
        let inverse_pairing = pairing
            .solve(&Matrix::identity(k), tol)
            .ok_or_else(|| {
                Error::DegenerateEigenstructure(
                    "eigenspace meets the range of M − λI (Jordan block at λ)".into(),
                )
            })?;
        Ok(Projector {
            kernel,
            cokernel,
            inverse_pairing,
        })
    }

    pub fn dimension(&self) -> usize {
        self.kernel.cols()
    }

    /// `ρ(v) = K (WᵀK)⁻¹ Wᵀ v`
    pub fn rho(&self, v: &[T]) -> Vec<T> {
        let c = self.cokernel.transpose().mul_vec(v);
        let c = self.inverse_pairing.mul_vec(&c);
        self.kernel.mul_vec(&c)
    }

    /// `ℓ(v) = W (KᵀW)⁻¹ Kᵀ v`
    pub fn ell(&self, v: &[T]) -> Vec<T> {
        let c = self.kernel.transpose().mul_vec(v);
        let c = self.inverse_pairing.transpose().mul_vec(&c);
        self.cokernel.mul_vec(&c)
    }
}

/// `n⁻¹ Σ_{i<n} λ⁻ⁱ Mⁱ v`, the averaged partial sums whose limit is `ρ(v)`.
pub fn cesaro_rho(m: &Matrix<f64>, lambda: f64, v: &[f64], n: usize) -> Vec<f64> {
    let mut term = v.to_vec();
    let mut acc = vec![0.0; v.len()];
    for _ in 0..n {
        for (a, t) in acc.iter_mut().zip(&term) {
            *a += t;
        }
        term = m.mul_vec(&term).into_iter().map(|x| x / lambda).collect();
    }
    acc.into_iter().map(|a| a / n as f64).collect()
}

/// The stochastic matrix and stationary measure built from `ρ(1)` and `ℓ(v₁)`.
#[derive(Clone, Debug)]
pub struct Chain<T> {
    pub lambda: T,
    pub rho_one: Vec<T>,
    pub ell_v1: Vec<T>,
    pub n: Matrix<T>,
    pub mu: Vec<T>,
}

impl<T: Scalar> Chain<T> {
    pub fn new(m: &Matrix<T>, lambda: T, tol: f64, support_tol: f64) -> Result<Self> {
        let size = m.rows();
        let projector = Projector::new(m, lambda.clone(), tol)?;
        let ones = vec![T::one(); size];
        let mut unit = vec![T::zero(); size];
        unit[INITIAL] = T::one();
        let rho_one = projector.rho(&ones);
        let ell_v1 = projector.ell(&unit);
        let cutoff = support_tol.max(tol);
        let scale = rho_one.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
        let positive = |x: &T| !x.negligible(scale, cutoff) && x.to_f64() > 0.0;
        let n = Matrix::from_fn(size, size, |i, j| {
            if positive(&rho_one[i]) {
                m[(i, j)].clone() * rho_one[j].clone() / (lambda.clone() * rho_one[i].clone())
            } else if i == j {
                T::one()
            } else {
                T::zero()
            }
        });
        let raw: Vec<T> = rho_one
            .iter()
            .zip(&ell_v1)
            .map(|(r, l)| {
                let p = r.clone() * l.clone();
                if !positive(r) || p.negligible(1.0, support_tol) {
                    T::zero()
                } else {
                    p
                }
            })
            .collect();
        let total = sum(&raw);
        if total.negligible(1.0, support_tol) {
            return Err(Error::DegenerateEigenstructure("μ has zero mass".into()));
        }
        let mu = raw.into_iter().map(|x| x / total.clone()).collect();
        Ok(Chain {
            lambda,
            rho_one,
            ell_v1,
            n,
            mu,
        })
    }

    pub fn to_f64(&self) -> Chain<f64> {
        Chain {
            lambda: self.lambda.to_f64(),
            rho_one: to_f64_vec(&self.rho_one),
            ell_v1: to_f64_vec(&self.ell_v1),
            n: self.n.map(|x| x.to_f64()),
            mu: to_f64_vec(&self.mu),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportReport {
    pub lambda_components: Vec<usize>,
    /// Vertices of the `λ`-components.
    pub support: Vec<usize>,
    /// Two `λ`-components joined by a directed path, if any.
    pub connected_pair: Option<(usize, usize)>,
    pub almost_semisimple: bool,
}

pub fn support_analysis(
    g: &LabeledDigraph,
    components: &ComponentDecomposition,
    lambda: f64,
    tie_tol: f64,
) -> SupportReport {
    let lambda_components = components.top_components(lambda, tie_tol);
    let mut support: Vec<usize> = lambda_components
        .iter()
        .flat_map(|&c| components.components[c].iter().copied())
        .collect();
    support.sort_unstable();
    let connected_pair = components.connected_top_components(g, lambda, tie_tol);
    SupportReport {
        lambda_components,
        support,
        connected_pair,
        almost_semisimple: connected_pair.is_none() && lambda > 1.0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralData {
    pub lambda: f64,
    /// `λ` when it is an integer; the chain is then also computed exactly.
    pub exact_lambda: Option<i64>,
    pub rho_one: Vec<f64>,
    pub ell_v1: Vec<f64>,
    #[serde(serialize_with = "serialize_matrix")]
    pub n: Matrix<f64>,
    pub mu: Vec<f64>,
    /// Vertices with `μ > 0`.
    pub mu_support: Vec<usize>,
    pub components: ComponentDecomposition,
    pub support: SupportReport,
    pub config: SpectralConfig,
    #[serde(skip)]
    pub exact: Option<Chain<BigRational>>,
    #[serde(skip)]
    pub digraph: LabeledDigraph,
}

fn serialize_matrix<S: Serializer>(m: &Matrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<&[f64]> = (0..m.rows()).map(|i| m.row(i)).collect();
    rows.serialize(s)
}

pub fn analyze(g: &LabeledDigraph) -> Result<SpectralData> {
    analyze_with(g, SpectralConfig::default())
}

pub fn analyze_with(g: &LabeledDigraph, config: SpectralConfig) -> Result<SpectralData> {
    let components = g.components();
    if components.xi.iter().any(|x| x.is_nan()) {
        return Err(Error::NotConverged(config.max_iterations));
    }
    let lambda = components.xi.iter().copied().fold(0.0, f64::max);
    if lambda <= 0.0 {
        return Err(Error::InsufficientGrowth(lambda));
    }
    let support = support_analysis(g, &components, lambda, config.tie_tol);
    let rounded = lambda.round();
    let exact_lambda = ((lambda - rounded).abs() <= 1e-9 * lambda).then_some(rounded as i64);
    let (exact, float_chain) = match exact_lambda {
        Some(l) => {
            let m: Matrix<BigRational> = transition_matrix(g);
            let lam = BigRational::from_integer(BigInt::from(l));
            let chain = Chain::new(&m, lam, 0.0, 0.0)?;
            let f = chain.to_f64();
            (Some(chain), f)
        }
        None => {
            let m: Matrix<f64> = transition_matrix(g);
            (None, Chain::new(&m, lambda, config.null_tol, config.support_tol)?)
        }
    };
    let mu_support = (0..g.vertex_count()).filter(|&i| float_chain.mu[i] > 0.0).collect();
    Ok(SpectralData {
        lambda: exact_lambda.map(|l| l as f64).unwrap_or(lambda),
        exact_lambda,
        rho_one: float_chain.rho_one,
        ell_v1: float_chain.ell_v1,
        n: float_chain.n,
        mu: float_chain.mu,
        mu_support,
        components,
        support,
        config,
        exact,
        digraph: g.clone(),
    })
}

impl SpectralData {
    pub fn vertex_count(&self) -> usize {
        self.mu.len()
    }

    /// Whether `ρ(1)_i` is nonzero beyond round-off.
    pub fn rho_positive(&self, i: usize) -> bool {
        if self.exact.is_some() {
            return self.rho_one[i] > 0.0;
        }
        let scale = self.rho_one.iter().map(|x| x.abs()).fold(1.0, f64::max);
        self.rho_one[i] > self.config.support_tol.max(self.config.null_tol) * scale
    }

    /// `ν̂(cone(w)) = λ⁻ⁿ ρ(1)_{v_w}` for an accepted word of length `n`.
    pub fn cone_weight(&self, word: &[Letter]) -> Result<f64> {
        let path = self.digraph.accept(word).map_err(|r| Error::NotAccepted {
            word: self.digraph.alphabet().format(word),
            index: r.index,
        })?;
        Ok(self.lambda.powi(-(word.len() as i32)) * self.rho_one[path.end()])
    }

    /// Largest `|Σ_j N_ij − 1|` over rows.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.n.rows())
            .map(|i| (self.n.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|(μᵀN)_j − μ_j|`.
    pub fn stationarity_error(&self) -> f64 {
        let image = self.n.vec_mul(&self.mu);
        image
            .iter()
            .zip(&self.mu)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PoincareReport {
    pub lambda: f64,
    pub critical_exponent: f64,
    pub sphere_sizes: Vec<usize>,
    /// `|Gₙ| λ⁻ⁿ`
    pub terms: Vec<f64>,
    /// Partial sums of `ζ(log λ) = Σ |Gₙ| λ⁻ⁿ`.
    pub partial_sums: Vec<f64>,
    pub term_min: f64,
    pub term_max: f64,
}

/// Growth table from sphere sizes. `λ` defaults to the last sphere ratio.
pub fn poincare_diagnostics(sphere_sizes: &[usize], lambda: Option<f64>) -> PoincareReport {
    let r = sphere_sizes.len();
    let lambda = lambda.unwrap_or_else(|| {
        if r >= 2 && sphere_sizes[r - 2] > 0 {
            sphere_sizes[r - 1] as f64 / sphere_sizes[r - 2] as f64
        } else {
            1.0
        }
    });
    let terms: Vec<f64> = sphere_sizes
        .iter()
        .enumerate()
        .map(|(n, &s)| s as f64 * lambda.powi(-(n as i32)))
        .collect();
    let partial_sums = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let tail = &terms[1.min(r)..];
    PoincareReport {
        lambda,
        critical_exponent: lambda.ln(),
        sphere_sizes: sphere_sizes.to_vec(),
        term_min: tail.iter().copied().fold(f64::INFINITY, f64::min),
        term_max: tail.iter().copied().fold(0.0, f64::max),
        terms,
        partial_sums,
    }
}

/// `⟨ℓ(v), w⟩ − ⟨v, ρ(w)⟩`, zero by the transfer identity.
pub fn transfer_defect<T: Scalar>(p: &Projector<T>, v: &[T], w: &[T]) -> f64 {
    (dot(&p.ell(v), w) - dot(v, &p.rho(w))).to_f64().abs()
}
