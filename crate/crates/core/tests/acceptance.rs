use std::sync::Arc;
use std::time::{Duration, Instant};

use bicomb::alphabet::{Alphabet, Letter};
use bicomb::clt::{compare_gensets, drift_variance, empirical_clt, moment_oracle, CompareConfig, CltReport};
use bicomb::combable::{synthesize_dphi, word_length_function, CombableFunction};
use bicomb::combing::Combing;
use bicomb::digraph::{LabeledDigraph, SemisimplicityVerdict, INITIAL};
use bicomb::fixtures::{self, fixture, F2_ENLARGED};
use bicomb::group::{GroupOracle, STANDARD};
use bicomb::linalg::Matrix;
use bicomb::quasimorphism::{greedy_count, max_disjoint_count, CountingQuasimorphism, Pattern};
use bicomb::spectral::{analyze, transfer_defect, transition_matrix, Projector, SpectralData};
use bicomb::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(label: &str, got: f64, want: f64, tol: f64) -> std::result::Result<(), String> {
    ensure(
        (got - want).abs() <= tol,
        format!("{label}: got {got}, want {want} ± {tol:e}"),
    )
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        ensure(
            elapsed < limit,
            format!("runtime {elapsed:.2?} exceeds {limit:?}"),
        )?;
    }
    Ok(format!("{detail} [{elapsed:.2?}]"))
}

fn e(err: Error) -> String {
    err.to_string()
}

fn f2_combing() -> Combing {
    fixture("F2_standard").unwrap().combing
}

/// `φ_ab` synthesized on the reduced-word combing, with its chain and CLT report.
fn phi_ab() -> Result<(CombableFunction, SpectralData, CltReport), String> {
    let combing = f2_combing();
    let oracle = combing.oracle.clone();
    let pattern = Pattern::parse(&oracle, "ab").map_err(e)?;
    let phi = CountingQuasimorphism::new(oracle, pattern).map_err(e)?;
    let f = synthesize_dphi(&combing, &phi, 1, 8).map_err(e)?;
    let spectral = analyze(f.digraph()).map_err(e)?;
    let clt = drift_variance(&spectral, &f.dphi).map_err(e)?;
    Ok((f, spectral, clt))
}

fn coin() -> LabeledDigraph {
    LabeledDigraph::from_triples(
        3,
        &[(0, 1, "p"), (0, 2, "q"), (1, 1, "p"), (1, 2, "q"), (2, 1, "p"), (2, 2, "q")],
        Alphabet::new(["p", "q"]).unwrap(),
    )
    .unwrap()
}

fn criterion_1() -> Outcome {
    timed(Some(Duration::from_secs(1)), || {
        let s = analyze(&fixtures::f2_reduced_digraph()).map_err(e)?;
        within("lambda", s.lambda, 3.0, 1e-9)?;
        let rho_want = [4.0 / 3.0, 1.0, 1.0, 1.0, 1.0];
        let ell_want = [0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let rs = s.rho_one[1] / rho_want[1];
        let ls = s.ell_v1[1] / ell_want[1];
        for i in 0..5 {
            within(&format!("rho(1)[{i}]"), s.rho_one[i] / rs, rho_want[i], 1e-9)?;
            within(&format!("ell(v1)[{i}]"), s.ell_v1[i] / ls, ell_want[i], 1e-9)?;
            within(&format!("mu[{i}]"), s.mu[i], [0.0, 0.25, 0.25, 0.25, 0.25][i], 1e-10)?;
        }
        ensure(s.row_sum_error() <= 1e-12, format!("row sums off by {}", s.row_sum_error()))?;
        Ok(format!("lambda={} mu={:?}", s.lambda, s.mu))
    })
}

fn criterion_2() -> Outcome {
    timed(None, || {
        let f = word_length_function(&f2_combing());
        let s = analyze(f.digraph()).map_err(e)?;
        let r = drift_variance(&s, &f.dphi).map_err(e)?;
        ensure(r.exact_drift.as_deref() == Some("1"), format!("E = {:?}", r.exact_drift))?;
        ensure(r.exact_variance.as_deref() == Some("0"), format!("sigma^2 = {:?}", r.exact_variance))?;
        ensure(r.sigma == 0.0, "sigma not zero")?;
        let emp = empirical_clt(&s, &f.dphi, r.drift, r.sigma, 100, 10_000, 2).map_err(e)?;
        ensure(emp.max_abs_standardized == 0.0, format!("max |z| = {}", emp.max_abs_standardized))?;
        Ok("E=1 sigma=0, 10^4 standardized samples all 0".into())
    })
}

fn words(len: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..4).map(move |l| {
                    let mut w = w.clone();
                    w.push(Letter(l));
                    w
                })
            })
            .collect();
    }
    out
}

fn criterion_3() -> Outcome {
    use rayon::prelude::*;
    timed(Some(Duration::from_secs(120)), || {
        let patterns: Vec<Vec<Letter>> = words(2).into_iter().chain(words(3)).collect();
        let mut checked = 0usize;
        for len in 0..=10 {
            let ws = words(len);
            let bad = patterns
                .par_iter()
                .flat_map_iter(|p| ws.iter().map(move |w| (p, w)))
                .find_any(|(p, w)| greedy_count(w, p) != max_disjoint_count(w, p));
            if let Some((p, w)) = bad {
                return Err(format!("mismatch for pattern {p:?} on {w:?}"));
            }
            checked += ws.len() * patterns.len();
        }
        Ok(format!("{} patterns, {checked} (word, pattern) pairs", patterns.len()))
    })
}

fn criterion_4() -> Outcome {
    timed(None, || {
        let oracle = Arc::new(GroupOracle::free(2).map_err(e)?);
        let pattern = Pattern::parse(&oracle, "abab").map_err(e)?;
        let phi = CountingQuasimorphism::new(oracle.clone(), pattern).map_err(e)?;
        use bicomb::combable::GroupFunction;
        let mut rows = Vec::new();
        for n in 1..=5i64 {
            let alternating = |len: i64| -> String {
                let start = if len % 2 == 1 { 'b' } else { 'a' };
                (0..len)
                    .map(|i| if (i % 2 == 0) == (start == 'a') { 'a' } else { 'b' })
                    .collect()
            };
            let got: Vec<i64> = (1..=4)
                .map(|k| {
                    let w = alternating(4 * n + k);
                    phi.value(&oracle.evaluate_str(&w, STANDARD).unwrap()).unwrap()
                })
                .collect();
            ensure(got == vec![n, n, n, n + 1], format!("n={n}: {got:?}"))?;
            rows.push(format!("{got:?}"));
        }
        Ok(rows.join(" "))
    })
}

fn criterion_5() -> Outcome {
    timed(None, || {
        let n = 200;
        let (f, s, r) = phi_ab()?;
        let m = moment_oracle(&s, &f.dphi, n).map_err(e)?;
        let gap = (m.variance / n as f64 - r.variance).abs();
        ensure(gap <= 5.0 / n as f64, format!("phi_ab: |Var/n - sigma^2| = {gap}"))?;

        let cs = analyze(&coin()).map_err(e)?;
        let weights = [0, 0, 1];
        let cr = drift_variance(&cs, &weights).map_err(e)?;
        ensure(cr.exact_variance.as_deref() == Some("1/4"), format!("coin sigma^2 = {:?}", cr.exact_variance))?;
        let cm = moment_oracle(&cs, &weights, n).map_err(e)?;
        let cgap = (cm.variance / n as f64 - cr.variance).abs();
        ensure(cgap <= 5.0 / n as f64, format!("coin: |Var/n - sigma^2| = {cgap}"))?;
        Ok(format!(
            "phi_ab sigma^2={} ({}) Var/n={:.6}; coin sigma^2=1/4 Var/n={}",
            r.variance,
            r.exact_variance.unwrap_or_default(),
            m.variance / n as f64,
            cm.variance / n as f64
        ))
    })
}

fn criterion_6() -> Outcome {
    timed(Some(Duration::from_secs(60)), || {
        let (f, s, r) = phi_ab()?;
        let emp = empirical_clt(&s, &f.dphi, r.drift, r.sigma, 400, 100_000, 20_240_601).map_err(e)?;
        let ks = emp.ks.ok_or("no KS distance")?;
        let m = emp.moments;
        ensure(ks.corrected < 0.02, format!("KS {}", ks.corrected))?;
        ensure(m.skewness.abs() < 0.05, format!("skewness {}", m.skewness))?;
        ensure(m.excess_kurtosis.abs() < 0.1, format!("excess kurtosis {}", m.excess_kurtosis))?;
        Ok(format!(
            "KS={:.5} (uncorrected {:.5}) skew={:.4} kurt={:.4}",
            ks.corrected, ks.raw, m.skewness, m.excess_kurtosis
        ))
    })
}

fn criterion_7() -> Outcome {
    timed(None, || {
        let oracle = Arc::new(fixtures::f2_oracle(Default::default()).map_err(e)?);
        let r = compare_gensets(oracle, STANDARD, F2_ENLARGED, &CompareConfig::default()).map_err(e)?;
        let bound = 3f64.ln() / r.lambda_2.ln();
        ensure(r.lambda_12 > bound, format!("lambda_12 {} <= {bound}", r.lambda_12))?;
        let check = r.check.as_ref().ok_or("no n = 12 check")?;
        let k = r.fitted_k.ok_or("no fitted K")?;
        ensure(
            r.check_passed == Some(true),
            format!("n=12 deviation {} > K sqrt(12) = {}", check.max_deviation, k * 12f64.sqrt()),
        )?;
        Ok(format!(
            "E={} lambda_12={} lambda_2={} log3/log(lambda_2)={:.6} K={:.4} n=12 max dev {:.3} <= {:.3}",
            r.exact_drift.unwrap_or_default(),
            r.lambda_12,
            r.lambda_2,
            bound,
            k,
            check.max_deviation,
            k * 12f64.sqrt()
        ))
    })
}

fn criterion_8() -> Outcome {
    timed(None, || {
        let bad = fixture("F2xF2_concat").map_err(e)?;
        let r = bad.digraph().check_almost_semisimple(24).map_err(e)?;
        ensure(!r.growth_fit_pass, "growth fit accepted F2xF2_concat")?;
        ensure(!r.spectral_pass, "spectral criterion accepted F2xF2_concat")?;
        ensure(r.verdict == SemisimplicityVerdict::NotSemisimple, "verdict")?;
        for name in ["F2_standard", "F2_enlarged", "PSL2Z"] {
            let good = fixture(name).map_err(e)?;
            let r = good.digraph().check_almost_semisimple(24).map_err(e)?;
            ensure(
                r.verdict == SemisimplicityVerdict::Pass && r.growth_fit_pass && r.spectral_pass,
                format!("{name} flagged: {:?}", r.verdict),
            )?;
        }
        Ok("F2xF2_concat flagged by both criteria; F2_standard, F2_enlarged, PSL2Z pass".into())
    })
}

fn criterion_9() -> Outcome {
    timed(None, || {
        let phi = fixtures::zxz2_example_function;
        let l = fixture("ZxZ2_L").map_err(e)?.combing;
        let f = synthesize_dphi(&l, &phi, 2, 10).map_err(e)?;
        let bound = f.dphi.iter().map(|d| d.abs()).max().unwrap_or(0);
        ensure(bound <= 1, format!("dphi on L reaches {bound}"))?;
        let lp = fixture("ZxZ2_Lprime").map_err(e)?.combing;
        match synthesize_dphi(&lp, &phi, 3, 10) {
            Err(Error::NotWeaklyCombableAtDepth(fail)) => {
                ensure(
                    fail.increment_growth_slope > 0.5,
                    format!("increment slope {}", fail.increment_growth_slope),
                )?;
                Ok(format!(
                    "L: max |dphi| = {bound}; L': increments {:?}, slope {:.3}",
                    fail.shell_max_increment, fail.increment_growth_slope
                ))
            }
            Ok(_) => Err("synthesis on L' succeeded".into()),
            Err(other) => Err(format!("unexpected error on L': {other}")),
        }
    })
}

/// A random digraph on at most 12 vertices, every vertex reachable from `v₁`.
fn random_digraph(rng: &mut ChaCha8Rng) -> LabeledDigraph {
    let n = rng.random_range(2..=12usize);
    let letters = ["x", "y", "z"];
    let mut used = vec![[false; 3]; n];
    let mut edges = Vec::new();
    for v in 1..n {
        loop {
            let u = rng.random_range(0..v);
            let free: Vec<usize> = (0..3).filter(|&l| !used[u][l]).collect();
            if free.is_empty() {
                continue;
            }
            let l = free[rng.random_range(0..free.len())];
            used[u][l] = true;
            edges.push((u, v, letters[l]));
            break;
        }
    }
    let density = rng.random_range(0.3..0.9);
    for u in 0..n {
        for l in 0..3 {
            if !used[u][l] && rng.random_bool(density) {
                used[u][l] = true;
                edges.push((u, rng.random_range(1..n), letters[l]));
            }
        }
    }
    LabeledDigraph::from_triples(n, &edges, Alphabet::new(letters).unwrap()).unwrap()
}

fn accepted_words(g: &LabeledDigraph, max_len: usize) -> Vec<Vec<Letter>> {
    let mut layer = vec![(Vec::new(), INITIAL)];
    let mut out = Vec::new();
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (w, v) in &layer {
            for &(l, t) in g.out_edges(*v) {
                let mut w2: Vec<Letter> = w.clone();
                w2.push(l);
                next.push((w2, t));
            }
        }
        out.extend(next.iter().map(|(w, _)| w.clone()));
        layer = next;
    }
    out
}

fn criterion_10() -> Outcome {
    timed(None, || {
        let tol = 1e-10;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (mut accepted, mut skipped, mut worst) = (0, 0, 0.0f64);
        while accepted < 200 {
            let g = random_digraph(&mut rng);
            let s = match analyze(&g) {
                Ok(s) => s,
                Err(Error::DegenerateEigenstructure(_)) | Err(Error::InsufficientGrowth(_)) => {
                    skipped += 1;
                    continue;
                }
                Err(other) => return Err(other.to_string()),
            };
            if s.lambda <= 1.0 + 1e-9 {
                skipped += 1;
                continue;
            }
            accepted += 1;
            let size = g.vertex_count();
            let m: Matrix<f64> = transition_matrix(&g);
            let p = Projector::new(&m, s.lambda, s.config.null_tol).map_err(e)?;
            for _ in 0..5 {
                let v: Vec<f64> = (0..size).map(|_| rng.random::<f64>()).collect();
                let w: Vec<f64> = (0..size).map(|_| rng.random::<f64>()).collect();
                let t = transfer_defect(&p, &v, &w);
                let rv = p.rho(&v);
                let idem = p
                    .rho(&rv)
                    .iter()
                    .zip(&rv)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(t).max(idem);
                ensure(t <= tol, format!("transfer defect {t} on {:?}", g.to_document()))?;
                ensure(idem <= tol, format!("idempotence defect {idem}"))?;
            }
            ensure(s.row_sum_error() <= tol, format!("row sums {}", s.row_sum_error()))?;
            ensure(s.stationarity_error() <= tol, format!("stationarity {}", s.stationarity_error()))?;
            worst = worst.max(s.row_sum_error()).max(s.stationarity_error());
            for w in accepted_words(&g, 4) {
                let end = g.end_vertex(&w).unwrap();
                if !s.rho_positive(end) {
                    continue;
                }
                let parent = s.cone_weight(&w).map_err(e)?;
                let children: f64 = g
                    .out_edges(end)
                    .iter()
                    .map(|&(l, _)| {
                        let mut c = w.clone();
                        c.push(l);
                        s.cone_weight(&c).unwrap()
                    })
                    .sum();
                let d = (children - parent).abs();
                worst = worst.max(d);
                ensure(d <= tol, format!("cone additivity defect {d}"))?;
            }
        }
        Ok(format!(
            "200 digraphs checked ({skipped} draws without a usable λ > 1 chain skipped), worst defect {worst:.2e}"
        ))
    })
}

/// Two disjoint `λ = 2` cores behind `v₁`: a two-state coin and the
/// four-state chain remembering the last two flips.
fn two_cores() -> (LabeledDigraph, Vec<i64>) {
    let mut edges = vec![(0, 1, "p"), (0, 3, "r")];
    edges.extend([(1, 1, "p"), (1, 2, "q"), (2, 1, "p"), (2, 2, "q")]);
    // vertices 3..=6 hold the last two flips (b1, b0) as 3 + 2·b1 + b0
    for s in 0..4 {
        let b0 = s & 1;
        for (bit, label) in [(0, "r"), (1, "s")] {
            edges.push((3 + s, 3 + 2 * b0 + bit, label));
        }
    }
    let g = LabeledDigraph::from_triples(7, &edges, Alphabet::new(["p", "q", "r", "s"]).unwrap()).unwrap();
    let dphi = vec![0, 0, 1, 0, 1, 0, 1];
    (g, dphi)
}

fn criterion_11() -> Outcome {
    timed(None, || {
        let (g, dphi) = two_cores();
        let s = analyze(&g).map_err(e)?;
        ensure(s.support.lambda_components.len() == 2, "expected two λ-components")?;
        let r = drift_variance(&s, &dphi).map_err(e)?;
        ensure(r.agreement, format!("components disagree by {}", r.max_disagreement))?;
        let parts: Vec<String> = r
            .per_component
            .iter()
            .map(|c| format!("(E={}, sigma={})", c.drift, c.sigma))
            .collect();
        Ok(format!("{} max disagreement {:e}", parts.join(" "), r.max_disagreement))
    })
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("F2 spectral suite", criterion_1),
        ("degenerate CLT", criterion_2),
        ("greedy count is maximal", criterion_3),
        ("small counting example", criterion_4),
        ("Markov CLT consistency", criterion_5),
        ("empirical CLT", criterion_6),
        ("generating-set comparison", criterion_7),
        ("almost semisimplicity", criterion_8),
        ("negative synthesis", criterion_9),
        ("identity suite", criterion_10),
        ("per-component agreement", criterion_11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2}: {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(detail) => println!("PASS {label} | {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {label} | {reason}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
