//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lilrs::channel::{sample_channel_spec, sum_subspace_distance, transmit, AllocationSampler, ChannelSpec};
use lilrs::code::{encode_ilrs, lift, min_sum_subspace_distance, CodeParams, MessageTuple};
use lilrs::decoder::{decode, decode_ilrs, failure_bound, region_list, DecodeMode, DecodeStatus, DecoderOptions};
use lilrs::harness::{csv_string, run_experiment, run_trial, Execution, ExperimentConfig};
use lilrs::linalg::{all_vectors, enumerate_subspaces, rank, subspace_intersection_dim, Matrix};
use lilrs::skewpoly::annihilator;
use lilrs::{ExtField, Field, FieldElement, PrimeField, SkewPolynomial};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn field(q: u64, m: usize) -> Arc<ExtField> {
    Arc::new(ExtField::new(q, m, None).unwrap())
}

fn f27_code() -> CodeParams {
    CodeParams::new(field(3, 3), 3, vec![3, 3], 3).unwrap()
}

fn random_elem(f: &ExtField, rng: &mut impl Rng) -> FieldElement {
    f.element(rng.gen_range(0..f.order())).unwrap()
}

fn random_poly(f: &ExtField, max_deg: usize, rng: &mut impl Rng) -> SkewPolynomial {
    let len = rng.gen_range(0..=max_deg + 1);
    SkewPolynomial::from_coeffs((0..len).map(|_| random_elem(f, rng)).collect())
}

fn noiseless_roundtrip() -> Outcome {
    let configs = [
        (3, 3, 3, vec![3, 3], 3),
        (2, 2, 1, vec![2], 1),
        (2, 4, 2, vec![4], 3),
        (5, 2, 2, vec![2, 2, 1], 4),
        (3, 3, 1, vec![3, 3], 6),
        (7, 2, 4, vec![2, 1, 2], 2),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let sets = configs.len();
    let mut total = 0;
    for (q, m, s, lengths, k) in configs {
        let p = CodeParams::new(field(q, m), s, lengths.clone(), k).unwrap();
        for _ in 0..200 {
            let msg = MessageTuple::random(&p, &mut rng);
            let v = lift(&p, &msg).unwrap();
            let u = transmit(&p, &v, &ChannelSpec::identity(p.ell()), &mut rng).unwrap();
            let out = decode(&p, &u, DecodeMode::Unique).unwrap();
            ensure(out.status == DecodeStatus::Unique && out.messages == [msg], || {
                format!("q={q} m={m} s={s} n={lengths:?} k={k}: {}", out.status)
            })?;
            total += 1;
        }
    }
    Ok(format!("{total} messages over {sets} parameter sets"))
}

fn list_completeness() -> Outcome {
    let p = f27_code();
    let mut points = Vec::new();
    for delta in 0..=p.n_t() {
        for gamma in 0..=p.ambient_dims().iter().sum::<usize>() {
            if region_list(&p, gamma, delta) && AllocationSampler::for_code(&p, gamma, delta).is_ok() {
                points.push((gamma, delta));
            }
        }
    }
    ensure(points.iter().all(|&(g, d)| g + 3 * d < 12), || "region predicate".into())?;
    let cfg = ExperimentConfig {
        params: p,
        points,
        trials: 200,
        seed: 202,
        mode: DecodeMode::List,
        workers: None,
        output: None,
        stop_after_failures: None,
        list_cap: DecoderOptions::DEFAULT_LIST_CAP,
        search_cap: DecoderOptions::DEFAULT_SEARCH_CAP,
    };
    let report = run_experiment(&cfg, Execution::Parallel { workers: None }).unwrap();
    let misses: Vec<_> = report.points.iter().filter(|s| s.failures > 0).map(|s| (s.gamma, s.delta, s.failures)).collect();
    ensure(misses.is_empty(), || format!("misses (gamma, delta, count): {misses:?}"))?;
    let largest = report.records.iter().map(|r| r.list_len).max().unwrap_or(0);
    Ok(format!("{} points x 200 draws, zero misses, largest list {largest}", report.points.len()))
}

fn unique_failure_rates() -> Outcome {
    let p = f27_code();
    let expected = [(4, 9u32), (5, 6), (6, 3)];
    for &(gamma, e) in &expected {
        let bound = failure_bound(&p, gamma, p.n_t() + gamma - 1).exact();
        let want = Ratio::new(BigUint::from(4u32), BigUint::from(3u32).pow(e));
        ensure(bound == want, || format!("bound at gamma={gamma} is {bound}, expected 4/3^{e}"))?;
    }
    let cfg = ExperimentConfig {
        params: p,
        points: expected.iter().map(|&(g, _)| (g, 1)).collect(),
        trials: 10_000,
        seed: 303,
        mode: DecodeMode::Unique,
        workers: None,
        output: None,
        stop_after_failures: None,
        list_cap: DecoderOptions::DEFAULT_LIST_CAP,
        search_cap: DecoderOptions::DEFAULT_SEARCH_CAP,
    };
    let report = run_experiment(&cfg, Execution::Parallel { workers: None }).unwrap();
    let mut detail = Vec::new();
    for s in &report.points {
        let bound = s.bound.ok_or("bound missing in unique region")?;
        let limit = bound + 3.0 * s.wilson_half_width();
        ensure(s.observed_rate <= limit, || {
            format!("gamma={}: observed {} > {bound:.3e} + 3 half-widths", s.gamma, s.observed_rate)
        })?;
        detail.push(format!("gamma={} {}/{} (bound {bound:.2e})", s.gamma, s.failures, s.trials));
    }
    Ok(detail.join(", "))
}

fn s1_baseline() -> Outcome {
    let p = CodeParams::new(field(3, 3), 1, vec![3, 3], 3).unwrap();
    let opts = DecoderOptions::new(DecodeMode::Unique);
    let mut draws = 0;
    for gamma in 0..=3 {
        for delta in 0..=3 - gamma {
            ensure(region_list(&p, gamma, delta), || format!("({gamma}, {delta}) outside list region"))?;
            let sampler = AllocationSampler::for_code(&p, gamma, delta).unwrap();
            for t in 0..300 {
                let (_, out, msg) = run_trial(&p, &sampler, &opts, 4000 + 1000 * gamma as u64 + 100 * delta as u64 + t).unwrap();
                ensure(out.messages == [msg], || format!("({gamma}, {delta}) draw {t}: {}", out.status))?;
                draws += 1;
            }
        }
    }
    let max_gamma: usize = p.ambient_dims().iter().zip(p.block_lengths()).map(|(big, n)| big - n).sum();
    for gamma in 0..=max_gamma {
        for delta in 0..=p.n_t() {
            if gamma + delta >= 4 {
                ensure(!region_list(&p, gamma, delta), || format!("({gamma}, {delta}) accepted"))?;
            }
        }
    }
    Ok(format!("{draws} draws with gamma + delta <= 3 decoded; gamma + delta >= 4 rejected"))
}

/// Coefficient formula for `f·g` with `x·a = σ(a)·x`.
fn product_oracle(f: &ExtField, a: &SkewPolynomial, b: &SkewPolynomial) -> SkewPolynomial {
    let (la, lb) = (a.coeffs().len(), b.coeffs().len());
    if la == 0 || lb == 0 {
        return SkewPolynomial::zero();
    }
    let mut out = vec![FieldElement::ZERO; la + lb - 1];
    for (i, &ai) in a.coeffs().iter().enumerate() {
        for (j, &bj) in b.coeffs().iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(ai, f.pow(bj, (f.q() as u64).pow(i as u32))));
        }
    }
    SkewPolynomial::from_coeffs(out)
}

/// `Σ f_i b^{q^i} a^{(q^i − 1)/(q − 1)}`.
fn evaluation_oracle(f: &ExtField, p: &SkewPolynomial, b: FieldElement, a: FieldElement) -> FieldElement {
    let q = f.q() as u64;
    p.coeffs().iter().enumerate().fold(FieldElement::ZERO, |acc, (i, &c)| {
        let qi = q.pow(i as u32);
        let norm = f.pow(a, (qi - 1) / (q - 1));
        f.add(acc, f.mul(c, f.mul(f.pow(b, qi), norm)))
    })
}

fn fq_rank(f: &ExtField, elems: &[FieldElement]) -> usize {
    let rows: Vec<Vec<u32>> = elems.iter().map(|&e| f.coeffs(e)).collect();
    rank(f.base(), &Matrix::from_rows(rows, f.m()).unwrap())
}

fn algebra_suites() -> Outcome {
    let f = field(3, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let x = SkewPolynomial::monomial(FieldElement::ONE, 1);
    for i in 0..1000 {
        let (a, b, c) = (random_poly(&f, 4, &mut rng), random_poly(&f, 4, &mut rng), random_poly(&f, 4, &mut rng));
        ensure(a.mul(&f, &b) == product_oracle(&f, &a, &b), || format!("product {i}"))?;
        ensure(a.mul(&f, &b).mul(&f, &c) == a.mul(&f, &b.mul(&f, &c)), || format!("associativity {i}"))?;
        ensure(a.mul(&f, &b.add(&f, &c)) == a.mul(&f, &b).add(&f, &a.mul(&f, &c)), || format!("left distributivity {i}"))?;
        ensure(b.add(&f, &c).mul(&f, &a) == b.mul(&f, &a).add(&f, &c.mul(&f, &a)), || format!("right distributivity {i}"))?;
        let e = random_elem(&f, &mut rng);
        ensure(
            x.mul(&f, &SkewPolynomial::constant(e)) == SkewPolynomial::constant(f.frobenius(e, 1)).mul(&f, &x),
            || format!("commutation rule {i}"),
        )?;
        if let (Some(da), Some(db)) = (a.degree(), b.degree()) {
            ensure(a.mul(&f, &b).degree() == Some(da + db), || format!("degree {i}"))?;
        }
        let (pt, cls) = (random_elem(&f, &mut rng), random_elem(&f, &mut rng));
        ensure(a.op_evaluate(&f, pt, cls) == evaluation_oracle(&f, &a, pt, cls), || format!("evaluation {i}"))?;
        let inner = b.op_evaluate(&f, pt, cls);
        ensure(a.mul(&f, &b).op_evaluate(&f, pt, cls) == a.op_evaluate(&f, inner, cls), || format!("product rule {i}"))?;
    }

    // Least degree of a nonzero polynomial vanishing on point sets, by
    // enumerating every polynomial of degree at most the point count.
    let mut sets = 0;
    for (q, m, ell, max_points) in [(2u64, 2usize, 1usize, 3usize), (3, 2, 2, 4)] {
        let f = field(q, m);
        let reps = f.conjugacy_representatives(ell).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(q);
        let polys: Vec<SkewPolynomial> = all_vectors(f.order(), max_points + 1)
            .into_iter()
            .skip(1)
            .map(|c| SkewPolynomial::from_coeffs(c.into_iter().map(|e| f.element(e).unwrap()).collect()))
            .collect();
        for _ in 0..12 {
            let count = rng.gen_range(1..=max_points);
            let points: Vec<(FieldElement, usize)> =
                (0..count).map(|_| (f.element(rng.gen_range(1..f.order())).unwrap(), rng.gen_range(0..ell))).collect();
            let rank_sum: usize = (0..ell)
                .map(|c| fq_rank(&f, &points.iter().filter(|p| p.1 == c).map(|p| p.0).collect::<Vec<_>>()))
                .sum();
            let least = polys
                .iter()
                .filter(|p| points.iter().all(|&(b, c)| p.op_evaluate(&f, b, reps[c]).is_zero()))
                .filter_map(|p| p.degree())
                .min()
                .ok_or("no vanishing polynomial of degree <= point count")?;
            ensure(least == rank_sum, || format!("F_{q}^{m} {points:?}: least degree {least}, rank sum {rank_sum}"))?;
            ensure(least <= count, || "degree above point count".into())?;
            let independent = rank_sum == count;
            let below = polys
                .iter()
                .filter(|p| p.degree().is_some_and(|d| d < count))
                .any(|p| points.iter().all(|&(b, c)| p.op_evaluate(&f, b, reps[c]).is_zero()));
            ensure(below != independent, || format!("F_{q}^{m} {points:?}: independence mismatch"))?;
            let ann = annihilator(&f, &points, &reps);
            ensure(ann.degree() == Some(least), || "annihilator not minimal".into())?;
            sets += 1;
        }
    }

    let reps = f.conjugacy_representatives(2).unwrap();
    for i in 0..300 {
        let count = rng.gen_range(0..=6);
        let points: Vec<(FieldElement, usize)> = (0..count).map(|_| (random_elem(&f, &mut rng), rng.gen_range(0..2))).collect();
        let rank_sum: usize =
            (0..2).map(|c| fq_rank(&f, &points.iter().filter(|p| p.1 == c).map(|p| p.0).collect::<Vec<_>>())).sum();
        let ann = annihilator(&f, &points, &reps);
        ensure(ann.degree() == Some(rank_sum), || format!("annihilator {i}: {:?} vs {rank_sum}", ann.degree()))?;
        ensure(points.iter().all(|&(b, c)| ann.op_evaluate(&f, b, reps[c]).is_zero()), || format!("annihilator {i} root"))?;
    }
    Ok(format!("1000 ring instances over F_27, {sets} exhaustive root sets, 300 annihilators"))
}

fn minimum_distance() -> Outcome {
    let p = CodeParams::new(field(2, 2), 1, vec![2], 1).unwrap();
    let f = p.field().clone();
    let words: Vec<_> = f
        .elements()
        .map(|e| lift(&p, &MessageTuple::from_coefficients(&p, &[e]).unwrap()).unwrap())
        .collect();
    let mut min = usize::MAX;
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            min = min.min(sum_subspace_distance(f.base(), &words[i], &words[j]).unwrap());
        }
    }
    ensure(min == 4, || format!("exhaustive minimum {min}"))?;
    ensure(min_sum_subspace_distance(&p) == 4, || "closed form differs".into())?;
    Ok(format!("{} codewords, minimum distance {min}", words.len()))
}

fn shot_count(fq: &PrimeField, n: usize, ambient: usize, gamma: usize, delta: usize) -> u64 {
    if delta > n || n + gamma > ambient {
        return 0;
    }
    let v = enumerate_subspaces(fq, ambient, n)[0].clone();
    let kept = enumerate_subspaces(fq, ambient, n - delta)
        .iter()
        .filter(|w| subspace_intersection_dim(fq, w, &v).unwrap() == w.dim())
        .count() as u64;
    let inserted = enumerate_subspaces(fq, ambient, gamma)
        .iter()
        .filter(|e| subspace_intersection_dim(fq, e, &v).unwrap() == 0)
        .count() as u64;
    kept * inserted
}

fn sampler_uniformity() -> Outcome {
    let p = CodeParams::new(field(3, 2), 1, vec![2, 1], 1).unwrap();
    let (gamma, delta) = (2, 1);
    let fq = *p.field().base();
    let sampler = AllocationSampler::for_code(&p, gamma, delta).unwrap();
    let dims = p.ambient_dims();
    let mut weights = HashMap::new();
    let mut total = 0u64;
    for g0 in 0..=gamma {
        for d0 in 0..=delta {
            let w = shot_count(&fq, 2, dims[0], g0, d0) * shot_count(&fq, 1, dims[1], gamma - g0, delta - d0);
            if w > 0 {
                let spec = ChannelSpec { insertions: vec![g0, gamma - g0], deletions: vec![d0, delta - d0] };
                ensure(sampler.weight(&spec) == BigUint::from(w), || format!("{spec:?}: weight differs from count {w}"))?;
                weights.insert(spec, w);
                total += w;
            }
        }
    }
    ensure(*sampler.total() == BigUint::from(total), || "total differs".into())?;
    let draws = 30_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut counts: HashMap<ChannelSpec, u64> = HashMap::new();
    for _ in 0..draws {
        *counts.entry(sample_channel_spec(&p, gamma, delta, &mut rng).unwrap()).or_default() += 1;
    }
    ensure(counts.keys().all(|k| weights.contains_key(k)), || "sampled an allocation of weight zero".into())?;
    let mut worst = 0.0f64;
    for (spec, &w) in &weights {
        let prob = w as f64 / total as f64;
        let mean = draws as f64 * prob;
        let sigma = (draws as f64 * prob * (1.0 - prob)).sqrt();
        let seen = counts.get(spec).copied().unwrap_or(0) as f64;
        let z = if sigma > 0.0 { (seen - mean).abs() / sigma } else { (seen - mean).abs() };
        worst = worst.max(z);
        ensure(z <= 5.0, || format!("{spec:?}: {seen} draws, expected {mean:.1}"))?;
    }
    Ok(format!("{} allocations, {total} realizations, worst deviation {worst:.2} sigma", weights.len()))
}

fn add_error(f: &ExtField, c: &Matrix<FieldElement>, e: &Matrix<FieldElement>) -> Matrix<FieldElement> {
    let mut out = c.clone();
    for r in 0..c.rows() {
        for col in 0..c.cols() {
            out.set(r, col, f.add(c.get(r, col), e.get(r, col)));
        }
    }
    out
}

/// Random `s × n` error whose block `i` has F_q-rank `ranks[i]`.
fn sum_rank_error(p: &CodeParams, ranks: &[usize], rng: &mut ChaCha8Rng) -> Matrix<FieldElement> {
    let f = p.field();
    let fq = *f.base();
    let (s, m) = (p.s(), f.m());
    let mut e = Matrix::filled(s, p.n_t(), FieldElement::ZERO);
    let mut offset = 0;
    for (i, &w) in ranks.iter().enumerate() {
        let n = p.block_lengths()[i];
        // Uniform over rank-w blocks: every one has the same number of
        // full-rank factorizations.
        let mut random = |rows: usize, cols: usize| {
            let entries = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0..f.q())).collect()).collect();
            Matrix::from_rows(entries, cols).unwrap()
        };
        let block = loop {
            let b = random(s * m, w).mul(&fq, &random(w, n)).unwrap();
            if rank(&fq, &b) == w {
                break b;
            }
        };
        for j in 0..n {
            for l in 0..s {
                let digits: Vec<u32> = (0..m).map(|t| block.get(l * m + t, j)).collect();
                e.set(l, offset + j, f.from_coeffs(&digits).unwrap());
            }
        }
        offset += n;
    }
    e
}

fn ilrs_radius() -> Outcome {
    let p = f27_code();
    let f = p.field().clone();
    let opts = DecoderOptions::new(DecodeMode::List);
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut largest = 0;
    let splits: [&[[usize; 2]]; 3] = [&[[0, 0]], &[[1, 0], [0, 1]], &[[2, 0], [1, 1], [0, 2]]];
    for (weight, options) in splits.iter().enumerate() {
        for t in 0..500 {
            let msg = MessageTuple::random(&p, &mut rng);
            let c = encode_ilrs(&p, &msg).unwrap();
            let ranks = options[rng.gen_range(0..options.len())];
            let r = add_error(&f, &c, &sum_rank_error(&p, &ranks, &mut rng));
            let out = decode_ilrs(&p, &r, &opts).unwrap();
            ensure(out.contains(&msg), || format!("weight {weight} pattern {t} ({ranks:?}): {}", out.status))?;
            largest = largest.max(out.messages.len());
        }
    }
    Ok(format!("500 patterns at each weight 0, 1, 2 list-decoded, largest list {largest}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        "[field]\nq = 3\nm = 3\n\n[code]\ns = 3\nblock_lengths = [3, 3]\nk = 3\n\n\
         [sweep]\npoints = [[0, 0], [5, 1], [6, 1], [8, 1], [3, 2]]\ntrials = 1500\nseed = 909\nmode = \"unique\"\n",
    )
    .map_err(|e| e.to_string())?;
    let run = |workers: &str, out: &str, extra: &[&str]| -> Result<Vec<u8>, String> {
        let path = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_lilrs"))
            .arg("simulate")
            .arg("--config")
            .arg(&config)
            .args(["--workers", workers, "--out"])
            .arg(&path)
            .args(extra)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        std::fs::read(&path).map_err(|e| e.to_string())
    };
    let one = run("1", "one.csv", &[])?;
    let four = run("4", "four.csv", &[])?;
    ensure(one == four, || "CSV differs between 1 and 4 workers".into())?;
    let cfg = ExperimentConfig::from_path(&config).map_err(|e| e.to_string())?;
    let lib = csv_string(&run_experiment(&cfg, Execution::Parallel { workers: Some(2) }).unwrap()).unwrap();
    ensure(lib.as_bytes() == one.as_slice(), || "library CSV differs from the binary's".into())?;
    let stop = ["--stop-after-failures", "5", "--mode", "list"];
    let a = run("1", "stop1.csv", &stop)?;
    let b = run("3", "stop3.csv", &stop)?;
    ensure(a == b, || "early-stopping CSV differs between worker counts".into())?;
    Ok(format!("{} bytes identical across 1, 2 and 4 workers", one.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("noiseless roundtrip", noiseless_roundtrip),
        ("list-region completeness", list_completeness),
        ("unique-region failure rates", unique_failure_rates),
        ("s = 1 baseline", s1_baseline),
        ("algebra property suites", algebra_suites),
        ("minimum distance brute force", minimum_distance),
        ("channel sampler uniformity", sampler_uniformity),
        ("ILRS radius", ilrs_radius),
        ("determinism", determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {id} ({name}): {detail} [{secs:.2}s]"),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {reason} [{secs:.2}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
