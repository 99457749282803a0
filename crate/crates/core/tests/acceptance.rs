//! Acceptance suite. Runs every criterion in order, prints one line per
//! criterion and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use luroth_core::chaos::{
    sensitivity_witness, transitivity_witness, scrambled_pair_check, ChaosWitness, OpenInterval, WitnessPayload,
};
use luroth_core::dimension::{
    asymptotic_threshold, box_count_estimate, build_asymptotic_tree, build_distal_tree, cantor_tree,
    choose_distal_parameters, distal_separation, log_scales, moran_solve, replay_certificate, sample_cantor_points,
    tail_moment, tail_target_width, verify_lower_bound, verify_upper_bound, SeparationSeq,
};
use luroth_core::expansion::{
    detect_period, luroth_digit, luroth_expand, luroth_iterate, luroth_step, luroth_value, stream_value,
    DEFAULT_CYCLE_CAP,
};
use luroth_core::intervals::{check_lu_dis_separation, fundamental_interval, interval_gap, FundamentalInterval};
use luroth_core::pairs::{distal_companion_family, verify_distal_bound};
use luroth_core::rational::{int, rat, recip};
use luroth_core::stats::{digit_law_mc, hit_count_random, TargetRule};
use luroth_core::symbolic::scramble_count;
use luroth_core::{DigitStream, EventualPeriod};

type Outcome = Result<String, String>;

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn within(elapsed: Duration, limit: u64) -> Result<(), String> {
    ensure(elapsed < Duration::from_secs(limit), || format!("runtime {:.1} s exceeds {limit} s", elapsed.as_secs_f64()))
}

fn random_word(rng: &mut ChaCha8Rng, max_len: usize, max_digit: u64) -> Vec<u64> {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| rng.random_range(2..=max_digit)).collect()
}

fn round_trip_and_conjugacy() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let two = EventualPeriod::new(vec![], vec![2]).unwrap();
    for _ in 0..10_000 {
        let w = random_word(&mut rng, 20, 50);
        // w followed by 2^∞ is the right endpoint of I(w)
        let x = luroth_value(&w, Some(&two)).map_err(|e| e.to_string())?;
        let e = luroth_expand(&x, w.len() + 3).map_err(|e| e.to_string())?;
        ensure(e.digits.as_slice()[..w.len()] == w[..], || format!("digits of <{w:?}, 2, ...> differ"))?;
        ensure(e.digits.as_slice()[w.len()..] == [2, 2, 2], || format!("tail of <{w:?}, 2, ...> is not 2"))?;
    }
    for _ in 0..1_000 {
        let pre = if rng.random_bool(0.5) { random_word(&mut rng, 6, 50) } else { vec![] };
        let period = random_word(&mut rng, 6, 50);
        let s = DigitStream::periodic(pre.clone(), period.clone()).unwrap();
        let x = stream_value(&s).map_err(|e| e.to_string())?;
        let lhs = luroth_step(&x).map_err(|e| e.to_string())?;
        let rhs = stream_value(&s.shift(1)).map_err(|e| e.to_string())?;
        ensure(lhs == rhs, || format!("L∘Λ != Λ∘σ on {pre:?}[{period:?}]"))?;
        let found = detect_period(&x, DEFAULT_CYCLE_CAP).map_err(|e| e.to_string())?;
        let depth = 2 * (pre.len() + period.len()) as u64 + 4;
        ensure((1..=depth).all(|j| found.digit(j) == s.digit(j)), || "detected period disagrees".into())?;
    }
    within(start.elapsed(), 10)?;
    Ok("10^4 words, 10^3 periodic streams".into())
}

fn words_up_to(len: usize, max_digit: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut level = vec![vec![]];
    for _ in 0..len {
        level = level
            .iter()
            .flat_map(|w: &Vec<u64>| {
                (2..=max_digit).map(move |d| {
                    let mut v = w.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
        out.extend(level.iter().cloned());
    }
    out
}

fn interval_algebra() -> Outcome {
    let start = Instant::now();
    let words = words_up_to(4, 6);
    let cells: Vec<FundamentalInterval> = words.iter().map(|w| fundamental_interval(w).unwrap()).collect();
    for level in 1..=4 {
        let same: Vec<&FundamentalInterval> = cells.iter().filter(|c| c.level() == level).collect();
        for (i, a) in same.iter().enumerate() {
            for b in &same[i + 1..] {
                ensure(a.hi <= b.lo || b.hi <= a.lo, || format!("{} and {} overlap", a.word, b.word))?;
            }
        }
    }
    for c in &cells {
        let product = c
            .word
            .iter()
            .fold(BigRational::one(), |acc, &d| acc * recip(d * (d - 1)));
        ensure(c.diameter() == product, || format!("|I({})| != product", c.word))?;
        if c.level() > 1 {
            let parent = fundamental_interval(&c.word[..c.level() - 1]).unwrap();
            ensure(parent.contains_interval(c), || format!("{} escapes its parent", c.word))?;
        }
        // digit window along the orbit of interior points
        for x in [(&c.lo + &c.hi) / int(2), c.hi.clone(), &c.lo + c.diameter() / int(7)] {
            ensure(c.contains(&x), || "sample point outside its cell".into())?;
            for n in 0..c.level() {
                let y = luroth_iterate(&x, n).unwrap();
                let a = c.word[n];
                ensure(recip(a) < y && y <= recip(a - 1), || format!("digit window fails for {} at n = {n}", c.word))?;
                ensure(luroth_digit(&y).unwrap() == a, || "digit mismatch".into())?;
            }
        }
    }
    within(start.elapsed(), 30)?;
    Ok(format!("{} cells over [2,6], levels 1..4", cells.len()))
}

fn separation_sweep() -> Outcome {
    let mut checked = 0u64;
    let mut tightest: Option<BigRational> = None;
    for big_e in 6..=8u64 {
        for m in 1..=3usize {
            let cs: Vec<Vec<u64>> = words_up_to(m, big_e + 2).into_iter().filter(|w| w.len() == m).collect();
            let bs: Vec<Vec<u64>> = words_up_to(m, big_e).into_iter().filter(|w| w.len() == m).collect();
            let bound = Pow::pow(int(big_e), 2 * m as u32).recip();
            for c in &cs {
                for b in &bs {
                    let e = b[m - 1];
                    if !(3..big_e).contains(&e) || c[m - 1].abs_diff(e) < 2 {
                        continue;
                    }
                    let cert = check_lu_dis_separation(c, b, big_e).map_err(|e| e.to_string())?;
                    let gap = interval_gap(&fundamental_interval(c).unwrap(), &fundamental_interval(b).unwrap());
                    ensure(cert.gap == gap && cert.bound == bound, || "certificate fields".into())?;
                    ensure(cert.holds && gap >= bound, || format!("E = {big_e}: d(I{c:?}, I{b:?}) = {gap} < {bound}"))?;
                    let ratio = &gap / &bound;
                    if tightest.as_ref().is_none_or(|t| &ratio < t) {
                        tightest = Some(ratio);
                    }
                    checked += 1;
                }
            }
        }
    }
    let t = tightest.unwrap();
    Ok(format!("{checked} admissible pairs, smallest gap/bound = {:.3}", luroth_core::rational::to_f64(&t)))
}

fn eps() -> BigRational {
    rat(1, 1_000_000)
}

fn moran_dimension() -> Outcome {
    let start = Instant::now();
    let mut roots = Vec::new();
    for n in [3u64, 5, 10, 100] {
        let sol = moran_solve(n).map_err(|e| e.to_string())?;
        ensure(sol.residual < 1e-12, || format!("residual {} for N = {n}", sol.residual))?;
        ensure(sol.width() < 1e-12, || format!("bracket width {} for N = {n}", sol.width()))?;
        let t = cantor_tree(n).unwrap();
        let sep = SeparationSeq::from_tree(&t, 8).map_err(|e| e.to_string())?;
        let lower = verify_lower_bound(&t, &(&sol.lo - eps()), &sep, 8).map_err(|e| format!("N = {n} lower: {e}"))?;
        let upper = verify_upper_bound(&t, &(&sol.hi + eps()), 8).map_err(|e| format!("N = {n} upper: {e}"))?;
        replay_certificate(&lower).map_err(|e| e.to_string())?;
        replay_certificate(&upper).map_err(|e| e.to_string())?;
        roots.push(sol);
    }
    let mids: Vec<f64> = roots.iter().map(|r| r.midpoint()).collect();
    ensure(roots.windows(2).all(|w| w[0].hi < w[1].lo), || format!("s* not increasing: {mids:?}"))?;
    ensure(mids[3] > 0.9, || format!("s*(100) = {}", mids[3]))?;
    let mut slopes = Vec::new();
    for (i, n) in [3u64, 5, 10].into_iter().enumerate() {
        let points = sample_cantor_points(n, mids[i], 200_000, 40, 1);
        let fit = box_count_estimate(&points, &log_scales(1e-2, 1e-5, 10)).map_err(|e| e.to_string())?;
        ensure(!fit.degenerate, || "degenerate box-count fit".into())?;
        ensure((fit.slope - mids[i]).abs() <= 0.05, || format!("N = {n}: slope {} vs s* {}", fit.slope, mids[i]))?;
        slopes.push(format!("{:.3}/{:.3}", fit.slope, mids[i]));
    }
    within(start.elapsed(), 60)?;
    Ok(format!("s* = {mids:.6?}; box slope/s* = {}", slopes.join(", ")))
}

fn distal_machinery() -> Outcome {
    let start = Instant::now();
    let s = rat(9, 10);
    let p = choose_distal_parameters(&s, 6).map_err(|e| e.to_string())?;
    let a = DigitStream::uniform(2, 6, 11, 0).unwrap();
    let tree = build_distal_tree(&a, 6, p.m, p.n, 4).map_err(|e| e.to_string())?;
    let b = distal_separation(6, p.m, p.n).map_err(|e| e.to_string())?;
    let cert = verify_lower_bound(&tree, &s, &SeparationSeq::Constant(b), 4).map_err(|e| e.to_string())?;
    replay_certificate(&cert).map_err(|e| e.to_string())?;
    let family = distal_companion_family(&a, 6, p.m, p.n).map_err(|e| e.to_string())?;
    for i in 0..100 {
        let y = family.sample(5, i);
        let d = verify_distal_bound(&a, &y, 6, p.m, 50).map_err(|e| format!("member {i}: {e}"))?;
        ensure(d.holds && !d.margin().is_negative(), || format!("member {i}: min distance below 6^(-2m)"))?;
    }
    within(start.elapsed(), 60)?;
    Ok(format!(
        "(m, n) = ({}, {}), lower certificate at s = 9/10, 100 members clear 6^(-{})",
        p.m,
        p.n,
        2 * p.m
    ))
}

fn asymptotic_upper() -> Outcome {
    let a = DigitStream::uniform(2, 12, 3, 0).unwrap();
    let mut detail = Vec::new();
    for eps in [rat(1, 2), rat(1, 4)] {
        let big_m = asymptotic_threshold(&eps).map_err(|e| e.to_string())?;
        // M >= 1 + (1/(2ε))^{1/(2ε)}, where k = 1/(2ε) is an integer here
        let k = (int(2) * &eps).recip().to_integer().to_u64_digits().1[0];
        let need = int(1 + k.pow(k as u32));
        ensure(int(big_m) >= need, || format!("M = {big_m} below the threshold"))?;
        let s = rat(1, 2) + &eps;
        let tree = build_asymptotic_tree(&a, big_m, 3, 6).map_err(|e| e.to_string())?;
        let cert = verify_upper_bound(&tree, &s, 6).map_err(|e| format!("ε = {eps}: {e}"))?;
        replay_certificate(&cert).map_err(|e| e.to_string())?;
        detail.push(format!("ε = {eps}: M = {big_m}"));
    }
    let target = tail_target_width(128);
    for m in 2..=10_000u64 {
        let t = tail_moment(m, &BigRational::one(), &target, 128).map_err(|e| e.to_string())?;
        ensure(t.lo == recip(m) && t.hi == recip(m), || format!("tail_moment({m}, 1) = [{}, {}]", t.lo, t.hi))?;
    }
    Ok(format!("{}; tail_moment(M, 1) = 1/M for M <= 10^4", detail.join(", ")))
}

fn li_yorke_schedule() -> Outcome {
    for i in 0..50u64 {
        let a = DigitStream::uniform(2, 6, 100 + 2 * i, 0).unwrap();
        let b = DigitStream::uniform(2, 6, 101 + 2 * i, 0).unwrap();
        let r = scrambled_pair_check(&a, &b, 12).map_err(|e| format!("pair {i}: {e}"))?;
        for row in &r.rows {
            ensure(row.proximal_ok, || format!("pair {i}: proximal side fails at m = {}", row.m))?;
            ensure(row.li_yorke_ok, || format!("pair {i}: Li-Yorke side fails at m = {}", row.m))?;
        }
    }
    for n in 8..=1_000_000u64 {
        let t = scramble_count(n) as u128;
        let n2 = (n as u128) * (n as u128);
        // (2/9) n^{2/3} <= t <= 2 n^{2/3}, cubed
        ensure(8 * n2 <= 729 * t * t * t && t * t * t <= 8 * n2, || format!("t({n}) = {t} out of bounds"))?;
    }
    Ok("50 pairs to m = 12; t(n) bounds on [8, 10^6]".into())
}

fn random_interval(rng: &mut ChaCha8Rng) -> OpenInterval {
    loop {
        let q = rng.random_range(2..=1000i64);
        let (p1, p2) = (rng.random_range(0..q), rng.random_range(0..=q));
        if p1 < p2 {
            return OpenInterval::new(rat(p1, q), rat(p2, q)).unwrap();
        }
    }
}

fn devaney_witnesses() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..100 {
        let (u, v) = (random_interval(&mut rng), random_interval(&mut rng));
        let t = transitivity_witness(&u, &v).map_err(|e| format!("pair {i}: {e}"))?;
        ChaosWitness::new(WitnessPayload::Transitivity(t)).replay().map_err(|e| format!("pair {i}: {e}"))?;
    }
    for i in 0..100i64 {
        let x = rat(i, 100);
        for k in 3..=10u64 {
            let delta = luroth_core::rational::pow2_neg(k);
            let s = sensitivity_witness(&x, &delta).map_err(|e| e.to_string())?;
            let want = if x.is_zero() { BigRational::one() } else { rat(1, 2) };
            ensure(s.distance == want, || format!("x = {x}, δ = {delta}: distance {}", s.distance))?;
            ensure((&x - &s.y).abs() < delta, || format!("x = {x}: |x - y| >= δ"))?;
            let d = (luroth_iterate(&x, s.n).unwrap() - luroth_iterate(&s.y, s.n).unwrap()).abs();
            ensure(d == want, || format!("x = {x}: replayed distance {d}"))?;
            ChaosWitness::new(WitnessPayload::Sensitivity(s)).replay().map_err(|e| e.to_string())?;
        }
    }
    Ok("100 transitivity witnesses, 800 sensitivity witnesses".into())
}

fn statistics() -> Outcome {
    let start = Instant::now();
    let table = digit_law_mc(100_000, 10, 7).map_err(|e| e.to_string())?;
    let worst = table.cells.iter().filter(|c| c.k >= 2).map(|c| c.z.abs()).fold(0.0, f64::max);
    ensure(table.within_4sigma(10), || format!("digit law: max |z| = {worst:.2}"))?;
    let mut inside = 0;
    for seed in 0..100 {
        let r = hit_count_random(seed, &TargetRule::Harmonic, 10_000).map_err(|e| e.to_string())?;
        if r.within_band() {
            inside += 1;
        }
    }
    ensure(inside >= 95, || format!("only {inside}/100 seeds inside the band"))?;
    within(start.elapsed(), 120)?;
    Ok(format!("digit law max |z| = {worst:.2}; hit counts in band for {inside}/100 seeds"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("round-trip and conjugacy", round_trip_and_conjugacy),
        ("interval algebra", interval_algebra),
        ("separation sweep", separation_sweep),
        ("dimension of F_N", moran_dimension),
        ("distal machinery", distal_machinery),
        ("asymptotic upper bounds", asymptotic_upper),
        ("Li-Yorke schedule", li_yorke_schedule),
        ("Devaney witnesses", devaney_witnesses),
        ("statistics", statistics),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
