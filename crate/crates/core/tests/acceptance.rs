//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Tolerances: relative float error 1e-9 (criterion 1); wall-clock limits
//! 1 s, 5 s, 10 s, 30 s, 30 s, 120 s, 600 s, 120 s for criteria 1-8;
//! recovery in at least 95 of 100 trials (criterion 7).

use std::time::{Duration, Instant};

use num_traits::{ToPrimitive, Zero};
use projcorrect::bounds::{self, Rational};
use projcorrect::corrector::{self, CorrectionMode};
use projcorrect::gadgets::{self, AddGadget, MarkedLine, MultGadget};
use projcorrect::harness::{self, Corruption, PlantedSigma, ReportFormat};
use projcorrect::{Elem, ExperimentSpec, FieldSpec, GaloisField, PointMap, ProjPoint, ProjSpace};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn space(p: u32, k: u32, n: usize) -> ProjSpace {
    ProjSpace::new(GaloisField::with_default_modulus(p, k).unwrap(), n).unwrap()
}

fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

// Straight floating transcription of the A and B formulas.
fn float_a(q: f64, n: i32, eps: f64) -> f64 {
    let big = q.powi(n + 1);
    2.0 * (eps + (q - 1.0) / (big - 1.0)) / ((big - q) / (big - 1.0)).powi(2) - (q - 1.0).powi(2) / (big - 1.0)
}

fn float_b(q: f64, n: i32, eps: f64) -> f64 {
    let big = q.powi(n + 1);
    let a = float_a(q, n, eps);
    let c = 2.0 * q * q * (q + 1.0).powi(2) / (big - q);
    2.0 * (q - 1.0) * (big - 1.0) / (big - q) * (2.0 * eps + 2.0 * a + c) + 2.0 * a + c
}

fn c1_bounds() -> Outcome {
    let exact = bounds::compute_a(2, 4, &Rational::zero()).unwrap() == bounds::rational(511, 13950);
    let mut worst = 0f64;
    let mut ok = exact;
    for q in [2u64, 3, 5] {
        for n in 4..=14u32 {
            for (num, den) in [(0i64, 1i64), (1, 1000), (1, 100)] {
                let eps = bounds::rational(num, den);
                let e = num as f64 / den as f64;
                let a = bounds::compute_a(q, n, &eps).unwrap().to_f64().unwrap();
                let b = bounds::compute_b(q, n, &eps).unwrap().to_f64().unwrap();
                let (fa, fb) = (float_a(q as f64, n as i32, e), float_b(q as f64, n as i32, e));
                worst = worst.max((a - fa).abs() / fa.abs()).max((b - fb).abs() / fb.abs());
                ok &= rel_close(a, fa, 1e-9) && rel_close(b, fb, 1e-9);
            }
        }
    }
    Outcome { pass: ok, detail: format!("A(2,4,0)=511/13950: {exact}; max rel err {worst:.2e} over 99 grid points") }
}

fn c2_frontier() -> Outcome {
    let m4 = bounds::max_eps(2, 4).unwrap();
    let m14 = bounds::max_eps(2, 14).unwrap();
    let at = bounds::hypotheses(2, 14, &m14).unwrap();
    let above = bounds::hypotheses(2, 14, &(&m14 + bounds::rational(1, 1_000_000))).unwrap();
    let zero4 = bounds::hypotheses(2, 4, &Rational::zero()).unwrap();
    let edge_ok = at.hyp1_strict && at.hyp2 && !(above.hyp1_strict && above.hyp2);
    Outcome {
        pass: m4.is_zero() && !zero4.hyp1_strict && m14 > Rational::zero() && edge_ok,
        detail: format!("max_eps(2,4)={m4}, max_eps(2,14)={m14}, frontier tight at 1e-6: {edge_ok}"),
    }
}

fn c3_counting() -> Outcome {
    use std::collections::HashSet;
    let mut ok = true;
    let mut cases = 0;
    for (p, k) in [(2, 1), (3, 1), (2, 2), (5, 1)] {
        for n in 1..=4usize {
            let s = space(p, k, n);
            let q = s.q() as u128;
            let big = q.pow(n as u32 + 1);
            let want_points = (big - 1) / (q - 1);
            let want_lines = (big - 1) * (big - q) / (q * (q + 1) * (q - 1) * (q - 1));
            let pts = s.enumerate_points();
            let lines = s.enumerate_lines().unwrap();
            let distinct_pts: HashSet<_> = pts.iter().cloned().collect();
            let distinct_lines: HashSet<Vec<usize>> = lines.iter().map(|l| s.line_point_indices(l)).collect();
            // brute force: the point sets spanned by all pairs of points
            let mut spans = HashSet::new();
            for a in 0..pts.len() {
                for b in a + 1..pts.len() {
                    spans.insert(s.line_point_indices(&s.line_through_indices(a, b).unwrap()));
                }
            }
            ok &= pts.len() as u128 == want_points
                && distinct_pts.len() == pts.len()
                && lines.len() as u128 == want_lines
                && distinct_lines.len() == lines.len()
                && spans == distinct_lines
                && lines.iter().all(|l| s.points_on_line(l).len() as u128 == q + 1);
            cases += 1;
        }
    }
    Outcome { pass: ok, detail: format!("{cases} spaces, q in {{2,3,4,5}}, n in 1..=4") }
}

fn normalized(f: &GaloisField, v: &[Elem]) -> Vec<Elem> {
    let lead = *v.iter().find(|&&c| c != 0).unwrap();
    let s = f.inv(lead);
    v.iter().map(|&c| f.mul(s, c)).collect()
}

fn comb(f: &GaloisField, a: Elem, u: &[Elem], b: Elem, v: &[Elem]) -> Vec<Elem> {
    u.iter().zip(v).map(|(&x, &y)| f.add(f.mul(a, x), f.mul(b, y))).collect()
}

/// The scalar λ with `[u + λ·v] = target`, by search over the field.
fn scale_to(f: &GaloisField, u: &[Elem], v: &[Elem], target: &[Elem]) -> Elem {
    (1..f.order() as Elem).find(|&l| normalized(f, &comb(f, 1, u, l, v)) == target).unwrap()
}

fn c4_gadgets() -> Outcome {
    let s = space(5, 1, 2);
    let f = s.field().clone();
    let np = s.num_points();
    let (mut mult_checked, mut add_checked, mut failures) = (0u64, 0u64, 0u64);

    for p in 0..np {
        let pencil: Vec<Vec<usize>> = s
            .lines_through_point(&s.point(p))
            .unwrap()
            .iter()
            .map(|l| s.line_point_indices(l).into_iter().filter(|&i| i != p).collect())
            .collect();
        let vp = s.point_coords(p);
        for (i1, l1) in pencil.iter().enumerate() {
            for (i2, l2) in pencil.iter().enumerate() {
                if i1 == i2 {
                    continue;
                }
                for &qi in l1 {
                    for &ri in l1.iter().filter(|&&r| r != qi) {
                        let vr = comb(&f, 0, &vp, scale_to(&f, &vp, &s.point_coords(ri), &s.point_coords(qi)), &s.point_coords(ri));
                        let m1 = MarkedLine::new(&s, s.point(p), s.point(qi), s.point(ri)).unwrap();
                        for &si in l2 {
                            for &ti in l2.iter().filter(|&&t| t != si) {
                                let vt = comb(&f, 0, &vp, scale_to(&f, &vp, &s.point_coords(ti), &s.point_coords(si)), &s.point_coords(ti));
                                let m2 = MarkedLine::new(&s, s.point(p), s.point(si), s.point(ti)).unwrap();
                                let gadget = MultGadget::new(&s, &m1, &m2).unwrap();
                                for a in 0..5 {
                                    for b in 1..5 {
                                        let c = f.neg(f.div(a, b));
                                        let want = normalized(&f, &comb(&f, 1, &vt, c, &vr));
                                        match gadget.apply(a, b) {
                                            Ok(o) if o.coords() == want.as_slice() => {}
                                            _ => failures += 1,
                                        }
                                        mult_checked += 1;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    for li in 0..s.num_lines() {
        let l = s.line_at(li);
        let on = s.line_point_indices(&l);
        for &p in &on {
            for &qi in on.iter().filter(|&&x| x != p) {
                for &ri in on.iter().filter(|&&x| x != p && x != qi) {
                    let m = MarkedLine::new(&s, s.point(p), s.point(qi), s.point(ri)).unwrap();
                    let vr = s.point_coords(ri);
                    let lam = scale_to(&f, &vr, &s.point_coords(p), &s.point_coords(qi));
                    let vp = comb(&f, lam, &s.point_coords(p), 0, &vr);
                    for si in (0..np).filter(|x| !on.contains(x)) {
                        let sr = s.line_point_indices(&s.line_through_indices(si, ri).unwrap());
                        let sp = s.point(si);
                        for &ti in sr.iter().filter(|&&x| x != si && x != ri) {
                            let mu = scale_to(&f, &vr, &s.point_coords(si), &s.point_coords(ti));
                            let vs = comb(&f, mu, &s.point_coords(si), 0, &vr);
                            let base = comb(&f, 1, &vp, 1, &vs);
                            let gadget = AddGadget::new(&s, &m, &sp, &s.point(ti)).unwrap();
                            for a in 0..5 {
                                for b in 0..5 {
                                    let want = normalized(&f, &comb(&f, 1, &base, f.add(a, b), &vr));
                                    match gadget.apply(a, b) {
                                        Ok(o) if o.coords() == want.as_slice() => {}
                                        _ => failures += 1,
                                    }
                                    add_checked += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Outcome {
        pass: failures == 0 && mult_checked > 0 && add_checked > 0,
        detail: format!("{mult_checked} multiplicative and {add_checked} additive evaluations on P^2(F_5), {failures} failures"),
    }
}

fn random_point<R: Rng>(s: &ProjSpace, rng: &mut R) -> ProjPoint {
    s.point(rng.random_range(0..s.num_points()))
}

fn c5_desargues() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s3 = space(7, 1, 3);
    let mut built = 0;
    let mut build_ok = true;
    while built < 200 {
        let v: Vec<Vec<Elem>> = (0..4).map(|_| (0..4).map(|_| rng.random_range(0..7)).collect()).collect();
        match gadgets::desargues_build(&s3, &v[0], &v[1], &v[2], &v[3]) {
            Ok(cfg) => {
                build_ok &= gadgets::desargues_check(&s3, &cfg);
                built += 1;
            }
            Err(_) => {
                // only dependent quadruples may be rejected
                build_ok &= projcorrect::linalg::rank(s3.field(), &v) < 4;
            }
        }
    }

    let s2 = space(7, 1, 2);
    let (mut random_valid, mut random_true) = (0, 0);
    while random_valid < 500 {
        let p: Vec<ProjPoint> = (0..6).map(|_| random_point(&s2, &mut rng)).collect();
        if let Ok(r) = gadgets::desargues_theorem_check(&s2, [&p[0], &p[1], &p[2], &p[3], &p[4], &p[5]]) {
            random_valid += 1;
            random_true += r as usize;
        }
    }
    // perspective pairs: D, E, F on the lines from a center G through A, B, C
    let (mut persp_valid, mut persp_true) = (0, 0);
    while persp_valid < 500 {
        let g = random_point(&s2, &mut rng);
        let abc: Vec<ProjPoint> = (0..3).map(|_| random_point(&s2, &mut rng)).collect();
        if abc.contains(&g) {
            continue;
        }
        let def: Vec<ProjPoint> = abc
            .iter()
            .map(|x| {
                let l = s2.points_on_line(&s2.line_through(&g, x).unwrap());
                l[rng.random_range(0..l.len())].clone()
            })
            .collect();
        if def.contains(&g) || def.iter().zip(&abc).any(|(d, a)| d == a) {
            continue;
        }
        let pts = [&abc[0], &abc[1], &abc[2], &def[0], &def[1], &def[2]];
        if let Ok(r) = gadgets::desargues_theorem_check(&s2, pts) {
            persp_valid += 1;
            persp_true += r as usize;
        }
    }
    Outcome {
        pass: build_ok && random_true == 500 && persp_true == 500,
        detail: format!(
            "200 configurations in P^3(F_7) valid: {build_ok}; random pairs true {random_true}/500; perspective pairs true {persp_true}/500"
        ),
    }
}

fn random_permutation(s: &ProjSpace, rng: &mut ChaCha8Rng) -> PointMap {
    let mut t: Vec<u32> = (0..s.num_points() as u32).collect();
    t.shuffle(rng);
    PointMap::new(s.clone(), s.clone(), t).unwrap()
}

fn c6_oracle() -> Outcome {
    let s = space(2, 1, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut agree, mut total, mut corrected) = (0, 0, 0);
    for _ in 0..50 {
        let f = random_permutation(&s, &mut rng);
        for x in 0..s.num_points() {
            let p = s.point(x);
            let fast = corrector::correct_point_exact(&f, &p).unwrap();
            let slow = harness::naive_correct_point(&f, &p).unwrap();
            agree += (fast == slow) as usize;
            corrected += fast.z.is_some() as usize;
            total += 1;
        }
    }
    Outcome {
        pass: agree == total,
        detail: format!("{agree}/{total} points agree over 50 random permutations of P^4(F_2) ({corrected} correctable)"),
    }
}

fn c7_recovery() -> Outcome {
    let spec = ExperimentSpec {
        field: FieldSpec::prime(3),
        n: 4,
        planted_sigma: PlantedSigma::Random,
        corruption: Corruption::SwapPairs { count: 3 },
        mode: CorrectionMode::Exact,
        trials: 100,
        master_seed: 2024,
    };
    let res = harness::run_experiment(&spec).unwrap();
    let recovered = res.iter().filter(|r| r.recovered).count();
    let rec_ok = res.iter().filter(|r| r.recovered).all(|r| r.reconstruction_ok);
    let applicable = res.iter().filter(|r| r.hypotheses.guarantee_applicable).count();
    Outcome {
        pass: recovered >= 95 && rec_ok,
        detail: format!(
            "recovered {recovered}/100, reconstruction matches planted in every recovered trial: {rec_ok}; guarantee applicable in {applicable} trials (expected 0 at this size)"
        ),
    }
}

/// `r = λ·p` for some nonzero λ.
fn scalar_multiple(f: &GaloisField, r: &[Vec<Elem>], p: &[Vec<Elem>]) -> bool {
    (1..f.order() as Elem).any(|l| r.iter().zip(p).all(|(rr, pr)| rr.iter().zip(pr).all(|(&x, &y)| x == f.mul(l, y))))
}

fn c8_roundtrip() -> Outcome {
    let s = space(3, 2, 4);
    let f = s.field().clone();
    let mut good = 0;
    for seed in 0..100u64 {
        let planted = harness::gen_semilinear(&s, seed, PlantedSigma::Exponent(1)).unwrap();
        let map = planted.to_point_map(&s).unwrap();
        if let Ok(rec) = corrector::reconstruct_semilinear(&map) {
            if rec.sigma().exponent() == 1 && scalar_multiple(&f, rec.matrix(), planted.matrix()) {
                good += 1;
            }
        }
    }
    Outcome { pass: good == 100, detail: format!("{good}/100 seeds over GF(9), n=4, sigma exponent 1") }
}

fn report_bytes(spec: &ExperimentSpec, threads: usize) -> (Vec<u8>, Vec<u8>) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let res = harness::run_experiment(spec).unwrap();
        (
            harness::render_report(&res, ReportFormat::Json).unwrap(),
            harness::render_report(&res, ReportFormat::Csv).unwrap(),
        )
    })
}

fn c9_determinism() -> Outcome {
    let mut spec = ExperimentSpec {
        field: FieldSpec::prime(2),
        n: 4,
        planted_sigma: PlantedSigma::Random,
        corruption: Corruption::SwapPairs { count: 2 },
        mode: CorrectionMode::Exact,
        trials: 8,
        master_seed: 99,
    };
    let exact_same = report_bytes(&spec, 1) == report_bytes(&spec, 4);
    spec.mode = CorrectionMode::sampled(7);
    spec.field = FieldSpec::with_default_modulus(2, 2).unwrap();
    let sampled_same = report_bytes(&spec, 1) == report_bytes(&spec, 3);
    Outcome {
        pass: exact_same && sampled_same,
        detail: format!("1 vs 4 threads exact mode identical: {exact_same}; 1 vs 3 threads sampled mode identical: {sampled_same}"),
    }
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 9] = [
        ("bound arithmetic", c1_bounds, Some(Duration::from_secs(1))),
        ("hypothesis frontier", c2_frontier, Some(Duration::from_secs(5))),
        ("counting", c3_counting, Some(Duration::from_secs(10))),
        ("gadget identities", c4_gadgets, Some(Duration::from_secs(30))),
        ("desargues", c5_desargues, Some(Duration::from_secs(30))),
        ("oracle equivalence", c6_oracle, Some(Duration::from_secs(120))),
        ("recovery", c7_recovery, Some(Duration::from_secs(600))),
        ("semilinear round-trip", c8_roundtrip, Some(Duration::from_secs(120))),
        ("determinism", c9_determinism, None),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took < l);
        let pass = out.pass && in_time;
        failed += !pass as usize;
        let limit_txt = limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs()));
        println!(
            "criterion {id} [{name}]: {} - {}; {:.2}s{limit_txt}",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
