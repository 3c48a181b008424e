//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::{BTreeMap, HashSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schreier_liouville::constructions::{cylinder_verify, thompson_family, LamplighterFamily, ThompsonFamily};
use schreier_liouville::groups::{FreeGroupAction, FreeWord, GroupAction, IntegerAction, LampConfig, Lamplighter};
use schreier_liouville::liouville::{
    assemble, geometric_weights, plan_schedule, schedule_with_indices, select_m, verify_bound, BoundReport, CouplingFamily,
    VerifyOptions,
};
use schreier_liouville::measures::{
    lazify, step_with, symmetrize_check, tv, with_workers, Kernel, OrbitDist, StepOptions, DEFAULT_PRUNE,
};
use schreier_liouville::numerics::{Dyadic, ExactWeight, Weight};
use schreier_liouville::schreier::{cheeger_graph, orbit_ball, SimpleGraph};
use schreier_liouville::thompson::{map_tuple, pl_eval, x0, x1, PLMap, ThompsonAction};

const CHEEGER_TOL: f64 = 1e-6;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rat(d: &Dyadic) -> BigRational {
    BigRational::new(BigInt::from(d.num().clone()), BigInt::one() << d.exp())
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Piecewise-linear map given by breakpoints, evaluated in plain rationals.
fn pl_rational(points: &[(BigRational, BigRational)], t: &BigRational) -> BigRational {
    for w in points.windows(2) {
        let ((a, fa), (b, fb)) = (&w[0], &w[1]);
        if t >= a && t <= b {
            return fa + (t - a) * (fb - fa) / (b - a);
        }
    }
    panic!("{t} outside [0, 1]");
}

fn x0_points() -> Vec<(BigRational, BigRational)> {
    vec![(q(0, 1), q(0, 1)), (q(1, 2), q(1, 4)), (q(3, 4), q(1, 2)), (q(1, 1), q(1, 1))]
}

fn x1_points() -> Vec<(BigRational, BigRational)> {
    vec![(q(0, 1), q(0, 1)), (q(1, 2), q(1, 2)), (q(3, 4), q(5, 8)), (q(7, 8), q(3, 4)), (q(1, 1), q(1, 1))]
}

fn swap(p: Vec<(BigRational, BigRational)>) -> Vec<(BigRational, BigRational)> {
    p.into_iter().map(|(a, b)| (b, a)).collect()
}

fn random_dyadic(rng: &mut ChaCha8Rng, max_exp: u32) -> Dyadic {
    let e = rng.gen_range(1..=max_exp);
    Dyadic::from_u64(rng.gen_range(1..1u64 << e), e)
}

// 1. composition, inverses and canonical forms on random words
fn thompson_algebra() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gens = [x0(), x1(), x0().inverse(), x1().inverse()];
    let oracle = [x0_points(), x1_points(), swap(x0_points()), swap(x1_points())];
    let mut failures = Vec::new();
    for w in 0..300 {
        let len = rng.gen_range(0..=10);
        let word: Vec<usize> = (0..len).map(|_| rng.gen_range(0..4)).collect();
        // letters act left to right
        let mut g = PLMap::identity();
        for &s in &word {
            g = gens[s].compose(&g).unwrap();
        }
        for _ in 0..20 {
            let t = random_dyadic(&mut rng, 12);
            let mut stepwise = rat(&t);
            for &s in &word {
                stepwise = pl_rational(&oracle[s], &stepwise);
            }
            if rat(&pl_eval(&g, &t).unwrap()) != stepwise {
                failures.push(format!("word {w} at {t}"));
            }
        }
        if !g.compose(&g.inverse()).unwrap().is_identity() || !g.inverse().compose(&g).unwrap().is_identity() {
            failures.push(format!("word {w}: g g^-1 is not the identity"));
        }
        // a free reduction of the padded word must give the same canonical map
        let mut padded = Vec::new();
        for &s in &word {
            padded.push(s);
            if rng.gen_bool(0.5) {
                let r = rng.gen_range(0..4);
                padded.extend([r, (r + 2) % 4]);
            }
        }
        let mut h = PLMap::identity();
        for &s in &padded {
            h = gens[s].compose(&h).unwrap();
        }
        if h != g || h.breakpoints() != g.breakpoints() {
            failures.push(format!("word {w}: canonical forms differ"));
        }
        // redundant collinear breakpoints are removed
        let mut pts = g.breakpoints().to_vec();
        let mid = pts[0].0.midpoint(&pts[1].0).unwrap();
        pts.insert(1, (mid.clone(), pl_eval(&g, &mid).unwrap()));
        if PLMap::from_breakpoints(pts).unwrap() != g {
            failures.push(format!("word {w}: subdivided map differs"));
        }
    }
    verdict(failures.is_empty(), format!("300 words, {} failures {:?}", failures.len(), failures.first()))
}

fn sorted_tuple(rng: &mut ChaCha8Rng, len: usize) -> Vec<Dyadic> {
    loop {
        let mut v: Vec<Dyadic> = (0..len).map(|_| random_dyadic(rng, 10)).collect();
        v.sort();
        v.dedup();
        if v.len() == len {
            return v;
        }
    }
}

fn is_power_of_two(r: &BigRational) -> bool {
    let (n, d) = (r.numer(), r.denom());
    let pow2 = |x: &BigInt| *x > BigInt::zero() && (x & (x - BigInt::one())).is_zero();
    pow2(n) && pow2(d)
}

// 2. strong transitivity
fn strong_transitivity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    for case in 0..200 {
        let len = rng.gen_range(1..=5);
        let (src, dst) = (sorted_tuple(&mut rng, len), sorted_tuple(&mut rng, len));
        let g = match map_tuple(&src, &dst) {
            Ok(g) => g,
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        let pts: Vec<(BigRational, BigRational)> = g.breakpoints().iter().map(|(a, b)| (rat(a), rat(b))).collect();
        for p in &pts {
            for c in [&p.0, &p.1] {
                if !is_power_of_two(&BigRational::from_integer(c.denom().clone())) {
                    failures.push(format!("case {case}: breakpoint {c} is not dyadic"));
                }
            }
        }
        for w in pts.windows(2) {
            let slope = (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0);
            if !is_power_of_two(&slope) {
                failures.push(format!("case {case}: slope {slope}"));
            }
        }
        for (s, t) in src.iter().zip(&dst) {
            if pl_rational(&pts, &rat(s)) != rat(t) {
                failures.push(format!("case {case}: {s} not sent to {t}"));
            }
        }
        if pl_eval(&g, &Dyadic::zero()).unwrap() != Dyadic::zero() || pl_eval(&g, &Dyadic::one()).unwrap() != Dyadic::one() {
            failures.push(format!("case {case}: endpoints moved"));
        }
    }
    verdict(failures.is_empty(), format!("200 tuple pairs, {} failures {:?}", failures.len(), failures.first()))
}

// 3. x0 translates the hair
fn hair_translation() -> Verdict {
    let g = x0();
    let bad: Vec<u32> = (2..=40u32)
        .filter(|&m| {
            let t = Dyadic::one_minus_pow2(m).unwrap();
            let expected = BigRational::one() - BigRational::new(BigInt::one(), BigInt::one() << (m - 1));
            rat(&pl_eval(&g, &t).unwrap()) != expected
        })
        .collect();
    verdict(bad.is_empty(), format!("m = 2..=40, mismatches {bad:?}"))
}

// 4. BFS against closed forms
fn bfs_oracles() -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;
    for r in 0..=7u32 {
        let size = orbit_ball(&FreeGroupAction, &FreeWord::empty(), r).unwrap().len();
        let expected = 2 * 3usize.pow(r) - 1;
        if size != expected {
            ok = false;
            notes.push(format!("free r={r}: {size} != {expected}"));
        }
    }
    let t = ThompsonAction::new();
    let half = ThompsonAction::half();
    let b1 = orbit_ball(&t, &half, 1).unwrap();
    let got: HashSet<String> = b1.vertices().iter().map(|v| v.to_string()).collect();
    let want: HashSet<String> = ["1/4", "1/2", "3/4"].iter().map(|s| s.to_string()).collect();
    if got != want {
        ok = false;
        notes.push(format!("B(1/2,1) = {got:?}"));
    }
    let b12 = orbit_ball(&t, &half, 12).unwrap();
    let x0_label = b12.labels().iter().position(|l| l == "x0").expect("x0 label");
    let edges: HashSet<(usize, usize, usize)> = b12.edges().iter().copied().collect();
    let mut hair_edges = 0;
    for m in 2..=13u32 {
        let (u, w) = (Dyadic::one_minus_pow2(m).unwrap(), Dyadic::one_minus_pow2(m - 1).unwrap());
        match (b12.index_of(&u), b12.index_of(&w)) {
            (Some(iu), Some(iw)) if edges.contains(&(iu, x0_label, iw)) => hair_edges += 1,
            _ => {
                ok = false;
                notes.push(format!("hair edge {u} -> {w} missing"));
            }
        }
    }
    verdict(ok, format!("free balls r<=7, B(1/2,1), {hair_edges} hair edges up to radius 12 {notes:?}"))
}

// 5. window coupling on K = B(1/2, 3) with n = 50
fn coupling_certificate() -> Verdict {
    let t = ThompsonAction::new();
    let ball = orbit_ball(&t, &ThompsonAction::half(), 3).unwrap();
    let mut k: Vec<Dyadic> = ball.vertices().to_vec();
    k.sort();
    let entry = thompson_family(50, &k).unwrap();
    let cert = entry.certify(&t).unwrap();

    // oracle: explicit powers of the generator; every orbit is uniform on 101 points
    let g = &entry.generator;
    let mut powers = vec![PLMap::identity()];
    for base in [g.clone(), g.inverse()] {
        let mut p = PLMap::identity();
        for _ in 0..50 {
            p = base.compose(&p).unwrap();
            powers.push(p.clone());
        }
    }
    let orbit = |x: &Dyadic| -> HashSet<Dyadic> { powers.iter().map(|p| pl_eval(p, x).unwrap()).collect() };
    let orbits: BTreeMap<Dyadic, HashSet<Dyadic>> = k.iter().map(|x| (x.clone(), orbit(x))).collect();
    let members: HashSet<&Dyadic> = k.iter().collect();
    let mut worst = BigRational::zero();
    for x in &k {
        for (_, s) in t.symmetric_generators() {
            let y = t.act(&s, x).unwrap();
            if y == *x || !members.contains(&y) {
                continue;
            }
            let common = orbits[x].intersection(&orbits[&y]).count() as i64;
            let d = q(2 * (101 - common), 101);
            worst = worst.max(d);
        }
    }
    let limit = q(2 * (k.len() as i64 - 1), 101);
    let cert_rat = BigRational::new(BigInt::from(cert.worst.numer().clone()), BigInt::from(cert.worst.denom().clone()));
    let consecutive_ok = !cert.consecutive.is_empty() && cert.consecutive.iter().all(|d| *d == ExactWeight::ratio(2, 101));
    let pass = cert_rat == worst && worst <= limit && consecutive_ok && orbits.values().all(|o| o.len() == 101);
    verdict(
        pass,
        format!(
            "|K| = {}, worst {} (oracle {worst}) <= {limit}, {} consecutive pairs at 2/101: {consecutive_ok}",
            k.len(),
            cert.worst,
            cert.consecutive.len()
        ),
    )
}

// 6. m_j from the definition
fn scheduler_oracle() -> Verdict {
    let c = geometric_weights(&ExactWeight::ratio(1, 2), 4).unwrap();
    let got: Vec<u32> = (1..=3).map(|j| select_m(&c, j).unwrap()).collect();
    let brute: Vec<u32> = (1..=3i64)
        .map(|j| {
            let s: BigRational = (0..j).map(|i| q(1, 2i64.pow(i as u32 + 1))).sum();
            (1..).find(|&m| num_traits::pow(s.clone(), m as usize) <= q(1, j)).unwrap()
        })
        .collect();
    verdict(got == brute && got == [1, 3, 9], format!("m = {got:?}, brute force {brute:?}"))
}

fn report_lines<W: Weight>(r: &BoundReport<W>) -> String {
    r.checks
        .iter()
        .map(|c| {
            format!(
                "[j={} y={} T={} B={} 3/j={} pruned={:e} contained={}]",
                c.j,
                c.neighbor,
                c.tv.to_csv(),
                c.bound,
                c.nominal,
                c.pruned,
                c.contained
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

// 7. full scheduled bound on Thompson's group, J = 3
fn thompson_bound() -> Verdict {
    let family = ThompsonFamily::new(schreier_liouville::constructions::DEFAULT_THOMPSON_RADIUS).unwrap();
    let weights = geometric_weights(&ExactWeight::ratio(1, 2), 4).unwrap();
    let opts = VerifyOptions { step: StepOptions { prune: DEFAULT_PRUNE, ..StepOptions::default() }, ..VerifyOptions::default() };
    let x = family.basepoint();
    let plan = plan_schedule(&family, &weights, 3).unwrap();
    let run = |sched| -> (bool, String) {
        let assembled = assemble(sched, &family).unwrap();
        let r = verify_bound::<_, f64>(&assembled, sched, &family, &x, &opts).unwrap();
        (r.all_hold() && !r.checks.is_empty(), report_lines(&r))
    };
    if plan.is_complete() {
        let (ok, lines) = run(&plan.schedule);
        return verdict(ok, lines);
    }
    // partial evidence on the schedulable prefix
    let prefix = plan_schedule(&family, &weights[..2], 1).unwrap();
    let (ok, lines) = run(&prefix.schedule);
    verdict(
        false,
        format!(
            "scheduled {} of 3 ({}); J=1 truncation holds: {ok} {lines}",
            plan.schedule.truncation(),
            plan.failure.unwrap_or_default()
        ),
    )
}

// 8. lamplighter over Z, exact
fn lamplighter_bound() -> (Verdict, BoundReport<ExactWeight>) {
    let family = LamplighterFamily::new(IntegerAction, 0, 2000).unwrap();
    let weights = geometric_weights(&ExactWeight::ratio(1, 2), 4).unwrap();
    let plan = plan_schedule(&family, &weights, 3).unwrap();
    let assembled = assemble(&plan.schedule, &family).unwrap();
    let x = LampConfig::empty();
    let r = cylinder_verify(&assembled, &plan.schedule, &family, &x).unwrap();
    let coupled_zero = r.checks.iter().all(|c| c.coupled_tv.is_zero());

    // second route on a J=1 truncation, small enough to expand explicitly
    let short = plan_schedule(&family, &weights[..2], 1).unwrap();
    let small = assemble(&short.schedule, &family).unwrap();
    let explicit = verify_bound::<_, ExactWeight>(&small, &short.schedule, &family, &x, &VerifyOptions::default()).unwrap();
    let cylinders = cylinder_verify(&small, &short.schedule, &family, &x).unwrap();
    let routes_agree = explicit.checks.iter().zip(&cylinders.checks).all(|(a, b)| a.tv == b.tv && a.coupled_tv == b.coupled_tv);

    let pass = plan.is_complete() && r.checks.len() == 3 && r.all_hold() && coupled_zero && routes_agree;
    let v = verdict(
        pass,
        format!(
            "n = {:?}, coupled part zero: {coupled_zero}, engines agree on J=1: {routes_agree} {}",
            plan.schedule.indices(),
            report_lines(&r)
        ),
    );
    (v, r)
}

fn lazy_contrast<W: Weight>(steps: u32, alpha: W) -> BoundReport<W> {
    let t = ThompsonAction::new();
    let nu = schreier_liouville::constructions::base_measure(&t).unwrap();
    let nu: schreier_liouville::measures::GroupMeasure<PLMap, W> =
        schreier_liouville::measures::GroupMeasure::from_pairs(nu.iter().map(|(g, w)| (g.clone(), W::from_exact(w)))).unwrap();
    let kernel = Kernel::from_measure(&lazify(&nu, &alpha, &t).unwrap());
    let x = ThompsonAction::half();
    let mut decay = Vec::new();
    for y in schreier_liouville::liouville::neighbors(&t, &x).unwrap() {
        let (mut dx, mut dy): (OrbitDist<Dyadic, W>, OrbitDist<Dyadic, W>) = (OrbitDist::dirac(x.clone()), OrbitDist::dirac(y.clone()));
        for m in 0..=steps {
            if m > 0 {
                dx = step_with(&dx, &kernel, &t, &StepOptions::default()).unwrap();
                dy = step_with(&dy, &kernel, &t, &StepOptions::default()).unwrap();
            }
            decay.push(schreier_liouville::liouville::DecayRow {
                m,
                neighbor: y.to_string(),
                tv: tv(&dx, &dy),
                support_x: dx.len(),
                support_y: dy.len(),
                pruned: dx.pruned() + dy.pruned(),
            });
        }
    }
    BoundReport { checks: Vec::new(), decay }
}

// 9. distances never grow along any run
fn contraction(lamp: &BoundReport<ExactWeight>) -> Verdict {
    let family = ThompsonFamily::new(8).unwrap();
    let weights = geometric_weights(&ExactWeight::ratio(1, 2), 2).unwrap();
    let plan = plan_schedule(&family, &weights, 1).unwrap();
    let assembled = assemble(&plan.schedule, &family).unwrap();
    let x = family.basepoint();
    let exact = verify_bound::<_, ExactWeight>(&assembled, &plan.schedule, &family, &x, &VerifyOptions::default()).unwrap();
    let float = verify_bound::<_, f64>(&assembled, &plan.schedule, &family, &x, &VerifyOptions::default()).unwrap();
    let lazy_exact = lazy_contrast(10, ExactWeight::ratio(1, 2));
    let lazy_float = lazy_contrast(14, 0.5f64);

    // oracle: consecutive rows compared directly
    fn monotone<W: Weight>(r: &BoundReport<W>) -> bool {
        r.decay.windows(2).all(|w| w[0].neighbor != w[1].neighbor || w[1].tv.to_f64() <= w[0].tv.to_f64() + w[1].pruned + 1e-12)
    }
    let runs = [
        ("thompson exact", exact.contraction_holds() && exact.checkpoints_monotone() && monotone(&exact)),
        ("thompson float", float.contraction_holds() && float.checkpoints_monotone() && monotone(&float)),
        ("lamplighter", lamp.contraction_holds() && lamp.checkpoints_monotone() && monotone(lamp)),
        ("lazy exact", lazy_exact.contraction_holds() && monotone(&lazy_exact)),
        ("lazy float", lazy_float.contraction_holds() && monotone(&lazy_float)),
    ];
    let rows: usize = exact.decay.len() + float.decay.len() + lamp.decay.len() + lazy_exact.decay.len() + lazy_float.decay.len();
    verdict(runs.iter().all(|r| r.1), format!("{rows} decay rows {runs:?}"))
}

fn eigen_oracle(g: &SimpleGraph) -> f64 {
    let d = g.degree_bound as f64;
    let mut l = DMatrix::<f64>::zeros(g.n, g.n);
    for &(u, w) in &g.edges {
        if u != w {
            l[(u, u)] += 1.0;
            l[(w, w)] += 1.0;
            l[(u, w)] -= 1.0;
            l[(w, u)] -= 1.0;
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(l / d).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev[1]
}

fn brute_expansion(g: &SimpleGraph) -> f64 {
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << g.n) {
        let size = mask.count_ones() as usize;
        if 2 * size > g.n {
            continue;
        }
        let cut = g.edges.iter().filter(|&&(u, w)| u != w && ((mask >> u) & 1) != ((mask >> w) & 1)).count();
        best = best.min(cut as f64 / size as f64);
    }
    best
}

// 10. Cheeger band and its inputs against independent computations
fn cheeger_band() -> Verdict {
    let mut graphs: Vec<(String, SimpleGraph)> = vec![
        ("C4".into(), SimpleGraph::cycle(4)),
        ("K4".into(), SimpleGraph::complete(4)),
        ("C9".into(), SimpleGraph::cycle(9)),
        ("K6".into(), SimpleGraph::complete(6)),
    ];
    let t = ThompsonAction::new();
    for r in 1..=3 {
        graphs.push((format!("thompson B{r}"), orbit_ball(&t, &ThompsonAction::half(), r).unwrap().to_graph()));
    }
    graphs.push(("free B2".into(), orbit_ball(&FreeGroupAction, &FreeWord::empty(), 2).unwrap().to_graph()));
    let lz = Lamplighter::new(IntegerAction, 0);
    for r in 1..=3 {
        graphs.push((format!("lamplighter-z B{r}"), orbit_ball(&lz, &LampConfig::empty(), r).unwrap().to_graph()));
    }
    let lf = Lamplighter::new(FreeGroupAction, FreeWord::empty());
    for r in 1..=3 {
        graphs.push((format!("lamplighter-f2 B{r}"), orbit_ball(&lf, &LampConfig::empty(), r).unwrap().to_graph()));
    }

    let mut ok = true;
    let mut notes = Vec::new();
    let mut banded = 0;
    for (name, g) in &graphs {
        let rep = cheeger_graph(g).unwrap();
        let oracle_l1 = eigen_oracle(g);
        if (rep.lambda1 - oracle_l1).abs() > CHEEGER_TOL || !rep.converged {
            ok = false;
            notes.push(format!("{name}: lambda1 {} vs {oracle_l1}", rep.lambda1));
        }
        if let Some(h) = rep.exact_value() {
            let brute = brute_expansion(g);
            let hn = brute / g.degree_bound as f64;
            let band = oracle_l1 / 2.0 <= hn + CHEEGER_TOL && hn <= (2.0 * oracle_l1).sqrt() + CHEEGER_TOL;
            if (h - brute).abs() > 1e-12 || !band || rep.band_holds(CHEEGER_TOL) != Some(true) {
                ok = false;
                notes.push(format!("{name}: h {h} brute {brute} band {band}"));
            }
            banded += 1;
        }
        if name.starts_with("lamplighter-f2") {
            notes.push(format!("{name}: {} vertices, spectral lower bound {:.4}", rep.vertices, rep.spectral_lower_bound()));
        }
    }
    let c4 = cheeger_graph(&SimpleGraph::cycle(4)).unwrap().exact_value();
    let k4 = cheeger_graph(&SimpleGraph::complete(4)).unwrap().exact_value();
    if c4 != Some(1.0) || k4 != Some(2.0) {
        ok = false;
    }
    verdict(ok, format!("h(C4) = {c4:?}, h(K4) = {k4:?}, {banded} graphs banded; {}", notes.join("; ")))
}

// 11. the assembled Thompson measure is symmetric and non-degenerate
fn symmetry() -> Verdict {
    let t = ThompsonAction::new();
    let family = ThompsonFamily::new(8).unwrap();
    let weights = geometric_weights(&ExactWeight::ratio(1, 2), 4).unwrap();
    let plan = plan_schedule(&family, &weights[..2], 1).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    for (label, sched) in [
        ("J=1 schedule", plan.schedule.clone()),
        ("indices 1,2,3", schedule_with_indices(&family, &weights, &[1, 2, 3]).unwrap()),
    ] {
        let mu = assemble(&sched, &family).unwrap().materialize(&t, 1 << 16).unwrap();
        let sym = symmetrize_check(&mu, &t);
        let gens_in = t.symmetric_generators().iter().all(|(_, s)| !mu.weight(s).is_zero());
        let mass_one = mu.mass() == ExactWeight::one();
        ok &= sym && gens_in && mass_one;
        notes.push(format!("{label}: |supp| = {}, symmetric {sym}, contains S and S^-1 {gens_in}", mu.len()));
    }
    verdict(ok, notes.join("; "))
}

// 12. exact outputs do not depend on the worker count
fn determinism() -> Verdict {
    let thompson = |w: usize| {
        with_workers(w, || {
            let family = ThompsonFamily::new(8).unwrap();
            let weights = geometric_weights(&ExactWeight::ratio(1, 2), 2).unwrap();
            let plan = plan_schedule(&family, &weights, 1).unwrap();
            let a = assemble(&plan.schedule, &family).unwrap();
            let r = verify_bound::<_, ExactWeight>(&a, &plan.schedule, &family, &family.basepoint(), &VerifyOptions::default()).unwrap();
            let lazy = lazy_contrast(12, ExactWeight::ratio(1, 2));
            (plan.to_csv(), r.decay_csv(), lazy.decay_csv(), r)
        })
        .unwrap()
    };
    let lamp = |w: usize| {
        with_workers(w, || {
            let family = LamplighterFamily::new(IntegerAction, 0, 40).unwrap();
            let weights = geometric_weights(&ExactWeight::ratio(1, 2), 3).unwrap();
            let plan = plan_schedule(&family, &weights, 2).unwrap();
            let a = assemble(&plan.schedule, &family).unwrap();
            let r = cylinder_verify(&a, &plan.schedule, &family, &LampConfig::empty()).unwrap();
            (plan.to_csv(), r.decay_csv(), r)
        })
        .unwrap()
    };
    let (t1, t4) = (thompson(1), thompson(4));
    let (l1, l4) = (lamp(1), lamp(4));
    let same_t = t1.0 == t4.0 && t1.1 == t4.1 && t1.2 == t4.2 && t1.3 == t4.3;
    let same_l = l1.0 == l4.0 && l1.1 == l4.1 && l1.2 == l4.2;
    verdict(same_t && same_l, format!("thompson identical: {same_t}, lamplighter identical: {same_l}"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, budget: Duration, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} {name}: {} ({:.2?} of {:.0?})",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed,
            budget
        );
    };
    let s = Duration::from_secs;
    report(1, "thompson algebra", s(10), &mut thompson_algebra);
    report(2, "strong transitivity", s(30), &mut strong_transitivity);
    report(3, "hair translation", s(1), &mut hair_translation);
    report(4, "schreier bfs", s(60), &mut bfs_oracles);
    report(5, "coupling certificate", s(120), &mut coupling_certificate);
    report(6, "scheduler", s(1), &mut scheduler_oracle);
    report(7, "thompson scheduled bound", s(900), &mut thompson_bound);
    let mut lamp = None;
    report(8, "lamplighter scheduled bound", s(300), &mut || {
        let (v, r) = lamplighter_bound();
        lamp = Some(r);
        v
    });
    let lamp = lamp.expect("criterion 8 ran");
    report(9, "l1 contraction", s(300), &mut || contraction(&lamp));
    report(10, "cheeger band", s(60), &mut cheeger_band);
    report(11, "symmetry", s(60), &mut symmetry);
    report(12, "determinism", s(300), &mut determinism);
    println!("{} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
