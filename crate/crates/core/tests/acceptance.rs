//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p rigidtop --test acceptance`. The process exits
//! nonzero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rigidtop::certificate::{load, save, verify_replay, verify_replay_with, CertificateFile};
use rigidtop::construction::{ElementPredicate, FSource};
use rigidtop::group::GroupElement;
use rigidtop::rational::Rational;
use rigidtop::staircase::lipschitz_defect;
use rigidtop::topology::{
    certify, hausdorff_certificate, power_rigidity_sequence, rigidity_defect_global, uniform_displacement_bound,
};
use rigidtop::{Construction, GroupSpec, Policy, Profile, StepRule};

use common::{defect, phi_values, psi_values, table_values, BruteForceLine};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

const NODE_CAP: u64 = 10_000_000;

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn int(x: i64) -> GroupElement {
    GroupElement::Int(x)
}

fn ints(set: &[GroupElement]) -> Vec<i64> {
    set.iter()
        .map(|g| match g {
            GroupElement::Int(t) => *t,
            other => panic!("not an integer: {other}"),
        })
        .collect()
}

fn build(spec: GroupSpec, profile: Profile, policy: Policy, stages: usize) -> Result<Construction, String> {
    Construction::build(spec, profile.with_node_cap(NODE_CAP), policy, stages).map_err(|e| e.to_string())
}

fn default_policy() -> Policy {
    Policy::Default { count: 2 }
}

fn within(started: Instant, limit: Duration) -> Result<(), String> {
    let spent = started.elapsed();
    ensure(spent < limit, || format!("took {spent:.1?}, limit {limit:?}"))
}

/// Word distance from 0 to `q` in `Z/m` for the generators `±1, ±a`, by
/// minimizing `|x| + |y|` over `x + a y ≡ q`.
fn line_distance(q: i64, a: i64, m: i64) -> i64 {
    (-m..=m)
        .map(|y| {
            let x = (q - a * y).rem_euclid(m);
            y.abs() + x.min(m - x)
        })
        .min()
        .unwrap()
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let c = build(GroupSpec::integer_line(), Profile::paper(), default_policy(), 2)?;
    let (s1, s2) = (&c.stages[0], &c.stages[1]);
    let (m1, m2) = (s1.quotient().modulus() as i64, s2.quotient().modulus() as i64);
    ensure(ints(&s1.params.set) == [-1, 0, 1], || format!("S_1 = {:?}", s1.params.set))?;
    let a = ints(&s2.params.set).into_iter().max().unwrap();
    ensure(ints(&s2.params.set) == [-a, -1, 0, 1, a], || format!("S_2 = {:?}", s2.params.set))?;
    for q in 0..m1 {
        let expected = if [0, 1, m1 - 1].contains(&q) { r(1, 1) } else { r(0, 1) };
        let got = s1.phi.value_of(&int(q)).map_err(|e| e.to_string())?;
        ensure(got == expected, || format!("phi_1({q}) = {got}, expected {expected}"))?;
    }
    let mut seen = [false; 12];
    for q in 0..m2 {
        let d = line_distance(q, a, m2);
        let phi2 = r((11 - d).max(0), 11);
        seen[d.min(11) as usize] = true;
        let got = s2.phi.value_of(&int(q)).map_err(|e| e.to_string())?;
        ensure(got == phi2, || format!("phi_2({q}) = {got}, expected {phi2}"))?;
        let phi1 = s1.phi.value_of(&int(q)).map_err(|e| e.to_string())?;
        let psi = s2.psi.value_of(&int(q)).map_err(|e| e.to_string())?;
        ensure(psi == phi1.min(phi2), || format!("psi_2({q}) = {psi}, expected min({phi1}, {phi2})"))?;
    }
    ensure(seen.iter().all(|&b| b), || "some staircase level is never attained".into())?;
    within(started, Duration::from_secs(60))?;
    Ok(format!("moduli {m1}, {m2}; levels 1, 10/11, ..., 1/11, 0 on spheres 0..11"))
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let c = build(GroupSpec::integer_line(), Profile::paper(), default_policy(), 3)?;
    let f1 = &c.stages[0].f_next;
    for s in f1 {
        let d = rigidity_defect_global(&c.stages[1], s).map_err(|e| e.to_string())?;
        ensure(d < r(1, 10), || format!("stage-2 defect of {s} is {d}"))?;
    }
    let s3 = &c.stages[2];
    let mut worst = r(0, 1);
    for s in &s3.params.set {
        let d = lipschitz_defect(&s3.phi, s).map_err(|e| e.to_string())?;
        ensure(d < r(1, 100), || format!("phi_3 defect of {s} is {d}"))?;
        worst = worst.max(d);
    }
    for s in f1 {
        let d = rigidity_defect_global(s3, s).map_err(|e| e.to_string())?;
        ensure(d < r(1, 10) + r(1, 100), || format!("stage-3 defect of {s} is {d}"))?;
    }
    within(started, Duration::from_secs(120))?;
    Ok(format!("|S_3| = {}, max phi_3 defect {worst}", s3.params.set.len()))
}

fn criterion_3() -> Outcome {
    let mut compared = 0usize;
    for profile in [Profile::paper(), Profile::desk(), Profile::new(StepRule::Custom(vec![1, 4, 20]))] {
        let c = build(GroupSpec::integer_line(), profile, default_policy(), 2)?;
        let mut prev: Option<Vec<Rational>> = None;
        for stage in &c.stages {
            let m = stage.quotient().modulus();
            ensure(m <= 2000, || format!("modulus {m} exceeds 2000"))?;
            let set = ints(&stage.params.set);
            let phi = phi_values(stage.n(), &set, stage.params.steps, m);
            let psi = psi_values(&phi, prev.as_deref());
            ensure(table_values(&stage.phi) == phi, || format!("phi_{} differs", stage.n()))?;
            ensure(table_values(&stage.psi) == psi, || format!("psi_{} differs", stage.n()))?;
            for (s, t) in stage.params.set.iter().zip(&set) {
                let got = rigidity_defect_global(stage, s).map_err(|e| e.to_string())?;
                ensure(got == defect(&psi, *t), || format!("defect of {t} at stage {}", stage.n()))?;
            }
            compared += m as usize;
            prev = Some(psi);
        }
        let file = CertificateFile::new(&c, certify(&c, 2).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let report = verify_replay_with(&file, &BruteForceLine).map_err(|e| e.to_string())?;
        ensure(report.clean(), || format!("reference replay mismatches: {:?}", report.mismatches()))?;
    }
    Ok(format!("{compared} quotient elements compared over 3 profiles"))
}

fn end_to_end(spec: GroupSpec) -> Outcome {
    let started = Instant::now();
    let c = build(spec.clone(), Profile::desk(), default_policy(), 3)?;
    for s in &c.stages {
        let failed: Vec<&str> = s.checks.iter().filter(|k| k.gating && !k.passed).map(|k| k.name.as_str()).collect();
        ensure(failed.is_empty(), || format!("stage {} failed {failed:?}", s.n()))?;
        ensure(!s.zero_windows.witnesses.is_empty(), || format!("stage {} has no zero window", s.n()))?;
    }
    let ball = spec.generator_ball(2, NODE_CAP).map_err(|e| e.to_string())?.into_elements();
    let witnesses = hausdorff_certificate(&c, 2).map_err(|e| e.to_string())?;
    ensure(witnesses.len() + 1 == ball.len() && witnesses.iter().all(|w| w.separated()), || {
        format!(
            "{} of {} elements of B_2 separated",
            witnesses.iter().filter(|w| w.separated()).count(),
            ball.len() - 1
        )
    })?;
    let t = certify(&c, 2).map_err(|e| e.to_string())?;
    let f = t.flags;
    ensure(f.hausdorff && f.non_discrete && f.non_precompact, || format!("flags {f:?}"))?;
    within(started, Duration::from_secs(300))?;
    let moduli: Vec<u64> = c.stages.iter().map(|s| s.quotient().modulus()).collect();
    Ok(format!("moduli {moduli:?}, {} witnesses, {:.1?}", witnesses.len(), started.elapsed()))
}

fn decreasing_bounds(c: &Construction) -> Result<Vec<Rational>, String> {
    let mut out = Vec::new();
    for (i, s) in c.stages.iter().enumerate() {
        let elem = s.f_next.first().ok_or_else(|| format!("F_{} is empty", s.n()))?;
        let b = uniform_displacement_bound(c, elem).map_err(|e| e.to_string())?;
        let expected = c.profile.step_height(i + 2).map_err(|e| e.to_string())?;
        ensure(b.derived_bound == expected && b.bound <= expected, || {
            format!("stage {}: bound {} derived {} expected {expected}", s.n(), b.bound, b.derived_bound)
        })?;
        out.push(b.bound);
    }
    ensure(out.len() >= 3, || format!("only {} data points", out.len()))?;
    ensure(out.windows(2).all(|w| w[1] < w[0]), || format!("bounds not strictly decreasing: {out:?}"))?;
    Ok(out)
}

fn criterion_5() -> Outcome {
    let mut parts = Vec::new();
    for (name, profile) in [("paper", Profile::paper()), ("desk", Profile::desk())] {
        let c = build(GroupSpec::integer_line(), profile, default_policy(), 3)?;
        let b = decreasing_bounds(&c)?;
        parts.push(format!("z {name}: {}", b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" > ")));
    }
    Ok(parts.join("; "))
}

fn power_check(spec: GroupSpec, profile: Profile, g0: GroupElement, stages: usize) -> Outcome {
    let c = build(spec.clone(), profile, Policy::Power(g0.clone()), stages)?;
    let seq = power_rigidity_sequence(&c, &g0).map_err(|e| e.to_string())?;
    let mut ks = Vec::new();
    for (stage, entry) in c.stages.iter().zip(&seq) {
        let m = stage.quotient().modulus();
        ensure(entry.exponent == m, || format!("stage {}: k = {}, m = {m}", stage.n(), entry.exponent))?;
        ensure(matches!(stage.f_source, FSource::Power { exponent } if exponent == m), || {
            format!("stage {} source {:?}", stage.n(), stage.f_source)
        })?;
        let power = spec.pow(&g0, m as i64).map_err(|e| e.to_string())?;
        ensure(entry.element == power, || format!("stage {}: element {}", stage.n(), entry.element))?;
        ensure(in_congruence_kernel(&power, m), || format!("{power} is not trivial mod {m}"))?;
        ensure(stage.check("f-in-kernel").is_some_and(|k| k.passed), || "f-in-kernel check failed".into())?;
        ks.push(m);
    }
    Ok(format!("k_n = m_n = {ks:?}"))
}

/// Reduction mod `m` is trivial, checked on raw entries.
fn in_congruence_kernel(g: &GroupElement, m: u64) -> bool {
    let m = m as i64;
    match g {
        GroupElement::Int(t) => t.rem_euclid(m) == 0,
        GroupElement::Mat2([a, b, c, d]) => {
            (a - 1).rem_euclid(m) == 0 && b.rem_euclid(m) == 0 && c.rem_euclid(m) == 0 && (d - 1).rem_euclid(m) == 0
        }
        _ => false,
    }
}

fn criterion_6() -> Outcome {
    let z = power_check(GroupSpec::integer_line(), Profile::paper(), int(1), 3)?;
    let sl = power_check(GroupSpec::sl2z(), Profile::desk(), GroupElement::mat2(1, 1, 0, 1), 2)?;
    Ok(format!("z: {z}; sl2z: {sl}"))
}

fn criterion_7() -> Outcome {
    let preds = vec![ElementPredicate::Positive, ElementPredicate::Negative];
    let c = build(GroupSpec::integer_line(), Profile::paper(), Policy::Predicates(preds.clone()), 3)?;
    let mut hits = Vec::new();
    for s in &c.stages {
        let pred = &preds[s.n() % preds.len()];
        ensure(s.f_next.iter().any(|g| pred.matches(g)), || format!("F_{} misses {pred}", s.n()))?;
        let name = format!("predicate-hit[{pred}]");
        ensure(s.check(&name).is_some_and(|k| k.passed), || format!("stage {} lacks a passing {name}", s.n()))?;
        ensure(s.all_gating_passed(), || format!("stage {} has failing checks", s.n()))?;
        hits.push(format!("F_{} {pred}", s.n()));
    }
    Ok(hits.join(", "))
}

fn criterion_8() -> Outcome {
    let c = build(GroupSpec::integer_line(), Profile::paper(), default_policy(), 3)?;
    let file = CertificateFile::new(&c, certify(&c, 2).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let bytes = save(&file).map_err(|e| e.to_string())?;
    let loaded = load(&bytes).map_err(|e| e.to_string())?;
    ensure(save(&loaded).map_err(|e| e.to_string())? == bytes, || "round trip changed bytes".into())?;
    let report = verify_replay(&loaded).map_err(|e| e.to_string())?;
    ensure(report.clean(), || format!("fresh file mismatches: {:?}", report.mismatches()))?;

    let mut tampered = loaded.clone();
    let entries = tampered.stages[1].psi.entries.as_mut().ok_or("stage 2 table not inline")?;
    let key = entries.iter().find(|(_, v)| v.as_str() == "9/11").ok_or("no 9/11 entry")?.0.clone();
    entries.insert(key, "8/11".into());
    tampered.seal().map_err(|e| e.to_string())?;
    let reloaded = load(&save(&tampered).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let report = verify_replay(&reloaded).map_err(|e| e.to_string())?;
    let fields: Vec<&str> = report.mismatches().iter().map(|i| i.field.as_str()).collect();
    ensure(fields == ["stage2.psi"], || format!("perturbation flagged {fields:?}"))?;
    Ok(format!("{} bytes, {} replay items, perturbation flagged at stage2.psi", bytes.len(), report.items.len()))
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("1", "integer-line staircases", criterion_1),
        ("2", "inequality certificates, 3 stages", criterion_2),
        ("3", "oracle equivalence", criterion_3),
        ("4a", "end to end, heisenberg3", || end_to_end(GroupSpec::heisenberg3())),
        ("4b", "end to end, free(2)", || end_to_end(GroupSpec::free(2).map_err(|e| e.to_string())?)),
        ("5", "displacement decay", criterion_5),
        ("6", "power rigidity sequences", criterion_6),
        ("7", "predicate hitting", criterion_7),
        ("8", "replay integrity", criterion_8),
    ];
    let mut failures = 0;
    for (id, title, run) in criteria {
        let started = Instant::now();
        let outcome = run();
        let spent = started.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {id} PASS  {title} ({spent:.1?}): {detail}"),
            Err(reason) => {
                failures += 1;
                println!("criterion {id} FAIL  {title} ({spent:.1?}): {reason}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
