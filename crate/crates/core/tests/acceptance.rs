//! Acceptance run: one line per criterion, `[PASS]` or `[FAIL]`, then a
//! summary. Exits non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use memlang::bigraph::TotalBigraph;
use memlang::cli::{
    cmd_denote, cmd_enumerate, cmd_run, cmd_soundness_dir, denote, program_files, RunOptions,
    DEFAULT_MAX_UNDEF, EXIT_OK,
};
use memlang::denot::{prob_true, DenotError};
use memlang::laws::{
    run_dataflow_suite, run_mem_suite, run_monad_suite, run_soundness_suite, sweep_invariants,
};
use memlang::opsem::{
    check_stack_invariants, config_judgement, enumerate_bigstep, explore, observational_bigstep,
    run_sampled, Configuration, EnvValue, STEP_BUDGET,
};
use memlang::syntax::{parse_program, syntactic_freshness_check, Comp};
use memlang::{ratio, ExactDist, Prob};

type Verdict = Result<String, String>;

fn programs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("programs")
}

fn parse(src: &str) -> Comp {
    parse_program(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    if t > limit {
        Err(format!("{what} took {t:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// The weight of each boolean result, zero entries included.
fn bool_weights(d: &ExactDist<EnvValue>) -> (Prob, Prob) {
    (
        d.prob(&EnvValue::Bool(true)),
        d.prob(&EnvValue::Bool(false)),
    )
}

fn p1_reproduction() -> Verdict {
    let one = ratio(1, 1);
    let cases = [
        ("p1_theta_0.mem", ratio(0, 1)),
        ("p1_theta_1_3.mem", ratio(1, 3)),
        ("p1_theta_1_2.mem", ratio(1, 2)),
        ("p1_theta_1.mem", ratio(1, 1)),
    ];
    for (file, theta) in cases {
        let path = programs().join(file);
        let start = Instant::now();
        let den = cmd_denote(&path).map_err(|e| e.to_string())?;
        let p = memlang::cli::load(&path).map_err(|e| e.to_string())?.0;
        let d = denote(&p).map_err(|e| e.to_string())?;
        let t = prob_true(&TotalBigraph::empty(), &d).map_err(|e| e.to_string())?;
        ensure(den.code == EXIT_OK && t == theta, || {
            format!("{file}: denotation gives true with {t}, want {theta}")
        })?;
        within(start, Duration::from_secs(1), file)?;

        let start = Instant::now();
        let en = cmd_enumerate(&path, true).map_err(|e| e.to_string())?;
        let obs = observational_bigstep(&p).map_err(|e| e.to_string())?;
        let values = obs.map(|o| o.value.clone());
        let (t, f) = bool_weights(&values);
        ensure(
            en.code == EXIT_OK && t == theta && f == &one - &theta,
            || format!("{file}: enumeration gives {{true: {t}, false: {f}}}"),
        )?;
        within(start, Duration::from_secs(1), file)?;
    }
    Ok("θ ∈ {0, 1/3, 1/2, 1} under denote and enumerate --observe".into())
}

/// The key configurations of the worked example, labels numbered in creation
/// order (the example's `f₁, f₂` are `f0, f1` here).
fn nested_memo_golden(beta: bool) -> Vec<String> {
    let body = "let val b <- x == x0 in if b then flip(1/2) else return false";
    let program = format!(
        "let val x0 <- fresh() in let val f1 <- memfn x. {body} in \
         let val f2 <- memfn y. f1 @ y in f2 @ x0"
    );
    let closures = format!(
        "{{f0 ↦ (memfn x. {body}, {{x0 ↦ a0}}), f1 ↦ (memfn y. f1 @ y, {{f1 ↦ f0, x0 ↦ a0}})}}"
    );
    let gamma0 = "{f1 ↦ f0, f2 ↦ f1, x0 ↦ a0}";
    let gamma1 = "{f1 ↦ f0, x0 ↦ a0, y ↦ a0}";
    let pending = "({f0, f1}, {a0}, {f0-⊥->a0, f1-⊥->a0})";
    let nested =
        |inner: &str| format!("{{{{{{{{{inner}}}}}^{{f0,a0}}_{gamma1}}}}}^{{f1,a0}}_{gamma0}");
    let tag = if beta { "T" } else { "F" };
    vec![
        format!("({{}}, {program}, ({{}}, {{}}, {{}}), {{}})"),
        format!(
            "({{x0 ↦ a0}}, let val f1 <- memfn x. {body} in let val f2 <- memfn y. f1 @ y in \
             f2 @ x0, ({{}}, {{a0}}, {{}}), {{}})"
        ),
        format!("({gamma0}, f2 @ x0, {pending}, {closures})"),
        format!("({{x ↦ a0, x0 ↦ a0}}, {}, {pending}, {closures})", nested(body)),
        format!(
            "({{b ↦ true, x ↦ a0, x0 ↦ a0}}, {}, {pending}, {closures})",
            nested("flip(1/2)")
        ),
        format!(
            "({{b ↦ true, x ↦ a0, x0 ↦ a0}}, {}, {pending}, {closures})",
            nested(&format!("return {beta}"))
        ),
        format!(
            "({gamma0}, return {beta}, ({{f0, f1}}, {{a0}}, {{f0-{tag}->a0, f1-{tag}->a0}}), {closures})"
        ),
    ]
}

fn nested_memo_trace() -> Verdict {
    let path = programs().join("operational").join("nested_memo.mem");
    for beta in [true, false] {
        let opts = RunOptions {
            seed: 0,
            trace: true,
            force: Some(vec![beta]),
        };
        let out = cmd_run(&path, &opts).map_err(|e| e.to_string())?;
        let trace: Vec<String> = out
            .lines
            .iter()
            .filter_map(|l| l.trim_start().split_once("  ").map(|(_, c)| c.to_string()))
            .collect();
        let golden = nested_memo_golden(beta);
        ensure(trace.first() == golden.first(), || {
            format!("β={beta}: initial configuration {:?}", trace.first())
        })?;
        ensure(trace.last() == golden.last(), || {
            format!("β={beta}: final configuration {:?}", trace.last())
        })?;
        let mut rest = trace.iter();
        for g in &golden {
            ensure(rest.any(|c| c == g), || {
                format!("β={beta}: missing or out of order: {g}")
            })?;
        }
    }
    let p = parse(&fs::read_to_string(&path).map_err(|e| e.to_string())?);
    let d = enumerate_bigstep(&p).map_err(|e| e.to_string())?;
    let halves = d.iter().all(|(_, w)| *w == ratio(1, 2));
    ensure(d.len() == 2 && halves, || {
        format!("{} terminals, weights not all 1/2", d.len())
    })?;
    Ok("both forced traces match; two terminals at 1/2".into())
}

fn repeated_application() -> Verdict {
    let schema = |prefix: &str, body: &str, twice: bool| {
        let tail = if twice {
            "let val v1 <- f @ x in let val v2 <- f @ x in return (v1, v2)"
        } else {
            "let val v1 <- f @ x in return (v1, v1)"
        };
        format!("{prefix} let val x <- fresh() in let val f <- memfn y. ({body}) in {tail}")
    };
    let cases = [
        ("", "flip(1/2)"),
        ("", "flip(1/3)"),
        (
            "let val x0 <- fresh() in let val g <- memfn z. flip(1/2) in",
            "let val b <- g @ x0 in if b then return true else y == x0",
        ),
    ];
    let dir = std::env::temp_dir().join(format!("memlang-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    for (i, (prefix, body)) in cases.iter().enumerate() {
        let start = Instant::now();
        let e1 = schema(prefix, body, true);
        let e2 = schema(prefix, body, false);
        let d1 = observational_bigstep(&parse(&e1)).map_err(|e| e.to_string())?;
        let d2 = observational_bigstep(&parse(&e2)).map_err(|e| e.to_string())?;
        ensure(memlang::dist::dist_eq(&d1, &d2), || {
            format!("body `{body}`: {d1:?} vs {d2:?}")
        })?;
        let mut json = Vec::new();
        for (tag, src) in [("e1", &e1), ("e2", &e2)] {
            let path = dir.join(format!("case{i}_{tag}.mem"));
            fs::write(&path, src).map_err(|e| e.to_string())?;
            let out = cmd_enumerate(&path, true).map_err(|e| e.to_string())?;
            json.push(out.report.results_json());
        }
        ensure(json[0] == json[1], || {
            format!("body `{body}`: enumerate --observe --json differs")
        })?;
        within(start, Duration::from_secs(1), body)?;
    }
    Ok("e1 = e2 for flip(1/2), flip(1/3) and the captured-edge body".into())
}

fn memo_law() -> Verdict {
    let start = Instant::now();
    let r = run_mem_suite(100, 7);
    ensure(r.passed(), || {
        format!("{} failures, first: {}", r.failures.len(), r.failures[0])
    })?;
    within(start, Duration::from_secs(60), "memoization suite")?;
    Ok(format!(
        "{} bodies, one- and two-sample equations in both semantics ({:.1?})",
        r.instances,
        start.elapsed()
    ))
}

fn dataflow() -> Verdict {
    let start = Instant::now();
    let d = run_dataflow_suite(100, 11);
    ensure(d.passed(), || format!("dataflow: {}", d.failures[0]))?;
    let m = run_monad_suite(50, 13, 5);
    ensure(m.passed(), || format!("monad: {}", m.failures[0]))?;
    within(start, Duration::from_secs(120), "dataflow and monad suites")?;
    Ok(format!(
        "{} triples commute and discard; monad laws on {} instances x 5 bias states ({:.1?})",
        d.instances,
        m.instances,
        start.elapsed()
    ))
}

fn bundled_sweep() -> Result<usize, String> {
    let mut n = 0;
    for file in program_files(&programs()).map_err(|e| e.to_string())? {
        let p = memlang::cli::load(&file).map_err(|e| e.to_string())?.0;
        sweep_invariants(&p).map_err(|e| format!("{}: {e}", file.display()))?;
        n += 1;
    }
    for file in program_files(&programs().join("operational")).map_err(|e| e.to_string())? {
        let p = memlang::cli::load(&file).map_err(|e| e.to_string())?.0;
        let mut bad = None;
        let d = explore(Configuration::initial(&p), STEP_BUDGET, |c| {
            if bad.is_none() && (config_judgement(c).is_err() || !check_stack_invariants(c)) {
                bad = Some(c.to_string());
            }
        })
        .map_err(|e| e.to_string())?;
        if let Some(c) = bad {
            return Err(format!("{}: invariant fails at {c}", file.display()));
        }
        ensure(d.mass() == ratio(1, 1), || {
            format!("{}: mass", file.display())
        })?;
        n += 1;
    }
    Ok(n)
}

fn soundness_and_invariants() -> (Verdict, Verdict) {
    let start = Instant::now();
    let (sound, inv) = run_soundness_suite(200, 17, DEFAULT_MAX_UNDEF);
    let bundled = cmd_soundness_dir(&programs(), DEFAULT_MAX_UNDEF);
    let elapsed = start.elapsed();
    for note in &sound.notes {
        println!("       note: {note}");
    }
    let soundness = (|| {
        ensure(sound.passed(), || {
            format!(
                "{} failures, first: {}",
                sound.failures.len(),
                sound.failures[0]
            )
        })?;
        let b = bundled.map_err(|e| e.to_string())?;
        ensure(b.code == EXIT_OK && b.report.equal == Some(true), || {
            format!("bundled programs: {}", b.lines.join("; "))
        })?;
        ensure(elapsed <= Duration::from_secs(300), || {
            format!("took {elapsed:.1?}, limit 300 s")
        })?;
        Ok(format!(
            "{} generated programs and {} bundled files; per-function formula differs on {} ({elapsed:.1?})",
            sound.instances,
            b.report.distributions.len(),
            sound.notes.len()
        ))
    })();
    let invariants = (|| {
        ensure(inv.passed(), || {
            format!(
                "{} failures, first: {}",
                inv.failures.len(),
                inv.failures[0]
            )
        })?;
        let n = bundled_sweep()?;
        Ok(format!(
            "judgements, stack invariants, class shapes and unit mass on {} generated and {n} bundled programs",
            inv.instances
        ))
    })();
    (soundness, invariants)
}

fn freshness_rejection() -> Verdict {
    let rejected = [
        (
            "let val f <- memfn z. flip(1/2) in let val g <- memfn y. f @ y in return g",
            "memfn y. f @ y",
        ),
        (
            "let val f <- memfn z. flip(1/2) in \
             let val g <- memfn x. (let val b <- f @ x in if b then return false else return true) in \
             return g",
            "memfn x. let val b <- f @ x in if b then return false else return true",
        ),
    ];
    let mut shown = Vec::new();
    for (src, abstraction) in rejected {
        let term = parse(abstraction);
        ensure(!syntactic_freshness_check(&term), || {
            format!("`{abstraction}` passes the syntactic check")
        })?;
        match denote(&parse(src)) {
            Err(DenotError::FreshnessViolation { witness, .. }) => {
                let (w1, w2) = *witness;
                ensure(w1.prob != w2.prob, || "witnesses agree".into())?;
                shown.push(format!("{w1} vs {w2}"));
            }
            other => return Err(format!("`{abstraction}` not rejected: {other:?}")),
        }
    }
    let positive = "memfn x. let val b <- f @ x0 in if b then return true else x == x0";
    ensure(syntactic_freshness_check(&parse(positive)), || {
        "positive example flagged syntactically".into()
    })?;
    let src =
        fs::read_to_string(programs().join("positive_freshness.mem")).map_err(|e| e.to_string())?;
    denote(&parse(&src)).map_err(|e| format!("positive example rejected: {e}"))?;
    Ok(format!("witnesses: {}", shown.join("; ")))
}

fn sampler_consistency() -> Verdict {
    let n = 3000u32;
    let p =
        parse(&fs::read_to_string(programs().join("p1_theta_1_3.mem")).map_err(|e| e.to_string())?);
    let support = enumerate_bigstep(&p).map_err(|e| e.to_string())?;
    let mut heads = 0u32;
    for seed in 0..n as u64 {
        let (last, _) = run_sampled(&p, seed).map_err(|e| e.to_string())?;
        ensure(support.contains(&last), || {
            format!("seed {seed}: {last} not in support")
        })?;
        heads += u32::from(
            memlang::opsem::observe(&last)
                .map_err(|e| e.to_string())?
                .value
                == EnvValue::Bool(true),
        );
    }
    let freq = f64::from(heads) / f64::from(n);
    let sigma = ((1.0 / 3.0) * (2.0 / 3.0) / f64::from(n)).sqrt();
    ensure((freq - 1.0 / 3.0).abs() <= 3.0 * sigma, || {
        format!("frequency {freq:.4}, 3σ = {:.4}", 3.0 * sigma)
    })?;

    let mut files = program_files(&programs()).map_err(|e| e.to_string())?;
    files.extend(program_files(&programs().join("operational")).map_err(|e| e.to_string())?);
    for file in &files {
        let p = memlang::cli::load(file).map_err(|e| e.to_string())?.0;
        let support = enumerate_bigstep(&p).map_err(|e| e.to_string())?;
        for seed in 0..100 {
            let (last, _) = run_sampled(&p, seed).map_err(|e| e.to_string())?;
            ensure(support.contains(&last), || {
                format!("{}: seed {seed} left the support", file.display())
            })?;
        }
    }
    Ok(format!(
        "{heads}/{n} true (|{freq:.4} - 1/3| <= {:.4}); samples of {} programs inside the support",
        3.0 * sigma,
        files.len() + 1
    ))
}

fn main() -> ExitCode {
    let (soundness, invariants) = soundness_and_invariants();
    let results: Vec<(&str, Verdict)> = vec![
        ("1. P1 reproduction", p1_reproduction()),
        ("2. worked example golden trace", nested_memo_trace()),
        ("3. repeated application", repeated_application()),
        ("4. memoization law", memo_law()),
        ("5. dataflow and monad laws", dataflow()),
        ("6. soundness", soundness),
        ("7. invariant sweeps", invariants),
        ("8. freshness rejection", freshness_rejection()),
        ("9. sampler consistency", sampler_consistency()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("[PASS] {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name}: {msg}");
            }
        }
    }
    println!(
        "{}/{} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
