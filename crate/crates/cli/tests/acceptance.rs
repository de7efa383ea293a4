//! One pass/fail line per acceptance criterion; exits non-zero on any failure.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{read, run, stderr, Fixture};
use mcqeval_core::corpus::{
    shuffle_choices, ExplanationLabel, Letter, Permutation, PresentedItem, ShuffledQuestion,
};
use mcqeval_core::experiments::majority_vote;
use mcqeval_core::extraction::{extract_answer, Extraction};
use mcqeval_core::prm::{
    compare_methods, Candidate, CandidateSet, ChoiceJudgment, RubricScore, Stance,
};
use mcqeval_core::prompting::Condition;
use mcqeval_core::stats::special::chi2_sf;
use mcqeval_core::stats::{
    chi2_uniform, cochrans_q, cohens_h, is_unanimous, mcnemar_exact, tost_paired, LetterCounts,
    Level, PairedOutcome, ALPHA, TOST_MARGIN,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CHILD_ENV: &str = "MCQEVAL_ACCEPTANCE_SHUFFLE_CHILD";

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed)
}

fn binom_enumeration(b: u64, c: u64) -> f64 {
    // exhaustive over all 2^m sign patterns of the discordant pairs
    let m = b + c;
    if m == 0 {
        return 1.0;
    }
    let k = b.min(c);
    let mut extreme = 0u64;
    for pattern in 0u64..(1 << m) {
        if u64::from(pattern.count_ones()) <= k {
            extreme += 1;
        }
    }
    (2.0 * extreme as f64 / (1u64 << m) as f64).min(1.0)
}

fn mcnemar() -> Check {
    let start = Instant::now();
    for m in 0..=12u64 {
        for b in 0..=m {
            let c = m - b;
            let p = mcnemar_exact(PairedOutcome { n: m, b, c }).p_value;
            let oracle = binom_enumeration(b, c);
            ensure(
                (p - oracle).abs() <= 1e-9,
                format!("({b},{c}): {p} vs {oracle}"),
            )?;
        }
    }
    for (b, c, expected) in [(7, 10, 0.629), (1, 0, 1.0), (0, 2, 0.5), (6, 0, 0.031)] {
        let p = mcnemar_exact(PairedOutcome { n: 77, b, c }).p_value;
        ensure(
            (p - expected).abs() < 5e-4,
            format!("({b},{c}) p={p}, expected {expected}"),
        )?;
    }
    let elapsed = start.elapsed();
    ensure(
        elapsed < Duration::from_secs(1),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "enumeration b+c<=12 agrees; (7,10)=.629 (1,0)=1.000 (0,2)=.500 (6,0)=.031; {elapsed:?}"
    ))
}

fn cohen() -> Check {
    let start = Instant::now();
    let h = cohens_h(76.0 / 77.0, 72.0 / 77.0).unwrap();
    ensure((h - 0.287).abs() <= 0.002, format!("h={h}"))?;
    let mut r = rng();
    for _ in 0..1000 {
        let (p1, p2): (f64, f64) = (r.random(), r.random());
        let a = cohens_h(p1, p2).unwrap();
        let b = cohens_h(p2, p1).unwrap();
        ensure(
            (a + b).abs() < 1e-12,
            format!("antisymmetry fails at ({p1},{p2})"),
        )?;
        ensure(
            cohens_h(p1, p1).unwrap() == 0.0,
            format!("h(p,p) != 0 at {p1}"),
        )?;
    }
    let elapsed = start.elapsed();
    ensure(
        elapsed < Duration::from_secs(1),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "h={h:.4}; antisymmetry and h(p,p)=0 over 1000 pairs; {elapsed:?}"
    ))
}

/// Cochran's Q from the column-deviation form.
fn q_oracle(rows: &[[bool; 3]]) -> (f64, f64) {
    let k = 3.0;
    let mut col = [0.0f64; 3];
    let mut sum_r = 0.0;
    let mut sum_r2 = 0.0;
    for row in rows {
        let r = row.iter().filter(|&&x| x).count() as f64;
        sum_r += r;
        sum_r2 += r * r;
        for (c, &x) in col.iter_mut().zip(row) {
            *c += f64::from(u8::from(x));
        }
    }
    let denom = k * sum_r - sum_r2;
    if denom == 0.0 {
        return (0.0, 1.0);
    }
    let mean = sum_r / k;
    let q = k * (k - 1.0) * col.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / denom;
    (q, (-q / 2.0).exp())
}

fn cochran() -> Check {
    for n in [1, 5, 20] {
        for value in [true, false] {
            let rows = vec![[value; 3]; n];
            let r = cochrans_q(&rows).unwrap();
            ensure(
                r.statistic == 0.0 && r.p_value == 1.0,
                format!("constant rows: {r:?}"),
            )?;
        }
        let mixed: Vec<[bool; 3]> = (0..n).map(|i| [i % 2 == 0; 3]).collect();
        let r = cochrans_q(&mixed).unwrap();
        ensure(
            r.statistic == 0.0 && r.p_value == 1.0,
            format!("constant rows: {r:?}"),
        )?;
    }
    let mut r = rng();
    for _ in 0..100 {
        let rows: Vec<[bool; 3]> = (0..20)
            .map(|_| [r.random(), r.random(), r.random()])
            .collect();
        let got = cochrans_q(&rows).unwrap();
        let (q, p) = q_oracle(&rows);
        ensure(
            (got.statistic - q).abs() <= 1e-9 && (got.p_value - p).abs() <= 1e-9,
            format!(
                "Q={} p={} vs oracle Q={q} p={p}",
                got.statistic, got.p_value
            ),
        )?;
    }
    let mut detail = Vec::new();
    for (x, published) in [(2.67f64, 0.264f64), (9.21, 0.010)] {
        let p = chi2_sf(x, 2.0);
        let closed = (-x / 2.0).exp();
        ensure(
            (p - closed).abs() <= 1e-8,
            format!("sf({x},2)={p} vs closed form {closed}"),
        )?;
        // the printed statistic is itself rounded to two places
        let (lo, hi) = (chi2_sf(x + 0.005, 2.0), chi2_sf(x - 0.005, 2.0));
        ensure(
            lo <= published + 5e-4 && published - 5e-4 <= hi,
            format!("no Q rounding to {x} gives p rounding to {published}: [{lo}, {hi}]"),
        )?;
        detail.push(format!("sf({x},2)={p:.6}"));
    }
    Ok(format!(
        "constant rows Q=0 p=1; 100 random 20x3 agree to 1e-9; {} exact to 1e-8 and consistent with .264/.010",
        detail.join(" ")
    ))
}

fn equivalent(n: u64, b: u64, c: u64) -> bool {
    tost_paired(PairedOutcome { n, b, c }, TOST_MARGIN, ALPHA)
        .unwrap()
        .equivalence
        == Some(true)
}

fn tost() -> Check {
    ensure(equivalent(1037, 3, 2), "(1037,3,2) is not EQUIV")?;
    let mut r = rng();
    for _ in 0..1000 {
        let n: u64 = r.random_range(20..3000);
        let b: u64 = r.random_range(0..=n.min(60));
        let c: u64 = r.random_range(0..=(n - b).min(60));
        let eq = equivalent(n, b, c);
        // adding concordant pairs never breaks equivalence
        if eq {
            ensure(
                equivalent(n + 1, b, c),
                format!("EQUIV lost adding a pair at ({n},{b},{c})"),
            )?;
        }
        // widening the discordant imbalance never creates equivalence
        let (hi, lo) = (b.max(c), b.min(c));
        if !eq && hi + lo < n {
            ensure(
                !equivalent(n, hi + 1, lo),
                format!("EQUIV gained widening ({n},{b},{c})"),
            )?;
        }
    }
    Ok("(1037,3,2) EQUIV; monotone over 1000 random triples".into())
}

fn chi2_letters() -> Check {
    let flat = chi2_uniform(&LetterCounts([20; 5])).unwrap().statistic;
    let skew = chi2_uniform(&LetterCounts([25, 20, 20, 20, 15]))
        .unwrap()
        .statistic;
    ensure(flat == 0.0, format!("flat -> {flat}"))?;
    ensure(skew == 2.5, format!("skewed -> {skew}"))?;
    Ok("[20x5] -> 0; [25,20,20,20,15] -> 2.5".into())
}

fn shuffle_images() -> String {
    let q = &common::questions(1, 0)[0];
    let images = shuffle_choices(q, 20250401).permutation.images();
    format!("{images:?}")
}

fn shuffle() -> Check {
    let q = &common::questions(1, 0)[0];
    let perms = Permutation::all();
    ensure(perms.len() == 120, format!("{} permutations", perms.len()))?;
    for perm in perms {
        let s = ShuffledQuestion::with_permutation(q, perm, 0);
        let shown = Letter::ALL
            .iter()
            .find(|&&l| s.displayed_choice(l) == q.choice(q.answer_key))
            .copied();
        ensure(
            shown == Some(s.remapped_key),
            format!("{perm:?}: key text moved elsewhere"),
        )?;
        for l in Letter::ALL {
            ensure(
                s.is_correct(Some(l)) == (l == s.remapped_key),
                format!("{perm:?}: {l} misjudged"),
            )?;
        }
        ensure(!s.is_correct(None), "ambiguous judged correct")?;
    }
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let child = || {
        std::process::Command::new(&exe)
            .env(CHILD_ENV, "1")
            .output()
            .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
            .map_err(|e| e.to_string())
    };
    let (a, b) = (child()?, child()?);
    ensure(
        !a.is_empty() && a == b && a == shuffle_images(),
        format!("processes disagree: {a} / {b}"),
    )?;
    Ok(format!(
        "120 permutations judged correctly; two processes agree on {a}"
    ))
}

fn extraction() -> Check {
    let dir =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/responses");
    let mut names: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    names.sort();
    let got: String = names
        .iter()
        .map(|p| match extract_answer(&read(p), Condition::A) {
            Extraction::Letter(l) => l.as_char(),
            Extraction::Ambiguous => '?',
        })
        .collect();
    ensure(got == "AAAAAACD", format!("fixtures gave {got}"))?;
    for text in [
        "",
        "It could be (A) or (B).",
        "I cannot determine the answer.",
        "Answer:",
    ] {
        ensure(
            extract_answer(text, Condition::A) == Extraction::Ambiguous,
            format!("{text:?} not ambiguous"),
        )?;
    }
    for (text, l) in [("B", Letter::B), ("(E)", Letter::E), ("C.", Letter::C)] {
        ensure(
            extract_answer(text, Condition::C) == Extraction::Letter(l),
            format!("{text:?} under C"),
        )?;
    }
    Ok(format!(
        "fixtures -> {}; ambiguous and condition-C cases hold",
        got.chars().map(String::from).collect::<Vec<_>>().join(",")
    ))
}

fn brute_majority(samples: &[Extraction]) -> Extraction {
    let count = |x: &Extraction| samples.iter().filter(|s| *s == x).count();
    let best = samples
        .iter()
        .filter(|s| s.letter().is_some())
        .map(count)
        .max();
    match best {
        None => Extraction::Ambiguous,
        Some(max) => *samples
            .iter()
            .find(|s| s.letter().is_some() && count(s) == max)
            .unwrap(),
    }
}

fn self_consistency() -> Check {
    let mut checked = 0;
    for code in 0..5usize.pow(5) {
        let samples: Vec<Extraction> = (0..5)
            .map(|i| Extraction::Letter(Letter::from_index(code / 5usize.pow(i) % 5).unwrap()))
            .collect();
        let m = majority_vote(&samples);
        ensure(m == brute_majority(&samples), format!("{samples:?}: {m:?}"))?;
        if is_unanimous(&samples) {
            for key in Letter::ALL {
                let sc = m == Extraction::Letter(key);
                let pass1 = samples[0] == Extraction::Letter(key);
                ensure(
                    sc == pass1,
                    format!("unanimous {samples:?} but SC != pass@1"),
                )?;
            }
        }
        checked += 1;
    }
    Ok(format!("majority vote matches brute force over {checked} sample tuples; unanimity => SC@5 = pass@1"))
}

fn rubric() -> Check {
    let labels = [ExplanationLabel::Correct, ExplanationLabel::Incorrect];
    let mut grid = BTreeSet::new();
    let mut cases = 0u64;
    for stance_code in 0..3usize.pow(5) {
        for label_bits in 0..32u32 {
            for reason_bits in 0..32u32 {
                let mut expected = 0u8;
                let judgments: [ChoiceJudgment; 5] = std::array::from_fn(|i| {
                    let stance = Stance::ALL[stance_code / 3usize.pow(i as u32) % 3];
                    let label = labels[(label_bits >> i & 1) as usize];
                    let reason = reason_bits >> i & 1 == 1;
                    let agree = match stance {
                        Stance::JudgedCorrect => label == ExplanationLabel::Correct,
                        Stance::JudgedIncorrect => label == ExplanationLabel::Incorrect,
                        Stance::NotAddressed => false,
                    };
                    expected += u8::from(agree) + u8::from(agree && reason);
                    ChoiceJudgment::new(Letter::ALL[i], stance, label, reason)
                });
                let score = RubricScore::from_judgments(judgments);
                ensure(
                    score.points == expected,
                    format!("points {} vs {expected}", score.points),
                )?;
                ensure(
                    score.normalized == f64::from(expected) / 10.0,
                    "normalized != points/10",
                )?;
                grid.insert(score.normalized.to_bits());
                cases += 1;
            }
        }
    }
    let expected_grid: BTreeSet<u64> = (0..=10).map(|i| (f64::from(i) / 10.0).to_bits()).collect();
    ensure(
        grid == expected_grid,
        format!("grid has {} values", grid.len()),
    )?;
    Ok(format!(
        "{cases} combinations agree; normalized grid is exactly 0.0..1.0 in steps of 0.1"
    ))
}

fn candidate_sets(r: &mut ChaCha8Rng, force_correct: bool) -> Vec<CandidateSet> {
    let qs = common::questions(30, 20);
    qs.iter()
        .map(|q| {
            let skill: f64 = r.random_range(0.3..0.95);
            let mut candidates: Vec<Candidate> = (0..5)
                .map(|i| {
                    let correct = r.random_bool(skill);
                    let letter = if correct {
                        q.answer_key
                    } else {
                        Letter::from_index((q.answer_key.index() + r.random_range(1..5)) % 5)
                            .unwrap()
                    };
                    Candidate {
                        sample_index: i,
                        extracted: Extraction::Letter(letter),
                        correct,
                        score: if correct { 1.0 } else { 0.0 },
                    }
                })
                .collect();
            if force_correct && !candidates.iter().any(|c| c.correct) {
                let i = r.random_range(0..5);
                candidates[i] = Candidate {
                    extracted: Extraction::Letter(q.answer_key),
                    correct: true,
                    score: 1.0,
                    ..candidates[i]
                };
            }
            CandidateSet {
                question_id: q.id.clone(),
                section: q.section,
                answer_key: q.answer_key,
                candidates,
            }
        })
        .collect()
}

fn bon() -> Check {
    let mut r = rng();
    let sets = candidate_sets(&mut r, false);
    let rows = compare_methods(&sets).map_err(|e| e.to_string())?;
    let (_, overall) = rows
        .iter()
        .find(|(l, _)| *l == Level::Overall)
        .ok_or("no overall row")?;
    let (p1, sc, bon) = (
        overall.pass_at_1.correct,
        overall.sc.correct,
        overall.bon.correct,
    );
    ensure(
        bon >= sc && sc >= p1,
        format!("BoN {bon} SC {sc} pass@1 {p1}"),
    )?;

    let covered = candidate_sets(&mut r, true);
    let rows = compare_methods(&covered).map_err(|e| e.to_string())?;
    for (level, acc) in &rows {
        ensure(
            acc.bon.correct == acc.bon.total,
            format!("{level}: BoN {}/{}", acc.bon.correct, acc.bon.total),
        )?;
    }
    Ok(format!("50x5: BoN {bon}/50 >= SC@5 {sc}/50 >= pass@1 {p1}/50; BoN 100% when every item has a correct sample"))
}

fn pipeline(f: &Fixture, tag: &str) -> Result<String, String> {
    let results = f.arg(&format!("results-{tag}.jsonl"));
    let stats = f.arg(&format!("stats-{tag}.json"));
    let manifest = f.manifest();
    let (data, config, replay) = (
        f.arg("dataset.jsonl"),
        f.arg("config.toml"),
        f.arg("replay"),
    );
    let steps: [Vec<&str>; 3] = [
        vec![
            "run",
            "self-consistency",
            "--data",
            &data,
            "--manifest",
            &manifest,
            "--config",
            &config,
            "--mock",
            &replay,
            "--results",
            &results,
            "--n",
            "5",
        ],
        vec!["stats", "--results", &results, "--out", &stats],
        vec![
            "report",
            "--stats",
            &stats,
            "--table",
            "self-consistency",
            "--table",
            "self-consistency-by-section",
        ],
    ];
    let mut last = String::new();
    for step in &steps {
        let out = run(step);
        ensure(
            out.status.success(),
            format!("{} failed: {}", step[0], stderr(&out)),
        )?;
        last = common::stdout(&out);
    }
    Ok(last)
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let f = Fixture::new(6, 4, 5);
    let first = pipeline(&f, "1")?;
    let second = pipeline(&f, "2")?;
    let elapsed = start.elapsed();
    ensure(first == second, "reports differ between runs")?;
    ensure(
        first.contains("| Model | pass@1 | SC@5 | Delta | b | c | p | h | Unanimity |"),
        format!("unexpected report shape:\n{first}"),
    )?;
    ensure(first.contains("| mock-model |"), "model row missing")?;
    ensure(
        elapsed < Duration::from_secs(60),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "10-question mock run -> stats -> report identical across two runs ({} bytes); {elapsed:?}",
        first.len()
    ))
}

fn main() -> ExitCode {
    if std::env::var_os(CHILD_ENV).is_some() {
        println!("{}", shuffle_images());
        return ExitCode::SUCCESS;
    }
    let criteria: [Criterion; 11] = [
        ("exact McNemar", mcnemar),
        ("Cohen's h", cohen),
        ("Cochran's Q", cochran),
        ("TOST", tost),
        ("chi-square uniform", chi2_letters),
        ("shuffle round trip", shuffle),
        ("extraction", extraction),
        ("self-consistency invariants", self_consistency),
        ("rubric score", rubric),
        ("BoN oracle dominance", bon),
        ("end-to-end mock pipeline", end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
