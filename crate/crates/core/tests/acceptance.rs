//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion.

use std::time::Instant;

use hwd_core::capacity::{arc_capacity, default_schedule, point_capacity};
use hwd_core::constructions::{carleson_test, CarlesonVerdict, GapSequence, LengthsRule};
use hwd_core::uniqueness::Classification;
use hwd_core::verify::{self, SuiteReport, CRITERION_CHECKPOINTS};
use hwd_core::{Arc, CirclePoint, Measure, Tolerance};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn tol() -> Tolerance {
    Tolerance::relative(1e-10)
}

fn suite(r: SuiteReport, limit_s: Option<f64>) -> Outcome {
    let mut fails: Vec<String> = r.failures().take(3).map(|c| format!("{}: {} vs {}", c.label, c.value, c.reference)).collect();
    if let Some(limit) = limit_s {
        if r.seconds >= limit {
            fails.push(format!("runtime {:.1}s over {limit}s", r.seconds));
        }
    }
    if fails.is_empty() {
        Ok(format!("{} checks in {:.2}s", r.cases.len(), r.seconds))
    } else {
        Err(fails.join("; "))
    }
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn poisson_normalization() -> Outcome {
    suite(verify::poisson_normalization(&tol()).map_err(|e| e.to_string())?, Some(10.0))
}

fn douglas() -> Outcome {
    suite(verify::douglas(1, 8, &tol()).map_err(|e| e.to_string())?, None)
}

fn log_capacity_comparability() -> Outcome {
    let leb = Measure::lebesgue();
    let mut worst: f64 = 1.0;
    for k in 2..=8 {
        let len = 10f64.powi(-k);
        let c = arc_capacity(&leb, &Arc::centered(0.4, len).unwrap(), &tol()).map_err(|e| e.to_string())?;
        let r = c.cap_scale * (1.0 / len).ln();
        if !(0.5..=2.0).contains(&r) {
            return Err(format!("|I| = {len:e}: ratio {r}"));
        }
        worst = if (r - 1.0).abs() > (worst - 1.0).abs() { r } else { worst };
    }
    let c = arc_capacity(&leb, &Arc::centered(0.4, 1e-4).unwrap(), &tol()).map_err(|e| e.to_string())?;
    let dev = (c.cap_scale - 1.0 / 9.517293).abs();
    check(dev <= 1e-6, format!("worst ratio {worst:.4}, |I|=1e-4 deviation {dev:.2e}"))
}

fn lemcap_scaling() -> Outcome {
    suite(verify::lemcap_scaling(3, 20, &tol()).map_err(|e| e.to_string())?, Some(60.0))
}

fn point_capacity_dichotomy() -> Outcome {
    let zeta = CirclePoint::new(0.0);
    let delta = Measure::dirac(0.0, 1.0).unwrap();
    let c = point_capacity(&delta, zeta, &default_schedule(), &tol()).map_err(|e| e.to_string())?;
    if c.zero_flag || (c.cap_scale - 0.646678).abs() > 1e-4 {
        return Err(format!("delta: zero_flag {} cap {}", c.zero_flag, c.cap_scale));
    }
    for theta in [0.0, 1.0, 3.0, 5.5] {
        let l = point_capacity(&Measure::lebesgue(), CirclePoint::new(theta), &default_schedule(), &tol())
            .map_err(|e| e.to_string())?;
        if !l.zero_flag {
            return Err(format!("lebesgue at {theta}: zero_flag false"));
        }
    }
    Ok(format!("delta cap {:.7}, lebesgue zero at 4 points", c.cap_scale))
}

fn km_cantor_weight() -> Outcome {
    suite(verify::km_cantor_weight(&CRITERION_CHECKPOINTS, &[0.25, 1.0, 4.0], &tol()).map_err(|e| e.to_string())?, None)
}

fn carleson_verdicts() -> Outcome {
    let thirds = GapSequence::Cantor { lengths: LengthsRule::Geometric { q: 3.0 }, circumference: 1.0 };
    let exact = -3.0 * 3f64.ln();
    for cps in [[10, 100, 1_000], [100, 1_000, 10_000]] {
        let r = carleson_test(&thirds, &cps).map_err(|e| e.to_string())?;
        let s = r.sum.limit.unwrap_or(f64::NAN);
        let close = (s - exact).abs() <= 1e-6;
        if r.verdict != CarlesonVerdict::Carleson || !close {
            return Err(format!("middle thirds {cps:?}: {:?}, sum {s}", r.verdict));
        }
    }
    for cps in [[1_000, 10_000, 100_000, 1_000_000], [10_000, 100_000, 1_000_000, 10_000_000]] {
        let r = carleson_test(&GapSequence::LogLog, &cps).map_err(|e| e.to_string())?;
        if r.verdict != CarlesonVerdict::NotCarleson {
            return Err(format!("log-log gaps {cps:?}: {:?}", r.verdict));
        }
    }
    Ok(format!("middle thirds sum {exact:.7}, log-log gaps not Carleson"))
}

fn poincare() -> Outcome {
    suite(verify::poincare(2.0, &tol()).map_err(|e| e.to_string())?, None)
}

fn guillot_identity() -> Outcome {
    let r = Measure::dirac(0.0, 1.0).unwrap().guillot_integral(64, &tol()).map_err(|e| e.to_string())?;
    let limit = r.limit.unwrap_or(f64::NAN);
    check(
        r.classification == Classification::Converges && limit.abs() <= 1e-4,
        format!("{:?}, limit {limit:.2e}", r.classification),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 9] = [
        ("poisson normalization", poisson_normalization),
        ("douglas cross-check", douglas),
        ("logarithmic capacity comparability", log_capacity_comparability),
        ("atom cluster capacity scaling", lemcap_scaling),
        ("point capacity dichotomy", point_capacity_dichotomy),
        ("cantor weight criterion series", km_cantor_weight),
        ("carleson verdicts", carleson_verdicts),
        ("poincare probe invariance", poincare),
        ("guillot identity", guillot_identity),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {} {name} ({secs:.2}s): {msg}", i + 1),
            Err(msg) => {
                println!("FAIL {} {name} ({secs:.2}s): {msg}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
