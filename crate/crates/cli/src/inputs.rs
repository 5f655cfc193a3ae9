//! Parsing of measure, function, family and rule arguments, which are
//! either short inline forms or paths to JSON files.

use std::path::Path;

use hwd_core::constructions::GapSequence;
use hwd_core::uniqueness::{ArcFamilySpec, ArcGenerator, CapacityRule};
use hwd_core::{BoundaryFunction, Measure};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::CliError;

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn from_value<T: DeserializeOwned>(v: Value, what: &str) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("invalid {what}: {e}")))
}

/// Accepts a bare spec, a report envelope, or an object holding the spec
/// under `key`.
fn unwrap_spec(mut v: Value, key: &str) -> Value {
    if let Some(r) = v.get_mut("result") {
        v = r.take();
    }
    match v.get_mut(key) {
        Some(inner) if inner.is_object() => inner.take(),
        _ => v,
    }
}

fn number(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| CliError::Config(format!("{what}: cannot parse '{s}' as a number")))
}

pub fn numbers(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|p| number(p, what)).collect()
}

/// `lebesgue`, `constant:c`, `delta:theta[:mass]`, or a JSON file.
pub fn measure(arg: &str) -> Result<Measure, CliError> {
    let mut parts = arg.split(':');
    match parts.next().unwrap_or_default() {
        "lebesgue" if arg == "lebesgue" => Ok(Measure::lebesgue()),
        "constant" => {
            let c = number(parts.next().unwrap_or_default(), "constant density")?;
            Ok(Measure::new(vec![], hwd_core::Density::Constant { value: c }, 0.0)?)
        }
        "delta" => {
            let theta = number(parts.next().unwrap_or_default(), "delta angle")?;
            let mass = parts.next().map_or(Ok(1.0), |m| number(m, "delta mass"))?;
            if parts.next().is_some() {
                return Err(CliError::Config(format!("expected delta:theta[:mass], got '{arg}'")));
            }
            Ok(Measure::dirac(theta, mass)?)
        }
        _ => from_value(unwrap_spec(read_json(Path::new(arg))?, "measure"), "measure"),
    }
}

/// `z^n`, `poly:c0,c1,...` (real coefficients), or a JSON function spec.
pub fn function(arg: &str) -> Result<BoundaryFunction, CliError> {
    if let Some(n) = arg.strip_prefix("z^") {
        let n: usize = n.parse().map_err(|_| CliError::Config(format!("bad exponent in '{arg}'")))?;
        return Ok(BoundaryFunction::monomial(n));
    }
    if let Some(c) = arg.strip_prefix("poly:") {
        return Ok(BoundaryFunction::real_polynomial(&numbers(c, "coefficients")?));
    }
    from_value(unwrap_spec(read_json(Path::new(arg))?, "function"), "function")
}

/// `loglog[:shrink[:gamma]]` or a JSON family spec.
pub fn family(arg: &str) -> Result<ArcFamilySpec, CliError> {
    if let Some(rest) = arg.strip_prefix("loglog") {
        let vals = if rest.is_empty() {
            vec![]
        } else {
            let rest = rest.strip_prefix(':').ok_or_else(|| CliError::Config(format!("bad family '{arg}'")))?;
            rest.split(':').map(|p| number(p, "family")).collect::<Result<_, _>>()?
        };
        if vals.len() > 2 {
            return Err(CliError::Config(format!("expected loglog[:shrink[:gamma]], got '{arg}'")));
        }
        let shrink = vals.first().copied().unwrap_or(0.5);
        let gamma = vals.get(1).copied().unwrap_or(1.5);
        return Ok(ArcFamilySpec { generator: ArcGenerator::LogLogArcs { shrink }, gamma });
    }
    from_value(unwrap_spec(read_json(Path::new(arg))?, "family"), "family")
}

/// `power:exponent[:scale]`, `arc`, `point`, or a JSON rule.
pub fn rule(arg: &str) -> Result<CapacityRule, CliError> {
    match arg {
        "arc" => return Ok(CapacityRule::ArcCapacity),
        "point" => return Ok(CapacityRule::PointCapacity),
        _ => {}
    }
    if let Some(rest) = arg.strip_prefix("power:") {
        let vals = rest.split(':').map(|p| number(p, "power rule")).collect::<Result<Vec<_>, _>>()?;
        return match vals[..] {
            [exponent] => Ok(CapacityRule::Power { scale: 1.0, exponent }),
            [exponent, scale] => Ok(CapacityRule::Power { scale, exponent }),
            _ => Err(CliError::Config(format!("expected power:exponent[:scale], got '{arg}'"))),
        };
    }
    from_value(unwrap_spec(read_json(Path::new(arg))?, "rule"), "capacity rule")
}

/// `middle-thirds`, `cantor:q`, `loglog`, or a JSON gap sequence.
pub fn gaps(arg: &str) -> Result<GapSequence, CliError> {
    use hwd_core::constructions::LengthsRule;
    match arg {
        "middle-thirds" => return Ok(GapSequence::Cantor { lengths: LengthsRule::Geometric { q: 3.0 }, circumference: 1.0 }),
        "loglog" => return Ok(GapSequence::LogLog),
        _ => {}
    }
    if let Some(q) = arg.strip_prefix("cantor:") {
        let q = number(q, "cantor ratio")?;
        return Ok(GapSequence::Cantor { lengths: LengthsRule::Geometric { q }, circumference: 1.0 });
    }
    from_value(unwrap_spec(read_json(Path::new(arg))?, "gaps"), "gap sequence")
}

/// Comma-separated positive integers, allowing forms like `1e3`.
pub fn checkpoints(arg: &str) -> Result<Vec<u64>, CliError> {
    numbers(arg, "checkpoints")?
        .into_iter()
        .map(|x| {
            if x >= 1.0 && x.fract() == 0.0 && x <= 9.0e15 {
                Ok(x as u64)
            } else {
                Err(CliError::Config(format!("checkpoint {x} is not a positive integer")))
            }
        })
        .collect()
}

/// `lo..hi` (inclusive) or a single integer.
pub fn range(arg: &str) -> Result<(i64, i64), CliError> {
    let bad = || CliError::Config(format!("expected lo..hi, got '{arg}'"));
    let (lo, hi) = match arg.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v = arg.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}
