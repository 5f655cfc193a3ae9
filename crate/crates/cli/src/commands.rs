//! Verb handlers. Each builds the resolved inputs, the result, and an
//! optional CSV table.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use hwd_core::capacity::{self, default_schedule};
use hwd_core::constructions::{self, CantorSpec, LengthsRule, CantorWeightParams};
use hwd_core::uniqueness::{self, Checkpoint, DivergenceReport, KmOptions};
use hwd_core::verify::{self, SuiteReport};
use hwd_core::{holomorphic, Arc, CirclePoint, Complex64, Measure, Tolerance};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::output::{self, fmt_f64, Table};
use crate::{inputs, CliError, Format, Global};

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "verb", rename_all = "kebab-case")]
pub enum Command {
    /// Poisson integral of a measure at a point of the disc.
    Poisson {
        /// lebesgue | constant:c | delta:theta[:mass] | measure JSON file
        #[arg(long)]
        measure: String,
        /// Point as `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Boundary (local Dirichlet) and area forms of the energy of f.
    Energy {
        #[arg(long)]
        measure: String,
        /// z^n | poly:c0,c1,... | function JSON file
        #[arg(long)]
        function: String,
    },
    /// Arc or point capacity estimates.
    Capacity {
        #[command(subcommand)]
        target: CapacityTarget,
    },
    /// Partial sums of the arc-family uniqueness criterion series.
    KmTest(KmArgs),
    /// Build one of the explicit measures or sets.
    Construct {
        #[command(subcommand)]
        what: Construct,
    },
    /// Run a verification suite; exits 4 when any check fails.
    Verify {
        #[command(subcommand)]
        suite: Suite,
    },
    /// Truncated integrals of log V2 with the atoms' neighborhoods removed.
    Guillot {
        #[arg(long)]
        measure: String,
        #[arg(long, default_value_t = 64)]
        panels: usize,
    },
    /// Carleson condition on a sequence of complementary gaps.
    Carleson {
        /// middle-thirds | cantor:q | loglog | gap sequence JSON file
        #[arg(long)]
        gaps: String,
        #[arg(long, default_value = "1e3,1e4,1e5,1e6")]
        checkpoints: String,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CapacityTarget {
    /// Estimate for the arc starting at `start` with the given length.
    Arc {
        #[arg(long)]
        measure: String,
        #[arg(long, allow_hyphen_values = true)]
        start: f64,
        #[arg(long)]
        length: f64,
    },
    /// Estimate for the single point e^{i theta}.
    Point {
        #[arg(long)]
        measure: String,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
    },
    /// Both factors of the pointwise bound over the Stolz box at theta.
    Stolz {
        #[arg(long)]
        measure: String,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
        #[arg(long)]
        function: String,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct KmArgs {
    #[arg(long)]
    pub measure: Option<String>,
    /// loglog[:shrink[:gamma]] | family JSON file
    #[arg(long)]
    pub family: Option<String>,
    /// power:exponent[:scale] | arc | point | rule JSON file
    #[arg(long)]
    pub rule: Option<String>,
    /// Cantor-weight example parameters (JSON); replaces measure, family and rule.
    #[arg(long, conflicts_with_all = ["measure", "family", "rule"])]
    pub example: Option<PathBuf>,
    #[arg(long, default_value = "1e3,1e4,1e5,1e6")]
    pub checkpoints: String,
    /// Multiplies every capacity.
    #[arg(long, default_value_t = 1.0)]
    pub multiplier: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Construct {
    /// Atom clusters near e^{i/log n} with the point 1 as accumulation point.
    Um0 {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        k_max: Option<u64>,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Atoms of mass a/k^2 at angle zeta + a^k.
    Lemcap {
        #[arg(long, allow_hyphen_values = true)]
        zeta: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        k_max: Option<u64>,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Generalized Cantor set, optionally with its distance-power weight.
    Cantor {
        /// Geometric ratio: lengths q^-n.
        #[arg(long)]
        q: Option<f64>,
        /// Explicit relative lengths l_1,l_2,...
        #[arg(long, conflicts_with = "q")]
        lengths: Option<String>,
        #[arg(long)]
        levels: Option<u32>,
        #[arg(long, allow_hyphen_values = true)]
        start: Option<f64>,
        #[arg(long)]
        length: Option<f64>,
        /// Exponent of the weight dist(., K)^alpha.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Two atoms per complementary gap, weighted by the gap length.
    Noncarleson {
        /// Use the gaps (1/log(n+1), 1/log n), 2 <= n <= n_max.
        #[arg(long)]
        n_max: Option<u64>,
        /// JSON list of arcs instead.
        #[arg(long, conflicts_with = "n_max")]
        gaps: Option<PathBuf>,
    },
    /// Cantor-weight measure, log-log arc family and power capacity rule.
    CantorWeight {
        #[arg(long)]
        params: PathBuf,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "suite", rename_all = "kebab-case")]
pub enum Suite {
    /// Boundary against area energy of z^n.
    Douglas {
        #[arg(long, default_value = "1..8")]
        n: String,
    },
    /// w(a)·sqrt(a) for the atom cluster at a = 2^-k.
    LemcapScaling {
        #[arg(long, default_value = "3..20")]
        k: String,
    },
    /// Divergence of the Cantor-weight criterion series under capacity scaling.
    #[command(alias = "km-section35")]
    KmCantorWeight {
        #[arg(long, default_value = "1e3,1e4,1e5,1e6")]
        checkpoints: String,
        #[arg(long, default_value = "0.25,1,4")]
        lambdas: String,
    },
    /// Empirical Poincare constants over the probe corpus.
    Poincare {
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
    },
    /// Poisson integral at 0 against total mass over the measure corpus.
    PoissonNormalization,
}

struct Report {
    inputs: Value,
    result: Value,
    table: Option<Table>,
    failed: Option<String>,
}

impl Report {
    fn new(inputs: Value, result: Value) -> Self {
        Report { inputs, result, table: None, failed: None }
    }

    fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

pub fn run(cmd: &Command, global: &Global) -> Result<u8, CliError> {
    if !(global.rtol > 0.0 && global.rtol < 1.0) {
        return Err(CliError::Config(format!("rtol must lie in (0, 1), got {}", global.rtol)));
    }
    if global.max_panels < 1 {
        return Err(CliError::Config("max-panels must be positive".into()));
    }
    let tol = Tolerance { max_panels: global.max_panels, ..Tolerance::relative(global.rtol) };
    let norm = global.normalization.factor();
    let report = match cmd {
        Command::Poisson { measure, z } => poisson(measure, z, norm, &tol)?,
        Command::Energy { measure, function } => energy(measure, function, norm, &tol)?,
        Command::Capacity { target } => capacity_cmd(target, &tol)?,
        Command::KmTest(args) => km_test(args, &tol)?,
        Command::Construct { what } => construct(what, norm)?,
        Command::Verify { suite } => verify_cmd(suite, &tol)?,
        Command::Guillot { measure, panels } => guillot(measure, *panels, norm, &tol)?,
        Command::Carleson { gaps, checkpoints } => carleson(gaps, checkpoints)?,
    };
    let text = match global.format {
        Format::Json => {
            let config = json!({ "command": to_value(cmd), "options": to_value(global), "inputs": report.inputs });
            output::to_json(&output::envelope(config, report.result)).map_err(|e| CliError::Config(e.to_string()))?
        }
        Format::Csv => match report.table.or_else(|| output::scalar_table(&report.result)) {
            Some(t) => t.render(),
            None => return Err(CliError::Config("csv output is not available for this command".into())),
        },
    };
    emit(&text, global.out.as_deref())?;
    if let Some(msg) = report.failed {
        eprintln!("hwd: verification failed: {msg}");
        return Ok(4);
    }
    Ok(0)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|source| CliError::Write { path: path.display().to_string(), source }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write { path: "stdout".into(), source }),
    }
}

fn poisson(measure: &str, z: &str, norm: f64, tol: &Tolerance) -> Result<Report, CliError> {
    let mu = inputs::measure(measure)?;
    let zs = inputs::numbers(z, "z")?;
    let [re, im] = zs[..] else {
        return Err(CliError::Config(format!("expected z as re,im, got '{z}'")));
    };
    let p = mu.poisson(Complex64::new(re, im), tol)?;
    let mass = mu.total_mass();
    let result = json!({
        "value": p.value,
        "error": p.error,
        "total_mass": mass.value * norm,
        "total_mass_error": mass.error * norm,
    });
    Ok(Report::new(json!({ "measure": to_value(&mu) }), result))
}

fn energy(measure: &str, function: &str, norm: f64, tol: &Tolerance) -> Result<Report, CliError> {
    let mu = inputs::measure(measure)?;
    let f = inputs::function(function)?;
    let b = holomorphic::dirichlet_energy_boundary(&f, &mu, tol)?;
    let a = holomorphic::dirichlet_energy_area(&f, &mu, tol)?;
    let result = json!({
        "boundary": b.value * norm,
        "boundary_error": b.error * norm,
        "area": a.value * norm,
        "area_error": a.error * norm,
        "difference": (b.value - a.value) * norm,
    });
    Ok(Report::new(json!({ "measure": to_value(&mu), "function": to_value(&f) }), result))
}

fn capacity_cmd(target: &CapacityTarget, tol: &Tolerance) -> Result<Report, CliError> {
    match target {
        CapacityTarget::Arc { measure, start, length } => {
            let mu = inputs::measure(measure)?;
            let est = capacity::arc_capacity(&mu, &Arc::new(*start, *length)?, tol)?;
            Ok(Report::new(json!({ "measure": to_value(&mu) }), to_value(&est)))
        }
        CapacityTarget::Point { measure, theta } => {
            let mu = inputs::measure(measure)?;
            let r = capacity::point_capacity_report(&mu, CirclePoint::new(*theta), &default_schedule(), tol)?;
            let mut t = Table::new(vec!["x_min", "w_partial"]);
            for &(x, w) in &r.partials {
                t.push(vec![fmt_f64(x), fmt_f64(w)]);
            }
            Ok(Report::new(json!({ "measure": to_value(&mu) }), to_value(&r)).with_table(t))
        }
        CapacityTarget::Stolz { measure, theta, beta, function } => {
            let mu = inputs::measure(measure)?;
            let f = inputs::function(function)?;
            let b = capacity::stolz_bound(&mu, CirclePoint::new(*theta), *beta, &f, tol)?;
            let result = json!({
                "factor1": b.factor1.value,
                "factor1_error": b.factor1.error,
                "factor2": b.factor2.value,
                "factor2_error": b.factor2.error,
                "product": b.product,
            });
            Ok(Report::new(json!({ "measure": to_value(&mu), "function": to_value(&f) }), result))
        }
    }
}

fn series_table(checkpoints: &[Checkpoint], scale: f64) -> Table {
    let mut t = Table::new(vec!["N", "S_N"]);
    for c in checkpoints {
        t.push(vec![c.n.to_string(), fmt_f64(c.value * scale)]);
    }
    t
}

fn km_test(args: &KmArgs, tol: &Tolerance) -> Result<Report, CliError> {
    let checkpoints = inputs::checkpoints(&args.checkpoints)?;
    let opts = KmOptions { multiplier: args.multiplier, tol: *tol };
    let (mu, family, rule, extra) = match &args.example {
        Some(path) => {
            let params: CantorWeightParams = inputs::from_value(inputs::read_json(path)?, "example parameters")?;
            let ex = constructions::cantor_weight_example(&params)?;
            let extra = json!({ "example": to_value(&params), "capacity_test": to_value(&ex.capacity_test) });
            (ex.measure, ex.family, ex.rule, extra)
        }
        None => {
            let need = |v: &Option<String>, name: &str| {
                v.clone().ok_or_else(|| CliError::Config(format!("km-test needs --{name} (or --example)")))
            };
            let mu = inputs::measure(&need(&args.measure, "measure")?)?;
            let family = inputs::family(&need(&args.family, "family")?)?;
            let rule = inputs::rule(&need(&args.rule, "rule")?)?;
            (mu, family, rule, Value::Null)
        }
    };
    let report = uniqueness::km_criterion(&mu, &family, &rule, &checkpoints, &opts)?;
    let inputs = json!({
        "measure": to_value(&mu),
        "family": to_value(&family),
        "rule": to_value(&rule),
        "checkpoints": checkpoints,
    });
    let mut result = json!({ "report": to_value(&report) });
    if !extra.is_null() {
        result["capacity_test"] = extra["capacity_test"].clone();
    }
    let table = series_table(&report.checkpoints, 1.0);
    Ok(Report::new(inputs, result).with_table(table))
}

/// Fills unset fields from a JSON parameter file, then from defaults.
fn params<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        Some(p) => inputs::from_value(inputs::read_json(p)?, "parameters"),
        None => Ok(T::default()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Um0Params {
    epsilon: f64,
    n_max: u64,
    k_max: u64,
}

impl Default for Um0Params {
    fn default() -> Self {
        Um0Params { epsilon: 0.01, n_max: 200, k_max: 60 }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LemcapParams {
    zeta: f64,
    a: f64,
    k_max: u64,
}

impl Default for LemcapParams {
    fn default() -> Self {
        LemcapParams { zeta: 0.0, a: 0.125, k_max: 60 }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CantorParams {
    lengths: LengthsRule,
    levels: u32,
    base_arc: Arc,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

impl Default for CantorParams {
    fn default() -> Self {
        CantorParams {
            lengths: LengthsRule::Geometric { q: 3.0 },
            levels: 8,
            base_arc: Arc::new(PI, 1.0).expect("unit arc"),
            alpha: None,
        }
    }
}

fn atom_table(mu: &Measure) -> Table {
    let mut t = Table::new(vec!["theta", "offset", "mass"]);
    for a in mu.atoms() {
        t.push(vec![fmt_f64(a.theta), fmt_f64(a.offset), fmt_f64(a.mass)]);
    }
    t
}

fn measure_summary(mu: &Measure, norm: f64) -> Value {
    let m = mu.total_mass();
    json!({ "total_mass": m.value * norm, "total_mass_error": m.error * norm, "tail_bound": mu.tail_bound() * norm })
}

fn construct(what: &Construct, norm: f64) -> Result<Report, CliError> {
    match what {
        Construct::Um0 { epsilon, n_max, k_max, params: file } => {
            let mut p: Um0Params = params(file.as_deref())?;
            p.epsilon = epsilon.unwrap_or(p.epsilon);
            p.n_max = n_max.unwrap_or(p.n_max);
            p.k_max = k_max.unwrap_or(p.k_max);
            let u = constructions::um0_measure(p.epsilon, p.n_max, p.k_max)?;
            let mut result = to_value(&u);
            result["summary"] = measure_summary(&u.measure, norm);
            let table = atom_table(&u.measure);
            Ok(Report::new(json!({ "params": to_value(&p) }), result).with_table(table))
        }
        Construct::Lemcap { zeta, a, k_max, params: file } => {
            let mut p: LemcapParams = params(file.as_deref())?;
            p.zeta = zeta.unwrap_or(p.zeta);
            p.a = a.unwrap_or(p.a);
            p.k_max = k_max.unwrap_or(p.k_max);
            let mu = constructions::lemcap_measure(p.zeta, p.a, p.k_max)?;
            let result = json!({ "measure": to_value(&mu), "summary": measure_summary(&mu, norm) });
            let table = atom_table(&mu);
            Ok(Report::new(json!({ "params": to_value(&p) }), result).with_table(table))
        }
        Construct::Cantor { q, lengths, levels, start, length, alpha, params: file } => {
            let mut p: CantorParams = params(file.as_deref())?;
            if let Some(q) = q {
                p.lengths = LengthsRule::Geometric { q: *q };
            }
            if let Some(l) = lengths {
                p.lengths = LengthsRule::Explicit { values: inputs::numbers(l, "lengths")? };
            }
            p.levels = levels.unwrap_or(p.levels);
            if start.is_some() || length.is_some() {
                p.base_arc = Arc::new(start.unwrap_or(p.base_arc.start()), length.unwrap_or(p.base_arc.length()))?;
            }
            p.alpha = alpha.or(p.alpha);
            let spec = CantorSpec { lengths: p.lengths.clone(), levels: p.levels, base_arc: p.base_arc };
            let arcs = constructions::cantor_set(&spec)?;
            let mut result = json!({ "arcs": to_value(&arcs), "total_length": spec.total_length()? });
            if let Some(alpha) = p.alpha {
                let mu = Measure::new(
                    vec![],
                    hwd_core::Density::DistancePower {
                        alpha,
                        base: hwd_core::measures::BaseSet { points: vec![], cantor: vec![spec.clone()] },
                        scale: 1.0,
                    },
                    0.0,
                )?;
                let test = constructions::cantor_capacity_zero_test(
                    &p.lengths,
                    alpha,
                    &constructions::CAPACITY_TEST_CHECKPOINTS,
                );
                result["measure"] = to_value(&mu);
                result["summary"] = measure_summary(&mu, norm);
                // finite explicit lists may be too short for the test
                result["capacity_test"] = match test {
                    Ok(t) => to_value(&t),
                    Err(e) => json!({ "error": e.to_string() }),
                };
            }
            let mut t = Table::new(vec!["start", "length"]);
            for a in &arcs {
                t.push(vec![fmt_f64(a.start()), fmt_f64(a.length())]);
            }
            Ok(Report::new(json!({ "params": to_value(&p) }), result).with_table(t))
        }
        Construct::Noncarleson { n_max, gaps } => {
            let (mu, inputs) = match gaps {
                Some(path) => {
                    let arcs: Vec<Arc> = inputs::from_value(inputs::read_json(path)?, "gap list")?;
                    let mu = constructions::noncarleson_arc_measure(&arcs)?;
                    (mu, json!({ "gaps": to_value(&arcs) }))
                }
                None => {
                    let n = n_max.unwrap_or(1000);
                    (constructions::noncarleson_loglog_measure(n)?, json!({ "n_max": n }))
                }
            };
            let result = json!({ "measure": to_value(&mu), "summary": measure_summary(&mu, norm) });
            let table = atom_table(&mu);
            Ok(Report::new(inputs, result).with_table(table))
        }
        Construct::CantorWeight { params: path } => {
            let p: CantorWeightParams = inputs::from_value(inputs::read_json(path)?, "example parameters")?;
            let ex = constructions::cantor_weight_example(&p)?;
            let mut result = to_value(&ex);
            result["summary"] = measure_summary(&ex.measure, norm);
            Ok(Report::new(json!({ "params": to_value(&p) }), result))
        }
    }
}

fn suite_table(r: &SuiteReport) -> Table {
    let mut t = Table::new(vec!["label", "value", "reference", "deviation", "tolerance", "passed"]);
    for c in &r.cases {
        t.push(vec![
            c.label.clone(),
            fmt_f64(c.value),
            fmt_f64(c.reference),
            fmt_f64(c.deviation),
            fmt_f64(c.tolerance),
            c.passed.to_string(),
        ]);
    }
    t
}

fn verify_cmd(suite: &Suite, tol: &Tolerance) -> Result<Report, CliError> {
    let r = match suite {
        Suite::Douglas { n } => {
            let (lo, hi) = inputs::range(n)?;
            if lo < 1 {
                return Err(CliError::Config("douglas needs n >= 1".into()));
            }
            verify::douglas(lo as usize, hi as usize, tol)?
        }
        Suite::LemcapScaling { k } => {
            let (lo, hi) = inputs::range(k)?;
            if lo < 2 || hi > 40 {
                return Err(CliError::Config("lemcap-scaling needs 2 <= k <= 40".into()));
            }
            verify::lemcap_scaling(lo as i32, hi as i32, tol)?
        }
        Suite::KmCantorWeight { checkpoints, lambdas } => {
            let cps = inputs::checkpoints(checkpoints)?;
            let lambdas = inputs::numbers(lambdas, "lambdas")?;
            verify::km_cantor_weight(&cps, &lambdas, tol)?
        }
        Suite::Poincare { gamma } => verify::poincare(*gamma, tol)?,
        Suite::PoissonNormalization => verify::poisson_normalization(tol)?,
    };
    let table = suite_table(&r);
    let failed = (!r.passed).then(|| {
        let n = r.failures().count();
        format!("{} of {} checks in suite {} failed", n, r.cases.len(), r.suite)
    });
    let mut report = Report::new(Value::Null, to_value(&r)).with_table(table);
    report.failed = failed;
    Ok(report)
}

fn scaled(mut r: DivergenceReport, s: f64) -> DivergenceReport {
    for c in &mut r.checkpoints {
        c.value *= s;
    }
    r.limit = r.limit.map(|l| l * s);
    r
}

fn guillot(measure: &str, panels: usize, norm: f64, tol: &Tolerance) -> Result<Report, CliError> {
    let mu = inputs::measure(measure)?;
    let r = scaled(mu.guillot_integral(panels, tol)?, norm);
    let table = series_table(&r.checkpoints, 1.0);
    Ok(Report::new(json!({ "measure": to_value(&mu) }), to_value(&r)).with_table(table))
}

fn carleson(gaps: &str, checkpoints: &str) -> Result<Report, CliError> {
    let g = inputs::gaps(gaps)?;
    let cps = inputs::checkpoints(checkpoints)?;
    let r = constructions::carleson_test(&g, &cps)?;
    let mut t = Table::new(vec!["N", "S_N", "remaining_length"]);
    for (c, rem) in r.sum.checkpoints.iter().zip(&r.remaining_length) {
        t.push(vec![c.n.to_string(), fmt_f64(c.value), fmt_f64(rem.value)]);
    }
    Ok(Report::new(json!({ "gaps": to_value(&g), "checkpoints": cps }), to_value(&r)).with_table(t))
}
