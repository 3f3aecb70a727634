use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::report::{CheckRecord, Comparison, Relation, RunReport, Table};
use super::{prepare, sha_hex, Field, HarnessError, Job, PolyContext, PolyTemplate, PreparedCheck, RunOptions, Scenario};
use crate::error::{Error, Result};
use crate::interacting::nu_markov_report;
use crate::positivity::{random_family, rp_gram, GramReport, MassMode};
use crate::sewing::sew_check;
use crate::sobolev::{triple_decompose, ContextId, FieldOperator, SobolevOrder};
use crate::wick::{conditional_expectation, derive_seed, Ordering, Polynomial};

/// A finished run: the report and the CSV tables it references.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    /// `(file name, contents)`.
    pub tables: Vec<(String, String)>,
}

impl PolyTemplate {
    fn build(&self, ctx: ContextId) -> Result<Polynomial> {
        let ordering = match self.context {
            PolyContext::Plain => Ordering::Plain,
            PolyContext::Wick => Ordering::Wick(ctx),
            PolyContext::Id(id) if id == ctx.0 => Ordering::Wick(ctx),
            PolyContext::Id(found) => {
                return Err(Error::ContextMismatch {
                    expected: ctx.0,
                    found,
                })
            }
        };
        let mut p = Polynomial::zero(ordering);
        for (c, fs) in &self.terms {
            p.add_term(*c, fs.clone())?;
        }
        Ok(p)
    }
}

impl Field {
    fn operator(&self) -> Result<FieldOperator> {
        FieldOperator::assemble(Arc::clone(&self.mesh), self.mass)
    }
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

struct Outcome {
    values: BTreeMap<String, f64>,
    comparisons: Vec<Comparison>,
    tables: Vec<Table>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            values: BTreeMap::new(),
            comparisons: Vec::new(),
            tables: Vec::new(),
        }
    }

    fn value(&mut self, k: &str, v: f64) {
        self.values.insert(k.to_string(), v);
    }

    fn compare(&mut self, q: impl Into<String>, v: f64, rel: Relation, bound: f64) {
        self.comparisons.push(Comparison::new(q, v, rel, bound));
    }
}

fn run_job(c: &PreparedCheck) -> Result<Outcome> {
    let tol = c.tolerance;
    let seed = c.seed.unwrap_or(0);
    let mut out = Outcome::new();
    match &c.job {
        Job::Decomp {
            field,
            partition,
            vectors,
        } => {
            let fop = field.operator()?;
            let pm = fop.premarkov_residual(partition)?;
            out.value("premarkov_residual", pm);
            out.compare("premarkov_residual", pm, Relation::Le, tol);
            let mut table = Table::new("vectors", vec!["vector", "sum_error", "ext_bnd", "ext_int", "bnd_int"]);
            let (mut worst_sum, mut worst_orth) = (0.0f64, 0.0f64);
            for (name, f) in vectors {
                let d = triple_decompose(&fop, partition, f)?;
                let scale = f.max_abs().max(f64::MIN_POSITIVE);
                let sum = d.exterior.add(&d.boundary).add(&d.interior).sub(f).max_abs() / scale;
                let cos = |a: &[f64], b: &[f64]| -> Result<f64> {
                    let ab = fop.inner(SobolevOrder::Minus, a, b)?;
                    let aa = fop.inner(SobolevOrder::Minus, a, a)?;
                    let bb = fop.inner(SobolevOrder::Minus, b, b)?;
                    Ok(if aa > 0.0 && bb > 0.0 { ab.abs() / (aa * bb).sqrt() } else { 0.0 })
                };
                let eb = cos(&d.exterior, &d.boundary)?;
                let ei = cos(&d.exterior, &d.interior)?;
                let bi = cos(&d.boundary, &d.interior)?;
                worst_sum = worst_sum.max(sum);
                worst_orth = worst_orth.max(eb).max(ei).max(bi);
                table.push(vec![name.clone(), fmt(sum), fmt(eb), fmt(ei), fmt(bi)]);
            }
            out.value("max_sum_error", worst_sum);
            out.value("max_orthogonality", worst_orth);
            out.compare("max_sum_error", worst_sum, Relation::Le, tol);
            out.compare("max_orthogonality", worst_orth, Relation::Le, tol);
            out.tables.push(table);
        }
        Job::Markov {
            field,
            partition,
            polynomials,
            random,
        } => {
            let fop = field.operator()?;
            let mut polys: Vec<Polynomial> = polynomials
                .iter()
                .map(|t| t.build(fop.context()))
                .collect::<Result<_>>()?;
            if let Some(r) = random {
                polys.extend(random_family(
                    Ordering::Wick(fop.context()),
                    fop.dim(),
                    &partition.closure(),
                    r.count,
                    r.max_degree,
                    false,
                    seed,
                )?);
            }
            let pm = fop.premarkov_residual(partition)?;
            out.value("premarkov_residual", pm);
            let closure = partition.closure();
            let complement = partition.complement();
            let mut table = Table::new("polynomials", vec!["polynomial", "distance", "scale"]);
            let mut worst = 0.0f64;
            for (k, p) in polys.iter().enumerate() {
                p.require_support(&closure, &format!("polynomial {k}"))?;
                let lhs = conditional_expectation(&fop, &complement, p)?;
                let rhs = conditional_expectation(&fop, &partition.boundary, p)?;
                let scale = lhs.coefficient_scale().max(rhs.coefficient_scale()).max(1.0);
                let d = lhs.coefficient_distance(&rhs)? / scale;
                worst = worst.max(d);
                table.push(vec![k.to_string(), fmt(d), fmt(scale)]);
            }
            out.value("max_relative_distance", worst);
            out.compare("max_relative_distance", worst, Relation::Le, tol);
            out.tables.push(table);
        }
        Job::Rp {
            surface,
            mass,
            mode,
            family,
            random,
            approach,
            counterexample,
        } => {
            let fop = FieldOperator::assemble(surface.mesh.clone(), *mass)?;
            let ctx = fop.context();
            let part = surface.involution.partition();
            let mut families: Vec<Vec<Polynomial>> = Vec::new();
            if !family.is_empty() {
                families.push(family.iter().map(|t| t.build(ctx)).collect::<Result<_>>()?);
            }
            if let Some(r) = random {
                let (region, mean_zero) = match mode {
                    MassMode::Massive => (part.closure(), false),
                    MassMode::ZeroMassLimit => (part.omega.clone(), true),
                };
                for f in 0..r.families {
                    families.push(random_family(
                        Ordering::Wick(ctx),
                        fop.dim(),
                        &region,
                        r.size,
                        r.max_degree,
                        mean_zero,
                        derive_seed(seed, f as u64),
                    )?);
                }
            }
            let mut eig = Table::new("eigenvalues", vec!["family", "index", "eigenvalue"]);
            let mut worst = 0.0f64;
            let mut grams: Vec<GramReport> = Vec::new();
            for (f, fam) in families.iter().enumerate() {
                let g = rp_gram(&fop, &surface.involution, fam, *mode)?;
                for (i, e) in g.eigenvalues.iter().enumerate() {
                    eig.push(vec![f.to_string(), i.to_string(), fmt(*e)]);
                }
                if g.scale > 0.0 {
                    worst = worst.max(-g.min_eigenvalue / g.scale);
                }
                grams.push(g);
            }
            out.value("families", families.len() as f64);
            out.value("worst_negative_ratio", worst);
            out.compare("worst_negative_ratio", worst, Relation::Le, tol);
            out.tables.push(eig);
            if !approach.is_empty() {
                if *mode != MassMode::ZeroMassLimit {
                    return Err(Error::InvalidParameter(
                        "a mass approach needs the zero mass limit mode".into(),
                    ));
                }
                let mut masses = approach.clone();
                masses.sort_by(|a, b| b.total_cmp(a));
                let mut table = Table::new("approach", vec!["family", "mass", "distance"]);
                let ops: Vec<FieldOperator> = masses
                    .iter()
                    .map(|&m| FieldOperator::assemble(surface.mesh.clone(), m))
                    .collect::<Result<_>>()?;
                for (f, fam) in families.iter().enumerate() {
                    let m0 = grams[f].matrix();
                    let mut prev = f64::INFINITY;
                    for (m, op) in masses.iter().zip(&ops) {
                        let retagged: Vec<Polynomial> = fam
                            .iter()
                            .map(|p| p.clone().retagged(Ordering::Wick(op.context())))
                            .collect();
                        let g = rp_gram(op, &surface.involution, &retagged, MassMode::Massive)?;
                        let d = spectral_norm(&(g.matrix() - &m0));
                        table.push(vec![f.to_string(), fmt(*m), fmt(d)]);
                        out.compare(format!("family{f}_distance_at_{m:e}"), d, Relation::Lt, prev);
                        prev = d;
                    }
                }
                out.tables.push(table);
            }
            if let Some(w) = counterexample {
                let g = w.replay()?;
                let ratio = g.min_eigenvalue / g.scale.max(f64::MIN_POSITIVE);
                out.value("counterexample_min_eigenvalue", g.min_eigenvalue);
                out.compare("counterexample_ratio", ratio, Relation::Lt, -tol);
            }
        }
        Job::Sew { setup, pairs, random } => {
            let (c1, c2) = (setup.side1.fop.context(), setup.side2.fop.context());
            let mut list: Vec<(Polynomial, Polynomial)> = pairs
                .iter()
                .map(|(f, g)| Ok((f.build(c1)?, g.build(c2)?)))
                .collect::<Result<_>>()?;
            if let Some(r) = random {
                let fs = random_family(
                    Ordering::Wick(c1),
                    setup.side1.dim(),
                    &setup.side1.region(),
                    r.count,
                    r.max_degree,
                    false,
                    derive_seed(seed, 1),
                )?;
                let gs = random_family(
                    Ordering::Wick(c2),
                    setup.side2.dim(),
                    &setup.side2.region(),
                    r.count,
                    r.max_degree,
                    false,
                    derive_seed(seed, 2),
                )?;
                list.extend(fs.into_iter().zip(gs));
            }
            let mut table = Table::new("pairs", vec!["pair", "lhs", "rhs", "residual"]);
            let mut worst = 0.0f64;
            for (k, (f, g)) in list.iter().enumerate() {
                let r = sew_check(setup, f, g)?;
                worst = worst.max(r.residual);
                table.push(vec![k.to_string(), fmt(r.lhs), fmt(r.rhs), fmt(r.residual)]);
            }
            out.value("max_residual", worst);
            out.compare("max_residual", worst, Relation::Le, tol);
            out.tables.push(table);
        }
        Job::Interact {
            field,
            partition,
            potential,
            observable,
            mc,
        } => {
            let fop = field.operator()?;
            let pot = potential.build(&fop)?;
            let f = observable.build(fop.context())?;
            let mc = crate::interacting::MarkovMc { seed, ..*mc };
            let r = nu_markov_report(&fop, &pot, partition, &f, mc)?;
            out.value("pooled_z", r.pooled_z);
            out.value("outer_ess", r.outer_ess);
            out.compare("abs_pooled_z", r.pooled_z.abs(), Relation::Le, tol);
            out.value("min_inner_ess", r.min_inner_ess);
            out.compare("outer_ess", r.outer_ess, Relation::Gt, crate::interacting::MIN_ESS);
            out.compare("min_inner_ess", r.min_inner_ess, Relation::Gt, crate::interacting::MIN_ESS);
            let mut table = Table::new("configs", vec!["config", "lhs", "rhs", "diff", "stderr", "z"]);
            for row in &r.rows {
                table.push(vec![
                    row.config.to_string(),
                    fmt(row.lhs),
                    fmt(row.rhs),
                    fmt(row.diff),
                    fmt(row.stderr),
                    fmt(row.z),
                ]);
            }
            out.tables.push(table);
        }
    }
    Ok(out)
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0, |a: f64, x| a.max(x.abs()))
}

fn record(c: &PreparedCheck, source: &str) -> (CheckRecord, Vec<(String, String)>) {
    let mut rec = CheckRecord {
        index: c.index,
        kind: c.kind.to_string(),
        tolerance: c.tolerance,
        tolerance_source: source.to_string(),
        seed: c.seed,
        values: BTreeMap::new(),
        comparisons: Vec::new(),
        error: None,
        tables: Vec::new(),
        pass: false,
    };
    let mut files = Vec::new();
    match run_job(c) {
        Ok(o) => {
            rec.pass = o.comparisons.iter().all(|x| x.holds);
            rec.values = o.values;
            rec.comparisons = o.comparisons;
            for t in o.tables {
                let name = format!("check{:02}-{}-{}.csv", c.index, c.kind, t.name);
                rec.tables.push(name.clone());
                files.push((name, t.csv()));
            }
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    (rec, files)
}

fn timestamp() -> Option<u64> {
    if let Some(s) = std::env::var_os("SOURCE_DATE_EPOCH") {
        return s.to_str().and_then(|s| s.parse().ok());
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

/// Validates and runs every check in order. Schema problems return an error
/// before any check runs; failing checks are recorded in the report.
pub fn run_scenario(scenario: &Scenario, text: &str, opts: &RunOptions) -> std::result::Result<RunOutcome, HarnessError> {
    let prepared = prepare(scenario, opts)?;
    let sources: Vec<&str> = scenario
        .checks
        .iter()
        .map(|c| {
            if opts.tolerance.is_some() {
                "cli"
            } else if c.tolerance().is_some() {
                "scenario"
            } else {
                "default"
            }
        })
        .collect();
    let results: Vec<(CheckRecord, Vec<(String, String)>)> = if opts.parallel {
        prepared
            .checks
            .par_iter()
            .map(|c| record(c, sources[c.index]))
            .collect()
    } else {
        prepared.checks.iter().map(|c| record(c, sources[c.index])).collect()
    };
    let mut inputs: BTreeMap<String, String> = prepared.inputs.into_iter().collect();
    inputs.insert("scenario".into(), sha_hex(text.as_bytes()));
    let mut environment = BTreeMap::new();
    environment.insert("os".into(), std::env::consts::OS.into());
    environment.insert("arch".into(), std::env::consts::ARCH.into());
    environment.insert(
        "tolerance_override".into(),
        opts.tolerance.map(|t| format!("{t:e}")).unwrap_or_else(|| "none".into()),
    );
    let mut checks = Vec::with_capacity(results.len());
    let mut tables = Vec::new();
    for (rec, files) in results {
        checks.push(rec);
        tables.extend(files);
    }
    let mut report = RunReport {
        scenario: scenario.name.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        environment,
        inputs,
        seed: prepared.seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
        hash: String::new(),
        timestamp: timestamp(),
    };
    report.seal();
    Ok(RunOutcome { report, tables })
}

/// Writes `report.json` and the CSV tables into `dir`.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(&outcome.report).map_err(std::io::Error::other)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    for (name, csv) in &outcome.tables {
        std::fs::write(dir.join(name), csv)?;
    }
    Ok(())
}
