//! Scenario files, their validation and execution, and report emission.
//!
//! A scenario names meshes and test vectors once and refers to them from an
//! ordered list of checks. Loading resolves every reference before anything
//! runs: schema problems exit with code 2 and write nothing.

mod report;
mod run;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::interacting::PotentialSpec;
use crate::mesh::{build_mesh, make_partition, Mesh, MeshSpec, RegionPartition, VertexSet};
use crate::positivity::{reflected_icosphere, reflected_torus, MassMode, ReflectedMesh};
use crate::sewing::{CapKind, SetupSpec, SewSetup};
use crate::sobolev::TestVector;

pub use report::{CheckRecord, Comparison, Relation, RunReport, Table};
pub use run::{run_scenario, write_outputs, RunOutcome};

/// Bundled scenarios, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("torus-markov", include_str!("../../scenarios/torus-markov.json")),
    ("markov", include_str!("../../scenarios/markov.json")),
    ("reflection_positivity", include_str!("../../scenarios/reflection_positivity.json")),
    (
        "massless_reflection_positivity",
        include_str!("../../scenarios/massless_reflection_positivity.json"),
    ),
    ("sewing", include_str!("../../scenarios/sewing.json")),
    ("interacting_markov", include_str!("../../scenarios/interacting_markov.json")),
];

/// Bundled scenario for a check kind or scenario name.
pub fn bundled(name: &str) -> Option<&'static str> {
    let name = match name {
        "decomp" => "torus-markov",
        "rp" => "reflection_positivity",
        "rp0" => "massless_reflection_positivity",
        "sew" => "sewing",
        "interact" => "interacting_markov",
        other => other,
    };
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// `MFIELD_FIXTURES`, or the fixtures shipped with the crate.
pub fn fixtures_dir() -> PathBuf {
    std::env::var_os("MFIELD_FIXTURES")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Required when any check samples or draws random inputs.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub meshes: BTreeMap<String, MeshRef>,
    #[serde(default)]
    pub vectors: BTreeMap<String, VectorSpec>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshRef {
    File(MeshFileRef),
    Inline(MeshSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFileRef {
    /// Relative paths resolve against the scenario file's directory.
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorSpec {
    Values(Vec<f64>),
    Delta(usize),
    Bump { center: usize, radius: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSpec {
    Vertices(Vec<usize>),
    Ball { center: usize, radius: usize },
}

/// `{"context": ..., "terms": [{"coef": c, "factors": [name, ...]}]}`.
/// The context is `"plain"`, `"wick"` for the check's own covariance, or the
/// hexadecimal id of that covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySpec {
    pub context: String,
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: f64,
    #[serde(default)]
    pub factors: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPolys {
    pub count: usize,
    pub max_degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFamilies {
    pub families: usize,
    pub size: usize,
    pub max_degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RpSurface {
    Torus { nx: usize, ny: usize },
    Icosphere { subdivisions: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SewPair {
    pub f: PolySpec,
    pub g: PolySpec,
}

/// Pre-Markov residual and the three-way decomposition of each vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompCheck {
    pub mesh: String,
    pub mass: f64,
    pub omega: OmegaSpec,
    pub vectors: Vec<String>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

/// `E_{Ωᶜ}p = E_{∂Ω}p` for Wick polynomials supported in `Ω̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovCheck {
    pub mesh: String,
    pub mass: f64,
    pub omega: OmegaSpec,
    #[serde(default)]
    pub polynomials: Vec<PolySpec>,
    #[serde(default)]
    pub random: Option<RandomPolys>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

/// Reflected Gram matrices are positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpCheck {
    pub surface: RpSurface,
    pub mass: f64,
    #[serde(default)]
    pub mode: MassMode,
    #[serde(default)]
    pub family: Vec<PolySpec>,
    #[serde(default)]
    pub random: Option<RandomFamilies>,
    /// Massive Gram matrices of the same vectors, expected to approach the
    /// massless one as the mass decreases.
    #[serde(default)]
    pub approach: Vec<f64>,
    /// Fixture file of a family outside the support precondition that must
    /// stay indefinite.
    #[serde(default)]
    pub counterexample: Option<String>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

/// Sewing identity for pairs of side polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SewCheck {
    pub setup: SetupSpec,
    pub cap: CapKind,
    pub mass: f64,
    #[serde(default)]
    pub pairs: Vec<SewPair>,
    #[serde(default)]
    pub random: Option<RandomPolys>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

/// Monte Carlo Markov property of the interacting measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractCheck {
    pub mesh: String,
    pub mass: f64,
    pub omega: OmegaSpec,
    pub potential: PotentialSpec,
    pub observable: PolySpec,
    pub n_outer: usize,
    pub n_inner: usize,
    #[serde(default)]
    pub pool_factor: Option<usize>,
    /// Bound on the pooled `|z|`.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Check {
    Decomp(DecompCheck),
    Markov(MarkovCheck),
    Rp(RpCheck),
    Sew(SewCheck),
    Interact(InteractCheck),
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::Decomp(_) => "decomp",
            Check::Markov(_) => "markov",
            Check::Rp(_) => "rp",
            Check::Sew(_) => "sew",
            Check::Interact(_) => "interact",
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            Check::Decomp(_) => 1e-10,
            Check::Markov(_) => 1e-9,
            Check::Rp(_) => crate::positivity::RP_TOLERANCE,
            Check::Sew(_) => crate::sewing::SEW_TOLERANCE,
            Check::Interact(_) => 3.0,
        }
    }

    fn tolerance(&self) -> Option<f64> {
        match self {
            Check::Decomp(c) => c.tolerance,
            Check::Markov(c) => c.tolerance,
            Check::Rp(c) => c.tolerance,
            Check::Sew(c) => c.tolerance,
            Check::Interact(c) => c.tolerance,
        }
    }

    fn stochastic(&self) -> bool {
        match self {
            Check::Decomp(_) => false,
            Check::Interact(_) => true,
            Check::Markov(c) => c.random.is_some(),
            Check::Sew(c) => c.random.is_some(),
            Check::Rp(c) => c.random.is_some(),
        }
    }
}

/// Invalid scenario input, with the path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("schema error at {0}")]
    Schema(SchemaError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        2
    }
}

fn schema(path: impl Into<String>, message: impl fmt::Display) -> HarnessError {
    HarnessError::Schema(SchemaError {
        path: path.into(),
        message: message.to_string(),
    })
}

/// Parses scenario text, reporting the path of the first bad field.
pub fn parse_scenario(text: &str) -> Result<Scenario, HarnessError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        diagnose_check(text, &path).unwrap_or_else(|| schema(if path == "." { String::new() } else { path }, message))
    })
}

/// Internally tagged checks are buffered before decoding, which hides the
/// failing field. Decoding the entry again as its own variant recovers it.
fn diagnose_check(text: &str, path: &str) -> Option<HarnessError> {
    let index: usize = path.strip_prefix("checks[")?.strip_suffix(']')?.parse().ok()?;
    let root: serde_json::Value = serde_json::from_str(text).ok()?;
    let mut entry = root.get("checks")?.get(index)?.clone();
    let tag = entry.as_object_mut()?.remove("check")?;
    fn inner<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Option<(String, String)> {
        serde_path_to_error::deserialize::<_, T>(v)
            .err()
            .map(|e| (e.path().to_string(), e.into_inner().to_string()))
    }
    let (field, message) = match tag.as_str()? {
        "decomp" => inner::<DecompCheck>(entry),
        "markov" => inner::<MarkovCheck>(entry),
        "rp" => inner::<RpCheck>(entry),
        "sew" => inner::<SewCheck>(entry),
        "interact" => inner::<InteractCheck>(entry),
        other => Some(("check".into(), format!("unknown check `{other}`"))),
    }?;
    let full = if field == "." { path.to_string() } else { format!("{path}.{field}") };
    Some(schema(full, message))
}

/// Runtime knobs that override or complement the scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub parallel: bool,
    /// Directory for relative mesh files.
    pub base_dir: PathBuf,
    pub fixtures: Option<PathBuf>,
}

/// A field operator request: a shared mesh and a mass.
#[derive(Debug, Clone)]
pub(crate) struct Field {
    pub mesh: Arc<Mesh>,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PolyContext {
    Plain,
    Wick,
    Id(u64),
}

#[derive(Debug, Clone)]
pub(crate) struct PolyTemplate {
    pub context: PolyContext,
    pub terms: Vec<(f64, Vec<TestVector>)>,
}

/// A check with every reference resolved.
pub(crate) enum Job {
    Decomp {
        field: Field,
        partition: RegionPartition,
        vectors: Vec<(String, TestVector)>,
    },
    Markov {
        field: Field,
        partition: RegionPartition,
        polynomials: Vec<PolyTemplate>,
        random: Option<RandomPolys>,
    },
    Rp {
        surface: ReflectedMesh,
        mass: f64,
        mode: MassMode,
        family: Vec<PolyTemplate>,
        random: Option<RandomFamilies>,
        approach: Vec<f64>,
        counterexample: Option<crate::positivity::RpWitness>,
    },
    Sew {
        setup: Box<SewSetup>,
        pairs: Vec<(PolyTemplate, PolyTemplate)>,
        random: Option<RandomPolys>,
    },
    Interact {
        field: Field,
        partition: RegionPartition,
        potential: PotentialSpec,
        observable: PolyTemplate,
        mc: crate::interacting::MarkovMc,
    },
}

pub(crate) struct PreparedCheck {
    pub index: usize,
    pub kind: &'static str,
    pub tolerance: f64,
    pub seed: Option<u64>,
    pub job: Job,
}

pub(crate) struct Prepared {
    pub checks: Vec<PreparedCheck>,
    /// `(label, sha256)` of every input read from disk.
    pub inputs: Vec<(String, String)>,
    pub seed: Option<u64>,
}

fn sha_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Resolver<'a> {
    scenario: &'a Scenario,
    opts: &'a RunOptions,
    meshes: BTreeMap<String, Arc<Mesh>>,
    inputs: Vec<(String, String)>,
}

impl<'a> Resolver<'a> {
    fn mesh(&mut self, name: &str, path: &str) -> Result<Arc<Mesh>, HarnessError> {
        if let Some(m) = self.meshes.get(name) {
            return Ok(m.clone());
        }
        let mref = self
            .scenario
            .meshes
            .get(name)
            .ok_or_else(|| schema(path, format!("unknown mesh `{name}`")))?;
        let mesh = match mref {
            MeshRef::Inline(spec) => {
                build_mesh(spec).map_err(|e| schema(format!("meshes.{name}"), e))?
            }
            MeshRef::File(f) => {
                let full = self.opts.base_dir.join(&f.file);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| schema(format!("meshes.{name}.file"), format!("{}: {e}", full.display())))?;
                self.inputs.push((format!("mesh:{name}"), sha_hex(text.as_bytes())));
                Mesh::from_json(&text).map_err(|e| schema(format!("meshes.{name}.file"), e))?
            }
        };
        let mesh = Arc::new(mesh);
        self.meshes.insert(name.to_string(), mesh.clone());
        Ok(mesh)
    }

    fn vector(
        &self,
        name: &str,
        path: &str,
        n: usize,
        bump: &dyn Fn(usize, usize) -> TestVector,
    ) -> Result<TestVector, HarnessError> {
        let spec = self
            .scenario
            .vectors
            .get(name)
            .ok_or_else(|| schema(path, format!("unknown vector `{name}`")))?;
        let out_of_range = |v: usize| schema(format!("vectors.{name}"), format!("vertex {v} out of range for {n} vertices"));
        match spec {
            VectorSpec::Values(v) => {
                if v.len() != n {
                    return Err(schema(
                        format!("vectors.{name}"),
                        format!("expected {n} values, found {}", v.len()),
                    ));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(schema(format!("vectors.{name}"), "values must be finite"));
                }
                Ok(TestVector::new(v.clone()))
            }
            VectorSpec::Delta(i) if *i < n => Ok(TestVector::delta(n, *i)),
            VectorSpec::Delta(i) => Err(out_of_range(*i)),
            VectorSpec::Bump { center, radius } if *center < n => Ok(bump(*center, *radius)),
            VectorSpec::Bump { center, .. } => Err(out_of_range(*center)),
        }
    }

    fn poly(
        &self,
        spec: &PolySpec,
        path: &str,
        n: usize,
        bump: &dyn Fn(usize, usize) -> TestVector,
    ) -> Result<PolyTemplate, HarnessError> {
        let context = match spec.context.as_str() {
            "plain" => PolyContext::Plain,
            "wick" => PolyContext::Wick,
            hex => PolyContext::Id(u64::from_str_radix(hex, 16).map_err(|_| {
                schema(
                    format!("{path}.context"),
                    format!("expected `plain`, `wick` or a hexadecimal context id, found `{hex}`"),
                )
            })?),
        };
        let mut terms = Vec::with_capacity(spec.terms.len());
        for (t, term) in spec.terms.iter().enumerate() {
            if !term.coef.is_finite() {
                return Err(schema(format!("{path}.terms[{t}].coef"), "coefficient must be finite"));
            }
            let factors = term
                .factors
                .iter()
                .enumerate()
                .map(|(k, name)| self.vector(name, &format!("{path}.terms[{t}].factors[{k}]"), n, bump))
                .collect::<Result<Vec<_>, _>>()?;
            terms.push((term.coef, factors));
        }
        Ok(PolyTemplate { context, terms })
    }
}

fn partition(mesh: &Mesh, omega: &OmegaSpec, path: &str) -> Result<RegionPartition, HarnessError> {
    let n = mesh.vertex_count();
    let set: VertexSet = match omega {
        OmegaSpec::Vertices(v) => {
            if let Some(&bad) = v.iter().find(|&&x| x >= n) {
                return Err(schema(path, format!("vertex {bad} out of range for {n} vertices")));
            }
            v.iter().copied().collect()
        }
        OmegaSpec::Ball { center, radius } => {
            if *center >= n {
                return Err(schema(path, format!("vertex {center} out of range for {n} vertices")));
            }
            mesh.ball(*center, *radius)
        }
    };
    make_partition(mesh, &set).map_err(|e| schema(path, e))
}

fn check_mass(mass: f64, path: &str) -> Result<(), HarnessError> {
    if !mass.is_finite() || mass < 0.0 {
        return Err(schema(path, format!("mass must be finite and non-negative, got {mass}")));
    }
    Ok(())
}

/// Resolves all references of `scenario` and builds its meshes.
pub(crate) fn prepare(scenario: &Scenario, opts: &RunOptions) -> Result<Prepared, HarnessError> {
    let seed = opts.seed.or(scenario.seed);
    if let Some(tol) = opts.tolerance {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(schema("--tol", format!("tolerance must be finite and non-negative, got {tol}")));
        }
    }
    let mut r = Resolver {
        scenario,
        opts,
        meshes: BTreeMap::new(),
        inputs: Vec::new(),
    };
    let mut checks = Vec::with_capacity(scenario.checks.len());
    for (i, check) in scenario.checks.iter().enumerate() {
        let at = |field: &str| format!("checks[{i}].{field}");
        if check.stochastic() && seed.is_none() {
            return Err(schema("seed", format!("check {i} ({}) needs a seed", check.kind())));
        }
        if let Some(t) = check.tolerance() {
            if !(t.is_finite() && t >= 0.0) {
                return Err(schema(at("tolerance"), "tolerance must be finite and non-negative"));
            }
        }
        let job = match check {
            Check::Decomp(DecompCheck {
                mesh,
                mass,
                omega,
                vectors,
                ..
            }) => {
                check_mass(*mass, &at("mass"))?;
                let m = r.mesh(mesh, &at("mesh"))?;
                let n = m.vertex_count();
                let bump = |c, rad| TestVector::bump(&m, c, rad);
                let vectors = vectors
                    .iter()
                    .enumerate()
                    .map(|(k, name)| Ok((name.clone(), r.vector(name, &at(&format!("vectors[{k}]")), n, &bump)?)))
                    .collect::<Result<_, HarnessError>>()?;
                Job::Decomp {
                    partition: partition(&m, omega, &at("omega"))?,
                    field: Field { mesh: m, mass: *mass },
                    vectors,
                }
            }
            Check::Markov(MarkovCheck {
                mesh,
                mass,
                omega,
                polynomials,
                random,
                ..
            }) => {
                check_mass(*mass, &at("mass"))?;
                let m = r.mesh(mesh, &at("mesh"))?;
                let n = m.vertex_count();
                let bump = |c, rad| TestVector::bump(&m, c, rad);
                let polynomials = polynomials
                    .iter()
                    .enumerate()
                    .map(|(k, p)| r.poly(p, &at(&format!("polynomials[{k}]")), n, &bump))
                    .collect::<Result<_, _>>()?;
                Job::Markov {
                    partition: partition(&m, omega, &at("omega"))?,
                    field: Field { mesh: m, mass: *mass },
                    polynomials,
                    random: *random,
                }
            }
            Check::Rp(RpCheck {
                surface,
                mass,
                mode,
                family,
                random,
                approach,
                counterexample,
                ..
            }) => {
                check_mass(*mass, &at("mass"))?;
                for (k, &m) in approach.iter().enumerate() {
                    if !(m.is_finite() && m > 0.0) {
                        return Err(schema(at(&format!("approach[{k}]")), "masses must be positive"));
                    }
                }
                let built = match *surface {
                    RpSurface::Torus { nx, ny } => reflected_torus(nx, ny),
                    RpSurface::Icosphere { subdivisions } => reflected_icosphere(subdivisions),
                }
                .map_err(|e| schema(at("surface"), e))?;
                let n = built.mesh.vertex_count();
                let mesh = built.mesh.clone();
                let bump = move |c, rad| TestVector::bump(&mesh, c, rad);
                let family = family
                    .iter()
                    .enumerate()
                    .map(|(k, p)| r.poly(p, &at(&format!("family[{k}]")), n, &bump))
                    .collect::<Result<_, _>>()?;
                let counterexample = match counterexample {
                    None => None,
                    Some(file) => {
                        let dir = opts.fixtures.clone().unwrap_or_else(fixtures_dir);
                        let full = dir.join(file);
                        let text = std::fs::read_to_string(&full).map_err(|e| {
                            schema(at("counterexample"), format!("{}: {e}", full.display()))
                        })?;
                        r.inputs.push((format!("fixture:{file}"), sha_hex(text.as_bytes())));
                        Some(serde_json::from_str(&text).map_err(|e| schema(at("counterexample"), e))?)
                    }
                };
                Job::Rp {
                    surface: built,
                    mass: *mass,
                    mode: *mode,
                    family,
                    random: *random,
                    approach: approach.clone(),
                    counterexample,
                }
            }
            Check::Sew(SewCheck {
                setup,
                cap,
                mass,
                pairs,
                random,
                ..
            }) => {
                check_mass(*mass, &at("mass"))?;
                let built = SewSetup::build(*setup, *cap, *mass).map_err(|e| schema(at("setup"), e))?;
                let (n1, n2) = (built.side1.dim(), built.side2.dim());
                let b1 = |c, rad| built.side1.bump(c, rad);
                let b2 = |c, rad| built.side2.bump(c, rad);
                let pairs = pairs
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        Ok((
                            r.poly(&p.f, &at(&format!("pairs[{k}].f")), n1, &b1)?,
                            r.poly(&p.g, &at(&format!("pairs[{k}].g")), n2, &b2)?,
                        ))
                    })
                    .collect::<Result<_, HarnessError>>()?;
                Job::Sew {
                    setup: Box::new(built),
                    pairs,
                    random: *random,
                }
            }
            Check::Interact(InteractCheck {
                mesh,
                mass,
                omega,
                potential,
                observable,
                n_outer,
                n_inner,
                pool_factor,
                ..
            }) => {
                check_mass(*mass, &at("mass"))?;
                let m = r.mesh(mesh, &at("mesh"))?;
                let n = m.vertex_count();
                let bump = |c, rad| TestVector::bump(&m, c, rad);
                let observable = r.poly(observable, &at("observable"), n, &bump)?;
                if let crate::interacting::RegionSpec::Vertices(v) = &potential.region {
                    if let Some(&bad) = v.iter().find(|&&x| x >= n) {
                        return Err(schema(at("potential.region"), format!("vertex {bad} out of range")));
                    }
                }
                Job::Interact {
                    partition: partition(&m, omega, &at("omega"))?,
                    field: Field { mesh: m, mass: *mass },
                    potential: potential.clone(),
                    observable,
                    mc: crate::interacting::MarkovMc {
                        seed: 0,
                        n_outer: *n_outer,
                        n_inner: *n_inner,
                        pool_factor: pool_factor.unwrap_or(20),
                    },
                }
            }
        };
        checks.push(PreparedCheck {
            index: i,
            kind: check.kind(),
            tolerance: opts
                .tolerance
                .or(check.tolerance())
                .unwrap_or_else(|| check.default_tolerance()),
            seed: seed.map(|s| crate::wick::derive_seed(s, i as u64)),
            job,
        });
    }
    Ok(Prepared {
        checks,
        inputs: r.inputs,
        seed,
    })
}

/// Reads and parses a scenario file. Relative mesh files resolve against
/// its directory.
pub fn load_scenario(path: &Path) -> Result<(Scenario, String), HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| schema("", format!("{}: {e}", path.display())))?;
    let scenario = parse_scenario(&text)?;
    Ok((scenario, text))
}
