//! `fillvol` command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use fillvol::cayley::{build_ball, load_complex, CayleyBall, ComplexError};
use fillvol::cylinder::{
    check_chain_map, homology_ranks, map_from_json, map_to_json, mapping_cylinder, quotient_split_check_over,
    trimmed_homology_ranks, ChainError, ChainMap, ComplexJson, MatrixJson,
};
use fillvol::filling::{
    fv2_anchored, fv2_estimate_with, linearity_probe, rational_cycle_demo, AnchoredOptions, FVTable, FillError,
    FillValue, Filler, FvOptions, DEFAULT_PAD, DEFAULT_SEARCH_BOUND,
};
use fillvol::matrix::DenseMatrix;
use fillvol::normedmod::{bounded_constant, norm_equivalence_constants, ModuleError, ModuleMap, PresentedModule};
use fillvol::rational::{pq, pq_rows, to_pq};
use fillvol::words::{
    check_c16, parse_presentation, GroupWord, NormalFormStrategy, Presentation, WordError, WordProblem,
};
use fillvol::{CoefficientRing, Rational};

#[derive(Parser)]
#[command(name = "fillvol", version, about = "Exact homological filling functions over subrings of Q")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a Cayley ball or load a complex and summarize it
    Ball {
        #[command(flatten)]
        source: Source,
        /// list every edge with its endpoints
        #[arg(long)]
        edges: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Fill one integral 1-cycle
    Fill {
        #[command(flatten)]
        source: Source,
        /// edge-coefficient list `edgeid:coeff,...`
        #[arg(long, conflicts_with = "path", required_unless_present = "path")]
        cycle: Option<String>,
        /// closed word read from the identity, e.g. `x y X Y`
        #[arg(long)]
        path: Option<String>,
        #[arg(long, value_parser = parse_ring, default_value = "q")]
        ring: CoefficientRing,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BOUND)]
        search_bound: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Tabulate FV² for k = 0..=kmax
    Fv {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_parser = parse_ring, default_value = "q")]
        ring: CoefficientRing,
        #[arg(long)]
        kmax: usize,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BOUND)]
        search_bound: u64,
        /// fill m·γ for the integral cycles γ
        #[arg(long, default_value_t = 1)]
        lattice_scale: i64,
        #[arg(long, value_enum, default_value = "ball")]
        scope: ScopeArg,
        /// patch padding for `--scope anchored`
        #[arg(long, default_value_t = DEFAULT_PAD)]
        pad: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Filling norms and bounded constants on JSON module data
    Norm {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Mapping-cylinder verification report for a JSON chain map
    Cylinder {
        #[arg(long)]
        input: PathBuf,
        /// ring over which the quotient split is decided
        #[arg(long, value_parser = parse_ring, default_value = "q")]
        ring: CoefficientRing,
        #[command(flatten)]
        output: Output,
    },
    /// Table of the rational cycles aₙ in Z² for n = 1..=N
    DemoRemark {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args, Clone)]
struct Source {
    #[arg(long, conflicts_with = "complex")]
    presentation: Option<PathBuf>,
    #[arg(long)]
    complex: Option<PathBuf>,
    /// abelian | dehn | enum:<r>
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<NormalFormStrategy>,
    #[arg(long)]
    radius: Option<usize>,
}

#[derive(Args, Clone)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScopeArg {
    Ball,
    Anchored,
}

fn parse_ring(s: &str) -> Result<CoefficientRing, String> {
    s.parse().map_err(|e: fillvol::rings::RingError| e.to_string())
}

fn parse_strategy(s: &str) -> Result<NormalFormStrategy, String> {
    s.parse().map_err(|e: WordError| e.to_string())
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{message}")]
    Compute { name: &'static str, message: String },
}

impl CliError {
    fn compute(name: &'static str, e: impl std::fmt::Display) -> Self {
        let message = e.to_string();
        let message = if message.starts_with(name) { message } else { format!("{name}: {message}") };
        CliError::Compute { name, message }
    }
}

impl From<FillError> for CliError {
    fn from(e: FillError) -> Self {
        CliError::compute(e.name(), e)
    }
}

impl From<WordError> for CliError {
    fn from(e: WordError) -> Self {
        FillError::from(e).into()
    }
}

impl From<ComplexError> for CliError {
    fn from(e: ComplexError) -> Self {
        FillError::from(e).into()
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        let name = match &e {
            ChainError::DimensionMismatch(_) => "DimensionMismatch",
            ChainError::NotAComplex { .. } => "NotAComplex",
            ChainError::NotAChainMap { .. } => "NotAChainMap",
            ChainError::NotInjective { .. } => "NotInjective",
            ChainError::NotInRing { .. } => "NotInRing",
            ChainError::VerificationFailed(_) => "VerificationFailed",
        };
        CliError::compute(name, e)
    }
}

impl From<ModuleError> for CliError {
    fn from(e: ModuleError) -> Self {
        let name = match &e {
            ModuleError::DimensionMismatch(_) => "DimensionMismatch",
            ModuleError::NotWellDefined => "NotWellDefined",
            ModuleError::NotInverse => "NotInverse",
        };
        CliError::compute(name, e)
    }
}

/// Recorded in every output so identical manifests give identical bytes.
#[derive(Serialize, Default)]
struct Manifest {
    command: &'static str,
    source: Option<String>,
    strategy: Option<String>,
    radius: Option<usize>,
    ring: Option<String>,
    k_max: Option<usize>,
    search_bound: Option<u64>,
    scope: Option<String>,
    lattice_scale: Option<i64>,
    seed: Option<u64>,
    version: &'static str,
}

impl Manifest {
    fn new(command: &'static str) -> Self {
        Manifest { command, version: env!("CARGO_PKG_VERSION"), ..Default::default() }
    }

    fn with_source(mut self, s: &Source) -> Self {
        self.source = s.presentation.as_ref().or(s.complex.as_ref()).map(|p| p.display().to_string());
        self.strategy = s.strategy.map(|st| st.to_string());
        self.radius = s.radius;
        self
    }

    fn csv_comment(&self) -> String {
        format!("# manifest: {}\n", serde_json::to_string(self).expect("manifest serializes"))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::compute("IoError", format!("{}: {e}", path.display())))
}

fn emit(output: &Output, text: &str) -> Result<(), CliError> {
    match &output.out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::compute("IoError", format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::compute("IoError", e))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

struct Loaded {
    presentation: Option<Presentation>,
    word_problem: Option<WordProblem>,
}

fn load_presentation(source: &Source) -> Result<Loaded, CliError> {
    let Some(path) = &source.presentation else {
        return Ok(Loaded { presentation: None, word_problem: None });
    };
    let strategy = source.strategy.ok_or_else(|| CliError::Usage("--presentation needs --strategy".into()))?;
    let p = parse_presentation(&read(path)?)?;
    let wp = WordProblem::new(&p, strategy)?;
    Ok(Loaded { presentation: Some(p), word_problem: Some(wp) })
}

fn load_complex_source(source: &Source, loaded: &Loaded) -> Result<CayleyBall, CliError> {
    match (&source.complex, &loaded.word_problem) {
        (Some(path), _) => Ok(load_complex(&read(path)?)?),
        (None, Some(wp)) => {
            let r = source.radius.ok_or_else(|| CliError::Usage("--presentation needs --radius".into()))?;
            Ok(build_ball(wp, r)?)
        }
        (None, None) => Err(CliError::Usage("one of --presentation or --complex is required".into())),
    }
}

#[derive(Serialize)]
struct C16Json {
    satisfied: bool,
    max_piece: usize,
    min_relator: usize,
}

#[derive(Serialize)]
struct EdgeJson {
    name: String,
    source: String,
    target: String,
}

#[derive(Serialize)]
struct BallJson {
    manifest: Manifest,
    vertices: usize,
    edges: usize,
    cells: usize,
    components: usize,
    cycle_rank: usize,
    boundary_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    c16: Option<C16Json>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edge_list: Option<Vec<EdgeJson>>,
}

fn vertex_label(b: &CayleyBall, p: Option<&Presentation>, v: usize) -> String {
    match (p, b.vertices.get(v)) {
        (Some(p), Some(w)) => w.render(&p.generator_names),
        _ => v.to_string(),
    }
}

fn cmd_ball(source: Source, edges: bool, output: Output) -> Result<(), CliError> {
    let loaded = load_presentation(&source)?;
    let b = load_complex_source(&source, &loaded)?;
    let p = loaded.presentation.as_ref();
    let components = b.component_count();
    let report = BallJson {
        manifest: Manifest::new("ball").with_source(&source),
        vertices: b.vertex_count,
        edges: b.edges.len(),
        cells: b.cells.len(),
        components,
        cycle_rank: b.edges.len() + components - b.vertex_count,
        boundary_ok: b.boundary_check().is_ok(),
        c16: p.map(|p| {
            let r = check_c16(p);
            C16Json { satisfied: r.satisfied, max_piece: r.max_piece, min_relator: r.min_relator }
        }),
        edge_list: edges.then(|| {
            b.edges
                .iter()
                .map(|e| EdgeJson {
                    name: e.name.clone(),
                    source: vertex_label(&b, p, e.source),
                    target: vertex_label(&b, p, e.target),
                })
                .collect()
        }),
    };
    let text = match output.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = report.manifest.csv_comment();
            s.push_str("vertices,edges,cells,components,cycle_rank,boundary_ok\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                report.vertices, report.edges, report.cells, report.components, report.cycle_rank, report.boundary_ok
            );
            s
        }
    };
    emit(&output, &text)
}

#[derive(Serialize)]
struct FillJson {
    manifest: Manifest,
    cycle: String,
    status: &'static str,
    value: Option<String>,
    exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    multiplier: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower_bound: Option<String>,
    witness: Vec<(String, String)>,
}

fn cmd_fill(
    source: Source,
    cycle: Option<String>,
    path: Option<String>,
    ring: CoefficientRing,
    search_bound: u64,
    output: Output,
) -> Result<(), CliError> {
    let loaded = load_presentation(&source)?;
    let b = load_complex_source(&source, &loaded)?;
    let gamma = match (cycle, path) {
        (Some(c), _) => b.parse_cycle(&c)?,
        (None, Some(word)) => {
            let p =
                loaded.presentation.as_ref().ok_or_else(|| CliError::Usage("--path needs --presentation".into()))?;
            let letters = p.parse_word(&word)?;
            let start = b
                .vertex_of(&GroupWord::identity())
                .ok_or_else(|| CliError::Usage("--path needs a Cayley ball".into()))?;
            let (chain, _) = b
                .path_chain(start, letters.letters())
                .ok_or_else(|| CliError::compute("RadiusExceeded", "the path leaves the ball"))?;
            chain
        }
        (None, None) => return Err(CliError::Usage("--cycle or --path is required".into())),
    };
    let cycle_text = gamma.iter().map(|(e, c)| format!("{}:{c}", b.edges[*e].name)).collect::<Vec<_>>().join(",");
    let r = Filler::new(&b).fill(&gamma, &ring, search_bound)?;
    let mut manifest = Manifest::new("fill").with_source(&source);
    manifest.ring = Some(ring.to_string());
    manifest.search_bound = r.search_bound;
    let report = FillJson {
        manifest,
        cycle: cycle_text,
        status: if r.value.is_unfillable() { "unfillable" } else { "filled" },
        value: r.value.finite().map(to_pq),
        exact: r.exact,
        multiplier: r.multiplier,
        lower_bound: r.lower_bound.as_ref().map(to_pq),
        witness: r
            .witness
            .as_ref()
            .map(|w| w.terms().map(|(i, q)| (b.cells[i].name.clone(), to_pq(q))).collect())
            .unwrap_or_default(),
    };
    let text = match output.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = report.manifest.csv_comment();
            s.push_str("status,value_num,value_den,exact\n");
            let (num, den) = match &r.value {
                FillValue::Finite(v) => (v.numer().to_string(), v.denom().to_string()),
                FillValue::Unfillable => (String::new(), String::new()),
            };
            let _ = writeln!(s, "{},{num},{den},{}", report.status, report.exact);
            s
        }
    };
    emit(&output, &text)
}

#[derive(Serialize)]
struct EntryJson {
    k: usize,
    value: String,
    witness_cycle: String,
    ball_limited: bool,
    composite: bool,
    unfilled: usize,
}

#[derive(Serialize)]
struct LinearityJson {
    verdict: String,
    slope_bound: String,
}

#[derive(Serialize)]
struct FvJson {
    manifest: Manifest,
    cycles: usize,
    exact: bool,
    linearity: LinearityJson,
    entries: Vec<EntryJson>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_fv(
    source: Source,
    ring: CoefficientRing,
    kmax: usize,
    search_bound: u64,
    lattice_scale: i64,
    scope: ScopeArg,
    pad: usize,
    output: Output,
) -> Result<(), CliError> {
    if lattice_scale < 1 {
        return Err(CliError::Usage("--lattice-scale must be positive".into()));
    }
    let opts = FvOptions::new(kmax, ring.clone()).search_bound(search_bound).lattice_scale(lattice_scale);
    let loaded = load_presentation(&source)?;
    let table: FVTable = match scope {
        ScopeArg::Ball => fv2_estimate_with(&load_complex_source(&source, &loaded)?, &opts)?,
        ScopeArg::Anchored => {
            let wp = loaded
                .word_problem
                .as_ref()
                .ok_or_else(|| CliError::Usage("--scope anchored needs --presentation".into()))?;
            let radius = source.radius.ok_or_else(|| CliError::Usage("--presentation needs --radius".into()))?;
            fv2_anchored(wp, &AnchoredOptions { fv: opts, radius, pad })?
        }
    };
    let mut manifest = Manifest::new("fv").with_source(&source);
    manifest.ring = Some(ring.to_string());
    manifest.k_max = Some(kmax);
    manifest.search_bound = matches!(ring, CoefficientRing::Localization(_)).then_some(search_bound);
    manifest.scope = Some(table.scope.to_string());
    manifest.lattice_scale = Some(lattice_scale);
    let probe = linearity_probe(&table);
    if table.any_ball_limited() {
        let hint = source.radius.map(|r| format!("; consider --radius {}", r + 2)).unwrap_or_default();
        eprintln!("fillvol: some entries are ball_limited{hint}");
    }
    let text = match output.format {
        Format::Json => to_json(&FvJson {
            manifest,
            cycles: table.cycles,
            exact: table.exact,
            linearity: LinearityJson { verdict: probe.verdict.to_string(), slope_bound: to_pq(&probe.slope_bound) },
            entries: table
                .entries
                .iter()
                .map(|e| EntryJson {
                    k: e.k,
                    value: to_pq(&e.value),
                    witness_cycle: e
                        .witness_cycle
                        .iter()
                        .map(|(n, c)| format!("{n}:{c}"))
                        .collect::<Vec<_>>()
                        .join(","),
                    ball_limited: e.ball_limited,
                    composite: e.composite,
                    unfilled: e.unfilled,
                })
                .collect(),
        }),
        Format::Csv => {
            let mut s = manifest.csv_comment();
            s.push_str("k,value_num,value_den,ball_limited\n");
            for e in &table.entries {
                let _ = writeln!(s, "{},{},{},{}", e.k, e.value.numer(), e.value.denom(), e.ball_limited);
            }
            s
        }
    };
    emit(&output, &text)
}

#[derive(Deserialize)]
struct ModuleInput {
    generators: usize,
    /// relation vectors, each of length `generators`
    #[serde(default, with = "pq_rows")]
    relations: Vec<Vec<Rational>>,
}

#[derive(Deserialize)]
struct MapInput {
    target: ModuleInput,
    /// target generators × source generators
    #[serde(with = "pq_rows")]
    matrix: Vec<Vec<Rational>>,
    /// optional inverse, source generators × target generators
    #[serde(default, with = "pq_rows")]
    inverse: Vec<Vec<Rational>>,
}

#[derive(Deserialize)]
struct NormInput {
    module: ModuleInput,
    #[serde(default, with = "pq_rows")]
    elements: Vec<Vec<Rational>>,
    #[serde(default)]
    map: Option<MapInput>,
}

#[derive(Serialize)]
struct NormRow {
    #[serde(with = "pq_vec")]
    element: Vec<Rational>,
    #[serde(with = "pq")]
    norm: Rational,
    #[serde(with = "pq_vec")]
    representative: Vec<Rational>,
}

#[derive(Serialize)]
struct NormJson {
    manifest: Manifest,
    norms: Vec<NormRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounded_constant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    equivalence_constant: Option<String>,
}

mod pq_vec {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(to_pq))
    }
}

fn matrix(rows: &[Vec<Rational>], r: usize, c: usize, what: &str) -> Result<DenseMatrix<Rational>, CliError> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(ModuleError::DimensionMismatch(format!("{what} must be {r}×{c}")).into());
    }
    Ok(DenseMatrix::from_rows(rows.to_vec(), c))
}

fn module(m: &ModuleInput) -> Result<PresentedModule<Rational>, CliError> {
    if m.relations.iter().any(|r| r.len() != m.generators) {
        return Err(ModuleError::DimensionMismatch(format!("relations must have length {}", m.generators)).into());
    }
    Ok(PresentedModule::new(m.generators, DenseMatrix::from_columns(&m.relations, m.generators))?)
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::compute("SyntaxError", format!("{}: {e}", path.display())))
}

fn cmd_norm(input: PathBuf, output: Output) -> Result<(), CliError> {
    let data: NormInput = parse_json(&input)?;
    let m = module(&data.module)?;
    let norms = data
        .elements
        .iter()
        .map(|v| {
            Ok(NormRow { element: v.clone(), norm: m.filling_norm(v)?, representative: m.minimal_representative(v)? })
        })
        .collect::<Result<Vec<_>, ModuleError>>()?;
    let (mut bounded, mut equivalence) = (None, None);
    if let Some(map) = &data.map {
        let t = module(&map.target)?;
        let f = ModuleMap::new(
            m.clone(),
            t.clone(),
            matrix(&map.matrix, t.generator_count(), m.generator_count(), "matrix")?,
        )?;
        bounded = Some(to_pq(&bounded_constant(&f)));
        if !map.inverse.is_empty() {
            let g = ModuleMap::new(
                t.clone(),
                m.clone(),
                matrix(&map.inverse, m.generator_count(), t.generator_count(), "inverse")?,
            )?;
            equivalence = Some(to_pq(&norm_equivalence_constants(&m, &t, &f, &g)?));
        }
    }
    let mut manifest = Manifest::new("norm");
    manifest.source = Some(input.display().to_string());
    manifest.ring = Some("q".into());
    let report = NormJson { manifest, norms, bounded_constant: bounded, equivalence_constant: equivalence };
    let text = match output.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = report.manifest.csv_comment();
            s.push_str("index,norm\n");
            for (i, row) in report.norms.iter().enumerate() {
                let _ = writeln!(s, "{i},{}", to_pq(&row.norm));
            }
            s
        }
    };
    emit(&output, &text)
}

#[derive(Deserialize)]
struct CylinderInput {
    source: ComplexJson,
    target: ComplexJson,
    #[serde(default)]
    map: Vec<MatrixJson>,
}

#[derive(Serialize)]
struct Verification {
    dd_zero: bool,
    incl_c_chain_map: bool,
    incl_b_chain_map: bool,
    kappa_chain_map: bool,
    kappa_incl_c_is_id: bool,
    kappa_incl_b_is_f: bool,
    homology_m: Vec<usize>,
    homology_c: Vec<usize>,
    homology_match: bool,
    quotient_ranks: Vec<usize>,
    quotient_splits: bool,
}

#[derive(Serialize)]
struct CylinderJson {
    manifest: Manifest,
    cylinder: ComplexJson,
    incl_c: Vec<MatrixJson>,
    incl_b: Vec<MatrixJson>,
    kappa: Vec<MatrixJson>,
    verification: Verification,
}

fn cmd_cylinder(input: PathBuf, ring: CoefficientRing, output: Output) -> Result<(), CliError> {
    let data: CylinderInput = parse_json(&input)?;
    let b = data.source.to_complex()?;
    let c = data.target.to_complex()?;
    let f = map_from_json(&b, &c, &data.map)?;
    let cyl = mapping_cylinder(&f)?;
    let quotient = quotient_split_check_over(&cyl.m, &cyl.incl_b, &ring)?;
    let verification = Verification {
        dd_zero: cyl.m.is_complex(),
        incl_c_chain_map: check_chain_map(&cyl.incl_c)?,
        incl_b_chain_map: check_chain_map(&cyl.incl_b)?,
        kappa_chain_map: check_chain_map(&cyl.kappa)?,
        kappa_incl_c_is_id: cyl.incl_c.then(&cyl.kappa)?.same_components(&ChainMap::identity(&c)),
        kappa_incl_b_is_f: cyl.incl_b.then(&cyl.kappa)?.same_components(&f),
        homology_m: homology_ranks(&cyl.m),
        homology_c: homology_ranks(&c),
        homology_match: trimmed_homology_ranks(&cyl.m) == trimmed_homology_ranks(&c),
        quotient_ranks: quotient.quotient.ranks().to_vec(),
        quotient_splits: quotient.splits,
    };
    let mut manifest = Manifest::new("cylinder");
    manifest.source = Some(input.display().to_string());
    manifest.ring = Some(ring.to_string());
    let text = match output.format {
        Format::Json => to_json(&CylinderJson {
            manifest,
            cylinder: ComplexJson::from_complex(&cyl.m),
            incl_c: map_to_json(&cyl.incl_c),
            incl_b: map_to_json(&cyl.incl_b),
            kappa: map_to_json(&cyl.kappa),
            verification,
        }),
        Format::Csv => {
            let mut s = manifest.csv_comment();
            s.push_str("degree,rank_m,homology_m,homology_c,rank_quotient\n");
            for i in 0..cyl.m.len() {
                let _ = writeln!(
                    s,
                    "{i},{},{},{},{}",
                    cyl.m.rank(i),
                    verification.homology_m[i],
                    verification.homology_c.get(i).copied().unwrap_or(0),
                    verification.quotient_ranks.get(i).copied().unwrap_or(0)
                );
            }
            s
        }
    };
    emit(&output, &text)
}

#[derive(Serialize)]
struct DemoJsonRow {
    n: usize,
    l1: String,
    fill_q: String,
    loop_fill: String,
}

#[derive(Serialize)]
struct DemoJson {
    manifest: Manifest,
    rows: Vec<DemoJsonRow>,
}

fn cmd_demo(n: usize, output: Output) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let rows = (1..=n)
        .map(|i| {
            let r = rational_cycle_demo(i)?;
            Ok(DemoJsonRow { n: r.n, l1: to_pq(&r.l1), fill_q: to_pq(&r.fill_q), loop_fill: to_pq(&r.loop_fill) })
        })
        .collect::<Result<Vec<_>, FillError>>()?;
    let mut manifest = Manifest::new("demo-remark");
    manifest.ring = Some("q".into());
    manifest.k_max = Some(n);
    let text = match output.format {
        Format::Json => to_json(&DemoJson { manifest, rows }),
        Format::Csv => {
            let mut s = manifest.csv_comment();
            s.push_str("n,l1,fill_q\n");
            for r in &rows {
                let _ = writeln!(s, "{},{},{}", r.n, r.l1, r.fill_q);
            }
            s
        }
    };
    emit(&output, &text)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FILLVOL_THREADS") else {
        return Ok(());
    };
    let n: usize =
        v.trim().parse().map_err(|_| CliError::Usage(format!("FILLVOL_THREADS must be an integer, got `{v}`")))?;
    if n > 0 {
        // ignore a second initialization attempt
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Ball { source, edges, output } => cmd_ball(source, edges, output),
        Command::Fill { source, cycle, path, ring, search_bound, output } => {
            cmd_fill(source, cycle, path, ring, search_bound, output)
        }
        Command::Fv { source, ring, kmax, search_bound, lattice_scale, scope, pad, output } => {
            cmd_fv(source, ring, kmax, search_bound, lattice_scale, scope, pad, output)
        }
        Command::Norm { input, output } => cmd_norm(input, output),
        Command::Cylinder { input, ring, output } => cmd_cylinder(input, ring, output),
        Command::DemoRemark { n, output } => cmd_demo(n, output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("fillvol: usage: {m}");
            ExitCode::from(1)
        }
        Err(e @ CliError::Compute { .. }) => {
            eprintln!("fillvol: {e}");
            ExitCode::from(2)
        }
    }
}
