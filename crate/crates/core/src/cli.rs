//! Batch driver: configuration, task enumeration, report files and the
//! summary table.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::congruence::{certify_ideal, verify_random_pairs, CongruenceConfig};
use crate::error::{Error, Result};
use crate::exact::{parse_rational, QMatrix, Q};
use crate::geometry::{geometry_report, GeometryTolerances};
use crate::models::{make_model_with, MatrixModel, ModelKind, Tolerances};
use crate::parallel::Execution;
use crate::rootspace::{decompose, maximal_abelian, positive_system, Phi, PositiveSystem, RootSpaceDecomposition};
use crate::subalgebra::{
    build_iwasawa, build_parabolic, build_s_phi, build_s_v, check_solvable_part_ideal, is_ideal, unitary_and_center,
    IdealVerdict, IdealWitness, Subalgebra,
};
use crate::Verdict;

/// Largest rank for which `phi = "all"` is accepted.
pub const MAX_ENUMERATED_RANK: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ideal,
    Congruence,
    Geometry,
    All,
}

impl Mode {
    fn expand(self) -> Vec<Mode> {
        match self {
            Mode::All => vec![Mode::Ideal, Mode::Congruence, Mode::Geometry],
            m => vec![m],
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Mode::Ideal => "ideal",
            Mode::Congruence => "congruence",
            Mode::Geometry => "geometry",
            Mode::All => "all",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Mode::Ideal),
            "congruence" => Ok(Mode::Congruence),
            "geometry" => Ok(Mode::Geometry),
            "all" => Ok(Mode::All),
            other => Err(Error::config(
                "mode",
                format!("unknown mode {other:?}; expected ideal, congruence, geometry or all"),
            )),
        }
    }
}

/// Either every proper subset of the simple roots, or one explicit subset
/// given by 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    Subset(Vec<usize>),
    Keyword(String),
}

impl Default for PhiSpec {
    fn default() -> Self {
        PhiSpec::Keyword("all".into())
    }
}

impl FromStr for PhiSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "all" => Ok(PhiSpec::Keyword("all".into())),
            "" | "empty" => Ok(PhiSpec::Subset(Vec::new())),
            list => list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::config("phi", format!("{t:?} is not a simple-root index")))
                })
                .collect::<Result<_>>()
                .map(PhiSpec::Subset),
        }
    }
}

impl PhiSpec {
    /// Resolves against a model of rank `rank`.
    pub fn resolve(&self, rank: usize) -> Result<Vec<Phi>> {
        match self {
            PhiSpec::Keyword(k) if k == "all" => {
                if rank > MAX_ENUMERATED_RANK {
                    return Err(Error::config(
                        "phi",
                        format!("enumerating all subsets is capped at rank {MAX_ENUMERATED_RANK}; rank is {rank}"),
                    ));
                }
                Ok(Phi::proper_subsets(rank))
            }
            PhiSpec::Keyword(k) => Err(Error::config("phi", format!("unknown keyword {k:?}"))),
            PhiSpec::Subset(idx) => {
                if let Some(bad) = idx.iter().find(|&&i| i == 0 || i > rank) {
                    return Err(Error::config("phi", format!("index {bad} outside 1..{rank}")));
                }
                let phi = Phi::from_one_based(idx)?;
                if phi.len() == rank {
                    return Err(Error::config("phi", "must be a proper subset of the simple roots"));
                }
                Ok(vec![phi])
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub n: usize,
    pub mode: Mode,
    pub phi: PhiSpec,
    /// File with a spanning set of `V ⊆ a`, one vector per line.
    pub v: Option<PathBuf>,
    pub pairs: usize,
    pub out: PathBuf,
    pub execution: Execution,
    pub tolerances: Tolerances,
    pub congruence: CongruenceConfig,
    pub geometry: GeometryTolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelKind::Sl,
            n: 3,
            mode: Mode::All,
            phi: PhiSpec::default(),
            v: None,
            pairs: 10,
            out: PathBuf::from("reports"),
            execution: Execution::Parallel,
            tolerances: Tolerances::default(),
            congruence: CongruenceConfig::default(),
            geometry: GeometryTolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = if msg.starts_with("unknown field") {
                msg.split('`').nth(1).map(str::to_string)
            } else {
                // the key on the offending line
                e.span().and_then(|sp| {
                    let start = text[..sp.start].rfind('\n').map_or(0, |i| i + 1);
                    let line = &text[start..];
                    line.split_once('=').map(|(k, _)| k.trim().to_string())
                })
            };
            Error::config(field.unwrap_or_else(|| "config".into()), msg)
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

#[derive(Parser, Debug, Clone, Default)]
#[command(name = "orbitcert", about = "Certify ideal, congruence and geometry claims for orbits in matrix models")]
pub struct CliArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// sl, so1n or hopf.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// ideal, congruence, geometry or all.
    #[arg(long)]
    pub mode: Option<String>,
    /// Comma-separated 1-based simple-root indices, "empty", or "all".
    #[arg(long)]
    pub phi: Option<String>,
    /// File holding a spanning set of V inside a.
    #[arg(long)]
    pub v: Option<PathBuf>,
    #[arg(long = "tol-orbit")]
    pub tol_orbit: Option<f64>,
    /// Orbit samples per point.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random point pairs per congruence task.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Output directory for report files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run every task on the calling thread.
    #[arg(long)]
    pub sequential: bool,
}

impl CliArgs {
    pub fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = self.model {
            cfg.model = m.parse()?;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(m) = self.mode {
            cfg.mode = m.parse()?;
        }
        if let Some(p) = self.phi {
            cfg.phi = p.parse()?;
        }
        if self.v.is_some() {
            cfg.v = self.v;
        }
        if let Some(t) = self.tol_orbit {
            cfg.congruence.tol_orbit = t;
        }
        if let Some(b) = self.budget {
            cfg.congruence.budget = b;
        }
        if let Some(s) = self.seed {
            cfg.congruence.seed = s;
        }
        if let Some(p) = self.pairs {
            cfg.pairs = p;
        }
        if let Some(o) = self.out {
            cfg.out = o;
        }
        if self.sequential {
            cfg.execution = Execution::Sequential;
        }
        Ok(cfg)
    }
}

/// Parses a spanning set of `V`: one vector per line, entries separated by
/// whitespace or commas, `#` starts a comment. A line with `rank` entries is
/// a coordinate vector on the `a` basis; a line with `m*m` entries is a
/// row-major matrix.
pub fn parse_v_spec(text: &str, model: &MatrixModel, dec: &RootSpaceDecomposition) -> Result<Vec<QMatrix>> {
    let m = model.matrix_size();
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let entries: Vec<Q> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| parse_rational(t).map_err(|e| Error::config("v", format!("line {}: {e}", lineno + 1))))
            .collect::<Result<_>>()?;
        let x = if entries.len() == dec.rank() {
            QMatrix::combination(&entries, dec.a_basis())
        } else if entries.len() == m * m {
            QMatrix::from_flat(m, m, entries)?
        } else {
            return Err(Error::config(
                "v",
                format!(
                    "line {}: expected {} coordinates or {} matrix entries, got {}",
                    lineno + 1,
                    dec.rank(),
                    m * m,
                    entries.len()
                ),
            ));
        };
        out.push(x);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Target {
    Phi(Phi),
    V,
    Center,
}

impl Target {
    fn key(&self) -> String {
        match self {
            Target::Phi(p) => format!("phi-{}", p.label()),
            Target::V => "v".into(),
            Target::Center => "center".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Task {
    mode: Mode,
    target: Target,
}

struct Context {
    model: MatrixModel,
    roots: Option<(RootSpaceDecomposition, PositiveSystem, Subalgebra, Subalgebra)>,
    v: Option<Vec<QMatrix>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdealCheck {
    pub name: String,
    pub holds: bool,
    pub pairs_checked: usize,
    pub witness: Option<IdealWitness>,
}

impl IdealCheck {
    fn from_verdict(name: &str, v: IdealVerdict) -> Self {
        IdealCheck {
            name: name.into(),
            holds: v.is_ideal,
            pairs_checked: v.pairs_checked,
            witness: v.witness,
        }
    }

    fn containment(name: &str, holds: bool) -> Self {
        IdealCheck {
            name: name.into(),
            holds,
            pairs_checked: 0,
            witness: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdealReport {
    pub model: String,
    pub target: String,
    pub subalgebra: String,
    pub dim: usize,
    pub checks: Vec<IdealCheck>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub report: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub model: String,
    pub rows: Vec<SummaryRow>,
    pub passed: bool,
}

impl RunSummary {
    /// 0 iff every report passed.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.rows.iter().map(|r| r.report.len()).max().unwrap_or(6).max(6);
        writeln!(f, "{:<w$}  {:<7}  detail", "report", "verdict")?;
        for r in &self.rows {
            writeln!(f, "{:<w$}  {:<7}  {}", r.report, r.verdict.to_string(), r.detail)?;
        }
        write!(
            f,
            "{} of {} reports passed",
            self.rows.iter().filter(|r| r.verdict.passed()).count(),
            self.rows.len()
        )
    }
}

fn build_context(cfg: &RunConfig) -> Result<Context> {
    let model = make_model_with(cfg.model, cfg.n, cfg.tolerances.clone())?;
    cfg.congruence.validate()?;
    if cfg.pairs == 0 && cfg.mode != Mode::Ideal && cfg.mode != Mode::Geometry {
        return Err(Error::config("pairs", "must be at least 1"));
    }
    if cfg.model.is_compact() {
        if cfg.mode == Mode::Geometry {
            return Err(Error::config("mode", "geometry checks need a noncompact model"));
        }
        if cfg.v.is_some() {
            return Err(Error::config("v", "the compact model has no a"));
        }
        return Ok(Context {
            model,
            roots: None,
            v: None,
        });
    }
    let a = maximal_abelian(&model)?;
    let dec = decompose(&model, &a)?;
    let ps = positive_system(&dec)?;
    let (n, s) = build_iwasawa(&model, &dec, &ps)?;
    let v = match &cfg.v {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::config("v", format!("{}: {e}", path.display())))?;
            let vecs = parse_v_spec(&text, &model, &dec)?;
            build_s_v(&model, &dec, &n, &vecs).map_err(|e| Error::config("v", e.to_string()))?;
            Some(vecs)
        }
        None => None,
    };
    Ok(Context {
        model,
        roots: Some((dec, ps, n, s)),
        v,
    })
}

fn tasks(cfg: &RunConfig, ctx: &Context) -> Result<Vec<Task>> {
    let mut out = Vec::new();
    match &ctx.roots {
        None => {
            for mode in cfg.mode.expand() {
                if mode != Mode::Geometry {
                    out.push(Task {
                        mode,
                        target: Target::Center,
                    });
                }
            }
        }
        Some((dec, ..)) => {
            let phis = cfg.phi.resolve(dec.rank())?;
            for mode in cfg.mode.expand() {
                for phi in &phis {
                    out.push(Task {
                        mode,
                        target: Target::Phi(phi.clone()),
                    });
                }
                if ctx.v.is_some() && mode != Mode::Geometry {
                    out.push(Task { mode, target: Target::V });
                }
            }
        }
    }
    out.sort_by(|a, b| (a.mode, &a.target).cmp(&(b.mode, &b.target)));
    Ok(out)
}

/// `(ideal, ambient)` for a task target.
fn subject(ctx: &Context, target: &Target) -> Result<(Subalgebra, Subalgebra)> {
    match (target, &ctx.roots) {
        (Target::Center, _) => {
            let (u, z) = unitary_and_center(&ctx.model)?;
            Ok((z, u))
        }
        (Target::Phi(phi), Some((dec, ps, _, s))) => Ok((build_s_phi(&ctx.model, dec, ps, phi)?, s.clone())),
        (Target::V, Some((dec, _, n, s))) => {
            let v = ctx.v.as_ref().expect("V task only exists with a V spec");
            Ok((build_s_v(&ctx.model, dec, n, v)?, s.clone()))
        }
        _ => Err(Error::Internal("task target does not match the model".into())),
    }
}

fn run_ideal(ctx: &Context, target: &Target) -> Result<IdealReport> {
    let m = &ctx.model;
    let (h, g) = subject(ctx, target)?;
    let mut checks = Vec::new();
    if let (Target::Phi(phi), Some((dec, ps, n, s))) = (target, &ctx.roots) {
        checks.push(IdealCheck::containment("[s,s] = n", s.derived()?.same_span(n)));
        let q = build_parabolic(m, dec, ps, phi)?;
        checks.push(IdealCheck::containment("s in q_Phi", s.is_subspace_of(&q)));
        checks.push(IdealCheck::containment("s_Phi in s", h.is_subspace_of(s)));
        checks.push(IdealCheck::from_verdict(
            "[s_Phi, q_Phi] in s_Phi",
            check_solvable_part_ideal(m, &h, &q)?,
        ));
    }
    checks.push(IdealCheck::from_verdict(
        &format!("{} ideal in {}", h.recipe.label(), g.recipe.label()),
        is_ideal(m, &h, &g)?,
    ));
    let pass = checks.iter().all(|c| c.holds);
    Ok(IdealReport {
        model: m.name(),
        target: target.key(),
        subalgebra: h.recipe.label(),
        dim: h.dim(),
        checks,
        verdict: Verdict::from_bool(pass),
    })
}

struct TaskOutcome {
    key: String,
    json: String,
    row: SummaryRow,
}

fn run_task(cfg: &RunConfig, ctx: &Context, task: &Task) -> TaskOutcome {
    let key = format!("{}-{}{}-{}", task.mode.as_str(), cfg.model, cfg.n, task.target.key());
    let result: Result<(String, Verdict, String)> = (|| match task.mode {
        Mode::Ideal => {
            let r = run_ideal(ctx, &task.target)?;
            let failing: Vec<&str> = r.checks.iter().filter(|c| !c.holds).map(|c| c.name.as_str()).collect();
            let detail = if failing.is_empty() {
                format!("{} exact checks hold", r.checks.len())
            } else {
                format!("failing: {}", failing.join("; "))
            };
            Ok((to_json(&r), r.verdict, detail))
        }
        Mode::Congruence => {
            let (h, g) = subject(ctx, &task.target)?;
            let ideal = certify_ideal(&ctx.model, &h, &g)?;
            let r = verify_random_pairs(&ctx.model, &ideal, cfg.pairs, &cfg.congruence, cfg.execution)?;
            let detail = format!(
                "{} pairs, conj {:.1e}, normality {:.1e}, orbit {:.1e}",
                r.pairs, r.max_conjugator_residual, r.max_normality_residual, r.max_distance_to_orbit
            );
            Ok((to_json(&r), r.verdict, detail))
        }
        Mode::Geometry => {
            let (h, s) = subject(ctx, &task.target)?;
            let phi = match &task.target {
                Target::Phi(p) => Some(p),
                _ => None,
            };
            let r = geometry_report(&ctx.model, &s, &h, phi, &cfg.geometry)?;
            let detail = format!(
                "|H| {:.1e}, einstein c {:.6}, residual {:.1e}",
                r.mean_curvature_norm, r.einstein_constant, r.einstein_residual
            );
            Ok((to_json(&r), r.verdict, detail))
        }
        Mode::All => unreachable!("modes are expanded before dispatch"),
    })();
    let (json, verdict, detail) = match result {
        Ok(v) => v,
        Err(e) => (
            to_json(&serde_json::json!({ "report": key, "error": e.to_string(), "verdict": Verdict::Fail })),
            Verdict::Fail,
            e.to_string(),
        ),
    };
    TaskOutcome {
        row: SummaryRow {
            report: key.clone(),
            verdict,
            detail,
        },
        key,
        json,
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

/// Runs every task, writes one report per task plus `summary.json` into
/// `cfg.out`, and returns the summary.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let ctx = build_context(cfg)?;
    let tasks = tasks(cfg, &ctx)?;
    let outcomes = cfg.execution.map(&tasks, |t| run_task(cfg, &ctx, t));
    fs::create_dir_all(&cfg.out)?;
    for o in &outcomes {
        fs::write(cfg.out.join(format!("{}.json", o.key)), &o.json)?;
    }
    let rows: Vec<SummaryRow> = outcomes.into_iter().map(|o| o.row).collect();
    let summary = RunSummary {
        model: ctx.model.name(),
        passed: !rows.is_empty() && rows.iter().all(|r| r.verdict.passed()),
        rows,
    };
    fs::write(cfg.out.join("summary.json"), to_json(&summary))?;
    Ok(summary)
}

/// Entry point shared by the binary and the tests. Returns the exit status:
/// 0 when every report passes, 1 on a failing report, 2 on a usage error.
pub fn main_with_args(args: CliArgs) -> i32 {
    let cfg = match args.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("orbitcert: {e}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(summary) => {
            println!("{summary}");
            summary.exit_code()
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("orbitcert: {e}");
            2
        }
        Err(e) => {
            eprintln!("orbitcert: {e}");
            1
        }
    }
}
