use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::Args;
use ffproj::families::{common_intersection, is_nondegenerate, nonconcentration_check};
use ffproj::grassmann::{self, GrassmannCursor};
use ffproj::incidence::{incidences, incidences_direct, stevens_report, LineFamily};
use ffproj::project::{exceptional_set, project as project_along, projection_profile, ExceptionalMode};
use ffproj::sweep::{run_sweep, SweepConfig};
use ffproj::verify::{
    bound_report, chen_verify, divisor_scan, improvement_hypotheses, intersection_bound_check, lemma37_check,
    line_cover_check, sequence_reduce, sum_bound_check, BoundSpec, Frac, Report,
};
use ffproj::{Ambient, PointSet, Prime, Subspace, SubspaceFamily};
use serde_json::{json, Value};

use crate::{parse_frac, warn, Failure, Global};

type Out = Result<Report, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

/// Prefixes parse diagnostics with the file name.
fn in_file(path: &Path) -> impl Fn(ffproj::Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

fn load_points(path: &Path) -> Result<PointSet, Failure> {
    let (k, dupes) = PointSet::parse(&read(path)?).map_err(in_file(path))?;
    for line in dupes {
        warn(&format!("{}:{line}: duplicate point ignored", path.display()));
    }
    Ok(k)
}

fn load_family(path: &Path) -> Result<SubspaceFamily, Failure> {
    let (e, dupes) = SubspaceFamily::parse(&read(path)?).map_err(in_file(path))?;
    for line in dupes {
        warn(&format!("{}:{line}: duplicate member ignored", path.display()));
    }
    Ok(e)
}

fn subspace(literal: &str, a: Ambient) -> Result<Subspace, Failure> {
    Ok(Subspace::parse(literal, a)?)
}

/// A JSON number when it fits in 64 bits, a decimal string otherwise.
fn wide(v: u128) -> Value {
    u64::try_from(v).map_or_else(|_| json!(v.to_string()), |x| json!(x))
}

fn report(command: &str, g: &Global) -> Report {
    Report::new(command, g.seed).param("budget", wide(g.budget))
}

fn list(text: &str) -> Result<Vec<u32>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Failure::usage(format!("{s:?} is not a non-negative integer")))
        })
        .collect()
}

#[derive(Args)]
pub struct GrArgs {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
}

pub fn gr_count(g: &Global, a: GrArgs) -> Out {
    let count = grassmann::count(a.n, a.m, Prime::new(a.p)?)?;
    let mut r = report("gr count", g).param("p", a.p).param("n", a.n).param("m", a.m);
    r.push_row(json!({"count": wide(count)}));
    Ok(r)
}

pub fn gr_enum(g: &Global, a: GrArgs) -> Out {
    let amb = Ambient::new(a.p, a.n)?;
    grassmann::check_budget(a.n, a.m, amb.p, g.budget)?;
    let mut r = report("gr enum", g).param("p", a.p).param("n", a.n).param("m", a.m);
    for w in GrassmannCursor::new(amb, a.m)? {
        r.push_row(json!({"subspace": w.to_string()}));
    }
    Ok(r)
}

#[derive(Args)]
pub struct ProjectArgs {
    /// Point set file.
    #[arg(long)]
    points: PathBuf,
    /// Kernel subspace as basis rows, e.g. "1 0 2; 0 1 1".
    #[arg(long, conflicts_with = "dim", required_unless_present = "dim")]
    w: Option<String>,
    /// Report the projection size along every subspace of this dimension.
    #[arg(long)]
    dim: Option<usize>,
}

pub fn project(g: &Global, a: ProjectArgs) -> Out {
    let k = load_points(&a.points)?;
    let mut r = report("project", g)
        .param("points", a.points.display().to_string())
        .param("size", k.len());
    if let Some(lit) = a.w {
        let w = subspace(&lit, k.ambient())?;
        let image = project_along(&k, &w)?;
        r = r.param("w", w.to_string()).param("image", image.size());
        for (rep, fiber) in image.fibers() {
            r.push_row(json!({"representative": rep.to_string(), "fiber": fiber.len()}));
        }
    } else {
        let dim = a.dim.expect("required by clap");
        r = r.param("dim", dim);
        for (w, size) in projection_profile(&k, dim, g.budget)? {
            r.push_row(json!({"w": w.to_string(), "image": size}));
        }
    }
    Ok(r)
}

#[derive(Args)]
pub struct ExceptionalArgs {
    #[arg(long)]
    points: PathBuf,
    /// Codimension of the kernels scanned.
    #[arg(long)]
    m: usize,
    /// Keep kernels with projection size at most this.
    #[arg(long, conflicts_with = "not_full", required_unless_present = "not_full")]
    at_most: Option<u64>,
    /// Keep kernels whose projection is not all of F_p^m.
    #[arg(long)]
    not_full: bool,
}

pub fn exceptional(g: &Global, a: ExceptionalArgs) -> Out {
    let k = load_points(&a.points)?;
    let mode = match a.at_most {
        Some(t) => ExceptionalMode::AtMost(t),
        None => ExceptionalMode::NotFull,
    };
    let e = exceptional_set(&k, a.m, mode, g.budget)?;
    let mut r = report("exceptional", g)
        .param("points", a.points.display().to_string())
        .param("m", a.m)
        .param(
            "mode",
            a.at_most
                .map_or_else(|| "not-full".to_owned(), |t| format!("at-most {t}")),
        )
        .param("members", e.len());
    for w in &e {
        r.push_row(json!({"w": w.to_string()}));
    }
    Ok(r)
}

#[derive(Args)]
pub struct FamilyCheckArgs {
    /// Family file.
    #[arg(long)]
    family: PathBuf,
    /// Also test non-concentration with this exponent (e.g. 1/2).
    #[arg(long, value_parser = parse_frac)]
    kappa: Option<Frac>,
}

pub fn family_check(g: &Global, a: FamilyCheckArgs) -> Out {
    let e = load_family(&a.family)?;
    let nd = is_nondegenerate(&e, g.budget)?;
    let mut r = report("family check", g)
        .param("family", a.family.display().to_string())
        .param("members", e.len())
        .param("member_dim", e.member_dim());
    let mut row = json!({
        "nondegenerate": nd.holds,
        "witness": nd.witness.map(|w| w.to_string()),
        "common_intersection": common_intersection(&e).map(|w| w.to_string()).ok(),
    });
    if let Some(kappa) = a.kappa {
        let c = nonconcentration_check(&e, kappa.0, g.budget)?;
        row["kappa"] = json!(kappa);
        row["nonconcentrated"] = json!(c.holds);
        row["worst"] = json!(c.worst.to_string());
        row["worst_count"] = json!(c.worst_count);
    }
    r.push_row(row);
    Ok(r)
}

#[derive(Args)]
pub struct IncidenceArgs {
    /// Planar point set file.
    #[arg(long)]
    points: PathBuf,
    /// Lines as "a b c, a b c, ..." meaning ax + by + c = 0.
    #[arg(long, conflicts_with = "all_lines", required_unless_present = "all_lines")]
    lines: Option<String>,
    /// Use every line of the plane.
    #[arg(long)]
    all_lines: bool,
}

fn lines_arg(text: Option<&str>, p: Prime) -> Result<LineFamily, Failure> {
    match text {
        Some(t) => Ok(LineFamily::parse(t, p)?),
        None => Ok(LineFamily::all(p)),
    }
}

pub fn incidence(g: &Global, a: IncidenceArgs) -> Out {
    let k = load_points(&a.points)?;
    let l = lines_arg(a.lines.as_deref(), k.ambient().p)?;
    let grouped = incidences(&k, &l)?;
    let direct = incidences_direct(&k, &l)?;
    let mut r = report("incidence", g)
        .param("points", a.points.display().to_string())
        .param("lines", l.len());
    r.push_row(json!({"points": k.len(), "lines": l.len(), "incidences": grouped, "direct": direct}));
    r.record(grouped == direct);
    Ok(r)
}

#[derive(Args)]
pub struct StevensArgs {
    #[arg(long)]
    p: u32,
    /// Comma-separated residues.
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long, conflicts_with = "all_lines", required_unless_present = "all_lines")]
    lines: Option<String>,
    #[arg(long)]
    all_lines: bool,
}

pub fn stevens(g: &Global, a: StevensArgs) -> Out {
    let p = Prime::new(a.p)?;
    let sa: BTreeSet<u32> = list(&a.a)?.into_iter().collect();
    let sb: BTreeSet<u32> = list(&a.b)?.into_iter().collect();
    let l = lines_arg(a.lines.as_deref(), p)?;
    let s = stevens_report(&sa, &sb, &l)?;
    let mut r = report("stevens", g).param("p", a.p).param("a", &sa).param("b", &sb);
    r.push_row(s);
    Ok(r)
}

#[derive(Args)]
pub struct ChenArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    m: usize,
    /// Which estimate: 1, 2 or 3.
    #[arg(long)]
    statement: u8,
}

pub fn chen(g: &Global, a: ChenArgs) -> Out {
    let k = load_points(&a.points)?;
    let c = chen_verify(&k, a.m, a.statement, g.budget)?;
    let mut r = report("verify chen", g)
        .param("points", a.points.display().to_string())
        .param("m", a.m)
        .param("statement", a.statement)
        .param("size", k.len())
        .param("hypothesis", c.hypothesis);
    if !c.hypothesis {
        warn("the size hypothesis of this estimate fails; nothing to check");
    }
    for row in &c.rows {
        r.push_row(row);
    }
    if let Some(ok) = c.pass {
        r.record(ok);
    }
    Ok(r)
}

#[derive(Args)]
pub struct BoundArgs {
    #[arg(long)]
    points: PathBuf,
    /// Family file; repeat with --divisor-scan to give one family per codimension.
    #[arg(long, required = true)]
    family: Vec<PathBuf>,
    /// Bound name (line, bourgain, improvement, planar, lpv, chen-induced) or a JSON object.
    #[arg(long, required_unless_present = "divisor_scan")]
    spec: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_parser = parse_frac)]
    delta: Option<Frac>,
    #[arg(long, value_parser = parse_frac)]
    epsilon: Option<Frac>,
    /// For each divisor of n, whether the bourgain-type bound held at every codimension it does not divide.
    #[arg(long, requires = "epsilon")]
    divisor_scan: bool,
}

fn bound_spec(a: &BoundArgs) -> Result<BoundSpec, Failure> {
    let text = a.spec.as_deref().expect("checked by clap");
    let mut v: Value = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Failure::usage(format!("--spec: {e}")))?
    } else {
        json!({"name": text})
    };
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Failure::usage("--spec must be a name or an object"))?;
    if let Some(m) = a.m {
        obj.insert("m".into(), json!(m));
    }
    if let Some(d) = a.d {
        obj.insert("d".into(), json!(d));
    }
    if let Some(x) = a.delta {
        obj.insert("delta".into(), json!(x));
    }
    if let Some(x) = a.epsilon {
        obj.insert("epsilon".into(), json!(x));
    }
    serde_json::from_value(v).map_err(|e| Failure::usage(format!("--spec: {e}")))
}

pub fn bound(g: &Global, a: BoundArgs) -> Out {
    let k = load_points(&a.points)?;
    let families = a.family.iter().map(|f| load_family(f)).collect::<Result<Vec<_>, _>>()?;
    let mut r = report("verify bound", g)
        .param("points", a.points.display().to_string())
        .param("size", k.len());
    if a.divisor_scan {
        let n = k.ambient().n;
        let by_m: BTreeMap<usize, SubspaceFamily> = families.into_iter().map(|e| (n - e.member_dim(), e)).collect();
        let epsilon = a.epsilon.expect("required by clap");
        let s = divisor_scan(&k, &by_m, epsilon, g.budget)?;
        r = r
            .param("epsilon", epsilon)
            .param("divisors", &s.divisors)
            .param("consistent", &s.consistent);
        for row in &s.rows {
            r.push_row(row);
        }
        return Ok(r);
    }
    let [e] = <[SubspaceFamily; 1]>::try_from(families)
        .map_err(|_| Failure::usage("give exactly one --family (or use --divisor-scan)"))?;
    let spec = bound_spec(&a)?;
    let out = bound_report(&k, &e, &spec, g.budget)?;
    if !out.hypotheses_hold {
        warn("some hypotheses of the bound fail; the ratio is reported anyway");
    }
    r = r
        .param("spec", &spec)
        .param("family", a.family[0].display().to_string());
    r.push_row(out);
    Ok(r)
}

#[derive(Args)]
pub struct PropsArgs {
    #[arg(long)]
    points: PathBuf,
    /// First subspace as basis rows.
    #[arg(long)]
    w1: String,
    #[arg(long)]
    w2: String,
    /// A hyperplane family; adds the slice line-cover check.
    #[arg(long)]
    family: Option<PathBuf>,
}

pub fn props(g: &Global, a: PropsArgs) -> Out {
    let k = load_points(&a.points)?;
    let w1 = subspace(&a.w1, k.ambient())?;
    let w2 = subspace(&a.w2, k.ambient())?;
    let mut r = report("verify props", g)
        .param("points", a.points.display().to_string())
        .param("w1", w1.to_string())
        .param("w2", w2.to_string());
    let i = intersection_bound_check(&k, &w1, &w2)?;
    r.record(i.holds);
    r.push_row(json!({"check": "intersection", "holds": i.holds, "detail": i}));
    if w1.is_transverse(&w2)? && !k.is_empty() {
        let l = lemma37_check(&k, &w1, &w2)?;
        r.record(l.holds);
        r.push_row(json!({"check": "fiber-energy", "holds": l.holds, "detail": l}));
        let s = sum_bound_check(&k, &w1, &w2)?;
        r.record(s.holds);
        r.push_row(json!({"check": "sum-bound", "holds": s.holds, "detail": s}));
    } else {
        warn("W1 and W2 are not transverse (or K is empty); only the intersection bound applies");
    }
    if let Some(path) = &a.family {
        let e = load_family(path)?;
        let c = line_cover_check(&k, &e)?;
        r.record(c.holds);
        r.push_row(json!({"check": "line-cover", "holds": c.holds, "detail": c}));
    }
    Ok(r)
}

#[derive(Args)]
pub struct ImprovementArgs {
    /// Family files, possibly of different member dimensions.
    #[arg(long, required = true)]
    family: Vec<PathBuf>,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: usize,
}

pub fn improvement(g: &Global, a: ImprovementArgs) -> Out {
    let families = a.family.iter().map(|f| load_family(f)).collect::<Result<Vec<_>, _>>()?;
    let h = improvement_hypotheses(&families, a.k, a.d, g.budget)?;
    let mut r = report("verify improvement", g).param("k", a.k).param("d", a.d).param(
        "families",
        a.family.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
    );
    r.push_row(h);
    Ok(r)
}

#[derive(Args)]
pub struct SeqArgs {
    #[arg(long)]
    n: usize,
    /// Comma-separated elements of [1, n-1].
    #[arg(long, default_value = "")]
    set: String,
}

pub fn seq(g: &Global, a: SeqArgs) -> Out {
    let set: Vec<usize> = list(&a.set)?.into_iter().map(|v| v as usize).collect();
    let s = sequence_reduce(a.n, &set)?;
    let mut r = report("seq", g)
        .param("n", a.n)
        .param("set", &s.set)
        .param("reachable", s.reachable)
        .param("closure", &s.closure)
        .param("divisor", s.divisor);
    for step in &s.path {
        r.push_row(step);
    }
    Ok(r)
}

#[derive(Args)]
pub struct SweepArgs {
    /// JSON sweep configuration.
    #[arg(long)]
    config: PathBuf,
}

pub fn sweep(g: &Global, a: SweepArgs) -> Out {
    let text = read(&a.config)?;
    let config = SweepConfig::from_json(&text).map_err(in_file(&a.config))?;
    if let (None, Some(t)) = (g.jobs, config.jobs) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let mut r = run_sweep(&config, g.seed, g.budget)?;
    r = r
        .param("config", a.config.display().to_string())
        .param("budget", wide(g.budget));
    Ok(r)
}
