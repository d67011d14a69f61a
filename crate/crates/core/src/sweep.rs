//! Seeded batch runs over generated instances.
//!
//! Every instance draws from `Rng::new(seed).child(job).child(instance)` (or
//! from the descriptor's own seed when one is given), so results do not
//! depend on scheduling. Rows come back in instance order.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::families::{coordinate_family, SubspaceFamily};
use crate::fflinalg::{Ambient, Prime};
use crate::gen::{extremal_pair, product_set, random_family, random_pointset, Rng};
use crate::grassmann::{self, sample_uniform};
use crate::project::PointSet;
use crate::subspace::Subspace;
use crate::verify::{
    bound_hypotheses, bound_report, chen_verify, epsilon0, intersection_bound_check, lemma37_check, sum_bound_check,
    BoundSpec, Frac, Report,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "generator", content = "params", rename_all = "snake_case")]
pub enum Generator {
    RandomPointset {
        n: usize,
        p: u32,
        size: usize,
    },
    ProductSet {
        p: u32,
        sets: Vec<Vec<u32>>,
    },
    /// Yields the point set of the pair as points and its lines as a family.
    ExtremalPair {
        d: usize,
        n: usize,
        p: u32,
    },
    RandomFamily {
        n: usize,
        m: usize,
        p: u32,
        size: usize,
    },
    CoordinateFamily {
        n: usize,
        m: usize,
        p: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Descriptor {
    #[serde(flatten)]
    pub generator: Generator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Descriptor {
    pub fn points(&self, rng: &mut Rng) -> Result<PointSet> {
        match &self.generator {
            Generator::RandomPointset { n, p, size } => random_pointset(*n, *p, *size, rng),
            Generator::ProductSet { p, sets } => {
                let sets: Vec<_> = sets.iter().map(|s| s.iter().copied().collect()).collect();
                product_set(Prime::new(*p)?, &sets)
            }
            Generator::ExtremalPair { d, n, p } => Ok(extremal_pair(*d, *n, *p)?.0),
            other => Err(Error::SpecMismatch(format!("{} does not produce points", other.name()))),
        }
    }

    pub fn family(&self, rng: &mut Rng) -> Result<SubspaceFamily> {
        match &self.generator {
            Generator::RandomFamily { n, m, p, size } => random_family(*n, *m, *p, *size, rng),
            Generator::CoordinateFamily { n, m, p } => coordinate_family(Ambient::new(*p, *n)?, *m),
            Generator::ExtremalPair { d, n, p } => Ok(extremal_pair(*d, *n, *p)?.1),
            other => Err(Error::SpecMismatch(format!(
                "{} does not produce a family",
                other.name()
            ))),
        }
    }
}

impl Generator {
    fn name(&self) -> &'static str {
        match self {
            Generator::RandomPointset { .. } => "random_pointset",
            Generator::ProductSet { .. } => "product_set",
            Generator::ExtremalPair { .. } => "extremal_pair",
            Generator::RandomFamily { .. } => "random_family",
            Generator::CoordinateFamily { .. } => "coordinate_family",
        }
    }
}

fn default_floor() -> Frac {
    Frac::new(1, 4)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum Job {
    /// Random `W1, W2` against `|π^{W1∩W2}K| <= |π^{W1}K| |π^{W2}K|`.
    Intersection {
        points: Descriptor,
        count: usize,
    },
    /// Random transverse `W1, W2`.
    Lemma37 {
        points: Descriptor,
        count: usize,
    },
    SumBound {
        points: Descriptor,
        count: usize,
    },
    Chen {
        points: Descriptor,
        m: usize,
        statement: u8,
        count: usize,
    },
    /// Ratio reports only.
    Bound {
        points: Descriptor,
        family: Descriptor,
        spec: BoundSpec,
        count: usize,
    },
    /// Instances drawn until the hypotheses of `spec` hold; the minimum
    /// ratio over the cell is compared with `floor`.
    Probe {
        spec: BoundSpec,
        p: u32,
        n: usize,
        count: usize,
        #[serde(default = "default_floor")]
        floor: Frac,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; the caller decides how to honour it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub runs: Vec<Job>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))
    }
}

fn base_rng(master: &Rng, job: usize, desc: Option<&Descriptor>) -> Rng {
    match desc.and_then(|d| d.seed) {
        Some(s) => Rng::new(s),
        None => master.child(job as u64),
    }
}

fn random_pair(a: Ambient, transverse: bool, rng: &mut Rng) -> Result<(Subspace, Subspace)> {
    loop {
        let d1 = rng.gen_range(0..=a.n);
        let d2 = if transverse {
            rng.gen_range(0..=a.n - d1)
        } else {
            rng.gen_range(0..=a.n)
        };
        let w1 = sample_uniform(a, d1, rng)?;
        let w2 = sample_uniform(a, d2, rng)?;
        if !transverse || w1.is_transverse(&w2)? {
            return Ok((w1, w2));
        }
    }
}

fn merge(mut row: Value, extra: Value) -> Value {
    if let (Value::Object(r), Value::Object(e)) = (&mut row, extra) {
        r.extend(e);
    }
    row
}

/// Runs every job and folds the rows into one report.
pub fn run_sweep(config: &SweepConfig, seed: u64, budget: u128) -> Result<Report> {
    let seed = config.seed.unwrap_or(seed);
    let master = Rng::new(seed);
    let mut report = Report::new("sweep", seed).param("runs", config.runs.len());
    for (j, job) in config.runs.iter().enumerate() {
        let rows = run_job(job, j, &master, budget)?;
        for (row, ok) in rows {
            if let Some(ok) = ok {
                report.record(ok);
            }
            report.push_row(row);
        }
    }
    Ok(report)
}

type Row = (Value, Option<bool>);

fn run_job(job: &Job, j: usize, master: &Rng, budget: u128) -> Result<Vec<Row>> {
    let tag = |i: usize| json!({"run": j, "instance": i});
    let each = |desc: &Descriptor, count: usize, f: &(dyn Fn(usize, &PointSet, &mut Rng) -> Result<Row> + Sync)| {
        let base = base_rng(master, j, Some(desc));
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = base.child(i as u64);
                let k = desc.points(&mut rng)?;
                let (row, ok) = f(i, &k, &mut rng)?;
                Ok((merge(tag(i), row), ok))
            })
            .collect::<Result<Vec<_>>>()
    };
    match job {
        Job::Intersection { points, count } => each(points, *count, &|_, k, rng| {
            let (w1, w2) = random_pair(k.ambient(), false, rng)?;
            let r = intersection_bound_check(k, &w1, &w2)?;
            Ok((
                json!({"check": "intersection", "size": k.len(), "w1": w1, "w2": w2, "result": r}),
                Some(r.holds),
            ))
        }),
        Job::Lemma37 { points, count } => each(points, *count, &|_, k, rng| {
            let (w1, w2) = random_pair(k.ambient(), true, rng)?;
            let r = lemma37_check(k, &w1, &w2)?;
            Ok((
                json!({"check": "lemma37", "w1": w1, "w2": w2, "result": r}),
                Some(r.holds),
            ))
        }),
        Job::SumBound { points, count } => each(points, *count, &|_, k, rng| {
            let (w1, w2) = random_pair(k.ambient(), true, rng)?;
            let r = sum_bound_check(k, &w1, &w2)?;
            Ok((
                json!({"check": "sum-bound", "w1": w1, "w2": w2, "result": r}),
                Some(r.holds),
            ))
        }),
        Job::Chen {
            points,
            m,
            statement,
            count,
        } => each(points, *count, &|_, k, _| {
            let r = chen_verify(k, *m, *statement, budget)?;
            Ok((json!({"check": "chen", "result": r}), r.pass))
        }),
        Job::Bound {
            points,
            family,
            spec,
            count,
        } => {
            // a separate stream, so the family does not shift with the points
            let fam_base = base_rng(master, j, Some(family)).child(u64::MAX);
            each(points, *count, &|i, k, _| {
                let e = family.family(&mut fam_base.child(i as u64))?;
                let r = bound_report(k, &e, spec, budget)?;
                let ok = r.ratio > 0.0;
                Ok((json!({"check": "bound", "result": r}), Some(ok)))
            })
        }
        Job::Probe {
            spec,
            p,
            n,
            count,
            floor,
        } => {
            let cell = probe_cell(spec, *p, *n, *count, *floor, &base_rng(master, j, None), budget)?;
            let ok = cell.pass;
            Ok(vec![(
                merge(
                    json!({"run": j, "check": "probe"}),
                    serde_json::to_value(cell).expect("plain"),
                ),
                Some(ok),
            )])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeInstance {
    pub index: usize,
    pub size: usize,
    pub family_size: usize,
    pub max_projection: usize,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeCell {
    pub spec: String,
    pub p: u32,
    pub n: usize,
    pub instances: usize,
    pub floor: Frac,
    /// The first instance attaining the smallest ratio.
    pub min: ProbeInstance,
    pub pass: bool,
}

/// Largest integer `x >= 0` with `x^e <= v`, from floats; callers re-check exactly.
fn float_root(v: f64, e: f64) -> usize {
    v.powf(1.0 / e).floor().max(0.0) as usize
}

/// Point-set and family sizes roughly inside the hypotheses of `spec`.
fn draw_sizes(spec: &BoundSpec, p: u32, n: usize, members: u128, rng: &mut Rng) -> Option<(usize, usize)> {
    let (pf, nf) = (p as f64, n as f64);
    let pn = pf.powi(n as i32);
    let cap_e = members.min(usize::MAX as u128) as usize;
    let (k, e) = match spec {
        BoundSpec::Line | BoundSpec::Bourgain { .. } => {
            let nn = nf.powi(n as i32 - 2);
            let x = match spec {
                BoundSpec::Line => (2.0 * nf + 1.0) / (4.0 * (nf - 1.0)),
                _ => (2.0 * nf + 1.0) / (4.0 * (nf - 1.0) * nn),
            };
            let hi_e = float_root(pn, x).min(cap_e);
            if hi_e < n {
                return None;
            }
            let e = rng.gen_range(n..=hi_e);
            let lo_k = match spec {
                BoundSpec::Bourgain { .. } => (e as f64).powf(1.0 / (4.0 * nn)).ceil() as usize,
                _ => 1,
            };
            let hi_k = ((pn / (e as f64).powf(x)).floor() as usize).min(pn as usize);
            if hi_k < lo_k.max(1) {
                return None;
            }
            (rng.gen_range(lo_k.max(1)..=hi_k), e)
        }
        BoundSpec::Lpv => {
            let k = rng.gen_range(1..=p as usize);
            let lo = (k as f64).sqrt().ceil() as usize;
            let hi = k.min(cap_e);
            if hi < lo {
                return None;
            }
            (k, rng.gen_range(lo..=hi))
        }
        BoundSpec::Planar { delta } => {
            let hi = pf.powf(1.0 - delta.to_f64()).floor() as usize;
            if hi < 2 {
                return None;
            }
            let k = rng.gen_range(2..=hi);
            (k, rng.gen_range(2..=k.min(cap_e)))
        }
        _ => return None,
    };
    Some((k, e))
}

const PROBE_ATTEMPTS: usize = 10_000;

/// One probe instance: redraws from `rng` until every hypothesis holds.
fn probe_instance(
    spec: &BoundSpec,
    p: u32,
    n: usize,
    index: usize,
    rng: &mut Rng,
    budget: u128,
) -> Result<ProbeInstance> {
    let a = Ambient::new(p, n)?;
    let dim = spec.member_dim(n)?;
    let members = grassmann::count(n, dim, a.p)?;
    for _ in 0..PROBE_ATTEMPTS {
        let Some((size, family_size)) = draw_sizes(spec, p, n, members, rng) else {
            continue;
        };
        let e = random_family(n, dim, p, family_size, rng)?;
        let (h, _) = bound_hypotheses(size, &e, spec, budget)?;
        if !h.values().all(|&b| b) {
            continue;
        }
        let k = random_pointset(n, p, size, rng)?;
        let r = bound_report(&k, &e, spec, budget)?;
        return Ok(ProbeInstance {
            index,
            size,
            family_size,
            max_projection: r.max_projection,
            bound: r.bound,
            ratio: r.ratio,
        });
    }
    Err(Error::Range(format!(
        "no instance satisfying the {} hypotheses at p = {p}, n = {n}",
        spec.name()
    )))
}

/// Draws `count` hypothesis-satisfying instances for `spec` and records the minimum ratio.
pub fn probe_cell(
    spec: &BoundSpec,
    p: u32,
    n: usize,
    count: usize,
    floor: Frac,
    rng: &Rng,
    budget: u128,
) -> Result<ProbeCell> {
    if count == 0 {
        return Err(Error::Range("a probe cell needs at least one instance".into()));
    }
    let found = (0..count)
        .into_par_iter()
        .map(|i| probe_instance(spec, p, n, i, &mut rng.child(i as u64), budget))
        .collect::<Result<Vec<_>>>()?;
    let min = found
        .into_iter()
        .reduce(|best, x| if x.ratio < best.ratio { x } else { best })
        .expect("count > 0");
    Ok(ProbeCell {
        spec: spec.name().to_owned(),
        p,
        n,
        instances: count,
        floor,
        pass: min.ratio >= floor.to_f64(),
        min,
    })
}

/// The documented probe grid: line and Bourgain-type bounds at `n ∈ {2, 3}`,
/// the planar bounds at `n = 2`, each for `p ∈ {7, 11, 13}`.
pub fn probe_grid(count: usize) -> SweepConfig {
    let mut runs = Vec::new();
    for n in [2usize, 3] {
        let half = Frac(epsilon0(n).0 / 2);
        let mut specs = vec![BoundSpec::Line, BoundSpec::Bourgain { m: 1, epsilon: half }];
        if n == 2 {
            specs.push(BoundSpec::Lpv);
            specs.push(BoundSpec::Planar {
                delta: Frac::new(1, 10),
            });
        }
        for spec in specs {
            for p in [7u32, 11, 13] {
                runs.push(Job::Probe {
                    spec: spec.clone(),
                    p,
                    n,
                    count,
                    floor: default_floor(),
                });
            }
        }
    }
    SweepConfig {
        seed: Some(0),
        jobs: None,
        runs,
    }
}
