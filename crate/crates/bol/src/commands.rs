//! One function per subcommand. Each resolves its settings through
//! [`Ctx`], which records the effective value of every key it reads so the
//! report can embed the resolved configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bol_core::besov::{besov_orlicz_norm, QuadratureConfig};
use bol_core::condition::{
    condition_sup, section5_first_bound, section5_second_bound, ConditionOptions,
};
use bol_core::evidence::{
    lemma6_record, lemma6_validate, monte_carlo_chunk, monte_carlo_estimate,
    necessity_ball_experiment, sobolev_check, sufficiency_molecule_estimates, ExperimentRecord,
    MonteCarlo, SufficiencyOptions,
};
use bol_core::molecules::{
    alpha_budget, decompose, isoperimetric_constant_grid, verify_r1_r2, verify_r3,
};
use bol_core::orlicz::{luxemburg_norm, modulus_curve};
use bol_core::quad::TailConfig;
use bol_core::young::{log_grid, Section5Params};
use bol_core::GridFunction;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::fixtures::{fixture, sobolev_pairs};
use crate::gridio::{read_grid, write_grid, Format, GridHeader, Headerless};
use crate::pool;
use crate::report::{csv, num, nums, side_file, to_value, write_text, Report, SCHEMA};
use crate::spec::{parse_weight, parse_young};

/// Largest evaluation grid any command accepts.
pub const MAX_POINTS: usize = 100_000;
/// Largest Monte Carlo sample count per offset.
pub const MAX_SAMPLES: u64 = 10_000_000_000;
/// Largest isoperimetric search side used for the (r3) budget.
pub const MAX_ISO_SIDE: usize = 256;

pub struct Ctx {
    pub s: Settings,
    pub resolved: BTreeMap<&'static str, Value>,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

impl Ctx {
    pub fn new(s: Settings) -> Self {
        let out_dir = s.output.clone().unwrap_or_else(|| PathBuf::from("bol-out"));
        let jobs = s.jobs.unwrap_or_else(pool::default_jobs).max(1);
        Self {
            s,
            resolved: BTreeMap::new(),
            out_dir,
            jobs,
        }
    }

    fn record<T: Serialize>(&mut self, key: &'static str, v: &T) {
        self.resolved
            .insert(key, serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn or<T: Serialize + Clone>(&mut self, key: &'static str, v: Option<T>, default: T) -> T {
        let v = v.unwrap_or(default);
        self.record(key, &v);
        v
    }

    fn opt<T: Serialize + Clone>(&mut self, key: &'static str, v: Option<T>) -> Option<T> {
        self.record(key, &v);
        v
    }

    fn req<T: Serialize + Clone>(&mut self, key: &'static str, v: Option<T>) -> CliResult<T> {
        let v = v.ok_or_else(|| {
            CliError::Usage(format!("missing required --{}", key.replace('_', "-")))
        })?;
        self.record(key, &v);
        Ok(v)
    }

    fn config(&self) -> Value {
        json!(self.resolved)
    }

    fn tail(&mut self) -> CliResult<TailConfig> {
        let panels = self.or(
            "quad_nodes",
            self.s.quad_nodes,
            TailConfig::default().panels_per_unit,
        );
        if panels == 0 || panels > MAX_POINTS {
            return Err(CliError::Invalid(format!(
                "quad_nodes must be in 1..={MAX_POINTS}"
            )));
        }
        Ok(TailConfig {
            panels_per_unit: panels,
            ..TailConfig::default()
        })
    }

    fn quadrature(&mut self) -> CliResult<QuadratureConfig> {
        let d = QuadratureConfig::default();
        let tail = self.tail()?;
        let t_min = self.opt("tmin", self.s.tmin);
        let t_max = self.opt("tmax", self.s.tmax);
        let nodes = self.or("nodes", self.s.nodes, d.nodes);
        let rel_tol = self.or("rel_tol", self.s.rel_tol, d.rel_tol);
        if nodes > MAX_POINTS {
            return Err(CliError::Guard(format!(
                "max_points: nodes = {nodes} exceeds {MAX_POINTS}"
            )));
        }
        Ok(QuadratureConfig {
            t_min,
            t_max,
            nodes,
            rel_tol,
            tail,
        })
    }

    fn points(&mut self, default: usize) -> CliResult<usize> {
        let n = self.or("points", self.s.points, default);
        if n > MAX_POINTS {
            return Err(CliError::Guard(format!(
                "max_points: points = {n} exceeds {MAX_POINTS}"
            )));
        }
        Ok(n)
    }

    /// The grid named by `input` or `fixture`.
    fn grid(&mut self) -> CliResult<(GridFunction, String)> {
        let input = self.opt("input", self.s.input.clone());
        let fix = self.opt("fixture", self.s.fixture.clone());
        let dim = self.opt("dim", self.s.dim);
        let h = self.opt("h", self.s.h);
        let radius = self.opt("radius", self.s.radius);
        match (input, fix) {
            (Some(_), Some(_)) => Err(CliError::Conflict("--input and --fixture".into())),
            (Some(p), None) => {
                let f = read_grid(
                    &p,
                    Headerless {
                        dim,
                        spacing: h.unwrap_or(1.0),
                    },
                )?;
                if let Some(d) = dim {
                    if d != f.dim() {
                        return Err(CliError::Invalid(format!(
                            "--dim {d} but {} holds a {}-d grid",
                            p.display(),
                            f.dim()
                        )));
                    }
                }
                Ok((f, p.display().to_string()))
            }
            (None, Some(name)) => Ok((fixture(&name, h, radius, dim)?, format!("fixture {name}"))),
            (None, None) => Err(CliError::Usage(
                "one of --input or --fixture is required".into(),
            )),
        }
    }
}

fn grid_summary(f: &GridFunction) -> Value {
    json!({
        "header": GridHeader::of(f),
        "l1": num(f.l1()),
        "linf": num(f.linf()),
        "tv": num(f.total_variation()),
    })
}

fn record_csv(rec: &ExperimentRecord) -> String {
    let cols: Vec<&str> = rec.columns.iter().map(String::as_str).collect();
    csv(&cols, rec.rows.iter().cloned())
}

fn verdict_line(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn check_condition(mut c: Ctx) -> CliResult<Report> {
    let phi = parse_young(&c.req("phi", c.s.phi.clone())?)?;
    let psi = parse_weight(&c.req("psi", c.s.psi.clone())?)?;
    let dim = c.or("dim", c.s.dim, 2);
    let smin = c.or("smin", c.s.smin, 1e-6);
    let smax = c.or("smax", c.s.smax, 1e12);
    let points = c.points(97)?;
    let tail = c.tail()?;
    let first_lower = c.opt("first_lower", c.s.first_lower);
    let opts = ConditionOptions {
        dim,
        tail,
        first_lower,
    };
    let rep = condition_sup(&phi, &psi, (smin, smax), points, &opts)?;

    let mut r = Report::new("check-condition", c.config());
    let rows = (0..rep.s_grid.len()).map(|i| {
        vec![
            rep.s_grid[i],
            rep.values[i],
            rep.first_terms[i],
            rep.second_terms[i],
        ]
    });
    side_file(
        &mut r,
        &c.out_dir,
        "condition.csv",
        &csv(&["s", "value", "first", "second"], rows),
    )?;
    r.line(format!("phi {phi}, psi {psi}, d = {dim}"));
    r.line(format!(
        "verdict {}: sup C(s) = {} at s = {:e}; log-slopes {:.4} (s -> 0), {:.4} (s -> inf)",
        rep.verdict, rep.d_hat, rep.argmax_s, rep.tail_slopes.0, rep.tail_slopes.1
    ));
    r.result =
        json!({ "phi": phi.to_string(), "psi": psi.to_string(), "condition": to_value(&rep)? });
    Ok(r)
}

pub fn decompose_cmd(mut c: Ctx) -> CliResult<Report> {
    let (f, source) = c.grid()?;
    let format = Format::parse(&c.or("format", c.s.format.clone(), "csv".to_string()))?;
    let phi = c.opt("phi", c.s.phi.clone());
    let psi = c.opt("psi", c.s.psi.clone());
    let pair = match (phi, psi) {
        (Some(a), Some(b)) => Some((parse_young(&a)?, parse_weight(&b)?)),
        (None, None) => None,
        _ => return Err(CliError::Usage("--phi and --psi go together".into())),
    };
    let quad = if pair.is_some() {
        Some(c.quadrature()?)
    } else {
        None
    };

    let dec = decompose(&f);
    let r12 = verify_r1_r2(&dec);
    let d = f.dim();
    let side = f
        .shape()
        .iter()
        .copied()
        .max()
        .unwrap_or(1)
        .min(MAX_ISO_SIDE);
    let c_iso = isoperimetric_constant_grid(d, side, f.spacing())?;
    let budget = 1.05 * alpha_budget(d, c_iso);
    let r3 = verify_r3(&dec, budget)?;

    let mut r = Report::new("decompose", c.config());
    let dir = c.out_dir.join("molecules");
    std::fs::create_dir_all(&dir)?;
    let mut manifest = Vec::new();
    for (k, m) in dec.molecules.iter().enumerate() {
        let name = format!("molecule_{k:04}.{}", format.extension());
        write_grid(&dir.join(&name), &m.layer, format)?;
        manifest.push(json!({
            "file": name,
            "sign": m.sign,
            "index": m.index,
            "a_lo": num(m.a_lo),
            "a_hi": num(m.a_hi),
            "level_measure": num(m.level_measure),
            "norms": { "l1": num(m.layer.l1()), "linf": num(m.layer.linf()), "tv": num(m.layer.total_variation()) },
        }));
    }
    let manifest = json!({
        "schema": SCHEMA,
        "source": GridHeader::of(&f),
        "count": dec.molecules.len(),
        "molecules": manifest,
    });
    write_text(
        &dir.join("manifest.json"),
        &crate::report::to_pretty(&manifest),
    )?;
    r.files.push("molecules/manifest.json".into());

    let sufficiency = match (&pair, quad) {
        (Some((phi, psi)), Some(quad)) => {
            let opts = SufficiencyOptions {
                quad,
                tail: quad.tail,
                ..SufficiencyOptions::default()
            };
            let rec = sufficiency_molecule_estimates(&f, phi, psi, &opts)?;
            side_file(&mut r, &c.out_dir, "sufficiency.csv", &record_csv(&rec))?;
            Some(rec)
        }
        _ => None,
    };

    r.pass = r12.pass && r3.pass && sufficiency.as_ref().map_or(true, |s| s.pass);
    r.line(format!(
        "{source}: {} molecules written to {}",
        dec.molecules.len(),
        dir.display()
    ));
    r.line(format!(
        "{} reconstruction and additivity (L1 rel {:.1e}, TV rel {:.1e})",
        verdict_line(r12.pass),
        r12.l1_rel_error,
        r12.tv_rel_error
    ));
    r.line(format!(
        "{} molecule constant {:.4} <= {:.4}",
        verdict_line(r3.pass),
        r3.alpha_observed,
        budget
    ));
    if let Some(s) = &sufficiency {
        r.line(format!(
            "{} molecule-wise modulus bounds and assembled seminorm",
            verdict_line(s.pass)
        ));
        for w in &s.warnings {
            r.line(format!("warning: {w}"));
        }
    }
    r.result = json!({
        "source": source,
        "grid": grid_summary(&f),
        "molecules": dec.molecules.len(),
        "r1_r2": to_value(&r12)?,
        "r3": { "alpha_observed": num(r3.alpha_observed), "budget": num(budget), "c_iso": num(c_iso), "pass": r3.pass },
        "sufficiency": match &sufficiency { Some(s) => to_value(s)?, None => Value::Null },
    });
    Ok(r)
}

pub fn norms(mut c: Ctx) -> CliResult<Report> {
    let (f, source) = c.grid()?;
    let phi = parse_young(&c.req("phi", c.s.phi.clone())?)?;
    let psi = match c.opt("psi", c.s.psi.clone()) {
        Some(s) => Some(parse_weight(&s)?),
        None => None,
    };
    let p = c.or("p", c.s.p, 2.0);
    let h = f.spacing();
    let default_t = log_grid(h, (10.0 * f.support_diameter()).max(2.0 * h), 16);
    let ts = c.or("t", c.s.t.clone(), default_t);
    let quad = if psi.is_some() {
        Some(c.quadrature()?)
    } else {
        None
    };

    let bundle = f.norms(p)?;
    let lux = luxemburg_norm(&f, &phi)?;
    let curve = modulus_curve(&f, &phi, &ts)?;
    let besov = match (&psi, quad) {
        (Some(psi), Some(q)) => Some(besov_orlicz_norm(&f, &phi, psi, &q)?),
        _ => None,
    };

    let mut r = Report::new("norms", c.config());
    let rows = curve
        .ts
        .iter()
        .zip(&curve.values)
        .map(|(&t, &w)| vec![t, w]);
    side_file(
        &mut r,
        &c.out_dir,
        "modulus.csv",
        &csv(&["t", "omega"], rows),
    )?;
    r.line(format!("{source}: shape {:?}, h = {h}", f.shape()));
    r.line(format!(
        "L1 {}  Linf {}  L{p} {}  TV {}  BV {}",
        bundle.l1,
        bundle.linf,
        bundle.lp,
        bundle.tv,
        bundle.bv()
    ));
    r.line(format!("Luxemburg norm for {phi}: {}", lux.norm));
    if let Some(b) = &besov {
        r.line(format!(
            "Besov-Orlicz norm {} (seminorm {}, converged {})",
            b.total, b.seminorm_part, b.converged
        ));
    }
    r.result = json!({
        "source": source,
        "grid": GridHeader::of(&f),
        "lebesgue": { "l1": num(bundle.l1), "linf": num(bundle.linf), "p": num(p), "lp": num(bundle.lp) },
        "tv": num(bundle.tv),
        "tv_per_axis": nums(&f.tv_per_axis()),
        "bv": num(bundle.bv()),
        "luxemburg": to_value(&lux)?,
        "modulus": { "t": nums(&curve.ts), "omega": nums(&curve.values), "shift_vectors": curve.shift_budget },
        "besov": match &besov {
            Some(b) => {
                let mut v = to_value(b)?;
                v["ratio_to_bv"] = num(b.total / bundle.bv());
                v
            }
            None => Value::Null,
        },
    });
    Ok(r)
}

pub fn example5(mut c: Ctx) -> CliResult<Report> {
    let alpha = c.or("alpha", c.s.alpha, 0.1);
    let sp = Section5Params::new(alpha)?;
    let points = c.points(20)?;
    if points < 2 {
        return Err(CliError::Invalid("points must be at least 2".into()));
    }
    let tail = c.tail()?;
    let s = log_grid(sp.r, 1e3 * sp.r, points);
    let first = section5_first_bound(alpha, &s)?;
    let second: Vec<_> = pool::map(c.jobs, &s, |&si| section5_second_bound(alpha, si, &tail))
        .into_iter()
        .collect::<Result<_, _>>()?;

    let mut r = Report::new("example5", c.config());
    let rows = first
        .iter()
        .zip(&second)
        .map(|(a, b)| vec![a.s, a.value, a.cap, b.value, b.rel_change]);
    side_file(
        &mut r,
        &c.out_dir,
        "example5.csv",
        &csv(&["s", "first", "cap", "second", "second_rel_change"], rows),
    )?;
    let first_ok = first.iter().all(|b| b.pass);
    let second_ok = second.iter().all(|b| b.converged);
    r.pass = first_ok && second_ok;
    let worst = first.iter().map(|b| b.value).fold(0.0, f64::max);
    r.line(format!(
        "alpha = {alpha}, r = {:e}, {points} values of s in [r, 1000 r]",
        sp.r
    ));
    r.line(format!(
        "{} first bound: max {worst:.6} < 2",
        verdict_line(first_ok)
    ));
    let change = second.iter().map(|b| b.rel_change).fold(0.0, f64::max);
    r.line(format!(
        "{} second bound finite: max change under span doubling {change:.1e}",
        verdict_line(second_ok)
    ));
    r.result = json!({
        "alpha": num(alpha),
        "r": num(sp.r),
        "admissibility": num(sp.admissibility()),
        "first": first.iter().map(|b| json!({
            "s": num(b.s), "value": num(b.value), "beta": num(b.beta),
            "intermediate": num(b.intermediate), "cap": num(b.cap), "pass": b.pass,
        })).collect::<Vec<_>>(),
        "second": second.iter().map(|b| json!({
            "s": num(b.s), "value": num(b.value), "span": num(b.span), "value_doubled": num(b.value_doubled),
            "rel_change": num(b.rel_change), "dominating_remainder": num(b.dominating_remainder),
            "converged": b.converged,
        })).collect::<Vec<_>>(),
    });
    Ok(r)
}

pub fn necessity(mut c: Ctx) -> CliResult<Report> {
    let phi = parse_young(&c.req("phi", c.s.phi.clone())?)?;
    let psi = parse_weight(&c.req("psi", c.s.psi.clone())?)?;
    let dim = c.or("dim", c.s.dim, 2);
    let radii = c.or("radii", c.s.radii.clone(), vec![1.0, 0.5, 0.25, 0.125]);
    let tail = c.tail()?;
    let (rec, balls) = necessity_ball_experiment(&phi, &psi, dim, &radii, &tail)?;

    let mut r = Report::new("necessity", c.config());
    side_file(&mut r, &c.out_dir, "necessity.csv", &record_csv(&rec))?;
    r.pass = rec.pass;
    r.line(format!("phi {phi}, psi {psi}, d = {dim}"));
    r.line(format!(
        "{:>10} {:>14} {:>14} {:>14} {:>14}",
        "r", "BV", "seminorm", "chain", "ratio"
    ));
    for b in &balls {
        r.line(format!(
            "{:>10} {:>14.6} {:>14.6} {:>14.6} {:>14.6}",
            b.r, b.bv, b.seminorm_lower, b.chain, b.ratio
        ));
    }
    r.line(format!(
        "{} chain and BV bounds at every radius",
        verdict_line(rec.pass)
    ));
    r.result = json!({ "record": to_value(&rec)?, "balls": to_value(&balls)? });
    Ok(r)
}

pub fn lemma6(mut c: Ctx) -> CliResult<Report> {
    let dim = c.or("dim", c.s.dim, 2);
    let radius = c.or("r", c.s.r, 1.0);
    let offsets = c.or("offsets", c.s.offsets.clone(), vec![0.1, 0.5, 0.9]);
    let def = MonteCarlo::default();
    // Monte Carlo always runs in d ≥ 3; lower dimensions use it only on request
    let use_mc = dim >= 3 || c.s.samples.is_some();
    let mc = if use_mc {
        let samples = c.or("samples", c.s.samples, def.samples);
        let seed = c.or("seed", c.s.seed, def.seed);
        let chunks = c.or("chunks", c.s.chunks, def.chunks);
        if samples > MAX_SAMPLES {
            return Err(CliError::Guard(format!(
                "max_samples: {samples} exceeds {MAX_SAMPLES}"
            )));
        }
        if chunks == 0 {
            return Err(CliError::Invalid("chunks must be positive".into()));
        }
        Some(MonteCarlo {
            samples,
            seed,
            chunks,
        })
    } else {
        None
    };
    // validates dimension and offsets before any sampling
    lemma6_validate(dim, radius, &offsets)?;

    let estimates: Vec<Option<(f64, f64)>> = match &mc {
        Some(mc) if mc.samples > 0 => {
            let tasks: Vec<(usize, u32)> = (0..offsets.len())
                .flat_map(|i| (0..mc.chunks).map(move |k| (i, k)))
                .collect();
            let hits = pool::map(c.jobs, &tasks, |&(i, k)| {
                monte_carlo_chunk(dim, radius, offsets[i], mc.seed, k, mc.chunk_samples(k))
            });
            (0..offsets.len())
                .map(|i| {
                    let per = &hits[i * mc.chunks as usize..(i + 1) * mc.chunks as usize];
                    let total: u64 = per.iter().sum();
                    Some(monte_carlo_estimate(
                        dim, radius, offsets[i], total, mc.samples,
                    ))
                })
                .collect()
        }
        _ => vec![None; offsets.len()],
    };
    let rec = lemma6_record(dim, radius, &offsets, &estimates, mc.as_ref())?;

    let mut r = Report::new("lemma6", c.config());
    side_file(&mut r, &c.out_dir, "lemma6.csv", &record_csv(&rec))?;
    r.pass = rec.pass;
    r.line(format!("d = {dim}, r = {radius}"));
    r.line(format!(
        "{:>8} {:>14} {:>14} {:>12} {:>14}",
        "offset", "exact", "estimate", "std_error", "bound"
    ));
    for row in &rec.rows {
        r.line(format!(
            "{:>8} {:>14.6} {:>14.6} {:>12.2e} {:>14.6}",
            row[0], row[1], row[2], row[3], row[4]
        ));
    }
    for w in &rec.warnings {
        r.line(format!("warning: {w}"));
    }
    r.line(format!(
        "{} symmetric difference bound",
        verdict_line(rec.pass)
    ));
    r.result = to_value(&rec)?;
    Ok(r)
}

pub fn sobolev(mut c: Ctx) -> CliResult<Report> {
    let dim = c.or("dim", c.s.dim, 2);
    let h = c.or("h", c.s.h, 1.0 / 32.0);
    let max_change = c.or("max_change", c.s.max_change, 0.05);
    let pairs = sobolev_pairs(dim, h)?;
    let rec = sobolev_check(&pairs, max_change)?;

    let mut r = Report::new("sobolev", c.config());
    side_file(&mut r, &c.out_dir, "sobolev.csv", &record_csv(&rec))?;
    r.pass = rec.pass;
    r.line(format!(
        "d = {dim}: discs of radius 1/4, 1/2 and squares of side 1/2, 1 at h = {h} and h/2"
    ));
    r.line(format!(
        "{} max ratio {:.6}, max change under refinement {:.2}% (budget {:.2}%)",
        verdict_line(rec.pass),
        rec.measured["max_ratio"],
        100.0 * rec.measured["max_change"],
        100.0 * max_change
    ));
    r.result = to_value(&rec)?;
    Ok(r)
}

/// The file name a command's report is written to.
pub fn report_name(command: &str) -> String {
    if command == "report" {
        "summary.json".into()
    } else {
        format!("{command}.json")
    }
}

pub fn report(mut c: Ctx) -> CliResult<Report> {
    let dir = c.or("input", c.s.input.clone(), c.out_dir.clone());
    let mut names: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && p.file_name().is_some_and(|n| n != "summary.json")
        })
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(CliError::Invalid(format!(
            "no reports in {}",
            dir.display()
        )));
    }
    let mut r = Report::new("report", c.config());
    let mut entries = Vec::new();
    let mut failed = 0usize;
    for p in &names {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(p)?)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?;
        if v["schema"] != SCHEMA {
            return Err(CliError::Invalid(format!(
                "{}: not a {SCHEMA} report",
                p.display()
            )));
        }
        let pass = v["pass"].as_bool().unwrap_or(false);
        failed += usize::from(!pass);
        let file = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        r.line(format!(
            "{} {} ({file})",
            verdict_line(pass),
            v["command"].as_str().unwrap_or("?")
        ));
        entries.push(json!({ "file": file, "command": v["command"], "pass": pass }));
    }
    r.pass = failed == 0;
    r.line(format!(
        "{} of {} reports passed",
        names.len() - failed,
        names.len()
    ));
    r.result = json!({ "reports": entries, "total": names.len(), "failed": failed });
    Ok(r)
}

pub fn out_path(dir: &Path, command: &str) -> PathBuf {
    dir.join(report_name(command))
}
