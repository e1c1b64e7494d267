//! Dispatch from a run configuration to the library, producing a report.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex;
use serde_json::{json, Map, Value};

use orthocusp::chern::{chern_generators, todd_from_chern, todd_series, universal_q};
use orthocusp::corecone::{decompose, gamma_check, CoreVariant, SelfAdjointCone};
use orthocusp::cycles::{
    classify_ramification, conjugacy_classes, enumerate_isometries, kernel_criterion_holds, stabilizer_orders,
};
use orthocusp::dimform::{hilbert_poly_dual, hm_volume, leading_dimension, local_density, AlphaSource, LocalDensityResult};
use orthocusp::domains::{atilde_tail, convert, convert_with, in_kappa, psi, Model, PointRecord};
use orthocusp::fan::Fan;
use orthocusp::linalg::QMat;
use orthocusp::parab::{boundary_data, CuspFlag, FlagKind, StandardShape};
use orthocusp::qform::{parse_matrix, parse_rational_value, Place, QuadraticLattice};
use orthocusp::rat::{fmt_q, parse_q, to_f64, Q};
use orthocusp::Error;

use crate::cli::{ChernOp, Command, FanOp, Mode, RunConfig, VolumeArgs};
use crate::report::Report;

/// Failures surfaced in a report (exit code 1).
#[derive(Debug)]
pub enum Failure {
    Domain(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl Failure {
    fn to_value(&self) -> Value {
        match self {
            Failure::Domain(e) => {
                let dbg = format!("{e:?}");
                let kind: String = dbg.chars().take_while(|c| c.is_alphanumeric()).collect();
                json!({ "kind": kind, "message": e.to_string() })
            }
            Failure::Io(m) => json!({ "kind": "IOError", "message": m }),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

#[derive(Default)]
struct Outcome {
    result: Value,
    conventions: Vec<String>,
    certificates: Map<String, Value>,
}

impl Outcome {
    fn new(result: Value) -> Self {
        Outcome { result, ..Default::default() }
    }

    fn convention(mut self, c: &str) -> Self {
        self.conventions.push(c.to_string());
        self
    }

    fn certificate(mut self, k: &str, v: Value) -> Self {
        self.certificates.insert(k.to_string(), v);
        self
    }
}

const Q_CONVENTION: &str = "q(x) = b(x, x), no factor 1/2";

pub fn run_command(cfg: &RunConfig) -> Report {
    let command = echo(cfg);
    match dispatch(cfg) {
        Ok(mut o) => {
            collect_conventions(&o.result, &mut o.conventions);
            Report { command, result: o.result, conventions: o.conventions, certificates: o.certificates, error: None }
        }
        Err(f) => Report { command, result: Value::Null, conventions: Vec::new(), certificates: Map::new(), error: Some(f.to_value()) },
    }
}

/// Every "conventions" array nested in the result is echoed at the top.
fn collect_conventions(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if k == "conventions" {
                    if let Some(a) = x.as_array() {
                        out.extend(a.iter().filter_map(|s| s.as_str().map(String::from)));
                    }
                } else {
                    collect_conventions(x, out);
                }
            }
        }
        Value::Array(a) => a.iter().for_each(|x| collect_conventions(x, out)),
        _ => {}
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn echo(cfg: &RunConfig) -> Value {
    let (name, args) = match &cfg.command {
        Command::Invariants { gram, primes } => ("invariants", json!({ "gram": path_str(gram), "primes": primes })),
        Command::MapPoint { point, from, to, height } => {
            ("map-point", json!({ "point": path_str(point), "from": from, "to": to, "height": height }))
        }
        Command::Cusp { gram, flag, height } => ("cusp", json!({ "gram": path_str(gram), "flag": flag, "height": height })),
        Command::Fan { op } => match op {
            FanOp::Validate { fan } => ("fan validate", json!({ "fan": path_str(fan) })),
            FanOp::Subdivide { fan, all } => ("fan subdivide", json!({ "fan": path_str(fan), "all": all })),
            FanOp::Complete { fan } => ("fan complete", json!({ "fan": path_str(fan) })),
            FanOp::Regular { fan, resolve, max_rounds } => {
                ("fan regular", json!({ "fan": path_str(fan), "resolve": resolve, "max_rounds": max_rounds }))
            }
            FanOp::Chart { fan } => ("fan chart", json!({ "fan": path_str(fan) })),
        },
        Command::CoreDecompose { gram, variant, height, gens } => (
            "core-decompose",
            json!({ "gram": path_str(gram), "variant": variant, "height": height, "gens": gens.as_ref().map(|g| path_str(g)) }),
        ),
        Command::Chern { op } => match op {
            ChernOp::Td { degree } => ("chern td", json!({ "degree": degree })),
            ChernOp::QPoly { dim, rank } => ("chern q-poly", json!({ "dim": dim, "rank": rank })),
        },
        Command::HilbertPoly { dim } => ("hilbert-poly", json!({ "dim": dim })),
        Command::LocalDensity { gram, prime, kmax } => {
            ("local-density", json!({ "gram": path_str(gram), "prime": prime, "kmax": kmax }))
        }
        Command::HmVolume { lattice } => ("hm-volume", volume_echo(lattice)),
        Command::DimLeading { lattice, ell } => {
            let mut v = volume_echo(lattice);
            v["ell"] = json!(ell);
            ("dim-leading", v)
        }
        Command::Ramify { gram, bound } => ("ramify", json!({ "gram": path_str(gram), "bound": bound })),
    };
    let mut args = args;
    args["mode"] = json!(cfg.mode.name());
    if cfg.mode == Mode::Float {
        args["tol"] = json!(cfg.tol);
    }
    json!({ "name": name, "args": args })
}

fn volume_echo(a: &VolumeArgs) -> Value {
    json!({
        "gram": path_str(&a.gram),
        "alpha_inf": a.alpha_inf,
        "densities": a.densities.as_ref().map(|d| path_str(d)),
        "spn": a.spn,
    })
}

fn read_json(path: &Path) -> Res<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Domain(Error::Parse(format!("{}: {e}", path.display()))))
}

fn read_lattice(path: &Path) -> Res<QuadraticLattice> {
    Ok(QuadraticLattice::from_json(&read_json(path)?)?)
}

fn dispatch(cfg: &RunConfig) -> Res<Outcome> {
    match &cfg.command {
        Command::Invariants { gram, primes } => invariants(&read_lattice(gram)?, primes.as_deref()),
        Command::MapPoint { point, from, to, height } => map_point(cfg, point, from.as_deref(), to, *height),
        Command::Cusp { gram, flag, height } => {
            let l = read_lattice(gram)?;
            let kind = FlagKind::parse(flag)?;
            // a Gram matrix already in Ã shape keeps its own basis
            let flag = match atilde_tail(l.gram()) {
                Some(tail) => CuspFlag::standard(kind, &tail)?,
                None => CuspFlag::new(kind, StandardShape::find(l, *height)?),
            };
            let bd = boundary_data(&flag)?;
            Ok(Outcome::new(bd.to_json(&flag)).convention(Q_CONVENTION))
        }
        Command::Fan { op } => fan(op),
        Command::CoreDecompose { gram, variant, height, gens } => core_decompose(gram, variant, *height, gens.as_deref()),
        Command::Chern { op } => Ok(match op {
            ChernOp::Td { degree } => {
                let c = chern_generators("T", *degree, *degree);
                let td = todd_from_chern(&c, *degree);
                let series: Vec<String> = todd_series(*degree).iter().map(fmt_q).collect();
                Outcome::new(json!({ "td": td.to_json(), "series": series }))
                    .convention("td(T) = prod x/(1 - e^-x) over the Chern roots of T; series lists its coefficients in x")
            }
            ChernOp::QPoly { dim, rank } => Outcome::new(universal_q(*dim, *rank).to_json())
                .convention("c_i(T) = (-1)^i c_i(Omega); keys are partitions of the c(E) and c(Omega) exponents"),
        }),
        Command::HilbertPoly { dim } => {
            let p = hilbert_poly_dual(*dim)?;
            let values: Map<String, Value> = (0..=5).map(|l| (l.to_string(), json!(fmt_q(&p.eval(l))))).collect();
            Ok(Outcome::new(json!({ "polynomial": p.to_json(), "values": values })))
        }
        Command::LocalDensity { gram, prime, kmax } => {
            let r = local_density(&read_lattice(gram)?, *prime, *kmax)?;
            let tail: Vec<Value> = r.counts.iter().rev().take(2).rev().map(|(k, c)| json!([k, c.to_string()])).collect();
            Ok(Outcome::new(r.to_json()).certificate("stabilization", json!({ "k_stable": r.k_stable, "levels": tail })))
        }
        Command::HmVolume { lattice } => {
            let l = read_lattice(&lattice.gram)?;
            let r = hm_volume(&l, &alpha_source(lattice)?)?;
            Ok(Outcome::new(r.to_json()).convention("float: volume is a double-precision value"))
        }
        Command::DimLeading { lattice, ell } => {
            let l = read_lattice(&lattice.gram)?;
            let vol = hm_volume(&l, &alpha_source(lattice)?)?;
            let n = l.rank() as u32 - 2;
            let lead = leading_dimension(n, *ell, vol.value)?;
            Ok(Outcome::new(json!({ "leading": lead.to_json(), "volume": vol.to_json() }))
                .convention("float: volume is a double-precision value"))
        }
        Command::Ramify { gram, bound } => ramify(&read_lattice(gram)?, *bound),
    }
}

fn invariants(l: &QuadraticLattice, primes: Option<&[u64]>) -> Res<Outcome> {
    let (p, m) = l.signature()?;
    let mut places: Vec<Place> = match primes {
        Some(ps) => ps.iter().map(|&p| Place::prime(p)).collect::<orthocusp::Result<_>>()?,
        None => l.bad_primes()?.into_iter().map(Place::Prime).collect(),
    };
    places.push(Place::Infinity);
    places.sort();
    places.dedup();
    let mut hasse = Map::new();
    for v in &places {
        hasse.insert(v.to_string(), json!(l.hasse_invariant(*v)?));
    }
    Ok(Outcome::new(json!({
        "gram": l.to_json()["gram"].clone(),
        "rank": l.rank(),
        "disc": fmt_q(&l.discriminant()),
        "signature": [p, m],
        "hasse": hasse,
        "bad_primes": l.bad_primes()?,
        "integral": l.is_integral(),
    }))
    .convention(Q_CONVENTION)
    .convention("Hasse invariant: product over i < j of (a_i, a_j)_v for a diagonalization"))
}

fn map_point(cfg: &RunConfig, path: &Path, from: Option<&str>, to: &str, height: u32) -> Res<Outcome> {
    let rec = PointRecord::from_json(&read_json(path)?, height)?;
    let from = match from {
        Some(f) => Model::parse(f)?,
        None => rec.model,
    };
    if from != rec.model {
        return Err(Error::InvalidInput(format!("point file is in the {} model", rec.model.name())).into());
    }
    let to = Model::parse(to)?;
    match cfg.mode {
        Mode::Exact => {
            let coords = convert(&rec.frame, from, to, &rec.coords)?;
            let tube = convert(&rec.frame, from, Model::Tube, &rec.coords)?;
            let kappa = in_kappa(&rec.frame, &psi(&rec.frame, &tube)?, 0.0)?;
            let out = PointRecord { model: to, coords, frame: rec.frame.clone() };
            Ok(Outcome::new(json!({ "point": out.to_json(), "kappa": kappa.name() })))
        }
        Mode::Float => {
            let c: Vec<Complex<f64>> = rec.coords.iter().map(|z| Complex::new(to_f64(&z.re), to_f64(&z.im))).collect();
            let coords = convert_with(&rec.frame, from, to, &c, cfg.tol)?;
            let tube = convert_with(&rec.frame, from, Model::Tube, &c, cfg.tol)?;
            let kappa = in_kappa(&rec.frame, &psi(&rec.frame, &tube)?, cfg.tol)?;
            Ok(Outcome::new(json!({
                "point": {
                    "model": to.name(),
                    "coords": coords.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
                    "frame": rec.frame.to_json(),
                    "numeric": "float",
                },
                "kappa": kappa.name(),
            }))
            .convention(&format!("float mode, tolerance {:e}", cfg.tol)))
        }
    }
}

fn fan(op: &FanOp) -> Res<Outcome> {
    let load = |p: &Path| -> Res<Fan> { Ok(Fan::from_json(&read_json(p)?, true)?) };
    match op {
        FanOp::Validate { fan } => {
            let f = load(fan)?;
            let r = f.validate();
            let mut orbits = Vec::new();
            if r.valid {
                for c in f.cones() {
                    let o = f.orbit_record(c)?;
                    orbits.push(json!({ "cone": c.to_json(), "cone_dim": c.dim(), "orbit_dim": o.dim }));
                }
            }
            let valid = r.valid;
            Ok(Outcome::new(json!({
                "valid": r.valid,
                "cones": r.cones,
                "violation": r.violation.map(|v| v.to_string()),
                "complete": valid && f.is_complete(),
                "regular": f.is_regular(),
                "orbits": orbits,
            }))
            .certificate("validity", json!({ "valid": valid })))
        }
        FanOp::Subdivide { fan, all } => {
            let f = load(fan)?;
            let all = *all;
            let s = f.barycentric_subdivide(|c| all || !c.is_regular());
            let r = s.validate();
            Ok(Outcome::new(json!({ "fan": s.to_json(), "regular": s.is_regular(), "valid": r.valid }))
                .certificate("validity", json!({ "valid": r.valid })))
        }
        FanOp::Complete { fan } => {
            let f = load(fan)?;
            Ok(Outcome::new(json!({ "complete": f.validate().valid && f.is_complete() })))
        }
        FanOp::Regular { fan, resolve, max_rounds } => {
            let f = load(fan)?;
            let mult: Vec<Value> = f
                .maximal_cones()
                .iter()
                .map(|c| json!({ "cone": c.to_json(), "multiplicity": c.multiplicity().map(|m| m.to_string()) }))
                .collect();
            let mut result = json!({ "regular": f.is_regular(), "maximal_cones": mult });
            if *resolve {
                let (g, rounds) = f.regularize(*max_rounds);
                result["resolution"] = json!({ "fan": g.to_json(), "rounds": rounds, "regular": g.is_regular(), "valid": g.validate().valid });
            }
            Ok(Outcome::new(result))
        }
        FanOp::Chart { fan } => {
            let f = load(fan)?;
            let charts = f
                .maximal_cones()
                .iter()
                .map(|c| Ok(json!({ "cone": c.to_json(), "chart": c.chart_presentation()?.to_json() })))
                .collect::<Res<Vec<_>>>()?;
            Ok(Outcome::new(json!({ "charts": charts })))
        }
    }
}

fn core_decompose(gram: &Path, variant: &str, h: u64, gens: Option<&Path>) -> Res<Outcome> {
    let omega = SelfAdjointCone::from_json(&read_json(gram)?)?;
    let d = decompose(&omega, CoreVariant::parse(variant)?, h)?;
    let mut result = d.to_json();
    result["cone"] = omega.to_json();
    if let Some(g) = gens {
        let v = read_json(g)?;
        let list = v.get("gens").and_then(|x| x.as_array()).ok_or_else(|| Error::Parse("gens file needs a \"gens\" array".into()))?;
        let mats = list
            .iter()
            .map(|m| Ok(QMat::from_rows(parse_matrix(m.as_array().ok_or_else(|| Error::Parse("generator must be a matrix".into()))?)?)?))
            .collect::<Res<Vec<_>>>()?;
        let r = gamma_check(&d.support.fan, &mats, &omega)?;
        result["gamma"] = json!({ "preserved": r.preserved, "excused": r.excused, "orbits": r.orbits });
    }
    Ok(Outcome::new(result)
        .convention("K_T is the closed kernel {x in closure(Omega) : <x, y> >= 1 for y in T}")
        .convention("extreme points certified by agreement of windows H and 2H on box(ceil(H/2))")
        .certificate("stability", json!({ "height": d.extremes.height, "checked_height": d.extremes.checked_height }))
        .certificate("validity", json!({ "valid": d.report.valid })))
}

fn alpha_source(a: &VolumeArgs) -> Res<AlphaSource> {
    if let Some(x) = &a.alpha_inf {
        return Ok(AlphaSource::Direct(parse_q(x)?));
    }
    let path = a.densities.as_ref().expect("clap requires densities without alpha_inf");
    let v = read_json(path)?;
    let list = match &v {
        Value::Array(a) => a.clone(),
        Value::Object(m) => match m.get("densities").and_then(|d| d.as_array()) {
            Some(a) => a.clone(),
            None => return Err(Error::Parse("densities file needs a \"densities\" array".into()).into()),
        },
        _ => return Err(Error::Parse("densities file must be an array or object".into()).into()),
    };
    let densities = list
        .iter()
        .map(|d| {
            let p = d.get("p").and_then(|p| p.as_u64()).ok_or_else(|| Error::Parse("density entry needs an integer \"p\"".into()))?;
            let alpha_p: Q = parse_rational_value(d.get("alpha_p").ok_or_else(|| Error::Parse("density entry needs \"alpha_p\"".into()))?)?;
            Ok(LocalDensityResult { p, k_stable: 0, alpha_p, counts: Vec::new() })
        })
        .collect::<Res<Vec<_>>>()?;
    Ok(AlphaSource::Local { densities, spn: a.spn })
}

fn ramify(l: &QuadraticLattice, bound: u32) -> Res<Outcome> {
    let els = enumerate_isometries(l, bound)?;
    let mut rows = Vec::new();
    let mut summary: BTreeMap<String, usize> = BTreeMap::new();
    let mut kernel_ok = true;
    let mut certs_ok = true;
    let mut reports = Vec::new();
    for g in &els {
        let entry = match g.order {
            None => Err(Error::NotRootOfUnity),
            Some(_) => classify_ramification(g, l),
        };
        let mut row = g.to_json();
        match &entry {
            Ok(rep) => {
                kernel_ok &= kernel_criterion_holds(g, rep);
                certs_ok &= rep.certificate.as_ref().is_some_and(|c| c.verify(&g.mat, l));
                *summary.entry(rep.classification.name()).or_default() += 1;
                row["report"] = rep.to_json();
            }
            Err(e) => {
                *summary.entry(Failure::Domain(e.clone()).to_value()["kind"].as_str().unwrap_or("error").to_string()).or_default() += 1;
                row["report"] = Value::Null;
                row["error"] = Failure::Domain(e.clone()).to_value();
            }
        }
        reports.push(entry.ok());
        rows.push(row);
    }
    let mut result = json!({ "count": els.len(), "elements": rows, "summary": summary });
    match conjugacy_classes(&els) {
        Some(classes) => {
            let cls = classes
                .iter()
                .map(|members| {
                    let rep_i = members[0];
                    let mut c = json!({ "representative": rep_i, "members": members, "size": members.len() });
                    match &reports[rep_i] {
                        Some(r) => {
                            c["classification"] = json!(r.classification.name());
                            c["stabilizers"] = stabilizer_orders(&els, &r.s, &r.s_perp).map(|o| o.to_json()).unwrap_or(Value::Null);
                        }
                        None => c["classification"] = rows[rep_i]["error"]["kind"].clone(),
                    }
                    c
                })
                .collect::<Vec<_>>();
            result["group"] = json!(true);
            result["classes"] = json!(cls);
        }
        None => {
            result["group"] = json!(false);
        }
    }
    Ok(Outcome::new(result)
        .convention("lambda: the eigenvalue with positive imaginary part on the positive eigenplane")
        .certificate("kernel_criterion", json!(kernel_ok))
        .certificate("cyclotomic_certificates", json!(certs_ok)))
}
