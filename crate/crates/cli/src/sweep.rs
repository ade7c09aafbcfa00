//! Parameter sweeps over separation and coherence.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;
use superres_core::analytic::{qfi_point_sources, QfiReport};
use superres_core::loss::{gaussian_gram_bound, pupil_gram_bound};
use superres_core::measurement::{classical_fi, direct_imaging_fi, required_q_max, spade_distribution};
use superres_core::{Aperture, Convention, Error, QuadratureSpec, SourcePair};

use crate::config::{Quantity, SweepConfig};
use crate::svg::{Chart, Series};

/// Worker count override for the sweep pool.
pub const WORKERS_ENV: &str = "SUPERRES_WORKERS";

/// Emission probability used to build source pairs; the reported values are per
/// emitted photon and do not depend on it.
const EMISSION_PROB: f64 = 0.01;

pub const COLUMNS: [&str; 10] =
    ["quantity", "re_gamma", "im_gamma", "s_over_sigma", "sigma", "delta", "value", "units", "convention", "reason"];

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    /// Value is a documented limit such as `inf`.
    Divergent(String),
    /// Quantity has no meaning at this point.
    Undefined(String),
    Failed(String),
}

impl Status {
    pub fn reason(&self) -> String {
        match self {
            Status::Ok => String::new(),
            Status::Divergent(m) => format!("divergent: {m}"),
            Status::Undefined(m) => format!("undefined: {m}"),
            Status::Failed(m) => format!("error: {m}"),
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Status::Failed(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub quantity: &'static str,
    pub re_gamma: f64,
    pub im_gamma: f64,
    pub s_over_sigma: f64,
    pub sigma: f64,
    pub delta: f64,
    pub value: f64,
    pub units: &'static str,
    /// `none` for convention-free quantities.
    pub convention: &'static str,
    pub status: Status,
}

/// Seventeen significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn convention_label(q: Quantity, c: Convention) -> &'static str {
    match q {
        Quantity::FEmFull | Quantity::FEmSingle | Quantity::SpadeFi | Quantity::DirectFi | Quantity::Transmission => c.name(),
        Quantity::FDetFull | Quantity::FDetSingle | Quantity::GramBound => "none",
    }
}

pub fn worker_pool() -> rayon::ThreadPool {
    let n = std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool")
}

type Value = (f64, Status);

fn failed(e: &Error) -> Value {
    (f64::NAN, Status::Failed(e.to_string()))
}

fn qfi_values(report: Result<QfiReport<f64>, Error>, convention: Convention) -> BTreeMap<Quantity, Value> {
    let mut out = BTreeMap::new();
    match report {
        Ok(r) => {
            let r = r.with_convention(convention);
            out.insert(Quantity::FEmFull, (r.f_em_full, Status::Ok));
            out.insert(Quantity::FDetFull, (r.f_det_full, Status::Ok));
            out.insert(Quantity::FEmSingle, (r.f_em_single, Status::Ok));
            out.insert(Quantity::FDetSingle, (r.f_det_single, Status::Ok));
            out.insert(Quantity::Transmission, (r.transmission, Status::Ok));
        }
        Err(Error::DivergentPerDetected { partial, .. }) => {
            let r = partial.with_convention(convention);
            let none = "no photon reaches the image plane".to_string();
            out.insert(Quantity::FEmFull, (r.f_em_full, Status::Ok));
            out.insert(Quantity::FDetFull, (f64::INFINITY, Status::Divergent(none.clone())));
            out.insert(Quantity::FEmSingle, (f64::NAN, Status::Undefined(none.clone())));
            out.insert(Quantity::FDetSingle, (f64::NAN, Status::Undefined(none)));
            out.insert(Quantity::Transmission, (r.transmission, Status::Ok));
        }
        Err(e) => {
            for q in [Quantity::FEmFull, Quantity::FDetFull, Quantity::FEmSingle, Quantity::FDetSingle, Quantity::Transmission] {
                out.insert(q, failed(&e));
            }
        }
    }
    out
}

/// SPADE Fisher information per emitted photon, per unit `delta`, no-detection outcome included.
pub fn spade_fi(ap: &Aperture, s: f64, gamma: Complex<f64>, delta: f64, convention: Convention) -> Result<f64, Error> {
    let src = SourcePair::new(s, delta, gamma, EMISSION_PROB)?;
    let sigma = ap.psf_sigma().ok_or_else(|| Error::ApertureNotGaussian(ap.id()))?;
    let dist = spade_distribution(ap, &src, required_q_max(s, sigma, 10), convention)?;
    Ok(classical_fi(&dist) / delta)
}

/// Direct-imaging Fisher information per emitted photon, per unit `delta`.
pub fn direct_fi(
    ap: &Aperture,
    s: f64,
    gamma: Complex<f64>,
    delta: f64,
    convention: Convention,
    spec: &QuadratureSpec,
) -> Result<f64, Error> {
    let src = SourcePair::new(s, delta, gamma, EMISSION_PROB)?;
    Ok(direct_imaging_fi(ap, &src, convention, spec)? / delta)
}

fn gram_value(ap: &Aperture, modes: usize, delta: f64, spec: &QuadratureSpec) -> Result<f64, Error> {
    if let Some(sigma) = ap.psf_sigma() {
        return Ok(gaussian_gram_bound(sigma, modes, delta)?.bound);
    }
    Ok(pupil_gram_bound(ap, modes, delta, spec)?.bound)
}

fn evaluate_point(cfg: &SweepConfig, ap: &Aperture, s_ratio: f64, gamma: Complex<f64>, spec: &QuadratureSpec) -> BTreeMap<Quantity, Value> {
    let s = s_ratio * cfg.sigma;
    let wants = |q: Quantity| cfg.quantities.contains(&q);
    let mut qfi = if [Quantity::FEmFull, Quantity::FDetFull, Quantity::FEmSingle, Quantity::FDetSingle, Quantity::Transmission]
        .into_iter()
        .any(wants)
    {
        qfi_values(qfi_point_sources(ap, s, gamma, spec), cfg.convention)
    } else {
        BTreeMap::new()
    };
    let at_zero = |what: &str| (f64::NAN, Status::Undefined(format!("{what} needs s > 0")));
    if wants(Quantity::SpadeFi) {
        let v = if s == 0.0 {
            at_zero("SPADE")
        } else {
            spade_fi(ap, s, gamma, cfg.delta, cfg.convention).map_or_else(|e| failed(&e), |v| (v, Status::Ok))
        };
        qfi.insert(Quantity::SpadeFi, v);
    }
    if wants(Quantity::DirectFi) {
        let v = if s == 0.0 {
            at_zero("direct imaging")
        } else {
            direct_fi(ap, s, gamma, cfg.delta, cfg.convention, spec).map_or_else(|e| failed(&e), |v| (v, Status::Ok))
        };
        qfi.insert(Quantity::DirectFi, v);
    }
    qfi
}

/// The coherence grid in output order: real part outer, imaginary part inner.
pub fn gamma_grid(cfg: &SweepConfig) -> Vec<Complex<f64>> {
    cfg.re_gamma.iter().flat_map(|&re| cfg.im_gamma.iter().map(move |&im| Complex::new(re, im))).collect()
}

/// One record per (quantity, gamma, s) in that order. Aperture errors abort the run;
/// per-point errors land in the record's status.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<Record>, Error> {
    let ap = cfg.build_aperture()?;
    let spec = QuadratureSpec::default();
    let gammas = gamma_grid(cfg);
    let points: Vec<(Complex<f64>, f64)> = gammas.iter().flat_map(|&g| cfg.s_grid.iter().map(move |&s| (g, s))).collect();

    let pool = worker_pool();
    let results: Vec<BTreeMap<Quantity, Value>> =
        pool.install(|| points.par_iter().map(|&(g, s)| evaluate_point(cfg, &ap, s, g, &spec)).collect());
    let gram = cfg
        .quantities
        .contains(&Quantity::GramBound)
        .then(|| gram_value(&ap, cfg.gram_modes, cfg.delta, &spec).map_or_else(|e| failed(&e), |v| (v, Status::Ok)));

    let mut records = Vec::with_capacity(cfg.quantities.len() * points.len());
    for &q in &cfg.quantities {
        for (&(g, s), res) in points.iter().zip(&results) {
            let (value, status) = match q {
                Quantity::GramBound => gram.clone().expect("gram bound computed"),
                _ => res[&q].clone(),
            };
            records.push(Record {
                quantity: q.name(),
                re_gamma: g.re,
                im_gamma: g.im,
                s_over_sigma: s,
                sigma: cfg.sigma,
                delta: cfg.delta,
                value,
                units: q.units(),
                convention: convention_label(q, cfg.convention),
                status,
            });
        }
    }
    Ok(records)
}

fn row(r: &Record) -> [String; 10] {
    [
        r.quantity.to_string(),
        format_float(r.re_gamma),
        format_float(r.im_gamma),
        format_float(r.s_over_sigma),
        format_float(r.sigma),
        format_float(r.delta),
        format_float(r.value),
        r.units.to_string(),
        r.convention.to_string(),
        r.status.reason(),
    ]
}

pub fn write_csv<W: Write>(records: &[Record], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[Record], mut out: W) -> std::io::Result<()> {
    let number = |v: f64| {
        let text = format_float(v);
        match serde_json::Number::from_str(&text) {
            Ok(n) if v.is_finite() => serde_json::Value::Number(n),
            _ => serde_json::Value::String(text),
        }
    };
    let rows: Vec<serde_json::Value> = records
        .iter()
        .map(|r| {
            let mut m = serde_json::Map::new();
            m.insert("quantity".into(), r.quantity.into());
            m.insert("re_gamma".into(), number(r.re_gamma));
            m.insert("im_gamma".into(), number(r.im_gamma));
            m.insert("s_over_sigma".into(), number(r.s_over_sigma));
            m.insert("sigma".into(), number(r.sigma));
            m.insert("delta".into(), number(r.delta));
            m.insert("value".into(), number(r.value));
            m.insert("units".into(), r.units.into());
            m.insert("convention".into(), r.convention.into());
            m.insert("reason".into(), r.status.reason().into());
            serde_json::Value::Object(m)
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &rows)?;
    writeln!(out)
}

/// One chart per quantity, one curve per coherence value.
pub fn charts(records: &[Record], log_y: bool) -> Vec<(String, Chart)> {
    let mut by_quantity: Vec<(&'static str, Vec<&Record>)> = Vec::new();
    for r in records {
        match by_quantity.iter_mut().find(|(q, _)| *q == r.quantity) {
            Some((_, v)) => v.push(r),
            None => by_quantity.push((r.quantity, vec![r])),
        }
    }
    by_quantity
        .into_iter()
        .map(|(q, rs)| {
            let mut series: Vec<Series> = Vec::new();
            for r in rs {
                let label = if r.im_gamma == 0.0 {
                    format!("Re g = {}", r.re_gamma)
                } else {
                    format!("g = {}{:+}i", r.re_gamma, r.im_gamma)
                };
                let point = (r.s_over_sigma, r.value);
                match series.iter_mut().find(|s| s.label == label) {
                    Some(s) => s.points.push(point),
                    None => series.push(Series { label, points: vec![point] }),
                }
            }
            let units = rs_units(q);
            let chart = Chart {
                title: q.to_string(),
                x_label: "s / sigma".into(),
                y_label: format!("{q} [{units}]"),
                log_y,
                series,
            };
            (q.to_string(), chart)
        })
        .collect()
}

fn rs_units(q: &str) -> &'static str {
    Quantity::from_name(q).map_or("", Quantity::units)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> SweepConfig {
        SweepConfig::parse(text).unwrap()
    }

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(format_float(0.25), "2.5000000000000000e-1");
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(f64::NAN), "nan");
        let x = 0.1 + 0.2;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn record_order_is_quantity_gamma_s() {
        let c = cfg("sweep.s_over_sigma = 0.5, 1\nsweep.re_gamma = 0, 0.5\nquantities = f_det_full, transmission\n");
        let recs = run_sweep(&c).unwrap();
        assert_eq!(recs.len(), 8);
        let keys: Vec<(&str, f64, f64)> = recs.iter().map(|r| (r.quantity, r.re_gamma, r.s_over_sigma)).collect();
        assert_eq!(keys[0], ("f_det_full", 0.0, 0.5));
        assert_eq!(keys[1], ("f_det_full", 0.0, 1.0));
        assert_eq!(keys[2], ("f_det_full", 0.5, 0.5));
        assert_eq!(keys[4].0, "transmission");
        assert!(recs.iter().all(|r| r.status == Status::Ok));
    }

    #[test]
    fn divergent_corner_is_a_sentinel() {
        let c = cfg("sweep.s_over_sigma = 0, 1\nsweep.re_gamma = -1\nquantities = f_em_full, f_det_full, f_det_single, spade_fi\n");
        let recs = run_sweep(&c).unwrap();
        let corner: Vec<&Record> = recs.iter().filter(|r| r.s_over_sigma == 0.0).collect();
        assert_eq!(corner[0].status, Status::Ok);
        assert!(corner[1].value.is_infinite());
        assert!(corner[1].status.reason().starts_with("divergent"));
        assert!(corner[2].value.is_nan());
        assert!(recs.iter().all(|r| !r.status.is_failure()));
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains(",inf,per_detected/length^2,none,divergent"));
    }

    #[test]
    fn spade_on_hard_edge_fails() {
        let c = cfg("aperture.kind = hard_edge\naperture.half_width = 0.5\nquantities = spade_fi, gram_bound\nsource.delta = 0.01\ngram.modes = 20\n");
        let recs = run_sweep(&c).unwrap();
        assert!(recs[0].status.is_failure());
        assert_eq!(recs[1].status, Status::Ok);
        assert!(recs[1].value > 0.0 && recs[1].value <= 1.0);
    }

    #[test]
    fn json_keeps_column_order() {
        let c = cfg("sweep.s_over_sigma = 1\nquantities = f_det_full\n");
        let recs = run_sweep(&c).unwrap();
        let mut buf = Vec::new();
        write_json(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let positions: Vec<usize> = COLUMNS.iter().map(|c| text.find(&format!("\"{c}\"")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        let v = parsed[0]["value"].as_f64().unwrap();
        assert!((v - 0.25).abs() < 1e-12, "{text}");
        assert!(text.contains("\"value\": 2.4999999") || text.contains("\"value\": 2.5000000"));
    }
}
