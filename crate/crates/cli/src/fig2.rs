//! QFI curve families for a Gaussian aperture, four panels plus SPADE records.

use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use num_complex::Complex;
use rayon::prelude::*;
use superres_core::analytic::qfi_point_sources;
use superres_core::{Aperture, Convention, Error, QuadratureSpec};

use crate::sweep::{format_float, spade_fi, worker_pool, write_csv, Record, Status};
use crate::svg::{Chart, Series};

pub const RE_GAMMA: [f64; 6] = [-1.0, -0.98, -0.5, 0.0, 0.5, 1.0];
pub const STEPS: usize = 500;
pub const S_MAX: f64 = 5.0;
/// Source width in units of sigma for the SPADE records.
pub const DELTA_OVER_SIGMA: f64 = 1e-4;

pub const CONVENTIONS: [Convention; 2] = [Convention::Paper, Convention::Physical];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    A,
    B,
    C,
    D,
}

impl Panel {
    pub const ALL: [Panel; 4] = [Panel::A, Panel::B, Panel::C, Panel::D];

    pub fn quantity(self) -> &'static str {
        match self {
            Panel::A => "f_em_full",
            Panel::B => "f_det_full",
            Panel::C => "f_em_single",
            Panel::D => "f_det_single",
        }
    }

    pub fn letter(self) -> char {
        match self {
            Panel::A => 'a',
            Panel::B => 'b',
            Panel::C => 'c',
            Panel::D => 'd',
        }
    }

    pub fn per_emitted(self) -> bool {
        matches!(self, Panel::A | Panel::C)
    }

    pub fn units(self) -> &'static str {
        if self.per_emitted() {
            "delta/sigma^3"
        } else {
            "1/sigma^2"
        }
    }

    pub fn file_stem(self) -> String {
        format!("panel_{}_{}", self.letter(), self.quantity())
    }
}

/// `s / sigma` on `(0, 5]`.
pub fn s_grid() -> Vec<f64> {
    (1..=STEPS).map(|i| S_MAX * i as f64 / STEPS as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Data {
    pub sigma: f64,
    pub panels: Vec<(Panel, Vec<Record>)>,
    /// SPADE FI per emitted photon in units of `delta / sigma^3`, both conventions.
    pub spade: Vec<Record>,
}

fn record(quantity: &'static str, g: f64, s: f64, sigma: f64, value: f64, units: &'static str, convention: &'static str) -> Record {
    Record {
        quantity,
        re_gamma: g,
        im_gamma: 0.0,
        s_over_sigma: s,
        sigma,
        delta: DELTA_OVER_SIGMA * sigma,
        value,
        units,
        convention,
        status: Status::Ok,
    }
}

pub fn compute(sigma: f64) -> Result<Fig2Data, Error> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let ap = Aperture::gaussian(sigma)?;
    let spec = QuadratureSpec::default();
    let grid = s_grid();
    let points: Vec<(f64, f64)> = RE_GAMMA.iter().flat_map(|&g| grid.iter().map(move |&s| (g, s))).collect();
    let delta = DELTA_OVER_SIGMA * sigma;
    let (em, det) = (sigma.powi(3), sigma.powi(2));

    let pool = worker_pool();
    let evaluated: Vec<Result<([f64; 4], f64), Error>> = pool.install(|| {
        points
            .par_iter()
            .map(|&(g, s)| {
                let gamma = Complex::new(g, 0.0);
                let r = qfi_point_sources(&ap, s * sigma, gamma, &spec)?;
                let spade = spade_fi(&ap, s * sigma, gamma, delta, Convention::Paper)?;
                Ok(([r.f_em_full * em, r.f_det_full * det, r.f_em_single * em, r.f_det_single * det], spade * em))
            })
            .collect()
    });
    let evaluated: Vec<([f64; 4], f64)> = evaluated.into_iter().collect::<Result<_, _>>()?;

    let mut panels = Vec::new();
    for (i, panel) in Panel::ALL.into_iter().enumerate() {
        let mut recs = Vec::new();
        if panel.per_emitted() {
            for conv in CONVENTIONS {
                let k = conv.factor::<f64>() / Convention::Paper.factor::<f64>();
                for (&(g, s), (v, _)) in points.iter().zip(&evaluated) {
                    recs.push(record(panel.quantity(), g, s, sigma, v[i] * k, panel.units(), conv.name()));
                }
            }
        } else {
            for (&(g, s), (v, _)) in points.iter().zip(&evaluated) {
                recs.push(record(panel.quantity(), g, s, sigma, v[i], panel.units(), "none"));
            }
        }
        panels.push((panel, recs));
    }
    let mut spade = Vec::new();
    for conv in CONVENTIONS {
        let k = conv.factor::<f64>() / Convention::Paper.factor::<f64>();
        for (&(g, s), (_, v)) in points.iter().zip(&evaluated) {
            spade.push(record("spade_fi", g, s, sigma, v * k, "delta/sigma^3", conv.name()));
        }
    }
    Ok(Fig2Data { sigma, panels, spade })
}

fn chart(title: String, recs: &[&Record], units: &str) -> Chart {
    let series = RE_GAMMA
        .iter()
        .map(|&g| Series {
            label: format!("Re g = {g}"),
            points: recs.iter().filter(|r| r.re_gamma == g).map(|r| (r.s_over_sigma, r.value)).collect(),
        })
        .collect();
    Chart { title, x_label: "s / sigma".into(), y_label: units.into(), log_y: true, series }
}

fn write_table(path: &Path, recs: &[Record]) -> io::Result<()> {
    let file = BufWriter::new(fs::File::create(path)?);
    write_csv(recs, file).map_err(io::Error::other)
}

/// Writes one CSV per panel plus `spade_fi.csv`, and SVG charts when asked.
/// Returns the written paths in order.
pub fn write(data: &Fig2Data, out_dir: &Path, svg: bool) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (panel, recs) in &data.panels {
        let path = out_dir.join(format!("{}.csv", panel.file_stem()));
        write_table(&path, recs)?;
        written.push(path);
    }
    let path = out_dir.join("spade_fi.csv");
    write_table(&path, &data.spade)?;
    written.push(path);

    if svg {
        for (panel, recs) in &data.panels {
            let labels: Vec<&str> = if panel.per_emitted() { CONVENTIONS.iter().map(|c| c.name()).collect() } else { vec!["none"] };
            for label in labels {
                let subset: Vec<&Record> = recs.iter().filter(|r| r.convention == label).collect();
                let (stem, title) = if label == "none" {
                    (panel.file_stem(), format!("({}) {}, sigma = {}", panel.letter(), panel.quantity(), format_float(data.sigma)))
                } else {
                    (
                        format!("{}_{label}", panel.file_stem()),
                        format!("({}) {} [{label}], sigma = {}", panel.letter(), panel.quantity(), format_float(data.sigma)),
                    )
                };
                let path = out_dir.join(format!("{stem}.svg"));
                fs::write(&path, chart(title, &subset, panel.units()).render())?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
