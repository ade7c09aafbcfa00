//! Flat `key = value` sweep configuration with dotted keys.
//!
//! ```text
//! # Gaussian aperture, three separations
//! aperture.kind = gaussian
//! aperture.sigma = 1.0
//! sweep.s_over_sigma = 0.5, 1, 2
//! sweep.re_gamma = -1, 0, 1
//! quantities = f_em_full, f_det_full
//! ```
//!
//! Lists are comma separated. `start:stop:count` expands to `count` evenly spaced values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superres_core::{Aperture, Convention};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    Fields(Vec<FieldError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    FEmFull,
    FDetFull,
    FEmSingle,
    FDetSingle,
    SpadeFi,
    DirectFi,
    Transmission,
    GramBound,
}

impl Quantity {
    pub const ALL: [Quantity; 8] = [
        Quantity::FEmFull,
        Quantity::FDetFull,
        Quantity::FEmSingle,
        Quantity::FDetSingle,
        Quantity::SpadeFi,
        Quantity::DirectFi,
        Quantity::Transmission,
        Quantity::GramBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::FEmFull => "f_em_full",
            Quantity::FDetFull => "f_det_full",
            Quantity::FEmSingle => "f_em_single",
            Quantity::FDetSingle => "f_det_single",
            Quantity::SpadeFi => "spade_fi",
            Quantity::DirectFi => "direct_fi",
            Quantity::Transmission => "transmission",
            Quantity::GramBound => "gram_bound",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.name() == s)
    }

    /// Units of the reported value; lengths are in the units of `sigma`.
    pub fn units(self) -> &'static str {
        match self {
            Quantity::FEmFull | Quantity::FEmSingle | Quantity::SpadeFi | Quantity::DirectFi => "per_emitted/delta/length^3",
            Quantity::FDetFull | Quantity::FDetSingle => "per_detected/length^2",
            Quantity::Transmission => "1/delta/length",
            Quantity::GramBound => "1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ApertureSpec {
    Gaussian,
    HardEdge { half_width: f64 },
    Mixture(Vec<(f64, f64)>),
    /// Gaussian mixture drawn from `seed`.
    RandomMixture,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub aperture: ApertureSpec,
    /// Length unit for `s_over_sigma`; the PSF width for Gaussian apertures.
    pub sigma: f64,
    pub s_grid: Vec<f64>,
    pub re_gamma: Vec<f64>,
    pub im_gamma: Vec<f64>,
    pub delta: f64,
    pub quantities: Vec<Quantity>,
    pub convention: Convention,
    pub output: OutputFormat,
    pub svg: bool,
    pub seed: u64,
    /// Mode count for `gram_bound`; the spacing is `delta`.
    pub gram_modes: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            aperture: ApertureSpec::Gaussian,
            sigma: 1.0,
            s_grid: vec![1.0],
            re_gamma: vec![0.0],
            im_gamma: vec![0.0],
            delta: 1e-4,
            quantities: vec![Quantity::FEmFull, Quantity::FDetFull, Quantity::FEmSingle, Quantity::FDetSingle],
            convention: Convention::Paper,
            output: OutputFormat::Csv,
            svg: false,
            seed: 0,
            gram_modes: 1000,
        }
    }
}

const KEYS: [&str; 15] = [
    "aperture.kind",
    "aperture.sigma",
    "aperture.half_width",
    "aperture.components",
    "aperture.file",
    "sweep.s_over_sigma",
    "sweep.re_gamma",
    "sweep.im_gamma",
    "source.delta",
    "quantities",
    "convention",
    "output",
    "svg",
    "seed",
    "gram.modes",
];

impl SweepConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::parse(&text)?;
        if let ApertureSpec::File(p) = &mut cfg.aperture {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut errors = Vec::new();
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(FieldError { key: line.to_string(), line: Some(i + 1), message: "expected key = value".into() });
                continue;
            };
            let key = k.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                errors.push(FieldError { key, line: Some(i + 1), message: "unknown key".into() });
                continue;
            }
            if entries.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                errors.push(FieldError { key, line: Some(i + 1), message: "duplicate key".into() });
            }
        }

        let mut cfg = SweepConfig::default();
        let mut err = |key: &str, message: String| {
            let line = entries.get(key).map(|e| e.0);
            errors.push(FieldError { key: key.to_string(), line, message });
        };
        let get = |key: &str| entries.get(key).map(|e| e.1.as_str());

        if let Some(v) = get("aperture.sigma") {
            match parse_f64(v) {
                Ok(x) if x > 0.0 && x.is_finite() => cfg.sigma = x,
                Ok(x) => err("aperture.sigma", format!("must be positive, got {x}")),
                Err(e) => err("aperture.sigma", e),
            }
        }
        match get("aperture.kind").unwrap_or("gaussian") {
            "gaussian" => cfg.aperture = ApertureSpec::Gaussian,
            "hard_edge" => match get("aperture.half_width").map(parse_f64) {
                Some(Ok(h)) if h > 0.0 => cfg.aperture = ApertureSpec::HardEdge { half_width: h },
                Some(Ok(h)) => err("aperture.half_width", format!("must be positive, got {h}")),
                Some(Err(e)) => err("aperture.half_width", e),
                None => err("aperture.half_width", "required for a hard-edge aperture".into()),
            },
            "mixture" => match get("aperture.components").map(parse_components) {
                Some(Ok(c)) => cfg.aperture = ApertureSpec::Mixture(c),
                Some(Err(e)) => err("aperture.components", e),
                None => err("aperture.components", "required for a mixture aperture".into()),
            },
            "random_mixture" => cfg.aperture = ApertureSpec::RandomMixture,
            "file" => match get("aperture.file") {
                Some(p) => cfg.aperture = ApertureSpec::File(PathBuf::from(p)),
                None => err("aperture.file", "required for a file aperture".into()),
            },
            other => err("aperture.kind", format!("unknown kind {other:?}")),
        }

        if let Some(v) = get("sweep.s_over_sigma") {
            match parse_list(v) {
                Ok(s) => {
                    if let Err(e) = check_s_grid(&s) {
                        err("sweep.s_over_sigma", e);
                    }
                    cfg.s_grid = s;
                }
                Err(e) => err("sweep.s_over_sigma", e),
            }
        }
        for (key, target) in [("sweep.re_gamma", &mut cfg.re_gamma), ("sweep.im_gamma", &mut cfg.im_gamma)] {
            if let Some(v) = get(key) {
                match parse_list(v) {
                    Ok(list) if list.is_empty() => err(key, "must not be empty".into()),
                    Ok(list) => {
                        if let Some(bad) = list.iter().find(|x| !(x.abs() <= 1.0)) {
                            err(key, format!("{bad} is outside [-1, 1]"));
                        }
                        *target = list;
                    }
                    Err(e) => err(key, e),
                }
            }
        }
        let too_coherent: Vec<String> = cfg
            .re_gamma
            .iter()
            .flat_map(|&r| cfg.im_gamma.iter().map(move |&i| (r, i)))
            .filter(|(r, i)| r * r + i * i > 1.0 + 1e-12)
            .map(|(r, i)| format!("{r}{i:+}i"))
            .collect();
        if !too_coherent.is_empty() {
            err("sweep.im_gamma", format!("|gamma| > 1 for {}", too_coherent.join(", ")));
        }

        if let Some(v) = get("source.delta") {
            match parse_f64(v) {
                Ok(d) if d > 0.0 && d.is_finite() => cfg.delta = d,
                Ok(d) => err("source.delta", format!("must be positive, got {d}")),
                Err(e) => err("source.delta", e),
            }
        }
        if let Some(v) = get("quantities") {
            let mut qs = Vec::new();
            for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match Quantity::from_name(name) {
                    Some(q) if !qs.contains(&q) => qs.push(q),
                    Some(_) => err("quantities", format!("{name} listed twice")),
                    None => err("quantities", format!("unknown quantity {name:?}")),
                }
            }
            if qs.is_empty() {
                err("quantities", "must not be empty".into());
            }
            cfg.quantities = qs;
        }
        if let Some(v) = get("convention") {
            match v.parse::<Convention>() {
                Ok(c) => cfg.convention = c,
                Err(e) => err("convention", e.to_string()),
            }
        }
        match get("output") {
            None | Some("csv") => cfg.output = OutputFormat::Csv,
            Some("json") => cfg.output = OutputFormat::Json,
            Some(other) => err("output", format!("expected csv or json, got {other:?}")),
        }
        match get("svg") {
            None | Some("false") => cfg.svg = false,
            Some("true") => cfg.svg = true,
            Some(other) => err("svg", format!("expected true or false, got {other:?}")),
        }
        if let Some(v) = get("seed") {
            match v.parse::<u64>() {
                Ok(s) => cfg.seed = s,
                Err(e) => err("seed", e.to_string()),
            }
        }
        if let Some(v) = get("gram.modes") {
            match v.parse::<usize>() {
                Ok(m) if m >= 1 => cfg.gram_modes = m,
                Ok(_) => err("gram.modes", "must be at least 1".into()),
                Err(e) => err("gram.modes", e.to_string()),
            }
        }

        if errors.is_empty() {
            Ok(cfg)
        } else {
            errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
            Err(ConfigError::Fields(errors))
        }
    }

    /// Builds the aperture; lengths are absolute.
    pub fn build_aperture(&self) -> superres_core::Result<Aperture> {
        match &self.aperture {
            ApertureSpec::Gaussian => Aperture::gaussian(self.sigma),
            ApertureSpec::HardEdge { half_width } => Aperture::hard_edge(*half_width),
            ApertureSpec::Mixture(c) => Aperture::gaussian_mixture(c.clone()),
            ApertureSpec::RandomMixture => Aperture::gaussian_mixture(random_mixture(self.seed, self.sigma)),
            ApertureSpec::File(p) => Aperture::from_file(p),
        }
    }
}

/// Normalized Gaussian mixture with one to three components of width in
/// `[sigma / 2, 2 sigma]`.
pub fn random_mixture(seed: u64, sigma: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=3);
    let mut comps: Vec<(f64, f64)> = (0..k).map(|_| (rng.gen_range(0.1..1.0), sigma * rng.gen_range(0.5..2.0))).collect();
    let total: f64 = comps.iter().map(|c| c.0).sum();
    for c in &mut comps {
        c.0 /= total;
    }
    comps
}

fn parse_f64(v: &str) -> Result<f64, String> {
    v.trim().parse::<f64>().map_err(|_| format!("{v:?} is not a number"))
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    let v = v.trim();
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range {v:?} must be start:stop:count"));
        }
        let (a, b) = (parse_f64(parts[0])?, parse_f64(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| format!("{:?} is not a count", parts[2]))?;
        return match n {
            0 => Err("range count must be positive".into()),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse_f64).collect()
}

fn parse_components(v: &str) -> Result<Vec<(f64, f64)>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|c| {
            let (w, s) = c.split_once(':').ok_or_else(|| format!("component {c:?} must be weight:sigma"))?;
            Ok((parse_f64(w)?, parse_f64(s)?))
        })
        .collect()
}

fn check_s_grid(s: &[f64]) -> Result<(), String> {
    if s.is_empty() {
        return Err("must not be empty".into());
    }
    if let Some(bad) = s.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(format!("{bad} is not a non-negative separation"));
    }
    if s.iter().skip(1).any(|&x| x == 0.0) {
        return Err("only the first separation may be zero".into());
    }
    if s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err("must be strictly increasing".into());
    }
    Ok(())
}
