//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! # default urban environment
//! alpha = 0.37
//! tx_heights_m = 10, 15, 20, 25, 30, 50
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown and repeated keys are
//! errors; missing keys take the defaults listed in [`KEYS`].

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analytic::{MomentMode, PdfChoice};
use crate::error::{Error, Result};
use crate::experiments::SweepConfig;
use crate::scene::ItuParams;

/// Recognised keys with their default values.
pub const KEYS: &[(&str, &str)] = &[
    ("alpha", "0.37"),
    ("beta_per_km2", "188"),
    ("gamma_m", "13.3"),
    ("area_side_m", "775"),
    ("d_correction", "0.05"),
    ("delta_d_m", "2"),
    ("n_samples", "100000"),
    ("n_scenes", "10"),
    ("seed", "1"),
    ("tx_heights_m", "10,15,20,25,30,50"),
    ("rx_heights_m", "2,10,20,30,40,50"),
    ("moment_mode", "paper"),
    ("pdf_choice", "gauss"),
    ("out_dir", "out"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sweep: SweepConfig,
    pub pdf_choice: PdfChoice,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

impl FromStr for MomentMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" => Ok(MomentMode::Paper),
            "derived" => Ok(MomentMode::Derived),
            _ => Err(format!("expected `paper` or `derived`, got `{s}`")),
        }
    }
}

impl FromStr for PdfChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "poly" => Ok(PdfChoice::Poly),
            "gauss" => Ok(PdfChoice::Gauss),
            _ => Err(format!("expected `poly` or `gauss`, got `{s}`")),
        }
    }
}

pub fn moment_mode_name(m: MomentMode) -> &'static str {
    match m {
        MomentMode::Paper => "paper",
        MomentMode::Derived => "derived",
    }
}

pub fn pdf_choice_name(p: PdfChoice) -> &'static str {
    match p {
        PdfChoice::Poly => "poly",
        PdfChoice::Gauss => "gauss",
    }
}

fn value_err(key: &str, reason: impl Into<String>) -> Error {
    Error::ConfigValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_as<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| value_err(key, format!("`{raw}`: {e}")))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',').map(|s| parse_as::<f64>(key, s.trim())).collect()
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut values: Vec<(&str, String)> = KEYS.iter().map(|&(k, v)| (k, v.to_string())).collect();
    let mut seen = BTreeSet::new();
    for (n, raw_line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigSyntax {
                line: line_no,
                reason: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(slot) = values.iter_mut().find(|(k, _)| *k == key) else {
            return Err(Error::ConfigSyntax {
                line: line_no,
                reason: format!("unknown key `{key}`"),
            });
        };
        if !seen.insert(key.to_string()) {
            return Err(Error::ConfigSyntax {
                line: line_no,
                reason: format!("duplicate key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(Error::ConfigSyntax {
                line: line_no,
                reason: format!("empty value for `{key}`"),
            });
        }
        slot.1 = value.to_string();
    }
    let get = |key: &str| -> &str { values.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str()).unwrap_or("") };

    let alpha: f64 = parse_as("alpha", get("alpha"))?;
    let beta: f64 = parse_as("beta_per_km2", get("beta_per_km2"))?;
    let gamma: f64 = parse_as("gamma_m", get("gamma_m"))?;
    let side: f64 = parse_as("area_side_m", get("area_side_m"))?;
    let d: f64 = parse_as("d_correction", get("d_correction"))?;
    let params = ItuParams::new(alpha, beta, gamma, d, side).map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            let key = if name == "patch_side_m" { "area_side_m" } else { name };
            value_err(key, reason)
        }
        other => other,
    })?;

    let sweep = SweepConfig {
        params,
        tx_heights: parse_list("tx_heights_m", get("tx_heights_m"))?,
        rx_heights: parse_list("rx_heights_m", get("rx_heights_m"))?,
        n_samples: parse_as("n_samples", get("n_samples"))?,
        n_scenes: parse_as("n_scenes", get("n_scenes"))?,
        delta_d: parse_as("delta_d_m", get("delta_d_m"))?,
        seed: parse_as("seed", get("seed"))?,
        moment_mode: get("moment_mode").parse().map_err(|e: String| value_err("moment_mode", e))?,
    };
    sweep.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            let key = match name {
                "tx_heights" => "tx_heights_m",
                "rx_heights" => "rx_heights_m",
                "delta_d" => "delta_d_m",
                other => other,
            };
            value_err(key, reason)
        }
        other => other,
    })?;
    Ok(RunConfig {
        sweep,
        pdf_choice: get("pdf_choice").parse().map_err(|e: String| value_err("pdf_choice", e))?,
        out_dir: PathBuf::from(get("out_dir")),
    })
}

impl RunConfig {
    /// Serializes back to a document [`parse_config`] accepts.
    pub fn to_text(&self) -> String {
        let s = &self.sweep;
        let p = &s.params;
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let _ = writeln!(out, "alpha = {}", p.alpha);
        let _ = writeln!(out, "beta_per_km2 = {}", p.beta_per_km2);
        let _ = writeln!(out, "gamma_m = {}", p.gamma_m);
        let _ = writeln!(out, "area_side_m = {}", p.patch_side_m);
        let _ = writeln!(out, "d_correction = {}", p.d_correction);
        let _ = writeln!(out, "delta_d_m = {}", s.delta_d);
        let _ = writeln!(out, "n_samples = {}", s.n_samples);
        let _ = writeln!(out, "n_scenes = {}", s.n_scenes);
        let _ = writeln!(out, "seed = {}", s.seed);
        let _ = writeln!(out, "tx_heights_m = {}", list(&s.tx_heights));
        let _ = writeln!(out, "rx_heights_m = {}", list(&s.rx_heights));
        let _ = writeln!(out, "moment_mode = {}", moment_mode_name(s.moment_mode));
        let _ = writeln!(out, "pdf_choice = {}", pdf_choice_name(self.pdf_choice));
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        out
    }
}
