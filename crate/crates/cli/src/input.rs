//! System sources, presets, algorithm names and trace CSV input.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use hfconv::hamiltonian::{fcidump, hubbard_ring, native, random_system};
use hfconv::solvers::{core_guess, random_guess, Algorithm, StepPolicy};
use hfconv::{DensityMatrix, ElectronicSystem, Error, OccupationConvention, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Spinless,
    Rhf,
}

impl From<ConventionArg> for OccupationConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Spinless => OccupationConvention::Spinless,
            ConventionArg::Rhf => OccupationConvention::RestrictedClosedShell,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Roothaan,
    LevelShifting,
    /// Armijo backtracking.
    Gradient,
    /// Fixed step `--t`, or `1/alpha` when absent.
    GradientFixed,
    /// Level-Shifting with the first convergent shift of 0, 1, 2, 4, ...
    AutoShift,
}

impl AlgorithmArg {
    pub fn to_algorithm(self, t: Option<f64>, b: f64) -> Algorithm {
        match self {
            AlgorithmArg::Roothaan | AlgorithmArg::AutoShift => Algorithm::Roothaan,
            AlgorithmArg::LevelShifting => Algorithm::LevelShifting(b),
            AlgorithmArg::Gradient => Algorithm::GradientDescent(StepPolicy::backtracking()),
            AlgorithmArg::GradientFixed => Algorithm::GradientDescent(match t {
                Some(t) => StepPolicy::FixedStep(t),
                None => StepPolicy::AlphaFormula,
            }),
        }
    }
}

pub enum SystemSource {
    Fcidump(PathBuf),
    Native(PathBuf),
    Preset(String),
}

impl SystemSource {
    pub fn from_args(path: Option<&Path>, preset: Option<&str>) -> Result<Self> {
        match (path, preset) {
            (Some(p), None) if p.extension().is_some_and(|e| e == "json") => Ok(SystemSource::Native(p.to_path_buf())),
            (Some(p), None) => Ok(SystemSource::Fcidump(p.to_path_buf())),
            (None, Some(s)) => Ok(SystemSource::Preset(s.to_string())),
            _ => Err(Error::InvalidParameter("give exactly one of --system or --preset".into())),
        }
    }

    /// Native files carry their own convention; an explicit conflicting
    /// `--convention` is rejected. Other sources default to RHF.
    pub fn load(&self, convention: Option<ConventionArg>) -> Result<ElectronicSystem> {
        let chosen = convention.map(OccupationConvention::from);
        match self {
            SystemSource::Fcidump(p) => {
                fcidump::read_fcidump(p, chosen.unwrap_or(OccupationConvention::RestrictedClosedShell))
            }
            SystemSource::Native(p) => {
                let system = native::read(p)?;
                match chosen {
                    Some(c) if c != system.convention() => Err(Error::InvalidParameter(format!(
                        "{} declares convention {}, not {}",
                        p.display(),
                        system.convention().name(),
                        c.name()
                    ))),
                    _ => Ok(system),
                }
            }
            SystemSource::Preset(text) => {
                parse_preset(text, chosen.unwrap_or(OccupationConvention::RestrictedClosedShell))
            }
        }
    }
}

fn preset_error(text: &str, message: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("preset `{text}`: {message}"))
}

/// `hubbard-ring:L=..,t=..,U=..,N=..` or `random:n=..,N=..,scale=..,seed=..`.
pub fn parse_preset(text: &str, convention: OccupationConvention) -> Result<ElectronicSystem> {
    let (kind, params) = text.split_once(':').unwrap_or((text, ""));
    let mut pairs = Vec::new();
    for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| preset_error(text, format!("`{item}` is not key=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| preset_error(text, format!("`{v}` is not a number")))?;
        pairs.push((k.trim().to_string(), v));
    }
    let allowed: &[&str] = match kind {
        "hubbard-ring" => &["L", "t", "U", "N"],
        "random" => &["n", "N", "scale", "seed"],
        other => return Err(preset_error(text, format!("unknown preset `{other}`"))),
    };
    if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(preset_error(text, format!("unknown parameter `{k}`")));
    }
    let get = |key: &str, default: Option<f64>| -> Result<f64> {
        pairs
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .or(default)
            .ok_or_else(|| preset_error(text, format!("missing `{key}`")))
    };
    let count = |key: &str, default: Option<f64>| -> Result<usize> {
        let v = get(key, default)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(preset_error(text, format!("`{key}` must be a nonnegative integer")));
        }
        Ok(v as usize)
    };
    match kind {
        "hubbard-ring" => hubbard_ring(
            count("L", None)?,
            get("t", Some(1.0))?,
            get("U", None)?,
            count("N", None)?,
            convention,
        ),
        _ => random_system(
            count("seed", Some(0.0))? as u64,
            count("n", None)?,
            count("N", None)?,
            convention,
            get("scale", Some(1.0))?,
        ),
    }
}

pub fn initial_guess(system: &ElectronicSystem, seed: Option<u64>, kick: f64) -> Result<DensityMatrix> {
    match seed {
        Some(seed) => random_guess(system, seed, kick),
        None => core_guess(system),
    }
}

/// `energy` and `grad_norm` columns of a trace CSV.
pub fn read_trace(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let origin = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Io { path: origin.clone(), message: e.to_string() })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { path: origin.clone(), line: 1, message: e.to_string() })?
        .clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: origin.clone(),
            line: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let (ie, ig) = (column("energy")?, column("grad_norm")?);
    let mut energies = Vec::new();
    let mut grads = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: origin.clone(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| -> Result<f64> {
            record.get(i).unwrap_or("").trim().parse().map_err(|_| Error::Parse {
                path: origin.clone(),
                line,
                message: format!("`{}` is not a number", record.get(i).unwrap_or("")),
            })
        };
        energies.push(field(ie)?);
        grads.push(field(ig)?);
    }
    Ok((energies, grads))
}
