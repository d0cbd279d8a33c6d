//! Native JSON system format:
//!
//! ```text
//! { "n_basis": n, "n_electrons": m, "convention": "spinless" | "rhf",
//!   "core_energy": x, "h": [row-major n*n],
//!   "eri": [[i, j, k, l, value], ...],      // 1-based, canonical, nonzero only
//!   "kinetic": [row-major n*n],             // optional
//!   "nuclear_charge": z }                   // optional
//! ```

use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::{canonical_index, ElectronicSystem, EriTensor, OccupationConvention};
use crate::error::{Error, Result};
use crate::io::json_f64;
use crate::matops::SymMatrix;

#[derive(Deserialize)]
struct NativeDoc {
    n_basis: usize,
    n_electrons: usize,
    convention: String,
    #[serde(default)]
    core_energy: f64,
    h: Vec<f64>,
    #[serde(default)]
    eri: Vec<(usize, usize, usize, usize, f64)>,
    #[serde(default)]
    kinetic: Option<Vec<f64>>,
    #[serde(default)]
    nuclear_charge: Option<u32>,
}

pub fn to_json(system: &ElectronicSystem) -> Value {
    let mut doc = Map::new();
    doc.insert("n_basis".into(), json!(system.n_basis()));
    doc.insert("n_electrons".into(), json!(system.n_electrons()));
    doc.insert("convention".into(), json!(system.convention().name()));
    doc.insert("core_energy".into(), json_f64(system.core_energy()));
    doc.insert("h".into(), Value::Array(system.h().to_row_major().into_iter().map(json_f64).collect()));
    let eri: Vec<Value> = system
        .eri()
        .canonical_entries()
        .filter(|e| e.4 != 0.0)
        .map(|(i, j, k, l, v)| json!([i + 1, j + 1, k + 1, l + 1, json_f64(v)]))
        .collect();
    doc.insert("eri".into(), Value::Array(eri));
    if let Some(k) = system.kinetic() {
        doc.insert("kinetic".into(), Value::Array(k.to_row_major().into_iter().map(json_f64).collect()));
    }
    if let Some(z) = system.nuclear_charge() {
        doc.insert("nuclear_charge".into(), json!(z));
    }
    Value::Object(doc)
}

pub fn to_string(system: &ElectronicSystem) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(system)).expect("in-memory JSON serialization");
    s.push('\n');
    s
}

pub fn from_str(text: &str, origin: &str) -> Result<ElectronicSystem> {
    let doc: NativeDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let invalid = |message: String| Error::Parse { path: origin.to_string(), line: 0, message };
    let n = doc.n_basis;
    let convention = OccupationConvention::parse(&doc.convention).map_err(|e| invalid(e.to_string()))?;
    let h = SymMatrix::from_row_slice(n, &doc.h).map_err(|e| invalid(format!("h: {e}")))?;

    let npair = n * (n + 1) / 2;
    let mut packed = vec![0.0; npair * (npair + 1) / 2];
    let mut seen = vec![false; packed.len()];
    for (pos, &(i, j, k, l, v)) in doc.eri.iter().enumerate() {
        if [i, j, k, l].iter().any(|&x| x == 0 || x > n) {
            return Err(invalid(format!("eri entry {pos}: index out of range 1..={n}")));
        }
        let key = canonical_index(i - 1, j - 1, k - 1, l - 1);
        if seen[key] && (packed[key] - v).abs() > 1e-10 {
            return Err(invalid(format!("eri entry {pos}: conflicts with an earlier entry")));
        }
        seen[key] = true;
        packed[key] = v;
    }
    let eri = EriTensor::from_packed(n, packed).map_err(|e| invalid(e.to_string()))?;
    let mut system = ElectronicSystem::new(h, eri, doc.n_electrons, convention, doc.core_energy)
        .map_err(|e| invalid(e.to_string()))?;
    if let Some(k) = doc.kinetic {
        let k = SymMatrix::from_row_slice(n, &k).map_err(|e| invalid(format!("kinetic: {e}")))?;
        system = system.with_kinetic(k)?;
    }
    if let Some(z) = doc.nuclear_charge {
        system = system.with_nuclear_charge(z);
    }
    Ok(system)
}

pub fn read(path: &Path) -> Result<ElectronicSystem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    from_str(&text, &path.display().to_string())
}

pub fn write(system: &ElectronicSystem, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(system))
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{hubbard_ring, random_system};

    #[test]
    fn round_trip_is_bit_exact() {
        let s = random_system(2, 4, 2, OccupationConvention::Spinless, 0.9).unwrap();
        let text = to_string(&s);
        assert_eq!(from_str(&text, "mem").unwrap(), s);

        let k = SymMatrix::from_diagonal(&[0.5, 1.0, 1.5, 2.0]);
        let with_meta = s.clone().with_kinetic(k).unwrap().with_nuclear_charge(3);
        assert_eq!(from_str(&to_string(&with_meta), "mem").unwrap(), with_meta);
    }

    #[test]
    fn hand_written_document() {
        let text = r#"{"n_basis": 2, "n_electrons": 2, "convention": "rhf", "core_energy": 0.0,
            "h": [0, -1, -1, 0], "eri": [[1,1,1,1,2.0],[2,2,2,2,2.0]]}"#;
        let s = from_str(text, "doc").unwrap();
        assert_eq!(s, hubbard_ring(2, 1.0, 2.0, 2, OccupationConvention::RestrictedClosedShell).unwrap());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(from_str("{", "x").is_err());
        let bad_index = r#"{"n_basis": 1, "n_electrons": 1, "convention": "spinless", "h": [0], "eri": [[2,1,1,1,1.0]]}"#;
        assert!(from_str(bad_index, "x").is_err());
        let bad_conv = r#"{"n_basis": 1, "n_electrons": 1, "convention": "uhf", "h": [0]}"#;
        assert!(from_str(bad_conv, "x").is_err());
    }
}
