//! FCIDUMP reader and writer.
//!
//! Header: `&FCI NORB=<n>,NELEC=<m>,MS2=<s>,` with optional `ORBSYM=...`,
//! `ISYM=...` and other keys (ignored), closed by `&END` or `/`.
//! Assignments may be separated by commas, spaces or newlines.
//!
//! Body: `<value> <i> <j> <k> <l>` with 1-based indices in chemist notation.
//! All four nonzero gives `(ij|kl)`; `k = l = 0` gives `h_ij`; all zero gives
//! the core energy. Orbital-energy lines (`i > 0`, `j = k = l = 0`) are
//! skipped. Repeated entries of one symmetry class must agree to 1e−10.
//!
//! Rejected: `MS2 ≠ 0`, indices above `NORB`, any other index pattern.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::{canonical_index, pair_index, ElectronicSystem, EriTensor, OccupationConvention};
use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::matops::SymMatrix;

const DUPLICATE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct FcidumpHeader {
    pub norb: usize,
    pub nelec: usize,
    pub ms2: i64,
}

pub fn read_fcidump(path: &Path, convention: OccupationConvention) -> Result<ElectronicSystem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_fcidump(&text, &path.display().to_string(), convention)
}

pub fn parse_fcidump(text: &str, origin: &str, convention: OccupationConvention) -> Result<ElectronicSystem> {
    let err = |line: usize, message: String| Error::Parse { path: origin.to_string(), line, message };
    let lines: Vec<&str> = text.lines().collect();

    let (header, body_start) = parse_header(&lines).map_err(|(line, msg)| err(line, msg))?;
    if header.ms2 != 0 {
        return Err(err(1, format!("MS2={} is not supported (closed-shell or spinless only)", header.ms2)));
    }
    let n = header.norb;
    if n == 0 {
        return Err(err(1, "NORB must be positive".into()));
    }

    let mut one: HashMap<usize, (f64, usize)> = HashMap::new();
    let mut two: HashMap<usize, (f64, usize)> = HashMap::new();
    let mut core: Option<(f64, usize)> = None;

    for (offset, raw) in lines[body_start..].iter().enumerate() {
        let lineno = body_start + offset + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(err(lineno, format!("expected '<value> i j k l', found {} fields", fields.len())));
        }
        let value = parse_value(fields[0]).ok_or_else(|| err(lineno, format!("invalid number '{}'", fields[0])))?;
        if !value.is_finite() {
            return Err(err(lineno, "non-finite integral value".into()));
        }
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&fields[1..]) {
            *slot = tok
                .parse::<usize>()
                .map_err(|_| err(lineno, format!("invalid orbital index '{tok}'")))?;
            if *slot > n {
                return Err(err(lineno, format!("orbital index {} exceeds NORB={n}", *slot)));
            }
        }
        let [i, j, k, l] = idx;
        let check = |map: &mut HashMap<usize, (f64, usize)>, key: usize| -> Result<()> {
            if let Some(&(prev, prev_line)) = map.get(&key) {
                if (prev - value).abs() > DUPLICATE_TOL {
                    return Err(err(
                        lineno,
                        format!("conflicting duplicate of the entry on line {prev_line}: {prev} vs {value}"),
                    ));
                }
                return Ok(());
            }
            map.insert(key, (value, lineno));
            Ok(())
        };
        match (i, j, k, l) {
            (0, 0, 0, 0) => {
                if let Some((prev, prev_line)) = core {
                    if (prev - value).abs() > DUPLICATE_TOL {
                        return Err(err(lineno, format!("conflicting core energy, first given on line {prev_line}")));
                    }
                } else {
                    core = Some((value, lineno));
                }
            }
            (i, 0, 0, 0) if i > 0 => {}
            (i, j, 0, 0) if i > 0 && j > 0 => check(&mut one, pair_index(i - 1, j - 1))?,
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                check(&mut two, canonical_index(i - 1, j - 1, k - 1, l - 1))?
            }
            _ => return Err(err(lineno, format!("unsupported index pattern {i} {j} {k} {l}"))),
        }
    }

    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            if let Some(&(v, _)) = one.get(&pair_index(i, j)) {
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
    }
    let npair = n * (n + 1) / 2;
    let mut packed = vec![0.0; npair * (npair + 1) / 2];
    for (key, (v, _)) in two {
        packed[key] = v;
    }
    let eri = EriTensor::from_packed(n, packed)?;
    ElectronicSystem::new(SymMatrix::new(h)?, eri, header.nelec, convention, core.map_or(0.0, |c| c.0))
        .map_err(|e| err(1, e.to_string()))
}

fn parse_value(tok: &str) -> Option<f64> {
    tok.parse::<f64>().ok().or_else(|| tok.replace(['D', 'd'], "E").parse::<f64>().ok())
}

/// Returns the header and the index of the first body line.
fn parse_header(lines: &[&str]) -> std::result::Result<(FcidumpHeader, usize), (usize, String)> {
    let first = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or((1, "empty file".to_string()))?;
    let opening = lines[first].trim_start();
    if !opening.to_ascii_uppercase().starts_with("&FCI") {
        return Err((first + 1, "expected '&FCI' namelist header".into()));
    }

    let mut content = String::new();
    let mut end = None;
    for (i, raw) in lines.iter().enumerate().skip(first) {
        let mut text = raw.to_string();
        if i == first {
            text = text.trim_start()[4..].to_string();
        }
        let upper = text.to_ascii_uppercase();
        if let Some(pos) = upper.find("&END") {
            content.push_str(&text[..pos]);
            end = Some(i);
            break;
        }
        if text.trim() == "/" || text.trim_end().ends_with('/') {
            let trimmed = text.trim_end();
            content.push_str(&trimmed[..trimmed.len() - 1]);
            end = Some(i);
            break;
        }
        content.push_str(&text);
        content.push(' ');
    }
    let end = end.ok_or((first + 1, "header is not terminated by '&END' or '/'".to_string()))?;

    let normalized = content.replace('=', " = ").replace(',', " ");
    let tokens: Vec<&str> = normalized.split_whitespace().collect();
    let mut values: HashMap<String, Vec<String>> = HashMap::new();
    let mut current: Option<String> = None;
    let mut i = 0;
    while i < tokens.len() {
        if i + 1 < tokens.len() && tokens[i + 1] == "=" {
            let key = tokens[i].to_ascii_uppercase();
            values.entry(key.clone()).or_default();
            current = Some(key);
            i += 2;
            continue;
        }
        if tokens[i] == "=" {
            return Err((first + 1, "dangling '=' in header".into()));
        }
        match &current {
            Some(key) => values.get_mut(key).unwrap().push(tokens[i].to_string()),
            None => return Err((first + 1, format!("value '{}' before any key in header", tokens[i]))),
        }
        i += 1;
    }

    let scalar = |key: &str| -> std::result::Result<Option<i64>, (usize, String)> {
        match values.get(key) {
            None => Ok(None),
            Some(v) if v.len() == 1 => v[0]
                .parse::<i64>()
                .map(Some)
                .map_err(|_| (first + 1, format!("{key} must be an integer, found '{}'", v[0]))),
            Some(v) => Err((first + 1, format!("{key} expects one value, found {}", v.len()))),
        }
    };
    let norb = scalar("NORB")?.ok_or((first + 1, "header lacks NORB".to_string()))?;
    let nelec = scalar("NELEC")?.ok_or((first + 1, "header lacks NELEC".to_string()))?;
    let ms2 = scalar("MS2")?.unwrap_or(0);
    if norb < 0 || nelec < 0 {
        return Err((first + 1, "NORB and NELEC must be non-negative".into()));
    }
    Ok((FcidumpHeader { norb: norb as usize, nelec: nelec as usize, ms2 }, end + 1))
}

/// FCIDUMP text with every nonzero canonical integral, 17 significant digits.
pub fn write_fcidump(system: &ElectronicSystem) -> String {
    let n = system.n_basis();
    let mut out = String::new();
    let _ = writeln!(out, "&FCI NORB={n},NELEC={},MS2=0,", system.n_electrons());
    let _ = writeln!(out, " ORBSYM={}", vec!["1"; n].join(","));
    let _ = writeln!(out, " ISYM=1,");
    let _ = writeln!(out, "&END");
    for (i, j, k, l, v) in system.eri().canonical_entries() {
        if v != 0.0 {
            let _ = writeln!(out, "{} {} {} {} {}", fmt17(v), i + 1, j + 1, k + 1, l + 1);
        }
    }
    let h = system.h();
    for i in 0..n {
        for j in 0..=i {
            if h[(i, j)] != 0.0 {
                let _ = writeln!(out, "{} {} {} 0 0", fmt17(h[(i, j)]), i + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "{} 0 0 0 0", fmt17(system.core_energy()));
    out
}
