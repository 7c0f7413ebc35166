//! JSON formats for Kraus lists and local observables.
//!
//! Kraus file: `{"dim": D, "kraus": [[[re, im], …], …]}`, one row-major entry
//! list of length `D²` per Kraus operator. Observable file:
//! `{"support": [m, n], "matrix": [[re, im], …]}`, row-major, `d^{2L}`
//! entries for `L = n − m + 1` sites. Floats are written in shortest
//! round-trip form, so write-then-read reproduces every bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cpmaps::CPMap;
use crate::error::{Error, Result};
use crate::matcore::{CMat, C64};
use crate::mps::LocalObservable;

#[derive(Serialize, Deserialize)]
struct KrausFile {
    dim: usize,
    kraus: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct ObservableFile {
    support: [i64; 2],
    matrix: Vec<[f64; 2]>,
}

fn entries(m: &CMat) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::Format(format!("entry ({i}, {j}) is not finite")));
            }
            out.push([z.re, z.im]);
        }
    }
    Ok(out)
}

fn matrix(size: usize, list: &[[f64; 2]], what: &str) -> Result<CMat> {
    if list.len() != size * size {
        return Err(Error::Format(format!("{what} has {} entries, expected {}", list.len(), size * size)));
    }
    Ok(CMat::from_row_iterator(size, size, list.iter().map(|&[re, im]| C64::new(re, im))))
}

pub fn kraus_to_json(phi: &CPMap) -> Result<String> {
    let kraus = phi.kraus().iter().map(entries).collect::<Result<_>>()?;
    Ok(serde_json::to_string(&KrausFile { dim: phi.dim(), kraus })?)
}

pub fn kraus_from_json(text: &str) -> Result<CPMap> {
    let file: KrausFile = serde_json::from_str(text)?;
    if file.dim == 0 {
        return Err(Error::Format("dim must be positive".into()));
    }
    let kraus = file
        .kraus
        .iter()
        .enumerate()
        .map(|(i, k)| matrix(file.dim, k, &format!("Kraus operator {i}")))
        .collect::<Result<Vec<_>>>()?;
    CPMap::new(kraus)
}

pub fn read_kraus(path: &Path) -> Result<CPMap> {
    kraus_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_kraus(path: &Path, phi: &CPMap) -> Result<()> {
    Ok(std::fs::write(path, kraus_to_json(phi)?)?)
}

pub fn observable_to_json(o: &LocalObservable) -> Result<String> {
    let (m, n) = o.support();
    Ok(serde_json::to_string(&ObservableFile { support: [m, n], matrix: entries(o.matrix())? })?)
}

/// The spin dimension is inferred from the entry count and support length.
pub fn observable_from_json(text: &str) -> Result<LocalObservable> {
    let file: ObservableFile = serde_json::from_str(text)?;
    let [m, n] = file.support;
    if m > n {
        return Err(Error::Support(format!("empty support [{m}, {n}]")));
    }
    let len = (n - m + 1) as u32;
    let size = (file.matrix.len() as f64).sqrt().round() as usize;
    let d = (size as f64).powf(1.0 / len as f64).round() as usize;
    if d == 0 || d.checked_pow(len) != Some(size) || size * size != file.matrix.len() {
        return Err(Error::Format(format!(
            "{} entries do not form a d^{len} x d^{len} matrix",
            file.matrix.len()
        )));
    }
    LocalObservable::new((m, n), matrix(size, &file.matrix, "observable")?, d)
}

pub fn read_observable(path: &Path) -> Result<LocalObservable> {
    observable_from_json(&std::fs::read_to_string(path)?)
}
