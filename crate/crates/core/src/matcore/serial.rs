//! Serde encodings for complex matrices: row-major nested arrays whose
//! entries are `[re, im]` pairs. Non-finite values are rejected both ways.

use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{GenMat, C64};

pub type Rows = Vec<Vec<[f64; 2]>>;

pub fn to_rows(m: &GenMat) -> Option<Rows> {
    let mut rows = Vec::with_capacity(m.nrows());
    for i in 0..m.nrows() {
        let mut row = Vec::with_capacity(m.ncols());
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return None;
            }
            row.push([z.re, z.im]);
        }
        rows.push(row);
    }
    Some(rows)
}

pub fn from_rows(rows: &Rows) -> Result<GenMat, String> {
    let r = rows.len();
    let c = rows.first().map(|row| row.len()).unwrap_or(0);
    if rows.iter().any(|row| row.len() != c) {
        return Err("ragged matrix rows".into());
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err("non-finite matrix entry".into());
    }
    Ok(GenMat::from_fn(r, c, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// `#[serde(with = "serial::mat")]` for a single [`GenMat`].
pub mod mat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &GenMat, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).ok_or_else(|| S::Error::custom("non-finite matrix entry"))?.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GenMat, D::Error> {
        from_rows(&Rows::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "serial::mats")]` for a list of matrices.
pub mod mats {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[GenMat], s: S) -> Result<S::Ok, S::Error> {
        let rows: Option<Vec<Rows>> = ms.iter().map(to_rows).collect();
        rows.ok_or_else(|| S::Error::custom("non-finite matrix entry"))?.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<GenMat>, D::Error> {
        Vec::<Rows>::deserialize(d)?.iter().map(|r| from_rows(r).map_err(D::Error::custom)).collect()
    }
}

/// `#[serde(with = "serial::vector")]` for a column vector.
pub mod vector {
    use super::*;
    use crate::matcore::CVec;

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(S::Error::custom("non-finite vector entry"));
        }
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        if raw.iter().flatten().any(|x| !x.is_finite()) {
            return Err(D::Error::custom("non-finite vector entry"));
        }
        Ok(CVec::from_iterator(raw.len(), raw.iter().map(|p| C64::new(p[0], p[1]))))
    }
}
