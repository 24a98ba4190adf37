//! JSON layout helpers. Matrices are written row-major as arrays of rows and every
//! top-level document carries a schema version.

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CglError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level wrapper written by [`to_json`].
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    pub data: T,
}

pub fn to_json<T: Serialize>(kind: &str, value: &T) -> Result<String> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind: kind.to_string(),
        data: value,
    };
    Ok(serde_json::to_string_pretty(&env)?)
}

pub fn from_json<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text)?;
    if env.schema_version != SCHEMA_VERSION {
        return Err(CglError::Input(format!(
            "unsupported schema version {} (expected {SCHEMA_VERSION})",
            env.schema_version
        )));
    }
    if env.kind != kind {
        return Err(CglError::Input(format!("expected a '{kind}' document, found '{}'", env.kind)));
    }
    Ok(env.data)
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Build a matrix from rows; `cols` is used when there are no rows.
pub fn rows_to_matrix(rows: &[Vec<f64>], cols: usize) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(cols);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CglError::Shape("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub mod vector {
    use super::*;
    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DVector<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(DVector::from_vec(v))
    }
}

pub mod vectors {
    use super::*;
    pub fn serialize<S: Serializer>(v: &[DVector<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        rows.serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<DVector<f64>>, D::Error> {
        let v = Vec::<Vec<f64>>::deserialize(d)?;
        Ok(v.into_iter().map(DVector::from_vec).collect())
    }
}

pub mod matrix {
    use super::*;
    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        rows_to_matrix(&rows, 0).map_err(serde::de::Error::custom)
    }
}

pub mod opt_matrix {
    use super::*;
    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(matrix_to_rows).serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<DMatrix<f64>>, D::Error> {
        let rows = Option::<Vec<Vec<f64>>>::deserialize(d)?;
        rows.map(|r| rows_to_matrix(&r, 0).map_err(serde::de::Error::custom)).transpose()
    }
}

pub mod opt_vector {
    use super::*;
    pub fn serialize<S: Serializer>(v: &Option<DVector<f64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref().map(|x| x.as_slice().to_vec()).serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<DVector<f64>>, D::Error> {
        Ok(Option::<Vec<f64>>::deserialize(d)?.map(DVector::from_vec))
    }
}
