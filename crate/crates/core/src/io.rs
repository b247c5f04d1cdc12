//! JSON formats.
//!
//! - matrix: `{"rows": r, "cols": c, "data": [[re, im], ...]}`, row-major;
//! - subspace: its frame matrix;
//! - correspondence: `block_sizes`, `module_dim`, `gram` (`module_dim × module_dim`
//!   nested array of algebra elements), `left_action` and `right_action`
//!   (one matrix per algebra basis element);
//! - representation: `correspondence` (inline object or path relative to the
//!   representation file), `multiplicities`, `v_on_basis`.
//!
//! Floats are written with 17 significant digits.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::correspondence::{Algebra, Correspondence, StarRepresentation};
use crate::covrep::CovariantRep;
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, Subspace, Tolerance, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                data.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<&MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<CMatrix> {
        if j.data.len() != j.rows * j.cols {
            return Err(Error::Dimension(format!(
                "matrix declares {}x{} but carries {} entries",
                j.rows,
                j.cols,
                j.data.len()
            )));
        }
        let m = CMatrix::from_row_iterator(
            j.rows,
            j.cols,
            j.data.iter().map(|[re, im]| C64::new(*re, *im)),
        );
        crate::numerics::check_finite(&m)?;
        Ok(m)
    }
}

/// `#[serde(with = "crate::io::matrix")]` for `CMatrix` fields.
pub mod matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        CMatrix::try_from(&j).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "crate::io::subspace")]` for `Subspace` fields.
pub mod subspace {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(sub: &Subspace, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(sub.frame()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Subspace, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        let m = CMatrix::try_from(&j).map_err(serde::de::Error::custom)?;
        Subspace::from_frame(m, &Tolerance::default()).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceJson {
    pub block_sizes: Vec<usize>,
    pub module_dim: usize,
    pub gram: Vec<Vec<MatrixJson>>,
    pub left_action: Vec<MatrixJson>,
    pub right_action: Vec<MatrixJson>,
}

impl From<&Correspondence> for CorrespondenceJson {
    fn from(c: &Correspondence) -> Self {
        Self {
            block_sizes: c.algebra().block_sizes().to_vec(),
            module_dim: c.module_dim(),
            gram: c
                .gram()
                .iter()
                .map(|row| row.iter().map(MatrixJson::from).collect())
                .collect(),
            left_action: c.left_action().iter().map(MatrixJson::from).collect(),
            right_action: c.right_action().iter().map(MatrixJson::from).collect(),
        }
    }
}

impl CorrespondenceJson {
    pub fn build(&self, tol: &Tolerance) -> Result<Correspondence> {
        let algebra = Algebra::new(self.block_sizes.clone())?;
        let conv = |ms: &[MatrixJson]| ms.iter().map(CMatrix::try_from).collect::<Result<Vec<_>>>();
        let gram = self
            .gram
            .iter()
            .map(|row| conv(row))
            .collect::<Result<Vec<_>>>()?;
        Correspondence::new(
            algebra,
            self.module_dim,
            gram,
            conv(&self.left_action)?,
            conv(&self.right_action)?,
            tol,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorrespondenceRef {
    Inline(CorrespondenceJson),
    Path(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepJson {
    pub correspondence: CorrespondenceRef,
    pub multiplicities: Vec<usize>,
    pub v_on_basis: Vec<MatrixJson>,
}

impl From<&CovariantRep> for RepJson {
    fn from(rep: &CovariantRep) -> Self {
        Self {
            correspondence: CorrespondenceRef::Inline(CorrespondenceJson::from(
                rep.correspondence().as_ref(),
            )),
            multiplicities: rep.sigma().multiplicities().to_vec(),
            v_on_basis: rep.v_on_basis().iter().map(MatrixJson::from).collect(),
        }
    }
}

impl RepJson {
    /// Builds the representation; relative correspondence paths are resolved
    /// against `base_dir`.
    pub fn build(
        &self,
        base_dir: Option<&Path>,
        tol: &Tolerance,
        tensor_cap: usize,
    ) -> Result<CovariantRep> {
        let cj = match &self.correspondence {
            CorrespondenceRef::Inline(c) => c.clone(),
            CorrespondenceRef::Path(p) => {
                let path = match base_dir {
                    Some(dir) if Path::new(p).is_relative() => dir.join(p),
                    _ => Path::new(p).to_path_buf(),
                };
                serde_json::from_str(&std::fs::read_to_string(&path)?)?
            }
        };
        let corr = Arc::new(cj.build(tol)?);
        let sigma = StarRepresentation::new(corr.algebra().clone(), self.multiplicities.clone())?;
        let v = self
            .v_on_basis
            .iter()
            .map(CMatrix::try_from)
            .collect::<Result<Vec<_>>>()?;
        CovariantRep::with_cap(corr, sigma, v, tol, tensor_cap)
    }
}

pub fn read_rep(path: &Path, tol: &Tolerance, tensor_cap: usize) -> Result<CovariantRep> {
    let j: RepJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    j.build(path.parent(), tol, tensor_cap)
}

pub fn write_rep(rep: &CovariantRep, path: &Path) -> Result<()> {
    std::fs::write(path, to_json_string(&RepJson::from(rep))?)?;
    Ok(())
}

/// Compact JSON writer printing every float with 17 significant digits.
struct PreciseFormatter;

impl serde_json::ser::Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let m = CMatrix::from_fn(2, 3, |r, c| C64::new(r as f64 + 0.1, c as f64 / 3.0));
        let s = to_json_string(&MatrixJson::from(&m)).unwrap();
        let back: MatrixJson = serde_json::from_str(&s).unwrap();
        assert_eq!(CMatrix::try_from(&back).unwrap(), m);
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json_string(&vec![0.1_f64, 1.0]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,1.0000000000000000e0]");
    }

    #[test]
    fn bad_entry_count_is_rejected() {
        let j = MatrixJson {
            rows: 2,
            cols: 2,
            data: vec![[0.0, 0.0]],
        };
        assert!(matches!(CMatrix::try_from(&j), Err(Error::Dimension(_))));
    }

    #[test]
    fn rep_roundtrip_through_json() {
        let tol = Tolerance::default();
        let corr = Arc::new(Correspondence::graph(2, &[(0, 1), (1, 1)]).unwrap());
        let sigma = StarRepresentation::new(corr.algebra().clone(), vec![1, 2]).unwrap();
        let mut a = CMatrix::zeros(3, 3);
        a[(1, 0)] = C64::new(1.0, 0.0);
        let mut b = CMatrix::zeros(3, 3);
        b[(2, 1)] = C64::new(0.0, 1.0);
        let rep = CovariantRep::new(corr, sigma, vec![a, b], &tol).unwrap();
        let s = to_json_string(&RepJson::from(&rep)).unwrap();
        let j: RepJson = serde_json::from_str(&s).unwrap();
        let again = j.build(None, &tol, 1 << 18).unwrap();
        assert_eq!(again.tilde(), rep.tilde());
    }
}
