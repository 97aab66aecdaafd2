//! JSON system files.
//!
//! ```json
//! {"n": 1, "m": 1, "rep": "slh",
//!  "omega_minus": [[[0, 0]]], "omega_plus": [[[0, 0.5]]],
//!  "c_minus": [[[1.414, 0]]], "c_plus": [[[0, 0]]]}
//! ```
//! Matrices are lists of rows; entries are `[re, im]` pairs or plain numbers.

use crate::matcore::{c, CMat};
use crate::model::{ModelError, Rep, SlhParams, StateSpace};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileRep {
    Slh,
    Complex,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

pub type Rows = Vec<Vec<Entry>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub m: usize,
    pub rep: FileRep,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_minus: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_plus: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_minus: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_plus: Option<Rows>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub a: Option<Rows>,
    #[serde(default, rename = "B", skip_serializing_if = "Option::is_none")]
    pub b: Option<Rows>,
    #[serde(default, rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
    #[serde(default, rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<Rows>,
}

#[derive(Debug, Error)]
pub enum SysFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed system file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing matrix {0}")]
    Missing(&'static str),
    #[error("matrix {name}: {rows} rows, expected {want}")]
    RowCount { name: &'static str, rows: usize, want: usize },
    #[error("matrix {name}: row {row} has {cols} entries, expected {want}")]
    ColCount { name: &'static str, row: usize, cols: usize, want: usize },
    #[error("matrix {name}: entry ({row}, {col}) is not finite")]
    NonFinite { name: &'static str, row: usize, col: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Slh(SlhParams),
    StateSpace(StateSpace),
}

impl Entry {
    fn value(&self) -> crate::matcore::C64 {
        match *self {
            Entry::Real(x) => c(x, 0.0),
            Entry::Complex([re, im]) => c(re, im),
        }
    }
}

fn to_matrix(name: &'static str, rows: &Option<Rows>, want: (usize, usize)) -> Result<CMat, SysFileError> {
    let rows = rows.as_ref().ok_or(SysFileError::Missing(name))?;
    // an empty list stands for a matrix with zero rows
    if rows.len() != want.0 {
        return Err(SysFileError::RowCount { name, rows: rows.len(), want: want.0 });
    }
    let mut out = CMat::zeros(want.0, want.1);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != want.1 {
            return Err(SysFileError::ColCount { name, row: i, cols: row.len(), want: want.1 });
        }
        for (j, e) in row.iter().enumerate() {
            let z = e.value();
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(SysFileError::NonFinite { name, row: i, col: j });
            }
            out[(i, j)] = z;
        }
    }
    Ok(out)
}

fn from_matrix(m: &CMat, real: bool) -> Rows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| {
                    let z = m[(i, j)];
                    if real && z.im == 0.0 {
                        Entry::Real(z.re)
                    } else {
                        Entry::Complex([z.re, z.im])
                    }
                })
                .collect()
        })
        .collect()
}

impl SystemFile {
    pub fn into_system(&self) -> Result<System, SysFileError> {
        let (n, m) = (self.n, self.m);
        match self.rep {
            FileRep::Slh => {
                let om = to_matrix("omega_minus", &self.omega_minus, (n, n))?;
                let op = to_matrix("omega_plus", &self.omega_plus, (n, n))?;
                let cm = to_matrix("c_minus", &self.c_minus, (m, n))?;
                let cp = to_matrix("c_plus", &self.c_plus, (m, n))?;
                let p = SlhParams::new(om, op, cm, cp)?;
                let h = p.hermitian_residual();
                if h > crate::model::STRUCT_TOL {
                    return Err(ModelError::NonHermitian(h).into());
                }
                Ok(System::Slh(p))
            }
            FileRep::Complex | FileRep::Quadrature => {
                let a = to_matrix("A", &self.a, (2 * n, 2 * n))?;
                let b = to_matrix("B", &self.b, (2 * n, 2 * m))?;
                let cc = to_matrix("C", &self.c, (2 * m, 2 * n))?;
                let d = to_matrix("D", &self.d, (2 * m, 2 * m))?;
                let rep = if self.rep == FileRep::Complex { Rep::Complex } else { Rep::Quadrature };
                Ok(System::StateSpace(StateSpace::new(rep, a, b, cc, d)?))
            }
        }
    }

    pub fn from_slh(p: &SlhParams) -> SystemFile {
        SystemFile {
            n: p.n,
            m: p.m,
            rep: FileRep::Slh,
            name: None,
            omega_minus: Some(from_matrix(&p.omega_minus, false)),
            omega_plus: Some(from_matrix(&p.omega_plus, false)),
            c_minus: Some(from_matrix(&p.c_minus, false)),
            c_plus: Some(from_matrix(&p.c_plus, false)),
            a: None,
            b: None,
            c: None,
            d: None,
        }
    }

    pub fn from_state_space(ss: &StateSpace) -> SystemFile {
        let real = ss.rep == Rep::Quadrature;
        SystemFile {
            n: ss.n,
            m: ss.m,
            rep: if real { FileRep::Quadrature } else { FileRep::Complex },
            name: None,
            omega_minus: None,
            omega_plus: None,
            c_minus: None,
            c_plus: None,
            a: Some(from_matrix(&ss.a, real)),
            b: Some(from_matrix(&ss.b, real)),
            c: Some(from_matrix(&ss.c, real)),
            d: Some(from_matrix(&ss.d, real)),
        }
    }
}

pub fn parse_str(text: &str) -> Result<System, SysFileError> {
    let f: SystemFile = serde_json::from_str(text)?;
    f.into_system()
}

pub fn parse_system_file(path: &Path) -> Result<System, SysFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SysFileError::Io { path: path.display().to_string(), source })?;
    parse_str(&text)
}

pub fn to_json(sys: &System) -> String {
    let f = match sys {
        System::Slh(p) => SystemFile::from_slh(p),
        System::StateSpace(ss) => SystemFile::from_state_space(ss),
    };
    serde_json::to_string_pretty(&f).expect("plain data")
}

/// Realization in the quadrature representation for any parsed system.
pub fn quadrature_of(sys: &System) -> Result<StateSpace, ModelError> {
    match sys {
        System::Slh(p) => crate::model::to_quadrature(&crate::model::build_complex_ss(p)?),
        System::StateSpace(ss) => crate::model::to_quadrature(ss),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::random_slh;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DPA: &str = r#"{"n": 1, "m": 1, "rep": "slh",
        "omega_minus": [[[0, 0]]], "omega_plus": [[[0, 0.5]]],
        "c_minus": [[[1.4142135623730951, 0]]], "c_plus": [[[0, 0]]]}"#;

    #[test]
    fn dpa_file_round_trips() {
        let sys = parse_str(DPA).unwrap();
        let again = parse_str(&to_json(&sys)).unwrap();
        assert_eq!(sys, again);
        let System::Slh(p) = sys else { panic!() };
        assert_eq!(p.omega_plus[(0, 0)], c(0.0, 0.5));
    }

    #[test]
    fn random_values_round_trip_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let sys = System::Slh(random_slh(&mut rng, 3, 2));
            let back = parse_str(&to_json(&sys)).unwrap();
            let (System::Slh(a), System::Slh(b)) = (&sys, &back) else { panic!() };
            for (x, y) in a.c_plus.iter().zip(b.c_plus.iter()).chain(a.omega_minus.iter().zip(b.omega_minus.iter())) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn bad_shape_names_matrix() {
        let text = r#"{"n": 1, "m": 1, "rep": "quadrature",
            "A": [[1, 0], [0, 1], [0, 0]], "B": [[1, 0], [0, 1]],
            "C": [[1, 0], [0, 1]], "D": [[1, 0], [0, 1]]}"#;
        let e = parse_str(text).unwrap_err();
        assert!(matches!(e, SysFileError::RowCount { name: "A", rows: 3, want: 2 }));
        assert!(e.to_string().contains("matrix A"));
        let text = text.replace("[[1, 0], [0, 1], [0, 0]]", "[[1, 0], [0, 1, 2]]");
        let e = parse_str(&text).unwrap_err();
        assert!(matches!(e, SysFileError::ColCount { name: "A", row: 1, cols: 3, want: 2 }));
    }

    #[test]
    fn quadrature_file_with_plain_numbers() {
        let text = r#"{"n": 1, "m": 1, "rep": "quadrature",
            "A": [[-1, 0], [0, 1]], "B": [[0, 1], [0, 0]],
            "C": [[0, 1], [0, 0]], "D": [[1, 0], [0, 1]]}"#;
        let System::StateSpace(ss) = parse_str(text).unwrap() else { panic!() };
        assert!(crate::model::check_physical_realizability(&ss, 1e-12).passed);
    }

    #[test]
    fn non_hermitian_and_malformed_rejected() {
        let text = DPA.replace(r#""omega_minus": [[[0, 0]]]"#, r#""omega_minus": [[[0, 1]]]"#);
        assert!(matches!(parse_str(&text), Err(SysFileError::Model(ModelError::NonHermitian(_)))));
        assert!(matches!(parse_str("{"), Err(SysFileError::Json(_))));
        let text = DPA.replace(r#""c_plus": [[[0, 0]]]"#, r#""extra": 1"#);
        assert!(parse_str(&text).is_err());
    }
}
