//! JSON matrix files and the number formatting shared by every artifact.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses back
//! to the same `f64`; a write-read-write cycle is therefore byte-identical.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::linalg::{BipartiteDims, ComplexMatrix, HermitianOperator, C64};
use crate::povm::Povm;
use crate::states::{DensityMatrix, Direction};

pub const SCHEMA_VERSION: &str = "1";

/// Pretty JSON with every float in shortest-safe scientific notation.
struct ExactFloats<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if !value.is_finite() {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("cannot write {value} as JSON")));
        }
        write!(w, "{value:.16e}")
    }

    // serde_json routes NaN and infinities here instead of `write_f64`.
    // Absent values are skipped rather than written as null, so a null can
    // only come from a non-finite number.
    fn write_null<W: ?Sized + Write>(&mut self, _w: &mut W) -> io::Result<()> {
        Err(io::Error::new(io::ErrorKind::InvalidData, "non-finite number cannot be written as JSON"))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// Serializes with two-space indentation and 17-digit floats. Non-finite
/// numbers are rejected since JSON cannot carry them.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).map_err(|e| Error::Format(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    State,
    Direction,
    Povm,
    Unitary,
}

/// Split real and imaginary parts, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entries {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Entries {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rm = m.row_major();
        Self { re: rm.iter().map(|z| z.re).collect(), im: rm.iter().map(|z| z.im).collect() }
    }

    pub fn from_slice(v: &[C64]) -> Self {
        Self { re: v.iter().map(|z| z.re).collect(), im: v.iter().map(|z| z.im).collect() }
    }

    pub fn to_matrix(&self, expected_len: usize) -> Result<ComplexMatrix> {
        if self.re.len() != expected_len || self.im.len() != expected_len {
            return Err(Error::Format(format!(
                "expected {expected_len} entries, found re: {}, im: {}",
                self.re.len(),
                self.im.len()
            )));
        }
        if self.re.iter().chain(&self.im).any(|x| !x.is_finite()) {
            return Err(Error::Format("non-finite entry".into()));
        }
        let entries: Vec<C64> = self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)).collect();
        ComplexMatrix::from_row_major(&entries)
    }
}

/// On-disk matrix. Bipartite operators carry `(d²)²` entries, unitaries
/// `d²`. POVMs store one entry set per element under `elements`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub schema_version: String,
    pub kind: MatrixKind,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<Entries>>,
}

impl MatrixFile {
    fn single(kind: MatrixKind, d: usize, m: &ComplexMatrix) -> Self {
        let e = Entries::from_matrix(m);
        Self {
            schema_version: SCHEMA_VERSION.into(),
            kind,
            d,
            re: Some(e.re),
            im: Some(e.im),
            elements: None,
        }
    }

    pub fn state(rho: &DensityMatrix) -> Result<Self> {
        Ok(Self::single(MatrixKind::State, rho.bipartite_dims()?.local(), rho.op().matrix()))
    }

    pub fn direction(delta: &Direction) -> Self {
        Self::single(MatrixKind::Direction, delta.dims().local(), delta.op().matrix())
    }

    pub fn unitary(u: &ComplexMatrix) -> Self {
        Self::single(MatrixKind::Unitary, u.dim(), u)
    }

    pub fn povm(povm: &Povm) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            kind: MatrixKind::Povm,
            d: povm.dims().local(),
            re: None,
            im: None,
            elements: Some(povm.elements().iter().map(|e| Entries::from_matrix(e.matrix())).collect()),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported schema version {:?}", file.schema_version)));
        }
        if file.d == 0 {
            return Err(Error::Format("d must be positive".into()));
        }
        let single = file.re.is_some() || file.im.is_some();
        match (file.kind, single, file.elements.is_some()) {
            (MatrixKind::Povm, false, true) => {}
            (MatrixKind::Povm, _, _) => return Err(Error::Format("povm files carry `elements` only".into())),
            (_, true, false) => {}
            _ => return Err(Error::Format("matrix files carry `re` and `im` only".into())),
        }
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    fn dims(&self) -> Result<BipartiteDims> {
        BipartiteDims::new(self.d)
    }

    fn expect(&self, kind: MatrixKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Format(format!("expected a {kind:?} file, found {:?}", self.kind).to_lowercase()));
        }
        Ok(())
    }

    fn matrix(&self, len: usize) -> Result<ComplexMatrix> {
        let entries = Entries {
            re: self.re.clone().unwrap_or_default(),
            im: self.im.clone().unwrap_or_default(),
        };
        entries.to_matrix(len)
    }

    fn hermitian(&self) -> Result<(HermitianOperator, BipartiteDims)> {
        let dims = self.dims()?;
        let n = dims.total();
        Ok((HermitianOperator::new(self.matrix(n * n)?)?, dims))
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        self.expect(MatrixKind::State)?;
        let (op, dims) = self.hermitian()?;
        DensityMatrix::bipartite(op, dims)
    }

    pub fn to_direction(&self) -> Result<Direction> {
        self.expect(MatrixKind::Direction)?;
        let (op, dims) = self.hermitian()?;
        Direction::new(op, dims)
    }

    pub fn to_unitary(&self) -> Result<ComplexMatrix> {
        self.expect(MatrixKind::Unitary)?;
        let u = self.matrix(self.d * self.d)?;
        let deviation = u.unitarity_deviation();
        if deviation > crate::states::UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub fn to_povm(&self) -> Result<Povm> {
        self.expect(MatrixKind::Povm)?;
        let dims = self.dims()?;
        let n = dims.total();
        let elements = self
            .elements
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|e| HermitianOperator::new(e.to_matrix(n * n)?))
            .collect::<Result<Vec<_>>>()?;
        Povm::new(elements, dims)
    }
}
