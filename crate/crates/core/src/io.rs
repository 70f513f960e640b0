//! JSON and CSV artifacts.
//!
//! Floats are always written as `{:.16e}` (17 significant digits), so the
//! same run produces byte-identical files and values survive a round trip.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dispersion::{kernel_condition_residual, theta, Params};
use crate::error::{Error, Result};
use crate::kernel_finder::{Construction, DimensionCheck, KernelSpec, TransversalityReport};
use crate::operator::{Grid, WaveField};

/// Pretty JSON with fixed-width floats.
struct FixedFloats<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", f64::from(v))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

/// Kernel point as written by `find-kernel` and read by `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDocument {
    pub k1: u32,
    pub k2: u32,
    pub k3: u32,
    pub xi: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    pub a: f64,
    pub thetas: [f64; 3],
    pub residuals: [f64; 3],
    pub exact_dimension: Option<u32>,
    pub dimension_check: Option<DimensionCheck>,
    pub construction: Construction,
    pub transversality: TransversalityReport,
}

impl KernelDocument {
    pub fn new(spec: &KernelSpec, transversality: TransversalityReport) -> Self {
        let p = spec.params;
        let [k1, k2, k3] = spec.wavenumbers;
        KernelDocument {
            k1,
            k2,
            k3,
            xi: p.xi,
            alpha: p.alpha,
            lambda: p.lambda,
            mu: p.mu,
            a: spec.a,
            thetas: spec.thetas.map(|t| t.theta),
            residuals: spec.residuals,
            exact_dimension: spec.exact_dimension,
            dimension_check: spec.dimension_check.clone(),
            construction: spec.construction,
            transversality,
        }
    }

    /// Rebuilds the spec, recomputing thetas and residuals from the stored
    /// parameters.
    pub fn spec(&self) -> Result<KernelSpec> {
        let params = Params::new(self.mu, self.alpha, self.lambda, self.xi)?;
        let ks = [self.k1, self.k2, self.k3];
        let mut residuals = [0.0; 3];
        for (r, &k) in residuals.iter_mut().zip(&ks) {
            *r = kernel_condition_residual(&params, k)?;
        }
        let spec = KernelSpec {
            wavenumbers: ks,
            params,
            thetas: ks.map(|k| theta(&params, k)),
            a: self.a,
            residuals,
            exact_dimension: self.exact_dimension,
            dimension_check: self.dimension_check.clone(),
            construction: self.construction,
        };
        if !spec.is_certified() {
            return Err(Error::Parse(format!("stored point is not a certified kernel (residuals {residuals:?})")));
        }
        Ok(spec)
    }
}

/// Flat CSV: `n_modes, n_s`, then the `eta_hat` row, then one row of `phi`
/// per mode.
pub fn write_field_csv(path: &Path, field: &WaveField) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
    w.write_record([field.n_modes.to_string(), field.n_s.to_string()])?;
    w.write_record(field.eta_hat.iter().map(|&v| fmt(v)))?;
    for row in field.phi.chunks(field.n_s + 1) {
        w.write_record(row.iter().map(|&v| fmt(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_csv(path: &Path) -> Result<WaveField> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(open(path)?);
    let mut records = r.records();
    let mut next = || -> Result<Vec<f64>> {
        let rec = records.next().ok_or_else(|| Error::Parse("truncated field file".into()))??;
        rec.iter().map(parse).collect()
    };
    let header = next()?;
    if header.len() != 2 || header.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
        return Err(Error::Parse("header must be n_modes, n_s".into()));
    }
    let (n_modes, n_s) = (header[0] as usize, header[1] as usize);
    let eta_hat = next()?;
    if eta_hat.len() != n_modes {
        return Err(Error::Parse(format!("expected {n_modes} surface coefficients, got {}", eta_hat.len())));
    }
    let mut phi = Vec::with_capacity(n_modes * (n_s + 1));
    for j in 0..n_modes {
        let row = next()?;
        if row.len() != n_s + 1 {
            return Err(Error::Parse(format!("row {j} of phi has {} values, expected {}", row.len(), n_s + 1)));
        }
        phi.extend(row);
    }
    Ok(WaveField { n_modes, n_s, eta_hat, phi })
}

/// Columns `q, height`.
pub fn write_profile_csv(path: &Path, profile: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["q", "height"])?;
    for &(q, h) in profile {
        w.write_record([fmt(q), fmt(h)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profile_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    r.records()
        .map(|rec| {
            let rec = rec?;
            match (rec.get(0), rec.get(1)) {
                (Some(q), Some(h)) => Ok((parse(q)?, parse(h)?)),
                _ => Err(Error::Parse("profile rows need two columns".into())),
            }
        })
        .collect()
}

/// Checks that a field read from disk fits a grid.
pub fn check_field(field: &WaveField, grid: &Grid) -> Result<()> {
    if field.n_modes != grid.n_modes || field.n_s != grid.n_s {
        return Err(Error::GridMismatch(format!(
            "field is {}x{}, grid is {}x{}",
            field.n_modes, field.n_s, grid.n_modes, grid.n_s
        )));
    }
    if field.eta_hat.len() != field.n_modes || field.phi.len() != field.n_modes * (field.n_s + 1) {
        return Err(Error::Parse("field arrays do not match their header".into()));
    }
    Ok(())
}
