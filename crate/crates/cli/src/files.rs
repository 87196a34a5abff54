//! JSON layouts for systems, sampled fields and characteristic data.
//!
//! Complex entries are `[re, im]` pairs and matrices are arrays of rows.
//! Floats are written with 17 significant digits and keys in a fixed order,
//! so identical inputs give identical bytes. `FORMATS.md` documents the
//! layouts.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::Value;
use toda_core::liealg::{Series, SeriesTag};
use toda_core::toda::{build_system, ConstraintSet, Geometry, TodaSystem};
use toda_core::{CBlocks, CMatrix, CharacteristicData, GridField, GridSpec, C64};

use crate::error::{CliError, CliResult};

pub const SYSTEM_FORMAT: &str = "toda-system/1";
pub const GRID_FORMAT: &str = "toda-grid/1";
pub const BOUNDARY_FORMAT: &str = "toda-boundary/1";

type Rows = Vec<Vec<[f64; 2]>>;

/// Compact output with `{:.16e}` floats.
struct Sci;

impl serde_json::ser::Formatter for Sci {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if !value.is_finite() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("non-finite value {value}"),
            ));
        }
        write!(w, "{value:.16e}")
    }

    // serde_json routes NaN and infinities here before `write_f64`.
    fn write_null<W: ?Sized + io::Write>(&mut self, _: &mut W) -> io::Result<()> {
        Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "non-finite value",
        ))
    }
}

/// Serializes `value` on one line as an embeddable fragment.
pub fn raw<T: Serialize + ?Sized>(value: &T) -> CliResult<Box<RawValue>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::new(crate::error::Exit::Degenerate, e.to_string()))?;
    let text = String::from_utf8(buf).expect("serde_json writes UTF-8");
    Ok(RawValue::from_string(text).expect("serde_json writes valid JSON"))
}

/// Pretty document with a trailing newline.
pub fn to_document<T: Serialize>(value: &T) -> CliResult<String> {
    let mut out = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::new(crate::error::Exit::Degenerate, e.to_string()))?;
    out.push('\n');
    Ok(out)
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: DeserializeOwned>(origin: &str, text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::input(format!("{origin}: field `{path}`: {}", e.into_inner()))
    })
}

fn check_format(origin: &str, got: &str, want: &str) -> CliResult<()> {
    if got != want {
        return Err(CliError::input(format!(
            "{origin}: field `format`: expected {want:?}, got {got:?}"
        )));
    }
    Ok(())
}

fn matrix_rows(m: &CMatrix) -> Rows {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn matrix_from_rows(field: &str, rows: &Rows) -> CliResult<CMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(CliError::input(format!("field `{field}`: empty matrix")));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(CliError::input(format!(
            "field `{field}[{i}]`: row has {} entries, expected {cols}",
            rows[i].len()
        )));
    }
    let entries = rows
        .iter()
        .flatten()
        .map(|&[re, im]| C64::new(re, im))
        .collect();
    CMatrix::new(rows.len(), cols, entries)
        .map_err(|e| CliError::input(format!("field `{field}`: {e}")))
}

fn matrices(field: &str, list: &[Rows]) -> CliResult<Vec<CMatrix>> {
    list.iter()
        .enumerate()
        .map(|(k, r)| matrix_from_rows(&format!("{field}[{k}]"), r))
        .collect()
}

fn raw_matrices(list: &[CMatrix]) -> CliResult<Vec<Box<RawValue>>> {
    list.iter().map(|m| raw(&matrix_rows(m))).collect()
}

/// Parses `A`–`D` and a rank into a tag.
pub fn series_tag(series: &str, rank: usize) -> CliResult<SeriesTag> {
    let s: Series = series.parse()?;
    Ok(SeriesTag::new(s, rank)?)
}

/// A loaded system file.
#[derive(Debug, Clone)]
pub struct SystemFile {
    pub system: TodaSystem,
    pub c: CBlocks,
    pub metadata: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemJson {
    format: String,
    series: String,
    rank: usize,
    blocks: Vec<usize>,
    #[serde(default)]
    constraint_set: Option<String>,
    c_minus: Vec<Rows>,
    c_plus: Vec<Rows>,
    #[serde(default)]
    metadata: BTreeMap<String, Value>,
}

#[derive(Serialize)]
struct SystemOut<'a> {
    format: &'static str,
    series: String,
    rank: usize,
    blocks: Box<RawValue>,
    constraint_set: &'static str,
    c_minus: Vec<Box<RawValue>>,
    c_plus: Vec<Box<RawValue>>,
    metadata: &'a BTreeMap<String, Value>,
}

impl SystemFile {
    pub fn parse(origin: &str, text: &str) -> CliResult<Self> {
        let json: SystemJson = parse(origin, text)?;
        let at = |e: CliError| e.context(origin);
        check_format(origin, &json.format, SYSTEM_FORMAT)?;
        let tag = series_tag(&json.series, json.rank).map_err(at)?;
        let system = build_system(tag, &json.blocks)
            .map_err(|e| CliError::from(e).context(format!("{origin}: field `blocks`")))?;
        if let Some(name) = &json.constraint_set {
            let declared: ConstraintSet = name.parse().map_err(|e| {
                CliError::from(e).context(format!("{origin}: field `constraint_set`"))
            })?;
            if declared != system.constraint {
                return Err(CliError::input(format!(
                    "{origin}: field `constraint_set`: {declared} does not match {system}"
                )));
            }
        }
        let minus = matrices("c_minus", &json.c_minus).map_err(at)?;
        let plus = matrices("c_plus", &json.c_plus).map_err(at)?;
        let c = CBlocks::new(&system, minus, plus).map_err(|e| {
            CliError::from(e).context(format!("{origin}: fields `c_minus`/`c_plus`"))
        })?;
        Ok(Self {
            system,
            c,
            metadata: json.metadata,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&path.display().to_string(), &read_file(path)?)
    }

    /// Writes the independent half of the coupling blocks.
    pub fn to_json(&self) -> CliResult<String> {
        let n = self.system.c_independent_count();
        to_document(&SystemOut {
            format: SYSTEM_FORMAT,
            series: self.system.tag.series.letter().to_string(),
            rank: self.system.tag.rank,
            blocks: raw(self.system.sizes())?,
            constraint_set: self.system.constraint.name(),
            c_minus: raw_matrices(&self.c.minus_all()[..n])?,
            c_plus: raw_matrices(&self.c.plus_all()[..n])?,
            metadata: &self.metadata,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpecJson {
    z_minus0: f64,
    z_plus0: f64,
    h_minus: f64,
    h_plus: f64,
    n_minus: usize,
    n_plus: usize,
    #[serde(default = "real_geometry")]
    geometry: String,
}

fn real_geometry() -> String {
    "real".into()
}

impl GridSpecJson {
    fn from_spec(spec: &GridSpec) -> Self {
        Self {
            z_minus0: spec.z_minus0,
            z_plus0: spec.z_plus0,
            h_minus: spec.h_minus,
            h_plus: spec.h_plus,
            n_minus: spec.n_minus,
            n_plus: spec.n_plus,
            geometry: match spec.geometry {
                Geometry::Real => "real",
                Geometry::Complex => "complex",
            }
            .into(),
        }
    }

    fn to_spec(&self) -> CliResult<GridSpec> {
        let geometry = match self.geometry.as_str() {
            "real" => Geometry::Real,
            "complex" => Geometry::Complex,
            other => {
                return Err(CliError::input(format!(
                    "field `grid.geometry`: expected \"real\" or \"complex\", got {other:?}"
                )))
            }
        };
        let spec = GridSpec::new(
            self.z_minus0,
            self.z_plus0,
            self.h_minus,
            self.h_plus,
            self.n_minus,
            self.n_plus,
        )
        .map_err(|e| CliError::from(e).context("field `grid`"))?;
        Ok(spec.with_geometry(geometry))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridBlockJson {
    block: usize,
    size: usize,
    samples: Vec<Rows>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridJson {
    format: String,
    grid: GridSpecJson,
    blocks: Vec<GridBlockJson>,
    #[serde(default, rename = "metadata")]
    _metadata: BTreeMap<String, Value>,
}

#[derive(Serialize)]
struct GridBlockOut {
    block: usize,
    size: usize,
    samples: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct GridOut<'a> {
    format: &'static str,
    grid: Box<RawValue>,
    blocks: Vec<GridBlockOut>,
    metadata: &'a BTreeMap<String, Value>,
}

fn check_block_labels(origin: &str, labels: impl Iterator<Item = (usize, usize)>) -> CliResult<()> {
    for (k, (block, _)) in labels.enumerate() {
        if block != k + 1 {
            return Err(CliError::input(format!(
                "{origin}: field `blocks[{k}].block`: expected {}, got {block}",
                k + 1
            )));
        }
    }
    Ok(())
}

fn check_sizes(origin: &str, what: &str, k: usize, size: usize, list: &[CMatrix]) -> CliResult<()> {
    if let Some(i) = list.iter().position(|m| m.shape() != (size, size)) {
        return Err(CliError::input(format!(
            "{origin}: field `blocks[{k}].{what}[{i}]`: expected {size}x{size}, got {}x{}",
            list[i].rows(),
            list[i].cols()
        )));
    }
    Ok(())
}

/// Reads a grid file into a field.
pub fn parse_grid(origin: &str, text: &str) -> CliResult<GridField> {
    let json: GridJson = parse(origin, text)?;
    check_format(origin, &json.format, GRID_FORMAT)?;
    let spec = json.grid.to_spec().map_err(|e| e.context(origin))?;
    check_block_labels(origin, json.blocks.iter().map(|b| (b.block, b.size)))?;
    let mut betas = Vec::with_capacity(json.blocks.len());
    for (k, b) in json.blocks.iter().enumerate() {
        if b.samples.len() != spec.len() {
            return Err(CliError::input(format!(
                "{origin}: field `blocks[{k}].samples`: expected {} samples, got {}",
                spec.len(),
                b.samples.len()
            )));
        }
        let list =
            matrices(&format!("blocks[{k}].samples"), &b.samples).map_err(|e| e.context(origin))?;
        check_sizes(origin, "samples", k, b.size, &list)?;
        betas.push(list);
    }
    GridField::new(spec, betas).map_err(|e| CliError::from(e).context(origin))
}

pub fn load_grid(path: &Path) -> CliResult<GridField> {
    parse_grid(&path.display().to_string(), &read_file(path)?)
}

pub fn grid_to_json(field: &GridField, metadata: &BTreeMap<String, Value>) -> CliResult<String> {
    let blocks = (1..=field.block_count())
        .map(|a| {
            let samples = field.block_samples(a);
            Ok(GridBlockOut {
                block: a,
                size: samples[0].rows(),
                samples: raw_matrices(samples)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    to_document(&GridOut {
        format: GRID_FORMAT,
        grid: raw(&GridSpecJson::from_spec(&field.spec))?,
        blocks,
        metadata,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryBlockJson {
    block: usize,
    size: usize,
    left: Vec<Rows>,
    bottom: Vec<Rows>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryJson {
    format: String,
    grid: GridSpecJson,
    blocks: Vec<BoundaryBlockJson>,
    #[serde(default, rename = "metadata")]
    _metadata: BTreeMap<String, Value>,
}

#[derive(Serialize)]
struct BoundaryBlockOut {
    block: usize,
    size: usize,
    left: Vec<Box<RawValue>>,
    bottom: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct BoundaryOut<'a> {
    format: &'static str,
    grid: Box<RawValue>,
    blocks: Vec<BoundaryBlockOut>,
    metadata: &'a BTreeMap<String, Value>,
}

/// Characteristic data as stored, before any resampling.
#[derive(Debug, Clone)]
pub struct BoundaryFile {
    pub spec: GridSpec,
    pub left: Vec<Vec<CMatrix>>,
    pub bottom: Vec<Vec<CMatrix>>,
}

impl BoundaryFile {
    pub fn parse(origin: &str, text: &str) -> CliResult<Self> {
        let json: BoundaryJson = parse(origin, text)?;
        check_format(origin, &json.format, BOUNDARY_FORMAT)?;
        let spec = json.grid.to_spec().map_err(|e| e.context(origin))?;
        check_block_labels(origin, json.blocks.iter().map(|b| (b.block, b.size)))?;
        let mut left = Vec::new();
        let mut bottom = Vec::new();
        for (k, b) in json.blocks.iter().enumerate() {
            for (what, list, n) in [
                ("left", &b.left, spec.n_minus),
                ("bottom", &b.bottom, spec.n_plus),
            ] {
                if list.len() != n {
                    return Err(CliError::input(format!(
                        "{origin}: field `blocks[{k}].{what}`: expected {n} samples, got {}",
                        list.len()
                    )));
                }
            }
            let l =
                matrices(&format!("blocks[{k}].left"), &b.left).map_err(|e| e.context(origin))?;
            let r = matrices(&format!("blocks[{k}].bottom"), &b.bottom)
                .map_err(|e| e.context(origin))?;
            check_sizes(origin, "left", k, b.size, &l)?;
            check_sizes(origin, "bottom", k, b.size, &r)?;
            left.push(l);
            bottom.push(r);
        }
        Ok(Self { spec, left, bottom })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&path.display().to_string(), &read_file(path)?)
    }

    pub fn from_data(data: &CharacteristicData) -> Self {
        let n = data.block_count();
        Self {
            spec: data.spec,
            left: (1..=n).map(|a| data.left(a).to_vec()).collect(),
            bottom: (1..=n).map(|a| data.bottom(a).to_vec()).collect(),
        }
    }

    /// Characteristic data on an `n × n` grid taken from every `s`-th sample.
    pub fn resample(&self, n: Option<usize>) -> CliResult<CharacteristicData> {
        let (nm, np) = (self.spec.n_minus, self.spec.n_plus);
        let (stride_m, stride_p) = match n {
            None => (1, 1),
            Some(n) => {
                if n < 3 || (nm - 1) % (n - 1) != 0 || (np - 1) % (n - 1) != 0 {
                    return Err(CliError::input(format!(
                        "--grid {n}: boundary lines have {nm}x{np} samples; need n - 1 dividing both line lengths minus one"
                    )));
                }
                ((nm - 1) / (n - 1), (np - 1) / (n - 1))
            }
        };
        let s = self.spec;
        let spec = GridSpec::new(
            s.z_minus0,
            s.z_plus0,
            s.h_minus * stride_m as f64,
            s.h_plus * stride_p as f64,
            (nm - 1) / stride_m + 1,
            (np - 1) / stride_p + 1,
        )?
        .with_geometry(s.geometry);
        let pick = |lines: &[Vec<CMatrix>], stride: usize| -> Vec<Vec<CMatrix>> {
            lines
                .iter()
                .map(|l| l.iter().step_by(stride).cloned().collect())
                .collect()
        };
        CharacteristicData::new(
            spec,
            pick(&self.left, stride_m),
            pick(&self.bottom, stride_p),
        )
        .map_err(|e| {
            // Bad boundary samples are an input problem, not a degenerate flow.
            CliError::input(e.to_string())
        })
    }

    pub fn to_json(&self, metadata: &BTreeMap<String, Value>) -> CliResult<String> {
        let blocks = self
            .left
            .iter()
            .zip(&self.bottom)
            .enumerate()
            .map(|(k, (l, b))| {
                Ok(BoundaryBlockOut {
                    block: k + 1,
                    size: l[0].rows(),
                    left: raw_matrices(l)?,
                    bottom: raw_matrices(b)?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        to_document(&BoundaryOut {
            format: BOUNDARY_FORMAT,
            grid: raw(&GridSpecJson::from_spec(&self.spec))?,
            blocks,
            metadata,
        })
    }
}
