//! JSON operator files and CSV trace files.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.
//! Superoperator action matrices act on column-stacked inputs, declared by
//! the mandatory `"vec": "column"` field of generator files.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dilation::HPParams;
use crate::error::{Error, Result};
use crate::generator::{FormGenerator, GeneratorBlocks};
use crate::linalg::{c, CMat, C64};
use crate::sim::{CoherentFunction, MatrixElementTrace, TimeGrid};
use crate::superop::SuperOperator;

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

pub fn complex_to_json(z: C64) -> JsonComplex {
    [z.re, z.im]
}

pub fn complex_from_json(z: JsonComplex) -> C64 {
    c(z[0], z[1])
}

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix, nrows: usize, ncols: usize, what: &str) -> Result<CMat> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Shape(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| complex_from_json(rows[i][j])))
}

fn square_from_json(rows: &JsonMatrix, n: usize, what: &str) -> Result<CMat> {
    matrix_from_json(rows, n, n, what)
}

/// Generator blocks as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub n: usize,
    pub d: usize,
    pub vec: String,
    pub blocks: GeneratorFileBlocks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFileBlocks {
    pub scalar: JsonMatrix,
    pub up: Vec<JsonMatrix>,
    pub down: Vec<JsonMatrix>,
    pub matrix: Vec<Vec<JsonMatrix>>,
}

impl GeneratorFile {
    pub fn from_blocks(blocks: &GeneratorBlocks) -> Self {
        let m = |s: &SuperOperator| matrix_to_json(s.action());
        Self {
            n: blocks.n,
            d: blocks.d,
            vec: "column".into(),
            blocks: GeneratorFileBlocks {
                scalar: m(&blocks.scalar),
                up: blocks.up.iter().map(m).collect(),
                down: blocks.down.iter().map(m).collect(),
                matrix: blocks.exchange.iter().map(|row| row.iter().map(m).collect()).collect(),
            },
        }
    }

    pub fn from_generator(gen: &FormGenerator) -> Self {
        Self::from_blocks(gen.blocks())
    }

    /// Shape-checked blocks; the flat symmetry is not checked here.
    pub fn to_blocks(&self) -> Result<GeneratorBlocks> {
        if self.vec != "column" {
            return Err(Error::Parse(format!("unsupported vec convention {:?}, expected \"column\"", self.vec)));
        }
        let (n, d) = (self.n, self.d);
        if n == 0 || d == 0 {
            return Err(Error::Shape("generator file needs n >= 1 and d >= 1".into()));
        }
        let b = &self.blocks;
        if b.up.len() != d || b.down.len() != d || b.matrix.len() != d || b.matrix.iter().any(|r| r.len() != d) {
            return Err(Error::Shape(format!("generator file with d = {d} has inconsistent block counts")));
        }
        let nn = n * n;
        let sop = |rows: &JsonMatrix, what: &str| -> Result<SuperOperator> {
            SuperOperator::new(n, n, matrix_from_json(rows, nn, nn, what)?)
        };
        Ok(GeneratorBlocks {
            n,
            d,
            scalar: sop(&b.scalar, "scalar block")?,
            up: b.up.iter().map(|m| sop(m, "up block")).collect::<Result<_>>()?,
            down: b.down.iter().map(|m| sop(m, "down block")).collect::<Result<_>>()?,
            exchange: b
                .matrix
                .iter()
                .map(|row| row.iter().map(|m| sop(m, "exchange block")).collect::<Result<_>>())
                .collect::<Result<_>>()?,
        })
    }

    pub fn to_generator(&self) -> Result<FormGenerator> {
        FormGenerator::new(self.to_blocks()?)
    }
}

/// Hudson–Parthasarathy coefficients as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HPParamsFile {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    #[serde(rename = "K")]
    pub k: JsonMatrix,
    #[serde(rename = "H")]
    pub h: JsonMatrix,
    #[serde(rename = "K_row")]
    pub k_row: Vec<JsonMatrix>,
    #[serde(rename = "kraus_L")]
    pub kraus_l: Vec<JsonMatrix>,
    #[serde(rename = "kraus_Lmat")]
    pub kraus_lmat: Vec<Vec<JsonMatrix>>,
}

impl HPParamsFile {
    pub fn from_params(p: &HPParams) -> Self {
        Self {
            n: p.n(),
            d: p.d(),
            r: p.r(),
            k: matrix_to_json(p.k()),
            h: matrix_to_json(p.h()),
            k_row: p.k_row().iter().map(matrix_to_json).collect(),
            kraus_l: p.kraus_l().iter().map(matrix_to_json).collect(),
            kraus_lmat: p
                .kraus_lmat()
                .iter()
                .map(|row| row.iter().map(matrix_to_json).collect())
                .collect(),
        }
    }

    pub fn to_params(&self) -> Result<HPParams> {
        let n = self.n;
        if self.k_row.len() != self.d || self.kraus_l.len() != self.r || self.kraus_lmat.len() != self.r {
            return Err(Error::Shape(format!(
                "parameter file declares d = {}, r = {} but lists {} K_row, {} kraus_L, {} kraus_Lmat entries",
                self.d,
                self.r,
                self.k_row.len(),
                self.kraus_l.len(),
                self.kraus_lmat.len()
            )));
        }
        let list = |v: &[JsonMatrix], what: &str| -> Result<Vec<CMat>> {
            v.iter().map(|m| square_from_json(m, n, what)).collect()
        };
        let lmat = self
            .kraus_lmat
            .iter()
            .map(|row| {
                if row.len() != self.d {
                    return Err(Error::Shape(format!("kraus_Lmat rows need d = {} entries", self.d)));
                }
                list(row, "L^i_n")
            })
            .collect::<Result<_>>()?;
        HPParams::new(
            square_from_json(&self.k, n, "K")?,
            list(&self.k_row, "K_n")?,
            square_from_json(&self.h, n, "H")?,
            list(&self.kraus_l, "L^i")?,
            lmat,
        )
    }
}

/// Coherent function file: either per-slice `values` (one row of `d`
/// complex numbers per grid step) or a single `constant` row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentFile {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<Vec<JsonComplex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<JsonComplex>>>,
}

impl CoherentFile {
    pub fn from_function(f: &CoherentFunction) -> Self {
        Self {
            d: f.d(),
            constant: None,
            values: Some(
                f.values()
                    .iter()
                    .map(|row| row.iter().copied().map(complex_to_json).collect())
                    .collect(),
            ),
        }
    }

    pub fn to_function(&self, grid: TimeGrid) -> Result<CoherentFunction> {
        let row = |r: &[JsonComplex]| -> Vec<C64> { r.iter().copied().map(complex_from_json).collect() };
        match (&self.constant, &self.values) {
            (Some(v), None) => {
                if v.len() != self.d {
                    return Err(Error::Shape(format!("constant row needs d = {} entries", self.d)));
                }
                CoherentFunction::constant(grid, &row(v))
            }
            (None, Some(rows)) => CoherentFunction::new(grid, self.d, rows.iter().map(|r| row(r)).collect()),
            _ => Err(Error::Parse("coherent file needs exactly one of \"constant\" or \"values\"".into())),
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_generator(path: &Path) -> Result<FormGenerator> {
    read_json::<GeneratorFile>(path)?.to_generator()
}

pub fn save_generator(path: &Path, gen: &FormGenerator) -> Result<()> {
    write_json(path, &GeneratorFile::from_generator(gen))
}

pub fn load_params(path: &Path) -> Result<HPParams> {
    read_json::<HPParamsFile>(path)?.to_params()
}

pub fn save_params(path: &Path, params: &HPParams) -> Result<()> {
    write_json(path, &HPParamsFile::from_params(params))
}

/// Observable file: a JSON matrix of `[re, im]` pairs.
pub fn load_observable(path: &Path, n: usize) -> Result<CMat> {
    let rows: JsonMatrix = read_json(path)?;
    square_from_json(&rows, n, "observable")
}

pub fn load_coherent(path: &Path, grid: TimeGrid) -> Result<CoherentFunction> {
    read_json::<CoherentFile>(path)?.to_function(grid)
}

/// Header `t, re_i_j ..., im_i_j ...` (row-major), plus `err` when present.
pub fn trace_header(n: usize, with_error: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for part in ["re", "im"] {
        for i in 0..n {
            for j in 0..n {
                h.push(format!("{part}_{i}_{j}"));
            }
        }
    }
    if with_error {
        h.push("err".into());
    }
    h
}

/// Writes a trace as CSV; floats use the shortest round-trip representation.
pub fn write_trace<W: Write>(out: W, trace: &MatrixElementTrace, errors: Option<&[f64]>) -> Result<()> {
    let n = trace.n();
    if let Some(e) = errors {
        if e.len() != trace.values.len() {
            return Err(Error::Shape("error column length differs from the trace".into()));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(n, errors.is_some()))?;
    for (k, (t, v)) in trace.times.iter().zip(&trace.values).enumerate() {
        let mut rec = Vec::with_capacity(1 + 2 * n * n + 1);
        rec.push(t.to_string());
        for i in 0..n {
            for j in 0..n {
                rec.push(v[(i, j)].re.to_string());
            }
        }
        for i in 0..n {
            for j in 0..n {
                rec.push(v[(i, j)].im.to_string());
            }
        }
        if let Some(e) = errors {
            rec.push(e[k].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace written by [`write_trace`]; an `err` column is returned
/// separately.
pub fn read_trace<R: Read>(input: R) -> Result<(MatrixElementTrace, Option<Vec<f64>>)> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let with_error = header.last().is_some_and(|h| h == "err");
    let body = header.len() - usize::from(with_error);
    let n = (((body.saturating_sub(1)) / 2) as f64).sqrt().round() as usize;
    if n == 0 || header != trace_header(n, with_error) {
        return Err(Error::Parse("trace header is not t, re_i_j..., im_i_j...".into()));
    }
    let parse = |s: &str| -> Result<f64> { s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))) };
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let t = parse(&rec[0])?;
        if times.last().is_some_and(|&prev| t < prev) {
            return Err(Error::Parse("trace times must be nondecreasing".into()));
        }
        times.push(t);
        let nn = n * n;
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let a = i * n + j;
                m[(i, j)] = c(parse(&rec[1 + a])?, parse(&rec[1 + nn + a])?);
            }
        }
        values.push(m);
        if with_error {
            errors.push(parse(&rec[1 + 2 * nn])?);
        }
    }
    if values.is_empty() {
        return Err(Error::Parse("trace has no rows".into()));
    }
    Ok((MatrixElementTrace { times, values }, with_error.then_some(errors)))
}
