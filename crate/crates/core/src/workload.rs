//! Workloads: im2col lowering, synthetic generators and tensor fixtures.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array2, Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default σ of the rectified-normal validation weights, in 8-bit codes.
pub const DEFAULT_VALIDATION_SIGMA: f64 = 64.0;

/// One 2-D convolution layer over an `H×W×C_in` activation tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub height: usize,
    pub width: usize,
    pub c_in: usize,
    pub k_h: usize,
    pub k_w: usize,
    pub c_out: usize,
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    pub weight_bits: u32,
    pub activation_bits: u32,
}

impl ConvSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.height,
            self.width,
            self.c_in,
            self.k_h,
            self.k_w,
            self.c_out,
            self.stride.0,
            self.stride.1,
        ];
        if dims.contains(&0) {
            return Err(Error::dim(format!("convolution dimensions must be positive: {self:?}")));
        }
        if self.height + 2 * self.padding.0 < self.k_h || self.width + 2 * self.padding.1 < self.k_w {
            return Err(Error::dim("kernel larger than the padded input"));
        }
        if !(1..=16).contains(&self.weight_bits) || !(1..=16).contains(&self.activation_bits) {
            return Err(Error::domain("bit widths must be in 1..=16"));
        }
        Ok(())
    }

    /// Output spatial size (floor division, as in common frameworks).
    pub fn output_dims(&self) -> (usize, usize) {
        let oh = (self.height + 2 * self.padding.0 - self.k_h) / self.stride.0 + 1;
        let ow = (self.width + 2 * self.padding.1 - self.k_w) / self.stride.1 + 1;
        (oh, ow)
    }

    /// Rows of the lowered weight matrix.
    pub fn patch_len(&self) -> usize {
        self.k_h * self.k_w * self.c_in
    }

    pub fn mac_count(&self) -> u64 {
        let (oh, ow) = self.output_dims();
        (oh * ow * self.patch_len() * self.c_out) as u64
    }
}

/// Lowered convolution: `weights` is `(K_h·K_w·C_in) × C_out` with filter `o`
/// flattened into column `o` (kh-major, then kw, then c_in), and one input
/// patch per output position in row-major `(oh, ow)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Lowered {
    pub weights: Array2<i32>,
    pub patches: Vec<Vec<i64>>,
    pub output_dims: (usize, usize),
}

pub fn im2col(spec: &ConvSpec, input: &Array3<i32>, kernel: &Array4<i32>) -> Result<Lowered> {
    spec.validate()?;
    if input.dim() != (spec.height, spec.width, spec.c_in) {
        return Err(Error::dim(format!(
            "input tensor is {:?}, spec expects ({}, {}, {})",
            input.dim(),
            spec.height,
            spec.width,
            spec.c_in
        )));
    }
    if kernel.dim() != (spec.k_h, spec.k_w, spec.c_in, spec.c_out) {
        return Err(Error::dim(format!(
            "kernel tensor is {:?}, spec expects ({}, {}, {}, {})",
            kernel.dim(),
            spec.k_h,
            spec.k_w,
            spec.c_in,
            spec.c_out
        )));
    }
    let k = spec.patch_len();
    let weights = Array2::from_shape_fn((k, spec.c_out), |(r, o)| {
        let ci = r % spec.c_in;
        let kw = (r / spec.c_in) % spec.k_w;
        let kh = r / (spec.c_in * spec.k_w);
        kernel[[kh, kw, ci, o]]
    });

    let (oh, ow) = spec.output_dims();
    let (ph, pw) = (spec.padding.0 as isize, spec.padding.1 as isize);
    let mut patches = Vec::with_capacity(oh * ow);
    for y in 0..oh {
        for x in 0..ow {
            let mut patch = Vec::with_capacity(k);
            for kh in 0..spec.k_h {
                for kw in 0..spec.k_w {
                    let iy = (y * spec.stride.0 + kh) as isize - ph;
                    let ix = (x * spec.stride.1 + kw) as isize - pw;
                    let inside = iy >= 0 && ix >= 0 && (iy as usize) < spec.height && (ix as usize) < spec.width;
                    for ci in 0..spec.c_in {
                        patch.push(if inside {
                            input[[iy as usize, ix as usize, ci]] as i64
                        } else {
                            0
                        });
                    }
                }
            }
            patches.push(patch);
        }
    }
    Ok(Lowered {
        weights,
        patches,
        output_dims: (oh, ow),
    })
}

fn symmetric_max(bits: u32) -> i64 {
    (1i64 << (bits - 1)) - 1
}

/// Zero-centred normal weights with standard deviation `sigma·(2^(B−1)−1)`,
/// rounded and clamped to `±(2^(B−1)−1)` so both mappings accept them.
pub fn gen_synthetic_weights(rows: usize, cols: usize, sigma: f64, bits: u32, seed: u64) -> Result<Array2<i32>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if !(1..=16).contains(&bits) {
        return Err(Error::domain(format!("weight bits must be in 1..=16, got {bits}")));
    }
    let max = symmetric_max(bits);
    if sigma == 0.0 || max == 0 {
        return Ok(Array2::zeros((rows, cols)));
    }
    let normal = Normal::new(0.0, sigma * max as f64).map_err(|e| Error::domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Array2::from_shape_simple_fn((rows, cols), || {
        (normal.sample(&mut rng).round() as i64).clamp(-max, max) as i32
    }))
}

/// Uniformly distributed unsigned inputs in `[0, 2^bits − 1]`.
pub fn gen_uniform_inputs(len: usize, bits: u32, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let hi = (1i64 << bits) - 1;
    (0..len).map(|_| rng.random_range(0..=hi)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSet {
    /// Rectified-normal unsigned weights.
    pub weights: Array2<i32>,
    /// `(sparsity, input vector)` per MVM.
    pub inputs: Vec<(f64, Vec<i64>)>,
    pub weight_bits: u32,
    pub input_bits: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationParams {
    pub rows: usize,
    pub cols: usize,
    pub n_mvms: usize,
    pub sparsities: Vec<f64>,
    pub seed: u64,
    pub sigma: f64,
    pub weight_bits: u32,
    pub input_bits: u32,
}

impl Default for ValidationParams {
    fn default() -> Self {
        Self {
            rows: 64,
            cols: 64,
            n_mvms: 1000,
            sparsities: vec![0.0, 0.25, 0.5, 0.75, 0.9],
            seed: 0,
            sigma: DEFAULT_VALIDATION_SIGMA,
            weight_bits: 8,
            input_bits: 1,
        }
    }
}

/// Validation workload: one crossbar of rectified-normal unsigned weights and
/// `n_mvms` input vectors cycling through the sparsity list. Sparsity is the
/// probability of a zero element; non-zero elements are uniform in
/// `[1, 2^input_bits − 1]` (all ones for binary inputs).
pub fn gen_validation_set(params: &ValidationParams) -> Result<ValidationSet> {
    if params.sparsities.is_empty() {
        return Err(Error::domain("sparsity list is empty"));
    }
    if let Some(s) = params.sparsities.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::domain(format!("sparsity {s} outside [0, 1]")));
    }
    if !(params.sigma >= 0.0) {
        return Err(Error::domain("sigma must be >= 0"));
    }
    for bits in [params.weight_bits, params.input_bits] {
        if !(1..=16).contains(&bits) {
            return Err(Error::domain(format!("bit width {bits} outside 1..=16")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let w_max = (1i64 << params.weight_bits) - 1;
    let weights = if params.sigma == 0.0 {
        Array2::zeros((params.rows, params.cols))
    } else {
        let normal = Normal::new(0.0, params.sigma).map_err(|e| Error::domain(e.to_string()))?;
        Array2::from_shape_simple_fn((params.rows, params.cols), || {
            (normal.sample(&mut rng).round().max(0.0) as i64).min(w_max) as i32
        })
    };
    let x_max = (1i64 << params.input_bits) - 1;
    let inputs = (0..params.n_mvms)
        .map(|k| {
            let s = params.sparsities[k % params.sparsities.len()];
            let v = (0..params.rows)
                .map(|_| {
                    if rng.random_bool(s) {
                        0
                    } else {
                        rng.random_range(1..=x_max)
                    }
                })
                .collect();
            (s, v)
        })
        .collect();
    Ok(ValidationSet {
        weights,
        inputs,
        weight_bits: params.weight_bits,
        input_bits: params.input_bits,
    })
}

/// Random activation and kernel tensors for `spec`: unsigned activations,
/// zero-centred normal weights with σ = `sigma`·max.
pub fn gen_conv_layer(spec: &ConvSpec, sigma: f64, seed: u64) -> Result<(Array3<i32>, Array4<i32>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a_max = (1i64 << spec.activation_bits) - 1;
    let input = Array3::from_shape_simple_fn((spec.height, spec.width, spec.c_in), || {
        rng.random_range(0..=a_max) as i32
    });
    let flat = gen_synthetic_weights(spec.patch_len(), spec.c_out, sigma, spec.weight_bits, rng.random())?;
    let kernel = Array4::from_shape_vec(
        (spec.k_h, spec.k_w, spec.c_in, spec.c_out),
        flat.into_raw_vec_and_offset().0,
    )
    .map_err(|e| Error::dim(e.to_string()))?;
    Ok((input, kernel))
}

/// Element type of a fixture tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    I8,
    U8,
    I16,
    U16,
    I32,
}

impl DType {
    pub fn code(&self) -> u16 {
        match self {
            DType::I8 => 1,
            DType::U8 => 2,
            DType::I16 => 3,
            DType::U16 => 4,
            DType::I32 => 5,
        }
    }

    pub fn from_code(code: u16) -> Result<Self> {
        Ok(match code {
            1 => DType::I8,
            2 => DType::U8,
            3 => DType::I16,
            4 => DType::U16,
            5 => DType::I32,
            other => return Err(Error::Format(format!("unknown dtype code {other}"))),
        })
    }

    pub fn range(&self) -> (i64, i64) {
        match self {
            DType::I8 => (i8::MIN as i64, i8::MAX as i64),
            DType::U8 => (0, u8::MAX as i64),
            DType::I16 => (i16::MIN as i64, i16::MAX as i64),
            DType::U16 => (0, u16::MAX as i64),
            DType::I32 => (i32::MIN as i64, i32::MAX as i64),
        }
    }
}

/// Integer tensor stored in the `XBWL` fixture format:
///
/// ```text
/// b"XBWL" | version: u16 | dtype: u16 | ndim: u16 | dims: ndim × u32 | payload
/// ```
///
/// All integers little-endian; payload row-major in the declared dtype.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    pub dtype: DType,
    pub shape: Vec<usize>,
    pub data: Vec<i32>,
}

pub const FIXTURE_MAGIC: &[u8; 4] = b"XBWL";
pub const FIXTURE_VERSION: u16 = 1;

impl Tensor {
    pub fn new(dtype: DType, shape: Vec<usize>, data: Vec<i32>) -> Result<Self> {
        let count: usize = shape.iter().product();
        if count != data.len() {
            return Err(Error::dim(format!(
                "shape {shape:?} holds {count} values, got {}",
                data.len()
            )));
        }
        let (lo, hi) = dtype.range();
        if let Some(v) = data.iter().find(|&&v| (v as i64) < lo || (v as i64) > hi) {
            return Err(Error::domain(format!("value {v} does not fit {dtype:?}")));
        }
        Ok(Self { dtype, shape, data })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10 + 4 * self.shape.len() + 4 * self.data.len());
        out.extend_from_slice(FIXTURE_MAGIC);
        out.write_u16::<LittleEndian>(FIXTURE_VERSION).unwrap();
        out.write_u16::<LittleEndian>(self.dtype.code()).unwrap();
        out.write_u16::<LittleEndian>(self.shape.len() as u16).unwrap();
        for &d in &self.shape {
            out.write_u32::<LittleEndian>(d as u32).unwrap();
        }
        for &v in &self.data {
            match self.dtype {
                DType::I8 => out.write_i8(v as i8),
                DType::U8 => out.write_u8(v as u8),
                DType::I16 => out.write_i16::<LittleEndian>(v as i16),
                DType::U16 => out.write_u16::<LittleEndian>(v as u16),
                DType::I32 => out.write_i32::<LittleEndian>(v),
            }
            .unwrap();
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fmt = |e: std::io::Error| Error::Format(format!("truncated fixture: {e}"));
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(fmt)?;
        if &magic != FIXTURE_MAGIC {
            return Err(Error::Format("missing XBWL magic".into()));
        }
        let version = r.read_u16::<LittleEndian>().map_err(fmt)?;
        if version != FIXTURE_VERSION {
            return Err(Error::Format(format!("unsupported fixture version {version}")));
        }
        let dtype = DType::from_code(r.read_u16::<LittleEndian>().map_err(fmt)?)?;
        let ndim = r.read_u16::<LittleEndian>().map_err(fmt)? as usize;
        let shape = (0..ndim)
            .map(|_| r.read_u32::<LittleEndian>().map(|d| d as usize))
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(fmt)?;
        let count: usize = shape.iter().product();
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let v = match dtype {
                DType::I8 => r.read_i8().map(i32::from),
                DType::U8 => r.read_u8().map(i32::from),
                DType::I16 => r.read_i16::<LittleEndian>().map(i32::from),
                DType::U16 => r.read_u16::<LittleEndian>().map(i32::from),
                DType::I32 => r.read_i32::<LittleEndian>(),
            }
            .map_err(fmt)?;
            data.push(v);
        }
        if (r.position() as usize) != bytes.len() {
            return Err(Error::Format("trailing bytes after fixture payload".into()));
        }
        Ok(Self { dtype, shape, data })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn to_array3(&self) -> Result<Array3<i32>> {
        match self.shape[..] {
            [a, b, c] => Array3::from_shape_vec((a, b, c), self.data.clone()).map_err(|e| Error::dim(e.to_string())),
            _ => Err(Error::dim(format!(
                "expected a rank-3 tensor, got shape {:?}",
                self.shape
            ))),
        }
    }

    pub fn to_array4(&self) -> Result<Array4<i32>> {
        match self.shape[..] {
            [a, b, c, d] => {
                Array4::from_shape_vec((a, b, c, d), self.data.clone()).map_err(|e| Error::dim(e.to_string()))
            }
            _ => Err(Error::dim(format!(
                "expected a rank-4 tensor, got shape {:?}",
                self.shape
            ))),
        }
    }

    pub fn to_array2(&self) -> Result<Array2<i32>> {
        match self.shape[..] {
            [a, b] => Array2::from_shape_vec((a, b), self.data.clone()).map_err(|e| Error::dim(e.to_string())),
            _ => Err(Error::dim(format!(
                "expected a rank-2 tensor, got shape {:?}",
                self.shape
            ))),
        }
    }
}

/// Reads a row-major matrix of signed integers from CSV (no header).
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Array2<i32>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text)
}

pub fn parse_matrix_csv(text: &str) -> Result<Array2<i32>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<i32>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = record
            .iter()
            .map(|s| {
                s.parse::<i32>().map_err(|_| Error::Parse {
                    line,
                    reason: format!("`{s}` is not an integer"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::dim("matrix CSV is empty"));
    }
    Ok(Array2::from_shape_fn((rows.len(), cols), |(j, i)| rows[j][i]))
}
