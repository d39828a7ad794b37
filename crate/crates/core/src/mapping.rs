//! Weight mapping: signed integer weights to programmed cell conductances.
//!
//! Cells only hold conductances in `[g_min, g_max]` and a finite number of
//! levels, `2^c` for a `c`-bit cell. Wider weights are split into base-`2^c`
//! digits, one cell per digit, with the least significant slice on the lowest
//! physical column. Digit `d` is programmed as `g_min + d·s` with
//! `s = (g_max − g_min)/(2^c − 1)`.
//!
//! * **Bias**: the weight is offset-encoded as `W + 2^(B−1)` and the offset is
//!   subtracted digitally after accumulation. Without slicing this is the
//!   classic `G = s·W + G_b` with `G_b` at mid range.
//! * **Differential**: the magnitude is sliced onto a plus and a minus column
//!   group; the group of the opposite sign stays at `g_min`.
//! * **Unsigned**: single-sided digits of a non-negative weight, no offset.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::cellmodel::CellModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingKind {
    Bias,
    #[serde(alias = "diff")]
    Differential,
    Unsigned,
}

impl MappingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MappingKind::Bias => "bias",
            MappingKind::Differential => "diff",
            MappingKind::Unsigned => "unsigned",
        }
    }
}

impl std::fmt::Display for MappingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MappingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bias" => Ok(MappingKind::Bias),
            "diff" | "differential" => Ok(MappingKind::Differential),
            "unsigned" => Ok(MappingKind::Unsigned),
            other => Err(Error::domain(format!("unknown mapping scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MappingScheme {
    pub kind: MappingKind,
    pub cell_bits: u32,
    pub weight_bits: u32,
}

impl MappingScheme {
    pub fn new(kind: MappingKind, cell_bits: u32, weight_bits: u32) -> Result<Self> {
        let scheme = Self {
            kind,
            cell_bits,
            weight_bits,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.cell_bits) {
            return Err(Error::domain(format!(
                "cell bits must be in 1..=16, got {}",
                self.cell_bits
            )));
        }
        if !(1..=16).contains(&self.weight_bits) {
            return Err(Error::domain(format!(
                "weight bits must be in 1..=16, got {}",
                self.weight_bits
            )));
        }
        if self.weight_bits < self.cell_bits {
            return Err(Error::domain(format!(
                "weight bits ({}) must be >= cell bits ({})",
                self.weight_bits, self.cell_bits
            )));
        }
        Ok(())
    }

    /// Number of bits that are sliced onto cells.
    fn sliced_bits(&self) -> u32 {
        match self.kind {
            MappingKind::Bias | MappingKind::Unsigned => self.weight_bits,
            MappingKind::Differential => self.weight_bits - 1,
        }
    }

    /// Number of slices S per weight (per sign group for differential).
    pub fn slices(&self) -> usize {
        (self.sliced_bits().div_ceil(self.cell_bits) as usize).max(1)
    }

    /// Physical columns used by one logical column.
    pub fn columns_per_weight(&self) -> usize {
        match self.kind {
            MappingKind::Differential => 2 * self.slices(),
            _ => self.slices(),
        }
    }

    pub fn digit_max(&self) -> u32 {
        (1u32 << self.cell_bits) - 1
    }

    /// Inclusive range of weights accepted by the scheme.
    ///
    /// Differential mapping stores a sign and a `(B−1)`-bit magnitude, so
    /// `−2^(B−1)` has no representation there.
    pub fn weight_range(&self) -> (i64, i64) {
        let b = self.weight_bits;
        match self.kind {
            MappingKind::Bias => (-(1i64 << (b - 1)), (1i64 << (b - 1)) - 1),
            MappingKind::Differential => (-((1i64 << (b - 1)) - 1), (1i64 << (b - 1)) - 1),
            MappingKind::Unsigned => (0, (1i64 << b) - 1),
        }
    }

    /// Digital offset subtracted after accumulation (bias mapping only).
    pub fn offset_code(&self) -> i64 {
        match self.kind {
            MappingKind::Bias => 1i64 << (self.weight_bits - 1),
            _ => 0,
        }
    }

    pub fn check_weight(&self, w: i64) -> Result<()> {
        let (lo, hi) = self.weight_range();
        if w < lo || w > hi {
            return Err(Error::domain(format!(
                "weight {w} outside the {}-bit {} range [{lo}, {hi}]",
                self.weight_bits, self.kind
            )));
        }
        Ok(())
    }
}

/// Conductance step between adjacent levels of a `cell_bits`-bit cell, µS.
pub fn scale_factor(model: &CellModel, cell_bits: u32) -> Result<f64> {
    if cell_bits == 0 || cell_bits > 16 {
        return Err(Error::domain(format!("cell bits must be in 1..=16, got {cell_bits}")));
    }
    Ok((model.g_max_us - model.g_min_us) / ((1u32 << cell_bits) - 1) as f64)
}

/// Conductance (µS) that programs digit `d`. The top level is pinned to
/// `g_max` so no level leaves the device range through round-off.
fn level_us(model: &CellModel, step: f64, d: u32, digit_max: u32) -> f64 {
    if d >= digit_max {
        model.g_max_us
    } else {
        (model.g_min_us + d as f64 * step).min(model.g_max_us)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignRole {
    Plus,
    Minus,
    Single,
}

impl SignRole {
    pub fn sign(&self) -> i64 {
        match self {
            SignRole::Minus => -1,
            _ => 1,
        }
    }
}

/// What a physical column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub logical_col: usize,
    pub slice: usize,
    pub role: SignRole,
}

/// One physical crossbar image.
///
/// Padding rows and columns (beyond `logical_rows`, or with `None` metadata)
/// sit at `g_min` and never contribute to the digital result.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceTile {
    /// Cell conductances in µS, `rows × physical columns`.
    pub g_us: Array2<f64>,
    /// Programmed digit of each cell.
    pub digits: Array2<u32>,
    pub scheme: MappingScheme,
    pub column_meta: Vec<Option<ColumnMeta>>,
    pub offset_code: i64,
    pub logical_rows: usize,
    pub logical_cols: usize,
}

impl ConductanceTile {
    pub fn rows(&self) -> usize {
        self.g_us.nrows()
    }

    pub fn cols(&self) -> usize {
        self.g_us.ncols()
    }

    /// Maps `w` (rows = crossbar inputs, columns = outputs) onto a tile of
    /// exactly the required physical size.
    pub fn map(w: ArrayView2<i32>, scheme: MappingScheme, model: &CellModel) -> Result<Self> {
        let shape = (w.nrows(), w.ncols() * scheme.columns_per_weight());
        Self::map_padded(w, scheme, model, shape)
    }

    /// Maps `w` onto a tile of `shape = (rows, physical columns)`, filling the
    /// unused cells with `g_min`.
    pub fn map_padded(
        w: ArrayView2<i32>,
        scheme: MappingScheme,
        model: &CellModel,
        shape: (usize, usize),
    ) -> Result<Self> {
        scheme.validate()?;
        let (rows, cols) = shape;
        let width = scheme.columns_per_weight();
        if w.nrows() > rows || w.ncols() * width > cols {
            return Err(Error::dim(format!(
                "{}x{} weights need {}x{} cells, tile is {rows}x{cols}",
                w.nrows(),
                w.ncols(),
                w.nrows(),
                w.ncols() * width
            )));
        }
        let slices = scheme.slices();
        let c = scheme.cell_bits;
        let digit_mask = scheme.digit_max() as i64;

        let mut column_meta = vec![None; cols];
        for l in 0..w.ncols() {
            for k in 0..slices {
                match scheme.kind {
                    MappingKind::Differential => {
                        column_meta[l * width + k] = Some(ColumnMeta {
                            logical_col: l,
                            slice: k,
                            role: SignRole::Plus,
                        });
                        column_meta[l * width + slices + k] = Some(ColumnMeta {
                            logical_col: l,
                            slice: k,
                            role: SignRole::Minus,
                        });
                    }
                    _ => {
                        column_meta[l * width + k] = Some(ColumnMeta {
                            logical_col: l,
                            slice: k,
                            role: SignRole::Single,
                        });
                    }
                }
            }
        }

        let mut digits = Array2::<u32>::zeros((rows, cols));
        let offset = scheme.offset_code();
        for ((j, l), &wv) in w.indexed_iter() {
            let wv = wv as i64;
            scheme.check_weight(wv)?;
            let (code, base) = match scheme.kind {
                MappingKind::Bias => (wv + offset, l * width),
                MappingKind::Unsigned => (wv, l * width),
                MappingKind::Differential if wv >= 0 => (wv, l * width),
                MappingKind::Differential => (-wv, l * width + slices),
            };
            for k in 0..slices {
                digits[[j, base + k]] = ((code >> (c as usize * k)) & digit_mask) as u32;
            }
        }

        let step = scale_factor(model, c)?;
        let dmax = scheme.digit_max();
        let g_us = digits.mapv(|d| level_us(model, step, d, dmax));
        Ok(Self {
            g_us,
            digits,
            scheme,
            column_meta,
            offset_code: offset,
            logical_rows: w.nrows(),
            logical_cols: w.ncols(),
        })
    }

    /// Weight carried by the digits of one physical column for one row.
    fn column_weight(&self, meta: &ColumnMeta) -> i64 {
        meta.role.sign() << (self.scheme.cell_bits as usize * meta.slice)
    }

    /// Signed place value of every physical column (0 for padding).
    pub fn column_weights(&self) -> Vec<i64> {
        self.column_meta
            .iter()
            .map(|m| m.as_ref().map_or(0, |m| self.column_weight(m)))
            .collect()
    }
}

pub fn map_bias(w: ArrayView2<i32>, scheme: MappingScheme, model: &CellModel) -> Result<ConductanceTile> {
    if scheme.kind != MappingKind::Bias {
        return Err(Error::domain("map_bias needs a bias scheme"));
    }
    ConductanceTile::map(w, scheme, model)
}

pub fn map_differential(w: ArrayView2<i32>, scheme: MappingScheme, model: &CellModel) -> Result<ConductanceTile> {
    if scheme.kind != MappingKind::Differential {
        return Err(Error::domain("map_differential needs a differential scheme"));
    }
    ConductanceTile::map(w, scheme, model)
}

/// Recovers the integer weights from the tile's conductances alone.
///
/// Every cell must sit within a quarter step of a programmed level; anything
/// further off-grid is rejected rather than rounded.
pub fn decode_weights(tile: &ConductanceTile, model: &CellModel) -> Result<Array2<i32>> {
    let scheme = tile.scheme;
    let step = scale_factor(model, scheme.cell_bits)?;
    let dmax = scheme.digit_max();
    let lo = model.g_min_us * (1.0 - 1e-9);
    let hi = model.g_max_us * (1.0 + 1e-9);

    let mut out = Array2::<i64>::zeros((tile.logical_rows, tile.logical_cols));
    for (c, meta) in tile.column_meta.iter().enumerate() {
        let Some(meta) = meta else { continue };
        let place = tile.column_weight(meta);
        for j in 0..tile.logical_rows {
            let g = tile.g_us[[j, c]];
            if !(lo..=hi).contains(&g) {
                return Err(Error::Decode(format!(
                    "cell ({j}, {c}) at {g} µS is outside [{}, {}] µS",
                    model.g_min_us, model.g_max_us
                )));
            }
            let level = (g - model.g_min_us) / step;
            let d = level.round();
            if (level - d).abs() > 0.25 || d < 0.0 || d > dmax as f64 {
                return Err(Error::Decode(format!(
                    "cell ({j}, {c}) at {g} µS is off the conductance grid (level {level:.3})"
                )));
            }
            out[[j, meta.logical_col]] += place * d as i64;
        }
    }
    out.mapv_inplace(|v| v - tile.offset_code);
    Ok(out.mapv(|v| v as i32))
}
