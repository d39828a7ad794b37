//! The MVM unit: integer requests in, exact results and energy reports out.
//!
//! A weight matrix is laid out as it sits on the crossbar: rows are inputs
//! (word lines), columns are outputs. For an input vector `v` the unit returns
//! `y[l] = Σ_j W[j][l]·v[j]`.
//!
//! Requests are split into tiles, mapped to conductances and bit-sliced
//! into single-pulse crossbar operations ([`XbarOp`]). Each op is priced
//! through the circuit solver; the functional result is recombined digitally
//! from slice digit sums, so it is exact by construction.

use std::ops::Range;

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cellmodel::{CellModel, US};
use crate::encoding::{decode_accumulate, encode_inputs, PulseTrain, Signedness};
use crate::energy::{pulse_energy, EnergyReport, PulseEnergy, PulseSample};
use crate::mapping::{scale_factor, ConductanceTile, MappingScheme};
use crate::solver::{solve_dense_oracle, solve_fast, CrossbarCircuit, SolveResult, SolverOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Fast,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvmConfig {
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub solver: SolverKind,
    pub options: SolverOptions,
}

impl Default for MvmConfig {
    fn default() -> Self {
        Self {
            tile_rows: 64,
            tile_cols: 64,
            solver: SolverKind::Fast,
            options: SolverOptions::default(),
        }
    }
}

impl MvmConfig {
    pub fn with_tile(rows: usize, cols: usize) -> Self {
        Self {
            tile_rows: rows,
            tile_cols: cols,
            ..Self::default()
        }
    }
}

/// Logical block of the weight matrix held by one tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct TiledMatrix {
    pub tiles: Vec<ConductanceTile>,
    pub placements: Vec<Placement>,
}

/// Block decomposition of `w` onto `tile_shape` crossbars. Edge tiles are
/// padded with `g_min` cells that carry no digital weight.
pub fn tile_matrix(
    w: ArrayView2<i32>,
    tile_shape: (usize, usize),
    scheme: MappingScheme,
    model: &CellModel,
) -> Result<TiledMatrix> {
    let (tr, tc) = tile_shape;
    if w.nrows() == 0 || w.ncols() == 0 {
        return Err(Error::dim("weight matrix is empty"));
    }
    if tr == 0 || tc == 0 {
        return Err(Error::dim("tile shape must be non-zero"));
    }
    let width = scheme.columns_per_weight();
    let per_tile = tc / width;
    if per_tile == 0 {
        return Err(Error::dim(format!(
            "one weight needs {width} physical columns, tile has {tc}"
        )));
    }
    let mut tiles = Vec::new();
    let mut placements = Vec::new();
    for r0 in (0..w.nrows()).step_by(tr) {
        let r1 = (r0 + tr).min(w.nrows());
        for c0 in (0..w.ncols()).step_by(per_tile) {
            let c1 = (c0 + per_tile).min(w.ncols());
            let block = w.slice(s![r0..r1, c0..c1]);
            tiles.push(ConductanceTile::map_padded(block, scheme, model, tile_shape)?);
            placements.push(Placement {
                rows: r0..r1,
                cols: c0..c1,
            });
        }
    }
    Ok(TiledMatrix { tiles, placements })
}

/// One single-pulse crossbar operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XbarOp {
    pub tile: usize,
    pub pulse: usize,
    /// Row activations, one per physical tile row.
    pub plane: Vec<bool>,
}

impl XbarOp {
    pub fn active_rows(&self) -> usize {
        self.plane.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvmOutput {
    pub output: Vec<i64>,
    pub report: EnergyReport,
}

/// A weight matrix programmed onto crossbar tiles, ready to serve inputs.
#[derive(Debug, Clone)]
pub struct MvmUnit {
    model: CellModel,
    scheme: MappingScheme,
    config: MvmConfig,
    tiled: TiledMatrix,
    rows: usize,
    cols: usize,
    /// Per tile, per physical row: Σ_i g (S).
    row_sums: Vec<Vec<f64>>,
    /// Per tile, signed place value of each physical column.
    col_weights: Vec<Vec<i64>>,
}

impl MvmUnit {
    pub fn new(model: &CellModel, weights: ArrayView2<i32>, scheme: MappingScheme, config: MvmConfig) -> Result<Self> {
        model.validate()?;
        scheme.validate()?;
        let tiled = tile_matrix(weights, (config.tile_rows, config.tile_cols), scheme, model)?;
        let row_sums = tiled
            .tiles
            .iter()
            .map(|t| t.g_us.rows().into_iter().map(|r| r.sum() * US).collect())
            .collect();
        let col_weights = tiled.tiles.iter().map(|t| t.column_weights()).collect();
        Ok(Self {
            model: model.clone(),
            scheme,
            config,
            tiled,
            rows: weights.nrows(),
            cols: weights.ncols(),
            row_sums,
            col_weights,
        })
    }

    pub fn model(&self) -> &CellModel {
        &self.model
    }

    pub fn scheme(&self) -> MappingScheme {
        self.scheme
    }

    pub fn config(&self) -> &MvmConfig {
        &self.config
    }

    pub fn tiles(&self) -> &[ConductanceTile] {
        &self.tiled.tiles
    }

    pub fn placements(&self) -> &[Placement] {
        &self.tiled.placements
    }

    pub fn logical_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Expands an input pulse train into per-tile single-pulse operations.
    pub fn xbar_ops(&self, train: &PulseTrain) -> Result<Vec<XbarOp>> {
        if train.len() != self.rows {
            return Err(Error::dim(format!(
                "input has {} elements, weight matrix has {} rows",
                train.len(),
                self.rows
            )));
        }
        let mut ops = Vec::with_capacity(self.tiled.tiles.len() * train.pulses());
        for (t, place) in self.tiled.placements.iter().enumerate() {
            for (p, plane) in train.planes.iter().enumerate() {
                let mut bits = vec![false; self.config.tile_rows];
                bits[..place.rows.len()].copy_from_slice(&plane[place.rows.clone()]);
                ops.push(XbarOp {
                    tile: t,
                    pulse: p,
                    plane: bits,
                });
            }
        }
        Ok(ops)
    }

    pub fn circuit(&self, op: &XbarOp) -> Result<CrossbarCircuit> {
        CrossbarCircuit::build(&self.tiled.tiles[op.tile], &self.model, &op.plane)
    }

    /// Full circuit solve of one op with the configured solver.
    pub fn solve_op(&self, op: &XbarOp) -> Result<SolveResult> {
        let circuit = self.circuit(op)?;
        match self.config.solver {
            SolverKind::Fast => solve_fast(&circuit, &self.config.options),
            SolverKind::Oracle => solve_dense_oracle(&circuit),
        }
    }

    /// Equivalent conductance of one op, S.
    pub fn equivalent_conductance(&self, op: &XbarOp) -> Result<f64> {
        if op.active_rows() == 0 {
            return Ok(0.0);
        }
        // Both solvers are analytic without wire resistance.
        if !self.model.has_parasitics() {
            let sums = &self.row_sums[op.tile];
            return Ok(op.plane.iter().zip(sums).filter(|(&on, _)| on).map(|(_, g)| g).sum());
        }
        Ok(self.solve_op(op)?.g_x)
    }

    /// Ideal digital read of one op: per logical column of the tile,
    /// `Σ_j x_j·W[j][l]` for the active rows.
    fn digital_readout(&self, op: &XbarOp) -> Vec<i64> {
        let tile = &self.tiled.tiles[op.tile];
        let mut col_sums = vec![0i64; tile.cols()];
        for (j, _) in op.plane.iter().enumerate().filter(|(_, &on)| on) {
            for (acc, &d) in col_sums.iter_mut().zip(tile.digits.row(j)) {
                *acc += d as i64;
            }
        }
        let mut out = vec![0i64; tile.logical_cols];
        for ((meta, &place), &sum) in tile.column_meta.iter().zip(&self.col_weights[op.tile]).zip(&col_sums) {
            if let Some(meta) = meta {
                out[meta.logical_col] += place * sum;
            }
        }
        let offset = tile.offset_code * op.active_rows() as i64;
        out.iter_mut().for_each(|v| *v -= offset);
        out
    }

    pub fn execute(&self, inputs: &[i64], input_bits: u32, signedness: Signedness) -> Result<MvmOutput> {
        let train = encode_inputs(inputs, input_bits, signedness)?;
        self.execute_train(&train)
    }

    pub fn execute_train(&self, train: &PulseTrain) -> Result<MvmOutput> {
        let ops = self.xbar_ops(train)?;
        let x_m = self.config.tile_cols;
        let evaluated: Vec<(PulseEnergy, Vec<i64>)> = ops
            .par_iter()
            .map(|op| {
                let g_x = self.equivalent_conductance(op)?;
                let sample = PulseSample {
                    g_x,
                    active_rows: op.active_rows(),
                };
                let (e_bl_fj, e_wl_fj) = pulse_energy(&sample, &self.model, x_m);
                let energy = PulseEnergy {
                    tile: op.tile,
                    pulse: op.pulse,
                    g_x_us: g_x / US,
                    active_rows: sample.active_rows,
                    e_bl_fj,
                    e_wl_fj,
                };
                Ok((energy, self.digital_readout(op)))
            })
            .collect::<Result<_>>()?;

        let pulses = train.pulses();
        let mut report = EnergyReport::default();
        let mut output = vec![0i64; self.cols];
        for (t, chunk) in evaluated.chunks(pulses).enumerate() {
            let per_plane: Vec<Vec<i64>> = chunk.iter().map(|(_, r)| r.clone()).collect();
            let partial = decode_accumulate(&per_plane, train)?;
            let cols = self.tiled.placements[t].cols.clone();
            for (o, v) in output[cols].iter_mut().zip(partial) {
                *o += v;
            }
            for (e, _) in chunk {
                report.push(*e);
            }
        }
        report.set_logical_macs(self.rows, self.cols)?;
        Ok(MvmOutput { output, report })
    }
}

/// Column sense currents (A) of a solved op.
pub fn analog_readout(circuit: &CrossbarCircuit, solved: &SolveResult) -> Vec<f64> {
    solved.column_currents(circuit)
}

/// Digit sums recovered from ideal (infinite precision) current readings:
/// `(I/V_RB − g_min·n_active)/s`, rounded.
pub fn ideal_digit_sums(currents: &[f64], model: &CellModel, cell_bits: u32, active_rows: usize) -> Result<Vec<i64>> {
    let step = scale_factor(model, cell_bits)? * US;
    let base = model.g_min_s() * active_rows as f64;
    Ok(currents
        .iter()
        .map(|&i| ((i / model.v_rb() - base) / step).round() as i64)
        .collect())
}

/// JSON-serialisable MVM request for batch mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvmRequest {
    /// Rows are inputs, columns are outputs.
    pub weights: Vec<Vec<i32>>,
    pub inputs: Vec<Vec<i64>>,
    pub input_bits: u32,
    pub signedness: Signedness,
    pub scheme: MappingScheme,
    #[serde(default = "default_tile")]
    pub tile_rows: usize,
    #[serde(default = "default_tile")]
    pub tile_cols: usize,
}

fn default_tile() -> usize {
    64
}

impl MvmRequest {
    pub fn weight_matrix(&self) -> Result<Array2<i32>> {
        let rows = self.weights.len();
        let cols = self.weights.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || self.weights.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("weights must be a non-empty rectangular matrix"));
        }
        Ok(Array2::from_shape_fn((rows, cols), |(j, i)| self.weights[j][i]))
    }
}

/// Runs every input vector of `req` through one programmed unit.
pub fn execute_mvm(req: &MvmRequest, model: &CellModel, config: &MvmConfig) -> Result<Vec<MvmOutput>> {
    let w = req.weight_matrix()?;
    let config = MvmConfig {
        tile_rows: req.tile_rows,
        tile_cols: req.tile_cols,
        ..*config
    };
    let unit = MvmUnit::new(model, w.view(), req.scheme, config)?;
    req.inputs
        .iter()
        .map(|v| unit.execute(v, req.input_bits, req.signedness))
        .collect()
}
