//! Experiment runner for the crossbar MVM energy model.
//!
//! Every subcommand is a plain function from its argument struct to a
//! [`Output`]: the CSV body plus a small JSON summary. `main.rs` only parses
//! flags, sets up the worker pool and writes files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use xbar_energy::cellmodel::{
    fit_cell_params, read_sweep_csv, CellModel, PulseSpec, ReferenceConfig, FJ, REFERENCE_CONFIGS, US,
};
use xbar_energy::mvmunit::{execute_mvm, MvmOutput};
use xbar_energy::workload::{
    gen_conv_layer, gen_synthetic_weights, gen_uniform_inputs, gen_validation_set, im2col, ConvSpec, DType, Tensor,
    ValidationParams, DEFAULT_VALIDATION_SIGMA,
};
use xbar_energy::{
    EnergyReport, MappingKind, MappingScheme, MvmConfig, MvmRequest, MvmUnit, Signedness, SolverKind, SolverOptions,
};

pub mod error;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "xbar", version, about = "Energy estimation for MVMs on 1T1R RRAM crossbars")]
pub struct Cli {
    /// Worker threads (0 = all cores). Never changes numeric output.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit alpha and P_WL from a conductance/energy sweep and write cell-model.json.
    Calibrate(CalibrateArgs),
    /// Random MVMs on one crossbar; per-MVM energies plus a fast-vs-oracle check.
    Validate(ValidateArgs),
    /// Energy per 8-bit MAC for synthetic normal weights across mappings.
    SweepMappings(SweepArgs),
    /// Energy per MAC of convolution layers lowered with im2col.
    ConvBench(ConvArgs),
    /// Run a JSON batch of MVM requests.
    Mvm(MvmArgs),
    /// Write reference cell models, a calibration sweep and synthetic conv layers.
    MakeFixtures(MakeFixturesArgs),
}

/// Flags shared by the commands that execute MVMs.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Force the direct nodal solver for every pulse.
    #[arg(long)]
    pub oracle: bool,
    /// Relative voltage tolerance of the iterative solver.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

impl SolverArgs {
    fn config(&self, rows: usize, cols: usize) -> CliResult<MvmConfig> {
        if !(self.tol > 0.0) {
            return Err(CliError::Config(format!("--tol must be > 0, got {}", self.tol)));
        }
        Ok(MvmConfig {
            tile_rows: rows,
            tile_cols: cols,
            solver: if self.oracle {
                SolverKind::Oracle
            } else {
                SolverKind::Fast
            },
            options: SolverOptions::with_tol(self.tol),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    /// CSV with header `g_us,e_fj`.
    #[arg(long)]
    pub sweep: PathBuf,
    #[arg(long, default_value = "calibrated-cell")]
    pub name: String,
    #[arg(long, default_value_t = 0.2)]
    pub v_rb: f64,
    #[arg(long, default_value_t = 1.2)]
    pub v_rw: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_pulse_ns: f64,
    #[arg(long, default_value_t = 4.0)]
    pub t_active_ns: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_rf_ns: f64,
    /// Conductance range in µS; defaults to the sweep's extremes.
    #[arg(long)]
    pub g_min_us: Option<f64>,
    #[arg(long)]
    pub g_max_us: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub r_wire_ohm: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c_bl_ff: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c_wl_ff: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c_sl_ff: f64,
    /// Print the fit without writing the model.
    #[arg(long)]
    pub dry_run: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub cell_model: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub rows: usize,
    #[arg(long, default_value_t = 64)]
    pub cols: usize,
    /// Probability of a zero input element, one value per MVM in turn.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.25, 0.5, 0.75, 0.9])]
    pub sparsity: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// σ of the rectified-normal weights, in integer codes.
    #[arg(long, default_value_t = DEFAULT_VALIDATION_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 8)]
    pub weight_bits: u32,
    #[arg(long, default_value_t = 8)]
    pub cell_bits: u32,
    /// 1 = binary input vectors.
    #[arg(long, default_value_t = 1)]
    pub input_bits: u32,
    /// Number of leading MVMs re-evaluated with the direct solver.
    #[arg(long, default_value_t = 100)]
    pub oracle_check: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub cell_model: PathBuf,
    /// Weight standard deviations as fractions of the largest weight.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0625, 0.125, 0.25, 0.5, 1.0])]
    pub sigma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec!["bias".to_string(), "diff".to_string()])]
    pub scheme: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 2, 4, 8])]
    pub cell_bits: Vec<u32>,
    #[arg(long, default_value_t = 8)]
    pub weight_bits: u32,
    #[arg(long, default_value_t = 8)]
    pub input_bits: u32,
    #[arg(long, default_value_t = 64)]
    pub rows: usize,
    #[arg(long, default_value_t = 64)]
    pub cols: usize,
    /// Input vectors per configuration.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvArgs {
    #[arg(long)]
    pub cell_model: PathBuf,
    /// Layer manifest (JSON) listing fixture tensors.
    #[arg(long)]
    pub layers: Option<PathBuf>,
    /// Synthetic layer `H,W,C_in,K,C_out,stride,pad`; repeatable.
    #[arg(long = "conv")]
    pub conv: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = vec!["bias".to_string(), "diff".to_string()])]
    pub scheme: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![4u32])]
    pub cell_bits: Vec<u32>,
    #[arg(long, default_value_t = 8)]
    pub weight_bits: u32,
    #[arg(long, default_value_t = 8)]
    pub input_bits: u32,
    #[arg(long, default_value_t = 64)]
    pub rows: usize,
    #[arg(long, default_value_t = 64)]
    pub cols: usize,
    /// Evaluate at most this many evenly spaced output positions per layer.
    #[arg(long)]
    pub max_patches: Option<usize>,
    /// σ of synthetic layer weights as a fraction of the largest weight.
    #[arg(long, default_value_t = 0.125)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MvmArgs {
    #[arg(long)]
    pub cell_model: PathBuf,
    /// JSON request: weights, inputs, input_bits, signedness, scheme.
    #[arg(long)]
    pub request: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MakeFixturesArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// What a command produced: the main body (CSV or JSON) and a summary.
#[derive(Debug, Clone)]
pub struct Output {
    pub body: String,
    pub summary: serde_json::Value,
    /// Files written by the command itself.
    pub written: Vec<PathBuf>,
}

impl Output {
    fn new(body: String, summary: serde_json::Value) -> Self {
        Self {
            body,
            summary,
            written: Vec::new(),
        }
    }
}

pub fn run(command: &Command) -> CliResult<Output> {
    match command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::SweepMappings(a) => cmd_sweep_mappings(a),
        Command::ConvBench(a) => cmd_conv_bench(a),
        Command::Mvm(a) => cmd_mvm(a),
        Command::MakeFixtures(a) => cmd_make_fixtures(a),
    }
}

/// Runs `f` on a pool with `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn load_model(path: &Path) -> CliResult<CellModel> {
    Ok(CellModel::load(path)?)
}

fn parse_schemes(names: &[String]) -> CliResult<Vec<MappingKind>> {
    names
        .iter()
        .map(|s| match s.as_str() {
            "bias" => Ok(MappingKind::Bias),
            "diff" => Ok(MappingKind::Differential),
            other => Err(CliError::Config(format!(
                "--scheme must be bias or diff, got `{other}`"
            ))),
        })
        .collect()
}

fn check_bits(flag: &str, bits: u32, max: u32) -> CliResult<()> {
    if !(1..=max).contains(&bits) {
        return Err(CliError::Config(format!("{flag} must be in 1..={max}, got {bits}")));
    }
    Ok(())
}

pub fn cmd_calibrate(a: &CalibrateArgs) -> CliResult<Output> {
    let points = read_sweep_csv(&a.sweep)?;
    let pulse = PulseSpec {
        t_pulse_ns: a.t_pulse_ns,
        t_active_ns: a.t_active_ns,
        t_rise_fall_ns: a.t_rf_ns,
        v_rb: a.v_rb,
        v_rw: a.v_rw,
    };
    pulse.validate()?;
    let sweep: Vec<(f64, f64)> = points.iter().map(|&(g, e)| (g * US, e * FJ)).collect();
    let fit = fit_cell_params(&sweep, &pulse)?;
    let g_lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let g_hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut model = CellModel::from_fit(
        a.name.clone(),
        pulse,
        (a.g_min_us.unwrap_or(g_lo), a.g_max_us.unwrap_or(g_hi)),
        &fit,
    )?;
    model.r_wire_ohm = a.r_wire_ohm;
    model.c_bl_ff = a.c_bl_ff;
    model.c_wl_ff = a.c_wl_ff;
    model.c_sl_ff = a.c_sl_ff;
    model.validate()?;

    let body = model.to_json_string()? + "\n";
    let summary = json!({
        "points": points.len(),
        "alpha": fit.alpha,
        "p_wl_uw": fit.p_wl_w / 1e-6,
        "residual_rms_fj": fit.residual_rms_j / FJ,
    });
    let mut out = Output::new(body, summary);
    if !a.dry_run {
        if let Some(path) = &a.out {
            model.store(path)?;
            out.written.push(path.clone());
        }
    }
    Ok(out)
}

struct MvmStats {
    report: EnergyReport,
    g_x_mean_us: f64,
    g_x_max_us: f64,
}

fn stats(out: &MvmOutput) -> MvmStats {
    let pulses = &out.report.per_pulse;
    let n = pulses.len().max(1) as f64;
    MvmStats {
        report: out.report.clone(),
        g_x_mean_us: pulses.iter().map(|p| p.g_x_us).sum::<f64>() / n,
        g_x_max_us: pulses.iter().map(|p| p.g_x_us).fold(0.0, f64::max),
    }
}

pub fn cmd_validate(a: &ValidateArgs) -> CliResult<Output> {
    let model = load_model(&a.cell_model)?;
    check_bits("--weight-bits", a.weight_bits, 16)?;
    check_bits("--cell-bits", a.cell_bits, 8)?;
    check_bits("--input-bits", a.input_bits, 16)?;
    if a.cell_bits > a.weight_bits {
        return Err(CliError::Config("--cell-bits must not exceed --weight-bits".into()));
    }
    if a.rows == 0 || a.cols == 0 {
        return Err(CliError::Config("--rows and --cols must be positive".into()));
    }
    let config = a.solver.config(a.rows, a.cols)?;
    let params = ValidationParams {
        rows: a.rows,
        cols: a.cols,
        n_mvms: a.n,
        sparsities: a.sparsity.clone(),
        seed: a.seed,
        sigma: a.sigma,
        weight_bits: a.weight_bits,
        input_bits: a.input_bits,
    };
    let set = gen_validation_set(&params).map_err(|e| CliError::Config(e.to_string()))?;
    let scheme = MappingScheme::new(MappingKind::Unsigned, a.cell_bits, a.weight_bits)?;
    // One crossbar holds the whole matrix; the tile gets as many physical
    // columns as the mapping needs.
    let phys_cols = a.cols * scheme.columns_per_weight();
    let config = MvmConfig {
        tile_cols: phys_cols,
        ..config
    };
    let unit = MvmUnit::new(&model, set.weights.view(), scheme, config)?;

    let started = Instant::now();
    let results: Vec<MvmOutput> = set
        .inputs
        .par_iter()
        .map(|(_, v)| unit.execute(v, a.input_bits, Signedness::Unsigned))
        .collect::<Result<_, _>>()?;
    let wall_fast = started.elapsed().as_secs_f64();

    let mut body =
        String::from("mvm,seed,sparsity,active_inputs,pulses,e_total_fj,e_bl_fj,e_wl_fj,g_x_mean_us,g_x_max_us\n");
    for (k, ((s, v), out)) in set.inputs.iter().zip(&results).enumerate() {
        let st = stats(out);
        let active = v.iter().filter(|&&x| x != 0).count();
        writeln!(
            body,
            "{k},{},{s},{active},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            a.seed,
            st.report.pulses(),
            st.report.e_total_fj,
            st.report.e_bl_fj,
            st.report.e_wl_fj,
            st.g_x_mean_us,
            st.g_x_max_us
        )
        .unwrap();
    }

    let checked = a.oracle_check.min(results.len());
    let oracle_unit = MvmUnit::new(
        &model,
        set.weights.view(),
        scheme,
        MvmConfig {
            solver: SolverKind::Oracle,
            ..config
        },
    )?;
    let started = Instant::now();
    let oracle: Vec<MvmOutput> = set.inputs[..checked]
        .par_iter()
        .map(|(_, v)| oracle_unit.execute(v, a.input_bits, Signedness::Unsigned))
        .collect::<Result<_, _>>()?;
    let wall_oracle = started.elapsed().as_secs_f64();
    let e_fast: f64 = results[..checked].iter().map(|r| r.report.e_total_fj).sum();
    let e_oracle: f64 = oracle.iter().map(|r| r.report.e_total_fj).sum();
    let rel_err = if e_oracle > 0.0 {
        (e_fast - e_oracle).abs() / e_oracle
    } else {
        (e_fast - e_oracle).abs()
    };
    writeln!(body, "oracle_check,{checked},{e_fast:.6},{e_oracle:.6},{rel_err:.6e}").unwrap();

    let total: f64 = results.iter().map(|r| r.report.e_total_fj).sum();
    let summary = json!({
        "command": "validate",
        "cell_model": model.name,
        "n": results.len(),
        "rows": a.rows,
        "cols": a.cols,
        "r_wire_ohm": model.r_wire_ohm,
        "e_total_fj": total,
        "e_mean_fj": total / results.len().max(1) as f64,
        "oracle_checked": checked,
        "oracle_rel_err": rel_err,
        "wall_s": wall_fast,
        "wall_oracle_s": wall_oracle,
    });
    Ok(Output::new(body, summary))
}

/// Average energy per logical MAC of `n` uniform input vectors on `w`.
fn mean_mac_energy(
    model: &CellModel,
    w: &Array2<i32>,
    scheme: MappingScheme,
    config: MvmConfig,
    inputs: &[Vec<i64>],
    input_bits: u32,
) -> CliResult<(f64, usize)> {
    let unit = MvmUnit::new(model, w.view(), scheme, config)?;
    let outs: Vec<MvmOutput> = inputs
        .par_iter()
        .map(|v| unit.execute(v, input_bits, Signedness::Unsigned))
        .collect::<Result<_, _>>()?;
    let energy: f64 = outs.iter().map(|o| o.report.e_total_fj).sum();
    let pulses = outs.iter().map(|o| o.report.pulses()).sum();
    let macs = (inputs.len() * w.nrows() * w.ncols()) as f64;
    Ok((energy / macs, pulses))
}

pub fn cmd_sweep_mappings(a: &SweepArgs) -> CliResult<Output> {
    let model = load_model(&a.cell_model)?;
    let kinds = parse_schemes(&a.scheme)?;
    check_bits("--weight-bits", a.weight_bits, 16)?;
    check_bits("--input-bits", a.input_bits, 16)?;
    for &c in &a.cell_bits {
        check_bits("--cell-bits", c, 8)?;
        if c > a.weight_bits {
            return Err(CliError::Config(format!(
                "--cell-bits {c} exceeds --weight-bits {}",
                a.weight_bits
            )));
        }
    }
    if a.n == 0 || a.rows == 0 || a.cols == 0 {
        return Err(CliError::Config("--n, --rows and --cols must be positive".into()));
    }
    if let Some(s) = a.sigma.iter().find(|s| !(**s >= 0.0)) {
        return Err(CliError::Config(format!("--sigma values must be >= 0, got {s}")));
    }
    let config = a.solver.config(a.rows, a.cols)?;

    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(a.seed);
    let inputs: Vec<Vec<i64>> = (0..a.n)
        .map(|_| gen_uniform_inputs(a.rows, a.input_bits, &mut rng))
        .collect();

    let mut body = String::from("scheme,cell_bits,sigma,e_per_mac_fj\n");
    let mut rows = Vec::new();
    for &kind in &kinds {
        for &c in &a.cell_bits {
            let scheme = MappingScheme::new(kind, c, a.weight_bits)?;
            let tile_cols = config.tile_cols.max(scheme.columns_per_weight());
            for &sigma in &a.sigma {
                // Same normal draws for every σ, only the scale changes.
                let w = gen_synthetic_weights(a.rows, a.cols, sigma, a.weight_bits, a.seed.wrapping_add(1))?;
                let (e, _) = mean_mac_energy(
                    &model,
                    &w,
                    scheme,
                    MvmConfig { tile_cols, ..config },
                    &inputs,
                    a.input_bits,
                )?;
                writeln!(body, "{kind},{c},{sigma},{e:.6}").unwrap();
                rows.push(json!({"scheme": kind.as_str(), "cell_bits": c, "sigma": sigma, "e_per_mac_fj": e}));
            }
        }
    }
    let summary = json!({"command": "sweep-mappings", "cell_model": model.name, "rows": rows});
    Ok(Output::new(body, summary))
}

/// Layer manifest entry: tensor fixture paths are relative to the manifest.
#[derive(Debug, Clone, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub input: PathBuf,
    pub weights: PathBuf,
    #[serde(default = "one_pair")]
    pub stride: (usize, usize),
    #[serde(default)]
    pub padding: (usize, usize),
}

fn one_pair() -> (usize, usize) {
    (1, 1)
}

#[derive(Debug, Clone, Deserialize)]
pub struct LayerManifest {
    pub layers: Vec<LayerEntry>,
}

struct Layer {
    name: String,
    spec: ConvSpec,
    input: ndarray::Array3<i32>,
    kernel: ndarray::Array4<i32>,
}

fn parse_conv(text: &str, weight_bits: u32, activation_bits: u32) -> CliResult<ConvSpec> {
    let v: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("--conv expects H,W,C_in,K,C_out,stride,pad; got `{text}`")))?;
    let [h, w, c_in, k, c_out, stride, pad] = v[..] else {
        return Err(CliError::Config(format!("--conv expects 7 values, got `{text}`")));
    };
    let spec = ConvSpec {
        height: h,
        width: w,
        c_in,
        k_h: k,
        k_w: k,
        c_out,
        stride: (stride, stride),
        padding: (pad, pad),
        weight_bits,
        activation_bits,
    };
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

fn load_layers(a: &ConvArgs) -> CliResult<Vec<Layer>> {
    let mut layers = Vec::new();
    if let Some(path) = &a.layers {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let manifest: LayerManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for entry in manifest.layers {
            let input = Tensor::read(base.join(&entry.input))?.to_array3()?;
            let kernel = Tensor::read(base.join(&entry.weights))?.to_array4()?;
            let (h, w, c_in) = input.dim();
            let (k_h, k_w, _, c_out) = kernel.dim();
            let spec = ConvSpec {
                height: h,
                width: w,
                c_in,
                k_h,
                k_w,
                c_out,
                stride: entry.stride,
                padding: entry.padding,
                weight_bits: a.weight_bits,
                activation_bits: a.input_bits,
            };
            layers.push(Layer {
                name: entry.name,
                spec,
                input,
                kernel,
            });
        }
    }
    for (k, text) in a.conv.iter().enumerate() {
        let spec = parse_conv(text, a.weight_bits, a.input_bits)?;
        let (input, kernel) = gen_conv_layer(&spec, a.sigma, a.seed.wrapping_add(k as u64))?;
        layers.push(Layer {
            name: format!("conv{k}"),
            spec,
            input,
            kernel,
        });
    }
    if layers.is_empty() {
        return Err(CliError::Config(
            "conv-bench needs --layers or at least one --conv".into(),
        ));
    }
    Ok(layers)
}

fn spread(n: usize, max: Option<usize>) -> Vec<usize> {
    match max {
        Some(k) if k < n => (0..k).map(|i| i * n / k).collect(),
        _ => (0..n).collect(),
    }
}

pub fn cmd_conv_bench(a: &ConvArgs) -> CliResult<Output> {
    let model = load_model(&a.cell_model)?;
    let kinds = parse_schemes(&a.scheme)?;
    check_bits("--weight-bits", a.weight_bits, 16)?;
    check_bits("--input-bits", a.input_bits, 16)?;
    for &c in &a.cell_bits {
        check_bits("--cell-bits", c, 8)?;
    }
    if a.max_patches == Some(0) {
        return Err(CliError::Config("--max-patches must be positive".into()));
    }
    let config = a.solver.config(a.rows, a.cols)?;
    let layers = load_layers(a)?;

    let mut body = String::from("layer,scheme,cell_bits,e_per_mac_fj,mac_count,pulses\n");
    let mut rows = Vec::new();
    for layer in &layers {
        let lowered = im2col(&layer.spec, &layer.input, &layer.kernel)?;
        let picks = spread(lowered.patches.len(), a.max_patches);
        let patches: Vec<Vec<i64>> = picks.iter().map(|&i| lowered.patches[i].clone()).collect();
        let macs = (patches.len() * lowered.weights.nrows() * lowered.weights.ncols()) as u64;
        for &kind in &kinds {
            for &c in &a.cell_bits {
                let scheme = MappingScheme::new(kind, c, a.weight_bits)?;
                let tile_cols = config.tile_cols.max(scheme.columns_per_weight());
                let (e, pulses) = mean_mac_energy(
                    &model,
                    &lowered.weights,
                    scheme,
                    MvmConfig { tile_cols, ..config },
                    &patches,
                    a.input_bits,
                )?;
                writeln!(body, "{},{kind},{c},{e:.6},{macs},{pulses}", layer.name).unwrap();
                rows.push(json!({"layer": layer.name, "scheme": kind.as_str(), "cell_bits": c, "e_per_mac_fj": e}));
            }
        }
    }
    let summary = json!({"command": "conv-bench", "cell_model": model.name, "rows": rows});
    Ok(Output::new(body, summary))
}

pub fn cmd_mvm(a: &MvmArgs) -> CliResult<Output> {
    let model = load_model(&a.cell_model)?;
    let text =
        std::fs::read_to_string(&a.request).map_err(|e| CliError::Io(format!("{}: {e}", a.request.display())))?;
    let req: MvmRequest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", a.request.display())))?;
    let config = a.solver.config(req.tile_rows, req.tile_cols)?;
    let outs = execute_mvm(&req, &model, &config)?;
    let body = serde_json::to_string_pretty(&json!({ "results": outs })).expect("serialisable") + "\n";
    let total: f64 = outs.iter().map(|o| o.report.e_total_fj).sum();
    let summary = json!({"command": "mvm", "requests": outs.len(), "e_total_fj": total});
    Ok(Output::new(body, summary))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn make_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// `cells/`: the four reference cell models and config A's endpoint sweep.
/// `layers/`: a small VGG-style stack of synthetic layers, later layers deeper
/// and spatially smaller.
pub fn cmd_make_fixtures(a: &MakeFixturesArgs) -> CliResult<Output> {
    let cells = a.out_dir.join("cells");
    make_dir(&cells)?;
    let mut written = Vec::new();
    for cfg in &REFERENCE_CONFIGS {
        let model = cfg.cell_model()?;
        let path = cells.join(format!("config_{}.json", cfg.id.to_ascii_lowercase()));
        model.store(&path)?;
        written.push(path);
    }
    let a_cfg = ReferenceConfig::get('A').expect("config A exists");
    let sweep = format!(
        "g_us,e_fj\n{},{}\n{},{}\n",
        a_cfg.g_range_us.0, a_cfg.e_range_fj.0, a_cfg.g_range_us.1, a_cfg.e_range_fj.1
    );
    let path = cells.join("config_a_sweep.csv");
    write_text(&path, &sweep)?;
    written.push(path);

    let layers_dir = a.out_dir.join("layers");
    make_dir(&layers_dir)?;
    let specs = [
        ("block1_conv1", (16, 16, 3, 3, 8, 1, 1)),
        ("block2_conv1", (8, 8, 8, 3, 16, 1, 1)),
        ("block3_conv1", (4, 4, 16, 3, 16, 1, 1)),
        ("block3_pointwise", (4, 4, 16, 1, 16, 1, 0)),
    ];
    let mut entries = Vec::new();
    for (k, (name, (h, w, c_in, kk, c_out, stride, pad))) in specs.iter().enumerate() {
        let spec = ConvSpec {
            height: *h,
            width: *w,
            c_in: *c_in,
            k_h: *kk,
            k_w: *kk,
            c_out: *c_out,
            stride: (*stride, *stride),
            padding: (*pad, *pad),
            weight_bits: 8,
            activation_bits: 8,
        };
        let (input, kernel) = gen_conv_layer(&spec, 0.125, a.seed.wrapping_add(k as u64))?;
        let input_file = format!("{name}.input.xbwl");
        let weight_file = format!("{name}.weights.xbwl");
        let it = Tensor::new(DType::U8, vec![*h, *w, *c_in], input.iter().copied().collect())?;
        let wt = Tensor::new(
            DType::I8,
            vec![*kk, *kk, *c_in, *c_out],
            kernel.iter().copied().collect(),
        )?;
        for (t, file) in [(&it, &input_file), (&wt, &weight_file)] {
            let path = layers_dir.join(file);
            t.write(&path)?;
            written.push(path);
        }
        entries.push(json!({
            "name": name,
            "input": input_file,
            "weights": weight_file,
            "stride": [stride, stride],
            "padding": [pad, pad],
        }));
    }
    let manifest = serde_json::to_string_pretty(&json!({ "layers": entries })).expect("serialisable") + "\n";
    let path = layers_dir.join("layers.json");
    write_text(&path, &manifest)?;
    written.push(path);
    let mut out = Output::new(manifest, json!({"command": "make-fixtures", "layers": specs.len()}));
    out.written = written;
    Ok(out)
}
