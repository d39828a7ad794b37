//! End-to-end properties of the MVM unit against plain integer oracles.

use ndarray::{Array2, Array3, Array4};
use proptest::prelude::*;

use xbar_energy::cellmodel::{ReferenceConfig, FJ, US};
use xbar_energy::workload::{im2col, ConvSpec};
use xbar_energy::{CellModel, MappingKind, MappingScheme, MvmConfig, MvmUnit, Signedness};

fn model(id: char) -> CellModel {
    ReferenceConfig::get(id).unwrap().cell_model().unwrap()
}

fn matmul(w: &Array2<i32>, v: &[i64]) -> Vec<i64> {
    (0..w.ncols())
        .map(|l| (0..w.nrows()).map(|j| w[[j, l]] as i64 * v[j]).sum())
        .collect()
}

#[derive(Debug, Clone)]
struct Case {
    scheme: MappingScheme,
    input_bits: u32,
    signedness: Signedness,
    weights: Array2<i32>,
    inputs: Vec<i64>,
    tile: (usize, usize),
}

fn case_strategy() -> impl Strategy<Value = Case> {
    let shape = (
        prop_oneof![Just(MappingKind::Bias), Just(MappingKind::Differential)],
        prop::sample::select(vec![1u32, 2, 4, 8]),
        prop::sample::select(vec![4u32, 8, 16]),
        prop::sample::select(vec![4u32, 8, 16]),
        any::<bool>(),
        1usize..40,
        1usize..10,
        prop::sample::select(vec![8usize, 16, 64]),
    );
    shape.prop_flat_map(|(kind, c, wb, ib, signed, rows, cols, tr)| {
        let scheme = MappingScheme::new(kind, c.min(wb), wb).unwrap();
        let (lo, hi) = scheme.weight_range();
        let signedness = if signed {
            Signedness::Signed
        } else {
            Signedness::Unsigned
        };
        let (vlo, vhi) = signedness.range(ib);
        let tc = (3 * scheme.columns_per_weight()).max(16);
        (
            proptest::collection::vec(lo as i32..=hi as i32, rows * cols),
            proptest::collection::vec(vlo..=vhi, rows),
        )
            .prop_map(move |(w, v)| Case {
                scheme,
                input_bits: ib,
                signedness,
                weights: Array2::from_shape_vec((rows, cols), w).unwrap(),
                inputs: v,
                tile: (tr, tc),
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn execute_equals_integer_matmul(case in case_strategy()) {
        let m = model('C');
        let unit = MvmUnit::new(&m, case.weights.view(), case.scheme, MvmConfig::with_tile(case.tile.0, case.tile.1)).unwrap();
        let out = unit.execute(&case.inputs, case.input_bits, case.signedness).unwrap();
        prop_assert_eq!(out.output, matmul(&case.weights, &case.inputs));
    }

    #[test]
    fn cell_sum_equals_equivalent_conductance_form(case in case_strategy()) {
        let m = model('A');
        let unit = MvmUnit::new(&m, case.weights.view(), case.scheme, MvmConfig::with_tile(case.tile.0, case.tile.1)).unwrap();
        let train = xbar_energy::encoding::encode_inputs(&case.inputs, case.input_bits, case.signedness).unwrap();
        let out = unit.execute_train(&train).unwrap();

        // Cell-by-cell: every cell of an active row sees V_RB.
        let mut cells = 0.0;
        for op in unit.xbar_ops(&train).unwrap() {
            let tile = &unit.tiles()[op.tile];
            for (j, &on) in op.plane.iter().enumerate() {
                for &g in tile.g_us.row(j) {
                    cells += m.cell_pulse_energy(g * US, m.v_rb(), on).unwrap();
                }
            }
        }
        let cells = cells / FJ;
        let err = (out.report.e_total_fj - cells).abs();
        prop_assert!(err <= 1e-9 * cells.max(f64::MIN_POSITIVE), "G_X form {} vs cells {}", out.report.e_total_fj, cells);
    }
}

#[test]
fn energy_is_independent_of_tiling_when_tiles_fit_exactly() {
    let m = model('C');
    let scheme = MappingScheme::new(MappingKind::Bias, 4, 8).unwrap();
    let w = Array2::from_shape_fn((64, 32), |(j, i)| ((j * 7 + i * 13) % 255) as i32 - 127);
    let v: Vec<i64> = (0..64).map(|j| (j * 37 % 256) as i64).collect();
    let whole = MvmUnit::new(&m, w.view(), scheme, MvmConfig::with_tile(64, 64)).unwrap();
    let split = MvmUnit::new(&m, w.view(), scheme, MvmConfig::with_tile(16, 16)).unwrap();
    let a = whole.execute(&v, 8, Signedness::Unsigned).unwrap();
    let b = split.execute(&v, 8, Signedness::Unsigned).unwrap();
    assert_eq!(a.output, b.output);
    assert_eq!(split.tiles().len(), 16);
    assert!((a.report.e_bl_fj - b.report.e_bl_fj).abs() < 1e-9 * a.report.e_bl_fj);
    assert!((a.report.e_wl_fj - b.report.e_wl_fj).abs() < 1e-9 * a.report.e_wl_fj);
    assert!((a.report.e_total_fj - b.report.e_total_fj).abs() < 1e-9 * a.report.e_total_fj);
}

#[test]
fn parasitics_lower_bit_line_energy() {
    let c = model('C');
    let d = model('D');
    let scheme = MappingScheme::new(MappingKind::Differential, 4, 8).unwrap();
    let w = Array2::from_shape_fn((64, 32), |(j, i)| ((j * 11 + i * 5) % 201) as i32 - 100);
    let v: Vec<i64> = (0..64).map(|j| (j * 29 % 256) as i64).collect();
    let ideal = MvmUnit::new(&c, w.view(), scheme, MvmConfig::default()).unwrap();
    let loaded = MvmUnit::new(&d, w.view(), scheme, MvmConfig::default()).unwrap();
    let a = ideal.execute(&v, 8, Signedness::Unsigned).unwrap();
    let b = loaded.execute(&v, 8, Signedness::Unsigned).unwrap();
    assert_eq!(a.output, b.output);
    assert!(b.report.e_bl_fj < a.report.e_bl_fj);
    assert_eq!(a.report.e_wl_fj, b.report.e_wl_fj);
}

fn direct_conv(spec: &ConvSpec, input: &Array3<i32>, kernel: &Array4<i32>) -> Array3<i64> {
    let (oh, ow) = spec.output_dims();
    Array3::from_shape_fn((oh, ow, spec.c_out), |(y, x, o)| {
        let mut acc = 0i64;
        for kh in 0..spec.k_h {
            for kw in 0..spec.k_w {
                let iy = (y * spec.stride.0 + kh) as isize - spec.padding.0 as isize;
                let ix = (x * spec.stride.1 + kw) as isize - spec.padding.1 as isize;
                if iy < 0 || ix < 0 || iy as usize >= spec.height || ix as usize >= spec.width {
                    continue;
                }
                for ci in 0..spec.c_in {
                    acc += input[[iy as usize, ix as usize, ci]] as i64 * kernel[[kh, kw, ci, o]] as i64;
                }
            }
        }
        acc
    })
}

fn conv_strategy() -> impl Strategy<Value = (ConvSpec, Array3<i32>, Array4<i32>, MappingKind)> {
    (
        3usize..9,
        3usize..9,
        1usize..4,
        1usize..4,
        1usize..5,
        1usize..3,
        0usize..2,
        any::<bool>(),
    )
        .prop_flat_map(|(h, w, c_in, k, c_out, stride, pad, diff)| {
            let k = k.min(h + 2 * pad).min(w + 2 * pad);
            let spec = ConvSpec {
                height: h,
                width: w,
                c_in,
                k_h: k,
                k_w: k,
                c_out,
                stride: (stride, stride),
                padding: (pad, pad),
                weight_bits: 8,
                activation_bits: 8,
            };
            (
                proptest::collection::vec(0i32..256, h * w * c_in),
                proptest::collection::vec(-127i32..128, k * k * c_in * c_out),
            )
                .prop_map(move |(a, b)| {
                    let kind = if diff {
                        MappingKind::Differential
                    } else {
                        MappingKind::Bias
                    };
                    (
                        spec,
                        Array3::from_shape_vec((h, w, c_in), a).unwrap(),
                        Array4::from_shape_vec((k, k, c_in, c_out), b).unwrap(),
                        kind,
                    )
                })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lowered_conv_through_crossbar_equals_direct_conv((spec, input, kernel, kind) in conv_strategy()) {
        let m = model('C');
        let lowered = im2col(&spec, &input, &kernel).unwrap();
        let scheme = MappingScheme::new(kind, 4, 8).unwrap();
        let unit = MvmUnit::new(&m, lowered.weights.view(), scheme, MvmConfig::with_tile(16, 16)).unwrap();
        let expected = direct_conv(&spec, &input, &kernel);
        let (_, ow) = lowered.output_dims;
        for (p, patch) in lowered.patches.iter().enumerate() {
            let y = unit.execute(patch, 8, Signedness::Unsigned).unwrap().output;
            for (o, v) in y.into_iter().enumerate() {
                prop_assert_eq!(v, expected[[p / ow, p % ow, o]]);
            }
        }
    }
}

#[test]
fn pointwise_conv_equals_plain_mvm() {
    let m = model('C');
    let spec = ConvSpec {
        height: 1,
        width: 1,
        c_in: 24,
        k_h: 1,
        k_w: 1,
        c_out: 10,
        stride: (1, 1),
        padding: (0, 0),
        weight_bits: 8,
        activation_bits: 8,
    };
    let kernel = Array4::from_shape_fn((1, 1, 24, 10), |(_, _, c, o)| ((c * 31 + o * 17) % 200) as i32 - 100);
    let input = Array3::from_shape_fn((1, 1, 24), |(_, _, c)| (c * 9 % 256) as i32);
    let lowered = im2col(&spec, &input, &kernel).unwrap();
    let plain = Array2::from_shape_fn((24, 10), |(c, o)| kernel[[0, 0, c, o]]);
    assert_eq!(lowered.weights, plain);

    let scheme = MappingScheme::new(MappingKind::Bias, 2, 8).unwrap();
    let v: Vec<i64> = input.iter().map(|&x| x as i64).collect();
    let a = MvmUnit::new(&m, lowered.weights.view(), scheme, MvmConfig::default())
        .unwrap()
        .execute(&lowered.patches[0], 8, Signedness::Unsigned)
        .unwrap();
    let b = MvmUnit::new(&m, plain.view(), scheme, MvmConfig::default())
        .unwrap()
        .execute(&v, 8, Signedness::Unsigned)
        .unwrap();
    assert_eq!(a, b);
}
