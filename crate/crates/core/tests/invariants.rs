use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qic_core::blocktransform::{dct8x8, dequantize, idct8x8, quantize, QuantSpec};
use qic_core::costmodel::{
    cross_check, gate_connection_bits, total_bits, zero_savings, CostInputs, CostParams,
};
use qic_core::encoders::{block_data, build_circuit, count_nonzero, EncodableDatum, Scheme};
use qic_core::harness::{
    block_circuits, decode_image, encode_dct, encode_pixels, forward_dct, run_pixel_domain,
};
use qic_core::pixelgrid::{GrayImage, Tile};
use qic_core::qcircuit::{GateKind, Qubit, RegisterLayout};
use qic_core::simulator::{
    predict_zero_discard, simulate_basis, simulate_basis_dense, simulate_statevector,
    simulate_trajectories,
};
use qic_core::Execution;

const SEQ: Execution = Execution::Sequential;

fn block() -> impl Strategy<Value = Vec<EncodableDatum>> {
    prop::collection::vec(prop_oneof![3 => Just(0i32), 2 => -255..=255i32], 64).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(k, v)| EncodableDatum::new(v, k / 8, k % 8))
            .collect()
    })
}

fn inputs(data: &[EncodableDatum]) -> CostInputs {
    CostInputs {
        stats: count_nonzero(data.iter().map(|d| d.value)),
        s_x: 8,
        s_y: 8,
        b_z: zero_savings(data, 3),
        b_bpe: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gate_counts_order(data in block()) {
        let l = RegisterLayout::new(8, 3).unwrap();
        let count = |s| build_circuit(&data, l, s).unwrap().stats();
        let (z, s, e) = (count(Scheme::Zscneqr), count(Scheme::Scmfrqi), count(Scheme::Efrqi));
        prop_assert!(z.control_terminals <= s.control_terminals);
        prop_assert!(s.total_gates() <= e.total_gates());
        prop_assert_eq!(s.reset, z.reset);
        prop_assert_eq!(e.reset, 0);
        prop_assert_eq!(e.mcx, s.mcx + s.reset);
    }

    #[test]
    fn cost_ordering(data in block(), c_t in 0u64..4, r_n in 0u64..4, a in 0u64..4) {
        let p = CostParams { c_t, r_n, a_bit_per_datum: a };
        let i = inputs(&data);
        let bits = |s| total_bits(s, &i, &p).unwrap().bits_total;
        let (z, s, e) = (bits(Scheme::Zscneqr), bits(Scheme::Scmfrqi), bits(Scheme::Efrqi));
        prop_assert!(z <= s);
        if r_n <= 6 + c_t {
            prop_assert!(s <= e);
        }
    }

    #[test]
    fn cross_check_holds_for_all_aux_schemes(data in block(), c_t in 0u64..3, r_n in 0u64..3) {
        let p = CostParams { c_t, r_n, a_bit_per_datum: 1 };
        let l = RegisterLayout::new(8, 3).unwrap();
        for s in [Scheme::Zscneqr, Scheme::Scmfrqi, Scheme::Efrqi] {
            let r = total_bits(s, &inputs(&data), &p).unwrap();
            let c = build_circuit(&data, l, s).unwrap();
            prop_assert!(cross_check([&c], &r, &p).agrees(), "{s}");
        }
    }

    #[test]
    fn aux_schemes_decode_magnitudes(data in block(), s in prop::sample::select(vec![Scheme::Scmfrqi, Scheme::Efrqi, Scheme::StrictNeqr])) {
        let l = RegisterLayout::new(8, 3).unwrap();
        let map = simulate_basis(&build_circuit(&data, l, s).unwrap(), SEQ).unwrap();
        for d in &data {
            prop_assert_eq!(map.get(d.y, d.x), d.magnitude() as u64);
        }
    }

    #[test]
    fn zscneqr_matches_subset_prediction(data in block()) {
        let l = RegisterLayout::new(8, 3).unwrap();
        let map = simulate_basis(&build_circuit(&data, l, Scheme::Zscneqr).unwrap(), SEQ).unwrap();
        prop_assert_eq!(map, predict_zero_discard(&data, l));
    }

    #[test]
    fn sparse_engine_matches_dense(data in block(), s in prop::sample::select(Scheme::ALL.to_vec())) {
        let l = RegisterLayout::new(8, 3).unwrap();
        let c = build_circuit(&data, l, s).unwrap();
        prop_assert_eq!(simulate_basis(&c, SEQ).unwrap(), simulate_basis_dense(&c, SEQ).unwrap());
    }

    #[test]
    fn parseval(tile in prop::array::uniform32(any::<u8>()).prop_flat_map(|a| prop::array::uniform32(any::<u8>()).prop_map(move |b| {
        let mut t: Tile = [0; 64];
        t[..32].copy_from_slice(&a);
        t[32..].copy_from_slice(&b);
        t
    }))) {
        let rb = dct8x8(&tile);
        let spatial: f64 = tile.iter().map(|&t| (t as f64 - 128.0).powi(2)).sum();
        let freq: f64 = rb.0.iter().map(|c| c * c).sum();
        prop_assert!((spatial - freq).abs() <= 1e-6 * spatial.max(1.0));
        // Q = 1 loses at most one level to coefficient rounding.
        let back = idct8x8(&dequantize(&quantize(&rb, QuantSpec::new(1).unwrap())));
        prop_assert!(back.iter().zip(tile.iter()).all(|(&a, &b)| a.abs_diff(b) <= 1));
    }
}

#[test]
fn zscneqr_drops_exactly_the_zero_controls() {
    let l = RegisterLayout::new(8, 3).unwrap();
    let data = [EncodableDatum::new(7, 5, 2)];
    let c = build_circuit(&data, l, Scheme::Zscneqr).unwrap();
    let conn: Vec<_> = c
        .gates()
        .iter()
        .filter(|g| g.target == Qubit::Aux && g.kind == GateKind::Mcx)
        .collect();
    assert_eq!(conn.len(), 1);
    // y = 101, x = 010 -> three 1 bits.
    assert_eq!(conn[0].controls.len(), 3);
    assert_eq!(
        gate_connection_bits([&c], &CostParams::default()),
        3 + 1 + 1
    );
}

#[test]
fn parallel_and_sequential_agree() {
    let img = GrayImage::from_fn(64, 48, |x, y| ((x * 7) ^ (y * 13)) as u8);
    let q = QuantSpec::new(12).unwrap();
    for s in Scheme::ALL {
        let a = block_circuits(&forward_dct(&img, q, SEQ).unwrap(), s, SEQ).unwrap();
        let b = block_circuits(
            &forward_dct(&img, q, Execution::Parallel).unwrap(),
            s,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(a, b);
    }
    let c = encode_pixels(&img, Scheme::Zscneqr).unwrap();
    let c = &c.entries[0].circuit;
    assert_eq!(
        simulate_basis(c, SEQ).unwrap(),
        simulate_basis(c, Execution::Parallel).unwrap()
    );
}

#[test]
fn lossless_schemes_reproduce_the_quantized_image() {
    let img = GrayImage::from_fn(20, 12, |x, y| ((x * x + y * 5) % 256) as u8);
    let q = QuantSpec::new(10).unwrap();
    let reference = {
        let enc = forward_dct(&img, q, SEQ).unwrap();
        qic_core::harness::reconstruct(&enc, SEQ).crop_to_original()
    };
    for s in [Scheme::StrictNeqr, Scheme::Scmfrqi, Scheme::Efrqi] {
        let enc = encode_dct(&img, q, s, SEQ).unwrap();
        let maps: Vec<_> = enc
            .entries
            .iter()
            .map(|e| simulate_basis(&e.circuit, SEQ).unwrap())
            .collect();
        assert_eq!(decode_image(&enc, &maps, SEQ).unwrap(), reference, "{s}");
    }
    for s in [Scheme::StrictNeqr, Scheme::Scmfrqi, Scheme::Efrqi] {
        let enc = encode_pixels(&img, s).unwrap();
        let maps = [simulate_basis(&enc.entries[0].circuit, SEQ).unwrap()];
        assert_eq!(decode_image(&enc, &maps, SEQ).unwrap(), img, "{s}");
    }
}

#[test]
fn pixel_costs_are_ordered_on_random_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let img = GrayImage::from_fn(16, 16, |_, _| if rng.gen_bool(0.3) { 0 } else { rng.gen() });
        let r = run_pixel_domain(
            &img,
            &[Scheme::Zscneqr, Scheme::Scmfrqi, Scheme::Efrqi],
            &CostParams::default(),
        )
        .unwrap();
        assert!(r[0].bits_total < r[1].bits_total && r[1].bits_total < r[2].bits_total);
    }
}

#[test]
fn reset_trajectories_depend_on_seed() {
    // Two data at positions sharing no 1 bits: the auxiliary is entangled
    // with position when the reset fires, so the outcome is random.
    let l = RegisterLayout::new(2, 1).unwrap();
    let data = [EncodableDatum::new(1, 1, 0), EncodableDatum::new(2, 0, 1)];
    let c = build_circuit(&data, l, Scheme::Scmfrqi).unwrap();
    let seeds: Vec<u64> = (0..32).collect();
    let runs = simulate_trajectories(&c, &seeds, SEQ).unwrap();
    for r in &runs {
        assert!((r.norm() - 1.0).abs() < 1e-12);
    }
    let distinct: std::collections::BTreeSet<_> =
        runs.iter().map(|r| r.reset_outcomes.clone()).collect();
    assert!(distinct.len() > 1);
    // Same seed, same trajectory.
    assert_eq!(
        simulate_statevector(&c, 5).unwrap(),
        simulate_statevector(&c, 5).unwrap()
    );
}

#[test]
fn block_data_lists_nonzero_coefficients_in_raster_order() {
    let img = GrayImage::from_fn(8, 8, |x, y| (x * 8 + y) as u8);
    let enc = forward_dct(&img, QuantSpec::new(1).unwrap(), SEQ).unwrap();
    let b = &enc.blocks[0];
    let data = block_data(b);
    assert_eq!(data.len(), b.values.iter().filter(|&&v| v != 0).count());
    assert!(data
        .iter()
        .all(|d| d.value == b.at(d.y, d.x) && d.value != 0));
    assert!(data.windows(2).all(|w| (w[0].y, w[0].x) < (w[1].y, w[1].x)));
}
