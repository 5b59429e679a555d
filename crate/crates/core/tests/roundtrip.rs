use proptest::prelude::*;

use qic_core::blocktransform::QuantSpec;
use qic_core::encoders::{build_circuit, extract_data, EncodableDatum, Scheme};
use qic_core::harness::{encode_dct, EncodedImage};
use qic_core::pixelgrid::{load_pgm, split_blocks, GrayImage};
use qic_core::qcircuit::{parse, serialize, RegisterLayout};
use qic_core::Execution;

fn image(max_side: usize) -> impl Strategy<Value = GrayImage> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h)
            .prop_map(move |s| GrayImage::new(w, h, s).unwrap())
    })
}

fn scheme() -> impl Strategy<Value = Scheme> {
    prop::sample::select(Scheme::ALL.to_vec())
}

/// Distinct positions in an 8x8 block with nonzero values.
fn block_data() -> impl Strategy<Value = Vec<EncodableDatum>> {
    prop::collection::btree_map(
        (0..8usize, 0..8usize),
        (-300..=300i32).prop_filter("nonzero", |v| *v != 0),
        0..20,
    )
    .prop_map(|m| {
        m.into_iter()
            .map(|((y, x), v)| EncodableDatum::new(v, y, x))
            .collect()
    })
}

proptest! {
    #[test]
    fn pgm_binary_round_trip(img in image(24)) {
        prop_assert_eq!(load_pgm(&img.write_pgm()).unwrap(), img);
    }

    #[test]
    fn pgm_ascii_round_trip(img in image(12)) {
        prop_assert_eq!(load_pgm(&img.write_pgm_ascii()).unwrap(), img);
    }

    #[test]
    fn split_join_round_trip(img in image(40)) {
        let padded = img.pad_for_blocks(0);
        let grid = split_blocks(&padded).unwrap();
        let joined = grid.join(img.width(), img.height());
        prop_assert_eq!(&joined, &padded);
        prop_assert_eq!(joined.crop_to_original(), img);
    }

    #[test]
    fn padding_is_idempotent(img in image(40), fill in any::<u8>()) {
        let once = img.pad_to_pow2(fill);
        prop_assert!(once.is_pow2());
        prop_assert_eq!(once.pad_to_pow2(fill), once.clone());
        prop_assert_eq!(once.crop_to_original(), img);
    }

    #[test]
    fn circuit_text_round_trip(data in block_data(), s in scheme()) {
        let layout = RegisterLayout::new(9, 3).unwrap();
        let c = build_circuit(&data, layout, s).unwrap().with_source("t");
        prop_assert_eq!(parse(&serialize(&c)).unwrap(), c);
    }

    #[test]
    fn structure_recovers_data(data in block_data(), s in scheme()) {
        let layout = RegisterLayout::new(9, 3).unwrap();
        let c = build_circuit(&data, layout, s).unwrap();
        let mut want: Vec<_> = data.iter().map(|d| (d.y, d.x, d.magnitude())).collect();
        let mut got: Vec<_> = extract_data(&c).unwrap().iter().map(|d| (d.y, d.x, d.magnitude())).collect();
        want.sort_unstable();
        got.sort_unstable();
        prop_assert_eq!(got, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn container_round_trip(img in image(20), s in scheme(), q in 1u32..=80) {
        let enc = encode_dct(&img, QuantSpec::new(q).unwrap(), s, Execution::Sequential).unwrap();
        prop_assert_eq!(EncodedImage::parse(&enc.serialize()).unwrap(), enc);
    }
}
