mod oracles;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recap_core::encoding::{build_mask, mask_overlap, quantize, BitMatrix, LevelCode, QuantizerSpec};
use recap_core::reservoir::StateVector;

fn code(levels: Vec<u8>, k: usize) -> LevelCode {
    LevelCode::new(levels, &QuantizerSpec::new(k).unwrap()).unwrap()
}

fn dense_of(m: &BitMatrix) -> Vec<Vec<bool>> {
    (0..m.n()).map(|i| (0..m.n()).map(|j| m.get(i, j)).collect()).collect()
}

#[test]
fn thousand_uniform_values_match_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in [2, 4, 8] {
        let q = QuantizerSpec::new(k).unwrap();
        let values: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let got = quantize(&StateVector::new(values.clone()), &q).unwrap();
        let want: Vec<u8> = values.iter().map(|&v| oracles::level_scan(v, k)).collect();
        assert_eq!(got.levels(), &want[..]);
    }
}

#[test]
fn edges_themselves_open_their_bin() {
    for k in [2usize, 3, 4, 5, 7, 8, 16] {
        let q = QuantizerSpec::new(k).unwrap();
        for level in 0..k {
            assert_eq!(q.level_of(q.edge(level)) as usize, level);
            assert_eq!(oracles::level_scan(q.edge(level), k) as usize, level);
        }
        assert_eq!(q.level_of(1.0) as usize, k - 1);
    }
}

proptest! {
    #[test]
    fn quantize_matches_scan(values in prop::collection::vec(-1.0f64..=1.0, 1..200), k in 2usize..=16) {
        let got = quantize(&StateVector::new(values.clone()), &QuantizerSpec::new(k).unwrap()).unwrap();
        for (z, v) in got.levels().iter().zip(&values) {
            prop_assert_eq!(*z, oracles::level_scan(*v, k));
        }
    }

    #[test]
    fn quantizer_is_monotone(a in -1.0f64..=1.0, b in -1.0f64..=1.0, k in 2usize..=16) {
        let q = QuantizerSpec::new(k).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(q.level_of(lo) <= q.level_of(hi));
    }

    #[test]
    fn perturbation_inside_bin_is_absorbed(
        k in 2usize..=16,
        level_seed in any::<u32>(),
        offset in -0.49f64..0.49,
        delta in -1.0f64..1.0,
    ) {
        let q = QuantizerSpec::new(k).unwrap();
        let level = level_seed as usize % k;
        let width = 2.0 / k as f64;
        let center = q.edge(level) + width / 2.0;
        let v = center + offset * width;
        // Margin to the nearer edge, shrunk for rounding.
        let eps = width / 2.0 - (v - center).abs() - 1e-12;
        prop_assume!(eps > 0.0);
        let d = delta * eps;
        prop_assert_eq!(q.level_of(v + d), q.level_of(v));
    }

    #[test]
    fn mask_matches_double_loop(levels in prop::collection::vec(0u8..8, 1..140)) {
        let m = build_mask(&code(levels.clone(), 8));
        let want = oracles::mask_dense(&levels);
        prop_assert_eq!(dense_of(m.matrix()), want.clone());
        for i in 0..levels.len() {
            prop_assert!(!m.get(i, i));
            let row: u64 = (0..levels.len()).filter(|&j| m.get(i, j)).count() as u64;
            let same = levels.iter().filter(|&&z| z == levels[i]).count() as u64;
            prop_assert_eq!(row, same - 1);
            for j in 0..levels.len() {
                prop_assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        prop_assert_eq!(m.popcount_from_buckets(), m.popcount());
    }

    #[test]
    fn overlap_matches_dense_count(
        a in prop::collection::vec(0u8..4, 16),
        b in prop::collection::vec(0u8..4, 16),
    ) {
        let ma = build_mask(&code(a.clone(), 4));
        let mb = build_mask(&code(b.clone(), 4));
        let want = oracles::frobenius(&oracles::mask_dense(&a), &oracles::mask_dense(&b));
        prop_assert_eq!(mask_overlap(&ma, &mb).unwrap(), want);
        prop_assert_eq!(mask_overlap(&mb, &ma).unwrap(), want);
        prop_assert_eq!(mask_overlap(&ma, &ma).unwrap(), ma.popcount());
    }
}

#[test]
fn small_sizes_and_levels_hundred_seeds() {
    for n in [4usize, 8, 16] {
        for k in [2usize, 4, 8] {
            for seed in 0..100u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + n as u64 * 7 + k as u64);
                let values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let z = quantize(&StateVector::new(values.clone()), &QuantizerSpec::new(k).unwrap()).unwrap();
                let want: Vec<u8> = values.iter().map(|&v| oracles::level_scan(v, k)).collect();
                assert_eq!(z.levels(), &want[..]);
                assert_eq!(dense_of(build_mask(&z).matrix()), oracles::mask_dense(&want));
            }
        }
    }
}

#[test]
fn overlap_with_empty_mask_is_zero() {
    let m = build_mask(&code((0..20).map(|i| (i % 3) as u8).collect(), 4));
    let lonely = build_mask(&code((0..20).map(|i| (i % 4) as u8).collect(), 4));
    assert_eq!(m.matrix().and_count(&BitMatrix::zeros(20)).unwrap(), 0);
    assert!(mask_overlap(&m, &build_mask(&code(vec![0; 21], 4))).is_err());
    assert!(mask_overlap(&m, &lonely).unwrap() <= lonely.popcount());
}
