use std::path::PathBuf;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use recap::config::{ModelKind, RunConfig};
use recap::container::{self, Model, ModelFile};
use recap::dataset::{self, Dataset, Split};
use recap::{external, idx, npy, tables};
use recap_core::corruptions::{CorruptionKind, ImageBatch, Provenance};
use recap_core::encoding::QuantizerSpec;
use recap_core::metrics::ErrorTable;
use recap_core::prototype::{HebbSpec, RecapModel};
use recap_core::reservoir::{build_reservoir, ReservoirSpec};
use recap_core::ridge::{RidgeModel, RidgeSpec};
use recap_core::rng::StreamRng;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn fixture_test() -> Dataset {
    let d = data_dir();
    dataset::load_idx(
        &d.join("mnist_test_1k-images-idx3-ubyte.gz"),
        &d.join("mnist_test_1k-labels-idx1-ubyte.gz"),
        Split::Test,
    )
    .unwrap()
}

#[test]
fn fixture_loads_with_expected_counts() {
    let t = fixture_test();
    assert_eq!(t.len(), 1000);
    assert_eq!((t.images().height(), t.images().width()), (28, 28));
    assert!(t.class_counts().values().all(|&c| c == 100));
    assert!(t.images().pixels().iter().all(|p| (0.0..=1.0).contains(p)));
    assert_eq!(t.digest(), fixture_test().digest());
}

#[test]
fn idx_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut pixels = vec![0u8; 2 * 28 * 28];
    pixels[5] = 255;
    pixels[900] = 128;
    let imgs = idx::IdxImages {
        count: 2,
        rows: 28,
        cols: 28,
        pixels,
    };
    for name in ["a-images", "b-images.gz"] {
        let ip = dir.path().join(name);
        let lp = dir.path().join(format!("{name}-labels"));
        idx::write_maybe_gz(&ip, &idx::encode_images(&imgs)).unwrap();
        idx::write_maybe_gz(&lp, &idx::encode_labels(&[3, 7])).unwrap();
        assert_eq!(idx::read_images(&ip).unwrap(), imgs);
        let d = dataset::load_idx(&ip, &lp, Split::Train).unwrap();
        assert_eq!(d.labels(), &[3, 7]);
        assert_eq!(d.images().image(0)[5], 1.0);
        assert_eq!(d.images().image(1)[900 - 784], 128.0 / 255.0);
        // Swapped files: each parser sees the other's magic.
        assert!(dataset::load_idx(&lp, &ip, Split::Train).is_err());
    }
    let mut truncated = idx::encode_images(&imgs);
    truncated.truncate(100);
    assert!(idx::parse_images(&truncated).is_err());
    let lp = dir.path().join("three-labels");
    idx::write_maybe_gz(&lp, &idx::encode_labels(&[1, 2, 3])).unwrap();
    let ip = dir.path().join("a-images");
    let err = dataset::load_idx(&ip, &lp, Split::Train).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn npy_round_trip_and_shape_errors() {
    let dir = tempfile::tempdir().unwrap();
    let t = fixture_test().head(25);
    let path = dir.path().join("clean_images.npy");
    npy::save_batch(&path, t.images()).unwrap();
    assert!(dir.path().join("clean_labels.npy").exists());
    let back = npy::load_batch(&path, Provenance::Clean).unwrap();
    assert_eq!(back.pixels(), t.images().pixels());
    assert_eq!(back.labels(), t.labels());

    let bytes = npy::encode_u8(&[2, 27, 27], &vec![0u8; 2 * 27 * 27]);
    let arr = npy::parse(&bytes).unwrap();
    assert!(npy::images_from_array(&arr, vec![0, 1], Provenance::Clean).is_err());

    let arr = npy::parse(&npy::encode_u8(&[1, 28, 28], &[255u8; 784])).unwrap();
    let b = npy::images_from_array(&arr, vec![4], Provenance::Clean).unwrap();
    assert!(b.pixels().iter().all(|&p| p == 1.0));
    assert!(npy::images_from_array(&arr, vec![4, 5], Provenance::Clean).is_err());

    let mut bad = bytes.clone();
    bad[1] = b'X';
    assert!(npy::parse(&bad).is_err());
}

#[test]
fn npy_reads_wider_little_and_big_endian_labels() {
    fn with_header(descr: &str, shape: &str, body: &[u8]) -> Vec<u8> {
        let mut header = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape}, }}");
        while (10 + header.len() + 1) % 64 != 0 {
            header.push(' ');
        }
        header.push('\n');
        let mut out = b"\x93NUMPY\x01\x00".to_vec();
        out.extend_from_slice(&(header.len() as u16).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(body);
        out
    }
    let le: Vec<u8> = [1i64, 9, 0].iter().flat_map(|v| v.to_le_bytes()).collect();
    let arr = npy::parse(&with_header("<i8", "(3,)", &le)).unwrap();
    assert_eq!(npy::labels_from_array(&arr).unwrap(), vec![1, 9, 0]);
    let be: Vec<u8> = [2u16, 3].iter().flat_map(|v| v.to_be_bytes()).collect();
    let arr = npy::parse(&with_header(">u2", "(2,)", &be)).unwrap();
    assert_eq!(arr.values, vec![2, 3]);
    let f = with_header("<f4", "(1,)", &[0, 0, 0, 0]);
    assert!(npy::parse(&f).is_err());
}

#[test]
fn subset_is_stratified_and_deterministic() {
    let t = fixture_test();
    let a = t.subset(7, 3).unwrap();
    let b = t.subset(7, 3).unwrap();
    assert_eq!(a.len(), 70);
    assert_eq!(a.digest(), b.digest());
    assert_ne!(a.digest(), t.subset(7, 4).unwrap().digest());
    assert!(a.class_counts().values().all(|&c| c == 7));
    assert!(a.source_index().windows(2).all(|w| w[0] < w[1]));
    let one = t.subset(1, 0).unwrap();
    assert_eq!(one.len(), 10);
    let full = t.subset(100, 9).unwrap();
    assert_eq!(full.digest(), t.digest());
    assert_eq!(full.images().pixels(), t.images().pixels());
    assert!(t.subset(101, 0).is_err());
    assert!(t.subset(0, 0).is_err());
}

#[test]
fn config_round_trip_and_rejections() {
    let c = RunConfig::default();
    assert_eq!((c.n_units, c.levels, c.steps), (1024, 8, 60));
    let back = RunConfig::from_toml(&c.to_toml()).unwrap();
    assert_eq!(back, c);
    let partial = RunConfig::from_toml("n_units = 64\nmodel = \"ridge\"\n").unwrap();
    assert_eq!(partial.n_units, 64);
    assert_eq!(partial.model, ModelKind::Ridge);
    assert_eq!(partial.decay, c.decay);
    assert!(RunConfig::from_toml("n_unit = 64").is_err());
    let bad = RunConfig {
        leak_rate: 0.0,
        ..RunConfig::default()
    };
    assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
    let threads = RunConfig {
        threads: Some(3),
        ..RunConfig::default()
    };
    assert_eq!(threads.digest(), c.digest());
    assert_ne!(partial.digest(), c.digest());
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    let full = RunConfig::load(&dir.join("full.toml")).unwrap();
    assert_eq!(full, RunConfig {
        train_images: full.train_images.clone(),
        train_labels: full.train_labels.clone(),
        test_images: full.test_images.clone(),
        test_labels: full.test_labels.clone(),
        ..RunConfig::default()
    });
    let desk = RunConfig::load(&dir.join("desk.toml")).unwrap();
    assert_eq!(desk.n_units, 256);
    desk.validate().unwrap();
}

#[test]
fn tables_round_trip() {
    let mut t = ErrorTable::new("ref");
    t.set_clean(0.125).unwrap();
    t.insert(CorruptionKind::Fog, 2, 0.5).unwrap();
    t.insert(CorruptionKind::GaussianNoise, 5, 0.3333333333333333).unwrap();
    let text = tables::format_table(&t);
    let back = tables::parse_table(&format!("# header\n\n{text}"), "ref").unwrap();
    assert_eq!(back, t);
    assert!(tables::parse_table("blur,1,0.2", "x").is_err());
    assert!(tables::parse_table("fog,6,0.2", "x").is_err());
    assert!(tables::parse_table("fog,1,1.5", "x").is_err());
    assert!(tables::parse_table("fog,1", "x").is_err());
}

#[test]
fn external_directory_loading() {
    let dir = tempfile::tempdir().unwrap();
    let t = fixture_test().head(12);
    npy::save_batch(&external::batch_path(dir.path(), CorruptionKind::Fog, 3), t.images()).unwrap();
    npy::save_batch(&dir.path().join("notes.npy"), t.images()).unwrap();
    let m = external::load_external(dir.path(), Some(t.labels())).unwrap();
    assert_eq!(m.len(), 1);
    let b = &m[&(CorruptionKind::Fog, 3)];
    assert!(matches!(
        b.provenance(),
        Provenance::External {
            kind: Some(CorruptionKind::Fog),
            severity: Some(3),
            ..
        }
    ));
    let mut wrong = t.labels().to_vec();
    wrong[0] = (wrong[0] + 1) % 10;
    assert!(external::load_external(dir.path(), Some(&wrong)).is_err());
    assert_eq!(external::parse_name("zoom_blur_5"), Some((CorruptionKind::ZoomBlur, 5)));
    assert_eq!(external::parse_name("zoom_blur_6"), None);
}

fn small_models() -> (Model, Model) {
    let spec = ReservoirSpec {
        n_units: 48,
        input_dim: 784,
        seed: 11,
        ..ReservoirSpec::default()
    };
    let train = fixture_test().subset(10, 1).unwrap();
    let hebb = HebbSpec::default();
    let data: Vec<(&[f32], usize)> = train.iter().collect();
    let recap = RecapModel::fit(
        build_reservoir(&spec).unwrap(),
        QuantizerSpec::new(8).unwrap(),
        hebb,
        data.iter().copied(),
    )
    .unwrap();
    let ridge = RidgeModel::fit(build_reservoir(&spec).unwrap(), RidgeSpec::default(), 10, data.iter().copied()).unwrap();
    (Model::Recap(recap), Model::Ridge(ridge))
}

#[test]
fn container_round_trip_preserves_predictions() {
    let (recap, ridge) = small_models();
    let mut rng = StreamRng::seed_from_u64(77);
    let inputs: Vec<Vec<f32>> = (0..200).map(|_| (0..784).map(|_| rng.random::<f32>()).collect()).collect();
    for model in [recap, ridge] {
        let file = ModelFile {
            model,
            config_digest: 1,
            dataset_digest: 2,
            build_time: 0,
        };
        let bytes = container::encode(&file);
        assert_eq!(bytes, container::encode(&file));
        let back = container::decode(&bytes).unwrap();
        assert_eq!(back, file);
        for x in &inputs {
            assert_eq!(back.model.predict(x).unwrap(), file.model.predict(x).unwrap());
        }
        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        assert!(container::decode(&flipped).is_err());
        assert!(container::decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(container::decode(b"RCAPxxxxxxxxxxxx").is_err());
    }
}

#[test]
fn container_keeps_optional_states() {
    let (recap, _) = small_models();
    let Model::Recap(m) = recap else { unreachable!() };
    let states = m.states().map(<[_]>::to_vec);
    assert!(states.is_some());
    for keep in [None, states] {
        let file = ModelFile {
            model: Model::Recap(m.clone().with_states(keep.clone()).unwrap()),
            config_digest: 0,
            dataset_digest: 0,
            build_time: 0,
        };
        let back = container::decode(&container::encode(&file)).unwrap();
        let Model::Recap(b) = back.model else { unreachable!() };
        assert_eq!(b.states().map(<[_]>::to_vec), keep);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn npy_u8_round_trip(n in 0usize..4, seed in any::<u64>()) {
        let mut rng = StreamRng::seed_from_u64(seed);
        let bytes: Vec<u8> = (0..n * 784).map(|_| rng.random()).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..10)).collect();
        let arr = npy::parse(&npy::encode_u8(&[n, 28, 28], &bytes)).unwrap();
        let b = npy::images_from_array(&arr, labels.clone(), Provenance::Clean).unwrap();
        prop_assert_eq!(b.to_bytes(), bytes);
        let again = ImageBatch::from_bytes(28, 28, &b.to_bytes(), labels, Provenance::Clean).unwrap();
        prop_assert_eq!(again.pixels(), b.pixels());
    }
}
