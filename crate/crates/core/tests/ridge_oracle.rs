use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recap_core::reservoir::{build_reservoir, ReservoirSpec, StateVector};
use recap_core::ridge::{fit_ridge, residual_norm, RidgeModel, RidgeSpec};

fn q(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

/// Exact normal-equations solve `(XᵀX + βI')Wᵀ = XᵀY` by rational Gauss-Jordan.
fn exact_ridge(x: &[Vec<f64>], labels: &[usize], classes: usize, beta: f64, bias: bool) -> Vec<Vec<f64>> {
    let f = x[0].len();
    let d = f + bias as usize;
    let rows: Vec<Vec<BigRational>> = x
        .iter()
        .map(|r| {
            let mut v: Vec<_> = r.iter().map(|&a| q(a)).collect();
            if bias {
                v.push(BigRational::one());
            }
            v
        })
        .collect();
    let mut aug = vec![vec![BigRational::zero(); d + classes]; d];
    for (r, &y) in rows.iter().zip(labels) {
        for i in 0..d {
            for j in 0..d {
                aug[i][j] += &r[i] * &r[j];
            }
            aug[i][d + y] += &r[i];
        }
    }
    for (i, row) in aug.iter_mut().enumerate().take(f) {
        row[i] += q(beta);
    }
    for col in 0..d {
        let piv = (col..d).find(|&r| !aug[r][col].is_zero()).unwrap();
        aug.swap(col, piv);
        let p = aug[col][col].clone();
        for v in aug[col].iter_mut() {
            *v /= &p;
        }
        for r in 0..d {
            if r != col && !aug[r][col].is_zero() {
                let factor = aug[r][col].clone();
                let pivot_row = aug[col].clone();
                for (v, pv) in aug[r].iter_mut().zip(&pivot_row) {
                    *v -= &factor * pv;
                }
            }
        }
    }
    (0..classes)
        .map(|c| (0..d).map(|i| aug[i][d + c].to_f64().unwrap()).collect())
        .collect()
}

fn states(x: &[Vec<f64>]) -> Vec<StateVector> {
    x.iter().map(|r| StateVector::new(r.clone())).collect()
}

#[test]
fn five_by_three_matches_exact_solve() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<usize> = (0..5).map(|_| rng.random_range(0..3)).collect();
        for bias in [false, true] {
            let spec = RidgeSpec {
                regularization: 1e-5,
                include_bias: bias,
            };
            let got = fit_ridge(&states(&x), &labels, 3, &spec).unwrap();
            let want = exact_ridge(&x, &labels, 3, 1e-5, bias);
            let d = 3 + bias as usize;
            for c in 0..3 {
                for i in 0..d {
                    let g = got.weights()[c * d + i];
                    assert!((g - want[c][i]).abs() <= 1e-8, "seed {seed} bias {bias}: {g} vs {}", want[c][i]);
                }
            }
        }
    }
}

#[test]
fn identity_interpolation_limit() {
    let n = 6;
    let x: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    let labels: Vec<usize> = (0..n).collect();
    let spec = RidgeSpec {
        regularization: 1e-8,
        include_bias: false,
    };
    let r = fit_ridge(&states(&x), &labels, n, &spec).unwrap();
    for c in 0..n {
        for i in 0..n {
            assert!((r.weights()[c * n + i] - (c == i) as u8 as f64).abs() < 1e-4);
        }
        assert_eq!(r.classify(&x[c]).unwrap(), c);
    }
}

proptest! {
    #[test]
    fn residual_is_monotone_in_beta(seed in any::<u64>(), rows in 3usize..12, cols in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<usize> = (0..rows).map(|_| rng.random_range(0..3)).collect();
        let s = states(&x);
        let mut last = 0.0;
        for beta in [1e-6, 1e-4, 1e-2, 1e-1, 1.0, 10.0, 100.0] {
            let spec = RidgeSpec { regularization: beta, include_bias: true };
            let r = residual_norm(&fit_ridge(&s, &labels, 3, &spec).unwrap(), &s, &labels).unwrap();
            prop_assert!(r >= last - 1e-9, "beta {beta}: {r} < {last}");
            last = r;
        }
    }
}

#[test]
fn toy_model_agrees_with_matrix_vector_oracle() {
    let (n, d) = (12, 8);
    let reservoir = build_reservoir(&ReservoirSpec {
        n_units: n,
        input_dim: d,
        sparsity: 0.5,
        seed: 4,
        ..ReservoirSpec::default()
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data: Vec<(Vec<f32>, usize)> = (0..24).map(|i| ((0..d).map(|_| rng.random::<f32>()).collect(), i % 3)).collect();
    let model = RidgeModel::fit(reservoir.clone(), RidgeSpec::default(), 3, data.iter().map(|(u, y)| (u.as_slice(), *y))).unwrap();
    let w = model.readout().weights();
    for (u, _) in &data {
        let x = reservoir.run_to_average(u).unwrap();
        let mut out = [0.0f64; 3];
        for (c, o) in out.iter_mut().enumerate() {
            for i in 0..n {
                *o += w[c * (n + 1) + i] * x.values()[i];
            }
            *o += w[c * (n + 1) + n];
        }
        let best = (0..3).fold(0, |b, c| if out[c] > out[b] { c } else { b });
        assert_eq!(model.predict(u).unwrap(), best);
        let got = model.outputs(u).unwrap();
        for c in 0..3 {
            assert!((got[c] - out[c]).abs() < 1e-12);
        }
    }
}

#[test]
fn same_spec_gives_identical_states_for_both_readouts() {
    let spec = ReservoirSpec {
        n_units: 32,
        input_dim: 16,
        seed: 99,
        ..ReservoirSpec::default()
    };
    let a = build_reservoir(&spec).unwrap();
    let b = build_reservoir(&spec).unwrap();
    let u: Vec<f32> = (0..16).map(|i| i as f32 / 16.0).collect();
    let sa = a.run_to_average(&u).unwrap();
    let sb = b.run_to_average(&u).unwrap();
    let bits = |s: &StateVector| s.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&sa), bits(&sb));
}
