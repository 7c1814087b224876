//! Straight-line scalar re-implementations used as references by the test
//! suites. Nothing here calls into the library's numeric code.
#![allow(dead_code)]

/// Step-by-step dense rollout; returns the mean of `x[washout+1..=steps]`.
#[allow(clippy::too_many_arguments)]
pub fn rollout_average(
    w: &[f64],
    w_in: &[f64],
    n: usize,
    d: usize,
    leak: f64,
    steps: usize,
    washout: usize,
    u: &[f32],
) -> Vec<f64> {
    let mut x = vec![0.0f64; n];
    let mut avg = vec![0.0f64; n];
    for t in 1..=steps {
        let mut next = vec![0.0f64; n];
        for i in 0..n {
            let mut a = 0.0;
            for j in 0..n {
                a += w[i * n + j] * x[j];
            }
            let mut b = 0.0;
            for k in 0..d {
                b += w_in[i * d + k] * u[k] as f64;
            }
            next[i] = (1.0 - leak) * x[i] + leak * (a + b).tanh();
        }
        x = next;
        if t > washout {
            for i in 0..n {
                avg[i] += x[i];
            }
        }
    }
    for v in avg.iter_mut() {
        *v /= (steps - washout) as f64;
    }
    avg
}

/// Level of `v` by scanning the edges `-1 + 2k/K` from the top.
pub fn level_scan(v: f64, k: usize) -> u8 {
    let v = v.clamp(-1.0, 1.0);
    for level in (0..k).rev() {
        let edge = -1.0 + 2.0 * level as f64 / k as f64;
        if v >= edge {
            return level as u8;
        }
    }
    0
}

pub fn mask_dense(z: &[u8]) -> Vec<Vec<bool>> {
    let n = z.len();
    let mut m = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = i != j && z[i] == z[j];
        }
    }
    m
}

pub fn hebb_scalar(s: &mut [Vec<f32>], m: &[Vec<bool>], up: f32, down: f32) {
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            if m[i][j] {
                let v = s[i][j] + up;
                s[i][j] = if v > 1.0 { 1.0 } else { v };
            } else {
                s[i][j] *= down;
            }
        }
        s[i][i] = 0.0;
    }
}

/// Sorts the off-diagonal entries ascending and thresholds at position
/// `m - floor(p m)`; a zero threshold keeps only positive entries.
pub fn binarize_sorted(s: &[Vec<f32>], p: f64) -> (Vec<Vec<bool>>, f32) {
    let n = s.len();
    let mut off = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off.push(s[i][j]);
            }
        }
    }
    off.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = off.len();
    let ones = (p * m as f64 + 1e-9).floor() as usize;
    let theta = off[(m - ones).min(m - 1)];
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = i != j && if theta > 0.0 { s[i][j] >= theta } else { s[i][j] > 0.0 };
        }
    }
    (out, theta)
}

pub fn frobenius(a: &[Vec<bool>], b: &[Vec<bool>]) -> u64 {
    let mut total = 0;
    for (ra, rb) in a.iter().zip(b) {
        for (&x, &y) in ra.iter().zip(rb) {
            if x && y {
                total += 1;
            }
        }
    }
    total
}

/// First index holding the largest score.
pub fn first_max(scores: &[u64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
