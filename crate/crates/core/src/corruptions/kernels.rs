//! Image operators on row-major `h x w` grayscale planes in `[0, 1]`.
//!
//! Borders use symmetric reflection (edge pixel repeated). Operators return
//! unclamped values; callers clamp once at the end.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

/// Maps any integer coordinate into `0..n` by mirroring with edge repeat.
pub fn reflect(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

#[inline]
fn at(img: &[f64], w: usize, h: usize, y: isize, x: isize) -> f64 {
    img[reflect(y, h) * w + reflect(x, w)]
}

/// Bilinear lookup at a fractional position.
pub fn bilinear(img: &[f64], h: usize, w: usize, y: f64, x: f64) -> f64 {
    let y0 = libm::floor(y);
    let x0 = libm::floor(x);
    let fy = y - y0;
    let fx = x - x0;
    let (y0, x0) = (y0 as isize, x0 as isize);
    let a = at(img, w, h, y0, x0);
    let b = at(img, w, h, y0, x0 + 1);
    let c = at(img, w, h, y0 + 1, x0);
    let d = at(img, w, h, y0 + 1, x0 + 1);
    (1.0 - fy) * ((1.0 - fx) * a + fx * b) + fy * ((1.0 - fx) * c + fx * d)
}

/// Correlates with a small dense kernel centred at `(r, r)`.
pub fn convolve(img: &[f64], h: usize, w: usize, kernel: &[f64], r: usize) -> Vec<f64> {
    let side = 2 * r + 1;
    debug_assert_eq!(kernel.len(), side * side);
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for ky in 0..side {
                for kx in 0..side {
                    let k = kernel[ky * side + kx];
                    if k != 0.0 {
                        let yy = y as isize + ky as isize - r as isize;
                        let xx = x as isize + kx as isize - r as isize;
                        s += k * at(img, w, h, yy, xx);
                    }
                }
            }
            out[y * w + x] = s;
        }
    }
    out
}

/// Separable Gaussian blur, kernel truncated at `3σ`.
pub fn gaussian_blur(img: &[f64], h: usize, w: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return img.to_vec();
    }
    let r = libm::ceil(3.0 * sigma) as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|t| libm::exp(-((t * t) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (-r..=r)
                .zip(&k)
                .map(|(t, kv)| kv * at(img, w, h, y as isize, x as isize + t))
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (-r..=r)
                .zip(&k)
                .map(|(t, kv)| kv * at(&tmp, w, h, y as isize + t, x as isize))
                .sum();
        }
    }
    out
}

pub fn gaussian_noise<R: Rng + ?Sized>(img: &mut [f64], sigma: f64, rng: &mut R) {
    for v in img.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += sigma * z;
    }
}

/// Photon noise: each pixel becomes `Poisson(x c) / c`.
pub fn shot_noise<R: Rng + ?Sized>(img: &mut [f64], photons: f64, rng: &mut R) {
    for v in img.iter_mut() {
        let lambda = v.max(0.0) * photons;
        *v = if lambda > 0.0 {
            Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(lambda) / photons
        } else {
            0.0
        };
    }
}

/// Replaces a fraction `amount` of pixels with 0 or 1 in equal proportion.
/// Returns the number of replaced pixels.
pub fn impulse_noise<R: Rng + ?Sized>(img: &mut [f64], amount: f64, rng: &mut R) -> usize {
    let mut hits = 0;
    for v in img.iter_mut() {
        let u: f64 = rng.random();
        let salt: bool = rng.random();
        if u < amount {
            *v = if salt { 1.0 } else { 0.0 };
            hits += 1;
        }
    }
    hits
}

/// Normalized disk kernel of the given radius.
pub fn disk_kernel(radius: f64) -> (Vec<f64>, usize) {
    let r = libm::ceil(radius) as usize;
    let side = 2 * r + 1;
    let mut k = vec![0.0; side * side];
    for y in 0..side {
        for x in 0..side {
            let dy = y as f64 - r as f64;
            let dx = x as f64 - r as f64;
            if dy * dy + dx * dx <= radius * radius + 1e-9 {
                k[y * side + x] = 1.0;
            }
        }
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    (k, r)
}

pub fn defocus_blur(img: &[f64], h: usize, w: usize, radius: f64) -> Vec<f64> {
    let (k, r) = disk_kernel(radius);
    convolve(img, h, w, &k, r)
}

/// Blur, local random transpositions within `delta` pixels, blur again.
pub fn glass_blur<R: Rng + ?Sized>(
    img: &[f64],
    h: usize,
    w: usize,
    sigma: f64,
    delta: usize,
    iterations: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut x = gaussian_blur(img, h, w, sigma);
    let d = delta as isize;
    for _ in 0..iterations {
        for yy in (d..h as isize - d).rev() {
            for xx in (d..w as isize - d).rev() {
                let dy = rng.random_range(-d as i64..d as i64) as isize;
                let dx = rng.random_range(-d as i64..d as i64) as isize;
                let a = yy as usize * w + xx as usize;
                let b = (yy + dy) as usize * w + (xx + dx) as usize;
                x.swap(a, b);
            }
        }
    }
    gaussian_blur(&x, h, w, sigma)
}

/// Mean over `length` bilinear taps spaced one pixel apart along a 45° line
/// through each pixel.
pub fn motion_blur(img: &[f64], h: usize, w: usize, length: usize) -> Vec<f64> {
    let c = core::f64::consts::FRAC_1_SQRT_2;
    let half = (length as f64 - 1.0) / 2.0;
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for t in 0..length {
                let o = t as f64 - half;
                s += bilinear(img, h, w, y as f64 - o * c, x as f64 + o * c);
            }
            out[y * w + x] = s / length as f64;
        }
    }
    out
}

/// Centre zoom by `factor >= 1`, resampled back onto the same grid.
pub fn center_zoom(img: &[f64], h: usize, w: usize, factor: f64) -> Vec<f64> {
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let sy = cy + (y as f64 - cy) / factor;
            let sx = cx + (x as f64 - cx) / factor;
            out[y * w + x] = bilinear(img, h, w, sy, sx);
        }
    }
    out
}

/// Average of the original and its centre zooms by each factor.
pub fn zoom_blur(img: &[f64], h: usize, w: usize, factors: &[f64]) -> Vec<f64> {
    let mut acc = img.to_vec();
    for &f in factors {
        for (a, z) in acc.iter_mut().zip(center_zoom(img, h, w, f)) {
            *a += z;
        }
    }
    let count = (factors.len() + 1) as f64;
    acc.iter_mut().for_each(|v| *v /= count);
    acc
}

pub fn brightness(img: &mut [f64], delta: f64) {
    img.iter_mut().for_each(|v| *v += delta);
}

/// Scales deviations from the image mean by `factor`.
pub fn contrast(img: &mut [f64], factor: f64) {
    let mean = img.iter().sum::<f64>() / img.len().max(1) as f64;
    img.iter_mut().for_each(|v| *v = (*v - mean) * factor + mean);
}

/// Smoothed random displacement field; the unit field is drawn once and
/// scaled by `alpha`.
pub fn elastic_transform<R: Rng + ?Sized>(
    img: &[f64],
    h: usize,
    w: usize,
    alpha: f64,
    sigma: f64,
    rng: &mut R,
) -> Vec<f64> {
    let field = |rng: &mut R| {
        let raw: Vec<f64> = (0..h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        gaussian_blur(&raw, h, w, sigma)
    };
    let dy = field(rng);
    let dx = field(rng);
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let k = y * w + x;
            out[k] = bilinear(img, h, w, y as f64 + alpha * dy[k], x as f64 + alpha * dx[k]);
        }
    }
    out
}

/// Area-weighted resample of one axis from `n` cells to `m` cells.
fn area_weights(n: usize, m: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n as f64 / m as f64;
    (0..m)
        .map(|j| {
            let lo = j as f64 * scale;
            let hi = lo + scale;
            let mut taps = Vec::new();
            let mut i = libm::floor(lo) as usize;
            while (i as f64) < hi && i < n {
                let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                if overlap > 0.0 {
                    taps.push((i, overlap / scale));
                }
                i += 1;
            }
            taps
        })
        .collect()
}

/// Box-filter resize of a plane from `h x w` to `nh x nw`.
pub fn box_resize(img: &[f64], h: usize, w: usize, nh: usize, nw: usize) -> Vec<f64> {
    let wy = area_weights(h, nh);
    let wx = area_weights(w, nw);
    let mut out = vec![0.0; nh * nw];
    for (y, ty) in wy.iter().enumerate() {
        for (x, tx) in wx.iter().enumerate() {
            let mut s = 0.0;
            for &(iy, ay) in ty {
                for &(ix, ax) in tx {
                    s += ay * ax * img[iy * w + ix];
                }
            }
            out[y * nw + x] = s;
        }
    }
    out
}

/// Box downscale to `size x size`, then back to the original grid.
pub fn pixelate(img: &[f64], h: usize, w: usize, size: usize) -> Vec<f64> {
    let small = box_resize(img, h, w, size, size);
    box_resize(&small, size, size, h, w)
}
