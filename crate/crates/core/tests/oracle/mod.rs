//! Naive reference implementations. Each one is written straight from the
//! defining formula, without sharing code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

// ---- schedules -------------------------------------------------------------

pub fn uniform(total: u32, steps: u32) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..=steps {
        let exact = k as f64 * total as f64 / steps as f64;
        // floor of an exact rational, guarded against float drift
        let mut f = exact.floor();
        if (f + 1.0) * steps as f64 <= k as f64 * total as f64 {
            f += 1.0;
        }
        if f * steps as f64 > k as f64 * total as f64 {
            f -= 1.0;
        }
        out.push(f);
    }
    out
}

pub fn poly(t: f64, a: f64, n: f64, total: f64) -> f64 {
    let early = if a >= total {
        true
    } else if a <= 0.0 {
        false
    } else {
        t < a
    };
    let v = if early {
        (n * t.ln()).exp() / ((n - 1.0) * a.ln()).exp()
    } else {
        let r = total - t;
        total - (n * r.ln()).exp() / ((n - 1.0) * (total - a).ln()).exp()
    };
    let v = if v.is_nan() { 0.0 } else { v };
    v.max(0.0).min(total)
}

pub fn trig(t: f64, a: f64, total: f64) -> f64 {
    let early = if a >= total {
        true
    } else if a <= 0.0 {
        false
    } else {
        t < a
    };
    let v = if early {
        a - a * (PI * t / (2.0 * a)).cos()
    } else {
        total - a * (PI * (t - a) / (2.0 * (total - a))).sin()
    };
    v.max(0.0).min(total)
}

pub fn expo(t: f64, k: f64, total: f64) -> f64 {
    total / (1.0 + (-k * (t - total / 2.0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Uniform,
    Poly,
    Trig,
    Exp,
}

/// Resampled steps, sorted ascending.
pub fn schedule(total: u32, steps: u32, kind: Kind, n: f64, a_frac: f64, k: f64) -> Vec<f64> {
    let tf = total as f64;
    let a = a_frac * tf;
    let mut out: Vec<f64> = uniform(total, steps)
        .into_iter()
        .map(|t| match kind {
            Kind::Uniform => t,
            Kind::Poly => poly(t, a, n, tf),
            Kind::Trig => trig(t, a, tf),
            Kind::Exp => expo(t, k, tf),
        })
        .collect();
    // insertion sort
    for i in 1..out.len() {
        let mut j = i;
        while j > 0 && out[j - 1] > out[j] {
            out.swap(j - 1, j);
            j -= 1;
        }
    }
    out
}

pub fn round_half_away(v: f64) -> u32 {
    let f = v.floor();
    if v - f >= 0.5 {
        f as u32 + 1
    } else {
        f as u32
    }
}

// ---- images ----------------------------------------------------------------

/// Row-major `w × h` image.
#[derive(Debug, Clone)]
pub struct Img {
    pub w: usize,
    pub h: usize,
    pub px: Vec<f64>,
}

impl Img {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.px[y * self.w + x]
    }
}

/// Symmetric reflection with the edge sample repeated: `-1 -> 0`, `n -> n-1`.
pub fn reflect(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Two-pass population variance over a `win × win` mirrored window.
pub fn local_variance(img: &Img, win: usize) -> Img {
    let r = (win / 2) as i64;
    let mut px = vec![0.0; img.w * img.h];
    for y in 0..img.h {
        for x in 0..img.w {
            let mut vals = Vec::with_capacity(win * win);
            for dy in -r..=r {
                for dx in -r..=r {
                    vals.push(img.at(reflect(x as i64 + dx, img.w), reflect(y as i64 + dy, img.h)));
                }
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            px[y * img.w + x] = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        }
    }
    Img { w: img.w, h: img.h, px }
}

/// Full 2-D Gaussian convolution with a normalized `win × win` kernel.
pub fn gaussian_blur_2d(img: &Img, win: usize, sigma: f64) -> Img {
    let r = (win / 2) as i64;
    let mut kernel = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            kernel.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let norm: f64 = kernel.iter().sum();
    let mut px = vec![0.0; img.w * img.h];
    for y in 0..img.h {
        for x in 0..img.w {
            let mut acc = 0.0;
            let mut idx = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    acc += kernel[idx] / norm * img.at(reflect(x as i64 + dx, img.w), reflect(y as i64 + dy, img.h));
                    idx += 1;
                }
            }
            px[y * img.w + x] = acc;
        }
    }
    Img { w: img.w, h: img.h, px }
}

pub fn minmax(img: &Img) -> Img {
    let lo = img.px.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.px.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let px = if hi > lo {
        img.px.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; img.px.len()]
    };
    Img { w: img.w, h: img.h, px }
}

pub fn luma(rgb: &[f64]) -> Vec<f64> {
    rgb.chunks(3)
        .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
        .collect()
}

/// Luma, local variance, Gaussian smoothing and min-max scaling.
pub fn variance_map(gray: &Img, win: usize) -> Img {
    minmax(&gaussian_blur_2d(&local_variance(gray, win), win, win as f64 / 6.0))
}

// ---- spectra ---------------------------------------------------------------

/// Direct 2-D DFT, returning `(re, im)` row-major.
pub fn dft2(img: &Img) -> Vec<(f64, f64)> {
    let (w, h) = (img.w, img.h);
    let mut out = vec![(0.0, 0.0); w * h];
    for v in 0..h {
        for u in 0..w {
            let (mut re, mut im) = (0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let ang = -2.0 * PI * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                    re += img.at(x, y) * ang.cos();
                    im += img.at(x, y) * ang.sin();
                }
            }
            out[v * w + u] = (re, im);
        }
    }
    out
}

/// Band index (0 low, 1 medium, 2 high) of bin `(u, v)` by explicit loops
/// over the signed frequency.
pub fn band_of(u: usize, v: usize, w: usize, h: usize, low: f64, high: f64) -> usize {
    let signed = |k: usize, n: usize| -> f64 {
        if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    };
    let fx = if w > 1 { signed(u, w) / (w as f64 / 2.0) } else { 0.0 };
    let fy = if h > 1 { signed(v, h) / (h as f64 / 2.0) } else { 0.0 };
    let r = (fx * fx + fy * fy).sqrt();
    if r <= low {
        0
    } else if r <= high {
        1
    } else {
        2
    }
}

// ---- embeddings ------------------------------------------------------------

pub fn embed(t: f64, dim: usize, max_period: f64) -> Vec<f64> {
    let half = dim / 2;
    let mut sin = Vec::new();
    let mut cos = Vec::new();
    for i in 0..half {
        let f = 1.0 / max_period.powf(2.0 * i as f64 / dim as f64);
        sin.push((t * f).sin());
        cos.push((t * f).cos());
    }
    sin.extend(cos);
    sin
}
