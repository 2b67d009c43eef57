//! Synthetic test shapes: letter images and rigid-motion references.
//!
//! Letters are rendered as axis-aligned strokes with a light Gaussian
//! anti-aliasing pass, so their spectra stay within the band the wavelet
//! pyramid can represent while binarizing cleanly at 0.5.

use crate::gabor::Image;
use crate::math::{ceil, cos, exp, fabs, round, sin};
use alloc::vec;
use alloc::vec::Vec;

/// Edge softness of the rendered letters, in pixels.
const EDGE_SIGMA: f64 = 0.7;

fn scaled(v: usize, size: usize) -> usize {
    v * size / 32
}

fn fill(img: &mut Image, x0: usize, x1: usize, y0: usize, y1: usize) {
    for y in y0..y1 {
        for x in x0..x1 {
            img.set(x, y, 1.0);
        }
    }
}

/// Letter 'T': top bar plus centered stem, proportional to the image size.
pub fn letter_t(size: usize) -> Image {
    let mut img = Image::zeros(size, size);
    let a = scaled(6, size);
    let b = size - a;
    let s = scaled(4, size);
    let mid = size / 2;
    fill(&mut img, a, b, a, a + s);
    fill(&mut img, mid - s / 2, mid - s / 2 + s, a, b);
    gaussian_smooth(&img, EDGE_SIGMA)
}

/// Letter 'E': stem plus three bars.
pub fn letter_e(size: usize) -> Image {
    let mut img = Image::zeros(size, size);
    let a = scaled(6, size);
    let b = size - a;
    let s = scaled(4, size);
    let mid = size / 2;
    fill(&mut img, a, a + s, a, b);
    fill(&mut img, a, b - scaled(2, size), a, a + s);
    fill(&mut img, a, b - scaled(4, size), mid - s / 2, mid - s / 2 + s);
    fill(&mut img, a, b - scaled(2, size), b - s, b);
    gaussian_smooth(&img, EDGE_SIGMA)
}

/// Rotates an image counterclockwise about its center by `angle`, with
/// nearest-neighbor resampling; samples falling outside map to zero.
pub fn rotate_nearest(img: &Image, angle: f64) -> Image {
    let (w, h) = (img.width(), img.height());
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let (ca, sa) = (cos(angle), sin(angle));
    let mut out = Image::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            // pull: source point is the destination rotated backwards
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let sx = round(ca * dx + sa * dy + cx);
            let sy = round(-sa * dx + ca * dy + cy);
            if sx >= 0.0 && sy >= 0.0 && (sx as usize) < w && (sy as usize) < h {
                out.set(x, y, img.get(sx as usize, sy as usize));
            }
        }
    }
    out
}

/// Separable Gaussian smoothing with a kernel truncated at three standard
/// deviations; the kernel is normalized so flat regions are preserved.
pub fn gaussian_smooth(img: &Image, sigma: f64) -> Image {
    if sigma <= 0.0 {
        return img.clone();
    }
    let radius = ceil(3.0 * sigma) as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    let mut total = 0.0;
    for i in -radius..=radius {
        let w = exp(-((i * i) as f64) / (2.0 * sigma * sigma));
        kernel.push(w);
        total += w;
    }
    for w in &mut kernel {
        *w /= total;
    }

    let (w, h) = (img.width(), img.height());
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kw) in kernel.iter().enumerate() {
                let sx = x as isize + j as isize - radius;
                if sx >= 0 && (sx as usize) < w {
                    acc += kw * img.get(sx as usize, y);
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = Image::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kw) in kernel.iter().enumerate() {
                let sy = y as isize + j as isize - radius;
                if sy >= 0 && (sy as usize) < h {
                    acc += kw * tmp[sy as usize * w + x];
                }
            }
            out.set(x, y, acc);
        }
    }
    out
}

/// Centroid of an image's intensity, `(x, y)`; `None` for a zero image.
pub fn centroid(img: &Image) -> Option<(f64, f64)> {
    let mut mx = 0.0;
    let mut my = 0.0;
    let mut mass = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = img.get(x, y);
            mass += v;
            mx += v * x as f64;
            my += v * y as f64;
        }
    }
    if fabs(mass) < 1e-12 {
        None
    } else {
        Some((mx / mass, my / mass))
    }
}
