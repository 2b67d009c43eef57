//! Grayscale image IO: 8-bit PGM (binary `P5` and ASCII `P2`) and PNG.
//!
//! PGM is the byte-exact golden format; identical runs write identical
//! files. Pixel values map to `[0, 1]` by division by 255.

use crate::{Error, Result};
use cortmorph_core::Image;
use std::path::Path;

/// Reads a grayscale image; the format is chosen by extension (`.pgm` or
/// `.png`, case-insensitive).
pub fn load_image(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ext) if ext == "pgm" => read_pgm(path),
        Some(ext) if ext == "png" => read_png(path),
        _ => Err(Error::Usage(format!(
            "{}: unsupported image format (expected .pgm or .png)",
            path.display()
        ))),
    }
}

/// Validates an input against the configured image side.
pub fn expect_size(img: Image, path: &Path, size: usize) -> Result<Image> {
    if img.width() != size || img.height() != size {
        return Err(Error::ImageSize {
            path: path.to_path_buf(),
            expected: size,
            got_w: img.width(),
            got_h: img.height(),
        });
    }
    Ok(img)
}

struct PgmParser<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> PgmParser<'a> {
    fn fail<T>(&self, path: &Path, message: impl Into<String>) -> Result<T> {
        Err(Error::Format { path: path.to_path_buf(), offset: self.pos, message: message.into() })
    }

    /// Advances past whitespace and `#` comment lines.
    fn skip_separators(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn token(&mut self, path: &Path) -> Result<&'a [u8]> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.fail(path, "unexpected end of file");
        }
        Ok(&self.data[start..self.pos])
    }

    fn number(&mut self, path: &Path, what: &str) -> Result<usize> {
        let tok = self.token(path)?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(())
            .or_else(|_| self.fail(path, format!("invalid {what}")))
    }
}

/// Reads an 8-bit `P5` or `P2` PGM file.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let data = std::fs::read(path).map_err(Error::io(path))?;
    let mut p = PgmParser { data: &data, pos: 0 };
    let magic = p.token(path)?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return p.fail(path, "not a P5/P2 PGM file"),
    };
    let width = p.number(path, "width")?;
    let height = p.number(path, "height")?;
    let maxval = p.number(path, "maxval")?;
    if maxval != 255 {
        return p.fail(path, format!("unsupported maxval {maxval} (only 8-bit)"));
    }
    if width == 0 || height == 0 {
        return p.fail(path, "empty image");
    }
    let mut pixels = Vec::with_capacity(width * height);
    if binary {
        // exactly one separator byte after the header
        p.pos += 1;
        if p.data.len() < p.pos + width * height {
            return p.fail(path, "truncated pixel data");
        }
        for &b in &p.data[p.pos..p.pos + width * height] {
            pixels.push(b as f64 / 255.0);
        }
    } else {
        for _ in 0..width * height {
            let v = p.number(path, "pixel")?;
            if v > 255 {
                return p.fail(path, format!("pixel value {v} exceeds maxval"));
            }
            pixels.push(v as f64 / 255.0);
        }
    }
    Ok(Image::from_pixels(width, height, pixels))
}

/// Writes an image as a binary `P5` PGM; values are clamped to `[0, 1]`
/// and rounded to 8 bits.
pub fn write_pgm(img: &Image, path: &Path) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|&v| quantize(v)));
    std::fs::write(path, out).map_err(Error::io(path))
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn read_png(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        offset: 0,
        message: e.to_string(),
    })?;
    let gray = img.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let pixels = gray.into_raw().into_iter().map(|b| b as f64 / 255.0).collect();
    Ok(Image::from_pixels(w, h, pixels))
}

/// Writes an image as an 8-bit grayscale PNG.
pub fn write_png(img: &Image, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = img.pixels().iter().map(|&v| quantize(v)).collect();
    let buffer =
        image::GrayImage::from_raw(img.width() as u32, img.height() as u32, bytes).unwrap();
    buffer.save(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        offset: 0,
        message: e.to_string(),
    })
}
