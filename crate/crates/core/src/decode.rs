//! Reading source images from disk.
//!
//! PNG and JPEG go through the `image` crate. Anything else is parsed as the
//! plain-text grayscale format: a `rows cols` header line followed by `rows`
//! lines of `cols` space-separated values in `[0, 1]`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{to_grayscale, GrayImage};

/// Loads any supported image file as grayscale.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_gray(&bytes, &path.display().to_string())
}

/// Decodes bytes already in memory; `origin` only labels errors.
pub fn decode_gray(bytes: &[u8], origin: &str) -> Result<GrayImage> {
    match image::guess_format(bytes) {
        Ok(format) => {
            let decoded = image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Decode {
                path: origin.into(),
                message: e.to_string(),
            })?;
            let (r, g, b) = rgb_planes(&decoded.to_rgb32f())?;
            to_grayscale(&r, &g, &b)
        }
        Err(_) => {
            let text = std::str::from_utf8(bytes).map_err(|_| Error::Decode {
                path: origin.into(),
                message: "not PNG, JPEG or UTF-8 text".into(),
            })?;
            parse_text_image(text, origin)
        }
    }
}

fn rgb_planes(rgb: &image::Rgb32FImage) -> Result<(GrayImage, GrayImage, GrayImage)> {
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut planes = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for px in rgb.pixels() {
        for (plane, v) in planes.iter_mut().zip(px.0) {
            plane.push(f64::from(v).clamp(0.0, 1.0));
        }
    }
    let [r, g, b] = planes;
    Ok((
        GrayImage::new(h, w, r)?,
        GrayImage::new(h, w, g)?,
        GrayImage::new(h, w, b)?,
    ))
}

/// Parses the plain-text grayscale format.
pub fn parse_text_image(text: &str, origin: &str) -> Result<GrayImage> {
    let err = |line: usize, msg: String| Error::format(origin, format!("line {line}: {msg}"));
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (n, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(n, format!("bad header {header:?}")))?;
    let [rows, cols] = dims[..] else {
        return Err(err(n, "header must be `rows cols`".into()));
    };
    if rows == 0 || cols == 0 {
        return Err(err(n, "empty image".into()));
    }

    let mut pixels = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (n, line) = lines
            .next()
            .ok_or_else(|| err(n, format!("expected {rows} pixel rows")))?;
        let before = pixels.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| err(n, format!("bad value {tok:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(err(n, format!("value {v} outside [0, 1]")));
            }
            pixels.push(v);
        }
        if pixels.len() - before != cols {
            return Err(err(n, format!("expected {cols} values, got {}", pixels.len() - before)));
        }
    }
    if let Some((n, _)) = lines.next() {
        return Err(err(n, "trailing data after last row".into()));
    }
    GrayImage::new(rows, cols, pixels)
}

/// Writes an image in the plain-text format. Values use shortest round-trip
/// formatting, so parsing the output reproduces the image bit-exactly.
pub fn to_text_image(img: &GrayImage) -> String {
    let mut out = format!("{} {}\n", img.height(), img.width());
    for row in img.pixels().chunks_exact(img.width()) {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_format_round_trip() {
        let img = GrayImage::new(2, 3, vec![0.0, 0.1, 1.0, 1.0 / 3.0, 0.25, 0.9999]).unwrap();
        let text = to_text_image(&img);
        assert!(text.starts_with("2 3\n"));
        assert_eq!(parse_text_image(&text, "t").unwrap(), img);
    }

    #[test]
    fn text_format_errors() {
        for bad in ["", "2\n0 0", "1 2\n0.5", "1 1\n1.5", "1 1\n0.5\n0.5", "1 1\nx"] {
            assert!(
                matches!(parse_text_image(bad, "t"), Err(Error::Format { .. })),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn decodes_png() {
        let mut buf = std::io::Cursor::new(Vec::new());
        let rgb = image::RgbImage::from_fn(3, 2, |x, _| {
            if x == 0 {
                image::Rgb([255, 0, 0])
            } else {
                image::Rgb([255, 255, 255])
            }
        });
        rgb.write_to(&mut buf, image::ImageFormat::Png).unwrap();
        let img = decode_gray(buf.get_ref(), "mem.png").unwrap();
        assert_eq!(img.dims(), (2, 3));
        assert!((img.get(0, 0) - 0.299).abs() < 1e-6);
        assert!((img.get(1, 2) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_binary_garbage() {
        assert!(matches!(
            decode_gray(&[0xff, 0xfe, 0x00, 0x80], "junk"),
            Err(Error::Decode { .. })
        ));
    }
}
