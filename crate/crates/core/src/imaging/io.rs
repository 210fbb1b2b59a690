//! 8-bit RGB PNG and binary PPM (P6) reading and writing.

use std::fs;
use std::io::{BufWriter, Cursor};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::Image;

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Ppm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("png") => Ok(ImageFormat::Png),
            Some("ppm") => Ok(ImageFormat::Ppm),
            _ => Err(Error::format(path, "unsupported image extension (expected .png or .ppm)")),
        }
    }
}

#[inline]
pub fn byte_to_unit(b: u8) -> f64 {
    b as f64 / 255.0
}

/// Clamps to `[0, 1]` and rounds half up.
#[inline]
pub fn unit_to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn from_interleaved(rgb: &[u8], w: usize, h: usize) -> Image {
    Tensor::from_fn3(3, h, w, |c, i, j| byte_to_unit(rgb[(i * w + j) * 3 + c]))
}

pub fn to_interleaved(img: &Image) -> Result<(Vec<u8>, usize, usize)> {
    let (c, h, w) = img.dims3()?;
    if c != 3 {
        return Err(Error::shape(format!("expected 3 channels, got {}", c)));
    }
    let mut out = vec![0u8; h * w * 3];
    for ch in 0..3 {
        for i in 0..h {
            for j in 0..w {
                out[(i * w + j) * 3 + ch] = unit_to_byte(img.at3(ch, i, j));
            }
        }
    }
    Ok((out, w, h))
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::format(path, e.to_string()))?;
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(&bytes, path)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(&bytes, path)
    } else {
        Err(Error::format(path, "unsupported format (expected PNG or binary PPM)"))
    }
}

pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (rgb, w, h) = to_interleaved(img)?;
    match ImageFormat::from_path(path)? {
        ImageFormat::Ppm => fs::write(path, encode_ppm(&rgb, w, h))?,
        ImageFormat::Png => {
            let file = fs::File::create(path)?;
            let mut enc = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc
                .write_header()
                .map_err(|e| Error::format(path, e.to_string()))?;
            writer
                .write_image_data(&rgb)
                .map_err(|e| Error::format(path, e.to_string()))?;
        }
    }
    Ok(())
}

pub fn encode_ppm(rgb: &[u8], w: usize, h: usize) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", w, h).into_bytes();
    out.extend_from_slice(rgb);
    out
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<Image> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight || info.color_type != png::ColorType::Rgb {
        return Err(Error::format(
            path,
            format!(
                "only 8-bit RGB PNG is supported (got {:?} {:?})",
                info.color_type, info.bit_depth
            ),
        ));
    }
    if info.interlaced {
        return Err(Error::format(path, "interlaced PNG is not supported"));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let stride = frame.line_size;
    let mut rgb = Vec::with_capacity(w * h * 3);
    for i in 0..h {
        rgb.extend_from_slice(&buf[i * stride..i * stride + w * 3]);
    }
    Ok(from_interleaved(&rgb, w, h))
}

/// Reads header tokens of a netpbm file, skipping whitespace and comments.
fn ppm_header(bytes: &[u8], path: &Path) -> Result<([usize; 3], usize)> {
    let mut pos = 2;
    let mut vals = [0usize; 3];
    for v in vals.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(Error::format(path, "truncated PPM header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        *v = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(path, "malformed PPM header"))?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(Error::format(path, "malformed PPM header"));
    }
    Ok((vals, pos + 1))
}

fn decode_ppm(bytes: &[u8], path: &Path) -> Result<Image> {
    let ([w, h, maxval], start) = ppm_header(bytes, path)?;
    if maxval != 255 {
        return Err(Error::format(path, format!("only maxval 255 is supported, got {}", maxval)));
    }
    let need = w * h * 3;
    if bytes.len() < start + need {
        return Err(Error::format(
            path,
            format!("truncated PPM raster: need {} bytes, have {}", need, bytes.len() - start),
        ));
    }
    Ok(from_interleaved(&bytes[start..start + need], w, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_mapping_endpoints() {
        assert_eq!(byte_to_unit(0), 0.0);
        assert_eq!(byte_to_unit(255), 1.0);
        assert_eq!(byte_to_unit(128), 128.0 / 255.0);
        assert_eq!(unit_to_byte(128.0 / 255.0), 128);
        for b in 0..=255u8 {
            assert_eq!(unit_to_byte(byte_to_unit(b)), b);
        }
    }

    #[test]
    fn solid_ppm_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("a.ppm");
        let bytes = encode_ppm(&[12, 200, 7].repeat(5 * 3), 5, 3);
        fs::write(&src, &bytes).unwrap();
        let img = load_image(&src).unwrap();
        let dst = dir.path().join("b.ppm");
        save_image(&img, &dst).unwrap();
        assert_eq!(fs::read(&dst).unwrap(), bytes);
    }

    #[test]
    fn ppm_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ppm");
        let mut bytes = b"P6\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 1, 2, 3]);
        fs::write(&p, &bytes).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.shape(), &[3, 1, 2]);
        assert_eq!(img.at3(1, 0, 0), 128.0 / 255.0);
    }

    #[test]
    fn truncated_ppm_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.ppm");
        let mut bytes = b"P6 4 4 255\n".to_vec();
        bytes.extend_from_slice(&[0; 10]);
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_image(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn unknown_magic_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.ppm");
        fs::write(&p, b"GIF89a....").unwrap();
        assert!(matches!(load_image(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn png_round_trip_preserves_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.png");
        let img = Tensor::from_fn3(3, 4, 5, |c, i, j| ((c * 31 + i * 7 + j * 13) % 256) as f64 / 255.0);
        save_image(&img, &p).unwrap();
        let back = load_image(&p).unwrap();
        assert_eq!(back, img);
    }
}
