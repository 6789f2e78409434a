//! Image files. Binary PGM (P5, maxval 255) is the canonical lossless
//! format; PNG is decoded so externally produced image sets can be
//! evaluated unchanged.

use std::io::{BufReader, Cursor, Write};
use std::path::Path;

use crate::image::GrayImage;
use crate::{Error, Result};

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + image.as_raw().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(image.as_raw());
    out
}

pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    std::fs::write(path, encode_pgm(image)).map_err(|e| Error::io(path, e))
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(
        &mut self,
        field: &'static str,
    ) -> std::result::Result<usize, (&'static str, String)> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err((field, "expected a decimal number".to_string()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| (field, "number out of range".to_string()))
    }
}

/// Decodes a binary PGM held in memory.
pub fn decode_pgm_bytes(bytes: &[u8]) -> std::result::Result<GrayImage, (&'static str, String)> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(("magic", "expected binary PGM magic \"P5\"".to_string()));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err((
            "width",
            format!("image dimensions {width}x{height} are empty"),
        ));
    }
    if maxval == 0 || maxval > 255 {
        return Err((
            "maxval",
            format!("maxval {maxval} unsupported; only 8-bit images (maxval 1..=255) are accepted"),
        ));
    }
    if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(("maxval", "missing whitespace after maxval".to_string()));
    }
    let start = cur.pos + 1;
    let expected = width
        .checked_mul(height)
        .ok_or(("width", "image dimensions overflow".to_string()))?;
    let data = &bytes[start.min(bytes.len())..];
    if data.len() < expected {
        return Err((
            "pixel data",
            format!("truncated: {} of {expected} bytes present", data.len()),
        ));
    }
    let mut pixels = data[..expected].to_vec();
    if maxval != 255 {
        for p in &mut pixels {
            *p = ((u32::from(*p).min(maxval as u32) * 255 + maxval as u32 / 2) / maxval as u32)
                as u8;
        }
    }
    Ok(GrayImage::from_raw(width, height, pixels).expect("size checked"))
}

/// Encodes an 8-bit grayscale PNG.
pub fn encode_png(image: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::validation(format!("png encode: {e}")))?;
        writer
            .write_image_data(image.as_raw())
            .map_err(|e| Error::validation(format!("png encode: {e}")))?;
    }
    Ok(out)
}

pub fn write_png(path: &Path, image: &GrayImage) -> Result<()> {
    let bytes = encode_png(image)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Decodes a PNG to 8-bit gray. Color inputs are reduced to luma
/// (Rec. 601 weights) and alpha is dropped.
pub fn decode_png_bytes(bytes: &[u8]) -> std::result::Result<GrayImage, (&'static str, String)> {
    let mut dec = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
    dec.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = dec.read_info().map_err(|e| ("png header", e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or(("png header", "image too large".to_string()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| ("pixel data", e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(("color type", "palette was not expanded".to_string()))
        }
    };
    let mut pixels = Vec::with_capacity(w * h);
    for row in buf.chunks(info.line_size).take(h) {
        for px in row[..w * channels].chunks(channels) {
            let v = if channels >= 3 {
                let l =
                    0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
                l.round().clamp(0.0, 255.0) as u8
            } else {
                px[0]
            };
            pixels.push(v);
        }
    }
    GrayImage::from_raw(w, h, pixels).map_err(|e| ("pixel data", e.to_string()))
}

/// Reads a `.pgm` or `.png` file, dispatching on the file signature.
pub fn decode_image(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = if bytes.starts_with(b"\x89PNG") {
        decode_png_bytes(&bytes)
    } else {
        decode_pgm_bytes(&bytes)
    };
    decoded.map_err(|(field, message)| Error::Decode {
        path: path.to_path_buf(),
        field,
        message,
    })
}
