//! PNG and binary PGM (P5) ingest and egress.
//!
//! 8- and 16-bit grayscale are normalized to `[0, 1]` on read; color inputs
//! are reduced by averaging their channels. Writes rescale to the requested
//! depth with round-to-nearest. The format is chosen from the extension.

use std::io::Write;
use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Output sample depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

fn codec_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Codec {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::InvalidParameter(format!(
            "unsupported image extension for {} (expected .png or .pgm)",
            path.display()
        ))),
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let dynamic = image::load_from_memory_with_format(&bytes, format).map_err(|e| codec_err(path, e))?;
    Ok(from_dynamic(&dynamic))
}

/// Converts a decoded image into the normalized grayscale container.
pub fn from_dynamic(dynamic: &DynamicImage) -> GrayImage {
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    let data: Vec<f64> = match dynamic {
        DynamicImage::ImageLuma8(buf) => buf.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA16(buf) => buf.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        other => other
            .to_rgb32f()
            .pixels()
            .map(|p| (p.0[0] as f64 + p.0[1] as f64 + p.0[2] as f64) / 3.0)
            .collect(),
    };
    GrayImage::from_parts(w, h, data, None)
}

pub fn write_image(path: impl AsRef<Path>, img: &GrayImage, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let (w, h) = (img.width() as u32, img.height() as u32);
    let (bytes, color) = match depth {
        BitDepth::Eight => (img.to_u8(), ColorType::L8),
        // The encoders take 16-bit samples in native byte order.
        BitDepth::Sixteen => (
            img.to_u16().iter().flat_map(|v| v.to_ne_bytes()).collect(),
            ColorType::L16,
        ),
    };
    let result = match format {
        ImageFormat::Pnm => write_pgm(path, &bytes, w, h, depth).map_err(image::ImageError::IoError),
        _ => image::save_buffer_with_format(path, &bytes, w, h, color, format),
    };
    result.map_err(|e| match e {
        image::ImageError::IoError(source) => Error::Io {
            path: path.display().to_string(),
            source,
        },
        other => codec_err(path, other),
    })
}

/// Binary PGM (P5). The `image` PNM encoder has no 16-bit graymap support.
fn write_pgm(path: &Path, native: &[u8], w: u32, h: u32, depth: BitDepth) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    match depth {
        BitDepth::Eight => {
            write!(out, "P5\n{w} {h}\n255\n")?;
            out.write_all(native)?;
        }
        BitDepth::Sixteen => {
            write!(out, "P5\n{w} {h}\n65535\n")?;
            // PGM stores 16-bit samples big-endian.
            for pair in native.chunks_exact(2) {
                out.write_all(&u16::from_ne_bytes([pair[0], pair[1]]).to_be_bytes())?;
            }
        }
    }
    out.flush()
}
