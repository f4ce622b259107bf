//! Reading and writing 8-bit RGB images as binary PPM (P6) or PNG.
//!
//! PPM is the bit-exact reference format. PNG input may be RGB, RGBA
//! (alpha is dropped) or palette-based; 16-bit data is rejected.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use mtb_align::RgbImage;
use thiserror::Error;

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Png,
}

impl ImageFormat {
    /// Format implied by a file extension (`.ppm`, `.pnm`, `.png`).
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "ppm" | "pnm" => Some(ImageFormat::Ppm),
            "png" => Some(ImageFormat::Png),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Ppm => "ppm",
            ImageFormat::Png => "png",
        }
    }
}

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("{}: no such file", path.display())]
    NotFound { path: PathBuf },

    #[error("{}: unsupported image format: {reason}", path.display())]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("{}: PPM maxval {maxval} is not supported (only 8-bit files with maxval 255)", path.display())]
    UnsupportedMaxval { path: PathBuf, maxval: u32 },

    #[error("{}: truncated pixel data: expected {expected} bytes, found {found}", path.display())]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{}: malformed header: {reason}", path.display())]
    Malformed { path: PathBuf, reason: String },

    #[error("{}: PNG error: {message}", path.display())]
    Png { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Header-level failure of the PPM parser, before a path is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PpmError {
    NotPpm(String),
    Maxval(u32),
    Truncated { expected: usize, found: usize },
    Malformed(String),
}

impl PpmError {
    fn at(self, path: &Path) -> ImageIoError {
        let path = path.to_path_buf();
        match self {
            PpmError::NotPpm(reason) => ImageIoError::UnsupportedFormat { path, reason },
            PpmError::Maxval(maxval) => ImageIoError::UnsupportedMaxval { path, maxval },
            PpmError::Truncated { expected, found } => ImageIoError::Truncated {
                path,
                expected,
                found,
            },
            PpmError::Malformed(reason) => ImageIoError::Malformed { path, reason },
        }
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PpmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PpmError::Malformed(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PpmError::Malformed(format!("{what} out of range")))
    }
}

/// Parses a binary PPM (P6, maxval 255) held in memory.
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage, PpmError> {
    match bytes.get(..2) {
        Some(b"P6") => {}
        Some([b'P', d]) if d.is_ascii_digit() => {
            return Err(PpmError::NotPpm(format!(
                "P{} netpbm files are not supported, only P6",
                *d as char
            )))
        }
        _ => return Err(PpmError::NotPpm("missing P6 magic".into())),
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PpmError::Malformed(format!("image size {width}x{height}")));
    }
    if maxval != 255 {
        return Err(PpmError::Maxval(maxval));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(PpmError::Malformed("no whitespace after maxval".into())),
    }
    let expected = width * height * 3;
    let data = &bytes[cur.pos..];
    if data.len() < expected {
        return Err(PpmError::Truncated {
            expected,
            found: data.len(),
        });
    }
    Ok(RgbImage::new(width, height, data[..expected].to_vec()).expect("size checked"))
}

/// Binary PPM encoding of `img`.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.data().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.data());
    out
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<RgbImage, ImageIoError> {
    let png_err = |e: png::DecodingError| ImageIoError::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let unsupported = |reason: String| ImageIoError::UnsupportedFormat {
        path: path.to_path_buf(),
        reason,
    };
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(unsupported(format!(
            "{}-bit PNG, only 8-bit is supported",
            depth as u8
        )));
    }
    let channels = match color {
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => {
            return Err(unsupported(format!(
                "PNG color type {other:?}, expected RGB or RGBA"
            )))
        }
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| unsupported("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let mut rgb = Vec::with_capacity(w * h * 3);
    for row in buf.chunks(info.line_size).take(h) {
        for px in row[..w * channels].chunks_exact(channels) {
            rgb.extend_from_slice(&px[..3]);
        }
    }
    RgbImage::new(w, h, rgb).map_err(|e| ImageIoError::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn encode_png(img: &RgbImage, path: &Path) -> Result<Vec<u8>, ImageIoError> {
    let err = |e: png::EncodingError| ImageIoError::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(err)?;
        writer.write_image_data(img.data()).map_err(err)?;
        writer.finish().map_err(err)?;
    }
    Ok(out)
}

/// Reads a PPM or PNG file; the format is detected from its contents.
pub fn decode_image(path: &Path) -> Result<RgbImage, ImageIoError> {
    let bytes = fs::read(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => ImageIoError::NotFound {
            path: path.to_path_buf(),
        },
        _ => ImageIoError::Io {
            path: path.to_path_buf(),
            source,
        },
    })?;
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(&bytes, path)
    } else if bytes.first() == Some(&b'P') {
        decode_ppm(&bytes).map_err(|e| e.at(path))
    } else {
        Err(ImageIoError::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "neither PPM nor PNG".into(),
        })
    }
}

/// Writes `img` to `path`, choosing the format from the extension.
/// Existing files are overwritten.
pub fn encode_image(img: &RgbImage, path: &Path) -> Result<(), ImageIoError> {
    let bytes = match ImageFormat::from_path(path) {
        Some(ImageFormat::Ppm) => encode_ppm(img),
        Some(ImageFormat::Png) => encode_png(img, path)?,
        None => {
            return Err(ImageIoError::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: "output extension must be .ppm, .pnm or .png".into(),
            })
        }
    };
    fs::write(path, bytes).map_err(|source| ImageIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_p6() {
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = decode_ppm(&bytes).unwrap();
        assert_eq!(img.dimensions(), (2, 1));
        assert_eq!(img.data(), &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn comments_and_odd_whitespace() {
        let mut bytes = b"P6 # made by hand\n# another\n 2\t1 255\r".to_vec();
        bytes.extend_from_slice(&[9; 6]);
        assert_eq!(decode_ppm(&bytes).unwrap().data(), &[9; 6]);
    }

    #[test]
    fn rejects_sixteen_bit() {
        let bytes = b"P6\n1 1\n65535\n\0\0\0\0\0\0".to_vec();
        assert_eq!(decode_ppm(&bytes).unwrap_err(), PpmError::Maxval(65535));
    }

    #[test]
    fn rejects_short_data() {
        let bytes = b"P6\n2 2\n255\n\x01\x02\x03".to_vec();
        assert_eq!(
            decode_ppm(&bytes).unwrap_err(),
            PpmError::Truncated {
                expected: 12,
                found: 3
            }
        );
    }

    #[test]
    fn rejects_other_netpbm_and_garbage() {
        assert!(matches!(
            decode_ppm(b"P3\n1 1\n255\n0 0 0"),
            Err(PpmError::NotPpm(_))
        ));
        assert!(matches!(decode_ppm(b"GIF89a"), Err(PpmError::NotPpm(_))));
        assert!(matches!(
            decode_ppm(b"P6\n0 1\n255\n"),
            Err(PpmError::Malformed(_))
        ));
        assert!(matches!(
            decode_ppm(b"P6\n1\n"),
            Err(PpmError::Malformed(_))
        ));
    }

    #[test]
    fn encoded_size_is_header_plus_samples() {
        let img = RgbImage::filled(7, 5, [3, 3, 3]).unwrap();
        let bytes = encode_ppm(&img);
        assert_eq!(bytes.len(), "P6\n7 5\n255\n".len() + 3 * 7 * 5);
        assert_eq!(decode_ppm(&bytes).unwrap(), img);
    }

    #[test]
    fn formats_from_extension() {
        assert_eq!(
            ImageFormat::from_path(Path::new("a.PPM")),
            Some(ImageFormat::Ppm)
        );
        assert_eq!(
            ImageFormat::from_path(Path::new("a.png")),
            Some(ImageFormat::Png)
        );
        assert_eq!(ImageFormat::from_path(Path::new("a.jpg")), None);
        assert_eq!(ImageFormat::from_path(Path::new("noext")), None);
    }
}
