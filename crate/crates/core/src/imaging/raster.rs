//! Binary portable pixmap (`P6`, maxval 255) export and read-back.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::tensor::{ImageTensor, Representation, CHANNELS};

pub fn ppm_header(width: usize, height: usize) -> String {
    format!("P6\n{width} {height}\n255\n")
}

pub fn encode_ppm(img: &ImageTensor) -> Vec<u8> {
    let mut out = ppm_header(img.width(), img.height()).into_bytes();
    out.extend(img.to_rgb8());
    out
}

fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated pixmap header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| Error::Format("pixmap header is not ASCII".into()))
}

pub fn decode_ppm(bytes: &[u8]) -> Result<ImageTensor> {
    let mut pos = 0;
    if token(bytes, &mut pos)? != "P6" {
        return Err(Error::Format("not a binary pixmap (P6)".into()));
    }
    let mut num = |what: &str| -> Result<usize> {
        token(bytes, &mut pos)?
            .parse()
            .map_err(|_| Error::Format(format!("bad pixmap {what}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    if num("maxval")? != 255 {
        return Err(Error::Format("only maxval 255 is supported".into()));
    }
    // exactly one whitespace byte separates the header from the payload
    let payload = &bytes[(pos + 1).min(bytes.len())..];
    if payload.len() != CHANNELS * width * height {
        return Err(Error::Format(format!(
            "pixmap payload is {} bytes, expected {}",
            payload.len(),
            CHANNELS * width * height
        )));
    }
    ImageTensor::from_rgb8(height, width, payload, Representation::Gaf)
}

pub fn export_raster(img: &ImageTensor, path: &Path) -> Result<()> {
    fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
}

/// Read a pixmap back. The representation tag is not stored in the file and
/// comes back as `Gaf`; callers that care set it themselves.
pub fn read_raster(path: &Path) -> Result<ImageTensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes)
}

#[cfg(feature = "png")]
pub fn export_png(img: &ImageTensor, path: &Path) -> Result<()> {
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.to_rgb8())
        .ok_or_else(|| Error::contract("image buffer size mismatch"))?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn zero_file_size() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.ppm");
        let img = ImageTensor::zeros(7, 5, Representation::HeatMap);
        export_raster(&img, &p).unwrap();
        let len = fs::metadata(&p).unwrap().len() as usize;
        assert_eq!(len, "P6\n5 7\n255\n".len() + 3 * 5 * 7);
        assert_eq!(read_raster(&p).unwrap().pixels(), img.pixels());
    }

    #[test]
    fn random_round_trip() {
        let mut rng = crate::seed::rng(3);
        let px: Vec<f64> = (0..3 * 12 * 9).map(|_| rng.random::<f64>()).collect();
        let img = ImageTensor::from_pixels(12, 9, px, Representation::LineChart).unwrap();
        let back = decode_ppm(&encode_ppm(&img)).unwrap();
        assert_eq!((back.height(), back.width()), (12, 9));
        let worst = img
            .pixels()
            .iter()
            .zip(back.pixels())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1.0 / 255.0);
    }

    #[test]
    fn io_error_names_path() {
        let img = ImageTensor::zeros(2, 2, Representation::Gaf);
        let err = export_raster(&img, Path::new("/nonexistent/dir/x.ppm")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/x.ppm"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode_ppm(b"P3\n1 1\n255\n000").is_err());
        assert!(decode_ppm(b"P6\n2 2\n255\nabc").is_err());
    }
}
