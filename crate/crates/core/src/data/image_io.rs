use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Reads an 8-bit RGB PNG as a `[1, H, W, 3]` tensor with values `byte / 255`.
pub fn read_png<T: Scalar>(path: &Path) -> Result<Tensor<T>> {
    let unsupported = |reason: String| Error::UnsupportedFormat {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| unsupported(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(unsupported(format!(
            "expected 8-bit RGB, found {:?} at {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(|e| unsupported(e.to_string()))?;
    let bytes = &buf[..frame.buffer_size()];
    let data = bytes.iter().map(|&b| T::of(b as f64 / 255.0)).collect();
    Tensor::from_vec(Shape::new(1, h, w, 3)?, data)
}

/// Maps `[0, 1]` to a byte with round-half-up; out-of-range values clamp.
pub fn to_byte(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Writes batch item 0 of a 3-channel tensor as an 8-bit RGB PNG.
pub fn write_png<T: Scalar>(path: &Path, image: &Tensor<T>) -> Result<()> {
    let s = image.shape();
    if s.channels != 3 {
        return Err(Error::Shape(format!("PNG output needs 3 channels, got {s}")));
    }
    let bytes: Vec<u8> = image.data()[..s.item_len()].iter().map(|v| to_byte(v.as_f64())).collect();
    let file = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), s.width as u32, s.height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let write_err = |e: png::EncodingError| Error::io(format!("writing {}", path.display()), std::io::Error::other(e));
    let mut writer = encoder.write_header().map_err(write_err)?;
    writer.write_image_data(&bytes).map_err(write_err)?;
    writer.finish().map_err(write_err)
}
