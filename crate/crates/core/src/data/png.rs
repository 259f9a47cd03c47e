//! PNG encoding of image tensors (8-bit, gray or RGB).

use std::io::Cursor;

use image::{imageops::FilterType, DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::{R2rError, Result};
use crate::tensor::{ImageTensor, Shape3};

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn to_dynamic(img: &ImageTensor) -> Result<DynamicImage> {
    let Shape3 { channels, height, width } = img.shape();
    let plane = height * width;
    let d = img.data();
    let (w, h) = (width as u32, height as u32);
    match channels {
        1 => {
            let buf = d.iter().map(|&v| to_byte(v)).collect();
            Ok(DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, buf).unwrap()))
        }
        3 => {
            let buf = (0..plane)
                .flat_map(|p| (0..3).map(move |c| to_byte(d[c * plane + p])))
                .collect();
            Ok(DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, buf).unwrap()))
        }
        c => Err(R2rError::Image(format!("cannot encode {c}-channel image as PNG"))),
    }
}

pub fn encode_png(img: &ImageTensor) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    to_dynamic(img)?
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| R2rError::Image(e.to_string()))?;
    Ok(out.into_inner())
}

/// Decodes a PNG, converting color mode and resizing to `shape` when they differ.
pub fn decode_png(bytes: &[u8], shape: Shape3) -> Result<ImageTensor> {
    let mut img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| R2rError::Image(e.to_string()))?;
    let (w, h) = (shape.width as u32, shape.height as u32);
    if img.width() != w || img.height() != h {
        img = img.resize_exact(w, h, FilterType::Triangle);
    }
    let plane = shape.height * shape.width;
    let data = match shape.channels {
        1 => img.to_luma8().into_raw().iter().map(|&b| b as f64 / 255.0).collect(),
        3 => {
            let raw = img.to_rgb8().into_raw();
            (0..3)
                .flat_map(|c| (0..plane).map(move |p| c + p * 3))
                .map(|i| raw[i] as f64 / 255.0)
                .collect()
        }
        c => return Err(R2rError::Image(format!("cannot decode into {c} channels"))),
    };
    ImageTensor::new(shape, data)
}

/// Reads PNG dimensions and channel count without converting.
pub fn probe_png(bytes: &[u8]) -> Result<Shape3> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| R2rError::Image(e.to_string()))?;
    let channels = if img.color().has_color() { 3 } else { 1 };
    Ok(Shape3::new(channels, img.height() as usize, img.width() as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantized_round_trip() {
        for shape in [Shape3::new(1, 4, 5), Shape3::new(3, 4, 5)] {
            let data: Vec<f64> = (0..shape.len()).map(|i| (i % 256) as f64 / 255.0).collect();
            let img = ImageTensor::new(shape, data).unwrap();
            let bytes = encode_png(&img).unwrap();
            assert_eq!(probe_png(&bytes).unwrap(), shape);
            assert_eq!(decode_png(&bytes, shape).unwrap(), img);
        }
    }

    #[test]
    fn resizes_and_converts() {
        let img = ImageTensor::filled(Shape3::new(3, 8, 8), 1.0);
        let bytes = encode_png(&img).unwrap();
        let out = decode_png(&bytes, Shape3::new(1, 4, 4)).unwrap();
        assert!(out.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn garbage_is_an_error() {
        assert!(decode_png(b"not a png", Shape3::new(1, 2, 2)).is_err());
    }
}
