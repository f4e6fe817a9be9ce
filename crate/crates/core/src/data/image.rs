use image::RgbImage;
use rayon::prelude::*;

use super::manifest::{DatasetManifest, SampleRecord};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Scales 8-bit RGB to `[0, 1]` and resizes bilinearly to `size × size`,
/// returning an `(h, w, 3)` tensor.
pub fn normalize_image<T: Scalar>(raw: &RgbImage, size: usize) -> Tensor<T> {
    let (w, h) = (raw.width() as usize, raw.height() as usize);
    let scaled: Vec<f64> = raw.as_raw().iter().map(|&b| b as f64 / 255.0).collect();
    let data = if w == size && h == size {
        scaled
    } else {
        bilinear_resize(&scaled, h, w, 3, size, size)
    };
    Tensor::new(vec![size, size, 3], data.into_iter().map(T::of).collect()).expect("resize keeps extents")
}

/// Bilinear resampling with pixel-centre alignment and edge clamping.
pub fn bilinear_resize(src: &[f64], h: usize, w: usize, c: usize, oh: usize, ow: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(oh * ow * c);
    let sy = h as f64 / oh as f64;
    let sx = w as f64 / ow as f64;
    for oy in 0..oh {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = fy - y0 as f64;
        for ox in 0..ow {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = fx - x0 as f64;
            for ch in 0..c {
                let at = |y: usize, x: usize| src[(y * w + x) * c + ch];
                let top = at(y0, x0) * (1.0 - tx) + at(y0, x1) * tx;
                let bottom = at(y1, x0) * (1.0 - tx) + at(y1, x1) * tx;
                out.push(top * (1.0 - ty) + bottom * ty);
            }
        }
    }
    out
}

/// Images of `records` stacked into `(n, size, size, 3)` plus their class labels.
pub fn load_batch<T: Scalar>(
    manifest: &DatasetManifest,
    records: &[SampleRecord],
    size: usize,
) -> Result<(Tensor<T>, Vec<usize>)> {
    let images: Vec<Tensor<T>> = records
        .par_iter()
        .map(|r| {
            let path = manifest.image_path(r);
            let img = image::open(&path)
                .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
                .to_rgb8();
            Ok(normalize_image(&img, size))
        })
        .collect::<Result<_>>()?;
    let mut data = Vec::with_capacity(records.len() * size * size * 3);
    for img in images {
        data.extend(img.into_data());
    }
    let labels = records.iter().map(|r| r.class_index).collect();
    Ok((Tensor::new(vec![records.len(), size, size, 3], data)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes_and_mid_gray() {
        let black = RgbImage::from_pixel(4, 4, image::Rgb([0, 0, 0]));
        assert!(normalize_image::<f64>(&black, 4).data().iter().all(|&v| v == 0.0));
        let white = RgbImage::from_pixel(4, 4, image::Rgb([255, 255, 255]));
        assert!(normalize_image::<f64>(&white, 2).data().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let gray = RgbImage::from_pixel(3, 3, image::Rgb([128, 128, 128]));
        let t = normalize_image::<f64>(&gray, 3);
        assert!(t.data().iter().all(|&v| (v - 0.50196).abs() < 1e-5));
        assert!((t.data()[0] - 128.0 / 255.0).abs() < 1e-15);
    }

    #[test]
    fn halving_averages_two_by_two_blocks() {
        let src: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let out = bilinear_resize(&src, 4, 4, 1, 2, 2);
        assert_eq!(out, vec![2.5, 4.5, 10.5, 12.5]);
    }

    #[test]
    fn output_stays_in_unit_range() {
        let img = RgbImage::from_fn(7, 5, |x, y| image::Rgb([(x * 40) as u8, (y * 60) as u8, 255]));
        let t = normalize_image::<f32>(&img, 6);
        assert_eq!(t.shape(), &[6, 6, 3]);
        assert!(t.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
