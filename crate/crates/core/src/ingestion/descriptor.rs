use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::recognizer::{Region, WindowFeatureProvider};

/// Levels per channel after quantization.
pub const HISTOGRAM_LEVELS: usize = 8;
/// Length of [`histogram_descriptor`] output.
pub const HISTOGRAM_BINS: usize = HISTOGRAM_LEVELS * HISTOGRAM_LEVELS * HISTOGRAM_LEVELS;

/// Interleaved 8-bit RGB pixels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbPatch {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbPatch {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::InvalidParameter(format!(
                "{width}x{height} RGB patch needs {} bytes, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(RgbPatch {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        RgbPatch {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Copies out the pixels under `region`, which must lie inside the patch.
    pub fn crop(&self, region: &Region) -> Result<RgbPatch> {
        let (x0, y0) = (region.x as usize, region.y as usize);
        let (w, h) = (region.width as usize, region.height as usize);
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidParameter(format!(
                "region {region} exceeds {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * 3;
            data.extend_from_slice(&self.data[start..start + w * 3]);
        }
        Ok(RgbPatch {
            width: w,
            height: h,
            data,
        })
    }
}

/// Bin index of a pixel: each channel is bucketed by `value / 32`, red major.
pub fn histogram_bin(rgb: [u8; 3]) -> usize {
    let q = |v: u8| (v / 32) as usize;
    (q(rgb[0]) * HISTOGRAM_LEVELS + q(rgb[1])) * HISTOGRAM_LEVELS + q(rgb[2])
}

/// 8x8x8 joint RGB color histogram as raw counts. Callers normalize.
pub fn histogram_descriptor(patch: &RgbPatch) -> Result<Vec<f64>> {
    if patch.width == 0 || patch.height == 0 {
        return Err(Error::EmptyPatch);
    }
    let mut counts = [0u64; HISTOGRAM_BINS];
    for px in patch.pixels() {
        counts[histogram_bin(px)] += 1;
    }
    Ok(counts.iter().map(|&c| c as f64).collect())
}

/// Computes window features on demand from full tray photos.
#[derive(Debug, Clone, Default)]
pub struct HistogramProvider {
    images: BTreeMap<String, RgbPatch>,
}

impl HistogramProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, photo_id: impl Into<String>, image: RgbPatch) {
        self.images.insert(photo_id.into(), image);
    }
}

impl WindowFeatureProvider for HistogramProvider {
    fn dim(&self) -> usize {
        HISTOGRAM_BINS
    }

    fn window_feature(
        &self,
        photo_id: &str,
        _parent_feature_id: Option<&str>,
        window: &Region,
    ) -> Result<Option<Vec<f64>>> {
        match self.images.get(photo_id) {
            Some(image) => histogram_descriptor(&image.crop(window)?).map(Some),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_black_pixel() {
        let h = histogram_descriptor(&RgbPatch::filled(1, 1, [0, 0, 0])).unwrap();
        assert_eq!(h.len(), 512);
        assert_eq!(h[0], 1.0);
        assert_eq!(h.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn uniform_white_patch() {
        let h = histogram_descriptor(&RgbPatch::filled(10, 10, [255, 255, 255])).unwrap();
        assert_eq!(h[511], 100.0);
        assert_eq!(h.iter().sum::<f64>(), 100.0);
    }

    #[test]
    fn bin_layout() {
        assert_eq!(histogram_bin([31, 32, 255]), 8 + 7);
        assert_eq!(histogram_bin([64, 0, 0]), 2 * 64);
    }

    #[test]
    fn empty_patch() {
        let p = RgbPatch::new(0, 4, vec![]).unwrap();
        assert!(matches!(histogram_descriptor(&p), Err(Error::EmptyPatch)));
        assert!(RgbPatch::new(2, 2, vec![0; 11]).is_err());
    }

    #[test]
    fn crop_extracts_region() {
        let data: Vec<u8> = (0..4 * 3 * 3).map(|i| i as u8).collect();
        let img = RgbPatch::new(4, 3, data).unwrap();
        let c = img.crop(&Region::new(1, 1, 2, 2).unwrap()).unwrap();
        assert_eq!(c.pixel(0, 0), img.pixel(1, 1));
        assert_eq!(c.pixel(1, 1), img.pixel(2, 2));
        assert!(img.crop(&Region::new(3, 0, 2, 1).unwrap()).is_err());
    }
}
