use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in pixel coordinates, `(x, y)` at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Region {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Result<Self> {
        let r = Region {
            x,
            y,
            width,
            height,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Validation(format!("region {self} has zero extent")));
        }
        if self.x.checked_add(self.width).is_none() || self.y.checked_add(self.height).is_none() {
            return Err(Error::Validation(format!("region {self} overflows")));
        }
        Ok(())
    }

    pub fn right(&self) -> u32 {
        self.x + self.width
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.height
    }

    pub fn short_side(&self) -> u32 {
        self.width.min(self.height)
    }

    /// True when `other` lies entirely inside `self`.
    pub fn contains(&self, other: &Region) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}+{}+{}", self.width, self.height, self.x, self.y)
    }
}

/// Checks `0 < window_fraction <= 1` and `0 < stride_fraction <= window_fraction`.
pub fn validate_window_params(window_fraction: f64, stride_fraction: f64) -> Result<()> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    if !(stride_fraction > 0.0 && stride_fraction <= window_fraction) {
        return Err(Error::InvalidParameter(format!(
            "stride fraction must lie in (0, {window_fraction}], got {stride_fraction}"
        )));
    }
    Ok(())
}

/// Square sliding windows over `parent`, in row-major order.
///
/// Both fractions scale the parent's short side: windows have side
/// `floor(window_fraction * short)` (at least one pixel) and start at offsets
/// `floor(k * stride_fraction * short)`. When the last regular offset leaves
/// a gap at the right or bottom edge, one more window flush with that edge
/// is added.
pub fn generate_windows(parent: &Region, window_fraction: f64, stride_fraction: f64) -> Result<Vec<Region>> {
    validate_window_params(window_fraction, stride_fraction)?;
    parent.validate()?;
    let short = f64::from(parent.short_side());
    let side = ((window_fraction * short).floor() as u32).max(1);
    let step = stride_fraction * short;
    let xs = axis_offsets(parent.width, side, step);
    let ys = axis_offsets(parent.height, side, step);
    let mut windows = Vec::with_capacity(xs.len() * ys.len());
    for &dy in &ys {
        for &dx in &xs {
            windows.push(Region {
                x: parent.x + dx,
                y: parent.y + dy,
                width: side,
                height: side,
            });
        }
    }
    Ok(windows)
}

fn axis_offsets(extent: u32, side: u32, step: f64) -> Vec<u32> {
    let last = extent - side;
    let mut offsets: Vec<u32> = Vec::new();
    for k in 0u32.. {
        let o = (f64::from(k) * step).floor();
        if o > f64::from(last) {
            break;
        }
        let o = o as u32;
        if offsets.last() != Some(&o) {
            offsets.push(o);
        }
    }
    if offsets.last() != Some(&last) {
        offsets.push(last);
    }
    offsets
}
