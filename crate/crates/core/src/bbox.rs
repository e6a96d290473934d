use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle in pixel coordinates.
///
/// The internal convention is 0-based, half-open: the box covers
/// `[xmin, xmax) x [ymin, ymax)`, so `width = xmax - xmin` holds exactly.
/// Conversion from VOC's 1-based inclusive pixels happens once, at the IO
/// boundary in [`crate::voc`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BBox {
    /// Builds a box, enforcing finite non-negative coordinates and strictly
    /// positive area.
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<BBox> {
        let b = BBox {
            xmin,
            ymin,
            xmax,
            ymax,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let coords = [self.xmin, self.ymin, self.xmax, self.ymax];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry(format!("non-finite coordinate in {self:?}")));
        }
        if coords.iter().any(|c| *c < 0.0) {
            return Err(Error::Geometry(format!("negative coordinate in {self:?}")));
        }
        if self.xmax <= self.xmin || self.ymax <= self.ymin {
            return Err(Error::Geometry(format!(
                "degenerate box: xmin={} ymin={} xmax={} ymax={}",
                self.xmin, self.ymin, self.xmax, self.ymax
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Geometric intersection, `None` when the boxes do not overlap with
    /// positive area.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let xmin = self.xmin.max(other.xmin);
        let ymin = self.ymin.max(other.ymin);
        let xmax = self.xmax.min(other.xmax);
        let ymax = self.ymax.min(other.ymax);
        if xmin < xmax && ymin < ymax {
            Some(BBox {
                xmin,
                ymin,
                xmax,
                ymax,
            })
        } else {
            None
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox {
            xmin: self.xmin + dx,
            ymin: self.ymin + dy,
            xmax: self.xmax + dx,
            ymax: self.ymax + dy,
        }
    }

    /// Clips to the canvas `[0, width] x [0, height]`; `None` when nothing
    /// with positive area remains.
    pub fn clip(&self, width: f64, height: f64) -> Option<BBox> {
        let xmin = self.xmin.max(0.0);
        let ymin = self.ymin.max(0.0);
        let xmax = self.xmax.min(width);
        let ymax = self.ymax.min(height);
        if xmin < xmax && ymin < ymax {
            Some(BBox {
                xmin,
                ymin,
                xmax,
                ymax,
            })
        } else {
            None
        }
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.xmin, self.ymin),
            (self.xmax, self.ymin),
            (self.xmax, self.ymax),
            (self.xmin, self.ymax),
        ]
    }

    /// Axis-aligned hull of a point set. Panics on an empty slice.
    pub fn hull_of(points: &[(f64, f64)]) -> BBox {
        assert!(!points.is_empty(), "hull of empty point set");
        let mut xmin = f64::INFINITY;
        let mut ymin = f64::INFINITY;
        let mut xmax = f64::NEG_INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for &(x, y) in points {
            xmin = xmin.min(x);
            ymin = ymin.min(y);
            xmax = xmax.max(x);
            ymax = ymax.max(y);
        }
        BBox {
            xmin,
            ymin,
            xmax,
            ymax,
        }
    }

    /// Ordering key used for deterministic tie-breaks.
    pub fn lex_key(&self) -> [f64; 4] {
        [self.xmin, self.ymin, self.xmax, self.ymax]
    }
}

/// Total order over boxes by (xmin, ymin, xmax, ymax); coordinates are
/// finite by construction so `total_cmp` never sees NaN surprises.
pub fn cmp_boxes(a: &BBox, b: &BBox) -> std::cmp::Ordering {
    let ka = a.lex_key();
    let kb = b.lex_key();
    for (x, y) in ka.iter().zip(kb.iter()) {
        let ord = x.total_cmp(y);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_and_invalid() {
        assert!(BBox::new(10.0, 20.0, 50.0, 80.0).is_ok());
        assert!(BBox::new(50.0, 0.0, 50.0, 10.0).is_err());
        assert!(BBox::new(60.0, 0.0, 50.0, 10.0).is_err());
        assert!(BBox::new(-1.0, 0.0, 50.0, 10.0).is_err());
        assert!(BBox::new(f64::NAN, 0.0, 50.0, 10.0).is_err());
    }

    #[test]
    fn intersection_basic() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let b = BBox::new(5.0, 0.0, 15.0, 10.0).unwrap();
        let i = a.intersection(&b).unwrap();
        assert_eq!(i, BBox::new(5.0, 0.0, 10.0, 10.0).unwrap());
        let c = BBox::new(20.0, 20.0, 30.0, 30.0).unwrap();
        assert!(a.intersection(&c).is_none());
        // Touching edges share no area.
        let d = BBox::new(10.0, 0.0, 20.0, 10.0).unwrap();
        assert!(a.intersection(&d).is_none());
    }

    #[test]
    fn hull_recovers_box_from_corners() {
        let b = BBox::new(3.0, 4.0, 9.5, 12.25).unwrap();
        assert_eq!(BBox::hull_of(&b.corners()), b);
    }
}
