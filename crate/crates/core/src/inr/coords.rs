use crate::error::{Error, Result};

/// Pixel-centre coordinates in `[-1, 1]²`, row-major over the image.
///
/// Pixel `(i, j)` of an `H x W` image maps to
/// `x = (2j + 1) / W - 1`, `y = (2i + 1) / H - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordGrid {
    points: Vec<[f64; 2]>,
}

impl CoordGrid {
    pub fn full(height: usize, width: usize) -> Self {
        let mut points = Vec::with_capacity(height * width);
        for i in 0..height {
            let y = (2 * i + 1) as f64 / height as f64 - 1.0;
            for j in 0..width {
                let x = (2 * j + 1) as f64 / width as f64 - 1.0;
                points.push([x, y]);
            }
        }
        CoordGrid { points }
    }

    pub fn from_points(points: Vec<[f64; 2]>) -> Result<Self> {
        if let Some(p) = points
            .iter()
            .find(|p| !p.iter().all(|c| c.is_finite() && (-1.0..=1.0).contains(c)))
        {
            return Err(Error::InvalidConfig(format!("coordinate {p:?} outside [-1, 1]")));
        }
        Ok(CoordGrid { points })
    }

    /// The points at `indices` (pixel indices into a full grid).
    pub fn subset(&self, indices: &[usize]) -> CoordGrid {
        CoordGrid {
            points: indices.iter().map(|&i| self.points[i]).collect(),
        }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
