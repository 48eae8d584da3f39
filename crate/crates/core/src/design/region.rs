//! Input boxes and non-implausible regions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::WaveCut;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Config("box bounds must be non-empty and of equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::Config("box needs finite lower < upper in every coordinate".into()));
        }
        Ok(Self { lower, upper })
    }

    /// The scaled box `[-1, 1]^d`.
    pub fn symmetric(d: usize) -> Self {
        Self {
            lower: vec![-1.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dims()).map(|i| self.width(i)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v >= l && v <= u)
    }

    /// Maps a point of `[-1, 1]^d` into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &c)| (self.lower[i] + 0.5 * (c + 1.0) * self.width(i)).clamp(self.lower[i], self.upper[i]))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| 2.0 * (v - self.lower[i]) / self.width(i) - 1.0)
            .collect()
    }
}

type Constraint = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A region of input space: a box intersected with every wave's cut and an
/// optional extra constraint.
#[derive(Clone)]
pub struct Region {
    pub bbox: BoundingBox,
    pub cuts: Vec<Arc<WaveCut>>,
    constraint: Option<Constraint>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region")
            .field("bbox", &self.bbox)
            .field("cuts", &self.cuts.len())
            .field("constraint", &self.constraint.is_some())
            .finish()
    }
}

impl Region {
    pub fn full(bbox: BoundingBox) -> Self {
        Self {
            bbox,
            cuts: Vec::new(),
            constraint: None,
        }
    }

    /// Adds a predicate (used for analytic test regions).
    pub fn with_constraint(mut self, f: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.constraint = Some(Arc::new(f));
        self
    }

    /// This region further restricted by a new wave cut.
    pub fn refine(&self, cut: Arc<WaveCut>) -> Self {
        let mut r = self.clone();
        r.cuts.push(cut);
        r
    }

    pub fn is_full_box(&self) -> bool {
        self.cuts.is_empty() && self.constraint.is_none()
    }

    pub fn dims(&self) -> usize {
        self.bbox.dims()
    }

    /// Membership: inside the box, the constraint and every cut (in order).
    pub fn contains(&self, x: &[f64]) -> bool {
        self.bbox.contains(x)
            && self.constraint.as_ref().is_none_or(|c| c(x))
            && self.cuts.iter().all(|c| c.contains(x))
    }
}
