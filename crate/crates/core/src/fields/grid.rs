use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform rectilinear grid in one to three dimensions.
///
/// Storage is row-major with axis 0 slowest. Periodic axes omit the endpoint
/// `hi` (it coincides with `lo`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    n: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    periodic: Vec<bool>,
}

/// Serialized form of [`Grid`]; `periodic` defaults to all false.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub periodic: Vec<bool>,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Grid> {
        let periodic = if s.periodic.is_empty() {
            vec![false; s.n.len()]
        } else {
            s.periodic
        };
        Grid::new(&s.n, &s.lo, &s.hi, &periodic)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> GridSpec {
        GridSpec {
            n: g.n,
            lo: g.lo,
            hi: g.hi,
            periodic: g.periodic,
        }
    }
}

impl Grid {
    pub fn new(n: &[usize], lo: &[f64], hi: &[f64], periodic: &[bool]) -> Result<Grid> {
        let dims = n.len();
        if !(1..=3).contains(&dims) {
            return Err(Error::InvalidGrid(format!("dims must be 1..=3, got {dims}")));
        }
        if lo.len() != dims || hi.len() != dims || periodic.len() != dims {
            return Err(Error::InvalidGrid(
                "n, lo, hi and periodic must have equal length".into(),
            ));
        }
        for axis in 0..dims {
            if n[axis] < 2 {
                return Err(Error::GridTooSmall {
                    axis,
                    points: n[axis],
                    required: 2,
                });
            }
            if !(lo[axis].is_finite() && hi[axis].is_finite()) || hi[axis] <= lo[axis] {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: need finite lo < hi, got [{}, {}]",
                    lo[axis], hi[axis]
                )));
            }
        }
        Ok(Grid {
            n: n.to_vec(),
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            periodic: periodic.to_vec(),
        })
    }

    /// Non-periodic grid with the same point count and bounds on every axis.
    pub fn cube(dims: usize, n: usize, lo: f64, hi: f64) -> Result<Grid> {
        Grid::new(&vec![n; dims], &vec![lo; dims], &vec![hi; dims], &vec![false; dims])
    }

    pub fn dims(&self) -> usize {
        self.n.len()
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    pub fn periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self, axis: usize) -> f64 {
        let intervals = if self.periodic[axis] {
            self.n[axis]
        } else {
            self.n[axis] - 1
        };
        (self.hi[axis] - self.lo[axis]) / intervals as f64
    }

    /// Largest spacing over all axes.
    pub fn h_max(&self) -> f64 {
        (0..self.dims()).map(|a| self.h(a)).fold(0.0, f64::max)
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if !self.periodic[axis] && i + 1 == self.n[axis] {
            return self.hi[axis];
        }
        self.lo[axis] + i as f64 * self.h(axis)
    }

    /// Coordinates along one axis.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.n[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dims() {
            return Err(Error::AxisOutOfRange {
                axis,
                dims: self.dims(),
            });
        }
        Ok(())
    }

    /// Multi-index of a flat index.
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dims()).rev() {
            out[axis] = idx % self.n[axis];
            idx /= self.n[axis];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.n).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Writes the coordinates of flat index `idx` into `out[..dims]`.
    pub fn point_into(&self, idx: usize, out: &mut [f64]) {
        let multi = self.unravel(idx);
        for axis in 0..self.dims() {
            out[axis] = self.coord(axis, multi[axis]);
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dims()];
        self.point_into(idx, &mut p);
        p
    }

    /// Halves the spacing on every axis, keeping the old nodes.
    pub fn refine(&self) -> Grid {
        let n = self
            .n
            .iter()
            .zip(&self.periodic)
            .map(|(&n, &p)| if p { 2 * n } else { 2 * n - 1 })
            .collect();
        Grid { n, ..self.clone() }
    }

    /// Restriction to the box `[lo, hi]`, keeping the spacing (non-periodic).
    pub fn with_bounds(&self, lo: &[f64], hi: &[f64]) -> Result<Grid> {
        Grid::new(&self.n, lo, hi, &self.periodic)
    }
}
