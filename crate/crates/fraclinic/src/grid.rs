//! Uniform symmetric grids on `[-X, X]` and sampled vector-valued profiles.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Uniform grid with an odd number of nodes, so `x = 0` is always a node.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Grid {
    half_width: f64,
    len: usize,
}

impl Grid {
    pub fn new(half_width: f64, len: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidInput(format!("half width must be positive, got {half_width}")));
        }
        if len < 3 || len % 2 == 0 {
            return Err(Error::InvalidInput(format!("point count must be odd and >= 3, got {len}")));
        }
        Ok(Self { half_width, len })
    }

    /// Grid with spacing as close as possible to `h` (rounded so the count is odd).
    pub fn with_spacing(half_width: f64, h: f64) -> Result<Self> {
        let cells = (2.0 * half_width / h).round().max(2.0) as usize;
        let cells = cells + cells % 2;
        Self::new(half_width, cells + 1)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.len - 1) as f64
    }

    pub fn center(&self) -> usize {
        self.len / 2
    }

    /// Node coordinate. Computed from the center so that `x(i) == -x(N-1-i)` bitwise.
    pub fn x(&self, i: usize) -> f64 {
        let c = self.center() as isize;
        (i as isize - c) as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.x(i)).collect()
    }

    /// Index of the node closest to `x`, if it lies within half a cell of the box.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        let h = self.h();
        let k = (x / h).round() + self.center() as f64;
        if k < 0.0 || k > (self.len - 1) as f64 || (x - (k - self.center() as f64) * h).abs() > 0.5 * h + 1e-12 * h {
            return None;
        }
        Some(k as usize)
    }
}

/// How a profile continues outside `[-X, X]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum Extension {
    Zero,
    /// Constant values per component on the left and right.
    Constant { left: Vec<f64>, right: Vec<f64> },
    /// `q(x) = q(±X) (X/|x|)^exponent` for `|x| > X`.
    PowerTail { exponent: f64 },
}

/// Sampled `q: R -> R^n`. Values are stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    ncomp: usize,
    values: Vec<f64>,
    extension: Extension,
}

impl GridFunction {
    pub fn new(grid: Grid, ncomp: usize, values: Vec<f64>, extension: Extension) -> Result<Self> {
        if ncomp == 0 {
            return Err(Error::InvalidInput("component count must be >= 1".into()));
        }
        if values.len() != grid.len() * ncomp {
            return Err(Error::InvalidInput(format!(
                "expected {} values, got {}",
                grid.len() * ncomp,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value {v}")));
        }
        match &extension {
            Extension::PowerTail { exponent } if !(*exponent > 0.0) => {
                return Err(Error::InvalidInput("power-tail exponent must be positive".into()))
            }
            Extension::Constant { left, right } if left.len() != ncomp || right.len() != ncomp => {
                return Err(Error::InvalidInput("constant extension has wrong component count".into()))
            }
            _ => {}
        }
        Ok(Self { grid, ncomp, values, extension })
    }

    pub fn zeros(grid: Grid, ncomp: usize) -> Self {
        Self { grid, ncomp, values: vec![0.0; grid.len() * ncomp], extension: Extension::Zero }
    }

    /// Scalar profile sampled from `f`, zero outside the box.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        Self { grid, ncomp: 1, values, extension: Extension::Zero }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn extension(&self) -> &Extension {
        &self.extension
    }

    pub fn with_extension(mut self, extension: Extension) -> Result<Self> {
        let g = self.grid;
        let n = self.ncomp;
        self.extension = extension;
        Self::new(g, n, self.values, self.extension)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, j: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.values[j * n..(j + 1) * n]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.len() + i]
    }

    /// `q(x_i)` as a vector.
    pub fn point(&self, i: usize) -> Vec<f64> {
        (0..self.ncomp).map(|j| self.at(i, j)).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete `L^2` norm, `(h sum |q_i|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.h() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `sum_j int |q_j|^t`.
    pub fn lt_power(&self, t: f64) -> f64 {
        self.grid.h() * self.values.iter().map(|v| v.abs().powf(t)).sum::<f64>()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.grid == other.grid && self.ncomp == other.ncomp
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            ncomp: self.ncomp,
            values: self.values.iter().map(|&v| f(v)).collect(),
            extension: self.extension.clone(),
        }
    }

    /// `a*self + b*other`, keeping the extension of `self` (zero if both are zero).
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Self {
        assert!(self.same_shape(other), "grid function shapes differ");
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        let scale = |v: &[f64], c: f64| v.iter().map(|x| c * x).collect::<Vec<f64>>();
        let extension = match (&self.extension, &other.extension) {
            (Extension::Constant { left: l1, right: r1 }, Extension::Constant { left: l2, right: r2 }) => {
                Extension::Constant {
                    left: l1.iter().zip(l2).map(|(x, y)| a * x + b * y).collect(),
                    right: r1.iter().zip(r2).map(|(x, y)| a * x + b * y).collect(),
                }
            }
            (Extension::Constant { left, right }, Extension::Zero) => {
                Extension::Constant { left: scale(left, a), right: scale(right, a) }
            }
            (Extension::Zero, Extension::Constant { left, right }) => {
                Extension::Constant { left: scale(left, b), right: scale(right, b) }
            }
            (Extension::Zero, e) => e.clone(),
            (e, _) => e.clone(),
        };
        Self { grid: self.grid, ncomp: self.ncomp, values, extension }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x");
        for j in 0..self.ncomp {
            let _ = write!(out, ",q_{}", j + 1);
        }
        out.push('\n');
        for i in 0..self.grid.len() {
            let _ = write!(out, "{}", fmt17(self.grid.x(i)));
            for j in 0..self.ncomp {
                let _ = write!(out, ",{}", fmt17(self.at(i, j)));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV written by [`to_csv`](Self::to_csv). The node set must be a valid grid.
    pub fn from_csv(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::Parse { line: 1, col: 1, msg: "empty file".into() })??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 2 || cols[0] != "x" || cols[1..].iter().enumerate().any(|(j, c)| *c != format!("q_{}", j + 1)) {
            return Err(Error::Parse { line: 1, col: 1, msg: format!("bad header `{}`", header.trim()) });
        }
        let ncomp = cols.len() - 1;
        let mut xs = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (ln, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut col = 1;
            let mut row = Vec::with_capacity(ncomp + 1);
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: ln + 2,
                    col,
                    msg: format!("not a number: `{field}`"),
                })?;
                row.push(v);
                col += field.len() + 1;
            }
            if row.len() != ncomp + 1 {
                return Err(Error::Parse { line: ln + 2, col: 1, msg: format!("expected {} fields", ncomp + 1) });
            }
            xs.push(row[0]);
            rows.push(row[1..].to_vec());
        }
        let n = xs.len();
        let grid = Grid::new(-xs.first().copied().unwrap_or(0.0), n)?;
        let h = grid.h();
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.x(i)).abs() > 1e-9 * h.max(1.0) {
                return Err(Error::Parse { line: i + 2, col: 1, msg: format!("node {x} is not on a symmetric uniform grid") });
            }
        }
        let mut values = vec![0.0; n * ncomp];
        for (i, r) in rows.iter().enumerate() {
            for j in 0..ncomp {
                values[j * n + i] = r[j];
            }
        }
        Self::new(grid, ncomp, values, Extension::Zero)
    }
}

/// Formats with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{:.16e}", v)
}

/// `q(-x)`: node `i` receives node `N-1-i`; tails swap sides.
pub fn reflect(q: &GridFunction) -> GridFunction {
    let n = q.grid.len();
    let mut values = vec![0.0; q.values.len()];
    for j in 0..q.ncomp {
        for i in 0..n {
            values[j * n + i] = q.values[j * n + (n - 1 - i)];
        }
    }
    let extension = match &q.extension {
        Extension::Constant { left, right } => Extension::Constant { left: right.clone(), right: left.clone() },
        e => e.clone(),
    };
    GridFunction { grid: q.grid, ncomp: q.ncomp, values, extension }
}

/// Componentwise `(max{q, q*}, min{q, q*})`.
pub fn max_min_combine(q: &GridFunction, q_star: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    if !q.same_shape(q_star) {
        return Err(Error::InvalidInput("grid mismatch in max/min combination".into()));
    }
    let mut hi = q.clone();
    let mut lo = q.clone();
    for (k, (&a, &b)) in q.values.iter().zip(&q_star.values).enumerate() {
        hi.values[k] = a.max(b);
        lo.values[k] = a.min(b);
    }
    if let (Extension::Constant { left: l1, right: r1 }, Extension::Constant { left: l2, right: r2 }) =
        (&q.extension, &q_star.extension)
    {
        let f = |a: &[f64], b: &[f64], up: bool| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| if up { x.max(*y) } else { x.min(*y) }).collect()
        };
        hi.extension = Extension::Constant { left: f(l1, l2, true), right: f(r1, r2, true) };
        lo.extension = Extension::Constant { left: f(l1, l2, false), right: f(r1, r2, false) };
    }
    Ok((hi, lo))
}

/// Extended-real interval `[a, b]` and the grid nodes it contains.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PinRegion {
    pub a: f64,
    pub b: f64,
    pub indices: Vec<usize>,
}

impl PinRegion {
    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Mask with `true` on free (unpinned) nodes.
    pub fn free_mask(&self, len: usize) -> Vec<bool> {
        let mut m = vec![true; len];
        for &i in &self.indices {
            m[i] = false;
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        self.a == -self.b
    }
}

/// Nodes with `x_i` in `[a, b]`; a degenerate interval snaps to the nearest node.
/// `s` is needed because a single pinned point only makes sense for `s > 1/2`.
pub fn pin_indices(grid: &Grid, a: f64, b: f64, s: f64) -> Result<PinRegion> {
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::InvalidInput(format!("pin interval [{a}, {b}] is empty")));
    }
    if a == b {
        if s <= 0.5 {
            return Err(Error::Hypothesis(format!(
                "pinning a single point requires s > 1/2 (got s = {s}); use an interval"
            )));
        }
        let i = grid.nearest(a).ok_or_else(|| Error::InvalidInput(format!("pin point {a} is outside the box")))?;
        return Ok(PinRegion { a, b, indices: vec![i] });
    }
    let tol = 1e-12 * grid.h();
    let indices: Vec<usize> = (0..grid.len()).filter(|&i| grid.x(i) >= a - tol && grid.x(i) <= b + tol).collect();
    if indices.is_empty() {
        return Err(Error::InvalidInput(format!("pin interval [{a}, {b}] contains no grid node")));
    }
    Ok(PinRegion { a, b, indices })
}
