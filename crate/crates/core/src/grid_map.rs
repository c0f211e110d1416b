//! Fixed-resolution 2D grid carrying named per-cell layers.
//!
//! The grid origin is the world coordinate of the lower corner of cell
//! `(0, 0)`. Rows advance along +y, columns along +x. Whether a cell has been
//! observed at all is tracked by an explicit known mask; every derived layer
//! additionally carries its own validity mask so a cell can be known but have,
//! say, an undefined slope.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(row {}, col {})", self.row, self.col)
    }
}

/// Half-open rectangle of cells `[row_start, row_end) × [col_start, col_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRegion {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl CellRegion {
    /// Cells within `margin` cells of `index`, clipped to a `rows × cols` grid.
    pub fn around(index: CellIndex, margin: usize, rows: usize, cols: usize) -> Self {
        Self {
            row_start: index.row.saturating_sub(margin),
            row_end: (index.row + margin + 1).min(rows),
            col_start: index.col.saturating_sub(margin),
            col_end: (index.col + margin + 1).min(cols),
        }
    }

    pub fn grow(self, margin: usize, rows: usize, cols: usize) -> Self {
        Self {
            row_start: self.row_start.saturating_sub(margin),
            row_end: (self.row_end + margin).min(rows),
            col_start: self.col_start.saturating_sub(margin),
            col_end: (self.col_end + margin).min(cols),
        }
    }

    pub fn cells(self) -> impl Iterator<Item = CellIndex> {
        (self.row_start..self.row_end)
            .flat_map(move |row| (self.col_start..self.col_end).map(move |col| CellIndex::new(row, col)))
    }
}

/// Planar robot pose: 3D position plus heading about +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: [f64; 3],
    pub heading: f64,
}

impl Pose {
    pub fn new(position: [f64; 3], heading: f64) -> Self {
        Self {
            position,
            heading: normalize_angle(heading),
        }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.position[0], self.position[1]]
    }
}

/// Wraps an angle into `[-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if (-PI..=PI).contains(&angle) {
        return angle;
    }
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    if wrapped < -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

/// Ordered waypoint sequence; `N + 1` poses describe `N` segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    waypoints: Vec<Pose>,
}

impl Path {
    pub fn new(waypoints: Vec<Pose>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::InvalidPath("a path needs at least one waypoint".into()));
        }
        Ok(Self { waypoints })
    }

    /// Builds a path and checks that no segment is longer than `max_step`.
    pub fn with_max_step(waypoints: Vec<Pose>, max_step: f64) -> Result<Self> {
        let path = Self::new(waypoints)?;
        for (k, pair) in path.waypoints.windows(2).enumerate() {
            let step = distance3(&pair[0].position, &pair[1].position);
            if step > max_step + EPS {
                return Err(Error::InvalidPath(format!(
                    "segment {k} has length {step} > max step {max_step}"
                )));
            }
        }
        Ok(path)
    }

    pub fn waypoints(&self) -> &[Pose] {
        &self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = (&Pose, &Pose)> {
        self.waypoints.windows(2).map(|w| (&w[0], &w[1]))
    }

    pub fn reversed(&self) -> Self {
        let mut waypoints = self.waypoints.clone();
        waypoints.reverse();
        Self { waypoints }
    }
}

pub(crate) fn distance3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LayerId {
    Elevation,
    Variance,
    HeightMin,
    HeightMax,
    Smoothed,
    Slope,
    Roughness,
    Traversability,
    CollisionCost,
}

impl LayerId {
    pub const ALL: [LayerId; 9] = [
        LayerId::Elevation,
        LayerId::Variance,
        LayerId::HeightMin,
        LayerId::HeightMax,
        LayerId::Smoothed,
        LayerId::Slope,
        LayerId::Roughness,
        LayerId::Traversability,
        LayerId::CollisionCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerId::Elevation => "elevation",
            LayerId::Variance => "variance",
            LayerId::HeightMin => "h_min",
            LayerId::HeightMax => "h_max",
            LayerId::Smoothed => "smoothed",
            LayerId::Slope => "slope",
            LayerId::Roughness => "roughness",
            LayerId::Traversability => "traversability",
            LayerId::CollisionCost => "collision_cost",
        }
    }
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LayerId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::NoSuchLayer(s.to_string()))
    }
}

/// One scalar value per cell plus a per-cell validity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl Layer {
    fn new(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
            valid: vec![false; len],
        }
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.valid[i].then(|| self.values[i])
    }

    pub fn set(&mut self, i: usize, value: f64) {
        self.values[i] = value;
        self.valid[i] = true;
    }

    pub fn clear(&mut self, i: usize) {
        self.values[i] = 0.0;
        self.valid[i] = false;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLayerGridMap {
    resolution: f64,
    origin: [f64; 2],
    rows: usize,
    cols: usize,
    known: Vec<bool>,
    layers: BTreeMap<LayerId, Layer>,
    normals: Option<Vec<Option<[f64; 3]>>>,
}

impl MultiLayerGridMap {
    /// Creates an all-unknown map with the elevation, variance and confidence
    /// bound layers allocated.
    pub fn new(rows: usize, cols: usize, resolution: f64, origin: [f64; 2]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("grid must have at least one cell".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidParameter(format!("resolution {resolution} must be positive")));
        }
        let len = rows * cols;
        let layers = [
            LayerId::Elevation,
            LayerId::Variance,
            LayerId::HeightMin,
            LayerId::HeightMax,
        ]
        .into_iter()
        .map(|id| (id, Layer::new(len)))
        .collect();
        Ok(Self {
            resolution,
            origin,
            rows,
            cols,
            known: vec![false; len],
            layers,
            normals: None,
        })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    pub fn contains(&self, index: CellIndex) -> bool {
        index.row < self.rows && index.col < self.cols
    }

    /// Flat storage offset of a cell. Panics when out of bounds.
    pub fn offset(&self, index: CellIndex) -> usize {
        assert!(self.contains(index), "cell {index} outside {}x{} grid", self.rows, self.cols);
        index.row * self.cols + index.col
    }

    pub fn index_of(&self, offset: usize) -> CellIndex {
        CellIndex::new(offset / self.cols, offset % self.cols)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.len()).map(|i| self.index_of(i))
    }

    pub fn full_region(&self) -> CellRegion {
        CellRegion {
            row_start: 0,
            row_end: self.rows,
            col_start: 0,
            col_end: self.cols,
        }
    }

    /// Returns the cell containing `point`. Points on a shared cell boundary
    /// belong to the lower-index cell; the grid's own lower edge belongs to
    /// cell 0.
    pub fn world_to_cell(&self, point: [f64; 2]) -> Result<CellIndex> {
        let oob = || Error::OutOfBounds {
            x: point[0],
            y: point[1],
        };
        let col = axis_to_cell((point[0] - self.origin[0]) / self.resolution, self.cols).ok_or_else(oob)?;
        let row = axis_to_cell((point[1] - self.origin[1]) / self.resolution, self.rows).ok_or_else(oob)?;
        Ok(CellIndex::new(row, col))
    }

    pub fn cell_center(&self, index: CellIndex) -> [f64; 2] {
        [
            self.origin[0] + (index.col as f64 + 0.5) * self.resolution,
            self.origin[1] + (index.row as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn is_known(&self, index: CellIndex) -> bool {
        self.known[self.offset(index)]
    }

    pub fn known_mask(&self) -> &[bool] {
        &self.known
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    pub(crate) fn set_known(&mut self, index: CellIndex, known: bool) {
        let i = self.offset(index);
        self.known[i] = known;
    }

    pub fn has_layer(&self, id: LayerId) -> bool {
        self.layers.contains_key(&id)
    }

    pub fn layer(&self, id: LayerId) -> Result<&Layer> {
        self.layers.get(&id).ok_or_else(|| Error::NoSuchLayer(id.name().to_string()))
    }

    pub fn layer_mut(&mut self, id: LayerId) -> Result<&mut Layer> {
        self.layers.get_mut(&id).ok_or_else(|| Error::NoSuchLayer(id.name().to_string()))
    }

    /// Returns the layer, allocating an all-invalid one first if needed.
    pub fn ensure_layer(&mut self, id: LayerId) -> &mut Layer {
        let len = self.len();
        self.layers.entry(id).or_insert_with(|| Layer::new(len))
    }

    /// Value of `id` at `index`; `None` when the cell is unknown or the value
    /// is undefined there.
    pub fn get_layer_value(&self, id: LayerId, index: CellIndex) -> Result<Option<f64>> {
        let layer = self.layer(id)?;
        if !self.contains(index) {
            return Err(Error::CellOutOfBounds(index));
        }
        let i = self.offset(index);
        if !self.known[i] {
            return Ok(None);
        }
        Ok(layer.get(i))
    }

    /// Looks a layer up by its textual name.
    pub fn get_named_layer_value(&self, name: &str, index: CellIndex) -> Result<Option<f64>> {
        self.get_layer_value(name.parse()?, index)
    }

    pub fn set_layer_value(&mut self, id: LayerId, index: CellIndex, value: f64) -> Result<()> {
        if !self.contains(index) {
            return Err(Error::CellOutOfBounds(index));
        }
        let i = self.offset(index);
        self.layer_mut(id)?.set(i, value);
        Ok(())
    }

    pub fn elevation(&self, index: CellIndex) -> Option<f64> {
        let i = self.offset(index);
        if !self.known[i] {
            return None;
        }
        self.layers[&LayerId::Elevation].get(i)
    }

    pub fn normal(&self, index: CellIndex) -> Option<[f64; 3]> {
        let i = self.offset(index);
        self.normals.as_ref().and_then(|n| n[i])
    }

    pub(crate) fn normals_mut(&mut self) -> &mut Vec<Option<[f64; 3]>> {
        let len = self.len();
        self.normals.get_or_insert_with(|| vec![None; len])
    }

    /// Offsets `(d_row, d_col)` of every cell whose center is within `radius`
    /// meters of the origin cell's center, including `(0, 0)`.
    pub fn disk_offsets(&self, radius: f64) -> Vec<(isize, isize)> {
        let reach = (radius / self.resolution + EPS).floor() as isize;
        let limit = (radius / self.resolution) * (radius / self.resolution) + EPS;
        let mut out = Vec::new();
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                if ((dr * dr + dc * dc) as f64) <= limit {
                    out.push((dr, dc));
                }
            }
        }
        out
    }

    pub fn offset_cell(&self, index: CellIndex, d_row: isize, d_col: isize) -> Option<CellIndex> {
        let row = index.row.checked_add_signed(d_row)?;
        let col = index.col.checked_add_signed(d_col)?;
        let cell = CellIndex::new(row, col);
        self.contains(cell).then_some(cell)
    }

    /// In-bounds cells whose centers lie within `radius` meters of the center
    /// of `index`, the query cell included.
    pub fn neighborhood(&self, index: CellIndex, radius: f64) -> Vec<CellIndex> {
        self.disk_offsets(radius.max(0.0))
            .into_iter()
            .filter_map(|(dr, dc)| self.offset_cell(index, dr, dc))
            .collect()
    }

    /// Writes the elevation layer in the map text format.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "resolution {}", self.resolution)?;
        writeln!(out, "origin_x {}", self.origin[0])?;
        writeln!(out, "origin_y {}", self.origin[1])?;
        writeln!(out, "rows {}", self.rows)?;
        writeln!(out, "cols {}", self.cols)?;
        let elevation = &self.layers[&LayerId::Elevation];
        let mut line = String::new();
        for row in 0..self.rows {
            line.clear();
            for col in 0..self.cols {
                if col > 0 {
                    line.push(',');
                }
                let i = row * self.cols + col;
                match (self.known[i], elevation.get(i)) {
                    (true, Some(h)) => line.push_str(&h.to_string()),
                    _ => line.push('?'),
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads a map in the text format. Known cells are loaded as exact
    /// heights (zero variance, `h_min = h = h_max`).
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let mut header = |key: &str| -> Result<String> {
            let (n, line) = lines.next().ok_or_else(|| Error::parse(0, format!("missing header `{key}`")))?;
            let line = line?;
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(v), None) if k == key => Ok(v.to_string()),
                _ => Err(Error::parse(n + 1, format!("expected `{key} <value>`, found `{line}`"))),
            }
        };
        let num = |v: String, line: usize| -> Result<f64> {
            v.parse::<f64>().map_err(|e| Error::parse(line, format!("{v}: {e}")))
        };
        let count = |v: String, line: usize| -> Result<usize> {
            v.parse::<usize>().map_err(|e| Error::parse(line, format!("{v}: {e}")))
        };
        let resolution = num(header("resolution")?, 1)?;
        let origin_x = num(header("origin_x")?, 2)?;
        let origin_y = num(header("origin_y")?, 3)?;
        let rows = count(header("rows")?, 4)?;
        let cols = count(header("cols")?, 5)?;

        let mut map = Self::new(rows, cols, resolution, [origin_x, origin_y])?;
        let mut row = 0;
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if row >= rows {
                return Err(Error::parse(n + 1, format!("more than {rows} data rows")));
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols {
                return Err(Error::parse(n + 1, format!("expected {cols} values, found {}", fields.len())));
            }
            for (col, field) in fields.into_iter().enumerate() {
                if field == "?" {
                    continue;
                }
                let h: f64 = field.parse().map_err(|e| Error::parse(n + 1, format!("{field}: {e}")))?;
                if !h.is_finite() {
                    return Err(Error::parse(n + 1, format!("non-finite elevation {field}")));
                }
                map.set_exact_elevation(CellIndex::new(row, col), h);
            }
            row += 1;
        }
        if row != rows {
            return Err(Error::parse(0, format!("expected {rows} data rows, found {row}")));
        }
        Ok(map)
    }

    pub(crate) fn set_exact_elevation(&mut self, index: CellIndex, h: f64) {
        let i = self.offset(index);
        self.known[i] = true;
        for (id, value) in [
            (LayerId::Elevation, h),
            (LayerId::Variance, 0.0),
            (LayerId::HeightMin, h),
            (LayerId::HeightMax, h),
        ] {
            self.layers.get_mut(&id).expect("base layers always allocated").set(i, value);
        }
    }
}

fn axis_to_cell(u: f64, count: usize) -> Option<usize> {
    if !(u >= 0.0 && u <= count as f64) {
        return None;
    }
    if u == 0.0 {
        return Some(0);
    }
    Some(u.ceil() as usize - 1)
}
