//! Graph sides, edge-attribute and node-similarity matrices, and the
//! accuracy metric.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::delaunay;
use crate::error::{invalid, Error, Result};

/// A 2D keypoint in pixel coordinates.
pub type Point = [f64; 2];

/// One graph of a matching pair: node positions and their descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSide {
    points: Vec<Point>,
    descriptors: Vec<Vec<f64>>,
}

impl GraphSide {
    pub fn new(points: Vec<Point>, descriptors: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() != descriptors.len() {
            return Err(invalid(format!(
                "{} points but {} descriptors",
                points.len(),
                descriptors.len()
            )));
        }
        if let Some(first) = descriptors.first() {
            let dim = first.len();
            if dim == 0 {
                return Err(invalid("descriptor dimension must be at least 1"));
            }
            if let Some(bad) = descriptors.iter().position(|d| d.len() != dim) {
                return Err(invalid(format!(
                    "descriptor {bad} has dimension {}, expected {dim}",
                    descriptors[bad].len()
                )));
            }
        }
        Ok(Self { points, descriptors })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn descriptors(&self) -> &[Vec<f64>] {
        &self.descriptors
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Descriptor dimension, or `None` for an empty graph.
    pub fn descriptor_dim(&self) -> Option<usize> {
        self.descriptors.first().map(Vec::len)
    }
}

/// How the pairwise edge attributes of a graph were built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttributeKind {
    Length,
    Adjacency,
    InnerProduct,
}

impl AttributeKind {
    pub const ALL: [AttributeKind; 3] = [
        AttributeKind::Length,
        AttributeKind::Adjacency,
        AttributeKind::InnerProduct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttributeKind::Length => "length",
            AttributeKind::Adjacency => "adjacency",
            AttributeKind::InnerProduct => "inner_product",
        }
    }
}

impl core::str::FromStr for AttributeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "length" => Ok(AttributeKind::Length),
            "adjacency" => Ok(AttributeKind::Adjacency),
            "inner_product" | "inner-product" => Ok(AttributeKind::InnerProduct),
            other => Err(invalid(format!("unknown attribute kind `{other}`"))),
        }
    }
}

/// Symmetric, zero-diagonal matrix of pairwise edge attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAttributes {
    values: DMatrix<f64>,
    kind: AttributeKind,
}

impl EdgeAttributes {
    /// Wraps a caller-supplied matrix, checking exact symmetry and a zero diagonal.
    pub fn from_matrix(values: DMatrix<f64>, kind: AttributeKind) -> Result<Self> {
        if !values.is_square() {
            return Err(invalid("edge attribute matrix must be square"));
        }
        let n = values.nrows();
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(invalid(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..i {
                if values[(i, j)] != values[(j, i)] {
                    return Err(invalid(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
                if !values[(i, j)].is_finite() {
                    return Err(invalid(format!("entry ({i},{j}) is not finite")));
                }
            }
        }
        Ok(Self { values, kind })
    }

    /// Fills the upper triangle from `f` and mirrors it, so symmetry is exact.
    fn from_pairs(n: usize, kind: AttributeKind, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
        }
        Self { values, kind }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> AttributeKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

fn distance(a: Point, b: Point) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

/// Euclidean edge lengths, optionally divided by the graph's longest edge.
pub fn length_attributes(points: &[Point], normalize: bool) -> Result<EdgeAttributes> {
    if points.len() < 2 {
        return Err(invalid("length attributes need at least 2 points"));
    }
    let mut attrs = EdgeAttributes::from_pairs(points.len(), AttributeKind::Length, |i, j| {
        distance(points[i], points[j])
    });
    if normalize {
        let longest = attrs.values.max();
        if !(longest > 0.0) {
            return Err(Error::DegenerateGeometry(
                "all points coincide; cannot normalize edge lengths".into(),
            ));
        }
        attrs.values /= longest;
    }
    Ok(attrs)
}

/// 0/1 adjacency of the Delaunay triangulation (chain along the dominant
/// axis for collinear input).
pub fn adjacency_attributes(points: &[Point]) -> Result<EdgeAttributes> {
    if points.len() < 2 {
        return Err(invalid("adjacency attributes need at least 2 points"));
    }
    let n = points.len();
    let mut values = DMatrix::zeros(n, n);
    for (i, j) in delaunay::triangulation_edges(points) {
        values[(i, j)] = 1.0;
        values[(j, i)] = 1.0;
    }
    Ok(EdgeAttributes {
        values,
        kind: AttributeKind::Adjacency,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_same_dim(descriptors: &[Vec<f64>]) -> Result<usize> {
    let dim = descriptors.first().map_or(0, Vec::len);
    if descriptors.iter().any(|d| d.len() != dim) {
        return Err(invalid("descriptor dimensions differ"));
    }
    Ok(dim)
}

/// Pairwise descriptor inner products with the diagonal forced to zero.
pub fn inner_product_attributes(descriptors: &[Vec<f64>]) -> Result<EdgeAttributes> {
    if descriptors.len() < 2 {
        return Err(invalid("inner-product attributes need at least 2 descriptors"));
    }
    check_same_dim(descriptors)?;
    Ok(EdgeAttributes::from_pairs(
        descriptors.len(),
        AttributeKind::InnerProduct,
        |i, j| dot(&descriptors[i], &descriptors[j]),
    ))
}

/// Builds the edge attributes of `kind` for one graph side.
pub fn edge_attributes(side: &GraphSide, kind: AttributeKind, normalize: bool) -> Result<EdgeAttributes> {
    match kind {
        AttributeKind::Length => length_attributes(side.points(), normalize),
        AttributeKind::Adjacency => adjacency_attributes(side.points()),
        AttributeKind::InnerProduct => inner_product_attributes(side.descriptors()),
    }
}

/// Dense `n x m` node-similarity matrix `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSimilarity(DMatrix<f64>);

impl NodeSimilarity {
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("node similarity has non-finite entries"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }
}

/// `U = scale * A Bᵀ` over the descriptor rows of both sides.
///
/// This is the bilinear similarity with its metric fixed to a multiple of the
/// identity.
pub fn node_similarity(a: &GraphSide, b: &GraphSide, scale: f64) -> Result<NodeSimilarity> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(invalid("similarity scale must be positive and finite"));
    }
    if let (Some(da), Some(db)) = (a.descriptor_dim(), b.descriptor_dim()) {
        if da != db {
            return Err(invalid(format!("descriptor dimensions differ: {da} vs {db}")));
        }
    }
    let values = DMatrix::from_fn(a.len(), b.len(), |i, j| {
        scale * dot(&a.descriptors()[i], &b.descriptors()[j])
    });
    NodeSimilarity::from_matrix(values)
}

/// A discrete injective assignment of `rows` nodes into `cols` nodes.
///
/// Every row is matched exactly once and every column at most once.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HardAssignment {
    cols: usize,
    col_of_row: Vec<usize>,
}

impl HardAssignment {
    pub fn from_mapping(cols: usize, col_of_row: Vec<usize>) -> Result<Self> {
        let mut used = vec![false; cols];
        for (row, &col) in col_of_row.iter().enumerate() {
            if col >= cols {
                return Err(invalid(format!("row {row} mapped to column {col} >= {cols}")));
            }
            if core::mem::replace(&mut used[col], true) {
                return Err(invalid(format!("column {col} assigned twice")));
            }
        }
        Ok(Self { cols, col_of_row })
    }

    /// Builds from a list of matched `(row, col)` pairs covering every row once.
    pub fn from_pairs(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut mapping = vec![usize::MAX; rows];
        for &(r, c) in pairs {
            if r >= rows {
                return Err(invalid(format!("row index {r} out of range")));
            }
            if mapping[r] != usize::MAX {
                return Err(invalid(format!("row {r} assigned twice")));
            }
            mapping[r] = c;
        }
        if let Some(r) = mapping.iter().position(|&c| c == usize::MAX) {
            return Err(invalid(format!("row {r} is unassigned")));
        }
        Self::from_mapping(cols, mapping)
    }

    /// Reads a 0/1 matrix, rejecting anything outside the discrete feasible set.
    pub fn from_matrix(p: &DMatrix<f64>) -> Result<Self> {
        let mut mapping = Vec::with_capacity(p.nrows());
        for r in 0..p.nrows() {
            let mut hit = None;
            for c in 0..p.ncols() {
                match p[(r, c)] {
                    0.0 => {}
                    v if v == 1.0 && hit.is_none() => hit = Some(c),
                    _ => return Err(invalid(format!("row {r} is not a 0/1 unit row"))),
                }
            }
            mapping.push(hit.ok_or_else(|| invalid(format!("row {r} is empty")))?);
        }
        Self::from_mapping(p.ncols(), mapping)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            cols: n,
            col_of_row: (0..n).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.col_of_row.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mapping(&self) -> &[usize] {
        &self.col_of_row
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.col_of_row.iter().copied().enumerate()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.rows(), self.cols);
        for (r, c) in self.pairs() {
            p[(r, c)] = 1.0;
        }
        p
    }
}

/// Fraction of rows whose assignment agrees with `truth`.
pub fn accuracy(p: &HardAssignment, truth: &HardAssignment) -> Result<f64> {
    if p.rows() != truth.rows() || p.cols() != truth.cols() {
        return Err(invalid(format!(
            "shape mismatch: {}x{} vs {}x{}",
            p.rows(),
            p.cols(),
            truth.rows(),
            truth.cols()
        )));
    }
    if p.rows() == 0 {
        return Err(invalid("accuracy of an empty assignment is undefined"));
    }
    let hits = p.mapping().iter().zip(truth.mapping()).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / p.rows() as f64)
}
