//! Delaunay edge extraction for small point sets.
//!
//! An edge `(i, j)` belongs to the Delaunay triangulation iff some circle
//! through both endpoints has no other point strictly inside it. Circles
//! through `i` and `j` are parameterized by their center's offset `t` along
//! the perpendicular bisector; every other point bounds `t` from one side,
//! so each pair is decided in linear time.
//!
//! Pairs whose admissible interval collapses to a single `t` come from
//! cocircular groups. Those are added greedily in lexicographic order while
//! they cross nothing already accepted, which fans each cocircular polygon
//! out of its lowest-index vertex.

use alloc::vec::Vec;

use crate::graph::Point;

const REL_TOL: f64 = 1e-9;

enum EdgeClass {
    Strict,
    Degenerate,
    Absent,
}

/// Edges `(i, j)` with `i < j`, sorted.
pub fn triangulation_edges(points: &[Point]) -> Vec<(usize, usize)> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }

    // coincident points share the edges of their first occurrence
    let mut rep: Vec<usize> = (0..n).collect();
    for i in 0..n {
        if let Some(first) = (0..i).find(|&k| points[k] == points[i]) {
            rep[i] = rep[first];
        }
    }
    let unique: Vec<usize> = (0..n).filter(|&i| rep[i] == i).collect();
    let scaled = normalized(points);

    let mut edges = if unique.len() < 3 || all_collinear(&scaled, &unique) {
        chain_edges(&scaled, &unique)
    } else {
        general_edges(&scaled, &unique)
    };

    let base = edges.clone();
    for d in (0..n).filter(|&i| rep[i] != i) {
        let r = rep[d];
        edges.push(ordered(r, d));
        for &(a, b) in &base {
            if a == r {
                edges.push(ordered(d, b));
            } else if b == r {
                edges.push(ordered(d, a));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Maps the points into the unit box so tolerances are scale-free.
fn normalized(points: &[Point]) -> Vec<Point> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scale = if extent > 0.0 { 1.0 / extent } else { 1.0 };
    points
        .iter()
        .map(|p| [(p[0] - lo[0]) * scale, (p[1] - lo[1]) * scale])
        .collect()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn all_collinear(points: &[Point], idx: &[usize]) -> bool {
    // farthest pair from the first point fixes the line
    let o = points[idx[0]];
    let far = idx
        .iter()
        .copied()
        .max_by(|&a, &b| dist2(o, points[a]).total_cmp(&dist2(o, points[b])))
        .unwrap_or(idx[0]);
    let a = points[far];
    idx.iter().all(|&k| cross(o, a, points[k]).abs() <= REL_TOL)
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])
}

/// Consecutive points along the axis with the larger spread, index as tie-break.
fn chain_edges(points: &[Point], idx: &[usize]) -> Vec<(usize, usize)> {
    let spread = |axis: usize| {
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| {
            (lo.min(points[k][axis]), hi.max(points[k][axis]))
        });
        hi - lo
    };
    let axis = if spread(1) > spread(0) { 1 } else { 0 };
    let mut order = idx.to_vec();
    order.sort_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
    order.windows(2).map(|w| ordered(w[0], w[1])).collect()
}

fn classify(points: &[Point], idx: &[usize], i: usize, j: usize) -> EdgeClass {
    let (pi, pj) = (points[i], points[j]);
    let mid = [(pi[0] + pj[0]) * 0.5, (pi[1] + pj[1]) * 0.5];
    let normal = [-(pj[1] - pi[1]), pj[0] - pi[0]];
    let r2 = dist2(mid, pi);

    // admissible center offsets: lower <= t <= upper
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for &k in idx {
        if k == i || k == j {
            continue;
        }
        let pk = points[k];
        let a = dist2(mid, pk) - r2;
        let side = normal[0] * (pk[0] - pi[0]) + normal[1] * (pk[1] - pi[1]);
        if side.abs() <= REL_TOL * dist2(pi, pj) {
            if a < 0.0 {
                // on the segment between the endpoints
                return EdgeClass::Absent;
            }
            continue;
        }
        let bound = a / (2.0 * side);
        if side > 0.0 {
            upper = upper.min(bound);
        } else {
            lower = lower.max(bound);
        }
    }
    let slack = REL_TOL * (1.0 + lower.abs().min(1e12) + upper.abs().min(1e12));
    if upper - lower > slack {
        EdgeClass::Strict
    } else if upper - lower >= -slack {
        EdgeClass::Degenerate
    } else {
        EdgeClass::Absent
    }
}

fn segments_cross(points: &[Point], e: (usize, usize), f: (usize, usize)) -> bool {
    if e.0 == f.0 || e.0 == f.1 || e.1 == f.0 || e.1 == f.1 {
        return false;
    }
    let (a, b, c, d) = (points[e.0], points[e.1], points[f.0], points[f.1]);
    let d1 = cross(a, b, c);
    let d2 = cross(a, b, d);
    let d3 = cross(c, d, a);
    let d4 = cross(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn general_edges(points: &[Point], idx: &[usize]) -> Vec<(usize, usize)> {
    let mut accepted = Vec::new();
    let mut degenerate = Vec::new();
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            match classify(points, idx, i, j) {
                EdgeClass::Strict => accepted.push((i, j)),
                EdgeClass::Degenerate => degenerate.push((i, j)),
                EdgeClass::Absent => {}
            }
        }
    }
    for e in degenerate {
        if !accepted.iter().any(|&f| segments_cross(points, e, f)) {
            accepted.push(e);
        }
    }
    accepted
}
