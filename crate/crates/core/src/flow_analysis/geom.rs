//! Convex hulls and polygon measures in the image plane.

use crate::error::{Error, Result};

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by Andrew's monotone chain, returned counter-clockwise.
/// Collinear input (hull with fewer than 3 vertices) is an error.
pub fn convex_hull(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    if points.len() < 3 {
        return Err(Error::DegenerateHull(format!("{} points, need at least 3", points.len())));
    }
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup_by(|a, b| a == b);

    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(Error::DegenerateHull("input points are collinear".into()));
    }
    Ok(lower)
}

/// Shoelace area of a simple polygon; positive for counter-clockwise.
pub fn polygon_area(hull: &[[f64; 2]]) -> f64 {
    let n = hull.len();
    let mut acc = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        acc += hull[i][0] * hull[j][1] - hull[j][0] * hull[i][1];
    }
    0.5 * acc
}

/// Area-weighted polygon centroid.
pub fn polygon_centroid(hull: &[[f64; 2]]) -> [f64; 2] {
    let n = hull.len();
    let a = polygon_area(hull);
    if a.abs() < 1e-300 {
        // Fall back to the vertex mean for zero-area polygons.
        let mut c = [0.0, 0.0];
        for p in hull {
            c[0] += p[0];
            c[1] += p[1];
        }
        return [c[0] / n as f64, c[1] / n as f64];
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        let w = hull[i][0] * hull[j][1] - hull[j][0] * hull[i][1];
        cx += (hull[i][0] + hull[j][0]) * w;
        cy += (hull[i][1] + hull[j][1]) * w;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

/// Winding-free point-in-convex-polygon test for CCW hulls.
pub fn inside_convex(hull: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = hull.len();
    (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= -1e-9)
}
