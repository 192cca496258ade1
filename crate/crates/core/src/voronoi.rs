//! Spherical Voronoi cells via convex-hull duality, and the D-measure of
//! sampling uniformity built on their areas.
//!
//! Every face of the convex hull of points on the unit sphere has an empty
//! circumscribed cap; its outward unit normal is the cap centre and hence a
//! Voronoi vertex of the face's three sites. A site's cell is the spherical
//! polygon through the normals of its incident faces, ordered by angle around
//! the site; its area is summed over the triangle fan from the site.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::direction::PointSet;
use crate::error::{Error, Result};

type V3 = Vector3<f64>;

const DUPLICATE_TOL: f64 = 1e-10;
const PLANE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoronoiCell {
    pub site_index: usize,
    /// Steradians.
    pub area: f64,
    /// `1 / area`.
    pub density: f64,
}

#[derive(Clone, Copy, Debug)]
struct Face {
    v: [usize; 3],
    normal: V3,
    offset: f64,
}

impl Face {
    fn new(pts: &[V3], a: usize, b: usize, c: usize) -> Self {
        let n = (pts[b] - pts[a]).cross(&(pts[c] - pts[a]));
        let normal = n / n.norm();
        Face {
            v: [a, b, c],
            normal,
            offset: normal.dot(&pts[a]),
        }
    }

    fn height(&self, p: &V3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Triangular faces of the convex hull, outward oriented.
fn convex_hull(pts: &[V3]) -> Result<Vec<Face>> {
    let n = pts.len();
    // initial simplex from extreme points
    let i0 = 0;
    let i1 = (0..n)
        .max_by(|&a, &b| (pts[a] - pts[i0]).norm().total_cmp(&(pts[b] - pts[i0]).norm()))
        .unwrap();
    let line = (pts[i1] - pts[i0]).normalize();
    let off_line = |k: usize| {
        let d = pts[k] - pts[i0];
        (d - line * line.dot(&d)).norm()
    };
    let i2 = (0..n).max_by(|&a, &b| off_line(a).total_cmp(&off_line(b))).unwrap();
    if off_line(i2) < DUPLICATE_TOL {
        return Err(Error::DegenerateGeometry("all points are collinear".into()));
    }
    let plane = (pts[i1] - pts[i0]).cross(&(pts[i2] - pts[i0])).normalize();
    let off_plane = |k: usize| plane.dot(&(pts[k] - pts[i0])).abs();
    let i3 = (0..n).max_by(|&a, &b| off_plane(a).total_cmp(&off_plane(b))).unwrap();
    if off_plane(i3) < 1e-9 {
        return Err(Error::DegenerateGeometry(
            "all points lie on one circle; the Voronoi diagram is not a proper tessellation".into(),
        ));
    }

    let centroid = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
    let oriented = |a: usize, b: usize, c: usize| {
        let f = Face::new(pts, a, b, c);
        if f.height(&centroid) > 0.0 {
            Face::new(pts, a, c, b)
        } else {
            f
        }
    };

    let mut faces: Vec<Option<Face>> = vec![
        Some(oriented(i0, i1, i2)),
        Some(oriented(i0, i1, i3)),
        Some(oriented(i0, i2, i3)),
        Some(oriented(i1, i2, i3)),
    ];
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        let v = f.unwrap().v;
        for k in 0..3 {
            edges.insert((v[k], v[(k + 1) % 3]), fi);
        }
    }

    for p in 0..n {
        if [i0, i1, i2, i3].contains(&p) {
            continue;
        }
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.filter(|f| f.height(&pts[p]) > PLANE_TOL).map(|_| i))
            .collect();
        if visible.is_empty() {
            return Err(Error::DegenerateGeometry(format!(
                "point {p} is not on the hull (duplicate or interior point)"
            )));
        }
        let is_visible = |fi: usize| visible.binary_search(&fi).is_ok();
        let mut horizon = Vec::new();
        for &fi in &visible {
            let v = faces[fi].unwrap().v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                match edges.get(&(b, a)) {
                    Some(&other) if is_visible(other) => {}
                    _ => horizon.push((a, b)),
                }
            }
        }
        for &fi in &visible {
            let v = faces[fi].unwrap().v;
            for k in 0..3 {
                edges.remove(&(v[k], v[(k + 1) % 3]));
            }
            faces[fi] = None;
        }
        for (a, b) in horizon {
            let f = Face::new(pts, a, b, p);
            let fi = faces.len();
            faces.push(Some(f));
            for (x, y) in [(a, b), (b, p), (p, a)] {
                edges.insert((x, y), fi);
            }
        }
    }
    Ok(faces.into_iter().flatten().collect())
}

/// Solid angle of the spherical triangle `abc` (unit vectors), signed by orientation.
fn triangle_solid_angle(a: &V3, b: &V3, c: &V3) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

fn check_points(pts: &[V3]) -> Result<()> {
    if pts.len() < 4 {
        return Err(Error::DegenerateGeometry(format!(
            "need at least 4 points, got {}",
            pts.len()
        )));
    }
    // duplicate detection on a sorted copy
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if pts[b].x - pts[a].x > DUPLICATE_TOL {
                break;
            }
            if (pts[a] - pts[b]).norm() < DUPLICATE_TOL {
                return Err(Error::DegenerateGeometry(format!(
                    "points {a} and {b} coincide; their cells are undefined"
                )));
            }
        }
    }
    Ok(())
}

/// Axis of the circle through all points, if they lie on one.
fn common_circle_axis(pts: &[V3]) -> Option<V3> {
    let (a, b) = (pts[0], pts[1]);
    let c = pts[2..].iter().max_by(|x, y| {
        let area = |p: &V3| (b - a).cross(&(p - a)).norm();
        area(x).total_cmp(&area(y))
    })?;
    let axis = (b - a).cross(&(c - a));
    if axis.norm() < DUPLICATE_TOL {
        return None;
    }
    let axis = axis.normalize();
    pts.iter().all(|p| axis.dot(&(p - a)).abs() < 1e-9).then_some(axis)
}

/// Cells of sites on one circle: every bisector is a great circle through the
/// circle's axis, so each cell is a lune whose area is twice its dihedral angle.
fn lune_cells(pts: &[V3], axis: &V3) -> Vec<VoronoiCell> {
    let helper = if axis.x.abs() < 0.9 { V3::x() } else { V3::y() };
    let e1 = helper.cross(axis).normalize();
    let e2 = axis.cross(&e1);
    let mut order: Vec<(f64, usize)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (p.dot(&e2).atan2(p.dot(&e1)), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = order.len();
    let gap = |k: usize| (order[(k + 1) % n].0 - order[k].0).rem_euclid(2.0 * PI);
    let mut cells: Vec<VoronoiCell> = (0..n)
        .map(|k| {
            // half of each neighbouring gap, doubled for the lune
            let area = gap((k + n - 1) % n) + gap(k);
            VoronoiCell {
                site_index: order[k].1,
                area,
                density: 1.0 / area,
            }
        })
        .collect();
    cells.sort_by_key(|c| c.site_index);
    cells
}

/// Voronoi cells of a point set on the unit sphere, one per point in input order.
pub fn spherical_voronoi(points: &PointSet) -> Result<Vec<VoronoiCell>> {
    let pts: Vec<V3> = points.cartesian().iter().map(|v| v.normalize()).collect();
    check_points(&pts)?;
    if let Some(axis) = common_circle_axis(&pts) {
        return Ok(lune_cells(&pts, &axis));
    }
    let faces = convex_hull(&pts)?;

    let mut incident: Vec<Vec<V3>> = vec![Vec::new(); pts.len()];
    for f in &faces {
        for &v in &f.v {
            incident[v].push(f.normal);
        }
    }

    let mut cells = Vec::with_capacity(pts.len());
    for (i, site) in pts.iter().enumerate() {
        let verts = &incident[i];
        if verts.len() < 3 {
            return Err(Error::DegenerateGeometry(format!("site {i} has no closed cell")));
        }
        // tangent frame at the site
        let helper = if site.x.abs() < 0.9 { V3::x() } else { V3::y() };
        let e1 = helper.cross(site).normalize();
        let e2 = site.cross(&e1);
        let mut ordered: Vec<(f64, V3)> = verts.iter().map(|v| (v.dot(&e2).atan2(v.dot(&e1)), *v)).collect();
        ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
        let m = ordered.len();
        let area: f64 = (0..m)
            .map(|k| triangle_solid_angle(site, &ordered[k].1, &ordered[(k + 1) % m].1))
            .sum();
        cells.push(VoronoiCell {
            site_index: i,
            area,
            density: 1.0 / area,
        });
    }
    Ok(cells)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DMeasureReport {
    pub nu: f64,
    #[serde(rename = "d")]
    pub d_measure: f64,
    pub mean_density: f64,
    pub q: usize,
}

/// Area-weighted dispersion of cell densities around `Q/4π`, normalized by the
/// mean density: `ν = Σ (a_k/4π)(d_k − d̂)²`, `D = ν·√(2π)/d̂`.
pub fn d_measure_from_cells(cells: &[VoronoiCell]) -> DMeasureReport {
    let q = cells.len();
    let mean = q as f64 / (4.0 * PI);
    let nu: f64 = cells
        .iter()
        .map(|c| c.area / (4.0 * PI) * (c.density - mean).powi(2))
        .sum();
    DMeasureReport {
        nu,
        d_measure: nu * (2.0 * PI).sqrt() / mean,
        mean_density: mean,
        q,
    }
}

pub fn d_measure(points: &PointSet) -> Result<DMeasureReport> {
    Ok(d_measure_from_cells(&spherical_voronoi(points)?))
}
