//! Planar geometry: points, simple polygons, the rectangular study region,
//! Poisson point sampling, and the predicates used for rooftop
//! classification and line-of-sight tests.
//!
//! Boundary convention: a point on a polygon edge is inside, and a segment
//! that only grazes a vertex intersects the polygon. Near-degenerate
//! configurations are decided with a distance tolerance of [`GEOM_EPS`].

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// Distance tolerance (meters) for orientation and on-boundary tests.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn dist(self, other: Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn sub(self, o: Point2D) -> Point2D {
        Point2D::new(self.x - o.x, self.y - o.y)
    }

    fn cross(self, o: Point2D) -> f64 {
        self.x * o.y - self.y * o.x
    }

    fn dot(self, o: Point2D) -> f64 {
        self.x * o.x + self.y * o.y
    }
}

/// Signed side of `p` relative to the directed line `a -> b`: +1 left, -1
/// right, 0 within [`GEOM_EPS`] of the line.
fn orient(a: Point2D, b: Point2D, p: Point2D) -> i8 {
    let ab = b.sub(a);
    let len = ab.dot(ab).sqrt();
    let cross = ab.cross(p.sub(a));
    if len == 0.0 {
        return 0;
    }
    let d = cross / len;
    if d > GEOM_EPS {
        1
    } else if d < -GEOM_EPS {
        -1
    } else {
        0
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
fn dist_to_segment(p: Point2D, a: Point2D, b: Point2D) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(Point2D::new(a.x + t * ab.x, a.y + t * ab.y))
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point2D,
    pub max: Point2D,
}

impl BBox {
    fn of(points: &[Point2D]) -> BBox {
        let mut min = Point2D::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2D::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        BBox { min, max }
    }

    fn contains(&self, p: Point2D) -> bool {
        p.x >= self.min.x - GEOM_EPS
            && p.x <= self.max.x + GEOM_EPS
            && p.y >= self.min.y - GEOM_EPS
            && p.y <= self.max.y + GEOM_EPS
    }

    fn overlaps_segment_box(&self, a: Point2D, b: Point2D) -> bool {
        a.x.max(b.x) >= self.min.x - GEOM_EPS
            && a.x.min(b.x) <= self.max.x + GEOM_EPS
            && a.y.max(b.y) >= self.min.y - GEOM_EPS
            && a.y.min(b.y) <= self.max.y + GEOM_EPS
    }
}

/// A simple polygon, closed implicitly from the last vertex to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2D>,
    bbox: BBox,
    area: f64,
}

impl Polygon {
    /// Validates and builds a polygon. Rejects fewer than three vertices,
    /// non-finite coordinates, zero area and self-intersection.
    pub fn new(vertices: Vec<Point2D>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::param(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::param("polygon has non-finite coordinates"));
        }
        let area = shoelace(&vertices).abs();
        if area <= GEOM_EPS {
            return Err(Error::param("polygon has zero area"));
        }
        if self_intersects(&vertices) {
            return Err(Error::param("polygon is self-intersecting"));
        }
        let bbox = BBox::of(&vertices);
        Ok(Polygon {
            vertices,
            bbox,
            area,
        })
    }

    /// Axis-aligned rectangle with corners `(x0, y0)` and `(x1, y1)`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Polygon::new(vec![
            Point2D::new(x0, y0),
            Point2D::new(x1, y0),
            Point2D::new(x1, y1),
            Point2D::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[Point2D] {
        &self.vertices
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    fn edges(&self) -> impl Iterator<Item = (Point2D, Point2D)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

fn shoelace(v: &[Point2D]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() / 2.0
}

fn self_intersects(v: &[Point2D]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (v[j], v[(j + 1) % n]);
            if closed_segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn on_closed_segment(p: Point2D, a: Point2D, b: Point2D) -> bool {
    dist_to_segment(p, a, b) <= GEOM_EPS
}

fn closed_segments_intersect(a: Point2D, b: Point2D, c: Point2D, d: Point2D) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    on_closed_segment(c, a, b)
        || on_closed_segment(d, a, b)
        || on_closed_segment(a, c, d)
        || on_closed_segment(b, c, d)
}

/// Rectangular study region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::param(format!(
                "region needs x_min < x_max and y_min < y_max, got [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Region {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// `side` x `side` square anchored at the origin.
    pub fn square(side: f64) -> Result<Self> {
        Region::new(0.0, side, 0.0, side)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point2D) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2D {
        let x = self.x_min + rng.random::<f64>() * self.width();
        let y = self.y_min + rng.random::<f64>() * self.height();
        Point2D::new(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    pub id: u32,
    pub pos: Point2D,
    pub rooftop: bool,
}

/// Homogeneous Poisson point process of intensity `density` (per m²) on `region`.
pub fn sample_ppp<R: Rng + ?Sized>(
    region: &Region,
    density: f64,
    rng: &mut R,
) -> Result<Vec<Point2D>> {
    if !(density >= 0.0) || !density.is_finite() {
        return Err(Error::param(format!(
            "PPP density must be >= 0, got {density}"
        )));
    }
    let mean = density * region.area();
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::param(format!("PPP mean {mean}: {e}")))?
        .sample(rng) as usize;
    Ok((0..count).map(|_| region.sample_uniform(rng)).collect())
}

/// True iff `p` lies inside `poly` or on its boundary.
pub fn point_in_polygon(p: Point2D, poly: &Polygon) -> bool {
    if !poly.bbox.contains(p) {
        return false;
    }
    let mut inside = false;
    for (a, b) in poly.edges() {
        if on_closed_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// True iff `p` is strictly inside `poly` (not on its boundary).
fn strictly_inside(p: Point2D, poly: &Polygon) -> bool {
    point_in_polygon(p, poly) && !poly.edges().any(|(a, b)| on_closed_segment(p, a, b))
}

/// True iff the open segment `(a, b)` meets the interior or boundary of `poly`.
///
/// Endpoints themselves are excluded, so a segment that merely starts on an
/// edge and leaves outward does not intersect.
pub fn segment_intersects_polygon(a: Point2D, b: Point2D, poly: &Polygon) -> bool {
    if !poly.bbox.overlaps_segment_box(a, b) {
        return false;
    }
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    // parameter of p's projection onto ab, strictly inside (0, 1)
    let strictly_between = |p: Point2D| {
        let t = p.sub(a).dot(ab) / len2;
        let tol = GEOM_EPS / len2.sqrt();
        t > tol && t < 1.0 - tol
    };
    for (p, q) in poly.edges() {
        let o1 = orient(a, b, p);
        let o2 = orient(a, b, q);
        let o3 = orient(p, q, a);
        let o4 = orient(p, q, b);
        if o1 * o2 < 0 && o3 * o4 < 0 {
            return true;
        }
        // a polygon vertex on the open segment
        if (o1 == 0 && strictly_between(p)) || (o2 == 0 && strictly_between(q)) {
            return true;
        }
        // segment runs along this edge: any overlap of the open segment with it
        if o1 == 0 && o2 == 0 {
            let tp = p.sub(a).dot(ab) / len2;
            let tq = q.sub(a).dot(ab) / len2;
            let (lo, hi) = if tp < tq { (tp, tq) } else { (tq, tp) };
            if lo < 1.0 && hi > 0.0 {
                return true;
            }
        }
        // an endpoint on this edge while the other end crosses to the far side
        // is caught by the midpoint test below
    }
    // No boundary contact inside the open segment: it is entirely inside or
    // entirely outside, so one interior sample decides.
    let mid = Point2D::new(a.x + 0.5 * ab.x, a.y + 0.5 * ab.y);
    strictly_inside(mid, poly)
}

/// Rooftop iff `pos` lies inside (or on) any building.
pub fn classify_bs(pos: Point2D, buildings: &[Polygon]) -> bool {
    buildings.iter().any(|b| point_in_polygon(pos, b))
}

/// Buildings plus a uniform-grid index for fast point and segment queries.
///
/// Results are identical to the linear scans [`classify_bs`] and
/// `segment_intersects_polygon` over every building; the grid only prunes
/// candidates.
#[derive(Debug, Clone)]
pub struct BuildingSet {
    polygons: Vec<Polygon>,
    origin: Point2D,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    built_area: f64,
}

impl BuildingSet {
    pub fn new(polygons: Vec<Polygon>) -> Self {
        let built_area = polygons.iter().map(Polygon::area).sum();
        if polygons.is_empty() {
            return BuildingSet {
                polygons,
                origin: Point2D::default(),
                cell: 1.0,
                nx: 0,
                ny: 0,
                cells: Vec::new(),
                built_area,
            };
        }
        let all = BBox::of(
            &polygons
                .iter()
                .flat_map(|p| [p.bbox.min, p.bbox.max])
                .collect::<Vec<_>>(),
        );
        let w = (all.max.x - all.min.x).max(1.0);
        let h = (all.max.y - all.min.y).max(1.0);
        // about two buildings per cell on average, never finer than 1 m
        let cell = ((w * h * 2.0) / polygons.len() as f64).sqrt().max(1.0);
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut set = BuildingSet {
            polygons: Vec::new(),
            origin: all.min,
            cell,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
            built_area,
        };
        for (idx, poly) in polygons.iter().enumerate() {
            let (ix0, iy0) = set.cell_of(poly.bbox.min);
            let (ix1, iy1) = set.cell_of(poly.bbox.max);
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    set.cells[iy * nx + ix].push(idx as u32);
                }
            }
        }
        set.polygons = polygons;
        set
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    /// Sum of footprint areas (the union area when footprints do not overlap).
    pub fn built_area(&self) -> f64 {
        self.built_area
    }

    fn cell_coord(&self, v: f64, origin: f64, n: usize) -> usize {
        let i = ((v - origin) / self.cell).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(n - 1)
        }
    }

    fn cell_of(&self, p: Point2D) -> (usize, usize) {
        (
            self.cell_coord(p.x, self.origin.x, self.nx),
            self.cell_coord(p.y, self.origin.y, self.ny),
        )
    }

    fn candidates_at(&self, p: Point2D) -> &[u32] {
        let (ix, iy) = self.cell_of(p);
        &self.cells[iy * self.nx + ix]
    }

    /// True iff `p` is inside (or on) any building.
    pub fn contains(&self, p: Point2D) -> bool {
        if self.polygons.is_empty() {
            return false;
        }
        // points within GEOM_EPS of a cell edge may belong to a neighbour cell
        let probes = [
            p,
            Point2D::new(p.x - GEOM_EPS, p.y - GEOM_EPS),
            Point2D::new(p.x + GEOM_EPS, p.y + GEOM_EPS),
            Point2D::new(p.x - GEOM_EPS, p.y + GEOM_EPS),
            Point2D::new(p.x + GEOM_EPS, p.y - GEOM_EPS),
        ];
        probes.iter().any(|&q| {
            self.candidates_at(q)
                .iter()
                .any(|&i| point_in_polygon(p, &self.polygons[i as usize]))
        })
    }

    /// True iff the open segment `(a, b)` meets any building.
    ///
    /// Cells are visited row by row starting from `a`'s end, so blockers near
    /// `a` are found first.
    pub fn blocks(&self, a: Point2D, b: Point2D) -> bool {
        if self.polygons.is_empty() {
            return false;
        }
        let pad = GEOM_EPS * 2.0;
        let iy0 = self.cell_coord(a.y.min(b.y) - pad, self.origin.y, self.ny);
        let iy1 = self.cell_coord(a.y.max(b.y) + pad, self.origin.y, self.ny);
        let rows: Box<dyn Iterator<Item = usize>> = if a.y <= b.y {
            Box::new(iy0..=iy1)
        } else {
            Box::new((iy0..=iy1).rev())
        };
        for iy in rows {
            let y0 = self.origin.y + iy as f64 * self.cell - pad;
            let y1 = y0 + self.cell + 2.0 * pad;
            let Some((xa, xb)) = clip_x_range(a, b, y0, y1) else {
                continue;
            };
            let ix0 = self.cell_coord(xa.min(xb) - pad, self.origin.x, self.nx);
            let ix1 = self.cell_coord(xa.max(xb) + pad, self.origin.x, self.nx);
            let cols: Box<dyn Iterator<Item = usize>> = if xa <= xb {
                Box::new(ix0..=ix1)
            } else {
                Box::new((ix0..=ix1).rev())
            };
            for ix in cols {
                for &i in &self.cells[iy * self.nx + ix] {
                    if segment_intersects_polygon(a, b, &self.polygons[i as usize]) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// x-extent of segment `ab` within the horizontal band `y0 <= y <= y1`,
/// ordered from `a`'s side. `None` if the segment misses the band.
fn clip_x_range(a: Point2D, b: Point2D, y0: f64, y1: f64) -> Option<(f64, f64)> {
    let dy = b.y - a.y;
    if dy == 0.0 {
        return if a.y >= y0 && a.y <= y1 {
            Some((a.x, b.x))
        } else {
            None
        };
    }
    let t0 = (y0 - a.y) / dy;
    let t1 = (y1 - a.y) / dy;
    let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    if lo > hi {
        return None;
    }
    let dx = b.x - a.x;
    Some((a.x + lo * dx, a.x + hi * dx))
}
