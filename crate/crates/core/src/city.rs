//! Synthetic building footprints: non-overlapping axis-aligned rectangles
//! scattered over a region until a target built fraction is reached.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{Polygon, Region};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CitySpec {
    pub region: Region,
    /// Target fraction of the region covered by buildings, in `[0, 0.9)`.
    pub built_fraction: f64,
    /// Side lengths are drawn from `[min_size, max_size]` meters.
    pub min_size: f64,
    pub max_size: f64,
}

impl CitySpec {
    /// 2 km x 2 km with 55.9% of the area built (the dense London study area).
    pub fn london_like() -> Self {
        CitySpec {
            region: Region::square(2000.0).expect("static region"),
            built_fraction: 0.559,
            min_size: 10.0,
            max_size: 60.0,
        }
    }
}

/// Accepted deviation of the achieved built fraction from the target.
pub const BUILT_FRACTION_TOL: f64 = 0.01;

const MAX_ATTEMPTS: usize = 4_000_000;

/// Places rectangles by random sequential adsorption. Candidate sizes shrink
/// toward `min_size` as placements start failing, which lets the packing go
/// well past the jamming density of equal-size squares.
pub fn generate_city<R: Rng + ?Sized>(spec: &CitySpec, rng: &mut R) -> Result<Vec<Polygon>> {
    let CitySpec {
        region,
        built_fraction,
        min_size,
        max_size,
    } = *spec;
    if !(0.0..0.9).contains(&built_fraction) {
        return Err(Error::param(format!(
            "built fraction must be in [0, 0.9), got {built_fraction}"
        )));
    }
    if !(min_size > 0.0 && min_size <= max_size) {
        return Err(Error::param(format!(
            "building size range [{min_size}, {max_size}] is invalid"
        )));
    }
    if max_size > region.width().min(region.height()) {
        return Err(Error::param("buildings larger than the region"));
    }
    let target = built_fraction * region.area();
    // aim for the middle of the tolerance band
    let good_enough = target - 0.25 * BUILT_FRACTION_TOL * region.area();
    let mut grid = OccupancyGrid::new(region, max_size);
    let mut rects: Vec<[f64; 4]> = Vec::new();
    let mut built = 0.0;
    let mut upper = max_size;
    let mut misses = 0usize;

    for _ in 0..MAX_ATTEMPTS {
        if built >= good_enough {
            break;
        }
        let mut w = rng.random_range(min_size..=upper);
        let mut h = rng.random_range(min_size..=upper);
        let remaining = target - built;
        if w * h > remaining {
            let s = (remaining / (w * h)).sqrt();
            w *= s;
            h *= s;
            if w < min_size || h < min_size {
                w = (remaining).sqrt().max(min_size);
                h = w;
            }
        }
        let x0 = region.x_min + rng.random::<f64>() * (region.width() - w);
        let y0 = region.y_min + rng.random::<f64>() * (region.height() - h);
        let cand = [x0, y0, x0 + w, y0 + h];
        if grid.overlaps(&rects, &cand) {
            misses += 1;
            if misses >= 64 {
                upper = (upper * 0.97).max(min_size);
                misses = 0;
            }
            continue;
        }
        misses = 0;
        grid.insert(rects.len(), &cand);
        rects.push(cand);
        built += w * h;
    }

    let achieved = built / region.area();
    if (achieved - built_fraction).abs() > BUILT_FRACTION_TOL {
        return Err(Error::Infeasible(format!(
            "reached built fraction {achieved:.4} of target {built_fraction} with sizes [{min_size}, {max_size}]"
        )));
    }
    rects
        .into_iter()
        .map(|[x0, y0, x1, y1]| Polygon::rect(x0, y0, x1, y1))
        .collect()
}

struct OccupancyGrid {
    region: Region,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl OccupancyGrid {
    fn new(region: Region, cell: f64) -> Self {
        let nx = ((region.width() / cell).ceil() as usize).max(1);
        let ny = ((region.height() / cell).ceil() as usize).max(1);
        OccupancyGrid {
            region,
            cell,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
        }
    }

    fn range(&self, r: &[f64; 4]) -> (usize, usize, usize, usize) {
        let f =
            |v: f64, o: f64, n: usize| (((v - o) / self.cell).floor().max(0.0) as usize).min(n - 1);
        (
            f(r[0], self.region.x_min, self.nx),
            f(r[2], self.region.x_min, self.nx),
            f(r[1], self.region.y_min, self.ny),
            f(r[3], self.region.y_min, self.ny),
        )
    }

    fn overlaps(&self, rects: &[[f64; 4]], c: &[f64; 4]) -> bool {
        let (x0, x1, y0, y1) = self.range(c);
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                for &i in &self.cells[iy * self.nx + ix] {
                    let r = &rects[i as usize];
                    // touching edges count as overlap so footprints stay disjoint
                    if c[0] <= r[2] && r[0] <= c[2] && c[1] <= r[3] && r[1] <= c[3] {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn insert(&mut self, idx: usize, r: &[f64; 4]) {
        let (x0, x1, y0, y1) = self.range(r);
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                self.cells[iy * self.nx + ix].push(idx as u32);
            }
        }
    }
}
