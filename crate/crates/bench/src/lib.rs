//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use stochcell::city::{generate_city, CitySpec};
use stochcell::rng::substream;
use stochcell::{BuildingSet, Point2D};

/// The London-like synthetic city used across benchmarks.
pub fn london_city(seed: u64) -> Arc<BuildingSet> {
    let polys =
        generate_city(&CitySpec::london_like(), &mut substream(seed, 0)).expect("feasible city");
    Arc::new(BuildingSet::new(polys))
}

/// `n` deterministic pseudo-random points over the 2 km square (xorshift).
pub fn points(n: usize) -> Vec<Point2D> {
    let mut s = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 * 2000.0
    };
    (0..n).map(|_| Point2D::new(next(), next())).collect()
}
