//! The visibility-preserving lens: a fixed number of points, a radius that
//! follows local density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbanlens::geo::{GeoPoint, ProjectedPoint, Projection};
use urbanlens::spatial_index::{GeoIndex, QuadTreeConfig};

fn main() {
    let origin = GeoPoint { lat: -22.9068, lon: -43.1729 };
    let projection = Projection::new(origin);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut points = Vec::new();
    // a dense 200 m cluster at the center and a sparse 10 km field
    for _ in 0..2_000 {
        points.push(ProjectedPoint::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0)));
    }
    for _ in 0..3_000 {
        points.push(ProjectedPoint::new(rng.gen_range(-5_000.0..5_000.0), rng.gen_range(-5_000.0..5_000.0)));
    }
    let index = GeoIndex::build(
        points.iter().enumerate().map(|(i, p)| (projection.unproject(*p), i)),
        origin,
        QuadTreeConfig::default(),
    );
    for (label, cursor) in [("cluster", origin), ("sparse field", projection.unproject(ProjectedPoint::new(3_000.0, -3_000.0)))] {
        let lens = index.lens(cursor, 100);
        println!("{label:>12}: {} members within {:.1} m", lens.members.len(), lens.radius);
    }
}
