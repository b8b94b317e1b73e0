//! Shared fixtures for the criterion benches.

use uavlos_core::experiments::sample_uniform_pair;
use uavlos_core::scene::generate_scene;
use uavlos_core::{rng, ItuParams, Link, Point3, UrbanScene};

pub fn urban_default_scene() -> UrbanScene {
    generate_scene(ItuParams::urban_default(), 7).expect("default parameters are valid")
}

/// `n` uniform links over the patch with both endpoints at `h` meters.
pub fn uniform_links(scene: &UrbanScene, n: usize, h: f64, seed: u64) -> Vec<Link> {
    let mut g = rng::seeded(seed);
    (0..n)
        .map(|_| {
            let p = sample_uniform_pair(scene.patch_side(), &mut g);
            Link::new(Point3::new(p.a.0, p.a.1, h), Point3::new(p.b.0, p.b.1, h))
        })
        .collect()
}
