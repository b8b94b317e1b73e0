//! Exact segment-vs-prism blockage tests.
//!
//! A building blocks a link when the link's horizontal projection meets the
//! closed footprint and the roof is at or above the lowest link height over
//! that overlap. Grazing a rooftop counts as blocked, as does an endpoint
//! inside a prism.

use std::ops::ControlFlow;

use crate::scene::{Building, UrbanScene};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, h: f64) -> Self {
        Self { x, y, h }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub tx: Point3,
    pub rx: Point3,
}

impl Link {
    pub const fn new(tx: Point3, rx: Point3) -> Self {
        Self { tx, rx }
    }

    pub fn reversed(&self) -> Self {
        Self { tx: self.rx, rx: self.tx }
    }

    pub fn horizontal_length(&self) -> f64 {
        (self.rx.x - self.tx.x).hypot(self.rx.y - self.tx.y)
    }

    pub fn height_at(&self, t: f64) -> f64 {
        self.tx.h + (self.rx.h - self.tx.h) * t
    }

    pub fn point_at(&self, t: f64) -> Point3 {
        Point3 {
            x: self.tx.x + (self.rx.x - self.tx.x) * t,
            y: self.tx.y + (self.rx.y - self.tx.y) * t,
            h: self.height_at(t),
        }
    }
}

/// Parameter range `[t_in, t_out] ⊆ [0, 1]` where the projection is inside a footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t_in: f64,
    pub t_out: f64,
}

fn clip_axis(start: f64, delta: f64, lo: f64, hi: f64, t0: &mut f64, t1: &mut f64) -> bool {
    if delta == 0.0 {
        return start >= lo && start <= hi;
    }
    let (mut a, mut b) = ((lo - start) / delta, (hi - start) / delta);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    *t0 = t0.max(a);
    *t1 = t1.min(b);
    *t0 <= *t1
}

pub fn footprint_crossing(link: &Link, building: &Building) -> Option<Crossing> {
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    let hs = building.half_side;
    let inside = clip_axis(
        link.tx.x,
        link.rx.x - link.tx.x,
        building.center_x - hs,
        building.center_x + hs,
        &mut t0,
        &mut t1,
    ) && clip_axis(
        link.tx.y,
        link.rx.y - link.tx.y,
        building.center_y - hs,
        building.center_y + hs,
        &mut t0,
        &mut t1,
    );
    inside.then_some(Crossing { t_in: t0, t_out: t1 })
}

pub fn is_blocked_by(link: &Link, building: &Building) -> bool {
    footprint_crossing(link, building)
        .is_some_and(|c| building.height >= link.height_at(c.t_in).min(link.height_at(c.t_out)))
}

pub fn is_los(scene: &UrbanScene, link: &Link) -> bool {
    let buildings = scene.buildings();
    let walk = scene
        .index()
        .walk_segment(link.tx.x, link.tx.y, link.rx.x, link.rx.y, |id| {
            if is_blocked_by(link, &buildings[id as usize]) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
    walk.is_continue()
}

/// Reference scan over every building, bypassing the bin index.
pub fn is_los_exhaustive(scene: &UrbanScene, link: &Link) -> bool {
    !scene.buildings().iter().any(|b| is_blocked_by(link, b))
}

/// Buildings whose footprint the link's projection meets, regardless of height.
pub fn count_crossed_buildings(scene: &UrbanScene, link: &Link) -> usize {
    let buildings = scene.buildings();
    let mut hits: Vec<u32> = Vec::new();
    let _ = scene
        .index()
        .walk_segment(link.tx.x, link.tx.y, link.rx.x, link.rx.y, |id| {
            if footprint_crossing(link, &buildings[id as usize]).is_some() {
                hits.push(id);
            }
            ControlFlow::Continue(())
        });
    hits.sort_unstable();
    hits.dedup();
    hits.len()
}
