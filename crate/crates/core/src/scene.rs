//! Synthetic built-up patches described by the ITU (α, β, γ) triple.
//!
//! Buildings sit on a regular square lattice. The lattice pitch is
//! `A / ceil(A·√β)` so that an integer number of cells tiles the patch, and
//! `round(β·A²)` of those cells receive a square footprint of area α/β.
//! The few surplus cells are left vacant at evenly spread raster positions.
//! Heights are i.i.d. Rayleigh(γ).

use rand::Rng;

use crate::error::{Error, Result};
use crate::index::BinIndex;
use crate::rng;

pub const M2_PER_KM2: f64 = 1.0e6;

/// Environment descriptor: built-area ratio, density, height scale, street correction, patch side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItuParams {
    pub alpha: f64,
    /// Buildings per km².
    pub beta_per_km2: f64,
    /// Rayleigh scale of building heights, meters.
    pub gamma_m: f64,
    /// Additive correction to the same-street probability.
    pub d_correction: f64,
    /// Side of the square patch, meters.
    pub patch_side_m: f64,
}

impl ItuParams {
    pub const DEFAULT_D_CORRECTION: f64 = 0.05;
    pub const DEFAULT_PATCH_SIDE_M: f64 = 775.0;

    pub fn new(alpha: f64, beta_per_km2: f64, gamma_m: f64, d_correction: f64, patch_side_m: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta_per_km2,
            gamma_m,
            d_correction,
            patch_side_m,
        };
        p.validate()?;
        Ok(p)
    }

    /// α = 0.37, β = 188 /km², γ = 13.3 m on a 775 m patch with D = 0.05.
    pub fn urban_default() -> Self {
        Self {
            alpha: 0.37,
            beta_per_km2: 188.0,
            gamma_m: 13.3,
            d_correction: Self::DEFAULT_D_CORRECTION,
            patch_side_m: Self::DEFAULT_PATCH_SIDE_M,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        if !(finite(self.alpha) && self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("{} not in (0, 1)", self.alpha)));
        }
        if !(finite(self.beta_per_km2) && self.beta_per_km2 > 0.0) {
            return Err(Error::param("beta_per_km2", format!("{} must be > 0", self.beta_per_km2)));
        }
        if !(finite(self.gamma_m) && self.gamma_m > 0.0) {
            return Err(Error::param("gamma_m", format!("{} must be > 0", self.gamma_m)));
        }
        if !(finite(self.d_correction) && (0.0..1.0).contains(&self.d_correction)) {
            return Err(Error::param("d_correction", format!("{} not in [0, 1)", self.d_correction)));
        }
        if !(finite(self.patch_side_m) && self.patch_side_m > 0.0) {
            return Err(Error::param("patch_side_m", format!("{} must be > 0", self.patch_side_m)));
        }
        Ok(())
    }

    pub fn area_km2(&self) -> f64 {
        self.patch_side_m * self.patch_side_m / M2_PER_KM2
    }

    /// Expected building count β·S.
    pub fn expected_count(&self) -> f64 {
        self.beta_per_km2 * self.area_km2()
    }

    /// Lattice pitch 1/√β, meters.
    pub fn nominal_pitch_m(&self) -> f64 {
        1000.0 / self.beta_per_km2.sqrt()
    }

    /// Footprint side √(α/β), meters.
    pub fn footprint_side_m(&self) -> f64 {
        1000.0 * (self.alpha / self.beta_per_km2).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Building {
    pub center_x: f64,
    pub center_y: f64,
    pub half_side: f64,
    pub height: f64,
}

impl Building {
    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        (x - self.center_x).abs() <= self.half_side && (y - self.center_y).abs() <= self.half_side
    }

    pub fn footprint_area(&self) -> f64 {
        4.0 * self.half_side * self.half_side
    }
}

/// An immutable patch of buildings. Cheap to share across threads.
#[derive(Debug, Clone)]
pub struct UrbanScene {
    params: ItuParams,
    seed: u64,
    buildings: Vec<Building>,
    index: BinIndex,
}

impl UrbanScene {
    /// Wraps an explicit building list, checking the footprint invariants.
    pub fn from_buildings(params: ItuParams, seed: u64, buildings: Vec<Building>) -> Result<Self> {
        params.validate()?;
        let side = params.patch_side_m;
        let slack = 1e-6 * side;
        for (i, b) in buildings.iter().enumerate() {
            let ok = b.half_side.is_finite()
                && b.half_side > 0.0
                && b.height.is_finite()
                && b.height >= 0.0
                && b.center_x - b.half_side >= -slack
                && b.center_y - b.half_side >= -slack
                && b.center_x + b.half_side <= side + slack
                && b.center_y + b.half_side <= side + slack;
            if !ok {
                return Err(Error::InvalidScene(format!("building {i} ({b:?}) is degenerate or leaves the patch")));
            }
        }
        let index = BinIndex::build(side, &buildings);
        for (i, b) in buildings.iter().enumerate() {
            for j in index.candidates_in_rect(
                b.center_x - b.half_side,
                b.center_y - b.half_side,
                b.center_x + b.half_side,
                b.center_y + b.half_side,
            ) {
                let j = j as usize;
                if j <= i {
                    continue;
                }
                let o = &buildings[j];
                let gap = b.half_side + o.half_side - slack;
                if (b.center_x - o.center_x).abs() < gap && (b.center_y - o.center_y).abs() < gap {
                    return Err(Error::InvalidScene(format!("buildings {i} and {j} overlap")));
                }
            }
        }
        Ok(Self {
            params,
            seed,
            buildings,
            index,
        })
    }

    pub fn empty(params: ItuParams) -> Self {
        Self::from_buildings(params, 0, Vec::new()).expect("empty scene is valid")
    }

    pub fn params(&self) -> &ItuParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn patch_side(&self) -> f64 {
        self.params.patch_side_m
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    pub(crate) fn index(&self) -> &BinIndex {
        &self.index
    }

    pub fn max_height(&self) -> f64 {
        self.buildings.iter().map(|b| b.height).fold(0.0, f64::max)
    }

    /// Built area over patch area.
    pub fn coverage(&self) -> f64 {
        let built: f64 = self.buildings.iter().map(Building::footprint_area).sum();
        built / (self.patch_side() * self.patch_side())
    }

    /// Index of a building whose closed footprint contains `(x, y)`.
    pub fn footprint_at(&self, x: f64, y: f64) -> Option<usize> {
        self.index
            .candidates_in_rect(x, y, x, y)
            .find(|&i| self.buildings[i as usize].contains_xy(x, y))
            .map(|i| i as usize)
    }
}

/// Inverse Rayleigh CDF: `γ·√(−2·ln(1−u))`.
pub fn rayleigh_height(gamma: f64, u: f64) -> f64 {
    gamma * (-2.0 * (-u).ln_1p()).sqrt()
}

/// Lattice geometry used by [`generate_scene`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout {
    pub cells_per_side: usize,
    pub pitch_m: f64,
    pub footprint_side_m: f64,
    pub building_count: usize,
}

impl Layout {
    pub fn for_params(params: &ItuParams) -> Result<Self> {
        params.validate()?;
        let expected = params.expected_count();
        if expected < 1.0 {
            return Err(Error::PatchTooSmall {
                area_km2: params.area_km2(),
                beta_per_km2: params.beta_per_km2,
            });
        }
        let cells_per_side = (params.patch_side_m / params.nominal_pitch_m() - 1e-9).ceil().max(1.0) as usize;
        let pitch_m = params.patch_side_m / cells_per_side as f64;
        let footprint_side_m = params.footprint_side_m();
        if footprint_side_m >= pitch_m {
            return Err(Error::FootprintTooLarge {
                side_m: footprint_side_m,
                pitch_m,
            });
        }
        let building_count = (expected.round() as usize).min(cells_per_side * cells_per_side);
        Ok(Self {
            cells_per_side,
            pitch_m,
            footprint_side_m,
            building_count,
        })
    }

    /// Raster indices (row-major from the origin corner) of occupied cells.
    pub fn occupied_cells(&self) -> Vec<usize> {
        let total = self.cells_per_side * self.cells_per_side;
        let vacant = total - self.building_count;
        let mut is_vacant = vec![false; total];
        for k in 0..vacant {
            let idx = ((k as f64 + 0.5) * total as f64 / vacant as f64) as usize;
            is_vacant[idx.min(total - 1)] = true;
        }
        (0..total).filter(|&c| !is_vacant[c]).collect()
    }
}

pub fn generate_scene(params: ItuParams, seed: u64) -> Result<UrbanScene> {
    let layout = Layout::for_params(&params)?;
    let mut rng = rng::seeded(seed);
    let half = 0.5 * layout.footprint_side_m;
    let n = layout.cells_per_side;
    let buildings = layout
        .occupied_cells()
        .into_iter()
        .map(|c| {
            let u: f64 = rng.random();
            Building {
                center_x: ((c % n) as f64 + 0.5) * layout.pitch_m,
                center_y: ((c / n) as f64 + 0.5) * layout.pitch_m,
                half_side: half,
                height: rayleigh_height(params.gamma_m, u),
            }
        })
        .collect();
    UrbanScene::from_buildings(params, seed, buildings)
}
