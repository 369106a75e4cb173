//! Simulation of the ring-shaped pair source: apparatus configuration,
//! sector patchwork synthesis, mirror-displacement phase control, coincidence
//! counting, and Ou-Mandel interference.

mod config;
pub mod counting;
pub mod geometry;
pub mod interference;
pub mod patchwork;

pub use config::{iris_fraction, ring_diameter, sector_area, SourceConfig};
pub use counting::{
    detected_pair_rate, expected_coincidences, linear_projector, setting_rates, simulate_coincidences, SettingRates,
};
pub use geometry::{displacement_for_phase, displacement_visibility, phase_from_displacement, PhaseGeometry};
pub use interference::{dip_fwhm, ou_mandel_scan, simulate_ou_mandel_scan};
pub use patchwork::{
    identity_recipe, mems_partition, synthesize, werner_partition, Sector, SectorPartition, Treatment,
};
