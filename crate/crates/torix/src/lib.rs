//! Counting rational points of bounded height on smooth projective split
//! toric varieties, and the predicted leading constant they converge to.
//!
//! The library has two independent halves that the `compare` pipeline plays
//! against each other:
//!
//! * an exact enumerator that lists or counts rational points whose
//!   multi-height vector falls in a moving window, by a pruned search over
//!   integral points of the universal torsor; and
//! * a prediction built from the fan alone: an Euler product of local
//!   densities, an archimedean density, and the volume of the window in
//!   height space.
//!
//! Everything combinatorial or geometric (fans, lattice bases, polyhedra) is
//! computed in exact integer/rational arithmetic; floating point enters only
//! for logarithms, Monte Carlo volumes, and final reports.

pub mod error;
pub mod fan;
pub mod linalg;
pub mod ratgeom;
pub mod mobius;
pub mod picard;
pub mod region;
pub mod constant;
pub mod scalar;
pub mod sections;
pub mod torsor;

pub use error::{Error, Result};
pub use fan::{
    all_cones, builtin_fan, count_points_mod_p, fan_hash, min_collection_size, parse_fan,
    primitive_collections, require_valid, validate_fan, walls, BuiltinFan, Fan, RaySet,
    ValidationReport, BUILTIN_NAMES,
};
pub use constant::{
    euler_product, nu_region, nu_region_auto, predict, real_density, torsor_region_volume,
    DensityReport, Estimate, EulerProduct, NuMethod, PredictConfig,
};
pub use mobius::{local_density, mobius_local, mobius_table, mobius_value, MobiusLocalTable};
pub use picard::{
    ample_basis, compute_picard, is_ample, is_nef, validate_direction, AmpleBasis,
    GrowthDirection, PicardData,
};
pub use ratgeom::{rat, rat_frac, rat_to_f64, Rat};
pub use region::{
    box_region, compile_region, default_unit_box, parse_region, BoundSpec, CompiledRegion,
    Constraint, GrowthSpec, Region,
};
pub use scalar::Real;
pub use sections::{build_section_basis, SectionBasis};
pub use torsor::{
    coordinate_bounds, count_sublattice, embed, enumerate_points, is_integral_torsor_point,
    is_torsor_point_via_sections, multi_height, multi_height_real, real_coordinate_bounds,
    unit_orbit, CountReport, EnumOptions, MultiHeight,
};
