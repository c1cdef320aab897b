//! Shared fixtures for the benchmarks.

use wg_core::mesh::{build_initial_mesh, InitialPattern, MeshHierarchy};
use wg_core::{CoefficientField, SpaceConfig};

/// Default hierarchy refined `levels` times with the identity coefficient on its base.
pub fn hierarchy(levels: usize) -> (MeshHierarchy, CoefficientField) {
    let h = MeshHierarchy::new(build_initial_mesh(InitialPattern::CrissCross, 2), levels);
    let a = CoefficientField::identity(h.meshes[0].num_cells());
    (h, a)
}

pub const CONFIGS: [(&str, SpaceConfig); 2] = [
    ("type1", SpaceConfig::TYPE1_K0),
    ("type2", SpaceConfig::TYPE2_K1),
];
