pub mod bits;
pub mod cutting;
pub mod diam2_boxes;
pub mod diam2_unitcube;
pub mod diam3_unitcube;
pub mod geom;
pub mod instance;
pub mod nonuniform_grid;
pub mod oracle;
pub mod pseudoline;
pub mod range_index;
pub mod scalar;
pub mod staircase;
