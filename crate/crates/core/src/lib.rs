pub mod chart;
pub mod background;
pub mod dynamics;
pub mod geometry;
pub mod invariants;
pub mod phase_space;
pub mod scenarios;
pub mod verify;
pub mod surfaces;
