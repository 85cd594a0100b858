pub mod specfun;
pub mod geometry;
pub mod weyl;
pub mod birkhoff;
pub mod orbit_terms;
pub mod spectra;
pub mod curvilinear;
pub mod folding;
pub mod cli;
