//! Front end for `estcombine-core`: parallel drivers, file formats and the
//! registry of reproducible claims.

pub mod claims;
pub mod formats;
pub mod parallel;
