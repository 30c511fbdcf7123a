//! File formats and target-view generation: the `.cvx` scene format, OBJ
//! meshes, portable-graymap images, camera manifests and the fit
//! configuration file.

mod config;
mod cvx;
mod obj;
mod pgm;
mod views;

pub use config::{parse_config, ConfigError, FitConfig};
pub use cvx::{
    document_to_polyhedra, parse_cvx, polyhedra_to_document, write_cvx, CvxDocument, CvxParseError,
};
pub use obj::{parse_obj, write_obj, ObjParseError};
pub use pgm::{read_pgm, write_pgm, PgmError};
pub use views::{gen_views, parse_camera_manifest, write_camera_manifest, ManifestError};
