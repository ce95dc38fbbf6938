//! Command-line front end: instance and result files, SVG rendering and
//! subcommand dispatch for the `stmdm` binary.

pub mod app;
pub mod io;
pub mod render;

pub use app::{run, Failure};
pub use io::{parse_instance, InstanceError, InstanceFile, ResultFile};
pub use render::{render_svg, RenderOptions};
