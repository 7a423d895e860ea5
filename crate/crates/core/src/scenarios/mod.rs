//! Generators for the two worked domains, each producing a bundle of a
//! `.cal` description, a `.scn` scenario and, for grids, a `.layout`.

pub mod blocks;
pub mod grid;

use std::io;
use std::path::Path;

pub use blocks::{gen_blocksworld, BlocksError};
pub use grid::{gen_grid, GridError, GridInstance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub cal: String,
    pub scn: String,
    pub layout: Option<String>,
}

impl Bundle {
    /// Writes `<stem>.cal`, `<stem>.scn` and, if present, `<stem>.layout`.
    pub fn write_to(&self, dir: &Path, stem: &str) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.cal")), &self.cal)?;
        std::fs::write(dir.join(format!("{stem}.scn")), &self.scn)?;
        if let Some(l) = &self.layout {
            std::fs::write(dir.join(format!("{stem}.layout")), l)?;
        }
        Ok(())
    }

    pub fn read_from(dir: &Path, stem: &str) -> io::Result<Self> {
        let layout_path = dir.join(format!("{stem}.layout"));
        Ok(Bundle {
            cal: std::fs::read_to_string(dir.join(format!("{stem}.cal")))?,
            scn: std::fs::read_to_string(dir.join(format!("{stem}.scn")))?,
            layout: if layout_path.exists() {
                Some(std::fs::read_to_string(layout_path)?)
            } else {
                None
            },
        })
    }
}
