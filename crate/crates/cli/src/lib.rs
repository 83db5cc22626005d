//! Scenario files, output layout and the commands behind the `bbft` binary.

pub mod commands;
pub mod output;
pub mod scenario;

use std::path::{Path, PathBuf};

use anyhow::Result;

/// Scenarios shipped with the binary, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("lever_4_4", include_str!("../scenarios/lever_4_4.toml")),
    (
        "lever_4_4_exhaustive",
        include_str!("../scenarios/lever_4_4_exhaustive.toml"),
    ),
    ("lever_7_7_random", include_str!("../scenarios/lever_7_7_random.toml")),
    ("bi_broadcast_4_4", include_str!("../scenarios/bi_broadcast_4_4.toml")),
    ("broadcast_k4", include_str!("../scenarios/broadcast_k4.toml")),
];

/// Loads a scenario file, or a bundled scenario when no such file exists.
pub fn load_scenario(arg: &Path) -> Result<scenario::Scenario> {
    if !arg.exists() {
        if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| Path::new(name) == arg) {
            let mut s = scenario::parse(text)?;
            s.base_dir = PathBuf::from(".");
            return Ok(s);
        }
    }
    scenario::load(arg)
}
