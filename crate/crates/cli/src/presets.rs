//! Figure presets compiled into the binary.

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// `(name, file contents)` for every preset.
        pub const PRESETS: &[(&str, &str)] = &[$(($name, include_str!(concat!("../presets/", $name, ".cfg")))),*];
    };
}

presets!(
    "fig1a",
    "fig1b",
    "fig2",
    "fig3",
    "fig4a",
    "fig4b",
    "fig4c",
    "fig4d",
    "fig4e",
    "fig4f",
    "fig4g",
    "fig4h",
    "fig5a",
    "fig5b",
    "fig5c",
    "fig5d",
    "fig6a",
    "fig6b",
    "fig6c",
    "fig6d",
    "fig7a",
    "fig7b",
    "fig8a",
    "fig8b",
    "fig9a",
    "fig9b",
);

pub fn find(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Subcommand named on a preset's `# command:` line.
pub fn command_of(text: &str) -> Option<&str> {
    text.lines().find_map(|l| l.trim().strip_prefix("# command:")).map(str::trim)
}
