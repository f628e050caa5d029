//! Named run configurations compiled into the binary.

/// `(name, TOML text)`, sorted by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("circuit-broken", include_str!("../presets/circuit-broken.toml")),
    ("circuit-diode", include_str!("../presets/circuit-diode.toml")),
    ("circuit-unbroken", include_str!("../presets/circuit-unbroken.toml")),
    ("coupling", include_str!("../presets/coupling.toml")),
    ("eigen-linear", include_str!("../presets/eigen-linear.toml")),
    ("eigen-nonlinear", include_str!("../presets/eigen-nonlinear.toml")),
    ("linear-broken", include_str!("../presets/linear-broken.toml")),
    ("linear-ep", include_str!("../presets/linear-ep.toml")),
    ("linear-unbroken", include_str!("../presets/linear-unbroken.toml")),
    ("nonlinear-broken", include_str!("../presets/nonlinear-broken.toml")),
    ("nonlinear-ep", include_str!("../presets/nonlinear-ep.toml")),
    ("nonlinear-unbroken", include_str!("../presets/nonlinear-unbroken.toml")),
    ("step", include_str!("../presets/step.toml")),
    ("sweep-linear", include_str!("../presets/sweep-linear.toml")),
    ("sweep-nonlinear", include_str!("../presets/sweep-nonlinear.toml")),
];

pub fn find(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
