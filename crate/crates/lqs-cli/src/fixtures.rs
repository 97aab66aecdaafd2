//! Example systems shipped with the binary, addressable by name.

pub const FIXTURES: [(&str, &str); 6] = [
    ("dpa", include_str!("../../../fixtures/dpa.json")),
    ("h_subsystem", include_str!("../../../fixtures/h_subsystem.json")),
    ("inverted_cavity", include_str!("../../../fixtures/inverted_cavity.json")),
    ("classical_identity", include_str!("../../../fixtures/classical_identity.json")),
    ("classical_two_pole", include_str!("../../../fixtures/classical_two_pole.json")),
    ("passive_cavity", include_str!("../../../fixtures/passive_cavity.json")),
];

pub fn lookup(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".json").unwrap_or(name);
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
