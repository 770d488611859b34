//! Built-in scenarios, embedded from `scenarios/*.toml`.

use crate::scenario::{parse_scenario, Scenario};

/// `(id, file text)` for every shipped scenario.
pub const SOURCES: &[(&str, &str)] = &[
    ("canonical_kcontact", include_str!("../scenarios/canonical_kcontact.toml")),
    ("canonical_ksymplectic", include_str!("../scenarios/canonical_ksymplectic.toml")),
    ("damped_wave", include_str!("../scenarios/damped_wave.toml")),
    ("coupled_strings", include_str!("../scenarios/coupled_strings.toml")),
    ("product_contact", include_str!("../scenarios/product_contact.toml")),
    ("r10_two_contact", include_str!("../scenarios/r10_two_contact.toml")),
    ("sl2_counterexample", include_str!("../scenarios/sl2_counterexample.toml")),
    ("gl2_example", include_str!("../scenarios/gl2_example.toml")),
    ("h2r_symplectised", include_str!("../scenarios/h2r_symplectised.toml")),
    ("symplectisation_nonexample", include_str!("../scenarios/symplectisation_nonexample.toml")),
];

pub fn registry() -> Vec<Scenario> {
    SOURCES.iter().map(|(id, src)| load_builtin(id, src)).collect()
}

pub fn ids() -> Vec<&'static str> {
    SOURCES.iter().map(|(id, _)| *id).collect()
}

pub fn get(id: &str) -> Option<Scenario> {
    SOURCES.iter().find(|(i, _)| *i == id).map(|(id, src)| load_builtin(id, src))
}

fn load_builtin(id: &str, src: &str) -> Scenario {
    let s = parse_scenario(src).unwrap_or_else(|e| panic!("built-in scenario `{id}`: {e}"));
    assert_eq!(s.id(), id, "built-in scenario id");
    s
}
