//! Inputs shared by the criterion benchmarks.

use fwaudit::synth::{generate, GeneratorProfile, ProfileName};
use fwaudit::{DomainSpec, Ruleset};

/// A generated IPv4 5-tuple ruleset for one benchmark cell.
pub fn profile_ruleset(profile: ProfileName, n: usize, seed: u64) -> Ruleset {
    generate(
        &GeneratorProfile::new(profile, seed),
        n,
        &DomainSpec::ipv4_five_tuple(),
    )
    .expect("generator accepts n >= 1")
}
