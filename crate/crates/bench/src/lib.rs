//! Shared fixtures for the benchmarks.

use ghost_elliptic::{sample_levelset, DomainSpec, GridField, GridSpec};

/// Sampled level set of the reference circle at resolution `n`.
pub fn circle_levelset(n: usize) -> GridField {
    let grid = GridSpec::new(n).expect("valid N");
    sample_levelset(&DomainSpec::circle(), grid).expect("circle samples")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_has_internal_nodes() {
        let phi = super::circle_levelset(20);
        assert!(phi.values().iter().any(|v| *v < 0.0));
    }
}
