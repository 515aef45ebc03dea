//! Map from each formula or result the crate reproduces to the operation
//! that owns it.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coverage {
    /// Computed by the named operation.
    Implemented,
    /// Checked statistically by the named acceptance check or command.
    Checked,
    OutOfScope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexEntry {
    pub topic: &'static str,
    pub owner: &'static str,
    pub coverage: Coverage,
}

const fn entry(topic: &'static str, owner: &'static str, coverage: Coverage) -> IndexEntry {
    IndexEntry { topic, owner, coverage }
}

use Coverage::*;

const INDEX: &[IndexEntry] = &[
    entry("Choi operator of a channel from Kraus operators", "channels::choi_from_kraus", Implemented),
    entry("Kraus operators from a Choi operator", "channels::kraus_from_choi", Implemented),
    entry("Stinespring purification of a Choi operator", "channels::stinespring_from_choi", Implemented),
    entry("environment unitary acting on a purification", "channels::apply_env_unitary", Implemented),
    entry("Haar-random Stinespring prior on channels", "ensembles::sample_choi", Implemented),
    entry("normalized Wishart form of the channel prior", "ensembles::sample_wishart_choi", Implemented),
    entry("average purification error over the prior", "metrics::estimate_average_error", Implemented),
    entry("error as an overlap maximization over environment unitaries", "metrics::error_orbit_numeric", Implemented),
    entry("average purity of a random Choi operator", "theory::avg_purity", Implemented),
    entry("second moment of a random purification", "theory::second_moment_closed_form", Implemented),
    entry("Marcenko-Pastur limit of the Choi spectrum", "ensembles::mp_cdf", Implemented),
    entry("square-root moment of the Marcenko-Pastur law", "ensembles::mp_mu", Implemented),
    entry("large-dimension limit of the square-root trace moment", "theory::sqrt_moment_mp_ratio", Checked),
    entry("pure-output error through Uhlmann fidelity", "metrics::error_pure_output", Implemented),
    entry("average pure-output error from the square-root moment", "theory::eps_pure", Implemented),
    entry("pure outputs with rank-one marginal", "metrics::closed_form_for", Implemented),
    entry("ordering of pure outputs, maximally entangled best", "acceptance::pure_output_ordering", Checked),
    entry("appended-environment error through the von Neumann trace inequality", "metrics::error_append", Implemented),
    entry("average appended-environment error from ordered eigenvalue moments", "theory::eps_app", Implemented),
    entry("optimal appended environment spectrum", "strategies::optimal_append_spectrum", Implemented),
    entry("bounds on the optimal appended-environment error", "theory::eps_app_bounds", Implemented),
    entry("pure appended environment through the largest eigenvalue", "theory::eps_app_pure_ancilla", Implemented),
    entry("map-to-depolarizing error", "theory::eps_dep", Implemented),
    entry("maximally mixed environment averaged over environment unitaries", "theory::eps_avg_ue", Implemented),
    entry("estimate-and-purify error bound", "theory::eps_tomo_bound", Implemented),
    entry("one-over-k decay of the estimation strategy", "cli::tomo-scaling", Checked),
    entry("regime values of each strategy", "theory::table2_regime_values", Implemented),
    entry("strategy hierarchy at full environment rank", "acceptance::strategy_hierarchy", Checked),
    entry("qubit-to-qubit error curves against environment dimension", "cli::sweep", Checked),
    entry("lower bounds on the optimal purification error", "-", OutOfScope),
    entry("optimization over all multi-copy superchannels", "-", OutOfScope),
];

/// Every indexed topic, in a fixed order.
pub fn formula_index() -> &'static [IndexEntry] {
    INDEX
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn topics_are_unique_and_owned() {
        let mut seen = HashSet::new();
        for e in formula_index() {
            assert!(seen.insert(e.topic), "duplicate topic {}", e.topic);
            match e.coverage {
                Coverage::OutOfScope => assert_eq!(e.owner, "-"),
                _ => assert!(e.owner.contains("::"), "{}", e.owner),
            }
        }
    }

    #[test]
    fn implemented_owners_exist_in_sources() {
        let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("src");
        for e in formula_index().iter().filter(|e| e.coverage == Coverage::Implemented) {
            let (module, func) = e.owner.split_once("::").unwrap();
            let text = std::fs::read_to_string(root.join(format!("{module}.rs"))).unwrap();
            assert!(text.contains(&format!("pub fn {func}(")), "{}", e.owner);
        }
    }
}
