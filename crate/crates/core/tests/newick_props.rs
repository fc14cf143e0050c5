mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_trees_parse_and_round_trip(n in 3usize..=12, seed in any::<u64>()) {
        if let Err(e) = common::check_newick_case(n, seed) {
            prop_assert!(false, "{}", e);
        }
    }
}
