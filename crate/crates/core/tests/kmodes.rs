mod common;

use common::{arb_codes, table_from_codes};
use noniid_core::coupled::{kmodes_fit, KModesConfig};
use noniid_core::similarity::CoupledSimilarity;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn objective_rises_and_fit_terminates(codes in arb_codes(40), g in 1usize..8, seed in any::<u64>()) {
        let table = table_from_codes("i", &codes);
        let sim = CoupledSimilarity::fit(&table).unwrap();
        let config = KModesConfig { clusters: g.min(codes.len()), seed, max_iter: 50 };
        let fit = kmodes_fit(&sim, &config).unwrap();

        prop_assert!(fit.iterations() >= 1 && fit.iterations() <= 50);
        for w in fit.objective_trace().windows(2) {
            prop_assert!(w[1] >= w[0], "{} -> {}", w[0], w[1]);
        }
        prop_assert_eq!(fit.assignment().len(), codes.len());
        prop_assert!(fit.assignment().iter().all(|&c| c < config.clusters));
        for c in 0..fit.clusters() {
            for (j, value) in fit.mode(c).into_iter().enumerate() {
                if let Some(v) = value {
                    let code: u8 = v[1..].parse().unwrap();
                    prop_assert!(codes.iter().any(|row| row[j] == Some(code)));
                }
            }
        }
        prop_assert_eq!(&fit, &kmodes_fit(&sim, &config).unwrap());
    }
}
