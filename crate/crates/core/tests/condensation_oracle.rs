mod oracle;

use maxwell_hdg::Formulation;

#[test]
fn condensed_step_matches_monolithic_solve() {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for seed in 0..24u64 {
        for formulation in [Formulation::Mixed, Formulation::ElectricField] {
            for tau in [0.1, 1.0, 10.0] {
                let rel = oracle::check(seed, formulation, tau);
                assert!(
                    rel < 1e-10,
                    "seed {seed} {formulation:?} tau {tau}: relative difference {rel:e}"
                );
                worst = worst.max(rel);
                count += 1;
            }
        }
    }
    assert_eq!(count, 144);
    println!("worst relative difference over {count} cases: {worst:e}");
}
