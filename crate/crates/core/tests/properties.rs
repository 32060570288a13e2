use proptest::prelude::*;

use toc_core::check::{check_program, CheckOptions};
use toc_core::emit::{emit_smtlib, EmitOptions};
use toc_core::fuzz::{generate_program, program_rng};
use toc_core::parser::{parse_str, render_program};
use toc_core::toc::{toc_program, TocOptions};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rendering_round_trips(seed in any::<u64>(), recursive in any::<bool>()) {
        let p = generate_program(&mut program_rng(seed, 0), 6, 8, recursive);
        let text = render_program(&p);
        let q = parse_str(&text).unwrap();
        prop_assert_eq!(render_program(&q), text);
    }

    #[test]
    fn every_encoding_matches_the_stable_models(
        seed in any::<u64>(),
        vub_form in any::<bool>(),
        extensional in any::<bool>(),
    ) {
        let p = generate_program(&mut program_rng(seed, 1), 6, 8, true);
        let toc = TocOptions { vub_form, extensional, ..Default::default() };
        let r = check_program(&p, CheckOptions { toc, ..Default::default() }).unwrap();
        prop_assert!(r.passed(), "{}\n{:?}", render_program(&p), r.failures);
    }

    #[test]
    fn emission_is_deterministic(seed in any::<u64>()) {
        let p = generate_program(&mut program_rng(seed, 2), 6, 8, true);
        let q = parse_str(&render_program(&p)).unwrap();
        let a = emit_smtlib(&toc_program(&p, TocOptions::default()), EmitOptions::default()).unwrap();
        let b = emit_smtlib(&toc_program(&q, TocOptions::default()), EmitOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}
