mod common;

use common::gen::{build_history, gen_condition, gen_history, random_megamodel, HIST_EXITS, HIST_OPS};
use common::oracle::NaiveHistory;
use megaloop::condition::{atom_value, eval_condition, parse_condition, Atom, OpExecution};
use megaloop::dsl::{parse_fld, serialize_fld};
use megaloop::metamodel::check_megamodel;
use megaloop::trigger::{format_period, parse_duration, parse_trigger, Scheduler, PeriodAnchor};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn same(a: f64, b: f64) -> bool {
    (a.is_infinite() && b.is_infinite() && a.signum() == b.signum()) || (a - b).abs() < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn megamodels_round_trip(seed in any::<u64>()) {
        let m = random_megamodel(&mut ChaCha8Rng::seed_from_u64(seed), 0);
        let errors: Vec<_> = check_megamodel(&m).into_iter().filter(|d| d.is_error()).collect();
        prop_assert!(errors.is_empty(), "{:?}", errors);
        let text = serialize_fld(&m);
        let back = parse_fld(&text).map_err(|d| TestCaseError::fail(format!("{d:?}\n{text}")))?;
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(serialize_fld(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn atoms_match_the_naive_history((runs, current) in gen_history()) {
        let (h, now) = build_history(&runs, &current);
        let naive = NaiveHistory::new(h.runs(), h.current());
        for op in HIST_OPS {
            for exit in HIST_EXITS {
                let atoms = [
                    Atom::Executions { op: op.into(), exit: Some(exit.into()) },
                    Atom::Executions { op: op.into(), exit: None },
                    Atom::RunsSince { op: op.into(), exit: exit.into() },
                    Atom::SecondsSince { op: op.into(), exit: Some(exit.into()) },
                    Atom::SecondsSince { op: op.into(), exit: None },
                    Atom::RunCount,
                ];
                for a in atoms {
                    let (got, want) = (atom_value(&a, &h, now), naive.atom(&a, now));
                    prop_assert!(same(got, want), "{a}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn conditions_match_the_naive_evaluator((runs, current) in gen_history(), expr in gen_condition()) {
        let (h, now) = build_history(&runs, &current);
        let naive = NaiveHistory::new(h.runs(), h.current());
        prop_assert_eq!(eval_condition(&expr, &h, now), naive.eval(&expr, now), "{}", expr);
    }

    #[test]
    fn conditions_print_and_parse_back(expr in gen_condition()) {
        let text = expr.to_string();
        let back = parse_condition(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e:?}")))?;
        prop_assert_eq!(back, expr);
    }

    /// A run containing the exit resets runsSince to 0; every later run
    /// without it adds exactly one; aborted runs add nothing.
    #[test]
    fn runs_since_resets_then_counts(tail in prop::collection::vec((any::<bool>(), any::<bool>()), 1..10)) {
        let (mut h, _) = build_history(&[(false, vec![(0, 0, 1)])], &None);
        let mut expected = 0.0;
        prop_assert_eq!(h.runs_since("A", "x"), 0.0);
        for (hit, aborted) in tail {
            h.begin_run("Start", 0.0);
            if hit {
                h.record_op(OpExecution { op: "A".into(), exit: "x".into(), start_time: 0.0, end_time: 0.0 });
                prop_assert_eq!(h.runs_since("A", "x"), 0.0);
            } else {
                prop_assert_eq!(h.runs_since("A", "x"), expected + 1.0);
            }
            if aborted {
                h.abort_run(0.0);
            } else {
                h.finish_run("Done", 0.0);
                expected = if hit { 0.0 } else { expected + 1.0 };
            }
            prop_assert_eq!(h.runs_since("A", "x"), expected);
        }
    }

    #[test]
    fn periods_print_and_parse_back(micros in 1u64..10_000_000_000) {
        prop_assert_eq!(parse_duration(&format_period(micros)).unwrap(), micros);
    }

    /// The end-to-start gate opens exactly one period after the last run ended.
    #[test]
    fn gate_opens_one_period_after_the_last_run(
        period in 1u64..5_000_000,
        start in 0u64..10_000_000,
        len in 0u64..1_000_000,
        probe in 0u64..20_000_000,
    ) {
        let s = Scheduler::new(PeriodAnchor::EndToStart);
        let (t0, t1) = (start as f64 / 1e6, (start + len) as f64 / 1e6);
        let opens = (start + len + period) as f64 / 1e6;
        let now = probe as f64 / 1e6;
        prop_assert!(s.gate_open(period, None, now));
        prop_assert_eq!(s.gate_open(period, Some((t0, t1)), now), now >= opens - 1e-9);
    }

    #[test]
    fn triggers_print_and_parse_back(events in prop::sample::subsequence(vec!["RtException", "LoadIncrease", "After[DeepCheck]", "Before[Update]"], 0..4),
                                     period in prop::option::of(1u64..100_000_000)) {
        prop_assume!(!events.is_empty() || period.is_some());
        let text = format!("{}; {}; Start", events.join(", "), period.map(format_period).unwrap_or_default());
        let t = parse_trigger(&text).unwrap();
        prop_assert_eq!(t.period_micros, period);
        prop_assert_eq!(parse_trigger(&t.to_string()).unwrap(), t);
    }
}
