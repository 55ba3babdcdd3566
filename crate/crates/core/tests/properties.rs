//! Invariants across modules: normalization, divergence bounds, softmax shift
//! invariance, execution soundness and generator structure.

#![allow(clippy::needless_range_loop)]

use prae::abduction::{abduce_scene, Arrangement};
use prae::domain::{catalog_for_axis, AttributeDomain, Axis, Configuration, RuleKind};
use prae::execution::{execute_axis, execute_scene};
use prae::generator::{generate, make_distractors};
use prae::harness::{perceive, solve, SolveOptions};
use prae::logspace::LogDist;
use prae::perception::corrupt;
use prae::selection::{answer_probs, jsd, jsd_linear};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn normalized(d: &LogDist) -> bool {
    (d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9
}

fn dist_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], len).prop_map(|mut w| {
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        let z: f64 = w.iter().sum();
        w.iter().map(|x| x / z).collect()
    })
}

#[test]
fn jsd_symmetric_and_bounded_on_ten_thousand_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let k = rng.gen_range(1..12);
        let mut draw = || {
            let w: Vec<f64> = (0..k)
                .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() })
                .collect();
            LogDist::from_weights(&w).unwrap_or_else(|_| LogDist::point_mass(k, 0))
        };
        let (p, q) = (draw(), draw());
        let (a, b) = (jsd(&p, &q).unwrap(), jsd(&q, &p).unwrap());
        assert_eq!(a, b);
        assert!((0.0..=std::f64::consts::LN_2).contains(&a));
    }
}

proptest! {
    #[test]
    fn softmax_is_shift_invariant(d in prop::collection::vec(0.0..20.0f64, 8), c in -50.0..50.0f64) {
        let a = answer_probs(&d);
        let shifted: Vec<f64> = d.iter().map(|x| x + c).collect();
        let b = answer_probs(&shifted);
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        let argmin = (0..8).fold(0, |m, i| if d[i] < d[m] { i } else { m });
        let argmax = (0..8).fold(0, |m, i| if a[i] > a[m] { i } else { m });
        prop_assert_eq!(argmin, argmax);
    }

    #[test]
    fn jsd_zero_on_identical(p in dist_strategy(7)) {
        prop_assert_eq!(jsd_linear(&p, &p), 0.0);
    }

    #[test]
    fn execution_conserves_mass_and_stays_in_image(seed in any::<u64>(), slots in prop::sample::select(vec![1usize, 4, 9])) {
        let d = AttributeDomain::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axis = Axis::ALL[rng.gen_range(0..4)];
        let catalog = catalog_for_axis(axis, slots, &d);
        let rule = catalog[rng.gen_range(0..catalog.len())];
        prop_assume!(rule.kind != RuleKind::DistributeThree);
        let space = rule.space(slots, &d);
        let m = space.len();
        let mut draw = || {
            let w: Vec<f64> = (0..m).map(|_| if rng.gen_bool(0.5) { 0.0 } else { rng.gen::<f64>() + 1e-3 }).collect();
            LogDist::from_weights(&w).unwrap_or_else(|_| LogDist::uniform(m))
        };
        let (a, b) = (draw(), draw());
        if let Ok(pred) = execute_axis(rule, space, &a, &b, None) {
            prop_assert!(normalized(&pred.dist));
            prop_assert!(pred.log_precondition_mass <= 0.0);
            let mut image = vec![false; m];
            for i in (0..m).filter(|&i| a.prob(i) > 0.0) {
                for j in (0..m).filter(|&j| b.prob(j) > 0.0) {
                    if let Ok(v) = rule.forward(space, space.value(i), space.value(j), None) {
                        image[space.index_of(v).unwrap()] = true;
                    }
                }
            }
            for w in 0..m {
                prop_assert!(pred.dist.prob(w) == 0.0 || image[w], "{} put mass on unreachable value {}", rule, w);
            }
        }
    }

    #[test]
    fn truth_mass_non_increasing_in_epsilon(seed in any::<u64>(), steps in 2usize..40) {
        let inst = generate(Configuration::Center, seed % 1000).unwrap();
        let d = &inst.domain;
        let panel = &inst.context[0];
        let comp = &panel.components[0];
        let limit = 1.0 - 1.0 / d.types.len() as f64;
        let mut last = f64::INFINITY;
        for i in 0..=steps {
            let e = limit * i as f64 / steps as f64;
            let b = corrupt(panel, Configuration::Center, d, e).unwrap();
            let m = b[0].slots[0].type_dist[comp.shape as usize];
            prop_assert!(m <= last);
            last = m;
        }
    }
}

#[test]
fn every_emitted_distribution_is_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for config in Configuration::ALL {
        for seed in 0..8 {
            let inst = generate(config, seed).unwrap();
            let eps = [0.0, 0.05, 0.3, 0.7][rng.gen_range(0..4)];
            let options = SolveOptions::with_epsilon(eps);
            let (context, candidates) = perceive(&inst, &options).unwrap();
            for panel in context.iter().chain(&candidates) {
                for c in &panel.components {
                    assert!(c.all_dists().into_iter().all(normalized));
                }
            }
            let Ok(sol) = solve(&inst, &options) else {
                continue;
            };
            for axes in &sol.posteriors {
                for p in axes {
                    assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
            for c in &sol.prediction.belief.components {
                assert!(c.all_dists().into_iter().all(normalized));
            }
            for axes in &sol.prediction.annotations {
                for a in axes {
                    assert!(a.precondition_mass > 0.0 && a.precondition_mass <= 1.0 + 1e-12);
                }
            }
            let r = &sol.report;
            assert!((r.answer_probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(r.divergences.iter().all(|&d| d >= 0.0));
            assert_eq!(r.chosen, (0..8).fold(0, |m, i| if r.divergences[i] < r.divergences[m] { i } else { m }));
        }
    }
}

#[test]
fn generated_rows_satisfy_their_rules() {
    for config in Configuration::ALL {
        for seed in 0..30 {
            let inst = generate(config, seed).unwrap();
            let slots = config.slot_counts();
            let mut panels = inst.context.clone();
            panels.push(inst.answer().clone());
            for (c, rules) in inst.rules.iter().enumerate() {
                for &rule in rules {
                    let space = rule.space(slots[c], &inst.domain);
                    let v = |i: usize| space.value(space.index(panels[i].components[c].code(space)));
                    let triple = (rule.kind == RuleKind::DistributeThree)
                        .then(|| prae::domain::Triple::new(v(0), v(1), v(2)).unwrap());
                    for row in [[0, 1, 2], [3, 4, 5], [6, 7, 8]] {
                        assert!(
                            rule.holds_row(space, v(row[0]), v(row[1]), v(row[2]), triple.as_ref()).unwrap(),
                            "{config} seed {seed} component {c} {rule} row {row:?}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn candidates_are_distinct_and_answer_is_placed() {
    for config in Configuration::ALL {
        for seed in 0..30 {
            let inst = generate(config, seed).unwrap();
            for i in 0..8 {
                for j in i + 1..8 {
                    assert_ne!(inst.candidates[i], inst.candidates[j]);
                }
            }
            let again = make_distractors(inst.answer(), &inst.rules, config, &inst.domain, seed).unwrap();
            assert!(again.panels.contains(inst.answer()));
        }
    }
}

#[test]
fn noiseless_execution_reproduces_answer() {
    for config in Configuration::ALL {
        for seed in 0..40 {
            let inst = generate(config, seed).unwrap();
            let (context, _) = perceive(&inst, &SolveOptions::default()).unwrap();
            let posteriors = abduce_scene(&context, &inst.domain, Arrangement::Rows).unwrap();
            for (c, axes) in posteriors.iter().enumerate() {
                for (a, p) in axes.iter().enumerate() {
                    assert_eq!(p.rules[p.argmax()], inst.rules[c][a]);
                }
            }
            let pred = execute_scene(&inst.rules, &context, config, &inst.domain, Arrangement::Rows).unwrap();
            assert!(prae::harness::prediction_matches(&pred, inst.answer(), &inst.domain));
        }
    }
}
