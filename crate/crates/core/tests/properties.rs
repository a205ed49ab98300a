mod common;

use std::sync::OnceLock;

use common::{cone_sees, fc_by_iteration, implies, int, worlds, World};
use epiplan_core::dsl;
use epiplan_core::{Formula, GroupMode, Target};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn world(name: &str) -> &'static World {
    static WORLDS: OnceLock<Vec<World>> = OnceLock::new();
    WORLDS.get_or_init(worlds).iter().find(|w| w.name == name).unwrap()
}

fn perspective_laws(w: &World, seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = w.random_state(&mut rng);
    let l = if rng.gen_bool(0.3) { s.to_local() } else { w.random_local(&mut rng, &s, 0.8) };
    let p = w.problem.perspective();
    for i in 0..w.num_agents() {
        let once = p.apply(i, &l);
        prop_assert!(once.is_subset(&l), "agent {i} sees beyond its input");
        prop_assert_eq!(p.apply(i, &once), once.clone(), "agent {} view is not stable", i);
    }
    Ok(())
}

fn s5_axioms(w: &World, seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = w.random_state(&mut rng);
    let ctx = w.problem.context();
    let holds = |f: &Formula| ctx.eval_state(f, &s).unwrap();
    let phi = w.random_formula(&mut rng, 3, &s);
    let psi = w.random_formula(&mut rng, 2, &s);
    let i = rng.gen_range(0..w.num_agents());
    let k = |f: Formula| Formula::knows(i, f);

    prop_assert!(holds(&implies(k(phi.clone()), phi.clone())), "T fails for {phi:?}");
    prop_assert!(holds(&implies(
        Formula::and(k(implies(phi.clone(), psi.clone())), k(phi.clone())),
        k(psi.clone())
    )));
    prop_assert!(holds(&implies(k(phi.clone()), k(k(phi.clone())))), "4 fails for {phi:?}");
    prop_assert!(
        holds(&implies(Formula::not(k(phi.clone())), k(Formula::not(k(phi.clone()))))),
        "5 fails for {phi:?}"
    );
    prop_assert_eq!(
        holds(&Formula::sees(i, phi.clone())),
        holds(&Formula::sees(i, Formula::not(phi.clone())))
    );

    let g = w.random_group(&mut rng);
    let group = |m| Formula::GroupKnows(m, g.clone(), Box::new(phi.clone()));
    let ck = holds(&group(GroupMode::Common));
    let ek = holds(&group(GroupMode::Everyone));
    let dk = holds(&group(GroupMode::Distributed));
    prop_assert!(!ck || ek, "CK without EK for {phi:?}");
    for &j in &g {
        let kj = holds(&Formula::knows(j, phi.clone()));
        prop_assert!(!ek || kj, "EK without K[{j}]");
        prop_assert!(!kj || dk, "K[{j}] without DK");
    }
    Ok(())
}

fn fc_oracle(w: &World, seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = w.random_state(&mut rng);
    let l = w.random_local(&mut rng, &s, 0.9);
    let g = w.random_group(&mut rng);
    let ctx = w.problem.context();
    let (got, steps) = ctx.fc_counted(&g, &l).unwrap();
    let (want, settled) = fc_by_iteration(&w.problem, &g, &l);
    prop_assert_eq!(got, want);
    prop_assert!(settled <= l.len(), "settled after {} > |l| = {}", settled, l.len());
    // The implementation also counts the application that confirms the fixed point.
    prop_assert_eq!(steps, settled + 1);
    Ok(())
}

fn formula_round_trip(w: &World, seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = w.random_state(&mut rng);
    let f = w.random_formula(&mut rng, 3, &s);
    let text = dsl::print_formula(&f, &w.problem);
    let back = dsl::parse_formula(&text, &w.problem).map_err(|e| TestCaseError::fail(format!("{text}: {e:?}")))?;
    prop_assert_eq!(back, f, "{}", text);
    Ok(())
}

macro_rules! per_world {
    ($($module:ident => $name:literal),*) => {$(
        mod $module {
            use super::*;

            proptest! {
                #![proptest_config(ProptestConfig::with_cases(1000))]

                #[test]
                fn views_shrink_and_are_stable(seed in any::<u64>()) {
                    perspective_laws(world($name), seed)?;
                }

                #[test]
                fn knowledge_is_s5(seed in any::<u64>()) {
                    s5_axioms(world($name), seed)?;
                }

                #[test]
                fn common_view_matches_iteration(seed in any::<u64>()) {
                    fc_oracle(world($name), seed)?;
                }

                #[test]
                fn formulas_print_and_parse_back(seed in any::<u64>()) {
                    formula_round_trip(world($name), seed)?;
                }
            }
        }
    )*};
}

per_world!(full => "full", euclidean => "euclidean2d", rooms => "latched-rooms", social => "social");

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cone_membership_matches_float_geometry(seed in any::<u64>()) {
        let w = world("euclidean2d");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = w.random_state(&mut rng);
        let p = &w.problem;
        let v = |n: &str| int(s.get(p.var_id(n).unwrap()));
        let o1 = p.var_id("o1").unwrap();
        let o2 = p.var_id("o2").unwrap();
        for (agent, (x, y, d)) in [("a", ("ax", "ay", "ad")), ("b", ("bx", "by", "bd")), ("c", ("cx", "cy", "cd"))] {
            let i = p.agent_id(agent).unwrap();
            let view = p.perspective().apply(i, &s.to_local());
            let pose = (v(x), v(y), v(d));
            prop_assert_eq!(view.contains(o1), cone_sees(pose, (1, 1), 90.0));
            prop_assert_eq!(view.contains(o2), cone_sees(pose, (v("ox"), v("oy")), 90.0));
        }
    }

    #[test]
    fn distributed_view_is_union_and_common_view_is_inside_each(seed in any::<u64>()) {
        for w in [world("euclidean2d"), world("latched-rooms"), world("social")] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = w.random_state(&mut rng);
            let l = s.to_local();
            let g = w.random_group(&mut rng);
            let p = w.problem.perspective();
            let ctx = w.problem.context();
            let fc = ctx.fc(&g, &l).unwrap();
            for &i in &g {
                prop_assert!(fc.is_subset(&p.apply(i, &l)));
            }
            // Seeing a variable distributively means some member sees it.
            for v in 0..w.num_vars() {
                let ds = ctx.eval_state(&Formula::GroupSees(GroupMode::Distributed, g.clone(), Target::Var(v)), &s).unwrap();
                let any = g.iter().any(|&i| p.apply(i, &l).contains(v));
                prop_assert_eq!(ds, any);
            }
        }
    }

    #[test]
    fn partial_states_combine_lawfully(seed in any::<u64>()) {
        let w = world("social");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = w.random_state(&mut rng);
        let a = w.random_local(&mut rng, &s, 0.5);
        let b = w.random_local(&mut rng, &s, 0.5);
        let meet = a.intersect(&b).unwrap();
        let join = a.union(&b).unwrap();
        prop_assert_eq!(meet.clone(), b.intersect(&a).unwrap());
        prop_assert_eq!(join.clone(), b.union(&a).unwrap());
        prop_assert!(meet.is_subset(&a) && meet.is_subset(&b));
        prop_assert!(a.is_subset(&join) && b.is_subset(&join));
        prop_assert!(join.is_subset(&s.to_local()));
        prop_assert_eq!(meet.len() + join.len(), a.len() + b.len());
    }
}
