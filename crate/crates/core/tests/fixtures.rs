use fixplan_core::io::parse_model;
use fixplan_core::oracle::{exact_expected_cost, execute, ExecPlan, Prompt, Walker};
use fixplan_core::*;

fn ids(names: &[&str]) -> Vec<ComponentId> {
    names.iter().map(|s| ComponentId::new(*s)).collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn fix1() -> Flat {
    Flat::independent(vec![AtomicSpec::new("A", 0.5, 1.0), AtomicSpec::new("B", 0.5, 2.0)]).unwrap()
}

fn fix2() -> Flat {
    Flat::independent(vec![
        AtomicSpec::new("A", 0.1, 5.0),
        AtomicSpec::new("B", 0.5, 4.0),
        AtomicSpec::new("C", 0.9, 9.0),
    ])
    .unwrap()
}

fn fix3() -> Flat {
    Flat::independent(vec![
        AtomicSpec::inspectable("A", 0.5, 4.0, 1.0, 2.0),
        AtomicSpec::inspectable("B", 0.2, 3.0, 3.0, 3.0),
    ])
    .unwrap()
}

fn fix4() -> Joint {
    Joint::new(
        ids(&["A", "B"]),
        vec![
            (World::all_ok(), 0.4),
            (World::broken(["A"]), 0.3),
            (World::broken(["B"]), 0.2),
            (World::broken(["A", "B"]), 0.1),
        ],
    )
    .unwrap()
}

fn fix5() -> Tree {
    Tree::internal(
        "R",
        20.0,
        None,
        vec![Tree::leaf("L1", 0.5, 4.0, Some(1.0)), Tree::leaf("L2", 0.2, 3.0, Some(3.0))],
    )
}

#[test]
fn fix1_order_and_cost() {
    let seq = optimal_sequence(&fix1()).unwrap();
    assert_eq!(seq.order, ids(&["A", "B"]));
    let r = expected_cost_independent(&seq, &fix1()).unwrap();
    assert!(close(r.ec, 1.75));
    assert!((r.ecf - 2.333333).abs() < 1e-6);
}

#[test]
fn fix2_order_and_cost() {
    let seq = optimal_sequence(&fix2()).unwrap();
    assert_eq!(seq.order, ids(&["C", "B", "A"]));
    assert!(close(expected_cost_independent(&seq, &fix2()).unwrap().ec, 11.295));
}

#[test]
fn fix3_strategy() {
    let r = optimal_strategy(&fix3(), None, &SearchOptions::default()).unwrap();
    assert_eq!(r.strategy.order, ids(&["A", "B"]));
    assert_eq!(r.strategy.inspect_in_order(), ids(&["A"]));
    assert!(close(r.cost.ec, 2.2));
    let alternatives = [(vec![], 3.0), (vec!["A", "B"], 2.8), (vec!["B"], 3.6)];
    for (inspect, ec) in alternatives {
        let s = Strategy::new(ids(&["A", "B"]), ids(&inspect));
        assert!(close(strategy_cost(&s, &fix3()).unwrap().ec, ec), "{inspect:?}");
    }
}

#[test]
fn fix3_trace_with_b_broken() {
    let s = Strategy::new(ids(&["A", "B"]), ids(&["A"]));
    let plan = ExecPlan::from_flat(&fix3(), &s).unwrap();
    let world = plan.world_flags(&World::broken(["B"])).unwrap();
    let trace = execute(&plan, &world).unwrap();
    assert_eq!(trace.total_cost, 4.0);
    assert_eq!(trace.actions_taken, 2);
}

#[test]
fn fix4_dependent_methods() {
    let costs = [1.0, 2.0];
    let (seq, report) = exact_dp(&fix4(), &costs).unwrap();
    assert_eq!(seq.order, ids(&["A", "B"]));
    assert!(close(report.ec, 1.2));
    assert!(close(expected_cost(&Sequence::of(["B", "A"]), &fix4(), &costs).unwrap().ec, 1.6));
    let start = independent_start(&fix4(), &costs).unwrap();
    assert_eq!(start.order, ids(&["A", "B"]));
    let r = local_search(&fix4(), &costs, &Sequence::of(["B", "A"])).unwrap();
    assert_eq!(r.sequence.order, ids(&["A", "B"]));
    assert_eq!(r.swaps, 1);
}

#[test]
fn fix5_plan() {
    let plan = plan_system(&fix5(), &SearchOptions::default()).unwrap().plan;
    assert!(close(plan.h, 5.0));
    assert!(close(plan.ec, 3.0));
    assert!(matches!(plan.action, PlanAction::Strategy { .. }));
    let exec = ExecPlan::from_hier(&fix5(), &plan).unwrap();
    assert!(close(exact_expected_cost(&exec).unwrap().ecf, 5.0));
    let w = Walker::start_broken(&exec).unwrap();
    assert!(matches!(w.prompt(&exec), Prompt::Replace { component, .. } if component.as_str() == "L1"));
}

#[test]
fn fix6_inspects() {
    let fix6 = Flat::independent(vec![AtomicSpec::inspectable("comp", 0.5, 10.0, 2.0, 3.0)]).unwrap();
    let r = optimal_strategy(&fix6, None, &SearchOptions::default()).unwrap();
    assert_eq!(r.strategy.inspect_in_order(), ids(&["comp"]));
    assert!(close(r.cost.ec, 2.5));
    let replace = strategy_cost(&Strategy::new(ids(&["comp"]), []), &fix6).unwrap();
    assert!(close(replace.ec, 5.0));
}

#[test]
fn exact_scalar_reproduces_fixtures_exactly() {
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let sys: ExactFlat = fix1().cast();
    let r = expected_cost_independent(&optimal_sequence(&sys).unwrap(), &sys).unwrap();
    assert_eq!(r.ec, q(7, 4));
    assert_eq!(r.ecf, q(7, 3));

    let joint: ExactJoint = fix4().cast();
    let costs = [q(1, 1), q(2, 1)];
    assert_eq!(exact_dp(&joint, &costs).unwrap().1.ec, q(6, 5));
    assert_eq!(swap_delta(&Sequence::of(["A", "B"]), 0, &joint, &costs).unwrap(), q(-2, 5));

    let tree: ExactTree = fix5().cast();
    assert_eq!(plan_system(&tree, &SearchOptions::default()).unwrap().plan.h, q(5, 1));
}

#[test]
fn single_precision_agrees() {
    let sys: FlatSystem<f32> = fix2().cast();
    let r = expected_cost_independent(&optimal_sequence(&sys).unwrap(), &sys).unwrap();
    assert!((r.ec - 11.295).abs() < 1e-3);
}

#[test]
fn model_files_parse() {
    let text = r#"{"type": "flat", "components": [
        {"id": "A", "p": 0.5, "c": 1},
        {"id": "B", "p": 0.5, "c": 2}
    ]}"#;
    let v = parse_model::<f64>(text).unwrap();
    let Model::Flat(flat) = v.model else { panic!("flat model expected") };
    assert_eq!(flat, fix1());
}
