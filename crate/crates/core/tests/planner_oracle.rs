mod common;

use common::*;
use itl_core::language::satisfied;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(160))]

    #[test]
    fn iddfs_matches_breadth_first_oracle(case in random_case()) {
        prop_assert!(case.fixture.state.objects().count() <= 8);
        if let Err(msg) = check_planner(&case) {
            return Err(TestCaseError::fail(msg));
        }
    }

    #[test]
    fn goal_test_agrees_with_direct_check(case in random_case()) {
        let s = &case.fixture.state;
        prop_assert_eq!(satisfied(&case.goal, &case.object, s), oracle_goal(&case, s));
    }
}

#[test]
fn plans_found_at_a_depth_persist_at_deeper_bounds() {
    let f = plate();
    let goal = fork_goal();
    let fork_world = fork();
    let obj = itl_core::world::ObjectId::new("metal-fork-1");
    let mut first = None;
    for depth in 0..=7 {
        let r = itl_core::planner::plan_iddfs(&fork_world.state, &goal, &obj, depth);
        match (&first, r) {
            (None, Ok(p)) => first = Some(p.steps),
            (Some(steps), Ok(p)) => assert_eq!(&p.steps, steps),
            (Some(_), Err(_)) => panic!("plan disappeared at depth {depth}"),
            (None, Err(_)) => {}
        }
    }
    assert_eq!(first.map(|s| s.len()), Some(4));
    assert!(f.state.objects().count() < 8);
}
