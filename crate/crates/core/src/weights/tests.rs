use proptest::prelude::*;

use super::*;
use crate::encoder::{ClauseKind, Hardness};
use crate::lang::parse_unasserted;
use crate::logic::Formula;
use crate::ssa::StmtId;
use crate::suite::TestCase;
use crate::testing::P_SOURCE;

fn cov(rows: &[(&str, bool, &[Label])]) -> CoverageMatrix {
    CoverageMatrix {
        tests: rows
            .iter()
            .map(|(id, passed, lines)| TestCoverage {
                id: id.to_string(),
                passed: *passed,
                lines: lines.iter().copied().collect(),
                branches: BTreeSet::new(),
            })
            .collect(),
    }
}

#[test]
fn ochiai_values() {
    let m = cov(&[("f", false, &[1, 2]), ("p1", true, &[2, 3]), ("p2", true, &[2]), ("p3", true, &[2])]);
    let s = ochiai(&m).unwrap();
    assert_eq!(s[&1], 1.0);
    assert_eq!(s[&2], 0.5);
    assert_eq!(s[&3], 0.0);
    assert_eq!(ochiai(&cov(&[("p", true, &[1])])), Err(CoverageError::NoFailingTest));
    assert_eq!(ochiai(&CoverageMatrix::default()), Err(CoverageError::NoFailingTest));
}

#[test]
fn weights_are_reciprocals() {
    assert_eq!(weight_of(0.5), Weight::finite(2, 1));
    assert_eq!(weight_of(1.0), Weight::one());
    assert_eq!(weight_of(0.0), Weight::Top);
    assert_eq!(weight_of(0.25), Weight::finite(4, 1));
}

fn soft(id: u32, line: Label) -> Clause {
    Clause {
        id,
        kind: ClauseKind::Assign,
        constraint: Formula::Const(true),
        origin: Origin::Stmt(StmtId::line(line)),
        hardness: Hardness::Soft,
        weight: None,
        concretized: false,
    }
}

#[test]
fn clause_weights_follow_their_statement() {
    let susp: SuspiciousnessMap = [(2, 0.5), (6, 1.0)].into();
    let mut hard = soft(3, 9);
    hard.hardness = Hardness::Hard;
    let mut cs = vec![soft(1, 2), soft(2, 6), hard, soft(4, 8)];
    to_weights(&susp, &mut cs);
    let ws: Vec<Option<Weight>> = cs.iter().map(|c| c.weight.clone()).collect();
    assert_eq!(ws, [Some(Weight::finite(2, 1)), Some(Weight::one()), None, Some(Weight::Top)]);
}

#[test]
fn coverage_from_running_example() {
    let p = parse_unasserted(P_SOURCE).unwrap();
    let suite = TestSuite {
        output: None,
        fault_lines: vec![6],
        tests: vec![
            TestCase { id: "t1".into(), inputs: [("x".into(), 0), ("y".into(), 0)].into(), expected: None, assert: None },
            TestCase { id: "t2".into(), inputs: [("x".into(), -1), ("y".into(), 7)].into(), expected: None, assert: Some("b > a".into()) },
        ],
    };
    let m = collect_coverage(&p, &suite, Width::W8, 100).unwrap();
    assert!(!m.tests[0].passed && m.tests[1].passed);
    assert_eq!(m.tests[0].lines, [1, 2, 5, 6, 9].into());
    assert_eq!(m.tests[1].branches, [(1, false), (5, false)].into());
    m.validate(&p).unwrap();
    let text = m.dump();
    assert_eq!(text.lines().next().unwrap(), "t1\tfail\t1,2,5,6,9\t1T,5T");
    assert_eq!(CoverageMatrix::parse(&text).unwrap(), m);
}

#[test]
fn coverage_file_errors() {
    for bad in ["t\tpass\t1", "t\tok\t1\t-", "t\tpass\tx\t-", "t\tpass\t1\t5Q", "\tpass\t1\t-"] {
        assert!(CoverageMatrix::parse(bad).is_err(), "{bad}");
    }
    let p = parse_unasserted(P_SOURCE).unwrap();
    let m = CoverageMatrix::parse("t\tfail\t1,42\t-\n").unwrap();
    assert_eq!(m.validate(&p), Err(CoverageError::UnknownLabel { test: "t".into(), label: 42 }));
}

proptest! {
    #[test]
    fn higher_suspicion_means_lower_weight(a in 1e-6f64..=1.0, b in 1e-6f64..=1.0, k in 0.01f64..1.0) {
        let (wa, wb) = (weight_of(a), weight_of(b));
        let (Weight::Finite(ra), Weight::Finite(rb)) = (&wa, &wb) else { panic!() };
        // exact reciprocal
        prop_assert_eq!(ra * BigRational::from_float(a).unwrap(), BigRational::one());
        if a > b {
            prop_assert!(ra < rb);
        }
        // scaling every suspiciousness keeps the order of the weights
        let (Weight::Finite(sa), Weight::Finite(sb)) = (weight_of(a * k), weight_of(b * k)) else { panic!() };
        prop_assert_eq!(ra.cmp(rb), sa.cmp(&sb));
    }
}
