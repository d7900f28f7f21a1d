//! Test suites: inputs plus the assertion each test checks, either given
//! directly, as an expected value of the output variable, or derived by
//! running a golden version of the program.

use serde::{Deserialize, Serialize};

use crate::arith::{Inputs, Width};
use crate::lang::interp::{self, InputError, Outcome};
use crate::lang::{parse_pred, CmpOp, Expr, Label, LangError, Pred, Program, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCase {
    pub id: String,
    pub inputs: Inputs,
    /// Expected final value of the suite's output variable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<i64>,
    /// Explicit assertion in MiniImp predicate syntax; wins over `expected`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assert: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSuite {
    /// Variable compared against `expected` values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Lines known to be faulty, used only to score reports.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fault_lines: Vec<Label>,
    pub tests: Vec<TestCase>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SuiteError {
    #[error("malformed test suite: {0}")]
    Json(String),
    #[error("test `{0}`: no assertion, no expected value and the program has no assert")]
    NoAssertion(String),
    #[error("test `{0}` has an expected value but the suite names no output variable")]
    NoOutput(String),
    #[error("test `{id}`: {err}")]
    Assertion { id: String, err: LangError },
    #[error("test `{id}`: {err}")]
    Input { id: String, err: InputError },
    #[error("test `{id}`: golden program {what}")]
    Golden { id: String, what: String },
    #[error("duplicate test id `{0}`")]
    DuplicateId(String),
}

/// How a test fares against a program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classified {
    pub id: String,
    pub outcome: Outcome,
}

impl Classified {
    pub fn failed(&self) -> bool {
        self.outcome != Outcome::Passed
    }
}

impl TestSuite {
    pub fn from_json(text: &str) -> Result<TestSuite, SuiteError> {
        let s: TestSuite = serde_json::from_str(text).map_err(|e| SuiteError::Json(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for t in &s.tests {
            if !seen.insert(&t.id) {
                return Err(SuiteError::DuplicateId(t.id.clone()));
            }
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suites always serialize") + "\n"
    }

    pub fn get(&self, id: &str) -> Option<&TestCase> {
        self.tests.iter().find(|t| t.id == id)
    }

    /// Assertion checked by `case`, falling back to the program's own assert.
    pub fn assertion(&self, case: &TestCase, program: &Program) -> Result<Pred, SuiteError> {
        if let Some(a) = &case.assert {
            return parse_pred(a).map_err(|err| SuiteError::Assertion { id: case.id.clone(), err });
        }
        if let Some(v) = case.expected {
            let out = self.output.as_ref().ok_or_else(|| SuiteError::NoOutput(case.id.clone()))?;
            return Ok(output_equals(out, v));
        }
        match program.assertion().map(|s| &s.kind) {
            Some(StmtKind::Assert(p)) => Ok(p.clone()),
            _ => Err(SuiteError::NoAssertion(case.id.clone())),
        }
    }

    /// `program` with the assertion of `case` installed.
    pub fn program_for(&self, case: &TestCase, program: &Program) -> Result<Program, SuiteError> {
        let pred = self.assertion(case, program)?;
        program.with_assertion(pred).map_err(|err| SuiteError::Assertion { id: case.id.clone(), err })
    }

    /// Runs every test against `program`.
    pub fn classify(&self, program: &Program, width: Width, max_iters: u64) -> Result<Vec<Classified>, SuiteError> {
        self.tests
            .iter()
            .map(|t| {
                let p = self.program_for(t, program)?;
                let run = interp::run(&p, &t.inputs, width, max_iters).map_err(|err| SuiteError::Input { id: t.id.clone(), err })?;
                Ok(Classified { id: t.id.clone(), outcome: run.outcome })
            })
            .collect()
    }
}

/// Fills in `expected` for every test that has neither an assertion nor an
/// expected value, from the output of `golden` on its inputs.
pub fn derive_assertions(golden: &Program, suite: &TestSuite, width: Width, max_iters: u64) -> Result<TestSuite, SuiteError> {
    let mut out = suite.clone();
    for t in &mut out.tests {
        if t.assert.is_some() || t.expected.is_some() {
            continue;
        }
        let run = interp::run(golden, &t.inputs, width, max_iters).map_err(|err| SuiteError::Input { id: t.id.clone(), err })?;
        let bad = |what: String| SuiteError::Golden { id: t.id.clone(), what };
        match run.outcome {
            Outcome::Passed | Outcome::Finished => {}
            Outcome::Violated => return Err(bad("violates its own assertion".into())),
            Outcome::Overflow(l) => return Err(bad(format!("overflows at statement {l}"))),
            Outcome::Diverged(l) => return Err(bad(format!("does not terminate at loop {l}"))),
        }
        let var = suite.output.as_ref().ok_or_else(|| SuiteError::NoOutput(t.id.clone()))?;
        let v = run.vars.get(var).ok_or_else(|| bad(format!("never assigns `{var}`")))?;
        t.expected = Some(*v);
    }
    Ok(out)
}

/// Assertion `var == v`.
pub fn output_equals(var: &str, v: i64) -> Pred {
    Pred::Cmp(CmpOp::Eq, Expr::Var(var.to_string()), Expr::Int(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, parse_unasserted, pretty};
    use crate::testing::P_SOURCE;

    const GOLDEN: &str = "\
int P(int x, int y) {
1: if (x >= 0)
2:   a = x;
   else
4:   a = -x;
5: if (y < 5)
6:   b = a - 1;
   else
8:   b = a + 2;
}
";

    fn suite(json: &str) -> TestSuite {
        TestSuite::from_json(json).unwrap()
    }

    #[test]
    fn golden_values_become_expected_outputs() {
        let s = suite(r#"{"output": "b", "tests": [{"id": "t1", "inputs": {"x": 0, "y": 0}}, {"id": "t2", "inputs": {"x": -3, "y": 9}, "assert": "b > 0"}]}"#);
        let golden = parse_unasserted(GOLDEN).unwrap();
        let d = derive_assertions(&golden, &s, Width::W8, 100).unwrap();
        assert_eq!(d.tests[0].expected, Some(-1));
        assert_eq!(d.tests[1], s.tests[1]);
        let faulty = parse_unasserted(P_SOURCE).unwrap().without_assertion();
        let c = d.classify(&faulty, Width::W8, 100).unwrap();
        assert!(c[0].failed() && !c[1].failed());
        let p = d.program_for(&d.tests[0], &faulty).unwrap();
        assert!(pretty(&p).contains("assert(b == -1)"), "{}", pretty(&p));
        assert_eq!(TestSuite::from_json(&d.to_json()).unwrap(), d);
        assert!(derive_assertions(&golden, &TestSuite::default(), Width::W8, 100).unwrap().tests.is_empty());
    }

    #[test]
    fn golden_failing_its_own_assert_is_an_error() {
        let s = suite(r#"{"output": "b", "tests": [{"id": "t1", "inputs": {"x": 0, "y": 0}}]}"#);
        let golden = parse(P_SOURCE).unwrap();
        assert!(matches!(derive_assertions(&golden, &s, Width::W8, 100), Err(SuiteError::Golden { .. })));
    }

    #[test]
    fn missing_assertions_are_reported() {
        let s = suite(r#"{"tests": [{"id": "t1", "inputs": {"x": 0, "y": 0}}, {"id": "t2", "inputs": {"x": 0, "y": 0}, "expected": 1}]}"#);
        let p = parse_unasserted(P_SOURCE).unwrap().without_assertion();
        assert_eq!(s.assertion(&s.tests[0], &p), Err(SuiteError::NoAssertion("t1".into())));
        assert_eq!(s.assertion(&s.tests[1], &p), Err(SuiteError::NoOutput("t2".into())));
        // the program's own assert is the fallback
        let with = parse(P_SOURCE).unwrap();
        assert!(s.assertion(&s.tests[0], &with).is_ok());
    }

    #[test]
    fn malformed_suites() {
        for bad in ["", "{}", r#"{"tests": [{"id": 1, "inputs": {}}]}"#, r#"{"tests": [], "extra": 1}"#] {
            assert!(TestSuite::from_json(bad).is_err(), "{bad}");
        }
        let dup = r#"{"tests": [{"id": "a", "inputs": {}}, {"id": "a", "inputs": {}}]}"#;
        assert_eq!(TestSuite::from_json(dup), Err(SuiteError::DuplicateId("a".into())));
    }
}
