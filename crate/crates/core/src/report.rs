//! Named exact comparisons, printed as `CHECK <name> PASS|FAIL <lhs> <cmp> <rhs>`.

use std::fmt;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub lhs: Scalar,
    pub cmp: &'static str,
    pub rhs: Scalar,
}

impl Check {
    pub fn le(name: impl Into<String>, lhs: Scalar, rhs: Scalar) -> Self {
        Check { name: name.into(), pass: lhs <= rhs, lhs, cmp: "<=", rhs }
    }

    pub fn ge(name: impl Into<String>, lhs: Scalar, rhs: Scalar) -> Self {
        Check { name: name.into(), pass: lhs >= rhs, lhs, cmp: ">=", rhs }
    }

    pub fn eq(name: impl Into<String>, lhs: Scalar, rhs: Scalar) -> Self {
        Check { name: name.into(), pass: lhs == rhs, lhs, cmp: "==", rhs }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "CHECK {} {} {} {} {}", self.name, verdict, self.lhs, self.cmp, self.rhs)
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
