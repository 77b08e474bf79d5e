pub mod cli;
pub mod congruence;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod linalg;
pub mod models;
pub mod optimize;
pub mod parallel;
pub mod rootspace;
pub mod subalgebra;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.passed() { "pass" } else { "fail" })
    }
}
