//! Pass/fail lines for verdicts.txt and stdout. One line per check, fixed
//! `name: STATUS detail` shape so downstream scripts can grep them.

/// `FailExpected` marks a check that fails by design of the preset (the
/// experiment exists to exhibit the failure); it reports as
/// `FAIL(expected)` and does not affect the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    FailExpected,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.to_string(),
            status: if passed { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    /// A check whose failure is the anticipated outcome of the preset.
    pub fn expected_failure(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.to_string(),
            status: if passed { Status::Pass } else { Status::FailExpected },
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let status = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::FailExpected => "FAIL(expected)",
        };
        if self.detail.is_empty() {
            format!("{}: {status}", self.name)
        } else {
            format!("{}: {status} {}", self.name, self.detail)
        }
    }
}

pub fn render(verdicts: &[Verdict]) -> String {
    let mut out = String::new();
    for v in verdicts {
        out.push_str(&v.line());
        out.push('\n');
    }
    out
}

/// Count of failures that should fail the run (expected failures excluded).
pub fn hard_failures(verdicts: &[Verdict]) -> usize {
    verdicts.iter().filter(|v| v.status == Status::Fail).count()
}
