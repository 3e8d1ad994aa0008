//! The golden histories used by the demos and the acceptance suites.

use crate::histories::Execution;

pub const FIG3: &str = include_str!("../assets/fig3.hist");
pub const FIG4: &str = include_str!("../assets/fig4.hist");
pub const VALIDITY: &str = include_str!("../assets/fig_validity.hist");
pub const VALIDITY_ABORT: &str = include_str!("../assets/fig_validity_abort.hist");
pub const VALIDITY_MISLEAD: &str = include_str!("../assets/fig_validity_mislead.hist");
pub const LEMMA1_ALPHA1: &str = include_str!("../assets/lemma1_alpha1.hist");
pub const LEMMA1_ALPHA2: &str = include_str!("../assets/lemma1_alpha2.hist");
pub const LEMMA1_ALPHA3: &str = include_str!("../assets/lemma1_alpha3.hist");

/// The write-snapshot run where two processes return each other's values
/// and a third runs strictly after.
pub fn fig3() -> Execution {
    Execution::parse(FIG3).expect("golden history parses")
}

/// The write-snapshot run that is interval- but not set-linearizable.
pub fn fig4() -> Execution {
    Execution::parse(FIG4).expect("golden history parses")
}

pub fn validity_execution() -> Execution {
    Execution::parse(VALIDITY).expect("golden history parses")
}

pub fn validity_abort_execution() -> Execution {
    Execution::parse(VALIDITY_ABORT).expect("golden history parses")
}

/// The history whose prefix "predicts" an invocation that has not
/// happened; it violates the validity task's prefix condition.
pub fn validity_mislead() -> Execution {
    Execution::parse(VALIDITY_MISLEAD).expect("golden history parses")
}

pub fn lemma1_alpha1() -> Execution {
    Execution::parse(LEMMA1_ALPHA1).expect("golden history parses")
}

pub fn lemma1_alpha2() -> Execution {
    Execution::parse(LEMMA1_ALPHA2).expect("golden history parses")
}

pub fn lemma1_alpha3() -> Execution {
    Execution::parse(LEMMA1_ALPHA3).expect("golden history parses")
}
