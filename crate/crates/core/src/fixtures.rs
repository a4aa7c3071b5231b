//! Small hand-checkable knowledge bases shared by tests, benches and docs.

use crate::kb::KnowledgeBase;
use crate::supervision::{Question, RawQuestion};

/// Three Turing Award winners with their citizenship and alma mater.
pub const TURING_TSV: &str = "\
Bengio\twin\tTuringAward
Hinton\twin\tTuringAward
Pearl\twin\tTuringAward
Bengio\tcitizen\tCanada
Hinton\tcitizen\tCanada
Pearl\tcitizen\tUSA
Bengio\tgraduate\tMcGill
Hinton\tgraduate\tEdinburgh
Pearl\tgraduate\tUCLA
";

pub fn turing_kb() -> KnowledgeBase {
    KnowledgeBase::from_tsv_str(TURING_TSV, true).expect("fixture parses")
}

pub fn turing_raw_question() -> RawQuestion {
    RawQuestion {
        id: "turing-1".into(),
        question: "Where did Canadian citizens with Turing Award graduate?".into(),
        topic_entities: vec!["TuringAward".into(), "Canada".into()],
        answers: vec!["McGill".into(), "Edinburgh".into()],
    }
}

pub fn turing_question(kb: &KnowledgeBase) -> Question {
    Question::resolve(&turing_raw_question(), kb).question
}
