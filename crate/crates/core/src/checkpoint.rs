//! Versioned JSON container for trained parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::ScorerParams;
use crate::error::{Error, Result};
use crate::reasoner::ReasonerParams;

pub const CHECKPOINT_FORMAT: &str = "srkbqa-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    /// Digest of the KB artifact the parameters were trained against.
    pub kb_digest: Option<String>,
    pub scorer: Option<ScorerParams>,
    pub reasoner: Option<ReasonerParams>,
}

impl Checkpoint {
    pub fn new(kb_digest: Option<String>, scorer: Option<ScorerParams>, reasoner: Option<ReasonerParams>) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            kb_digest,
            scorer,
            reasoner,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unexpected format `{}`", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        if let Some(s) = &ck.scorer {
            s.validate()?;
        }
        if let Some(r) = &ck.reasoner {
            r.validate()?;
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn require_scorer(&self) -> Result<&ScorerParams> {
        self.scorer
            .as_ref()
            .ok_or_else(|| Error::Checkpoint("checkpoint holds no retriever parameters".into()))
    }

    pub fn require_reasoner(&self) -> Result<&ReasonerParams> {
        self.reasoner
            .as_ref()
            .ok_or_else(|| Error::Checkpoint("checkpoint holds no reasoner parameters".into()))
    }

    /// Fails when the checkpoint was trained against a different KB.
    pub fn check_kb(&self, digest: &str) -> Result<()> {
        match &self.kb_digest {
            Some(d) if d != digest => Err(Error::Checkpoint(format!(
                "checkpoint was trained on KB {d}, not {digest}"
            ))),
            _ => Ok(()),
        }
    }
}
