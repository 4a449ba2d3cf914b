use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::label::Label;

/// One manifest row: a claim, its image, and optional annotation fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub claim: String,
    /// Image path, relative to the manifest's directory.
    #[serde(rename = "image")]
    pub image_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Label>,
}

impl Sample {
    /// Structural checks that need no filesystem access.
    pub fn validate(&self) -> Result<(), Error> {
        let reject = |reason| Error::InvalidSample { id: self.id.clone(), reason };
        if self.id.is_empty() {
            return Err(reject("empty id"));
        }
        if self.claim.trim().is_empty() {
            return Err(reject("claim is blank"));
        }
        if self.image_ref.trim().is_empty() {
            return Err(reject("image reference is empty"));
        }
        Ok(())
    }

    pub fn has_description(&self) -> bool {
        self.description.as_deref().is_some_and(|d| !d.trim().is_empty())
    }
}
