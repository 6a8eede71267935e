//! Language identification delegated to an HTTP service.
//!
//! Protocol: `POST <url>` with body `{"text": "..."}`; the response body is
//! `{"lang": "<code>", "confidence": <float>}`.

use std::time::Duration;

use anyhow::{Context, Result};
use serde_json::json;

use curation::{LanguageIdentifier, LanguageVerdict};

pub struct HttpIdentifier {
    url: String,
    agent: ureq::Agent,
}

impl HttpIdentifier {
    /// Checks that the service answers before any document is sent.
    pub fn connect(url: &str) -> Result<Self> {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(30)).build();
        let id = HttpIdentifier { url: url.to_string(), agent };
        id.request("the and of")
            .with_context(|| format!("language identification service at {url} is not usable"))?;
        Ok(id)
    }

    fn request(&self, text: &str) -> Result<LanguageVerdict> {
        let response = self.agent.post(&self.url).send_json(json!({ "text": text }))?;
        Ok(response.into_json()?)
    }
}

impl LanguageIdentifier for HttpIdentifier {
    /// Transient failures label the document undetermined and are logged.
    fn identify(&self, text: &str) -> LanguageVerdict {
        if text.trim().is_empty() {
            return LanguageVerdict::undetermined();
        }
        self.request(text).unwrap_or_else(|e| {
            log::warn!("language identification failed: {e:#}");
            LanguageVerdict::undetermined()
        })
    }
}
