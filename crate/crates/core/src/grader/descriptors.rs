use std::collections::HashMap;
use std::sync::OnceLock;

use crate::corpus::CefrBand;
use crate::resources;

use super::{AspectId, GraderError};

/// Per-aspect, per-band descriptor texts.
///
/// File format: a `[aspect name]` header followed by `LEVEL: text` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    texts: HashMap<(AspectId, CefrBand), String>,
}

impl DescriptorSet {
    pub fn parse(content: &str) -> Result<DescriptorSet, GraderError> {
        let err = |line: usize, msg: String| GraderError::Descriptors(format!("line {line}: {msg}"));
        let mut texts = HashMap::new();
        let mut current: Option<AspectId> = None;
        for (n, line) in resources::entries(content) {
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current =
                    Some(AspectId::from_name(name.trim()).ok_or_else(|| err(n, format!("unknown aspect {name:?}")))?);
                continue;
            }
            let aspect = current.ok_or_else(|| err(n, "descriptor before any aspect header".into()))?;
            let (level, text) = line
                .split_once(':')
                .ok_or_else(|| err(n, "expected `LEVEL: text`".into()))?;
            let band: CefrBand = level.parse().map_err(|e| err(n, e))?;
            if !aspect.levels().contains(&band) {
                return Err(err(n, format!("{aspect} has no {band} level")));
            }
            if texts.insert((aspect, band), text.trim().to_string()).is_some() {
                return Err(err(n, format!("duplicate {band} descriptor for {aspect}")));
            }
        }
        for aspect in AspectId::ALL {
            for &band in aspect.levels() {
                if !texts.contains_key(&(aspect, band)) {
                    return Err(GraderError::Descriptors(format!(
                        "missing {band} descriptor for {aspect}"
                    )));
                }
            }
        }
        Ok(DescriptorSet { texts })
    }

    pub fn bundled() -> &'static DescriptorSet {
        static SET: OnceLock<DescriptorSet> = OnceLock::new();
        SET.get_or_init(|| DescriptorSet::parse(resources::DESCRIPTORS).expect("bundled descriptors parse"))
    }

    pub fn text(&self, aspect: AspectId, band: CefrBand) -> Option<&str> {
        self.texts.get(&(aspect, band)).map(String::as_str)
    }

    /// The band whose descriptor is exactly `text`.
    pub fn band_of(&self, aspect: AspectId, text: &str) -> Option<CefrBand> {
        aspect
            .levels()
            .iter()
            .copied()
            .find(|&b| self.text(aspect, b) == Some(text))
    }
}
