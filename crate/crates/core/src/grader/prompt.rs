use std::fmt;
use std::str::FromStr;

use crate::corpus::{EssayRecord, NumericScore};

use super::{option_letter, AspectId, DescriptorPermutation, DescriptorSet, GraderError};

/// Which holistic score, if any, is shown to the grader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PromptCondition {
    GroundTruthScore,
    PredictedScore,
    NoScore,
}

impl PromptCondition {
    pub const ALL: [PromptCondition; 3] = [
        PromptCondition::GroundTruthScore,
        PromptCondition::PredictedScore,
        PromptCondition::NoScore,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptCondition::GroundTruthScore => "gt",
            PromptCondition::PredictedScore => "predicted",
            PromptCondition::NoScore => "none",
        }
    }

    /// The holistic score this condition shows for `essay`.
    pub fn score(self, essay: &EssayRecord) -> Result<Option<NumericScore>, GraderError> {
        let (value, what) = match self {
            PromptCondition::NoScore => return Ok(None),
            PromptCondition::GroundTruthScore => (essay.holistic_gt, "ground-truth"),
            PromptCondition::PredictedScore => (essay.holistic_pred, "predicted"),
        };
        value.map(Some).ok_or_else(|| GraderError::MissingScore {
            id: essay.id.clone(),
            what,
        })
    }
}

impl fmt::Display for PromptCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl serde::Serialize for PromptCondition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl FromStr for PromptCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gt" | "ground-truth" | "ground_truth" => Ok(PromptCondition::GroundTruthScore),
            "predicted" | "pred" => Ok(PromptCondition::PredictedScore),
            "none" | "no-score" | "no_score" => Ok(PromptCondition::NoScore),
            _ => Err(format!(
                "unknown prompt condition {s:?} (expected gt, predicted or none)"
            )),
        }
    }
}

/// Renders the grading prompt. Descriptors appear as `A) text` lines in
/// permutation order; level names never appear.
pub fn build_prompt(
    essay: &EssayRecord,
    aspect: AspectId,
    condition: PromptCondition,
    permutation: &DescriptorPermutation,
    descriptors: &DescriptorSet,
) -> Result<String, GraderError> {
    let score = condition.score(essay)?;
    let mut out = format!("Consider the following essay: {}\n\n", essay.text);
    if let Some(score) = score {
        out.push_str(&format!(
            "It has been given this score on a scale from 1 to 6.5: {score}.\n\n"
        ));
    }
    out.push_str(&format!(
        "I want you to assess it only considering the aspect of {}, for which you have {} different feedback options, that you will have to accept or reject:\n",
        aspect.name(),
        permutation.len()
    ));
    for (i, &band) in permutation.order.iter().enumerate() {
        let text = descriptors
            .text(aspect, band)
            .ok_or_else(|| GraderError::Descriptors(format!("missing {band} descriptor for {aspect}")))?;
        out.push_str(&format!("{}) {}\n", option_letter(i), text));
    }
    let letters: Vec<String> = (0..permutation.len()).map(|i| option_letter(i).to_string()).collect();
    out.push_str(&format!(
        "\nONLY ONE option can be accepted and is the option you will have to output by only selecting the option letter in the following format: 'option {}' WITHOUT ANY ADDITIONAL OBSERVATION, COMMENT, NOTE, EXPLANATION, CLARIFICATION, OR JUSTIFICATION OF ANY SORT.\n\nYour answer:",
        letters.join("/")
    ));
    Ok(out)
}
