use std::sync::OnceLock;

use regex::Regex;

use super::GraderError;

/// Zero-based option index from a reply such as `option C` or `Option b.`.
pub fn parse_response(text: &str, n_options: usize) -> Result<usize, GraderError> {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    let re = PATTERN.get_or_init(|| Regex::new(r"(?i)^\s*option\s+([A-F])\s*[.!]?\s*$").expect("valid regex"));
    let caps = re
        .captures(text)
        .ok_or_else(|| GraderError::Unparseable(text.to_string()))?;
    let letter = caps[1].chars().next().expect("one letter").to_ascii_uppercase();
    let index = (letter as u8 - b'A') as usize;
    if index >= n_options {
        return Err(GraderError::OptionOutOfRange { letter, n_options });
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(parse_response("option C", 6).unwrap(), 2);
        assert_eq!(parse_response("Option b.", 6).unwrap(), 1);
        assert_eq!(parse_response("  OPTION f!\n", 6).unwrap(), 5);
        assert!(matches!(
            parse_response("option F", 5),
            Err(GraderError::OptionOutOfRange {
                letter: 'F',
                n_options: 5
            })
        ));
    }

    #[test]
    fn rejects_prose_and_ambiguity() {
        for bad in [
            "I think A or B",
            "option A or B",
            "option AB",
            "A",
            "option G",
            "The answer is option A",
            "option A. Because",
            "",
        ] {
            assert!(
                matches!(parse_response(bad, 6), Err(GraderError::Unparseable(_))),
                "{bad}"
            );
        }
    }
}
