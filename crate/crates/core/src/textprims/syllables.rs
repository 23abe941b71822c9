use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0:?} contains no letters")]
pub struct InvalidWord(pub String);

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Heuristic syllable count.
///
/// Counts maximal groups of a/e/i/o/u/y in the case-folded letters, drops one
/// for a silent final "e", and never returns less than one. A final "le" after
/// a consonant ("table") is not silent: its "e" always forms its own group.
pub fn count_syllables(word: &str) -> Result<usize, InvalidWord> {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return Err(InvalidWord(word.to_string()));
    }
    let mut groups = 0;
    let mut in_group = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    let n = letters.len();
    let consonant_le = n >= 3 && letters[n - 2] == 'l' && letters[n - 1] == 'e' && !is_vowel(letters[n - 3]);
    if letters[n - 1] == 'e' && !consonant_le && groups > 1 {
        groups -= 1;
    }
    Ok(groups.max(1))
}
