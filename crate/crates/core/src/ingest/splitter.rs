//! Rule-based sentence splitting and tokenization.
//!
//! The splitter breaks on `.`, `?`, and `!` followed by whitespace and an
//! uppercase/digit/quote start, with an abbreviation guard. Anything fancier
//! can be plugged in by constructing a [`SentenceSplitter`] with a custom
//! abbreviation list.

/// Abbreviations that do not end a sentence (matched case-sensitively,
/// without the trailing period).
const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Dr", "Mr", "Mrs", "Ms", "Prof", "St", "Jr", "Sr", "Rev", "Gen", "Col", "Capt", "Lt", "Sgt",
    "vs", "etc", "e.g", "i.e", "cf", "al", "Inc", "Ltd", "Co", "Corp", "Univ", "No", "Vol", "pp",
    "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep", "Sept", "Oct", "Nov", "Dec",
];

pub struct SentenceSplitter {
    abbreviations: Vec<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter {
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SentenceSplitter {
    pub fn with_abbreviations(abbreviations: Vec<String>) -> Self {
        SentenceSplitter { abbreviations }
    }

    /// Splits a paragraph into trimmed sentences. Concatenating the results
    /// equals the paragraph modulo whitespace (the partition invariant).
    pub fn split(&self, paragraph: &str) -> Vec<String> {
        let chars: Vec<char> = paragraph.chars().collect();
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c == '.' || c == '?' || c == '!' {
                // Consume any run of closing punctuation after the terminator.
                let mut end = i + 1;
                while end < chars.len() && matches!(chars[end], '"' | '\'' | ')' | ']' | '.') {
                    end += 1;
                }
                let boundary = end >= chars.len()
                    || (chars[end].is_whitespace()
                        && next_starts_sentence(&chars, end)
                        && !(c == '.' && self.is_abbreviation(&chars, start, i)));
                if boundary {
                    let text: String = chars[start..end].iter().collect();
                    let trimmed = text.trim();
                    if !trimmed.is_empty() {
                        sentences.push(trimmed.to_string());
                    }
                    start = end;
                    i = end;
                    continue;
                }
            }
            i += 1;
        }
        let tail: String = chars[start..].iter().collect();
        let trimmed = tail.trim();
        if !trimmed.is_empty() {
            sentences.push(trimmed.to_string());
        }
        sentences
    }

    fn is_abbreviation(&self, chars: &[char], start: usize, period: usize) -> bool {
        // Word immediately preceding the period, sans leading punctuation.
        let mut word_start = period;
        while word_start > start {
            let prev = chars[word_start - 1];
            if prev.is_whitespace() || prev == '(' || prev == '"' {
                break;
            }
            word_start -= 1;
        }
        let word: String = chars[word_start..period].iter().collect();
        if word.is_empty() {
            return false;
        }
        // Single capital letters ("H. Bruce Franklin") are initials.
        if word.chars().count() == 1 && word.chars().next().unwrap().is_uppercase() {
            return true;
        }
        self.abbreviations.iter().any(|a| a == &word)
    }
}

fn next_starts_sentence(chars: &[char], mut pos: usize) -> bool {
    while pos < chars.len() && chars[pos].is_whitespace() {
        pos += 1;
    }
    match chars.get(pos) {
        None => true,
        Some(c) => c.is_uppercase() || c.is_numeric() || matches!(c, '"' | '\'' | '('),
    }
}

/// Whitespace-and-punctuation tokenizer.
///
/// Splits on whitespace, then peels leading/trailing punctuation into
/// separate tokens. Internal hyphens, apostrophes, and periods stay attached
/// ("U.S.", "mid-1920s"). Concatenating the tokens reproduces the input with
/// all whitespace removed.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut lo = 0;
        let mut hi = chars.len();
        let mut leading = Vec::new();
        while lo < hi && is_peelable(chars[lo]) {
            leading.push(chars[lo].to_string());
            lo += 1;
        }
        let mut trailing = Vec::new();
        while hi > lo && is_peelable_trailing(&chars[lo..hi]) {
            trailing.push(chars[hi - 1].to_string());
            hi -= 1;
        }
        tokens.extend(leading);
        if lo < hi {
            tokens.push(chars[lo..hi].iter().collect());
        }
        tokens.extend(trailing.into_iter().rev());
    }
    tokens
}

fn is_peelable(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | ';' | ':' | '!' | '?' | '(' | ')' | '[' | ']' | '{' | '}' | '"' | '\''
            | '“' | '”' | '‘' | '’' | '«' | '»'
    )
}

fn is_peelable_trailing(chars: &[char]) -> bool {
    let last = *chars.last().unwrap();
    if !is_peelable(last) {
        return false;
    }
    // Keep the final period of dotted abbreviations ("U.S.") attached: only
    // peel a trailing '.' when the remainder contains no internal period.
    if last == '.' && chars.len() >= 2 {
        let body = &chars[..chars.len() - 1];
        if body.contains(&'.') && body.last() != Some(&'.') {
            return false;
        }
    }
    true
}
