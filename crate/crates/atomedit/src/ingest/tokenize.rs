use super::Sentence;

fn is_cjk_language(language: &str) -> bool {
    matches!(
        language.split(['-', '_']).next().unwrap_or(language),
        "ja" | "zh"
    )
}

/// Whitespace-and-punctuation tokenization for space-delimited languages,
/// single-codepoint tokens for Japanese and Chinese. Offsets are byte
/// ranges into the original string.
pub fn tokenize(text: &str, language: &str) -> Sentence {
    let mut tokens = Vec::new();
    let mut byte_offsets = Vec::new();
    if is_cjk_language(language) {
        for (i, c) in text.char_indices() {
            if c.is_whitespace() {
                continue;
            }
            tokens.push(c.to_string());
            byte_offsets.push((i, i + c.len_utf8()));
        }
    } else {
        let mut word_start: Option<usize> = None;
        for (i, c) in text.char_indices() {
            if c.is_alphanumeric() {
                if word_start.is_none() {
                    word_start = Some(i);
                }
            } else {
                if let Some(start) = word_start.take() {
                    tokens.push(text[start..i].to_string());
                    byte_offsets.push((start, i));
                }
                if !c.is_whitespace() {
                    // every punctuation codepoint is its own token
                    tokens.push(c.to_string());
                    byte_offsets.push((i, i + c.len_utf8()));
                }
            }
        }
        if let Some(start) = word_start {
            tokens.push(text[start..].to_string());
            byte_offsets.push((start, text.len()));
        }
    }
    Sentence {
        text: text.to_string(),
        tokens,
        byte_offsets,
    }
}
