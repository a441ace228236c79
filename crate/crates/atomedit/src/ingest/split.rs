use std::collections::HashSet;
use std::io;
use std::path::Path;

/// Built-in English abbreviation list, one entry per line, trailing dot
/// included. Versioned with the crate; override with `abbrev_list_path`.
const ENGLISH_ABBREVS: &str = include_str!("abbrev_en.txt");

/// Words after which a period does not end a sentence.
#[derive(Debug, Clone, Default)]
pub struct AbbrevList {
    entries: HashSet<String>,
}

impl AbbrevList {
    /// Built-in list for a language code; empty for languages without one.
    pub fn for_language(language: &str) -> AbbrevList {
        match language.split(['-', '_']).next().unwrap_or(language) {
            "en" => AbbrevList::from_text(ENGLISH_ABBREVS),
            _ => AbbrevList::default(),
        }
    }

    pub fn from_text(text: &str) -> AbbrevList {
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        AbbrevList { entries }
    }

    pub fn from_path(path: &Path) -> io::Result<AbbrevList> {
        Ok(AbbrevList::from_text(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }
}

const CLOSERS: &[char] = &['"', '\'', '\u{201D}', '\u{2019}', ')', ']', '\u{00BB}', '\u{300D}'];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '。' | '！' | '？')
}

fn is_ideograph(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF // kana
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x3001..=0x303F // CJK punctuation
    )
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || is_ideograph(c)
}

/// Rule-based sentence boundary detection: split after sentence-final
/// punctuation (plus trailing close quotes/brackets) when followed by
/// whitespace and an uppercase letter or ideograph, except after an entry
/// in the abbreviation list. Text without terminal punctuation comes back
/// as a single sentence.
pub fn split_sentences(text: &str, abbrevs: &AbbrevList) -> Vec<String> {
    let mut sentences = Vec::new();
    for line in text.lines() {
        split_line(line, abbrevs, &mut sentences);
    }
    sentences
}

fn split_line(line: &str, abbrevs: &AbbrevList, out: &mut Vec<String>) {
    let mut start = 0usize;
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut idx = 0;
    while idx < chars.len() {
        let (pos, c) = chars[idx];
        if is_terminal(c) {
            // absorb closing quotes/brackets into the sentence
            let mut end_idx = idx + 1;
            while end_idx < chars.len() && CLOSERS.contains(&chars[end_idx].1) {
                end_idx += 1;
            }
            let end_pos = chars
                .get(end_idx)
                .map_or(line.len(), |&(p, _)| p);
            // require whitespace, then a sentence-starting character
            let mut next_idx = end_idx;
            let mut saw_space = false;
            while next_idx < chars.len() && chars[next_idx].1.is_whitespace() {
                saw_space = true;
                next_idx += 1;
            }
            let boundary = saw_space
                && next_idx < chars.len()
                && starts_sentence(chars[next_idx].1)
                && !(c == '.' && abbrevs.contains(&preceding_word(line, pos)));
            if boundary {
                let sentence = line[start..end_pos].trim();
                if !sentence.is_empty() {
                    out.push(sentence.to_string());
                }
                start = chars[next_idx].0;
                idx = next_idx;
                continue;
            }
        }
        idx += 1;
    }
    let tail = line[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
}

/// The whitespace-delimited word ending at the period at `dot_pos`,
/// including the period, with leading punctuation trimmed.
fn preceding_word(line: &str, dot_pos: usize) -> String {
    let before = &line[..dot_pos];
    let word_start = before
        .rfind(char::is_whitespace)
        .map_or(0, |p| p + before[p..].chars().next().unwrap().len_utf8());
    let word = &line[word_start..dot_pos + 1];
    word.trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}
