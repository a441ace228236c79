/// Tags whose entire content is dropped, not just the tag itself.
const DROP_CONTENT_TAGS: &[&str] = &[
    "ref",
    "math",
    "gallery",
    "timeline",
    "imagemap",
    "source",
    "syntaxhighlight",
    "score",
];

const DROP_LINK_PREFIXES: &[&str] = &["file:", "image:", "category:", "media:"];

/// Best-effort wikitext/HTML to plain text. Templates, tables, references
/// and comments are dropped; links keep their display label; emphasis
/// markers are removed; unknown constructs pass through as literal text.
/// Whitespace is normalized to single spaces within lines.
pub fn strip_markup(body: &str) -> String {
    // Run to a fixpoint so nested leftovers from one pass are cleaned up
    // by the next; real pages converge in one or two passes.
    let mut cur = strip_once(body);
    for _ in 0..8 {
        let next = strip_once(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn strip_once(body: &str) -> String {
    let stripped = strip_inline(body);
    normalize_lines(&stripped)
}

fn strip_inline(body: &str) -> String {
    let bytes = body.as_bytes();
    let mut out = String::with_capacity(body.len());
    let mut i = 0;
    while i < bytes.len() {
        let rest = &body[i..];
        if rest.starts_with("<!--") {
            match rest.find("-->") {
                Some(end) => {
                    i += end + 3;
                    continue;
                }
                None => {
                    i = bytes.len();
                    continue;
                }
            }
        }
        if rest.starts_with("{{") {
            if let Some(len) = balanced_len(rest, "{{", "}}") {
                i += len;
                continue;
            }
        }
        if rest.starts_with("{|") {
            if let Some(len) = balanced_len(rest, "{|", "|}") {
                i += len;
                continue;
            }
        }
        if rest.starts_with("[[") {
            if let Some(len) = balanced_len(rest, "[[", "]]") {
                let inner = &rest[2..len - 2];
                out.push_str(&wiki_link_text(inner));
                i += len;
                continue;
            }
        }
        if rest.starts_with('[') && is_external_link_start(&rest[1..]) {
            if let Some(end) = rest.find(']') {
                let inner = &rest[1..end];
                if let Some(space) = inner.find(' ') {
                    out.push_str(&inner[space + 1..]);
                }
                i += end + 1;
                continue;
            }
        }
        if rest.starts_with("'''''") {
            i += 5;
            continue;
        }
        if rest.starts_with("'''") {
            i += 3;
            continue;
        }
        if rest.starts_with("''") {
            i += 2;
            continue;
        }
        if rest.starts_with('<') {
            if let Some(skip) = tag_len(rest) {
                i += skip;
                continue;
            }
        }
        if rest.starts_with("&nbsp;") {
            out.push(' ');
            i += 6;
            continue;
        }
        if rest.starts_with("&amp;") {
            out.push('&');
            i += 5;
            continue;
        }
        if rest.starts_with("&quot;") {
            out.push('"');
            i += 6;
            continue;
        }
        let c = rest.chars().next().unwrap();
        out.push(c);
        i += c.len_utf8();
    }
    out
}

/// Length of the balanced `open`..`close` construct at the start of `s`,
/// or None when unbalanced (caller then treats it as literal text).
fn balanced_len(s: &str, open: &str, close: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = 0;
    while i < s.len() {
        if s[i..].starts_with(open) {
            depth += 1;
            i += open.len();
        } else if s[i..].starts_with(close) {
            depth -= 1;
            i += close.len();
            if depth == 0 {
                return Some(i);
            }
        } else {
            i += s[i..].chars().next().unwrap().len_utf8();
        }
    }
    None
}

/// Display text of an internal link body (the part between `[[` and `]]`).
fn wiki_link_text(inner: &str) -> String {
    let lower = inner.to_ascii_lowercase();
    let target = lower.trim_start_matches(':');
    if DROP_LINK_PREFIXES.iter().any(|p| target.starts_with(p)) {
        return String::new();
    }
    // label after the last top-level pipe, else the whole target
    let label = match split_top_level_pipes(inner).into_iter().last() {
        Some(l) => l,
        None => inner,
    };
    label.trim_start_matches('#').to_string()
}

fn split_top_level_pipes(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    let mut i = 0;
    while i < s.len() {
        if s[i..].starts_with("[[") {
            depth += 1;
            i += 2;
        } else if s[i..].starts_with("]]") {
            depth = depth.saturating_sub(1);
            i += 2;
        } else if s[i..].starts_with('|') && depth == 0 {
            parts.push(&s[start..i]);
            i += 1;
            start = i;
        } else {
            i += s[i..].chars().next().unwrap().len_utf8();
        }
    }
    parts.push(&s[start..]);
    parts
}

fn is_external_link_start(s: &str) -> bool {
    s.starts_with("http://")
        || s.starts_with("https://")
        || s.starts_with("ftp://")
        || s.starts_with("//")
}

/// Byte length of the HTML tag (or dropped container) at the start of `s`,
/// or None when `<` does not open a tag.
fn tag_len(s: &str) -> Option<usize> {
    debug_assert!(s.starts_with('<'));
    let after = &s[1..];
    let is_tag = after.starts_with('/')
        || after.starts_with('!')
        || after.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
    if !is_tag {
        return None;
    }
    let close = s.find('>')?;
    let tag_body = &s[1..close];
    let name: String = tag_body
        .trim_start_matches('/')
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    let self_closing = tag_body.ends_with('/');
    if !self_closing && !tag_body.starts_with('/') && DROP_CONTENT_TAGS.contains(&name.as_str()) {
        let closing = format!("</{name}");
        let lower = s.to_ascii_lowercase();
        if let Some(pos) = lower[close..].find(&closing) {
            let after_close = close + pos;
            if let Some(end) = s[after_close..].find('>') {
                return Some(after_close + end + 1);
            }
        }
        // unterminated container: drop the rest of the text
        return Some(s.len());
    }
    Some(close + 1)
}

fn normalize_lines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let line = strip_heading(line);
        let line = line.trim_start_matches(['*', '#', ':', ';']);
        if line.chars().all(|c| c == '-') && line.len() >= 4 {
            out.push('\n');
            continue;
        }
        let mut prev_space = true; // trims leading whitespace
        let mut trimmed = String::with_capacity(line.len());
        for c in line.chars() {
            if c.is_whitespace() {
                if !prev_space {
                    trimmed.push(' ');
                    prev_space = true;
                }
            } else {
                trimmed.push(c);
                prev_space = false;
            }
        }
        out.push_str(trimmed.trim_end());
        out.push('\n');
    }
    let out = out.trim_end_matches('\n');
    out.to_string()
}

fn strip_heading(line: &str) -> &str {
    let t = line.trim();
    for eq in (2..=6).rev() {
        let marker = "=".repeat(eq);
        if t.len() > 2 * eq && t.starts_with(&marker) && t.ends_with(&marker) {
            return t[eq..t.len() - eq].trim();
        }
    }
    line
}
