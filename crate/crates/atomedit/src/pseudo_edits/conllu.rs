use std::io::BufRead;

use thiserror::Error;

/// A dependency-parsed sentence read from CoNLL-U. Head indices are
/// 1-based with 0 meaning root, as in the file format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSentence {
    pub tokens: Vec<String>,
    pub pos: Vec<String>,
    pub heads: Vec<usize>,
    pub deprels: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("sentence starting at line {line}: {message}")]
    BadSentence { line: usize, message: String },
}

/// Read sentences from a CoNLL-U stream. Multiword-token ranges and empty
/// nodes are skipped; a sentence violating the tree invariant becomes an
/// `Err` item and the stream continues.
pub fn read_conllu(
    reader: impl BufRead,
) -> impl Iterator<Item = Result<ParsedSentence, ConlluError>> {
    ConlluReader {
        lines: reader.lines(),
        line_no: 0,
    }
}

struct ConlluReader<B: BufRead> {
    lines: std::io::Lines<B>,
    line_no: usize,
}

impl<B: BufRead> Iterator for ConlluReader<B> {
    type Item = Result<ParsedSentence, ConlluError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut block: Vec<String> = Vec::new();
        let mut start_line = self.line_no + 1;
        loop {
            match self.lines.next() {
                Some(Err(e)) => return Some(Err(e.into())),
                Some(Ok(line)) => {
                    self.line_no += 1;
                    if line.trim().is_empty() {
                        if block.is_empty() {
                            start_line = self.line_no + 1;
                            continue;
                        }
                        break;
                    }
                    if line.starts_with('#') {
                        continue;
                    }
                    block.push(line);
                }
                None => {
                    if block.is_empty() {
                        return None;
                    }
                    break;
                }
            }
        }
        Some(parse_block(&block, start_line))
    }
}

fn parse_block(lines: &[String], start_line: usize) -> Result<ParsedSentence, ConlluError> {
    let bad = |message: String| ConlluError::BadSentence {
        line: start_line,
        message,
    };
    let mut tokens = Vec::new();
    let mut pos = Vec::new();
    let mut heads = Vec::new();
    let mut deprels = Vec::new();
    for line in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 8 {
            return Err(bad(format!("expected >= 8 columns, got {}", cols.len())));
        }
        let id = cols[0];
        // multiword-token ranges (1-2) and empty nodes (1.1) are skipped
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let idx: usize = id
            .parse()
            .map_err(|_| bad(format!("bad token id {id:?}")))?;
        if idx != tokens.len() + 1 {
            return Err(bad(format!("non-sequential token id {id:?}")));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| bad(format!("bad head {:?}", cols[6])))?;
        tokens.push(cols[1].to_string());
        pos.push(cols[3].to_string());
        heads.push(head);
        deprels.push(cols[7].to_string());
    }
    if tokens.is_empty() {
        return Err(bad("empty sentence".to_string()));
    }
    validate_tree(&heads).map_err(bad)?;
    Ok(ParsedSentence {
        tokens,
        pos,
        heads,
        deprels,
    })
}

/// The heads must form a single tree rooted at 0: one root, all heads in
/// range, no cycles.
fn validate_tree(heads: &[usize]) -> Result<(), String> {
    let n = heads.len();
    let roots = heads.iter().filter(|&&h| h == 0).count();
    if roots != 1 {
        return Err(format!("expected exactly one root, found {roots}"));
    }
    for (i, &h) in heads.iter().enumerate() {
        if h > n {
            return Err(format!("head {h} of token {} out of range", i + 1));
        }
        // walk to the root; a cycle never reaches it
        let mut cur = h;
        let mut steps = 0;
        while cur != 0 {
            cur = heads[cur - 1];
            steps += 1;
            if steps > n {
                return Err(format!("head cycle involving token {}", i + 1));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    const VALID: &str = "\
1\tThe\tthe\tDET\tDT\t_\t2\tdet\t_\t_
2\tcat\tcat\tNOUN\tNN\t_\t3\tnsubj\t_\t_
3\tsat\tsit\tVERB\tVBD\t_\t0\troot\t_\t_
";

    #[test]
    fn valid_block_parses() {
        let sents: Vec<_> = read_conllu(Cursor::new(VALID)).collect();
        assert_eq!(sents.len(), 1);
        let s = sents[0].as_ref().unwrap();
        assert_eq!(s.tokens, vec!["The", "cat", "sat"]);
        assert_eq!(s.heads, vec![2, 3, 0]);
        assert_eq!(s.deprels[1], "nsubj");
    }

    #[test]
    fn cycle_yields_error_and_stream_continues() {
        let text = "\
1\ta\t_\tX\t_\t_\t2\tdep\t_\t_
2\tb\t_\tX\t_\t_\t1\tdep\t_\t_

1\tok\t_\tX\t_\t_\t0\troot\t_\t_
";
        let sents: Vec<_> = read_conllu(Cursor::new(text)).collect();
        assert_eq!(sents.len(), 2);
        assert!(sents[0].is_err());
        assert!(sents[1].is_ok());
    }

    #[test]
    fn two_blocks_two_sentences() {
        let text = format!("{VALID}\n{VALID}");
        let sents: Vec<_> = read_conllu(Cursor::new(text)).collect();
        assert_eq!(sents.len(), 2);
        assert!(sents.iter().all(|s| s.is_ok()));
    }

    #[test]
    fn multiword_range_skipped() {
        let text = "\
1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_
1\tde\t_\tADP\t_\t_\t3\tcase\t_\t_
2\tel\t_\tDET\t_\t_\t3\tdet\t_\t_
3\tmar\t_\tNOUN\t_\t_\t0\troot\t_\t_
";
        let sents: Vec<_> = read_conllu(Cursor::new(text)).collect();
        let s = sents[0].as_ref().unwrap();
        assert_eq!(s.tokens.len(), 3);
    }

    #[test]
    fn multi_root_rejected() {
        let text = "\
1\ta\t_\tX\t_\t_\t0\troot\t_\t_
2\tb\t_\tX\t_\t_\t0\troot\t_\t_
";
        let sents: Vec<_> = read_conllu(Cursor::new(text)).collect();
        assert!(sents[0].is_err());
    }
}
