use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{NGramModel, BOS_ID, EOS_ID, UNK_ID};

/// Little-endian binary model layout:
///   magic "ATOMEDLM", version u32, order u32, unk_threshold u64,
///   discounts: order x f64,
///   vocab block: u32 count, then per word u32 byte-length + UTF-8 bytes
///     (ids are 3 + position; 0..3 are UNK/BOS/EOS),
///   count tables: per level u64 entries, each entry k x u32 ids + u64 count.
const MAGIC: &[u8; 8] = b"ATOMEDLM";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not an atomedit model file (bad magic)")]
    BadMagic,
    #[error("unsupported model version {0}")]
    BadVersion(u32),
    #[error("model file is corrupt: {0}")]
    Corrupt(String),
}

pub fn save_model(model: &NGramModel, path: &Path) -> Result<(), ModelIoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(model.order as u32).to_le_bytes())?;
    w.write_all(&model.unk_threshold.to_le_bytes())?;
    for d in &model.discounts {
        w.write_all(&d.to_le_bytes())?;
    }
    let mut words: Vec<(&String, &u32)> = model.vocabulary.iter().collect();
    words.sort_by_key(|(_, &id)| id);
    w.write_all(&(words.len() as u32).to_le_bytes())?;
    for (word, _) in &words {
        w.write_all(&(word.len() as u32).to_le_bytes())?;
        w.write_all(word.as_bytes())?;
    }
    for (k, table) in model.counts.iter().enumerate() {
        let mut entries: Vec<(&Vec<u32>, &u64)> = table.iter().collect();
        entries.sort();
        w.write_all(&(entries.len() as u64).to_le_bytes())?;
        for (gram, &count) in entries {
            debug_assert_eq!(gram.len(), k + 1);
            for id in gram {
                w.write_all(&id.to_le_bytes())?;
            }
            w.write_all(&count.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<NGramModel, ModelIoError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(ModelIoError::BadVersion(version));
    }
    let order = read_u32(&mut r)? as usize;
    if order == 0 || order > 16 {
        return Err(ModelIoError::Corrupt(format!("implausible order {order}")));
    }
    let unk_threshold = read_u64(&mut r)?;
    let mut discounts = Vec::with_capacity(order);
    for _ in 0..order {
        discounts.push(read_f64(&mut r)?);
    }
    let vocab_len = read_u32(&mut r)? as usize;
    let mut vocabulary = HashMap::with_capacity(vocab_len);
    for i in 0..vocab_len {
        let len = read_u32(&mut r)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        let word = String::from_utf8(buf)
            .map_err(|e| ModelIoError::Corrupt(format!("vocab entry {i}: {e}")))?;
        vocabulary.insert(word, 3 + i as u32);
    }
    let mut counts = Vec::with_capacity(order);
    for k in 1..=order {
        let entries = read_u64(&mut r)? as usize;
        let mut table = HashMap::with_capacity(entries);
        for _ in 0..entries {
            let mut gram = Vec::with_capacity(k);
            for _ in 0..k {
                gram.push(read_u32(&mut r)?);
            }
            let count = read_u64(&mut r)?;
            table.insert(gram, count);
        }
        counts.push(table);
    }
    Ok(NGramModel::from_raw(
        order,
        discounts,
        unk_threshold,
        vocabulary,
        counts,
    ))
}

/// Dump the model as ARPA text. Probabilities are the interpolated KN
/// conditionals in log10; backoff weights are the KN interpolation mass
/// of each context.
pub fn write_arpa(model: &NGramModel, mut w: impl Write) -> io::Result<()> {
    let mut id_to_word: HashMap<u32, String> = model
        .vocabulary
        .iter()
        .map(|(word, &id)| (id, word.clone()))
        .collect();
    id_to_word.insert(UNK_ID, "<unk>".to_string());
    id_to_word.insert(BOS_ID, "<s>".to_string());
    id_to_word.insert(EOS_ID, "</s>".to_string());
    let render = |gram: &[u32]| -> String {
        gram.iter()
            .map(|id| id_to_word[id].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };

    writeln!(w, "\\data\\")?;
    for (k, table) in model.counts.iter().enumerate() {
        writeln!(w, "ngram {}={}", k + 1, table.len())?;
    }
    for (k, table) in model.counts.iter().enumerate() {
        writeln!(w)?;
        writeln!(w, "\\{}-grams:", k + 1)?;
        let mut grams: Vec<&Vec<u32>> = table.keys().collect();
        grams.sort();
        for gram in grams {
            let word = *gram.last().unwrap();
            let context = &gram[..gram.len() - 1];
            let p = if word == BOS_ID {
                // BOS is never predicted; ARPA convention pins it near zero
                -99.0
            } else {
                model.prob(context, word).log10()
            };
            write!(w, "{p:.7}\t{}", render(gram))?;
            if k + 1 < model.order {
                if let Some(bow) = backoff_weight(model, gram) {
                    write!(w, "\t{bow:.7}")?;
                }
            }
            writeln!(w)?;
        }
    }
    writeln!(w)?;
    writeln!(w, "\\end\\")?;
    Ok(())
}

fn backoff_weight(model: &NGramModel, context: &[u32]) -> Option<f64> {
    // a gram of length L is a context at level L+1; its stats sit at
    // index L and so does that level's discount
    let stat = model.ctx_stats.get(context.len())?.get(context)?;
    if stat.total == 0 {
        return None;
    }
    let d = model.discounts[context.len()];
    Some((d * stat.distinct as f64 / stat.total as f64).log10())
}

fn read_u32(r: &mut impl BufRead) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl BufRead) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl BufRead) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
