//! Held-out evaluation sets: files named `<pair>.<side>.txt` (for example
//! `en-hi.en.txt`, `en-hi.hi.txt`) with one sentence per line.

use std::collections::BTreeMap;
use std::path::Path;

use bitext_core::lang::LanguageCode;
use bitext_core::refine::HeldOutSet;

use super::read_lines;
use crate::error::{BitextError, Result};

pub fn read_heldout_dir(dir: &Path) -> Result<Vec<HeldOutSet>> {
    let entries = std::fs::read_dir(dir).map_err(|e| BitextError::io(dir, e))?;
    let mut files: Vec<_> = entries
        .map(|e| e.map(|e| e.path()).map_err(|err| BitextError::io(dir, err)))
        .collect::<Result<_>>()?;
    files.sort();
    let mut sets: BTreeMap<String, HeldOutSet> = BTreeMap::new();
    for path in files {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_suffix(".txt") else {
            continue;
        };
        let Some((pair, side)) = stem.rsplit_once('.') else {
            return Err(BitextError::format(&path, "expected <pair>.<side>.txt"));
        };
        let langs: Vec<&str> = pair.split('-').collect();
        let [a, b] = langs[..] else {
            return Err(BitextError::format(&path, format!("pair {pair:?} is not of the form en-xx")));
        };
        if !langs.contains(&side) {
            return Err(BitextError::format(&path, format!("side {side:?} is not in pair {pair:?}")));
        }
        let other = if a == "en" { b } else { a };
        let other = LanguageCode::new(other)?;
        let set = sets
            .entry(pair.to_string())
            .or_insert_with(|| HeldOutSet::new(pair, other));
        for line in read_lines(&path)? {
            if side == "en" {
                set.add_english(&line);
            } else {
                set.add_other(&line);
            }
        }
    }
    Ok(sets.into_values().collect())
}

pub fn write_heldout(dir: &Path, pair: &str, side: &str, sentences: &[String]) -> Result<()> {
    let path = dir.join(format!("{pair}.{side}.txt"));
    let mut body = sentences.join("\n");
    body.push('\n');
    std::fs::create_dir_all(dir).map_err(|e| BitextError::io(dir, e))?;
    std::fs::write(&path, body).map_err(|e| BitextError::io(&path, e))
}
