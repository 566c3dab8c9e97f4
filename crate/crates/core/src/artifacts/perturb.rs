//! Name perturbation for robustness runs.
//!
//! A perturbed variant of the gold model differs only by a bijective
//! renaming of variables, actions, and state-value strings; structure
//! is untouched. Restyling keeps each name's letter sequence and varies
//! case and underscore placement only, so a name mapper that normalizes
//! those is expected to recover the original vocabulary.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mapping::{model_elements, MappingError};
use crate::tla::lexer::{lex, Tok};

/// A perturbed model plus the audit table that produced it.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub model: String,
    /// Original name to perturbed name; identity entries included.
    pub renames: BTreeMap<String, String>,
}

fn split_words(name: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut cur = String::new();
    for ch in name.chars() {
        if ch == '_' {
            if !cur.is_empty() {
                words.push(std::mem::take(&mut cur));
            }
        } else if ch.is_uppercase()
            && cur.chars().last().is_some_and(|c| c.is_lowercase())
        {
            words.push(std::mem::take(&mut cur));
            cur.push(ch);
        } else {
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    words
}

#[derive(Clone, Copy)]
enum Style {
    Pascal,
    Camel,
    Snake,
    Scream,
    Flat,
}

const STYLES: [Style; 5] = [
    Style::Pascal,
    Style::Camel,
    Style::Snake,
    Style::Scream,
    Style::Flat,
];

fn restyle(name: &str, style: Style) -> String {
    let words = split_words(name);
    let cap = |w: &str| {
        let mut cs = w.chars();
        match cs.next() {
            Some(first) => first.to_uppercase().chain(cs.flat_map(char::to_lowercase)).collect(),
            None => String::new(),
        }
    };
    match style {
        Style::Pascal => words.iter().map(|w| cap(w)).collect(),
        Style::Camel => words
            .iter()
            .enumerate()
            .map(|(i, w)| if i == 0 { w.to_lowercase() } else { cap(w) })
            .collect(),
        Style::Snake => words
            .iter()
            .map(|w| w.to_lowercase())
            .collect::<Vec<_>>()
            .join("_"),
        Style::Scream => words
            .iter()
            .map(|w| w.to_uppercase())
            .collect::<Vec<_>>()
            .join("_"),
        Style::Flat => words.iter().map(|w| w.to_lowercase()).collect(),
    }
}

/// Rewrites identifiers and string literals per the rename table,
/// preserving all other text byte for byte.
pub fn apply_renames(
    model: &str,
    renames: &BTreeMap<String, String>,
) -> Result<String, MappingError> {
    let toks = lex(model).map_err(|e| MappingError::SpecUnparseable(e.to_string()))?;
    let mut out = String::with_capacity(model.len());
    let mut pos = 0usize;
    for t in &toks {
        out.push_str(&model[pos..t.span.start]);
        match &t.tok {
            Tok::Ident(n) if renames.contains_key(n) => out.push_str(&renames[n]),
            Tok::Str(s) if renames.contains_key(s) => {
                out.push('"');
                out.push_str(&renames[s]);
                out.push('"');
            }
            _ => out.push_str(&model[t.span.start..t.span.end]),
        }
        pos = t.span.end;
    }
    out.push_str(&model[pos..]);
    Ok(out)
}

/// Applies a seeded bijective restyling to the model's variables,
/// actions, and state-value strings. Seed 0 is the identity: the model
/// comes back byte-identical. A restyle that would collide with any
/// other name in the module falls back to identity, keeping the table
/// bijective.
pub fn perturb_gold(
    model: &str,
    config: &str,
    seed: u64,
) -> Result<Perturbation, MappingError> {
    let elements = model_elements(model, config)?;
    let mut targets: BTreeSet<String> = BTreeSet::new();
    targets.extend(elements.variables.iter().cloned());
    targets.extend(elements.actions.iter().cloned());
    targets.extend(elements.string_values.iter().cloned());

    if seed == 0 {
        let renames = targets.iter().map(|n| (n.clone(), n.clone())).collect();
        return Ok(Perturbation { model: model.to_string(), renames });
    }

    let toks = lex(model).map_err(|e| MappingError::SpecUnparseable(e.to_string()))?;
    let mut reserved: BTreeSet<String> = toks
        .iter()
        .filter_map(|t| match &t.tok {
            Tok::Ident(n) if !targets.contains(n) => Some(n.clone()),
            _ => None,
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut renames = BTreeMap::new();
    for name in &targets {
        let style = STYLES[rng.gen_range(0..STYLES.len())];
        let mut candidate = restyle(name, style);
        if candidate != *name && reserved.contains(&candidate) {
            candidate = name.clone();
        }
        reserved.insert(candidate.clone());
        renames.insert(name.clone(), candidate);
    }

    let model = apply_renames(model, &renames)?;
    Ok(Perturbation { model, renames })
}
