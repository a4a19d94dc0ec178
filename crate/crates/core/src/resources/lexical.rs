use std::collections::BTreeSet;

use super::CatalogRecord;

/// Lowercased alphanumeric tokens.
pub fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Share of the topic's distinct tokens that occur in the record's title,
/// description or topic tags. 0 when the topic has no tokens.
pub fn lexical_relevance(topic: &str, record: &CatalogRecord) -> f64 {
    let query = tokens(topic);
    if query.is_empty() {
        return 0.0;
    }
    let mut doc = tokens(&record.title);
    doc.extend(tokens(&record.description));
    for t in &record.topics {
        doc.extend(tokens(t));
    }
    let hits = query.iter().filter(|t| doc.contains(*t)).count();
    hits as f64 / query.len() as f64
}
