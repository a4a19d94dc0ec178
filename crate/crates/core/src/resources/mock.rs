use std::collections::HashMap;

use super::{lexical_relevance, Catalog, CatalogError, CatalogRecord, SearchHit};

/// In-memory catalog loaded from a JSON array of records.
///
/// Search returns every available record with a positive lexical relevance
/// for the topic, without a provider score, so ranking falls back to the
/// deterministic lexical score.
#[derive(Debug, Clone, Default)]
pub struct MockCatalog {
    records: Vec<CatalogRecord>,
    index: HashMap<String, usize>,
}

impl MockCatalog {
    pub fn new(records: Vec<CatalogRecord>) -> Self {
        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.external_id.clone(), i))
            .collect();
        Self { records, index }
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let records: Vec<CatalogRecord> = serde_json::from_str(text).map_err(|e| {
            CatalogError::Malformed(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        Ok(Self::new(records))
    }

    pub fn records(&self) -> &[CatalogRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&CatalogRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }
}

impl Catalog for MockCatalog {
    fn lookup(&self, ids: &[String]) -> Result<Vec<Option<CatalogRecord>>, CatalogError> {
        Ok(ids.iter().map(|id| self.get(id).cloned()).collect())
    }

    fn search(&self, topic: &str) -> Result<Vec<SearchHit>, CatalogError> {
        Ok(self
            .records
            .iter()
            .filter(|r| r.available && lexical_relevance(topic, r) > 0.0)
            .map(|r| SearchHit {
                record: r.clone(),
                score: None,
            })
            .collect())
    }
}
