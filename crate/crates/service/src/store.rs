//! Versioned plan storage in a single redb file.
//!
//! Plan documents and traces are keyed by `(plan_id, version)`; a head
//! table holds the latest version of each plan. Writes go through
//! [`PlanStore::append`], a compare-and-append inside one write
//! transaction, so concurrent edits of the same plan cannot both land.
//! Stored documents are never rewritten.

use std::path::Path;

use redb::{Database, ReadableDatabase, ReadableTable, ReadableTableMetadata, TableDefinition};
use thiserror::Error;

const PLANS: TableDefinition<(&str, u64), &str> = TableDefinition::new("plans");
const TRACES: TableDefinition<(&str, u64), &str> = TableDefinition::new("traces");
const HEADS: TableDefinition<&str, u64> = TableDefinition::new("heads");
const SESSIONS: TableDefinition<&str, &str> = TableDefinition::new("sessions");

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage failure: {0}")]
    Db(#[from] redb::Error),
    #[error("version conflict: plan `{plan_id}` is at version {current}")]
    Conflict { plan_id: String, current: u64 },
    #[error("version {version} cannot follow version {expected}")]
    NotNext { expected: u64, version: u64 },
}

fn db_err<E: Into<redb::Error>>(e: E) -> StoreError {
    StoreError::Db(e.into())
}

pub struct PlanStore {
    db: Database,
}

impl PlanStore {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let db = Database::create(path).map_err(db_err)?;
        let txn = db.begin_write().map_err(db_err)?;
        txn.open_table(PLANS).map_err(db_err)?;
        txn.open_table(TRACES).map_err(db_err)?;
        txn.open_table(HEADS).map_err(db_err)?;
        txn.open_table(SESSIONS).map_err(db_err)?;
        txn.commit().map_err(db_err)?;
        Ok(Self { db })
    }

    /// Latest version of a plan; `None` for unknown plans.
    pub fn head(&self, plan_id: &str) -> Result<Option<u64>, StoreError> {
        let txn = self.db.begin_read().map_err(db_err)?;
        let heads = txn.open_table(HEADS).map_err(db_err)?;
        Ok(heads.get(plan_id).map_err(db_err)?.map(|v| v.value()))
    }

    pub fn get(&self, plan_id: &str, version: u64) -> Result<Option<String>, StoreError> {
        let txn = self.db.begin_read().map_err(db_err)?;
        let plans = txn.open_table(PLANS).map_err(db_err)?;
        Ok(plans
            .get((plan_id, version))
            .map_err(db_err)?
            .map(|v| v.value().to_string()))
    }

    /// Head version and its document, read in one snapshot.
    pub fn latest(&self, plan_id: &str) -> Result<Option<(u64, String)>, StoreError> {
        let txn = self.db.begin_read().map_err(db_err)?;
        let heads = txn.open_table(HEADS).map_err(db_err)?;
        let Some(head) = heads.get(plan_id).map_err(db_err)?.map(|v| v.value()) else {
            return Ok(None);
        };
        let plans = txn.open_table(PLANS).map_err(db_err)?;
        let doc = plans
            .get((plan_id, head))
            .map_err(db_err)?
            .map(|v| v.value().to_string());
        Ok(doc.map(|d| (head, d)))
    }

    pub fn trace(&self, plan_id: &str, version: u64) -> Result<Option<String>, StoreError> {
        let txn = self.db.begin_read().map_err(db_err)?;
        let traces = txn.open_table(TRACES).map_err(db_err)?;
        Ok(traces
            .get((plan_id, version))
            .map_err(db_err)?
            .map(|v| v.value().to_string()))
    }

    /// Stored versions in ascending order, with whether each has a trace.
    pub fn versions(&self, plan_id: &str) -> Result<Vec<(u64, bool)>, StoreError> {
        let txn = self.db.begin_read().map_err(db_err)?;
        let plans = txn.open_table(PLANS).map_err(db_err)?;
        let traces = txn.open_table(TRACES).map_err(db_err)?;
        let mut out = Vec::new();
        for entry in plans
            .range((plan_id, 0)..=(plan_id, u64::MAX))
            .map_err(db_err)?
        {
            let (key, _) = entry.map_err(db_err)?;
            let version = key.value().1;
            out.push((
                version,
                traces.get((plan_id, version)).map_err(db_err)?.is_some(),
            ));
        }
        Ok(out)
    }

    /// Appends `version` when the plan's head is still `expected` (0 for a
    /// plan that must not exist yet).
    pub fn append(
        &self,
        plan_id: &str,
        expected: u64,
        version: u64,
        doc: &str,
        trace: Option<&str>,
    ) -> Result<(), StoreError> {
        if version != expected + 1 {
            return Err(StoreError::NotNext { expected, version });
        }
        let txn = self.db.begin_write().map_err(db_err)?;
        {
            let mut heads = txn.open_table(HEADS).map_err(db_err)?;
            let current = heads
                .get(plan_id)
                .map_err(db_err)?
                .map(|v| v.value())
                .unwrap_or(0);
            if current != expected {
                return Err(StoreError::Conflict {
                    plan_id: plan_id.to_string(),
                    current,
                });
            }
            heads.insert(plan_id, version).map_err(db_err)?;
            txn.open_table(PLANS)
                .map_err(db_err)?
                .insert((plan_id, version), doc)
                .map_err(db_err)?;
            if let Some(trace) = trace {
                txn.open_table(TRACES)
                    .map_err(db_err)?
                    .insert((plan_id, version), trace)
                    .map_err(db_err)?;
            }
        }
        txn.commit().map_err(db_err)?;
        Ok(())
    }

    /// Registers a session; false when the id is already taken.
    pub fn add_session(&self, session_id: &str, created_at: &str) -> Result<bool, StoreError> {
        let txn = self.db.begin_write().map_err(db_err)?;
        let fresh = {
            let mut sessions = txn.open_table(SESSIONS).map_err(db_err)?;
            let fresh = sessions.get(session_id).map_err(db_err)?.is_none();
            if fresh {
                sessions.insert(session_id, created_at).map_err(db_err)?;
            }
            fresh
        };
        txn.commit().map_err(db_err)?;
        Ok(fresh)
    }

    pub fn has_session(&self, session_id: &str) -> Result<bool, StoreError> {
        let txn = self.db.begin_read().map_err(db_err)?;
        let sessions = txn.open_table(SESSIONS).map_err(db_err)?;
        Ok(sessions.get(session_id).map_err(db_err)?.is_some())
    }

    pub fn session_count(&self) -> Result<u64, StoreError> {
        let txn = self.db.begin_read().map_err(db_err)?;
        let sessions = txn.open_table(SESSIONS).map_err(db_err)?;
        sessions.len().map_err(db_err)
    }
}
