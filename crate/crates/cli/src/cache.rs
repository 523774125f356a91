//! On-disk simplicity tables, one JSON file per (system, measure, context, mode).

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use cosm_core::{simplicity_table, ExtCost, Rational, RelativeMode, SimplicityCache, SimplicityTable, System};
use serde_json::{json, Value};

pub const CACHE_ENV: &str = "COSM_CACHE_DIR";

pub struct FileCache {
    dir: Option<PathBuf>,
    memo: SimplicityCache<Rational>,
}

impl FileCache {
    pub fn from_env(disabled: bool) -> Self {
        let dir = if disabled { None } else { std::env::var_os(CACHE_ENV).map(PathBuf::from) };
        FileCache { dir, memo: SimplicityCache::new() }
    }

    fn path(&self, system: &System, measure: usize, context: usize, mode: RelativeMode) -> Option<PathBuf> {
        let name = format!("{}.{}.{}.{}.json", system.fingerprint(), measure, context, mode.name());
        self.dir.as_ref().map(|d| d.join(name))
    }

    fn load(path: &PathBuf, n: usize) -> Option<Vec<ExtCost<Rational>>> {
        let text = fs::read_to_string(path).ok()?;
        let doc: Value = serde_json::from_str(&text).ok()?;
        let values: Vec<ExtCost<Rational>> =
            doc.get("values")?.as_array()?.iter().map(|v| v.as_str().and_then(ExtCost::parse)).collect::<Option<_>>()?;
        (values.len() == n).then_some(values)
    }

    /// Table from memory, then disk, then the fixpoint engine. Unreadable
    /// files are recomputed and overwritten; write failures are ignored.
    pub fn table(
        &self,
        system: &System,
        measure: usize,
        context: usize,
        mode: RelativeMode,
    ) -> cosm_core::Result<Arc<SimplicityTable<Rational>>> {
        let key = SimplicityCache::key(system, measure, context, mode);
        if let Some(t) = self.memo.get(&key) {
            return Ok(t);
        }
        let path = self.path(system, measure, context, mode);
        if let Some(values) = path.as_ref().and_then(|p| Self::load(p, system.entity_count())) {
            return Ok(self.memo.insert(key, SimplicityTable::from_values(measure, context, mode, values)));
        }
        let table = simplicity_table(system, measure, context, mode)?;
        if let (Some(p), Some(dir)) = (&path, &self.dir) {
            let values: Vec<String> = table.values().iter().map(ExtCost::to_exact_string).collect();
            let _ = fs::create_dir_all(dir).and_then(|_| fs::write(p, json!({ "values": values }).to_string()));
        }
        Ok(self.memo.insert(key, table))
    }

    /// All measures for one context, ready for a pattern engine.
    pub fn tables(&self, system: &System, context: usize, mode: RelativeMode) -> cosm_core::Result<Vec<Arc<SimplicityTable<Rational>>>> {
        (0..system.measure_count()).map(|m| self.table(system, m, context, mode)).collect()
    }
}
