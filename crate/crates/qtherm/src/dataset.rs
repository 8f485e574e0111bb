//! Parallel dataset generation on a rayon pool.

use qtherm_core::sim::{dataset_record, Dataset, Protocol, SimConfig};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Runs `f` on a pool of `workers` threads, or rayon's default size.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == Some(0) {
        return Err(Error::Usage("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Same records as the sequential generator, for any pool size.
pub fn generate(config: &SimConfig, protocol: &Protocol, collect_truth: bool) -> Result<Dataset> {
    config.validate()?;
    protocol.validate()?;
    let records: Vec<_> = (0..protocol.record_count(config.n_shots))
        .into_par_iter()
        .map(|i| dataset_record(config, protocol, i, collect_truth))
        .collect();
    Ok(Dataset::from_records(records))
}
