//! Pool files, synthetic pools and the model response cache.

mod cache;
mod pool;
mod provider;
mod synth;

pub use cache::{CacheEntry, CacheMode, PromptCache, ENV_CACHE_DIR};
pub use pool::{
    has_multiple_sentences, load_pool, load_pool_with, parse_pool_lines, read_pool,
    sentence_boundaries, validate_pool_file, write_pool, write_pool_to, LoadOptions, SampleRecord,
    LOAD_DRIFT_TOL,
};
pub use synth::{generate_synthetic, ScenarioKind, SyntheticScenario};
pub use provider::NlvProvider;
