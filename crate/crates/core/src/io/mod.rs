//! On-disk graph bundles and embedding files.

mod bundle;
mod embeddings;

pub use bundle::{load_bundle, write_bundle, Bundle, Defaults, Schema, SchemaNodeType, SchemaRelation, FORMAT_VERSION};
pub use embeddings::{read_embeddings, write_embeddings, write_embeddings_tsv, EMBEDDING_MAGIC, EMBEDDING_VERSION};
