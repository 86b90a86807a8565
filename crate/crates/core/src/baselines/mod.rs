//! Static comparison systems: frequency difference, count vectors with
//! column intersection, and cosine distance after orthogonal Procrustes
//! alignment of pre-trained static embeddings.

mod corpus;
mod count;
mod procrustes;

pub use corpus::Corpus;
pub use count::{cnt_ci_cd, cooccurrence_counts, count_vectors, freq_diff, DEFAULT_WINDOW};
pub use procrustes::{orthogonal_procrustes, procrustes_cosine, ProcrustesFit, StaticEmbeddings};
