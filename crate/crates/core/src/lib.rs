//! Zero-error 2-query locally correctable codes: the stacked-Hadamard
//! construction, normal-form extraction, matching-graph propagation, full
//! decoding from a small seed, and the bridge to locally decodable codes.

pub mod code;
pub mod normal_form;
pub mod propagation;
pub mod recovery;
pub mod ldc;
