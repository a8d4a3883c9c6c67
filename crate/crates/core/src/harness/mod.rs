//! Instance generation, the text file formats, differential testing
//! against the oracle, and benchmarking. The CLI is a thin layer over this.

pub mod bench;
pub mod difftest;
pub mod generate;
pub mod io;

pub use generate::{gen_permutation_p8free, gen_random_p8free, gen_structured, GenError, StructuredKind};
pub use io::{instance_hash, parse_certificate, parse_instance, render_instance, ParseError, ResultRecord, Status};
