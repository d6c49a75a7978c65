pub mod channels;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod markov;
pub mod rng;
pub mod states;
