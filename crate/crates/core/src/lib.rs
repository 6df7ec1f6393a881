pub mod corpus;
pub mod embed;
pub mod evalkit;
pub mod gradsuite;
pub mod ndiff;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod vecent;
pub mod vecom;
