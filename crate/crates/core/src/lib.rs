pub mod gf;
pub mod sl2;
pub mod setops;
pub mod exec;
pub mod growth;
pub mod lemma_lab;
pub mod additive_lab;
pub mod spectral;
pub mod battery;
