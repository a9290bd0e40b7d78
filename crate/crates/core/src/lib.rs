//! Question answering over an ontology, driven by a Single Classification
//! Ripple Down Rules knowledge base whose rules are patterns over annotations.

pub mod annotation;
pub mod pattern;
pub mod ir;
pub mod language;
pub mod scrdr;
pub mod ontology;
pub mod mapper;
pub mod answer;
pub mod pipeline;
pub mod engine;
pub mod service;
