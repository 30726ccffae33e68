pub mod aspect_model;
pub mod cli;
pub mod corpus;
pub mod disagreement;
pub mod llm_baseline;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod sdap;
pub mod text;
