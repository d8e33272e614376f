pub mod answers;
pub mod context;
pub mod eval;
pub mod gateway;
pub mod graph;
pub mod matcher;
pub mod oracles;
pub mod reference;
pub mod task;
