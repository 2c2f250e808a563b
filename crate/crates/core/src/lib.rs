pub mod abi;
pub mod analyzers;
pub mod cfg;
pub mod disasm;
pub mod isa;
pub mod pathgen;
pub mod pipeline;
pub mod ranker;
pub mod report;
pub mod srcmap;
pub mod symexec;
