// mdbook cannot run Rust listings that depend on a workspace crate, so every
// chapter is pulled in as the doc comment of an empty module and `cargo test`
// runs its code blocks as doc-tests. One module per chapter keeps a failure
// traceable to its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/iid.md")]
pub mod iid {}
#[doc = include_str!("../../../book/src/correlated.md")]
pub mod correlated {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/chain-solve.md")]
pub mod chain_solve {}
#[doc = include_str!("../../../book/src/power-splitting.md")]
pub mod power_splitting {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
