//! Compiles every chapter of the guide in `book/` as documentation so that
//! `cargo test` runs its code blocks.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/networks.md")]
pub mod networks {}
#[doc = include_str!("../../../book/src/realizations.md")]
pub mod realizations {}
#[doc = include_str!("../../../book/src/compartmental.md")]
pub mod compartmental {}
#[doc = include_str!("../../../book/src/solvers.md")]
pub mod solvers {}
#[doc = include_str!("../../../book/src/transforms.md")]
pub mod transforms {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
