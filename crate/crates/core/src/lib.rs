pub mod cycles;
pub mod geometry;
pub mod integrate;
pub mod numerics;
pub mod sao;
pub mod vfields;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/integration.md")]
    mod integration {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/sao.md")]
    mod sao {}
    #[doc = include_str!("../../../book/src/cycles.md")]
    mod cycles {}
}
