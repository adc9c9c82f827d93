// Float methods come from libm through `num_traits::Float` when `std` is off.
#[cfg(not(feature = "std"))]
pub(crate) use num_traits::Float;

pub(crate) use alloc::vec;
pub(crate) use alloc::vec::Vec;
