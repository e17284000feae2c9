//! p-adic scalars, tower field arithmetic, residue fields and the additive character.

mod character;
mod field;
mod residue;
mod scalar;

pub use character::{character_chi, pairing_character, pairing_phase, Phase};
pub use field::{ExtElement, FieldChain, FieldData, IntElem, Step, StepKind};
pub use residue::{FfElem, ResidueField};
pub use scalar::{Padic, DEFAULT_PRECISION};
