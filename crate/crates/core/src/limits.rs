//! Enumeration size guards, expressed in total assignment bits.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Environment variable that overrides every enumeration guard.
pub const GUARD_ENV: &str = "TVDIST_MAX_ENUM_BITS";

pub const ISING_ENUM_BITS: u32 = 20;
pub const BN_KL_ENUM_BITS: u32 = 24;
pub const BN_JOINT_ENUM_BITS: u32 = 22;
pub const CAUSAL_ENUM_BITS: u32 = 22;

fn override_bits() -> Option<u32> {
    static OVERRIDE: OnceLock<Option<u32>> = OnceLock::new();
    *OVERRIDE.get_or_init(|| {
        let raw = std::env::var(GUARD_ENV).ok()?;
        match raw.trim().parse::<u32>() {
            Ok(bits) => {
                log::warn!(
                    "{GUARD_ENV}={bits} overrides every enumeration guard; exact oracles may exhaust memory"
                );
                Some(bits)
            }
            Err(_) => {
                log::warn!("ignoring unparsable {GUARD_ENV}={raw:?}");
                None
            }
        }
    })
}

/// The effective limit for a guard whose default is `default_bits`.
pub fn limit(default_bits: u32) -> u32 {
    override_bits().unwrap_or(default_bits)
}

/// `ceil(log2(k))`, with 1-symbol alphabets counted as one bit.
pub fn symbol_bits(alphabet: usize) -> u32 {
    if alphabet <= 2 {
        1
    } else {
        usize::BITS - (alphabet - 1).leading_zeros()
    }
}

pub fn check(what: &'static str, bits: u32, default_bits: u32) -> Result<()> {
    let limit = limit(default_bits);
    if bits > limit {
        Err(Error::Size { what, bits, limit })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_bits_rounds_up() {
        assert_eq!(symbol_bits(2), 1);
        assert_eq!(symbol_bits(3), 2);
        assert_eq!(symbol_bits(4), 2);
        assert_eq!(symbol_bits(5), 3);
        assert_eq!(symbol_bits(8), 3);
    }
}
