//! Labeled keyed pseudorandom function shared by every derivation in the crate.
//!
//! `prf(key, label, fields)` is HMAC-SHA256 over `label ‖ 0x00 ‖ field_0 ‖ field_1 ‖ …`.
//! Fields are fixed-width by construction at every call site, so the
//! concatenation is unambiguous without per-field length prefixes.

use hmac::{Hmac, Mac};
use sha2::Sha256;

type HmacSha256 = Hmac<Sha256>;

/// Output width of [`prf`] in bytes.
pub const PRF_LEN: usize = 32;

pub const LABEL_KFF_INIT: &str = "kff-init";
pub const LABEL_LTE_K: &str = "lte-k";
pub const LABEL_MAC: &str = "mac";
pub const LABEL_AK: &str = "ak";
pub const LABEL_CK: &str = "ck";
pub const LABEL_IK: &str = "ik";
pub const LABEL_RES: &str = "res";
pub const LABEL_ASME: &str = "asme";
pub const LABEL_ENB: &str = "enb";
pub const LABEL_NAS_ENC: &str = "nas-enc";
pub const LABEL_NAS_INT: &str = "nas-int";
pub const LABEL_RRC_ENC: &str = "rrc-enc";
pub const LABEL_RRC_INT: &str = "rrc-int";
pub const LABEL_UP_ENC: &str = "up-enc";
pub const LABEL_UP_INT: &str = "up-int";
pub const LABEL_NH: &str = "nh";

/// Every domain-separation label in use. Must stay duplicate-free.
pub const ALL_LABELS: &[&str] = &[
    LABEL_KFF_INIT,
    LABEL_LTE_K,
    LABEL_MAC,
    LABEL_AK,
    LABEL_CK,
    LABEL_IK,
    LABEL_RES,
    LABEL_ASME,
    LABEL_ENB,
    LABEL_NAS_ENC,
    LABEL_NAS_INT,
    LABEL_RRC_ENC,
    LABEL_RRC_INT,
    LABEL_UP_ENC,
    LABEL_UP_INT,
    LABEL_NH,
];

pub fn prf(key: &[u8], label: &str, fields: &[&[u8]]) -> [u8; PRF_LEN] {
    let mut mac = HmacSha256::new_from_slice(key).expect("HMAC accepts keys of any length");
    mac.update(label.as_bytes());
    mac.update(&[0u8]);
    for field in fields {
        mac.update(field);
    }
    mac.finalize().into_bytes().into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn labels_are_unique() {
        let set: HashSet<_> = ALL_LABELS.iter().collect();
        assert_eq!(set.len(), ALL_LABELS.len());
    }

    #[test]
    fn label_separates_outputs() {
        let key = [7u8; 32];
        assert_ne!(prf(&key, LABEL_CK, &[b"x"]), prf(&key, LABEL_IK, &[b"x"]));
        assert_eq!(prf(&key, LABEL_CK, &[b"x"]), prf(&key, LABEL_CK, &[b"x"]));
    }
}
