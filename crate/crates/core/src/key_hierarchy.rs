//! Authentication vectors and the session key tree rooted at the epoch's
//! root key: RAND/AUTN/XRES, CK/IK, K_ASME, K_eNB, the NAS/RRC/UP keys and
//! the NH/NCC chain. Every node is a labeled PRF image of its parent.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::keygen::LteKey;
use crate::prf::{
    prf, LABEL_AK, LABEL_ASME, LABEL_CK, LABEL_ENB, LABEL_IK, LABEL_MAC, LABEL_NAS_ENC,
    LABEL_NAS_INT, LABEL_NH, LABEL_RES, LABEL_RRC_ENC, LABEL_RRC_INT, LABEL_UP_ENC, LABEL_UP_INT,
};

pub const AMF: [u8; 2] = [0x80, 0x00];
pub const SQN_BITS: u32 = 48;
pub const SQN_MAX: u64 = (1 << SQN_BITS) - 1;
pub const DEFAULT_RESYNC_WINDOW: u64 = 32;
/// NCC is a 3-bit counter.
pub const NCC_MAX: u8 = 7;

pub const RAND_LEN: usize = 16;
pub const AUTN_LEN: usize = 16;
pub const RES_LEN: usize = 8;
const MAC_LEN: usize = 8;
const AK_LEN: usize = 6;
const CK_LEN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeyHierarchyError {
    #[error("AUTN MAC does not verify")]
    MacFailure,
    #[error("sequence number {recovered} outside window after {last}")]
    SqnOutOfRange { recovered: u64, last: u64 },
    #[error("sequence number space exhausted")]
    SqnExhausted,
    #[error("NCC already at {NCC_MAX}")]
    NccOverflow,
    #[error("invalid serving network id: {0}")]
    InvalidSnid(String),
}

/// A 256-bit key in the session tree.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Key256(pub [u8; 32]);

impl Key256 {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Key256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Key256({})", self.to_hex())
    }
}

/// Serving network identity (MCC, MNC), written `MCC-MNC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Snid {
    pub mcc: u16,
    pub mnc: u16,
}

impl Snid {
    pub fn new(mcc: u16, mnc: u16) -> Self {
        Self { mcc, mnc }
    }

    pub fn to_bytes(self) -> [u8; 4] {
        let mut out = [0u8; 4];
        out[..2].copy_from_slice(&self.mcc.to_be_bytes());
        out[2..].copy_from_slice(&self.mnc.to_be_bytes());
        out
    }

    pub fn from_bytes(b: [u8; 4]) -> Self {
        Self { mcc: u16::from_be_bytes([b[0], b[1]]), mnc: u16::from_be_bytes([b[2], b[3]]) }
    }
}

impl fmt::Display for Snid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03}-{:02}", self.mcc, self.mnc)
    }
}

impl FromStr for Snid {
    type Err = KeyHierarchyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || KeyHierarchyError::InvalidSnid(s.to_owned());
        let (mcc, mnc) = s.split_once('-').ok_or_else(bad)?;
        let mcc = mcc.parse::<u16>().ok().filter(|&v| v < 1000).ok_or_else(bad)?;
        let mnc = mnc.parse::<u16>().ok().filter(|&v| v < 1000).ok_or_else(bad)?;
        Ok(Self { mcc, mnc })
    }
}

fn sqn_bytes(sqn: u64) -> [u8; 6] {
    sqn.to_be_bytes()[2..].try_into().unwrap()
}

fn sqn_from_bytes(b: &[u8]) -> u64 {
    let mut full = [0u8; 8];
    full[2..].copy_from_slice(b);
    u64::from_be_bytes(full)
}

fn mac(k: &LteKey, rand: &[u8; RAND_LEN], sqn: u64) -> [u8; MAC_LEN] {
    prf(k.bits(), LABEL_MAC, &[rand, &sqn_bytes(sqn)])[..MAC_LEN].try_into().unwrap()
}

fn anonymity_key(k: &LteKey, rand: &[u8; RAND_LEN]) -> [u8; AK_LEN] {
    prf(k.bits(), LABEL_AK, &[rand])[..AK_LEN].try_into().unwrap()
}

fn cipher_key(k: &LteKey, rand: &[u8; RAND_LEN]) -> [u8; CK_LEN] {
    prf(k.bits(), LABEL_CK, &[rand])[..CK_LEN].try_into().unwrap()
}

fn integrity_key(k: &LteKey, rand: &[u8; RAND_LEN]) -> [u8; CK_LEN] {
    prf(k.bits(), LABEL_IK, &[rand])[..CK_LEN].try_into().unwrap()
}

pub fn compute_res(k: &LteKey, rand: &[u8; RAND_LEN]) -> [u8; RES_LEN] {
    prf(k.bits(), LABEL_RES, &[rand])[..RES_LEN].try_into().unwrap()
}

fn k_asme(k: &LteKey, rand: &[u8; RAND_LEN], snid: Snid, sqn_xor_ak: &[u8; AK_LEN]) -> Key256 {
    let mut ck_ik = [0u8; 2 * CK_LEN];
    ck_ik[..CK_LEN].copy_from_slice(&cipher_key(k, rand));
    ck_ik[CK_LEN..].copy_from_slice(&integrity_key(k, rand));
    Key256(prf(&ck_ik, LABEL_ASME, &[&snid.to_bytes(), sqn_xor_ak]))
}

fn xor6(a: [u8; AK_LEN], b: [u8; AK_LEN]) -> [u8; AK_LEN] {
    std::array::from_fn(|i| a[i] ^ b[i])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthVector {
    pub rand: [u8; RAND_LEN],
    pub autn: [u8; AUTN_LEN],
    pub xres: [u8; RES_LEN],
    pub k_asme: Key256,
}

pub fn build_auth_vector(lte_k: &LteKey, sqn: u64, snid: Snid, rand: [u8; RAND_LEN]) -> AuthVector {
    assert!(sqn <= SQN_MAX, "sqn exceeds 48 bits");
    let concealed = xor6(sqn_bytes(sqn), anonymity_key(lte_k, &rand));
    let mut autn = [0u8; AUTN_LEN];
    autn[..AK_LEN].copy_from_slice(&concealed);
    autn[AK_LEN..AK_LEN + 2].copy_from_slice(&AMF);
    autn[AK_LEN + 2..].copy_from_slice(&mac(lte_k, &rand, sqn));
    AuthVector {
        rand,
        autn,
        xres: compute_res(lte_k, &rand),
        k_asme: k_asme(lte_k, &rand, snid, &concealed),
    }
}

/// Per-subscriber sequence number state. At the UE `sqn` is the last
/// accepted value; at the HSS it is the last value issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SqnState {
    pub sqn: u64,
    pub resync_window: u64,
}

impl Default for SqnState {
    fn default() -> Self {
        Self { sqn: 0, resync_window: DEFAULT_RESYNC_WINDOW }
    }
}

impl SqnState {
    /// Issues the next sequence number (network side).
    pub fn advance(&mut self) -> Result<u64, KeyHierarchyError> {
        if self.sqn >= SQN_MAX {
            return Err(KeyHierarchyError::SqnExhausted);
        }
        self.sqn += 1;
        Ok(self.sqn)
    }

    fn accepts(&self, recovered: u64) -> bool {
        recovered > self.sqn && recovered - self.sqn <= self.resync_window
    }
}

/// Checks AUTN against the UE's own root key; on success the recovered
/// sequence number is returned and `state` advances to it.
pub fn verify_autn(
    lte_k: &LteKey,
    rand: &[u8; RAND_LEN],
    autn: &[u8; AUTN_LEN],
    state: &mut SqnState,
) -> Result<u64, KeyHierarchyError> {
    let concealed: [u8; AK_LEN] = autn[..AK_LEN].try_into().unwrap();
    let sqn = sqn_from_bytes(&xor6(concealed, anonymity_key(lte_k, rand)));
    if autn[AK_LEN..AK_LEN + 2] != AMF || autn[AK_LEN + 2..] != mac(lte_k, rand, sqn) {
        return Err(KeyHierarchyError::MacFailure);
    }
    if !state.accepts(sqn) {
        return Err(KeyHierarchyError::SqnOutOfRange { recovered: sqn, last: state.sqn });
    }
    state.sqn = sqn;
    Ok(sqn)
}

/// What the UE computes after a successful AUTN check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UeAuthResult {
    pub sqn: u64,
    pub res: [u8; RES_LEN],
    pub k_asme: Key256,
}

pub fn ue_authenticate(
    lte_k: &LteKey,
    rand: &[u8; RAND_LEN],
    autn: &[u8; AUTN_LEN],
    snid: Snid,
    state: &mut SqnState,
) -> Result<UeAuthResult, KeyHierarchyError> {
    verify_autn(lte_k, rand, autn, state)?;
    Ok(ue_derive(lte_k, rand, autn, snid))
}

/// The UE-side computation with no AUTN or sequence check, as an
/// endpoint that ignores network authentication would perform it.
pub fn ue_derive(lte_k: &LteKey, rand: &[u8; RAND_LEN], autn: &[u8; AUTN_LEN], snid: Snid) -> UeAuthResult {
    let concealed: [u8; AK_LEN] = autn[..AK_LEN].try_into().unwrap();
    UeAuthResult {
        sqn: sqn_from_bytes(&xor6(concealed, anonymity_key(lte_k, rand))),
        res: compute_res(lte_k, rand),
        k_asme: k_asme(lte_k, rand, snid, &concealed),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyTree {
    pub k_asme: Key256,
    pub k_enb: Key256,
    pub k_nas_enc: Key256,
    pub k_nas_int: Key256,
    pub k_rrc_enc: Key256,
    pub k_rrc_int: Key256,
    pub k_up_enc: Key256,
    pub k_up_int: Key256,
    pub nh: Key256,
    pub ncc: u8,
}

fn child(parent: &Key256, label: &str, fields: &[&[u8]]) -> Key256 {
    Key256(prf(parent.as_bytes(), label, fields))
}

/// NAS keys hang off K_ASME; RRC and UP keys off K_eNB. The initial NH
/// equals K_eNB with NCC = 0.
pub fn derive_key_tree(k_asme: Key256, uplink_nas_count: u32) -> KeyTree {
    let k_enb = child(&k_asme, LABEL_ENB, &[&uplink_nas_count.to_be_bytes()]);
    KeyTree {
        k_nas_enc: child(&k_asme, LABEL_NAS_ENC, &[]),
        k_nas_int: child(&k_asme, LABEL_NAS_INT, &[]),
        k_rrc_enc: child(&k_enb, LABEL_RRC_ENC, &[]),
        k_rrc_int: child(&k_enb, LABEL_RRC_INT, &[]),
        k_up_enc: child(&k_enb, LABEL_UP_ENC, &[]),
        k_up_int: child(&k_enb, LABEL_UP_INT, &[]),
        nh: k_enb,
        ncc: 0,
        k_asme,
        k_enb,
    }
}

pub fn nh_advance(k_asme: &Key256, nh: &Key256, ncc: u8) -> Result<(Key256, u8), KeyHierarchyError> {
    if ncc >= NCC_MAX {
        return Err(KeyHierarchyError::NccOverflow);
    }
    Ok((child(k_asme, LABEL_NH, &[nh.as_bytes()]), ncc + 1))
}

impl KeyTree {
    /// The eight keys in a fixed order.
    pub fn keys(&self) -> [(&'static str, &Key256); 8] {
        [
            ("k_asme", &self.k_asme),
            ("k_enb", &self.k_enb),
            ("k_nas_enc", &self.k_nas_enc),
            ("k_nas_int", &self.k_nas_int),
            ("k_rrc_enc", &self.k_rrc_enc),
            ("k_rrc_int", &self.k_rrc_int),
            ("k_up_enc", &self.k_up_enc),
            ("k_up_int", &self.k_up_int),
        ]
    }

    pub fn advance_nh(&mut self) -> Result<(), KeyHierarchyError> {
        (self.nh, self.ncc) = nh_advance(&self.k_asme, &self.nh, self.ncc)?;
        Ok(())
    }

    /// Labeled hex, one key per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, key) in self.keys() {
            out.push_str(&format!("{name}={}\n", key.to_hex()));
        }
        out.push_str(&format!("nh={}\nncc={}\n", self.nh.to_hex(), self.ncc));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashSet;

    fn key(seed: u64) -> LteKey {
        let mut b = [0u8; 32];
        ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut b);
        LteKey::from_static(b)
    }

    const SNID: Snid = Snid { mcc: 1, mnc: 1 };

    #[test]
    fn ue_and_network_agree() {
        let k = key(1);
        let rand = [7u8; 16];
        let av = build_auth_vector(&k, 5, SNID, rand);
        let mut state = SqnState { sqn: 4, ..Default::default() };
        let ue = ue_authenticate(&k, &rand, &av.autn, SNID, &mut state).unwrap();
        assert_eq!(ue.res, av.xres);
        assert_eq!(ue.k_asme, av.k_asme);
        assert_eq!(state.sqn, 5);
        assert_eq!(&av.autn[6..8], &AMF);
    }

    #[test]
    fn replayed_autn_is_out_of_range() {
        let k = key(2);
        let av = build_auth_vector(&k, 3, SNID, [1u8; 16]);
        let mut state = SqnState::default();
        verify_autn(&k, &av.rand, &av.autn, &mut state).unwrap();
        assert_eq!(
            verify_autn(&k, &av.rand, &av.autn, &mut state),
            Err(KeyHierarchyError::SqnOutOfRange { recovered: 3, last: 3 })
        );
        let far = build_auth_vector(&k, 3 + DEFAULT_RESYNC_WINDOW + 1, SNID, [1u8; 16]);
        assert!(matches!(
            verify_autn(&k, &far.rand, &far.autn, &mut state),
            Err(KeyHierarchyError::SqnOutOfRange { .. })
        ));
    }

    #[test]
    fn flipped_autn_or_wrong_key_fails_mac() {
        let k = key(3);
        let av = build_auth_vector(&k, 1, SNID, [2u8; 16]);
        for byte in 0..AUTN_LEN {
            let mut bad = av.autn;
            bad[byte] ^= 0x10;
            let mut state = SqnState::default();
            assert_eq!(verify_autn(&k, &av.rand, &bad, &mut state), Err(KeyHierarchyError::MacFailure));
            assert_eq!(state.sqn, 0);
        }
        let mut state = SqnState::default();
        assert_eq!(
            verify_autn(&key(4), &av.rand, &av.autn, &mut state),
            Err(KeyHierarchyError::MacFailure)
        );
    }

    #[test]
    fn distinct_rands_give_distinct_xres() {
        let k = key(5);
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut seen = HashSet::new();
        for _ in 0..10_000 {
            let mut rand = [0u8; 16];
            rng.fill_bytes(&mut rand);
            assert!(seen.insert(compute_res(&k, &rand)));
        }
    }

    #[test]
    fn res_matches_only_for_same_key_and_rand() {
        let (a, b) = (key(7), key(8));
        let r = [3u8; 16];
        assert_eq!(compute_res(&a, &r), compute_res(&a, &r));
        assert_ne!(compute_res(&a, &r), compute_res(&b, &r));
        assert_ne!(compute_res(&a, &r), compute_res(&a, &[4u8; 16]));
    }

    #[test]
    fn fresh_tree_has_ncc_zero_and_distinct_keys() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let mut b = [0u8; 32];
            rng.fill_bytes(&mut b);
            let tree = derive_key_tree(Key256(b), 0);
            assert_eq!(tree.ncc, 0);
            let set: HashSet<_> = tree.keys().iter().map(|(_, k)| **k).collect();
            assert_eq!(set.len(), 8);
        }
        assert_eq!(derive_key_tree(Key256([1; 32]), 3), derive_key_tree(Key256([1; 32]), 3));
        assert_ne!(derive_key_tree(Key256([1; 32]), 3).k_enb, derive_key_tree(Key256([1; 32]), 4).k_enb);
    }

    #[test]
    fn nh_chain() {
        let mut tree = derive_key_tree(Key256([9; 32]), 0);
        let mut seen = HashSet::from([tree.nh]);
        for expected in 1..=5u8 {
            tree.advance_nh().unwrap();
            assert_eq!(tree.ncc, expected);
            assert!(seen.insert(tree.nh));
        }
        tree.advance_nh().unwrap();
        tree.advance_nh().unwrap();
        assert_eq!(tree.ncc, NCC_MAX);
        assert_eq!(tree.advance_nh(), Err(KeyHierarchyError::NccOverflow));
    }

    #[test]
    fn snid_parsing() {
        let s: Snid = "310-260".parse().unwrap();
        assert_eq!(s, Snid::new(310, 260));
        assert_eq!(Snid::new(1, 1).to_string(), "001-01");
        assert_eq!(Snid::from_bytes(s.to_bytes()), s);
        assert!("31026".parse::<Snid>().is_err());
    }

    #[test]
    fn render_lists_every_node() {
        let r = derive_key_tree(Key256([0; 32]), 0).render();
        assert_eq!(r.lines().count(), 10);
        assert!(r.ends_with("ncc=0\n"));
    }
}
