//! Subscriber credentials as held, identically, by the UE and the HSS.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::cgrid::{deserialize_grid, generate_grid, serialize_grid, CGrid, ColumnWidths, GridError};
use crate::imsi_crypto::{CryptoError, Imsi};
use crate::key_hierarchy::SqnState;
use crate::keygen::{derive_lte_key, form_key_sequence, KeySequence, KeygenError, LteKey};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Credentials {
    /// Epoch keys drawn from a shared grid.
    Grid { grid: CGrid, ks: KeySequence, feeder_seed: u64, epoch: u64 },
    /// One fixed root key.
    Static(LteKey),
}

impl Credentials {
    pub fn current_key(&self) -> Result<LteKey, KeygenError> {
        match self {
            Credentials::Grid { grid, ks, feeder_seed, epoch } => derive_lte_key(grid, ks, *feeder_seed, *epoch),
            Credentials::Static(k) => Ok(k.clone()),
        }
    }

    pub fn epoch(&self) -> Option<u64> {
        match self {
            Credentials::Grid { epoch, .. } => Some(*epoch),
            Credentials::Static(_) => None,
        }
    }

    /// Moves to the next epoch; a static key is unaffected.
    pub fn advance_epoch(&mut self) {
        if let Credentials::Grid { epoch, .. } = self {
            *epoch += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubscriberState {
    pub imsi: Imsi,
    pub credentials: Credentials,
    pub sqn: SqnState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProvisionConfig {
    pub n: usize,
    pub seed: u64,
    pub epoch: u64,
}

/// Builds matching grid credentials from one seed. The grid, sequence and
/// feeder seeds are independent draws from it.
pub fn provision_subscriber(imsi: Imsi, cfg: ProvisionConfig) -> Result<SubscriberState, SubscriberStateError> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let (grid_seed, ks_seed, feeder_seed) = (rng.next_u64(), rng.next_u64(), rng.next_u64());
    let grid = generate_grid(cfg.n, &ColumnWidths::standard(cfg.n)?, grid_seed)?;
    let ks = form_key_sequence(&grid, ks_seed)?;
    Ok(SubscriberState {
        imsi,
        credentials: Credentials::Grid { grid, ks, feeder_seed, epoch: cfg.epoch },
        sqn: SqnState::default(),
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubscriberStateError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Keygen(#[from] KeygenError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("malformed subscriber state: {0}")]
    Malformed(String),
}

const MAGIC: &str = "SUBSCRIBER v1";
const GRID_SECTION: &str = "[grid]";
const KSEQ_SECTION: &str = "[kseq]";

impl SubscriberState {
    /// `key=value` header, then the grid and key sequence files verbatim.
    pub fn serialize(&self) -> String {
        let mut out = format!(
            "{MAGIC}\nimsi={}\nmnc_len={}\nsqn={}\nresync_window={}\n",
            self.imsi,
            self.imsi.mnc().len(),
            self.sqn.sqn,
            self.sqn.resync_window
        );
        match &self.credentials {
            Credentials::Static(k) => out.push_str(&format!("key={}\n", k.to_hex())),
            Credentials::Grid { grid, ks, feeder_seed, epoch } => {
                out.push_str(&format!("feeder_seed={feeder_seed}\nepoch={epoch}\n{GRID_SECTION}\n"));
                out.push_str(std::str::from_utf8(&serialize_grid(grid)).expect("grid text is UTF-8"));
                out.push_str(&format!("{KSEQ_SECTION}\n"));
                out.push_str(&ks.serialize());
            }
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self, SubscriberStateError> {
        let bad = |m: String| SubscriberStateError::Malformed(m);
        let (head, sections) = match text.split_once(&format!("{GRID_SECTION}\n")) {
            Some((h, rest)) => (h, Some(rest)),
            None => (text, None),
        };
        let mut lines = head.lines().map(str::trim_end).filter(|l| !l.is_empty());
        if lines.next() != Some(MAGIC) {
            return Err(bad("missing header".into()));
        }
        let mut fields = std::collections::BTreeMap::new();
        for l in lines {
            let (k, v) = l.split_once('=').ok_or_else(|| bad(format!("bad line {l:?}")))?;
            fields.insert(k.to_owned(), v.to_owned());
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| bad(format!("missing {k}")));
        let num = |k: &str| -> Result<u64, SubscriberStateError> {
            get(k)?.parse().map_err(|e| bad(format!("{k}: {e}")))
        };
        let imsi = Imsi::parse_with_mnc_len(get("imsi")?, num("mnc_len")? as usize)?;
        let sqn = SqnState { sqn: num("sqn")?, resync_window: num("resync_window")? };
        let credentials = match sections {
            None => {
                let raw = hex::decode(get("key")?).map_err(|e| bad(format!("key: {e}")))?;
                let bits: [u8; 32] = raw.try_into().map_err(|_| bad("key must be 32 bytes".into()))?;
                Credentials::Static(LteKey::from_static(bits))
            }
            Some(rest) => {
                let (grid_text, ks_text) = rest
                    .split_once(&format!("{KSEQ_SECTION}\n"))
                    .ok_or_else(|| bad("missing [kseq] section".into()))?;
                let grid = deserialize_grid(grid_text.as_bytes())?;
                let ks = KeySequence::deserialize(ks_text)?;
                ks.check_against(&grid)?;
                Credentials::Grid { grid, ks, feeder_seed: num("feeder_seed")?, epoch: num("epoch")? }
            }
        };
        Ok(Self { imsi, credentials, sqn })
    }
}
