//! One MME, one HSS and a population of provisioned UEs on a fresh network,
//! all derived from a single seed.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use super::{NetConfig, SimNet};
use crate::imsi_crypto::{gen_params, AuthorityKey, CryptoError, ElGamalParams, Imsi, SecretKey, DEFAULT_FRESHNESS_WINDOW};
use crate::key_hierarchy::{SqnState, Snid};
use crate::keygen::LteKey;
use crate::protocol::{
    provision_subscriber, run_session, Credentials, Hss, HssConfig, Mme, MmeConfig, NetworkType, Protocol,
    ProvisionConfig, SessionResult, SubscriberState, SubscriberStateError, Ue, UeConfig,
};

pub const TEST_SNID: Snid = Snid { mcc: 1, mnc: 1 };
/// Modulus size used by simulated sessions unless configured otherwise.
pub const SESSION_MODULUS_BITS: u64 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TestbedError {
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Provision(#[from] SubscriberStateError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestbedConfig {
    pub protocol: Protocol,
    pub seed: u64,
    pub grid_n: usize,
    pub modulus_bits: u64,
    /// Seed for the MME's ElGamal key pair, so many testbeds can share one.
    pub mme_key_seed: u64,
    pub subscribers: usize,
    pub epoch: u64,
    pub net: NetConfig,
}

impl TestbedConfig {
    pub fn new(protocol: Protocol, seed: u64) -> Self {
        Self {
            protocol,
            seed,
            grid_n: 5,
            modulus_bits: SESSION_MODULUS_BITS,
            mme_key_seed: 0,
            subscribers: 1,
            epoch: 0,
            net: NetConfig { seed, ..NetConfig::default() },
        }
    }
}

type KeyCache = Mutex<HashMap<(u64, u64), (ElGamalParams, SecretKey)>>;

/// MME key pair for `(bits, seed)`, generated once per process.
pub fn mme_keys(bits: u64, seed: u64) -> Result<(ElGamalParams, SecretKey), CryptoError> {
    static CACHE: OnceLock<KeyCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&(bits, seed)) {
        return Ok(hit.clone());
    }
    let keys = gen_params(bits, seed)?;
    cache.lock().unwrap().insert((bits, seed), keys.clone());
    Ok(keys)
}

fn random_imsi(rng: &mut impl Rng) -> Imsi {
    Imsi::parse(&format!("00101{:010}", rng.gen_range(1..10_000_000_000u64))).expect("15 digits")
}

pub struct Testbed {
    pub cfg: TestbedConfig,
    pub ues: Vec<Ue>,
    pub mme: Mme,
    pub hss: Hss,
    pub net: SimNet,
    pub authority: AuthorityKey,
}

impl Testbed {
    pub fn new(cfg: TestbedConfig) -> Result<Self, TestbedError> {
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        let authority = AuthorityKey::from_seed(rng.next_u64());
        let (params, secret) = mme_keys(cfg.modulus_bits, cfg.mme_key_seed)?;
        let mme = Mme::new(MmeConfig {
            protocol: cfg.protocol,
            snid: TEST_SNID,
            network_type: NetworkType::Eutran,
            authority: authority.clone(),
            params,
            secret,
        });
        let mut hss = Hss::new(HssConfig::allowing(&[TEST_SNID], rng.next_u64()));
        let mut ues = Vec::with_capacity(cfg.subscribers);
        for _ in 0..cfg.subscribers {
            let imsi = random_imsi(&mut rng);
            let state = match cfg.protocol {
                Protocol::IpgAka => provision_subscriber(
                    imsi,
                    ProvisionConfig { n: cfg.grid_n, seed: rng.next_u64(), epoch: cfg.epoch },
                )?,
                Protocol::EpsAka => {
                    let mut key = [0u8; 32];
                    rng.fill_bytes(&mut key);
                    SubscriberState {
                        imsi,
                        credentials: Credentials::Static(LteKey::from_static(key)),
                        sqn: SqnState::default(),
                    }
                }
            };
            hss.register(state.clone());
            ues.push(Ue::new(Self::ue_config(cfg.protocol, &authority, rng.next_u64(), true), state));
        }
        Ok(Self { cfg, ues, mme, hss, net: SimNet::with_endpoints(cfg.net), authority })
    }

    pub fn ue_config(protocol: Protocol, authority: &AuthorityKey, entropy_seed: u64, verify_network: bool) -> UeConfig {
        UeConfig {
            protocol,
            authority: authority.public(),
            snid: TEST_SNID,
            freshness_window: DEFAULT_FRESHNESS_WINDOW,
            verify_network,
            entropy_seed,
        }
    }

    pub fn imsi(&self, i: usize) -> &Imsi {
        &self.ues[i].state().imsi
    }

    /// Runs one session for subscriber `i`.
    pub fn run(&mut self, i: usize) -> SessionResult {
        run_session(&mut self.ues[i], &mut self.mme, &mut self.hss, &mut self.net)
    }

    /// Runs a session for a UE that is not part of the population, for
    /// instance an impersonator.
    pub fn run_with(&mut self, ue: &mut Ue) -> SessionResult {
        run_session(ue, &mut self.mme, &mut self.hss, &mut self.net)
    }

    /// Moves the clock forward by `gap` before the next session.
    pub fn idle(&mut self, gap: u64) {
        let t = self.net.now() + gap;
        self.net.advance_to(t);
    }
}
