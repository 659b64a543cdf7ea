use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{Body, Entity, OpCounts, ProtocolMessage, RejectReason, SubscriberState};
use crate::imsi_crypto::Imsi;
use crate::key_hierarchy::{build_auth_vector, Snid};

#[derive(Debug, Clone)]
pub struct HssConfig {
    pub allowed_snids: BTreeSet<Snid>,
    pub entropy_seed: u64,
}

impl HssConfig {
    pub fn allowing(snids: &[Snid], entropy_seed: u64) -> Self {
        Self { allowed_snids: snids.iter().copied().collect(), entropy_seed }
    }
}

pub type SubscriberRecord = SubscriberState;

/// Subscriber registry. Stateless across messages apart from each
/// subscriber's key epoch and sequence number.
#[derive(Debug)]
pub struct Hss {
    cfg: HssConfig,
    registry: BTreeMap<String, SubscriberRecord>,
    rng: ChaCha20Rng,
    ops: OpCounts,
}

impl Hss {
    pub fn new(cfg: HssConfig) -> Self {
        let rng = ChaCha20Rng::seed_from_u64(cfg.entropy_seed);
        Self { cfg, registry: BTreeMap::new(), rng, ops: OpCounts::default() }
    }

    pub fn register(&mut self, record: SubscriberRecord) {
        self.registry.insert(record.imsi.digits().to_owned(), record);
    }

    pub fn subscriber(&self, imsi: &Imsi) -> Option<&SubscriberRecord> {
        self.registry.get(imsi.digits())
    }

    pub fn ops(&self) -> OpCounts {
        self.ops
    }

    pub fn on_malformed(&mut self) -> Vec<ProtocolMessage> {
        self.reply(Entity::Mme, Body::AuthReject(RejectReason::ProtocolViolation))
    }

    /// Off-wire report from the MME that `imsi` authenticated; the
    /// subscriber moves to its next key epoch.
    pub fn confirm_success(&mut self, imsi: &Imsi) {
        if let Some(rec) = self.registry.get_mut(imsi.digits()) {
            rec.credentials.advance_epoch();
        }
    }

    fn reply(&self, dst: Entity, body: Body) -> Vec<ProtocolMessage> {
        vec![ProtocolMessage::new(Entity::Hss, dst, body)]
    }

    pub fn step(&mut self, msg: &ProtocolMessage, _now: u64) -> Vec<ProtocolMessage> {
        let Body::AuthDataRequest { imsi, snid, .. } = &msg.body else {
            if matches!(msg.body, Body::AuthReject(_)) {
                return Vec::new();
            }
            return self.reply(msg.src, Body::AuthReject(RejectReason::ProtocolViolation));
        };
        if !self.cfg.allowed_snids.contains(snid) {
            return self.reply(msg.src, Body::AuthReject(RejectReason::SnidRejected));
        }
        let Some(rec) = self.registry.get_mut(imsi.digits()) else {
            return self.reply(msg.src, Body::AuthReject(RejectReason::UnknownImsi));
        };
        self.ops.key_derivations += 1;
        let Ok(key) = rec.credentials.current_key() else {
            return self.reply(msg.src, Body::AuthReject(RejectReason::UnknownImsi));
        };
        let Ok(sqn) = rec.sqn.advance() else {
            return self.reply(msg.src, Body::AuthReject(RejectReason::SqnOutOfRange));
        };
        let mut rand = [0u8; 16];
        self.rng.fill_bytes(&mut rand);
        self.ops.av_builds += 1;
        let av = build_auth_vector(&key, sqn, *snid, rand);
        self.reply(msg.src, Body::AuthDataResponse(av))
    }
}
