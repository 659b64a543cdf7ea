use super::{Body, Entity, NetworkType, OpCounts, Protocol, ProtocolMessage, RejectReason};
use crate::imsi_crypto::{decrypt_imsi, join_blocks, AuthorityKey, ElGamalParams, Imsi, ImsiCiphertext, SecretKey};
use crate::key_hierarchy::{AuthVector, Key256, Snid};

/// KSI values 0..=6; 7 means "no key".
const KSI_SPACE: u8 = 7;

#[derive(Debug, Clone)]
pub struct MmeConfig {
    pub protocol: Protocol,
    pub snid: Snid,
    pub network_type: NetworkType,
    pub authority: AuthorityKey,
    pub params: ElGamalParams,
    pub secret: SecretKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmePhase {
    Idle,
    AwaitIdentityResponse,
    AwaitAuthData,
    AwaitUserResponse,
    Authenticated,
    Rejected(RejectReason),
}

impl MmePhase {
    pub fn is_terminal(self) -> bool {
        matches!(self, MmePhase::Authenticated | MmePhase::Rejected(_))
    }
}

#[derive(Debug)]
pub struct Mme {
    cfg: MmeConfig,
    phase: MmePhase,
    imsi: Option<Imsi>,
    av: Option<AuthVector>,
    ksi: u8,
    next_ksi: u8,
    ops: OpCounts,
}

impl Mme {
    pub fn new(cfg: MmeConfig) -> Self {
        Self { cfg, phase: MmePhase::Idle, imsi: None, av: None, ksi: 0, next_ksi: 0, ops: OpCounts::default() }
    }

    pub fn config(&self) -> &MmeConfig {
        &self.cfg
    }

    pub fn phase(&self) -> MmePhase {
        self.phase
    }

    /// Identity resolved in the current session.
    pub fn imsi(&self) -> Option<&Imsi> {
        self.imsi.as_ref()
    }

    pub fn k_asme(&self) -> Option<Key256> {
        match self.phase {
            MmePhase::Authenticated => self.av.as_ref().map(|av| av.k_asme),
            _ => None,
        }
    }

    pub fn ksi(&self) -> u8 {
        self.ksi
    }

    pub fn ops(&self) -> OpCounts {
        self.ops
    }

    pub fn on_malformed(&mut self) -> Vec<ProtocolMessage> {
        if self.phase.is_terminal() {
            return Vec::new();
        }
        self.reject(RejectReason::ProtocolViolation)
    }

    /// Clears per-session state before a new attach.
    pub fn begin_session(&mut self) {
        self.phase = MmePhase::Idle;
        self.imsi = None;
        self.av = None;
    }

    fn to(&self, dst: Entity, body: Body) -> ProtocolMessage {
        ProtocolMessage::new(Entity::Mme, dst, body)
    }

    fn reject(&mut self, reason: RejectReason) -> Vec<ProtocolMessage> {
        self.phase = MmePhase::Rejected(reason);
        vec![self.to(Entity::Ue, Body::AuthReject(reason))]
    }

    pub fn step(&mut self, msg: &ProtocolMessage, now: u64) -> Vec<ProtocolMessage> {
        if self.phase.is_terminal() {
            return Vec::new();
        }
        match (&msg.body, self.phase, self.cfg.protocol) {
            (Body::AuthReject(reason), MmePhase::AwaitAuthData, _) if msg.src == Entity::Hss => self.reject(*reason),
            (Body::AuthReject(reason), _, _) => {
                self.phase = MmePhase::Rejected(*reason);
                Vec::new()
            }
            (Body::AttachRequest { identity: None }, MmePhase::Idle, Protocol::IpgAka) => {
                self.ops.signatures += 1;
                let req = self.cfg.authority.sign_identity_request(&self.cfg.params, now);
                self.phase = MmePhase::AwaitIdentityResponse;
                vec![self.to(Entity::Ue, Body::IdentityRequest(req))]
            }
            (Body::AttachRequest { identity: Some(imsi) }, MmePhase::Idle, Protocol::EpsAka) => {
                self.auth_data_request(imsi.clone())
            }
            (Body::IdentityResponse { blocks, .. }, MmePhase::AwaitIdentityResponse, _) => {
                match self.recover_identity(blocks) {
                    Some(imsi) => self.auth_data_request(imsi),
                    None => self.reject(RejectReason::UnknownImsi),
                }
            }
            (Body::AuthDataResponse(av), MmePhase::AwaitAuthData, _) => {
                self.ksi = self.next_ksi;
                self.next_ksi = (self.next_ksi + 1) % KSI_SPACE;
                let out = self.to(
                    Entity::Ue,
                    Body::UserAuthRequest { rand: av.rand, autn: av.autn, ksi: self.ksi },
                );
                self.av = Some(av.clone());
                self.phase = MmePhase::AwaitUserResponse;
                vec![out]
            }
            (Body::UserAuthResponse { res }, MmePhase::AwaitUserResponse, _) => {
                let xres = self.av.as_ref().map(|av| av.xres);
                if xres == Some(*res) {
                    self.phase = MmePhase::Authenticated;
                    Vec::new()
                } else {
                    self.reject(RejectReason::ResMismatch)
                }
            }
            _ => self.reject(RejectReason::ProtocolViolation),
        }
    }

    fn auth_data_request(&mut self, imsi: Imsi) -> Vec<ProtocolMessage> {
        self.imsi = Some(imsi.clone());
        self.phase = MmePhase::AwaitAuthData;
        vec![self.to(
            Entity::Hss,
            Body::AuthDataRequest { imsi, snid: self.cfg.snid, network_type: self.cfg.network_type },
        )]
    }

    fn recover_identity(&mut self, blocks: &[ImsiCiphertext]) -> Option<Imsi> {
        let mut sorted: Vec<&ImsiCiphertext> = blocks.iter().collect();
        sorted.sort_by_key(|ct| ct.block_index);
        if sorted.iter().enumerate().any(|(i, ct)| usize::from(ct.block_index) != i) {
            return None;
        }
        let mut plain = Vec::with_capacity(sorted.len());
        for ct in sorted {
            self.ops.modexp += 1;
            plain.push(decrypt_imsi(&self.cfg.params, &self.cfg.secret, ct).ok()?);
        }
        join_blocks(&plain, &self.cfg.params).ok()
    }
}
