use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{Body, Entity, OpCounts, Protocol, ProtocolMessage, RejectReason, SubscriberState};
use crate::imsi_crypto::{encrypt_block, split_blocks, AuthorityPublicKey, CryptoError, SignedIdentityRequest};
use crate::key_hierarchy::{ue_authenticate, ue_derive, Key256, KeyHierarchyError, Snid};

#[derive(Debug, Clone)]
pub struct UeConfig {
    pub protocol: Protocol,
    pub authority: AuthorityPublicKey,
    pub snid: Snid,
    pub freshness_window: u64,
    /// `false` models a rogue endpoint that answers challenges without
    /// checking AUTN.
    pub verify_network: bool,
    pub entropy_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UePhase {
    Idle,
    AwaitIdentityRequest,
    AwaitAuthRequest,
    Authenticated,
    Failed(RejectReason),
}

impl UePhase {
    pub fn is_terminal(self) -> bool {
        matches!(self, UePhase::Authenticated | UePhase::Failed(_))
    }
}

#[derive(Debug)]
pub struct Ue {
    cfg: UeConfig,
    state: SubscriberState,
    phase: UePhase,
    rng: ChaCha20Rng,
    k_asme: Option<Key256>,
    ksi: Option<u8>,
    ops: OpCounts,
}

impl Ue {
    pub fn new(cfg: UeConfig, state: SubscriberState) -> Self {
        let rng = ChaCha20Rng::seed_from_u64(cfg.entropy_seed);
        Self { cfg, state, phase: UePhase::Idle, rng, k_asme: None, ksi: None, ops: OpCounts::default() }
    }

    pub fn phase(&self) -> UePhase {
        self.phase
    }

    pub fn k_asme(&self) -> Option<Key256> {
        self.k_asme
    }

    pub fn ksi(&self) -> Option<u8> {
        self.ksi
    }

    pub fn state(&self) -> &SubscriberState {
        &self.state
    }

    pub fn ops(&self) -> OpCounts {
        self.ops
    }

    pub fn protocol(&self) -> Protocol {
        self.cfg.protocol
    }

    pub fn on_malformed(&mut self) -> Vec<ProtocolMessage> {
        self.fail(RejectReason::ProtocolViolation)
    }

    /// Starts a new session with an attach request.
    pub fn start(&mut self) -> Vec<ProtocolMessage> {
        self.k_asme = None;
        self.ksi = None;
        let identity = match self.cfg.protocol {
            Protocol::IpgAka => {
                self.phase = UePhase::AwaitIdentityRequest;
                None
            }
            Protocol::EpsAka => {
                self.phase = UePhase::AwaitAuthRequest;
                Some(self.state.imsi.clone())
            }
        };
        vec![self.send(Body::AttachRequest { identity })]
    }

    /// Off-wire confirmation that the network accepted the session.
    pub fn confirm_success(&mut self) {
        if self.phase == UePhase::Authenticated {
            self.state.credentials.advance_epoch();
        }
    }

    fn send(&self, body: Body) -> ProtocolMessage {
        ProtocolMessage::new(Entity::Ue, Entity::Mme, body)
    }

    fn fail(&mut self, reason: RejectReason) -> Vec<ProtocolMessage> {
        if !self.phase.is_terminal() {
            self.phase = UePhase::Failed(reason);
        }
        vec![self.send(Body::AuthReject(reason))]
    }

    pub fn step(&mut self, msg: &ProtocolMessage, now: u64) -> Vec<ProtocolMessage> {
        match (&msg.body, self.phase) {
            (Body::AuthReject(reason), _) => {
                self.phase = UePhase::Failed(*reason);
                self.k_asme = None;
                Vec::new()
            }
            // The baseline answers identity queries at any time.
            (Body::PlainIdentityRequest, _) if self.cfg.protocol == Protocol::EpsAka => {
                vec![self.send(Body::PlainIdentityResponse(self.state.imsi.clone()))]
            }
            (Body::IdentityRequest(req), UePhase::AwaitIdentityRequest) => self.on_identity_request(req, now),
            (Body::UserAuthRequest { rand, autn, ksi }, UePhase::AwaitAuthRequest) => {
                self.on_auth_request(rand, autn, *ksi)
            }
            _ => self.fail(RejectReason::ProtocolViolation),
        }
    }

    fn on_identity_request(&mut self, req: &SignedIdentityRequest, now: u64) -> Vec<ProtocolMessage> {
        self.ops.signature_checks += 1;
        match req.check(&self.cfg.authority, now, self.cfg.freshness_window) {
            Ok(()) => {}
            Err(CryptoError::StaleTimestamp { .. }) => return self.fail(RejectReason::StaleTimestamp),
            Err(_) => return self.fail(RejectReason::SignatureInvalid),
        }
        let params = &req.params;
        let Ok(blocks) = split_blocks(&self.state.imsi, params) else {
            return self.fail(RejectReason::ProtocolViolation);
        };
        let mut cts = Vec::with_capacity(blocks.len());
        for (i, block) in blocks.iter().enumerate() {
            // A fresh ephemeral per block.
            let k = params.random_ephemeral(&mut self.rng);
            self.ops.modexp += 2;
            match encrypt_block(params, block, &k, i as u16) {
                Ok(ct) => cts.push(ct),
                Err(_) => return self.fail(RejectReason::ProtocolViolation),
            }
        }
        self.phase = UePhase::AwaitAuthRequest;
        vec![self.send(Body::IdentityResponse { field_len: params.modulus_len(), blocks: cts })]
    }

    fn on_auth_request(&mut self, rand: &[u8; 16], autn: &[u8; 16], ksi: u8) -> Vec<ProtocolMessage> {
        self.ops.key_derivations += 1;
        let Ok(key) = self.state.credentials.current_key() else {
            return self.fail(RejectReason::ProtocolViolation);
        };
        let result = if self.cfg.verify_network {
            match ue_authenticate(&key, rand, autn, self.cfg.snid, &mut self.state.sqn) {
                Ok(r) => r,
                Err(KeyHierarchyError::SqnOutOfRange { .. }) => return self.fail(RejectReason::SqnOutOfRange),
                Err(_) => return self.fail(RejectReason::MacFailure),
            }
        } else {
            ue_derive(&key, rand, autn, self.cfg.snid)
        };
        self.k_asme = Some(result.k_asme);
        self.ksi = Some(ksi);
        self.phase = UePhase::Authenticated;
        vec![self.send(Body::UserAuthResponse { res: result.res })]
    }
}
