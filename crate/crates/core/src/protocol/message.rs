//! Wire messages. Envelope: `tag u8 ‖ src u8 ‖ dst u8 ‖ len u32 ‖ body`.

use std::fmt;

use num_bigint::BigUint;

use super::RejectReason;
use crate::imsi_crypto::{ElGamalParams, Imsi, ImsiCiphertext, SignedIdentityRequest};
use crate::key_hierarchy::{AuthVector, Key256, Snid, AUTN_LEN, RAND_LEN, RES_LEN};
use crate::wire::{biguint_to_fixed, Reader, WireError, Writer};

pub const HEADER_LEN: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    Ue,
    Mme,
    Hss,
    Attacker,
}

impl Entity {
    pub const ALL: [Entity; 4] = [Entity::Ue, Entity::Mme, Entity::Hss, Entity::Attacker];

    fn code(self) -> u8 {
        match self {
            Entity::Ue => 1,
            Entity::Mme => 2,
            Entity::Hss => 3,
            Entity::Attacker => 4,
        }
    }

    fn from_code(c: u8) -> Result<Self, WireError> {
        Ok(match c {
            1 => Entity::Ue,
            2 => Entity::Mme,
            3 => Entity::Hss,
            4 => Entity::Attacker,
            _ => return Err(WireError::Invalid(format!("entity code {c}"))),
        })
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entity::Ue => "UE",
            Entity::Mme => "MME",
            Entity::Hss => "HSS",
            Entity::Attacker => "ATK",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetworkType {
    Eutran,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    /// Opens a session. Carries the identity in clear only in the baseline.
    AttachRequest { identity: Option<Imsi> },
    IdentityRequest(SignedIdentityRequest),
    /// Ciphertext blocks with both components at `field_len` bytes.
    IdentityResponse { field_len: usize, blocks: Vec<ImsiCiphertext> },
    AuthDataRequest { imsi: Imsi, snid: Snid, network_type: NetworkType },
    AuthDataResponse(AuthVector),
    UserAuthRequest { rand: [u8; RAND_LEN], autn: [u8; AUTN_LEN], ksi: u8 },
    UserAuthResponse { res: [u8; RES_LEN] },
    AuthReject(RejectReason),
    /// Unprotected identity query of the baseline.
    PlainIdentityRequest,
    PlainIdentityResponse(Imsi),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Tag {
    AttachRequest = 0x01,
    IdentityRequest = 0x02,
    IdentityResponse = 0x03,
    AuthDataRequest = 0x04,
    AuthDataResponse = 0x05,
    UserAuthRequest = 0x06,
    UserAuthResponse = 0x07,
    AuthReject = 0x08,
    PlainIdentityRequest = 0x09,
    PlainIdentityResponse = 0x0a,
}

impl Tag {
    pub fn from_u8(v: u8) -> Result<Self, WireError> {
        use Tag::*;
        Ok(match v {
            0x01 => AttachRequest,
            0x02 => IdentityRequest,
            0x03 => IdentityResponse,
            0x04 => AuthDataRequest,
            0x05 => AuthDataResponse,
            0x06 => UserAuthRequest,
            0x07 => UserAuthResponse,
            0x08 => AuthReject,
            0x09 => PlainIdentityRequest,
            0x0a => PlainIdentityResponse,
            _ => return Err(WireError::UnknownTag(v)),
        })
    }

    /// Tag of a serialized message without decoding the body.
    pub fn peek(bytes: &[u8]) -> Option<Tag> {
        bytes.first().and_then(|&b| Tag::from_u8(b).ok())
    }

    pub fn name(self) -> &'static str {
        use Tag::*;
        match self {
            AttachRequest => "AttachRequest",
            IdentityRequest => "IdentityRequest",
            IdentityResponse => "IdentityResponse",
            AuthDataRequest => "AuthDataRequest",
            AuthDataResponse => "AuthDataResponse",
            UserAuthRequest => "UserAuthRequest",
            UserAuthResponse => "UserAuthResponse",
            AuthReject => "AuthReject",
            PlainIdentityRequest => "PlainIdentityRequest",
            PlainIdentityResponse => "PlainIdentityResponse",
        }
    }
}

impl Body {
    pub fn tag(&self) -> Tag {
        match self {
            Body::AttachRequest { .. } => Tag::AttachRequest,
            Body::IdentityRequest(_) => Tag::IdentityRequest,
            Body::IdentityResponse { .. } => Tag::IdentityResponse,
            Body::AuthDataRequest { .. } => Tag::AuthDataRequest,
            Body::AuthDataResponse(_) => Tag::AuthDataResponse,
            Body::UserAuthRequest { .. } => Tag::UserAuthRequest,
            Body::UserAuthResponse { .. } => Tag::UserAuthResponse,
            Body::AuthReject(_) => Tag::AuthReject,
            Body::PlainIdentityRequest => Tag::PlainIdentityRequest,
            Body::PlainIdentityResponse(_) => Tag::PlainIdentityResponse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolMessage {
    pub src: Entity,
    pub dst: Entity,
    pub body: Body,
}

fn put_imsi(w: &mut Writer, imsi: &Imsi) {
    w.raw(imsi.digits().as_bytes());
}

fn get_imsi(r: &mut Reader) -> Result<Imsi, WireError> {
    let raw = r.take(15)?;
    let s = std::str::from_utf8(raw).map_err(|_| WireError::Invalid("identity digits".into()))?;
    Imsi::parse(s).map_err(|e| WireError::Invalid(e.to_string()))
}

fn modulus_width(req: &SignedIdentityRequest) -> usize {
    req.params.modulus_len()
}

impl ProtocolMessage {
    pub fn new(src: Entity, dst: Entity, body: Body) -> Self {
        Self { src, dst, body }
    }

    pub fn tag(&self) -> Tag {
        self.body.tag()
    }

    fn encode_body(&self) -> Result<Vec<u8>, WireError> {
        let mut w = Writer::new();
        match &self.body {
            Body::AttachRequest { identity } => match identity {
                Some(imsi) => {
                    w.u8(1);
                    put_imsi(&mut w, imsi);
                }
                None => {
                    w.u8(0);
                }
            },
            Body::IdentityRequest(req) => {
                let width = modulus_width(req);
                w.biguint(&req.params.p, width)?;
                w.biguint(&req.params.alpha, width)?;
                w.biguint(&req.params.beta, width)?;
                w.u64(req.timestamp).bytes(&req.signature);
            }
            Body::IdentityResponse { field_len, blocks } => {
                w.u16(u16::try_from(*field_len).map_err(|_| WireError::Invalid("field too wide".into()))?);
                w.u8(u8::try_from(blocks.len()).map_err(|_| WireError::Invalid("too many blocks".into()))?);
                for ct in blocks {
                    w.u16(ct.block_index);
                    w.raw(&biguint_to_fixed(&ct.r, *field_len)?);
                    w.raw(&biguint_to_fixed(&ct.t, *field_len)?);
                }
            }
            Body::AuthDataRequest { imsi, snid, network_type } => {
                put_imsi(&mut w, imsi);
                w.raw(&snid.to_bytes());
                w.u8(match network_type {
                    NetworkType::Eutran => 0,
                    NetworkType::Other => 1,
                });
            }
            Body::AuthDataResponse(av) => {
                w.raw(&av.rand).raw(&av.autn).raw(&av.xres).raw(av.k_asme.as_bytes());
            }
            Body::UserAuthRequest { rand, autn, ksi } => {
                w.raw(rand).raw(autn).u8(*ksi);
            }
            Body::UserAuthResponse { res } => {
                w.raw(res);
            }
            Body::AuthReject(reason) => {
                w.u8(reason.code());
            }
            Body::PlainIdentityRequest => {}
            Body::PlainIdentityResponse(imsi) => put_imsi(&mut w, imsi),
        }
        Ok(w.finish())
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        let body = self.encode_body()?;
        let mut w = Writer::new();
        w.u8(self.tag() as u8)
            .u8(self.src.code())
            .u8(self.dst.code())
            .u32(body.len() as u32)
            .raw(&body);
        Ok(w.finish())
    }

    pub fn encoded_len(&self) -> Result<usize, WireError> {
        Ok(HEADER_LEN + self.encode_body()?.len())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let tag = Tag::from_u8(r.u8()?)?;
        let src = Entity::from_code(r.u8()?)?;
        let dst = Entity::from_code(r.u8()?)?;
        let len = r.u32()? as usize;
        let mut r = Reader::new(r.take(len)?);
        if bytes.len() != HEADER_LEN + len {
            return Err(WireError::Trailing(bytes.len() - HEADER_LEN - len));
        }
        let body = match tag {
            Tag::AttachRequest => match r.u8()? {
                0 => Body::AttachRequest { identity: None },
                1 => Body::AttachRequest { identity: Some(get_imsi(&mut r)?) },
                f => return Err(WireError::Invalid(format!("identity flag {f}"))),
            },
            Tag::IdentityRequest => {
                let (p, _) = r.biguint()?;
                let (alpha, _) = r.biguint()?;
                let (beta, _) = r.biguint()?;
                let timestamp = r.u64()?;
                let signature = r.bytes()?.to_vec();
                let params = ElGamalParams::from_public(p, alpha, beta)
                    .map_err(|e| WireError::Invalid(e.to_string()))?;
                Body::IdentityRequest(SignedIdentityRequest { params, timestamp, signature })
            }
            Tag::IdentityResponse => {
                let field_len = usize::from(r.u16()?);
                let count = r.u8()?;
                let mut blocks = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    let block_index = r.u16()?;
                    let r_val = BigUint::from_bytes_be(r.take(field_len)?);
                    let t_val = BigUint::from_bytes_be(r.take(field_len)?);
                    blocks.push(ImsiCiphertext { r: r_val, t: t_val, block_index });
                }
                Body::IdentityResponse { field_len, blocks }
            }
            Tag::AuthDataRequest => {
                let imsi = get_imsi(&mut r)?;
                let snid = Snid::from_bytes(r.array()?);
                let network_type = match r.u8()? {
                    0 => NetworkType::Eutran,
                    1 => NetworkType::Other,
                    v => return Err(WireError::Invalid(format!("network type {v}"))),
                };
                Body::AuthDataRequest { imsi, snid, network_type }
            }
            Tag::AuthDataResponse => Body::AuthDataResponse(AuthVector {
                rand: r.array()?,
                autn: r.array()?,
                xres: r.array()?,
                k_asme: Key256(r.array()?),
            }),
            Tag::UserAuthRequest => Body::UserAuthRequest {
                rand: r.array()?,
                autn: r.array()?,
                ksi: r.u8()?,
            },
            Tag::UserAuthResponse => Body::UserAuthResponse { res: r.array()? },
            Tag::AuthReject => Body::AuthReject(
                RejectReason::from_code(r.u8()?)
                    .ok_or_else(|| WireError::Invalid("reject reason".into()))?,
            ),
            Tag::PlainIdentityRequest => Body::PlainIdentityRequest,
            Tag::PlainIdentityResponse => Body::PlainIdentityResponse(get_imsi(&mut r)?),
        };
        r.finish()?;
        Ok(Self { src, dst, body })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imsi_crypto::{gen_params, AuthorityKey};

    fn imsi() -> Imsi {
        Imsi::parse("001010123456789").unwrap()
    }

    fn samples() -> Vec<ProtocolMessage> {
        let (params, _) = gen_params(64, 1).unwrap();
        let req = AuthorityKey::from_seed(3).sign_identity_request(&params, 12);
        let av = AuthVector { rand: [1; 16], autn: [2; 16], xres: [3; 8], k_asme: Key256([4; 32]) };
        let ct = ImsiCiphertext { r: 77u32.into(), t: 900_000u32.into(), block_index: 0 };
        let bodies = vec![
            Body::AttachRequest { identity: None },
            Body::AttachRequest { identity: Some(imsi()) },
            Body::IdentityRequest(req),
            Body::IdentityResponse {
                field_len: 8,
                blocks: vec![ct.clone(), ImsiCiphertext { block_index: 1, ..ct }],
            },
            Body::AuthDataRequest { imsi: imsi(), snid: Snid::new(1, 1), network_type: NetworkType::Eutran },
            Body::AuthDataResponse(av),
            Body::UserAuthRequest { rand: [5; 16], autn: [6; 16], ksi: 3 },
            Body::UserAuthResponse { res: [7; 8] },
            Body::AuthReject(RejectReason::SqnOutOfRange),
            Body::PlainIdentityRequest,
            Body::PlainIdentityResponse(imsi()),
        ];
        bodies.into_iter().map(|b| ProtocolMessage::new(Entity::Ue, Entity::Mme, b)).collect()
    }

    #[test]
    fn every_message_round_trips() {
        for msg in samples() {
            let bytes = msg.encode().unwrap();
            assert_eq!(bytes.len(), msg.encoded_len().unwrap());
            assert_eq!(Tag::peek(&bytes), Some(msg.tag()));
            assert_eq!(ProtocolMessage::decode(&bytes).unwrap(), msg);
        }
    }

    #[test]
    fn truncation_and_trailing_bytes_rejected() {
        for msg in samples() {
            let bytes = msg.encode().unwrap();
            for cut in 0..bytes.len() {
                assert!(ProtocolMessage::decode(&bytes[..cut]).is_err());
            }
            let mut long = bytes.clone();
            long.push(0);
            assert!(ProtocolMessage::decode(&long).is_err());
        }
    }

    #[test]
    fn only_clear_identity_carries_digits() {
        let digits = imsi().digits().as_bytes().to_vec();
        let contains = |b: &[u8]| b.windows(15).any(|w| w == digits.as_slice());
        let bare = ProtocolMessage::new(Entity::Ue, Entity::Mme, Body::AttachRequest { identity: None });
        let clear = ProtocolMessage::new(Entity::Ue, Entity::Mme, Body::AttachRequest { identity: Some(imsi()) });
        assert!(!contains(&bare.encode().unwrap()));
        assert!(contains(&clear.encode().unwrap()));
    }

    #[test]
    fn unknown_tag() {
        assert_eq!(ProtocolMessage::decode(&[0xee, 1, 2, 0, 0, 0, 0]), Err(WireError::UnknownTag(0xee)));
    }
}
