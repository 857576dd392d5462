"""Byte-exact air-interface messages and the encrypted command payloads.

Frame layouts (all integers big-endian, ``LV`` = one length octet + value)::

    0x01 RisRequest        LV default_id | LV nonce | sqn(4) | mac
    0x02 RisResponse       LV result | sqn(4) | mac
    0x03 ProtectedCommand  temp_id | sqn(4) | ct_len(2) | ciphertext | mac
    0x04 ProtectedAck      temp_id | sqn(4) | ct_len(2) | ciphertext | mac

``mac`` is ``mac_len`` octets and ``temp_id`` is ``temp_id_len`` octets,
both taken from the session's SecurityConfig, so decoding needs the config.

Command payloads (plaintext inside ProtectedCommand)::

    0x10 PhaseConfig         count(2) | bits b(1) | states packed LSB-first
    0xF0 KeyRenewal          LV nonce
    0xF1 CapabilityExchange  hash(1) | key_len | temp_id_len | mac_len | result_len | enc(1)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from rissec.crypto.hashing import HashAlg
from rissec.errors import (
    DecodeError,
    FieldTooLong,
    InvalidLength,
    StateOutOfRange,
    TrailingBytes,
    Truncated,
    UnknownTag,
)
from rissec.keysched import SecurityConfig

TAG_REQUEST = 0x01
TAG_RESPONSE = 0x02
TAG_COMMAND = 0x03
TAG_ACK = 0x04

OP_PHASE_CONFIG = 0x10
OP_KEY_RENEWAL = 0xF0
OP_CAPABILITY = 0xF1

MAX_CIPHERTEXT = 0xFFFF


@dataclass(frozen=True)
class RisRequest:
    default_id: bytes
    nonce: bytes
    sqn: int
    mac: bytes


@dataclass(frozen=True)
class RisResponse:
    result: bytes
    sqn: int
    mac: bytes


@dataclass(frozen=True)
class ProtectedCommand:
    temp_id: bytes
    sqn: int
    ciphertext: bytes
    mac: bytes


@dataclass(frozen=True)
class ProtectedAck:
    temp_id: bytes
    sqn: int
    ciphertext: bytes
    mac: bytes


WireMessage = Union[RisRequest, RisResponse, ProtectedCommand, ProtectedAck]


def _lv(value: bytes, name: str) -> bytes:
    if len(value) > 255:
        raise FieldTooLong(f"{name} is {len(value)} octets, limit 255")
    return bytes([len(value)]) + value


def _u32(value: int, name: str) -> bytes:
    if not 0 <= value <= 0xFFFFFFFF:
        raise FieldTooLong(f"{name}={value} does not fit 32 bits")
    return value.to_bytes(4, "big")


def encode(msg: WireMessage) -> bytes:
    if isinstance(msg, RisRequest):
        return (bytes([TAG_REQUEST]) + _lv(msg.default_id, "default_id") + _lv(msg.nonce, "nonce")
                + _u32(msg.sqn, "sqn") + msg.mac)
    if isinstance(msg, RisResponse):
        return bytes([TAG_RESPONSE]) + _lv(msg.result, "result") + _u32(msg.sqn, "sqn") + msg.mac
    if isinstance(msg, (ProtectedCommand, ProtectedAck)):
        if len(msg.ciphertext) > MAX_CIPHERTEXT:
            raise FieldTooLong(f"ciphertext is {len(msg.ciphertext)} octets, limit {MAX_CIPHERTEXT}")
        tag = TAG_COMMAND if isinstance(msg, ProtectedCommand) else TAG_ACK
        return (bytes([tag]) + msg.temp_id + _u32(msg.sqn, "sqn")
                + len(msg.ciphertext).to_bytes(2, "big") + msg.ciphertext + msg.mac)
    raise TypeError(f"not a wire message: {type(msg).__name__}")


class _Reader:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise Truncated(f"need {n} octets at offset {self.pos}, have {len(self.data) - self.pos}")
        out = self.data[self.pos:end]
        self.pos = end
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def lv(self) -> bytes:
        return self.take(self.u8())

    def finish(self):
        if self.pos != len(self.data):
            raise TrailingBytes(f"{len(self.data) - self.pos} octets after end of message")


def decode(data: bytes, cfg: SecurityConfig) -> WireMessage:
    """Parse one frame; raises a DecodeError subclass on anything malformed."""
    r = _Reader(bytes(data))
    tag = r.u8()
    if tag == TAG_REQUEST:
        msg = RisRequest(r.lv(), r.lv(), r.u32(), r.take(cfg.mac_len))
    elif tag == TAG_RESPONSE:
        msg = RisResponse(r.lv(), r.u32(), r.take(cfg.mac_len))
    elif tag in (TAG_COMMAND, TAG_ACK):
        temp_id = r.take(cfg.temp_id_len)
        sqn = r.u32()
        ct = r.take(r.u16())
        cls = ProtectedCommand if tag == TAG_COMMAND else ProtectedAck
        msg = cls(temp_id, sqn, ct, r.take(cfg.mac_len))
    else:
        raise UnknownTag(f"unknown message tag 0x{tag:02x}")
    r.finish()
    return msg


def to_json(msg: WireMessage) -> dict:
    """Debug rendering with hex-encoded octet fields."""
    out = {"type": type(msg).__name__}
    for name, value in vars(msg).items():
        out[name] = value.hex() if isinstance(value, bytes) else value
    return out


# command payloads

@dataclass(frozen=True)
class PhaseConfig:
    bits_per_element: int
    states: tuple[int, ...]


@dataclass(frozen=True)
class KeyRenewal:
    nonce: bytes


@dataclass(frozen=True)
class CapabilityExchange:
    config: SecurityConfig


CommandPayload = Union[PhaseConfig, KeyRenewal, CapabilityExchange]

_HASH_CODES = {HashAlg.SHA256: 0x01, HashAlg.SHA384: 0x02, HashAlg.SHA3_512: 0x03}
_HASH_BY_CODE = {v: k for k, v in _HASH_CODES.items()}
_ENC_CODES = {"AES-128-CTR": 0x01}
_ENC_BY_CODE = {v: k for k, v in _ENC_CODES.items()}


def pack_phase_config(states, bits_per_element: int) -> bytes:
    """Bit-pack element states, element i at bit offset i*b, LSB-first within octets."""
    b = bits_per_element
    if not 1 <= b <= 8:
        raise StateOutOfRange(f"bits_per_element={b} outside 1..8")
    states = list(states)
    if len(states) > 0xFFFF:
        raise FieldTooLong(f"{len(states)} elements, limit 65535")
    acc = 0
    for i, s in enumerate(states):
        if not 0 <= s < (1 << b):
            raise StateOutOfRange(f"state {s} at element {i} does not fit {b} bits")
        acc |= s << (i * b)
    nbytes = (len(states) * b + 7) // 8
    return len(states).to_bytes(2, "big") + bytes([b]) + acc.to_bytes(nbytes, "little")


def unpack_phase_config(body: bytes) -> PhaseConfig:
    r = _Reader(bytes(body))
    count = r.u16()
    b = r.u8()
    if not 1 <= b <= 8:
        raise StateOutOfRange(f"bits_per_element={b} outside 1..8")
    nbits = count * b
    acc = int.from_bytes(r.take((nbits + 7) // 8), "little")
    r.finish()
    if acc >> nbits:
        raise StateOutOfRange("non-zero padding bits after the last element")
    mask = (1 << b) - 1
    return PhaseConfig(b, tuple((acc >> (i * b)) & mask for i in range(count)))


def _encode_config(cfg: SecurityConfig) -> bytes:
    return bytes([_HASH_CODES[cfg.hash_alg], cfg.key_len, cfg.temp_id_len, cfg.mac_len,
                  cfg.result_len, _ENC_CODES[cfg.enc_alg]])


def _decode_config(body: bytes) -> SecurityConfig:
    r = _Reader(bytes(body))
    h, key_len, temp_id_len, mac_len, result_len, enc = r.take(6)
    r.finish()
    if h not in _HASH_BY_CODE or enc not in _ENC_BY_CODE:
        raise DecodeError(f"unknown algorithm code (hash 0x{h:02x}, enc 0x{enc:02x})")
    try:
        return SecurityConfig(_HASH_BY_CODE[h], key_len, temp_id_len, mac_len, result_len, _ENC_BY_CODE[enc])
    except (InvalidLength, ValueError) as exc:
        raise DecodeError(f"invalid security config: {exc}") from exc


def encode_payload(payload: CommandPayload) -> bytes:
    if isinstance(payload, PhaseConfig):
        return bytes([OP_PHASE_CONFIG]) + pack_phase_config(payload.states, payload.bits_per_element)
    if isinstance(payload, KeyRenewal):
        if not payload.nonce:
            raise FieldTooLong("renewal nonce must not be empty")
        return bytes([OP_KEY_RENEWAL]) + _lv(payload.nonce, "nonce")
    if isinstance(payload, CapabilityExchange):
        return bytes([OP_CAPABILITY]) + _encode_config(payload.config)
    raise TypeError(f"not a command payload: {type(payload).__name__}")


def decode_payload(data: bytes) -> CommandPayload:
    if not data:
        raise Truncated("empty command payload")
    op, body = data[0], bytes(data[1:])
    if op == OP_PHASE_CONFIG:
        return unpack_phase_config(body)
    if op == OP_KEY_RENEWAL:
        r = _Reader(body)
        nonce = r.lv()
        r.finish()
        if not nonce:
            raise DecodeError("empty renewal nonce")
        return KeyRenewal(nonce)
    if op == OP_CAPABILITY:
        return CapabilityExchange(_decode_config(body))
    raise UnknownTag(f"unknown command opcode 0x{op:02x}")


_OPCODES = {PhaseConfig: OP_PHASE_CONFIG, KeyRenewal: OP_KEY_RENEWAL, CapabilityExchange: OP_CAPABILITY}


def opcode(payload: CommandPayload) -> int:
    return _OPCODES[type(payload)]
