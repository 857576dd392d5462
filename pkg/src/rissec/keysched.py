"""Temporary-ID / key derivation, the protocol MACs and the identity proof.

Every keyed computation is an HMAC over a framed input::

    domain octet || field || field || ...

where each variable-length field carries a one-octet length prefix and the
SQN is four octets big-endian. Domain octets:

    0x01  registration request MAC   (key: shared secret)
    0x02  expected result / proof    (key: K)
    0x03  registration response MAC  (key: shared secret)
    0x04  command / ack MAC          (key: K)
    0x05  cipher key from K          (only when key_len != 16)
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from rissec.crypto.hashing import HashAlg, HmacKey, hmac, truncate
from rissec.errors import ConfigTooLong, InvalidLength, NonceReuse, SqnExhausted

SQN_MAX = 0xFFFFFFFF
# commands need two SQN values (command + ack); refuse before the last pair
SQN_ROTATE_MARGIN = 2
NONCE_HISTORY = 64

DOWNLINK = 0
UPLINK = 1

_DOMAIN_REQUEST = b"\x01"
_DOMAIN_RESULT = b"\x02"
_DOMAIN_RESPONSE = b"\x03"
_DOMAIN_COMMAND = b"\x04"
_DOMAIN_CIPHER_KEY = b"\x05"


@dataclass(frozen=True)
class SecurityConfig:
    """Algorithm and length choices preconfigured identically on both sides."""

    hash_alg: HashAlg = HashAlg.SHA256
    key_len: int = 16
    temp_id_len: int = 8
    mac_len: int = 8
    result_len: int = 16
    enc_alg: str = "AES-128-CTR"

    def __post_init__(self):
        for name in ("key_len", "temp_id_len", "mac_len", "result_len"):
            value = getattr(self, name)
            if not 4 <= value <= 255:
                raise InvalidLength(f"{name}={value} outside 4..255")
        size = self.hash_alg.digest_size
        if self.temp_id_len + self.key_len > size:
            raise ConfigTooLong(
                f"temp_id_len + key_len = {self.temp_id_len + self.key_len} > {size} ({self.hash_alg.name})")
        if self.mac_len > size or self.result_len > size:
            raise ConfigTooLong("tag length exceeds hash output")
        if self.enc_alg != "AES-128-CTR":
            raise ValueError(f"unsupported cipher {self.enc_alg!r}")


def _lv(value: bytes) -> bytes:
    if len(value) > 255:
        raise InvalidLength(f"field of {len(value)} octets cannot be length-prefixed")
    return bytes([len(value)]) + value


def _sqn(sqn: int) -> bytes:
    if not 0 <= sqn <= SQN_MAX:
        raise InvalidLength(f"SQN out of range: {sqn}")
    return sqn.to_bytes(4, "big")


def _check_nonce(nonce: bytes):
    if not 1 <= len(nonce) <= 255:
        raise InvalidLength(f"nonce must be 1..255 octets, got {len(nonce)}")


def derive_key_and_id(secret: bytes, nonce: bytes, cfg: SecurityConfig) -> tuple[bytes, bytes]:
    """Return ``(temp_id, k)`` taken from HMAC(secret, len(nonce) || nonce)."""
    _check_nonce(nonce)
    h = hmac(cfg.hash_alg, secret, _lv(nonce))
    if cfg.temp_id_len + cfg.key_len > len(h):
        raise ConfigTooLong(f"need {cfg.temp_id_len + cfg.key_len} octets, hash gives {len(h)}")
    temp_id = h[:cfg.temp_id_len]
    k = h[cfg.temp_id_len:cfg.temp_id_len + cfg.key_len]
    return temp_id, k


def compute_request_mac(secret: bytes, default_id: bytes, nonce: bytes, sqn: int, cfg: SecurityConfig) -> bytes:
    msg = _DOMAIN_REQUEST + _lv(default_id) + _lv(nonce) + _sqn(sqn)
    return truncate(hmac(cfg.hash_alg, secret, msg), cfg.mac_len)


def compute_result(k: bytes, default_id: bytes, nonce: bytes, cfg: SecurityConfig) -> bytes:
    """Proof of the default identity, computable only with K."""
    msg = _DOMAIN_RESULT + _lv(default_id) + _lv(nonce)
    return truncate(hmac(cfg.hash_alg, k, msg), cfg.result_len)


def compute_response_mac(secret: bytes, default_id: bytes, result: bytes, sqn: int, cfg: SecurityConfig) -> bytes:
    msg = _DOMAIN_RESPONSE + _lv(default_id) + _lv(result) + _sqn(sqn)
    return truncate(hmac(cfg.hash_alg, secret, msg), cfg.mac_len)


def compute_command_mac(k: bytes, temp_id: bytes, sqn: int, direction: int, ciphertext: bytes,
                        cfg: SecurityConfig) -> bytes:
    if direction not in (DOWNLINK, UPLINK):
        raise ValueError("direction must be 0 (downlink) or 1 (uplink)")
    msg = _DOMAIN_COMMAND + bytes([direction]) + temp_id + _sqn(sqn) + ciphertext
    return truncate(hmac(cfg.hash_alg, k, msg), cfg.mac_len)


def cipher_key(k: bytes, cfg: SecurityConfig) -> bytes:
    """AES-128 key for payload encryption: K itself when it is 16 octets."""
    if len(k) == 16:
        return bytes(k)
    return truncate(HmacKey(cfg.hash_alg, k).digest(_DOMAIN_CIPHER_KEY), 16)


class ContextState(enum.Enum):
    IDLE = "idle"
    AWAITING_RESPONSE = "awaiting_response"
    REGISTERED = "registered"


@dataclass(eq=False)
class SecurityContext:
    """Per-device security state held by one endpoint.

    ``k`` is kept in a bytearray so :meth:`wipe` can overwrite it in place.
    """

    shared_secret: bytes
    cfg: SecurityConfig
    state: ContextState = ContextState.IDLE
    next_sqn: int = 1
    nonce: bytes | None = None
    temp_id: bytes | None = None
    k: bytearray | None = None
    expected_result: bytes | None = None
    pending_sqn: int | None = None
    nonce_history: deque = field(default_factory=lambda: deque(maxlen=NONCE_HISTORY))
    temp_id_history: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.shared_secret) < 16:
            raise InvalidLength("shared secret must be at least 16 octets")

    def remember_nonce(self, nonce: bytes):
        if nonce in self.nonce_history:
            raise NonceReuse(nonce.hex())
        self.nonce_history.append(bytes(nonce))

    def install(self, nonce: bytes, temp_id: bytes, k: bytes):
        if self.temp_id is not None:
            self.temp_id_history.append(self.temp_id)
        self.wipe_key()
        self.nonce = bytes(nonce)
        self.temp_id = bytes(temp_id)
        self.k = bytearray(k)

    def take_sqn(self) -> int:
        """Return the next SQN to send and advance the counter."""
        if self.next_sqn > SQN_MAX - SQN_ROTATE_MARGIN:
            raise SqnExhausted(f"SQN {self.next_sqn} too close to wraparound")
        sqn = self.next_sqn
        self.next_sqn += 1
        return sqn

    def wipe_key(self):
        if self.k is not None:
            for i in range(len(self.k)):
                self.k[i] = 0
        self.k = None

    def wipe(self):
        """Tear down: zero K and drop every derived value."""
        self.wipe_key()
        self.state = ContextState.IDLE
        self.temp_id = None
        self.expected_result = None
        self.pending_sqn = None


def rotate(ctx: SecurityContext, new_nonce: bytes, cfg: SecurityConfig | None = None) -> tuple[bytes, bytes]:
    """Re-derive ``(temp_id, k)`` from a fresh nonce and install them.

    The SQN keeps counting. Raises NonceReuse if the nonce is still in the
    context's (bounded) history.
    """
    cfg = cfg or ctx.cfg
    _check_nonce(new_nonce)
    if new_nonce in ctx.nonce_history:
        raise NonceReuse(new_nonce.hex())
    temp_id, k = derive_key_and_id(ctx.shared_secret, new_nonce, cfg)
    ctx.remember_nonce(new_nonce)
    ctx.install(new_nonce, temp_id, k)
    return temp_id, k
