"""SHA-2/SHA-3 digests and the HMAC construction over them.

The digests come from :mod:`hashlib`. HMAC is built here on top of
hashlib objects so that a keyed instance can be prepared once and then
reused per packet, which is what the benchmark timing loop needs.
"""

import enum
import hashlib
import hmac as _stdlib_hmac

from rissec.errors import InvalidKey, InvalidLength


class HashAlg(enum.Enum):
    SHA256 = "sha256"
    SHA384 = "sha384"
    SHA3_512 = "sha3_512"

    @property
    def digest_size(self) -> int:
        return _DIGEST_SIZE[self]

    @property
    def block_size(self) -> int:
        return _BLOCK_SIZE[self]

    def new(self, data: bytes = b""):
        return _CONSTRUCTORS[self](data)


_CONSTRUCTORS = {
    HashAlg.SHA256: hashlib.sha256,
    HashAlg.SHA384: hashlib.sha384,
    HashAlg.SHA3_512: hashlib.sha3_512,
}
_DIGEST_SIZE = {HashAlg.SHA256: 32, HashAlg.SHA384: 48, HashAlg.SHA3_512: 64}
# SHA3-512 absorbs 576-bit (72-octet) blocks.
_BLOCK_SIZE = {HashAlg.SHA256: 64, HashAlg.SHA384: 128, HashAlg.SHA3_512: 72}


def hash(alg: HashAlg, msg: bytes) -> bytes:  # noqa: A001 - mirrors the operation name
    return _CONSTRUCTORS[alg](msg).digest()


class HmacKey:
    """An HMAC key with its inner and outer pad states absorbed up front."""

    __slots__ = ("alg", "_inner", "_outer")

    def __init__(self, alg: HashAlg, key: bytes):
        if len(key) < 1:
            raise InvalidKey("HMAC key must be at least one octet")
        key = bytes(key)
        if len(key) > alg.block_size:
            key = hash(alg, key)
        key = key.ljust(alg.block_size, b"\x00")
        self.alg = alg
        self._inner = alg.new(bytes(b ^ 0x36 for b in key))
        self._outer = alg.new(bytes(b ^ 0x5C for b in key))

    def digest(self, msg: bytes) -> bytes:
        inner = self._inner.copy()
        inner.update(msg)
        outer = self._outer.copy()
        outer.update(inner.digest())
        return outer.digest()


def hmac(alg: HashAlg, key: bytes, msg: bytes) -> bytes:
    return HmacKey(alg, key).digest(msg)


def truncate(tag: bytes, length: int) -> bytes:
    """Keep the ``length`` most significant octets of ``tag``."""
    if not 0 < length <= len(tag):
        raise InvalidLength(f"cannot truncate {len(tag)} octets to {length}")
    return tag[:length]


def verify_tag(expected: bytes, received: bytes) -> bool:
    """Constant-time tag comparison; the only comparison the protocol uses."""
    return _stdlib_hmac.compare_digest(expected, received)
