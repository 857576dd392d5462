"""AES-128 forward/inverse cipher, counter mode and CMAC (FIPS 197, SP 800-38A/B).

The forward cipher uses the classic four 32-bit T-tables. The per-block
loops for CTR and CMAC are compiled with numba; everything else is plain
Python. All kernels work on int64 lanes holding 32-bit words so numba
never has to mix signed and unsigned arithmetic.
"""

import numpy as np
from numba import njit

from rissec.errors import InvalidLength

BLOCK = 16
_M32 = 0xFFFFFFFF


def _xtime(b):
    b <<= 1
    return (b ^ 0x11B) if b & 0x100 else b


def _gmul(a, b):
    out = 0
    while b:
        if b & 1:
            out ^= a
        a = _xtime(a)
        b >>= 1
    return out


def _build_sbox():
    # log/antilog tables over the generator 0x03
    exp = [0] * 255
    log = [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x = _gmul(x, 3)
    sbox = [0] * 256
    for a in range(256):
        inv = 0 if a == 0 else exp[(255 - log[a]) % 255]
        s = inv
        for shift in (1, 2, 3, 4):
            s ^= ((inv << shift) | (inv >> (8 - shift))) & 0xFF
        sbox[a] = s ^ 0x63
    inv_sbox = [0] * 256
    for a, s in enumerate(sbox):
        inv_sbox[s] = a
    return sbox, inv_sbox


SBOX, INV_SBOX = _build_sbox()


def _rotr8(w):
    return ((w >> 8) | (w << 24)) & _M32


def _build_tables():
    te = np.zeros((4, 256), dtype=np.int64)
    for a in range(256):
        s = SBOX[a]
        w = (_gmul(s, 2) << 24) | (s << 16) | (s << 8) | _gmul(s, 3)
        for i in range(4):
            te[i, a] = w
            w = _rotr8(w)
    return te


_TE = _build_tables()
_SB = np.array(SBOX, dtype=np.int64)


def expand_key(key: bytes) -> np.ndarray:
    """Return the 44 round-key words of an AES-128 key."""
    if len(key) != 16:
        raise InvalidLength(f"AES-128 key must be 16 octets, got {len(key)}")
    w = [int.from_bytes(key[4 * i:4 * i + 4], "big") for i in range(4)]
    rcon = 1
    for i in range(4, 44):
        t = w[i - 1]
        if i % 4 == 0:
            t = ((t << 8) | (t >> 24)) & _M32
            t = (SBOX[t >> 24] << 24) | (SBOX[(t >> 16) & 0xFF] << 16) | (SBOX[(t >> 8) & 0xFF] << 8) | SBOX[t & 0xFF]
            t ^= rcon << 24
            rcon = _xtime(rcon)
        w.append(w[i - 4] ^ t)
    return np.array(w, dtype=np.int64)


@njit(cache=True, inline="always")
def _encrypt_words(rk, te, sb, s0, s1, s2, s3):
    s0 ^= rk[0]
    s1 ^= rk[1]
    s2 ^= rk[2]
    s3 ^= rk[3]
    for r in range(1, 10):
        k = 4 * r
        t0 = te[0, s0 >> 24] ^ te[1, (s1 >> 16) & 0xFF] ^ te[2, (s2 >> 8) & 0xFF] ^ te[3, s3 & 0xFF] ^ rk[k]
        t1 = te[0, s1 >> 24] ^ te[1, (s2 >> 16) & 0xFF] ^ te[2, (s3 >> 8) & 0xFF] ^ te[3, s0 & 0xFF] ^ rk[k + 1]
        t2 = te[0, s2 >> 24] ^ te[1, (s3 >> 16) & 0xFF] ^ te[2, (s0 >> 8) & 0xFF] ^ te[3, s1 & 0xFF] ^ rk[k + 2]
        t3 = te[0, s3 >> 24] ^ te[1, (s0 >> 16) & 0xFF] ^ te[2, (s1 >> 8) & 0xFF] ^ te[3, s2 & 0xFF] ^ rk[k + 3]
        s0, s1, s2, s3 = t0, t1, t2, t3
    o0 = ((sb[s0 >> 24] << 24) | (sb[(s1 >> 16) & 0xFF] << 16) | (sb[(s2 >> 8) & 0xFF] << 8) | sb[s3 & 0xFF]) ^ rk[40]
    o1 = ((sb[s1 >> 24] << 24) | (sb[(s2 >> 16) & 0xFF] << 16) | (sb[(s3 >> 8) & 0xFF] << 8) | sb[s0 & 0xFF]) ^ rk[41]
    o2 = ((sb[s2 >> 24] << 24) | (sb[(s3 >> 16) & 0xFF] << 16) | (sb[(s0 >> 8) & 0xFF] << 8) | sb[s1 & 0xFF]) ^ rk[42]
    o3 = ((sb[s3 >> 24] << 24) | (sb[(s0 >> 16) & 0xFF] << 16) | (sb[(s1 >> 8) & 0xFF] << 8) | sb[s2 & 0xFF]) ^ rk[43]
    return o0, o1, o2, o3


@njit(cache=True, inline="always")
def _load_word(buf, off):
    return (np.int64(buf[off]) << 24) | (np.int64(buf[off + 1]) << 16) | (np.int64(buf[off + 2]) << 8) | np.int64(buf[off + 3])


@njit(cache=True, inline="always")
def _store_word(buf, off, w):
    buf[off] = (w >> 24) & 0xFF
    buf[off + 1] = (w >> 16) & 0xFF
    buf[off + 2] = (w >> 8) & 0xFF
    buf[off + 3] = w & 0xFF


@njit(cache=True)
def _encrypt_block_kernel(rk, te, sb, inp, out):
    o0, o1, o2, o3 = _encrypt_words(rk, te, sb, _load_word(inp, 0), _load_word(inp, 4),
                                    _load_word(inp, 8), _load_word(inp, 12))
    _store_word(out, 0, o0)
    _store_word(out, 4, o1)
    _store_word(out, 8, o2)
    _store_word(out, 12, o3)


@njit(cache=True)
def _ctr_kernel(rk, te, sb, iv, data, out):
    i0 = _load_word(iv, 0)
    i1 = _load_word(iv, 4)
    i2 = _load_word(iv, 8)
    ctr = _load_word(iv, 12)
    ks = np.empty(16, dtype=np.uint8)
    n = data.size
    off = 0
    while off < n:
        k0, k1, k2, k3 = _encrypt_words(rk, te, sb, i0, i1, i2, ctr)
        _store_word(ks, 0, k0)
        _store_word(ks, 4, k1)
        _store_word(ks, 8, k2)
        _store_word(ks, 12, k3)
        m = min(16, n - off)
        for j in range(m):
            out[off + j] = data[off + j] ^ ks[j]
        ctr = (ctr + 1) & 0xFFFFFFFF
        off += 16


@njit(cache=True)
def _cmac_kernel(rk, te, sb, k1, k2, data, out):
    n = data.size
    nblocks = (n + 15) // 16
    if nblocks == 0:
        nblocks = 1
    complete = n > 0 and n % 16 == 0
    x0 = np.int64(0)
    x1 = np.int64(0)
    x2 = np.int64(0)
    x3 = np.int64(0)
    for b in range(nblocks - 1):
        off = 16 * b
        x0, x1, x2, x3 = _encrypt_words(rk, te, sb,
                                        x0 ^ _load_word(data, off), x1 ^ _load_word(data, off + 4),
                                        x2 ^ _load_word(data, off + 8), x3 ^ _load_word(data, off + 12))
    last = np.zeros(16, dtype=np.uint8)
    off = 16 * (nblocks - 1)
    rem = n - off
    for j in range(rem):
        last[j] = data[off + j]
    if complete:
        sub = k1
    else:
        last[rem] = 0x80
        sub = k2
    x0, x1, x2, x3 = _encrypt_words(rk, te, sb,
                                    x0 ^ _load_word(last, 0) ^ sub[0], x1 ^ _load_word(last, 4) ^ sub[1],
                                    x2 ^ _load_word(last, 8) ^ sub[2], x3 ^ _load_word(last, 12) ^ sub[3])
    _store_word(out, 0, x0)
    _store_word(out, 4, x1)
    _store_word(out, 8, x2)
    _store_word(out, 12, x3)


def _as_u8(data) -> np.ndarray:
    return np.frombuffer(data, dtype=np.uint8) if len(data) else np.zeros(0, dtype=np.uint8)


def _double(block: bytes) -> bytes:
    v = int.from_bytes(block, "big") << 1
    if v >> 128:
        v ^= (1 << 128) | 0x87
    return v.to_bytes(16, "big")


class Aes128:
    """An expanded AES-128 key; reuse it to keep the key schedule out of hot loops."""

    __slots__ = ("_rk", "_cmac_subkeys")

    def __init__(self, key: bytes):
        self._rk = expand_key(bytes(key))
        self._cmac_subkeys = None

    def encrypt_block(self, block: bytes) -> bytes:
        if len(block) != BLOCK:
            raise InvalidLength(f"AES block must be 16 octets, got {len(block)}")
        out = np.empty(16, dtype=np.uint8)
        _encrypt_block_kernel(self._rk, _TE, _SB, _as_u8(block), out)
        return out.tobytes()

    def decrypt_block(self, block: bytes) -> bytes:
        if len(block) != BLOCK:
            raise InvalidLength(f"AES block must be 16 octets, got {len(block)}")
        return _inverse_cipher(self._rk, block)

    def ctr(self, iv: bytes, data: bytes, out: np.ndarray | None = None) -> bytes | np.ndarray:
        """XOR ``data`` with the keystream starting at counter block ``iv``.

        The counter is the last four octets of ``iv`` (big-endian, mod 2**32).
        When ``out`` is given the result is written there and ``out`` returned.
        """
        if len(iv) != BLOCK:
            raise InvalidLength(f"CTR IV must be 16 octets, got {len(iv)}")
        src = _as_u8(data)
        dst = np.empty(src.size, dtype=np.uint8) if out is None else out
        if dst.size != src.size:
            raise InvalidLength("output buffer size differs from input")
        _ctr_kernel(self._rk, _TE, _SB, _as_u8(iv), src, dst)
        return dst.tobytes() if out is None else dst

    def cmac(self, msg: bytes, mac_len: int = 16) -> bytes:
        if not 1 <= mac_len <= 16:
            raise InvalidLength(f"CMAC tag length must be 1..16, got {mac_len}")
        if self._cmac_subkeys is None:
            k1 = _double(self.encrypt_block(bytes(16)))
            k2 = _double(k1)
            self._cmac_subkeys = tuple(
                np.array([int.from_bytes(k[i:i + 4], "big") for i in range(0, 16, 4)], dtype=np.int64)
                for k in (k1, k2)
            )
        out = np.empty(16, dtype=np.uint8)
        _cmac_kernel(self._rk, _TE, _SB, *self._cmac_subkeys, _as_u8(msg), out)
        return out.tobytes()[:mac_len]


def _inv_mix(col):
    a0, a1, a2, a3 = col
    return [
        _gmul(a0, 14) ^ _gmul(a1, 11) ^ _gmul(a2, 13) ^ _gmul(a3, 9),
        _gmul(a0, 9) ^ _gmul(a1, 14) ^ _gmul(a2, 11) ^ _gmul(a3, 13),
        _gmul(a0, 13) ^ _gmul(a1, 9) ^ _gmul(a2, 14) ^ _gmul(a3, 11),
        _gmul(a0, 11) ^ _gmul(a1, 13) ^ _gmul(a2, 9) ^ _gmul(a3, 14),
    ]


def _inverse_cipher(rk: np.ndarray, block: bytes) -> bytes:
    # state[c][r]: column-major, as in FIPS 197
    words = [int(w) for w in rk]

    def add_round_key(state, rnd):
        for c in range(4):
            k = words[4 * rnd + c]
            for r in range(4):
                state[c][r] ^= (k >> (24 - 8 * r)) & 0xFF

    state = [list(block[4 * c:4 * c + 4]) for c in range(4)]
    add_round_key(state, 10)
    for rnd in range(9, -1, -1):
        # InvShiftRows: row r moves right by r
        state = [[state[(c - r) % 4][r] for r in range(4)] for c in range(4)]
        state = [[INV_SBOX[b] for b in col] for col in state]
        add_round_key(state, rnd)
        if rnd:
            state = [_inv_mix(col) for col in state]
    return bytes(b for col in state for b in col)


def aes128_encrypt_block(key: bytes, block: bytes) -> bytes:
    return Aes128(key).encrypt_block(block)


def aes128_decrypt_block(key: bytes, block: bytes) -> bytes:
    return Aes128(key).decrypt_block(block)


def aes_ctr(key: bytes, iv: bytes, data: bytes) -> bytes:
    return Aes128(key).ctr(iv, data)


def aes_cmac(key: bytes, msg: bytes, mac_len: int = 16) -> bytes:
    return Aes128(key).cmac(msg, mac_len)


def ctr_iv(sqn: int, direction: int, block_counter: int = 0) -> bytes:
    """Counter block for protocol payloads: SQN || direction || 7 zero octets || counter."""
    if not 0 <= sqn <= _M32:
        raise InvalidLength(f"SQN out of range: {sqn}")
    if direction not in (0, 1):
        raise ValueError("direction must be 0 (downlink) or 1 (uplink)")
    return sqn.to_bytes(4, "big") + bytes([direction]) + bytes(7) + block_counter.to_bytes(4, "big")
