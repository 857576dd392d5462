"""SNOW 3G keystream generator and the UIA2 / 128-EIA1 integrity function.

Both S-boxes are generated rather than tabulated: SR is the AES S-box and
SQ is the Dickson polynomial g49 over GF(2^8)/0x169, XOR 0x25. The LFSR
feedback multiplications by alpha and alpha^-1 are the usual MULa/DIVa
byte tables.

The integrity tag is 64 bits wide. Its most significant 32 bits are the
standard MAC-I; the low 32 bits extend the final one-time pad with the
sixth keystream word, so truncation to 4 octets gives back UIA2 exactly.
"""

import numpy as np
from numba import njit

from rissec.crypto.aes import SBOX as _SR
from rissec.errors import InvalidLength

_M32 = 0xFFFFFFFF


def _mulx(v, c):
    return ((v << 1) ^ c) & 0xFF if v & 0x80 else v << 1


def _mulx_pow(v, i, c):
    for _ in range(i):
        v = _mulx(v, c)
    return v


def _gf_mul(a, b, poly):
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        if a & 0x100:
            a ^= poly
        b >>= 1
    return out


def _gf_pow(a, e, poly):
    out = 1
    while e:
        if e & 1:
            out = _gf_mul(out, a, poly)
        a = _gf_mul(a, a, poly)
        e >>= 1
    return out


def _build_sq():
    exps = (1, 9, 13, 15, 33, 41, 45, 47, 49)
    sq = []
    for x in range(256):
        acc = 0
        for e in exps:
            acc ^= _gf_pow(x, e, 0x169)
        sq.append(acc ^ 0x25)
    return sq


SQ = _build_sq()


def _mix_table(sbox, c):
    """T-tables of S(w) = MixColumn(sbox bytes) with the given MULx constant."""
    t = np.zeros((4, 256), dtype=np.int64)
    for x in range(256):
        s = sbox[x]
        s2 = _mulx(s, c)
        s3 = s2 ^ s
        # contribution of input byte w_i to output bytes (r0, r1, r2, r3)
        cols = ((s2, s3, s, s), (s, s2, s3, s), (s, s, s2, s3), (s3, s, s, s2))
        for i, (r0, r1, r2, r3) in enumerate(cols):
            t[i, x] = (r0 << 24) | (r1 << 16) | (r2 << 8) | r3
    return t


_S1 = _mix_table(_SR, 0x1B)
_S2 = _mix_table(SQ, 0x69)


def _alpha_tables():
    mula = np.zeros(256, dtype=np.int64)
    diva = np.zeros(256, dtype=np.int64)
    for c in range(256):
        mula[c] = (_mulx_pow(c, 23, 0xA9) << 24) | (_mulx_pow(c, 245, 0xA9) << 16) \
            | (_mulx_pow(c, 48, 0xA9) << 8) | _mulx_pow(c, 239, 0xA9)
        diva[c] = (_mulx_pow(c, 16, 0xA9) << 24) | (_mulx_pow(c, 39, 0xA9) << 16) \
            | (_mulx_pow(c, 6, 0xA9) << 8) | _mulx_pow(c, 64, 0xA9)
    return mula, diva


_MULA, _DIVA = _alpha_tables()


@njit(cache=True, inline="always")
def _sbox_apply(t, w):
    return t[0, (w >> 24) & 0xFF] ^ t[1, (w >> 16) & 0xFF] ^ t[2, (w >> 8) & 0xFF] ^ t[3, w & 0xFF]


@njit(cache=True, inline="always")
def _clock_fsm(s, fsm, s1, s2):
    f = ((s[15] + fsm[0]) & 0xFFFFFFFF) ^ fsm[1]
    r = (fsm[1] + (fsm[2] ^ s[5])) & 0xFFFFFFFF
    fsm[2] = _sbox_apply(s2, fsm[1])
    fsm[1] = _sbox_apply(s1, fsm[0])
    fsm[0] = r
    return f


@njit(cache=True, inline="always")
def _clock_lfsr(s, mula, diva, f):
    v = ((s[0] << 8) & 0xFFFFFFFF) ^ mula[(s[0] >> 24) & 0xFF] ^ s[2] \
        ^ (s[11] >> 8) ^ diva[s[11] & 0xFF] ^ f
    for i in range(15):
        s[i] = s[i + 1]
    s[15] = v


@njit(cache=True)
def _keystream_kernel(key, iv, n, s1, s2, mula, diva):
    # key = (k0, k1, k2, k3), iv = (IV0, IV1, IV2, IV3)
    one = 0xFFFFFFFF
    k0, k1, k2, k3 = key[0], key[1], key[2], key[3]
    s = np.empty(16, dtype=np.int64)
    s[15] = k3 ^ iv[0]
    s[14] = k2
    s[13] = k1
    s[12] = k0 ^ iv[1]
    s[11] = k3 ^ one
    s[10] = k2 ^ one ^ iv[2]
    s[9] = k1 ^ one ^ iv[3]
    s[8] = k0 ^ one
    s[7] = k3
    s[6] = k2
    s[5] = k1
    s[4] = k0
    s[3] = k3 ^ one
    s[2] = k2 ^ one
    s[1] = k1 ^ one
    s[0] = k0 ^ one
    fsm = np.zeros(3, dtype=np.int64)
    for _ in range(32):
        f = _clock_fsm(s, fsm, s1, s2)
        _clock_lfsr(s, mula, diva, f)
    _clock_fsm(s, fsm, s1, s2)
    _clock_lfsr(s, mula, diva, 0)
    z = np.empty(n, dtype=np.int64)
    for t in range(n):
        f = _clock_fsm(s, fsm, s1, s2)
        z[t] = f ^ s[0]
        _clock_lfsr(s, mula, diva, 0)
    return z


@njit(cache=True, inline="always")
def _mul64x(hi, lo):
    carry = hi >> 31
    hi = ((hi << 1) | (lo >> 31)) & 0xFFFFFFFF
    lo = (lo << 1) & 0xFFFFFFFF
    if carry:
        lo ^= 0x1B
    return hi, lo


@njit(cache=True)
def _eval_kernel(p_hi, p_lo, q_hi, q_lo, msg, nbits):
    """Horner evaluation of the message polynomial at P, then one multiply by Q."""
    # powers P * x^i in GF(2^64) / x^64 + x^4 + x^3 + x + 1
    pw_hi = np.empty(64, dtype=np.int64)
    pw_lo = np.empty(64, dtype=np.int64)
    h, l = p_hi, p_lo
    for i in range(64):
        pw_hi[i] = h
        pw_lo[i] = l
        h, l = _mul64x(h, l)
    ev_hi = np.int64(0)
    ev_lo = np.int64(0)
    nblocks = (nbits + 63) // 64
    nbytes = msg.size
    for b in range(nblocks):
        m_hi = np.int64(0)
        m_lo = np.int64(0)
        base = 8 * b
        for j in range(4):
            m_hi = (m_hi << 8) | (np.int64(msg[base + j]) if base + j < nbytes else 0)
        for j in range(4, 8):
            m_lo = (m_lo << 8) | (np.int64(msg[base + j]) if base + j < nbytes else 0)
        v_hi = ev_hi ^ m_hi
        v_lo = ev_lo ^ m_lo
        ev_hi = np.int64(0)
        ev_lo = np.int64(0)
        for i in range(32):
            if (v_lo >> i) & 1:
                ev_hi ^= pw_hi[i]
                ev_lo ^= pw_lo[i]
            if (v_hi >> i) & 1:
                ev_hi ^= pw_hi[i + 32]
                ev_lo ^= pw_lo[i + 32]
    ev_hi ^= (nbits >> 32) & 0xFFFFFFFF
    ev_lo ^= nbits & 0xFFFFFFFF
    # final multiply by Q
    h, l = q_hi, q_lo
    r_hi = np.int64(0)
    r_lo = np.int64(0)
    for i in range(64):
        bit = (ev_lo >> i) & 1 if i < 32 else (ev_hi >> (i - 32)) & 1
        if bit:
            r_hi ^= h
            r_lo ^= l
        h, l = _mul64x(h, l)
    return r_hi, r_lo


def _key_words(key: bytes) -> np.ndarray:
    if len(key) != 16:
        raise InvalidLength(f"SNOW 3G key must be 16 octets, got {len(key)}")
    # first key octets form k3
    w = [int.from_bytes(key[i:i + 4], "big") for i in range(0, 16, 4)]
    return np.array(w[::-1], dtype=np.int64)


def keystream(key: bytes, iv: tuple[int, int, int, int], n: int) -> list[int]:
    """Return ``n`` 32-bit keystream words for ``iv`` = (IV0, IV1, IV2, IV3)."""
    ivw = np.array([v & _M32 for v in iv], dtype=np.int64)
    z = _keystream_kernel(_key_words(key), ivw, n, _S1, _S2, _MULA, _DIVA)
    return [int(v) for v in z]


def f8(key: bytes, count: int, bearer: int, direction: int, data: bytes, bit_length: int | None = None) -> bytes:
    """UEA2 / 128-EEA1 confidentiality: XOR ``data`` with the SNOW 3G keystream."""
    if bit_length is None:
        bit_length = 8 * len(data)
    iv2 = ((bearer & 0x1F) << 27) | ((direction & 1) << 26)
    iv = (iv2, count, iv2, count)
    nwords = (bit_length + 31) // 32
    ks = b"".join(w.to_bytes(4, "big") for w in keystream(key, iv, nwords))
    nbytes = (bit_length + 7) // 8
    out = bytearray(a ^ b for a, b in zip(data[:nbytes], ks))
    if bit_length % 8:
        out[-1] &= (0xFF << (8 - bit_length % 8)) & 0xFF
    return bytes(out)


def f9(key: bytes, count: int, fresh: int, direction: int, msg: bytes,
       bit_length: int | None = None) -> bytes:
    """UIA2 integrity extended to 64 bits (see module docstring)."""
    if bit_length is None:
        bit_length = 8 * len(msg)
    if bit_length > 8 * len(msg):
        raise InvalidLength("bit_length exceeds message")
    data = bytearray(msg[:(bit_length + 7) // 8])
    if bit_length % 8:
        data[-1] &= (0xFF << (8 - bit_length % 8)) & 0xFF
    count &= _M32
    fresh &= _M32
    d = direction & 1
    iv = (fresh ^ (d << 15), count ^ (d << 31), fresh, count)
    z = keystream(key, iv, 6)
    arr = np.frombuffer(bytes(data), dtype=np.uint8) if data else np.zeros(0, dtype=np.uint8)
    hi, lo = _eval_kernel(z[0], z[1], z[2], z[3], arr, bit_length)
    tag = ((int(hi) ^ z[4]) << 32) | (int(lo) ^ z[5])
    return tag.to_bytes(8, "big")


def snow3g_mac(key: bytes, count: int, direction: int, msg: bytes, *, bearer: int = 0,
               mac_len: int = 8, bit_length: int | None = None) -> bytes:
    """128-EIA1-style tag (FRESH = BEARER || 0^27), truncated to ``mac_len`` octets."""
    if not 1 <= mac_len <= 8:
        raise InvalidLength(f"SNOW 3G tag length must be 1..8, got {mac_len}")
    return f9(key, count, (bearer & 0x1F) << 27, direction, msg, bit_length)[:mac_len]
