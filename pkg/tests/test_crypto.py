import hashlib
import hmac as std_hmac
import os

import pytest
from cryptography.hazmat.primitives import cmac as c_cmac
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from hypothesis import given
from hypothesis import strategies as st

from rissec.crypto import (
    Aes128,
    HashAlg,
    HmacKey,
    aes128_decrypt_block,
    aes128_encrypt_block,
    aes_cmac,
    aes_ctr,
    check_vectors,
    ctr_iv,
    hash,
    hmac,
    run_vector_gate,
    snow3g_mac,
    truncate,
    verify_tag,
)
from rissec.crypto import snow3g
from rissec.errors import InvalidKey, InvalidLength, VectorGateFailed

STD = {HashAlg.SHA256: hashlib.sha256, HashAlg.SHA384: hashlib.sha384, HashAlg.SHA3_512: hashlib.sha3_512}
algs = st.sampled_from(list(HashAlg))
keys16 = st.binary(min_size=16, max_size=16)


@pytest.mark.parametrize("name,ok", check_vectors(), ids=[n for n, _ in check_vectors()])
def test_published_vector(name, ok):
    assert ok, name


def test_vector_gate_returns_elapsed():
    assert 0 <= run_vector_gate() < 1.0


def test_vector_gate_raises_on_mismatch(monkeypatch):
    from rissec.crypto import vectors
    monkeypatch.setattr(vectors, "_checks", lambda: iter([("broken", False), ("fine", True)]))
    with pytest.raises(VectorGateFailed) as exc:
        vectors.run_vector_gate()
    assert exc.value.failures == ["broken"]


# hashing and HMAC against hashlib / stdlib hmac

def test_sha256_empty():
    assert hash(HashAlg.SHA256, b"").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


@pytest.mark.parametrize("alg,size,block", [(HashAlg.SHA256, 32, 64), (HashAlg.SHA384, 48, 128),
                                            (HashAlg.SHA3_512, 64, 72)])
def test_sizes(alg, size, block):
    assert alg.digest_size == size
    assert alg.block_size == block
    assert len(hash(alg, b"abc")) == size


@given(algs, st.binary(max_size=300))
def test_hash_matches_hashlib(alg, msg):
    assert hash(alg, msg) == STD[alg](msg).digest()


@given(algs, st.binary(min_size=1, max_size=200), st.binary(max_size=300))
def test_hmac_matches_stdlib(alg, key, msg):
    expected = std_hmac.new(key, msg, STD[alg]).digest()
    assert hmac(alg, key, msg) == expected
    assert HmacKey(alg, key).digest(msg) == expected


@given(algs, st.binary(min_size=1, max_size=64), st.binary(max_size=64), st.integers(0, 10**6))
def test_hmac_key_bit_flip_changes_tag(alg, key, msg, pos):
    pos %= 8 * len(key)
    flipped = bytearray(key)
    flipped[pos // 8] ^= 1 << (pos % 8)
    assert hmac(alg, key, msg) != hmac(alg, bytes(flipped), msg)


def test_hmac_key_is_reusable():
    hk = HmacKey(HashAlg.SHA256, b"k" * 20)
    assert hk.digest(b"a") == hk.digest(b"a") == hmac(HashAlg.SHA256, b"k" * 20, b"a")


@pytest.mark.parametrize("alg", list(HashAlg))
def test_hmac_empty_key(alg):
    with pytest.raises(InvalidKey):
        hmac(alg, b"", b"msg")


def test_truncate_keeps_leading_octets():
    assert truncate(bytes(range(32)), 8) == bytes(range(8))
    with pytest.raises(InvalidLength):
        truncate(bytes(4), 5)


def test_verify_tag():
    assert verify_tag(b"abcd", b"abcd")
    assert not verify_tag(b"abcd", b"abce")
    assert not verify_tag(b"abcd", b"abc")


# AES against the cryptography package

def _ref_ecb(key, block):
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def _ref_ctr(key, iv, data):
    enc = Cipher(algorithms.AES(key), modes.CTR(iv)).encryptor()
    return enc.update(data) + enc.finalize()


def _ref_cmac(key, msg):
    c = c_cmac.CMAC(algorithms.AES(key))
    c.update(msg)
    return c.finalize()


def test_fips197_block():
    key = bytes(range(16))
    pt = bytes.fromhex("00112233445566778899aabbccddeeff")
    ct = aes128_encrypt_block(key, pt)
    assert ct.hex() == "69c4e0d86a7b0430d8cdb78070b4c55a"
    assert aes128_decrypt_block(key, ct) == pt


@given(keys16, st.binary(min_size=16, max_size=16))
def test_block_matches_reference(key, block):
    ct = aes128_encrypt_block(key, block)
    assert ct == _ref_ecb(key, block)
    assert aes128_decrypt_block(key, ct) == block


@given(keys16, st.binary(min_size=16, max_size=16), st.binary(min_size=16, max_size=16))
def test_block_is_a_permutation(key, a, b):
    if a != b:
        assert aes128_encrypt_block(key, a) != aes128_encrypt_block(key, b)


@pytest.mark.parametrize("bad", [b"", bytes(15), bytes(17), bytes(32)])
def test_bad_key_length(bad):
    with pytest.raises(InvalidLength):
        Aes128(bad)


def test_bad_block_length():
    with pytest.raises(InvalidLength):
        aes128_encrypt_block(bytes(16), bytes(15))
    with pytest.raises(InvalidLength):
        aes_ctr(bytes(16), bytes(15), b"x")


@given(keys16, st.binary(min_size=12, max_size=12), st.integers(0, 2**32 - 200), st.binary(max_size=600))
def test_ctr_matches_reference(key, prefix, counter, data):
    iv = prefix + counter.to_bytes(4, "big")
    assert aes_ctr(key, iv, data) == _ref_ctr(key, iv, data)


@given(keys16, st.binary(min_size=16, max_size=16), st.binary(max_size=300))
def test_ctr_self_inverse(key, iv, data):
    assert aes_ctr(key, iv, aes_ctr(key, iv, data)) == data


def test_ctr_empty_and_first_block():
    key, iv = os.urandom(16), os.urandom(16)
    assert aes_ctr(key, iv, b"") == b""
    assert aes_ctr(key, iv, bytes(16)) == aes128_encrypt_block(key, iv)


def test_ctr_counter_wraps_in_last_word():
    key = bytes(16)
    iv = bytes(12) + b"\xff\xff\xff\xff"
    out = aes_ctr(key, iv, bytes(32))
    assert out[16:] == aes128_encrypt_block(key, bytes(16))


def test_ctr_into_buffer():
    import numpy as np
    a = Aes128(bytes(16))
    buf = np.empty(40, dtype=np.uint8)
    assert a.ctr(bytes(16), b"z" * 40, out=buf) is buf
    assert buf.tobytes() == a.ctr(bytes(16), b"z" * 40)
    with pytest.raises(InvalidLength):
        a.ctr(bytes(16), b"z" * 41, out=buf)


def test_ctr_iv_layout():
    assert ctr_iv(0x01020304, 1) == bytes.fromhex("0102030401") + bytes(7) + bytes(4)
    assert ctr_iv(7, 0, 5)[-4:] == (5).to_bytes(4, "big")
    with pytest.raises(ValueError):
        ctr_iv(1, 2)


@given(keys16, st.binary(max_size=200))
def test_cmac_matches_reference(key, msg):
    assert aes_cmac(key, msg) == _ref_cmac(key, msg)


def test_cmac_truncation():
    key = bytes(range(16))
    assert aes_cmac(key, b"abc", 8) == aes_cmac(key, b"abc")[:8]
    with pytest.raises(InvalidLength):
        aes_cmac(key, b"", 17)


# SNOW 3G

def test_snow3g_mac_prefix_is_uia2():
    key = os.urandom(16)
    msg = os.urandom(50)
    assert snow3g_mac(key, 9, 1, msg, mac_len=4) == snow3g.f9(key, 9, 0, 1, msg)[:4]


@given(keys16, st.binary(min_size=1, max_size=100), st.integers(0, 10**6))
def test_snow3g_mac_detects_bit_flip(key, msg, pos):
    pos %= 8 * len(msg)
    flipped = bytearray(msg)
    flipped[pos // 8] ^= 1 << (pos % 8)
    assert snow3g_mac(key, 0, 0, msg) != snow3g_mac(key, 0, 0, bytes(flipped))


def test_snow3g_mac_binds_direction_and_count():
    key, msg = bytes(16), b"payload"
    tags = {snow3g_mac(key, c, d, msg) for c in (0, 1) for d in (0, 1)}
    assert len(tags) == 4


@given(keys16, st.integers(0, 2**32 - 1), st.integers(0, 31), st.integers(0, 1), st.binary(max_size=100))
def test_f8_self_inverse(key, count, bearer, direction, data):
    ct = snow3g.f8(key, count, bearer, direction, data)
    assert snow3g.f8(key, count, bearer, direction, ct) == data


def test_snow3g_mac_length_limits():
    with pytest.raises(InvalidLength):
        snow3g_mac(bytes(16), 0, 0, b"", mac_len=9)
