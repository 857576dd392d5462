"""Cryptographic primitives used by the protocol and the benchmark."""

from rissec.crypto.aes import (
    Aes128,
    aes128_decrypt_block,
    aes128_encrypt_block,
    aes_cmac,
    aes_ctr,
    ctr_iv,
)
from rissec.crypto.hashing import HashAlg, HmacKey, hash, hmac, truncate, verify_tag
from rissec.crypto.snow3g import snow3g_mac
from rissec.crypto.vectors import check_vectors, run_vector_gate

__all__ = [
    "Aes128",
    "HashAlg",
    "HmacKey",
    "aes128_decrypt_block",
    "aes128_encrypt_block",
    "aes_cmac",
    "aes_ctr",
    "check_vectors",
    "ctr_iv",
    "hash",
    "hmac",
    "run_vector_gate",
    "snow3g_mac",
    "truncate",
    "verify_tag",
]
