"""Lightweight control-channel security for ambient-powered RIS controllers.

Modules:

* ``crypto``    hashes, HMAC, AES-128 (block, CTR, CMAC) and SNOW 3G
* ``keysched``  temporary-ID / key derivation, protocol MACs, security contexts
* ``wire``      byte-exact frames and command payloads
* ``endpoints`` device, BS reader, RIS function, NEF and AF state machines
* ``simnet``    deterministic air-interface simulator with a scripted adversary
* ``bench``     timing harness for the per-packet protection chain
"""

from rissec.keysched import SecurityConfig, SecurityContext, derive_key_and_id

__version__ = "0.1.0"

__all__ = ["SecurityConfig", "SecurityContext", "derive_key_and_id", "__version__"]
