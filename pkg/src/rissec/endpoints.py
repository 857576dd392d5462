"""Protocol endpoints: RIS device controller, BS reader, RIS function, AF/NEF stubs.

The registration exchange (network side first)::

    AF --intent--> NEF --intent--> RIS Function
    RIS Function --RisRequest(default_id, nonce, sqn=1, mac)--> Reader --> Device
    Device --RisResponse(result, sqn=2, mac)--> Reader --> RIS Function
    RIS Function --success--> NEF --> AF

After that, the RIS function sends ProtectedCommand frames addressed by
the temporary ID; the device answers each one with a ProtectedAck.

Handlers take raw frames and always return an :class:`Outcome` holding
exactly one :class:`EndpointEvent` plus an optional reply frame. Devices
never put error frames on the air. A rejected frame only produces an event.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass

from rissec import keysched, wire
from rissec.crypto.aes import aes_ctr, ctr_iv
from rissec.crypto.hashing import verify_tag
from rissec.errors import (
    Busy,
    DecodeError,
    NoPendingTransaction,
    NonceReuse,
    StateOutOfRange,
    UnknownId,
)
from rissec.keysched import DOWNLINK, UPLINK, ContextState, SecurityConfig, SecurityContext


class EventKind(enum.Enum):
    AUTHENTICATED = "Authenticated"
    COMMAND_APPLIED = "CommandApplied"
    REJECTED = "Rejected"
    ROTATED = "Rotated"
    CAPABILITY_UPDATED = "CapabilityUpdated"
    # progress markers; not protocol outcomes
    RESPONDED = "Responded"
    ACKNOWLEDGED = "Acknowledged"


OUTCOME_KINDS = frozenset({
    EventKind.AUTHENTICATED,
    EventKind.COMMAND_APPLIED,
    EventKind.REJECTED,
    EventKind.ROTATED,
    EventKind.CAPABILITY_UPDATED,
})


class RejectReason(enum.Enum):
    MAC_MISMATCH = "MacMismatch"
    SQN_MISMATCH = "SqnMismatch"
    UNKNOWN_ID = "UnknownId"
    NONCE_REUSE = "NonceReuse"
    DECODE_ERROR = "DecodeError"
    RESULT_MISMATCH = "ResultMismatch"
    STATE_OUT_OF_RANGE = "StateOutOfRange"
    NO_PENDING_TRANSACTION = "NoPendingTransaction"


@dataclass(frozen=True)
class EndpointEvent:
    kind: EventKind
    endpoint: str
    reason: RejectReason | None = None
    opcode: int | None = None

    @property
    def label(self) -> str:
        """``Rejected(<reason>)`` for rejections, the bare kind otherwise."""
        if self.reason is not None:
            return f"{self.kind.value}({self.reason.value})"
        return self.kind.value

    @property
    def is_outcome(self) -> bool:
        return self.kind in OUTCOME_KINDS

    def to_json(self) -> dict:
        out = {"endpoint": self.endpoint, "event": self.kind.value}
        if self.reason is not None:
            out["reason"] = self.reason.value
        if self.opcode is not None:
            out["opcode"] = self.opcode
        return out


@dataclass(frozen=True)
class Outcome:
    event: EndpointEvent
    reply: bytes | None = None


class EventLog:
    """JSON-lines log of endpoint events with the frame that caused them."""

    def __init__(self):
        self.records: list[dict] = []

    def record(self, event: EndpointEvent, frame: bytes | None = None, t_us: int = 0):
        rec = {"t_us": t_us, **event.to_json()}
        if frame is not None:
            rec["frame"] = frame.hex()
        self.records.append(rec)

    def dumps(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)


def _seal(k: bytes, temp_id: bytes, sqn: int, direction: int, plaintext: bytes, cfg: SecurityConfig,
          cls) -> bytes:
    ct = aes_ctr(keysched.cipher_key(k, cfg), ctr_iv(sqn, direction), plaintext)
    mac = keysched.compute_command_mac(k, temp_id, sqn, direction, ct, cfg)
    return wire.encode(cls(temp_id, sqn, ct, mac))


# device

class DeviceController:
    """The ambient-powered RIS controller.

    Before registration it answers only RisRequests carrying its Default
    ID; afterwards only ProtectedCommands carrying its current temporary ID.
    A RisRequest with SQN 1 and a never-seen nonce restarts registration
    even when already registered (stale-context recovery).
    """

    def __init__(self, default_id: bytes, shared_secret: bytes, cfg: SecurityConfig = SecurityConfig(),
                 name: str = "device"):
        self.default_id = bytes(default_id)
        self.name = name
        self.ctx = SecurityContext(bytes(shared_secret), cfg)
        self.installed_phase_config: wire.PhaseConfig | None = None
        self._last_frame: bytes | None = None
        self._last_reply: bytes | None = None

    @property
    def registered(self) -> bool:
        return self.ctx.state is ContextState.REGISTERED

    @property
    def temp_id(self) -> bytes | None:
        return self.ctx.temp_id

    @property
    def key(self) -> bytes | None:
        return None if self.ctx.k is None else bytes(self.ctx.k)

    def _reject(self, reason: RejectReason, frame: bytes | None = None) -> Outcome:
        reply = None
        # an identical retransmission is answered with the cached reply
        if reason is RejectReason.SQN_MISMATCH and frame is not None and frame == self._last_frame:
            reply = self._last_reply
        return Outcome(EndpointEvent(EventKind.REJECTED, self.name, reason), reply)

    def handle(self, frame: bytes) -> Outcome:
        try:
            msg = wire.decode(frame, self.ctx.cfg)
        except DecodeError:
            return self._reject(RejectReason.DECODE_ERROR)
        if isinstance(msg, wire.RisRequest):
            return self._on_request(msg, frame)
        if isinstance(msg, wire.ProtectedCommand):
            if frame == self._last_frame:
                # already accepted; the temp_id may have rotated since
                return self._reject(RejectReason.SQN_MISMATCH, frame)
            return self._on_command(msg, frame)
        return self._reject(RejectReason.UNKNOWN_ID)

    def _on_request(self, msg: wire.RisRequest, frame: bytes) -> Outcome:
        ctx = self.ctx
        cfg = ctx.cfg
        if msg.default_id != self.default_id:
            return self._reject(RejectReason.UNKNOWN_ID)
        if not msg.nonce:
            return self._reject(RejectReason.DECODE_ERROR)
        expected = keysched.compute_request_mac(ctx.shared_secret, msg.default_id, msg.nonce, msg.sqn, cfg)
        if not verify_tag(expected, msg.mac):
            return self._reject(RejectReason.MAC_MISMATCH)
        fresh_start = msg.sqn == 1 and msg.nonce not in ctx.nonce_history
        if not fresh_start:
            return self._reject(RejectReason.SQN_MISMATCH, frame)
        temp_id, k = keysched.derive_key_and_id(ctx.shared_secret, msg.nonce, cfg)
        result = keysched.compute_result(k, self.default_id, msg.nonce, cfg)
        ctx.remember_nonce(msg.nonce)
        ctx.install(msg.nonce, temp_id, k)
        ctx.state = ContextState.REGISTERED
        ctx.next_sqn = msg.sqn + 1
        sqn = ctx.take_sqn()
        mac = keysched.compute_response_mac(ctx.shared_secret, self.default_id, result, sqn, cfg)
        reply = wire.encode(wire.RisResponse(result, sqn, mac))
        self._last_frame, self._last_reply = frame, reply
        return Outcome(EndpointEvent(EventKind.RESPONDED, self.name), reply)

    def _on_command(self, msg: wire.ProtectedCommand, frame: bytes) -> Outcome:
        ctx = self.ctx
        cfg = ctx.cfg
        if not self.registered or msg.temp_id != ctx.temp_id:
            return self._reject(RejectReason.UNKNOWN_ID)
        k = bytes(ctx.k)
        expected = keysched.compute_command_mac(k, ctx.temp_id, msg.sqn, DOWNLINK, msg.ciphertext, cfg)
        if not verify_tag(expected, msg.mac):
            return self._reject(RejectReason.MAC_MISMATCH)
        if msg.sqn != ctx.next_sqn:
            return self._reject(RejectReason.SQN_MISMATCH, frame)
        plaintext = aes_ctr(keysched.cipher_key(k, cfg), ctr_iv(msg.sqn, DOWNLINK), msg.ciphertext)
        try:
            payload = wire.decode_payload(plaintext)
        except StateOutOfRange:
            return self._reject(RejectReason.STATE_OUT_OF_RANGE)
        except DecodeError:
            return self._reject(RejectReason.DECODE_ERROR)

        op = wire.opcode(payload)
        ack_sqn = msg.sqn + 1
        if isinstance(payload, wire.PhaseConfig):
            self.installed_phase_config = payload
            kind = EventKind.COMMAND_APPLIED
            reply = _seal(k, ctx.temp_id, ack_sqn, UPLINK, b"", cfg, wire.ProtectedAck)
        elif isinstance(payload, wire.KeyRenewal):
            try:
                temp_id, new_k = keysched.rotate(ctx, payload.nonce)
            except NonceReuse:
                return self._reject(RejectReason.NONCE_REUSE)
            kind = EventKind.ROTATED
            reply = _seal(new_k, temp_id, ack_sqn, UPLINK, b"", cfg, wire.ProtectedAck)
        else:
            # ack under the old config; both sides switch right after it
            reply = _seal(k, ctx.temp_id, ack_sqn, UPLINK, b"", cfg, wire.ProtectedAck)
            _switch_config(ctx, payload.config)
            kind = EventKind.CAPABILITY_UPDATED
        ctx.next_sqn = ack_sqn + 1
        self._last_frame, self._last_reply = frame, reply
        return Outcome(EndpointEvent(kind, self.name, opcode=op), reply)

    def reset(self):
        """OAM-style factory reset back to the unregistered state."""
        self.ctx.wipe()
        self.ctx.next_sqn = 1
        self._last_frame = self._last_reply = None


def _switch_config(ctx: SecurityContext, cfg: SecurityConfig):
    """Adopt a new config and re-derive (temp_id, K) from the current nonce under it."""
    temp_id, k = keysched.derive_key_and_id(ctx.shared_secret, ctx.nonce, cfg)
    ctx.cfg = cfg
    ctx.install(ctx.nonce, temp_id, k)


# reader

class BsReader:
    """Byte-transparent relay between the RIS function and devices.

    Uplink frames carry no identifier the reader could route on, so it keeps
    the transaction last opened on each radio link and tags uplink frames
    with it.
    """

    def __init__(self, name: str = "reader"):
        self.name = name
        self._txn_by_link: dict[int, int] = {}

    def relay_downlink(self, frame: bytes, link: int, txn: int | None = None) -> bytes:
        if txn is not None:
            self._txn_by_link[link] = txn
        return frame

    def relay_uplink(self, frame: bytes, link: int) -> tuple[bytes, int]:
        try:
            return frame, self._txn_by_link[link]
        except KeyError:
            raise NoPendingTransaction(f"no transaction on link {link}") from None


# network side

@dataclass(frozen=True)
class ProvisioningRecord:
    default_id: bytes
    shared_secret: bytes
    cfg: SecurityConfig = SecurityConfig()
    reader_id: str = "reader"


@dataclass(frozen=True)
class RisRequestIntent:
    default_id: bytes
    shared_secret: bytes
    cfg: SecurityConfig


@dataclass
class _Pending:
    sqn: int
    payload: wire.CommandPayload
    frame: bytes
    new_nonce: bytes | None = None
    new_temp_id: bytes | None = None
    new_k: bytes | None = None


@dataclass
class Session:
    default_id: bytes
    ctx: SecurityContext
    txn: int = 0
    request_frame: bytes | None = None
    registration: tuple[bytes, bytes, bytes] | None = None  # (nonce, temp_id, k) until authenticated
    pending: _Pending | None = None


class RisFunction:
    """Network-side authenticator: picks nonces, derives keys and checks the device's proof."""

    def __init__(self, name: str = "ris-function", seed: int = 0, nonce_len: int = 16, nef: Nef | None = None):
        if not 1 <= nonce_len <= 255:
            raise ValueError("nonce_len must be 1..255")
        self.name = name
        self.rng = random.Random(seed)
        self.nonce_len = nonce_len
        self.nef = nef
        self.sessions: dict[bytes, Session] = {}
        self._by_txn: dict[int, Session] = {}
        self._next_txn = 1

    def _event(self, kind, reason=None, opcode=None) -> EndpointEvent:
        return EndpointEvent(kind, self.name, reason, opcode)

    def _reject(self, reason: RejectReason) -> Outcome:
        return Outcome(self._event(EventKind.REJECTED, reason))

    def session(self, default_id: bytes) -> Session:
        try:
            return self.sessions[default_id]
        except KeyError:
            raise UnknownId(default_id.hex()) from None

    def accept_intent(self, intent: RisRequestIntent):
        old = self.sessions.get(intent.default_id)
        if old is not None and old.ctx.state is ContextState.AWAITING_RESPONSE:
            raise Busy(f"registration of {intent.default_id.hex()} already pending")
        ctx = SecurityContext(bytes(intent.shared_secret), intent.cfg)
        if old is not None:
            ctx.nonce_history.extend(old.ctx.nonce_history)
            ctx.temp_id_history.extend(old.ctx.temp_id_history)
            if old.ctx.temp_id is not None:
                ctx.temp_id_history.append(old.ctx.temp_id)
            old.ctx.wipe()
        self.sessions[intent.default_id] = Session(intent.default_id, ctx)

    def _fresh_nonce(self, ctx: SecurityContext) -> bytes:
        while True:
            nonce = self.rng.randbytes(self.nonce_len)
            if nonce not in ctx.nonce_history:
                return nonce

    def build_request(self, default_id: bytes) -> tuple[bytes, int]:
        """Start registration; returns the RisRequest frame and its transaction id."""
        s = self.session(default_id)
        ctx = s.ctx
        if ctx.state is not ContextState.IDLE:
            raise Busy(f"session for {default_id.hex()} is {ctx.state.value}")
        nonce = self._fresh_nonce(ctx)
        temp_id, k = keysched.derive_key_and_id(ctx.shared_secret, nonce, ctx.cfg)
        ctx.remember_nonce(nonce)
        ctx.expected_result = keysched.compute_result(k, default_id, nonce, ctx.cfg)
        ctx.next_sqn = 1
        sqn = ctx.take_sqn()
        ctx.pending_sqn = sqn
        mac = keysched.compute_request_mac(ctx.shared_secret, default_id, nonce, sqn, ctx.cfg)
        frame = wire.encode(wire.RisRequest(default_id, nonce, sqn, mac))
        ctx.state = ContextState.AWAITING_RESPONSE
        s.registration = (nonce, temp_id, k)
        s.request_frame = frame
        s.txn = self._next_txn
        self._next_txn += 1
        self._by_txn[s.txn] = s
        return frame, s.txn

    def handle_uplink(self, frame: bytes, txn: int) -> Outcome:
        s = self._by_txn.get(txn)
        if s is None:
            return self._reject(RejectReason.NO_PENDING_TRANSACTION)
        try:
            msg = wire.decode(frame, s.ctx.cfg)
        except DecodeError:
            return self._reject(RejectReason.DECODE_ERROR)
        if isinstance(msg, wire.RisResponse):
            return self._on_response(s, msg)
        if isinstance(msg, wire.ProtectedAck):
            return self._on_ack(s, msg)
        return self._reject(RejectReason.UNKNOWN_ID)

    def _fail_registration(self, s: Session, reason: RejectReason) -> Outcome:
        s.ctx.state = ContextState.IDLE
        s.ctx.expected_result = None
        s.ctx.pending_sqn = None
        s.registration = None
        if self.nef is not None:
            self.nef.report(s.default_id, False)
        return self._reject(reason)

    def _on_response(self, s: Session, msg: wire.RisResponse) -> Outcome:
        ctx = s.ctx
        try:
            expected_mac = keysched.compute_response_mac(ctx.shared_secret, s.default_id, msg.result, msg.sqn,
                                                         ctx.cfg)
        except ValueError:
            expected_mac = b""
        mac_ok = verify_tag(expected_mac, msg.mac)
        if ctx.state is not ContextState.AWAITING_RESPONSE:
            # a response outside an open registration is at best a replay
            return self._reject(RejectReason.SQN_MISMATCH if mac_ok else RejectReason.MAC_MISMATCH)
        if not mac_ok:
            return self._fail_registration(s, RejectReason.MAC_MISMATCH)
        if msg.sqn != ctx.pending_sqn + 1:
            return self._fail_registration(s, RejectReason.SQN_MISMATCH)
        if not verify_tag(ctx.expected_result, msg.result):
            return self._fail_registration(s, RejectReason.RESULT_MISMATCH)
        nonce, temp_id, k = s.registration
        ctx.install(nonce, temp_id, k)
        ctx.state = ContextState.REGISTERED
        ctx.expected_result = None
        ctx.pending_sqn = None
        ctx.next_sqn = msg.sqn + 1
        s.registration = None
        if self.nef is not None:
            self.nef.report(s.default_id, True)
        return Outcome(self._event(EventKind.AUTHENTICATED))

    def send_command(self, default_id: bytes, payload: wire.CommandPayload) -> bytes:
        """Encrypt and MAC a command for a registered device.

        A KeyRenewal without a nonce gets a fresh one from the function's RNG.
        Raises SqnExhausted close to SQN wraparound.
        """
        s = self.session(default_id)
        ctx = s.ctx
        if ctx.state is not ContextState.REGISTERED:
            raise UnknownId(f"{default_id.hex()} is not registered")
        pending = _Pending(0, payload, b"")
        if isinstance(payload, wire.KeyRenewal):
            if not payload.nonce:
                payload = wire.KeyRenewal(self._fresh_nonce(ctx))
            elif payload.nonce in ctx.nonce_history:
                raise NonceReuse(payload.nonce.hex())
            pending.payload = payload
            pending.new_nonce = payload.nonce
            pending.new_temp_id, pending.new_k = keysched.derive_key_and_id(ctx.shared_secret, payload.nonce,
                                                                            ctx.cfg)
        sqn = ctx.take_sqn()
        ctx.take_sqn()  # reserved for the ack
        frame = _seal(bytes(ctx.k), ctx.temp_id, sqn, DOWNLINK, wire.encode_payload(payload), ctx.cfg,
                      wire.ProtectedCommand)
        pending.sqn = sqn
        pending.frame = frame
        s.pending = pending
        return frame

    def retransmit(self, default_id: bytes) -> bytes:
        """The last unacknowledged command frame, byte-identical."""
        s = self.session(default_id)
        if s.pending is None:
            raise NoPendingTransaction(f"nothing outstanding for {default_id.hex()}")
        return s.pending.frame

    def _on_ack(self, s: Session, msg: wire.ProtectedAck) -> Outcome:
        ctx = s.ctx
        if ctx.state is not ContextState.REGISTERED:
            return self._reject(RejectReason.UNKNOWN_ID)
        p = s.pending
        renewing = p is not None and p.new_temp_id is not None
        if renewing and msg.temp_id == p.new_temp_id:
            k = p.new_k
        elif msg.temp_id == ctx.temp_id:
            k = bytes(ctx.k)
        else:
            return self._reject(RejectReason.UNKNOWN_ID)
        expected = keysched.compute_command_mac(k, msg.temp_id, msg.sqn, UPLINK, msg.ciphertext, ctx.cfg)
        if not verify_tag(expected, msg.mac):
            return self._reject(RejectReason.MAC_MISMATCH)
        if p is None or msg.sqn != p.sqn + 1:
            return self._reject(RejectReason.SQN_MISMATCH)
        if renewing and msg.temp_id != p.new_temp_id:
            # a renewal must be acknowledged under the new context
            return self._reject(RejectReason.MAC_MISMATCH)
        if renewing:
            ctx.remember_nonce(p.new_nonce)
            ctx.install(p.new_nonce, p.new_temp_id, p.new_k)
        elif isinstance(p.payload, wire.CapabilityExchange):
            _switch_config(ctx, p.payload.config)
        ctx.next_sqn = msg.sqn + 1
        s.pending = None
        return Outcome(self._event(EventKind.ACKNOWLEDGED, opcode=wire.opcode(p.payload)))


class Nef:
    """Network Exposure Function stub: forwards requests and reports, nothing else."""

    def __init__(self):
        self.functions: dict[str, RisFunction] = {}
        self.af: ApplicationFunction | None = None

    def attach(self, reader_id: str, function: RisFunction):
        self.functions[reader_id] = function
        function.nef = self

    def forward_request(self, intent: RisRequestIntent, reader_id: str) -> RisFunction:
        try:
            function = self.functions[reader_id]
        except KeyError:
            raise UnknownId(f"no RIS function serves {reader_id!r}") from None
        function.accept_intent(intent)
        return function

    def report(self, default_id: bytes, success: bool):
        if self.af is not None:
            self.af.on_result(default_id, success)


class ApplicationFunction:
    """Holds the provisioning registry and starts registrations (AF stub)."""

    def __init__(self, records, nef: Nef):
        self.registry: dict[bytes, ProvisioningRecord] = {}
        for rec in records:
            if rec.default_id in self.registry:
                raise ValueError(f"duplicate default id {rec.default_id.hex()}")
            self.registry[rec.default_id] = rec
        self.nef = nef
        nef.af = self
        self.results: list[tuple[bytes, bool]] = []

    def initiate(self, default_id: bytes) -> RisRequestIntent:
        """Hand the device's security parameters to its serving RIS function.

        Raises UnknownId for unprovisioned devices and Busy while a
        registration for the same device is still pending.
        """
        try:
            rec = self.registry[default_id]
        except KeyError:
            raise UnknownId(default_id.hex()) from None
        intent = RisRequestIntent(rec.default_id, rec.shared_secret, rec.cfg)
        self.nef.forward_request(intent, rec.reader_id)
        return intent

    def on_result(self, default_id: bytes, success: bool):
        self.results.append((default_id, success))
