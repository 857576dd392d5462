"""Deterministic air-interface simulator with a scripted adversary.

A :class:`Scenario` is a plan of steps (network operations, adversary
injections, explicit delivery points) plus per-frame adversary decisions
keyed by transcript index. :func:`run_scenario` drives every endpoint to
quiescence and returns the :class:`Transcript` of all frames put on the
air, each with its delivery verdict and the event it caused.

Simulated time advances by ``frame_cost_us`` for every recorded frame.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Union

from rissec import keysched, wire
from rissec.endpoints import (
    ApplicationFunction,
    BsReader,
    DeviceController,
    EndpointEvent,
    EventKind,
    Nef,
    ProvisioningRecord,
    RejectReason,
    RisFunction,
)
from rissec.errors import NoPendingTransaction, ScriptIndexOutOfRange
from rissec.keysched import SecurityConfig

DOWNLINK = "DL"
UPLINK = "UL"

DELIVERED = "delivered"
DROPPED = "dropped"
INJECTED = "injected"

RADIO_US = 1000


# adversary actions

@dataclass(frozen=True)
class PassThrough:
    pass


@dataclass(frozen=True)
class Drop:
    pass


@dataclass(frozen=True)
class TamperBit:
    byte: int
    bit: int


@dataclass(frozen=True)
class Replay:
    index: int


@dataclass(frozen=True)
class Inject:
    raw: bytes
    direction: str = UPLINK
    link: int = 0


@dataclass(frozen=True)
class Reorder:
    permutation: tuple[int, ...]


AdversaryAction = Union[PassThrough, Drop, TamperBit, Replay, Inject, Reorder]


# network operations

@dataclass(frozen=True)
class Register:
    device: int


@dataclass(frozen=True)
class Command:
    device: int
    payload: wire.CommandPayload


@dataclass(frozen=True)
class Rotate:
    device: int
    nonce: bytes = b""


@dataclass(frozen=True)
class Retransmit:
    device: int


@dataclass(frozen=True)
class Deliver:
    """Process queued frames: ``count`` of them, or until the channel is empty."""

    count: int | None = None


Step = Union[Register, Command, Rotate, Retransmit, Deliver, Replay, Inject, Reorder]


@dataclass(frozen=True)
class DeviceSpec:
    default_id: bytes
    shared_secret: bytes
    # what the device itself was provisioned with, when it differs from the AF registry
    device_secret: bytes | None = None
    cfg: SecurityConfig = SecurityConfig()


@dataclass
class Scenario:
    name: str
    seed: int
    devices: list[DeviceSpec]
    plan: list[Step]
    frame_actions: dict[int, AdversaryAction] = field(default_factory=dict)
    expected: list[str] | None = None
    frame_cost_us: int = RADIO_US


@dataclass
class TranscriptEntry:
    index: int
    t_us: int
    direction: str
    link: int
    frame: bytes
    verdict: str
    action: str = "pass"
    event: EndpointEvent | None = None

    def to_json(self, cfg: SecurityConfig | None = None) -> dict:
        out = {
            "index": self.index,
            "t_us": self.t_us,
            "direction": self.direction,
            "link": self.link,
            "verdict": self.verdict,
            "action": self.action,
            "frame": self.frame.hex(),
            "event": None if self.event is None else self.event.to_json(),
        }
        if cfg is not None:
            try:
                out["decoded"] = wire.to_json(wire.decode(self.frame, cfg))
            except ValueError:
                out["decoded"] = None
        return out


@dataclass
class Transcript:
    scenario: str
    seed: int
    entries: list[TranscriptEntry] = field(default_factory=list)
    expected: list[str] | None = None
    world: World | None = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i) -> TranscriptEntry:
        return self.entries[i]

    def events(self) -> list[EndpointEvent]:
        return [e.event for e in self.entries if e.event is not None]

    def final_events(self) -> list[str]:
        """Labels of the protocol-outcome events, in order."""
        return [ev.label for ev in self.events() if ev.is_outcome]

    @property
    def matched(self) -> bool:
        return self.expected is None or self.final_events() == self.expected

    def count(self, verdict: str) -> int:
        return sum(1 for e in self.entries if e.verdict == verdict)

    def to_jsonl(self) -> str:
        cfg = self.world.specs[0].cfg if self.world is not None and self.world.specs else None
        return "".join(json.dumps(e.to_json(cfg), sort_keys=True) + "\n" for e in self.entries)


@dataclass
class _Queued:
    direction: str
    link: int
    frame: bytes
    injected: bool = False


class World:
    """All endpoints of one scenario plus the air channel between them."""

    def __init__(self, specs: list[DeviceSpec], seed: int):
        self.specs = specs
        self.nef = Nef()
        self.reader = BsReader()
        self.function = RisFunction(seed=seed)
        self.nef.attach(self.reader.name, self.function)
        self.af = ApplicationFunction(
            [ProvisioningRecord(d.default_id, d.shared_secret, d.cfg, self.reader.name) for d in specs], self.nef)
        self.devices = [
            DeviceController(d.default_id, d.device_secret or d.shared_secret, d.cfg, name=f"device{i}")
            for i, d in enumerate(specs)
        ]
        self.queue: deque[_Queued] = deque()

    def link_of(self, default_id: bytes) -> int:
        for i, d in enumerate(self.specs):
            if d.default_id == default_id:
                return i
        raise KeyError(default_id)

    def agree(self, device: int) -> bool:
        """Both sides hold octet-identical (temp_id, K) for ``device``."""
        dev = self.devices[device]
        ctx = self.function.sessions[dev.default_id].ctx
        return (dev.registered and ctx.temp_id == dev.temp_id
                and ctx.k is not None and bytes(ctx.k) == dev.key)


def _flip(frame: bytes, byte: int, bit: int) -> bytes:
    """Flip one bit; a negative ``byte`` counts from the end of the frame."""
    if not -len(frame) <= byte < len(frame) or not 0 <= bit < 8:
        raise ScriptIndexOutOfRange(f"tamper position ({byte}, {bit}) outside a {len(frame)}-octet frame")
    out = bytearray(frame)
    out[byte] ^= 1 << bit
    return bytes(out)


def run_scenario(s: Scenario) -> Transcript:
    world = World(s.devices, s.seed)
    t = Transcript(s.name, s.seed, expected=s.expected, world=world)
    clock = 0

    def transmit(q: _Queued):
        nonlocal clock
        index = len(t.entries)
        action = s.frame_actions.get(index, PassThrough())
        frame = q.frame
        clock += s.frame_cost_us
        verdict = INJECTED if q.injected else DELIVERED
        label = "inject" if q.injected else "pass"
        if isinstance(action, Drop):
            t.entries.append(TranscriptEntry(index, clock, q.direction, q.link, frame, DROPPED, "drop"))
            return
        if isinstance(action, TamperBit):
            frame = _flip(frame, action.byte, action.bit)
            label = f"tamper({action.byte},{action.bit})"
        entry = TranscriptEntry(index, clock, q.direction, q.link, frame, verdict, label)
        t.entries.append(entry)
        if q.direction == DOWNLINK:
            if not 0 <= q.link < len(world.devices):
                entry.event = EndpointEvent(EventKind.REJECTED, "air", RejectReason.UNKNOWN_ID)
                return
            outcome = world.devices[q.link].handle(frame)
            entry.event = outcome.event
            if outcome.reply is not None:
                world.queue.append(_Queued(UPLINK, q.link, outcome.reply))
        else:
            try:
                frame, txn = world.reader.relay_uplink(frame, q.link)
            except NoPendingTransaction:
                entry.event = EndpointEvent(EventKind.REJECTED, world.reader.name,
                                            RejectReason.NO_PENDING_TRANSACTION)
                return
            entry.event = world.function.handle_uplink(frame, txn).event

    def send_down(device: int, frame: bytes, txn: int | None = None):
        world.reader.relay_downlink(frame, device, txn)
        world.queue.append(_Queued(DOWNLINK, device, frame))

    for step in s.plan:
        if isinstance(step, Deliver):
            n = step.count
            while world.queue and (n is None or n > 0):
                transmit(world.queue.popleft())
                if n is not None:
                    n -= 1
        elif isinstance(step, Register):
            dev_id = s.devices[step.device].default_id
            world.af.initiate(dev_id)
            frame, txn = world.function.build_request(dev_id)
            send_down(step.device, frame, txn)
        elif isinstance(step, Command):
            send_down(step.device, world.function.send_command(s.devices[step.device].default_id, step.payload))
        elif isinstance(step, Rotate):
            payload = wire.KeyRenewal(step.nonce)
            send_down(step.device, world.function.send_command(s.devices[step.device].default_id, payload))
        elif isinstance(step, Retransmit):
            sess = world.function.session(s.devices[step.device].default_id)
            if sess.ctx.state is keysched.ContextState.AWAITING_RESPONSE:
                send_down(step.device, sess.request_frame)
            else:
                send_down(step.device, world.function.retransmit(sess.default_id))
        elif isinstance(step, Replay):
            if not 0 <= step.index < len(t.entries):
                raise ScriptIndexOutOfRange(f"replay of frame {step.index}, only {len(t.entries)} recorded")
            old = t.entries[step.index]
            world.queue.append(_Queued(old.direction, old.link, old.frame, injected=True))
        elif isinstance(step, Inject):
            world.queue.append(_Queued(step.direction, step.link, bytes(step.raw), injected=True))
        elif isinstance(step, Reorder):
            if sorted(step.permutation) != list(range(len(world.queue))):
                raise ScriptIndexOutOfRange(
                    f"permutation {step.permutation} does not cover {len(world.queue)} queued frames")
            items = list(world.queue)
            world.queue = deque(items[i] for i in step.permutation)
        else:
            raise TypeError(f"unknown step {step!r}")
    while world.queue:
        transmit(world.queue.popleft())
    return t


# privacy

@dataclass
class PrivacyReport:
    passed: bool
    failures: list[str]

    def __bool__(self):
        return self.passed


def _frames_containing(t: Transcript, needle: bytes, own_only: bool = False) -> list[int]:
    return [e.index for e in t.entries
            if needle and needle in e.frame and not (own_only and e.verdict == INJECTED)]


def assert_privacy(t: Transcript, default_id: bytes, temp_ids, secrets=(), keys=(),
                   registrations: int | None = None) -> PrivacyReport:
    """Check a transcript for identifier and key exposure.

    ``temp_ids`` is the device's temporary-ID history in the order the IDs
    were in use. ``registrations`` defaults to the number of network-sent
    RisRequest frames in the transcript. Identifier checks look only at
    frames the endpoints sent; an adversary re-broadcasting a captured frame
    exposes nothing new. Secrets and keys are searched in every frame.
    """
    failures = []
    for label, values in (("shared secret", secrets), ("key", keys)):
        for v in values:
            hits = _frames_containing(t, bytes(v))
            if hits:
                failures.append(f"{label} {bytes(v).hex()} appears in frames {hits}")
    if registrations is None:
        registrations = sum(
            1 for e in t.entries
            if e.direction == DOWNLINK and e.verdict != INJECTED and e.frame[:1] == bytes([wire.TAG_REQUEST])
            and default_id in e.frame
        )
    hits = _frames_containing(t, default_id, own_only=True)
    if len(hits) != registrations:
        failures.append(f"default id {default_id.hex()} in {len(hits)} frames {hits}, "
                        f"expected {registrations} (one per registration)")
    temp_ids = [bytes(x) for x in temp_ids]
    for old, new in zip(temp_ids, temp_ids[1:]):
        new_hits = _frames_containing(t, new, own_only=True)
        if not new_hits:
            continue
        stale = [i for i in _frames_containing(t, old, own_only=True) if i > new_hits[0]]
        if stale:
            failures.append(f"stale temp id {old.hex()} in frames {stale} after {new.hex()} took over")
    return PrivacyReport(not failures, failures)


# standard scenarios

SCENARIOS = (
    "happy",
    "replay-request",
    "replay-response",
    "replay-command",
    "tamper",
    "wrong-secret",
    "rotation",
    "capability-swap",
    "interleaved-two-devices",
)

ENHANCED_CONFIG = SecurityConfig(hash_alg=keysched.HashAlg.SHA3_512, key_len=16, temp_id_len=16, mac_len=16,
                                 result_len=32)


def golden_events(name: str) -> list[str]:
    data = resources.files("rissec").joinpath("golden", f"{name}.json").read_text()
    return json.loads(data)["final_events"]


def make_device(rng: random.Random, index: int = 0, cfg: SecurityConfig = SecurityConfig()) -> DeviceSpec:
    default_id = bytes.fromhex("DEFA") + (index + 1).to_bytes(2, "big")
    return DeviceSpec(default_id, rng.randbytes(16), cfg=cfg)


def phase_payload(rng: random.Random, count: int = 256, bits: int = 2) -> wire.PhaseConfig:
    return wire.PhaseConfig(bits, tuple(rng.randrange(1 << bits) for _ in range(count)))


def build_scenario(name: str, seed: int = 0) -> Scenario:
    """One of the standard scenarios; fully determined by ``(name, seed)``."""
    rng = random.Random(f"{name}/{seed}")
    dev = make_device(rng)
    devices = [dev]
    actions: dict[int, AdversaryAction] = {}
    register = [Register(0), Deliver()]
    command = [Command(0, phase_payload(rng)), Deliver()]

    if name == "happy":
        plan = register + command
    elif name == "replay-request":
        plan = register + [Replay(0), Deliver()]
    elif name == "replay-response":
        plan = register + [Replay(1), Deliver()]
    elif name == "replay-command":
        plan = register + command + [Replay(2), Deliver()]
    elif name == "tamper":
        # frame 0: request with a flipped MAC bit; frame 3: command with a flipped ciphertext bit
        actions = {0: TamperBit(-1, 0), 3: TamperBit(20, 3)}
        plan = [Register(0), Deliver(), Retransmit(0), Deliver(),
                Command(0, phase_payload(rng)), Deliver(), Retransmit(0), Deliver()]
    elif name == "wrong-secret":
        impostor = rng.randbytes(16)
        devices = [DeviceSpec(dev.default_id, dev.shared_secret, device_secret=impostor)]
        # the impostor answers anyway, with a proof under its own secret
        nonce = rng.randbytes(16)
        _, k = keysched.derive_key_and_id(impostor, nonce, dev.cfg)
        result = keysched.compute_result(k, dev.default_id, nonce, dev.cfg)
        mac = keysched.compute_response_mac(impostor, dev.default_id, result, 2, dev.cfg)
        forged = wire.encode(wire.RisResponse(result, 2, mac))
        plan = [Register(0), Deliver(), Inject(forged, UPLINK, 0), Deliver()]
    elif name == "rotation":
        plan = register + command + [Rotate(0), Deliver()] + [Command(0, phase_payload(rng)), Deliver()]
    elif name == "capability-swap":
        plan = register + [Command(0, wire.CapabilityExchange(ENHANCED_CONFIG)), Deliver()] + command
    elif name == "interleaved-two-devices":
        devices = [dev, make_device(rng, 1)]
        plan = [Register(0), Register(1), Reorder((1, 0)), Deliver(),
                Command(1, phase_payload(rng)), Command(0, phase_payload(rng)), Deliver()]
    else:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    return Scenario(name, seed, devices, plan, actions, expected=golden_events(name))
