"""Walk one RIS controller through registration, a phase command and a key renewal.

Frames are passed by hand so every step of the exchange is visible.

    python3 demos/registration_walkthrough.py
"""

from rissec import wire
from rissec.endpoints import ApplicationFunction, BsReader, DeviceController, Nef, ProvisioningRecord, RisFunction
from rissec.keysched import SecurityConfig

DEFAULT_ID = bytes.fromhex("DEFA0001")
SECRET = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
cfg = SecurityConfig()

nef = Nef()
function = RisFunction(seed=2024)
nef.attach("reader", function)
af = ApplicationFunction([ProvisioningRecord(DEFAULT_ID, SECRET, cfg)], nef)
reader = BsReader()
device = DeviceController(DEFAULT_ID, SECRET, cfg)


def show(direction, frame, outcome):
    msg = wire.decode(frame, cfg)
    print(f"{direction} {type(msg).__name__:<16} {len(frame):>3} B  sqn={msg.sqn}  -> {outcome.event.label}")


# AF hands the security parameters to the RIS function via the NEF
af.initiate(DEFAULT_ID)
request, txn = function.build_request(DEFAULT_ID)
reader.relay_downlink(request, link=0, txn=txn)
out = device.handle(request)
show("DL", request, out)

response, txn = reader.relay_uplink(out.reply, link=0)
fin = function.handle_uplink(response, txn)
show("UL", response, fin)
print("AF notified:", af.results)

ctx = function.sessions[DEFAULT_ID].ctx
print("temp id   function", ctx.temp_id.hex(), " device", device.temp_id.hex())
print("key K     function", bytes(ctx.k).hex(), " device", device.key.hex())

# encrypted, MAC-protected phase configuration addressed by the temporary ID
states = tuple(i % 4 for i in range(64))
for payload in (wire.PhaseConfig(2, states), wire.KeyRenewal(b""), wire.PhaseConfig(2, states[::-1])):
    cmd = function.send_command(DEFAULT_ID, payload)
    out = device.handle(cmd)
    show("DL", cmd, out)
    ack, txn = reader.relay_uplink(out.reply, link=0)
    show("UL", ack, function.handle_uplink(ack, txn))

print("temp id history on the device:", [t.hex() for t in device.ctx.temp_id_history], "->", device.temp_id.hex())

# a replayed command is refused without touching the installed configuration
print("replay of the last command  ->", device.handle(cmd).event.label)
