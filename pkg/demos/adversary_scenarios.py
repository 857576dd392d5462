"""Run the standard scenario suite and a privacy check on each transcript.

    python3 demos/adversary_scenarios.py [seed]
"""

import sys

from rissec import simnet

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0

for name in simnet.SCENARIOS:
    t = simnet.run_scenario(simnet.build_scenario(name, seed))
    dev = t.world.devices[0]
    temp_ids = dev.ctx.temp_id_history + ([dev.temp_id] if dev.temp_id else [])
    privacy = simnet.assert_privacy(t, dev.default_id, temp_ids, [dev.ctx.shared_secret])
    verdicts = {v: t.count(v) for v in (simnet.DELIVERED, simnet.DROPPED, simnet.INJECTED)}
    print(f"{name:<24} {'ok ' if t.matched else 'BAD'} {t.final_events()}")
    print(f"{'':<24}     frames {verdicts}, privacy {'pass' if privacy else privacy.failures}")

# a hand-written script: drop the first request, then let the function retransmit it
dev = simnet.make_device(__import__("random").Random(seed))
script = simnet.Scenario(
    "lossy-start", seed, [dev],
    [simnet.Register(0), simnet.Deliver(), simnet.Retransmit(0), simnet.Deliver()],
    frame_actions={0: simnet.Drop()},
)
t = simnet.run_scenario(script)
print()
for e in t.entries:
    print(f"{e.t_us:>6} us  {e.direction} {e.verdict:<9} {e.event.label if e.event else '-'}")
