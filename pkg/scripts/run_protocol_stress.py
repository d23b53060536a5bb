#!/usr/bin/env python3
"""Protocol stress experiment: seeded command storm with transient faults.

Spawns a simulated fleet on localhost, pushes N random commands through the
HTTP client with retries enabled, and checks the final fleet state against
a pure command-sequence oracle. Reports retry/failure statistics.

Usage: python3 scripts/run_protocol_stress.py [--commands N] [--fault-rate R] [--seed S]
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from inot.actuation import DeviceClient, HttpTransport, RetryPolicy
from inot.command import Action, ControlCommand
from inot.simulator import FaultPlan, spawn_fleet

FLEET = {
    "devices": [
        *({"device_id": f"light-{i}", "type": "light"} for i in range(1, 7)),
        *({"device_id": f"fan-{i}", "type": "fan"} for i in range(1, 5)),
    ]
}


def random_commands(rng, n):
    lights = [d["device_id"] for d in FLEET["devices"] if d["type"] == "light"]
    everything = [d["device_id"] for d in FLEET["devices"]]
    plan = []
    for _ in range(n):
        if rng.random() < 0.25:
            plan.append((rng.choice(lights), Action(kind="adjust_brightness", level=rng.randint(0, 100))))
        else:
            plan.append(
                (rng.choice(everything), Action(kind=rng.choice(["switch_on", "switch_off", "toggle"])))
            )
    return plan


def oracle_state():
    return {
        d["device_id"]: [False, 100 if d["type"] == "light" else None]
        for d in FLEET["devices"]
    }


def apply_oracle(state, device_id, action):
    entry = state[device_id]
    if action.kind == "switch_on":
        entry[0] = True
    elif action.kind == "switch_off":
        entry[0] = False
    elif action.kind == "toggle":
        entry[0] = not entry[0]
    else:
        entry[1] = action.level
        entry[0] = action.level > 0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--commands", type=int, default=1000)
    parser.add_argument("--fault-rate", type=float, default=0.10)
    parser.add_argument("--seed", type=int, default=20250810)
    args = parser.parse_args()

    handle = spawn_fleet(
        FLEET, fault_plan=FaultPlan(transient_failure_rate=args.fault_rate, seed=args.seed)
    )
    try:
        client = DeviceClient(
            HttpTransport(handle.base_url, timeout=5.0), "inot-client", "inot-secret"
        )
        policy = RetryPolicy(max_attempts=3, base_backoff_ms=1)
        uuid_of = {d["device_id"]: f"uuid-{d['device_id']}" for d in FLEET["devices"]}
        bindings = {u: d for d, u in uuid_of.items()}

        plan = random_commands(random.Random(args.seed), args.commands)
        commands = [ControlCommand(uuid=uuid_of[d], action=a) for d, a in plan]

        start = time.perf_counter()
        results = client.execute_all(commands, bindings, policy)
        elapsed = time.perf_counter() - start

        state = oracle_state()
        retried = permanent = 0
        for (device_id, action), result in zip(plan, results):
            if result.attempts > 1:
                retried += 1
            if result.status == "success":
                apply_oracle(state, device_id, action)
            else:
                permanent += 1

        final = {
            d["device_id"]: [d["state"]["on"], d["state"].get("brightness")]
            for d in client.list_devices()
        }
        divergent = {k for k in final if final[k] != state[k]}

        print(f"commands:        {args.commands}")
        print(f"fault rate:      {args.fault_rate}")
        print(f"seed:            {args.seed}")
        print(f"wall time:       {elapsed:.2f}s ({args.commands / elapsed:.0f} cmd/s)")
        print(f"retried:         {retried}")
        print(f"permanent fails: {permanent}")
        print(f"state divergence: {len(divergent)} device(s)")
        if divergent:
            for device_id in sorted(divergent):
                print(f"  {device_id}: simulator={final[device_id]} oracle={state[device_id]}")
            return 1
        print("final state matches the command-sequence oracle exactly")
        return 0
    finally:
        handle.stop()


if __name__ == "__main__":
    sys.exit(main())
