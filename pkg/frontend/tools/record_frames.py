#!/usr/bin/env python3
"""Record the gateway frame stream of a deterministic scenario-1 run into
tests/fixtures/frames-scenario1.json for the console's snapshot tests."""

import json
import sys
import threading
from pathlib import Path

from officemesh import harness
from officemesh.gateway import WsClient, gateway_serve

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "frames-scenario1.json"


def main() -> None:
    spec = harness.load_scenario(harness.scenario_path(1))
    stack = harness.build_stack(spec, "centralized")
    server = gateway_serve(stack, port=0)
    client = WsClient(*server.address)
    frames = []
    done = threading.Event()

    def reader():
        try:
            while True:
                frames.append(client.recv_json())
        except (ConnectionError, OSError):
            pass
        finally:
            done.set()

    t = threading.Thread(target=reader, daemon=True)
    t.start()
    stack.kernel.run(spec["max_ticks"])
    # one idle beat so in-flight socket writes land, then tear down
    import time

    time.sleep(0.3)
    client.close()
    server.close()
    done.wait(2)
    OUT.write_text(json.dumps(frames, indent=0, sort_keys=True) + "\n")
    print(f"recorded {len(frames)} frames -> {OUT}")


if __name__ == "__main__":
    sys.exit(main())
