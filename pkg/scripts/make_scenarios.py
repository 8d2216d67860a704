#!/usr/bin/env python3
"""Regenerate the built-in scenario corpus under src/covlab/data/scenarios/v1.

The documents are reconstructed deterministically from fixed seeds, so
rerunning this script is a no-op unless the constructors changed.
"""

import json
from pathlib import Path

from covlab.scenarios import builtin_scenarios

OUT = Path(__file__).resolve().parent.parent / "src" / "covlab" / "data" / "scenarios" / "v1"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in builtin_scenarios().items():
        path = OUT / f"{name}.json"
        payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        changed = not path.exists() or path.read_text() != payload
        path.write_text(payload)
        print(f"{'wrote  ' if changed else 'kept   '}{path}")


if __name__ == "__main__":
    main()
