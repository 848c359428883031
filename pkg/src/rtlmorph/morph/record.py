"""MutationRecord: what was applied where, under which seed, and the
declared per-output latency offsets. Serialized as a JSON sidecar next to
every mutant so verification can honor the declared alignment."""

import json
from dataclasses import dataclass, field


@dataclass
class MutationRecord:
    strategy: str
    seed: int
    sites: list = field(default_factory=list)  # human-readable site descriptors
    output_offsets: dict = field(default_factory=dict)  # output name -> cycles
    clock_map: dict = field(default_factory=dict)  # added clock -> source clock

    def with_offsets(self, outputs, offset=0):
        for o in outputs:
            self.output_offsets.setdefault(o, offset)
        return self

    def to_json(self) -> str:
        return json.dumps({
            "strategy": self.strategy,
            "seed": self.seed,
            "sites": self.sites,
            "output_offsets": self.output_offsets,
            "clock_map": self.clock_map,
        }, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MutationRecord":
        d = json.loads(text)
        return cls(
            strategy=d["strategy"],
            seed=d["seed"],
            sites=list(d.get("sites", [])),
            output_offsets={k: int(v) for k, v in d.get("output_offsets", {}).items()},
            clock_map=dict(d.get("clock_map", {})),
        )


def fresh_name(base: str, taken) -> str:
    """First name of the form base, base_1, base_2, ... not in `taken`."""
    if base not in taken:
        return base
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def fresh_series(base: str, count: int, taken):
    """Fresh names base1..baseN (suffix-numbered), collision-free."""
    taken = set(taken)
    out = []
    for i in range(1, count + 1):
        name = fresh_name(f"{base}{i}", taken)
        taken.add(name)
        out.append(name)
    return out
