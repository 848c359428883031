"""Corpus manifest: a line-oriented key/value format with one
[design <id>] section per entry.

    [design counter]
    file = designs/counter.v
    top = counter
    category = timing_control
    clock = clk
    reset = reset
    notes = free text

Paths are relative to the manifest file. Every entry must parse; lint
findings are attached to the entry (or fatal under strict=True).
"""

import os
from dataclasses import dataclass

from ..elaborate import elaborate, lint_synthesizable
from ..errors import ManifestSchemaError, MissingFile, RtlmorphError
from ..parser import parse

CATEGORIES = ("logic_op", "data_path", "timing_control", "clock_domain")

_REQUIRED = ("file", "top", "category")
_KNOWN = _REQUIRED + ("clock", "reset", "notes")


@dataclass(frozen=True)
class CorpusEntry:
    design_id: str
    path: str
    top: str
    category: str
    clock: str = None
    reset: str = None
    notes: str = ""
    flags: tuple = ()  # lint findings, as message strings

    def load(self):
        with open(self.path, "r", encoding="utf-8") as f:
            return parse(f.read(), source_name=self.path)


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple
    base_dir: str = "."

    def __len__(self):
        return len(self.entries)

    def by_category(self, category):
        return [e for e in self.entries if e.category == category]

    def entry(self, design_id):
        for e in self.entries:
            if e.design_id == design_id:
                return e
        raise KeyError(design_id)


def _parse_sections(text, path):
    sections = []
    current = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ManifestSchemaError(f"{path}:{lineno}: unterminated section header")
            parts = line[1:-1].split()
            if len(parts) != 2 or parts[0] != "design":
                raise ManifestSchemaError(f"{path}:{lineno}: expected [design <id>]")
            current = {"__id__": parts[1], "__line__": lineno}
            sections.append(current)
            continue
        if "=" not in line:
            raise ManifestSchemaError(f"{path}:{lineno}: expected key = value")
        if current is None:
            raise ManifestSchemaError(f"{path}:{lineno}: key outside any [design] section")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _KNOWN:
            raise ManifestSchemaError(f"{path}:{lineno}: unknown key {key!r}")
        if key in current:
            raise ManifestSchemaError(f"{path}:{lineno}: duplicate key {key!r}")
        current[key] = value.split("#")[0].strip() if key != "notes" else value.strip()
    return sections


def load_manifest(path, strict: bool = False) -> CorpusManifest:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    base_dir = os.path.dirname(os.path.abspath(path))
    sections = _parse_sections(text, path)

    entries = []
    seen = set()
    for sec in sections:
        design_id = sec["__id__"]
        if design_id in seen:
            raise ManifestSchemaError(f"duplicate design id: {design_id}")
        seen.add(design_id)
        for key in _REQUIRED:
            if key not in sec:
                raise ManifestSchemaError(f"design {design_id}: missing key {key!r}")
        if sec["category"] not in CATEGORIES:
            raise ManifestSchemaError(
                f"design {design_id}: category must be one of {', '.join(CATEGORIES)}")
        file_path = os.path.join(base_dir, sec["file"])
        if not os.path.exists(file_path):
            raise MissingFile(f"design {design_id}: {file_path}")

        flags = []
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                unit = parse(f.read(), source_name=file_path)
            if unit.module(sec["top"]) is None:
                raise ManifestSchemaError(
                    f"design {design_id}: no module named {sec['top']}")
            design = elaborate(unit, top=sec["top"])
            flags = [f"{d.code}: {d.message}" for d in lint_synthesizable(design)]
        except ManifestSchemaError:
            raise
        except RtlmorphError as exc:
            if strict:
                raise
            flags = [f"unparsable: {exc}"]
        if strict and flags:
            raise ManifestSchemaError(f"design {design_id}: {'; '.join(flags)}")
        entries.append(CorpusEntry(
            design_id=design_id, path=file_path, top=sec["top"],
            category=sec["category"], clock=sec.get("clock"),
            reset=sec.get("reset"), notes=sec.get("notes", ""),
            flags=tuple(flags)))
    return CorpusManifest(tuple(entries), base_dir=base_dir)
