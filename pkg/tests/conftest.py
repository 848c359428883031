import os
import sys

import pytest
from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(REPO, "corpus")
MANIFEST = os.path.join(CORPUS, "manifest.txt")
FIXTURES = os.path.join(REPO, "fixtures")

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


def design_path(name):
    return os.path.join(CORPUS, "designs", f"{name}.v")


def design_text(name):
    with open(design_path(name), "r", encoding="utf-8") as f:
        return f.read()


@pytest.fixture(scope="session")
def manifest():
    from rtlmorph.harness import load_manifest
    return load_manifest(MANIFEST)


@pytest.fixture(scope="session")
def corpus_modules(manifest):
    """design id -> (entry, ModuleDecl)."""
    out = {}
    for entry in manifest.entries:
        unit = entry.load()
        out[entry.design_id] = (entry, unit.module(entry.top))
    return out


@pytest.fixture(scope="session")
def all_mutants(corpus_modules):
    """(design id, strategy) -> (mutant ModuleDecl, MutationRecord) for every
    strategy that applies; strategies that decline a design are skipped."""
    from rtlmorph import morph
    from rtlmorph.errors import MutationError

    out = {}
    for design_id, (entry, module) in corpus_modules.items():
        for strategy in morph.STRATEGIES:
            try:
                out[(design_id, strategy)] = morph.mutate(module, strategy, seed=42)
            except MutationError:
                pass
    return out
