"""Evaluation harness: corpus manifests, optimizer adapters, and the
end-to-end pipeline with its validation gate."""

from .manifest import CATEGORIES, CorpusEntry, CorpusManifest, load_manifest
from .prompts import DEFAULT_TEMPLATE, TEMPLATES, ZERO_SHOT_V1, build_prompt
from .adapters import (
    DEFAULT_SYNTH_SCRIPT, ExternalSynthAdapter, IdentityAdapter,
    LlmEndpointAdapter, extract_code, load_adapters, probe_tool,
    run_llm_adapter, run_synth_adapter,
)
from .evaluate import (
    EvalConfig, EvaluationRun, CellResult, STRATEGY_FOR_CATEGORY,
    evaluate, evaluate_fixtures,
)
