"""Frozen prompt templates for LLM optimizer endpoints.

The zero-shot template is a versioned resource: its bytes are pinned by a
golden test, and every evaluation uses it verbatim (no few-shot additions)
so results stay comparable across runs and releases.
"""

ZERO_SHOT_V1 = (
    "You are an expert hardware engineer optimizing RTL code for performance and area.\n"
    "Below is a RTL module. Please optimize it while keeping its functionality unchanged.\n"
    "\n"
    "{rtl}\n"
)

TEMPLATES = {
    "zero_shot_v1": ZERO_SHOT_V1,
}

DEFAULT_TEMPLATE = "zero_shot_v1"


def build_prompt(design_text: str, template_id: str = DEFAULT_TEMPLATE) -> str:
    template = TEMPLATES[template_id]
    return template.replace("{rtl}", design_text.rstrip("\n"))
