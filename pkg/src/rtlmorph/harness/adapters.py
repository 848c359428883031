"""Optimizer adapters: identity (control), LLM HTTP endpoints
(chat-completion style), and the external synthesis tool.

Adapter output is always Verilog text that the caller must parse and
equivalence-check before any metric is recorded. LLM exchanges are
archived verbatim for audit; transport errors get one retry, content
errors none.
"""

import json
import os
import re
import shutil
import subprocess
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

from ..errors import (
    AdapterTimeout, HttpError, ManifestSchemaError, NoCodeInResponse,
    NonzeroExit, ToolNotFound,
)
from ..metrics import MetricSet, parse_tool_stat
from .prompts import DEFAULT_TEMPLATE, build_prompt


@dataclass(frozen=True)
class IdentityAdapter:
    id: str = "identity"
    kind: str = "identity"


@dataclass(frozen=True)
class LlmEndpointAdapter:
    id: str
    url: str
    model: str
    auth_env: str = ""
    prompt_template: str = DEFAULT_TEMPLATE
    timeout: float = 60.0
    min_interval: float = 0.0  # seconds between calls (rate limit)
    kind: str = "llm_endpoint"


DEFAULT_SYNTH_SCRIPT = """read_verilog {input}
hierarchy -auto-top
proc
opt
fsm
opt
memory
opt
techmap
opt
abc
opt
write_verilog -noattr {output}
stat
"""


@dataclass(frozen=True)
class ExternalSynthAdapter:
    id: str
    script_template: str = DEFAULT_SYNTH_SCRIPT
    tool: str = "yosys"
    timeout: float = 300.0
    kind: str = "external_synth"


def load_adapters(path):
    """Adapter config file: [adapter <id>] sections with key = value."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    base_dir = os.path.dirname(os.path.abspath(path))
    out = []
    current = None

    def finish():
        if current is None:
            return
        kind = current.get("kind")
        aid = current["__id__"]
        if kind == "identity":
            out.append(IdentityAdapter(id=aid))
        elif kind == "llm_endpoint":
            for key in ("url", "model"):
                if key not in current:
                    raise ManifestSchemaError(f"adapter {aid}: missing {key}")
            out.append(LlmEndpointAdapter(
                id=aid, url=current["url"], model=current["model"],
                auth_env=current.get("auth_env", ""),
                prompt_template=current.get("prompt_template", DEFAULT_TEMPLATE),
                timeout=float(current.get("timeout", 60)),
                min_interval=float(current.get("min_interval", 0))))
        elif kind == "external_synth":
            script = DEFAULT_SYNTH_SCRIPT
            if "script" in current:
                with open(os.path.join(base_dir, current["script"]), "r",
                          encoding="utf-8") as f:
                    script = f.read()
            out.append(ExternalSynthAdapter(
                id=aid, script_template=script,
                tool=current.get("tool", "yosys"),
                timeout=float(current.get("timeout", 300))))
        else:
            raise ManifestSchemaError(f"adapter {aid}: unknown kind {kind!r}")

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            parts = line[1:-1].split()
            if len(parts) != 2 or parts[0] != "adapter" or not line.endswith("]"):
                raise ManifestSchemaError(f"{path}:{lineno}: expected [adapter <id>]")
            finish()
            current = {"__id__": parts[1]}
            continue
        if current is None or "=" not in line:
            raise ManifestSchemaError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        current[key.strip()] = value.strip()
    finish()
    return out


# --- LLM endpoint ------------------------------------------------------------

_FENCE_RE = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.DOTALL)

_rate_lock = threading.Lock()
_last_call = {}


def _rate_limit(adapter):
    if adapter.min_interval <= 0:
        return
    with _rate_lock:
        last = _last_call.get(adapter.id, 0.0)
        wait = last + adapter.min_interval - time.monotonic()
        if wait > 0:
            time.sleep(wait)
        _last_call[adapter.id] = time.monotonic()


def _post_json(url, payload, headers, timeout):
    data = json.dumps(payload).encode("utf-8")
    req = urllib.request.Request(url, data=data, method="POST",
                                 headers={"Content-Type": "application/json",
                                          **headers})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        raise HttpError(f"HTTP {exc.code} from {url}") from exc
    except urllib.error.URLError as exc:
        if isinstance(getattr(exc, "reason", None), TimeoutError):
            raise AdapterTimeout(str(exc)) from exc
        raise HttpError(f"transport error: {exc.reason}") from exc
    except TimeoutError as exc:
        raise AdapterTimeout(str(exc)) from exc


def extract_code(content: str) -> str:
    """First fenced code block; otherwise the whole body if it looks like
    Verilog at all."""
    m = _FENCE_RE.search(content)
    candidate = m.group(1) if m else content
    if "module" not in candidate:
        raise NoCodeInResponse("response carries no RTL code")
    return candidate.strip() + "\n"


def run_llm_adapter(design_text: str, adapter: LlmEndpointAdapter,
                    timeout: float = None, archive_dir: str = None,
                    archive_tag: str = "exchange") -> str:
    """POST the frozen prompt, extract the candidate RTL, archive the raw
    exchange. One retry on transport errors, none on content errors."""
    prompt = build_prompt(design_text, adapter.prompt_template)
    payload = {
        "model": adapter.model,
        "messages": [{"role": "user", "content": prompt}],
    }
    headers = {}
    token = os.environ.get(adapter.auth_env, "") if adapter.auth_env else ""
    if token:
        headers["Authorization"] = f"Bearer {token}"

    _rate_limit(adapter)
    last_exc = None
    response = None
    for attempt in range(2):
        try:
            response = _post_json(adapter.url, payload, headers,
                                  timeout or adapter.timeout)
            break
        except (HttpError, AdapterTimeout) as exc:
            last_exc = exc
    if response is None:
        raise last_exc

    if archive_dir:
        os.makedirs(archive_dir, exist_ok=True)
        with open(os.path.join(archive_dir, f"{archive_tag}.json"), "w",
                  encoding="utf-8") as f:
            json.dump({"request": payload, "response": response}, f,
                      indent=2, sort_keys=True)

    try:
        content = response["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise NoCodeInResponse(f"malformed completion payload: {exc}") from exc
    return extract_code(content)


# --- external synthesis tool ---------------------------------------------------


def probe_tool(tool: str = "yosys") -> bool:
    return shutil.which(tool) is not None


def run_synth_adapter(design_text: str, adapter: ExternalSynthAdapter,
                      workdir: str):
    """Run the synthesis script in an isolated directory; returns
    (netlist text, MetricSet from the tool's statistics output)."""
    if not probe_tool(adapter.tool):
        raise ToolNotFound(adapter.tool)
    os.makedirs(workdir, exist_ok=True)
    in_path = os.path.join(workdir, "input.v")
    out_path = os.path.join(workdir, "netlist.v")
    with open(in_path, "w", encoding="utf-8") as f:
        f.write(design_text)
    script = adapter.script_template.replace("{input}", "input.v") \
        .replace("{output}", "netlist.v")
    script_path = os.path.join(workdir, "synth.ys")
    with open(script_path, "w", encoding="utf-8") as f:
        f.write(script)
    proc = subprocess.run([adapter.tool, "-s", "synth.ys"], cwd=workdir,
                          capture_output=True, text=True,
                          timeout=adapter.timeout)
    log = proc.stdout + proc.stderr
    with open(os.path.join(workdir, "tool.log"), "w", encoding="utf-8") as f:
        f.write(log)
    if proc.returncode != 0:
        raise NonzeroExit(proc.returncode, log[-2000:])
    metrics = parse_tool_stat(proc.stdout)
    netlist = ""
    if os.path.exists(out_path):
        with open(out_path, "r", encoding="utf-8") as f:
            netlist = f.read()
    return netlist, metrics
