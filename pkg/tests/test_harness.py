import hashlib
import http.server
import json
import os
import shutil
import threading

import pytest

from rtlmorph.errors import (
    HttpError, ManifestSchemaError, MissingFile, NoCodeInResponse, ToolNotFound,
)
from rtlmorph.harness import (
    DEFAULT_TEMPLATE, EvalConfig, ExternalSynthAdapter, IdentityAdapter,
    LlmEndpointAdapter, ZERO_SHOT_V1, build_prompt, evaluate,
    evaluate_fixtures, extract_code, load_adapters, load_manifest, probe_tool,
    run_llm_adapter, run_synth_adapter,
)

from conftest import CORPUS, FIXTURES, design_text

# --- manifest ------------------------------------------------------------------


def test_bundled_manifest(manifest):
    assert len(manifest) >= 12
    for category in ("logic_op", "data_path", "timing_control", "clock_domain"):
        assert len(manifest.by_category(category)) >= 3, category
    for entry in manifest.entries:
        assert entry.flags == (), entry.design_id


def test_mini_manifest(tmp_path):
    for name in ("counter", "traffic_light", "mux2", "pipe_xor"):
        shutil.copy(os.path.join(CORPUS, "designs", f"{name}.v"), tmp_path)
    (tmp_path / "mini.txt").write_text("""
[design counter]
file = counter.v
top = counter
category = timing_control

[design traffic_light]
file = traffic_light.v
top = traffic_light
category = timing_control

[design mux2]
file = mux2.v
top = mux2
category = data_path

[design pipe_xor]
file = pipe_xor.v
top = pipe_xor
category = clock_domain
""")
    m = load_manifest(str(tmp_path / "mini.txt"))
    assert len(m) == 4
    assert {e.category for e in m.entries} == \
        {"timing_control", "data_path", "clock_domain"}


def test_empty_manifest(tmp_path):
    (tmp_path / "empty.txt").write_text("# nothing here\n")
    m = load_manifest(str(tmp_path / "empty.txt"))
    assert len(m) == 0


def test_duplicate_id(tmp_path):
    shutil.copy(os.path.join(CORPUS, "designs", "counter.v"), tmp_path)
    (tmp_path / "dup.txt").write_text("""
[design x]
file = counter.v
top = counter
category = timing_control

[design x]
file = counter.v
top = counter
category = timing_control
""")
    with pytest.raises(ManifestSchemaError):
        load_manifest(str(tmp_path / "dup.txt"))


def test_missing_file(tmp_path):
    (tmp_path / "m.txt").write_text(
        "[design x]\nfile = nope.v\ntop = x\ncategory = logic_op\n")
    with pytest.raises(MissingFile):
        load_manifest(str(tmp_path / "m.txt"))


def test_bad_category(tmp_path):
    shutil.copy(os.path.join(CORPUS, "designs", "counter.v"), tmp_path)
    (tmp_path / "m.txt").write_text(
        "[design x]\nfile = counter.v\ntop = counter\ncategory = misc\n")
    with pytest.raises(ManifestSchemaError):
        load_manifest(str(tmp_path / "m.txt"))


# --- prompts -------------------------------------------------------------------


def test_prompt_begins_with_expert_line():
    prompt = build_prompt(design_text("counter"))
    assert prompt.startswith("You are an expert hardware engineer optimizing "
                             "RTL code for performance and area.")
    assert "module counter(" in prompt


def test_prompt_empty_module():
    prompt = build_prompt("module m;\nendmodule")
    assert prompt.endswith("module m;\nendmodule\n")


def test_prompt_template_bytes_pinned():
    digest = hashlib.sha256(ZERO_SHOT_V1.encode()).hexdigest()
    assert digest == ("dbdab88a6845ead0e29c85eded03bf80f2e8fb7a4b6069177dc7f0d"
                      "6c2926f46")
    assert DEFAULT_TEMPLATE == "zero_shot_v1"


# --- code extraction -----------------------------------------------------------


def test_extract_fenced_block():
    content = "Sure!\n```verilog\nmodule m;\nendmodule\n```\nenjoy"
    assert extract_code(content) == "module m;\nendmodule\n"


def test_extract_whole_body_without_fence():
    content = "module m;\nendmodule"
    assert extract_code(content) == "module m;\nendmodule\n"


def test_extract_prose_raises():
    with pytest.raises(NoCodeInResponse):
        extract_code("I am unable to help with that request.")


# --- stub endpoint tests ----------------------------------------------------------


class _Stub(http.server.BaseHTTPRequestHandler):
    mode = "identity"
    fail_next = 0
    calls = 0

    def do_POST(self):
        type(self).calls += 1
        if type(self).fail_next > 0:
            type(self).fail_next -= 1
            self.send_response(503)
            self.end_headers()
            return
        length = int(self.headers["Content-Length"])
        req = json.loads(self.rfile.read(length))
        prompt = req["messages"][0]["content"]
        rtl = prompt.split("\n", 2)[2]
        if self.mode == "identity":
            content = f"```verilog\n{rtl.strip()}\n```"
        elif self.mode == "optimized":
            content = ("Here you go:\n```verilog\nmodule logic_pair(\n"
                       "    input wire a,\n    input wire b,\n    input wire c,\n"
                       "    output wire y\n);\n    assign y = a & (b | c);\n"
                       "endmodule\n```")
        elif self.mode == "broken":
            content = ("```verilog\nmodule logic_pair(\n    input wire a,\n"
                       "    input wire b,\n    input wire c,\n    output wire y\n);\n"
                       "    assign y = a | (b & c);\nendmodule\n```")
        else:
            content = "I cannot help with hardware."
        body = json.dumps({"choices": [{"message": {"content": content}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _Stub)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Stub.mode = "identity"
    _Stub.fail_next = 0
    _Stub.calls = 0
    yield f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions"
    server.shutdown()


def _adapter(url, **kw):
    return LlmEndpointAdapter(id="stub", url=url, model="stub-model", **kw)


def test_llm_identity_stub(stub_server, tmp_path):
    text = design_text("counter")
    got = run_llm_adapter(text, _adapter(stub_server),
                          archive_dir=str(tmp_path), archive_tag="t")
    assert got.strip() == text.strip()
    archived = json.loads((tmp_path / "t.json").read_text())
    assert archived["request"]["model"] == "stub-model"
    assert "choices" in archived["response"]


def test_llm_prose_stub(stub_server):
    _Stub.mode = "prose"
    with pytest.raises(NoCodeInResponse):
        run_llm_adapter(design_text("counter"), _adapter(stub_server))


def test_llm_retries_transport_once(stub_server):
    _Stub.fail_next = 1
    got = run_llm_adapter(design_text("counter"), _adapter(stub_server))
    assert "module counter" in got
    assert _Stub.calls == 2


def test_llm_gives_up_after_retry(stub_server):
    _Stub.fail_next = 2
    with pytest.raises(HttpError):
        run_llm_adapter(design_text("counter"), _adapter(stub_server))


# --- synthesis adapter -------------------------------------------------------------


def test_synth_adapter_tool_missing(tmp_path):
    adapter = ExternalSynthAdapter(id="synth", tool="definitely-not-here-1b2c")
    with pytest.raises(ToolNotFound):
        run_synth_adapter(design_text("counter"), adapter, str(tmp_path))


@pytest.mark.skipif(not probe_tool("yosys"), reason="synthesis tool not installed")
def test_synth_adapter_real_run(tmp_path):
    adapter = ExternalSynthAdapter(id="yosys")
    netlist, metrics = run_synth_adapter(design_text("counter"), adapter,
                                         str(tmp_path))
    assert metrics.wires > 0 and metrics.cells > 0
    netlist2, metrics2 = run_synth_adapter(design_text("counter"), adapter,
                                           str(tmp_path / "again"))
    assert metrics == metrics2


def test_adapter_config_parsing(tmp_path):
    (tmp_path / "adapters.txt").write_text("""
[adapter identity]
kind = identity

[adapter gpt]
kind = llm_endpoint
url = http://localhost:9/v1/chat/completions
model = gpt-x
auth_env = API_KEY

[adapter yosys]
kind = external_synth
tool = yosys
""")
    adapters = load_adapters(str(tmp_path / "adapters.txt"))
    kinds = [a.kind for a in adapters]
    assert kinds == ["identity", "llm_endpoint", "external_synth"]
    assert adapters[1].auth_env == "API_KEY"


# --- evaluation -------------------------------------------------------------------


def _mini_manifest(tmp_path, names):
    for name, category in names:
        shutil.copy(os.path.join(CORPUS, "designs", f"{name}.v"), tmp_path)
    lines = []
    for name, category in names:
        lines.append(f"[design {name}]\nfile = {name}.v\ntop = {name}\n"
                     f"category = {category}\n")
    path = tmp_path / "manifest.txt"
    path.write_text("\n".join(lines))
    return str(path)


def test_identity_smoke(tmp_path):
    path = _mini_manifest(tmp_path, [("logic_pair", "logic_op"),
                                     ("mux2", "data_path")])
    cfg = EvalConfig(manifest_path=path, adapters=[IdentityAdapter()],
                     out_dir=str(tmp_path / "out"), seed=3, trials=2, cycles=200)
    run = evaluate(cfg)
    for category, report in run.reports.items():
        for metric in ("wires", "cells", "area"):
            mean, arrow = report.cell("identity_org", metric)
            assert mean == pytest.approx(1.0), (category, metric)
    # mutants measured through an attached equivalent verdict only
    for cell in run.cells:
        if cell.metrics is not None:
            assert cell.verdict in ("equivalent", "assumed-equivalent")
    mut_cells = [c for c in run.cells if c.variant == "mut" and c.status == "ok"]
    assert mut_cells


def test_inequivalent_adapter_output_excluded(tmp_path, stub_server):
    _Stub.mode = "broken"  # returns a plausible but wrong module
    path = _mini_manifest(tmp_path, [("logic_pair", "logic_op")])
    cfg = EvalConfig(manifest_path=path, adapters=[_adapter(stub_server)],
                     out_dir=str(tmp_path / "out"), seed=3, trials=2, cycles=100,
                     strategies={})
    run = evaluate(cfg)
    assert any("inequivalent" in e[3] for e in run.exclusions)
    assert not any(c.adapter == "stub" and c.status == "ok" for c in run.cells)


def test_fixture_mode_reproduces_tables(tmp_path):
    reports = evaluate_fixtures(
        [os.path.join(FIXTURES, "table1_timing_control.json"),
         os.path.join(FIXTURES, "table2_clock_domain.json")],
        out_dir=str(tmp_path))
    tc = reports["timing_control"]
    for method, metric, want in (
            ("GPT_mut", "delay", 0.86), ("GPT_mut", "area", 7.93),
            ("GPT_mut", "power", 3.00), ("Claude_mut", "area", 0.55)):
        mean, _ = tc.cell(method, metric)
        assert abs(mean - want) <= 0.005, (method, metric)
    assert os.path.exists(tmp_path / "report_timing_control.md")


def test_reproducibility_byte_identical(tmp_path):
    path = _mini_manifest(tmp_path, [("logic_pair", "logic_op"),
                                     ("counter", "timing_control")])
    outs = []
    for sub in ("a", "b"):
        cfg = EvalConfig(manifest_path=path, adapters=[IdentityAdapter()],
                         out_dir=str(tmp_path / sub), seed=9, trials=2, cycles=150)
        evaluate(cfg)
        outs.append({name: (tmp_path / sub / name).read_bytes()
                     for name in ("results.jsonl", "cells.jsonl")})
    assert outs[0] == outs[1]


def test_parallel_evaluation_matches_serial(tmp_path):
    path = _mini_manifest(tmp_path, [("logic_pair", "logic_op"),
                                     ("maj3", "logic_op"),
                                     ("mux2", "data_path")])
    texts = []
    for jobs, sub in ((1, "serial"), (3, "parallel")):
        cfg = EvalConfig(manifest_path=path, adapters=[IdentityAdapter()],
                         out_dir=str(tmp_path / sub), seed=4, trials=2,
                         cycles=100, jobs=jobs)
        evaluate(cfg)
        texts.append((tmp_path / sub / "results.jsonl").read_text())
    assert texts[0] == texts[1]


def test_mutant_artifacts_written(tmp_path):
    path = _mini_manifest(tmp_path, [("logic_pair", "logic_op")])
    cfg = EvalConfig(manifest_path=path, adapters=[IdentityAdapter()],
                     out_dir=str(tmp_path / "out"), seed=3, trials=2, cycles=100)
    evaluate(cfg)
    mut = tmp_path / "out" / "mutants" / "logic_pair.mut.v"
    sidecar = tmp_path / "out" / "mutants" / "logic_pair.mut.v.json"
    assert mut.exists() and sidecar.exists()
    record = json.loads(sidecar.read_text())
    assert record["strategy"] == "logic"
