import csv
import json

import numpy as np
import pytest

from fracflow import cli, io
from fracflow import geometry as geo
from fracflow.config import RunConfig, build_config, parse_config
from fracflow.errors import ConfigError

SHORT_FLOW = ["flow", "--N", "64", "--T", "0.01", "--monitor-every", "10", "--perimeter-every", "10",
              "--snapshot-every", "20", "--trace-every", "5"]


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    status = cli.main([*argv, "--output-dir", str(out)])
    return status, out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


# configuration


def test_parse_config_valid_flow():
    cfg = parse_config("s=0.5 N=256 shape=ellipse:1.3 T=20")
    assert (cfg.subcommand, cfg.s, cfg.N, cfg.shape, cfg.T) == ("flow", 0.5, 256, "ellipse:1.3", 20.0)


@pytest.mark.parametrize("text, key", [("s=1.2", "s"), ("alpha=0.6 s=0.5", "alpha"), ("N=100", "N"),
                                       ("N=8192", "N"), ("bogus=1", "bogus"), ("seed=-1", "seed"),
                                       ("method=simpson", "method"), ("N=abc", "N"), ("s", "s")])
def test_parse_config_errors_name_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_parse_config_json_and_comments():
    assert parse_config('{"s": 0.3, "N": 64, "dt": null}') == RunConfig(s=0.3, N=64)
    assert parse_config("s=0.3  # order\nN=64\n") == RunConfig(s=0.3, N=64)


def test_alpha_default_and_subcommand_check():
    assert RunConfig(s=0.3).holder_alpha == pytest.approx(0.15)
    assert parse_config("subcommand=verify s=0.5").holder_alpha == 0.25
    with pytest.raises(ConfigError):
        parse_config("subcommand=verify alpha=0.5")


def test_layers_later_wins():
    cfg = build_config({"s": "0.3", "N": "64"}, {"N": 128})
    assert cfg.s == 0.3 and cfg.N == 128


def test_precedence_flags_over_set_over_env_over_file(tmp_path):
    conf = tmp_path / "c.txt"
    conf.write_text("s=0.3 N=64 T=2 threads=3")
    args = cli.build_parser().parse_args(["flow", "--config", str(conf), "--set", "N=32", "--set", "T=4",
                                          "--T", "5"])
    cfg = cli.resolve_config(args, environ={"FRACFLOW_THREADS": "2"})
    assert (cfg.s, cfg.N, cfg.T, cfg.threads) == (0.3, 32, 5.0, 2)
    args = cli.build_parser().parse_args(["flow", "--threads", "1"])
    assert cli.resolve_config(args, environ={"FRACFLOW_THREADS": "2"}).threads == 1


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        cli.main(["flow", "--help"])
    text = " ".join(capsys.readouterr().out.split())
    assert "--c-cfl" in text and "(default: 0.2)" in text and "--n-quad" in text


def test_config_error_exit_status(tmp_path, capsys):
    status, _ = run(tmp_path, "flow", "--s", "1.5")
    assert status == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and err["key"] == "s"


def test_unreadable_config_file(tmp_path):
    status, _ = run(tmp_path, "flow", "--config", str(tmp_path / "missing.txt"))
    assert status == 2


def test_output_dir_is_a_file(tmp_path):
    target = tmp_path / "taken"
    target.write_text("x")
    assert cli.main(["curvature", "--N", "16", "--output-dir", str(target)]) == 5


# subcommands


def test_curvature_circle(tmp_path):
    status, out = run(tmp_path, "curvature", "--shape", "circle", "--N", "64")
    assert status == 0
    with (out / "curvature.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 64 and set(rows[0]) == {"theta", "H"}
    rec = io.read_jsonl(out / "curvature.jsonl")[0]
    assert rec["average"] == pytest.approx(rec["closed_form"], rel=1e-8)
    m = manifest(out)
    assert all(c["pass"] for c in m["checks"])
    assert {c["check"] for c in m["checks"]} >= {"alexandrov_constancy", "circle_closed_form"}


def test_manifest_hashes_artifacts(tmp_path):
    _, out = run(tmp_path, "curvature", "--shape", "ellipse:1.2", "--N", "32", "--method", "boundary")
    m = manifest(out)
    assert {a["path"] for a in m["artifacts"]} == {"curvature.csv", "curvature.jsonl"}
    for a in m["artifacts"]:
        assert io.sha256_file(out / a["path"]) == a["sha256"]
    assert m["seed"] == 0 and m["config"]["method"] == "boundary" and m["exit_status"] == 0


def test_method_error_on_nonconvex_file(tmp_path, capsys):
    th = geo.grid_angles(64)
    path = io.write_field_csv(tmp_path / "star.csv", geo.build_field(1.0 + 0.35 * np.cos(5 * th)))
    status, out = run(tmp_path, "curvature", "--shape", f"file:{path}", "--N", "64", "--method", "chord_quadrature")
    assert status == 4
    assert manifest(out)["error"]["code"] == "method"
    assert json.loads(capsys.readouterr().err)["error"] == "method"


def test_flow_artifacts(tmp_path):
    status, out = run(tmp_path, *SHORT_FLOW)
    assert status == 0
    trace = io.read_jsonl(out / "trace.jsonl")
    steps = [r["step"] for r in trace]
    assert steps[0] == 0 and all(s % 5 == 0 for s in steps[:-1])
    assert all(r["seed"] == 0 for r in trace)
    assert trace[-1]["t"] == pytest.approx(0.01, rel=1e-12)
    with (out / "summary.csv").open() as fh:
        row = next(csv.DictReader(fh))
    assert {"config_hash", "c", "C", "residual", "runtime"} <= set(row)
    final = io.read_field_csv(out / "final_field.csv")
    assert geo.area(final) == pytest.approx(np.pi, rel=1e-12)
    assert (out / "snapshots" / "h_00000000.csv").exists()
    names = {c["check"] for c in manifest(out)["checks"]}
    assert {"convexity_preserved", "volume_conservation", "perimeter_non_increasing", "curvature_bound"} == names


def test_flow_is_deterministic(tmp_path):
    _, a = run(tmp_path, *SHORT_FLOW, name="a")
    _, b = run(tmp_path, *SHORT_FLOW, name="b")
    for name in ("trace.jsonl", "final_field.csv", "snapshots/h_00000020.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma, mb = manifest(a), manifest(b)
    hashes = lambda m: {x["path"]: x["sha256"] for x in m["artifacts"] if x["path"] != "summary.csv"}
    assert hashes(ma) == hashes(mb)


def test_flow_halt_exit_status(tmp_path):
    status, out = run(tmp_path, "flow", "--N", "64", "--T", "1", "--shape", "ellipse:2", "--dt", "0.05")
    assert status == 3
    halt = io.read_jsonl(out / "halt.jsonl")[0]
    assert halt["step"] == 1 and "convexity" in halt["cause"]
    assert manifest(out)["exit_status"] == 3


def test_spectral_small(tmp_path):
    status, out = run(tmp_path, "spectral", "--N", "32", "--T", "0.25", "--dt", "0.00390625", "--corpus", "2",
                      "--trace-every", "16")
    assert status == 0
    recs = io.read_jsonl(out / "spectral_trace.jsonl")
    assert len(recs) == 4 and set(recs[0]) == {"seed", "t", "sup_u", "norm_u_C1sa", "norm_f_Ca"}
    with (out / "symbol.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 19
    for r in rows:
        assert float(r["c_s_alternative"]) == pytest.approx(float(r["c_s"]), rel=1e-8)
    assert all(c["pass"] for c in manifest(out)["checks"])


def test_norms_long_table(tmp_path):
    status, out = run(tmp_path, "norms", "--N", "64", "--corpus", "3")
    assert status == 0
    with (out / "norms.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"function", "norm", "value", "N"}
    assert {r["N"] for r in rows} == {"64", "128"}
    assert len(rows) == 2 * 3 * 5


def test_verify_report(tmp_path):
    status, out = run(tmp_path, "verify", "--seed", "7")
    recs = io.read_jsonl(out / "verify.jsonl")
    assert status == (0 if all(r["pass"] for r in recs) else 1)
    assert all(r["seed"] == 7 for r in recs)
    assert [c["check"] for c in manifest(out)["checks"]] == [r["check"] for r in recs]
