import json
import textwrap

import pytest

from fstpricer.cli import main
from fstpricer.config import parse_config
from fstpricer.exceptions import ConfigError

EUROPEAN = """\
model:
  family: gbm
  params: {sigma: 0.2}
market: {S0: 100, r: 0.05, q: 0.0, T: 1.0}
instrument:
  payoff: {type: call, K: 100}
numerics:
  N: 4096
  L: 7.5
"""


def write(tmp_path, text, name="job.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def body_of(out):
    header, _, body = out.partition("\n")
    assert header.startswith("# fstpricer ")
    return json.loads(body[: body.rindex("}") + 1]) if body.strip() else None


def test_price_report(tmp_path, capsys):
    assert main(["--config", write(tmp_path, EUROPEAN)]) == 0
    body = body_of(capsys.readouterr().out)
    assert body["price"] == pytest.approx(10.450373887, abs=1e-8)
    assert body["grid"]["N"] == 4096
    assert body["steps"]["M"] == 1
    lo, hi = body["trusted_region"]
    assert lo < 100 < hi
    assert body["config"]["numerics"]["L"] == 7.5


def test_defaults_echoed(tmp_path, capsys):
    text = EUROPEAN.replace("  N: 4096\n  L: 7.5\n", "  N: 1024\n")
    assert main(["--config", write(tmp_path, text)]) == 0
    numerics = body_of(capsys.readouterr().out)["config"]["numerics"]
    assert numerics["L"] == 7.5 and numerics["M"] == 1


def test_bad_grid_size(tmp_path, capsys):
    code = main(["--config", write(tmp_path, EUROPEAN.replace("N: 4096", "N: 1000"))])
    assert code == 2
    err = capsys.readouterr().err
    assert "N must be a power of two" in err
    assert "line 8" in err and "numerics.N" in err


def test_unknown_key(tmp_path, capsys):
    assert main(["--config", write(tmp_path, EUROPEAN + "  extra: 1\n")]) == 2
    assert "numerics.extra" in capsys.readouterr().err


def test_invalid_model_params(tmp_path, capsys):
    text = EUROPEAN.replace("{sigma: 0.2}", "{sigma: -0.2}")
    assert main(["--config", write(tmp_path, text)]) == 2
    assert "sigma" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["--config", str(tmp_path / "nope.yaml")]) == 2


def test_numerical_failure(tmp_path, capsys):
    # a -30 rate grows every mode by e^30, far past the blow-up guard
    text = EUROPEAN.replace("r: 0.05", "r: -30.0")
    assert main(["--config", write(tmp_path, text)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_barrier_report(tmp_path, capsys):
    text = EUROPEAN + "  M: 64\n"
    text = text.replace("  payoff: {type: call, K: 100}\n",
                        "  payoff: {type: call, K: 100}\n"
                        "  constraint: {type: barrier, kind: down-and-out, H: 90}\n")
    assert main(["--config", write(tmp_path, text)]) == 0
    body = body_of(capsys.readouterr().out)
    assert abs(body["effective_barrier"] - 90.0) < 0.2
    assert body["continuity_correction"] is False


def test_reports_are_byte_identical(tmp_path, capsys):
    path = write(tmp_path, EUROPEAN)
    bodies = []
    for _ in range(2):
        main(["--config", path])
        bodies.append(capsys.readouterr().out.partition("\n")[2])
    assert bodies[0] == bodies[1]


def test_output_files(tmp_path, capsys):
    path = write(tmp_path, EUROPEAN + "output: {surface_csv: true}\n")
    out = tmp_path / "out"
    assert main(["--config", path, "--output", str(out), "--quiet"]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads((out / "report.json").read_text())["mode"] == "price"
    assert (out / "surface.csv").read_text().startswith("x,S,value\n")


CONVERGENCE = EUROPEAN.replace("  N: 4096\n", "  levels: [[1024, 1], [2048, 1], [4096, 1], [8192, 1]]\n")


def test_spatial_convergence(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--config", write(tmp_path, CONVERGENCE), "--mode", "convergence",
                 "--output", str(out), "--quiet"]) == 0
    rows = json.loads((out / "report.json").read_text())["rows"]
    orders = [r["observed_order"] for r in rows[1:]]
    assert all(1.5 <= o <= 2.5 for o in orders)
    assert (out / "convergence.csv").read_text().startswith("N,M,price,error,observed_order,degenerate")


def test_degenerate_levels(tmp_path, capsys):
    text = CONVERGENCE.replace("[[1024, 1], [2048, 1], [4096, 1], [8192, 1]]",
                               "[[1024, 1], [1024, 1], [2048, 1]]")
    out = tmp_path / "out"
    assert main(["--config", write(tmp_path, text), "--mode", "convergence",
                 "--output", str(out), "--quiet"]) == 0
    row = json.loads((out / "report.json").read_text())["rows"][1]
    assert row["observed_order"] == 0.0 and row["degenerate"] is True


def test_convergence_needs_levels(tmp_path, capsys):
    assert main(["--config", write(tmp_path, EUROPEAN), "--mode", "convergence"]) == 2


def test_verify_gbm(tmp_path, capsys):
    text = EUROPEAN + "verify: {n_paths: 200000}\n"
    assert main(["--config", write(tmp_path, text), "--mode", "verify"]) == 0
    rows = body_of(capsys.readouterr().out)["rows"]
    assert rows[0]["oracle"] == "bs_closed_form"
    assert all(r["pass"] for r in rows)


def test_verify_merton_rows(tmp_path, capsys):
    text = EUROPEAN.replace("family: gbm", "family: merton").replace(
        "{sigma: 0.2}", "{sigma: 0.1, lambda: 1.0, muJ: -0.1, sigmaJ: 0.2}")
    text += "verify: {n_paths: 200000}\n"
    assert main(["--config", write(tmp_path, text), "--mode", "verify", "--seed", "7"]) == 0
    names = [r["oracle"] for r in body_of(capsys.readouterr().out)["rows"]]
    assert "merton_series" in names and "mc_levy" in names


def test_verify_cgmy_american_has_no_oracle(tmp_path, capsys):
    text = EUROPEAN.replace("family: gbm", "family: cgmy").replace(
        "{sigma: 0.2}", "{C: 1.0, G: 5.0, M: 5.0, Y: 0.5}").replace(
        "  payoff: {type: call, K: 100}\n",
        "  payoff: {type: put, K: 100}\n  constraint: {type: american}\n")
    text = text.replace("  N: 4096\n", "  N: 1024\n  M: 16\n")
    assert main(["--config", write(tmp_path, text), "--mode", "verify"]) == 4
    assert "no oracle" in capsys.readouterr().err


def test_regime_config():
    cfg = parse_config(textwrap.dedent("""\
        model:
          regimes:
            - {family: gbm, params: {sigma: 0.15}, r: 0.05}
            - {family: gbm, params: {sigma: 0.25}, r: 0.04}
          generator: [[0, 1], [1, 0]]
        market: {S0: 100, T: 1}
        instrument: {payoff: {type: call, K: 100}}
        """))
    assert len(cfg.model.regimes) == 2


@pytest.mark.parametrize("snippet, message", [
    ("instrument: {payoff: {type: call}}", "strike K"),
    ("instrument: {payoff: {type: call, K: 100}, constraint: {type: barrier}}", "kind and H"),
])
def test_semantic_errors(snippet, message):
    text = EUROPEAN.split("instrument:")[0] + snippet + "\n"
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


def test_not_a_mapping():
    with pytest.raises(ConfigError):
        parse_config("- 1\n- 2\n")
