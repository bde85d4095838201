import csv

import pytest

from markov_gauge.errors import ConfigError
from markov_gauge.pipeline import (
    SUMMARY_COLUMNS,
    PipelineConfig,
    parse_config,
    plot_data,
    read_summary,
    run_pipeline,
)

TINY = """\
[simulate]
nodes = 6
avg_degree = 2
n_train = 200
n_test = 200

[pipeline]
reps = 2
seed = 3

[learn]
pc_alphas = 0.01, 0.1
hc_lambdas = 4 1

[check]
min_pvalues = 50
"""


def test_parse_config_values():
    cfg = parse_config(TINY)
    assert (cfg.nodes, cfg.avg_degree, cfg.reps, cfg.seed) == (6, 2.0, 2, 3)
    assert cfg.pc_alphas == (0.01, 0.1) and cfg.hc_lambdas == (4.0, 1.0)
    assert cfg.min_pvalues == 50 and cfg.alpha == 0.05
    assert parse_config("") == PipelineConfig()


@pytest.mark.parametrize(
    "text, line, match",
    [
        ("[simulate]\nnodes = 5\navg_degree = 7\n", 3, "avg_degree"),
        ("[simulate]\nnodes = x\n", 2, "nodes"),
        ("[simulate]\ncolour = red\n", 2, "unknown key"),
        ("[sim]\nnodes = 5\n", 1, "unknown section"),
        ("nodes = 5\n", 1, "outside"),
        ("[pipeline]\nreps = 0\n", 2, "reps"),
        ("[learn]\npc_alphas = 0.5 1.5\n", 2, "pc_alphas"),
        ("[learn]\nsp_alphas = 0.01\n", 2, "nodes <= 8"),
        ("[check]\nvariant = pairwise\n", 2, "variant"),
        ("[pipeline]\ninclude_true_model = maybe\n", 2, "boolean"),
        ("[simulate]\nnodes = 5\nnodes = 6\n", 3, "duplicate"),
    ],
)
def test_config_errors_name_line(text, line, match):
    with pytest.raises(ConfigError, match=match) as info:
        parse_config(text)
    assert info.value.line_no == line
    assert str(info.value).startswith(f"line {line}:")


def test_pipeline_outputs_and_determinism(tmp_path):
    cfg = parse_config(TINY)
    rows = run_pipeline(cfg, tmp_path / "a", TINY)
    run_pipeline(cfg, tmp_path / "b", TINY)
    a = (tmp_path / "a" / "summary.csv").read_bytes()
    assert a == (tmp_path / "b" / "summary.csv").read_bytes()
    for name in ("cafs.json", "metrics.csv", "truth.txt", "train.csv", "test.csv"):
        assert (tmp_path / "a" / "rep_000" / name).read_bytes() == (tmp_path / "b" / "rep_000" / name).read_bytes()
    assert (tmp_path / "a" / "manifest.json").exists()
    assert len(list((tmp_path / "a" / "rep_001" / "candidates").iterdir())) == 4
    # 4 learned candidates plus the true model, per rep
    assert len(rows) == 10
    header = next(csv.reader(a.decode().splitlines()))
    assert tuple(header) == SUMMARY_COLUMNS
    for rep in (0, 1):
        rep_rows = [r for r in rows if r["rep"] == rep]
        assert sum(r["is_cafs_selected"] for r in rep_rows) <= 1
        true_row = [r for r in rep_rows if r["candidate"] == "true_model"][0]
        assert true_row["shd"] == 0 and true_row["f1"] == 1.0


def test_parallel_reps_match_serial(tmp_path):
    cfg = parse_config(TINY)
    run_pipeline(cfg, tmp_path / "serial")
    run_pipeline(PipelineConfig(**{**cfg.__dict__, "workers": 2}), tmp_path / "par")
    assert (tmp_path / "serial" / "summary.csv").read_bytes() == (tmp_path / "par" / "summary.csv").read_bytes()


def test_single_rep_single_candidate(tmp_path):
    text = "[simulate]\nnodes = 5\navg_degree = 1\n[pipeline]\nreps = 1\ninclude_true_model = no\n" \
           "[learn]\npc_alphas =\nhc_lambdas = 2\n"
    rows = run_pipeline(parse_config(text), tmp_path)
    assert len(rows) == 1
    assert len(read_summary(tmp_path / "summary.csv")) == 1


def test_plot_data(tmp_path):
    run_pipeline(parse_config(TINY), tmp_path)
    summary = read_summary(tmp_path / "summary.csv")
    table = plot_data(summary, "p_ad", "edges")
    assert len(table) == len([r for r in summary if r["p_ad"]])
    assert {r["passed_marker"] for r in table} <= {"star", "circle"}
    assert sum(r["is_true_model"] for r in table) >= 2
    assert all(set(r) >= {"x", "y", "passed_marker", "is_cafs_selected", "is_min_kldiv"} for r in table)
    assert plot_data([], "kl_div", "bic") == []
    with pytest.raises(ValueError, match="unknown statistic"):
        plot_data(summary, "p_ad", "rmsea")
    no_truth = [{**r, "shd": ""} for r in summary]
    with pytest.raises(ValueError, match="requires truth"):
        plot_data(no_truth, "p_ad", "shd")


def test_readme_config_is_the_default():
    from pathlib import Path

    readme = (Path(__file__).parents[1] / "README.md").read_text()
    block = readme.split("```ini\n", 1)[1].split("```", 1)[0]
    cfg = parse_config(block)
    assert cfg == PipelineConfig(workers=1)
