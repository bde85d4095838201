"""Config-driven simulate -> learn -> check -> CAFS runs and plot tables."""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__
from .cafs import Candidate, CafsResult, cafs, check_candidate
from .checker import CheckConfig
from .dsep import parse_variant
from .errors import ConfigError
from .graph import as_cpdag, cpdag_of, serialize_graph
from .learners import HC_LAMBDAS, PC_ALPHAS, LearnerSpec, candidate_grid
from .metrics import baseline_fit, metrics_row
from .runtime import derive_seed, resolve_workers
from .simulate import SimConfig, random_dag, simulate_gaussian

SUMMARY_COLUMNS = (
    "rep", "candidate", "edges", "p_ad", "ks", "kl_div", "passed",
    "bic", "f1", "shd", "cfi", "nfi",
    "is_true_model", "is_cafs_selected", "is_min_kldiv",
)
PLOT_X = ("p_ad", "kl_div")
PLOT_Y = ("edges", "bic", "f1", "shd", "cfi", "nfi")
TRUTH_ONLY = ("f1", "shd")
TRUE_MODEL_ID = "true_model"


# --- config -------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    nodes: int = 15
    avg_degree: float = 3.0
    n_train: int = 500
    n_test: int = 500
    reps: int = 10
    seed: int = 0
    coef_low: float = 0.3
    coef_high: float = 1.0
    pc_alphas: tuple[float, ...] = PC_ALPHAS
    hc_lambdas: tuple[float, ...] = HC_LAMBDAS
    sp_alphas: tuple[float, ...] = ()
    hc_restarts: int = 5
    alpha: float = 0.05
    fraction: float = 0.5
    min_pvalues: int = 200
    variant: str = "ordered-local"
    include_true_model: bool = True
    workers: int | None = None

    def specs(self) -> list[LearnerSpec]:
        out = []
        if self.pc_alphas:
            out.append(LearnerSpec("pc_lite", self.pc_alphas))
        if self.hc_lambdas:
            out.append(LearnerSpec("hill_climb", self.hc_lambdas))
        if self.sp_alphas:
            out.append(LearnerSpec("sp_oracle", self.sp_alphas))
        return out

    def sim_config(self, rep: int) -> SimConfig:
        return SimConfig(self.nodes, self.avg_degree, self.n_train, self.n_test,
                         (self.coef_low, self.coef_high), derive_seed(self.seed, "rep", rep))

    def check_config(self) -> CheckConfig:
        return CheckConfig(parse_variant(self.variant, self.seed), self.fraction, self.min_pvalues,
                           self.alpha, self.seed)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> value parser; keys map one-to-one onto PipelineConfig fields
_SCHEMA = {
    "simulate": {
        "nodes": int, "avg_degree": float, "n_train": int, "n_test": int,
        "coef_low": float, "coef_high": float,
    },
    "pipeline": {"reps": int, "seed": int, "workers": int, "include_true_model": _bool},
    "learn": {"pc_alphas": _floats, "hc_lambdas": _floats, "sp_alphas": _floats, "hc_restarts": int},
    "check": {"alpha": float, "fraction": float, "min_pvalues": int, "variant": str},
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict[tuple[str, str], int]:
    out = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), no)
    return out


def parse_config(text: str) -> PipelineConfig:
    """Parse an INI pipeline config; every error names its line."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0]
        raise ConfigError(f"cannot parse {exc.errors[0][1]}", lineno) from None
    lines = _line_index(text)
    values: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            no = _section_line(text, section)
            raise ConfigError(f"unknown section [{section}]", no)
        for key, raw in parser.items(section):
            no = lines.get((section, key))
            conv = _SCHEMA[section].get(key)
            if conv is None:
                raise ConfigError(f"unknown key {key!r} in [{section}]", no)
            try:
                values[key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}", no) from None
    try:
        cfg = PipelineConfig(**values)
        _validate(cfg)
    except (ValueError, TypeError) as exc:
        key = getattr(exc, "key", None)
        no = next((n for (s, k), n in lines.items() if k == key), None) if key else None
        raise ConfigError(str(exc), no) from None
    return cfg


def _section_line(text: str, section: str) -> int | None:
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m and m.group(1).strip() == section:
            return no
    return None


class _FieldError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key


def _validate(cfg: PipelineConfig) -> None:
    if cfg.nodes < 2:
        raise _FieldError("nodes", "nodes must be >= 2")
    if not 0 <= cfg.avg_degree <= cfg.nodes - 1:
        raise _FieldError("avg_degree", f"avg_degree must lie in [0, {cfg.nodes - 1}] for {cfg.nodes} nodes")
    if cfg.reps < 1:
        raise _FieldError("reps", "reps must be >= 1")
    if cfg.n_train < 10:
        raise _FieldError("n_train", "n_train must be >= 10")
    if cfg.n_test < 10:
        raise _FieldError("n_test", "n_test must be >= 10")
    if not 0 < cfg.coef_low < cfg.coef_high:
        raise _FieldError("coef_low", "need 0 < coef_low < coef_high")
    if not (cfg.pc_alphas or cfg.hc_lambdas or cfg.sp_alphas):
        raise _FieldError("pc_alphas", "no learner grid configured")
    for key, grid in (("pc_alphas", cfg.pc_alphas), ("sp_alphas", cfg.sp_alphas)):
        if any(not 0 < a < 1 for a in grid):
            raise _FieldError(key, f"{key} must lie in (0, 1)")
    if any(lam <= 0 for lam in cfg.hc_lambdas):
        raise _FieldError("hc_lambdas", "hc_lambdas must be positive")
    if cfg.sp_alphas and cfg.nodes > 8:
        raise _FieldError("sp_alphas", "sp_oracle needs nodes <= 8")
    if not 0 < cfg.alpha < 1:
        raise _FieldError("alpha", "alpha must lie in (0, 1)")
    if not 0 < cfg.fraction <= 1:
        raise _FieldError("fraction", "fraction must lie in (0, 1]")
    if cfg.min_pvalues < 0:
        raise _FieldError("min_pvalues", "min_pvalues must be >= 0")
    try:
        parse_variant(cfg.variant)
    except ValueError as exc:
        raise _FieldError("variant", str(exc)) from None


def load_config(path: str | Path) -> PipelineConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# --- running ------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class RepResult:
    rep: int
    rows: list[dict]
    cafs: CafsResult
    truth_serialized: str
    files: dict[str, str] = field(default_factory=dict)


def run_rep(cfg: PipelineConfig, rep: int) -> RepResult:
    """One simulation replicate: learn on train, check and score on test."""
    sim = cfg.sim_config(rep)
    dag = random_dag(cfg.nodes, cfg.avg_degree, derive_seed(sim.seed, "graph"))
    truth = cpdag_of(dag)
    train, test = simulate_gaussian(dag, sim)
    candidates = candidate_grid(train, cfg.specs(), seed=derive_seed(sim.seed, "learn"),
                                restarts=cfg.hc_restarts)
    check_cfg = cfg.check_config()
    result = cafs(candidates, test, check_cfg, truth)
    truth_text = serialize_graph(truth)
    rows = []
    for row in result.table():
        o = result.outcome(row["id"])
        rows.append(_summary_row(rep, row, serialize_graph(as_cpdag(o.graph)) == truth_text))
    if cfg.include_true_model:
        report = check_candidate(Candidate(TRUE_MODEL_ID, truth), test, check_cfg)
        m = metrics_row(truth, test, truth, baseline_fit(test, truth.nodes))
        uni = report.uniformity
        row = {
            "id": TRUE_MODEL_ID, "edges": truth.edge_count,
            "p_ad": uni.p_ad if uni else None, "ks": uni.ks_stat if uni else None,
            "kl_div": uni.kl_div if uni else None, "passed": int(report.passed),
            "bic": m.bic, "cfi": m.cfi, "nfi": m.nfi, "f1": m.f1, "shd": m.shd,
            "is_cafs_selected": 0, "is_min_kldiv": 0,
        }
        rows.append(_summary_row(rep, row, True))
    files = {
        "truth.txt": truth_text,
        "train.csv": train.csv_text(),
        "test.csv": test.csv_text(),
        "cafs.json": json.dumps(result.to_dict(include_facts=True), indent=2, sort_keys=True) + "\n",
        "metrics.csv": _rows_to_csv(rows),
    }
    for c in candidates:
        files[f"candidates/{c.id}.txt"] = serialize_graph(c.graph)
    return RepResult(rep, rows, result, truth_text, files)


def _summary_row(rep: int, row: dict, is_true: bool) -> dict:
    return {
        "rep": rep, "candidate": row["id"], "edges": row["edges"],
        "p_ad": row.get("p_ad"), "ks": row.get("ks"), "kl_div": row.get("kl_div"),
        "passed": row["passed"], "bic": row.get("bic"), "f1": row.get("f1"), "shd": row.get("shd"),
        "cfi": row.get("cfi"), "nfi": row.get("nfi"), "is_true_model": int(is_true),
        "is_cafs_selected": row["is_cafs_selected"], "is_min_kldiv": row["is_min_kldiv"],
    }


def _rows_to_csv(rows: Sequence[dict], columns: Sequence[str] = SUMMARY_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _run_rep_args(args):
    return run_rep(*args)


def run_pipeline(cfg: PipelineConfig, out_dir: str | Path | None = None,
                 config_text: str = "") -> list[dict]:
    """Run every replicate; write per-rep files, summary.csv and manifest.json.

    Returns the summary rows.  Outputs other than the manifest's timestamp are
    byte-identical across reruns of the same config.
    """
    workers = resolve_workers(cfg.workers)
    jobs = [(cfg, rep) for rep in range(cfg.reps)]
    if workers > 1 and cfg.reps > 1:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.reps)) as pool:
            results = list(pool.map(_run_rep_args, jobs))
    else:
        results = [run_rep(*j) for j in jobs]
    rows = [r for res in results for r in res.rows]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for res in results:
            rep_dir = out / f"rep_{res.rep:03d}"
            for name, content in res.files.items():
                path = rep_dir / name
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(content)
        (out / "summary.csv").write_text(_rows_to_csv(rows))
        manifest = {
            "command": "pipeline",
            "config": asdict(cfg),
            "seeds": {str(rep): cfg.sim_config(rep).seed for rep in range(cfg.reps)},
            "input_hashes": {"config": hashlib.sha256(config_text.encode()).hexdigest()},
            "tool_version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return rows


# --- plot data ----------------------------------------------------------------


def read_summary(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(v):
    if v is None or v == "":
        return None
    f = float(v)
    return int(f) if f.is_integer() and not math.isinf(f) else f


def plot_data(summary: Sequence[dict], x: str = "p_ad", y: str = "edges") -> list[dict]:
    """Tidy scatter table: one row per checked candidate.

    Columns: x, y, passed_marker, is_true_model, is_cafs_selected,
    is_min_kldiv.  Rows with no Markov-check statistic (skipped candidates)
    are dropped.
    """
    if x not in PLOT_X:
        raise ValueError(f"unknown x statistic {x!r}; choose from {', '.join(PLOT_X)}")
    if y not in PLOT_Y:
        raise ValueError(f"unknown statistic {y!r}; choose from {', '.join(PLOT_Y)}")
    rows = []
    for r in summary:
        xv = _num(r.get(x))
        if xv is None:
            continue
        yv = _num(r.get(y))
        if yv is None and y in TRUTH_ONLY:
            raise ValueError(f"statistic {y!r} requires truth")
        rows.append({
            "rep": _num(r.get("rep")),
            "candidate": r.get("candidate", r.get("id")),
            "x": xv,
            "y": yv,
            "passed_marker": "star" if int(_num(r.get("passed")) or 0) else "circle",
            "is_true_model": int(_num(r.get("is_true_model")) or 0),
            "is_cafs_selected": int(_num(r.get("is_cafs_selected")) or 0),
            "is_min_kldiv": int(_num(r.get("is_min_kldiv")) or 0),
        })
    return rows


PLOT_COLUMNS = ("rep", "candidate", "x", "y", "passed_marker", "is_true_model", "is_cafs_selected", "is_min_kldiv")


def plot_rows_to_csv(rows: Sequence[dict]) -> str:
    return _rows_to_csv(rows, PLOT_COLUMNS)
