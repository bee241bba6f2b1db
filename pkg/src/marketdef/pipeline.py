"""Batch runs: configuration, the three pipelines and deterministic output.

A run reads one JSON config, computes an :class:`AnalysisReport` and writes
its files into the output directory all-or-nothing: everything is staged
in a sibling temporary directory and moved into place only after every
file has been produced.

Report JSON uses sorted keys and Python's shortest round-trip float
formatting, so the same config, inputs and seed give byte-identical files.
Paths in the echoed config are absolute; the output directory and worker
count are not echoed because they do not affect results.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from marketdef import __version__, cla, concentration, demand
from marketdef.clustering import (
    candidate_k,
    gap_statistic,
    hclust_complete,
    kmeans_restarts,
)
from marketdef.dataset import (
    FeatureSpec,
    collapse_columns,
    constant_columns,
    drop_columns,
    format_number,
    load_csv,
    pca2,
    standardize,
)
from marketdef.rng import RngSeed
from marketdef.errors import ConfigError, DegenerateColumnError, DomainError, OutputError
from marketdef.svg import render_svg

log = logging.getLogger(__name__)

PIPELINES = ("cluster", "cla", "screen")
REFERENCE_ALIASES = {"uniform": "uniform_box", "pca": "pca_box",
                     "uniform_box": "uniform_box", "pca_box": "pca_box"}
# stream index of the final fit, clear of the gap statistic's 0..B
FINAL_STREAM = 1 << 30
_NOT_ECHOED = {"out", "workers", "config_dir"}


@dataclass
class RunConfig:
    pipeline: str = "cluster"
    input: str | None = None
    id_column: str = "product_id"
    features: list = field(default_factory=list)
    groups: dict | None = None
    k: int | None = None
    k_max: int = 20
    restarts: int = 100
    gap_restarts: int = 10
    B: int = 30
    seed: int = 0
    reference: str = "uniform_box"
    gap_rule: str = "first_se_max"
    elbow_threshold: float = 0.2
    seeding: str = "kmeanspp"
    anchor: str | None = None
    max_candidates: int = 3
    max_iter: int = 100
    emit_svg: bool = False
    drop_constant: bool = False
    # cla
    y: float = 0.05
    economics: dict | None = None
    scenario: dict | None = None
    actual_loss: list = field(default_factory=list)
    # screen
    shares: str | None = None
    merging: list = field(default_factory=list)
    # not echoed
    out: str = "marketdef-out"
    workers: int | None = None
    config_dir: str = "."

    @classmethod
    def from_dict(cls, d: dict, config_dir=".") -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        cfg = cls(**{k: v for k, v in d.items() if k != "config_dir"})
        cfg.config_dir = str(config_dir)
        return cfg.validated()

    def resolve(self, p: str | None) -> str | None:
        if p is None:
            return None
        path = Path(p)
        if not path.is_absolute():
            path = Path(self.config_dir) / path
        return str(path.resolve())

    def validated(self) -> "RunConfig":
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"unknown pipeline {self.pipeline!r}")
        if self.reference not in REFERENCE_ALIASES:
            raise ConfigError(f"unknown reference {self.reference!r}")
        self.reference = REFERENCE_ALIASES[self.reference]
        for name in ("k_max", "restarts", "gap_restarts", "B", "max_candidates", "max_iter"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.B < 2:
            raise ConfigError("B must be at least 2")
        if self.k is not None and (not isinstance(self.k, int) or self.k < 1):
            raise ConfigError("k must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return self

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        for k in _NOT_ECHOED:
            d.pop(k)
        d["input"] = self.resolve(self.input)
        d["shares"] = self.resolve(self.shares)
        return d


@dataclass
class AnalysisReport:
    config: dict
    results: dict
    provenance: dict
    warnings: list = field(default_factory=list)
    files: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {"config": self.config, "provenance": self.provenance,
               "results": self.results, "warnings": self.warnings}
        return json.dumps(_plain(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _plain(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return 0.0 if v == 0 else v  # no negative zero in reports
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _provenance(cfg: RunConfig, inputs: list[str]) -> dict:
    return {
        "input_digests": {p: "sha256:" + _digest(p) for p in inputs},
        "seed": cfg.seed,
        "tool": "marketdef",
        "tool_version": __version__,
    }


# ---------------------------------------------------------------- cluster


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def run_cluster_pipeline(cfg: RunConfig) -> AnalysisReport:
    """Two-step clustering: dendrogram candidates, elbow and gap, final k-means."""
    if not cfg.input:
        raise ConfigError("cluster pipeline needs an 'input' CSV")
    if not cfg.features:
        raise ConfigError("cluster pipeline needs a 'features' list")
    path = cfg.resolve(cfg.input)
    if not Path(path).exists():
        raise ConfigError(f"input file not found: {path}")
    specs = [FeatureSpec.from_dict(f) for f in cfg.features]
    raw = load_csv(path, specs, cfg.id_column)
    if cfg.groups:
        raw = collapse_columns(raw, cfg.groups)
    warnings, dropped = [], []
    const = constant_columns(raw)
    if const:
        if not cfg.drop_constant:
            raise DegenerateColumnError(const[0], f"column {const[0]!r} is constant; "
                                                  "rerun with --drop-constant to drop it")
        dropped = const
        raw = drop_columns(raw, const)
        for c in const:
            msg = f"dropped constant column {c!r}"
            log.warning(msg)
            warnings.append(msg)
    m = standardize(raw)
    n = m.n

    anchor = m.index_of(cfg.anchor) if cfg.anchor is not None else None
    tree = hclust_complete(m)
    cands = candidate_k(tree, cfg.max_candidates)

    k_max = min(cfg.k_max, n - 1)
    if k_max != cfg.k_max:
        warnings.append(f"k_max lowered from {cfg.k_max} to {k_max} (n = {n})")
    ksel = gap_statistic(m, k_max, B=cfg.B, restarts=cfg.gap_restarts, rng=cfg.seed,
                         reference=cfg.reference, seeding=cfg.seeding,
                         elbow_threshold=cfg.elbow_threshold, rule=cfg.gap_rule,
                         workers=cfg.workers)
    if cfg.k is not None:
        k, source = cfg.k, "user"
    else:
        k, source = ksel.selected_k_gap, "gap"
    if k > n:
        raise DomainError(f"k = {k} exceeds the number of products ({n})")
    final = kmeans_restarts(m, k, cfg.restarts, _final_seed(cfg.seed), anchor=anchor,
                            seeding=cfg.seeding, max_iter=cfg.max_iter, workers=cfg.workers)

    results = {
        "standardization": {
            "dropped_columns": dropped,
            "features": [s.to_dict() for s in m.specs],
            "n": n,
        },
        "dendrogram": {
            "candidate_k": cands,
            "merges": tree.linkage_matrix().tolist(),
        },
        "k_selection": ksel.to_dict(),
        "final": {
            "anchor": cfg.anchor,
            "assignment": final.to_dict(),
            "k_source": source,
            "product_ids": list(m.product_ids),
        },
    }
    files = {
        "labels.csv": _csv_text(["product_id", "cluster"],
                                [[pid, int(lab)] for pid, lab in zip(m.product_ids, final.labels)]),
        "kselect.csv": _csv_text(
            ["k", "wk", "log_wk", "e_log_wk", "gap", "se"],
            [[k_, *(format_number(v) for v in row)] for k_, *row in zip(
                ksel.k_range, ksel.wk, ksel.log_wk, ksel.e_log_wk, ksel.gap, ksel.se)]),
    }
    if m.d >= 2 and n >= 3:
        proj = pca2(m)
        results["pca"] = {
            "components": proj.components.tolist(),
            "scores": proj.scores.tolist(),
            "variance_explained": list(proj.variance_explained),
        }
        if cfg.emit_svg:
            files["clusters.svg"] = render_svg(proj.scores, final.labels, proj.variance_explained,
                                               title=f"Market division, k = {k}", ids=m.product_ids)
    elif cfg.emit_svg:
        warnings.append("cluster plot needs at least 2 features and 3 products; no SVG written")
    return AnalysisReport(cfg.echo(), results, _provenance(cfg, [path]), warnings, files)


def _final_seed(seed: int) -> RngSeed:
    return RngSeed(seed, (FINAL_STREAM,))


# ---------------------------------------------------------------- cla


def _economics(cfg: RunConfig) -> tuple[cla.FirmEconomics, dict]:
    e = cfg.economics
    if not e:
        raise ConfigError("cla pipeline needs an 'economics' block")
    try:
        p0 = float(e["p0"])
        if "firms" in e:
            firms = e["firms"]
            how = e.get("avc_aggregation", "weighted")
            if how == "simple":
                avc = cla.hm_avc_simple([f["avc0"] for f in firms])
            elif how == "weighted":
                avc = cla.hm_avc_weighted([(f["avc0"], f["q0"]) for f in firms])
            else:
                raise ConfigError(f"unknown avc_aggregation {how!r}")
            q0 = float(e.get("q0", sum(float(f["q0"]) for f in firms)))
            info = {"avc_aggregation": how, "hm_avc0": avc}
        else:
            avc, q0, info = float(e["avc0"]), float(e["q0"]), {}
    except KeyError as exc:
        raise ConfigError(f"economics block is missing {exc.args[0]!r}") from None
    return cla.FirmEconomics(p0, avc, q0, float(e.get("fixed_cost", 0.0))), info


def _demand_quantities(req: dict, y: float, cfg: RunConfig, warnings: list):
    """Quantities of the raised and recapturing products before/after the SSNIP."""
    coefs = req["coefficients"]
    models = demand.load_coefficients(cfg.resolve(coefs)) if isinstance(coefs, str) else \
        {name: demand.model_from_dict(spec) for name, spec in coefs.items()}
    model = models[req.get("model", next(iter(models)))]
    if not isinstance(model, demand.LinearDemandFit):
        raise ConfigError("demand_eq17 from coefficients needs a linear or loglinear model")
    p0 = np.asarray(req["prices"], dtype=float)
    a, b = int(req.get("raised", 0)), int(req.get("recapturing", 1))
    p1 = p0.copy()
    p1[a] *= 1 + y
    shifters = req.get("shifters")
    q0, q1 = model.predict(p0, shifters), model.predict(p1, shifters)
    if "price_range" in req:
        lo, hi = (np.asarray(v, dtype=float) for v in req["price_range"])
        if np.any(p1 < lo) or np.any(p1 > hi) or np.any(p0 < lo) or np.any(p0 > hi):
            warnings.append("demand evaluated outside the fitted price range")
    return float(q0[a]), float(q1[a]), float(q0[b]), float(q1[b])


def _actual_loss(req: dict, econ: cla.FirmEconomics, y: float, cfg: RunConfig, warnings: list):
    """Return (method, actual loss in percent, detail dict)."""
    method = req.get("method")
    if method not in cla.METHODS:
        raise ConfigError(f"unknown actual-loss method {method!r}")
    if "actual_loss_pct" in req:
        return method, float(req["actual_loss_pct"]), {"supplied": True}
    try:
        if method == cla.DEMAND_EQ17:
            if "coefficients" in req:
                qa0, qa1, qb0, qb1 = _demand_quantities(req, y, cfg, warnings)
            else:
                qa0, qa1, qb0, qb1 = (float(req[k]) for k in ("dA_p0", "dA_p1", "dB_p0", "dB_p1"))
            units = cla.actual_loss_demand(qa0, qa1, qb0, qb1)
            return method, cla.loss_pct(units, econ.q0), {"units": units, "quantities": [qa0, qa1, qb0, qb1]}
        if method == cla.ELASTICITY_EQ23:
            units = cla.actual_loss_elasticities(y, req["e_aa"], req["q_a"], req["e_ba"], req["q_b"])
            return method, cla.loss_pct(units, econ.q0), {"units": units}
        if method == cla.ADR_EQ26:
            frac = cla.actual_loss_adr(y, req.get("m", econ.margin), req["d"])
            return method, 100.0 * frac, {"fraction": frac}
        frac = cla.actual_loss_obrien(y, req.get("cm", econ.margin), req["e_aa"])
        return method, 100.0 * frac, {"fraction": frac}
    except KeyError as exc:
        raise ConfigError(f"{method} request is missing {exc.args[0]!r}") from None


def run_cla(cfg: RunConfig) -> AnalysisReport:
    """Critical loss vs. each requested actual-loss variant."""
    econ, info = _economics(cfg)
    sc = cfg.scenario or {}
    scenario = cla.SsnipScenario(sc.get("variant", "all_products"), float(sc.get("y", cfg.y)),
                                 tuple(sc.get("product_indices", ())))
    y = scenario.y
    cm = econ.margin
    cl_pct = cla.critical_loss(y, cm)
    warnings: list = []
    verdicts = []
    for req in cfg.actual_loss:
        method, al_pct, detail = _actual_loss(req, econ, y, cfg, warnings)
        v = cla.ssnip_verdict(cl_pct, al_pct, method, scenario)
        d = v.to_dict()
        d["detail"] = detail
        verdicts.append(d)
        if v.discouraged:
            warnings.append(f"{method}: {v.caveat}")
    results = {
        "contribution_margin": cm,
        "critical_loss_pct": cl_pct,
        "economics": {**dataclasses.asdict(econ), **info},
        "scenario": scenario.to_dict(),
        "verdicts": verdicts,
    }
    inputs = [cfg.resolve(r["coefficients"]) for r in cfg.actual_loss
              if isinstance(r.get("coefficients"), str)]
    return AnalysisReport(cfg.echo(), results, _provenance(cfg, inputs), warnings)


# ---------------------------------------------------------------- screen


def run_screen(cfg: RunConfig) -> AnalysisReport:
    if not cfg.shares:
        raise ConfigError("screen pipeline needs a 'shares' CSV")
    if not cfg.merging:
        raise ConfigError("screen pipeline needs a 'merging' list")
    path = cfg.resolve(cfg.shares)
    if not Path(path).exists():
        raise ConfigError(f"shares file not found: {path}")
    shares = concentration.load_shares_csv(path)
    rep = concentration.screen(shares, cfg.merging)
    warnings = ["shares renormalized to sum to 100"] if rep.renormalized else []
    results = {"screening": rep.to_dict(), "shares": shares.as_dict()}
    return AnalysisReport(cfg.echo(), results, _provenance(cfg, [path]), warnings)


RUNNERS = {"cluster": run_cluster_pipeline, "cla": run_cla, "screen": run_screen}


def run(cfg: RunConfig) -> AnalysisReport:
    return RUNNERS[cfg.pipeline](cfg)


def write_run(report: AnalysisReport, out_dir) -> Path:
    """Write report.json and companion files, all-or-nothing.

    An existing output directory is replaced only if it holds a previous
    ``report.json`` (or is empty); anything else is refused.
    """
    out = Path(out_dir).resolve()
    if out.exists():
        if not out.is_dir() or (any(out.iterdir()) and not (out / "report.json").exists()):
            raise OutputError(f"{out} exists and is not a previous run directory")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    except OSError as exc:
        raise OutputError(f"cannot create output under {out.parent}: {exc}") from exc
    try:
        (stage / "report.json").write_text(report.to_json(), encoding="utf-8")
        for name, text in report.files.items():
            (stage / name).write_text(text, encoding="utf-8")
        if out.exists():
            shutil.rmtree(out)
        os.replace(stage, out)
    except OSError as exc:
        shutil.rmtree(stage, ignore_errors=True)
        raise OutputError(f"cannot write run directory {out}: {exc}") from exc
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    return out
