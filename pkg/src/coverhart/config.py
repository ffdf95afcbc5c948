"""Experiment configs: schema, parsing, and the runners behind the CLI.

A config is one JSON object. Its structure is checked against
:data:`SCHEMAS` (unknown fields are errors), then every embedded kernel,
distribution or task is built through its module's own validation before
any computation starts.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from .distributions import distribution_from_dict, random_distribution
from .exceptions import ConfigError, CoverHartError
from .kernels import kernel_from_dict
from .membership import (
    check_metric,
    check_negdef,
    lattice_points,
    sample_points,
)
from .nn import run_nn_experiment, task_from_dict
from .risk import RATIO_GUARD, OptimizerConfig, cover_hart_report
from .scoring import ScoringRule, check_propriety, chp_report, kernel_score
from .spaces import RealVector

SCHEMA_VERSION = 1
KINDS = ("cover_hart", "membership", "scoring", "propriety", "nn")

_COMMON = {
    "schema_version": {"const": SCHEMA_VERSION},
    "id": {"type": "string", "minLength": 1},
    "experiment": {"enum": list(KINDS)},
    "description": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "output": {"type": "string"},
}
_OBJECT = {"type": "object"}
_COUNT = {"type": "integer", "minimum": 1}
_METHOD = {"enum": ["auto", "monte_carlo"]}

SCHEMAS: dict[str, dict] = {
    "cover_hart": {
        "required": ["experiment", "kernel", "distribution", "seed"],
        "properties": {
            "kernel": _OBJECT,
            "distribution": _OBJECT,
            "n_samples": _COUNT,
            "optimizer": _OBJECT,
            "alpha_method": _METHOD,
            "beta_method": _METHOD,
            "ratio_guard": {"type": "number", "exclusiveMinimum": 0},
            "expect": {"enum": ["satisfied", "violated"]},
        },
    },
    "membership": {
        "required": ["experiment", "kernel", "check", "points"],
        "properties": {
            "kernel": _OBJECT,
            "check": {"enum": ["negdef", "metric"]},
            "points": {
                "oneOf": [
                    {"type": "array", "minItems": 1},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["random"],
                        "properties": {"random": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["n_points", "n_sets"],
                            "properties": {"n_points": _COUNT, "n_sets": _COUNT},
                        }},
                    },
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["lattice"],
                        "properties": {"lattice": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["side"],
                            "properties": {"side": {"type": "integer", "minimum": 2}},
                        }},
                    },
                ]
            },
            "tolerance": {"type": ["number", "null"], "minimum": 0},
            "expect": {"enum": ["pass", "fail"]},
        },
    },
    "scoring": {
        "required": ["experiment", "kernel", "distribution", "seed"],
        "properties": {
            "kernel": _OBJECT,
            "distribution": _OBJECT,
            "n_samples": _COUNT,
            "observation": {},
            "allow_uncertified": {"type": "boolean"},
            "ratio_guard": {"type": "number", "exclusiveMinimum": 0},
            "expect": {"enum": ["holds", "violated"]},
        },
    },
    "propriety": {
        "required": ["experiment", "kernel", "distribution", "challengers", "seed"],
        "properties": {
            "kernel": _OBJECT,
            "distribution": _OBJECT,
            "challengers": {
                "oneOf": [
                    {"type": "array", "minItems": 1, "items": _OBJECT},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["random"],
                        "properties": {"random": _COUNT},
                    },
                ]
            },
            "n_samples": _COUNT,
            "allow_uncertified": {"type": "boolean"},
            "expect": {"enum": ["pass", "fail"]},
        },
    },
    "nn": {
        "required": ["experiment", "task", "loss", "n_train", "n_test", "seed"],
        "properties": {
            "task": _OBJECT,
            "loss": _OBJECT,
            "n_train": _COUNT,
            "n_test": _COUNT,
            "allowance": {"type": "number", "minimum": 0},
            "expect": {"enum": ["satisfied", "violated"]},
        },
    },
}

DEFAULT_EXPECT = {
    "cover_hart": "satisfied",
    "membership": "pass",
    "scoring": "holds",
    "propriety": "pass",
    "nn": "satisfied",
}
DEFAULT_N = 100_000


def _full_schema(kind: str) -> dict:
    s = SCHEMAS[kind]
    return {
        "type": "object",
        "additionalProperties": False,
        "required": s["required"],
        "properties": {**_COMMON, **s["properties"]},
    }


def _path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        parts += extra[:1]
    if err.validator == "required":
        parts.append(err.message.split("'")[1])
    return ".".join(parts) or "<root>"


def validate(raw: Any) -> dict:
    """Structural validation; raises :class:`ConfigError` naming the field."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>: config must be a JSON object")
    kind = raw.get("experiment")
    if kind not in KINDS:
        raise ConfigError(f"experiment: expected one of {list(KINDS)}, got {kind!r}")
    validator = jsonschema.Draft202012Validator(_full_schema(kind))
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"{_path(err)}: {err.message}")
    return raw


def load(path) -> dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: cannot read config ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    raw = validate(raw)
    raw.setdefault("id", path.stem)
    return raw


def _build(field: str, fn, *args):
    """Run a module constructor, prefixing its message with the config field."""
    try:
        return fn(*args)
    except ConfigError:
        raise
    except CoverHartError as exc:
        raise ConfigError(f"{field}.{exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{field}: {exc}") from exc


@dataclass
class Outcome:
    """Result of one experiment: report body, verdict and the CSV numbers."""

    result: dict
    verdict: str
    expected: str
    row: dict

    @property
    def exit_code(self) -> int:
        return 0 if self.verdict == self.expected else 1


def resolve(raw: dict, seed_override: Optional[int] = None) -> dict:
    """Fill defaults and normalize nested specs; ``output`` is dropped.

    The resolved form is a fixed point: resolving it again changes nothing,
    which is what lets a report's embedded config replay it exactly.
    """
    cfg = copy.deepcopy(raw)
    cfg.pop("output", None)
    cfg["schema_version"] = SCHEMA_VERSION
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    kind = cfg["experiment"]
    cfg.setdefault("seed", 0)
    cfg.setdefault("expect", DEFAULT_EXPECT[kind])
    if "kernel" in cfg:
        cfg["kernel"] = _build("kernel", kernel_from_dict, cfg["kernel"]).spec.to_dict()
    if kind == "cover_hart":
        k = _build("kernel", kernel_from_dict, cfg["kernel"])
        cfg["distribution"] = _build("distribution", distribution_from_dict, cfg["distribution"], k.space).to_dict()
        cfg.setdefault("n_samples", DEFAULT_N)
        cfg["optimizer"] = _build("optimizer", OptimizerConfig.from_dict, cfg.get("optimizer", {})).to_dict()
        cfg.setdefault("alpha_method", "auto")
        cfg.setdefault("beta_method", "auto")
        cfg.setdefault("ratio_guard", RATIO_GUARD)
    elif kind == "membership":
        cfg.setdefault("tolerance", None)
    elif kind in ("scoring", "propriety"):
        k = _build("kernel", kernel_from_dict, cfg["kernel"])
        cfg["distribution"] = _build("distribution", distribution_from_dict, cfg["distribution"], k.space).to_dict()
        cfg.setdefault("n_samples", DEFAULT_N)
        cfg.setdefault("allow_uncertified", False)
        _build("kernel", ScoringRule, k, cfg["allow_uncertified"])
        if kind == "scoring":
            cfg.setdefault("ratio_guard", RATIO_GUARD)
        elif isinstance(cfg["challengers"], list):
            cfg["challengers"] = [
                _build(f"challengers[{i}]", distribution_from_dict, c, k.space).to_dict()
                for i, c in enumerate(cfg["challengers"])
            ]
    elif kind == "nn":
        cfg["task"] = _build("task", task_from_dict, cfg["task"]).to_dict()
        cfg["loss"] = _build("loss", kernel_from_dict, cfg["loss"]).spec.to_dict()
        cfg.setdefault("allowance", 0.0)
    return cfg


def _num(x):
    return None if x is None else float(x)


def _row(alpha=None, alpha_se=None, beta=None, beta_se=None, ratio=None, extremal=None) -> dict:
    return {
        "alpha": _num(alpha),
        "alpha_se": _num(alpha_se),
        "beta": _num(beta),
        "beta_se": _num(beta_se),
        "ratio": _num(ratio),
        "extremal": _num(extremal),
    }


def _run_cover_hart(cfg):
    k = kernel_from_dict(cfg["kernel"])
    dist = distribution_from_dict(cfg["distribution"], k.space)
    rep = cover_hart_report(
        k, dist, cfg["n_samples"], cfg["seed"], OptimizerConfig.from_dict(cfg["optimizer"]),
        ratio_guard=cfg["ratio_guard"], alpha_method=cfg["alpha_method"], beta_method=cfg["beta_method"],
    )
    result = rep.to_dict()
    result["kernel"] = k.name
    row = _row(rep.alpha.value, rep.alpha.std_error, rep.beta.value, rep.beta.std_error, rep.ratio)
    return result, rep.bound_status, row


def _membership_sets(cfg, k):
    pts = cfg["points"]
    if isinstance(pts, list):
        return [np.asarray(pts)]
    if "lattice" in pts:
        if not isinstance(k.space, RealVector):
            raise ConfigError("points.lattice: lattice probes need a real_vector space")
        return [lattice_points(k.space.d, pts["lattice"]["side"])]
    spec = pts["random"]
    return [sample_points(k.space, spec["n_points"], cfg["seed"], stream=(s,)) for s in range(spec["n_sets"])]


def _run_membership(cfg):
    k = kernel_from_dict(cfg["kernel"])
    sets = _build("points", _membership_sets, cfg, k)
    check = check_negdef if cfg["check"] == "negdef" else check_metric
    certs = [_build("points", check, k, s, cfg["tolerance"]) for s in sets]
    failed = [c for c in certs if not c.passed]
    verdict = "fail" if failed else "pass"
    if cfg["check"] == "negdef":
        extremal = max(c.max_centered_eigenvalue for c in certs)
    else:
        extremal = min(c.worst_triangle_slack for c in certs)
    if failed:
        shown = failed[0]
    elif cfg["check"] == "negdef":
        shown = max(certs, key=lambda c: c.max_centered_eigenvalue)
    else:
        shown = min(certs, key=lambda c: c.worst_triangle_slack)
    result = {
        "kernel": k.name,
        "certified_negdef": k.certified_negdef,
        "certified_metric": k.certified_metric,
        "check": cfg["check"],
        "n_sets": len(certs),
        "n_failed": len(failed),
        "verdict": verdict,
        "extremal": extremal,
        "certificate": shown.to_dict(),
    }
    if failed and cfg["check"] == "negdef":
        result["witness_quadratic_form"] = failed[0].quadratic_form(k)
    return result, verdict, _row(extremal=extremal)


def _run_scoring(cfg):
    k = kernel_from_dict(cfg["kernel"])
    rule = ScoringRule(k, cfg["allow_uncertified"])
    dist = distribution_from_dict(cfg["distribution"], k.space)
    rep = chp_report(rule, dist, cfg["n_samples"], cfg["seed"], ratio_guard=cfg["ratio_guard"])
    result = rep.to_dict()
    result["kernel"] = k.name
    if "observation" in cfg:
        obs = _build("observation", k.space.check_point, cfg["observation"])
        result["score_at_observation"] = kernel_score(rule, dist, obs, cfg["n_samples"], cfg["seed"]).to_dict()
    row = _row(rep.alpha.value, rep.alpha.std_error, rep.beta.value, rep.beta.std_error, rep.ratio)
    return result, rep.equality_status, row


def _run_propriety(cfg):
    k = kernel_from_dict(cfg["kernel"])
    rule = ScoringRule(k, cfg["allow_uncertified"])
    p = distribution_from_dict(cfg["distribution"], k.space)
    ch = cfg["challengers"]
    if isinstance(ch, list):
        challengers = [distribution_from_dict(c, k.space) for c in ch]
    else:
        challengers = [random_distribution(k.space, cfg["seed"], stream=(7, j)) for j in range(ch["random"])]
    entries = check_propriety(rule, p, challengers, cfg["n_samples"], cfg["seed"])
    verdict = "pass" if all(e.passed for e in entries) else "fail"
    worst = min(e.divergence.value for e in entries)
    result = {
        "kernel": k.name,
        "guaranteed": rule.guaranteed,
        "verdict": verdict,
        "min_divergence": worst,
        "entries": [e.to_dict() for e in entries],
    }
    return result, verdict, _row(extremal=worst)


def _run_nn(cfg):
    task = task_from_dict(cfg["task"])
    loss = kernel_from_dict(cfg["loss"])
    rep = _build(
        "loss", lambda: run_nn_experiment(
            task, loss, cfg["n_train"], cfg["n_test"], cfg["seed"], allowance=cfg["allowance"]
        )
    )
    b, nn = rep.bayes_risk_hat, rep.nn_risk_hat
    return rep.to_dict(), rep.bound_status, _row(b.value, b.std_error, nn.value, nn.std_error, rep.ratio)


_RUNNERS = {
    "cover_hart": _run_cover_hart,
    "membership": _run_membership,
    "scoring": _run_scoring,
    "propriety": _run_propriety,
    "nn": _run_nn,
}


def execute(cfg: dict) -> Outcome:
    """Run a resolved config."""
    try:
        result, verdict, row = _RUNNERS[cfg["experiment"]](cfg)
    except ConfigError:
        raise
    except CoverHartError as exc:
        raise ConfigError(f"{cfg['experiment']}: {exc}") from exc
    return Outcome(result, verdict, cfg["expect"], row)


def report_document(cfg: dict, outcome: Outcome) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": cfg["id"],
        "experiment": cfg["experiment"],
        "config": cfg,
        "result": outcome.result,
        "verdict": outcome.verdict,
        "expected": outcome.expected,
        "exit_code": outcome.exit_code,
    }


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"
