"""Recipe and checkpoint evaluation.

Three evaluation routes share one interface (recipe in, per-category
scores out, results cached under the canonical recipe key):

* a synthetic Gaussian-bump landscape where every score is analytic, for
  desk-scale verification of the whole pipeline;
* a subprocess bridge that hands a materialized soup checkpoint to an
  external scoring command;
* direct subprocess scoring of an existing checkpoint file.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .checkpoint import TensorMap, load_checkpoint, save_checkpoint
from .errors import EvaluatorError, ValidationError
from .souping import soup_recipe
from .weightgrid import Recipe, macro_objective as macro_average

__all__ = [
    "CategoryScores",
    "SyntheticLandscape",
    "evaluate_synthetic",
    "SyntheticRecipeEvaluator",
    "SubprocessRecipeEvaluator",
    "evaluate_subprocess",
    "macro_average",
]

CategoryScores = dict[str, float]


@dataclass(frozen=True)
class SyntheticLandscape:
    """Isotropic Gaussian bumps in parameter space, one per category.

    score_c(theta) = scale * exp(-||theta - mu_c||^2 / (2 sigma_c^2)),
    so a parameter vector at a category's target scores exactly `scale`
    there and decays smoothly elsewhere.
    """

    dimension: int
    categories: tuple[tuple[str, np.ndarray, float], ...]  # (id, target, width)
    scale: float = 100.0

    def __post_init__(self):
        cats = []
        seen = set()
        for cid, mu, sigma in self.categories:
            mu = np.asarray(mu, dtype=np.float64)
            if cid in seen:
                raise ValidationError(f"duplicate category id {cid!r}")
            seen.add(cid)
            if mu.shape != (self.dimension,):
                raise ValidationError(
                    f"target for {cid!r} has length {mu.size}, expected {self.dimension}"
                )
            if not sigma > 0:
                raise ValidationError(f"width for {cid!r} must be positive")
            cats.append((cid, mu, float(sigma)))
        object.__setattr__(self, "categories", tuple(cats))

    @property
    def category_ids(self) -> tuple[str, ...]:
        return tuple(cid for cid, _, _ in self.categories)

    @classmethod
    def from_json(cls, obj: dict) -> "SyntheticLandscape":
        try:
            return cls(
                dimension=int(obj["dimension"]),
                categories=tuple(
                    (c["id"], np.asarray(c["target"], dtype=np.float64), float(c["width"]))
                    for c in obj["categories"]
                ),
                scale=float(obj.get("scale", 100.0)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed synthetic landscape config: {exc}") from None


def evaluate_synthetic(land: SyntheticLandscape, theta) -> CategoryScores:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (land.dimension,):
        raise ValidationError(
            f"parameter vector has length {theta.size}, expected {land.dimension}"
        )
    return {
        cid: land.scale * math.exp(-float(np.dot(theta - mu, theta - mu)) / (2.0 * sigma**2))
        for cid, mu, sigma in land.categories
    }


class _CachingRecipeEvaluator:
    """Shared cache keyed on the canonical (order-independent) recipe key."""

    def __init__(self):
        self._cache: dict = {}
        self._lock = threading.Lock()
        self.evaluation_count = 0
        self.cache_hits = 0

    def evaluate(self, recipe: Recipe) -> CategoryScores:
        key = recipe.canonical_key()
        with self._lock:
            if key in self._cache:
                self.cache_hits += 1
                return dict(self._cache[key])
            scores = self._evaluate(recipe)
            for cid, v in scores.items():
                if not math.isfinite(v):
                    raise EvaluatorError(f"non-finite score for category {cid!r}", recipe=recipe)
            self.evaluation_count += 1
            self._cache[key] = dict(scores)
            return dict(scores)

    def _evaluate(self, recipe: Recipe) -> CategoryScores:
        raise NotImplementedError


class SyntheticRecipeEvaluator(_CachingRecipeEvaluator):
    """Souping in the synthetic landscape is a weighted sum of parameter vectors."""

    def __init__(self, landscape: SyntheticLandscape, model_params: Mapping[str, Sequence[float]]):
        super().__init__()
        self.landscape = landscape
        self.model_params = {
            mid: np.asarray(theta, dtype=np.float64) for mid, theta in model_params.items()
        }
        for mid, theta in self.model_params.items():
            if theta.shape != (landscape.dimension,):
                raise ValidationError(f"model {mid!r} parameter vector has wrong length")

    @property
    def categories(self) -> tuple[str, ...]:
        return self.landscape.category_ids

    def _evaluate(self, recipe: Recipe) -> CategoryScores:
        theta = np.zeros(self.landscape.dimension)
        for mid, w in recipe.entries:
            if mid not in self.model_params:
                raise EvaluatorError(f"unresolvable model id {mid!r}", recipe=recipe)
            theta += float(w) * self.model_params[mid]
        return evaluate_synthetic(self.landscape, theta)

    @classmethod
    def from_config(cls, obj: dict) -> "SyntheticRecipeEvaluator":
        land = SyntheticLandscape.from_json(obj)
        try:
            params = obj["models"]
        except KeyError:
            raise ValidationError('synthetic config missing "models"') from None
        return cls(land, params)


def evaluate_subprocess(command, checkpoint_path, categories: Sequence[str]) -> CategoryScores:
    """Run an external scorer and parse its one-object JSON protocol.

    Contract: `<command> --checkpoint <path> --categories <comma-list>`
    prints exactly one JSON object {"scores": {...}} on stdout and exits 0.
    """
    categories = list(categories)
    if not categories:
        raise ValidationError("at least one category required")
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    argv += ["--checkpoint", str(checkpoint_path), "--categories", ",".join(categories)]
    proc = subprocess.run(argv, capture_output=True, text=True)
    if proc.returncode != 0:
        raise EvaluatorError(
            f"evaluator command exited with status {proc.returncode}",
            stderr=proc.stderr,
        )
    try:
        obj = json.loads(proc.stdout)
    except json.JSONDecodeError as exc:
        raise EvaluatorError(f"malformed evaluator JSON: {exc}", stderr=proc.stderr) from None
    if not isinstance(obj, dict) or not isinstance(obj.get("scores"), dict):
        raise EvaluatorError('evaluator output must be {"scores": {...}}', stderr=proc.stderr)
    raw = obj["scores"]
    scores: CategoryScores = {}
    for cid in categories:
        if cid not in raw:
            raise EvaluatorError(f"missing category {cid}", stderr=proc.stderr)
        v = float(raw[cid])
        if not math.isfinite(v):
            raise EvaluatorError(f"non-finite score for category {cid}", stderr=proc.stderr)
        scores[cid] = v
    return scores


class SubprocessRecipeEvaluator(_CachingRecipeEvaluator):
    """Materializes each recipe's soup to disk and scores it externally."""

    def __init__(self, command, checkpoints: Mapping[str, object], categories: Sequence[str], workdir=None):
        super().__init__()
        self.command = command
        self.categories = tuple(categories)
        self._paths = dict(checkpoints)
        self._loaded: dict[str, TensorMap] = {}
        self.workdir = Path(workdir) if workdir else None

    def _checkpoint(self, model_id: str) -> TensorMap:
        if model_id not in self._loaded:
            source = self._paths.get(model_id)
            if source is None:
                raise EvaluatorError(f"unresolvable model id {model_id!r}")
            self._loaded[model_id] = (
                source if isinstance(source, TensorMap) else load_checkpoint(source)
            )
        return self._loaded[model_id]

    def _evaluate(self, recipe: Recipe) -> CategoryScores:
        souped = soup_recipe(recipe, {m: self._checkpoint(m) for m in recipe.model_ids})
        with tempfile.TemporaryDirectory(dir=self.workdir) as tmp:
            path = Path(tmp) / "soup.safetensors"
            save_checkpoint(souped, path)
            return evaluate_subprocess(self.command, path, self.categories)
