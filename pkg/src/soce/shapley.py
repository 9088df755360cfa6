"""Exact Shapley attribution of souping candidates.

Players are groups of one to three model ids; a coalition's value is the
macro score of the uniform soup over the union of its members' models.
Two independent computations are provided — the literal permutation
average and the subset-weighted closed form — and cross-checked in tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .errors import EvaluatorError, ValidationError
from .weightgrid import Recipe
from .evaluator import macro_average


class CooperativeGame:
    """Player list plus a memoized characteristic function over bitmasks."""

    def __init__(self, players: Sequence[str], value_fn: Callable[[tuple[str, ...]], float],
                 empty_value: float = 0.0):
        self.players = tuple(players)
        if len(set(self.players)) != len(self.players):
            raise ValidationError("duplicate player id")
        if not self.players:
            raise ValidationError("game needs at least one player")
        self._value_fn = value_fn
        self._memo: dict[int, float] = {0: float(empty_value)}

    @property
    def n(self) -> int:
        return len(self.players)

    def value(self, mask: int) -> float:
        if mask not in self._memo:
            members = tuple(p for i, p in enumerate(self.players) if mask >> i & 1)
            v = float(self._value_fn(members))
            if not math.isfinite(v):
                raise ValidationError(f"non-finite coalition value for {members}")
            self._memo[mask] = v
        return self._memo[mask]

    @property
    def evaluations(self) -> int:
        return len(self._memo)

    def coalition_values(self) -> dict[str, float]:
        """Evaluated coalitions keyed by sorted member ids (empty key for v(empty))."""
        out = {}
        for mask, v in sorted(self._memo.items()):
            members = sorted(p for i, p in enumerate(self.players) if mask >> i & 1)
            out["|".join(members)] = v
        return out


@dataclass(frozen=True)
class ShapleyReport:
    players: tuple[str, ...]
    per_player: dict[str, float]
    grand_value: float
    empty_value: float
    method: str
    coalition_values: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        total = sum(self.per_player.values())
        if abs(total - (self.grand_value - self.empty_value)) > 1e-9 * max(
            1.0, abs(self.grand_value)
        ):
            raise ValidationError(
                f"efficiency violated: sum {total} vs v(A)-v(empty) "
                f"{self.grand_value - self.empty_value}"
            )

    def to_report(self) -> dict:
        return {
            "players": list(self.players),
            "values": dict(self.per_player),
            "grand_value": self.grand_value,
            "coalition_values": dict(self.coalition_values),
            "method": self.method,
        }


def shapley_permutation(game: CooperativeGame) -> ShapleyReport:
    """Average marginal contribution over all n! join orders."""
    n = game.n
    if n > 12:
        raise ValidationError(f"permutation method limited to 12 players, got {n}")
    sums = [0.0] * n
    for perm in itertools.permutations(range(n)):
        mask = 0
        for i in perm:
            before = game.value(mask)
            mask |= 1 << i
            sums[i] += game.value(mask) - before
    fact = math.factorial(n)
    phi = {game.players[i]: sums[i] / fact for i in range(n)}
    return ShapleyReport(
        game.players, phi, game.value((1 << n) - 1), game.value(0),
        "permutation", game.coalition_values(),
    )


def shapley_subset(game: CooperativeGame) -> ShapleyReport:
    """Closed-form sum over coalitions with exact rational coefficients."""
    n = game.n
    if n > 20:
        raise ValidationError(f"subset method limited to 20 players, got {n}")
    fact_n = math.factorial(n)
    coeff = [Fraction(math.factorial(s) * math.factorial(n - s - 1), fact_n) for s in range(n)]
    phi = {}
    for i in range(n):
        bit = 1 << i
        others = [j for j in range(n) if j != i]
        total = 0.0
        for r in range(n):
            for combo in itertools.combinations(others, r):
                mask = 0
                for j in combo:
                    mask |= 1 << j
                total += float(coeff[r]) * (game.value(mask | bit) - game.value(mask))
        phi[game.players[i]] = total
    return ShapleyReport(
        game.players, phi, game.value((1 << n) - 1), game.value(0),
        "subset", game.coalition_values(),
    )


def souping_game(
    players: Sequence[Sequence[str]],
    evaluator,
    objective: Callable[[dict], float] = macro_average,
) -> CooperativeGame:
    """Cooperative game whose coalition value is the uniform-soup macro score.

    Each player is a group of 1-3 model ids; groups must not share models,
    or marginal contributions would be ill-defined.
    """
    groups = [tuple(g) for g in players]
    for g in groups:
        if not 1 <= len(g) <= 3:
            raise ValidationError(f"player group {g} must hold 1 to 3 models")
    flat = [m for g in groups for m in g]
    if len(set(flat)) != len(flat):
        raise ValidationError("model appears in more than one player group")
    ids = ["+".join(g) for g in groups]
    by_id = dict(zip(ids, groups))

    def value_fn(members: tuple[str, ...]) -> float:
        models = [m for pid in members for m in by_id[pid]]
        recipe = Recipe.uniform(models)
        try:
            scores = evaluator.evaluate(recipe)
        except EvaluatorError:
            raise
        except Exception as exc:
            raise EvaluatorError(f"evaluator failed on coalition {members}: {exc}",
                                 recipe=recipe) from exc
        return objective(scores)

    return CooperativeGame(ids, value_fn, empty_value=0.0)
