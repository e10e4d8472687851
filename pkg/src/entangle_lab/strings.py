"""Breakable-string models: mechanism-level samplers and exact analytic tables.

A string of unit-normalized length connects Alice's and Bob's sides.  Pulling
it from both ends breaks it at a uniformly random point; pulling from one end
only collects the whole string.  Length measurements compare the collected
fragment against half the string; color measurements read the string's
per-trial color.  The variants differ in what the observables are and in how
many strings there are:

* ``V1`` - white string; A/B measure length, A'/B' measure color.
* ``V1_PRE_BROKEN`` - same, but the string is already cut at a uniform point
  before the measurements, so every correlation is merely discovered.
* ``V2`` - the color is a fresh Bernoulli draw each trial (white with
  probability p_w), shared by both observers.
* ``V3`` - A/B measure the length-color parity: "long-white" and
  "short-black" count as +, the other two combinations as -.
* ``V4`` - two independent strings; each observer privately selects string 1
  with probability p_1 and applies the V3 measurements to the selection.

Every trial consumes a fixed number of uniform draws in a fixed order, so the
scalar sampler, the vectorized estimator and the trial replay iterator are
exactly interchangeable.  Analytic tables are computed by exact enumeration
of the same mechanism over ``fractions.Fraction`` arithmetic; they share no
code path with the samplers beyond the outcome rule itself.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Real
from typing import Callable, Iterator, Sequence

import numpy as np

from .probability import ExperimentTable, JointDistribution
from .rng import DOMAIN_STRING_TRIALS, TRIAL_BLOCK, block_uniforms, iter_block_slices


class Variant(str, Enum):
    V1 = "v1"
    V1_PRE_BROKEN = "v1pre"
    V2 = "v2"
    V3 = "v3"
    V4 = "v4"


#: Variants whose A/B measurements record the length-color parity.
_PARITY_VARIANTS = frozenset({Variant.V3, Variant.V4})

_SINGLE_WHITE = frozenset({Variant.V1, Variant.V1_PRE_BROKEN})


def draws_per_trial(variant: Variant) -> int:
    """Uniform draws consumed by one trial: fixed per variant, setting-independent."""
    return 5 if variant is Variant.V4 else 2


@dataclass(frozen=True)
class StringModelConfig:
    """Variant selector plus parameters.

    ``p_w`` is the white-color probability (black is implied); ``p_1`` the
    string-1 selection probability, used by V4 only.  ``length_l`` is carried
    for trace readability; all probabilities depend only on the half-length
    threshold, so it cancels everywhere.
    """

    variant: Variant
    p_w: Real | None = None
    p_1: Real | None = None
    length_l: float = 1.0

    def __post_init__(self):
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        p_w = self.p_w
        if variant in _SINGLE_WHITE:
            if p_w is None:
                p_w = 1.0
            elif p_w != 1:
                raise ValueError(f"{variant.value} uses a white string: p_w must be 1, got {p_w!r}")
        elif p_w is None:
            p_w = 0.5
        p_1 = 0.5 if self.p_1 is None else self.p_1
        for name, value in (("p_w", p_w), ("p_1", p_1)):
            if not isinstance(value, Real) or isinstance(value, bool):
                raise TypeError(f"{name} must be a real number, got {value!r}")
            if value < 0 or value > 1:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        if not self.length_l > 0:
            raise ValueError(f"length_l must be positive, got {self.length_l!r}")
        object.__setattr__(self, "p_w", p_w)
        object.__setattr__(self, "p_1", p_1)


@dataclass(frozen=True)
class Setting:
    """One of the four joint measurement choices."""

    alice: str  # "A" | "A'"
    bob: str  # "B" | "B'"

    def __post_init__(self):
        if self.alice not in ("A", "A'") or self.bob not in ("B", "B'"):
            raise ValueError(f"invalid setting ({self.alice!r}, {self.bob!r})")

    @property
    def label(self) -> str:
        return self.alice + self.bob

    @property
    def alice_pulls(self) -> bool:
        return self.alice == "A"

    @property
    def bob_pulls(self) -> bool:
        return self.bob == "B"


SETTINGS = (Setting("A", "B"), Setting("A", "B'"), Setting("A'", "B"), Setting("A'", "B'"))

_SETTING_INDEX = {s.label: i for i, s in enumerate(SETTINGS)}


def setting_index(setting: Setting) -> int:
    return _SETTING_INDEX[setting.label]


@dataclass(frozen=True)
class OutcomePair:
    """The +/-1 outcomes of one joint trial."""

    alice: int
    bob: int

    def __post_init__(self):
        if self.alice not in (1, -1) or self.bob not in (1, -1):
            raise ValueError(f"outcomes must be +1 or -1, got ({self.alice!r}, {self.bob!r})")

    @property
    def index(self) -> int:
        """0, 1, 2, 3 for ++, +-, -+, --."""
        return (0 if self.alice > 0 else 2) + (0 if self.bob > 0 else 1)

    @property
    def label(self) -> str:
        return ("+" if self.alice > 0 else "-") + ("+" if self.bob > 0 else "-")


@dataclass(frozen=True)
class MicroTrace:
    """What physically happened inside one trial.

    ``break_fraction`` is the Alice-side fraction of the jointly held string
    and is present iff such a string existed and at least one observer pulled
    it: a two-sided pull records the break point, a one-sided pull records
    1.0 (Alice collected everything) or 0.0 (Bob did).  In V4, trials where
    the observers hold different strings record no break.  ``colors`` has one
    entry per string; ``selections`` is V4-only.  Fragment lengths satisfy
    length_alice + length_bob = L whenever the break is defined.
    """

    break_fraction: float | None
    colors: tuple[str, ...]
    selections: tuple[str, str] | None
    length_alice: float | None
    length_bob: float | None

    def to_json_dict(self) -> dict:
        return {
            "break_fraction": self.break_fraction,
            "colors": list(self.colors),
            "selections": list(self.selections) if self.selections is not None else None,
            "length_alice": self.length_alice,
            "length_bob": self.length_bob,
        }


def _plus_outcome(parity: bool, pulls: bool, long_fragment: bool | None, white: bool) -> bool:
    """The outcome rule shared by samplers and enumeration.

    A color measurement is + iff white.  A pull measurement is + iff the
    fragment is long (plain variants) or iff long-white / short-black
    (parity variants).
    """
    if not pulls:
        return white
    if parity:
        return long_fragment == white
    return long_fragment


def _color_name(white: bool) -> str:
    return "white" if white else "black"


def trial_from_draws(config: StringModelConfig, setting: Setting, draws: Sequence[float]):
    """Resolve one trial from its uniform draws; the scalar reference mechanism.

    ``draws`` layout: single-string variants use (color, break); V4 uses
    (color string 1, color string 2, Alice selection, Bob selection, break).
    Unused draws are consumed but ignored, keeping the layout
    setting-independent.  Returns ``(OutcomePair, MicroTrace)``.
    """
    variant = config.variant
    k = draws_per_trial(variant)
    if len(draws) != k:
        raise ValueError(f"{variant.value} trial needs {k} draws, got {len(draws)}")
    parity = variant in _PARITY_VARIANTS
    alice_pulls = setting.alice_pulls
    bob_pulls = setting.bob_pulls
    length = config.length_l

    if variant is Variant.V4:
        u_c1, u_c2, u_sa, u_sb, u_break = (float(u) for u in draws)
        white = (u_c1 < config.p_w, u_c2 < config.p_w)
        sel_a = 0 if u_sa < config.p_1 else 1
        sel_b = 0 if u_sb < config.p_1 else 1
        same = sel_a == sel_b
        break_fraction = None
        if same and (alice_pulls or bob_pulls):
            if alice_pulls and bob_pulls:
                break_fraction = u_break
            else:
                break_fraction = 1.0 if alice_pulls else 0.0
        # A puller whose string nobody else pulls collects all of it.
        alice_long = (break_fraction >= 0.5) if (same and alice_pulls and bob_pulls) else True
        bob_long = (break_fraction < 0.5) if (same and alice_pulls and bob_pulls) else True
        a_plus = _plus_outcome(parity, alice_pulls, alice_long, white[sel_a])
        b_plus = _plus_outcome(parity, bob_pulls, bob_long, white[sel_b])
        colors = (_color_name(white[0]), _color_name(white[1]))
        selections = (f"string{sel_a + 1}", f"string{sel_b + 1}")
    else:
        u_color, u_break = (float(u) for u in draws)
        white = u_color < config.p_w
        pre_broken = variant is Variant.V1_PRE_BROKEN
        break_fraction = None
        if alice_pulls or bob_pulls:
            if (alice_pulls and bob_pulls) or pre_broken:
                break_fraction = u_break
            else:
                break_fraction = 1.0 if alice_pulls else 0.0
        alice_long = None if break_fraction is None else break_fraction >= 0.5
        bob_long = None if break_fraction is None else break_fraction < 0.5
        a_plus = _plus_outcome(parity, alice_pulls, alice_long, white)
        b_plus = _plus_outcome(parity, bob_pulls, bob_long, white)
        colors = (_color_name(white),)
        selections = None

    if break_fraction is None:
        length_alice = length_bob = None
    else:
        length_alice = break_fraction * length
        length_bob = length - length_alice
    pair = OutcomePair(alice=1 if a_plus else -1, bob=1 if b_plus else -1)
    trace = MicroTrace(
        break_fraction=break_fraction,
        colors=colors,
        selections=selections,
        length_alice=length_alice,
        length_bob=length_bob,
    )
    return pair, trace


def sample_trial(config: StringModelConfig, setting: Setting, rng: np.random.Generator):
    """Simulate one trial of the physical mechanism with a caller-owned stream."""
    return trial_from_draws(config, setting, rng.random(draws_per_trial(config.variant)))


def _outcome_indices(config: StringModelConfig, setting: Setting, u: np.ndarray) -> np.ndarray:
    """Vectorized twin of :func:`trial_from_draws`: outcome indices for draw rows."""
    variant = config.variant
    parity = variant in _PARITY_VARIANTS
    alice_pulls = setting.alice_pulls
    bob_pulls = setting.bob_pulls
    n = u.shape[0]
    true = np.ones(n, dtype=bool)

    if variant is Variant.V4:
        p_w = float(config.p_w)
        p_1 = float(config.p_1)
        white1 = u[:, 0] < p_w
        white2 = u[:, 1] < p_w
        sel_a1 = u[:, 2] < p_1
        sel_b1 = u[:, 3] < p_1
        alice_white = np.where(sel_a1, white1, white2)
        bob_white = np.where(sel_b1, white1, white2)
        if alice_pulls and bob_pulls:
            same = sel_a1 == sel_b1
            alice_long = np.where(same, u[:, 4] >= 0.5, True)
            bob_long = np.where(same, u[:, 4] < 0.5, True)
        else:
            alice_long = bob_long = true
    else:
        white = u[:, 0] < float(config.p_w)
        alice_white = bob_white = white
        pre_broken = variant is Variant.V1_PRE_BROKEN
        if alice_pulls and bob_pulls:
            alice_long = u[:, 1] >= 0.5
            bob_long = ~alice_long
        elif pre_broken:
            alice_long = u[:, 1] >= 0.5
            bob_long = ~alice_long
        else:
            alice_long = bob_long = true

    if alice_pulls:
        a_plus = (alice_long == alice_white) if parity else alice_long
    else:
        a_plus = alice_white
    if bob_pulls:
        b_plus = (bob_long == bob_white) if parity else bob_long
    else:
        b_plus = bob_white
    return (~a_plus) * 2 + (~b_plus)


def estimate_table(
    config: StringModelConfig,
    trials_per_setting: int,
    master_seed: int,
    *,
    workers: int = 1,
):
    """Monte Carlo table from ``trials_per_setting`` mechanism trials per setting.

    Deterministic given ``master_seed``: trials are partitioned into fixed
    blocks whose substreams depend only on (seed, setting, block), so the
    counts are bit-identical for any ``workers`` value.  Returns the
    relative-frequency :class:`ExperimentTable` and the raw counts as
    ``{row label: (n_pp, n_pm, n_mp, n_mm)}``.
    """
    if trials_per_setting < 1:
        raise ValueError(f"trials_per_setting must be >= 1, got {trials_per_setting}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    k = draws_per_trial(config.variant)

    tasks = [
        (si, block, rows)
        for si in range(len(SETTINGS))
        for block, _start, rows in iter_block_slices(trials_per_setting)
    ]

    def run(task):
        si, block, rows = task
        u = block_uniforms(master_seed, DOMAIN_STRING_TRIALS, si, block, rows, k)
        return si, np.bincount(_outcome_indices(config, SETTINGS[si], u), minlength=4)

    counts = np.zeros((len(SETTINGS), 4), dtype=np.int64)
    if workers == 1:
        results = map(run, tasks)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, tasks))
    for si, block_counts in results:
        counts[si] += block_counts

    n = trials_per_setting
    dists = [JointDistribution(*(int(c) / n for c in counts[si])) for si in range(len(SETTINGS))]
    table = ExperimentTable(*dists)
    raw = {SETTINGS[si].label: tuple(int(c) for c in counts[si]) for si in range(len(SETTINGS))}
    return table, raw


def iter_trials(
    config: StringModelConfig,
    setting: Setting,
    master_seed: int,
    n_trials: int,
    start: int = 0,
) -> Iterator[tuple[OutcomePair, MicroTrace]]:
    """Replay trials [start, start + n_trials) of a setting, one by one.

    Reads the same substreams as :func:`estimate_table`, so trial ``t`` here
    is exactly trial ``t`` of the vectorized estimate.
    """
    k = draws_per_trial(config.variant)
    si = setting_index(setting)
    t = start
    end = start + n_trials
    while t < end:
        block = t // TRIAL_BLOCK
        row0 = t % TRIAL_BLOCK
        row_end = min(TRIAL_BLOCK, row0 + (end - t))
        u = block_uniforms(master_seed, DOMAIN_STRING_TRIALS, si, block, row_end, k)
        for row in range(row0, row_end):
            yield trial_from_draws(config, setting, u[row])
        t += row_end - row0


def _exact(value: Real) -> Fraction:
    """The exact rational value of a parameter (floats via their binary value)."""
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


def _enumerate_worlds(config: StringModelConfig, setting: Setting):
    """Exact sample-space enumeration: yields (Fraction weight, outcome index)."""
    variant = config.variant
    parity = variant in _PARITY_VARIANTS
    alice_pulls = setting.alice_pulls
    bob_pulls = setting.bob_pulls
    p_w = _exact(config.p_w)
    p_b = 1 - p_w
    half = Fraction(1, 2)

    def emit(weight, a_long, b_long, a_white, b_white):
        a_plus = _plus_outcome(parity, alice_pulls, a_long, a_white)
        b_plus = _plus_outcome(parity, bob_pulls, b_long, b_white)
        return weight, (0 if a_plus else 2) + (0 if b_plus else 1)

    if variant is Variant.V4:
        p_1 = _exact(config.p_1)
        p_2 = 1 - p_1
        for sel_a, w_a in ((0, p_1), (1, p_2)):
            for sel_b, w_b in ((0, p_1), (1, p_2)):
                for white1, w_1 in ((True, p_w), (False, p_b)):
                    for white2, w_2 in ((True, p_w), (False, p_b)):
                        base = w_a * w_b * w_1 * w_2
                        if base == 0:
                            continue
                        a_white = white1 if sel_a == 0 else white2
                        b_white = white1 if sel_b == 0 else white2
                        if alice_pulls and bob_pulls and sel_a == sel_b:
                            yield emit(base * half, True, False, a_white, b_white)
                            yield emit(base * half, False, True, a_white, b_white)
                        else:
                            yield emit(base, True, True, a_white, b_white)
        return

    pre_broken = variant is Variant.V1_PRE_BROKEN
    for white, w_c in ((True, p_w), (False, p_b)):
        if w_c == 0:
            continue
        if (alice_pulls and bob_pulls) or (pre_broken and (alice_pulls or bob_pulls)):
            yield emit(w_c * half, True, False, white, white)
            yield emit(w_c * half, False, True, white, white)
        else:
            # A lone puller takes the whole string; color-only trials need no break.
            yield emit(w_c, True, True, white, white)


def analytic_table(config: StringModelConfig) -> ExperimentTable:
    """Closed-form experiment table of a variant, computed in exact rationals."""
    dists = []
    for setting in SETTINGS:
        probs = [Fraction(0)] * 4
        for weight, index in _enumerate_worlds(config, setting):
            probs[index] += weight
        dists.append(JointDistribution(*probs))
    return ExperimentTable(*dists)


OutcomeFn = Callable[[object, str], int]


def lhv_table(
    alice: OutcomeFn,
    bob: OutcomeFn,
    lam_values: Sequence,
    weights: Sequence[Real] | None = None,
    *,
    trials: int | None = None,
    rng: np.random.Generator | None = None,
) -> ExperimentTable:
    """Table of a deterministic local-hidden-variable strategy.

    ``alice(lam, "A"|"A'")`` and ``bob(lam, "B"|"B'")`` fix every outcome from
    the shared variable alone, so all correlations pre-exist the joint
    measurement.  With ``trials=None`` the finite lambda space is enumerated
    exactly (Fraction weights stay exact); otherwise ``trials`` trials per
    setting are sampled from the lambda distribution using ``rng``.
    """
    n_lam = len(lam_values)
    if n_lam == 0:
        raise ValueError("lambda space must be non-empty")
    if weights is None:
        weights = [Fraction(1, n_lam)] * n_lam
    if len(weights) != n_lam:
        raise ValueError("weights and lam_values must have equal length")
    total = sum(weights)
    if any(w < 0 for w in weights) or abs(total - 1) > 1e-12:
        raise ValueError("weights must be non-negative and sum to 1")

    def outcome_index(lam, setting: Setting) -> int:
        a = alice(lam, setting.alice)
        b = bob(lam, setting.bob)
        if a not in (1, -1) or b not in (1, -1):
            raise ValueError(f"strategy outcomes must be +1 or -1, got ({a!r}, {b!r})")
        return (0 if a > 0 else 2) + (0 if b > 0 else 1)

    dists = []
    if trials is None:
        for setting in SETTINGS:
            probs = [0 * total] * 4  # zero of the weights' numeric type
            for lam, w in zip(lam_values, weights):
                probs[outcome_index(lam, setting)] += w
            dists.append(JointDistribution(*probs))
    else:
        if trials < 1:
            raise ValueError(f"trials must be >= 1, got {trials}")
        if rng is None:
            raise ValueError("sampled enumeration needs an rng")
        p = np.asarray([float(w) for w in weights])
        p = p / p.sum()
        for setting in SETTINGS:
            picks = rng.choice(n_lam, size=trials, p=p)
            counts = [0, 0, 0, 0]
            for pick in picks:
                counts[outcome_index(lam_values[int(pick)], setting)] += 1
            dists.append(JointDistribution(*(c / trials for c in counts)))
    return ExperimentTable(*dists)


def pre_broken_lhv_strategy():
    """The pre-broken string expressed as an LHV strategy.

    Lambda is which side of the cut is long; length measurements discover it,
    color measurements always see white.  Exact enumeration reproduces the
    pre-broken analytic table.
    """
    lam_values = ("alice_long", "bob_long")
    weights = (Fraction(1, 2), Fraction(1, 2))

    def alice(lam, setting: str) -> int:
        if setting == "A":
            return 1 if lam == "alice_long" else -1
        return 1

    def bob(lam, setting: str) -> int:
        if setting == "B":
            return 1 if lam == "bob_long" else -1
        return 1

    return alice, bob, lam_values, weights


def random_lhv_strategy(n_lambda: int, rng: np.random.Generator):
    """A random deterministic strategy over ``n_lambda`` equally-typed points.

    Outcome tables are independent fair +/-1 draws per (lambda, setting);
    lambda weights are random positive integers normalized exactly.
    """
    if n_lambda < 1:
        raise ValueError(f"n_lambda must be >= 1, got {n_lambda}")
    a_table = rng.integers(0, 2, size=(n_lambda, 2)) * 2 - 1
    b_table = rng.integers(0, 2, size=(n_lambda, 2)) * 2 - 1
    raw = rng.integers(1, 1000, size=n_lambda)
    total = int(raw.sum())
    weights = tuple(Fraction(int(w), total) for w in raw)

    def alice(lam, setting: str) -> int:
        return int(a_table[lam, 0 if setting == "A" else 1])

    def bob(lam, setting: str) -> int:
        return int(b_table[lam, 0 if setting == "B" else 1])

    return alice, bob, tuple(range(n_lambda)), weights
