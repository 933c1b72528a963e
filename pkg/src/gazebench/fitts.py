"""ISO 9241 style pointing trials, a synthetic operator, and Fitts analytics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .cursor import Target, TargetLayout, nearest_target
from .errors import InvalidInput, UndefinedStatistic

HMDS_WIDTHS_PX = (70, 80, 90)
HMDS_DISTANCES_PX = (200, 220, 240)
TRANSPORT_WIDTHS_CM = (1.9, 1.7, 1.5, 1.3, 1.1, 0.9)
TRANSPORT_DISTANCES_CM = (5.0, 8.0)
MODALITIES = ("nonadaptive", "adaptive", "joystick", "mmhe")


def index_of_difficulty(distance, width) -> float:
    """Shannon index of difficulty, log2(D/W + 1), in bits."""
    if not (distance > 0 and width > 0):
        raise InvalidInput(f"distance and width must be positive, got D={distance}, W={width}")
    return math.log2(distance / width + 1.0)


def throughput(id_bits: float, mt_s: float) -> float:
    """Bits per second for one index of difficulty and movement time in seconds."""
    if not mt_s > 0:
        raise InvalidInput(f"movement time must be positive, got {mt_s}")
    return id_bits / mt_s


@dataclass(frozen=True)
class TrialSpec:
    width_px: float
    distance_px: float
    rep: int = 0
    modality: str = "nonadaptive"
    angle_deg: float = 0.0

    def __post_init__(self):
        if not (self.width_px > 0 and self.distance_px > 0):
            raise InvalidInput("trial width and distance must be positive")
        if self.modality not in MODALITIES:
            raise InvalidInput(f"unknown modality {self.modality!r}")

    @property
    def id_bits(self) -> float:
        return index_of_difficulty(self.distance_px, self.width_px)


def generate_trial_sequence(seed: int = 0, widths=HMDS_WIDTHS_PX, distances=HMDS_DISTANCES_PX,
                            repetitions: int = 2, modality: str = "nonadaptive") -> list[TrialSpec]:
    """Every (W, D) pair ``repetitions`` times in a seeded random order.

    Each trial also gets a uniformly random target direction.
    """
    rng = np.random.default_rng(seed)
    combos = [(w, d, r) for r in range(repetitions) for w in widths for d in distances]
    order = rng.permutation(len(combos))
    angles = rng.uniform(0.0, 360.0, size=len(combos))
    return [
        TrialSpec(combos[i][0], combos[i][1], combos[i][2], modality, float(a))
        for i, a in zip(order, angles)
    ]


def transport_trial_set(px_per_cm: float, seed: int = 0, repetitions: int = 2,
                        modality: str = "nonadaptive") -> list[TrialSpec]:
    """The tablet-study geometry (widths 1.9-0.9 cm, distances 5 and 8 cm) in pixels."""
    if not px_per_cm > 0:
        raise InvalidInput("px_per_cm must be positive")
    return generate_trial_sequence(
        seed,
        tuple(w * px_per_cm for w in TRANSPORT_WIDTHS_CM),
        tuple(d * px_per_cm for d in TRANSPORT_DISTANCES_CM),
        repetitions,
        modality,
    )


@dataclass
class OperatorModel:
    """Synthetic participant following MT = a + b*ID + noise.

    The cursor travels a minimum-jerk path for ``b*ID`` ms and then rests on
    the target for ``a`` ms plus Gaussian noise before clicking.  Gaussian
    jitter of ``jitter_px`` is added orthogonally to the task axis.  The click
    lands around the target centre with a spread of ``click_spread * W``.
    """

    a_ms: float = 400.0
    b_ms_per_bit: float = 900.0
    sigma_ms: float = 120.0
    jitter_px: float = 6.0
    click_spread: float = 0.2
    sample_hz: float = 100.0
    center_px: tuple = (400.0, 300.0)

    def __post_init__(self):
        if self.b_ms_per_bit <= 0 or self.a_ms < 0 or self.sigma_ms < 0 or self.jitter_px < 0:
            raise InvalidInput("operator constants out of range")
        if not self.sample_hz > 0:
            raise InvalidInput("sample_hz must be positive")


@dataclass
class TrialResult:
    spec: TrialSpec
    movement_time_ms: float
    error: bool
    t_ms: np.ndarray
    xy: np.ndarray
    source_px: tuple
    target_px: tuple
    arrival_ms: float
    click_px: tuple

    @property
    def id_bits(self) -> float:
        return self.spec.id_bits


def minimum_jerk(tau):
    tau = np.clip(tau, 0.0, 1.0)
    return tau ** 3 * (10.0 - 15.0 * tau + 6.0 * tau ** 2)


def target_position(center, trial: TrialSpec) -> tuple:
    a = math.radians(trial.angle_deg)
    # Screen y grows downward, so a positive angle points up the screen.
    return (center[0] + trial.distance_px * math.cos(a), center[1] - trial.distance_px * math.sin(a))


def synthesize_trace(operator: OperatorModel, trial: TrialSpec, seed: int = 0) -> TrialResult:
    rng = np.random.default_rng(seed)
    move_ms = operator.b_ms_per_bit * trial.id_bits
    dwell_ms = max(0.0, operator.a_ms + (rng.normal(0.0, operator.sigma_ms) if operator.sigma_ms else 0.0))
    mt = move_ms + dwell_ms
    dt = 1000.0 / operator.sample_hz
    t = np.arange(0.0, mt, dt)
    if t[-1] < mt:
        t = np.append(t, mt)
    src = np.asarray(operator.center_px, dtype=float)
    dst = np.asarray(target_position(operator.center_px, trial))
    unit = (dst - src) / np.linalg.norm(dst - src)
    normal = np.array([-unit[1], unit[0]])
    xy = src + np.outer(minimum_jerk(t / move_ms), dst - src)
    if operator.jitter_px > 0:
        offsets = rng.normal(0.0, operator.jitter_px, size=len(t))
        offsets[0] = 0.0
        xy += np.outer(offsets, normal)
    click = dst + rng.normal(0.0, operator.click_spread * trial.width_px, size=2)
    error = bool(np.hypot(*(click - dst)) > trial.width_px / 2.0)
    return TrialResult(trial, float(mt), error, t, xy, tuple(src), tuple(dst), float(move_ms), tuple(click))


def iso_layout(result: TrialResult, ring_size: int = 8) -> TargetLayout:
    """Centre button (id 0) plus a ring of targets at distance D; the intended one has id 1."""
    trial = result.spec
    targets = [Target(0, tuple(result.source_px), trial.width_px)]
    for k in range(ring_size):
        spec_k = replace(trial, angle_deg=trial.angle_deg + 360.0 * k / ring_size)
        targets.append(Target(k + 1, target_position(result.source_px, spec_k), trial.width_px))
    return TargetLayout(targets)


def replay_adaptive(result: TrialResult, layout: TargetLayout | None = None,
                    snap_radius_px: float = math.inf, intended_id: int = 1) -> TrialResult:
    """Re-time a recorded trial as if nearest-target activation were on.

    Selection happens once the intended target becomes the activated one,
    after the same confirmation dwell the operator used in the recorded
    trial.  Without activation the recorded click time stands.
    """
    layout = layout or iso_layout(result)
    dwell = result.movement_time_ms - result.arrival_ms
    selected = result.movement_time_ms
    for t, p in zip(result.t_ms, result.xy):
        if nearest_target(p, layout, snap_radius_px) == intended_id:
            selected = min(selected, float(t) + dwell)
            break
    return replace(result, spec=replace(result.spec, modality="adaptive"),
                   movement_time_ms=selected, error=False)


def pearson_r(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise InvalidInput("pearson_r needs two equal-length sequences of at least 2 values")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedStatistic("zero variance")
    return max(-1.0, min(1.0, float(dx @ dy) / math.sqrt(sxx * syy)))


def fit_line(xs, ys) -> tuple[float, float]:
    """Least-squares slope and intercept of ys on xs."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise UndefinedStatistic("all x values identical")
    slope = float(dx @ (y - y.mean())) / sxx
    return slope, float(y.mean() - slope * x.mean())


@dataclass
class PairedTTest:
    t: float
    df: int
    cohens_d: float
    p_value: float


def paired_t_test(a, b) -> PairedTTest:
    """Paired t-test on ``a - b`` with Cohen's d from the sample SD of differences."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if d.ndim != 1 or len(d) < 2:
        raise InvalidInput("paired_t_test needs equal-length samples of at least 2")
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise UndefinedStatistic("differences have zero spread")
    n = len(d)
    mean = float(d.mean())
    t = mean / (sd / math.sqrt(n))
    return PairedTTest(t, n - 1, mean / sd, float(2.0 * stats.t.sf(abs(t), n - 1)))


@dataclass
class IdRow:
    id_bits: float
    n: int
    mean_mt_ms: float
    throughput_bps: float
    error_rate: float


@dataclass
class SessionSummary:
    rows: list = field(default_factory=list)
    slope_ms_per_bit: float = 0.0
    intercept_ms: float = 0.0
    pearson_r: float = 0.0

    @property
    def mean_mt_ms(self) -> float:
        total = sum(r.mean_mt_ms * r.n for r in self.rows)
        return total / sum(r.n for r in self.rows)


def summarize_session(results) -> SessionSummary:
    """Per-ID means, throughput, MT-vs-ID line and Pearson r over the ID means."""
    groups: dict[float, list] = {}
    for res in results:
        groups.setdefault(round(res.id_bits, 9), []).append(res)
    if len(groups) < 2:
        raise UndefinedStatistic("need at least two distinct indices of difficulty")
    rows = []
    for key in sorted(groups):
        grp = groups[key]
        id_bits = grp[0].id_bits
        mt = math.fsum(r.movement_time_ms for r in grp) / len(grp)
        rows.append(IdRow(id_bits, len(grp), mt, throughput(id_bits, mt / 1000.0),
                          sum(r.error for r in grp) / len(grp)))
    ids = [r.id_bits for r in rows]
    mts = [r.mean_mt_ms for r in rows]
    slope, intercept = fit_line(ids, mts)
    return SessionSummary(rows, slope, intercept, pearson_r(ids, mts))


def simulate_session(operator: OperatorModel, seed: int = 0, repetitions: int = 2,
                     widths=HMDS_WIDTHS_PX, distances=HMDS_DISTANCES_PX,
                     adaptive: bool = True) -> list[TrialResult]:
    """Synthesize one session; with ``adaptive`` each trace is also replayed adaptively.

    Non-adaptive results come first, followed by their adaptive replays in
    the same order.
    """
    trials = generate_trial_sequence(seed, widths, distances, repetitions)
    seeds = np.random.default_rng([seed, 1]).integers(0, 2**63 - 1, size=len(trials))
    base = [synthesize_trace(operator, tr, int(s)) for tr, s in zip(trials, seeds)]
    if not adaptive:
        return base
    return base + [replay_adaptive(r) for r in base]
