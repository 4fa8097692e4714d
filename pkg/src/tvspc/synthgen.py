"""Synthetic multi-day telemetry with ground-truth fault injection.

The generator reproduces the one premise the monitoring method rests
on: per-slice means move smoothly over the day (diurnal profiles) while
the cross-variable correlation structure stays roughly constant.  Each
variable follows

    x_ij(k) = mu_j(k) * (1 + jitter_j * c_i) + noise_j * z_ij(k)

where c_i is a per-day amplitude draw shared by all variables (think
"sunnier day"), and z is unit-variance latent noise mixed through a
coupling matrix so variables correlate like a real plant's channels.
Everything is deterministic given the scenario seed; each day uses an
independent seed stream derived from (seed, day_index).

Faults are injected in units of the generated data's own per-slice NOC
std, so test sensitivity is independent of variable scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .ingest import DayGrid, TrainingTensor

FAULT_KINDS = ("spike", "drift", "stuck")


@dataclass(frozen=True, slots=True)
class VariableSpec:
    """Diurnal profile and noise model of one channel.

    The mean curve is base + span * sin(pi * (k/K + phase))^2, a smooth
    bell peaking mid-day (negative span gives a mid-day dip); ``jitter``
    scales the day-to-day amplitude factor and ``noise`` the latent
    noise in raw units.
    """

    name: str
    base: float
    span: float
    phase: float
    jitter: float
    noise: float

    def __post_init__(self) -> None:
        if self.noise < 0:
            raise ValueError("noise std must be non-negative")
        if self.jitter < 0:
            raise ValueError("jitter fraction must be non-negative")


@dataclass(frozen=True, slots=True, eq=False)
class ScenarioSpec:
    """A full synthetic-plant description."""

    i_days: int
    variables: tuple[VariableSpec, ...]
    coupling: np.ndarray
    seed: int
    start_date: date = date(2021, 6, 1)

    def __post_init__(self) -> None:
        if self.i_days < 2:
            raise ValueError("scenario needs at least 2 days")
        j = len(self.variables)
        if j == 0:
            raise ValueError("scenario needs at least 1 variable")
        c = np.asarray(self.coupling, dtype=np.float64)
        if c.shape != (j, j) or not np.isfinite(c).all():
            raise ValueError("coupling must be a finite %dx%d matrix" % (j, j))
        object.__setattr__(self, "coupling", c)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)


@dataclass(frozen=True, slots=True)
class FaultSpec:
    """One injected fault: what, where, when, how hard.

    ``magnitude`` is in units of the faulted variable's NOC std at the
    window's first second.
    """

    kind: str
    variable: int
    start_k: int
    duration: int
    magnitude: float

    def __post_init__(self) -> None:
        if self.kind not in FAULT_KINDS:
            raise ValueError(
                "fault kind must be one of %s, got %r" % (FAULT_KINDS, self.kind)
            )
        if self.duration < 1:
            raise ValueError("fault duration must be at least 1 second")
        if self.start_k < 0:
            raise ValueError("fault start must be non-negative")
        if not math.isfinite(self.magnitude):
            raise ValueError("fault magnitude must be finite")


def mean_curves(spec: ScenarioSpec, k_slices: int) -> np.ndarray:
    """(K, J) array of the per-slice population means mu_j(k)."""
    u = np.arange(k_slices, dtype=np.float64) / k_slices
    out = np.empty((k_slices, spec.n_vars), dtype=np.float64)
    for j, var in enumerate(spec.variables):
        out[:, j] = var.base + var.span * np.sin(math.pi * (u + var.phase)) ** 2
    return out


def noc_std(spec: ScenarioSpec, k_slices: int) -> np.ndarray:
    """(K, J) array of the per-slice population NOC std.

    Combines the day-amplitude term jitter_j * mu_j(k) with the latent
    noise term noise_j * ||coupling row j||.
    """
    mu = mean_curves(spec, k_slices)
    row_norm = np.sqrt((spec.coupling**2).sum(axis=1))
    noise_sd = np.array([v.noise for v in spec.variables]) * row_norm
    jitter = np.array([v.jitter for v in spec.variables])
    return np.sqrt((jitter * mu) ** 2 + noise_sd**2)


def generate_day(spec: ScenarioSpec, k_slices: int, day_index: int) -> DayGrid:
    """Generate one complete synthetic day (gap-free grid).

    Day indices beyond ``spec.i_days`` are valid and draw fresh,
    independent days; use them for verification data.
    """
    rng = np.random.default_rng([spec.seed, day_index])
    c = rng.standard_normal()
    latent = rng.standard_normal((k_slices, spec.n_vars))
    z = latent @ spec.coupling.T
    mu = mean_curves(spec, k_slices)
    jitter = np.array([v.jitter for v in spec.variables])
    noise = np.array([v.noise for v in spec.variables])
    matrix = mu * (1.0 + jitter * c) + noise * z
    return DayGrid(
        day_id=spec.start_date + timedelta(days=day_index),
        matrix=np.ascontiguousarray(matrix),
        missing_mask=np.zeros(matrix.shape, dtype=bool),
    )


def generate_noc(spec: ScenarioSpec, k_slices: int) -> TrainingTensor:
    """Generate the scenario's I_days normal-operation days as a tensor."""
    grids = [generate_day(spec, k_slices, i) for i in range(spec.i_days)]
    x = np.ascontiguousarray(
        np.stack([g.matrix for g in grids], axis=0), dtype=np.float64
    )
    return TrainingTensor(
        x=x,
        day_ids=tuple(g.day_id for g in grids),
        variable_names=spec.variable_names,
    )


def inject_fault(day: DayGrid, fault: FaultSpec, noc_std_at_k) -> DayGrid:
    """Return a copy of ``day`` with the fault written into its window.

    ``noc_std_at_k`` is the faulted variable's per-slice NOC std (K
    values); the magnitude unit is its value at the window start.
    Spike: alternating +/- magnitude each second (a fluctuation, not an
    offset).  Drift: linear ramp from 0 at the first window second to
    the full magnitude at the last.  Stuck: every window second frozen
    at the window-start value.
    """
    k_slices = day.k_slices
    std = np.asarray(noc_std_at_k, dtype=np.float64)
    if std.shape != (k_slices,):
        raise ValueError(
            "noc_std_at_k must have one value per slice (%d), got shape %r"
            % (k_slices, std.shape)
        )
    if not 0 <= fault.variable < day.n_vars:
        raise ValueError("fault variable %d out of range" % fault.variable)
    start = fault.start_k
    stop = start + fault.duration
    if stop > k_slices:
        raise ValueError(
            "fault window [%d, %d) exceeds the day length %d"
            % (start, stop, k_slices)
        )
    matrix = day.matrix.copy()
    col = matrix[:, fault.variable]
    unit = fault.magnitude * std[start]
    if fault.kind == "spike":
        signs = np.where(np.arange(fault.duration) % 2 == 0, 1.0, -1.0)
        col[start:stop] += unit * signs
    elif fault.kind == "drift":
        denom = max(fault.duration - 1, 1)
        col[start:stop] += unit * (np.arange(fault.duration) / denom)
    else:  # stuck
        col[start:stop] = col[start]
    return DayGrid(
        day_id=day.day_id,
        matrix=matrix,
        missing_mask=day.missing_mask.copy(),
    )


# Default scenario: a seven-channel solar-plant analogue.  Channel 0 is
# the DC-side voltage; the coupling gives it a strong second latent
# factor so single-channel faults on it are visible in the retained
# component space (see the tests for the detection-rate gate).
_DEF_PROFILES = (
    # name, base, span, phase, jitter, noise
    ("dc_voltage", 58.0, 255.0, 0.0, 0.004, 6.0),
    ("dc_current", 0.4, 3.8, 0.0, 0.006, 0.32),
    ("ac_voltage", 228.0, 3.5, 0.02, 0.0015, 0.9),
    ("ac_current", 0.3, 2.8, 0.0, 0.006, 0.26),
    ("humidity", 86.0, -24.0, -0.04, 0.003, 2.0),
    ("temperature", 21.5, 9.5, -0.07, 0.004, 0.75),
    ("pea_voltage", 227.0, 4.0, 0.03, 0.0015, 1.1),
)
# Latent structure: one common "plant output" factor that channels
# 1..6 track tightly, one DC-side factor carried almost entirely by
# channel 0, plus small independent per-channel noise.  Rows are
# normalized so each z_j has unit variance.  The shape is deliberate:
# the two factors sit far above the noise floor and far apart from
# each other, so the minimum-explained-variance rank selection is
# stable and channel 0 keeps its own retained component, which is what
# makes single-channel faults on it visible in component space.
_DEF_FACTOR_COMMON = (0.10, 0.97, 0.97, 0.97, -0.97, 0.97, 0.97)
_DEF_FACTOR_DCSIDE = (0.975, -0.03, 0.03, -0.03, 0.03, -0.03, 0.03)
_DEF_IDIO = (0.20, 0.24, 0.24, 0.24, 0.24, 0.24, 0.24)


def _cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of a small SPD matrix."""
    n = a.shape[0]
    low = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1):
            acc = a[i, j]
            for t in range(j):
                acc -= low[i, t] * low[j, t]
            if i == j:
                if acc <= 0.0:
                    raise ValueError("matrix is not positive definite")
                low[i, j] = math.sqrt(acc)
            else:
                low[i, j] = acc / low[j, j]
    return low


def default_coupling() -> np.ndarray:
    """Coupling matrix of the default scenario (unit-variance rows)."""
    f1 = np.array(_DEF_FACTOR_COMMON)
    f2 = np.array(_DEF_FACTOR_DCSIDE)
    d = np.array(_DEF_IDIO)
    cov = np.outer(f1, f1) + np.outer(f2, f2) + np.diag(d**2)
    scale = np.sqrt(np.diag(cov))
    corr = cov / np.outer(scale, scale)
    return _cholesky_lower(corr)


def default_scenario(i_days: int = 14, seed: int = 20210601) -> ScenarioSpec:
    """The stock solar-plant analogue scenario."""
    return ScenarioSpec(
        i_days=i_days,
        variables=tuple(
            VariableSpec(name, base, span, phase, jitter, noise)
            for name, base, span, phase, jitter, noise in _DEF_PROFILES
        ),
        coupling=default_coupling(),
        seed=seed,
    )


def dump_scenario(spec: ScenarioSpec, k_slices: int) -> str:
    """Serialize a scenario (plus its day length) as INI text.

    Floats use shortest round-trip formatting, so dump -> load is
    exact.
    """
    lines = [
        "[scenario]",
        "days = %d" % spec.i_days,
        "seed = %d" % spec.seed,
        "start_date = %s" % spec.start_date.isoformat(),
        "slices_per_day = %d" % k_slices,
        "",
        "[coupling]",
    ]
    for i, row in enumerate(spec.coupling):
        lines.append("row%d = %s" % (i, " ".join(repr(float(v)) for v in row)))
    for var in spec.variables:
        lines.extend(
            [
                "",
                "[var.%s]" % var.name,
                "base = %s" % repr(var.base),
                "span = %s" % repr(var.span),
                "phase = %s" % repr(var.phase),
                "jitter = %s" % repr(var.jitter),
                "noise = %s" % repr(var.noise),
            ]
        )
    return "\n".join(lines) + "\n"


def load_scenario(text: str) -> tuple[ScenarioSpec, int]:
    """Parse INI scenario text; returns the spec and its day length."""
    import configparser

    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValueError("bad scenario file: %s" % exc) from None
    if "scenario" not in parser:
        raise ValueError("scenario file is missing the [scenario] section")
    try:
        main = parser["scenario"]
        i_days = main.getint("days")
        seed = main.getint("seed")
        if i_days is None or seed is None:
            raise ValueError("scenario file needs integer 'days' and 'seed'")
        start = date.fromisoformat(main.get("start_date", "2021-06-01"))
        k_slices = main.getint("slices_per_day", 86400)
        variables = []
        for section in parser.sections():
            if section.startswith("var."):
                sec = parser[section]
                base = sec.getfloat("base")
                span = sec.getfloat("span")
                if base is None or span is None:
                    raise ValueError("[%s] needs 'base' and 'span'" % section)
                variables.append(
                    VariableSpec(
                        name=section[4:],
                        base=base,
                        span=span,
                        phase=sec.getfloat("phase", 0.0),
                        jitter=sec.getfloat("jitter", 0.0),
                        noise=sec.getfloat("noise", 0.0),
                    )
                )
        if "coupling" not in parser:
            raise ValueError("scenario file is missing the [coupling] section")
        rows = []
        for i in range(len(variables)):
            raw = parser["coupling"].get("row%d" % i)
            if raw is None:
                raise ValueError("coupling is missing row%d" % i)
            rows.append([float(v) for v in raw.split()])
        coupling = np.array(rows, dtype=np.float64)
        if k_slices < 1:
            raise ValueError("slices_per_day must be positive")
        spec = ScenarioSpec(
            i_days=i_days,
            variables=tuple(variables),
            coupling=coupling,
            seed=seed,
            start_date=start,
        )
    except ValueError:
        raise
    except Exception as exc:
        raise ValueError("bad scenario file: %s" % exc) from None
    return spec, k_slices
