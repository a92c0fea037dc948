"""Grid-scan engine behind the landscape and curve outputs.

Scans never abort on a bad cell: failures are encoded in a per-cell status
column (the figures these scans feed contain excluded regions by design).
Cells are independent; the expensive Bayesian scans accept a ``workers``
count and farm cells out to processes, with results reassembled in row-major
cell order so the output is identical for any worker count.

The ML root-surface statuses summarize the sign analysis of the two
inversion roots: ``Complex`` (no real distinct roots), ``NegativeRejected``
(the smaller root is negative and discarded; the larger may or may not
survive), ``Ambiguous`` (both roots positive) and ``Unambiguous`` (the
smaller root sits exactly on the zero boundary).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import Callable, Sequence

import numpy as np

from .dynamics import FieldConfig, dprob_domega0, prob_detect
from .errors import DomainError, EstimationError
from .fisher import cfi_values, qfi_values, paper_scaled
from .frequentist import Dataset
from .numerics import DEFAULT_TOL, Tolerance, inv_sinc_values
from .posterior import PosteriorSpec, bayes_fisher, map_stationarity_lhs, mmse
from .priors import Prior, PriorKind

__all__ = [
    "Axis",
    "GridTable",
    "fisher_scan",
    "ml_root_scan",
    "bayes_scan",
    "mmse_curve",
    "map_curve",
]

_AXIS_NAMES = ("omega", "b0", "theta", "omega0", "xbar")
_FIELD_AXES = ("omega", "b0", "theta")
STATUS_OK = "ok"


@dataclass(frozen=True)
class Axis:
    """A linearly spaced scan axis."""

    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self) -> None:
        if self.name not in _AXIS_NAMES:
            raise DomainError(f"axis name must be one of {_AXIS_NAMES}, got {self.name!r}")
        if not self.start < self.stop:
            raise DomainError(f"axis {self.name}: start must be < stop")
        if not self.count >= 2:
            raise DomainError(f"axis {self.name}: count must be >= 2, got {self.count}")
        if self.name == "b0" and self.start <= 0:
            raise DomainError("axis b0 must start above 0")
        if self.name == "theta" and not (0.0 < self.start and self.stop < math.pi):
            raise DomainError("axis theta must stay strictly inside (0, pi)")
        if self.name == "xbar" and not (0.0 <= self.start and self.stop <= 1.0):
            raise DomainError("axis xbar must stay inside [0, 1]")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass
class GridTable:
    """Rectangular scan output: axis columns, value columns, per-cell status."""

    axes: tuple[Axis, ...]
    columns: dict[str, np.ndarray]
    status: list[str]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = self.n_cells
        for name, col in self.columns.items():
            if len(col) != n:
                raise DomainError(f"column {name!r} has {len(col)} cells, expected {n}")
        if len(self.status) != n:
            raise DomainError(f"status column has {len(self.status)} cells, expected {n}")

    @property
    def n_cells(self) -> int:
        out = 1
        for ax in self.axes:
            out *= ax.count
        return out

    def header(self) -> list[str]:
        return [ax.name for ax in self.axes] + list(self.columns) + ["status"]

    def rows(self):
        """Row-major cell iterator: (axis values..., column values..., status)."""
        grids = np.meshgrid(*[ax.values for ax in self.axes], indexing="ij")
        flat_axes = [g.ravel() for g in grids]
        cols = list(self.columns.values())
        for i in range(self.n_cells):
            yield [g[i] for g in flat_axes] + [c[i] for c in cols] + [self.status[i]]

    def to_csv(self, fp) -> None:
        """Comma-separated output: header row, LF endings, 17 significant digits."""
        fp.write(",".join(self.header()) + "\n")
        for row in self.rows():
            fp.write(
                ",".join(v if isinstance(v, str) else format(v, ".17g") for v in row) + "\n"
            )


def _cell_grids(axes: Sequence[Axis]) -> dict[str, np.ndarray]:
    grids = np.meshgrid(*[ax.values for ax in axes], indexing="ij")
    return {ax.name: g.ravel() for ax, g in zip(axes, grids)}


def _field_arrays(cfg: FieldConfig, varied: dict[str, np.ndarray]) -> SimpleNamespace:
    """Field parameters as (possibly array-valued) attributes for the
    closed-form evaluators; fixed values come from cfg."""
    return SimpleNamespace(
        omega=varied.get("omega", cfg.omega),
        b0=varied.get("b0", cfg.b0),
        theta=varied.get("theta", cfg.theta),
    )


def _run_cells(fn: Callable, args: list, workers: int) -> list:
    if workers <= 1 or len(args) < 4:
        return [fn(a) for a in args]
    chunk = max(1, len(args) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args, chunksize=chunk))


def fisher_scan(
    cfg: FieldConfig,
    omega0: float,
    axes: tuple[Axis, Axis],
    accuracy: float = 0.001,
) -> GridTable:
    """Fisher landscape over two field-parameter axes at a fixed frequency.

    Emits raw (t = 1) and omega^2-scaled CFI/QFI/gap plus the sample count
    needed for the target accuracy. Cells where the CFI degenerates, or where
    the scaling or the sample-size relation is undefined, carry a status.
    """
    names = [ax.name for ax in axes]
    if len(axes) != 2 or any(n not in _FIELD_AXES for n in names) or names[0] == names[1]:
        raise DomainError("fisher_scan needs two distinct axes among omega, b0, theta")
    if not accuracy > 0:
        raise DomainError(f"accuracy must be positive, got {accuracy}")

    varied = _cell_grids(axes)
    fields = _field_arrays(cfg, varied)
    cfi_raw = cfi_values(fields, np.full_like(varied[names[0]], omega0))
    qfi_raw = qfi_values(fields, np.full_like(varied[names[0]], omega0))
    gap_raw = qfi_raw - cfi_raw
    omega_col = varied.get("omega", np.full_like(cfi_raw, cfg.omega))
    scale = omega_col**2
    cfi_scaled = cfi_raw * scale
    qfi_scaled = qfi_raw * scale
    gap_scaled = gap_raw * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        n_required = 1.0 / (accuracy * cfi_scaled)

    status = []
    for i in range(cfi_raw.size):
        if np.isnan(cfi_raw[i]):
            status.append("degenerate_probability")
        elif not np.isfinite(n_required[i]):
            status.append("scaled_cfi_zero")
        else:
            status.append(STATUS_OK)

    return GridTable(
        axes=tuple(axes),
        columns={
            "cfi_raw": cfi_raw,
            "qfi_raw": qfi_raw,
            "gap_raw": gap_raw,
            "cfi_scaled": cfi_scaled,
            "qfi_scaled": qfi_scaled,
            "gap_scaled": gap_scaled,
            "n_required": n_required,
        },
        status=status,
        metadata={
            "operation": "fisher_scan",
            "omega0": omega0,
            "accuracy": accuracy,
            "fixed": _fixed_echo(cfg, names),
        },
    )


def ml_root_scan(cfg: FieldConfig, axes: tuple[Axis, Axis]) -> GridTable:
    """Root surfaces of the ML inversion over (b0 or omega) x count rate.

    The boundary_b0 column reports the field strength at which the sinc
    constraint holds with equality for each cell's count rate.
    """
    names = [ax.name for ax in axes]
    if len(axes) != 2 or "xbar" not in names:
        raise DomainError("ml_root_scan needs an xbar axis and one of b0, omega")
    other = names[0] if names[1] == "xbar" else names[1]
    if other not in ("b0", "omega"):
        raise DomainError("ml_root_scan varies xbar against b0 or omega")
    xbar_axis = axes[names.index("xbar")]
    if not (0.0 < xbar_axis.start and xbar_axis.stop < 1.0):
        raise DomainError("ml_root_scan needs its xbar axis strictly inside (0, 1)")

    varied = _cell_grids(axes)
    xbar = varied["xbar"]
    fields = _field_arrays(cfg, varied)
    sin_theta = abs(np.sin(fields.theta))
    bsin = fields.b0 * sin_theta
    ratio = np.sqrt(xbar) / bsin

    s = np.full_like(xbar, np.nan)
    ok = ratio <= 1.0
    s[ok] = inv_sinc_values(ratio[ok])
    disc = s * s - bsin * bsin
    real = ok & (disc > 0.0)

    center = fields.omega - 2.0 * fields.b0 * np.cos(fields.theta)
    center = np.broadcast_to(np.asarray(center, dtype=float), xbar.shape).copy()
    delta = np.sqrt(np.where(real, disc, np.nan))
    root_plus = np.where(real, center + 2.0 * delta, np.nan)
    root_minus = np.where(real, center - 2.0 * delta, np.nan)

    status = []
    for i in range(xbar.size):
        if not real[i]:
            status.append("Complex")
        elif root_minus[i] < 0.0:
            status.append("NegativeRejected")
        elif root_minus[i] > 0.0:
            status.append("Ambiguous")
        else:
            status.append("Unambiguous")

    return GridTable(
        axes=tuple(axes),
        columns={
            "root_plus": root_plus,
            "root_minus": root_minus,
            "boundary_b0": np.sqrt(xbar) / sin_theta * np.ones_like(xbar),
        },
        status=status,
        metadata={"operation": "ml_root_scan", "fixed": _fixed_echo(cfg, names)},
    )


def _prior_for_cell(prior: Prior, cfg: FieldConfig) -> Prior:
    """Jeffreys priors depend on the drive, so they are rebuilt per cell."""
    if prior.kind is PriorKind.JEFFREYS:
        return Prior.jeffreys(prior.window, cfg)
    return prior


def _bayes_cell(args) -> tuple[float, float, float, str]:
    prior, cfg_kwargs, n, tol = args
    try:
        cfg = FieldConfig(**cfg_kwargs)
        cell_prior = _prior_for_cell(prior, cfg)
        bf = bayes_fisher(cfg, cell_prior, n, tol)
        return bf.bayes_cfi, bf.bayes_qfi, bf.bayes_gap, STATUS_OK
    except EstimationError as exc:
        return math.nan, math.nan, math.nan, f"error:{type(exc).__name__}"


def bayes_scan(
    cfg: FieldConfig,
    prior: Prior,
    axes: tuple[Axis, Axis],
    n: int,
    tol: Tolerance = DEFAULT_TOL,
    workers: int = 1,
) -> GridTable:
    """Prior-averaged Fisher landscape over two field-parameter axes."""
    names = [ax.name for ax in axes]
    if len(axes) != 2 or any(nm not in _FIELD_AXES for nm in names) or names[0] == names[1]:
        raise DomainError("bayes_scan needs two distinct axes among omega, b0, theta")
    varied = _cell_grids(axes)
    args = []
    for i in range(varied[names[0]].size):
        cfg_kwargs = {
            name: float(varied[name][i]) if name in varied else getattr(cfg, name)
            for name in _FIELD_AXES
        }
        args.append((prior, cfg_kwargs, n, tol))
    results = _run_cells(_bayes_cell, args, workers)
    cols = np.array([[r[0], r[1], r[2]] for r in results], dtype=float)
    return GridTable(
        axes=tuple(axes),
        columns={
            "bayes_cfi": cols[:, 0],
            "bayes_qfi": cols[:, 1],
            "bayes_gap": cols[:, 2],
        },
        status=[r[3] for r in results],
        metadata={
            "operation": "bayes_scan",
            "n": n,
            "prior": _prior_echo(prior),
            "fixed": _fixed_echo(cfg, names),
        },
    )


def _mmse_cell(args) -> tuple[list[float], str]:
    cfg, priors, n, xbar, tol = args
    data = Dataset(n=n, k=n * xbar)
    out = []
    status = STATUS_OK
    for prior in priors:
        try:
            spec = PosteriorSpec(data=data, cfg=cfg, prior=prior, quad_tol=tol)
            out.append(mmse(spec))
        except EstimationError as exc:
            out.append(math.nan)
            status = f"error:{type(exc).__name__}"
    return out, status


def mmse_curve(
    cfg: FieldConfig,
    priors: Sequence[Prior],
    n: int,
    xbar_axis: Axis,
    tol: Tolerance = DEFAULT_TOL,
    workers: int = 1,
) -> GridTable:
    """Posterior-mean estimate against the average count rate, one column per
    prior. Fractional counts k = n*xbar enter the likelihood exponents so the
    count rate can be treated as a continuous abscissa."""
    if xbar_axis.name != "xbar":
        raise DomainError("mmse_curve needs an xbar axis")
    if not priors:
        raise DomainError("mmse_curve needs at least one prior")
    xbars = xbar_axis.values
    args = [(cfg, tuple(priors), n, float(x), tol) for x in xbars]
    results = _run_cells(_mmse_cell, args, workers)

    names = []
    for prior in priors:
        base = f"mmse_{prior.kind.value}"
        name = base
        suffix = 2
        while name in names:
            name = f"{base}_{suffix}"
            suffix += 1
        names.append(name)
    columns = {
        name: np.array([r[0][j] for r in results]) for j, name in enumerate(names)
    }
    return GridTable(
        axes=(xbar_axis,),
        columns=columns,
        status=[r[1] for r in results],
        metadata={
            "operation": "mmse_curve",
            "n": n,
            "priors": [_prior_echo(p) for p in priors],
            "fixed": _fixed_echo(cfg, []),
        },
    )


def map_curve(
    cfg: FieldConfig,
    prior: Prior,
    n: int,
    omega0_axis: Axis,
) -> GridTable:
    """Count rate solving the MAP stationarity condition at each frequency.

    Consumers recover MAP candidates as the frequencies where a horizontal
    line at the observed count rate crosses the curve. Cells where the
    probability slope vanishes are excluded by status (the stationarity form
    divides by it). A companion column drops the 1/n prior term, which is the
    infinite-sample limit and reduces to the detection probability.
    """
    if omega0_axis.name != "omega0":
        raise DomainError("map_curve needs an omega0 axis")
    if prior.kind not in (PriorKind.JEFFREYS, PriorKind.GAUSSIAN):
        raise DomainError("map_curve applies to the Jeffreys and Gaussian priors")
    omega0s = omega0_axis.values
    with np.errstate(divide="ignore", invalid="ignore"):
        xbar = np.asarray(map_stationarity_lhs(cfg, prior, n, omega0s), dtype=float)
    xbar_inf = np.asarray(prob_detect(cfg, omega0s), dtype=float)
    dp = np.asarray(dprob_domega0(cfg, omega0s), dtype=float)
    status = []
    for i in range(omega0s.size):
        if abs(dp[i]) < 1e-12 or not np.isfinite(xbar[i]):
            status.append("dprob_zero")
        else:
            status.append(STATUS_OK)
    return GridTable(
        axes=(omega0_axis,),
        columns={"xbar": xbar, "xbar_n_inf": xbar_inf},
        status=status,
        metadata={
            "operation": "map_curve",
            "n": n,
            "prior": _prior_echo(prior),
            "fixed": _fixed_echo(cfg, ["omega0"]),
        },
    )


def _fixed_echo(cfg: FieldConfig, varied_names: Sequence[str]) -> dict:
    return {
        name: getattr(cfg, name)
        for name in _FIELD_AXES
        if name not in varied_names
    }


def _prior_echo(prior: Prior) -> dict:
    out = {
        "kind": prior.kind.value,
        "window": [prior.window.lower, prior.window.upper],
    }
    if prior.kind is PriorKind.GAUSSIAN:
        out["mean"] = prior.mean
        out["sigma"] = prior.sigma
    if prior.kind is PriorKind.JEFFREYS:
        out["normalizer"] = prior.normalizer
    return out
