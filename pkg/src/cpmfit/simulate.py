"""Monte Carlo harness for the log-normal simulation study.

Design: X1 ~ Bernoulli(0.5), X2 ~ N(0, 1), Y = exp(beta1 X1 + beta2 X2 + eps)
with eps ~ N(0, 1), so the true transformation is A(y) = log y under the
probit link.  Each replicate is fitted uncensored and censored at each
bound pair, tracking five estimands: beta1, beta2, A(e^0.5), the
conditional median and the conditional mean at X = 0 (the mean only
without censoring, where it is identified).

Every replicate draws from its own counter-based stream keyed by
(seed, replicate index), so results are bit-for-bit identical however the
replicates are scheduled; aggregation always runs in replicate order.
Non-converged replicates are excluded from the aggregates and counted.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from .data import RawSample, censor_transform, encode_ordinal, validate_bounds
from .exceptions import SingularInformationError
from .inference import ahat_interval, conditional_mean, conditional_quantile
from .solver import fit

AHAT_AT = float(np.exp(0.5))

ESTIMANDS = ("beta1", "beta2", "ahat", "median", "mean")

TRUTH = {
    "beta1": 1.0,
    "beta2": -0.5,
    "ahat": 0.5,
    "median": 1.0,
    "mean": float(np.exp(0.5)),
}

ESTIMAND_LABELS = {
    "beta1": "beta1",
    "beta2": "beta2",
    "ahat": "A(e^0.5)",
    "median": "median(Y|X=0)",
    "mean": "E(Y|X=0)",
}

DEFAULT_BOUND_PAIRS: Tuple[Optional[Tuple[float, float]], ...] = (
    None,
    (float(np.exp(-4.0)), float(np.exp(4.0))),
    (float(np.exp(-2.0)), float(np.exp(2.0))),
    (float(np.exp(-0.5)), float(np.exp(0.5))),
)

DEFAULT_GRID = tuple(float(v) for v in np.exp(np.linspace(-4.0, 4.0, 17)))


@dataclass
class SimDesign:
    """Study configuration; the defaults reproduce the published table."""

    n: int = 100
    replicates: int = 1000
    beta1: float = 1.0
    beta2: float = -0.5
    link: str = "probit"
    bound_pairs: Tuple[Optional[Tuple[float, float]], ...] = DEFAULT_BOUND_PAIRS
    seed: int = 2021
    grid: Tuple[float, ...] = DEFAULT_GRID

    def __post_init__(self):
        if self.n < 10:
            raise ValueError(f"need n >= 10, got {self.n}")
        if self.replicates < 1:
            raise ValueError(f"need at least one replicate, got {self.replicates}")
        self.bound_pairs = tuple(validate_bounds(b) for b in self.bound_pairs)


def bound_label(bounds) -> str:
    if bounds is None:
        return "none"
    return f"{bounds[0]!r},{bounds[1]!r}"


def bound_file_label(bounds) -> str:
    if bounds is None:
        return "none"
    return f"{bounds[0]:.6g}_{bounds[1]:.6g}"


def replicate_rng(design: SimDesign, r: int) -> np.random.Generator:
    """Counter-based stream for replicate r: key = (seed, r).

    Distinct replicates get distinct keys, hence independent streams; the
    schedule of replicates over workers cannot change any draw."""
    key = np.array([design.seed, r], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _generate_arrays(design: SimDesign, r: int):
    """One replicate as arrays: (y, z) with z columns (X1, X2)."""
    rng = replicate_rng(design, r)
    x1 = (rng.random(design.n) < 0.5).astype(float)
    x2 = rng.standard_normal(design.n)
    eps = rng.standard_normal(design.n)
    y = np.exp(design.beta1 * x1 + design.beta2 * x2 + eps)
    return y, np.column_stack([x1, x2])


def generate_replicate(design: SimDesign, r: int) -> List[RawSample]:
    """One replicate as RawSample records."""
    y, z = _generate_arrays(design, r)
    return [RawSample(float(yi), (float(zi[0]), float(zi[1]))) for yi, zi in zip(y, z)]


def censor_fraction(design: SimDesign, bounds, draws: int = 200_000) -> float:
    """Monte Carlo censoring fraction under the design's data law."""
    bounds = validate_bounds(bounds)
    if bounds is None:
        return 0.0
    y, _ = _generate_arrays(replace(design, n=draws), 0)
    return float(np.mean((y <= bounds[0]) | (y >= bounds[1])))


def _fit_estimands(design: SimDesign, y, z, bounds):
    """Fit one replicate at one bound pair; returns (est, se, conv, maxgrad)."""
    est = np.full(len(ESTIMANDS), np.nan)
    se = np.full(len(ESTIMANDS), np.nan)
    enc = encode_ordinal(censor_transform(y, z, bounds))
    f = fit(enc, design.link)
    if not f.converged:
        return est, se, False, f.max_abs_gradient
    z0 = np.zeros(2)
    est[0], est[1] = f.beta
    est[3] = conditional_quantile(f, 0.5, z0, ci=False).estimate
    try:
        bcov = f.beta_cov()
        se[0] = math.sqrt(bcov[0, 0])
        se[1] = math.sqrt(bcov[1, 1])
        a_est, a_se, _ = ahat_interval(f, AHAT_AT)
        if np.isfinite(a_est):
            est[2] = a_est
            se[2] = a_se
        if bounds is None:
            mr = conditional_mean(f, z0)
            est[4] = mr.estimate
            se[4] = mr.se
    except SingularInformationError:
        pass  # point estimates stand; SEs stay missing
    return est, se, True, f.max_abs_gradient


def _study_chunk(design: SimDesign, r0: int, r1: int):
    nb = len(design.bound_pairs)
    ne = len(ESTIMANDS)
    est = np.full((r1 - r0, nb, ne), np.nan)
    se = np.full((r1 - r0, nb, ne), np.nan)
    conv = np.zeros((r1 - r0, nb), dtype=bool)
    maxgrad = np.full((r1 - r0, nb), np.nan)
    for i, r in enumerate(range(r0, r1)):
        y, z = _generate_arrays(design, r)
        for b, bounds in enumerate(design.bound_pairs):
            e, s, ok, mg = _fit_estimands(design, y, z, bounds)
            est[i, b] = e
            se[i, b] = s
            conv[i, b] = ok
            maxgrad[i, b] = mg
    return r0, est, se, conv, maxgrad


def _chunk_ranges(total: int, threads: int):
    size = max(1, math.ceil(total / (max(threads, 1) * 4)))
    return [(a, min(a + size, total)) for a in range(0, total, size)]


def _run_chunked(worker, args, ranges, threads: int):
    """Run worker(*args, r0, r1) over the ranges, optionally in a pool.

    Results merge keyed by r0, so the outcome is fixed by the ranges
    themselves, never by completion order."""
    if threads <= 1:
        return [worker(*args, a, b) for a, b in ranges]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, *args, a, b) for a, b in ranges]
        return [f.result() for f in futures]


@dataclass
class MetricsTable:
    """Per-replicate estimates plus the aggregated study metrics."""

    design: SimDesign
    estimates: np.ndarray  # (replicates, bound pairs, estimands)
    ses: np.ndarray
    converged: np.ndarray  # (replicates, bound pairs)
    max_gradients: np.ndarray

    def _cell_mask(self, b: int, e: int) -> np.ndarray:
        return self.converged[:, b] & np.isfinite(self.estimates[:, b, e])

    def cell(self, b: int, e: int) -> Optional[dict]:
        """Aggregated metrics for one (bound pair, estimand) cell; None when
        the estimand is not defined there (the mean under censoring)."""
        name = ESTIMANDS[e]
        if name == "mean" and self.design.bound_pairs[b] is not None:
            return None
        truth = TRUTH[name]
        mask = self._cell_mask(b, e)
        vals = self.estimates[:, b, e][mask]
        ses = self.ses[:, b, e][mask]
        r_eff = int(mask.sum())
        out = {
            "n": self.design.n,
            "bound_pair": bound_label(self.design.bound_pairs[b]),
            "estimand": name,
            "failures": self.estimates.shape[0] - r_eff,
        }
        if r_eff == 0:
            out.update(bias=np.nan, sd=np.nan, mean_se=np.nan, mse=np.nan)
            return out
        errors = vals - truth
        out["bias"] = float(np.mean(errors))
        out["sd"] = float(np.std(vals, ddof=1)) if r_eff >= 2 else float("nan")
        finite_se = ses[np.isfinite(ses)]
        out["mean_se"] = float(np.mean(finite_se)) if finite_se.size else float("nan")
        out["mse"] = float(np.mean(errors * errors))
        return out

    def rows(self):
        out = []
        for e in range(len(ESTIMANDS)):
            for b in range(len(self.design.bound_pairs)):
                cell = self.cell(b, e)
                if cell is not None:
                    out.append(cell)
        return out

    def coverage(self, b: int, e: int, level: float = 0.95) -> float:
        """Empirical CI coverage of the truth among usable replicates."""
        from scipy.special import ndtri

        zq = float(ndtri(0.5 + 0.5 * level))
        mask = self._cell_mask(b, e) & np.isfinite(self.ses[:, b, e])
        if not mask.any():
            return float("nan")
        err = np.abs(self.estimates[:, b, e][mask] - TRUTH[ESTIMANDS[e]])
        return float(np.mean(err <= zq * self.ses[:, b, e][mask]))

    def worst_gradient(self) -> float:
        mg = self.max_gradients[self.converged]
        return float(np.max(mg)) if mg.size else 0.0

    def nonconvergence_warning(self) -> Optional[str]:
        """A message when any bound pair failed on more than 5% of replicates."""
        total = self.converged.shape[0]
        bad = []
        for b, bounds in enumerate(self.design.bound_pairs):
            failures = total - int(np.count_nonzero(self.converged[:, b]))
            if failures > 0.05 * total:
                bad.append(f"{failures}/{total} at bounds {bound_label(bounds)}")
        if not bad:
            return None
        return "WARNING: pervasive non-convergence: " + "; ".join(bad)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["n", "bound_pair", "estimand", "bias", "sd", "mean_se", "mse", "failures"]
        )
        for row in self.rows():
            writer.writerow(
                [
                    row["n"],
                    row["bound_pair"],
                    row["estimand"],
                    _num(row["bias"]),
                    _num(row["sd"]),
                    _num(row["mean_se"]),
                    _num(row["mse"]),
                    row["failures"],
                ]
            )
        return buf.getvalue()

    def table1_text(self) -> str:
        design = self.design
        headers = ["uncensored" if b is None else _pair_text(b) for b in design.bound_pairs]
        width = max(12, max(len(h) for h in headers) + 2)
        lines = [
            f"simulation results: n = {design.n}, {design.replicates} replicates, "
            f"{design.link} link, seed = {design.seed}",
            "",
            " " * 26 + "".join(h.rjust(width) for h in headers),
        ]
        metric_labels = (("bias", "bias"), ("sd", "SD"), ("mean_se", "mean SE"), ("mse", "MSE"))
        for e, name in enumerate(ESTIMANDS):
            cells = [self.cell(b, e) for b in range(len(design.bound_pairs))]
            if all(c is None for c in cells):
                continue
            for j, (metric, label) in enumerate(metric_labels):
                row = f"{ESTIMAND_LABELS[name] if j == 0 else '':<16}{label:>8}  "
                for c in cells:
                    value = c.get(metric) if c else None
                    text = "-" if value is None or not np.isfinite(value) else f"{value:.4f}"
                    row += text.rjust(width)
                lines.append(row)
            fails = [c["failures"] if c else None for c in cells]
            if any(f for f in fails if f):
                row = f"{'':<16}{'failures':>8}  "
                for f in fails:
                    row += ("-" if f is None else str(f)).rjust(width)
                lines.append(row)
        warning = self.nonconvergence_warning()
        if warning:
            lines += ["", warning]
        lines.append("")
        return "\n".join(lines)


def _num(x) -> str:
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    return repr(float(x))


def _pair_text(bounds) -> str:
    return f"[{bounds[0]:.4g},{bounds[1]:.4g}]"


def run_study(design: SimDesign, threads: int = 1) -> MetricsTable:
    """Run the full study; deterministic for a given design and seed,
    whatever the thread count."""
    total = design.replicates
    nb = len(design.bound_pairs)
    ne = len(ESTIMANDS)
    est = np.full((total, nb, ne), np.nan)
    se = np.full((total, nb, ne), np.nan)
    conv = np.zeros((total, nb), dtype=bool)
    maxgrad = np.full((total, nb), np.nan)
    ranges = _chunk_ranges(total, threads)
    for r0, e_c, s_c, c_c, g_c in _run_chunked(_study_chunk, (design,), ranges, threads):
        stop = r0 + e_c.shape[0]
        est[r0:stop] = e_c
        se[r0:stop] = s_c
        conv[r0:stop] = c_c
        maxgrad[r0:stop] = g_c
    return MetricsTable(design, est, se, conv, maxgrad)


# ----------------------------------------------------------------------
# transformation bias curves


@dataclass
class BiasCurve:
    """Mean (Ahat(y) - log y) over replicates at fixed grid points.

    Grid points a replicate cannot estimate (below its smallest cut, or
    outside the bounds) are skipped for that replicate; n_contributing
    counts the replicates entering each average."""

    bounds: Optional[Tuple[float, float]]
    ys: np.ndarray
    mean_bias: np.ndarray
    n_contributing: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["y", "mean_bias", "n_contributing"])
        for y, b, n in zip(self.ys, self.mean_bias, self.n_contributing):
            writer.writerow([repr(float(y)), _num(float(b)), int(n)])
        return buf.getvalue()


def _curve_chunk(design: SimDesign, bounds, r0: int, r1: int):
    grid = np.asarray(design.grid, dtype=float)
    vals = np.full((r1 - r0, grid.shape[0]), np.nan)
    for i, r in enumerate(range(r0, r1)):
        y, z = _generate_arrays(design, r)
        f = fit(encode_ordinal(censor_transform(y, z, bounds)), design.link)
        if not f.converged:
            continue
        m = f.alpha.shape[0]
        for g, point in enumerate(grid):
            if bounds is not None and not (bounds[0] <= point <= bounds[1]):
                continue
            k = int(np.searchsorted(f.cuts, point, side="right")) - 1
            if k < 0:
                continue  # below this replicate's support
            vals[i, g] = f.alpha[min(k, m - 1)] - math.log(point)
    return r0, vals


def ahat_bias_curve(design: SimDesign, bounds, threads: int = 1) -> BiasCurve:
    """Mean transformation bias on the design grid at one bound pair."""
    bounds = validate_bounds(bounds)
    grid = np.asarray(design.grid, dtype=float)
    total = design.replicates
    vals = np.full((total, grid.shape[0]), np.nan)
    ranges = _chunk_ranges(total, threads)
    for r0, v_c in _run_chunked(_curve_chunk, (design, bounds), ranges, threads):
        vals[r0 : r0 + v_c.shape[0]] = v_c
    finite = np.isfinite(vals)
    counts = finite.sum(axis=0)
    sums = np.where(finite, vals, 0.0).sum(axis=0)
    mean = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return BiasCurve(bounds, grid, mean, counts.astype(np.int64))
