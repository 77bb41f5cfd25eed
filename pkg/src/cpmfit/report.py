"""Fit reports: a schema-versioned, serializable record of a fitted model.

The JSON form is lossless (floats print as their shortest round-trip
representation) and, when it carries the alpha table and the information
blocks, is sufficient to answer every prediction query without the
original data: a loaded report exposes the same surface the inference
functions need from a fit (cuts, alpha, beta, link, bounds, and the
factored information).  The CSV form is a flat export of the coefficient
table (and the alpha table when requested) for spreadsheets; it is not a
reload format.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import ndtr

from .exceptions import IngestionError
from .inference import _zscore
from .likelihood import SparseBlocks
from .solver import BlockFactor

SCHEMA_VERSION = 1


def _alpha_ses(fit) -> np.ndarray:
    """SE of each alpha_k: sqrt of the alpha diagonal of the inverse
    information, via the factored blocks."""
    factor = fit.block_factor()
    base = factor.alpha_inverse_diag()
    if fit.beta.shape[0] == 0:
        return np.sqrt(np.maximum(base, 0.0))
    w = factor.w_matrix()
    sinv = factor.beta_cov()
    extra = np.einsum("mp,pq,mq->m", w, sinv, w)
    return np.sqrt(np.maximum(base + extra, 0.0))


def coefficient_table(fit, level: float = 0.95):
    """Rows of (name, estimate, se, ci_low, ci_high, z, p_value)."""
    rows = []
    if fit.p == 0:
        return rows
    se = fit.beta_se()
    zq = _zscore(level)
    for j, name in enumerate(fit.covariate_names):
        est = float(fit.beta[j])
        s = float(se[j])
        z = est / s if s > 0 else float("inf") * np.sign(est)
        rows.append(
            {
                "name": name,
                "estimate": est,
                "se": s,
                "ci_low": est - zq * s,
                "ci_high": est + zq * s,
                "z": float(z),
                "p_value": float(2.0 * ndtr(-abs(z))),
            }
        )
    return rows


def build_report(fit, alpha_table: bool = False, residuals: bool = False, level: float = 0.95) -> dict:
    """Assemble the report dictionary for a fitted model."""
    enc = fit.enc
    bounds = list(fit.bounds) if fit.bounds is not None else None
    report = {
        "schema_version": SCHEMA_VERSION,
        "model": {
            "link": fit.link.name,
            "bounds": bounds,
            "n": fit.n,
            "n_categories": enc.n_categories,
            "p": fit.p,
            "covariates": list(fit.covariate_names),
            "n_left_censored": int(np.count_nonzero(enc.left)),
            "n_right_censored": int(np.count_nonzero(enc.right)),
        },
        "fit": {
            "converged": bool(fit.converged),
            "iterations": int(fit.iterations),
            "loglik": float(fit.loglik),
            "max_abs_gradient": float(fit.max_abs_gradient),
            "clamp_events": int(fit.clamp_events),
            "diverged": bool(fit.diverged),
        },
        "coefficients": coefficient_table(fit, level),
    }
    if alpha_table:
        report["alpha_table"] = {
            "cuts": [float(c) for c in fit.cuts],
            "alpha": [float(a) for a in fit.alpha],
            "se": [float(s) for s in _alpha_ses(fit)],
        }
        info = fit.info
        report["information"] = {
            "aa_diag": [float(v) for v in info.aa_diag],
            "aa_off": [float(v) for v in info.aa_off],
            "ab": [[float(v) for v in row] for row in info.ab],
            "bb": [[float(v) for v in row] for row in info.bb],
        }
    if residuals:
        from .inference import probability_scale_residuals

        report["residuals"] = [float(r) for r in probability_scale_residuals(fit)]
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def report_csv(report: dict) -> str:
    """Flat CSV export: the coefficient table, then the alpha table when
    present, separated by a blank line."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "estimate", "se", "ci_low", "ci_high", "z", "p_value"])
    for row in report["coefficients"]:
        writer.writerow(
            [
                row["name"],
                repr(row["estimate"]),
                repr(row["se"]),
                repr(row["ci_low"]),
                repr(row["ci_high"]),
                repr(row["z"]),
                repr(row["p_value"]),
            ]
        )
    table = report.get("alpha_table")
    if table is not None:
        writer.writerow([])
        writer.writerow(["cut", "alpha", "se"])
        for cut, alpha, se in zip(table["cuts"], table["alpha"], table["se"]):
            writer.writerow([repr(cut), repr(alpha), repr(se)])
    return buf.getvalue()


def human_summary(report: dict) -> str:
    """A short fixed-precision summary for terminals (4 decimals)."""
    model = report["model"]
    fitted = report["fit"]
    bounds = model["bounds"]
    lines = [
        f"cumulative probability model, {model['link']} link",
        f"n = {model['n']}, distinct values = {model['n_categories']}, "
        f"covariates = {model['p']}",
    ]
    if bounds is not None:
        lines.append(
            f"censored at [{bounds[0]:.6g}, {bounds[1]:.6g}]: "
            f"{model['n_left_censored']} left, {model['n_right_censored']} right"
        )
    status = "converged" if fitted["converged"] else "DID NOT CONVERGE"
    lines.append(
        f"{status} in {fitted['iterations']} iterations, "
        f"loglik = {fitted['loglik']:.4f}, "
        f"max |score| = {fitted['max_abs_gradient']:.2e}"
    )
    if report["coefficients"]:
        lines.append("")
        lines.append(
            f"{'name':<16}{'estimate':>12}{'se':>12}{'ci_low':>12}"
            f"{'ci_high':>12}{'z':>10}{'p':>10}"
        )
        for row in report["coefficients"]:
            lines.append(
                f"{row['name']:<16}{row['estimate']:>12.4f}{row['se']:>12.4f}"
                f"{row['ci_low']:>12.4f}{row['ci_high']:>12.4f}"
                f"{row['z']:>10.2f}{row['p_value']:>10.4f}"
            )
    lines.append("")
    return "\n".join(lines)


@dataclass
class ReportModel:
    """A model reloaded from a saved report; answers prediction queries
    through the same surface a live fit exposes."""

    link: str
    bounds: Optional[Tuple[float, float]]
    cuts: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    covariate_names: Tuple[str, ...]
    info: SparseBlocks
    n: int = 0
    _factor: Optional[BlockFactor] = field(default=None, repr=False, compare=False)

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    def block_factor(self) -> BlockFactor:
        if self._factor is None:
            self._factor = BlockFactor(self.info)
        return self._factor

    def beta_cov(self) -> np.ndarray:
        return self.block_factor().beta_cov()


def load_report(path) -> ReportModel:
    """Load a JSON report saved with the alpha table into a usable model."""
    with open(path) as fh:
        try:
            report = json.load(fh)
        except json.JSONDecodeError as exc:
            raise IngestionError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(report, dict) or "schema_version" not in report:
        raise IngestionError(f"{path}: not a fit report (no schema_version)")
    if report["schema_version"] != SCHEMA_VERSION:
        raise IngestionError(
            f"{path}: unsupported schema version {report['schema_version']!r}"
        )
    table = report.get("alpha_table")
    info = report.get("information")
    if table is None or info is None:
        raise IngestionError(
            f"{path}: report lacks the alpha table; save the model with "
            "--alpha-table to use it for prediction"
        )
    model = report["model"]
    bounds = model["bounds"]
    beta = np.asarray([row["estimate"] for row in report["coefficients"]], dtype=float)
    blocks = SparseBlocks(
        aa_diag=np.asarray(info["aa_diag"], dtype=float),
        aa_off=np.asarray(info["aa_off"], dtype=float),
        ab=np.asarray(info["ab"], dtype=float).reshape(len(info["aa_diag"]), -1),
        bb=np.asarray(info["bb"], dtype=float).reshape(beta.shape[0], beta.shape[0]),
    )
    return ReportModel(
        link=model["link"],
        bounds=tuple(bounds) if bounds is not None else None,
        cuts=np.asarray(table["cuts"], dtype=float),
        alpha=np.asarray(table["alpha"], dtype=float),
        beta=beta,
        covariate_names=tuple(model["covariates"]),
        info=blocks,
        n=int(model["n"]),
    )
