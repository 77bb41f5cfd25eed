"""Compare the compiled and pure-Python kernel backends.

Times the three hot paths (log likelihood, fused score/information, and
the tridiagonal factor+solve) plus a full fit on the same data, checks
that the two backends agree to near machine precision, and prints the
speedups.  Run from the repository root:

    python3 benchmarks/bench_kernels.py --n 5000
"""

import argparse
import time

import numpy as np

from cpmfit import _kernels
from cpmfit.data import censor_transform, encode_ordinal
from cpmfit.likelihood import loglik, score_info
from cpmfit.solver import BlockFactor, fit, starting_values


def make_problem(n, seed):
    rng = np.random.default_rng(seed)
    z = np.column_stack([(rng.random(n) < 0.5).astype(float), rng.standard_normal(n)])
    y = np.exp(z[:, 0] - 0.5 * z[:, 1] + rng.standard_normal(n))
    return encode_ordinal(censor_transform(y, z))


def best_of(reps, func, *args):
    best = np.inf
    out = None
    for _ in range(reps):
        start = time.perf_counter()
        out = func(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def run(n, reps):
    enc = make_problem(n, seed=20210814)
    alpha, _ = starting_values(enc, "probit")
    beta = np.array([0.3, -0.2])

    rows = []
    results = {}
    for backend in _kernels.available_backends():
        with _kernels.use_backend(backend):
            t_ll, ll = best_of(reps, loglik, enc, "probit", alpha, beta)
            t_si, si = best_of(reps, score_info, enc, "probit", alpha, beta)
            t_tri, _ = best_of(
                reps,
                lambda b: BlockFactor(b.blocks).solve(b.grad_alpha, b.grad_beta),
                si,
            )
            t_fit, fitted = best_of(1, fit, enc, "probit")
        rows.append((backend, t_ll, t_si, t_tri, t_fit))
        results[backend] = (ll, si, fitted)

    if len(results) == 2:
        ll_c, si_c, fit_c = results["compiled"]
        ll_p, si_p, fit_p = results["pure"]
        assert abs(ll_c - ll_p) <= 1e-10 * (1 + abs(ll_c)), "loglik mismatch"
        assert np.allclose(si_c.grad_alpha, si_p.grad_alpha, atol=1e-10), "score mismatch"
        assert np.allclose(si_c.grad_beta, si_p.grad_beta, atol=1e-10)
        assert np.allclose(fit_c.alpha, fit_p.alpha, atol=1e-8), "fit mismatch"
        assert np.allclose(fit_c.beta, fit_p.beta, atol=1e-8)
        print(f"backends agree: loglik delta {abs(ll_c - ll_p):.2e}, "
              f"fitted beta delta {np.max(np.abs(fit_c.beta - fit_p.beta)):.2e}\n")
    else:
        print("compiled backend unavailable; timing the pure backend only\n")

    header = f"{'backend':<10}{'loglik':>12}{'score_info':>14}{'tridiag':>12}{'full fit':>12}"
    print(f"n = {enc.n}, distinct values = {enc.n_categories}, p = {enc.p}")
    print(header)
    for backend, t_ll, t_si, t_tri, t_fit in rows:
        print(
            f"{backend:<10}{t_ll * 1e3:>10.2f}ms{t_si * 1e3:>12.2f}ms"
            f"{t_tri * 1e3:>10.2f}ms{t_fit * 1e3:>10.2f}ms"
        )
    if len(rows) == 2:
        (_, *c), (_, *p) = rows if rows[0][0] == "compiled" else rows[::-1]
        print(
            f"{'speedup':<10}"
            + "".join(f"{pp / cc:>11.1f}x" for cc, pp in zip(c, p))
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=5000, help="observations (and cuts)")
    parser.add_argument("--reps", type=int, default=7, help="repetitions per timing")
    args = parser.parse_args()
    run(args.n, args.reps)


if __name__ == "__main__":
    main()
