"""Smoke test of the mlfrac extension: imports, evaluates, round-trips."""

import cmath
import json
import math

import mlfrac


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    assert close(mlfrac.ml2(1.0, 1.0, 1.0), math.e, 1e-12)
    assert close(mlfrac.ml2(2.0, 1.0, 4.0), math.cosh(2.0), 1e-12)
    prab = mlfrac.ml_prabhakar(1.0, 1.0, 2.0, 1.0)
    assert close(prab, 2 * math.e, 1e-12)
    assert close(mlfrac.ml_multivariate(1.0, 1.0, [1.0, 1.0], [1.0, 1.0]), prab, 1e-12)

    # F'' + 2F' + 0.25F = 0, F(0) = 1, F'(0) = 0
    p = mlfrac.Problem(1.0, [0.25, 2.0, 1.0], [1.0, 0.0])
    s = p.solve()
    r1, r2 = -1 + math.sqrt(0.75), -1 - math.sqrt(0.75)
    exact = lambda t: (r1 * cmath.exp(r2 * t) - r2 * cmath.exp(r1 * t)) / (r1 - r2)
    for t in (0.0, 0.5, 1.0, 3.0):
        assert close(s(t), exact(t), 1e-10), (t, s(t), exact(t))
    general = p.solve("general")
    assert general.form == "general" and s.form == "distinct"
    assert all(close(a, b, 1e-10) for a, b in zip(general.evaluate_many([0.3, 2.0]), s.evaluate_many([0.3, 2.0])))

    back = mlfrac.Problem.from_json(p.to_json())
    assert back.coeffs == p.coeffs and back.init_conds == p.init_conds
    assert json.loads(p.to_json())["nu"] == 1.0

    try:
        mlfrac.Problem(1.0, [0.0, 1.0], [1.0])
    except mlfrac.ZeroRootError:
        pass
    else:
        raise AssertionError("zero root accepted")

    motion = mlfrac.Motion.orthogonal(2.0, 1.0)
    closed = mlfrac.orthogonal_problem(2.0, 1.0, 0.7, -0.4).solve()(1.0)
    mean, se = motion.empirical_cf(1.0, [0.7, -0.4], samples=200_000, seed=3)
    assert abs(mean - closed) < 5 * se, (mean, closed, se)
    assert motion.empirical_cf(1.0, [0.7, -0.4], samples=1000, seed=3) == motion.empirical_cf(1.0, [0.7, -0.4], samples=1000, seed=3)

    print(f"mlfrac {mlfrac.__version__}: ok")


if __name__ == "__main__":
    main()
