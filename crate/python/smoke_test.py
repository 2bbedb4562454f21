"""Smoke test for the affgd Python extension.

Build and install first, e.g. ``pip install --no-build-isolation ./crates/py``.
"""

import json

import affgd


def main():
    problem = affgd.Problem.logistic(n_samples=50, n_features=2, seed=42)
    x_star, f_star = problem.optimum
    assert problem.dim == 2
    assert abs(sum(g * g for g in problem.gradient(x_star))) < 1e-20
    print(f"logistic: L_s={problem.smoothness_constant:.4f} f*={f_star:.8f}")

    traj = affgd.run(problem, affgd.Controller.affgd(0.7), max_iters=1000, grad_tol=0.0)
    assert traj.status == "budget_exhausted", traj.status
    assert traj.final_gap < 1e-12
    print(f"{traj!r}: first k with gap <= 1e-8 is {traj.first_k_below(1e-8)}")

    reports = affgd.verify(problem, traj, suite="thm2")
    for r in reports:
        print(f"  {r['inequality']:<20} {r['verdict']}")
    assert all(r["verdict"] == "pass" for r in reports)

    data = json.loads(traj.to_json())
    for rec in data["records"]:
        if rec["step"] is not None:
            rec["step"]["alpha"] *= 2.0
    corrupt = affgd.Trajectory.from_json(json.dumps(data))
    verdicts = {r["inequality"]: r["verdict"] for r in affgd.verify(problem, corrupt, suite="thm2")}
    assert verdicts["recursion_replay"] == "fail", verdicts
    print("corrupted trajectory rejected")

    quad = affgd.Problem.quadratic([[1.0, 0.0], [0.0, 4.0]], [-1.0, -1.0])
    rand_run = affgd.run(quad, affgd.Controller.random(), max_iters=2000, grad_tol=0.0)
    assert all(r["verdict"] == "pass" for r in affgd.verify(quad, rand_run, suite="thm1"))
    alpha = quad.solve_alpha1([0.0, 0.0], 0.5, 10.0)
    # quadratic estimate at the origin is |Mb|/|b| = sqrt(17/2)
    assert abs(alpha - 0.5 / (17.0 / 2.0) ** 0.5) < 1e-12
    print(f"quadratic: random steps certified, alpha1(gamma=0.5)={alpha:.4f}")

    try:
        affgd.Controller.affgd(1.5)
    except ValueError as e:
        print(f"rejected gamma=1.5: {e}")
    else:
        raise AssertionError("gamma=1.5 accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
