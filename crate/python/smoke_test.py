"""Smoke test for the pycellfree extension module.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import math
import random

import pycellfree as cf


def main() -> None:
    scenario = cf.Scenario.reference()
    assert (scenario.n_max, scenario.n_orus, scenario.obs_len) == (6, 19, 138)
    assert scenario.eps_max_at(1500.0, 1500.0) == 1e-5
    assert cf.eps_max_at(scenario, 500.0, 500.0) == 1e-2

    # closed form against the single-link exponential and the Monte-Carlo oracle
    assert abs(cf.hypoexp_sf([2.0], 1.0) - math.exp(-0.5)) < 1e-15
    exact = 1.0 - cf.hypoexp_sf([1.0, 2.0], 1.0)
    mc, se = cf.mc_outage([1.0, 2.0], 1.0, samples=200_000, seed=1)
    assert abs(exact - mc) <= 4 * se + 1e-4, (exact, mc, se)
    assert abs(cf.outage_probability([1.0, 2.0], 0.5, 2.0) - exact) < 1e-15

    assert abs(cf.steered_gain((1.0, 0.3), (1.0, 0.3)) - 16.0) < 1e-9
    assert cf.empirical_cdf([3.0, 1.0, 2.0])[-1] == (3.0, 1.0)

    env = cf.Environment(scenario)
    obs = env.reset(42)
    assert len(obs) == env.obs_len and env.t == 0
    rng = random.Random(0)
    for _ in range(20):
        action = [[rng.random() for _ in range(19)] for _ in range(6)]
        out = env.step(action)
        assert 0.0 <= out["q3"] <= 1.0 and len(out["obs"]) == 138
    out = env.step_baseline("closest")
    assert all(len(c) <= 1 for c in out["clusters"])
    out = env.step_baseline("opportunistic")
    assert env.t == 22

    try:
        env.step([[2.0] * 19] * 6)
    except ValueError as err:
        assert "input-range" in str(err)
    else:
        raise AssertionError("out-of-range action accepted")

    report = cf.validate_outage(cases=5, samples=100_000, seed=3)
    assert report["all_pass"], report

    print(f"pycellfree smoke test passed (protocol v{cf.PROTOCOL_VERSION}, last reward {out['reward']:.4f})")


if __name__ == "__main__":
    main()
