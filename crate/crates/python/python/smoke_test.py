"""Smoke test for the phonon_hop_py extension module."""

import math

import phonon_hop_py as ph


def main():
    trap = ph.TrapConfig(2.87e6, 213e3)
    kappa = trap.hopping_rate()
    chi = trap.kerr_chi()
    nbar = trap.mean_stretch_occupation()
    assert abs(kappa / (2 * math.pi) - 7.9e3) < 100, kappa
    assert chi < 0
    assert abs(trap.distance("length_scale") - 12.5e-6) < 0.2e-6

    spectrum = trap.mode_spectrum()
    assert abs(spectrum["omega_stretch"] - math.sqrt(3) * trap.omega_z) < 1e-6 * trap.omega_z

    probs = ph.thermal_distribution(nbar)
    assert abs(sum(probs) - 1) < 1e-11

    times = [i * 2e-6 for i in range(2000)]
    summed = ph.hopping_signal(kappa, chi, nbar, times)
    closed = ph.closed_form_signal(kappa, chi, nbar, times)
    assert max(abs(a - b) for a, b in zip(summed, closed)) < 1e-9

    t = 1e-3
    assert abs(ph.evolve_single_phonon(kappa, chi, 3, t) - math.sin((kappa - 3 * chi) * t / 2) ** 2) < 1e-12
    mc = ph.monte_carlo_signal(kappa, chi, nbar, times[:50], 2000, 1)
    assert len(mc) == 50

    metrics = trap.coherence_metrics()
    assert 0.1 < metrics["decay_time"] < 0.12
    contrast, _ = ph.envelope(chi, nbar, metrics["decay_time"])
    assert abs(contrast - math.exp(-1)) < 1e-8

    truth = dict(a=0.45, b=500.0, c=2 * math.pi * 7900, d=0.3)
    grid = [i * 1e-5 for i in range(400)]
    values = [truth["a"] * math.exp(-truth["b"] * s) * math.sin(truth["c"] * s + truth["d"]) for s in grid]
    fit = ph.fit_damped_sine(grid, values)
    assert fit["converged"]
    for key, value in truth.items():
        assert abs(fit[key] / value - 1) < 1e-8, (key, fit[key])

    try:
        ph.TrapConfig(100e3, 213e3)
    except ValueError:
        pass
    else:
        raise AssertionError("inverted trap accepted")

    print("smoke test passed:", trap, f"tau = {metrics['decay_time']:.4f} s")


if __name__ == "__main__":
    main()
