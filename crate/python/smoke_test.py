"""Smoke test for the fidsus extension module.

Build and install it first:

    cd crates/python && maturin build --release -o dist && pip install dist/fidsus-*.whl
"""

import json
import math
import tempfile
from pathlib import Path

import fidsus


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    m = fidsus.Model("tfim", 4, 0.8)
    e0, gap = m.ground()
    assert gap > 0
    chi = m.chi_f_exact()
    close(chi, m.chi_f_resolvent(), 1e-10)
    close(m.chi_f_finite_difference(), chi, 1e-3 * chi)
    close(m.qfi_exact(), 4 * chi, 1e-12)
    h = m.hamiltonian()
    assert len(h) == 16 and isinstance(h[0][0], complex)

    rep = fidsus.estimate_chi_f(m, 0.05, seed=3)
    close(rep.oracle_values["sum_over_states"], chi, 1e-12)
    assert rep.total_queries > 0 and rep.k >= 1
    assert json.loads(rep.to_json())["seed"] == 3
    print(f"chi_F exact {chi:.6f}  estimate {rep.chi_f_hat:.6f}  K = {rep.k}")

    p = fidsus.fit_inverse(0.125, 1e-3)
    max_abs, parity_defect, sup_error = p.check()
    assert max_abs <= 1 + 1e-9 and parity_defect < 1e-12 and sup_error <= 1e-3
    close(p(0.5), 0.75 * 0.125 / 0.5, 1e-3)
    assert fidsus.Polynomial.from_json(p.to_json()).degree == p.degree

    close(fidsus.amplitude_estimate(0.5, 4), 0.5, 1e-15)
    hits = sum(
        abs(fidsus.amplitude_estimate(0.3, 64, seed=s) - 0.3) <= fidsus.qae_bound(0.3, 64)
        for s in range(100)
    )
    assert hits >= 78, hits

    xs = [0.1 * i for i in range(11)]
    lam_c, curv, _, boundary = fidsus.detect_peak([(x, -(x - 0.43) ** 2) for x in xs])
    close(lam_c, 0.43, 1e-10)
    assert curv < 0 and not boundary

    config = """
eps = 0.05
seeds = [0]
mode = "exact_only"

[model]
family = "tfim"
n_qubits = 4

[grid]
start = 0.2
stop = 1.6
step = 0.2

[outputs]
csv = "sweep.csv"
svg = "sweep.svg"
"""
    with tempfile.TemporaryDirectory() as d:
        rows = fidsus.run_sweep(config, d)
        assert len(rows) == 8 and all(r["status"] == "ok" for r in rows)
        assert (Path(d) / "sweep.svg").read_text().startswith("<svg")

    for name, declared, err, ok in fidsus.verify_encodings(m, 1e-3):
        assert ok, (name, declared, err)

    try:
        fidsus.Model("tfim", 3, 0.0).chi_f_exact()
    except fidsus.FidsusError as e:
        assert "degenerate" in str(e)
    else:
        raise AssertionError("degenerate ground state accepted")

    try:
        fidsus.Model("ising", 3)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown family accepted")

    assert not math.isnan(fidsus.static_susceptibility_exact(m))
    print("ok")


if __name__ == "__main__":
    main()
