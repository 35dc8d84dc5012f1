"""Smoke test for the pyselfsim extension module.

Uses an installed `pyselfsim` if importable; otherwise loads the shared
library from target/release (or target/debug) after `cargo build -p selfsim-py`.
"""

import importlib
import math
import pathlib
import shutil
import sys
import tempfile


def load():
    try:
        return importlib.import_module("pyselfsim")
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent
    for profile in ("release", "debug"):
        for name in ("libpyselfsim.so", "libpyselfsim.dylib", "pyselfsim.dll"):
            lib = root / "target" / profile / name
            if lib.exists():
                tmp = pathlib.Path(tempfile.mkdtemp())
                suffix = ".pyd" if name.endswith(".dll") else ".so"
                shutil.copy(lib, tmp / ("pyselfsim" + suffix))
                sys.path.insert(0, str(tmp))
                return importlib.import_module("pyselfsim")
    sys.exit("pyselfsim not found: run `cargo build --release -p selfsim-py` first")


def main():
    m = load()

    pr = m.make_params(2, 1.6)
    assert abs(pr["w_star"] - 8.0) < 1e-12, pr
    assert abs(m.make_params(1, 1.5)["w_star"] - 16.0 / 3.0) < 1e-12

    tc = m.theory_constants(2, 1.6, 1.0)
    assert abs(tc["b_star"] - 8.0 / 3.0) < 1e-12, tc

    try:
        m.make_params(2, 2.5)
    except ValueError:
        pass
    else:
        raise AssertionError("p = 2.5 accepted")

    assert m.classify(2, 1.6, 0.05)["verdict"] == "C"
    assert m.classify(2, 1.6, 10.0)["verdict"] == "A"

    rep = m.find_beta_star(2, 1.6, tol=1e-8)
    assert rep["bracket_hi"] - rep["bracket_lo"] <= 1e-8
    assert 0.05 < rep["beta_star"] < 10.0

    prof = m.integrate_profile(1, 1.5, 1.0)
    assert prof["f"][0] > 0.999 and len(prof["r"]) == len(prof["E"])
    assert all(b <= a + 1e-9 for a, b in zip(prof["E"], prof["E"][1:]))

    phi = m.solve_phi(2, 1.6, 0.05, xi_max=1e10)
    assert phi["regime"] == "Unbounded"
    assert all(0.0 < y < 4.0 * x for x, y in zip(phi["xi"], phi["phi"]))

    fit = m.fit_tail(2, 1.6, 0.05, "K_C")
    assert fit["rel_err"] < 0.05, fit

    res = m.pde_residual(2, 1.6, 0.05, t_steps=50, r_steps=50)
    assert math.isfinite(res["sup_residual"]) and res["refinement_order"] > 1.8, res

    print("pyselfsim smoke test OK (beta_star = %.10f)" % rep["beta_star"])


if __name__ == "__main__":
    main()
