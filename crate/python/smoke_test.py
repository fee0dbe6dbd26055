"""Smoke test for the jnspace_py extension.

Builds the cdylib with cargo, copies it next to a temporary import path and
exercises every exported entry point.
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_module() -> Path:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "jnspace-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libjnspace_py.so"
    dest = Path(tempfile.mkdtemp()) / "jnspace_py.so"
    shutil.copy(lib, dest)
    return dest.parent


def close(a: float, b: float, tol: float = 1e-12) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b), 1.0)


def main() -> int:
    sys.path.insert(0, str(build_module()))
    import jnspace_py as jp

    params = jp.Params()
    const = jp.Grid(1, 1, 3, [-3.0] * 8)
    value, packing = jp.jn_norm(const, params)
    assert close(value, 3.0 * math.sqrt(2.0)), value
    assert packing in (["L0[0]"], ["L1[0]", "L1[1]"]), packing
    assert jp.big_jn_norm(const, params)[0] <= 1e-12

    spike = jp.Grid.generate("spike", depth=2)
    assert spike.values == [4.0, 0.0, 0.0, 0.0]
    assert close(jp.jn_norm(spike, params)[0], math.sqrt(2.0))
    assert close(jp.campanato_norm(spike, params)[0], 2.0)
    assert close(jp.lp_norm(spike, 2.0), 2.0)
    assert close(jp.weak_norm(spike, 1.0), 1.0)
    assert jp.project(spike, 0, [0]) == [1.0] * 4
    for s, c in [(0, 1.0), (1, 4.0), (2, 9.0)]:
        assert close(jp.projection_constant(s, 1), c, 1e-10)

    cz = jp.cz_summary(spike, ctilde=3.0, gamma=1.0)
    assert cz["levels"] == 2 and cz["level_sets_exact"], cz

    f = jp.Grid.generate("random", m=1, depth=4, seed=7)
    dual = jp.dual_ratio(f, c0=0.5)
    assert dual["lower_threshold"] <= dual["ratio"] <= dual["norm"] * (1 + 1e-12), dual

    h = jp.Grid.generate("haar-sum", n=2, depth=3, seed=9)
    assert jp.Grid.from_bytes(h.to_bytes(True)).values == h.values
    assert jp.Grid.generate("haar-sum", n=2, depth=3, seed=9).values == h.values

    ok, table = jp.verify("oracle", seed=42, trials=3)
    assert ok and table[1][2], table
    try:
        jp.verify("oracle", trials=0)
    except ValueError:
        pass
    else:
        raise AssertionError("zero trials accepted")

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
