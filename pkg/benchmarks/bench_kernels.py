"""Time the compiled element kernels against the numpy fallback.

    python benchmarks/bench_kernels.py --h 0.05 0.03 --repeat 3
"""
import argparse
import timeit

import numpy as np

from abpoles import kernels
from abpoles.geometry import PoleConfig, crack_polylines, default_domain
from abpoles.mesh import generate
from abpoles.quadrature import collapsed_rule, triangle_rule


def setup_case(h):
    cfg = PoleConfig.from_lists([0.9, 0.9], [-1.0, 1.0], [0.2, 0.2])
    dom = default_domain()
    mesh = generate(dom, crack_polylines(cfg, dom, 0.1), h, 6.25)
    P = mesh.base.points[mesh.base.triangles]
    qb, qw = triangle_rule(4)
    sb, sw = collapsed_rule(4)
    pole_local = -np.ones(len(P), dtype=np.int64)
    return P, (P, cfg.positions(0.1), cfg.rhos, pole_local, qb, qw, sb, sw)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--h", type=float, nargs="+", default=[0.08, 0.04])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the fallback only")
    print(f"{'h':>6} {'elements':>9} {'kernel':>9} " + " ".join(f"{b + ' [ms]':>14}" for b in backends) + "  speedup")
    for h in args.h:
        P, margs = setup_case(h)
        for name, fn, fargs in (("p1", kernels.p1_elements, (P,)), ("magnetic", kernels.magnetic_elements, margs)):
            times = []
            for b in backends:
                t = min(timeit.repeat(lambda: fn(*fargs, backend=b), number=1, repeat=args.repeat))
                times.append(1e3 * t)
            speed = f"{times[0] / times[-1]:8.1f}x" if len(times) > 1 else ""
            print(f"{h:6.3f} {len(P):9d} {name:>9} " + " ".join(f"{t:14.2f}" for t in times) + f"  {speed}")


if __name__ == "__main__":
    main()
