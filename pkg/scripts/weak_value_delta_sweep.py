"""Postselected pointer mean versus Re A_w as the pointer width grows."""

import argparse
import math

import numpy as np

from eik import weak as wk

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--theta", type=float, default=0.4, help="postselection angle in units of pi")
    p.add_argument("--deltas", type=float, nargs="+", default=[5, 10, 20, 40, 80, 160])
    args = p.parse_args()
    th = args.theta * math.pi
    sys_ = wk.SystemPrep(np.array([1, 1]) / math.sqrt(2), np.array([1.0, -1.0]))
    post = wk.PostselectionSpec(np.array([math.cos(th), math.sin(th)]))
    print("delta,weak_value_re,position_mean,error,error_times_delta_sq,regime_ok")
    for delta in args.deltas:
        r = wk.weak_value_pointer_distributions(sys_, post, wk.PointerModel.for_system(sys_, delta))
        err = r.position_mean - r.weak_value.real
        print(f"{delta:g},{r.weak_value.real:.10f},{r.position_mean:.10f},{err:.3e},{err * delta ** 2:.4f},{r.regime_ok}")
