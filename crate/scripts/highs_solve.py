#!/usr/bin/env python3
"""Solves an LP-format model with HiGHS and prints `name value` lines."""
import sys

import highspy


def main() -> int:
    if len(sys.argv) != 2:
        print("usage: highs_solve.py MODEL.lp", file=sys.stderr)
        return 2
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 0.0)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    if h.readModel(sys.argv[1]) != highspy.HighsStatus.kOk:
        print("cannot read model", file=sys.stderr)
        return 1
    h.run()
    if h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
        print(f"status {h.modelStatusToString(h.getModelStatus())}", file=sys.stderr)
        return 1
    values = h.getSolution().col_value
    lp = h.getLp()
    print(f"objective {h.getInfo().objective_function_value!r}")
    for name, x in zip(lp.col_names_, values):
        print(f"{name} {x!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
