#!/usr/bin/env python3
"""Solve an MPS file with HiGHS and write an emdarp solution file.

Usage: highs_solve.py MODEL.mps SOLUTION.txt [TIME_LIMIT_SECS]

Exit codes: 0 when a solution file was written, 2 when the model is
infeasible, 3 when no incumbent was found within the limit.
"""

import sys

import highspy


def main() -> int:
    if len(sys.argv) < 3:
        print(__doc__, file=sys.stderr)
        return 64
    model_path, solution_path = sys.argv[1], sys.argv[2]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 1e-9)
    if len(sys.argv) > 3:
        h.setOptionValue("time_limit", float(sys.argv[3]))
    if h.readModel(model_path) != highspy.HighsStatus.kOk:
        print(f"cannot read {model_path}", file=sys.stderr)
        return 65
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kInfeasible:
        return 2
    info = h.getInfo()
    if info.primal_solution_status != 2:
        return 3
    label = "optimal" if status == highspy.HighsModelStatus.kOptimal else "feasible"
    values = h.getSolution().col_value
    lp = h.getLp()
    with open(solution_path, "w") as f:
        f.write(f"status {label}\n")
        f.write(f"objective {info.objective_function_value!r}\n")
        for name, v in zip(lp.col_names_, values):
            f.write(f"{name} {v!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
