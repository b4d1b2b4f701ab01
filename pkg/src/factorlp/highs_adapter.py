"""Bridge for ``--external-solver``: solve an LP file with HiGHS.

Usage: ``python -m factorlp.highs_adapter model.lp``. Needs the optional
``highspy`` package. Prints the line protocol read by
:func:`factorlp.linprog.solve_external`.
"""
import sys


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(argv[0])
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kUnboundedOrInfeasible:
        # presolve cannot tell the two apart; the plain simplex can
        h.setOptionValue("presolve", "off")
        h.run()
        status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kOptimal:
        print("status optimal")
        print(f"objective {h.getInfo().objective_function_value!r}")
        lp = h.getLp()
        for name, value in zip(lp.col_names_, h.getSolution().col_value):
            print(f"{name} {value!r}")
    elif status == highspy.HighsModelStatus.kInfeasible:
        print("status infeasible")
    elif status == highspy.HighsModelStatus.kUnbounded:
        print("status unbounded")
    else:
        print(f"unexpected HiGHS status {status}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
