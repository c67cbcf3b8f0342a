#!/usr/bin/env python3
"""Write a PYPOWER case as a MatPower-style .m case file (bus/gen/branch only).

usage: export_matpower_case.py case118 > tests/data/case118.m
"""
import importlib
import sys


def fmt(v):
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def main():
    name = sys.argv[1]
    ppc = getattr(importlib.import_module("pypower." + name), name)()
    out = sys.stdout
    out.write(f"function mpc = {name}\n")
    out.write(f"%{name.upper()}  Power flow data (exported from the PYPOWER distribution).\n\n")
    out.write("%% MATPOWER Case Format : Version 2\n")
    out.write("mpc.version = '2';\n\n")
    out.write("%% system MVA base\n")
    out.write(f"mpc.baseMVA = {fmt(ppc['baseMVA'])};\n")
    headers = {
        "bus": "bus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin",
        "gen": "bus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin",
        "branch": "fbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax",
    }
    for key, ncol in (("bus", 13), ("gen", 10), ("branch", 13)):
        out.write(f"\n%% {key} data\n%\t{headers[key]}\n")
        out.write(f"mpc.{key} = [\n")
        for row in ppc[key]:
            out.write("\t" + "\t".join(fmt(v) for v in row[:ncol]) + ";\n")
        out.write("];\n")


if __name__ == "__main__":
    main()
