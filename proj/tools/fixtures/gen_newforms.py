#!/usr/bin/env python3
"""Generate newforms.tsv: weight-2 newforms on Gamma0(N) with Hecke
characteristic polynomials for primes q < 100, q coprime to N.

Requires cypari2 (PARI/GP >= 2.13). One level is written at a time, each
preceded by a '#complete <N>' header, so a partial run is still usable.

Usage: gen_newforms.py --out data/newforms.tsv N1 N2 ...
"""
import argparse
import sys
import time

import cypari2


def primes_below(n):
    return [p for p in range(2, n) if all(p % r for r in range(2, int(p ** 0.5) + 1))]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--stack", type=int, default=3 * 10 ** 9)
    ap.add_argument("levels", nargs="+", type=int)
    args = ap.parse_args()

    pari = cypari2.Pari()
    pari.allocatemem(args.stack, silent=True)
    with open(args.out, "a") as out:
        for level in args.levels:
            t0 = time.time()
            pari("mf = mfinit([%d, 2], 0)" % level)
            pari("B = mfeigenbasis(mf)")
            pari("P = mffields(mf)")
            count = int(pari("#B"))
            qs = [q for q in primes_below(100) if level % q]
            rows = []
            for i in range(1, count + 1):
                deg = int(pari("poldegree(P[%d])" % i))
                pari("C = mfcoefs(B[%d], 97)" % i)
                fields = []
                for q in qs:
                    if deg == 1:
                        a = pari("C[%d]" % (q + 1))
                        a = pari("lift(liftpol(%s))" % a) if "Mod" in str(a) else a
                        coeffs = ["1", str(-pari(a))]
                    else:
                        cp = pari("charpoly(Mod(liftpol(C[%d]), P[%d]))" % (q + 1, i))
                        coeffs = [str(c) for c in reversed(list(pari("Vecrev(%s)" % cp)))]
                    fields.append("%d:%s" % (q, ",".join(coeffs)))
                rows.append("%d\t%d.%d\t%d\t%s" % (level, level, i, deg, "\t".join(fields)))
            out.write("#complete %d\n" % level)
            for r in rows:
                out.write(r + "\n")
            out.flush()
            print("level %d: %d newforms in %.1fs" % (level, count, time.time() - t0),
                  file=sys.stderr, flush=True)


if __name__ == "__main__":
    main()
