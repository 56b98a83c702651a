#!/usr/bin/env python3
"""Extract curves.tsv from PARI's elldata package (Cremona's tables).

Every curve of each requested conductor is written, preceded by a
'#complete <N>' header; elldata covers all isogeny classes of conductor
below 500000.

With --ap, a trailing column lists a_q for primes q < 100 of good
reduction, computed by PARI's ellap.

Usage: gen_curves.py --elldata <dir> --out data/curves.tsv [--ap] N1 N2 ...
"""
import argparse
import os
import re

ENTRY = re.compile(r'\["(\d+[a-z]+\d+)",\[(-?\d+),(-?\d+),(-?\d+),(-?\d+),(-?\d+)\]')


def curves_of(elldata, conductor):
    path = os.path.join(elldata, "ell%d" % (conductor // 1000))
    text = open(path).read()
    start = text.find("[%d,[" % conductor)
    if start < 0:
        return []
    depth, end = 0, start
    for end in range(start, len(text)):
        depth += {"[": 1, "]": -1}.get(text[end], 0)
        if depth == 0:
            break
    block = text[start:end + 1]
    return [(m.group(1), [int(m.group(i)) for i in range(2, 7)]) for m in ENTRY.finditer(block)
            if re.match(r"%d[a-z]" % conductor, m.group(1))]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--elldata", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--ap", action="store_true")
    ap.add_argument("levels", nargs="+", type=int)
    args = ap.parse_args()
    pari = None
    if args.ap:
        import cypari2
        pari = cypari2.Pari()
    with open(args.out, "w") as out:
        for n in args.levels:
            out.write("#complete %d\n" % n)
            for label, a in curves_of(args.elldata, n):
                cols = list(map(str, a))
                if pari is not None:
                    e = pari.ellinit(a)
                    cols.append(",".join("%d:%d" % (q, int(pari.ellap(e, q)))
                                         for q in range(2, 100)
                                         if pari.isprime(q) and n % q))
                out.write("%s\t%d\t%s\n" % (label, n, "\t".join(cols)))


if __name__ == "__main__":
    main()
