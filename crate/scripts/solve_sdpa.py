#!/usr/bin/env python3
"""Solve a `.dat-s` file with an independent solver (cvxpy + Clarabel/SCS).

Usage: solve_sdpa.py FILE.dat-s [--solver CLARABEL]

Prints the SDPA optimum `min c'x` and, for files written by `chanfid export`,
the corresponding maximization value `-min + offset` as JSON.
"""
import argparse
import json
import re

import cvxpy as cp
import numpy as np
import scipy.sparse as sp


def read_sdpa(path):
    comments, body = [], []
    with open(path) as f:
        for line in f:
            s = line.strip()
            if not s:
                continue
            if s[0] in '*"':
                if not body:
                    comments.append(s[1:].strip())
                continue
            body.append(s)
    tok = lambda s: [t for t in re.split(r"[\s,(){}]+", s) if t]
    m = int(tok(body[0])[0])
    nblocks = int(tok(body[1])[0])
    struct = [int(t) for t in tok(body[2])][:nblocks]
    c = np.array([float(t) for t in tok(body[3])][:m])
    entries = [tok(l) for l in body[4:]]
    return comments, m, struct, c, entries


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("file")
    ap.add_argument("--solver", default="CLARABEL")
    args = ap.parse_args()
    comments, m, struct, c, entries = read_sdpa(args.file)
    offset = 0.0
    for line in comments:
        mo = re.match(r"maximize c'w \+ (\S+)", line)
        if mo:
            offset = float(mo.group(1))

    x = cp.Variable(m)
    # per block, per matrix index: sparse triplets
    trip = [dict() for _ in struct]
    for mat, blk, i, j, v in entries:
        mat, blk, i, j, v = int(mat), int(blk) - 1, int(i) - 1, int(j) - 1, float(v)
        rows, cols, vals = trip[blk].setdefault(mat, ([], [], []))
        rows.append(i); cols.append(j); vals.append(v)
        if i != j:
            rows.append(j); cols.append(i); vals.append(v)

    cons = []
    for b, size in enumerate(struct):
        n = abs(size)
        if size < 0:
            # diagonal block: F(x)_kk = sum_i x_i F_i,kk - F_0,kk >= 0
            A = sp.lil_matrix((n, m))
            f0 = np.zeros(n)
            for mat, (rows, cols, vals) in trip[b].items():
                for r, v in zip(rows, vals):
                    if mat == 0:
                        f0[r] += v
                    else:
                        A[r, mat - 1] += v
            cons.append(sp.csr_matrix(A) @ x - f0 >= 0)
        else:
            # vec(F(x)) = sum_i x_i vec(F_i) - vec(F_0)
            A = sp.lil_matrix((n * n, m))
            f0 = np.zeros(n * n)
            for mat, (rows, cols, vals) in trip[b].items():
                for r, cc, v in zip(rows, cols, vals):
                    if mat == 0:
                        f0[r * n + cc] += v
                    else:
                        A[r * n + cc, mat - 1] += v
            F = cp.reshape(sp.csr_matrix(A) @ x - f0, (n, n), order="C")
            cons.append((F + F.T) / 2 >> 0)
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    prob.solve(solver=args.solver)
    print(json.dumps({
        "status": prob.status,
        "sdpa_optimum": prob.value,
        "value": -prob.value + offset,
        "solver": args.solver,
    }))


if __name__ == "__main__":
    main()
