#!/usr/bin/env python3
"""Regenerate the bundled instance files in crates/core/instances.

Every group is given by permutation generators (a faithful model used to
build the multiplication table) and matching representation matrices. The
map T uses the regular construction X = Γ × Y with
row(g, y) = v_yᵀ π(g⁻¹), which is covariant by design.
"""
import json
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "instances"


def closure(perm_gens, mat_gens):
    """BFS over words in the generators; returns (perms, mats) with the
    identity first."""
    k = len(perm_gens[0])
    d = mat_gens[0].shape[0]
    ident = tuple(range(k))
    perms = [ident]
    mats = [np.eye(d, dtype=mat_gens[0].dtype)]
    index = {ident: 0}
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for p, m in zip(perm_gens, mat_gens):
                q = tuple(p[x] for x in perms[i])  # p ∘ perms[i]
                if q not in index:
                    index[q] = len(perms)
                    perms.append(q)
                    mats.append(m @ mats[i])
                    nxt.append(index[q])
        frontier = nxt
    table = [[index[tuple(a[x] for x in b)] for b in perms] for a in perms]
    inverse = [row.index(0) for row in table]
    return perms, mats, table, inverse


def realify(c):
    return np.block([[c.real, -c.imag], [c.imag, c.real]])


def rows(m):
    out = []
    for r in np.asarray(m):
        out.append([float(round(x, 15)) + 0.0 for x in r])
    return out


def instance(name, mats, table, inverse, vectors, y_weights, complex_=False, options=None):
    order = len(mats)
    ny = len(vectors)
    names = [f"g{i}" for i in range(order)]
    weights = [w / order for _ in range(order) for w in y_weights]
    t = []
    for g in range(order):
        gi = mats[inverse[g]]
        for v in vectors:
            t.append(np.asarray(v) @ gi)
    group = {
        "kind": "finite",
        "elements": names,
        "mul": [[names[x] for x in row] for row in table],
        "rep": {names[g]: rows(mats[g]) for g in range(order)},
        "action": {
            names[s]: [table[s][g] * ny + y for g in range(order) for y in range(ny)]
            for s in range(order)
        },
    }
    if order == 1:
        group = {"kind": "trivial"}
    doc = {"name": name, "space": {"weights": weights}, "group": group, "T": rows(t)}
    if complex_:
        doc["complex"] = True
    doc["options"] = options or {"levels": 8, "tol": 1e-8, "seed": 0}
    return doc


def conj(mats, a):
    ai = np.linalg.inv(a)
    return [a @ m @ ai for m in mats]


def build():
    docs = []

    docs.append(instance("identity2", [np.eye(2)], [[0]], [0], [[1, 0], [0, 1]], [0.5, 0.5]))

    p = np.array([[1.0, 1.0], [0.0, -1.0]])
    perms, mats, table, inv = closure([(1, 0)], [p])
    docs.append(instance("z2_worked", mats, table, inv, [[1, 0]], [1.0]))

    docs.append(
        instance("skew3", [np.eye(2)], [[0]], [0], [[1, 0], [0.5, 1], [-1, 2]], [0.5, 0.3, 0.2])
    )

    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    perms, mats, table, inv = closure([(1, 2, 3, 0)], [rot])
    docs.append(instance("rot4", mats, table, inv, [[1, 0], [0.5, 0.3]], [0.6, 0.4]))

    c, s = -0.5, np.sqrt(3) / 2
    r3 = np.array([[c, -s], [s, c]])
    f = np.array([[1.0, 0.0], [0.0, -1.0]])
    a = np.array([[1.0, 0.7], [0.0, 1.3]])
    perms, mats, table, inv = closure([(1, 2, 0), (0, 2, 1)], conj([r3, f], a))
    docs.append(
        instance("s3_skew", mats, table, inv, [[1, 0], [0.2, 1], [-0.4, 0.3]], [0.5, 0.3, 0.2])
    )

    r4 = np.zeros((3, 3))
    r4[:2, :2] = rot
    r4[2, 2] = -1.0
    f4 = np.diag([1.0, -1.0, 1.0])
    a = np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.4], [0.3, 0.0, 1.2]])
    perms, mats, table, inv = closure([(1, 2, 3, 0), (0, 3, 2, 1)], conj([r4, f4], a))
    docs.append(
        instance(
            "d4_skew",
            mats,
            table,
            inv,
            [[1, 0.2, 0.5], [0.1, 1, -0.3], [0.4, -0.2, 1], [0.3, 0.3, 0.3]],
            [0.4, 0.3, 0.2, 0.1],
        )
    )

    basis = np.array([[1, -1, 0, 0], [1, 1, -2, 0], [1, 1, 1, -3]], dtype=float).T
    basis /= np.linalg.norm(basis, axis=0)

    def std(perm):
        pm = np.zeros((4, 4))
        for i, j in enumerate(perm):
            pm[j, i] = 1.0
        return basis.T @ pm @ basis

    cyc, swp = (1, 2, 3, 0), (1, 0, 2, 3)
    a = np.array([[1.2, 0.3, 0.0], [0.0, 0.9, 0.2], [0.1, 0.0, 1.0]])
    perms, mats, table, inv = closure([cyc, swp], conj([std(cyc), std(swp)], a))
    docs.append(
        instance("s4_skew", mats, table, inv, [[1, 0.3, -0.2], [0.2, -0.5, 1]], [0.7, 0.3])
    )

    w = np.exp(2j * np.pi / 3)
    ac = np.array([[1.0, 0.4 + 0.3j], [0.2j, 1.1]])
    gen = ac @ np.diag([w, w * w]) @ np.linalg.inv(ac)
    perms, mats, table, inv = closure([(1, 2, 0)], [realify(gen)])
    docs.append(
        instance(
            "z3_complex",
            mats,
            table,
            inv,
            [[1, 0, 0, 0], [0, 1, 0.5, 0], [0.3, 0, 0, 1]],
            [0.5, 0.25, 0.25],
            complex_=True,
        )
    )

    shift = np.roll(np.eye(8), 1, axis=0)
    a = np.eye(8) + 0.3 * np.eye(8, k=1) + 0.1 * np.eye(8, k=-2)
    perms, mats, table, inv = closure([tuple((i + 1) % 8 for i in range(8))], conj([shift], a))
    rng = np.random.default_rng(7)
    vectors = np.round(rng.normal(size=(8, 8)), 3).tolist()
    y_weights = np.array([3, 1, 2, 1, 1, 2, 1, 1], dtype=float)
    docs.append(instance("z8_shift", mats, table, inv, vectors, (y_weights / y_weights.sum()).tolist()))

    a_gen = np.diag([-1.0, -1.0, 1.0, 1.0])
    b_gen = np.diag([-1.0, 1.0, -1.0, 1.0])
    a = np.array(
        [[1.0, 0.2, 0.0, 0.1], [0.0, 1.0, 0.3, 0.0], [0.2, 0.0, 1.0, 0.2], [0.0, 0.1, 0.0, 1.0]]
    )
    perms, mats, table, inv = closure([(1, 0, 3, 2), (2, 3, 0, 1)], conj([a_gen, b_gen], a))
    docs.append(
        instance(
            "klein_weighted",
            mats,
            table,
            inv,
            [[1, 1, 1, 1], [0.5, -0.2, 0.1, 0.7], [0.0, 0.3, -1.0, 0.2]],
            [0.5, 0.3, 0.2],
        )
    )
    return docs


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for doc in build():
        path = OUT / f"{doc['name']}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print(path.name, len(doc["T"]), len(doc["T"][0]))


if __name__ == "__main__":
    main()
