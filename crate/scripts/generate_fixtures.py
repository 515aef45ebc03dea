#!/usr/bin/env python3
"""Regenerate crates/core/fixtures/golden.json with numpy/mpmath.

The expected values are computed here, independently of the Rust code.
Choi operators are unnormalized (trace d_I) with index order (input, output)
and |K>>_(i,o) = K[o, i].
"""
import json
from pathlib import Path

import mpmath as mp
import numpy as np

rng = np.random.default_rng(20260101)
OUT = Path(__file__).resolve().parent.parent / "crates/core/fixtures/golden.json"


def pairs(m):
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).reshape(-1)]


def choi_json(c, d_i, d_o):
    return {"d_I": d_i, "d_O": d_o, "matrix": pairs(c)}


def choi_from_kraus(ks, d_i, d_o):
    c = np.zeros((d_i * d_o, d_i * d_o), complex)
    for k in ks:
        v = k.T.reshape(-1)  # (i, o) row-major from K[o, i]
        c += np.outer(v, v.conj())
    return c


def haar_isometry(d_in, d_out):
    g = (rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / abs(np.diag(r)))


def purification(d_i, d_o, d_e):
    v = haar_isometry(d_i, d_o * d_e)  # rows (o, e), columns i
    return v.T.reshape(-1)  # (i, o, e)


def psd_sqrt(m):
    w, u = np.linalg.eigh(m)
    return (u * np.sqrt(np.clip(w, 0, None))) @ u.conj().T


def rec(name, op, inp, expected, tol, source):
    return {"name": name, "op": op, "input": inp, "expected": expected, "tolerance": tol, "source": source}


def purity_fraction(d_i, d_o, d_e):
    num = d_i * d_o * (d_e**2 - 1) + d_i**2 * d_e * (d_o**2 - 1)
    return mp.mpf(num) / (d_o**2 * d_e**2 - 1)


def mp_mu_quad(c):
    lo, hi = (1 - mp.sqrt(c)) ** 2, (1 + mp.sqrt(c)) ** 2
    f = lambda x: mp.sqrt(x) * mp.sqrt((hi - x) * (x - lo)) / (2 * mp.pi * c * x)
    return mp.quad(f, [lo, hi])


records = []

records.append(rec("depolarizing qubit channel", "depolarizing_choi", {"d_I": 2, "d_O": 2},
                   choi_json(np.eye(4) / 2, 2, 2), 1e-15, "reference"))
records.append(rec("depolarizing state preparation", "depolarizing_choi", {"d_I": 1, "d_O": 3},
                   choi_json(np.eye(3) / 3, 1, 3), 1e-15, "trivial"))

for dims, source in [((2, 2, 2), "derived"), ((2, 2, 4), "reference"), ((2, 2, 1), "trivial"), ((3, 2, 5), "derived")]:
    records.append(rec(f"average purity {dims}", "avg_purity", dict(zip(["d_I", "d_O", "d_E"], dims)),
                       {"value": float(purity_fraction(*dims))}, 1e-14, source))

records.append(rec("depolarizing error isometric qubits", "eps_dep", {"d_I": 2, "d_O": 2, "d_E": 1},
                   {"value": 3.0}, 1e-15, "reference"))
records.append(rec("depolarizing error state preparation", "eps_dep", {"d_I": 1, "d_O": 2, "d_E": 2},
                   {"value": 0.75}, 1e-15, "derived"))
records.append(rec("maximally mixed environment at full rank", "eps_avg_ue", {"d_I": 2, "d_O": 2, "d_E": 4},
                   {"value": float(4 - purity_fraction(2, 2, 4) / 4)}, 1e-14, "reference"))
records.append(rec("purity at full rank qubits", "purity_at_full_rank", {"d_I": 2, "d_O": 2},
                   {"value": float(purity_fraction(2, 2, 4))}, 1e-14, "derived"))

records.append(rec("square-root moment at square ratio", "mp_mu", {"c": 1.0},
                   {"value": float(8 / (3 * mp.pi))}, 1e-12, "reference"))
for c in [0.25, 0.6]:
    records.append(rec(f"square-root moment c={c}", "mp_mu", {"c": c},
                       {"value": float(mp_mu_quad(mp.mpf(c)))}, 1e-10, "derived"))

# Random channel round trips.
v = purification(2, 2, 3)
m = v.reshape(4, 3)
c = m @ m.conj().T
records.append(rec("random Choi round trip", "choi_roundtrip", {"choi": choi_json(c, 2, 2)},
                   choi_json(c, 2, 2), 1e-15, "trivial"))
records.append(rec("random purification marginal", "purification_marginal",
                   {"purification": {"d_I": 2, "d_O": 2, "d_E": 3, "vector": pairs(v)}},
                   choi_json(c, 2, 2), 1e-13, "derived"))

gamma = 0.3
k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], complex)
k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], complex)
ad = choi_from_kraus([k0, k1], 2, 2)
records.append(rec("amplitude damping from Kraus", "choi_from_kraus",
                   {"d_I": 2, "d_O": 2, "kraus": [pairs(k0), pairs(k1)]}, choi_json(ad, 2, 2), 1e-15, "derived"))
records.append(rec("amplitude damping Stinespring marginal", "stinespring_marginal",
                   {"choi": choi_json(ad, 2, 2), "d_E": 2}, choi_json(ad, 2, 2), 1e-12, "trivial"))

h = haar_isometry(3, 3)
rho = h @ np.diag([0.5, 0.3, 0.2]) @ h.conj().T
sigma = np.diag([0.6, 0.25, 0.15]).astype(complex)
f = np.linalg.svd(psd_sqrt(rho) @ psd_sqrt(sigma), compute_uv=False).sum() ** 2
records.append(rec("qutrit fidelity", "fidelity", {"rho": pairs(rho), "sigma": pairs(sigma)},
                   {"value": float(f)}, 1e-12, "derived"))

a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
pt = np.einsum("ajak->jk", a.reshape(2, 3, 2, 3))
records.append(rec("partial trace over the first factor", "partial_trace",
                   {"dims": [2, 3], "keep": [1], "matrix": pairs(a)}, {"matrix": pairs(pt)}, 1e-14, "derived"))

OUT.parent.mkdir(parents=True, exist_ok=True)
OUT.write_text(json.dumps(records, indent=1) + "\n")
print(f"wrote {len(records)} records to {OUT}")
