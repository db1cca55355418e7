"""Smoke test for the qsigker Python module.

Build the extension first (see README), then run:  python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import qsigker  # noqa: E402


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


line = qsigker.Path.line([1.0])
flat = qsigker.Path([[0.0], [0.0]])

sig = line.signature(3)
close(sig[""], 1.0, 0.0)
close(sig["1,1,1"], 1.0 / 6.0, 1e-15)

plane = qsigker.Path([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
back = plane.concatenate(plane.reverse())
assert all(abs(v - (k == "")) < 1e-12 for k, v in back.signature(4).items())

value, stderr = qsigker.kernel(line, flat, method="gue-series", depth=16)
close(value, 0.5767248, 1e-6)
assert stderr is None

ie, _ = qsigker.kernel(line, flat, method="gue-integral-eq", h=1 / 128)
close(ie, value, 1e-4)

mc = qsigker.classical_mc(line, matrix_n=64, samples=100, k=64, seed=1)
close(mc[0], value, 4 * mc[2] + 0.01)

q, q_err = qsigker.qsigker_run(line, n_qubits=6, pauli_m=6, k=16, shots=2000, seed=1)
close(q, value, 4 * q_err + 0.02)

gram = qsigker.gram_matrix([line, qsigker.Path.line([0.5])], method="gue-series")
close(gram[0][0], 1.0, 1e-12)
close(gram[0][1], gram[1][0], 0.0)

law = qsigker.sd_law(1, max_degree=8)
assert [round(law[",".join(["1"] * (2 * p))]) for p in range(1, 5)] == [1, 2, 5, 14]
quartic = qsigker.sd_law(1, [([1, 1, 1, 1], 0.01)], max_degree=12)
assert quartic["1,1"] < 1.0

xz = qsigker.PauliString("X") * qsigker.PauliString("Z")
assert str(xz) == "-iY", str(xz)
assert qsigker.PauliString("II").trace() == (1.0, 0.0)

p = qsigker.dqc1_probability([(qsigker.PauliString("XZ"), 0.3)])
close(p, 0.5 * (1 - math.cos(0.3)), 1e-12)

assert qsigker.word_counts(3, 2) == (21, 18)

try:
    qsigker.Path([[0.0], [1.0]], times=[1.0, 0.0])
except ValueError:
    pass
else:
    raise AssertionError("decreasing times must be rejected")

print("python smoke test: ok")
