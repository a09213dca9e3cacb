# Stokes algebra of a pure field and of an analyzer matrix.
#
# A field with amplitude A and polarization angle beta maps to a Stokes
# vector on the sphere of radius A^2. A Hermitian matrix maps to a "matrix
# Stokes" vector P whose length is the gap between its eigenvalues, and its
# eigenvectors are exactly the states lying along +P and -P.
import math

import numpy as np

from qpol import (
    FieldState,
    HermitianAnalyzerMatrix,
    Kind,
    StokesS,
    eigenstate_residuals,
    eigenvalues,
    field_to_stokes,
    matrix_to_stokes,
    rotate_stokes,
)

field = FieldState(amplitude=2.0, beta=math.pi / 6)
s = field_to_stokes(field)
print("S of A=2, beta=30 deg:", np.round(s.as_array(), 6))
print("  |S_vec| / s0 =", np.linalg.norm(s.spatial()) / s.s0)

m = HermitianAnalyzerMatrix(a=3.0, d=1.0, h=2.0, phi=0.0)
p = matrix_to_stokes(m)
pair = eigenvalues(m)
print("\nP of [[3, 2], [2, 1]]:", np.round([p.p0, p.p1, p.p2, p.p3], 6))
print("  eigenvalues:", pair.lambda_plus, pair.lambda_minus, " gap:", pair.lambda_plus - pair.lambda_minus)

# Compare with numpy's solver: the Stokes vectors of its eigenvectors sit on +/-P.
values, vecs = np.linalg.eigh(m.as_array())
for column, branch in ((1, +1), (0, -1)):
    eig_state = field_to_stokes(FieldState.from_components(vecs[:, column]))
    r = eigenstate_residuals(eig_state, p, branch)
    print(f"  branch {branch:+d}: residuals", ["%.1e" % x for x in r])

# Rotating an analyzer by theta turns the Poincare vector by 2 theta for a
# vector (polarizer-like) analyzer and by theta for a spinor one.
h = StokesS(1, 1, 0, 0)
for kind in Kind:
    print(f"\nrotate H by 45 deg ({kind.name.lower()}):", np.round(rotate_stokes(h, math.pi / 4, kind).as_array(), 6))
