"""Pinned sign conventions and measured normalization constants.

Every graded operation in this package derives its signs from one anchor:

* ``sharp`` contracts a 1-form into the **first slot** of a bivector,
  ``i_a(A ^ B) = a(A) B - a(B) A``.  Anchor: on the 2-torus chart with
  ``pi = d/dp1 ^ d/dp2`` and ``h = -cos(3 p1 - 2 p2)`` this reproduces
  ``pi#dh = sin(3 p1 - 2 p2) (2 d/dp1 + 3 d/dp2)`` with factor exactly 1,
  and consequently ``(Y ^ X)#dh = X`` whenever ``dh(Y) = 1, dh(X) = 0``.

* The interior product of a decomposable multivector applies vector
  contractions right to left, ``i_{A^B} = i_A o i_B``.  In particular
  ``i_{d/dx1 ^ d/dx2}(dx1 ^ dx2) = -1``: top-degree pairings carry a global
  sign relative to the naive guess, and the volume correspondence
  ``i_pi Omega = rho`` reads ``rho(complement(i,j)) = E (-1)^(i+j) pi^(ij)``
  on 1-based indices.

* The rank matrix of an (m-2)-form uses the same complementary-pair signs,
  ``rho_ij = (-1)^(i+j) coeff(complement(i, j))``; the rank itself does not
  depend on this choice.

* The Schouten bracket expands decomposables as
  ``[A, B] = sum (-1)^(s+t) [a_s, b_t] ^ (rest of A) ^ (rest of B)``
  (1-based slots).  With the anchors above the decomposable identity
  ``[Y^X, Y^X] = 2 [X,Y] ^ X ^ Y`` and the conformal identity
  ``[f pi, f pi] = -2 f (pi#df) ^ pi`` hold exactly as stated.

The two constants below are *measurements*, not choices: they are obtained
by running the recovery oracles on fixed instances and are re-measured by
the acceptance suite, which fails if a measurement drifts or becomes
inconsistent across fixtures.
"""

from fractions import Fraction

# Sign of the modular vector field of the primitive companion bivector:
# for the unimodularization data i_X Omega = d rho, the bivector pi_rho with
# i_{pi_rho} Omega = rho has modular field sigma * X with respect to Omega.
# (The rescaled structure i_pi Omega = a*rho is unimodular: its own modular
# field with respect to Omega vanishes identically.)
# Measured on the divergence-free fixtures in tests/test_acceptance.py.
MODULAR_SIGN = -1

# Proportionality constant recovered for the constant-coefficient linear
# construction when the quadratic Hamiltonian is assembled as
# h = (1/2) x^T (W A) x from the leaf-wise symplectic matrix W:
# pi#dh = LINEAR_FR_LAMBDA * X on the nilpotent-coupling instances
# (A = E_12 with P = e_2 on R^3, and A = E_12 + E_34 with P = (e_2, e_4)
# on R^4).  The constant is instance-class dependent in general; the
# acceptance suite pins it on these two fixtures.
LINEAR_FR_LAMBDA = Fraction(-1, 2)

# i_{d/dx1 ^ d/dx2}(dx1 ^ dx2), recorded for reference.
TOP_PAIRING_SIGN = -1
