# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
# ---

# %% [markdown]
# # The special HRF connection on a Randers metric
#
# A walk through the objects the package computes at one chart point:
# the fundamental and Cartan tensors, the canonical spray, the Cartan
# connection, and the horizontally recurrent connection whose recurrence
# form is the normalized support form.

# %%
import numpy as np

from hrfinsler import ChartPoint, LocalGeometry, catalog_metric, curvatures

np.set_printoptions(precision=5, suppress=True)

m = catalog_metric("randers", 2, b=0.2, s=0.3)
p = ChartPoint((0.1, -0.2), (0.8, 0.5))
geom = LocalGeometry(m, p, order=4)
f = geom.field
print("L =", f.L.value)
print("g =\n", f.g.value)

# %% [markdown]
# The Cartan tensor is totally symmetric and annihilated by y.

# %%
C = f.C.value
print("max |C y| =", np.abs(np.einsum("ijk,k->ij", C, p.y)).max())
print("max |C - C^T(1,0,2)| =", np.abs(C - C.transpose(1, 0, 2)).max())

# %% [markdown]
# ## Spray and Barthel connection
#
# For a 2-homogeneous spray the Barthel coefficients satisfy N y = 2G.

# %%
G = geom.spray.value
N = geom.barthel.value
print("G =", G)
print("N y - 2G =", N @ np.asarray(p.y) - 2 * G)

# %% [markdown]
# ## Special HRF connection
#
# The connection is the Cartan connection plus a deformation tensor. Its
# nonlinear part moves by the deformation contracted with y, and on y the
# deformation reduces to -(L/2) times the identity.

# %%
sp = geom.special
D = sp.connection
print("deformation(., y) =\n", np.einsum("ijk,k->ij", sp.deformation.value, p.y))
print("-(L/2) I =\n", -0.5 * f.L.value * np.eye(2))
print("own nonlinear coefficients =\n", D.N.value)

# %% [markdown]
# ## Curvature
#
# The mixed torsion of the special connection never vanishes; here is its
# size relative to L at this point.

# %%
cb = curvatures(D)
print("max |Phat_bar| / L =", np.abs(cb.Phat).max() / f.L.value)
print("h-curvature component R[0, 1, 0, 1] =", cb.R[0, 1, 0, 1])
