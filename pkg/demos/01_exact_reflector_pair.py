"""The reference reflector pair and the cost it solves.

An ellipsoid with one focus at the source sends every ray to a paraboloid
that turns it straight down.  The pair is known in closed form, which makes
it a clean target for the discrete solver: this script checks the optical
path, the cost identity and the energy balance before any LP is built.

Run with ``python demos/01_exact_reflector_pair.py``.
"""

# %%
import numpy as np

from reflector_ot.analytic import default_dataset, gamma, jacobian, rho_exact, z_exact
from reflector_ot.geometry import cost_K, log_cost, rho_tilde, z_tilde
from reflector_ot.meshgen import cap_mesh, disk_mesh, integrate, integrate_on_aperture

ds = default_dataset()
pair, cfg = ds.pair, ds.config
print(f"ell = {cfg.ell:.4f}, cap radius {ds.cap_planar_radius}, disk radius {ds.disk_radius:.4f}")

# %% [markdown]
# A handful of directions in the lower cap and where the pair sends them.

# %%
rng = np.random.default_rng(0)
r = 0.8 * np.sqrt(rng.uniform(0, 1, 6))
t = rng.uniform(0, 2 * np.pi, 6)
m = np.column_stack([r * np.cos(t), r * np.sin(t), -np.sqrt(1 - r * r)])
x = gamma(pair, m)
for mi, xi in zip(m, x):
    print(f"m = ({mi[0]:+.3f}, {mi[1]:+.3f}, {mi[2]:+.3f}) -> x = ({xi[0]:+.3f}, {xi[1]:+.3f})")

# %% [markdown]
# Source to first mirror to second mirror to the output plane: the reduced
# path length is the same constant for every ray.

# %%
p1 = rho_exact(pair, m)[:, None] * m
p2 = np.column_stack([x, z_exact(pair, x)])
path = np.linalg.norm(p1, axis=1) + np.linalg.norm(p2 - p1, axis=1) + p2[:, 2]
print("path - ell:", np.abs(path - cfg.ell).max())

# %% [markdown]
# The transformed radii multiply to the cost along the ray map and stay
# above it everywhere else.  That is what makes them a dual optimum.

# %%
prod = rho_tilde(cfg, rho_exact(pair, m), m) * z_tilde(cfg, z_exact(pair, x), x)
print("tightness:", np.abs(prod / cost_K(cfg, m, x) - 1).max())
rx = ds.disk_radius * np.sqrt(rng.uniform(0, 1, 200))
tx = rng.uniform(0, 2 * np.pi, 200)
xs = np.column_stack([rx * np.cos(tx), rx * np.sin(tx)])
slack = (np.log(rho_tilde(cfg, rho_exact(pair, m), m))[:, None]
         + np.log(z_tilde(cfg, z_exact(pair, xs), xs))[None, :]
         - log_cost(cfg, m[:, None, :], xs[None, :, :]))
print("min slack over 6 x 200 pairs:", slack.min())

# %% [markdown]
# Energy in equals energy out, both numerically and in closed form.

# %%
print("ray-map Jacobian near the pole:", jacobian(pair, np.array([0.01, 0.0])))
e_in = integrate_on_aperture(cap_mesh(0.8, 0.08), ds.I)
e_out = integrate(disk_mesh(ds.disk_radius, 0.08), ds.L)
print(f"int I = {e_in:.6f}, int L = {e_out:.6f}, pi (17/9)^2 = {np.pi * (17 / 9) ** 2:.6f}")
