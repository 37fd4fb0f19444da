"""Matplotlib renderings of the package's geometry.

All entry points draw onto fresh figures and save to the requested path
(format inferred from the suffix; SVG output is made byte-stable by pinning
the hash salt and dropping the date metadata).  Simplex drawings use the
plane embedding from :mod:`thermoctrl.qutrit`.
"""

from __future__ import annotations

import math

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .errors import DomainError, InvalidInputError  # noqa: E402
from .qubit import markov_radius, thermal_radius, time_parameter  # noqa: E402
from .qutrit import (  # noqa: E402
    EMBED,
    invariant_class_region,
    qutrit_generator,
    reachable_set,
    stab_boundary,
    stabilisable_mask,
)
from .toymodel import ToyGenerator  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "thermoctrl"


def _save(fig, path: str | None):
    if path:
        fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    return fig


def draw_simplex(ax, weyl: bool = True):
    """Triangle outline with the symmetry lines of the three-level simplex."""
    v = EMBED.vertices
    loop = np.vstack([v, v[:1]])
    ax.plot(loop[:, 0], loop[:, 1], color="0.2", lw=1.0)
    if weyl:
        for i in range(3):
            mid = 0.5 * (v[(i + 1) % 3] + v[(i + 2) % 3])
            ax.plot([v[i, 0], mid[0]], [v[i, 1], mid[1]], color="0.8", lw=0.7, ls=":")
    ax.set_aspect("equal")
    ax.set_axis_off()
    return ax


def simplex_grid(n: int) -> np.ndarray:
    """Barycentric lattice with n points per edge."""
    pts = []
    for i in range(n):
        for j in range(n - i):
            k = n - 1 - i - j
            pts.append((i, j, k))
    return np.asarray(pts, dtype=float) / (n - 1)


def render_stab_figure(a: float, path: str | None = None, grid: int = 200,
                       gen: ToyGenerator | None = None):
    """Stabilisable set: classified grid backdrop plus the analytic conic arcs."""
    if gen is None:
        gen = qutrit_generator(a)
    fig, ax = plt.subplots(figsize=(6.4, 5.8))
    draw_simplex(ax)
    pts = simplex_grid(grid)
    mask = stabilisable_mask(pts, gen)
    emb = EMBED.embed(pts)
    ax.scatter(emb[mask, 0], emb[mask, 1], s=1.4, c="#7fc8c8", lw=0, rasterized=True)
    try:
        arcs = stab_boundary(a)
        for arc in arcs:
            seg = EMBED.embed(arc.sample(200))
            color = "#c23b22" if abs(arc.a_param - a) < 1e-12 else "#2d5d9f"
            ax.plot(seg[:, 0], seg[:, 1], color=color, lw=1.4)
    except (InvalidInputError, DomainError):
        pass  # no analytic arcs here; the classified grid still shows
    d = gen.fixed_point.as_array()
    from itertools import permutations as _perms
    dd = np.array([d[list(p)] for p in _perms(range(3))])
    de = EMBED.embed(dd)
    ax.scatter(de[:, 0], de[:, 1], marker="o", s=22, c="#222222", zorder=5)
    ax.set_title(f"stabilisable set, a = {a:g}")
    return _save(fig, path)


def render_reach_figure(a: float, x0: np.ndarray, path: str | None = None,
                        gen: ToyGenerator | None = None, glyphs: bool = False):
    """Reachable set of x0 (solid) over the stabilisable boundary (dotted)."""
    if gen is None:
        gen = qutrit_generator(a)
    class_d = invariant_class_region(gen)
    region = reachable_set(x0, gen, class_d=class_d)
    fig, ax = plt.subplots(figsize=(6.4, 5.8))
    draw_simplex(ax)
    if glyphs:
        pts = simplex_grid(14)
        vel = -(pts @ gen.b.T)
        ep = EMBED.embed(pts)
        ev = vel @ EMBED.p.T
        ax.quiver(ep[:, 0], ep[:, 1], ev[:, 0], ev[:, 1], color="0.8",
                  width=2.2e-3, scale=12.0)
    from itertools import permutations as _perms
    for p in _perms(range(3)):
        pm = np.asarray(p)
        for reg, color, lw in ((region, "#c23b22", 1.6), (class_d, "#2d5d9f", 1.0)):
            bary = EMBED.unembed(reg.polygon)
            seg = EMBED.embed(bary[:, pm])
            ax.plot(seg[:, 0], seg[:, 1], color=color, lw=lw,
                    ls="-" if reg is region else "--")
    try:
        for arc in stab_boundary(a):
            seg = EMBED.embed(arc.sample(120))
            ax.plot(seg[:, 0], seg[:, 1], color="0.45", lw=0.9, ls=":")
    except (InvalidInputError, DomainError):
        pass
    e0 = EMBED.embed(np.sort(np.asarray(x0, dtype=float))[::-1])
    ax.scatter([e0[0]], [e0[1]], marker="*", s=70, c="#111111", zorder=6)
    ax.set_title(f"reachable set from x0, a = {a:g}")
    return _save(fig, path)


def render_trajectory_figure(times: np.ndarray, states: np.ndarray,
                             gen: ToyGenerator | None = None,
                             path: str | None = None, glyphs: bool = True):
    """Trajectory in the simplex, colored by time, with drift glyphs."""
    fig, ax = plt.subplots(figsize=(6.4, 5.8))
    draw_simplex(ax)
    emb = EMBED.embed(states)
    sc = ax.scatter(emb[:, 0], emb[:, 1], c=times, s=4, cmap="viridis", lw=0)
    fig.colorbar(sc, ax=ax, label="t", shrink=0.8)
    if gen is not None and glyphs:
        pts = simplex_grid(14)
        vel = -(pts @ gen.b.T)
        ep = EMBED.embed(pts)
        ev = vel @ EMBED.p.T
        ax.quiver(ep[:, 0], ep[:, 1], ev[:, 0], ev[:, 1], color="0.7",
                  width=2.4e-3, scale=12.0)
        de = EMBED.embed(gen.fixed_point.as_array())
        ax.scatter([de[0]], [de[1]], marker="o", s=28, c="#c23b22", zorder=6)
    ax.set_title("toy model trajectory")
    return _save(fig, path)


def render_bound_figure(x0: np.ndarray, z: np.ndarray, cloud: np.ndarray | None = None,
                        path: str | None = None):
    """Majorisation bound polygon conv{pi(z)} with an optional sample cloud."""
    from itertools import permutations as _perms
    fig, ax = plt.subplots(figsize=(6.4, 5.8))
    draw_simplex(ax)
    verts = np.array([np.asarray(z)[list(p)] for p in _perms(range(3))])
    emb = EMBED.embed(verts)
    order = np.argsort(np.arctan2(emb[:, 1], emb[:, 0]))
    loop = np.vstack([emb[order], emb[order][:1]])
    ax.plot(loop[:, 0], loop[:, 1], color="#c23b22", lw=1.6)
    if cloud is not None:
        ce = EMBED.embed(cloud)
        ax.scatter(ce[:, 0], ce[:, 1], s=1.0, c="#7fc8c8", lw=0, rasterized=True)
    e0 = EMBED.embed(np.asarray(x0, dtype=float))
    ax.scatter([e0[0]], [e0[1]], marker="*", s=70, c="#111111", zorder=6)
    ax.set_title("reachability bound conv{perm(z)}")
    return _save(fig, path)


def render_qubit_region(eps: float, path: str | None = None, resolution: int = 80):
    """The thermal and Markovian map cones over (mu, Re c, Im c).

    Two 3-D panels at fixed aspect angles plus the formal time parameter
    (real branch and the constant imaginary part past the Markovian limit).
    """
    fig = plt.figure(figsize=(10.0, 7.4))
    views = [(18.0, -62.0), (4.0, -88.0)]
    mu_m = np.linspace(0.0, 1.0 / (1.0 + eps), resolution)
    mu_t = np.linspace(0.0, 1.0, resolution)
    phi = np.linspace(0.0, 2.0 * math.pi, 2 * resolution)

    def surf(ax, mus, radius, **kw):
        m, p = np.meshgrid(mus, phi, indexing="ij")
        r = np.repeat(radius[:, None], phi.size, axis=1)
        # rasterized keeps vector output small; the cones are dense meshes
        ax.plot_surface(m, r * np.cos(p), r * np.sin(p), linewidth=0,
                        antialiased=False, shade=False, rasterized=True, **kw)

    for k, (elev, azim) in enumerate(views):
        ax = fig.add_subplot(2, 2, k + 1, projection="3d")
        surf(ax, mu_t, thermal_radius(mu_t, eps), color="#3a6fb7", alpha=0.35)
        surf(ax, mu_m, markov_radius(mu_m, eps), color="#e8842c", alpha=0.8)
        ax.scatter([1.0], [0.0], [0.0], color="#d8c22a", s=40)
        ax.scatter([1.0 / (1.0 + eps)], [0.0], [0.0], color="#d8c22a", s=40)
        ax.view_init(elev=elev, azim=azim)
        ax.set_xlabel("mu")
        ax.set_ylabel("Re c")
        ax.set_zlabel("Im c")
        ax.set_title(f"view {k + 1}")

    ax = fig.add_subplot(2, 1, 2)
    mus = np.linspace(0.0, 1.0, 600)[1:-1]
    ts = np.array([time_parameter(m, eps) for m in mus])
    mu_star = 1.0 / (1.0 + eps)
    real_side = mus <= mu_star
    ax.plot(mus[real_side], ts[real_side].real, color="#e8842c", label="Re t[u]")
    ax.plot(mus[~real_side], ts[~real_side].real, color="#3a6fb7", label="Re t[u] (past mu*)")
    ax.plot(mus[~real_side], np.abs(ts[~real_side].imag), color="#3a6fb7",
            ls="--", label="|Im t[u]| = pi/(1+eps)")
    ax.axvline(mu_star, color="0.6", lw=0.8, ls=":")
    ax.set_xlabel("mu")
    ax.set_ylabel("t in units of u")
    ax.set_ylim(-1.0, 8.0)
    ax.legend(loc="upper left", fontsize=8)
    fig.suptitle(f"qubit thermal maps, eps = {eps:g}")
    return _save(fig, path)
