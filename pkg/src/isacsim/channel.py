"""Scenario geometry, pathloss laws, steering vectors, and seeded channel draws.

Conventions used throughout: the base-station ULA lies along the x axis, the
RIS is a square UPA in the x-z plane (surface normal +y), and both use
half-wavelength element spacing, so steering phases depend only on direction
cosines and the carrier wavelength never appears.  All distances are meters,
all power gains linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DIRECT_LAW = (30.0, 22.0)
RIS_LAW = (30.0, 35.0)


@dataclass(frozen=True)
class FadingParams:
    rician_factor: float = 10.0
    direct_law: tuple = DIRECT_LAW
    ris_law: tuple = RIS_LAW

    def validate(self):
        if not (self.rician_factor >= 0 and math.isfinite(self.rician_factor)):
            raise ValidationError(f"rician factor must be finite and >= 0, got {self.rician_factor}")
        for law in (self.direct_law, self.ris_law):
            if len(law) != 2 or not all(math.isfinite(x) for x in law):
                raise ValidationError(f"bad pathloss law {law!r}")
        return self


@dataclass
class ScenarioGeometry:
    """Positions of everything plus array sizes.  N must be a perfect square."""

    dfbs_pos: np.ndarray  # (3,)
    ris_pos: np.ndarray  # (3,)
    user_pos: np.ndarray  # (K, 3)
    target_pos: np.ndarray  # (T, 3)
    m_antennas: int
    n_ris: int

    def __post_init__(self):
        self.dfbs_pos = np.asarray(self.dfbs_pos, dtype=float).reshape(3)
        self.ris_pos = np.asarray(self.ris_pos, dtype=float).reshape(3)
        self.user_pos = np.asarray(self.user_pos, dtype=float).reshape(-1, 3)
        self.target_pos = np.asarray(self.target_pos, dtype=float).reshape(-1, 3)

    @property
    def num_users(self):
        return self.user_pos.shape[0]

    @property
    def num_targets(self):
        return self.target_pos.shape[0]

    @property
    def ris_side(self):
        return int(round(math.sqrt(self.n_ris)))

    def validate(self):
        if self.m_antennas < 1:
            raise ValidationError(f"M must be >= 1, got {self.m_antennas}")
        side = self.ris_side
        if side * side != self.n_ris or self.n_ris < 1:
            raise ValidationError(f"N must be a perfect square, got {self.n_ris}")
        pts = [("dfbs", self.dfbs_pos), ("ris", self.ris_pos)]
        pts += [(f"user{k}", p) for k, p in enumerate(self.user_pos)]
        pts += [(f"target{m}", p) for m, p in enumerate(self.target_pos)]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if float(np.linalg.norm(pts[i][1] - pts[j][1])) <= 0.0:
                    raise ValidationError(f"{pts[i][0]} and {pts[j][0]} coincide")
        return self


@dataclass
class ChannelSet:
    """One realization of every link; immutable by convention after synthesis."""

    H_br: np.ndarray  # (N, M) DFBS -> RIS
    h_bu: np.ndarray  # (K, M) DFBS -> users, Rayleigh
    h_ru: np.ndarray  # (K, N) RIS -> users, Rician
    g_bt: np.ndarray  # (T, M) DFBS -> targets, LoS
    g_rt: np.ndarray  # (T, N) RIS -> targets, LoS

    def validate(self):
        n, m = self.H_br.shape
        k = self.h_bu.shape[0]
        t = self.g_bt.shape[0]
        if self.h_bu.shape != (k, m) or self.h_ru.shape != (k, n):
            raise ValidationError("user channel dimensions inconsistent")
        if self.g_bt.shape != (t, m) or self.g_rt.shape != (t, n):
            raise ValidationError("target channel dimensions inconsistent")
        for name in ("H_br", "h_bu", "h_ru", "g_bt", "g_rt"):
            if not np.all(np.isfinite(getattr(self, name).view(float))):
                raise ValidationError(f"{name} contains non-finite entries")
        return self


def steering_ula(angle, m_antennas):
    """Half-wavelength ULA response: entry m = exp(i*pi*m*sin(angle))."""
    if m_antennas < 1:
        raise ValidationError(f"M must be >= 1, got {m_antennas}")
    return np.exp(1j * np.pi * np.arange(m_antennas) * math.sin(angle))


def steering_upa(azimuth, elevation, side):
    """Square UPA response as the Kronecker product of two axis ULAs.

    Direction cosines u = sin(az)cos(el) along the horizontal axis and
    w = sin(el) along the vertical axis; element (p, q) maps to index
    p*side + q and carries phase pi*(p*u + q*w).
    """
    if side < 1:
        raise ValidationError(f"side must be >= 1, got {side}")
    u = math.sin(azimuth) * math.cos(elevation)
    w = math.sin(elevation)
    ax = np.exp(1j * np.pi * np.arange(side) * u)
    az = np.exp(1j * np.pi * np.arange(side) * w)
    return np.kron(ax, az)


def pathloss_linear(d, law):
    """Linear power gain of the law intercept + slope*log10(d) in dB."""
    if d <= 0:
        raise ValidationError(f"distance must be > 0, got {d}")
    intercept, slope = law
    return 10.0 ** (-(intercept + slope * math.log10(d)) / 10.0)


def _bearing(src, dst):
    v = np.asarray(dst, float) - np.asarray(src, float)
    r = float(np.linalg.norm(v))
    if r <= 0:
        raise ValidationError("coincident points have no bearing")
    return v / r, r


def ula_angle(src, dst):
    """Angle whose sine is the x direction cosine seen from a ULA at src."""
    d, _ = _bearing(src, dst)
    return math.asin(max(-1.0, min(1.0, d[0])))


def upa_angles(src, dst):
    """(azimuth, elevation) pair for a UPA in the x-z plane at src."""
    d, _ = _bearing(src, dst)
    el = math.asin(max(-1.0, min(1.0, d[2])))
    ce = math.cos(el)
    if ce < 1e-12:
        return 0.0, el
    az = math.asin(max(-1.0, min(1.0, d[0] / ce)))
    return az, el


def _crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def synthesize(geometry: ScenarioGeometry, fading: FadingParams, seed) -> ChannelSet:
    """Draw one channel realization; identical seed gives identical output.

    The random draw order is fixed: the DFBS-RIS scattering matrix first, then
    per user the direct Rayleigh vector followed by the RIS-user scatter
    vector.  Target links are deterministic LoS and consume no randomness.
    `seed` may be anything numpy's default_rng accepts (int, SeedSequence, or
    an existing Generator).
    """
    geometry.validate()
    fading.validate()
    rng = np.random.default_rng(seed)
    rho = fading.rician_factor
    los_w = math.sqrt(rho / (rho + 1.0))
    nlos_w = math.sqrt(1.0 / (rho + 1.0))

    m = geometry.m_antennas
    n = geometry.n_ris
    side = geometry.ris_side
    bs = geometry.dfbs_pos
    rs = geometry.ris_pos

    # DFBS -> RIS
    d_br = float(np.linalg.norm(rs - bs))
    zeta_br = pathloss_linear(d_br, fading.ris_law)
    a_b = steering_ula(ula_angle(bs, rs), m)
    a_r = steering_upa(*upa_angles(rs, bs), side)
    los = np.outer(a_r, a_b.conj())
    H_br = math.sqrt(zeta_br) * (los_w * los + nlos_w * _crandn(rng, (n, m)))

    # user links
    K = geometry.num_users
    h_bu = np.zeros((K, m), dtype=complex)
    h_ru = np.zeros((K, n), dtype=complex)
    for k in range(K):
        up = geometry.user_pos[k]
        zeta_bu = pathloss_linear(float(np.linalg.norm(up - bs)), fading.direct_law)
        h_bu[k] = math.sqrt(zeta_bu) * _crandn(rng, m)
        zeta_ru = pathloss_linear(float(np.linalg.norm(up - rs)), fading.ris_law)
        a_ru = steering_upa(*upa_angles(rs, up), side)
        h_ru[k] = math.sqrt(zeta_ru) * (los_w * a_ru + nlos_w * _crandn(rng, n))

    # target links, pure LoS
    T = geometry.num_targets
    g_bt = np.zeros((T, m), dtype=complex)
    g_rt = np.zeros((T, n), dtype=complex)
    for t in range(T):
        tp = geometry.target_pos[t]
        zeta_bt = pathloss_linear(float(np.linalg.norm(tp - bs)), fading.direct_law)
        g_bt[t] = math.sqrt(zeta_bt) * steering_ula(ula_angle(bs, tp), m)
        zeta_rt = pathloss_linear(float(np.linalg.norm(tp - rs)), fading.ris_law)
        g_rt[t] = math.sqrt(zeta_rt) * steering_upa(*upa_angles(rs, tp), side)

    return ChannelSet(H_br, h_bu, h_ru, g_bt, g_rt).validate()


PLACEMENT_BOX = ((5.0, 15.0), (-2.0, 8.0))  # 10 x 10 m ground rectangle


def sample_geometry(
    rng,
    m_antennas,
    n_ris,
    num_users,
    num_targets,
    dfbs_pos=(0.0, 0.0, 0.0),
    ris_pos=(10.0, -8.0, 5.0),
    box=PLACEMENT_BOX,
) -> ScenarioGeometry:
    """Drop users then targets uniformly on the ground-plane rectangle."""
    rng = np.random.default_rng(rng)
    (x0, x1), (y0, y1) = box

    def draw(count):
        pts = np.zeros((count, 3))
        pts[:, 0] = rng.uniform(x0, x1, count)
        pts[:, 1] = rng.uniform(y0, y1, count)
        return pts

    users = draw(num_users)
    targets = draw(num_targets)
    return ScenarioGeometry(
        np.asarray(dfbs_pos, float), np.asarray(ris_pos, float), users, targets, m_antennas, n_ris
    ).validate()


# ---------------------------------------------------------------------------
# frozen-realization dump (CHSET v1)
# ---------------------------------------------------------------------------


def _write_cmat(lines, mat):
    for row in np.atleast_2d(mat):
        lines.append(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row))


def _read_cmat(lines, pos, rows, cols):
    out = np.zeros((rows, cols), dtype=complex)
    for i in range(rows):
        vals = [float(t) for t in lines[pos + i].split()]
        out[i] = [complex(vals[2 * j], vals[2 * j + 1]) for j in range(cols)]
    return out, pos + rows


def dump_channels(ch: ChannelSet, path):
    n, m = ch.H_br.shape
    k = ch.h_bu.shape[0]
    t = ch.g_bt.shape[0]
    lines = ["CHSET v1", f"M {m} N {n} K {k} T {t}"]
    for name in ("H_br", "h_bu", "h_ru", "g_bt", "g_rt"):
        lines.append(name)
        _write_cmat(lines, getattr(ch, name))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_channels(path) -> ChannelSet:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "CHSET v1":
        raise ValidationError(f"{path}: not a CHSET v1 file")
    toks = lines[1].split()
    dims = {toks[i]: int(toks[i + 1]) for i in range(0, len(toks), 2)}
    m, n, k, t = dims["M"], dims["N"], dims["K"], dims["T"]
    shapes = {"H_br": (n, m), "h_bu": (k, m), "h_ru": (k, n), "g_bt": (t, m), "g_rt": (t, n)}
    pos = 2
    fields = {}
    for name in ("H_br", "h_bu", "h_ru", "g_bt", "g_rt"):
        if lines[pos] != name:
            raise ValidationError(f"{path}: expected section {name!r}, found {lines[pos]!r}")
        pos += 1
        fields[name], pos = _read_cmat(lines, pos, *shapes[name])
    return ChannelSet(**fields).validate()
