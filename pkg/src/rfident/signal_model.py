"""Impaired burst synthesis: IQ mixer imbalance, cubic PA compression, flat
channel with optional per-burst Rician draws, CFO ramp, and AWGN.

Everything runs at symbol rate (one complex sample per symbol). All
randomness flows through a seeded generator, so bursts are bit-exact
reproducible for a fixed seed.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .constellation import Constellation

PARAM_NAMES = ("eps", "phi", "re_alpha3", "im_alpha3")

# Iridium-style burst: 64 constant preamble symbols + 12-bit unique word 0x789
# mapped bit 0 -> +1, bit 1 -> -1.
UW_PATTERN_HEX = 0x789
N_PREAMBLE = 64
N_UW = 12


class BurstError(ValueError):
    """Raised for empty or inconsistent burst inputs."""


@dataclass(frozen=True)
class HwiParams:
    """Hardware fingerprint: gain imbalance eps, phase imbalance phi (rad),
    and the complex third-order PA coefficient alpha3."""

    eps: float = 0.0
    phi: float = 0.0
    alpha3: complex = 0.0 + 0.0j

    SMALL_LIMIT = 0.2

    @property
    def in_small_regime(self) -> bool:
        return (
            abs(self.eps) <= self.SMALL_LIMIT
            and abs(self.phi) <= self.SMALL_LIMIT
            and abs(self.alpha3) <= self.SMALL_LIMIT
        )

    def as_vector(self) -> np.ndarray:
        return np.array([self.eps, self.phi, self.alpha3.real, self.alpha3.imag])

    @classmethod
    def from_vector(cls, v) -> "HwiParams":
        v = np.asarray(v, dtype=float).ravel()
        if v.size != 4:
            raise ValueError("parameter vector must have 4 entries")
        return cls(eps=float(v[0]), phi=float(v[1]), alpha3=complex(v[2], v[3]))


@dataclass(frozen=True)
class IqCoefficients:
    k1: complex
    k2: complex

    def __post_init__(self):
        if abs(self.k1 + np.conj(self.k2) - 1.0) > 1e-12:
            raise ValueError("K1 + conj(K2) must equal 1")


def iq_coefficients(p: HwiParams) -> IqCoefficients:
    """Mixer coefficients K1 = (1+(1+eps)e^{j phi})/2, K2 = (1-(1+eps)e^{-j phi})/2."""
    g = (1.0 + p.eps) * np.exp(1j * p.phi)
    return IqCoefficients(k1=(1.0 + g) / 2.0, k2=(1.0 - np.conj(g)) / 2.0)


def apply_hwi(x, p: HwiParams):
    """Distort ideal symbols: x_iq = K1 x + K2 x*, then cubic PA compression.

    Accepts a scalar or an array; returns the same shape.
    """
    k = iq_coefficients(p)
    x = np.asarray(x, dtype=complex)
    x_iq = k.k1 * x + k.k2 * np.conj(x)
    u = np.abs(x_iq) ** 2
    y = x_iq * (1.0 + p.alpha3 * u)
    return complex(y) if y.ndim == 0 else y


def hwi_jacobian(x, p: HwiParams) -> np.ndarray:
    """Analytic sensitivities d f / d theta (at h = 1) for each symbol.

    Returns a (4, len(x)) complex array in PARAM_NAMES order. These are
    exact derivatives of the full nonlinear map, including the PA terms.
    """
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    k = iq_coefficients(p)
    e_p = np.exp(1j * p.phi)
    e_m = np.exp(-1j * p.phi)
    xc = np.conj(x)
    x_iq = k.k1 * x + k.k2 * xc
    u = np.abs(x_iq) ** 2
    pa = 1.0 + p.alpha3 * u

    d_eps = 0.5 * (e_p * x - e_m * xc)
    d_phi = 0.5j * (1.0 + p.eps) * (e_p * x + e_m * xc)
    du_deps = 2.0 * np.real(np.conj(x_iq) * d_eps)
    du_dphi = 2.0 * np.real(np.conj(x_iq) * d_phi)

    out = np.empty((4, x.size), dtype=complex)
    out[0] = d_eps * pa + p.alpha3 * du_deps * x_iq
    out[1] = d_phi * pa + p.alpha3 * du_dphi * x_iq
    out[2] = u * x_iq
    out[3] = 1j * u * x_iq
    return out


@dataclass(frozen=True)
class ChannelConfig:
    """Flat channel: coefficient h, SNR gamma = |h|^2 / sigma^2 in dB, optional
    per-burst Rician magnitude draws, per-burst uniform phase, and a linear
    CFO ramp in radians/symbol."""

    h: complex = 1.0 + 0.0j
    snr_db: float | None = 20.0
    rician_k_db: float | None = None
    cfo_rad_per_symbol: float = 0.0
    random_phase: bool = False

    @property
    def noise_free(self) -> bool:
        return self.snr_db is None or math.isinf(self.snr_db)

    @property
    def snr_linear(self) -> float:
        if self.noise_free:
            return math.inf
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def noise_variance(self) -> float:
        """sigma^2 such that |h|^2 / sigma^2 matches the configured SNR
        (|h|^2 is the mean channel power when Rician draws are enabled)."""
        if self.noise_free:
            return 0.0
        var = abs(self.h) ** 2 / self.snr_linear
        if var <= 0.0:
            raise ValueError("channel power must be positive for finite SNR")
        return var


def draw_channel(ch: ChannelConfig, rng: np.random.Generator) -> complex:
    """Per-burst channel coefficient with E[|h|^2] equal to |ch.h|^2."""
    h = complex(ch.h)
    if ch.rician_k_db is not None:
        k = 10.0 ** (ch.rician_k_db / 10.0)
        los = math.sqrt(k / (k + 1.0))
        scatter = math.sqrt(1.0 / (k + 1.0)) * (
            rng.standard_normal() + 1j * rng.standard_normal()
        ) / math.sqrt(2.0)
        h = h * (los + scatter)
    if ch.random_phase:
        h = h * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
    return h


@dataclass(frozen=True)
class BurstMeta:
    satellite_id: str = ""
    truth: HwiParams | None = None
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    seed: int | tuple | None = None
    modulation: str = "qpsk"
    h_realized: complex = 1.0 + 0.0j


@dataclass(frozen=True)
class Burst:
    """One transmission's known-symbol segment at symbol rate."""

    samples: np.ndarray
    known_symbols: np.ndarray
    meta: BurstMeta

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        x = np.asarray(self.known_symbols, dtype=complex)
        s.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "known_symbols", x)
        if s.size < 1 or s.size != x.size:
            raise BurstError("samples and known_symbols must have equal length >= 1")

    @property
    def n(self) -> int:
        return int(self.samples.size)


def uw_symbols(pattern: int = UW_PATTERN_HEX, n_bits: int = N_UW) -> np.ndarray:
    bits = [(pattern >> (n_bits - 1 - i)) & 1 for i in range(n_bits)]
    return np.array([1.0 - 2.0 * b for b in bits], dtype=complex)


def iridium_known_symbols() -> np.ndarray:
    """64 constant preamble symbols (1+0j) followed by the 12-symbol unique word."""
    return np.concatenate([np.ones(N_PREAMBLE, dtype=complex), uw_symbols()])


def random_known_symbols(c: Constellation, n: int, rng: np.random.Generator) -> np.ndarray:
    return c.points[rng.integers(0, c.size, size=n)]


def synthesize_burst(
    symbols,
    p: HwiParams,
    ch: ChannelConfig,
    seed=None,
    satellite_id: str = "",
    modulation: str = "qpsk",
    rng: np.random.Generator | None = None,
) -> Burst:
    """r(n) = h * apply_hwi(x(n)) * e^{j cfo n} + w(n), w ~ CN(0, sigma^2)."""
    x = np.asarray(symbols, dtype=complex).ravel()
    if x.size == 0:
        raise BurstError("empty symbol list")
    if rng is None:
        rng = np.random.default_rng(seed)
    h = draw_channel(ch, rng)
    n_idx = np.arange(x.size)
    clean = h * apply_hwi(x, p) * np.exp(1j * ch.cfo_rad_per_symbol * n_idx)
    if ch.noise_free:
        r = clean
    else:
        sigma = math.sqrt(ch.noise_variance / 2.0)
        w = sigma * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
        r = clean + w
    meta = BurstMeta(
        satellite_id=satellite_id,
        truth=p,
        channel=ch,
        seed=seed,
        modulation=modulation,
        h_realized=complex(h),
    )
    return Burst(samples=r, known_symbols=x, meta=meta)


@dataclass(frozen=True)
class BpskCollapse:
    """Effective scalar model for real alphabets: r = h c x + w with
    c = kappa (1 + alpha3 |kappa|^2), kappa = 1 + j (1+eps) sin(phi)."""

    kappa: complex
    c: complex
    xi1: float
    xi2: float
    null_basis: np.ndarray

    def __post_init__(self):
        nb = np.asarray(self.null_basis, dtype=float)
        nb.flags.writeable = False
        object.__setattr__(self, "null_basis", nb)


def bpsk_collapse(p: HwiParams) -> BpskCollapse:
    """Collapse parameters and the two first-order null directions of the
    information matrix for real alphabets."""
    kappa = 1.0 + 1j * (1.0 + p.eps) * math.sin(p.phi)
    c = kappa * (1.0 + p.alpha3 * abs(kappa) ** 2)
    xi1 = p.alpha3.real
    xi2 = (1.0 + p.eps) * math.sin(p.phi) + p.alpha3.imag
    v1 = np.array([1.0, 0.0, 0.0, -p.phi])
    v2 = np.array([0.0, 1.0, 0.0, -(1.0 + p.eps)])
    return BpskCollapse(kappa=complex(kappa), c=complex(c), xi1=xi1, xi2=xi2,
                        null_basis=np.vstack([v1, v2]))


@dataclass(frozen=True)
class FleetSpread:
    """Uniform per-satellite draw ranges for the fingerprint components."""

    eps_range: tuple = (0.01, 0.05)
    phi_range_deg: tuple = (0.5, 5.0)
    alpha3_mag_range: tuple = (0.02, 0.05)

    def __post_init__(self):
        for lo, hi in (self.eps_range, self.phi_range_deg, self.alpha3_mag_range):
            if lo > hi:
                raise ValueError(f"degenerate range ({lo}, {hi})")


def generate_fleet(n_sats: int, spread: FleetSpread | None = None, seed=0):
    """Draw one fingerprint per satellite, deterministically per seed."""
    if n_sats < 2:
        raise ValueError("a fleet needs at least 2 satellites")
    spread = spread or FleetSpread()
    rng = np.random.default_rng(seed)
    fleet = []
    width = max(2, len(str(n_sats - 1)))
    for i in range(n_sats):
        eps = rng.uniform(*spread.eps_range)
        phi = math.radians(rng.uniform(*spread.phi_range_deg))
        mag = rng.uniform(*spread.alpha3_mag_range)
        ang = rng.uniform(0.0, 2.0 * np.pi)
        fleet.append((f"SAT{i:0{width}d}", HwiParams(eps=eps, phi=phi, alpha3=mag * np.exp(1j * ang))))
    return fleet


# ---------------------------------------------------------------------------
# Burst file interchange: JSON and packed binary.


def _burst_header(b: Burst) -> dict:
    truth = b.meta.truth
    hdr = {
        "satellite_id": b.meta.satellite_id,
        "n": b.n,
        "snr_db": b.meta.channel.snr_db,
        "modulation": b.meta.modulation,
        "truth": None,
    }
    if truth is not None:
        hdr["truth"] = {
            "eps": truth.eps,
            "phi": truth.phi,
            "alpha3": [truth.alpha3.real, truth.alpha3.imag],
        }
    return hdr


def _burst_from_parts(hdr: dict, samples: np.ndarray, known: np.ndarray | None) -> Burst:
    truth = None
    if hdr.get("truth") is not None:
        t = hdr["truth"]
        truth = HwiParams(eps=t["eps"], phi=t["phi"], alpha3=complex(*t["alpha3"]))
    modulation = hdr.get("modulation", "qpsk")
    if known is None:
        if modulation == "iridium":
            known = iridium_known_symbols()[: samples.size]
        else:
            raise BurstError("burst file lacks known symbols and the pattern is not implied")
    meta = BurstMeta(
        satellite_id=hdr.get("satellite_id", ""),
        truth=truth,
        channel=ChannelConfig(snr_db=hdr.get("snr_db")),
        modulation=modulation,
    )
    return Burst(samples=samples, known_symbols=known, meta=meta)


def write_burst_json(b: Burst, path) -> None:
    payload = _burst_header(b)
    payload["samples"] = [[z.real, z.imag] for z in b.samples]
    payload["known_symbols"] = [[z.real, z.imag] for z in b.known_symbols]
    with open(path, "w") as fh:
        json.dump(payload, fh)


def read_burst_json(path) -> Burst:
    with open(path) as fh:
        payload = json.load(fh)
    samples = np.array([complex(re, im) for re, im in payload["samples"]])
    known = None
    if "known_symbols" in payload:
        known = np.array([complex(re, im) for re, im in payload["known_symbols"]])
    return _burst_from_parts(payload, samples, known)


def write_burst_binary(b: Burst, path) -> None:
    """Length-prefixed JSON header, then N little-endian float64 (re, im) pairs."""
    hdr = _burst_header(b)
    hdr["has_known_symbols"] = True
    raw = json.dumps(hdr).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        inter = np.empty(2 * b.n)
        inter[0::2] = b.samples.real
        inter[1::2] = b.samples.imag
        fh.write(inter.astype("<f8").tobytes())
        inter[0::2] = b.known_symbols.real
        inter[1::2] = b.known_symbols.imag
        fh.write(inter.astype("<f8").tobytes())


def read_burst_binary(path) -> Burst:
    with open(path, "rb") as fh:
        (hlen,) = struct.unpack("<I", fh.read(4))
        hdr = json.loads(fh.read(hlen).decode("utf-8"))
        n = int(hdr["n"])
        flat = np.frombuffer(fh.read(16 * n), dtype="<f8")
        samples = flat[0::2] + 1j * flat[1::2]
        known = None
        if hdr.get("has_known_symbols"):
            flat = np.frombuffer(fh.read(16 * n), dtype="<f8")
            known = flat[0::2] + 1j * flat[1::2]
    return _burst_from_parts(hdr, samples, known)
