"""Fingerprint accumulation, balanced-bootstrap discrimination ratios,
cross-campaign stability, identifiability-weighted authentication scoring,
a Mahalanobis baseline, and ROC/AUC evaluation.

The discrimination-ratio estimator compares the spread of per-satellite
half-sample means against the spread of half-sample differences, so a
feature carrying no satellite information scores near 1/sqrt(2) = 0.707.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .constellation import make_constellation, moments
from .features import FEATURE_NAMES, PipelineConfig, extract_features
from .signal_model import (
    ChannelConfig,
    FleetSpread,
    generate_fleet,
    iridium_known_symbols,
    random_known_symbols,
    synthesize_burst,
)

DEFAULT_VERDICT_BANDS = (
    (3.0, "strong"),
    (1.5, "moderate"),
    (1.0, "detectable"),
    (0.8, "weak"),
)

# Feature subsets used by the scoring strategies (names from FEATURE_NAMES).
PA3_FEATURES = ("amp_var", "amp_range", "amp_acf1")
CRB4_FEATURES = PA3_FEATURES + ("phase_acf1",)
ALL6_FEATURES = CRB4_FEATURES + ("amp_kurtosis", "evm")
IQ2_FEATURES = ("iq_eps_hat", "iq_phi_hat")
OSC2_FEATURES = ("phase_acf1", "phase_var")


class AuthConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Fingerprint:
    """Accumulated per-satellite feature means (SNR-weighted) with the
    unweighted per-feature variance kept for diagnostics."""

    satellite_id: str
    mean: np.ndarray
    var: np.ndarray
    n_messages: int

    def __post_init__(self):
        if self.n_messages < 1:
            raise ValueError("a fingerprint needs at least one message")
        if np.any(np.asarray(self.var) < -1e-12):
            raise ValueError("variances must be nonnegative")


def accumulate(features, snrs_db) -> "Fingerprint | np.ndarray":
    """SNR-weighted mean of per-burst feature vectors (weights prop. to the
    linear per-burst SNR). Returns the weighted mean array; wrap in a
    Fingerprint via ``fingerprint_from_bursts`` or manually."""
    x = np.asarray(
        [f.as_array() if hasattr(f, "as_array") else np.asarray(f, dtype=float) for f in features]
    )
    snrs_db = np.asarray(snrs_db, dtype=float)
    if x.size == 0 or x.shape[0] != snrs_db.size:
        raise ValueError("features and snrs must be non-empty and equal length")
    w = 10.0 ** (snrs_db / 10.0)
    total = float(np.sum(w))
    if total <= 0.0:
        raise ValueError("all-zero accumulation weights")
    return (w[:, None] * x).sum(axis=0) / total


def make_fingerprint(satellite_id: str, features, snrs_db) -> Fingerprint:
    x = np.asarray([f.as_array() if hasattr(f, "as_array") else f for f in features], dtype=float)
    mean = accumulate(features, snrs_db)
    return Fingerprint(
        satellite_id=satellite_id,
        mean=mean,
        var=np.var(x, axis=0),
        n_messages=x.shape[0],
    )


@dataclass(frozen=True)
class FeatureTable:
    """Long-format per-burst feature matrix (n_bursts x 13)."""

    satellite_ids: np.ndarray
    burst_index: np.ndarray
    snr_db: np.ndarray
    matrix: np.ndarray
    feature_names: tuple = FEATURE_NAMES

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["satellite_id", "burst_index", "snr_db", *self.feature_names])
            for i in range(self.matrix.shape[0]):
                w.writerow(
                    [self.satellite_ids[i], int(self.burst_index[i]), f"{self.snr_db[i]:g}"]
                    + [f"{v:.10e}" for v in self.matrix[i]]
                )

    @classmethod
    def from_csv(cls, path) -> "FeatureTable":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            names = tuple(header[3:])
            ids, idx, snr, rows = [], [], [], []
            for row in r:
                ids.append(row[0])
                idx.append(int(row[1]))
                snr.append(float(row[2]))
                rows.append([float(v) for v in row[3:]])
        return cls(
            satellite_ids=np.asarray(ids),
            burst_index=np.asarray(idx),
            snr_db=np.asarray(snr),
            matrix=np.asarray(rows),
            feature_names=names,
        )


@dataclass(frozen=True)
class DrRow:
    mean: float
    std: float
    n_trials: int
    verdict: str


@dataclass(frozen=True)
class DrTable:
    rows: dict
    excluded_satellites: tuple = ()

    def dr(self, name: str) -> float:
        return self.rows[name].mean

    def ordered(self):
        return sorted(self.rows.items(), key=lambda kv: kv[1].mean, reverse=True)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["feature", "dr_mean", "dr_std", "n_trials", "verdict"])
            for name, row in self.ordered():
                w.writerow([name, f"{row.mean:.6g}", f"{row.std:.6g}", row.n_trials, row.verdict])


def _verdict(dr: float, bands=DEFAULT_VERDICT_BANDS) -> str:
    # strong needs a strict > 3; the lower bands are half-open [lo, hi)
    for k, (threshold, label) in enumerate(bands):
        if (dr > threshold) if k == 0 else (dr >= threshold):
            return label
    return "not_discriminative"


def balanced_dr(
    table: FeatureTable,
    n_bal: int = 30,
    n_trials: int = 30,
    seed: int = 0,
    verdict_bands=DEFAULT_VERDICT_BANDS,
) -> DrTable:
    """Balanced bootstrap discrimination ratios.

    Each trial subsamples n_bal messages per satellite without replacement
    and splits them into halves. DR = std over satellites of half-A means
    divided by std over satellites of (half-A - half-B) differences; a
    feature with no satellite dependence scores about 0.707.
    """
    ids = np.asarray(table.satellite_ids)
    uniq, counts = np.unique(ids, return_counts=True)
    eligible = uniq[counts >= n_bal]
    excluded = tuple(uniq[counts < n_bal])
    if eligible.size < 2:
        raise AuthConfigError("need at least 2 satellites with >= n_bal messages")
    half = n_bal // 2
    rng = np.random.default_rng(seed)
    n_feat = table.matrix.shape[1]
    drs = np.zeros((n_trials, n_feat))
    idx_by_sat = {s: np.flatnonzero(ids == s) for s in eligible}
    for t in range(n_trials):
        m_a = np.zeros((eligible.size, n_feat))
        m_b = np.zeros((eligible.size, n_feat))
        for si, s in enumerate(eligible):
            pick = rng.choice(idx_by_sat[s], size=n_bal, replace=False)
            m_a[si] = table.matrix[pick[:half]].mean(axis=0)
            m_b[si] = table.matrix[pick[half:n_bal]].mean(axis=0)
        inter = np.std(m_a, axis=0, ddof=1)
        intra = np.std(m_a - m_b, axis=0, ddof=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            drs[t] = np.where(inter <= 1e-300, 0.0, inter / np.where(intra > 0, intra, np.inf))
    rows = {}
    for j, name in enumerate(table.feature_names):
        mean = float(np.mean(drs[:, j]))
        rows[name] = DrRow(
            mean=mean,
            std=float(np.std(drs[:, j], ddof=1)) if n_trials > 1 else 0.0,
            n_trials=n_trials,
            verdict=_verdict(mean, verdict_bands),
        )
    return DrTable(rows=rows, excluded_satellites=excluded)


@dataclass(frozen=True)
class StabilityRow:
    r: float
    p_value: float
    defined: bool


def cross_stability(fingerprints_a, fingerprints_b) -> dict:
    """Per-feature Pearson correlation of fingerprint means across the
    satellites common to two campaigns."""
    by_id_a = {f.satellite_id: f for f in fingerprints_a}
    by_id_b = {f.satellite_id: f for f in fingerprints_b}
    common = sorted(set(by_id_a) & set(by_id_b))
    if len(common) < 3:
        raise AuthConfigError("need at least 3 common satellites")
    a = np.asarray([by_id_a[s].mean for s in common])
    b = np.asarray([by_id_b[s].mean for s in common])
    out = {}
    for j, name in enumerate(FEATURE_NAMES):
        if np.std(a[:, j]) <= 1e-300 or np.std(b[:, j]) <= 1e-300:
            out[name] = StabilityRow(r=float("nan"), p_value=float("nan"), defined=False)
        else:
            r, p = sps.pearsonr(a[:, j], b[:, j])
            out[name] = StabilityRow(r=float(r), p_value=float(p), defined=True)
    return out


@dataclass(frozen=True)
class WeightVector:
    feature_names: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < -1e-12) or abs(float(np.sum(w)) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def as_dict(self) -> dict:
        return dict(zip(self.feature_names, self.weights.tolist()))


def iwat_weights(dr: DrTable | dict, feature_names, mode: str = "dr2") -> WeightVector:
    """Normalized discrimination-ratio weights over the active feature set.

    mode="dr2" squares the ratios (the default emphasis), "dr" uses them
    linearly, "equal" ignores them.
    """
    names = tuple(feature_names)
    if mode == "equal":
        raw = np.ones(len(names))
    else:
        get = dr.dr if isinstance(dr, DrTable) else lambda k: float(dr[k])
        raw = np.array([get(k) for k in names], dtype=float)
        if np.any(raw < 0):
            raise ValueError("discrimination ratios must be nonnegative")
        if mode == "dr2":
            raw = raw**2
        elif mode != "dr":
            raise ValueError(f"unknown weight mode {mode!r}")
    total = float(np.sum(raw))
    if total <= 0.0:
        raise ValueError("all-zero discrimination ratios")
    return WeightVector(feature_names=names, weights=raw / total)


@dataclass(frozen=True)
class AuthDecision:
    scores: dict
    claimed_id: str
    threshold: float
    accepted: bool


def iwat_score(
    test: Fingerprint,
    enrollment,
    w: WeightVector,
    tau: float,
    normalizer: tuple | None = None,
) -> AuthDecision:
    """Weighted squared distance to each enrollment fingerprint; claim the
    argmin and accept when its score is below tau.

    ``normalizer`` is the (mean, std) pair from enrollment statistics used to
    z-score features globally; pass None for raw features.
    """
    if not enrollment:
        raise AuthConfigError("empty enrollment")
    idx = [FEATURE_NAMES.index(k) for k in w.feature_names]
    mu, sd = (None, None) if normalizer is None else normalizer
    scores = {}
    for ref in enrollment:
        t = test.mean[idx]
        e = ref.mean[idx]
        if mu is not None:
            t = (t - mu[idx]) / sd[idx]
            e = (e - mu[idx]) / sd[idx]
        scores[ref.satellite_id] = float(np.sum(w.weights * (t - e) ** 2))
    claimed = min(scores, key=scores.get)
    return AuthDecision(scores=scores, claimed_id=claimed, threshold=tau,
                        accepted=scores[claimed] < tau)


def glrt_score(
    test: Fingerprint,
    enrollment,
    feature_subset,
    ridge: float = 1e-6,
    per_burst_matrix: np.ndarray | None = None,
    per_burst_ids: np.ndarray | None = None,
    normalizer: tuple | None = None,
) -> dict:
    """Mahalanobis distance with a regularized pooled enrollment covariance.

    The covariance pools per-burst features centered per satellite; when no
    per-burst data is supplied, the enrollment fingerprint means are pooled
    instead (requires more satellites than features or a positive ridge).
    """
    if not enrollment:
        raise AuthConfigError("empty enrollment")
    idx = [FEATURE_NAMES.index(k) for k in feature_subset]
    mu, sd = (None, None) if normalizer is None else normalizer

    def norm(v):
        return v if mu is None else (v - mu[idx]) / sd[idx]

    if per_burst_matrix is not None:
        x = per_burst_matrix[:, idx].astype(float)
        if mu is not None:
            x = (per_burst_matrix[:, idx] - mu[idx]) / sd[idx]
        centered = np.empty_like(x)
        for s in np.unique(per_burst_ids):
            sel = per_burst_ids == s
            centered[sel] = x[sel] - x[sel].mean(axis=0)
        cov = np.cov(centered, rowvar=False, ddof=1)
    else:
        e = np.asarray([norm(f.mean[idx]) for f in enrollment])
        if e.shape[0] <= len(idx) and ridge <= 0.0:
            raise AuthConfigError("enrollment count must exceed feature dimension or ridge > 0")
        cov = np.cov(e, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov) + ridge * np.eye(len(idx))
    cond = np.linalg.cond(cov)
    if not np.isfinite(cond) or cond > 1e14:
        raise AuthConfigError("singular regularized covariance")
    prec = np.linalg.inv(cov)
    t = norm(test.mean[idx])
    out = {}
    for ref in enrollment:
        d = t - norm(ref.mean[idx])
        out[ref.satellite_id] = float(d @ prec @ d)
    return out


@dataclass(frozen=True)
class RocCurve:
    points: np.ndarray  # ordered (fa_rate, detection_rate)
    auc: float
    pd_at_fa: dict

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["fa_rate", "detection_rate"])
            for fa, pd in self.points:
                w.writerow([f"{fa:.8g}", f"{pd:.8g}"])


def roc_auc(genuine_scores, impostor_scores, fa_targets=(0.01, 0.1)) -> RocCurve:
    """Threshold-sweep ROC for lower-is-genuine scores; AUC by the
    rank statistic with ties counted one half."""
    g = np.sort(np.asarray(genuine_scores, dtype=float))
    i = np.sort(np.asarray(impostor_scores, dtype=float))
    if g.size == 0 or i.size == 0:
        raise AuthConfigError("both score lists must be non-empty")
    # P(impostor > genuine) + 0.5 P(tie), via counts of impostors below/at each genuine
    below = np.searchsorted(i, g, side="left")
    at = np.searchsorted(i, g, side="right") - below
    auc = float(np.sum((i.size - below - at) + 0.5 * at) / (g.size * i.size))

    thresholds = np.unique(np.concatenate([g, i, [np.inf]]))
    fa = np.searchsorted(i, thresholds, side="left") / i.size
    pd = np.searchsorted(g, thresholds, side="left") / g.size
    points = np.column_stack([fa, pd])
    pd_at = {}
    for target in fa_targets:
        ok = fa <= target + 1e-12
        pd_at[target] = float(np.max(pd[ok])) if np.any(ok) else 0.0
    return RocCurve(points=points, auc=auc, pd_at_fa=pd_at)


# ---------------------------------------------------------------------------
# End-to-end synthetic two-campaign experiment


@dataclass(frozen=True)
class FleetProtocolConfig:
    n_sats: int = 27
    n_enroll: int = 120
    n_probe: int = 120
    snr_db: float = 12.0
    burst_mode: str = "iridium"  # or "qpsk_pilots"
    n_known: int = 76
    cfo_jitter: float = 0.01  # rad/symbol, uniform per burst
    rician_k_db: float | None = None
    n_bal: int = 30
    n_dr_trials: int = 30
    probe_acc: int = 60
    n_acc_grid: tuple = (1, 2, 4, 8, 15, 30, 60)
    ridge: float = 1e-6
    spread: FleetSpread = field(default_factory=FleetSpread)
    target_fa: float = 0.1

    def __post_init__(self):
        if self.n_probe < self.probe_acc or self.n_enroll < self.n_bal:
            raise AuthConfigError("campaign sizes too small for the protocol")


@dataclass(frozen=True)
class StrategyResult:
    auc: float
    pd_at_fa: dict
    n_genuine: int
    n_impostor: int


@dataclass(frozen=True)
class AuthReport:
    strategies: dict
    dr_table: DrTable
    weights: WeightVector
    auc_vs_nacc: dict
    threshold: float
    fleet: list
    beta: float
    roc_curves: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "beta": self.beta,
            "threshold": self.threshold,
            "strategies": {
                k: {
                    "auc": v.auc,
                    "pd_at_fa": {str(t): p for t, p in v.pd_at_fa.items()},
                    "n_genuine": v.n_genuine,
                    "n_impostor": v.n_impostor,
                }
                for k, v in self.strategies.items()
            },
            "weights": self.weights.as_dict(),
            "dr_table": {
                k: {"mean": r.mean, "std": r.std, "verdict": r.verdict}
                for k, r in self.dr_table.rows.items()
            },
            "auc_vs_nacc": {k: dict(zip(("n_acc", "auc"), v)) for k, v in self.auc_vs_nacc.items()},
            "fleet": [
                {"satellite_id": s, "eps": p.eps, "phi": p.phi,
                 "alpha3": [p.alpha3.real, p.alpha3.imag]}
                for s, p in self.fleet
            ],
        }


def simulate_campaign(
    fleet, cfg: FleetProtocolConfig, campaign_seed: int, n_bursts: int | None = None
) -> FeatureTable:
    """One recording campaign: fresh noise, channel phases, and CFO per burst;
    the fleet fingerprints stay fixed."""
    qpsk = make_constellation("qpsk")
    pipeline = PipelineConfig(n_known=cfg.n_known)
    n_bursts = n_bursts if n_bursts is not None else cfg.n_enroll
    ids, idxs, snrs, rows = [], [], [], []
    for si, (sat, p) in enumerate(fleet):
        for bi in range(n_bursts):
            rng = np.random.default_rng((campaign_seed, si, bi))
            cfo = rng.uniform(-cfg.cfo_jitter, cfg.cfo_jitter)
            ch = ChannelConfig(
                h=1.0 + 0.0j,
                snr_db=cfg.snr_db,
                rician_k_db=cfg.rician_k_db,
                cfo_rad_per_symbol=float(cfo),
                random_phase=True,
            )
            if cfg.burst_mode == "iridium":
                symbols = np.resize(iridium_known_symbols(), cfg.n_known)
                mod = "iridium"
            else:
                symbols = random_known_symbols(qpsk, cfg.n_known, rng)
                mod = "qpsk"
            burst = synthesize_burst(symbols, p, ch, rng=rng, satellite_id=sat, modulation=mod)
            rows.append(extract_features(burst, pipeline).as_array())
            ids.append(sat)
            idxs.append(bi)
            snrs.append(cfg.snr_db)
    return FeatureTable(
        satellite_ids=np.asarray(ids),
        burst_index=np.asarray(idxs),
        snr_db=np.asarray(snrs),
        matrix=np.asarray(rows),
    )


def _fingerprints_from_table(table: FeatureTable, limit: int | None = None) -> list:
    out = []
    for s in np.unique(table.satellite_ids):
        sel = np.flatnonzero(table.satellite_ids == s)
        if limit is not None:
            sel = sel[:limit]
        x = table.matrix[sel]
        out.append(
            Fingerprint(satellite_id=str(s), mean=x.mean(axis=0), var=x.var(axis=0),
                        n_messages=sel.size)
        )
    return out


def _chunked_fingerprints(table: FeatureTable, n_acc: int) -> list:
    """Disjoint n_acc-burst probe fingerprints per satellite."""
    out = []
    for s in np.unique(table.satellite_ids):
        sel = np.flatnonzero(table.satellite_ids == s)
        for c in range(sel.size // n_acc):
            x = table.matrix[sel[c * n_acc : (c + 1) * n_acc]]
            out.append(
                Fingerprint(satellite_id=str(s), mean=x.mean(axis=0), var=x.var(axis=0),
                            n_messages=n_acc)
            )
    return out


def _score_set(probes, enrollment, score_fn) -> tuple[list, list]:
    genuine, impostor = [], []
    enrolled_ids = {f.satellite_id for f in enrollment}
    for probe in probes:
        scores = score_fn(probe)
        for sat, s in scores.items():
            if sat == probe.satellite_id:
                genuine.append(s)
            else:
                impostor.append(s)
        if probe.satellite_id not in enrolled_ids:
            raise AuthConfigError(f"probe satellite {probe.satellite_id} not enrolled")
    return genuine, impostor


def run_auth_experiment(cfg: FleetProtocolConfig | None = None, seed: int = 0) -> AuthReport:
    """Two independent campaigns over one synthetic fleet: enrollment
    fingerprints and weights from campaign A, probes from campaign B,
    ROC/AUC per scoring strategy plus accumulation curves."""
    cfg = cfg or FleetProtocolConfig()
    fleet = generate_fleet(cfg.n_sats, cfg.spread, seed=seed)
    table_a = simulate_campaign(fleet, cfg, campaign_seed=2 * seed + 2, n_bursts=cfg.n_enroll)
    table_b = simulate_campaign(fleet, cfg, campaign_seed=2 * seed + 1, n_bursts=cfg.n_probe)

    mu = table_a.matrix.mean(axis=0)
    sd = table_a.matrix.std(axis=0, ddof=1)
    sd = np.where(sd > 1e-300, sd, 1.0)
    normalizer = (mu, sd)

    dr_table = balanced_dr(table_a, n_bal=cfg.n_bal, n_trials=cfg.n_dr_trials, seed=seed + 101)
    beta = moments(make_constellation("qpsk" if cfg.burst_mode != "iridium" else "bpsk")).beta
    enrollment = _fingerprints_from_table(table_a)
    probes = _chunked_fingerprints(table_b, cfg.probe_acc)

    strategies = {
        "dr2_iwat_all6": ("iwat", ALL6_FEATURES, "dr2"),
        "dr_iwat_all6": ("iwat", ALL6_FEATURES, "dr"),
        "equal_weight_all6": ("iwat", ALL6_FEATURES, "equal"),
        "crb_guided_4": ("iwat", CRB4_FEATURES, "equal"),
        "pa_only_3": ("iwat", PA3_FEATURES, "equal"),
        "oscillator_only_2": ("iwat", OSC2_FEATURES, "equal"),
        "iq_only_2": ("iwat", IQ2_FEATURES, "equal"),
        "glrt_crb4": ("glrt", CRB4_FEATURES, None),
    }
    results = {}
    roc_curves = {}
    weights_main = iwat_weights(dr_table, ALL6_FEATURES, mode="dr2")
    for name, (kind, subset, mode) in strategies.items():
        if kind == "iwat":
            w = iwat_weights(dr_table, subset, mode=mode)
            score_fn = lambda probe, w=w: iwat_score(
                probe, enrollment, w, tau=math.inf, normalizer=normalizer
            ).scores
        else:
            score_fn = lambda probe: glrt_score(
                probe, enrollment, subset, ridge=cfg.ridge,
                per_burst_matrix=table_a.matrix,
                per_burst_ids=table_a.satellite_ids,
                normalizer=normalizer,
            )
        genuine, impostor = _score_set(probes, enrollment, score_fn)
        roc = roc_auc(genuine, impostor)
        roc_curves[name] = roc
        results[name] = StrategyResult(
            auc=roc.auc, pd_at_fa=roc.pd_at_fa, n_genuine=len(genuine), n_impostor=len(impostor)
        )

    # accumulation curves for the PA-led and IQ-only strategies
    auc_vs_nacc = {}
    for label, subset, mode in (
        ("pa_only_3", PA3_FEATURES, "equal"),
        ("dr2_iwat_all6", ALL6_FEATURES, "dr2"),
        ("iq_only_2", IQ2_FEATURES, "equal"),
    ):
        w = iwat_weights(dr_table, subset, mode=mode)
        ns, aucs = [], []
        for n_acc in cfg.n_acc_grid:
            if n_acc > cfg.n_probe:
                continue
            chunk_probes = _chunked_fingerprints(table_b, n_acc)
            genuine, impostor = _score_set(
                chunk_probes,
                enrollment,
                lambda probe, w=w: iwat_score(probe, enrollment, w, tau=math.inf,
                                              normalizer=normalizer).scores,
            )
            ns.append(int(n_acc))
            aucs.append(roc_auc(genuine, impostor).auc)
        auc_vs_nacc[label] = (ns, aucs)

    # enrollment-only threshold at the target false-accept rate: split each
    # satellite's enrollment bursts into pseudo-probe halves
    half = max(cfg.n_enroll // 2, 1)
    pseudo_enroll, pseudo_probe = [], []
    for s in np.unique(table_a.satellite_ids):
        sel = np.flatnonzero(table_a.satellite_ids == s)
        xa, xb = table_a.matrix[sel[:half]], table_a.matrix[sel[half:]]
        pseudo_enroll.append(Fingerprint(str(s), xa.mean(axis=0), xa.var(axis=0), xa.shape[0]))
        pseudo_probe.append(Fingerprint(str(s), xb.mean(axis=0), xb.var(axis=0), xb.shape[0]))
    genuine, impostor = _score_set(
        pseudo_probe,
        pseudo_enroll,
        lambda probe: iwat_score(probe, pseudo_enroll, weights_main, tau=math.inf,
                                 normalizer=normalizer).scores,
    )
    impostor = np.sort(impostor)
    k = int(math.floor(cfg.target_fa * impostor.size))
    threshold = float(impostor[k] if k < impostor.size else math.inf)

    return AuthReport(
        strategies=results,
        dr_table=dr_table,
        weights=weights_main,
        auc_vs_nacc=auc_vs_nacc,
        threshold=threshold,
        fleet=fleet,
        beta=float(beta),
        roc_curves=roc_curves,
    )


def feature_table_from_bursts(bursts, pipeline: PipelineConfig | None = None) -> FeatureTable:
    """Extract a feature table from burst objects (synthetic or file-loaded),
    so recorded data in the burst-file format can replace the simulator."""
    pipeline = pipeline or PipelineConfig()
    ids, idxs, snrs, rows = [], [], [], []
    counters: dict = {}
    for b in bursts:
        sat = b.meta.satellite_id or "unknown"
        counters[sat] = counters.get(sat, -1) + 1
        rows.append(extract_features(b, pipeline).as_array())
        ids.append(sat)
        idxs.append(counters[sat])
        snrs.append(b.meta.channel.snr_db if b.meta.channel.snr_db is not None else math.inf)
    return FeatureTable(
        satellite_ids=np.asarray(ids),
        burst_index=np.asarray(idxs),
        snr_db=np.asarray(snrs, dtype=float),
        matrix=np.asarray(rows),
    )
