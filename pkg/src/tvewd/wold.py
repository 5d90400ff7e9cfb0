"""Multiscale (dyadic) decomposition of a moving-average shock structure.

Given the MA(inf) representation v_t = sum_h alpha(h) eps_{t-h} implied by
an AR fit, the shock weights alpha are re-expressed on an orthonormal Haar
system of depth J over the truncation window of H = N * 2^J lags:

    beta_j(k)  = 2^(-j/2) * (sum_{i<2^(j-1)} alpha(k 2^j + i)
                             - sum_{i<2^(j-1)} alpha(k 2^j + 2^(j-1) + i))
    gamma_J(k) = 2^(-J/2) * sum_{i<2^J} alpha(k 2^J + i)

with matching scale innovations built from the same windows of eps.  Scale
j holds 2^(J-j) * N translates k (spacing 2^j) and the depth-J scaling
(low-pass) part holds N translates (spacing 2^J); together they form a
complete orthonormal basis of the H-lag window, so the per-scale components
plus the low-pass residual reconstruct the truncated MA output exactly and
the coefficient energy matches sum_h alpha(h)^2 exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .locreg import TvpArFit
from .series import atomic_write, format_value

__all__ = [
    "ExplosiveWarning",
    "MultiscaleConfig",
    "MultiscaleDecomposition",
    "PersistenceShares",
    "ar_to_ma",
    "extended_wold_beta",
    "scaling_gamma",
    "scale_innovations",
    "scaling_innovations",
    "scale_components",
    "decompose",
    "decompose_static",
    "persistence_shares",
    "haar_energy_gap",
]

ABS_ALPHA_GUARD = 1e12


class ExplosiveWarning(UserWarning):
    """Emitted when MA weights from an explosive AR exceed the overflow guard."""


@dataclass(frozen=True)
class MultiscaleConfig:
    """Decomposition depth J and coarsest-scale translate count N.

    The lag truncation is H = N * 2^J; scale j carries 2^(J-j) * N
    coefficients so that every scale spans the same H-lag window.
    """

    J: int = 7
    N: int = 4

    def __post_init__(self):
        if self.J < 1:
            raise ValueError(f"J must be >= 1, got {self.J}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")

    @property
    def H(self) -> int:
        return self.N * (1 << self.J)

    def n_translates(self, j: int) -> int:
        """Number of stored translates at scale j (1 <= j <= J)."""
        return self.N << (self.J - j)


def ar_to_ma(phi: np.ndarray, H: int) -> np.ndarray:
    """Invert AR coefficients to MA weights alpha(0..H).

    alpha(0) = 1 and alpha(h) = sum_{i=1..min(h,p)} phi_i alpha(h-i).
    Accepts a (p,) vector or a (G, p) matrix of coefficient rows; returns
    matching (H+1,) or (G, H+1).  Explosive inputs are allowed but trigger
    an ExplosiveWarning once sum |alpha| exceeds the overflow guard.
    """
    if H < 0:
        raise ValueError(f"H must be >= 0, got {H}")
    phi = np.asarray(phi, dtype=float)
    single = phi.ndim == 1
    mat = phi[None, :] if single else phi
    G, p = mat.shape
    alpha = np.zeros((G, H + 1))
    alpha[:, 0] = 1.0
    for h in range(1, H + 1):
        upto = min(h, p)
        acc = np.zeros(G)
        for i in range(1, upto + 1):
            acc += mat[:, i - 1] * alpha[:, h - i]
        alpha[:, h] = acc
    total = np.sum(np.abs(alpha), axis=1)
    if np.any(total > ABS_ALPHA_GUARD):
        warnings.warn(
            f"MA weights exceed overflow guard (max sum |alpha| = {float(np.max(total)):.3g}); "
            "AR is explosive over the truncation window",
            ExplosiveWarning,
            stacklevel=2,
        )
    return alpha[0] if single else alpha


def _haar_factor(j: int) -> float:
    return 1.0 / math.sqrt(float(1 << j))


def extended_wold_beta(alpha: np.ndarray, config: MultiscaleConfig) -> list[np.ndarray]:
    """Detail coefficients beta_j(k) for j = 1..J.

    alpha may be (H',) or (G, H') with H' >= config.H; returns one array per
    scale with trailing axis of length config.n_translates(j).
    """
    alpha = np.asarray(alpha, dtype=float)
    H = config.H
    if alpha.shape[-1] < H:
        raise ValueError(f"alpha must provide at least H={H} weights, got {alpha.shape[-1]}")
    head = alpha[..., :H]
    betas: list[np.ndarray] = []
    for j in range(1, config.J + 1):
        block = 1 << j
        half = block >> 1
        grouped = head.reshape(*head.shape[:-1], H // block, block)
        diff = grouped[..., :half].sum(axis=-1) - grouped[..., half:].sum(axis=-1)
        betas.append(_haar_factor(j) * diff)
    return betas


def scaling_gamma(alpha: np.ndarray, config: MultiscaleConfig) -> np.ndarray:
    """Depth-J scaling (low-pass) coefficients gamma_J(k), k = 0..N-1."""
    alpha = np.asarray(alpha, dtype=float)
    H = config.H
    if alpha.shape[-1] < H:
        raise ValueError(f"alpha must provide at least H={H} weights, got {alpha.shape[-1]}")
    head = alpha[..., :H]
    block = 1 << config.J
    grouped = head.reshape(*head.shape[:-1], config.N, block)
    return _haar_factor(config.J) * grouped.sum(axis=-1)


def _window_sums(eps: np.ndarray, width: int) -> np.ndarray:
    """Trailing-window sums W(t) = sum_{i<width} eps[t-i]; NaN where t < width-1."""
    n = len(eps)
    out = np.full(n, np.nan)
    if n >= width:
        c = np.concatenate(([0.0], np.cumsum(eps)))
        out[width - 1 :] = c[width:] - c[:-width]
    return out


def scale_innovations(eps: np.ndarray, J: int) -> list[np.ndarray]:
    """Scale innovations eps_j(t) for j = 1..J from unit-scale shocks.

    eps_j(t) = 2^(-j/2) * (sum_{i<m} eps[t-i] - sum_{i<m} eps[t-m-i]) with
    m = 2^(j-1).  The first 2^j - 1 positions are undefined and returned as
    NaN (never zero-filled).
    """
    eps = np.asarray(eps, dtype=float)
    out: list[np.ndarray] = []
    for j in range(1, J + 1):
        m = 1 << (j - 1)
        w = _window_sums(eps, m)
        older = np.full(len(eps), np.nan)
        if len(eps) > m:
            older[m:] = w[:-m]
        out.append(_haar_factor(j) * (w - older))
    return out


def scaling_innovations(eps: np.ndarray, J: int) -> np.ndarray:
    """Low-pass innovations: 2^(-J/2) times the trailing 2^J-window sum."""
    eps = np.asarray(eps, dtype=float)
    return _haar_factor(J) * _window_sums(eps, 1 << J)


def _component(surface: np.ndarray, innov: np.ndarray, spacing: int) -> np.ndarray:
    """sum_k surface[t, k] * innov[t - k*spacing], NaN where any term is undefined."""
    G, K = surface.shape
    out = np.zeros(G)
    defined = np.ones(G, dtype=bool)
    for k in range(K):
        shift = k * spacing
        shifted = np.full(G, np.nan)
        if shift < G:
            shifted[shift:] = innov[: G - shift]
        term = surface[:, k] * shifted
        defined &= np.isfinite(shifted)
        out = out + np.where(np.isfinite(term), term, 0.0)
    out[~defined] = np.nan
    return out


def scale_components(
    betas: list[np.ndarray],
    gamma: np.ndarray,
    innovations: list[np.ndarray],
    low_pass: np.ndarray,
    config: MultiscaleConfig,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Per-scale components v_j(t) and low-pass residual component pi_J(t).

    v_j(t) = sum_k beta_j(t, k) * eps_j(t - k 2^j); positions without a full
    H-lag shock history are NaN.
    """
    comps = [
        _component(betas[j - 1], innovations[j - 1], 1 << j) for j in range(1, config.J + 1)
    ]
    residual = _component(gamma, low_pass, 1 << config.J)
    return comps, residual


@dataclass
class MultiscaleDecomposition:
    """Multiscale decomposition of a fitted window.

    All row arrays are aligned with the fit's residual index (observations
    t = p+1..T of the window); row r corresponds to rescaled time grid[r].
    """

    config: MultiscaleConfig
    grid: np.ndarray
    alpha: np.ndarray
    betas: list[np.ndarray]
    gamma: np.ndarray
    innovations: list[np.ndarray]
    low_pass: np.ndarray
    components: list[np.ndarray]
    residual_component: np.ndarray
    dates: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return len(self.grid)


def _decompose_arrays(
    phi_rows: np.ndarray,
    residuals: np.ndarray,
    grid: np.ndarray,
    config: MultiscaleConfig,
    dates: np.ndarray | None,
) -> MultiscaleDecomposition:
    alpha = ar_to_ma(phi_rows, config.H)
    betas = extended_wold_beta(alpha, config)
    gamma = scaling_gamma(alpha, config)
    innovations = scale_innovations(residuals, config.J)
    low_pass = scaling_innovations(residuals, config.J)
    components, residual_component = scale_components(
        betas, gamma, innovations, low_pass, config
    )
    return MultiscaleDecomposition(
        config=config,
        grid=grid,
        alpha=alpha,
        betas=betas,
        gamma=gamma,
        innovations=innovations,
        low_pass=low_pass,
        components=components,
        residual_component=residual_component,
        dates=dates,
    )


def decompose(
    fit: TvpArFit, config: MultiscaleConfig, dates: np.ndarray | None = None
) -> MultiscaleDecomposition:
    """Decompose a TVP-AR fit into persistence-scale components.

    Requires the fit to be on the default per-observation grid so that
    coefficient rows, residuals and innovations share one index.
    """
    if len(fit.grid) != len(fit.residuals):
        raise ValueError("decompose requires a fit on the default per-observation grid")
    if dates is not None and len(dates) != len(fit.grid):
        raise ValueError("dates must align with the fit grid")
    return _decompose_arrays(fit.phi[:, 1:], fit.residuals, fit.grid, config, dates)


def decompose_static(
    phi: np.ndarray,
    residuals: np.ndarray,
    config: MultiscaleConfig,
    grid: np.ndarray | None = None,
    dates: np.ndarray | None = None,
) -> MultiscaleDecomposition:
    """Decompose with one time-invariant AR coefficient vector.

    The single alpha row is broadcast across all residual rows, giving the
    same machinery as `decompose` with constant surfaces.
    """
    phi = np.asarray(phi, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    G = len(residuals)
    if grid is None:
        grid = np.arange(1, G + 1, dtype=float) / G
    rows = np.broadcast_to(phi, (G, len(phi)))
    return _decompose_arrays(rows, residuals, np.asarray(grid, dtype=float), config, dates)


@dataclass
class PersistenceShares:
    """Per-date persistence shares across scales.

    shares[r, j-1] is scale j's share of the decomposition's first-translate
    coefficient mass at row r.  Rows with a zero (or, in signed mode,
    negative) denominator are flagged; zero denominators yield NaN shares.
    """

    shares: np.ndarray
    mode: str
    k_index: int
    flagged: np.ndarray
    dates: np.ndarray | None = None


def persistence_shares(
    decomp: MultiscaleDecomposition, mode: str = "absolute", k_index: int = 0
) -> PersistenceShares:
    """Compute per-scale shares of the k_index-translate beta coefficients.

    mode "absolute": |beta_j| / sum_j' |beta_j'| (shares in [0, 1]).
    mode "signed": beta_j / sum_j' beta_j'; rows sum to 1 but a negative
    denominator flips signs, so such rows are flagged rather than adjusted.
    """
    if mode not in ("absolute", "signed"):
        raise ValueError(f"mode must be 'absolute' or 'signed', got {mode!r}")
    for j, b in enumerate(decomp.betas, start=1):
        if k_index >= b.shape[1]:
            raise ValueError(f"k_index {k_index} out of range for scale {j}")
    cols = np.column_stack([b[:, k_index] for b in decomp.betas])
    if mode == "absolute":
        cols = np.abs(cols)
    denom = cols.sum(axis=1)
    flagged = denom <= 0.0 if mode == "signed" else denom == 0.0
    safe = np.where(denom == 0.0, np.nan, denom)
    shares = cols / safe[:, None]
    return PersistenceShares(
        shares=shares, mode=mode, k_index=k_index, flagged=flagged, dates=decomp.dates
    )


def haar_energy_gap(alpha: np.ndarray, config: MultiscaleConfig) -> float:
    """Relative gap between coefficient energy and MA-weight energy.

    | sum beta^2 + sum gamma^2 - sum_{h<H} alpha(h)^2 | / sum_{h<H} alpha(h)^2
    """
    alpha = np.asarray(alpha, dtype=float)
    betas = extended_wold_beta(alpha, config)
    gamma = scaling_gamma(alpha, config)
    energy = sum(float(np.sum(b * b)) for b in betas) + float(np.sum(gamma * gamma))
    target = float(np.sum(alpha[..., : config.H] ** 2))
    if target == 0.0:
        return abs(energy)
    return abs(energy - target) / target


def store_beta_surface(decomp: MultiscaleDecomposition, path: str) -> None:
    """Write the beta surface as a `u,j,k,beta` CSV."""
    lines = ["u,j,k,beta"]
    for r in range(decomp.n_rows):
        u = format_value(decomp.grid[r])
        for j in range(1, decomp.config.J + 1):
            row = decomp.betas[j - 1][r]
            for k in range(len(row)):
                lines.append(f"{u},{j},{k},{format_value(row[k])}")
    atomic_write(path, "\n".join(lines) + "\n")


def store_shares(shares: PersistenceShares, path: str) -> None:
    """Write persistence shares as a `date,j,share` CSV.

    Falls back to the row index when the decomposition carries no dates.
    """
    lines = ["date,j,share"]
    n, J = shares.shares.shape
    for r in range(n):
        key = str(shares.dates[r]) if shares.dates is not None else str(r)
        for j in range(1, J + 1):
            lines.append(f"{key},{j},{format_value(shares.shares[r, j - 1])}")
    atomic_write(path, "\n".join(lines) + "\n")
