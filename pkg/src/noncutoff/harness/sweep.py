"""Spectral-gap sweep over (gamma, s, N) and the two-sided equivalence probe."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from ..basis import HermiteBasis, HermiteField, RadialBasis
from ..kernel import KernelParams
from ..matrices import (OperatorMatrix, assemble_L, assemble_sector_L, gap_on_complement)
from ..norms import VelocityGrid, WeightSpec, seminorm_Nsg


@dataclass
class GapEntry:
    n: int
    gamma: float
    s: float
    N: int
    gap: float
    sector: int            # sector attaining the minimum (-1 for tensor bases)
    seconds: float
    error: str = ""

    @property
    def regime(self):
        r = self.gamma + 2 * self.s
        return "boundary" if abs(r) < 1e-12 else ("hard" if r > 0 else "soft")


def sector_gaps(params, N, theta_nodes=24):
    """Smallest eigenvalue per rotation sector on the complement of the null space."""
    blocks = assemble_sector_L(params, N, theta_nodes)
    out = {}
    for l, B in blocks.items():
        if l == 0:
            Z = RadialBasis(params.n, B.shape[0]).null_coefficients()
        elif l == 1:
            Z = np.eye(B.shape[0])[:1]
        else:
            out[l] = float(np.linalg.eigvalsh(B)[0])
            continue
        if B.shape[0] <= Z.shape[0]:
            continue
        out[l] = gap_on_complement(B, Z)[0]
    return out, blocks


def gap_entry(params, N, theta_nodes=24, save=None):
    """Gap of L on the complement of the null space at basis degree N.

    n = 2 uses the tensor Hermite basis, n = 3 the rotation sectors. With save
    a directory, the matrix (or the sector blocks) is written as .npy + .json.
    """
    t0 = time.perf_counter()
    try:
        if params.n == 2:
            basis = HermiteBasis(2, N)
            A = assemble_L(params, basis, theta_nodes)
            gap, _ = gap_on_complement(A, basis.null_coefficients())
            sector = -1
            if save is not None:
                OperatorMatrix(A, {"kind": "tensor-hermite", "n": 2, "N": N,
                                   "indices": basis.indices.tolist()},
                               params.to_dict(), {"theta_nodes": theta_nodes}
                               ).save(f"{save}/L_n2_g{params.gamma:g}_s{params.s:g}_N{N}")
        else:
            gaps, blocks = sector_gaps(params, N, theta_nodes)
            sector = min(gaps, key=gaps.get)
            gap = gaps[sector]
            if save is not None:
                for l, B in blocks.items():
                    OperatorMatrix(B, {"kind": "sector", "n": params.n, "N": N, "l": l},
                                   params.to_dict(), {"theta_nodes": theta_nodes}
                                   ).save(f"{save}/L_n{params.n}_g{params.gamma:g}_s{params.s:g}_N{N}_l{l}")
        err = ""
    except np.linalg.LinAlgError as e:
        gap, sector, err = float("nan"), -1, f"eigensolver: {e}"
    return GapEntry(params.n, params.gamma, params.s, N, float(gap), int(sector),
                    time.perf_counter() - t0, err)


def spectral_sweep(configs, N_list=(8, 12, 16), theta_nodes=24, save=None):
    """Gap table: one GapEntry per (config, N)."""
    return [gap_entry(p, N, theta_nodes, save) for p in configs for N in N_list]


def assess_gaps(entries, hard_tol=0.10, soft_drop=0.30, boundary_floor=0.5, known=("soft",)):
    """Per config: the dichotomy verdict.

    hard: relative spread over N <= hard_tol; soft: 1 - gap(N_max)/gap(N_min)
    >= soft_drop; boundary: min over N >= boundary_floor * gap(N_min).
    Failures in a regime listed in known get status "xfail".
    """
    by = {}
    for e in entries:
        by.setdefault((e.n, e.gamma, e.s), []).append(e)
    out = []
    for (n, g, s), es in by.items():
        es = sorted(es, key=lambda e: e.N)
        gaps = np.array([e.gap for e in es])
        regime = es[0].regime
        row = {"n": n, "gamma": g, "s": s, "regime": regime,
               "N": [e.N for e in es], "gaps": gaps.tolist()}
        if np.any(~np.isfinite(gaps)):
            row.update(passed=False, note="eigensolver failure")
        elif regime == "hard":
            spread = float((gaps.max() - gaps.min()) / gaps.max())
            row.update(spread=spread, passed=spread <= hard_tol)
        elif regime == "soft":
            drop = float(1 - gaps[-1] / gaps[0])
            row.update(drop=drop, passed=drop >= soft_drop)
        else:
            ratio = float(gaps.min() / gaps[0])
            row.update(ratio=ratio, passed=bool(gaps.min() > 0 and ratio >= boundary_floor))
        row["passed"] = bool(row["passed"])
        row["status"] = ("pass" if row["passed"]
                         else "xfail" if regime in known and "note" not in row else "fail")
        out.append(row)
    return out


def equivalence_probe(params, N=12, n_samples=50, grid=None, seed=0, theta_nodes=24, A=None):
    """min/max over random g = {I-P} g of <L g, g> / |g|^2_{N^{s,gamma}}.

    Returns dict with c, C, the ratios and the homogeneity defect under g -> 2g.
    """
    if params.n != 2:
        raise ValueError("the probe uses the n = 2 tensor basis")
    basis = HermiteBasis(2, N)
    A = assemble_L(params, basis, theta_nodes) if A is None else A
    grid = grid or VelocityGrid(2, 64, 8.0)
    Q, _ = np.linalg.qr(basis.null_coefficients().T)
    spec = WeightSpec.from_params(params)
    rng = np.random.default_rng(seed)
    ratios = []
    resampled = 0
    first = None
    while len(ratios) < n_samples:
        c = rng.normal(size=basis.size)
        c = c - Q @ (Q.T @ c)
        if np.linalg.norm(c) < 1e-12:
            resampled += 1
            continue
        r = c @ A @ c / seminorm_Nsg(spec, HermiteField(basis, c), grid) ** 2
        ratios.append(r)
        if first is None:
            first = (c, r)
    c0, r0 = first
    r2 = (2 * c0) @ A @ (2 * c0) / seminorm_Nsg(spec, HermiteField(basis, 2 * c0), grid) ** 2
    ratios = np.array(ratios)
    return {"c": float(ratios.min()), "C": float(ratios.max()),
            "C_over_c": float(ratios.max() / ratios.min()), "ratios": ratios.tolist(),
            "homogeneity_defect": float(abs(r2 - r0) / r0), "resampled": resampled,
            "N": N, "grid": [grid.N, grid.L]}


def entries_as_rows(entries):
    return [dict(asdict(e), regime=e.regime) for e in entries]
