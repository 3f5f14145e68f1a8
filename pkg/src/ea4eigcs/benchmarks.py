"""CEC-style benchmark functions: shifted/rotated basics, hybrids, compositions.

All functions are minimisation problems on [-100, 100]^D with known optimum
value 0 at the shift vector. Base functions are written so that f(0) is
exactly 0.0 in floating point (per-term cancellation, no global constants).
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import Bounds

DEFAULT_LO, DEFAULT_HI = -100.0, 100.0


# ---------------------------------------------------------------------------
# base functions, vectorised over rows; Z has shape (N, D)

def sphere(Z):
    return np.sum(Z * Z, axis=-1)


def ellipsoid(Z):
    n = Z.shape[-1]
    if n == 1:
        return (Z * Z)[..., 0]
    w = np.power(10.0, 6.0 * np.arange(n) / (n - 1))
    return np.sum(w * Z * Z, axis=-1)


def bent_cigar(Z):
    return Z[..., 0] ** 2 + 1.0e6 * np.sum(Z[..., 1:] ** 2, axis=-1)


def rastrigin(Z):
    return np.sum(Z * Z - 10.0 * np.cos(2.0 * np.pi * Z) + 10.0, axis=-1)


def rosenbrock0(Z):
    # classic Rosenbrock moved so the optimum sits at the origin
    W = Z + 1.0
    a = W[..., :-1]
    b = W[..., 1:]
    return np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2, axis=-1)


_SCHW_X = 420.9687462275036
_SCHW_C = _SCHW_X * np.sin(np.sqrt(_SCHW_X))


def schwefel0(Z):
    n = Z.shape[-1]
    U = Z + _SCHW_X
    g = np.empty_like(U)
    pen = np.zeros_like(U)

    inside = np.abs(U) <= 500.0
    g[inside] = U[inside] * np.sin(np.sqrt(np.abs(U[inside])))

    hi = U > 500.0
    if hi.any():
        v = 500.0 - np.mod(U[hi], 500.0)
        g[hi] = v * np.sin(np.sqrt(v))
        pen[hi] = (U[hi] - 500.0) ** 2 / (10000.0 * n)

    lo = U < -500.0
    if lo.any():
        m = np.mod(np.abs(U[lo]), 500.0)
        g[lo] = (m - 500.0) * np.sin(np.sqrt(500.0 - m))
        pen[lo] = (U[lo] + 500.0) ** 2 / (10000.0 * n)

    return np.sum(_SCHW_C - g + pen, axis=-1)


def griewank(Z):
    n = Z.shape[-1]
    s = np.sum(Z * Z, axis=-1) / 4000.0
    p = np.prod(np.cos(Z / np.sqrt(np.arange(1.0, n + 1.0))), axis=-1)
    return 1.0 + s - p


def ackley(Z):
    n = Z.shape[-1]
    rms = np.sqrt(np.sum(Z * Z, axis=-1) / n)
    mc = np.sum(np.cos(2.0 * np.pi * Z), axis=-1) / n
    # grouped so both parts vanish exactly at the origin
    return (20.0 - 20.0 * np.exp(-0.2 * rms)) + (np.exp(1.0) - np.exp(mc))


def levy0(Z):
    # Levy with optimum moved to the origin (w = 1 + z/4)
    U = Z / 4.0
    W = 1.0 + U
    term1 = np.sin(np.pi * U[..., 0]) ** 2
    mid = np.sum(
        (W[..., :-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * W[..., :-1] + 1.0) ** 2),
        axis=-1,
    )
    last = (W[..., -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * U[..., -1]) ** 2)
    return term1 + mid + last


BASE_FUNCTIONS = {
    "sphere": sphere,
    "ellipsoid": ellipsoid,
    "bent_cigar": bent_cigar,
    "rastrigin": rastrigin,
    "rosenbrock": rosenbrock0,
    "schwefel": schwefel0,
    "griewank": griewank,
    "ackley": ackley,
    "levy": levy0,
}

_HYBRID_BASES = {
    "hybrid1": ("rastrigin", "ellipsoid", "ackley"),
    "hybrid2": ("griewank", "schwefel", "levy"),
}
_COMPOSITION_BASES = {
    "composition1": ("rastrigin", "griewank", "ackley"),
    "composition2": ("ellipsoid", "schwefel", "levy"),
}
_COMPOSITION_SIGMAS = (10.0, 20.0, 30.0)
_COMPOSITION_BIASES = (0.0, 100.0, 200.0)


def _hybrid_blocks(D: int) -> list[slice]:
    """Contiguous coordinate blocks (3 blocks, or fewer when D is tiny)."""
    nblocks = min(3, D)
    sizes = [D // nblocks] * nblocks
    for i in range(D - sum(sizes)):
        sizes[-(i + 1)] += 1
    edges = np.cumsum([0] + sizes)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass
class BenchmarkFunction:
    """Shifted/rotated benchmark problem with optimum f_star at `shift`."""

    id: int
    name: str
    D: int
    bounds: Bounds
    shift: np.ndarray          # (D,) for basics/hybrids; (K, D) for compositions
    rotation: np.ndarray       # (D, D), or (K, D, D) for compositions
    f_star: float = 0.0
    kind: str = "basic"        # basic | hybrid | composition

    def __post_init__(self):
        self.shift = np.asarray(self.shift, dtype=float)
        self.rotation = np.asarray(self.rotation, dtype=float)

    # -- evaluation ---------------------------------------------------------
    def __call__(self, x) -> float:
        return float(self.batch(np.asarray(x, dtype=float)[None, :])[0])

    def batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kind == "basic":
            Z = (X - self.shift) @ self.rotation.T
            return BASE_FUNCTIONS[self.name](Z)
        if self.kind == "hybrid":
            Z = (X - self.shift) @ self.rotation.T
            total = np.zeros(len(X))
            blocks = _hybrid_blocks(self.D)
            for base, blk in zip(_HYBRID_BASES[self.name], blocks):
                total += BASE_FUNCTIONS[base](Z[:, blk])
            return total
        if self.kind == "composition":
            bases = _COMPOSITION_BASES[self.name]
            K = len(bases)
            vals = np.empty((len(X), K))
            d2 = np.empty((len(X), K))
            for k, base in enumerate(bases):
                delta = X - self.shift[k]
                d2[:, k] = np.sum(delta * delta, axis=-1)
                vals[:, k] = BASE_FUNCTIONS[base](delta @ self.rotation[k].T) + _COMPOSITION_BIASES[k]
            w = np.exp(-d2 / (2.0 * self.D * np.array(_COMPOSITION_SIGMAS) ** 2))
            # exact hit on a component optimum: that component alone decides
            hit = d2 == 0.0
            rows = hit.any(axis=1)
            w[rows] = hit[rows].astype(float)
            w /= np.sum(w, axis=1, keepdims=True)
            return np.sum(w * vals, axis=1)
        raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def optimum(self) -> np.ndarray:
        return self.shift[0] if self.kind == "composition" else self.shift


@dataclass
class SuiteManifest:
    functions: list[BenchmarkFunction]
    data_dir: str | None = None

    def by_id(self, fid: int) -> BenchmarkFunction:
        for f in self.functions:
            if f.id == fid:
                return f
        raise KeyError(f"no function with id {fid}")

    def by_name(self, name: str) -> BenchmarkFunction:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(f"no function named {name!r}")


_SUITE_NAMES = [
    "ellipsoid", "bent_cigar",
    "rastrigin", "rosenbrock", "schwefel", "griewank", "ackley", "levy",
    "hybrid1", "hybrid2",
    "composition1", "composition2",
]


def random_rotation(D: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((D, D)))
    return q * np.sign(np.diag(r))


def _central_shift(D: int, rng: np.random.Generator) -> np.ndarray:
    # central 80% of the box
    span = DEFAULT_HI - DEFAULT_LO
    return DEFAULT_LO + span * (0.1 + 0.8 * rng.random(D))


def make_suite(D: int, seed: int) -> SuiteManifest:
    """12 functions mirroring the CEC 2022 structure, deterministic in (D, seed)."""
    if D not in (2, 10, 20):
        raise ValueError(f"unsupported dimension {D}; expected one of 2, 10, 20")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(D,))))
    bounds = Bounds.cube(DEFAULT_LO, DEFAULT_HI, D)
    funcs = []
    for i, name in enumerate(_SUITE_NAMES, start=1):
        if name.startswith("composition"):
            shift = np.stack([_central_shift(D, rng) for _ in range(3)])
            rot = np.stack([random_rotation(D, rng) for _ in range(3)])
            kind = "composition"
        else:
            shift = _central_shift(D, rng)
            rot = random_rotation(D, rng)
            kind = "hybrid" if name.startswith("hybrid") else "basic"
        funcs.append(BenchmarkFunction(i, name, D, bounds, shift, rot, 0.0, kind))
    return SuiteManifest(funcs)


def plain_function(name: str, D: int) -> BenchmarkFunction:
    """Unshifted, unrotated instance of a base function (sphere, rastrigin, ...)."""
    if name not in BASE_FUNCTIONS:
        raise KeyError(f"unknown base function {name!r}")
    return BenchmarkFunction(
        0, name, D, Bounds.cube(DEFAULT_LO, DEFAULT_HI, D),
        np.zeros(D), np.eye(D), 0.0, "basic",
    )


# ---------------------------------------------------------------------------
# plain-text matrix persistence and suite manifests

def save_matrix(M: np.ndarray, path: str) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w") as fh:
        for row in M:
            fh.write(" ".join("%.17g" % v for v in row) + "\n")


def load_matrix(path: str) -> np.ndarray:
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if width is None:
                width = len(tokens)
            elif len(tokens) != width:
                raise ValueError(f"{path}:{lineno}: ragged row ({len(tokens)} columns, expected {width})")
            try:
                rows.append([float(t) for t in tokens])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric token ({exc})") from None
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    return np.array(rows)


def save_suite(suite: SuiteManifest, data_dir: str) -> None:
    os.makedirs(data_dir, exist_ok=True)
    lines = []
    for f in suite.functions:
        shift_file = f"f{f.id:02d}_shift.txt"
        rot_file = f"f{f.id:02d}_rot.txt"
        save_matrix(np.atleast_2d(f.shift), os.path.join(data_dir, shift_file))
        rot = f.rotation if f.rotation.ndim == 2 else f.rotation.reshape(-1, f.D)
        save_matrix(rot, os.path.join(data_dir, rot_file))
        lines.append(f"{f.id} {f.name} {f.D} {shift_file} {rot_file}")
    with open(os.path.join(data_dir, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_suite(data_dir: str) -> SuiteManifest:
    manifest = os.path.join(data_dir, "manifest.txt")
    funcs = []
    seen = set()
    with open(manifest) as fh:
        for line in fh:
            if not line.strip():
                continue
            fid_s, name, d_s, shift_file, rot_file = line.split()
            fid, D = int(fid_s), int(d_s)
            if fid in seen:
                raise ValueError(f"duplicate function id {fid} in {manifest}")
            seen.add(fid)
            shift = load_matrix(os.path.join(data_dir, shift_file))
            rot = load_matrix(os.path.join(data_dir, rot_file))
            if shift.shape[1] != D or rot.shape[1] != D or rot.shape[0] % D:
                raise ValueError(f"{manifest}: data for function {fid} does not match dimension {D}")
            kind = "basic"
            if name.startswith("hybrid"):
                kind = "hybrid"
            elif name.startswith("composition"):
                kind = "composition"
            if kind == "composition":
                shift_arr = shift
                rot_arr = rot.reshape(-1, D, D)
                if len(shift_arr) != len(rot_arr):
                    raise ValueError(f"{manifest}: component count mismatch for function {fid}")
            else:
                if shift.shape[0] != 1 or rot.shape[0] != D:
                    raise ValueError(f"{manifest}: data for function {fid} does not match dimension {D}")
                shift_arr = shift[0]
                rot_arr = rot
            bounds = Bounds.cube(DEFAULT_LO, DEFAULT_HI, D)
            funcs.append(BenchmarkFunction(fid, name, D, bounds, shift_arr, rot_arr, 0.0, kind))
    return SuiteManifest(funcs, data_dir)
