"""15-level double-quantum-dot Hamiltonian: construction and eigenvalue branches.

The model describes a double dot where an electron loads into left-dot states
L1, L2 or right-dot states R1..R4, each orbital carrying a valley (V) and a
ground (G) copy. Spin splits the levels into uncoupled triplet and singlet
sectors:

    triplet basis (8): L2V, L2G, L1V, L1G, R4V, R4G, R2V, R2G
    singlet basis (7): L2V, L2G, L1V, L1G, R3V, R3G, R1V

Diagonal entries are +eps/2 (+ orbital offset) for left states and -eps/2
(+ offset) for right states; tunnel couplings t_ij hybridize right state i
with left state j. The inter-dot valley phase is fixed to zero, so the
triplet block splits into two identical 4x4 valley copies, and the singlet
block into a 4x4 valley copy (which contains the single R1 valley state)
plus a 3x3 ground copy.

Energies are GHz throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

TRIPLET_COUPLINGS = ("t21", "t22", "t41", "t42")
SINGLET_COUPLINGS = ("t11", "t12", "t31", "t32")
COUPLING_NAMES = SINGLET_COUPLINGS[:2] + TRIPLET_COUPLINGS[:2] + SINGLET_COUPLINGS[2:] + TRIPLET_COUPLINGS[2:]
# canonical reporting order: t11, t12, t21, t22, t31, t32, t41, t42
COUPLING_NAMES = tuple(sorted(COUPLING_NAMES))

OFFSET_NAMES = ("l21", "r21", "r31", "r41")

SECTORS = ("triplet", "singlet")


@dataclass(frozen=True)
class TunnelCouplings:
    """Eight signed tunnel couplings (GHz).

    Values are stored as signed floats; the magnitude is ``abs(value)`` and
    the sign flag is recovered with :meth:`sign`. t21/t22/t41/t42 act in the
    triplet sector, t11/t12/t31/t32 in the singlet sector.
    """

    t11: float = 0.0
    t12: float = 0.0
    t21: float = 0.0
    t22: float = 0.0
    t31: float = 0.0
    t32: float = 0.0
    t41: float = 0.0
    t42: float = 0.0

    def __post_init__(self):
        for name in COUPLING_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"coupling {name} must be finite, got {value!r}")

    def value(self, name: str) -> float:
        return getattr(self, name)

    def magnitude(self, name: str) -> float:
        return abs(getattr(self, name))

    def sign(self, name: str) -> int:
        return -1 if getattr(self, name) < 0 else 1

    def magnitudes(self) -> dict[str, float]:
        return {name: self.magnitude(name) for name in COUPLING_NAMES}

    def with_signs(self, signs: dict[str, int]) -> "TunnelCouplings":
        """Return a copy with magnitudes kept and signs set from `signs`."""
        bad = set(signs) - set(COUPLING_NAMES)
        if bad:
            raise ValueError(f"unknown coupling names: {sorted(bad)}")
        updates = {}
        for name, sgn in signs.items():
            if sgn not in (-1, 1):
                raise ValueError(f"sign for {name} must be +1 or -1, got {sgn!r}")
            updates[name] = sgn * self.magnitude(name)
        return replace(self, **updates)


@dataclass(frozen=True)
class LevelOffsets:
    """Orbital offsets (GHz): left excited l21 and right excited r21 <= r31 <= r41."""

    l21: float = 0.0
    r21: float = 0.0
    r31: float = 0.0
    r41: float = 0.0

    def __post_init__(self):
        for name in OFFSET_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"offset {name} must be finite and >= 0, got {value!r}")
        if not (self.r21 <= self.r31 <= self.r41):
            raise ValueError(
                f"right-dot offsets must be ordered r21 <= r31 <= r41, "
                f"got {self.r21}, {self.r31}, {self.r41}"
            )


@dataclass(frozen=True)
class ModelParams:
    """Full model parameter set: couplings, level offsets and Zeeman energy (GHz)."""

    couplings: TunnelCouplings = field(default_factory=TunnelCouplings)
    offsets: LevelOffsets = field(default_factory=LevelOffsets)
    zeeman: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.zeeman) or self.zeeman < 0:
            raise ValueError(f"zeeman must be finite and >= 0, got {self.zeeman!r}")

    def to_dict(self) -> dict:
        return {
            "couplings": {name: self.couplings.value(name) for name in COUPLING_NAMES},
            "offsets": {name: getattr(self.offsets, name) for name in OFFSET_NAMES},
            "zeeman": self.zeeman,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelParams":
        try:
            couplings = TunnelCouplings(**doc.get("couplings", {}))
            offsets = LevelOffsets(**doc.get("offsets", {}))
            zeeman = float(doc.get("zeeman", 0.0))
        except TypeError as exc:
            raise ValueError(f"bad model parameter document: {exc}") from exc
        return cls(couplings=couplings, offsets=offsets, zeeman=zeeman)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, order=True)
class BranchLabel:
    """Eigenvalue branch identifier: sector, ascending index, triplet spin projection."""

    sector: str
    index: int
    spin_z: int = 0

    def __post_init__(self):
        if self.sector not in SECTORS:
            raise ValueError(f"sector must be one of {SECTORS}, got {self.sector!r}")
        if self.spin_z not in (-1, 0, 1):
            raise ValueError(f"spin_z must be -1, 0 or +1, got {self.spin_z!r}")
        if self.sector == "singlet" and self.spin_z != 0:
            raise ValueError("singlet branches carry spin_z = 0")
        if self.index < 0:
            raise ValueError(f"branch index must be >= 0, got {self.index}")

    def key(self) -> str:
        if self.spin_z:
            return f"{self.sector}:{self.index}:{self.spin_z:+d}"
        return f"{self.sector}:{self.index}"

    @classmethod
    def from_key(cls, key: str) -> "BranchLabel":
        parts = key.split(":")
        if len(parts) == 2:
            return cls(parts[0], int(parts[1]))
        if len(parts) == 3:
            return cls(parts[0], int(parts[1]), int(parts[2]))
        raise ValueError(f"bad branch key {key!r}")


def _check_eps(eps) -> np.ndarray:
    eps = np.asarray(eps, dtype=float)
    if not np.all(np.isfinite(eps)):
        raise ValueError("eps must be finite")
    return eps


def build_triplet_block(params: ModelParams, eps: float) -> np.ndarray:
    """8x8 triplet block in the basis L2V, L2G, L1V, L1G, R4V, R4G, R2V, R2G."""
    eps = float(_check_eps(eps))
    c, o = params.couplings, params.offsets
    h = np.zeros((8, 8))
    np.fill_diagonal(
        h,
        [
            eps / 2 + o.l21,
            eps / 2 + o.l21,
            eps / 2,
            eps / 2,
            -eps / 2 + o.r41,
            -eps / 2 + o.r41,
            -eps / 2 + o.r21,
            -eps / 2 + o.r21,
        ],
    )
    pairs = [
        (0, 4, c.t42), (0, 6, c.t22),
        (1, 5, c.t42), (1, 7, c.t22),
        (2, 4, c.t41), (2, 6, c.t21),
        (3, 5, c.t41), (3, 7, c.t21),
    ]
    for i, j, t in pairs:
        h[i, j] = h[j, i] = t
    return h


def build_singlet_block(params: ModelParams, eps: float) -> np.ndarray:
    """7x7 singlet block in the basis L2V, L2G, L1V, L1G, R3V, R3G, R1V.

    Only one valley state exists for R1 (the right dot already holds three
    electrons), so the R1V column couples only to L2V (t12) and L1V (t11).
    """
    eps = float(_check_eps(eps))
    c, o = params.couplings, params.offsets
    h = np.zeros((7, 7))
    np.fill_diagonal(
        h,
        [
            eps / 2 + o.l21,
            eps / 2 + o.l21,
            eps / 2,
            eps / 2,
            -eps / 2 + o.r31,
            -eps / 2 + o.r31,
            -eps / 2,
        ],
    )
    pairs = [
        (0, 4, c.t32), (0, 6, c.t12),
        (1, 5, c.t32),
        (2, 4, c.t31), (2, 6, c.t11),
        (3, 5, c.t31),
    ]
    for i, j, t in pairs:
        h[i, j] = h[j, i] = t
    return h


def build_hamiltonian(params: ModelParams, eps: float) -> np.ndarray:
    """Full 15x15 block-diagonal Hamiltonian (triplet block first)."""
    h = np.zeros((15, 15))
    h[:8, :8] = build_triplet_block(params, eps)
    h[8:, 8:] = build_singlet_block(params, eps)
    return h


def _triplet_valley_blocks(params: ModelParams, eps: np.ndarray) -> np.ndarray:
    """Stacked 4x4 valley copies of the triplet block, basis L2, L1, R4, R2."""
    c, o = params.couplings, params.offsets
    n = eps.shape[0]
    h = np.zeros((n, 4, 4))
    h[:, 0, 0] = eps / 2 + o.l21
    h[:, 1, 1] = eps / 2
    h[:, 2, 2] = -eps / 2 + o.r41
    h[:, 3, 3] = -eps / 2 + o.r21
    h[:, 0, 2] = h[:, 2, 0] = c.t42
    h[:, 0, 3] = h[:, 3, 0] = c.t22
    h[:, 1, 2] = h[:, 2, 1] = c.t41
    h[:, 1, 3] = h[:, 3, 1] = c.t21
    return h


def _singlet_valley_blocks(params: ModelParams, eps: np.ndarray) -> np.ndarray:
    """Stacked 4x4 singlet valley copies, basis L2V, L1V, R3V, R1V."""
    c, o = params.couplings, params.offsets
    n = eps.shape[0]
    h = np.zeros((n, 4, 4))
    h[:, 0, 0] = eps / 2 + o.l21
    h[:, 1, 1] = eps / 2
    h[:, 2, 2] = -eps / 2 + o.r31
    h[:, 3, 3] = -eps / 2
    h[:, 0, 2] = h[:, 2, 0] = c.t32
    h[:, 0, 3] = h[:, 3, 0] = c.t12
    h[:, 1, 2] = h[:, 2, 1] = c.t31
    h[:, 1, 3] = h[:, 3, 1] = c.t11
    return h


def _singlet_ground_blocks(params: ModelParams, eps: np.ndarray) -> np.ndarray:
    """Stacked 3x3 singlet ground copies, basis L2G, L1G, R3G."""
    c, o = params.couplings, params.offsets
    n = eps.shape[0]
    h = np.zeros((n, 3, 3))
    h[:, 0, 0] = eps / 2 + o.l21
    h[:, 1, 1] = eps / 2
    h[:, 2, 2] = -eps / 2 + o.r31
    h[:, 0, 2] = h[:, 2, 0] = c.t32
    h[:, 1, 2] = h[:, 2, 1] = c.t31
    return h


def singlet_is_collapsed(params: ModelParams) -> bool:
    """True when the singlet ground copy duplicates part of the valley copy.

    With t11 = t12 = 0 the R1V state decouples and the remaining valley
    sub-block equals the ground sub-block exactly, so the sector carries only
    4 distinct branches instead of 7.
    """
    return params.couplings.t11 == 0.0 and params.couplings.t12 == 0.0


def sector_branch_count(params: ModelParams, sector: str) -> int:
    if sector == "triplet":
        return 4
    if sector == "singlet":
        return 4 if singlet_is_collapsed(params) else 7
    raise ValueError(f"unknown sector {sector!r}")


def branch_energy_curves(params: ModelParams, eps):
    """Collapsed branch energies over an eps array, without Zeeman shifts.

    Returns ``(triplet, singlet)`` arrays of shape (n_eps, n_branches),
    branches ascending within each sector at every eps. Triplet branches are
    the eigenvalues of one 4x4 valley copy (each stands for two degenerate
    raw eigenvalues); singlet branches merge the 4x4 valley and 3x3 ground
    copies, collapsing to the valley copy alone when t11 = t12 = 0.
    """
    eps = np.atleast_1d(_check_eps(eps))
    triplet = np.linalg.eigvalsh(_triplet_valley_blocks(params, eps))
    valley = np.linalg.eigvalsh(_singlet_valley_blocks(params, eps))
    if singlet_is_collapsed(params):
        singlet = valley
    else:
        ground = np.linalg.eigvalsh(_singlet_ground_blocks(params, eps))
        singlet = np.sort(np.concatenate([valley, ground], axis=1), axis=1)
    return triplet, singlet


def branch_labels(params: ModelParams) -> list[BranchLabel]:
    """All branch labels for `params`, triplet sector first.

    Triplet branches are listed once per spin projection (-1, 0, +1) when
    zeeman > 0 and once (spin_z = 0) otherwise.
    """
    spins = (-1, 0, 1) if params.zeeman > 0 else (0,)
    labels = [
        BranchLabel("triplet", i, sz)
        for i in range(sector_branch_count(params, "triplet"))
        for sz in spins
    ]
    labels += [
        BranchLabel("singlet", i)
        for i in range(sector_branch_count(params, "singlet"))
    ]
    return labels


def eigen_branches(params: ModelParams, eps: float) -> list[tuple[BranchLabel, float]]:
    """Labeled branch energies at a single eps, Zeeman shifts applied.

    Triplet branches appear at E + spin_z * zeeman for spin_z in {-1, 0, +1}
    when zeeman > 0; singlet branches are unshifted. Order is deterministic:
    triplet branches ascending (spin replicas -1, 0, +1 within a branch),
    then singlet branches ascending.
    """
    triplet, singlet = branch_energy_curves(params, float(eps))
    triplet, singlet = triplet[0], singlet[0]
    out: list[tuple[BranchLabel, float]] = []
    spins = (-1, 0, 1) if params.zeeman > 0 else (0,)
    for i, energy in enumerate(triplet):
        for sz in spins:
            out.append((BranchLabel("triplet", i, sz), float(energy + sz * params.zeeman)))
    for i, energy in enumerate(singlet):
        out.append((BranchLabel("singlet", i), float(energy)))
    return out


def branch_energies(params: ModelParams, labels: list[BranchLabel], eps) -> np.ndarray:
    """Energies of specific branches over an eps array, shape (n_labels, n_eps)."""
    eps = np.atleast_1d(_check_eps(eps))
    triplet, singlet = branch_energy_curves(params, eps)
    by_sector = {"triplet": triplet, "singlet": singlet}
    rows = []
    for label in labels:
        curves = by_sector[label.sector]
        if label.index >= curves.shape[1]:
            raise ValueError(
                f"branch {label.key()} out of range: sector has {curves.shape[1]} branches"
            )
        rows.append(curves[:, label.index] + label.spin_z * params.zeeman)
    return np.asarray(rows)


def raw_eigenvalues(params: ModelParams, eps: float) -> np.ndarray:
    """All 15 eigenvalues of the full Hamiltonian, ascending, no Zeeman shifts."""
    return np.linalg.eigvalsh(build_hamiltonian(params, eps))


def sign_class_representatives() -> dict[str, dict[str, int]]:
    """Representatives of the two tunnel-coupling sign equivalence classes.

    Flipping an even number of same-sector coupling signs only flips basis
    vector signs and leaves the spectrum unchanged, so all 256 assignments
    reduce to two classes: all-positive, and one negative coupling in each
    sector (here t21 and t11).
    """
    all_pos = {name: 1 for name in COUPLING_NAMES}
    mixed = dict(all_pos)
    mixed["t21"] = -1
    mixed["t11"] = -1
    return {"a": all_pos, "b": mixed}
