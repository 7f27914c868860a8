"""Feature vocabulary shared by the world and the network interface.

Features are plain strings. Their position in ``LOCATION_FEATURES`` /
``MOTOR_FEATURES`` is the index of the interface neuron that carries them.
"""

from __future__ import annotations

import numpy as np

WALLS = ("NorthWall", "EastWall", "SouthWall", "WestWall")
NAMES = tuple(f"#{i}" for i in range(25))

LOCATION_FEATURES: tuple[str, ...] = ("OK", "KO", *WALLS, "Cold", "Sound", *NAMES)
MOVES: tuple[str, ...] = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")
MOTOR_FEATURES: tuple[str, ...] = (*MOVES, "Diag", "Orth")
FAILURE = "Failure"

L_INDEX = {f: i for i, f in enumerate(LOCATION_FEATURES)}
M_INDEX = {f: i for i, f in enumerate(MOTOR_FEATURES)}

# grid offsets, y grows northwards
MOVE_DELTAS = {
    "N": (0, 1), "NE": (1, 1), "E": (1, 0), "SE": (1, -1),
    "S": (0, -1), "SW": (-1, -1), "W": (-1, 0), "NW": (-1, 1),
}
# wall features that block each move when present on the depart box
MOVE_BLOCKERS = {
    "N": ("NorthWall",), "E": ("EastWall",), "S": ("SouthWall",), "W": ("WestWall",),
    "NE": ("NorthWall", "EastWall"), "SE": ("SouthWall", "EastWall"),
    "SW": ("SouthWall", "WestWall"), "NW": ("NorthWall", "WestWall"),
}

# Aliases accepted wherever a move is given on the command line or in documents.
MOVE_ALIASES = {
    "North": "N", "North-East": "NE", "East": "E", "South-East": "SE",
    "South": "S", "South-West": "SW", "West": "W", "North-West": "NW",
}


def canonical_move(move: str) -> str:
    move = MOVE_ALIASES.get(move, move)
    if move not in MOVE_DELTAS:
        raise ValueError(f"unknown move {move!r}")
    return move


def is_diagonal(move: str) -> bool:
    dx, dy = MOVE_DELTAS[canonical_move(move)]
    return dx != 0 and dy != 0


def motor_features(move: str) -> frozenset[str]:
    """The two proprioceptive features of a move, e.g. ``{"NE", "Diag"}``."""
    move = canonical_move(move)
    return frozenset((move, "Diag" if is_diagonal(move) else "Orth"))


def motor_indices(move: str) -> np.ndarray:
    move = canonical_move(move)
    return np.array([M_INDEX[move], M_INDEX["Diag" if is_diagonal(move) else "Orth"]])


def exclusive(a: str, b: str) -> bool:
    """Symmetric mutual-exclusion relation over features (Failure included)."""
    if a == b:
        return False
    if FAILURE in (a, b):
        other = b if a == FAILURE else a
        return other in L_INDEX
    if {a, b} == {"OK", "KO"}:
        return True
    return a in NAMES and b in NAMES


def _exclusion_matrix() -> np.ndarray:
    n = len(LOCATION_FEATURES)
    mat = np.zeros((n, n), dtype=bool)
    for i, a in enumerate(LOCATION_FEATURES):
        for j, b in enumerate(LOCATION_FEATURES):
            mat[i, j] = exclusive(a, b)
    return mat


# EXCLUSION[i, j] is True when L-neurons i and j inhibit each other.
EXCLUSION = _exclusion_matrix()
EXCLUSION.setflags(write=False)
EXCLUSION_LISTS: tuple[tuple[int, ...], ...] = tuple(
    tuple(np.flatnonzero(row).tolist()) for row in EXCLUSION
)


def location_indices(features) -> np.ndarray:
    """Sorted L-neuron indices for a collection of location features."""
    try:
        return np.array(sorted(L_INDEX[f] for f in features), dtype=np.intp)
    except KeyError as exc:
        raise ValueError(f"not a location feature: {exc.args[0]!r}") from None


def feature_class(feature: str) -> str:
    """Metric grouping used by the hit-rate tables."""
    if feature in WALLS:
        return "Wall"
    if feature in NAMES:
        return "BoxName"
    return feature


FEATURE_CLASSES = ("OK", "KO", FAILURE, "Wall", "Cold", "Sound", "BoxName")
