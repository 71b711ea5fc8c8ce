"""Dimension bookkeeping for deficiency spaces and moduli of k-unduloids.

Each end contributes to dim W according to its position relative to the
symmetry group: 6 in general position, 4 in a mirror plane, 2 along a
rotation axis.  The index difference is half of dim W.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional

from .delaunay import NecksizeParams
from .errors import ParameterError

# horizontal translations tau_i, tau_j and the rotation rho_k
EVEN_KILLING_DIM = 3
ALL_KILLING_DIM = 6


class EndClass(Enum):
    GENERIC = 6
    MIRROR = 4
    AXIS = 2

    @property
    def contribution(self) -> int:
        return self.value


_NAMES = {"generic": EndClass.GENERIC, "mirror": EndClass.MIRROR, "mirror-plane": EndClass.MIRROR,
          "axis": EndClass.AXIS}


def as_end_class(e) -> EndClass:
    if isinstance(e, EndClass):
        return e
    if isinstance(e, str):
        try:
            return _NAMES[e.lower()]
        except KeyError:
            raise ParameterError(f"unknown end class {e!r}") from None
    try:
        return EndClass(e)
    except ValueError:
        raise ParameterError(f"unknown end class {e!r}") from None


def deficiency_dim(ends) -> int:
    ends = list(ends)
    if not ends:
        raise ParameterError("need at least one end")
    return sum(as_end_class(e).contribution for e in ends)


@dataclass(frozen=True)
class DimReport:
    k: int
    genus: Optional[int]
    symmetry: str
    dim_W: int
    index_difference: int
    premoduli: int
    moduli: int
    lower_bound_only: bool

    def as_dict(self):
        return asdict(self)


def moduli_dims(k: int, coplanar: bool = True, nondegenerate: bool = True,
                genus: Optional[int] = None) -> DimReport:
    """Premoduli and moduli dimensions near a k-unduloid.

    Coplanar (mirror symmetric): 2k and 2k - 3.  General: 3k and 3k - 6.
    Without nondegeneracy the premoduli count is only a lower bound.
    """
    if int(k) != k or k < 2:
        raise ParameterError("k must be an integer >= 2")
    k = int(k)
    if coplanar:
        dim_W = deficiency_dim([EndClass.MIRROR] * k)
        killing = EVEN_KILLING_DIM
        tag = "mirror"
    else:
        dim_W = deficiency_dim([EndClass.GENERIC] * k)
        killing = ALL_KILLING_DIM
        tag = "none"
    half = dim_W // 2
    return DimReport(k=k, genus=genus, symmetry=tag, dim_W=dim_W, index_difference=half,
                     premoduli=half, moduli=half - killing, lower_bound_only=not nondegenerate)


def dimension_table(ks=range(2, 7)):
    rows = []
    for k in ks:
        c = moduli_dims(k, coplanar=True)
        g = moduli_dims(k, coplanar=False)
        rows.append({"k": k, "coplanar_premoduli": c.premoduli, "coplanar_moduli": c.moduli,
                     "general_premoduli": g.premoduli, "general_moduli": g.moduli})
    return rows


def consistency_report(params: NecksizeParams, m_max: int = 8, computed_even: Optional[int] = None,
                       tempered=None) -> dict:
    """Compare the computed even tempered count with 2k at k = 2.

    ``computed_even`` overrides the computed value (fault injection for tests);
    ``tempered`` accepts a precomputed TemperedCount.
    """
    from .jacobi_modes import tempered_dimension

    inconclusive = False
    if computed_even is None:
        tc = tempered_dimension(params, m_max) if tempered is None else tempered
        computed_even = tc.even
        inconclusive = tc.inconclusive
    predicted = moduli_dims(2, coplanar=True).premoduli
    consistent = (not inconclusive) and computed_even == predicted
    return {"n": params.n, "computed_even": computed_even, "predicted": predicted,
            "consistent": bool(consistent), "inconclusive": bool(inconclusive)}
