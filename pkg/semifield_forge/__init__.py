from .errors import SemifieldError
from .families import BHBParams, LMPTBParams, bhb, lmptb
from .field_tower import FieldCtx, TowerParams, make_ctx
from .isotopy import IsotopismTriple, nuclei, verify_isotopism
from .linpoly import LinearizedMap
from .presemifield import Presemifield, SpreadSet

__version__ = "0.1.0"

__all__ = (
    "SemifieldError",
    "TowerParams",
    "FieldCtx",
    "make_ctx",
    "LinearizedMap",
    "Presemifield",
    "SpreadSet",
    "BHBParams",
    "LMPTBParams",
    "bhb",
    "lmptb",
    "IsotopismTriple",
    "verify_isotopism",
    "nuclei",
)
