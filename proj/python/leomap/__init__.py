"""IPv6 measurement toolkit for LEO ISP topology mapping.

The heavy lifting lives in the `_leomap` extension: candidate generation
from GeoIP allocations, the gateway address codec, reverse-DNS PoP
attribution, backbone graph inference, and a deterministic network
simulator that answers probes like the real thing.
"""

from ._leomap import *  # noqa: F401,F403
from ._leomap import __doc__ as _doc  # noqa: F401
