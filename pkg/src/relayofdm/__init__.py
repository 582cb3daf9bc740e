"""Link-level simulator for differential space-time relaying over OFDM.

A source talks to a destination through R amplify-and-forward relays over
frequency-selective Rayleigh channels.  Data is carried by unitary matrices,
differentially encoded per subcarrier, so that neither the relays nor the
destination need any channel estimates.  The receiver model includes integer
and fractional timing offsets between relays and an optional half-symbol
double-sampling combiner that removes the sensitivity to the fractional part.
"""

from .channel import ChannelRealization, FirChannel, TapProfile
from .codebook import UnitaryCode, make_code, od2, qod4
from .config import ConfigError, NetworkConfig
from .rxchain import EffectiveChannel, MatchedFilter, MODE_DOUBLE, MODE_SYMBOL_RATE
from .txchain import DelayProfile, Frame

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "ConfigError",
    "DelayProfile",
    "EffectiveChannel",
    "FirChannel",
    "Frame",
    "MatchedFilter",
    "MODE_DOUBLE",
    "MODE_SYMBOL_RATE",
    "NetworkConfig",
    "TapProfile",
    "UnitaryCode",
    "make_code",
    "od2",
    "qod4",
]
