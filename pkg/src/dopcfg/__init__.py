"""Data-Oriented Parsing through an equivalent PCFG, with Maximum Constituents decoding."""
__version__ = "0.1.0"

from .treebank import BinarizationScheme, Tree, read_penn, write_penn  # noqa: E402,F401
from .reduction import Pcfg, build_pcfg, reduce_corpus  # noqa: E402,F401
from .maxcons import parse_sentence  # noqa: E402,F401
