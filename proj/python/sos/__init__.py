"""Score-based oversampling for imbalanced tabular data."""

try:
    from ._sos import *  # noqa: F401,F403
    from ._sos import SosError, main
except ImportError:  # built in-tree: the extension sits on sys.path on its own
    from _sos import *  # noqa: F401,F403
    from _sos import SosError, main
