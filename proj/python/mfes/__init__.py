"""Multi-fidelity entropy-search optimization.

Thin python surface over the C++ core: Gaussian-process regression with the
two-source kernel, Monte-Carlo p_min estimation, effort-weighted acquisition,
the cart-pole plant and the LQR design pieces.
"""

try:
    from ._mfes import *  # noqa: F401,F403  (installed package layout)
    from ._mfes import __doc__ as _core_doc  # noqa: F401
except ImportError:  # build-tree layout: the extension sits on sys.path
    from _mfes import *  # noqa: F401,F403

__version__ = "0.1.0"
