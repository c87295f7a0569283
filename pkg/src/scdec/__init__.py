"""Surface-code high-level decoder toolkit.

Building blocks: rotated-surface-code geometry (:mod:`scdec.lattice`),
depolarizing noise (:mod:`scdec.noise`), the symmetric pure-error decoder
(:mod:`scdec.ped`), a feed-forward syndrome classifier with float and
bit-exact fixed-point inference (:mod:`scdec.nn`), ADAM training
(:mod:`scdec.train`), an exact minimum-weight matching baseline
(:mod:`scdec.mwpm`), Monte Carlo benchmarking and curve fitting
(:mod:`scdec.eval`), and a structural hardware cost model
(:mod:`scdec.hwcost`).  ``scdec.cli`` binds everything into an experiment
runner.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND

__all__ = ["BACKEND", "__version__"]
