"""Operator fractional Levy motion: simulation and numerical verification.

Subpackages cover matrix-analytic primitives (:mod:`oflm.matfun`), the
moving-average and harmonizable kernels (:mod:`oflm.kernels`), finite
second-moment Levy measures (:mod:`oflm.levy`), path simulation
(:mod:`oflm.simulate`), ensemble statistics (:mod:`oflm.mcstats`),
deterministic covariance computation (:mod:`oflm.covariance`), time
reversibility diagnostics (:mod:`oflm.timerev`), and scaling-limit
experiments (:mod:`oflm.limits`).  A FastAPI service (:mod:`oflm.service`)
exposes the batch front end; :mod:`oflm.cli` is a thin client for it.
"""

__version__ = "0.1.0"
