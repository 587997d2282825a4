"""HARQ-IR short-packet numerical laboratory.

Subpackages: ``model`` (channel and decoding math), ``mc`` (Monte Carlo
estimators), ``quad`` (trapezoid and Gauss-Laguerre evaluators), ``asy``
(high-SNR closed form), ``ltat`` (throughput bookkeeping), ``gpopt``
(geometric-programming power allocation), ``env`` (constrained-MDP
training environment and its wire protocol), ``cli`` (command line).
"""

__version__ = "0.1.0"
