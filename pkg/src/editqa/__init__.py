"""editqa: benchmarking and learned quality assessment for text-driven video editing.

Subsystems:

- ``editqa.manifest`` / ``editqa.video``: the benchmark inventory and clips
- ``editqa.mos``: subjective ratings to screened, normalized MOS
- ``editqa.metrics``: the objective metric battery over pluggable backends
- ``editqa.qa``: the learned multi-branch assessor
- ``editqa.training``: losses, the two-stage schedule, the k-fold protocol
- ``editqa.correlation``: SROCC/PLCC/KRCC/RMSE and the quartic fit
- ``editqa.study``: the rating-collection HTTP service
- ``editqa.cli``: the command-line front end
"""

__version__ = "0.1.0"
