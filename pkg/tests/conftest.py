"""Pin BLAS to one thread before numpy loads.

Runtime budgets and byte-identical artifact checks assume
single-threaded execution.
"""

import os

for var in (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
):
    os.environ.setdefault(var, "1")
