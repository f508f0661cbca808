"""Select the compiled kernels when available.

Set ``FGRAFS_BACKEND=python`` to force the numpy reference kernels.
"""

import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("FGRAFS_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

cumulative_quaternions = kernels.cumulative_quaternions
noisy_final_quaternions = kernels.noisy_final_quaternions
ou_recursion = kernels.ou_recursion
