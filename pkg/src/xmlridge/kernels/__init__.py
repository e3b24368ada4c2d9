"""Hot computational kernels with a compiled core and a numpy fallback.

At import time the Cython extension ``_native`` is preferred; if it was not
built (or ``XMLRIDGE_NO_NATIVE`` is set) the numpy/scipy implementations in
``_numpy`` take over. Both expose the same four functions:

- ``gram_upper``          dense M^T M from CSR arrays
- ``csr_dense_matmul``    CSR @ dense -> dense
- ``csr_csr_matmul_dense`` CSR @ CSR -> dense
- ``topk_dense``          per-row top-k with deterministic tie-breaking
"""

import os

from xmlridge.kernels import _numpy

if os.environ.get("XMLRIDGE_NO_NATIVE"):
    _impl = _numpy
    HAVE_NATIVE = False
else:
    try:
        from xmlridge.kernels import _native as _impl  # type: ignore[no-redef]

        HAVE_NATIVE = True
    except ImportError:
        _impl = _numpy
        HAVE_NATIVE = False

BACKEND = _impl.NAME

gram_upper = _impl.gram_upper
csr_dense_matmul = _impl.csr_dense_matmul
csr_csr_matmul_dense = _impl.csr_csr_matmul_dense
topk_dense = _impl.topk_dense
