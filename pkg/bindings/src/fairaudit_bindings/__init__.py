"""In-process bindings to the fairaudit core for notebook and array-based callers.

Everything here is a facade: no metric or audit logic is reimplemented, so
every number produced through these bindings equals the value the fairaudit
CLI writes for the same inputs and seed.

Namespaces:
  audit      run the staged audit over in-memory arrays
  metrics    the parity and disparity statistics over plain arrays
  scenarios  the shipped end-to-end fixtures
"""

from . import audit, metrics, scenarios
from .audit import BoundDataset, bind_audit

__version__ = "0.1.0"

__all__ = ["audit", "metrics", "scenarios", "BoundDataset", "bind_audit", "__version__"]
