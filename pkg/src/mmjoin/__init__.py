"""mmjoin: join-project query evaluation with count-matrix multiplication."""

from . import apps, joinproject, matmul, optimizer, relation

__version__ = "0.1.0"

__all__ = ["apps", "joinproject", "matmul", "optimizer", "relation",
           "__version__"]
