"""Sparse Jacobians and Hessians by algorithmic differentiation on a tape."""
from .coloring import (ColoringError, ColoringResult, SeedMatrix, SparseMatrixValues,
                       build_seed, color_columns, color_rows, color_symmetric, recover)
from .drivers import (ConfigError, MethodConfig, Prepared, SparseHessian, SparseJacobian,
                      Work, sparse_hessian, sparse_jacobian, with_setup_cached)
from .graph import (Graph, GraphError, GraphFormatError, Recorder, RecordingError, Var,
                    cos, deserialize, eval_zero, example_graph, exp, forward_values, log,
                    prune, record, serialize, sin, sqrt)
from .ops import DomainError, Linearity, NonDifferentiableError, OpKind
from .sparsity import (ActivitySeq, Pattern, forward_hessian_sparsity,
                       forward_jacobian_sparsity, init_activity, reverse_hessian_sparsity,
                       reverse_jacobian_sparsity)
from .subgraph import MarkVector, SortedSubgraph, SubgraphWork, sorted_subgraph, subgraph_sparsity
from .sweeps import forward_one, gradient, hess_vec, record_gradient_graph, reverse_one, reverse_subgraph

__version__ = "0.1.0"
