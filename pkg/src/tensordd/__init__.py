"""Canonical decision-diagram representation of tensors over Boolean indices."""

from .circuit import (Circuit, CircuitNet, Gate, GateTensor, QasmError,
                      allocate_indices, circuit_unitary, cut_cnot, gate_matrix,
                      parse_qasm, parse_qasm_file)
from .dense import (NATURAL_ORDER, DenseTensor, IndexLabel, IndexOrder,
                    contract_dense, network_to_dense, slice_dense)
from .diagram import (TERMINAL, Edge, Node, NodeStore, StoreError, Tdd, add,
                      audit, contract, edge_count, evaluate, export_dot,
                      generate, reachable, relabel, size, slice_tdd,
                      tensor_product, to_dense)
from .numerics import (DEFAULT_TOLERANCE, ToleranceConfig, canonical,
                       format_weight, is_one, is_zero, weights_equal)
from .planner import (SCHEME1, SCHEME2, SEQUENTIAL, Part, PartitionConfig,
                      Plan, PlanError, PlanTimeout, execute_plan, partition,
                      partition_scheme1, partition_scheme2,
                      partition_sequential, plan_circuit, plan_from_parts,
                      plan_stats, plan_to_json)

__version__ = "0.1.0"
