from fractions import Fraction

import numpy as np

# Tolerances
SIMPLICITY_TOL = 1e-10
KERNEL_TOL = 1e-12
UNITARITY_TOL = 1e-12
SPECTRUM_TOL = 1e-9
RANK_REL_TOL = 1e-8
TOL_RANGE = (1e-14, 1e-6)

# Exit codes
EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID_INSTANCE = 2
EXIT_USAGE = 64

# Desk-scale limits
DENSE_EIGEN_LIMIT = 4096
SPARSE_EIGEN_LIMIT = 2**20
QRM_DIMENSION_LIMIT = 2**20
DEFAULT_VERTEX_BUDGET = 200_000

# Static catalog scale, chosen so every weight is an integer
CATALOG_SCALE = Fraction(2)

# Hermitian generator of the universal two-qubit gate
GATE_GENERATOR = np.array(
    [
        [2, 0, 1, 1],
        [0, -1, 1, 1],
        [1, 1, 0, 0],
        [1, 1, 0, 0],
    ],
    dtype=complex,
)

SU8_DIMENSION = 63

GATE_WORD_LETTERS = ("G", "Gd", "CW", "CCW")

# Program blocks, bits appended after the shared leading 0
PROGRAM_BLOCKS = {
    "S": "00",
    "D": "100",
    "U": "010",
    "G": "0110",
    "I": "1100",
}

# Offset changes per block and gate position relative to the block's start offset
BLOCK_NET_SHIFT = {"S": 0, "D": -1, "U": 1, "G": 2, "I": -2}
# G-dagger is encoded as UUI with its gate on the I block at offset -2; a UIU
# ordering puts the gate on the same line of the ring
BLOCK_GATE_OFFSET = {"G": 1, "I": -2}
