"""Encrypted operator computing: compile reversible circuits into chip evaluators
that act directly on ciphertexts of a two-stage reversible block cipher."""

from .cipher import (CipherKey, Ciphertext, JointRegister, RegisterLayout, decrypt, encrypt,
                     keygen, load_key, save_key)
from .errors import (AncillaError, ConsistencyError, EOCError, OracleLimitError, OrderError,
                     ValidationError)
from .evaluator import CompileOptions, Evaluator, compile, run
from .gates import CNOT, NOT, TOFFOLI, Circuit, ControlledGate, Gate3, random_circuit

__all__ = [
    "AncillaError", "CNOT", "CipherKey", "Ciphertext", "Circuit", "CompileOptions",
    "ConsistencyError", "ControlledGate", "EOCError", "Evaluator", "Gate3", "JointRegister",
    "NOT", "OracleLimitError", "OrderError", "RegisterLayout", "TOFFOLI", "ValidationError",
    "compile", "decrypt", "encrypt", "keygen", "load_key", "random_circuit", "run", "save_key",
]
