"""qdwalls exceptions"""


class QuantumDoubleException(Exception):
    """Base exception for quantum double computations"""


class InvalidGroupException(QuantumDoubleException):
    """Invalid group data exception"""


class OrderCapExceededException(QuantumDoubleException):
    """Group order above the configured cap"""

    def __init__(self, order, cap):
        self.order = order
        self.cap = cap
        super().__init__(f"Group order {order} exceeds the order cap {cap}.")


class NotNormalSubgroupException(QuantumDoubleException):
    """Subgroup is not normal where normality is required"""

    def __init__(self, subgroup, ambient):
        self.subgroup = subgroup
        self.ambient = ambient
        super().__init__(f"{subgroup} is not a normal subgroup of {ambient}.")


class NumericalFailureException(QuantumDoubleException):
    """Numerical residual above tolerance"""


class InvalidClassFunctionException(QuantumDoubleException):
    """Function is not invariant under simultaneous conjugation"""


class NonIntegerMultiplicityException(QuantumDoubleException):
    """Decomposition produced a non-integer multiplicity"""

    def __init__(self, label, value, residual):
        self.label = label
        self.value = value
        self.residual = residual
        super().__init__(
            f"Non-integer multiplicity for {label}: {value} (residual {residual:.3g})."
        )


class NegativeMultiplicityException(QuantumDoubleException):
    """Decomposition produced a negative multiplicity"""

    def __init__(self, label, value):
        self.label = label
        self.value = value
        super().__init__(f"Negative multiplicity for {label}: {value}.")


class PathDisagreementException(QuantumDoubleException):
    """Reduced and unreduced tunneling computations disagree"""


class ShapeMismatchException(QuantumDoubleException):
    """Operands have incompatible shapes"""


class IllegalTransitionException(QuantumDoubleException):
    """Phase transition without a logical preserving correction"""

    def __init__(self, source, target):
        self.source = source
        self.target = target
        super().__init__(f"Transition {source} -> {target} is not legal.")


class NonAbelianGroupException(QuantumDoubleException):
    """Operation restricted to abelian groups"""


class InvalidLatticeException(QuantumDoubleException):
    """Invalid torus lattice"""


class StateCapExceededException(QuantumDoubleException):
    """State vector above the configured size cap"""

    def __init__(self, qubits, cap):
        self.qubits = qubits
        self.cap = cap
        super().__init__(
            f"State vector needs {qubits:.1f} qubits, above the cap of {cap}."
        )


class MeasurementException(QuantumDoubleException):
    """Measurement left a vanishing state"""


class MTCConsistencyException(QuantumDoubleException):
    """Modular tensor category data violates an identity"""

    def __init__(self, identity, message=""):
        self.identity = identity
        super().__init__(f"MTC identity '{identity}' violated: {message}")


class SchemaException(QuantumDoubleException):
    """Input file does not match its schema"""


class GoldenMismatchException(QuantumDoubleException):
    """Golden file differs from regenerated data"""

    def __init__(self, path, mismatches):
        self.path = path
        self.mismatches = mismatches
        super().__init__(f"{path}: {len(mismatches)} mismatching cells.")


class InvalidScheduleException(QuantumDoubleException):
    """Schedule is not a closed walk of the transition graph"""


class InvalidFusionChannelException(QuantumDoubleException):
    """Requested fusion channel is not allowed by the fusion rules"""

    def __init__(self, labels, channel):
        self.labels = labels
        self.channel = channel
        super().__init__(f"{channel} is not a fusion channel of {labels}.")
