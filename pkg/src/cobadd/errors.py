"""Exception types shared across the package."""


class MalformedInstanceError(ValueError):
    """A problem instance violates its construction contract.

    Raised when a cost or constraint function evaluates to a non-finite
    value inside its box, a matrix has the wrong shape or is asymmetric
    beyond tolerance, or a box is empty/unbounded.
    """


class ConfigurationError(ValueError):
    """A run-time configuration is inconsistent or infeasible.

    Raised for instance for a projection radius below the admissible
    threshold, a Slater vector that is not strictly feasible, or a graph
    sampler that cannot produce a connected graph.
    """
