"""Matrix-valued free probability: spectra of polynomials in semicircular
and deterministic matrices, with random matrix cross-checks."""

from ._core import (
    DivergenceError,
    Error,
    Model,
    ParameterError,
    ParseError,
    Polynomial,
    SizeError,
    StructureError,
    adjoint,
    density,
    deterministic,
    eigenvalues,
    evaluate,
    linearize,
    norm,
    parse,
    polynomial_density,
    polynomial_support,
    sample_wigner,
    solve,
    stieltjes,
    support,
)

__all__ = [name for name in dir() if not name.startswith("_")]
