"""Quantitative equational reasoning workbench for combinatory logic and
the simply typed lambda calculus.

Modules:
    metric_core     exact extended-real arithmetic, finite metric spaces,
                    hom-set distances, exponentiability checks
    term_syntax     sorts, signatures, locally nameless terms, parser
    rewrite_engine  beta/eta normalization, CL reduction, bracket abstraction
    term_metrics    projections and the distance zoo on terms
    quant_deduction quantitative equations, derivations, proof checking
    finite_models   finite quantitative algebras, satisfaction, harness
    corpus          shipped derivations and algebras
    cli             command line entry point
"""

__version__ = "0.1.0"
