"""
Named n-dimensional Young functions.

    quad                        |xi|^2 / 2
    pnorm:p1,p2[,p3]            sum |xi_i|^{p_i} / p_i
    powerlog:p,q,c              sum A(|xi_i|), A(t) = t^p log(c + t)^q
    exp:alpha                   sum (e^{|xi_i|^alpha} - 1)
    radial:<A>[:<body>]         A(|xi|), or A(h_body(xi)) when a body is given
    matrix:<A;A;..>:<row;row>   sum_k A_k(|(M xi)_k|)
    trud:p,q,alpha,c            |xi1 - xi2|^p + |xi1|^q log(c + |xi1|)^alpha
    trud1:p,beta                |xi1 + 3 xi2|^p + e^{|2 xi1 - xi2|^beta} - 1
    indicator:<body>            0 on the body, +inf outside

<A> is a one-dimensional spec understood by Young1D.parse, e.g. "power,2,0.5".
"""

import logging
from typing import List, Sequence

import numpy as np

from core.exceptions import CatalogParseError
from geometry.bodies import ConvexBody
from geometry.catalog import parse_body
from young.functions import CatalogYoung, Young1D

logger = logging.getLogger(__name__)

YOUNG_NAMES = ("quad", "pnorm", "powerlog", "exp", "radial", "matrix", "trud", "trud1", "indicator")


def quadratic(dim: int = 2) -> CatalogYoung:
    def func(points):
        return 0.5 * np.sum(points**2, axis=-1)

    return CatalogYoung(
        "quad", dim, func, conjugate=lambda: quadratic(dim), strictly_convex=True, differentiable=True
    )


def separable(components: Sequence[Young1D], label: str, conjugate: bool = True) -> CatalogYoung:
    """Phi(xi) = sum_i A_i(|xi_i|)."""
    components = list(components)

    def func(points):
        return sum(A(points[..., i]) for i, A in enumerate(components))

    return CatalogYoung(
        label,
        len(components),
        func,
        conjugate=(lambda: separable([A.conjugate() for A in components], f"{label}*", False)) if conjugate else None,
        strictly_convex=all(A.strictly_convex for A in components),
        differentiable=all(A.strictly_convex for A in components),
        superlinear=all(A.superlinear for A in components),
        finite_valued=all(A.kind != "interval" for A in components),
    )


def pnorm(exponents: Sequence[float]) -> CatalogYoung:
    components = [Young1D("power", (p, 1.0 / p)) for p in exponents]
    label = "pnorm:" + ",".join(f"{p:g}" for p in exponents)
    return separable(components, label)


def radial(A: Young1D, body: ConvexBody = None, dim: int = 2, conjugate: bool = True) -> CatalogYoung:
    """
    A(h_L(xi)); with no body, A(|xi|). The conjugate is A_•(gauge_L(eta)).
    """
    if body is None:
        def func(points):
            return A(np.linalg.norm(points, axis=-1))

        def dual():
            return radial(A.conjugate(), None, dim, conjugate=False)

        label = f"radial:{A}"
    else:
        dim = body.dim

        def func(points):
            return A(body.support(points))

        def dual():
            A_conj = A.conjugate()
            return CatalogYoung(
                f"radial:{A_conj}:gauge({body.label})",
                dim,
                lambda points: A_conj(body.gauge(points)),
                superlinear=A_conj.superlinear,
                finite_valued=A_conj.kind != "interval",
            )

        label = f"radial:{A}:{body.label}"
    return CatalogYoung(
        label,
        dim,
        func,
        conjugate=dual if conjugate else None,
        strictly_convex=A.strictly_convex and body is None,
        differentiable=A.strictly_convex and body is None,
        superlinear=A.superlinear,
        finite_valued=A.kind != "interval",
    )


def linear_composition(components: Sequence[Young1D], matrix, label: str) -> CatalogYoung:
    """
    Phi(xi) = sum_k A_k(|(M xi)_k|) for an invertible M; Phi_•(eta) = sum_k A_k•(|(M^{-T} eta)_k|).
    """
    matrix = np.asarray(matrix, dtype=float)
    components = list(components)
    if matrix.shape != (len(components), len(components)):
        raise CatalogParseError(f"{label}: need a square matrix with one row per component")
    if abs(np.linalg.det(matrix)) < 1e-12:
        raise CatalogParseError(f"{label}: matrix is singular")
    inverse_transpose = np.linalg.inv(matrix).T

    def build(parts, mat, name, dual):
        def func(points):
            mapped = points @ mat.T
            return sum(A(mapped[..., k]) for k, A in enumerate(parts))

        return CatalogYoung(
            name,
            len(parts),
            func,
            conjugate=dual,
            strictly_convex=all(A.strictly_convex for A in parts),
            differentiable=all(A.strictly_convex for A in parts),
            superlinear=all(A.superlinear for A in parts),
            finite_valued=all(A.kind != "interval" for A in parts),
        )

    def dual():
        return build([A.conjugate() for A in components], inverse_transpose, f"{label}*", None)

    return build(components, matrix, label, dual)


def indicator(body: ConvexBody) -> CatalogYoung:
    gauge_body = body

    def func(points):
        return np.where(gauge_body.gauge(points) <= 1.0 + 1e-12, 0.0, np.inf)

    def dual():
        return CatalogYoung(f"support({body.label})", body.dim, body.support, superlinear=False)

    return CatalogYoung(
        f"indicator:{body.label}",
        body.dim,
        func,
        conjugate=dual,
        superlinear=True,
        finite_valued=False,
        half_width=1.5 * body.max_radius(),
    )


def _numbers(text: str, spec: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CatalogParseError(f"Non-numeric parameter in {spec!r}")


def parse_young(spec: str, dim: int = 2) -> CatalogYoung:
    """
    Build a Young function from a catalog string such as "pnorm:2,4" or "radial:power,2:square".
    """
    if not spec:
        raise CatalogParseError("Empty Young function specification")
    name, _, argument = spec.strip().partition(":")
    name = name.lower()

    if name == "quad":
        return quadratic(dim)

    if name == "pnorm":
        exponents = _numbers(argument, spec)
        if len(exponents) not in (2, 3):
            raise CatalogParseError("pnorm needs 2 or 3 exponents")
        if min(exponents) < 1:
            raise CatalogParseError("pnorm exponents must be >= 1")
        return pnorm(exponents)

    if name == "powerlog":
        A = Young1D.parse(f"powerlog,{argument}")
        return separable([A] * dim, f"powerlog:{argument}")

    if name == "exp":
        A = Young1D.parse(f"exp,{argument}")
        if A.params[0] < 1:
            raise CatalogParseError("exp needs alpha >= 1 to be convex")
        return separable([A] * dim, f"exp:{argument}")

    if name == "radial":
        one_dim, _, body_spec = argument.partition(":")
        A = Young1D.parse(one_dim)
        if not body_spec:
            return radial(A, None, dim)
        return radial(A, parse_body(body_spec, dim))

    if name == "matrix":
        parts = argument.split(":")
        if len(parts) != 2:
            raise CatalogParseError("matrix needs <A-list>:<rows>")
        components = [Young1D.parse(item) for item in parts[0].split(";")]
        rows = [_numbers(row, spec) for row in parts[1].split(";")]
        return linear_composition(components, rows, f"matrix:{argument}")

    if name == "trud":
        values = _numbers(argument, spec)
        if len(values) != 4:
            raise CatalogParseError("trud needs p,q,alpha,c")
        p, q, alpha, c = values
        components = [Young1D.parse(f"power,{p}"), Young1D.parse(f"powerlog,{q},{alpha},{c}")]
        return linear_composition(components, [[1.0, -1.0], [1.0, 0.0]], f"trud:{argument}")

    if name == "trud1":
        values = _numbers(argument, spec)
        if len(values) != 2:
            raise CatalogParseError("trud1 needs p,beta")
        p, beta = values
        if beta < 1:
            raise CatalogParseError("trud1 needs beta >= 1 to be convex")
        components = [Young1D.parse(f"power,{p}"), Young1D.parse(f"exp,{beta}")]
        return linear_composition(components, [[1.0, 3.0], [2.0, -1.0]], f"trud1:{argument}")

    if name == "indicator":
        if not argument:
            raise CatalogParseError("indicator needs a body: indicator:<body>")
        return indicator(parse_body(argument, dim))

    raise CatalogParseError(f"Unknown Young function {name!r}; expected one of {', '.join(YOUNG_NAMES)}")
