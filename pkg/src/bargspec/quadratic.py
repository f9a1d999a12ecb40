"""Exact treatment of elliptic complex quadratic symbols.

Pipeline for f(p,q) = a p^2 + b q^2 + 2 c p q with complex a, b, c and
z = (p + iq)/sqrt(2):

  ellipticity test -> admissible rotation delta -> kappa_1 (real scaling)
  -> kappa_2 (real rotation) -> kappa_3 (complex diagonal stretch), composed
  on the holomorphic extension so that  f~ o kappa~^{-1} (z, vbar) = d0 z vbar.

Convention pinned by the matrix oracle: d0 is the coefficient of z*vbar in
the reduced normal form, d0 = 2 sqrt(det(delta F)) / delta with F the
coefficient matrix [[a, c], [c, b]].  (Equivalently sqrt of the determinant
of the delta-rotated Hessian matrix, divided by delta: the Hessian is 2F.)
With this d0 the exact spectrum reads

    lambda_k = hbar ( d0 (2k+1)/2 + (a+b)/2 ),   k = 0, 1, 2, ...

which reproduces T(p^2+q^2) = T(2|z|^2) = diag 2 hbar (k+1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bargmann import MonomialSymbol, check_hbar

__all__ = [
    "ComplexQuadraticForm",
    "NormalFormData",
    "PhaseQuadratic",
    "QuadraticWeightPair",
    "NoDeltaFound",
    "PhaseConditionViolated",
    "PQ_TO_ZV",
    "ZV_TO_PQ",
    "real_map_extension",
    "ellipticity_check",
    "find_delta",
    "reduce_quadratic",
    "phase_and_weights",
    "exact_quadratic_spectrum",
]


class NoDeltaFound(ValueError):
    """No rotation delta makes Re(delta f) positive definite."""


class PhaseConditionViolated(ValueError):
    """|b/d| >= 1 for the composed map: no phase function exists."""


# z = (p + iq)/sqrt(2), vbar = (p - iq)/sqrt(2): (z, vbar)^T = C (p, q)^T
PQ_TO_ZV = np.array([[1.0, 1.0j], [1.0, -1.0j]]) / np.sqrt(2.0)
ZV_TO_PQ = np.linalg.inv(PQ_TO_ZV)


def real_map_extension(kappa: np.ndarray) -> np.ndarray:
    """Holomorphic extension of a real linear map of (p, q) to (z, vbar)."""
    return PQ_TO_ZV @ np.asarray(kappa, dtype=complex) @ ZV_TO_PQ


@dataclass(frozen=True)
class ComplexQuadraticForm:
    """f(p, q) = a p^2 + b q^2 + 2 c p q with complex coefficients."""

    a: complex
    b: complex
    c: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        object.__setattr__(self, "c", complex(self.c))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.c], [self.c, self.b]])

    @property
    def re_matrix(self) -> np.ndarray:
        return self.matrix.real.copy()

    @property
    def im_matrix(self) -> np.ndarray:
        return self.matrix.imag.copy()

    @property
    def det_f(self) -> complex:
        return self.a * self.b - self.c**2

    @property
    def tr_f(self) -> complex:
        return self.a + self.b

    def __call__(self, p: float, q: float) -> complex:
        return self.a * p**2 + self.b * q**2 + 2 * self.c * p * q

    def scaled(self, t: complex) -> "ComplexQuadraticForm":
        return ComplexQuadraticForm(t * self.a, t * self.b, t * self.c)

    def extension(self, z: complex, vbar: complex) -> complex:
        """f~(z, vbar): evaluate on the complexification via p, q."""
        p = (z + vbar) / np.sqrt(2.0)
        q = -1j * (z - vbar) / np.sqrt(2.0)
        return self(p, q)

    def to_symbol(self) -> MonomialSymbol:
        """Rewrite in z, zbar monomials (p^2+q^2 = 2 z zbar, etc.)."""
        a, b, c = self.a, self.b, self.c
        return MonomialSymbol(
            {
                (2, 0): (a - b) / 2 - 1j * c,
                (1, 1): a + b,
                (0, 2): (a - b) / 2 + 1j * c,
            }
        )

    @classmethod
    def from_zv_coefficients(cls, t20: complex, t11: complex, t02: complex):
        """Inverse of to_symbol: quadratic t20 z^2 + t11 z zbar + t02 zbar^2."""
        a = (t20 + t02 + t11) / 2
        b = (t11 - t20 - t02) / 2
        c = 1j * (t20 - t02) / 2
        return cls(a, b, c)


@dataclass(frozen=True)
class PhaseQuadratic:
    """phi(x, vbar) = (-c/2d) x^2 + (1/d) x vbar + (b/2d) vbar^2 for the
    composed map [[a, b], [c, d]] acting on (z, vbar)."""

    coeff_x2: complex
    coeff_xv: complex
    coeff_v2: complex
    b_over_d: complex

    def __call__(self, x: complex, vbar: complex) -> complex:
        return self.coeff_x2 * x**2 + self.coeff_xv * x * vbar + self.coeff_v2 * vbar**2


@dataclass(frozen=True)
class QuadraticWeightPair:
    """(r + ij)^2 = zeta/|zeta|; W, W_i are the transformed weights of 0."""

    r: float
    j: float

    def w_matrix(self) -> np.ndarray:
        r, j = self.r, self.j
        return np.array([[(r - 1) / r, j / r], [j / r, (r - 1) / r]])

    def wi_matrix(self) -> np.ndarray:
        r, j = self.r, self.j
        return np.array([[(1 - r) / r, j / r], [j / r, (1 - r) / r]])

    def w(self, x: complex) -> float:
        u, v = x.real, x.imag
        return (self.r - 1) / self.r * (u * u + v * v) + 2 * self.j / self.r * u * v

    def w_i(self, x: complex) -> float:
        u, v = x.real, x.imag
        return (1 - self.r) / self.r * (u * u + v * v) + 2 * self.j / self.r * u * v

    @property
    def vanishes_to_second_order(self) -> bool:
        # W = 0 iff zeta/|zeta| = 1, i.e. r = 1, j = 0
        return abs(self.r - 1.0) < 1e-12 and abs(self.j) < 1e-12


@dataclass(frozen=True)
class NormalFormData:
    delta: complex
    kappa1: np.ndarray  # real map on (p, q)
    kappa2: np.ndarray  # real map on (p, q)
    kappa3: np.ndarray  # complex map on (z, vbar)
    zeta: complex
    Delta: float
    d0: complex  # coefficient of z vbar in the reduced form
    alpha: float
    beta: float
    gamma: float
    composed: np.ndarray  # kappa3 @ kappa2~ @ kappa1~ on (z, vbar)
    phase: PhaseQuadratic
    form: ComplexQuadraticForm


def _min_eig_re(form: ComplexQuadraticForm, theta: float) -> float:
    m = (np.exp(1j * theta) * form.matrix).real
    return float(np.linalg.eigvalsh(m)[0])


def ellipticity_check(form: ComplexQuadraticForm) -> dict:
    """Evaluate the ellipticity condition and the proper-range condition.

    condition_value E = det(Re f) + det(Im f) + i sqrt(|Im(det f)^2
    - 4 det(Re f) det(Im f)|); elliptic iff E is not in (-inf, 0].
    range_proper: some delta on the circle makes Re(delta f) positive
    semidefinite (grid scan refined by bisection).
    """
    re_det = float(np.linalg.det(form.re_matrix))
    im_det = float(np.linalg.det(form.im_matrix))
    disc = np.imag(form.det_f) ** 2 - 4.0 * re_det * im_det
    value = re_det + im_det + 1j * np.sqrt(abs(disc))
    on_negative_axis = value.imag == 0.0 and value.real <= 0.0
    elliptic = not on_negative_axis

    thetas = np.linspace(-np.pi, np.pi, 720, endpoint=False)
    mins = np.array([_min_eig_re(form, t) for t in thetas])
    range_proper = bool(mins.max() > -1e-14)
    if not range_proper:
        # refine around the best angle before giving up
        t0 = thetas[int(np.argmax(mins))]
        lo, hi = t0 - np.pi / 720, t0 + np.pi / 720
        for _ in range(60):
            mid1 = lo + (hi - lo) / 3
            mid2 = hi - (hi - lo) / 3
            if _min_eig_re(form, mid1) < _min_eig_re(form, mid2):
                lo = mid1
            else:
                hi = mid2
        range_proper = bool(_min_eig_re(form, (lo + hi) / 2) > -1e-14)
    return {"elliptic": elliptic, "range_proper": range_proper, "condition_value": value}


def _admissible_arc(form: ComplexQuadraticForm, n_grid: int = 2048):
    """Maximal arc of angles theta with Re(e^{i theta} f) positive definite."""
    thetas = np.linspace(-np.pi, np.pi, n_grid, endpoint=False)
    good = np.array([_min_eig_re(form, t) for t in thetas]) > 0.0
    if not good.any():
        return None
    if good.all():
        # f essentially real definite up to phase: any delta works; centre on
        # the angle of maximal margin
        vals = np.array([_min_eig_re(form, t) for t in thetas])
        return thetas[int(np.argmax(vals))], thetas[int(np.argmax(vals))]
    # locate maximal run of True on the circle
    n = n_grid
    runs = []
    i = 0
    while i < n:
        if good[i]:
            j = i
            while good[j % n] and j - i < n:
                j += 1
            runs.append((i, j))
            i = j
        else:
            i += 1
    # merge wrap-around
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] >= n:
        first = runs.pop(0)
        runs[-1] = (runs[-1][0], n + first[1])
    start, stop = max(runs, key=lambda r: r[1] - r[0])

    step = 2 * np.pi / n

    def refine(a, b):
        # sign change of min-eig between angles a (bad) and b (good)
        for _ in range(80):
            mid = 0.5 * (a + b)
            if _min_eig_re(form, mid) > 0:
                b = mid
            else:
                a = mid
        return b

    left = refine(thetas[0] + (start - 1) * step, thetas[0] + start * step)
    right = refine(thetas[0] + stop * step, thetas[0] + (stop - 1) * step)
    return left, right


def find_delta(form: ComplexQuadraticForm) -> complex:
    """Unit complex delta with Re(delta f) positive definite, chosen at the
    midpoint of the maximal admissible angle arc."""
    arc = _admissible_arc(form)
    if arc is None:
        raise NoDeltaFound("no rotation makes Re(delta f) positive definite")
    left, right = arc
    mid = 0.5 * (left + right)
    delta = np.exp(1j * mid)
    if _min_eig_re(form, mid) <= 0:
        raise NoDeltaFound("admissible arc collapsed during refinement")
    return complex(delta)


def _kappa2_matrix(alpha: float, beta: float, gamma: float, Delta: float) -> np.ndarray:
    """Rotation with kappa2 S kappa2^T = diag((a+b+D)/2, (a+b-D)/2) for
    S = [[alpha, gamma], [gamma, beta]].

    The larger eigenvalue must land on the p-axis so that the reduced form
    reads r (zeta p^2 + q^2) with the branch-normalised zeta; when gamma = 0
    this means the identity if alpha >= beta and the quarter turn otherwise.
    """
    if Delta == 0.0:
        return np.eye(2)
    if gamma == 0.0:
        if alpha >= beta:
            return np.eye(2)
        return np.array([[0.0, 1.0], [-1.0, 0.0]])
    s = np.array([[alpha, gamma], [gamma, beta]])
    evals, vecs = np.linalg.eigh(s)  # ascending: columns are v_minus, v_plus
    rows = np.array([vecs[:, 1], vecs[:, 0]])
    if np.linalg.det(rows) < 0:
        rows[1] = -rows[1]
    lam_plus = (alpha + beta + Delta) / 2.0
    lam_minus = (alpha + beta - Delta) / 2.0
    diag = rows @ s @ rows.T
    assert abs(diag[0, 0] - lam_plus) < 1e-9 and abs(diag[1, 1] - lam_minus) < 1e-9
    return rows


def reduce_quadratic(form: ComplexQuadraticForm, delta: complex | None = None) -> NormalFormData:
    """Full reduction to d0 * z * vbar on the complexification.

    `delta` may be forced (used by the delta-invariance tests); by default the
    arc-midpoint rule picks it.
    """
    checks = ellipticity_check(form)
    if not (checks["elliptic"] and checks["range_proper"]):
        raise NoDeltaFound("form fails the ellipticity / proper-range conditions")
    if delta is None:
        delta = find_delta(form)
    else:
        delta = complex(delta / abs(delta))
        if float(np.linalg.eigvalsh((delta * form.matrix).real)[0]) <= 0:
            raise NoDeltaFound("supplied delta does not make Re(delta f) positive definite")

    g = form.scaled(delta)
    a0, b0, c0 = g.a.real, g.b.real, g.c.real
    ap, bp, cp = g.a.imag, g.b.imag, g.c.imag
    det0 = a0 * b0 - c0 * c0
    assert a0 > 0 and det0 > 0, "Re(delta f) must be positive definite here"
    d0_real = np.sqrt(det0)

    kappa1 = np.array(
        [
            [np.sqrt(a0 / d0_real), c0 / np.sqrt(d0_real * a0)],
            [0.0, np.sqrt(d0_real / a0)],
        ]
    )
    alpha = ap / a0
    gamma = (cp * a0 - ap * c0) / (d0_real * a0)
    beta = (a0 * bp - 2 * cp * c0 + c0**2 * ap / a0) / det0
    Delta = float(np.sqrt((beta - alpha) ** 2 + 4.0 * gamma**2))
    kappa2 = _kappa2_matrix(alpha, beta, gamma, Delta)

    zeta = (1 + 1j * (beta + alpha + Delta) / 2) / (1 + 1j * (beta + alpha - Delta) / 2)
    w = zeta ** 0.25  # principal root; Re > 0 since zeta is never in R_-
    assert w.real > 0
    kappa3 = 0.5 * np.array([[w + 1 / w, w - 1 / w], [w - 1 / w, w + 1 / w]])

    composed = kappa3 @ real_map_extension(kappa2) @ real_map_extension(kappa1)
    # normal-form coefficient for delta*f is 2 r sqrt(zeta) = 2 sqrt(det(delta F));
    # dividing by delta gives the coefficient for f itself
    r_val = d0_real * (1 + 1j * (beta + alpha - Delta) / 2)
    d0 = 2.0 * r_val * np.sqrt(zeta) / delta

    A, B = composed[0, 0], composed[0, 1]
    C, D = composed[1, 0], composed[1, 1]
    if D == 0:
        raise PhaseConditionViolated("composed map has d = 0: no associated phase")
    phase = PhaseQuadratic(
        coeff_x2=-C / (2 * D),
        coeff_xv=1 / D,
        coeff_v2=B / (2 * D),
        b_over_d=B / D,
    )

    return NormalFormData(
        delta=delta,
        kappa1=kappa1,
        kappa2=kappa2,
        kappa3=kappa3,
        zeta=complex(zeta),
        Delta=Delta,
        d0=complex(d0),
        alpha=float(alpha),
        beta=float(beta),
        gamma=float(gamma),
        composed=composed,
        phase=phase,
        form=form,
    )


def phase_and_weights(nf: NormalFormData) -> tuple[PhaseQuadratic, QuadraticWeightPair]:
    """Phase function data and the transformed-weight pair of Theorem-level
    formulas: (r + ij)^2 = zeta/|zeta|, W = (r-1)/r |x|^2 + (2j/r) Re x Im x."""
    if abs(nf.phase.b_over_d) >= 1.0:
        raise PhaseConditionViolated(
            f"|b/d| = {abs(nf.phase.b_over_d):.6f} >= 1: phase condition fails"
        )
    root = (nf.zeta / abs(nf.zeta)) ** 0.5
    pair = QuadraticWeightPair(r=float(root.real), j=float(root.imag))
    assert pair.r > 0
    return nf.phase, pair


def exact_quadratic_spectrum(
    form: ComplexQuadraticForm, hbar: float, count: int, delta: complex | None = None
) -> np.ndarray:
    """lambda_k = hbar (d0 (2k+1)/2 + tr f / 2), k = 0..count-1."""
    hbar = check_hbar(hbar)
    nf = reduce_quadratic(form, delta=delta)
    k = np.arange(int(count))
    return hbar * (nf.d0 * (2 * k + 1) / 2.0 + form.tr_f / 2.0)
