"""Correctly-truncated light-matter Hamiltonians in a one-parameter gauge family.

The family interpolates between the Coulomb form (theta = 0) and the
multipolar form (theta = 1).  With mode couplings eta_mu and the Hermitian
generator

    X = sum_mu (eta_mu a_mu^dag + eta_mu^* a_mu) (x) D,

where D is the dipole-direction matter matrix (sigma_x for a two-level
emitter), the builders return

    H(theta) = V H_F V^dag + U H_0 U^dag,
    V = exp(-i theta X),  U = exp(+i (1 - theta) X),

with both exponentials evaluated exactly on the truncated space.  Because
every member is conjugated from the same generator, the family is exactly
unitarily equivalent at any Fock cutoff; the physically-interesting breakdown
appears in the `build_naive` reference builders, which truncate the canonical
algebra instead.

Explicit single-mode two-level forms, beyond-dipole builders for effective
single-particle emitters, normal-mode (lossless 1D dielectric) builders in
the generalized Coulomb/multipolar gauges, and time-dependent coupling
variants are provided alongside.  Units: hbar = eps0 = 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ConvergenceError, InvariantViolation
from .hilbert import (HERMITIAN_TOL, Factor, HermitianGenerator, HilbertSpec, Operator,
                      PAULI_X, PAULI_Y, PAULI_Z, ladder_matrix, matter_levels, max_abs, photon)
from .matter import EmitterSpec, TimeProfile
from .modes import ModeSet, NormalModeSet1D

TD_EXTRA_TERM_SIGN = +1.0


class FockCutoffWarning(UserWarning):
    """Fock cutoff likely too small for the requested displacement."""


@dataclass(frozen=True)
class GaugeParam:
    """Gauge-family parameter theta in [0, 1]; 0 is Coulomb, 1 is multipolar."""

    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")


COULOMB = GaugeParam(0.0)
MULTIPOLAR = GaugeParam(1.0)


@dataclass(frozen=True)
class CouplingSet:
    """Dimensionless couplings eta_mu = d.f*_mu(x0) / sqrt(2 chi_mm) per mode.

    For an N-level emitter each eta_mu is an N x N matter matrix built from
    the dipole matrix; `scalars` extracts the plain numbers for a two-level
    emitter with sigma_x dipole.
    """

    eta_matrices: np.ndarray  # (M, N, N) complex
    chi: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta_matrices, dtype=complex)
        chi = np.atleast_2d(np.asarray(self.chi, dtype=complex))
        if eta.ndim != 3 or eta.shape[1] != eta.shape[2]:
            raise ValueError("eta_matrices must have shape (M, N, N)")
        if chi.shape != (eta.shape[0],) * 2:
            raise ValueError("chi must be MxM")
        if not np.all(np.isfinite(eta)):
            raise InvariantViolation("couplings must be finite")
        object.__setattr__(self, "eta_matrices", eta)
        object.__setattr__(self, "chi", chi)

    @property
    def n_modes(self) -> int:
        return self.eta_matrices.shape[0]

    @property
    def matter_dim(self) -> int:
        return self.eta_matrices.shape[1]

    @property
    def scalars(self) -> np.ndarray:
        """Per-mode scalar eta for a two-level sigma_x-type dipole."""
        if self.matter_dim != 2:
            raise ValueError("scalar couplings only defined for two-level emitters")
        eta = self.eta_matrices
        for mu in range(self.n_modes):
            if (abs(eta[mu, 0, 0]) > 1e-12 or abs(eta[mu, 1, 1]) > 1e-12
                    or abs(eta[mu, 0, 1] - eta[mu, 1, 0]) > 1e-12):
                raise ValueError("coupling matrix is not proportional to sigma_x")
        return eta[:, 0, 1]

    def generator_matrix(self, space: HilbertSpec) -> np.ndarray:
        """X = sum_mu (a_mu^dag (x) eta_mu + a_mu (x) eta_mu^dag) on `space`."""
        if len(space.photon_indices) != self.n_modes or len(space.matter_indices) != 1:
            raise ValueError("space does not match couplings (modes or matter factor)")
        mi = space.matter_indices[0]
        if space.factors[mi].dim != self.matter_dim:
            raise ValueError("matter factor dimension does not match couplings")
        x = np.zeros((space.dim, space.dim), dtype=complex)
        for mu, fi in enumerate(space.photon_indices):
            adag = space.embed(fi, ladder_matrix(space.factors[fi].fock_cutoff)).conj().T
            emb_eta = space.embed(mi, self.eta_matrices[mu])
            term = adag @ emb_eta
            x += term + term.conj().T
        return x


def couplings(ms: ModeSet, em: EmitterSpec) -> CouplingSet:
    """Coupling set of an emitter sitting at its profile point of a mode set."""
    f = ms.profile(em.position_label)  # (M, 3)
    chi_d = ms.chi_diag
    eta = np.einsum("cij,mc->mij", em.dipole, f.conj()) / np.sqrt(2 * chi_d)[:, None, None]
    return CouplingSet(eta, ms.chi)


@dataclass(frozen=True)
class HamiltonianBundle:
    """A built Hamiltonian with its space, gauge and builder metadata.

    Hermiticity is verified at 1e-12 on construction.
    """

    H: Operator
    space: HilbertSpec
    gauge: GaugeParam
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        dev = max_abs(self.H.matrix - self.H.matrix.conj().T)
        scale = max(1.0, max_abs(self.H.matrix))
        if dev >= HERMITIAN_TOL * scale:
            raise InvariantViolation(f"built Hamiltonian is not Hermitian (dev {dev:.3e})")

    def eigenvalues(self, k: Optional[int] = None) -> np.ndarray:
        vals = np.linalg.eigvalsh(self.H.matrix)
        return vals if k is None else vals[:k]

    def eigensystem(self):
        return np.linalg.eigh(self.H.matrix)


def _normalize_cutoffs(cutoffs, n_modes: int) -> tuple[int, ...]:
    if np.isscalar(cutoffs):
        return (int(cutoffs),) * n_modes
    cutoffs = tuple(int(c) for c in cutoffs)
    if len(cutoffs) != n_modes:
        raise ValueError(f"need {n_modes} cutoffs, got {len(cutoffs)}")
    return cutoffs


def standard_space(cutoffs: Sequence[int], matter_dim: int) -> HilbertSpec:
    """Photon factors in mode order followed by one matter factor."""
    return HilbertSpec([photon(n) for n in cutoffs] + [matter_levels(matter_dim)])


def field_hamiltonian(chi: np.ndarray, space: HilbertSpec) -> np.ndarray:
    """H_F = sum_{mu nu} chi_{mu nu} a_mu^dag a_nu embedded in `space`."""
    chi = np.atleast_2d(np.asarray(chi, dtype=complex))
    ph = space.photon_indices
    if chi.shape != (len(ph),) * 2:
        raise ValueError("chi shape does not match photon factor count")
    ops = [space.embed(fi, ladder_matrix(space.factors[fi].fock_cutoff)) for fi in ph]
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for m in range(len(ph)):
        for n in range(len(ph)):
            if chi[m, n] != 0:
                h += chi[m, n] * ops[m].conj().T @ ops[n]
    return h


def _check_cutoff_headroom(cutoffs, theta: float, cs: CouplingSet):
    eta_max = float(np.abs(cs.eta_matrices).max()) if cs.eta_matrices.size else 0.0
    disp = max(abs(theta), abs(1.0 - theta)) * eta_max
    needed = 4.0 * disp**2 + 10.0
    if min(cutoffs) < needed:
        warnings.warn(
            f"Fock cutoff {min(cutoffs)} below the displacement heuristic "
            f"4*(theta*eta)^2 + 10 = {needed:.1f}; spectra may not be converged",
            FockCutoffWarning, stacklevel=3)


@dataclass(frozen=True)
class LongitudinalCoupling:
    """User-supplied longitudinal coupling into one auxiliary bosonic factor.

    Adds omega b^dag b + g (b + b^dag) (x) (d_hat . direction) to the built
    Hamiltonian.  The auxiliary factor is appended after the matter factor
    and is untouched by gauge transformations.
    """

    omega: float
    coupling: float
    cutoff: int
    direction: tuple = (1.0, 0.0, 0.0)


def _apply_longitudinal(h: np.ndarray, space: HilbertSpec, em: EmitterSpec,
                        lc: LongitudinalCoupling):
    ext = HilbertSpec(list(space.factors) + [photon(lc.cutoff)])
    aux_fi = len(ext.factors) - 1
    b = ext.embed(aux_fi, ladder_matrix(lc.cutoff))
    mi = ext.matter_indices[0]
    direction = np.asarray(lc.direction, dtype=float).reshape(3)
    d_mat = np.einsum("cij,c->ij", em.dipole, direction)
    coup = lc.coupling * (b + b.conj().T) @ ext.embed(mi, d_mat)
    h_ext = np.kron(h, np.eye(lc.cutoff + 1)) + lc.omega * b.conj().T @ b + coup
    return h_ext, ext


def build_dipole(ms: ModeSet, em: EmitterSpec, g: GaugeParam,
                 cutoffs: Union[int, Sequence[int]],
                 longitudinal: Optional[LongitudinalCoupling] = None) -> HamiltonianBundle:
    """Dipole-approximation Hamiltonian at gauge parameter theta.

    H = V H_F V^dag + U H_0 U^dag with V = exp(-i theta X) and
    U = exp(+i (1 - theta) X), both exact matrix exponentials on the
    truncated space.  The medium-assisted longitudinal term is off unless a
    `LongitudinalCoupling` hook is supplied.
    """
    cutoffs = _normalize_cutoffs(cutoffs, ms.n_modes)
    cs = couplings(ms, em)
    _check_cutoff_headroom(cutoffs, g.theta, cs)
    space = standard_space(cutoffs, em.n_levels)
    h_f = field_hamiltonian(ms.chi, space)
    h_0 = space.embed(space.matter_indices[0], em.h0)
    gen = HermitianGenerator(cs.generator_matrix(space), space)
    h = gen.conjugate(-g.theta, h_f) + gen.conjugate(1.0 - g.theta, h_0)
    meta = {"builder": "build_dipole", "truncation": "correct",
            "cutoffs": cutoffs, "theta": g.theta,
            "eta": _eta_summary(cs)}
    if longitudinal is not None:
        h, space = _apply_longitudinal(h, space, em, longitudinal)
        meta["longitudinal"] = "custom"
    h = (h + h.conj().T) / 2
    return HamiltonianBundle(Operator(h, space, hermitian=True), space, g, meta)


def _eta_summary(cs: CouplingSet):
    try:
        return [complex(v) for v in cs.scalars]
    except ValueError:
        return None


def _single_mode_tls_space(cutoff: int) -> HilbertSpec:
    return standard_space((cutoff,), 2)


def _trig_pair(arg: np.ndarray):
    """cos(arg) and sin(arg) for a Hermitian matrix argument."""
    vals, vecs = np.linalg.eigh((arg + arg.conj().T) / 2)
    cos_m = (vecs * np.cos(vals)) @ vecs.conj().T
    sin_m = (vecs * np.sin(vals)) @ vecs.conj().T
    return cos_m, sin_m


def build_tls_coulomb_single(chi: float, omega0: float, eta: complex,
                             cutoff: int) -> HamiltonianBundle:
    """Single-mode two-level Coulomb-form Hamiltonian via matrix trigonometry.

    H = chi a^dag a + (omega0/2) [cos(2 Phi) sigma_z + sin(2 Phi) sigma_y]
    with Phi = eta a^dag + eta^* a.  Identical, as an operator identity on the
    truncated space, to build_dipole at theta = 0.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    space = _single_mode_tls_space(cutoff)
    a = ladder_matrix(cutoff)
    phi = eta * a.conj().T + np.conj(eta) * a
    cos_m, sin_m = _trig_pair(2 * phi)
    h = (chi * np.kron(a.conj().T @ a, np.eye(2))
         + (omega0 / 2) * (np.kron(cos_m, PAULI_Z) + np.kron(sin_m, PAULI_Y)))
    h = (h + h.conj().T) / 2
    meta = {"builder": "build_tls_coulomb_single", "truncation": "correct",
            "cutoffs": (cutoff,), "eta": [complex(eta)], "chi": chi, "omega0": omega0}
    return HamiltonianBundle(Operator(h, space, hermitian=True), space, COULOMB, meta)


def build_tls_multipolar_single(chi: float, omega0: float, eta: complex,
                                cutoff: int) -> HamiltonianBundle:
    """Single-mode two-level multipolar-form Hamiltonian (canonical algebra).

    H = chi a^dag a + (omega0/2) sigma_z + i chi (eta a^dag - eta^* a) sigma_x
        + chi |eta|^2.
    The c-number term is kept so operator-level gauge comparisons close; the
    form matches build_dipole at theta = 1 on the low-energy sector once the
    cutoff is converged.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    space = _single_mode_tls_space(cutoff)
    a = ladder_matrix(cutoff)
    drive = 1j * chi * (eta * a.conj().T - np.conj(eta) * a)
    h = (chi * np.kron(a.conj().T @ a, np.eye(2))
         + (omega0 / 2) * np.kron(np.eye(cutoff + 1), PAULI_Z)
         + np.kron(drive, PAULI_X)
         + chi * abs(eta) ** 2 * np.eye(space.dim))
    h = (h + h.conj().T) / 2
    meta = {"builder": "build_tls_multipolar_single", "truncation": "correct",
            "cutoffs": (cutoff,), "eta": [complex(eta)], "chi": chi, "omega0": omega0}
    return HamiltonianBundle(Operator(h, space, hermitian=True), space, MULTIPOLAR, meta)


def _nested_commutator_series(x: np.ndarray, h0: np.ndarray, order: int) -> np.ndarray:
    """sum_{j<=order} (i^j / j!) ad_X^j(H_0): the naive Taylor truncation of U H_0 U^dag."""
    out = h0.copy()
    term = h0.copy()
    fact = 1.0
    for j in range(1, order + 1):
        term = x @ term - term @ x
        fact *= j
        out = out + (1j ** j / fact) * term
    return out


def multipolar_canonical_terms(ms: ModeSet, em: EmitterSpec, space: HilbertSpec,
                               cs: CouplingSet):
    """Interaction and polarization-squared terms of the canonical multipolar form.

    interaction = -i sum_{mu nu} chi*_{mu nu} a_mu (x) eta_nu^dag + H.c.
    p_squared   = sum_{mu nu} chi_{mu nu} eta_mu^dag eta_nu  (matter only)
    """
    ph = space.photon_indices
    mi = space.matter_indices[0]
    a_ops = [space.embed(fi, ladder_matrix(space.factors[fi].fock_cutoff)) for fi in ph]
    chi = ms.chi
    inter = np.zeros((space.dim, space.dim), dtype=complex)
    for mu in range(ms.n_modes):
        for nu in range(ms.n_modes):
            if chi[mu, nu] == 0:
                continue
            t = -1j * np.conj(chi[mu, nu]) * a_ops[mu] @ space.embed(mi, cs.eta_matrices[nu].conj().T)
            inter += t + t.conj().T
    p2_matter = np.zeros((em.n_levels, em.n_levels), dtype=complex)
    for mu in range(ms.n_modes):
        for nu in range(ms.n_modes):
            p2_matter += chi[mu, nu] * cs.eta_matrices[mu].conj().T @ cs.eta_matrices[nu]
    return inter, space.embed(mi, p2_matter)


def build_naive(ms: ModeSet, em: EmitterSpec, g: GaugeParam,
                cutoffs: Union[int, Sequence[int]], order: int = 1) -> HamiltonianBundle:
    """Gauge-violating reference Hamiltonians from direct (naive) truncation.

    theta = 0: the minimal-coupling conjugation U H_0 U^dag is replaced by its
    Taylor series in the generator, truncated at `order` (order 1 keeps the
    linear drive only).  theta = 1: the correct multipolar form minus the
    mode-truncated polarization-squared correction.  Other theta values are
    not defined.
    """
    if order < 1:
        raise ValueError(f"unsupported naive order {order}")
    cutoffs = _normalize_cutoffs(cutoffs, ms.n_modes)
    cs = couplings(ms, em)
    space = standard_space(cutoffs, em.n_levels)
    h_f = field_hamiltonian(ms.chi, space)
    h_0 = space.embed(space.matter_indices[0], em.h0)
    meta = {"builder": "build_naive", "truncation": "naive", "cutoffs": cutoffs,
            "theta": g.theta, "order": order, "eta": _eta_summary(cs)}
    if g.theta == 0.0:
        x = cs.generator_matrix(space)
        h = h_f + _nested_commutator_series(x, h_0, order)
    elif g.theta == 1.0:
        inter, _p2 = multipolar_canonical_terms(ms, em, space, cs)
        h = h_f + h_0 + inter
    else:
        raise ValueError("naive builders are defined at theta = 0 and theta = 1 only")
    h = (h + h.conj().T) / 2
    return HamiltonianBundle(Operator(h, space, hermitian=True), space, g, meta)


def simpson_segment(fn: Callable[[float], np.ndarray], lo: float, hi: float,
                    n_nodes: int) -> np.ndarray:
    """Composite Simpson quadrature of a vector-valued function on [lo, hi]."""
    if n_nodes < 3:
        n_nodes = 3
    if n_nodes % 2 == 0:
        n_nodes += 1
    s_vals = np.linspace(lo, hi, n_nodes)
    samples = np.array([np.asarray(fn(s), dtype=complex) for s in s_vals])
    w = np.ones(n_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = (hi - lo) / (n_nodes - 1)
    return (h / 3) * np.einsum("k,k...->...", w, samples)


def segment_integral(fn: Callable[[float], np.ndarray], lo: float, hi: float,
                     n_nodes: int = 65, tol: float = 1e-8,
                     max_refine: int = 4) -> np.ndarray:
    """Simpson integral with Richardson control; refines until the estimate converges."""
    coarse = simpson_segment(fn, lo, hi, n_nodes)
    for _ in range(max_refine):
        fine_nodes = 2 * n_nodes - 1
        fine = simpson_segment(fn, lo, hi, fine_nodes)
        err = np.abs(fine - coarse).max() / 15.0
        if err <= tol * max(1.0, float(np.abs(fine).max())):
            return fine
        coarse, n_nodes = fine, fine_nodes
    raise ConvergenceError(
        f"segment quadrature did not converge (Richardson estimate {err:.3e} > tol {tol:g})")


def build_beyond_dipole(chi: Union[float, np.ndarray],
                        profile_fns: Sequence[Callable[[np.ndarray], np.ndarray]],
                        em: EmitterSpec, gauge: str,
                        cutoffs: Union[int, Sequence[int]],
                        quad_nodes: int = 65, quad_tol: float = 1e-8) -> HamiltonianBundle:
    """Beyond-dipole Hamiltonian for an effective single-particle two-level emitter.

    Profiles are sampled along the displacement segment s r_dip, s in [-1, 1].
    The Coulomb form exponentiates the line-integrated vector potential; the
    multipolar form carries the segment-averaged field drive, the odd-field
    (sigma_x-free) drive that vanishes for even profiles, and the
    mode-truncated polarization-squared correction with
    [int_0^1 f]^2 - [int_-1^0 f]^2 weights.  Constant profiles reduce exactly
    to the dipole builders.
    """
    if not em.is_tls or em.single_particle is None:
        raise ValueError("requires a two-level emitter with single_particle data")
    if gauge not in ("coulomb", "multipolar"):
        raise ValueError(f"unknown gauge {gauge!r}")
    chi = np.atleast_2d(np.asarray(chi, dtype=complex))
    m_modes = chi.shape[0]
    if len(profile_fns) != m_modes:
        raise ValueError("need one profile function per mode")
    sp = em.single_particle
    d = sp.q * sp.r_dip
    dev = max(max_abs(em.dipole[c] - d[c] * PAULI_X) for c in range(3))
    if dev >= 1e-10 * max(1.0, float(np.abs(d).max())):
        raise InvariantViolation("emitter dipole inconsistent with q * r_dip * sigma_x")
    omega0 = float(em.levels[0] - em.levels[1])

    chi_d = np.diag(chi).real
    a_int = np.zeros((m_modes, 3), dtype=complex)  # int_0^1 f(s r_dip) ds
    b_int = np.zeros((m_modes, 3), dtype=complex)  # int_-1^0 f(s r_dip) ds
    for mu, fn in enumerate(profile_fns):
        sampler = lambda s: np.asarray(fn(s * sp.r_dip), dtype=complex).reshape(3)
        a_int[mu] = segment_integral(sampler, 0.0, 1.0, quad_nodes, quad_tol)
        b_int[mu] = segment_integral(sampler, -1.0, 0.0, quad_nodes, quad_tol)
    # segment-averaged couplings and their even-field (sigma_x-free) companions
    eta_bar = (d @ (a_int + b_int).conj().T) / np.sqrt(2 * chi_d)
    g_even = (d @ (a_int - b_int).conj().T) / (2 * np.sqrt(2 * chi_d))

    cutoffs = _normalize_cutoffs(cutoffs, m_modes)
    space = standard_space(cutoffs, 2)
    mi = space.matter_indices[0]
    h_f = field_hamiltonian(chi, space)
    a_ops = [space.embed(fi, ladder_matrix(space.factors[fi].fock_cutoff))
             for fi in space.photon_indices]
    meta = {"builder": "build_beyond_dipole", "truncation": "correct",
            "cutoffs": cutoffs, "gauge_label": gauge,
            "eta_bar": [complex(v) for v in eta_bar]}

    if gauge == "coulomb":
        phi = np.zeros((space.dim, space.dim), dtype=complex)
        sx = space.embed(mi, PAULI_X)
        for mu in range(m_modes):
            phi += eta_bar[mu] * a_ops[mu].conj().T + np.conj(eta_bar[mu]) * a_ops[mu]
        cos_m, sin_m = _trig_pair(phi)
        h = h_f + (omega0 / 2) * (cos_m @ space.embed(mi, PAULI_Z)
                                  + sin_m @ space.embed(mi, PAULI_Y))
        bundle_gauge = COULOMB
    else:
        # xi_mu = -(g_even,mu 1 + (eta_bar,mu / 2) sigma_x) on the matter factor
        xi = np.array([-(g_even[mu] * np.eye(2, dtype=complex) + 0.5 * eta_bar[mu] * PAULI_X)
                       for mu in range(m_modes)])
        h = h_f + (omega0 / 2) * space.embed(mi, PAULI_Z)
        for mu in range(m_modes):
            for nu in range(m_modes):
                if chi[mu, nu] != 0:
                    t = 1j * np.conj(chi[mu, nu]) * a_ops[mu] @ space.embed(mi, xi[nu].conj().T)
                    h += t + t.conj().T
        p2 = np.zeros((2, 2), dtype=complex)
        for mu in range(m_modes):
            for nu in range(m_modes):
                p2 += chi[mu, nu] * xi[mu].conj().T @ xi[nu]
        h += space.embed(mi, p2)
        bundle_gauge = MULTIPOLAR
    h = (h + h.conj().T) / 2
    return HamiltonianBundle(Operator(h, space, hermitian=True), space, bundle_gauge, meta)


def build_generalized_1d(nm: NormalModeSet1D, em: EmitterSpec, gauge: str,
                         n_modes: int, cutoffs: Union[int, Sequence[int]],
                         x0: float, truncation: str = "correct",
                         polarization_axis: int = 0) -> HamiltonianBundle:
    """Normal-mode Hamiltonians of a lossless 1D dielectric, dipole approximation.

    gauge "gC":  H = sum_mu omega_mu a_mu^dag a_mu + U H_0 U^dag with the
    exact truncated minimal-coupling unitary U = exp(i d.A(x0)).
    gauge "gmp": H = H_F + H_0 + i sum_mu sqrt(omega_mu/2) h_mu(x0)
    (a_mu^dag - a_mu) (x) d_hat + polarization-squared term.  With
    truncation "correct" the polarization-squared sum runs over the kept
    modes only; "naive" sums over every mode carried by `nm`, which shifts
    the Hamiltonian by a matter-only operator (identity on the photon
    factor).
    """
    if gauge not in ("gC", "gmp"):
        raise ValueError(f"unknown gauge {gauge!r}")
    if truncation not in ("correct", "naive"):
        raise ValueError(f"unknown truncation {truncation!r}")
    if truncation == "naive" and gauge == "gC":
        raise ValueError("naive truncation is defined for the generalized multipolar gauge only")
    if not 1 <= n_modes <= nm.n_modes:
        raise ValueError(f"n_modes must be in [1, {nm.n_modes}]")
    h_at_x0 = nm.profile_at(x0)
    omega = nm.omega[:n_modes]
    d_mat = em.dipole[polarization_axis]
    cutoffs = _normalize_cutoffs(cutoffs, n_modes)
    space = standard_space(cutoffs, em.n_levels)
    mi = space.matter_indices[0]
    h_f = field_hamiltonian(np.diag(omega), space)
    h_0 = space.embed(mi, em.h0)
    meta = {"builder": "build_generalized_1d", "truncation": truncation,
            "cutoffs": cutoffs, "gauge_label": gauge, "n_modes": n_modes, "x0": x0}

    if gauge == "gC":
        x = np.zeros((space.dim, space.dim), dtype=complex)
        for mu, fi in enumerate(space.photon_indices):
            a = space.embed(fi, ladder_matrix(space.factors[fi].fock_cutoff))
            kappa = space.embed(mi, d_mat) * (h_at_x0[mu] / np.sqrt(2 * omega[mu]))
            x += (a + a.conj().T) @ kappa
        gen = HermitianGenerator(x, space)
        h = h_f + gen.conjugate(1.0, h_0)
        bundle_gauge = COULOMB
    else:
        h = h_f + h_0
        for mu, fi in enumerate(space.photon_indices):
            a = space.embed(fi, ladder_matrix(space.factors[fi].fock_cutoff))
            drive = 1j * np.sqrt(omega[mu] / 2) * h_at_x0[mu] * (a.conj().T - a)
            h += drive @ space.embed(mi, d_mat)
        p2_modes = range(n_modes) if truncation == "correct" else range(nm.n_modes)
        d_sq = d_mat @ d_mat
        p2 = sum((h_at_x0[mu] ** 2 / 2) * d_sq for mu in p2_modes)
        h += space.embed(mi, p2)
        bundle_gauge = MULTIPOLAR
    h = (h + h.conj().T) / 2
    return HamiltonianBundle(Operator(h, space, hermitian=True), space, bundle_gauge, meta)


class TimeDependentHamiltonian:
    """H(t) for a modulated coupling mu(t), reentrant and cheap to evaluate.

    Coulomb gauge:    H(t) = H_F + U(t) H_0 U(t)^dag,   U(t) = exp(+i mu(t) X)
    Multipolar gauge: H(t) = V(t) H_F V(t)^dag + H_0 + sign * mu'(t) X,
                      V(t) = exp(-i mu(t) X)
    where the extra multipolar term compensates the explicitly time-dependent
    gauge condition; its sign is pinned by the gauge-equivalence of the
    resulting dynamics (see dynamics.td_gauge_equivalence).
    """

    def __init__(self, gauge: str, generator: HermitianGenerator, h_f: np.ndarray,
                 h_0: np.ndarray, profile: TimeProfile, space: HilbertSpec,
                 extra_term_sign: float = TD_EXTRA_TERM_SIGN):
        if gauge not in ("coulomb", "multipolar"):
            raise ValueError(f"unknown gauge {gauge!r}")
        self.gauge = gauge
        self.generator = generator
        self.h_f = h_f
        self.h_0 = h_0
        self.profile = profile
        self.space = space
        self.extra_term_sign = float(extra_term_sign)

    def matrix(self, t: float) -> np.ndarray:
        mu = self.profile.mu(t)
        if self.gauge == "coulomb":
            h = self.h_f + self.generator.conjugate(mu, self.h_0)
        else:
            h = (self.generator.conjugate(-mu, self.h_f) + self.h_0
                 + self.extra_term_sign * self.profile.mu_dot(t) * self.generator.matrix)
        return (h + h.conj().T) / 2

    def __call__(self, t: float) -> Operator:
        return Operator(self.matrix(t), self.space, hermitian=True)

    def gauge_map(self, t: float) -> Operator:
        """W(t) = exp(-i mu(t) X), mapping Coulomb-gauge states to multipolar ones."""
        return self.generator.unitary(-self.profile.mu(t))


def build_time_dependent(ms: ModeSet, em: EmitterSpec, gauge: str,
                         profile: TimeProfile, cutoffs: Union[int, Sequence[int]],
                         extra_term_sign: float = TD_EXTRA_TERM_SIGN) -> TimeDependentHamiltonian:
    """Time-dependent Hamiltonian for coupling modulated by mu(t).

    mu == 1 reproduces the static builders; mu == 0 decouples the emitter.
    `extra_term_sign` exists so the sign convention of the multipolar extra
    term can be negated as a control; the default is the physically-correct
    choice.
    """
    cutoffs = _normalize_cutoffs(cutoffs, ms.n_modes)
    cs = couplings(ms, em)
    space = standard_space(cutoffs, em.n_levels)
    h_f = field_hamiltonian(ms.chi, space)
    h_0 = space.embed(space.matter_indices[0], em.h0)
    gen = HermitianGenerator(cs.generator_matrix(space), space)
    return TimeDependentHamiltonian(gauge, gen, h_f, h_0, profile, space, extra_term_sign)
