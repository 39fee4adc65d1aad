"""Time integration of the coupled atom-cavity equations.

Two models are integrated from the vacuum state:

  full:    a+, a-, and the N atomic coherences sigma_j (validates the
           adiabatic elimination used by the reduced model)
  reduced: a+, a- only, with the atoms eliminated

Both systems are linear with constant coefficients; integration uses an
adaptive explicit Runge-Kutta scheme with an embedded error estimate
(scipy's DOP853).
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .arrays import AtomArray, coupling_weight
from .params import CavityParams
from .steady import DriveConfig, ModeAmplitudes, collective_coupling

__all__ = [
    "FullState",
    "IntegratorConfig",
    "FullTrajectory",
    "ModeTrajectory",
    "StiffnessError",
    "integrate_full",
    "integrate_reduced",
    "weak_excitation_check",
    "trajectory_to_csv",
]


class StiffnessError(RuntimeError):
    """Adaptive step control underflowed."""


@dataclass(frozen=True)
class FullState:
    """Cavity amplitudes plus the N atomic coherences at one instant."""

    a_plus: complex
    a_minus: complex
    sigmas: np.ndarray


@dataclass(frozen=True)
class IntegratorConfig:
    """t_end in seconds; rel_tol/abs_tol in (0,1); max_step caps the solver step."""

    t_end: float
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_step: float = np.inf

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be strictly positive")
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class ModeTrajectory:
    t: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray

    @property
    def final(self) -> ModeAmplitudes:
        return ModeAmplitudes(complex(self.a_plus[-1]), complex(self.a_minus[-1]))


@dataclass(frozen=True, eq=False)
class FullTrajectory:
    t: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray
    sigmas: np.ndarray  # shape (n_times, N)

    @property
    def final(self) -> FullState:
        return FullState(complex(self.a_plus[-1]), complex(self.a_minus[-1]),
                         self.sigmas[-1].copy())

    @property
    def final_modes(self) -> ModeAmplitudes:
        return ModeAmplitudes(complex(self.a_plus[-1]), complex(self.a_minus[-1]))


def _per_atom_g(p: CavityParams, a: AtomArray) -> np.ndarray:
    g_j = np.full(a.n_atoms, p.g)
    if a.transverse is not None:
        if p.waist_y is None or p.waist_z is None:
            raise ValueError("transverse offsets require waist_y and waist_z in CavityParams")
        g_j = g_j * coupling_weight(a.transverse[:, 0], a.transverse[:, 1], p.waist_y, p.waist_z)
    return g_j


def _solve(matrix: np.ndarray, drive: np.ndarray, cfg: IntegratorConfig, t_eval,
           stiff_note: str, y0=None):
    rhs = lambda t, y: matrix @ y + drive
    if y0 is None:
        y0 = np.zeros(matrix.shape[0], dtype=complex)
    sol = solve_ivp(rhs, (0.0, cfg.t_end), y0, method="DOP853",
                    rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step,
                    t_eval=t_eval, dense_output=False)
    if not sol.success:
        raise StiffnessError(f"integration failed ({sol.message}); {stiff_note}")
    return sol


def integrate_full(p: CavityParams, a: AtomArray, d: DriveConfig, cfg: IntegratorConfig,
                   t_eval=None, rotating_frame: bool = False,
                   initial: FullState | None = None) -> FullTrajectory:
    """Integrate the 2+N complex equations, by default from the vacuum state.

    With rotating_frame=True the atomic coherences are propagated as
    sigma_j * exp(-i Delta t), removing the fast phase from their homogeneous
    part; results are transformed back before returning.
    """
    n = a.n_atoms
    g_j = _per_atom_g(p, a)
    phases = np.exp(1j * p.k * a.positions_x)
    delta_atom = d.delta_atom
    cav = 1j * d.delta - p.kappa / 2.0
    drive = np.zeros(2 + n, dtype=complex)
    drive[0] = -1j * np.sqrt(p.kappa_in) * d.e_in
    stiff_note = (f"timescale ratio |i*Delta - gamma/2| / kappa = "
                  f"{abs(1j * delta_atom - p.gamma / 2) / p.kappa:.3g}")

    matrix = np.zeros((2 + n, 2 + n), dtype=complex)
    matrix[0, 0] = matrix[1, 1] = cav
    if n:
        matrix[0, 2:] = g_j * np.conj(phases)
        matrix[1, 2:] = g_j * phases
        matrix[2:, 0] = -g_j * phases
        matrix[2:, 1] = -g_j * np.conj(phases)
        atom_diag = (-p.gamma / 2.0) if rotating_frame else (1j * delta_atom - p.gamma / 2.0)
        matrix[2:, 2:][np.diag_indices(n)] = atom_diag

    y0 = None
    if initial is not None:
        if initial.sigmas.size != n:
            raise ValueError("initial state has the wrong number of atomic coherences")
        y0 = np.concatenate([[initial.a_plus, initial.a_minus],
                             np.asarray(initial.sigmas, dtype=complex)])

    if rotating_frame and n:
        base = matrix.copy()

        def rhs(t, y):
            rot = np.exp(-1j * delta_atom * t)
            dy = base @ y
            # cavity rows see sigma_j = sigma~_j * e^{i Delta t}; atomic drive rotates oppositely
            dy[:2] = dy[:2] + (np.conj(rot) - 1.0) * (base[:2, 2:] @ y[2:])
            dy[2:] = dy[2:] + (rot - 1.0) * (base[2:, :2] @ y[:2])
            dy += drive
            return dy

        if y0 is None:
            y0 = np.zeros(2 + n, dtype=complex)
        sol = solve_ivp(rhs, (0.0, cfg.t_end), y0, method="DOP853",
                        rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step,
                        t_eval=t_eval)
        if not sol.success:
            raise StiffnessError(f"integration failed ({sol.message}); {stiff_note}")
        sig = (sol.y[2:] * np.exp(1j * delta_atom * sol.t)).T
    else:
        sol = _solve(matrix, drive, cfg, t_eval, stiff_note, y0)
        sig = sol.y[2:].T

    return FullTrajectory(sol.t.copy(), sol.y[0].copy(), sol.y[1].copy(), sig.copy())


def integrate_reduced(p: CavityParams, a: AtomArray, d: DriveConfig, cfg: IntegratorConfig,
                      t_eval=None, initial: ModeAmplitudes | None = None) -> ModeTrajectory:
    """Integrate the two-mode reduced equations, by default from the vacuum state."""
    resp = 1j * d.delta_atom - p.gamma / 2.0
    if resp == 0:
        raise ValueError("i*delta_atom - gamma/2 must be nonzero")
    n_eff, s_eff = collective_coupling(p, a)
    diag = 1j * d.delta - p.kappa / 2.0 + n_eff * p.g**2 / resp
    off = n_eff * p.g**2 / resp
    matrix = np.array([[diag, off * np.conj(s_eff)], [off * s_eff, diag]], dtype=complex)
    drive = np.array([-1j * np.sqrt(p.kappa_in) * d.e_in, 0.0], dtype=complex)
    y0 = None if initial is None else np.array([initial.a_plus, initial.a_minus],
                                               dtype=complex)
    sol = _solve(matrix, drive, cfg, t_eval, "reduced two-mode system", y0)
    return ModeTrajectory(sol.t.copy(), sol.y[0].copy(), sol.y[1].copy())


def weak_excitation_check(traj: FullTrajectory) -> float:
    """Maximum over time of the total atomic excitation sum_j |sigma_j|^2."""
    if traj.sigmas.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(traj.sigmas) ** 2, axis=1)))


def trajectory_to_csv(traj, path) -> None:
    """Dump a trajectory as t plus Re/Im columns of every variable."""
    cols = [("a_plus", traj.a_plus), ("a_minus", traj.a_minus)]
    if isinstance(traj, FullTrajectory):
        cols += [(f"sigma_{j}", traj.sigmas[:, j]) for j in range(traj.sigmas.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["t"]
        for name, _ in cols:
            header += [f"re_{name}", f"im_{name}"]
        writer.writerow(header)
        for i, t in enumerate(traj.t):
            row = [f"{t:.17g}"]
            for _, values in cols:
                row += [f"{values[i].real:.17g}", f"{values[i].imag:.17g}"]
            writer.writerow(row)
