"""Newton-Krylov solves of the perturbed equations under Coulomb gauge."""

import logging

import numpy as np
from scipy.sparse.linalg import LinearOperator, lsqr

from vwlab.core import lattice as lat
from vwlab.core import vw_operator as vwo
from vwlab.core.domain.errors import PreconditionError
from vwlab.core.domain.models import Configuration, PerturbationPack, SolveReport

logger = logging.getLogger(__name__)

MAX_HALVINGS = 20
STAGNATION_RATIO = 0.99
SIGMA_FLOOR = 1e-9


def coulomb_residual(cfg0: Configuration, cfg: Configuration) -> np.ndarray:
    """d0^*(cfg0)(cfg - cfg0)."""
    if cfg0.grid != cfg.grid:
        raise PreconditionError("Coulomb residual needs configurations on one grid")
    return vwo.d0_star(cfg0, cfg.minus(cfg0))


def fd_jacobian_check(
    pack: PerturbationPack,
    cfg: Configuration,
    trials: int,
    seed: int = 0,
    step: float = 1e-3,
    band: int | None = None,
) -> float:
    """Largest relative gap between d1 t and the central difference of vw_perturbed."""
    grid = cfg.grid
    band = lat.default_band(grid.N) if band is None else band
    worst = 0.0
    for trial in range(trials):
        t = lat.sample_tangent(grid, seed, band, tag=f"jacobian-{trial}")
        forward = vwo.vw_perturbed(pack, cfg.shifted(t, step))
        backward = vwo.vw_perturbed(pack, cfg.shifted(t, -step))
        central = forward.minus(backward).scaled(1.0 / (2.0 * step))
        linear = vwo.d1(pack, cfg, t)
        error = lat.residual_norm(central.minus(linear), grid) / max(lat.residual_norm(linear, grid), 1.0)
        worst = max(worst, error)
    return worst


class SolverService:
    """Finds zeros of vw_perturbed on the Coulomb slice through an initial guess."""

    def __init__(
        self,
        tol: float = 1e-10,
        max_newton: int = 30,
        max_krylov: int = 400,
        krylov_rtol: float = 1e-3,
        tikhonov_shift: float = 1e-10,
        reanchor: bool = False,
        certify_c: float = 1e-6,
    ) -> None:
        if tol <= 0:
            raise PreconditionError("solver tolerance must be positive")
        self.tol = tol
        self.max_newton = max_newton
        self.max_krylov = max_krylov
        self.krylov_rtol = krylov_rtol
        self.tikhonov_shift = tikhonov_shift
        self.reanchor = reanchor
        self.certify_c = certify_c

    def _residual(
        self, pack: PerturbationPack, anchor: Configuration, x: Configuration
    ) -> tuple[float, float, np.ndarray]:
        value = vwo.vw_perturbed(pack, x)
        gauge = coulomb_residual(anchor, x)
        vector = lat.residual_to_vector(value, gauge, x.grid)
        return lat.residual_norm(value, x.grid), lat.field_norm(gauge, x.grid, "0"), vector

    def _newton_step(
        self, pack: PerturbationPack, anchor: Configuration, x: Configuration, rhs: np.ndarray
    ) -> tuple[np.ndarray, float]:
        grid = x.grid
        operator = vwo.CombinedOperator(pack, x, anchor)
        size = rhs.size

        def matvec(v: np.ndarray) -> np.ndarray:
            value, gauge = operator.apply(lat.from_vector(np.ravel(v), grid))
            return lat.residual_to_vector(value, gauge, grid)

        def rmatvec(w: np.ndarray) -> np.ndarray:
            value, gauge = lat.vector_to_residual(np.ravel(w), grid)
            return lat.to_vector(operator.adjoint(value, gauge), grid)

        jacobian = LinearOperator((size, size), matvec=matvec, rmatvec=rmatvec, dtype=float)
        rhs_norm = float(np.linalg.norm(rhs))
        tolerance = min(self.krylov_rtol, rhs_norm)
        result = lsqr(jacobian, rhs, atol=tolerance, btol=tolerance, iter_lim=self.max_krylov)
        step, anorm, acond = result[0], result[5], result[6]
        if acond > 0 and anorm / acond < SIGMA_FLOOR:
            logger.debug("Near-singular Jacobian (sigma ~ %.2e), adding Tikhonov shift", anorm / acond)
            result = lsqr(
                jacobian,
                rhs,
                damp=np.sqrt(self.tikhonov_shift),
                atol=tolerance,
                btol=tolerance,
                iter_lim=self.max_krylov,
            )
            step = result[0]
        linear_residual = float(np.linalg.norm(matvec(step) - rhs)) / max(rhs_norm, 1e-300)
        return step, linear_residual

    def newton_solve(self, pack: PerturbationPack, cfg0: Configuration) -> SolveReport:
        """Solve vw_perturbed(x) = 0 with d0^*(cfg0)(x - cfg0) = 0.

        Args:
            pack: Perturbation parameters.
            cfg0: Initial guess and Coulomb anchor.

        Returns:
            SolveReport; non-convergence is reported through ``status``.
        """
        grid = cfg0.grid
        anchor = cfg0
        x = cfg0
        vw_norm, gauge_norm, vector = self._residual(pack, anchor, x)
        norm = float(np.hypot(vw_norm, gauge_norm))
        history = [norm]
        linear_residuals: list[float] = []
        status = "max_iterations"
        iterations = 0

        for _ in range(self.max_newton + 1):
            if vw_norm < self.tol and gauge_norm < self.tol:
                status = "converged"
                break
            if iterations == self.max_newton:
                break
            step_vector, linear_residual = self._newton_step(pack, anchor, x, -vector)
            linear_residuals.append(linear_residual)
            if linear_residual > STAGNATION_RATIO:
                logger.warning(
                    "Krylov stagnation at iteration %d (relative residual %.3f)", iterations, linear_residual
                )
                status = "krylov_stagnation"
                break
            step = lat.from_vector(step_vector, grid)

            scale = 1.0
            for _halving in range(MAX_HALVINGS + 1):
                trial = x.shifted(step, scale)
                trial_vw, trial_gauge, trial_vector = self._residual(pack, anchor, trial)
                trial_norm = float(np.hypot(trial_vw, trial_gauge))
                if trial_norm < norm:
                    break
                scale *= 0.5
            else:
                logger.warning("Line search failed after %d halvings at iteration %d", MAX_HALVINGS, iterations)
                status = "diverged"
                break

            x, vw_norm, gauge_norm, vector, norm = trial, trial_vw, trial_gauge, trial_vector, trial_norm
            iterations += 1
            history.append(norm)
            logger.debug("Newton iteration %d: residual %.3e (step scale %.3g)", iterations, norm, scale)
            if self.reanchor:
                anchor = x
                vw_norm, gauge_norm, vector = self._residual(pack, anchor, x)
                norm = float(np.hypot(vw_norm, gauge_norm))

        max_abs_c = float(np.max(np.abs(x.C)))
        branch = "general" if max_abs_c > self.certify_c * lat.config_norm(x) else "reduced-branch"
        report = SolveReport(
            converged=status == "converged",
            iterations=iterations,
            final_residual=lat.residual_norm(vwo.vw_perturbed(pack, x), grid),
            gauge_residual=lat.field_norm(coulomb_residual(anchor, x), grid, "0"),
            config_out=x,
            pack_seed=pack.seed,
            status=status,
            branch=branch,
            max_abs_c=max_abs_c,
            residual_history=history,
            linear_residuals=linear_residuals,
            tol=self.tol,
        )
        logger.info(
            "Newton solve %s after %d iterations: residual %.3e, gauge %.3e, branch %s",
            report.status,
            report.iterations,
            report.final_residual,
            report.gauge_residual,
            report.branch,
        )
        return report
