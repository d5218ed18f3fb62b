"""Step-size feedback gains and error-set bounds for the S2S error dynamics.

Sign convention: the controller is ``u = u* + K (x - x*)`` so the closed loop
is ``A + B K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, UncontrollableError

DARE_TOL = 1e-10
DARE_MAX_ITER = 5000


@dataclass(frozen=True)
class GainSpec:
    K: np.ndarray
    method: str
    Q: np.ndarray | None = None
    R: float | None = None
    rho_cl: float = float("nan")
    P: np.ndarray | None = None
    dare_residual: float | None = None

    def closed_loop(self, A, B) -> np.ndarray:
        return np.asarray(A, dtype=float) + np.outer(B, self.K)

    def to_dict(self) -> dict:
        data = {"K": self.K.tolist(), "method": self.method, "rho_cl": self.rho_cl}
        if self.Q is not None:
            data["Q"] = self.Q.tolist()
        if self.R is not None:
            data["R"] = self.R
        if self.P is not None:
            data["P"] = self.P.tolist()
        if self.dare_residual is not None:
            data["dare_residual"] = self.dare_residual
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "GainSpec":
        allowed = {"K", "method", "Q", "R", "rho_cl", "P", "dare_residual"}
        unknown = set(data) - allowed
        if unknown:
            raise KeyError(f"unknown gain key: {sorted(unknown)[0]!r}")

        def arr(key):
            return None if data.get(key) is None else np.array(data[key], dtype=float)

        return cls(
            K=np.array(data["K"], dtype=float).reshape(2),
            method=data.get("method", "manual"),
            Q=arr("Q"),
            R=None if data.get("R") is None else float(data["R"]),
            rho_cl=float(data.get("rho_cl", float("nan"))),
            P=arr("P"),
            dare_residual=data.get("dare_residual"),
        )


@dataclass(frozen=True)
class InvariantBox:
    """Axis-aligned outer bound ``|e| <= e_max`` of the error set.

    ``invariant`` is True when the box itself is mapped into itself by
    ``e -> A_cl e + w``; otherwise it only bounds the minimal invariant set.
    """

    e_max: np.ndarray
    w_max: np.ndarray
    method: str
    invariant: bool

    def contains(self, e, inflate: float = 0.0, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(e) <= self.e_max * (1.0 + inflate) + atol))

    def to_dict(self) -> dict:
        return {
            "e_max": self.e_max.tolist(),
            "w_max": self.w_max.tolist(),
            "method": self.method,
            "invariant": self.invariant,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InvariantBox":
        unknown = set(data) - {"e_max", "w_max", "method", "invariant"}
        if unknown:
            raise KeyError(f"unknown box key: {sorted(unknown)[0]!r}")
        return cls(
            np.array(data["e_max"], dtype=float),
            np.array(data["w_max"], dtype=float),
            data["method"],
            bool(data["invariant"]),
        )


def spectral_radius(M) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(M, dtype=float)))))


def dare_residual(A, B, Q, R, P) -> float:
    A, B, Q, P = (np.asarray(m, dtype=float) for m in (A, B, Q, P))
    B = B.reshape(-1, 1)
    S = R + (B.T @ P @ B).item()
    rhs = A.T @ P @ A - (A.T @ P @ B) @ (B.T @ P @ A) / S + Q
    return float(np.max(np.abs(P - rhs)))


def _check_stabilizable(A: np.ndarray, B: np.ndarray):
    # PBH test on the modes outside the open unit disk
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if abs(lam) >= 1.0 - 1e-12:
            M = np.hstack([A - lam * np.eye(n), B.reshape(-1, 1)])
            if np.linalg.matrix_rank(M, tol=1e-9 * max(1.0, np.linalg.norm(M))) < n:
                raise UncontrollableError(f"mode {lam:.6g} is not stabilizable")


def dlqr(A, B, Q=None, R: float = 1.0, tol: float = DARE_TOL, max_iter: int = DARE_MAX_ITER) -> GainSpec:
    """Discrete LQR gain by fixed-point iteration of the Riccati recursion."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(-1)
    Q = np.eye(A.shape[0]) if Q is None else np.asarray(Q, dtype=float)
    R = float(R)
    if R <= 0:
        raise ValueError("R must be positive")
    if np.min(np.linalg.eigvalsh((Q + Q.T) / 2)) < -1e-12:
        raise ValueError("Q must be positive semidefinite")
    _check_stabilizable(A, B)

    b = B.reshape(-1, 1)
    P = Q.copy()
    prev = np.inf
    for _ in range(max_iter):
        PB = P @ b
        P_next = A.T @ P @ A - (A.T @ PB) @ (PB.T @ A) / (R + (b.T @ PB).item()) + Q
        P_next = (P_next + P_next.T) / 2
        step = np.max(np.abs(P_next - P))
        P = P_next
        scale = max(1.0, np.max(np.abs(P)))
        # stop when converged, or when the update has hit the roundoff floor
        if step <= 1e-3 * tol * scale or (step <= tol * scale and step >= prev):
            break
        prev = step
    else:
        raise ConvergenceError(f"Riccati iteration did not converge in {max_iter} iterations")

    residual = dare_residual(A, B, Q, R, P)
    if residual > tol * max(1.0, np.max(np.abs(P))):
        raise ConvergenceError(f"Riccati residual {residual:.3g} above tolerance")
    K = -((b.T @ P @ A) / (R + (b.T @ P @ b).item())).reshape(-1)
    rho = spectral_radius(A + np.outer(B, K))
    if rho >= 1.0:
        raise UncontrollableError(f"LQR closed loop not stable (spectral radius {rho:.6g})")
    return GainSpec(K, "LQR", Q, R, rho, P, residual)


def deadbeat_gain(A, B) -> GainSpec:
    """Gain placing both closed-loop eigenvalues at zero (Ackermann)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(-1)
    ctrb = np.column_stack([B, A @ B])
    cond = np.linalg.cond(ctrb)
    if not np.isfinite(cond) or cond > 1e12:
        raise UncontrollableError(f"pair is uncontrollable (controllability condition number {cond:.3g})")
    K = -np.array([0.0, 1.0]) @ np.linalg.solve(ctrb, A @ A)
    return GainSpec(K, "Deadbeat", rho_cl=spectral_radius(A + np.outer(B, K)))


def invariant_box(A_cl, w_max, tol: float = 1e-13, max_iter: int = 100_000, n_terms: int = 50) -> InvariantBox:
    """Box outer bound on the error set of ``e+ = A_cl e + w``, ``|w| <= w_max``.

    When ``rho(|A_cl|) < 1`` the componentwise recursion
    ``e <- |A_cl| e + w_max`` converges to a box that is itself invariant.
    Otherwise the bounding box of the truncated Minkowski sum
    ``W + A W + ... + A^(n-1) W`` is returned.
    """
    A_cl = np.asarray(A_cl, dtype=float)
    w_max = np.asarray(w_max, dtype=float).reshape(-1)
    if np.any(w_max < 0):
        raise ValueError("w_max must be componentwise non-negative")
    if spectral_radius(A_cl) >= 1.0:
        raise UncontrollableError("closed loop is not stable")

    abs_A = np.abs(A_cl)
    if spectral_radius(abs_A) < 1.0:
        e = w_max.copy()
        for _ in range(max_iter):
            e_next = abs_A @ e + w_max
            if np.max(np.abs(e_next - e)) <= tol * max(1.0, np.max(e_next)):
                e = e_next
                break
            e = e_next
        else:
            raise ConvergenceError("box recursion did not converge")
        return InvariantBox(e, w_max, "fixed_point", True)

    e = np.zeros_like(w_max)
    power = np.eye(A_cl.shape[0])
    for _ in range(n_terms):
        e = e + np.abs(power) @ w_max
        power = power @ A_cl
    # what the truncation leaves out must be negligible
    if np.max(np.abs(power)) > 1e-6:
        raise ConvergenceError("Minkowski-sum bound did not converge within the term budget")
    return InvariantBox(e, w_max, "minkowski", False)
