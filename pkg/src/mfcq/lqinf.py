"""Infinite-horizon LQ mean-field machinery: Riccati system, approximated Iq-function,
policy-gradient inner iterations, and contraction certificates.

All linear matrix equations are solved densely by vectorization; dimensions are
small (d, p <= 3).  Cross terms of the quadratic forms are symmetrized
(S'K + K'S rather than 2SK) so the variance functional always receives a
symmetric matrix; the scalar case is unaffected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .core import CertificateError, StabilityError

__all__ = [
    "LqInfModel",
    "RiccatiSolution",
    "QnCoefficients",
    "DiscountedMoments",
    "ContractionCertificate",
    "InnerTrace",
    "uvsz",
    "policy_value",
    "riccati_solve",
    "optimal_residuals",
    "approx_q",
    "approx_q_grads",
    "closed_maximizer",
    "inner_ascent",
    "contraction_certificate",
]


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _check_psd(a: np.ndarray, name: str, sign: float = 1.0, strict: bool = False):
    eig = np.linalg.eigvalsh(_sym(sign * a))
    bound = 0.0 if not strict else 1e-14
    if np.min(eig) < -1e-10 or (strict and np.min(eig) <= 0.0):
        kind = "positive definite" if sign > 0 else "negative semidefinite"
        raise ValueError(f"{name} must be {kind} (eigenvalues {eig})")


@dataclass(frozen=True)
class LqInfModel:
    """Coefficients of the infinite-horizon LQ mean-field problem."""

    B: np.ndarray
    Bbar: np.ndarray
    D: np.ndarray
    Dbar: np.ndarray
    Do: np.ndarray
    Dobar: np.ndarray
    M: np.ndarray
    Mbar: np.ndarray
    C: np.ndarray
    F: np.ndarray
    Fo: np.ndarray
    R: np.ndarray
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("B", "Bbar", "D", "Dbar", "Do", "Dobar", "M", "Mbar", "C", "F", "Fo", "R"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        d, p = self.C.shape
        for name in ("B", "Bbar", "D", "Dbar", "Do", "Dobar", "M", "Mbar"):
            if getattr(self, name).shape != (d, d):
                raise ValueError(f"{name} must be {d}x{d}")
        for name in ("F", "Fo"):
            if getattr(self, name).shape != (d, p):
                raise ValueError(f"{name} must be {d}x{p}")
        if self.R.shape != (p, p):
            raise ValueError(f"R must be {p}x{p}")
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be > 0")
        _check_psd(self.M, "M", sign=-1.0)
        _check_psd(self.M + self.Mbar, "M + Mbar", sign=-1.0)
        if np.max(np.linalg.eigvalsh(_sym(self.R))) >= 0.0:
            raise ValueError("R must be negative definite")

    @property
    def d(self) -> int:
        return self.C.shape[0]

    @property
    def p(self) -> int:
        return self.C.shape[1]

    @staticmethod
    def scalar(B=0.0, Bbar=0.0, D=0.0, Dbar=0.0, Do=0.0, Dobar=0.0, M=-1.0, Mbar=0.0,
               C=1.0, F=0.0, Fo=1.0, R=-1.0, beta=0.1, gamma=0.5) -> "LqInfModel":
        return LqInfModel(B, Bbar, D, Dbar, Do, Dobar, M, Mbar, C, F, Fo, R, beta, gamma)


@dataclass(frozen=True)
class RiccatiSolution:
    Lambda: np.ndarray
    Gamma: np.ndarray
    chi: float


@dataclass(frozen=True)
class QnCoefficients:
    """Approximated Iq-function coefficients (L, G, c, S, U, Z, V)."""

    Lsym: np.ndarray
    Gsym: np.ndarray
    csym: float
    S: np.ndarray
    U: np.ndarray
    Z: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        for name in ("Lsym", "Gsym", "S", "U", "Z", "V"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        if np.max(np.linalg.eigvalsh(_sym(self.U))) >= 0.0:
            raise ValueError("U must be negative definite")
        if np.max(np.linalg.eigvalsh(_sym(self.V))) >= 0.0:
            raise ValueError("V must be negative definite")

    @property
    def p(self) -> int:
        return self.U.shape[0]


@dataclass(frozen=True)
class DiscountedMoments:
    """Discounted second-moment matrices and the gradient discount-mass constant."""

    C_mu: np.ndarray
    C_mubar: np.ndarray
    mass: float

    def __post_init__(self):
        object.__setattr__(self, "C_mu", np.atleast_2d(np.asarray(self.C_mu, dtype=float)))
        object.__setattr__(self, "C_mubar", np.atleast_2d(np.asarray(self.C_mubar, dtype=float)))
        if self.mass <= 0.0:
            raise ValueError("mass must be > 0")
        _check_psd(self.C_mu, "C_mu", strict=True)
        _check_psd(self.C_mubar, "C_mubar", strict=True)

    @staticmethod
    def identity(d: int, beta: float, mass: Optional[float] = None) -> "DiscountedMoments":
        # literal default: the published gradient carries 1/(1-beta)
        return DiscountedMoments(np.eye(d), np.eye(d), mass if mass is not None else 1.0 / (1.0 - beta))


@dataclass(frozen=True)
class ContractionCertificate:
    upsilon: float
    Upsilon: float
    eta: float
    a: float
    b: float


def uvsz(Lambda: np.ndarray, Gamma: np.ndarray, model: LqInfModel):
    """Second-order policy coefficients (U, V, S, Z) at value matrices (Lambda, Gamma)."""
    L, G = np.atleast_2d(Lambda), np.atleast_2d(Gamma)
    F, Fo, C, R = model.F, model.Fo, model.C, model.R
    U = F.T @ L @ F + Fo.T @ L @ Fo + R
    V = F.T @ L @ F + Fo.T @ G @ Fo + R
    S = C.T @ L + F.T @ L @ model.D + Fo.T @ L @ model.Do
    Z = C.T @ G + F.T @ L @ (model.D + model.Dbar) + Fo.T @ G @ (model.Do + model.Dobar)
    return U, V, S, Z


def _solve_linear_matrix(op, const: np.ndarray, d: int) -> np.ndarray:
    """Solve op(X) + const = 0 for X in R^{d x d}, op linear, by dense vectorization."""
    a = np.empty((d * d, d * d))
    for j in range(d * d):
        basis = np.zeros((d, d))
        basis[j // d, j % d] = 1.0
        a[:, j] = op(basis).ravel()
    try:
        x = np.linalg.solve(a, -const.ravel())
    except np.linalg.LinAlgError as exc:
        raise StabilityError("singular policy-value system; policy not admissible for this beta") from exc
    return x.reshape(d, d)


def _lambda_equation_ops(model: LqInfModel, K: np.ndarray):
    def op(L):
        S_k = model.C.T @ L + model.F.T @ L @ model.D + model.Fo.T @ L @ model.Do
        U_k = model.F.T @ L @ model.F + model.Fo.T @ L @ model.Fo
        return (-model.beta * L + model.D.T @ L @ model.D + model.Do.T @ L @ model.Do
                + model.B.T @ L + L @ model.B + S_k.T @ K + K.T @ S_k + K.T @ U_k @ K)

    const = model.M + K.T @ model.R @ K
    return op, const


def _gamma_equation_ops(model: LqInfModel, Lambda: np.ndarray, Kbar: np.ndarray):
    dd = model.D + model.Dbar
    ddo = model.Do + model.Dobar
    bb = model.B + model.Bbar

    def op(G):
        Z_g = model.C.T @ G + model.Fo.T @ G @ ddo
        V_g = model.Fo.T @ G @ model.Fo
        return (-model.beta * G + ddo.T @ G @ ddo + bb.T @ G + G @ bb
                + Z_g.T @ Kbar + Kbar.T @ Z_g + Kbar.T @ V_g @ Kbar)

    z_c = model.F.T @ Lambda @ dd
    const = (dd.T @ Lambda @ dd + model.M + model.Mbar
             + z_c.T @ Kbar + Kbar.T @ z_c + Kbar.T @ (model.F.T @ Lambda @ model.F + model.R) @ Kbar)
    return op, const


def policy_value(K: np.ndarray, Kbar: np.ndarray, Sigma: np.ndarray, model: LqInfModel):
    """Value coefficients (Lambda_K, Gamma_Kbar, chi_Sigma) of the Gaussian feedback policy."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    Kbar = np.atleast_2d(np.asarray(Kbar, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    _check_psd(Sigma, "Sigma", strict=True)
    op_l, const_l = _lambda_equation_ops(model, K)
    lam = _sym(_solve_linear_matrix(op_l, const_l, model.d))
    op_g, const_g = _gamma_equation_ops(model, lam, Kbar)
    gam = _sym(_solve_linear_matrix(op_g, const_g, model.d))
    u_k = model.F.T @ lam @ model.F + model.Fo.T @ lam @ model.Fo + model.R
    p = model.p
    chi = (1.0 / model.beta) * (
        0.5 * model.gamma * p * (np.log(2.0 * np.pi) + 1.0)
        + 0.5 * model.gamma * np.linalg.slogdet(Sigma)[1]
        + np.trace(u_k @ Sigma)
    )
    return lam, gam, float(chi)


def optimal_residuals(sol: RiccatiSolution, model: LqInfModel) -> Tuple[float, float, float]:
    """Residual norms of the three optimal-value equations at a candidate solution."""
    lam, gam = sol.Lambda, sol.Gamma
    U, V, S, Z = uvsz(lam, gam, model)
    res_l = (-model.beta * lam + model.M + model.D.T @ lam @ model.D + model.Do.T @ lam @ model.Do
             + model.B.T @ lam + lam @ model.B - S.T @ np.linalg.solve(U, S))
    dd = model.D + model.Dbar
    ddo = model.Do + model.Dobar
    bb = model.B + model.Bbar
    res_g = (-model.beta * gam + model.M + model.Mbar + dd.T @ lam @ dd + ddo.T @ gam @ ddo
             + bb.T @ gam + gam @ bb - Z.T @ np.linalg.solve(V, Z))
    sign, logdet = np.linalg.slogdet(-U)
    res_chi = -model.beta * sol.chi + 0.5 * model.gamma * model.p * np.log(model.gamma * np.pi) \
        - 0.5 * model.gamma * logdet
    return float(np.max(np.abs(res_l))), float(np.max(np.abs(res_g))), float(abs(res_chi))


def riccati_solve(model: LqInfModel, tol: float = 1e-12, max_iter: int = 200) -> RiccatiSolution:
    """Solve the optimal-value system by policy iteration on K, then on Kbar."""
    d, p = model.d, model.p
    K = np.zeros((p, d))
    lam = np.zeros((d, d))
    for _ in range(max_iter):
        op_l, const_l = _lambda_equation_ops(model, K)
        lam = _sym(_solve_linear_matrix(op_l, const_l, d))
        U = model.F.T @ lam @ model.F + model.Fo.T @ lam @ model.Fo + model.R
        if np.max(np.linalg.eigvalsh(_sym(U))) >= 0.0:
            raise StabilityError("U lost negative definiteness during policy iteration")
        S = model.C.T @ lam + model.F.T @ lam @ model.D + model.Fo.T @ lam @ model.Do
        K_next = -np.linalg.solve(U, S)
        res = (-model.beta * lam + model.M + model.D.T @ lam @ model.D + model.Do.T @ lam @ model.Do
               + model.B.T @ lam + lam @ model.B - S.T @ np.linalg.solve(U, S))
        if np.max(np.abs(res)) <= tol and np.max(np.abs(K_next - K)) <= tol:
            K = K_next
            break
        K = K_next
    else:
        raise StabilityError(f"Lambda policy iteration did not converge in {max_iter} steps")

    Kbar = np.zeros((p, d))
    gam = np.zeros((d, d))
    dd, ddo, bb = model.D + model.Dbar, model.Do + model.Dobar, model.B + model.Bbar
    for _ in range(max_iter):
        op_g, const_g = _gamma_equation_ops(model, lam, Kbar)
        gam = _sym(_solve_linear_matrix(op_g, const_g, d))
        _, V, _, Z = uvsz(lam, gam, model)
        if np.max(np.linalg.eigvalsh(_sym(V))) >= 0.0:
            raise StabilityError("V lost negative definiteness during policy iteration")
        Kbar_next = -np.linalg.solve(V, Z)
        res = (-model.beta * gam + model.M + model.Mbar + dd.T @ lam @ dd + ddo.T @ gam @ ddo
               + bb.T @ gam + gam @ bb - Z.T @ np.linalg.solve(V, Z))
        if np.max(np.abs(res)) <= tol and np.max(np.abs(Kbar_next - Kbar)) <= tol:
            break
        Kbar = Kbar_next
    else:
        raise StabilityError(f"Gamma policy iteration did not converge in {max_iter} steps")

    U, _, _, _ = uvsz(lam, gam, model)
    sign, logdet = np.linalg.slogdet(-U)
    chi = (0.5 * model.gamma * p * np.log(model.gamma * np.pi) - 0.5 * model.gamma * logdet) / model.beta
    sol = RiccatiSolution(lam, gam, float(chi))
    if max(optimal_residuals(sol, model)) > max(tol, 1e-10):
        raise StabilityError("Riccati residuals exceed tolerance at the returned solution")
    return sol


def _quad_coeff(base: np.ndarray, cross: np.ndarray, quad: np.ndarray, K: np.ndarray) -> np.ndarray:
    """base + cross'K + K'cross + K'quad K (symmetrized quadratic form in K)."""
    return base + cross.T @ K + K.T @ cross + K.T @ quad @ K


def approx_q(psi_n: QnCoefficients, K, Kbar, Sigma, gamma: float,
             moments: Optional[Tuple[np.ndarray, np.ndarray]] = None,
             discounted: Optional[DiscountedMoments] = None) -> float:
    """Approximated Iq-function at policy (K, Kbar, Sigma).

    With ``moments`` = (mu_bar, second_central) the pointwise value is
    returned; with ``discounted`` moments the beta-aggregated objective.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    Kbar = np.atleast_2d(np.asarray(Kbar, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    _check_psd(Sigma, "Sigma", strict=True)
    a_k = _quad_coeff(psi_n.Lsym, psi_n.S, psi_n.U, K)
    a_kbar = _quad_coeff(psi_n.Gsym, psi_n.Z, psi_n.V, Kbar)
    q3 = psi_n.csym + 0.5 * gamma * np.linalg.slogdet(Sigma)[1] + np.trace(psi_n.U @ Sigma)
    if discounted is not None:
        return float(np.trace(a_k @ discounted.C_mu) + np.trace(a_kbar @ discounted.C_mubar)
                     + discounted.mass * q3)
    if moments is None:
        raise ValueError("need pointwise moments or discounted moments")
    mu_bar, second_central = moments
    mu_bar = np.atleast_1d(np.asarray(mu_bar, dtype=float))
    second_central = np.atleast_2d(np.asarray(second_central, dtype=float))
    return float(np.trace(a_k @ second_central) + mu_bar @ a_kbar @ mu_bar + q3)


def approx_q_grads(psi_n: QnCoefficients, discounted: DiscountedMoments, K, Kbar, Sigma,
                   gamma: float):
    """Analytic gradients of the aggregated objective in (K, Kbar, Sigma)."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    Kbar = np.atleast_2d(np.asarray(Kbar, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    _check_psd(Sigma, "Sigma", strict=True)
    grad_k = 2.0 * (psi_n.S + psi_n.U @ K) @ discounted.C_mu
    grad_kbar = 2.0 * (psi_n.Z + psi_n.V @ Kbar) @ discounted.C_mubar
    grad_sigma = discounted.mass * (0.5 * gamma * np.linalg.inv(Sigma) + psi_n.U)
    return grad_k, grad_kbar, grad_sigma


def closed_maximizer(psi_n: QnCoefficients, gamma: float):
    """Unique maximizer (K, Kbar, Sigma) = (-U^{-1}S, -V^{-1}Z, -(gamma/2)U^{-1})."""
    K = -np.linalg.solve(psi_n.U, psi_n.S)
    Kbar = -np.linalg.solve(psi_n.V, psi_n.Z)
    Sigma = _sym(-0.5 * gamma * np.linalg.inv(psi_n.U))
    _check_psd(Sigma, "maximizer Sigma", strict=True)
    return K, Kbar, Sigma


@dataclass
class InnerTrace:
    """Iterates, aggregated objective values, and squared distances to the maximizer."""

    Ks: List[np.ndarray] = field(default_factory=list)
    Kbars: List[np.ndarray] = field(default_factory=list)
    Sigmas: List[np.ndarray] = field(default_factory=list)
    objectives: List[float] = field(default_factory=list)
    sq_dists: List[float] = field(default_factory=list)


def inner_ascent(psi_n: QnCoefficients, discounted: DiscountedMoments, gamma: float,
                 phi0: Tuple[np.ndarray, np.ndarray, np.ndarray],
                 alphas, n_iters: int) -> InnerTrace:
    """Run gradient-ascent inner iterations from phi0 and record the trace.

    ``alphas`` is a scalar rate or a (alpha_K, alpha_Kbar, alpha_Sigma) triple.
    The Sigma step applies alpha_Sigma * mass * ((gamma/2) Sigma^{-1} + U),
    matching the published explicit update with mass = 1/(1-beta).
    """
    if np.isscalar(alphas):
        a_k = a_kbar = a_sig = float(alphas)
    else:
        a_k, a_kbar, a_sig = (float(a) for a in alphas)
    K = np.atleast_2d(np.asarray(phi0[0], dtype=float)).copy()
    Kbar = np.atleast_2d(np.asarray(phi0[1], dtype=float)).copy()
    Sigma = np.atleast_2d(np.asarray(phi0[2], dtype=float)).copy()
    K_star, Kbar_star, Sigma_star = closed_maximizer(psi_n, gamma)
    trace = InnerTrace()

    def record():
        trace.Ks.append(K.copy())
        trace.Kbars.append(Kbar.copy())
        trace.Sigmas.append(Sigma.copy())
        trace.objectives.append(approx_q(psi_n, K, Kbar, Sigma, gamma, discounted=discounted))
        trace.sq_dists.append(float(np.sum((K - K_star) ** 2) + np.sum((Kbar - Kbar_star) ** 2)
                                    + np.sum((Sigma - Sigma_star) ** 2)))

    record()
    for _ in range(n_iters):
        K = K + 2.0 * a_k * (psi_n.S + psi_n.U @ K) @ discounted.C_mu
        Kbar = Kbar + 2.0 * a_kbar * (psi_n.Z + psi_n.V @ Kbar) @ discounted.C_mubar
        Sigma = _sym(Sigma + a_sig * discounted.mass * (0.5 * gamma * np.linalg.inv(Sigma) + psi_n.U))
        if np.min(np.linalg.eigvalsh(Sigma)) <= 0.0:
            raise CertificateError("Sigma iterate lost positive definiteness (band violation)")
        record()
    return trace


def contraction_certificate(psi_n: QnCoefficients, discounted: DiscountedMoments,
                            a: float, b: float, gamma: float, beta: float) -> ContractionCertificate:
    """Strong-concavity/smoothness constants and the contraction rate eta = upsilon/Upsilon."""
    norm_u = np.linalg.norm(psi_n.U, ord=2)
    sig_min_u = np.min(np.linalg.eigvalsh(-_sym(psi_n.U)))
    if a < 0.5 * gamma * norm_u - 1e-15:
        raise CertificateError(f"hypothesis a >= (gamma/2)*||U|| fails: {a} < {0.5 * gamma * norm_u}")
    if b < 2.0 * a**2 / (gamma * sig_min_u) - 1e-15:
        raise CertificateError(
            f"hypothesis b >= 2a^2/(gamma*sigma_min(-U)) fails: {b} < {2.0 * a**2 / (gamma * sig_min_u)}")
    if not (0.0 < a <= b):
        raise CertificateError("need 0 < a <= b")
    sig_min_v = np.min(np.linalg.eigvalsh(-_sym(psi_n.V)))
    norm_v = np.linalg.norm(psi_n.V, ord=2)
    c_mu_min = np.min(np.linalg.eigvalsh(_sym(discounted.C_mu)))
    c_mubar_min = np.min(np.linalg.eigvalsh(_sym(discounted.C_mubar)))
    c_mu_norm = np.linalg.norm(discounted.C_mu, ord=2)
    c_mubar_norm = np.linalg.norm(discounted.C_mubar, ord=2)
    upsilon = min(sig_min_u * c_mu_min, sig_min_v * c_mubar_min, gamma / (2.0 * b**2))
    big = max(2.0 * norm_u * c_mu_norm, 2.0 * norm_v * c_mubar_norm, gamma / (2.0 * a**2 * (1.0 - beta)))
    eta = upsilon / big
    if not (0.0 < eta <= 1.0):
        raise CertificateError(f"eta = {eta} outside (0, 1]")
    return ContractionCertificate(float(upsilon), float(big), float(eta), a, b)
