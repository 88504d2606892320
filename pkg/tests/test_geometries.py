import numpy as np
import pytest

from conftest import maxabs, sample
from semiq.errors import UnknownCheckError
from semiq.geometries import (CATALOGUE, cpn_catalogue_residual, cpn_expected,
                              cpn_frame, fold_index, kappa, make_cpn, make_flat,
                              _cpn_omega_lower, _shift_matrix)
from semiq.geometry import cov_deriv_jet
from semiq.lambda_core import jet_einsum


class TestIndexFolding:
    def test_fold_rule(self):
        # x^b = -x^{b+2n}: folding beyond the chart range flips the sign
        assert fold_index(0, 4) == (1, 0)
        assert fold_index(5, 4) == (-1, 1)
        assert fold_index(9, 4) == (1, 1)
        assert fold_index(-1, 4) == (-1, 3)

    def test_kappa_three_cases(self):
        two_n = 4
        assert kappa(1, 1, two_n) == 1
        assert kappa(1, 5, two_n) == -1
        assert kappa(1, 9, two_n) == 1
        assert kappa(1, 2, two_n) == 0
        for a in range(two_n):
            assert kappa(a, a, two_n) == 1


class TestFlat:
    def test_lambda_preset(self):
        G = make_flat(2, hbar=0.7)
        assert G.lam == 0.7j

    def test_canonical_structure(self, flat2):
        f = flat2.frame((0.1, 0.2, 0.3, 0.4))
        assert maxabs(f.g.val - np.eye(4)) == 0.0
        assert maxabs(f.gam.val) == 0.0
        om = f.om.val.real
        assert om[0, 2] == 1.0 and om[2, 0] == -1.0 and om[1, 3] == 1.0


class TestCpnData:
    def test_inverse_pair(self, cpn1, cpn2):
        for G in (cpn1, cpn2):
            for pt in sample(G, 50, 21):
                f = G.frame(pt)
                ident = jet_einsum("am,mb->ab", f.g, f.ginv).val
                assert maxabs(ident - np.eye(G.dim)) < 1e-10

    def test_complex_structure_squares_to_minus_one(self, cpn1, cpn2):
        for G in (cpn1, cpn2):
            for pt in sample(G, 20, 22):
                f = G.frame(pt)
                J = np.einsum("ab,bc->ac", f.om.val, f.g.val)
                assert maxabs(J @ J + np.eye(G.dim)) < 1e-9

    def test_einstein_constant(self, cpn1, cpn2):
        # Ricci tensor proportional to the metric; measured constant n+1
        for G, n in ((cpn1, 1), (cpn2, 2)):
            for pt in sample(G, 25, 23):
                f = G.frame(pt)
                ric = np.einsum("adab->db", f.riemann.val)
                assert maxabs(ric - (n + 1) * f.g.val) < 1e-9

    def test_w_constraint(self, cpn2):
        F = cpn_frame(cpn2)
        for pt in sample(cpn2, 20, 24):
            w = F.w_jets(pt).val
            t2 = complex(F.t2_jet(pt).value)
            assert abs(t2 - (1 - np.sum(np.abs(w) ** 2))) < 1e-12


class TestCpnFrame:
    def test_tau_plus_taubar(self, cpn1, cpn2):
        # tau + taubar = d ln(1+|z|^2)
        for G in (cpn1, cpn2):
            F = cpn_frame(G)
            for pt in sample(G, 10, 25):
                tau = F.tau_jet(pt)
                k0 = F.kahler_potential().at(pt).c
                assert maxabs((tau + tau.conj()).val - k0.grad().val) < 1e-12

    def test_varpi_three_ways(self, cpn1, cpn2):
        # varpi = 2i g_{i jbar} dz^i ^ dzbar^j = -2i d tau = i wedge(gammabar - gamma)
        for G in (cpn1, cpn2):
            F = cpn_frame(G)
            n = F.n
            for pt in sample(G, 8, 26):
                var = F.varpi_jet(pt).val
                gh = F.g_hermitian(pt)
                route1 = np.zeros_like(var)
                for i in range(n):
                    for j in range(n):
                        ci, cbj = F.cvec(i), np.conjugate(F.cvec(j))
                        route1 += 2j * gh[i, j] * (np.einsum("a,b->ab", ci, cbj)
                                                   - np.einsum("a,b->ab", cbj, ci))
                assert maxabs(var - route1) < 1e-10
                dtau = F.tau_jet(pt).grad().val        # [a, k]
                route2 = -2j * (dtau.T - dtau)
                assert maxabs(var - route2) < 1e-10
                gam_ = F.gamma_jet(pt).val
                gamb = F.gamma_jet(pt, bar=True).val
                route3 = 1j * ((gamb - gam_) - (gamb - gam_).T)
                assert maxabs(var - route3) < 1e-10

    def test_metric_splits(self, cpn1, cpn2):
        for G in (cpn1, cpn2):
            F = cpn_frame(G)
            for pt in sample(G, 8, 27):
                f = G.frame(pt)
                gam_ = F.gamma_jet(pt).val
                gamb = F.gamma_jet(pt, bar=True).val
                assert maxabs(f.g.val - (gam_ + gamb)) < 1e-12

    def test_kahler_potential_hessian(self, cpn1, cpn2):
        # g_{i jbar} equals the mixed complex second derivatives of K0
        for G in (cpn1, cpn2):
            F = cpn_frame(G)
            n = F.n
            for pt in sample(G, 8, 28):
                k0 = F.kahler_potential().at(pt).c
                h = k0.d2
                gh = F.g_hermitian(pt)
                for i in range(n):
                    for j in range(n):
                        dd = 0.25 * (h[i, j] + 1j * h[i, j + n]
                                     - 1j * h[i + n, j] + h[i + n, j + n])
                        assert abs(dd - gh[i, j]) < 1e-12

    def test_levi_civita_on_complex_frame(self, cpn1, cpn2):
        # nabla dz^i_pm = tau_pm (x) dz^i_pm + dz^i_pm (x) tau_pm
        for G in (cpn1, cpn2):
            F = cpn_frame(G)
            n = F.n
            for pt in sample(G, 8, 29):
                f = G.frame(pt)
                tau = F.tau_jet(pt).val
                for sgn in (+1, -1):
                    tv = tau if sgn > 0 else np.conjugate(tau)
                    for i in range(n):
                        cv = F.cvec(i) if sgn > 0 else np.conjugate(F.cvec(i))
                        lhs = -np.einsum("rmn,r->mn", f.gam.val, cv)
                        rhs = np.einsum("m,n->mn", tv, cv) + np.einsum("m,n->mn", cv, tv)
                        assert maxabs(lhs - rhs) < 1e-9

    def test_curvature_map_on_complex_frame(self, cpn1, cpn2):
        # R(dz_pm) = pm (i/2) varpi (x) dz^i_pm - dz^i_pm ^ gamma_pm
        for G in (cpn1, cpn2):
            F = cpn_frame(G)
            n = F.n
            for pt in sample(G, 6, 30):
                f = G.frame(pt)
                var = F.varpi_jet(pt).val
                for sgn in (+1, -1):
                    gma = F.gamma_jet(pt, bar=(sgn < 0)).val
                    for i in range(n):
                        cv = F.cvec(i) if sgn > 0 else np.conjugate(F.cvec(i))
                        lhs = -np.einsum("c,cdab->abd", cv, f.riemann.val)
                        rhs = sgn * 0.5j * np.einsum("ab,d->abd", var, cv) \
                            - (np.einsum("a,bd->abd", cv, gma)
                               - np.einsum("b,ad->abd", cv, gma))
                        assert maxabs(lhs - rhs) < 1e-8


class TestCatalogue:
    def test_unknown_check_rejected(self, cpn1):
        with pytest.raises(UnknownCheckError):
            cpn_expected(cpn1, "no-such-check", (0.1, 0.1))

    def test_aliases(self, cpn1):
        assert CATALOGUE.resolve("w-comm") == "w-wbar-comm"
        assert CATALOGUE.resolve("z-comm") == "z-zbar-comm"

    def test_w_commutator_canonical_everywhere(self, cpn1, cpn2):
        for G in (cpn1, cpn2):
            for pt in sample(G, 5, 31):
                c, l = cpn_expected(G, "w-comm", pt)
                n = G.dim // 2
                assert maxabs(l - 1j * np.eye(n)) == 0.0

    def test_z_commutator_at_origin(self, cpn1):
        c, l = cpn_expected(cpn1, "z-comm", (0.0, 0.0))
        assert maxabs(l - 1j * np.eye(1)) == 0.0

    def test_every_check_small_on_samples(self, cpn1, cpn2):
        for G in (cpn1, cpn2):
            for name in CATALOGUE.names():
                for pt in sample(G, 3, 32):
                    rc, rl = cpn_catalogue_residual(G, name, pt)
                    assert max(rc, rl) < 1e-8, (name, pt)
