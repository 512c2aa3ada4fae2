import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from sola.decode import (branch_and_bound, brute_force_decode, build_ilp, decode,
                         decode_features, solve_lp, solve_lp_relaxation)
from sola.exceptions import InfeasibleError
from sola.experiments.sweep import abstention_coefficient
from sola.hexgraph import chain, enumerate_state_space, random_tree, validate_graph
from sola.losses import (binary_abstention_spec, haloss_spec, hamming_spec, hloss_spec,
                         make_spec, prediction_objective, psi_wa_batch)
from sola.surrogate import KernelConfig, fit_ridge
from sola.verify import random_instance

from strategies import trees

KINDS = ("binary_abstention", "hamming", "h_loss", "ha_loss")


class TestSimplex:
    def test_single_variable(self):
        res = solve_lp([-1.0], np.zeros((0, 1)), [], [0.0], [1.0])
        assert res.x.tolist() == [1.0] and res.fun == -1.0

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            solve_lp([1.0, 1.0], [[1.0, 1.0], [-1.0, -1.0]], [0.5, -1.5], [0, 0], [1, 1])

    def test_needs_finite_bounds(self):
        with pytest.raises(ValueError):
            solve_lp([1.0], [[1.0]], [1.0], [0.0], [np.inf])

    def test_against_highs(self):
        r = np.random.default_rng(7)
        for _ in range(200):
            n, m = int(r.integers(1, 8)), int(r.integers(0, 8))
            c = r.normal(size=n)
            A = r.normal(size=(m, n))
            lb = -r.uniform(0, 2, size=n)
            ub = r.uniform(0, 2, size=n)
            b = A @ r.uniform(lb, ub) + r.uniform(0, 1, size=m)
            ref = linprog(c, A_ub=A if m else None, b_ub=b if m else None,
                          bounds=list(zip(lb, ub)), method="highs")
            ours = solve_lp(c, A.reshape(m, n), b, lb, ub)
            assert ours.fun == pytest.approx(ref.fun, abs=1e-7)
            assert (A @ ours.x <= b + 1e-7).all()


class TestBuild:
    def test_single_node_all_pairs(self):
        spec = haloss_spec(validate_graph(1), K_A=0.2)
        ilp = build_ilp(spec, None, np.zeros(spec.q))
        for h, r in itertools.product((0, 1), repeat=2):
            assert ilp.is_feasible(ilp.lift([h], [r]))

    def test_single_node_hamming(self):
        spec = hamming_spec(1)
        ilp = build_ilp(spec, None, np.ones(2))
        assert ilp.is_feasible(ilp.lift([0], [1])) and ilp.is_feasible(ilp.lift([1], [1]))
        assert not ilp.is_feasible(ilp.lift([1], [0]))

    def test_chain_double_abstention_infeasible(self):
        spec = haloss_spec(chain(2), K_A=0.3)
        ilp = build_ilp(spec, None, np.zeros(spec.q))
        assert not ilp.is_feasible(ilp.lift([0, 0], [0, 0]))

    def test_dimension_mismatch(self):
        spec = hloss_spec(chain(2))
        with pytest.raises(ValueError):
            build_ilp(spec, None, np.zeros(3))

    @given(trees(max_d=5), st.booleans(), st.sampled_from(["purpose", "literal"]))
    def test_feasible_binaries_are_the_prediction_space(self, g, strict, rule):
        spec = haloss_spec(g, K_A=0.3, K_Ac=0.4, consecutive=rule)
        space = spec.prediction_space(strict=strict)
        ilp = build_ilp(spec, space, np.zeros(spec.q))
        for bits in itertools.product((0, 1), repeat=2 * g.d):
            h, r = bits[:g.d], bits[g.d:]
            assert ilp.is_feasible(ilp.lift(h, r)) == space.contains(h, r)

    @given(trees(max_d=4), st.data())
    def test_products_are_forced(self, g, data):
        spec = haloss_spec(g, K_A=0.3, K_Ac=0.4)
        ilp = build_ilp(spec, None, np.zeros(spec.q))
        H, R = spec.prediction_space().enumerate()
        t = data.draw(st.integers(0, len(H) - 1))
        x = ilp.lift(H[t], R[t])
        if ilp.n_vars > 2 * g.d:
            k = data.draw(st.integers(2 * g.d, ilp.n_vars - 1))
            x[k] = 1 - x[k]
            assert not ilp.is_feasible(x)

    def test_objective_matches_bilinear_form(self, rng):
        g = random_tree(6, rng)
        for kind in ("hamming", "h_loss", "ha_loss"):
            spec = make_spec(kind, g, K_A=0.2, K_Ac=0.3)
            psi = rng.normal(size=spec.q)
            ilp = build_ilp(spec, None, psi)
            H, R = spec.prediction_space().enumerate()
            for h, r in zip(H[::7], R[::7]):
                assert ilp.value(ilp.lift(h, r)) == pytest.approx(
                    prediction_objective(spec, psi, h, r), abs=1e-12)

    def test_lp_format(self):
        spec = haloss_spec(chain(2), K_A=0.3)
        text = build_ilp(spec, None, np.ones(spec.q)).to_lp_format()
        for section in ("Minimize", "Subject To", "Bounds", "Binary", "End"):
            assert section in text


class TestBruteForce:
    def test_zero_features_returns_smallest(self):
        spec = haloss_spec(chain(2), K_A=0.3)
        opt, val = brute_force_decode(spec, None, np.zeros(spec.q))
        assert val == 0 and (opt.y_h, opt.y_r) == ((0, 0), (0, 1))

    def test_binary_actions(self):
        spec = binary_abstention_spec(0.3)
        opt, val = brute_force_decode(spec, None, np.array([1.0, 0.0]))
        assert (opt.y_h, opt.y_r) == ((1,), (1,)) and val == 0
        assert prediction_objective(spec, [1, 0], [0], [1]) == 1
        assert prediction_objective(spec, [1, 0], [0], [0]) == pytest.approx(0.3)


class TestBranchAndBound:
    @pytest.mark.parametrize("kind", KINDS)
    def test_matches_brute_force(self, kind):
        r = np.random.default_rng(99)
        for _ in range(60):
            spec, space, psi = random_instance(r, kind, 6)
            rep = branch_and_bound(build_ilp(spec, space, psi))
            _, best = brute_force_decode(spec, space, psi)
            assert rep.objective_value == pytest.approx(best, abs=1e-9)
            assert space.contains(rep.optimum.y_h, rep.optimum.y_r)

    def test_lp_bound_below_optimum(self):
        r = np.random.default_rng(5)
        for k in range(200):
            spec, space, psi = random_instance(r, KINDS[k % 4], 5)
            ilp = build_ilp(spec, space, psi)
            _, bound = solve_lp_relaxation(ilp)
            _, best = brute_force_decode(spec, space, psi)
            assert bound <= best + 1e-9

    def test_hloss_root_integral(self, rng):
        for _ in range(30):
            spec = hloss_spec(random_tree(int(rng.integers(1, 9)), rng))
            rep = branch_and_bound(build_ilp(spec, None, rng.normal(size=spec.q)))
            assert rep.lp_integral_at_root and rep.branch_nodes == 0

    def test_report_value_consistent(self, rng):
        spec = haloss_spec(random_tree(6, rng), K_A=0.1, K_Ac=0.5)
        psi = rng.normal(size=spec.q)
        ilp = build_ilp(spec, None, psi)
        rep = branch_and_bound(ilp)
        x = ilp.lift(rep.optimum.y_h, rep.optimum.y_r)
        assert rep.objective_value == pytest.approx(ilp.objective @ x + ilp.constant, abs=1e-9)

    def test_infeasible_warm_start(self):
        spec = haloss_spec(chain(2), K_A=0.3)
        ilp = build_ilp(spec, None, np.zeros(spec.q))
        with pytest.raises(ValueError):
            branch_and_bound(ilp, warm_start=((0, 0), (0, 0)))

    def test_warm_start_same_objective(self, rng):
        for _ in range(20):
            spec = haloss_spec(random_tree(7, rng), K_A=0.2, K_Ac=0.6)
            psi = rng.normal(size=spec.q)
            cold = branch_and_bound(build_ilp(spec, None, psi))
            warm = decode_features(spec, None, psi, warm_start=True)
            assert warm.warm_start_used
            assert warm.objective_value == pytest.approx(cold.objective_value, abs=1e-9)

    def test_deterministic(self, rng):
        spec = haloss_spec(random_tree(8, rng), K_A=0.15, K_Ac=0.5)
        psi = rng.normal(size=spec.q)
        a = decode_features(spec, None, psi)
        b = decode_features(spec, None, psi)
        assert a == b

    def test_empty_space(self):
        spec = haloss_spec(chain(2), consecutive="literal")
        space = spec.prediction_space(abstain_nodes=())
        with pytest.raises(InfeasibleError):
            branch_and_bound(build_ilp(spec, space, np.zeros(spec.q)))


class TestDecode:
    def test_recovers_training_labels(self):
        g = validate_graph(3, [(0, 1), (0, 2)])
        Y = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 0, 1], [1, 1, 1]])
        X = np.eye(5) * 4
        spec = hamming_spec(3, g)
        model = fit_ridge(KernelConfig("gaussian", 1.0), X, psi_wa_batch(spec, Y), 1e-6)
        for x, y in zip(X, Y):
            opt = decode(model, spec, None, x)
            assert list(opt.y_h) == list(y) and all(opt.y_r)

    def test_zero_abstention_cost_abstains_when_useful(self, rng):
        g = random_tree(5, rng)
        spec = haloss_spec(g, K_A=0.0, K_Ac=0.0)
        # an uncertain target: the average of two disagreeing labelings
        psi = psi_wa_batch(spec, [[1, 0, 0, 0, 0], [0, 0, 0, 0, 0]]).mean(axis=0)
        rep = decode_features(spec, None, psi)
        assert rep.optimum.n_abstained > 0

    def test_huge_abstention_cost_never_abstains(self, rng):
        # psi_x is a conditional mean with full support, so every abstention
        # has a positive K_A coefficient and a large enough K_A rules it out
        for _ in range(20):
            g = random_tree(int(rng.integers(1, 7)), rng)
            labels = enumerate_state_space(g)
            w = rng.dirichlet(np.full(len(labels), 5.0))
            spec0 = haloss_spec(g, K_A=0.0, K_Ac=0.5)
            psi = w @ psi_wa_batch(spec0, labels)
            huge = 1e3 * np.abs(psi).sum() * np.abs(spec0.C).sum() / w.min()
            spec = haloss_spec(g, K_A=float(huge), K_Ac=0.5)
            rep = decode_features(spec, None, psi)
            opt, best = brute_force_decode(spec, None, psi)
            assert all(rep.optimum.y_r) and all(opt.y_r)
            assert rep.objective_value == pytest.approx(best, abs=1e-9 * max(1.0, huge))

    @given(trees(min_d=2, max_d=6), st.integers(0, 2**32 - 1))
    def test_abstention_coefficient_non_increasing(self, g, seed):
        r = np.random.default_rng(seed)
        psi = r.normal(size=4 * g.d)
        grid = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0]
        coef = []
        for K_A in grid:
            spec = haloss_spec(g, K_A=K_A, K_Ac=0.5)
            opt = decode_features(spec, None, psi).optimum
            coef.append(abstention_coefficient(g, spec.c, 0.5, "purpose", psi, opt.y_h, opt.y_r))
        assert all(b <= a + 1e-9 for a, b in zip(coef, coef[1:]))
