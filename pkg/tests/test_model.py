import numpy as np
import pytest

from paracity.city import (
    CD,
    Arc,
    N_ORBITS,
    Node,
    ORBIT_CS,
    ORBIT_PS,
    ORBIT_SC,
    ORBIT_SP,
    build_city,
)
from paracity.model import (
    SYM_ORBIT_VAR,
    build_alpp,
    build_alpp_sym,
    build_lp_relaxation,
    build_umcfp,
    write_lp,
)
from paracity.solver import solve_lp, solve_milp
from paracity.bounds import umcfp_optimum
from conftest import paper_params, small_params


class TestAlpp:
    def test_variable_counts(self):
        model = build_alpp(build_city(paper_params()))
        assert model.n_freq == 48
        assert model.n_vars == 48 + 16 * 48
        assert int(model.integrality.sum()) == 48

    def test_frequency_bounds(self):
        p = small_params(Lambda=7)
        model = build_alpp(build_city(p))
        assert np.all(model.lb[: model.n_freq] == 0)
        assert np.all(model.ub[: model.n_freq] == 7)
        assert np.all(np.isinf(model.ub[model.n_freq:]))

    def test_operator_only_objective_at_mu_one(self):
        model = build_alpp(build_city(small_params(mu=1.0)))
        assert np.all(model.c[model.n_freq:] == 0)
        assert np.allclose(model.c[: model.n_freq], model.city.tau)

    def test_capacity_row_structure(self):
        city = build_city(small_params())
        model = build_alpp(city)
        A = model.A_ub.toarray()
        for a_id in range(len(city.arcs)):
            row = A[a_id]
            assert row[a_id] == -city.params.K
            flow_cols = [model.flow_var(o, a_id) for o in range(len(city.origins))]
            assert np.all(row[flow_cols] == 1.0)
            assert np.count_nonzero(row) == 1 + len(flow_cols)

    def test_frequency_circulation_rows(self):
        city = build_city(small_params(n=5))
        model = build_alpp(city)
        incidence = model.A_eq[: len(city.nodes), : model.n_freq].toarray()
        # each arc contributes +1 at its tail and -1 at its head
        assert np.all(incidence.sum(axis=0) == 0)
        assert np.all(np.abs(incidence).sum(axis=0) == 2)

    def test_var_names(self):
        model = build_alpp(build_city(small_params()))
        assert model.var_names[model.city.arc_index[Arc(CD, Node("SC", 2))]] == "F_CD_SC2"
        assert "x_P0_P0_SC0" in model.var_names


class TestAlppSym:
    def test_cost_constants(self):
        p = paper_params()
        model = build_alpp_sym(build_city(p))
        r_8 = model.city.r_n
        # kappa_C, kappa_S coefficients; kappa_P enters the constant term
        assert model.c[0] == pytest.approx(480.0)
        assert model.c[1] == model.c[2] == pytest.approx(240.0 * r_8)
        assert model.c0 == pytest.approx(1.0 * 480.0 * p.g * 24)

    def test_three_integer_variables(self):
        model = build_alpp_sym(build_city(paper_params()))
        assert model.n_freq == 3
        assert int(model.integrality.sum()) == 3
        assert model.var_names[:3] == ("F_C", "F_Splus", "F_Sminus")

    def test_fixed_peripheral_frequency(self):
        assert paper_params().peripheral_frequency == 24

    def test_structural_infeasibility(self):
        model = build_alpp_sym(build_city(paper_params(Lambda=10)))
        assert model.structural_infeasibility is not None
        assert "24" in model.structural_infeasibility

    def test_orbit_grouping_covers_all_arcs(self):
        city = build_city(small_params(n=6))
        model = build_alpp_sym(city)
        A = model.A_ub.toarray()
        n = city.n
        for a_id in range(6 * n):
            var = SYM_ORBIT_VAR[a_id // n]
            freq_part = A[a_id, :3]
            if var is None:
                assert np.all(freq_part == 0)
                assert model.b_ub[a_id] == city.params.K * city.params.peripheral_frequency
            else:
                assert freq_part[var] == -city.params.K
                assert np.count_nonzero(freq_part) == 1
                assert model.b_ub[a_id] == 0

    def test_orbit_expansion_of_solution_vector(self):
        city = build_city(small_params(n=4))
        model = build_alpp_sym(city)
        values = np.zeros(model.n_vars)
        values[:3] = [7, 1, 2]
        freqs = model.arc_frequencies(values)
        f_p = city.params.peripheral_frequency
        for orbit, expected in [
            (ORBIT_CS, 7), (ORBIT_SC, 7), (1, 1), (2, 2), (ORBIT_SP, f_p), (ORBIT_PS, f_p),
        ]:
            assert np.all(freqs[orbit * 4: (orbit + 1) * 4] == expected)


class TestRelaxation:
    def test_drops_integrality_only(self):
        model = build_alpp(build_city(small_params()))
        relaxed = build_lp_relaxation(model)
        assert not relaxed.integrality.any()
        assert relaxed.relaxed
        assert np.array_equal(relaxed.c, model.c)
        assert np.array_equal(relaxed.ub, model.ub)

    def test_relaxation_below_milp(self):
        model = build_alpp(build_city(small_params()))
        lp = solve_lp(build_lp_relaxation(model))
        milp = solve_milp(model)
        assert lp.objective <= milp.objective + 1e-9

    def test_relaxation_above_flow_lower_bound(self):
        p = small_params(n=5, mu=0.6)
        lp = solve_lp(build_lp_relaxation(build_alpp(build_city(p))))
        assert lp.objective >= umcfp_optimum(p) - 1e-6 * lp.objective


class TestUmcfp:
    def test_mu_zero_costs_are_lengths(self):
        city = build_city(small_params(mu=0.0))
        umcfp = build_umcfp(city)
        assert np.allclose(umcfp.cbar, city.tau)

    def test_inbound_peripheral_cost(self):
        city = build_city(paper_params())
        umcfp = build_umcfp(city)
        # doubled mu/K term on the loaded inbound direction
        assert umcfp.cbar[ORBIT_PS * 8] == pytest.approx(2 * 30 * (1 / 3) / 100)
        assert umcfp.cbar[ORBIT_SP * 8] == pytest.approx(0.0)

    def test_outbound_central_cost_ignores_K(self):
        for K in (10.0, 1000.0):
            p = small_params(mu=0.4, K=K)
            umcfp = build_umcfp(build_city(p))
            assert umcfp.cbar[ORBIT_CS * p.n] == pytest.approx((1 - 0.4) * p.T)

    def test_costs_nonnegative(self, rng):
        from conftest import random_params

        for _ in range(10):
            umcfp = build_umcfp(build_city(random_params(rng)))
            assert np.all(umcfp.cbar >= 0)

    def test_costs_constant_per_orbit(self):
        umcfp = build_umcfp(build_city(small_params(n=6, mu=0.3)))
        for orbit in range(N_ORBITS):
            block = umcfp.cbar[orbit * 6: (orbit + 1) * 6]
            assert np.all(block == block[0])


class TestLpWriter:
    def test_sections_and_names(self, tmp_path):
        model = build_alpp(build_city(small_params()))
        path = tmp_path / "model.lp"
        write_lp(model, path)
        text = path.read_text()
        for section in ("Minimize", "Subject To", "Bounds", "Generals", "End"):
            assert section in text
        assert "F_CD_SC0" in text.split("Generals")[1]

    def test_constant_recorded(self, tmp_path):
        model = build_alpp_sym(build_city(small_params()))
        path = tmp_path / "model.lp"
        write_lp(model, path)
        assert f"{model.c0:.17g}" in path.read_text().splitlines()[1]
