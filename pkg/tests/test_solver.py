import numpy as np
import pytest

from modlab.grid import Field, lp_norm, make_grid
from modlab.modspace import make_window
from modlab.datagen import mollified_indicator
from modlab.propagator import free_evolve, mass
from modlab.solver import (
    NLSProblem,
    cross_validate,
    large_data_protocol,
    nonlinearity,
    picard_solve,
    splitstep_solve,
)
from tests.conftest import gaussian_field


def small_quintic(amplitude=0.2, nodes=65):
    g = make_grid(1, 256, 16 * np.pi)
    x = g.axis_coords()
    u0 = Field(g, amplitude * np.exp(-(x**2) / 2).astype(complex))
    return NLSProblem(u0=u0, horizon=0.1, time_nodes=nodes, sign=1)


class TestNonlinearity:
    def test_zero(self, grid1d):
        out = nonlinearity(Field.zero(grid1d), 4.0)
        assert lp_norm(out, 2) == 0.0

    def test_pure_phase_preserved(self, grid1d):
        x = grid1d.axis_coords()
        f = Field(grid1d, np.exp(1j * 3 * x))
        out = nonlinearity(f, 4.0, -1)
        assert np.max(np.abs(out.values + f.values)) <= 1e-14

    def test_homogeneity_exact(self, grid1d):
        f = gaussian_field(grid1d, amplitude=0.3 + 0.1j)
        lam = 1.7
        a = nonlinearity(lam * f, 4.0, 1)
        b = lam**5 * nonlinearity(f, 4.0, 1)
        assert np.max(np.abs(a.values - b.values)) <= 1e-15

    def test_kappa_guard(self, grid1d):
        with pytest.raises(ValueError):
            nonlinearity(Field.zero(grid1d), 0.0)


class TestPicard:
    def test_zero_data_one_iteration(self):
        g = make_grid(1, 64, 8 * np.pi)
        prob = NLSProblem(u0=Field.zero(g), horizon=0.1, time_nodes=17)
        path, report = picard_solve(prob)
        assert report.iterations == 1
        assert report.converged
        assert all(lp_norm(f, 2) == 0.0 for _, f in path)

    def test_small_data_contracts_fast(self):
        path, report = picard_solve(small_quintic(), tol=1e-12)
        assert report.converged
        assert all(c < 0.5 for c in report.contraction_factors)

    def test_default_power_matches_dimension(self):
        assert small_quintic().kappa == 4.0
        g2 = make_grid(2, 16, 8 * np.pi)
        prob2 = NLSProblem(u0=Field.zero(g2), horizon=0.1, time_nodes=17)
        assert prob2.kappa == 2.0

    def test_large_data_divergence_reported(self):
        prob = small_quintic(amplitude=25.0, nodes=33)
        path, report = picard_solve(prob, max_iters=12)
        assert report.diverged
        assert not report.converged

    def test_too_few_nodes_rejected(self):
        with pytest.raises(ValueError, match="16 time nodes"):
            picard_solve(small_quintic(nodes=8))

    def test_uniqueness_probe(self):
        tol = 1e-10
        prob = small_quintic()
        path_free, _ = picard_solve(prob, tol=tol, initial="free")
        path_zero, _ = picard_solve(prob, tol=tol, initial="zero", max_iters=60)
        worst = max(
            lp_norm(a - b, 2) for (_, a), (_, b) in zip(path_free, path_zero)
        )
        assert worst <= 10 * tol


class TestSplitStep:
    def test_mass_conserved(self):
        prob = small_quintic()
        path = splitstep_solve(prob, dt=prob.horizon / 256)
        drift = max(abs(mass(f) - mass(prob.u0)) for _, f in path)
        assert drift <= 1e-10

    def test_linear_limit_matches_free_evolution(self):
        prob = small_quintic(amplitude=1e-5)
        out = splitstep_solve(prob, dt=prob.horizon / 128, store="final")[-1][1]
        free = free_evolve(prob.u0, prob.horizon)
        rel = lp_norm(out - free, 2) / lp_norm(free, 2)
        assert rel <= 1e-12

    def test_second_order_in_dt(self):
        prob = small_quintic(amplitude=1.0)
        ref = splitstep_solve(prob, dt=prob.horizon / 4096, store="final")[-1][1]
        e = []
        for steps in (128, 256):
            out = splitstep_solve(prob, dt=prob.horizon / steps, store="final")[-1][1]
            e.append(lp_norm(out - ref, 2))
        assert 3.5 <= e[0] / e[1] <= 4.5

    def test_energy_drift_second_order_defocusing(self):
        from modlab.propagator import energy

        g3 = make_grid(3, 16, 8 * np.pi)
        r3 = sum(c**2 for c in g3.coords())
        u0 = Field(g3, 0.5 * np.exp(-r3 / 2).astype(complex))
        prob = NLSProblem(u0=u0, horizon=0.05, time_nodes=17, sign=1)
        e0 = energy(u0, 3, 1)
        drifts = []
        for steps in (64, 128):
            path = splitstep_solve(prob, dt=prob.horizon / steps)
            drifts.append(max(abs(energy(f, 3, 1) - e0) for _, f in path) / abs(e0))
        assert drifts[0] / drifts[1] == pytest.approx(4.0, rel=0.3)
        assert drifts[1] <= 1e-9

    def test_coarse_dt_rejected(self):
        prob = small_quintic()
        with pytest.raises(ValueError, match="dt"):
            splitstep_solve(prob, dt=prob.horizon / 8)

    def test_blowup_guard_trips(self):
        # focusing quintic above the small-data regime: the peak grows past
        # 1.5x its initial height well inside the horizon
        g = make_grid(1, 256, 16 * np.pi)
        x = g.axis_coords()
        u0 = Field(g, 2.5 * np.exp(-(x**2) / 2).astype(complex))
        prob = NLSProblem(u0=u0, horizon=0.1, time_nodes=65, sign=-1)
        with pytest.raises(RuntimeError, match="guard"):
            splitstep_solve(prob, dt=prob.horizon / 256, guard_factor=1.5)


class TestCrossValidate:
    def test_zero_data_exact(self):
        g = make_grid(1, 64, 8 * np.pi)
        prob = NLSProblem(u0=Field.zero(g), horizon=0.1, time_nodes=17)
        out = cross_validate(prob)
        assert out["distance"] == 0.0
        assert out["agrees"]

    def test_d1_quintic_agreement(self):
        out = cross_validate(small_quintic(nodes=129), tol=1e-5)
        assert out["agrees"], out["distance"]
        assert out["distance"] <= 1e-5

    def test_d2_cubic_agreement(self):
        g = make_grid(2, 64, 8 * np.pi)
        r_sq = sum(x**2 for x in g.coords())
        u0 = Field(g, 0.2 * np.exp(-r_sq / 2).astype(complex))
        prob = NLSProblem(u0=u0, horizon=0.1, time_nodes=129, sign=-1)
        assert prob.kappa == 2.0
        out = cross_validate(prob, tol=1e-5)
        assert out["agrees"], out["distance"]


class TestSmallnessProbes:
    def test_sum_space_smallness_bound(self):
        from modlab.solver import sum_space_smallness

        g = make_grid(1, 256, 16 * np.pi)
        w = make_window(g)
        x = g.axis_coords()
        u0 = Field(g, 0.2 * np.exp(-(x**2) / 2).astype(complex))
        out = sum_space_smallness(u0, w)
        assert out["p"] == 6.0
        assert 0 < out["bound"] <= lp_norm(u0, 2) + 1e-10

    def test_sum_space_smallness_dimension_guard(self):
        from modlab.solver import sum_space_smallness

        g = make_grid(3, 16, 8 * np.pi)
        with pytest.raises(ValueError, match="d in"):
            sum_space_smallness(Field.zero(g), make_window(g))

    def test_small_data_threshold_monotone_probe(self):
        from modlab.solver import small_data_threshold

        g = make_grid(1, 128, 16 * np.pi)
        x = g.axis_coords()
        profile = np.exp(-(x**2) / 2).astype(complex)

        def make_problem(amp):
            return NLSProblem(
                u0=Field(g, amp * profile), horizon=0.1, time_nodes=33, sign=1
            )

        out = small_data_threshold(make_problem, (0.1, 0.5, 30.0))
        assert out["largest_contracting"] == 0.5
        states = {row["amplitude"]: row["contracting"] for row in out["sweep"]}
        assert states[0.1] and states[0.5] and not states[30.0]


class TestLargeData:
    def setup_method(self):
        self.grid = make_grid(3, 16, 8 * np.pi)
        self.window = make_window(self.grid)
        self.data, _ = mollified_indicator(2.0, self.grid, window=self.window)

    def test_small_data_reduces_to_unit_cutoff(self):
        prob = NLSProblem(u0=0.05 * self.data, horizon=1.0, time_nodes=17)
        _, report = large_data_protocol(prob, window=self.window, c0=0.4)
        cert = report.certificate
        assert cert.cutoff == 1.0
        assert cert.horizon == 1.0
        assert cert.holds()

    def test_mollified_indicator_certificate(self):
        prob = NLSProblem(u0=self.data, horizon=1.0, time_nodes=17)
        path, report = large_data_protocol(prob, window=self.window, c0=0.4)
        cert = report.certificate
        assert report.converged
        assert cert.holds()
        assert cert.cutoff >= 2.0
        assert cert.horizon < 1.0
        assert len(cert.total_norms) == report.iterations + 1

    def test_adversarial_tail_still_certified(self):
        # extra rough mass beyond the cutoff: the measured tail grows, the
        # horizon shrinks, and the run stays certified
        from modlab.grid import SpectralField, from_spectrum, to_spectrum

        rng = np.random.default_rng(5)
        F = to_spectrum(self.data).coefficients.copy()
        r = np.sqrt(self.grid.freq_sq())
        F = F + 0.05 * (rng.standard_normal(self.grid.shape)
                        + 1j * rng.standard_normal(self.grid.shape)) * (r > 2.2)
        rough = from_spectrum(SpectralField(self.grid, F))
        prob = NLSProblem(u0=rough, horizon=1.0, time_nodes=17)
        _, report = large_data_protocol(prob, window=self.window, c0=0.4)
        base_prob = NLSProblem(u0=self.data, horizon=1.0, time_nodes=17)
        _, base_report = large_data_protocol(base_prob, window=self.window, c0=0.4)
        assert report.certificate.holds()
        assert report.certificate.cutoff >= base_report.certificate.cutoff
        # the band of the n=16 grid caps the cutoff sweep, so the extra
        # roughness shows up in the measured tail rather than a larger N
        assert report.certificate.tail_norms[0] > base_report.certificate.tail_norms[0]

    def test_dimension_guard(self):
        g = make_grid(1, 64, 8 * np.pi)
        prob = NLSProblem(u0=gaussian_field(g), horizon=1.0, time_nodes=17)
        with pytest.raises(ValueError, match="d in"):
            large_data_protocol(prob)

    def test_certificate_violation_names_inequality(self):
        # a horizon far beyond the proof's smallness bound lets the iterates
        # leave the ball; the abort must name the violated inequality
        prob = NLSProblem(u0=2.0 * self.data, horizon=1.0, time_nodes=17)
        with pytest.raises(RuntimeError, match="2A"):
            large_data_protocol(
                prob, window=self.window, c0=5.0, c1=1e9, max_iters=6
            )

    def test_unreachable_tail_budget_rejected(self):
        prob = NLSProblem(u0=self.data, horizon=1.0, time_nodes=17)
        with pytest.raises(ValueError, match="tail budget"):
            large_data_protocol(prob, window=self.window, c0=1e-4)
