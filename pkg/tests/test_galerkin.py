import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from certkit.certificate import iss_bound, rho
from certkit.errors import ConfigurationError, DivergenceError, DomainError
from certkit.functions import nonlinearity, signal
from certkit.galerkin import (
    HAVE_COMPILED,
    Disturbance,
    GalerkinOperator,
    SimConfig,
    SineBasis,
    SpectralState,
    lift,
    lyapunov_V,
    project,
    rhs,
    simulate,
    simulate_heat_extension,
    step,
)
from certkit.gridfn import Grid, SampledFn
from certkit.green_bvp import solve_p12
from certkit.system import CascadeSystem


def constant(v, n=1):
    return lambda z: np.full((np.size(z), n), float(v))


REF = CascadeSystem(1.0, 1.0, np.array([[0.25]]), constant(1.0), constant(-5.0))
SINE = nonlinearity("sine")


def e(j, l=1.0):
    return lambda z: math.sqrt(2 / l) * np.sin(math.pi * j * np.asarray(z) / l)


class TestBasis:
    @pytest.mark.parametrize("N,l", [(8, 1.0), (48, 1.0), (20, 2.5)])
    def test_orthonormal(self, N, l):
        b = SineBasis(N, l)
        g = b.default_grid()
        E = b.evaluate(g.nodes)
        np.testing.assert_allclose(E.T @ (g.weights[:, None] * E), np.eye(N), atol=1e-13)

    def test_bad_size(self):
        with pytest.raises(ConfigurationError):
            SineBasis(0, 1.0)

    def test_eigenvalues(self):
        np.testing.assert_allclose(SineBasis(3, 2.0, 0.5).eigenvalues, -0.25 * (np.pi * np.arange(1, 4) / 2) ** 2)


class TestProject:
    def test_unit_vector(self):
        b = SineBasis(10, 1.0)
        g = b.default_grid()
        c = project(g.sample(e(3)), b)
        np.testing.assert_allclose(c, np.eye(10)[2], atol=1e-13)

    def test_zero(self):
        b = SineBasis(6, 1.0)
        g = b.default_grid()
        assert np.all(project(g.sample(lambda z: 0 * z), b) == 0)

    @pytest.mark.parametrize("l", [1.0, 2.0])
    def test_parabola(self, l):
        b = SineBasis(9, l)
        g = Grid(l, 801)
        c = project(g.sample(lambda z: z * (l - z)), b)
        j = np.arange(1, 10)
        exact = np.where(j % 2 == 1, 4 * math.sqrt(2 / l) * l**3 / (math.pi * j) ** 3, 0.0)
        np.testing.assert_allclose(c, exact, atol=1e-10)

    def test_vector_rejected(self):
        b = SineBasis(4, 1.0)
        g = b.default_grid()
        with pytest.raises(ConfigurationError):
            project(g.sample(lambda z: np.column_stack([z, z])), b)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-100, 100), min_size=12, max_size=12))
def test_parseval(ints):
    c = np.array(ints) / 10.0
    b = SineBasis(12, 1.3)
    g = b.default_grid()
    v = b.reconstruct(c, g)
    assert g.weights @ v.values[:, 0] ** 2 == pytest.approx(c @ c, rel=1e-12, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-100, 100), min_size=12, max_size=12), st.floats(0.5, 3.0))
def test_friedrichs(ints, l):
    # |v_z|^2 >= (pi/l)^2 |v|^2 for v vanishing at both ends
    c = np.array(ints) / 10.0
    b = SineBasis(12, l)
    assert np.sum((b.wavenumbers * c) ** 2) >= (math.pi / l) ** 2 * (c @ c) * (1 - 1e-12)


class TestLift:
    def test_endpoints(self):
        d = Disturbance(signal("sine", 0.1), signal("exp-ramp", 0.2), 0.2)
        t = 0.7
        assert lift(0.0, t, d, 2.0) == pytest.approx(0.1 * math.sin(t))
        assert lift(2.0, t, d, 2.0) == pytest.approx(0.2 * -math.expm1(-t))
        assert lift(1.0, t, d, 2.0) == pytest.approx(0.5 * (0.1 * math.sin(t) + 0.2 * -math.expm1(-t)))

    def test_outside(self):
        with pytest.raises(DomainError):
            lift(1.5, 0.0, Disturbance(), 1.0)


class TestDisturbance:
    def test_nonzero_start(self):
        with pytest.raises(ConfigurationError, match="start at 0"):
            Disturbance(signal("constant", 0.1), d_inf=1.0).check(np.linspace(0, 1, 5))

    def test_exceeds_bound(self):
        with pytest.raises(ConfigurationError, match="exceeds d_inf"):
            Disturbance(signal("sine", 0.2), d_inf=0.1).check(np.linspace(0, 3, 50))

    def test_ramp_fixes_start(self):
        Disturbance(signal("constant", 0.1, ramp_time=0.5), d_inf=0.1).check(np.linspace(0, 10, 100))


class TestRhs:
    def test_zero_state(self):
        op = GalerkinOperator(REF, 16)
        du, dx = rhs(SpectralState(np.zeros(16), [0.0]), op, Disturbance(), SINE)
        assert np.all(du == 0) and np.all(dx == 0)

    def test_heat_mode(self):
        sys0 = CascadeSystem(1.0, 1.0, np.zeros((1, 1)), constant(0.0), constant(0.0))
        op = GalerkinOperator(sys0, 8)
        u = np.eye(8)[0]
        du, _ = rhs(SpectralState(u, [0.0]), op, Disturbance())
        np.testing.assert_allclose(du, -math.pi**2 * u, atol=1e-12)

    def test_ode_coupling_quadrature(self):
        op = GalerkinOperator(REF, 48)
        rng = np.random.default_rng(3)
        u = rng.standard_normal(48) / np.arange(1, 49) ** 2
        d = Disturbance(signal("sine", 0.1), d_inf=0.1)
        t = 0.8
        _, dx = rhs(SpectralState(u, [2.0], t), op, d)
        d1 = 0.1 * math.sin(t)
        z = op.grid.nodes
        u_full = math.sqrt(2) * np.sin(np.pi * np.outer(z, np.arange(1, 49))) @ u + (1 - z) * d1
        # independent quadrature on the model grid
        assert dx[0] == pytest.approx(0.25 * 2.0 - 5.0 * simpson(u_full, x=z), abs=1e-8)
        # against the exact integral only the grid's quadrature error remains
        j = np.arange(1, 49)
        exact = np.sum(u * np.where(j % 2 == 1, 2 * math.sqrt(2) / (np.pi * j), 0.0)) + d1 / 2
        assert dx[0] == pytest.approx(0.25 * 2.0 - 5.0 * exact, abs=1e-5)

    def test_pde_coupling(self):
        op = GalerkinOperator(REF, 8, m=2001)
        du, _ = rhs(SpectralState(np.zeros(8), [1.0]), op, Disturbance())
        j = np.arange(1, 9)
        # projections of B = 1
        exact = np.where(j % 2 == 1, 2 * math.sqrt(2) / (math.pi * j), 0.0)
        np.testing.assert_allclose(du, exact, atol=1e-10)

    def test_nonfinite_nonlinearity(self):
        op = GalerkinOperator(REF, 4)
        with pytest.raises(DomainError, match="z ="), np.errstate(all="ignore"):
            rhs(SpectralState(np.ones(4), [0.0]), op, Disturbance(), lambda s: np.log(s))

    def test_nonfinite_state(self):
        with pytest.raises(DomainError):
            SpectralState([np.nan], [0.0])


class TestStep:
    def test_linear_mode_exact(self):
        sys0 = CascadeSystem(1.0, 1.0, np.zeros((1, 1)), constant(0.0), constant(0.0))
        op = GalerkinOperator(sys0, 6)
        s = SpectralState(np.eye(6)[1], [0.0])
        out = step(s, 0.05, op)
        assert out.uhat[1] == pytest.approx(math.exp(-4 * math.pi**2 * 0.05), rel=1e-13)
        assert out.t == pytest.approx(0.05)

    def test_zero_stays_zero(self):
        op = GalerkinOperator(REF, 6)
        out = step(SpectralState(np.zeros(6), [0.0]), 0.01, op, f=SINE)
        assert np.all(out.uhat == 0) and np.all(out.x == 0)

    def test_bad_dt(self):
        op = GalerkinOperator(REF, 4)
        with pytest.raises(ConfigurationError):
            step(SpectralState(np.zeros(4), [0.0]), 0.0, op)


class TestSimulate:
    def test_heat_decay(self):
        sys0 = CascadeSystem(1.0, 1.0, np.zeros((1, 1)), constant(0.0), constant(0.0))
        tr = simulate(sys0, phi=e(1), config=SimConfig(N=16, dt=1e-3, T=0.5, record_dt=0.1))
        np.testing.assert_allclose(tr.u_l2, np.exp(-math.pi**2 * tr.times), rtol=1e-10)

    def test_time_order(self):
        cfg = dict(N=24, T=1.0, record_dt=1.0)
        x0 = [1.0]
        runs = [simulate(REF, SINE, phi=e(1), x0=x0, config=SimConfig(dt=dt, **cfg)) for dt in (0.02, 0.01, 0.005)]
        e1 = abs(runs[0].x[-1, 0] - runs[2].x[-1, 0])
        e2 = abs(runs[1].x[-1, 0] - runs[2].x[-1, 0])
        assert math.log2(e1 / e2 - 1) > 1.9  # Richardson on three levels

    def test_mode_refinement(self):
        d = Disturbance(signal("sine", 0.1), d_inf=0.1)
        common = dict(f=SINE, disturbance=d, phi=e(1), x0=[1.0])
        a = simulate(REF, config=SimConfig(N=24, dt=2e-3, T=2.0, record_dt=0.5), **common)
        b = simulate(REF, config=SimConfig(N=48, dt=2e-3, T=2.0, record_dt=0.5), **common)
        assert np.max(np.abs(a.u_l2 - b.u_l2)) < 1e-5
        assert np.max(np.abs(a.x - b.x)) < 1e-5

    def test_deterministic(self):
        d = Disturbance(signal("sine", 0.1), d_inf=0.1)
        runs = [simulate(REF, SINE, disturbance=d, phi=e(1), x0=[1.0], config=SimConfig(N=16, dt=1e-2, T=1.0))
                for _ in range(2)]
        assert runs[0].u_l2.tobytes() == runs[1].u_l2.tobytes()
        assert runs[0].x.tobytes() == runs[1].x.tobytes()

    def test_x0_size(self):
        with pytest.raises(ConfigurationError):
            simulate(REF, x0=[1.0, 2.0], config=SimConfig(N=4, T=0.1))

    def test_divergence(self):
        unstable = CascadeSystem(1.0, 1.0, np.array([[5.0]]), constant(0.0), constant(0.0))
        with pytest.raises(DivergenceError) as info:
            simulate(unstable, x0=[1.0], config=SimConfig(N=4, dt=0.1, T=100.0))
        assert info.value.step > 0 and info.value.time > 0

    def test_V_nonincreasing_undisturbed(self, ref_problem):
        p12 = solve_p12(ref_problem)
        tr = simulate(REF, SINE, phi=e(1), x0=[1.0], p12=p12, P=[[1.0]],
                      config=SimConfig(N=24, dt=1e-3, T=5.0, record_dt=0.05))
        assert np.all(np.diff(tr.V) <= 1e-12 * tr.V[:-1])
        assert tr.V[-1] < tr.V[0]

    def test_a_priori_bound(self, ref_constants):
        d = Disturbance(signal("sine", 0.1), d_inf=0.1)
        tr = simulate(REF, SINE, disturbance=d, phi=e(1), x0=[1.0],
                      config=SimConfig(N=24, dt=2e-3, T=10.0, record_dt=0.1))
        g = Grid(1.0, 401)
        r0 = rho([1.0], g.sample(e(1)))
        xb, ub = iss_bound(ref_constants, tr.times, 0.1, r0)
        assert np.all(tr.x_norm <= xb) and np.all(tr.u_l2 <= ub)

    @pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")
    @pytest.mark.parametrize("scheme", ["etdrk2", "imex-euler"])
    def test_backends_agree(self, scheme):
        d = Disturbance(signal("sine", 0.1), d_inf=0.1)
        cfg = SimConfig(N=16, dt=5e-3, T=2.0, scheme=scheme)
        a = simulate(REF, SINE, disturbance=d, phi=e(1), x0=[1.0], config=cfg, backend="python")
        b = simulate(REF, SINE, disturbance=d, phi=e(1), x0=[1.0], config=cfg, backend="compiled")
        assert (a.backend, b.backend) == ("python", "compiled")
        assert np.max(np.abs(a.uhat - b.uhat)) < 1e-12
        assert np.max(np.abs(a.x - b.x)) < 1e-12

    def test_callable_falls_back(self):
        tr = simulate(REF, lambda s: np.sin(s), x0=[1.0], config=SimConfig(N=4, T=0.1), backend="python")
        assert tr.backend == "python"


class TestHeatExtension:
    def test_max_principle(self):
        d = Disturbance(signal("sine", 0.3, freq=2.0), signal("exp-ramp", -0.2, rate=3.0), 0.3)
        tr = simulate_heat_extension(d, SimConfig(N=32, dt=1e-3, T=5.0, record_dt=0.05))
        assert np.all(tr.w_sup <= 0.3 + 1e-9)

    def test_steady_state(self):
        d = Disturbance(signal("exp-ramp", 0.2, rate=5.0), signal("exp-ramp", -0.1, rate=5.0), 0.2)
        tr = simulate_heat_extension(d, SimConfig(N=32, dt=1e-3, T=8.0, record_dt=1.0))
        assert np.max(np.abs(tr.uhat[-1])) < 1e-9
        assert tr.u_l2[-1] == pytest.approx(math.sqrt((0.04 - 0.02 + 0.01) / 3), rel=1e-6)


def test_lyapunov_sandwich(ref_problem, ref_cert):
    p12 = ref_cert.p12
    g = ref_problem.grid
    rng = np.random.default_rng(5)
    lo, hi = ref_cert.lambda_min_Pi1, ref_cert.lambda_max_Pi2
    z = g.nodes
    for _ in range(1000):
        c = rng.standard_normal(4)
        v = SampledFn(g, (np.sin(np.outer(z, np.pi * np.arange(1, 5))) @ c)[:, None])
        x = rng.standard_normal(1) * 3
        vv = g.weights @ v.values[:, 0] ** 2
        V = lyapunov_V(v, x, p12, [[1.0]])
        s = vv + x @ x
        assert lo * s * (1 - 1e-12) <= V <= hi * s * (1 + 1e-12)


def test_lyapunov_grid_mismatch(ref_cert):
    with pytest.raises(ConfigurationError):
        lyapunov_V(Grid(1.0, 11).sample(lambda z: z), [0.0], ref_cert.p12, [[1.0]])


class TestBackendSelection:
    def test_env_python(self, monkeypatch):
        from certkit.galerkin import default_backend

        monkeypatch.setenv("CERTKIT_BACKEND", "python")
        assert default_backend() == "python"

    def test_env_compiled_missing(self, monkeypatch):
        from certkit.galerkin import backend

        monkeypatch.setenv("CERTKIT_BACKEND", "compiled")
        monkeypatch.setattr(backend, "HAVE_COMPILED", False)
        with pytest.raises(ImportError):
            backend.default_backend()

    def test_auto(self, monkeypatch):
        from certkit.galerkin import default_backend

        monkeypatch.delenv("CERTKIT_BACKEND", raising=False)
        assert default_backend() == ("compiled" if HAVE_COMPILED else "python")
