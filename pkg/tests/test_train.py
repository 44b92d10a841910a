import numpy as np
import pytest

from scenehelpers import two_block_scene, zero_output_net, free_comps

from contact_pinn.assembly import loss_and_grad, total_loss
from contact_pinn.errors import ConfigurationError, NumericalError
from contact_pinn.network import (BcComposition, init_params,
                                  pack_parameters, unpack_parameters)
from contact_pinn.train import (ADAM, VGD, LoadStep, OptimizerState,
                                TrainSchedule, Trainer, adam_step,
                                boundary_increment_estimate,
                                min_contact_radius, pseudo_velocity, relax,
                                run_schedule, vgd_step)


# -- steps ----------------------------------------------------------------------

def test_vgd_zero_gradient_is_identity():
    theta = np.array([1.0, -2.0])
    assert np.array_equal(vgd_step(theta, np.zeros(2), 0.1), theta)


def test_vgd_scalar_example():
    assert vgd_step(np.array([1.0]), np.array([2.0]), 0.1) == \
        pytest.approx([0.8])


def test_vgd_monotone_on_convex_quadratic(rng):
    H = rng.normal(size=(6, 6))
    H = H @ H.T + 0.5 * np.eye(6)
    lam_max = np.linalg.eigvalsh(H).max()
    eta = 1.0 / lam_max  # below the 2/L stability bound
    theta = rng.normal(size=6)
    losses = [0.5 * theta @ H @ theta]
    for _ in range(100):
        theta = vgd_step(theta, H @ theta, eta)
        losses.append(0.5 * theta @ H @ theta)
    assert np.all(np.diff(losses) < 0.0)


def test_vgd_rejects_nonfinite_gradient():
    with pytest.raises(NumericalError):
        vgd_step(np.zeros(2), np.array([np.nan, 0.0]), 0.1)


def test_adam_zero_gradient_first_step():
    state = OptimizerState(kind=ADAM, eta=1e-3)
    theta, state = adam_step(np.array([0.7]), np.array([0.0]), state)
    assert theta == pytest.approx([0.7])


def test_adam_first_step_magnitude(rng):
    state = OptimizerState(kind=ADAM, eta=1e-3)
    g = rng.normal(size=8) * 10.0
    theta0 = rng.normal(size=8)
    theta, state = adam_step(theta0.copy(), g, state)
    # bias correction makes the first update eta * sign(g) up to eps
    assert np.allclose(np.abs(theta - theta0), 1e-3, rtol=1e-6)
    assert np.allclose(np.sign(theta0 - theta), np.sign(g))


def test_optimizer_state_validation():
    with pytest.raises(ConfigurationError):
        OptimizerState(kind="bfgs")
    with pytest.raises(ConfigurationError):
        OptimizerState(kind=VGD, eta=0.0)


def test_training_is_deterministic():
    def run():
        state = two_block_scene(seed=11, n_cloud=3)
        trainer = Trainer(state=state,
                          opt=OptimizerState(kind=ADAM, eta=1e-3))
        trainer.run_epochs(25, phase="test")
        return [r["breakdown"].total for r in trainer.history]

    a, b = run(), run()
    assert a == b  # bit-identical trajectories


# -- pseudo velocity ---------------------------------------------------------------

def test_pseudo_velocity_zero_for_zero_gradient():
    net = init_params([2, 4, 1], seed=0)
    comps = free_comps()
    v = pseudo_velocity([net, net], comps, np.zeros((3, 2)),
                        np.zeros(2 * net.size))
    assert np.all(v == 0.0)


def test_pseudo_velocity_one_parameter_exact():
    class OneParam:
        def __init__(self, theta):
            self.weights = [np.array([[theta, 0.0]])]
            self.biases = [None]
            self.layer_sizes = (2, 1)
            self.size = 2

        @property
        def layers(self):
            return [(self.weights[0], None)]

    net = OneParam(1.3)
    comps = free_comps()
    probes = np.array([[0.7, 0.0], [-0.4, 0.0]])
    dpi = 2.5  # d(loss)/d(theta)
    v = pseudo_velocity([net, net], (comps[0], comps[1]), probes,
                        np.array([dpi, 0.0, 0.0, 0.0]))
    assert v[:, 0] == pytest.approx(-probes[:, 0] * dpi)


def test_pseudo_velocity_predicts_vgd_increment():
    state = two_block_scene(seed=13, n_cloud=3)
    # settle first so the quadratic remainder is small
    trainer = Trainer(state=state, opt=OptimizerState(kind=ADAM, eta=1e-3))
    trainer.run_epochs(200, phase="warm")

    eta = 1e-5
    nets = state.nets()
    probes = state.bodies["lower"].cloud.points
    from contact_pinn.assembly import field_values

    def eval_fields():
        body = state.bodies["lower"]
        comps = body.active_comps()
        u, v = field_values(body.nets[0].layers, body.nets[1].layers,
                            probes, comps[0], comps[1])
        return np.stack([u, v], axis=1)

    _, grad = loss_and_grad(state)
    slices = state.net_slices()
    body = state.bodies["lower"]
    vel = pseudo_velocity(list(body.nets), list(body.active_comps()),
                          probes, grad[slices["lower"]])
    before = eval_fields()
    theta = pack_parameters(nets)
    unpack_parameters(nets, vgd_step(theta, grad, eta))
    after = eval_fields()
    actual = after - before
    predicted = eta * vel
    rel = np.linalg.norm(actual - predicted) / np.linalg.norm(actual)
    assert rel < 0.01

    # first-order accuracy: the error ratio halves with the learning rate
    unpack_parameters(nets, theta)
    unpack_parameters(nets, vgd_step(theta, grad, eta / 2))
    actual_half = eval_fields() - before
    rel_half = np.linalg.norm(actual_half - (eta / 2) * vel) / \
        np.linalg.norm(actual_half)
    assert rel_half < rel
    assert rel_half / rel == pytest.approx(0.5, abs=0.2)
    unpack_parameters(nets, theta)


# -- relax --------------------------------------------------------------------------

def test_relax_is_noop_for_zero_networks():
    state = two_block_scene(seed=15, n_cloud=3, soft_driven=False)
    for body in state.bodies.values():
        body.nets = (zero_output_net(seed=1), zero_output_net(seed=2))
    start = total_loss(state)
    history, report = relax(state, 10, OptimizerState(kind=ADAM, eta=1e-4))
    assert report["final_loss"] == pytest.approx(start.total - start.e_c,
                                                 abs=1e-12)
    assert max(report["mean_abs_u"].values()) < 1e-12


def test_relax_decreases_loss():
    state = two_block_scene(seed=16, n_cloud=3, soft_driven=False)
    start = total_loss(state)
    history, report = relax(state, 300, OptimizerState(kind=ADAM, eta=1e-3))
    assert report["final_loss"] < start.total - start.e_c
    assert history[-1]["phase"] == "relax"


def test_relax_divergence_aborts_with_history():
    state = two_block_scene(seed=17, n_cloud=3, nh=False, soft_driven=False)
    with pytest.raises(NumericalError) as err:
        relax(state, 500, OptimizerState(kind=VGD, eta=500.0))
    assert hasattr(err.value, "history")


# -- schedule ------------------------------------------------------------------------

def test_single_zero_step_behaves_like_relax_with_contact():
    state = two_block_scene(seed=18, n_cloud=3)
    schedule = TrainSchedule(
        relax_epochs=0,
        steps=[LoadStep(targets={"upper": (0.0, 0.0)}, sessions=2,
                        epochs_per_session=50)],
        eta=1e-3, kappa=50.0, optimizer=ADAM)
    start = total_loss(state)
    state, history = run_schedule(state, schedule)
    assert history[-1]["breakdown"].total < start.total
    assert len(history) == 100


def test_schedule_reaches_target_and_switches_hard(tmp_path):
    state = two_block_scene(seed=19, n_cloud=3)
    schedule = TrainSchedule(
        relax_epochs=50,
        steps=[LoadStep(targets={"upper": (0.0, -0.03)}, sessions=4,
                        epochs_per_session=150)],
        eta=3e-3, kappa=200.0, optimizer=ADAM)
    state, history = run_schedule(state, schedule, outdir=str(tmp_path))
    body = state.bodies["upper"]
    from contact_pinn.train import _bc_residual
    res = _bc_residual(state, body)
    assert res < 5e-3  # boundary close to the step target
    assert (tmp_path / "params_step01.txt").exists()
    assert (tmp_path / "params_final.txt").exists()
    phases = {r["phase"] for r in history}
    assert any(p.startswith("relax") for p in phases)


def test_lr_guard_keeps_boundary_increment_below_radius():
    state = two_block_scene(seed=20, n_cloud=3)
    r0 = min_contact_radius(state)
    trainer = Trainer(state=state, opt=OptimizerState(kind=VGD, eta=0.5),
                      lr_guard=True)
    trainer.run_epochs(20, phase="guarded")
    ests = [r["bc_increment_est"] for r in trainer.history]
    assert all(e is not None for e in ests)
    assert max(ests) <= r0 * (1.0 + 1e-12)


def test_boundary_increment_estimate_matches_actual_change():
    state = two_block_scene(seed=21, n_cloud=3)
    nets = state.nets()
    theta = pack_parameters(nets)
    rng = np.random.default_rng(0)
    direction = rng.normal(size=theta.size)
    dtheta = 1e-6 * direction / np.linalg.norm(direction)
    est = boundary_increment_estimate(state, dtheta)

    from contact_pinn.assembly import field_values

    def surface_fields():
        out = []
        for body in state.bodies.values():
            comps = body.active_comps()
            for surf in body.surfaces.values():
                u, v = field_values(body.nets[0].layers, body.nets[1].layers,
                                    surf.points, comps[0], comps[1])
                out.append(np.stack([u, v], axis=1))
        return np.concatenate(out)

    before = surface_fields()
    unpack_parameters(nets, theta + dtheta)
    after = surface_fields()
    actual = np.max(np.linalg.norm(after - before, axis=1))
    assert est == pytest.approx(actual, rel=1e-3)
    unpack_parameters(nets, theta)
