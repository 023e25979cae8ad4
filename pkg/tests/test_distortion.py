import numpy as np
import pytest

from sumrate.core import BOTTOM, FunctionSpec, binary_entropy
from sumrate.distortion import (
    FIXED_CONDITIONAL,
    PRODUCT_ROW,
    DistortionModel,
    RDDomain,
    brute_force_wz,
    conditional_entropy_pair,
    min_zero_message_distortion,
    rd_iterate,
    rho0_distortion,
    rho0_distortion_field,
    sum_rate_from_rho,
    wyner_ziv_rate,
)
from sumrate.iteration import IterationConfig, iterate

H2 = binary_entropy
NO_SIDE_INFO = ((1.0, 0.0), (1.0, 0.0))  # Y identically 0
IDENTITY = ((1.0, 0.0), (0.0, 1.0))  # Y = X
DSBS = ((0.75, 0.25), (0.25, 0.75))


def single_terminal_domain(n_param=201, n_dist=101):
    return RDDomain(
        family=FIXED_CONDITIONAL,
        n_param=n_param,
        n_dist=n_dist,
        d_cap=1.0,
        channel=NO_SIDE_INFO,
    )


def test_model_validation():
    with pytest.raises(ValueError):
        DistortionModel(d_b=np.full((2, 2, 2), -1.0))
    with pytest.raises(ValueError):
        DistortionModel(d_b=np.ones((3, 2, 2)))
    m = DistortionModel.hamming_on_source()
    assert m.d_max == 1.0


def test_hamming_on_function_table():
    m = DistortionModel.hamming_on_function(FunctionSpec.and_at_b())
    # reconstruction alphabet {0, 1}; zero distortion iff zhat = x AND y
    assert m.d_b[1, 1, 1] == 0.0 and m.d_b[1, 1, 0] == 1.0
    assert m.d_b[0, 1, 0] == 0.0 and m.d_b[0, 1, 1] == 1.0


def test_rho0_distortion_single_terminal():
    model = DistortionModel.hamming_on_source()
    dom = single_terminal_domain()
    # best constant reconstruction errs with probability min(p, 1-p)
    assert rho0_distortion(0.3, 0.1, dom, model) == BOTTOM
    assert rho0_distortion(0.3, 0.3, dom, model) == pytest.approx(H2(0.3), abs=1e-12)
    assert np.isfinite(rho0_distortion(0.5, 1.0, dom, model))  # d >= d_max


def test_rho0_distortion_field_monotone_in_d():
    model = DistortionModel.hamming_on_source()
    dom = single_terminal_domain(n_param=41, n_dist=21)
    field = rho0_distortion_field(dom, model)
    fin = np.isfinite(field)
    assert np.all(fin[:, 1:] >= fin[:, :-1])  # feasibility grows with D


def test_rd_iterate_single_terminal_classic_point():
    model = DistortionModel.hamming_on_source()
    dom = single_terminal_domain()
    cfg = IterationConfig(grid_size=201, max_messages=1, tolerance=1e-12)
    res = rd_iterate(dom, model, cfg)
    i, k = 60, 10  # p = 0.3, D = 0.1
    assert res.final[i, k] == pytest.approx(H2(0.1), abs=1e-9)
    rates = sum_rate_from_rho(dom, res.final)
    assert rates[i, k] == pytest.approx(H2(0.3) - H2(0.1), abs=1e-9)
    # D at and beyond min(p, 1-p): zero rate
    assert rates[i, 30] == pytest.approx(0.0, abs=1e-9)
    assert rates[i, 60] == pytest.approx(0.0, abs=1e-9)


def test_rd_fields_monotone_in_d_and_t():
    model = DistortionModel.hamming_on_function(FunctionSpec.and_at_b())
    dom = RDDomain(family=PRODUCT_ROW, n_param=21, n_dist=5, d_cap=1.0)
    cfg = IterationConfig(grid_size=21, max_messages=4, tolerance=1e-12, track_history=True)
    res = rd_iterate(dom, model, cfg)
    prev = None
    for fld in res.history:
        fin = np.isfinite(fld)
        # monotone in D along the last axis
        both = fin[..., :-1] & fin[..., 1:]
        assert np.all(fld[..., 1:][both] - fld[..., :-1][both] >= -1e-12)
        assert np.all(fin[..., 1:] >= fin[..., :-1])
        if prev is not None:
            pf = np.isfinite(prev)
            assert not np.any(pf & ~fin)
            m = pf & fin
            assert np.all(fld[m] >= prev[m] - 1e-12)
        prev = fld


def test_hamming_at_zero_matches_function_iteration():
    f = FunctionSpec.and_at_b()
    n, steps = 41, 6
    model = DistortionModel.hamming_on_function(f)
    dom = RDDomain(family=PRODUCT_ROW, n_param=n, n_dist=3, d_cap=1.0)
    cfg = IterationConfig(grid_size=n, max_messages=steps, tolerance=1e-15, track_history=True)
    res_rd = rd_iterate(dom, model, cfg)
    res_f = iterate(f, cfg)
    for t in range(steps + 1):
        slice_rd = res_rd.history[t][:, :, 0]
        ref = res_f.history[t].values
        assert np.array_equal(np.isfinite(slice_rd), np.isfinite(ref))
        fin = np.isfinite(ref)
        np.testing.assert_allclose(slice_rd[fin], ref[fin], atol=1e-9)


def test_wyner_ziv_identity_channel():
    model = DistortionModel.hamming_on_source()
    dom = RDDomain(
        family=FIXED_CONDITIONAL, n_param=51, n_dist=11, d_cap=1.0, channel=IDENTITY
    )
    rates = wyner_ziv_rate(dom, model, 0.5)
    np.testing.assert_allclose(rates, 0.0, atol=1e-9)


def test_wyner_ziv_useless_side_info():
    model = DistortionModel.hamming_on_source()
    dom = RDDomain(
        family=FIXED_CONDITIONAL,
        n_param=201,
        n_dist=101,
        d_cap=1.0,
        channel=((0.6, 0.4), (0.6, 0.4)),  # Y independent of X
    )
    rates = wyner_ziv_rate(dom, model, 0.3)
    assert rates[10] == pytest.approx(H2(0.3) - H2(0.1), abs=1e-9)


def test_wyner_ziv_shape():
    model = DistortionModel.hamming_on_source()
    dom = RDDomain(
        family=FIXED_CONDITIONAL, n_param=101, n_dist=51, d_cap=1.0, channel=DSBS
    )
    rates = wyner_ziv_rate(dom, model, 0.5)
    fin = np.isfinite(rates)
    assert fin.all()
    diffs = np.diff(rates)
    assert np.all(diffs <= 1e-9)  # non-increasing in D
    mid = 0.5 * (rates[:-2] + rates[2:])
    assert np.all(rates[1:-1] <= mid + 1e-6 + 1e-3)  # convex up to grid slack


def test_brute_force_wz_classic():
    model = DistortionModel.hamming_on_source()
    got = brute_force_wz(0.3, ((0.6, 0.4), (0.6, 0.4)), model, 0.1, u_card=2)
    assert got == pytest.approx(H2(0.3) - H2(0.1), abs=2e-3)
    assert brute_force_wz(0.3, ((0.6, 0.4), (0.6, 0.4)), model, 0.9, u_card=2) == pytest.approx(
        0.0, abs=1e-9
    )
    assert brute_force_wz(0.5, IDENTITY, model, 0.0, u_card=2) == pytest.approx(0.0, abs=1e-9)


def test_brute_force_wz_infeasible():
    # no channel can push expected distortion below zero when every
    # reconstruction errs somewhere with d = 2 > d grid
    table = np.full((2, 2, 1), 2.0)
    model = DistortionModel(d_b=table)
    assert brute_force_wz(0.5, DSBS, model, 0.5) == np.inf


def test_envelope_rate_vs_brute_force_band():
    model = DistortionModel.hamming_on_source()
    dom = RDDomain(
        family=FIXED_CONDITIONAL, n_param=101, n_dist=26, d_cap=1.0, channel=DSBS
    )
    rates = wyner_ziv_rate(dom, model, 0.5)
    ds = dom.dist_axis
    for k in range(0, 26, 5):
        ref = brute_force_wz(0.5, DSBS, model, float(ds[k]), u_card=3)
        assert rates[k] >= ref - 0.03
        assert rates[k] <= ref + 0.05


def test_domain_validation():
    with pytest.raises(ValueError):
        RDDomain(family="bogus", n_param=11, n_dist=5, d_cap=1.0)
    with pytest.raises(ValueError):
        RDDomain(family=FIXED_CONDITIONAL, n_param=11, n_dist=5, d_cap=1.0)
    with pytest.raises(ValueError):
        RDDomain(
            family=FIXED_CONDITIONAL,
            n_param=11,
            n_dist=5,
            d_cap=1.0,
            channel=((0.5, 0.6), (0.5, 0.5)),
        )
    with pytest.raises(ValueError):
        RDDomain(family=PRODUCT_ROW, n_param=11, n_dist=5, d_cap=1.0, channel=IDENTITY)
    with pytest.raises(ValueError):
        wyner_ziv_rate(
            RDDomain(family=PRODUCT_ROW, n_param=11, n_dist=5, d_cap=1.0),
            DistortionModel.hamming_on_source(),
            0.5,
        )


def test_conditional_entropy_pair():
    joint = np.array([[0.25, 0.25], [0.25, 0.25]])
    assert conditional_entropy_pair(joint) == pytest.approx(2.0, abs=1e-12)
    joint = np.array([[0.5, 0.0], [0.0, 0.5]])
    assert conditional_entropy_pair(joint) == pytest.approx(0.0, abs=1e-12)


def test_min_zero_message_distortion():
    model = DistortionModel.hamming_on_source()
    joint = np.array([[0.35, 0.35], [0.15, 0.15]])  # p = 0.3, independent
    assert min_zero_message_distortion(joint, model) == pytest.approx(0.3, abs=1e-12)
