"""Verification oracle tests: clean candidates pass, corrupted ones fail."""

import dataclasses

import pytest

from netrescale import (
    ConvLayer,
    DenseLayer,
    EnumRanges,
    FlattenLayer,
    NetworkSpec,
    PoolLayer,
    TensorShape,
    at_resolution,
    lenet_net,
    oracle_enumerate,
    replace_layer,
    sample_original_networks,
    solve,
    solve_approach2,
    solve_approach4,
    verify_candidate,
)
from netrescale.arch import InvalidGeometry

RANGES = EnumRanges()


def two_conv_net():
    return NetworkSpec(
        TensorShape(14, 1),
        (ConvLayer(8, 2), ConvLayer(8, 2), FlattenLayer(), DenseLayer(10)),
        "two-conv",
    )


class TestVerifyCandidate:
    def test_approach2_candidate_is_clean(self):
        net = lenet_net(28, 1, 10, 5, 2)
        for cand in solve_approach2(net, 56, RANGES):
            report = verify_candidate(net, cand)
            assert report.passed
            assert report.scope_equality_holds
            assert report.interface_shape_match
            assert report.whole_network_param_delta == 0
            assert report.whole_network_flops_delta == 0

    def test_approach4_params_instance(self):
        net = two_conv_net()
        out = solve_approach4(net, 28, EnumRanges(kernel=(1, 8)), "params")
        cand = next(
            c for c in out if (c.solution_tuple[0], c.solution_tuple[1], c.solution_tuple[4]) == (4, 8, 1)
        )
        report = verify_candidate(net, cand)
        assert report.passed
        # The whole-network drift for this approach is exactly zero in params
        # mode: the two-conv scope is conserved and the fc head is untouched.
        assert report.whole_network_param_delta == 0

    def test_corrupted_conv2_kernel_fails_with_named_equality(self):
        net = two_conv_net()
        out = solve_approach4(net, 28, EnumRanges(kernel=(1, 8)), "params")
        cand = out[0]
        conv2 = cand.modified_net.layers[1]
        corrupted = dataclasses.replace(
            cand,
            modified_net=replace_layer(
                cand.modified_net, 1, dataclasses.replace(conv2, kernel=conv2.kernel + 1)
            ),
        )
        report = verify_candidate(net, corrupted)
        assert not report.passed
        assert not report.scope_equality_holds
        assert any("first-two-conv params equality" in v for v in report.violations)

    def test_corrupted_stored_delta_fails(self):
        net = lenet_net(28, 1, 10, 5, 2)
        cand = solve_approach2(net, 56, RANGES)[0]
        lying = dataclasses.replace(cand, param_delta=cand.param_delta + 1)
        report = verify_candidate(net, lying)
        assert not report.passed
        assert any("disagrees with recomputation" in v for v in report.violations)

    def test_wrong_resolution_on_modified_net_fails(self):
        net = lenet_net(28, 1, 10, 5, 2)
        cand = solve_approach2(net, 56, RANGES)[0]
        lying = dataclasses.replace(cand, modified_net=at_resolution(cand.modified_net, 55))
        report = verify_candidate(net, lying)
        assert not report.passed

    def test_invalid_geometry_propagates(self):
        net = lenet_net(28, 1, 10, 5, 2)
        cand = solve_approach2(net, 56, RANGES)[0]
        broken = dataclasses.replace(
            cand,
            modified_net=at_resolution(cand.modified_net, 4),
            new_resolution=4,
        )
        with pytest.raises(InvalidGeometry):
            verify_candidate(net, broken)

    def test_all_solver_candidates_verify_over_seeded_originals(self):
        # Smaller version of the acceptance gate: every emitted candidate
        # passes independent verification.
        originals = sample_original_networks("mnist", 12, seed=0) + sample_original_networks(
            "cifar10", 12, seed=1
        )
        checked = 0
        for net in originals:
            r = 2 * net.input.spatial
            for approach in ("I", "II", "III", "IV"):
                for mode in ("params", "flops"):
                    for cand in solve(net, approach, r, RANGES, mode):
                        report = verify_candidate(net, cand)
                        assert report.passed, (net.name, approach, mode, report.violations)
                        checked += 1
        assert checked > 0


class TestMutationControl:
    """Perturbing any solved field either breaks verification or lands on
    another genuine solution of the same instance."""

    def perturb_conv_field(self, cand, layer_idx, field, delta):
        layer = cand.modified_net.layers[layer_idx]
        value = getattr(layer, field) + delta
        if field in ("kernel", "stride") and value < 1:
            return None
        if field == "padding" and value < 0:
            return None
        if field == "dilation" and value < 1:
            return None
        if field == "out_channels" and value < 1:
            return None
        return dataclasses.replace(
            cand,
            modified_net=replace_layer(
                cand.modified_net, layer_idx, dataclasses.replace(layer, **{field: value})
            ),
        )

    def assert_fails_or_alternative(self, net, cand, mutated, ranges):
        if mutated is None:
            return
        try:
            report = verify_candidate(net, mutated)
        except InvalidGeometry:
            return  # mutation broke propagation outright
        if report.passed:
            # Must be a genuine alternative solution of the same instance.
            oracle = oracle_enumerate(
                net, cand.new_resolution, ranges, cand.approach, cand.budget_mode
            )
            rebuilt = tuple(self.tuple_of(mutated))
            assert rebuilt in oracle, (cand.approach, rebuilt)

    def tuple_of(self, cand):
        # Reconstruct the solution tuple from the mutated net's layers.
        net = cand.modified_net
        if cand.approach == "II":
            c1 = net.layers[0]
            return (c1.padding, c1.stride, c1.dilation)
        if cand.approach == "III":
            c1, pool = net.layers[0], net.layers[1]
            return (c1.out_channels, c1.kernel, c1.padding, c1.stride, pool.kernel, pool.padding, pool.stride)
        if cand.approach == "IV":
            convs = [l for l in net.layers if isinstance(l, ConvLayer)][:2]
            c1, c2 = convs
            return (c1.out_channels, c1.kernel, c1.padding, c1.stride, c2.kernel, c2.padding, c2.stride)
        raise AssertionError(cand.approach)

    def test_approach2_mutations(self):
        net = lenet_net(28, 1, 10, 5, 2)
        for cand in solve_approach2(net, 56, RANGES)[:2]:
            for field in ("stride", "padding", "dilation"):
                for delta in (-1, 1):
                    mutated = self.perturb_conv_field(cand, 0, field, delta)
                    self.assert_fails_or_alternative(net, cand, mutated, RANGES)

    def test_approach4_mutations(self):
        net = two_conv_net()
        ranges = EnumRanges(kernel=(1, 8))
        out = solve_approach4(net, 28, ranges, "params")
        for cand in out[:3]:
            for layer_idx in (0, 1):
                for field in ("out_channels", "kernel", "stride", "padding"):
                    for delta in (-1, 1):
                        mutated = self.perturb_conv_field(cand, layer_idx, field, delta)
                        self.assert_fails_or_alternative(net, cand, mutated, ranges)

    def test_budget_fields_always_break(self):
        # K1' and C1' enter the params equality with nonzero coefficients, so
        # a +-1 shift always breaks it (never a coincidental alternative).
        net = two_conv_net()
        ranges = EnumRanges(kernel=(1, 8))
        for cand in solve_approach4(net, 28, ranges, "params")[:3]:
            for field in ("out_channels", "kernel"):
                for delta in (-1, 1):
                    mutated = self.perturb_conv_field(cand, 0, field, delta)
                    if mutated is None:
                        continue
                    try:
                        report = verify_candidate(net, mutated)
                    except InvalidGeometry:
                        continue
                    assert not report.passed, (field, delta, cand.solution_tuple)


class TestOracleEnumerate:
    def test_contains_worked_approach2_tuple(self):
        net = lenet_net(28, 1, 10, 5, 2)
        assert (0, 2, 2) in oracle_enumerate(net, 56, RANGES, "II", "params")

    def test_empty_instance_matches_solver(self):
        net = NetworkSpec(
            TensorShape(16, 1),
            (ConvLayer(10, 3), FlattenLayer(), DenseLayer(10), DenseLayer(10)),
        )
        assert oracle_enumerate(net, 32, RANGES, "III", "params") == set()

    def test_zero_width_ranges(self):
        net = lenet_net(28, 1, 10, 5, 2)
        ranges = EnumRanges(kernel=(5, 5), stride=(2, 2), padding=(0, 0), dilation=(2, 2))
        got = oracle_enumerate(net, 56, ranges, "II", "params")
        assert got in (set(), {(0, 2, 2)})
        assert got == {(0, 2, 2)}
