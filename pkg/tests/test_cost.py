"""Cost-model tests: worked values, conventions, and invariants."""

from hypothesis import assume, given, settings
from hypothesis import strategies as st

from netrescale import (
    ConvLayer,
    DenseLayer,
    FlattenLayer,
    GlobalAvgPoolLayer,
    InvalidGeometry,
    NetworkSpec,
    PoolLayer,
    TensorShape,
    at_resolution,
    conv_flops,
    conv_params,
    cost_report,
    dense_flops,
    dense_params,
    lenet_net,
    pool_flops,
)


class TestConvParams:
    def test_with_bias(self):
        assert conv_params(ConvLayer(10, 5, has_bias=True), 1) == 260

    def test_without_bias(self):
        assert conv_params(ConvLayer(10, 5), 1) == 250

    def test_cifar_first_conv(self):
        # 30 filters of 3x3x3: 30*9*3
        assert conv_params(ConvLayer(30, 3), 3) == 810


class TestDenseParams:
    def test_with_bias(self):
        assert dense_params(100, 10, True) == 1010

    def test_without_bias(self):
        assert dense_params(100, 10, False) == 1000

    def test_identity(self):
        assert dense_params(1, 1, False) == 1


class TestConvFlops:
    def test_with_bias(self):
        assert conv_flops(24, ConvLayer(10, 5, has_bias=True), 1) == 149_760

    def test_without_bias(self):
        assert conv_flops(24, ConvLayer(10, 5), 1) == 144_000

    def test_identity(self):
        assert conv_flops(1, ConvLayer(1, 1), 1) == 1

    @given(
        m=st.integers(1, 32),
        c=st.integers(1, 7),
        k_in=st.integers(1, 16),
        k_out=st.integers(1, 16),
    )
    def test_bias_difference_is_output_elements(self, m, c, k_in, k_out):
        with_bias = conv_flops(m, ConvLayer(k_out, c, has_bias=True), k_in)
        without = conv_flops(m, ConvLayer(k_out, c), k_in)
        assert with_bias - without == m * m * k_out


class TestPoolFlops:
    def test_paper_constant(self):
        assert pool_flops(TensorShape(112, 128)) == 1_605_632

    def test_unit(self):
        assert pool_flops(TensorShape(1, 1)) == 1

    def test_direct_product(self):
        assert pool_flops(TensorShape(28, 10)) == 7_840


class TestDenseFlops:
    def test_with_bias(self):
        assert dense_flops(100, 10, True) == 1010

    def test_without_bias(self):
        assert dense_flops(16, 100, False) == 1600

    def test_identity_with_bias(self):
        assert dense_flops(1, 1, True) == 2


class TestCostReport:
    def test_single_dense_net(self):
        net = NetworkSpec(TensorShape(1, 10), (DenseLayer(10),))
        report = cost_report(net)
        assert report.total_params == 100
        assert report.total_flops == 100

    def test_pool_only_net_has_no_params(self):
        net = NetworkSpec(TensorShape(12, 4), (PoolLayer("avg", 2, stride=2),))
        assert cost_report(net).total_params == 0

    def test_lenet_against_hand_summed_oracle(self):
        # Every term below is written out independently of the cost module.
        net = lenet_net(28, 1, 10, 5, 2, "mnist")
        conv1_params = 10 * 5 * 5 * 1
        conv1_flops = 24 * 24 * 5 * 5 * 1 * 10
        pool1_flops = 24 * 24 * 10
        conv2_params = 10 * 5 * 5 * 10
        conv2_flops = 8 * 8 * 5 * 5 * 10 * 10
        pool2_flops = 8 * 8 * 10
        fc1_params = 4 * 4 * 10 * 50
        fc2_params = 50 * 10
        report = cost_report(net)
        assert report.total_params == conv1_params + conv2_params + fc1_params + fc2_params
        assert report.total_flops == (
            conv1_flops + pool1_flops + conv2_flops + pool2_flops + fc1_params + fc2_params
        )

    def test_flatten_is_free(self):
        net = NetworkSpec(TensorShape(4, 10), (FlattenLayer(),))
        layer = cost_report(net).per_layer[0]
        assert layer.params == 0 and layer.flops == 0

    def test_totals_equal_sum_of_parts(self):
        report = cost_report(lenet_net(32, 3, 30, 5, 2))
        assert report.total_params == sum(c.params for c in report.per_layer)
        assert report.total_flops == sum(c.flops for c in report.per_layer)

    def test_gap_head_params_are_resolution_independent(self):
        net = NetworkSpec(
            TensorShape(12, 1),
            (ConvLayer(8, 3), GlobalAvgPoolLayer(), DenseLayer(20), DenseLayer(10)),
        )
        p_lo = cost_report(net).total_params
        p_hi = cost_report(at_resolution(net, 24)).total_params
        assert p_lo == p_hi

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(10, 40), bump=st.integers(1, 24))
    def test_flops_monotone_in_resolution(self, n, bump):
        net = lenet_net(28, 1, 10, 5, 2)
        try:
            lo = cost_report(at_resolution(net, n)).total_flops
        except InvalidGeometry:
            assume(False)
        hi = cost_report(at_resolution(net, n + bump)).total_flops
        assert hi >= lo
