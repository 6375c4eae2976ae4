#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "deconfound/common.hpp"
#include "deconfound/netcore/ops.hpp"
#include "deconfound/netcore/tape.hpp"
#include "deconfound/netcore/tensor.hpp"

using namespace dcfd;

namespace {

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

net::Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng,
                          double scale = 1.0) {
    net::Tensor t(std::move(shape));
    for (double& v : t.values()) v = (2.0 * unit_draw(rng) - 1.0) * scale;
    return t;
}

// Evaluates `build` over fresh-tape leaves; returns the scalar loss value.
template <typename Builder>
double loss_value(const std::vector<net::Tensor>& inputs, Builder&& build) {
    net::Tape t;
    std::vector<net::NodeRef> refs;
    refs.reserve(inputs.size());
    for (const net::Tensor& v : inputs) refs.push_back(t.leaf(v));
    return t.value(build(t, refs))[0];
}

template <typename Builder>
std::vector<net::Tensor> tape_gradients(const std::vector<net::Tensor>& inputs,
                                        Builder&& build) {
    net::Tape t;
    std::vector<net::NodeRef> refs;
    refs.reserve(inputs.size());
    for (const net::Tensor& v : inputs) refs.push_back(t.leaf(v));
    t.backward(build(t, refs));
    std::vector<net::Tensor> grads;
    grads.reserve(refs.size());
    for (const net::NodeRef r : refs) grads.push_back(t.gradient(r));
    return grads;
}

// Central finite differences on every input entry vs the tape's gradients.
template <typename Builder>
void check_gradients_fd(const std::vector<net::Tensor>& inputs, Builder&& build,
                        double tol = 1e-4, double step = 1e-5) {
    const std::vector<net::Tensor> grads = tape_gradients(inputs, build);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t j = 0; j < inputs[i].size(); ++j) {
            std::vector<net::Tensor> plus = inputs, minus = inputs;
            plus[i].values()[j] += step;
            minus[i].values()[j] -= step;
            const double fd = (loss_value(plus, build) - loss_value(minus, build)) / (2 * step);
            const double an = grads[i][j];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
            INFO("input ", i, " entry ", j, ": analytic ", an, " vs fd ", fd);
            CHECK(std::abs(fd - an) / denom < tol);
        }
    }
}

}  // namespace

TEST_CASE("tensor shape and indexing") {
    net::Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    t.at(1, 2) = 5.0;
    CHECK(t[5] == 5.0);
    CHECK(net::Tensor::scalar(3.5).size() == 1);
    const net::Tensor m = net::Tensor::matrix(2, 2, {1, 2, 3, 4});
    CHECK(m.at(1, 0) == 3.0);
    CHECK(m.all_finite());
    net::Tensor bad = net::Tensor::vector({1.0, std::nan("")});
    CHECK_FALSE(bad.all_finite());
}

TEST_CASE("tape: fan-out gradients accumulate by summation") {
    // loss = sum(x + x) => dloss/dx = 2 everywhere.
    net::Tape t;
    const net::NodeRef x = t.leaf(net::Tensor::vector({1.0, -2.0, 3.0}));
    const net::NodeRef loss = net::sum(t, net::add(t, x, x));
    t.backward(loss);
    for (const double g : t.gradient(x).values()) CHECK(g == 2.0);
}

TEST_CASE("tape: single-use, scalar loss, NaN rejection") {
    net::Tape t;
    const net::NodeRef x = t.leaf(net::Tensor::vector({1.0, 2.0}));
    const net::NodeRef s = net::sum(t, x);
    t.backward(s);
    CHECK(t.consumed());
    CHECK_THROWS_AS(t.backward(s), std::logic_error);

    net::Tape t2;
    const net::NodeRef v = t2.leaf(net::Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(t2.backward(v), std::invalid_argument);  // non-scalar loss

    net::Tape t3;
    CHECK_THROWS_AS(t3.leaf(net::Tensor::vector({std::nan("")})), NumericError);
    CHECK_THROWS_WITH_AS(
        t3.record(net::Tensor::vector({std::numeric_limits<double>::infinity()}), nullptr,
                  "test_op"),
        doctest::Contains("test_op"), NumericError);
}

TEST_CASE("grad_reverse: identity forward, exact -lambda backward") {
    std::mt19937_64 rng(41);
    for (const double lambda : {0.0, 0.3, 0.6, 0.8}) {
        const net::Tensor x = random_tensor({7}, rng, 3.0);
        net::Tape t;
        const net::NodeRef xr = t.leaf(x);
        const net::NodeRef g = net::grad_reverse(t, xr, net::GrlConfig{lambda});
        // Forward must be bit-identical.
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(t.value(g)[i] == x[i]);
        // Upstream gradient c per element via scale; downstream must be
        // exactly -lambda * c (a single multiplication).
        const double c = 1.375;
        t.backward(net::sum(t, net::scale(t, g, c)));
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(t.gradient(xr)[i] == -lambda * c);
    }
    net::Tape t;
    const net::NodeRef x = t.leaf(net::Tensor::vector({1.0}));
    CHECK_THROWS_AS(net::grad_reverse(t, x, net::GrlConfig{-0.1}), ConfigError);
}

TEST_CASE("conv1d: hand-computed example and shape") {
    net::Tape t;
    const net::NodeRef x = t.leaf(net::Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
    const net::NodeRef k = t.leaf(net::Tensor({2, 2, 1}, {0.5, -1.0, 0.25, 2.0}));
    const net::NodeRef b = t.leaf(net::Tensor::vector({0.125}));
    const net::NodeRef y = net::conv1d(t, x, k, b);
    CHECK(t.value(y).shape() == std::vector<std::size_t>{2, 1});
    CHECK(t.value(y)[0] == doctest::Approx(7.375).epsilon(1e-12));
    CHECK(t.value(y)[1] == doctest::Approx(10.875).epsilon(1e-12));
}

TEST_CASE("conv1d: sequence shorter than kernel is a data error") {
    net::Tape t;
    const net::NodeRef x = t.leaf(net::Tensor::matrix(1, 2, {1, 2}));
    const net::NodeRef k = t.leaf(net::Tensor({2, 2, 1}, {1, 1, 1, 1}));
    const net::NodeRef b = t.leaf(net::Tensor::vector({0.0}));
    CHECK_THROWS_AS(net::conv1d(t, x, k, b), DataError);
}

TEST_CASE("maxpool1d: partial final window and earliest-index ties") {
    net::Tape t;
    const net::NodeRef x = t.leaf(net::Tensor::matrix(5, 1, {1, 3, 2, 2, 5}));
    const net::NodeRef y = net::maxpool1d(t, x, 2);
    CHECK(t.value(y).shape() == std::vector<std::size_t>{3, 1});
    CHECK(t.value(y)[0] == 3.0);
    CHECK(t.value(y)[1] == 2.0);
    CHECK(t.value(y)[2] == 5.0);  // partial window of one
    t.backward(net::sum(t, y));
    // The tie in window [2,2] routes gradient to the earliest element.
    const net::Tensor& g = t.gradient(x);
    CHECK(g[1] == 1.0);
    CHECK(g[2] == 1.0);
    CHECK(g[3] == 0.0);
    CHECK(g[4] == 1.0);
}

TEST_CASE("gru_cell_step: all-zero parameters halve the hidden state") {
    const std::size_t D = 3, H = 4;
    net::Tape t;
    const net::NodeRef h = t.leaf(net::Tensor::vector({1.0, -2.0, 0.5, 4.0}));
    const net::NodeRef x = t.leaf(net::Tensor({D}));
    net::GruCellRefs p;
    p.wz = t.leaf(net::Tensor({D, H}));
    p.uz = t.leaf(net::Tensor({H, H}));
    p.bz = t.leaf(net::Tensor({H}));
    p.wr = t.leaf(net::Tensor({D, H}));
    p.ur = t.leaf(net::Tensor({H, H}));
    p.br = t.leaf(net::Tensor({H}));
    p.wh = t.leaf(net::Tensor({D, H}));
    p.uh = t.leaf(net::Tensor({H, H}));
    p.bh = t.leaf(net::Tensor({H}));
    const net::NodeRef h2 = net::gru_cell_step(t, h, x, p);
    const std::vector<double> expect = {0.5, -1.0, 0.25, 2.0};
    for (std::size_t i = 0; i < H; ++i)
        CHECK(t.value(h2)[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("softmax: stable simplex output") {
    net::Tape t;
    const net::NodeRef y = net::softmax(t, t.leaf(net::Tensor::vector({0.0, std::log(2.0)})));
    CHECK(t.value(y)[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(t.value(y)[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    net::Tape t2;
    const net::NodeRef big =
        net::softmax(t2, t2.leaf(net::Tensor::vector({1000.0, 1000.0, 999.0})));
    double total = 0.0;
    for (const double v : t2.value(big).values()) {
        CHECK(v > 0.0);
        total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("weighted_cross_entropy: -w[target] * ln(p[target])") {
    net::Tape t;
    const net::NodeRef probs = t.leaf(net::Tensor::vector({0.2, 0.5, 0.3}));
    const net::Tensor weights = net::Tensor::vector({1.0, 2.0, 0.5});
    const net::NodeRef loss = net::weighted_cross_entropy(t, probs, 1, weights);
    CHECK(t.value(loss)[0] == doctest::Approx(-2.0 * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("weighted_cross_entropy: probability clamp at 1e-12") {
    // A (numerically) zero probability must not produce inf.
    net::Tape t;
    const net::NodeRef probs = t.leaf(net::Tensor::vector({1.0, 0.0}));
    const net::Tensor weights = net::Tensor::vector({1.0, 1.0});
    const net::NodeRef loss = net::weighted_cross_entropy(t, probs, 1, weights);
    CHECK(t.value(loss)[0] == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("structural ops: concat, row, stack_rows, scale, sum") {
    net::Tape t;
    const net::NodeRef a = t.leaf(net::Tensor::vector({1, 2}));
    const net::NodeRef b = t.leaf(net::Tensor::vector({3}));
    CHECK(t.value(net::concat(t, a, b)).values() == std::vector<double>{1, 2, 3});

    const net::NodeRef m = t.leaf(net::Tensor::matrix(2, 2, {1, 2, 3, 4}));
    CHECK(t.value(net::row(t, m, 1)).values() == std::vector<double>{3, 4});

    const net::NodeRef s = net::stack_rows(t, {a, a});
    CHECK(t.value(s).shape() == std::vector<std::size_t>{2, 2});

    CHECK(t.value(net::scale(t, b, -2.0))[0] == -6.0);
    CHECK(t.value(net::sum(t, m))[0] == 10.0);
}

TEST_CASE("finite differences: every primitive") {
    std::mt19937_64 rng(1234);

    SUBCASE("affine") {
        for (int i = 0; i < 5; ++i) {
            const std::vector<net::Tensor> in = {random_tensor({3}, rng),
                                                 random_tensor({3, 2}, rng),
                                                 random_tensor({2}, rng)};
            check_gradients_fd(in, [](net::Tape& t, const std::vector<net::NodeRef>& r) {
                return net::sum(t, net::affine(t, r[0], r[1], r[2]));
            });
        }
    }
    SUBCASE("conv1d") {
        for (int i = 0; i < 5; ++i) {
            const std::vector<net::Tensor> in = {random_tensor({5, 2}, rng),
                                                 random_tensor({2, 2, 3}, rng),
                                                 random_tensor({3}, rng)};
            check_gradients_fd(in, [](net::Tape& t, const std::vector<net::NodeRef>& r) {
                return net::sum(t, net::conv1d(t, r[0], r[1], r[2]));
            });
        }
    }
    SUBCASE("relu and maxpool: quadratic readout off the kinks") {
        for (int i = 0; i < 5; ++i) {
            const std::vector<net::Tensor> in = {random_tensor({6, 3}, rng)};
            check_gradients_fd(in, [](net::Tape& t, const std::vector<net::NodeRef>& r) {
                const net::NodeRef pooled = net::maxpool1d(t, net::relu(t, r[0]), 2);
                return net::sum(t, pooled);
            });
        }
    }
    SUBCASE("gru_cell_step") {
        const std::size_t D = 2, H = 3;
        std::vector<net::Tensor> in;
        in.push_back(random_tensor({H}, rng));  // h
        in.push_back(random_tensor({D}, rng));  // x
        for (int g = 0; g < 3; ++g) {
            in.push_back(random_tensor({D, H}, rng, 0.5));
            in.push_back(random_tensor({H, H}, rng, 0.5));
            in.push_back(random_tensor({H}, rng, 0.5));
        }
        check_gradients_fd(in, [](net::Tape& t, const std::vector<net::NodeRef>& r) {
            net::GruCellRefs p{r[2], r[3], r[4], r[5], r[6], r[7], r[8], r[9], r[10]};
            return net::sum(t, net::gru_cell_step(t, r[0], r[1], p));
        });
    }
    SUBCASE("softmax + weighted cross entropy") {
        for (int i = 0; i < 5; ++i) {
            const std::vector<net::Tensor> in = {random_tensor({4}, rng, 2.0)};
            const net::Tensor weights = net::Tensor::vector({1.5, 0.5, 1.0, 2.0});
            check_gradients_fd(in, [&](net::Tape& t, const std::vector<net::NodeRef>& r) {
                return net::weighted_cross_entropy(t, net::softmax(t, r[0]), 2, weights);
            });
        }
    }
    SUBCASE("grl composes with -lambda") {
        const std::vector<net::Tensor> in = {random_tensor({4}, rng)};
        const auto plain = tape_gradients(in, [](net::Tape& t, const std::vector<net::NodeRef>& r) {
            return net::sum(t, net::softmax(t, r[0]));
        });
        const auto reversed =
            tape_gradients(in, [](net::Tape& t, const std::vector<net::NodeRef>& r) {
                const net::NodeRef g = net::grad_reverse(t, r[0], net::GrlConfig{0.6});
                return net::sum(t, net::softmax(t, g));
            });
        for (std::size_t j = 0; j < in[0].size(); ++j)
            CHECK(reversed[0][j] == -0.6 * plain[0][j]);
    }
}
