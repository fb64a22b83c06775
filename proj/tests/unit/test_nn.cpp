#include <doctest.h>

#include <cmath>
#include <random>

#include "breathsense/error.hpp"
#include "breathsense/nn/adam.hpp"
#include "breathsense/nn/layers.hpp"
#include "breathsense/nn/loss.hpp"
#include "breathsense/nn/model.hpp"
#include "breathsense/nn/weights.hpp"
#include "oracles.hpp"

using namespace breathsense;
using namespace breathsense::nn;
using oracle::random_tensor;

namespace {

constexpr double kGradTol = 1e-4;

void randomize(Param<double>& p, std::uint64_t seed, double scale = 0.5) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto& v : p.value) v = u(g);
}

}  // namespace

TEST_CASE("conv2d forward matches a direct zero-padded convolution") {
    Conv2D<double> conv(2, 3);
    randomize(conv.weight(), 1);
    randomize(conv.bias(), 2);
    const auto x = random_tensor(2, 2, 5, 4, 3);
    const auto y = conv.apply(x);
    REQUIRE(y.shape == std::array<std::size_t, 4>{2, 3, 5, 4});
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t o = 0; o < 3; ++o)
            for (std::size_t i = 0; i < 5; ++i)
                for (std::size_t j = 0; j < 4; ++j) {
                    double acc = conv.bias().value[o];
                    for (std::size_t c = 0; c < 2; ++c)
                        for (int di = -1; di <= 1; ++di)
                            for (int dj = -1; dj <= 1; ++dj) {
                                const long ii = long(i) + di, jj = long(j) + dj;
                                if (ii < 0 || jj < 0 || ii >= 5 || jj >= 4) continue;
                                acc += conv.weight().value[((o * 2 + c) * 3 + std::size_t(di + 1)) * 3 + std::size_t(dj + 1)] *
                                       x.at(b, c, std::size_t(ii), std::size_t(jj));
                            }
                    CHECK(y.at(b, o, i, j) == doctest::Approx(acc).epsilon(1e-12));
                }
}

TEST_CASE("layer gradients agree with central differences") {
    SUBCASE("conv2d") {
        Conv2D<double> conv(2, 3);
        randomize(conv.weight(), 5);
        randomize(conv.bias(), 6);
        CHECK(oracle::check_layer(conv, random_tensor(2, 2, 6, 5, 7), 8).rel_error < kGradTol);
    }
    SUBCASE("batchnorm2d train and eval") {
        BatchNorm2D<double> bn(3);
        randomize(bn.gamma(), 9, 1.5);
        randomize(bn.beta(), 10);
        CHECK(oracle::check_layer(bn, random_tensor(4, 3, 3, 3, 11), 12).rel_error < kGradTol);
        bn.running_mean().value = {0.1, -0.2, 0.3};
        bn.running_var().value = {0.5, 2.0, 1.0};
        // Eval mode: a frozen affine map.
        auto x = random_tensor(2, 3, 2, 2, 13);
        auto y0 = bn.forward(x, false);
        auto gx = bn.backward(y0);
        CHECK(gx.size() == x.size());
    }
    SUBCASE("maxpool2d") {
        MaxPool2D<double> pool;
        CHECK(oracle::check_layer(pool, random_tensor(2, 2, 6, 7, 14), 15).rel_error < kGradTol);
    }
    SUBCASE("dense") {
        Dense<double> dense(12, 5);
        randomize(dense.weight(), 16);
        randomize(dense.bias(), 17);
        CHECK(oracle::check_layer(dense, random_tensor(3, 12, 1, 1, 18), 19).rel_error < kGradTol);
    }
    SUBCASE("relu, sigmoid, flatten") {
        ReLU<double> relu;
        Sigmoid<double> sig;
        Flatten<double> flat;
        CHECK(oracle::check_layer(relu, random_tensor(2, 3, 4, 4, 20), 21).rel_error < kGradTol);
        CHECK(oracle::check_layer(sig, random_tensor(2, 3, 4, 4, 22, 4.0), 23).rel_error < kGradTol);
        CHECK(oracle::check_layer(flat, random_tensor(2, 3, 4, 4, 24), 25).rel_error < kGradTol);
    }
}

TEST_CASE("batchnorm normalizes per channel and tracks running statistics") {
    BatchNorm2D<double> bn(2);
    auto x = random_tensor(4, 2, 3, 3, 30, 3.0);
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += 5.0;
    const auto y = bn.forward(x, true);
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0, var = 0, xm = 0, xv = 0;
        const double n = 4 * 9;
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t p = 0; p < 9; ++p) {
                mean += y.at(b, c, p / 3, p % 3);
                xm += x.at(b, c, p / 3, p % 3);
            }
        mean /= n;
        xm /= n;
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t p = 0; p < 9; ++p) {
                var += std::pow(y.at(b, c, p / 3, p % 3) - mean, 2);
                xv += std::pow(x.at(b, c, p / 3, p % 3) - xm, 2);
            }
        CHECK(std::abs(mean) < 1e-12);
        CHECK(var / n == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(bn.running_mean().value[c] == doctest::Approx(0.1 * xm));
        CHECK(bn.running_var().value[c] == doctest::Approx(0.9 + 0.1 * xv / (n - 1)));
    }
    Tensor<double> single(1, 2, 1, 1, 1.0);
    CHECK_THROWS_WITH_AS(bn.forward(single, true), doctest::Contains("DegenerateBatch"), Error);
    CHECK_NOTHROW(bn.apply(single));
}

TEST_CASE("backward without a fresh forward is a stale cache") {
    Dense<double> d(3, 2);
    Tensor<double> x(1, 3, 1, 1, 0.5);
    Tensor<double> g(1, 2, 1, 1, 1.0);
    CHECK_THROWS_WITH_AS(d.backward(g), doctest::Contains("StaleCache"), Error);
    d.forward(x, true);
    CHECK_NOTHROW(d.backward(g));
    CHECK_THROWS_WITH_AS(d.backward(g), doctest::Contains("StaleCache"), Error);
    d.forward(x, true);
    CHECK_THROWS_WITH_AS(d.backward(Tensor<double>(1, 3, 1, 1)), doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("bce loss value, clamping and fused gradient") {
    const std::vector<double> p{0.9, 0.2, 0.0, 1.0};
    const std::vector<double> y{1.0, 0.0, 1.0, 1.0};
    const auto r = bce_loss<double>(p, y);
    const double c = 1e-7;
    const double expect = -(std::log(0.9) + std::log(0.8) + std::log(c) + std::log(1.0 - c)) / 4.0;
    CHECK(r.loss == doctest::Approx(expect));
    CHECK(r.grad_logits[0] == doctest::Approx(-0.1 / 4));
    CHECK(r.grad_logits[1] == doctest::Approx(0.2 / 4));
    CHECK_THROWS_AS(bce_loss<double>(std::vector<double>{0.5}, std::vector<double>{1, 0}), Error);
}

TEST_CASE("adam matches the textbook update") {
    Param<double> p({3}, true);
    p.value = {1.0, -2.0, 0.5};
    std::vector<NamedParam<double>> params{{"p", &p}};
    Adam<double> opt({0.01, 0.9, 0.999, 1e-8});
    std::vector<double> ref = p.value, m(3, 0), v(3, 0);
    for (int t = 1; t <= 5; ++t) {
        const std::vector<double> g{0.3 * t, -1.0, 1e-3 * t};
        p.grad = g;
        opt.step(params);
        for (int k = 0; k < 3; ++k) {
            m[k] = 0.9 * m[k] + 0.1 * g[k];
            v[k] = 0.999 * v[k] + 0.001 * g[k] * g[k];
            const double mh = m[k] / (1 - std::pow(0.9, t)), vh = v[k] / (1 - std::pow(0.999, t));
            ref[k] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
        }
    }
    for (int k = 0; k < 3; ++k) CHECK(p.value[k] == doctest::Approx(ref[k]).epsilon(1e-12));
    CHECK(opt.steps() == 5);
}

TEST_CASE("weight store round trip and corruption") {
    Model<float> m({1, 4, 4});
    m.add<Conv2D<float>>(1, 2);
    m.add<BatchNorm2D<float>>(2);
    m.add<ReLU<float>>();
    m.add<MaxPool2D<float>>();
    m.add<Flatten<float>>();
    m.add<Dense<float>>(8, 2);
    m.add<Sigmoid<float>>();
    Rng rng(1);
    for (auto& np : m.state())
        for (auto& v : np.param->value) v = static_cast<float>(uniform01(rng) + 0.1);

    const WeightStore store = save_weights(m);
    const auto bytes = encode_weight_store(store);
    CHECK(decode_weight_store(bytes) == store);
    CHECK(encode_weight_store(decode_weight_store(bytes)) == bytes);

    Model<float> m2({1, 4, 4});
    m2.add<Conv2D<float>>(1, 2);
    m2.add<BatchNorm2D<float>>(2);
    m2.add<ReLU<float>>();
    m2.add<MaxPool2D<float>>();
    m2.add<Flatten<float>>();
    m2.add<Dense<float>>(8, 2);
    m2.add<Sigmoid<float>>();
    load_weights(m2, store);
    Tensor<float> x(2, 1, 4, 4, 0.3f);
    CHECK(m2.predict(x).data == m.predict(x).data);

    auto bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_WITH_AS(decode_weight_store(bad), doctest::Contains("BadMagic"), Error);
    auto cut = bytes;
    cut.pop_back();
    CHECK_THROWS_WITH_AS(decode_weight_store(cut), doctest::Contains("TruncatedPayload"), Error);
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_WITH_AS(decode_weight_store(extra), doctest::Contains("TruncatedPayload"), Error);

    Model<float> other({1, 4, 4});
    other.add<Conv2D<float>>(1, 3);
    CHECK_THROWS_WITH_AS(load_weights(other, store), doctest::Contains("ShapeMismatchOnLoad"), Error);
    WeightStore missing = store;
    missing.entries.pop_back();
    CHECK_THROWS_WITH_AS(load_weights(m2, missing), doctest::Contains("ShapeMismatchOnLoad"), Error);
    WeightStore dup;
    dup.add({"a", {1}, {1.0f}});
    CHECK_THROWS_AS(dup.add({"a", {1}, {2.0f}}), Error);
}

TEST_CASE("model input shape is enforced and predict equals eval forward") {
    Model<double> m({1, 4, 4});
    m.add<Conv2D<double>>(1, 2);
    m.add<BatchNorm2D<double>>(2);
    m.add<Flatten<double>>();
    m.add<Dense<double>>(32, 1);
    m.add<Sigmoid<double>>();
    CHECK(m.output_shape() == Shape3{1, 1, 1});
    CHECK_THROWS_WITH_AS(m.predict(Tensor<double>(1, 1, 4, 5)), doctest::Contains("ShapeMismatch"), Error);
    const auto x = random_tensor(3, 1, 4, 4, 40);
    CHECK(m.predict(x).data == m.forward(x, false).data);
    CHECK(m.parameter_count() == 2 * 9 + 2 + 4 + 32 + 1);
}
