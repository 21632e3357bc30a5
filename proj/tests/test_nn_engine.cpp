#include <doctest.h>

#include "gantruth/nn/adam.hpp"
#include "gantruth/nn/loss_ops.hpp"
#include "gantruth/nn/modules.hpp"

using namespace gantruth;
using nn::Var;

TEST_CASE("elementwise forward and backward") {
    auto a = Var<double>::param({3}, {1.0, -2.0, 3.0});
    auto b = Var<double>::param({3}, {0.5, 4.0, -1.0});
    auto y = nn::sum(nn::mul(nn::add(a, b), b));  // sum((a+b)*b)
    CHECK(y.item() == doctest::Approx(1.5 * 0.5 + 2.0 * 4.0 + 2.0 * -1.0));
    nn::backward(y);
    // d/da_i = b_i
    CHECK(a.grad()[0] == doctest::Approx(0.5));
    CHECK(a.grad()[1] == doctest::Approx(4.0));
    // d/db_i = a_i + 2 b_i
    CHECK(b.grad()[0] == doctest::Approx(1.0 + 2 * 0.5));
}

TEST_CASE("conv2d matches a hand computation") {
    // 1x1x3x3 input, 1x1x2x2 kernel, stride 1, no pad
    auto x = Var<double>::param({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    auto w = Var<double>::param({1, 1, 2, 2}, {1, 0, 0, 1});
    auto b = Var<double>::param({1}, {0.5});
    auto y = nn::conv2d(x, w, b, 1, 0);
    REQUIRE(y.shape() == nn::Shape{1, 1, 2, 2});
    CHECK(y.value()[0] == doctest::Approx(1 + 5 + 0.5));
    CHECK(y.value()[3] == doctest::Approx(5 + 9 + 0.5));
    nn::backward(nn::sum(y));
    CHECK(b.grad()[0] == doctest::Approx(4.0));
    CHECK(w.grad()[0] == doctest::Approx(1 + 2 + 4 + 5));
}

TEST_CASE("conv_transpose2d inverts shape arithmetic") {
    Rng rng(7);
    nn::NamedParams<double> reg;
    auto x = Var<double>::param({2, 3, 8, 8}, std::vector<double>(2 * 3 * 64, 0.25));
    nn::ConvTranspose2d<double> up(rng, reg, "up", 3, 5, 4, 2, 1);
    auto y = up(x);
    CHECK(y.shape() == nn::Shape{2, 5, 16, 16});
    nn::backward(nn::mean(y));
    CHECK(up.w.grad().size() == up.w.numel());
}

TEST_CASE("instance norm standardizes each plane") {
    Rng rng(3);
    std::vector<double> data(2 * 2 * 4 * 4);
    for (auto& v : data) v = rng.uniform(-2, 5);
    auto x = Var<double>::param({2, 2, 4, 4}, data);
    nn::NamedParams<double> reg;
    nn::InstanceNorm2d<double> norm(reg, "n", 2);
    auto y = norm(x);
    for (int pc = 0; pc < 4; ++pc) {
        double mu = 0, var = 0;
        for (int i = 0; i < 16; ++i) mu += y.value()[size_t(pc) * 16 + i];
        mu /= 16;
        for (int i = 0; i < 16; ++i) {
            double d = y.value()[size_t(pc) * 16 + i] - mu;
            var += d * d;
        }
        CHECK(mu == doctest::Approx(0).epsilon(1e-6));
        CHECK(var / 16 == doctest::Approx(1).epsilon(1e-3));
    }
}

TEST_CASE("softmax cross entropy respects the ignore index") {
    auto logits = Var<double>::param({1, 3, 1, 2}, {0, 0, 0, 0, 0, 0});
    auto r = nn::softmax_cross_entropy(logits, {1, 255}, 255);
    CHECK(r.valid_count == 1);
    CHECK(r.loss.item() == doctest::Approx(std::log(3.0)));
    auto r2 = nn::softmax_cross_entropy(logits, {255, 255}, 255);
    CHECK(r2.valid_count == 0);
    CHECK(r2.loss.item() == 0.0);
}

TEST_CASE("adam rejects frozen parameters") {
    auto p = Var<float>::param({2}, {1.f, 2.f});
    p.freeze();
    CHECK_THROWS_AS(nn::Adam<float>({p}, {}), Error);
}

TEST_CASE("adam rejects aliased parameters") {
    auto p = Var<float>::param({2}, {1.f, 2.f});
    CHECK_THROWS_AS(nn::Adam<float>({p, p}, {}), Error);
}

TEST_CASE("no-grad mode cuts the tape") {
    auto p = Var<double>::param({2}, {1.0, 2.0});
    nn::Var<double> y;
    {
        nn::NoGradGuard ng;
        y = nn::scale(p, 3.0);
    }
    CHECK_FALSE(y.requires_grad());
}

TEST_CASE("roi_nearest gathers and scatters") {
    auto x = Var<double>::param({1, 1, 4, 4},
                                {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15});
    auto roi = nn::roi_nearest(x, 0, 1, 1, 3, 3, 2, 2);  // rows 1-2, cols 1-2
    CHECK(roi.value() == std::vector<double>{5, 6, 9, 10});
    nn::backward(nn::sum(roi));
    CHECK(x.grad()[5] == doctest::Approx(1.0));
    CHECK(x.grad()[0] == doctest::Approx(0.0));
}
